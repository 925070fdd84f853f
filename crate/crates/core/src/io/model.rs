//! Line-oriented model text:
//!
//! ```text
//! spn 1
//! var A finite +a ¬a
//! var X continuous
//! node 0 sum 1:3.0000000000000000e-1 2:7.0000000000000000e-1
//! node 1 product 3 5
//! node 3 indicator A +a
//! node 4 categorical A 1.0000000000000001e-1 9.0000000000000002e-1
//! node 5 gaussian X 0.0000000000000000e0 1.0000000000000000e0
//! root 0
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Reals are written
//! with 17 significant digits so that reading back is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SpnError};
use crate::graph::{find_var, validate, LeafDistribution, Network, Node, NodeId, VarKind, Variable};

pub const FORMAT_VERSION: u32 = 1;

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parsed model text, before any structural check.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDocument {
    pub version: u32,
    pub variables: Vec<Variable>,
    pub nodes: Vec<Node>,
    pub root: NodeId,
}

impl ModelDocument {
    pub fn from_network(net: &Network) -> Self {
        ModelDocument {
            version: FORMAT_VERSION,
            variables: net.variables().to_vec(),
            nodes: net.nodes().to_vec(),
            root: net.root(),
        }
    }

    pub fn into_network(self) -> Result<Network> {
        Network::new(self.variables, self.nodes, self.root)
    }

    /// Canonical text: variables in order, nodes by ascending id.
    pub fn render(&self) -> String {
        let mut out = format!("spn {}\n", self.version);
        for v in &self.variables {
            match v.kind() {
                VarKind::Finite(states) => writeln!(out, "var {} finite {}", v.name(), states.join(" ")),
                VarKind::Continuous => writeln!(out, "var {} continuous", v.name()),
            }
            .expect("write to string");
        }
        let name = |var: crate::graph::VarId| self.variables.get(var.0).map_or("?", |v| v.name());
        for (i, node) in self.nodes.iter().enumerate() {
            let body = match node {
                Node::Sum { children, weights } => {
                    let parts: Vec<String> =
                        children.iter().zip(weights).map(|(c, w)| format!("{}:{}", c.0, format_real(*w))).collect();
                    format!("sum {}", parts.join(" "))
                }
                Node::Product { children } => {
                    let parts: Vec<String> = children.iter().map(|c| c.0.to_string()).collect();
                    format!("product {}", parts.join(" "))
                }
                Node::Leaf(LeafDistribution::Indicator { var, state }) => {
                    let label = self.variables.get(var.0).and_then(|v| v.state_label(*state)).unwrap_or("?");
                    format!("indicator {} {label}", name(*var))
                }
                Node::Leaf(LeafDistribution::Categorical { var, probs }) => {
                    let parts: Vec<String> = probs.iter().map(|p| format_real(*p)).collect();
                    format!("categorical {} {}", name(*var), parts.join(" "))
                }
                Node::Leaf(LeafDistribution::Gaussian { var, mean, variance }) => {
                    format!("gaussian {} {} {}", name(*var), format_real(*mean), format_real(*variance))
                }
            };
            writeln!(out, "node {i} {body}").expect("write to string");
        }
        writeln!(out, "root {}", self.root.0).expect("write to string");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::default().run(text)
    }
}

// A whitespace-separated token with its 1-based column.
struct Tok<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    let mut col = 0;
    let mut start_col = 0;
    for (i, ch) in line.char_indices() {
        col += 1;
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok { text: &line[s..i], column: start_col });
            }
        } else if start.is_none() {
            start = Some(i);
            start_col = col;
        }
    }
    if let Some(s) = start {
        out.push(Tok { text: &line[s..], column: start_col });
    }
    out
}

#[derive(Default)]
struct Parser {
    version: Option<u32>,
    variables: Vec<Variable>,
    nodes: Vec<Option<Node>>,
    root: Option<NodeId>,
    line: usize,
}

impl Parser {
    fn err(&self, column: usize, detail: impl Into<String>) -> SpnError {
        SpnError::Parse { line: self.line, column, detail: detail.into() }
    }

    fn int(&self, t: &Tok<'_>) -> Result<usize> {
        t.text.parse().map_err(|_| self.err(t.column, format!("expected a non-negative integer, found `{}`", t.text)))
    }

    fn real(&self, t: &Tok<'_>, text: &str, column: usize) -> Result<f64> {
        let _ = t;
        let x: f64 = text.parse().map_err(|_| self.err(column, format!("expected a number, found `{text}`")))?;
        if !x.is_finite() {
            return Err(self.err(column, format!("non-finite number `{text}`")));
        }
        Ok(x)
    }

    fn var(&self, t: &Tok<'_>) -> Result<crate::graph::VarId> {
        find_var(&self.variables, t.text).map_err(|_| self.err(t.column, format!("undeclared variable `{}`", t.text)))
    }

    fn run(mut self, text: &str) -> Result<ModelDocument> {
        for (i, raw) in text.lines().enumerate() {
            self.line = i + 1;
            let line = raw.trim_end();
            if line.trim_start().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let toks = tokens(line);
            let head = &toks[0];
            if self.version.is_none() && head.text != "spn" {
                return Err(self.err(head.column, "expected the header `spn <version>`"));
            }
            match head.text {
                "spn" => {
                    if self.version.is_some() {
                        return Err(self.err(head.column, "duplicate header"));
                    }
                    let v = toks.get(1).ok_or_else(|| self.err(line.len() + 1, "missing format version"))?;
                    let v = self.int(v)? as u32;
                    if v != FORMAT_VERSION {
                        return Err(self.err(toks[1].column, format!("unsupported format version {v}")));
                    }
                    self.version = Some(v);
                }
                "var" => self.var_line(&toks, line)?,
                "node" => self.node_line(&toks, line)?,
                "root" => {
                    let t = toks.get(1).ok_or_else(|| self.err(line.len() + 1, "missing root id"))?;
                    if self.root.is_some() {
                        return Err(self.err(head.column, "root declared twice"));
                    }
                    self.root = Some(NodeId(self.int(t)?));
                }
                other => return Err(self.err(head.column, format!("unknown directive `{other}`"))),
            }
        }
        self.line += 1;
        let version = self.version.ok_or_else(|| self.err(1, "empty model"))?;
        let root = self.root.ok_or_else(|| self.err(1, "missing `root` line"))?;
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.into_iter().enumerate() {
            nodes.push(n.ok_or_else(|| SpnError::InvalidModel(format!("node {i} is missing (ids must be dense)")))?);
        }
        Ok(ModelDocument { version, variables: self.variables, nodes, root })
    }

    fn var_line(&mut self, toks: &[Tok<'_>], line: &str) -> Result<()> {
        if !self.nodes.is_empty() {
            return Err(self.err(toks[0].column, "variables must be declared before nodes"));
        }
        let name = toks.get(1).ok_or_else(|| self.err(line.len() + 1, "missing variable name"))?;
        let kind = toks.get(2).ok_or_else(|| self.err(line.len() + 1, "missing variable kind"))?;
        let var = match kind.text {
            "finite" => Variable::finite(name.text, toks[3..].iter().map(|t| t.text)),
            "continuous" if toks.len() == 3 => Variable::continuous(name.text),
            "continuous" => return Err(self.err(toks[3].column, "continuous variables take no states")),
            other => return Err(self.err(kind.column, format!("unknown variable kind `{other}`"))),
        }
        .map_err(|e| self.err(name.column, e.to_string()))?;
        if self.variables.iter().any(|v| v.name() == var.name()) {
            return Err(self.err(name.column, format!("variable `{}` declared twice", var.name())));
        }
        self.variables.push(var);
        Ok(())
    }

    fn node_line(&mut self, toks: &[Tok<'_>], line: &str) -> Result<()> {
        let id_tok = toks.get(1).ok_or_else(|| self.err(line.len() + 1, "missing node id"))?;
        let id = self.int(id_tok)?;
        let kind = toks.get(2).ok_or_else(|| self.err(line.len() + 1, "missing node kind"))?;
        let args = &toks[3..];
        let node = match kind.text {
            "sum" => {
                let mut children = Vec::new();
                let mut weights = Vec::new();
                for t in args {
                    let (c, w) = t
                        .text
                        .split_once(':')
                        .ok_or_else(|| self.err(t.column, format!("expected `child:weight`, found `{}`", t.text)))?;
                    let c = c.parse().map_err(|_| self.err(t.column, format!("bad child id `{c}`")))?;
                    children.push(NodeId(c));
                    weights.push(self.real(t, w, t.column + c.to_string().len() + 1)?);
                }
                Node::Sum { children, weights }
            }
            "product" => Node::Product { children: args.iter().map(|t| self.int(t).map(NodeId)).collect::<Result<_>>()? },
            "indicator" | "categorical" | "gaussian" => {
                let vt = args.first().ok_or_else(|| self.err(line.len() + 1, "missing variable"))?;
                let var = self.var(vt)?;
                let variable = &self.variables[var.0];
                let rest = &args[1..];
                let leaf = match kind.text {
                    "indicator" => {
                        let [s] = rest else {
                            return Err(self.err(vt.column, "an indicator takes exactly one state"));
                        };
                        let state = variable.state_index(s.text).ok_or_else(|| {
                            self.err(s.column, format!("unknown state `{}` of `{}`", s.text, variable.name()))
                        })?;
                        LeafDistribution::Indicator { var, state }
                    }
                    "categorical" => LeafDistribution::Categorical {
                        var,
                        probs: rest.iter().map(|t| self.real(t, t.text, t.column)).collect::<Result<_>>()?,
                    },
                    _ => {
                        let [m, v] = rest else {
                            return Err(self.err(vt.column, "a gaussian takes a mean and a variance"));
                        };
                        LeafDistribution::Gaussian {
                            var,
                            mean: self.real(m, m.text, m.column)?,
                            variance: self.real(v, v.text, v.column)?,
                        }
                    }
                };
                if let Some(p) = leaf.problems(&self.variables, crate::graph::WEIGHT_TOLERANCE).into_iter().next() {
                    return Err(self.err(kind.column, format!("node {id}: {p}")));
                }
                Node::Leaf(leaf)
            }
            other => return Err(self.err(kind.column, format!("unknown node kind `{other}`"))),
        };
        if self.nodes.len() <= id {
            self.nodes.resize(id + 1, None);
        }
        if self.nodes[id].is_some() {
            return Err(self.err(id_tok.column, format!("node {id} defined twice")));
        }
        self.nodes[id] = Some(node);
        Ok(())
    }
}

pub fn render_model(net: &Network) -> String {
    ModelDocument::from_network(net).render()
}

/// Parses model text into a network without checking the SPN properties.
pub fn parse_model(text: &str) -> Result<Network> {
    ModelDocument::parse(text)?.into_network()
}

/// Parses model text and requires a valid SPN (rooted, acyclic, normalized,
/// complete, decomposable).
pub fn parse_valid_model(text: &str) -> Result<Network> {
    let net = parse_model(text)?;
    let report = validate(&net);
    if !report.is_valid() {
        let first = report
            .violations
            .iter()
            .filter(|v| v.property != crate::graph::Property::Alternating && v.property != crate::graph::Property::SelectiveStructural)
            .map(|v| match v.node {
                Some(n) => format!("node {}: {} ({})", n.0, v.detail, v.property),
                None => format!("{} ({})", v.detail, v.property),
            })
            .collect::<Vec<_>>()
            .join("; ");
        return Err(SpnError::InvalidModel(first));
    }
    Ok(net)
}

pub fn save_model(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_model(net))?;
    Ok(())
}

/// Reads and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<Network> {
    parse_valid_model(&std::fs::read_to_string(path)?)
}

/// Reads a model file without requiring validity.
pub fn load_model_unchecked(path: impl AsRef<Path>) -> Result<Network> {
    parse_model(&std::fs::read_to_string(path)?)
}
