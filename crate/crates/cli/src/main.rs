//! `spn`: command-line front end for the spn library.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spn::augment::{augment, interpret_sum_node};
use spn::graph::validate;
use spn::inference::{conditional, max_kbt, mpe_best_tree, sample};
use spn::io::{brute_force_table, load_dataset, load_model, load_model_unchecked, render_dataset, save_model, save_record};
use spn::learning::{fit, log_likelihood_with, Dataset, FitConfig, FitMethod};
use spn::structure::{learn_spn, LearnConfig};
use spn::{evaluate, Assignment, Network, NodeId, SpnError};

#[derive(Parser)]
#[command(name = "spn", version, about = "Sum-product networks: inference, learning and augmentation")]
struct Cli {
    /// Print log values in base 10 (computation stays in natural log).
    #[arg(long, global = true)]
    log10: bool,
    /// Worker threads for per-row statistics (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural properties of a model.
    Validate { model: PathBuf },
    /// Probability of a query, optionally conditioned on evidence.
    Eval {
        model: PathBuf,
        #[arg(long, default_value = "")]
        query: String,
        #[arg(long)]
        evidence: Option<String>,
    },
    /// Most probable explanation of the evidence (best induced tree).
    Mpe {
        model: PathBuf,
        #[arg(long, default_value = "")]
        evidence: String,
    },
    /// Most probable complete configuration by k-best-trees search.
    Max {
        model: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Fit the parameters of a model to a dataset.
    LearnParams(LearnParams),
    /// Learn a structure (and parameters) from a dataset with LearnSPN.
    LearnStructure(LearnStructure),
    /// Add latent variables until every sum node is selective.
    Augment {
        model: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Where to write the JSON record of the inserted nodes.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Draw rows by ancestral sampling, written as CSV.
    Sample {
        model: PathBuf,
        #[arg(short, default_value_t = 10)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Read a sum node as a conditional distribution over the variable it represents.
    Interpret {
        model: PathBuf,
        #[arg(long)]
        node: usize,
    },
    /// Joint probability of every complete configuration.
    Table {
        model: PathBuf,
        #[arg(long, default_value_t = 1 << 16)]
        cap: usize,
    },
}

#[derive(Args)]
struct LearnParams {
    model: PathBuf,
    data: PathBuf,
    #[arg(long, default_value = "em")]
    method: FitMethod,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Rows per gradient step (default: full batch).
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Keep leaf distributions fixed during EM.
    #[arg(long)]
    fixed_leaves: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct LearnStructure {
    data: PathBuf,
    /// Minimum slice size before factorizing.
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Significance level of the independence test.
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long)]
    binary_splits: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: PathBuf,
}

enum Failure {
    Usage(String),
    Spn(SpnError),
}

impl From<SpnError> for Failure {
    fn from(e: SpnError) -> Self {
        match e {
            SpnError::InvalidConfig(msg) => Failure::Usage(msg),
            e => Failure::Spn(e),
        }
    }
}

type Outcome = Result<String, Failure>;

struct Ctx {
    log10: bool,
    threads: usize,
}

impl Ctx {
    fn log(&self, ln: f64) -> String {
        if self.log10 {
            format!("log10 {}", ln / std::f64::consts::LN_10)
        } else {
            format!("log {ln}")
        }
    }
}

fn seed_or_default(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        eprintln!("note: no --seed given, using seed 0");
        0
    })
}

fn shown(net: &Network, x: &Assignment) -> String {
    if x.is_empty() {
        "-".into()
    } else {
        net.display_assignment(x)
    }
}

fn assignment(net: &Network, text: &str) -> Result<Assignment, Failure> {
    Ok(net.parse_assignment(text)?)
}

fn run(cli: Cli) -> Outcome {
    let ctx = Ctx { log10: cli.log10, threads: cli.threads };
    let mut out = String::new();
    match cli.command {
        Command::Validate { model } => {
            let net = load_model_unchecked(&model)?;
            let report = validate(&net);
            write!(out, "{report}").unwrap();
            if !report.is_valid() {
                print!("{out}");
                return Err(Failure::Spn(SpnError::InvalidModel(format!("{} is not a valid network", model.display()))));
            }
        }
        Command::Eval { model, query, evidence } => {
            let net = load_model(model)?;
            let q = assignment(&net, &query)?;
            let p = match evidence {
                Some(e) => conditional(&net, &q, &assignment(&net, &e)?)?,
                None => evaluate(&net, &q)?,
            };
            writeln!(out, "probability {}", p.value()).unwrap();
            writeln!(out, "{}", ctx.log(p.log)).unwrap();
        }
        Command::Mpe { model, evidence } => {
            let net = load_model(model)?;
            let e = assignment(&net, &evidence)?;
            let r = mpe_best_tree(&net, &e)?;
            writeln!(out, "assignment {}", shown(&net, &r.assignment)).unwrap();
            writeln!(out, "value {}", r.value()).unwrap();
            writeln!(out, "{}", ctx.log(r.log_value)).unwrap();
            writeln!(out, "exact {}", r.exact).unwrap();
        }
        Command::Max { model, k } => {
            let net = load_model(model)?;
            let r = max_kbt(&net, k)?;
            writeln!(out, "assignment {}", shown(&net, &r.assignment)).unwrap();
            writeln!(out, "value {}", r.value()).unwrap();
            writeln!(out, "{}", ctx.log(r.log_value)).unwrap();
            writeln!(out, "candidates {}", r.candidates).unwrap();
        }
        Command::LearnParams(a) => {
            let net = load_model(&a.model)?;
            let data = load_dataset(&a.data, Some(net.variables()))?;
            let needs_seed = a.method == FitMethod::Gd && a.batch.is_some_and(|b| b < data.len());
            let seed = if needs_seed { seed_or_default(a.seed) } else { a.seed.unwrap_or(0) };
            let cfg = FitConfig {
                method: a.method,
                learning_rate: a.lr,
                epochs: a.epochs,
                batch_size: a.batch,
                alpha: a.alpha,
                tolerance: a.tol,
                seed,
                update_leaves: !a.fixed_leaves,
                threads: ctx.threads,
            };
            let outcome = fit(&net, &data, &cfg)?;
            for rec in &outcome.trace {
                writeln!(out, "{rec}").unwrap();
            }
            save_model(&outcome.network, &a.output)?;
        }
        Command::LearnStructure(a) => {
            let seed = seed_or_default(a.seed);
            let data = load_dataset(&a.data, None)?;
            let cfg = LearnConfig {
                min_instances: a.m,
                alpha: a.alpha,
                p_value: a.p,
                max_clusters: a.clusters,
                binary_splits: a.binary_splits,
                seed,
            };
            let net = learn_spn(&data, &cfg)?;
            let ll = log_likelihood_with(&net, &data, ctx.threads)?;
            writeln!(out, "nodes {}", net.len()).unwrap();
            writeln!(out, "edges {}", net.edge_count()).unwrap();
            writeln!(out, "train_{}", ctx.log(ll)).unwrap();
            save_model(&net, &a.output)?;
        }
        Command::Augment { model, output, record } => {
            let net = load_model(model)?;
            let (aug, rec) = augment(&net)?;
            for a in &rec.augmented {
                let twin = a.twin.map_or_else(|| "-".to_string(), |t| t.0.to_string());
                writeln!(out, "augmented {} latent {} states {} twin {twin}", a.node.0, a.name, a.states.len()).unwrap();
            }
            writeln!(out, "inserted {}", rec.inserted.len()).unwrap();
            save_model(&aug, &output)?;
            if let Some(path) = record {
                save_record(&rec, path)?;
            }
        }
        Command::Sample { model, n, seed, output } => {
            let seed = seed_or_default(seed);
            let net = load_model(model)?;
            let rows = sample(&net, seed, n)?;
            let text = render_dataset(&Dataset::new(net.variables().to_vec(), rows)?)?;
            match output {
                Some(path) => std::fs::write(path, text).map_err(SpnError::from)?,
                None => out.push_str(&text),
            }
        }
        Command::Interpret { model, node } => {
            let net = load_model(model)?;
            let i = interpret_sum_node(&net, NodeId(node))?;
            let var = net.variable(i.var);
            writeln!(out, "node {node} represents {}", var.name()).unwrap();
            writeln!(out, "context {}", shown(&net, &i.context)).unwrap();
            for (j, p) in i.priors.iter().enumerate() {
                let label = var.state_label(j).unwrap_or("?");
                let branch = i.conditionals[j].as_ref().map_or_else(
                    || "-".to_string(),
                    |h| format!("{} factors {:?}", h.child.0, h.factors.iter().map(|f| f.0).collect::<Vec<_>>()),
                );
                writeln!(out, "prior {}={label} {p} child {branch}", var.name()).unwrap();
            }
        }
        Command::Table { model, cap } => {
            let net = load_model(model)?;
            let t = brute_force_table(&net, cap)?;
            for (v, p) in &t.rows {
                writeln!(out, "{} {p}", net.display_assignment(v)).unwrap();
            }
            writeln!(out, "total {}", t.total()).unwrap();
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Spn(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
