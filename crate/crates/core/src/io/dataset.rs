//! Delimited datasets. The first non-comment row names the variables; cells are
//! state labels, decimal numbers, or empty (missing). An optional schema block
//! of `# var NAME finite s1 s2 ...` / `# var NAME continuous` lines may precede
//! the header; without one, column types are inferred.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Result, SpnError};
use crate::graph::{Assignment, VarId, VarKind, Variable};
use crate::learning::Dataset;

fn parse_err(line: usize, column: usize, detail: impl Into<String>) -> SpnError {
    SpnError::Parse { line, column, detail: detail.into() }
}

fn schema_line(line_no: usize, text: &str) -> Result<Option<Variable>> {
    let body = text.trim_start_matches('#').trim();
    let toks: Vec<&str> = body.split_whitespace().collect();
    if toks.first() != Some(&"var") {
        return Ok(None);
    }
    let var = match toks.get(2) {
        Some(&"finite") => Variable::finite(toks[1], toks[3..].iter().copied()),
        Some(&"continuous") if toks.len() == 3 => Variable::continuous(toks[1]),
        _ => return Err(parse_err(line_no, 1, format!("malformed schema line `{text}`"))),
    }
    .map_err(|e| parse_err(line_no, 1, e.to_string()))?;
    Ok(Some(var))
}

/// Infers a column type: numbers with any fractional value make a continuous
/// variable; anything else is finite with states in sorted label order.
fn infer_variable(name: &str, cells: &[&str]) -> Result<Variable> {
    let present: Vec<&str> = cells.iter().copied().filter(|c| !c.is_empty()).collect();
    let numeric: Option<Vec<f64>> = present.iter().map(|c| c.parse::<f64>().ok().filter(|x| x.is_finite())).collect();
    if let Some(xs) = &numeric {
        if xs.iter().any(|x| x.fract() != 0.0) {
            return Variable::continuous(name);
        }
    }
    let labels: BTreeSet<&str> = present.into_iter().collect();
    if labels.len() < 2 {
        return Err(SpnError::InvalidVariable {
            name: name.to_string(),
            detail: format!("column has {} distinct value(s); cannot infer a type (add a schema line)", labels.len()),
        });
    }
    Variable::finite(name, labels)
}

/// Parses dataset text. With `schema`, header names are looked up there; a
/// schema block in the text takes the next precedence; otherwise types are
/// inferred.
pub fn parse_dataset(text: &str, schema: Option<&[Variable]>) -> Result<Dataset> {
    let mut declared = Vec::new();
    let mut body_start = 0;
    let mut header_line = 0;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('#') {
            if let Some(v) = schema_line(i + 1, t)? {
                declared.push(v);
            }
            continue;
        }
        body_start = text.lines().take(i).map(|l| l.len() + 1).sum::<usize>().min(text.len());
        header_line = i + 1;
        break;
    }
    if header_line == 0 {
        return Err(SpnError::EmptyDataset);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(&text.as_bytes()[body_start..]);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(header_line, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize + header_line - 1);
            parse_err(line, 1, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize + header_line - 1);
        if rec.len() != header.len() {
            return Err(parse_err(line, rec.len().min(header.len()) + 1, format!(
                "ragged row: {} cells, header has {}",
                rec.len(),
                header.len()
            )));
        }
        records.push((line, rec));
    }

    let source: Option<&[Variable]> = schema.or((!declared.is_empty()).then_some(declared.as_slice()));
    let variables: Vec<Variable> = match source {
        Some(vars) => header
            .iter()
            .enumerate()
            .map(|(c, name)| {
                vars.iter()
                    .find(|v| v.name() == name)
                    .cloned()
                    .ok_or_else(|| parse_err(header_line, c + 1, format!("column `{name}` has no declared variable")))
            })
            .collect::<Result<_>>()?,
        None => header
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let cells: Vec<&str> = records.iter().map(|(_, r)| &r[c]).collect();
                infer_variable(name, &cells)
            })
            .collect::<Result<_>>()?,
    };
    for (c, name) in header.iter().enumerate() {
        if header[..c].contains(name) {
            return Err(parse_err(header_line, c + 1, format!("duplicate column `{name}`")));
        }
    }

    let mut rows = Vec::with_capacity(records.len());
    for (line, rec) in &records {
        let mut row = Assignment::empty();
        for (c, cell) in rec.iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let value = variables[c].parse_value(cell).map_err(|e| parse_err(*line, c + 1, e.to_string()))?;
            row.set(VarId(c), value);
        }
        rows.push(row);
    }
    Dataset::new(variables, rows)
}

pub fn load_dataset(path: impl AsRef<Path>, schema: Option<&[Variable]>) -> Result<Dataset> {
    parse_dataset(&std::fs::read_to_string(path)?, schema)
}

/// Renders a dataset with its schema block so that reading it back restores
/// the exact variables.
pub fn render_dataset(data: &Dataset) -> Result<String> {
    let mut out = String::new();
    for v in data.variables() {
        match v.kind() {
            VarKind::Finite(states) => out.push_str(&format!("# var {} finite {}\n", v.name(), states.join(" "))),
            VarKind::Continuous => out.push_str(&format!("# var {} continuous\n", v.name())),
        }
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let io = |e: csv::Error| SpnError::Io(e.to_string());
    w.write_record(data.variables().iter().map(Variable::name)).map_err(io)?;
    for row in data.rows() {
        let cells: Vec<String> = data
            .variables()
            .iter()
            .enumerate()
            .map(|(i, v)| row.get(VarId(i)).map_or_else(String::new, |x| match x {
                crate::graph::Value::Real(r) => format!("{r:?}"),
                s => v.format_value(s),
            }))
            .collect();
        w.write_record(&cells).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| SpnError::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| SpnError::Io(e.to_string()))?);
    Ok(out)
}

pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_dataset(data)?)?;
    Ok(())
}
