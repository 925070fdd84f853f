use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};
use crate::graph::{find_var, Assignment, Network, Value, VarId, Variable};

/// Instances over named variables; a row may leave variables unbound (missing cells).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    variables: Vec<Variable>,
    rows: Vec<Assignment>,
}

impl Dataset {
    pub fn new(variables: Vec<Variable>, rows: Vec<Assignment>) -> Result<Dataset> {
        for row in &rows {
            row.check(&variables)?;
        }
        Ok(Dataset { variables, rows })
    }

    /// Rows given as state indices, one column per variable.
    pub fn from_states(variables: Vec<Variable>, table: &[Vec<usize>]) -> Result<Dataset> {
        let rows = table
            .iter()
            .map(|r| r.iter().enumerate().fold(Assignment::empty(), |a, (v, &s)| a.with_state(VarId(v), s)))
            .collect();
        Dataset::new(variables, rows)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn rows(&self) -> &[Assignment] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// True when every row binds every variable.
    pub fn is_complete(&self) -> bool {
        self.rows.iter().all(|r| r.len() == self.variables.len())
    }

    pub fn column(&self, var: VarId) -> impl Iterator<Item = Option<Value>> + '_ {
        self.rows.iter().map(move |r| r.get(var))
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset { variables: self.variables.clone(), rows: rows.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    pub fn push(&mut self, row: Assignment) -> Result<()> {
        row.check(&self.variables)?;
        self.rows.push(row);
        Ok(())
    }

    /// Rows re-indexed to the network's variables (matched by name). Borrows
    /// when the variable lists already agree.
    pub fn rows_for(&self, net: &Network) -> Result<Cow<'_, [Assignment]>> {
        if self.variables == net.variables() {
            return Ok(Cow::Borrowed(&self.rows));
        }
        let mut map = Vec::with_capacity(self.variables.len());
        for v in &self.variables {
            let id = find_var(net.variables(), v.name())?;
            if net.variable(id).kind() != v.kind() {
                return Err(SpnError::InvalidVariable {
                    name: v.name().to_string(),
                    detail: "declared differently in the data and the model".into(),
                });
            }
            map.push(id);
        }
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().fold(Assignment::empty(), |a, (v, val)| a.with(map[v.0], val)))
            .collect();
        Ok(Cow::Owned(rows))
    }
}
