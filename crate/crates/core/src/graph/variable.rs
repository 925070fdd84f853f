//! Variables, values and (partial) configurations.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpnError};

/// Index of a variable in a network's (or dataset's) variable list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum VarKind {
    /// Ordered list of state labels.
    Finite(Vec<String>),
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    name: String,
    kind: VarKind,
}

fn check_label(owner: &str, label: &str) -> Result<()> {
    if label.is_empty() || label.chars().any(|c| c.is_whitespace() || c == ',' || c == '=') {
        return Err(SpnError::InvalidVariable {
            name: owner.to_string(),
            detail: format!("label `{label}` must be non-empty without whitespace, `,` or `=`"),
        });
    }
    Ok(())
}

impl Variable {
    pub fn finite<I, S>(name: impl Into<String>, states: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let name = name.into();
        check_label(&name, &name)?;
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if states.len() < 2 {
            return Err(SpnError::InvalidVariable {
                name,
                detail: "a finite-state variable needs at least 2 states".into(),
            });
        }
        let mut seen = HashSet::new();
        for s in &states {
            check_label(&name, s)?;
            if !seen.insert(s.as_str()) {
                return Err(SpnError::InvalidVariable {
                    name: name.clone(),
                    detail: format!("duplicate state `{s}`"),
                });
            }
        }
        Ok(Variable { name, kind: VarKind::Finite(states) })
    }

    pub fn continuous(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        check_label(&name, &name)?;
        Ok(Variable { name, kind: VarKind::Continuous })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &VarKind {
        &self.kind
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, VarKind::Finite(_))
    }

    pub fn states(&self) -> Option<&[String]> {
        match &self.kind {
            VarKind::Finite(s) => Some(s),
            VarKind::Continuous => None,
        }
    }

    pub fn num_states(&self) -> Option<usize> {
        self.states().map(<[String]>::len)
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states()?.iter().position(|s| s == label)
    }

    pub fn state_label(&self, index: usize) -> Option<&str> {
        self.states()?.get(index).map(String::as_str)
    }

    /// Checks that `value` is legal for this variable.
    pub fn check_value(&self, value: Value) -> Result<()> {
        match (&self.kind, value) {
            (VarKind::Finite(states), Value::State(i)) if i < states.len() => Ok(()),
            (VarKind::Finite(states), Value::State(i)) => Err(SpnError::InvalidValue {
                variable: self.name.clone(),
                detail: format!("state index {i} out of range (0..{})", states.len()),
            }),
            (VarKind::Finite(_), Value::Real(_)) => Err(SpnError::InvalidValue {
                variable: self.name.clone(),
                detail: "a real number was given for a finite-state variable".into(),
            }),
            (VarKind::Continuous, Value::Real(x)) if x.is_finite() => Ok(()),
            (VarKind::Continuous, Value::Real(x)) => Err(SpnError::InvalidValue {
                variable: self.name.clone(),
                detail: format!("non-finite value {x}"),
            }),
            (VarKind::Continuous, Value::State(_)) => Err(SpnError::InvalidValue {
                variable: self.name.clone(),
                detail: "a state index was given for a continuous variable".into(),
            }),
        }
    }

    /// Parses a textual cell (state label or decimal number).
    pub fn parse_value(&self, text: &str) -> Result<Value> {
        match &self.kind {
            VarKind::Finite(_) => self.state_index(text).map(Value::State).ok_or_else(|| {
                SpnError::UnknownState { variable: self.name.clone(), state: text.to_string() }
            }),
            VarKind::Continuous => {
                let x: f64 = text.trim().parse().map_err(|_| SpnError::InvalidValue {
                    variable: self.name.clone(),
                    detail: format!("`{text}` is not a number"),
                })?;
                self.check_value(Value::Real(x))?;
                Ok(Value::Real(x))
            }
        }
    }

    pub fn format_value(&self, value: Value) -> String {
        match value {
            Value::State(i) => self.state_label(i).map_or_else(|| format!("#{i}"), str::to_string),
            Value::Real(x) => format!("{x}"),
        }
    }
}

/// Value of a single variable: a state index or a real number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value {
    State(usize),
    Real(f64),
}

impl Value {
    pub fn state(self) -> Option<usize> {
        match self {
            Value::State(i) => Some(i),
            Value::Real(_) => None,
        }
    }

    pub fn real(self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(x),
            Value::State(_) => None,
        }
    }
}

/// A partial configuration: each variable is bound at most once. The empty
/// assignment is the configuration of the empty set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    // indexed by VarId, trailing unbound entries trimmed
    values: Vec<Option<Value>>,
}

impl Assignment {
    pub fn empty() -> Self {
        Assignment::default()
    }

    pub fn get(&self, var: VarId) -> Option<Value> {
        self.values.get(var.0).copied().flatten()
    }

    pub fn is_bound(&self, var: VarId) -> bool {
        self.get(var).is_some()
    }

    pub fn set(&mut self, var: VarId, value: Value) {
        if self.values.len() <= var.0 {
            self.values.resize(var.0 + 1, None);
        }
        self.values[var.0] = Some(value);
    }

    pub fn unset(&mut self, var: VarId) {
        if let Some(slot) = self.values.get_mut(var.0) {
            *slot = None;
        }
        while matches!(self.values.last(), Some(None)) {
            self.values.pop();
        }
    }

    pub fn with(mut self, var: VarId, value: Value) -> Self {
        self.set(var, value);
        self
    }

    pub fn with_state(self, var: VarId, state: usize) -> Self {
        self.with(var, Value::State(state))
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, Value)> + '_ {
        self.values.iter().enumerate().filter_map(|(i, v)| v.map(|v| (VarId(i), v)))
    }

    pub fn bound_vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.iter().map(|(v, _)| v)
    }

    /// Number of bound variables.
    pub fn len(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn overlap(&self, other: &Assignment) -> Option<VarId> {
        self.bound_vars().find(|&v| other.is_bound(v))
    }

    /// Composition `xe` of two assignments over disjoint variables.
    pub fn compose(&self, other: &Assignment) -> Option<Assignment> {
        if self.overlap(other).is_some() {
            return None;
        }
        let mut out = self.clone();
        for (v, val) in other.iter() {
            out.set(v, val);
        }
        Some(out)
    }

    /// Projection onto the given variables.
    pub fn project(&self, vars: impl IntoIterator<Item = VarId>) -> Assignment {
        let mut out = Assignment::empty();
        for v in vars {
            if let Some(val) = self.get(v) {
                out.set(v, val);
            }
        }
        out
    }

    /// True when every bound value agrees with `other` on the variables both bind.
    pub fn compatible(&self, other: &Assignment) -> bool {
        self.iter().all(|(v, val)| other.get(v).is_none_or(|o| o == val))
    }

    /// Checks every binding against a variable list.
    pub fn check(&self, vars: &[Variable]) -> Result<()> {
        for (v, val) in self.iter() {
            let var = vars.get(v.0).ok_or_else(|| SpnError::UnknownVariable(v.to_string()))?;
            var.check_value(val)?;
        }
        Ok(())
    }

    /// Builds an assignment from `(name, label)` pairs.
    pub fn from_labels(vars: &[Variable], pairs: &[(&str, &str)]) -> Result<Assignment> {
        let mut out = Assignment::empty();
        for (name, label) in pairs {
            let id = find_var(vars, name)?;
            if out.is_bound(id) {
                return Err(SpnError::DuplicateBinding(name.to_string()));
            }
            out.set(id, vars[id.0].parse_value(label)?);
        }
        Ok(out)
    }

    /// Parses the command-line syntax `VAR=state,VAR=state`. Empty text is the
    /// empty assignment.
    pub fn parse(vars: &[Variable], text: &str) -> Result<Assignment> {
        let mut pairs = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, label) = part
                .split_once('=')
                .ok_or_else(|| SpnError::MalformedAssignment(part.to_string()))?;
            pairs.push((name.trim(), label.trim()));
        }
        Assignment::from_labels(vars, &pairs)
    }

    pub fn display(&self, vars: &[Variable]) -> String {
        self.iter()
            .map(|(v, val)| match vars.get(v.0) {
                Some(var) => format!("{}={}", var.name(), var.format_value(val)),
                None => format!("{v}={val:?}"),
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn find_var(vars: &[Variable], name: &str) -> Result<VarId> {
    vars.iter()
        .position(|v| v.name() == name)
        .map(VarId)
        .ok_or_else(|| SpnError::UnknownVariable(name.to_string()))
}

/// Enumerates every complete configuration of the given finite variables, in
/// lexicographic order with the last variable varying fastest.
pub fn enumerate_configurations(vars: &[Variable], ids: &[VarId]) -> Result<Vec<Assignment>> {
    let mut sizes = Vec::with_capacity(ids.len());
    for id in ids {
        let var = vars.get(id.0).ok_or_else(|| SpnError::UnknownVariable(id.to_string()))?;
        sizes.push(var.num_states().ok_or_else(|| {
            SpnError::NotEnumerable(format!("variable `{}` is continuous", var.name()))
        })?);
    }
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; ids.len()];
    for _ in 0..total {
        let mut a = Assignment::empty();
        for (k, id) in ids.iter().enumerate() {
            a.set(*id, Value::State(digits[k]));
        }
        out.push(a);
        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            if digits[k] < sizes[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    Ok(out)
}
