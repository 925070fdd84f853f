use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::graph::VarId;

use super::slice::{DataSlice, LearnConfig};

/// G statistic and degrees of freedom for two code columns, over the rows
/// where both are observed. Values that never occur are left out of the
/// table; a column with a single observed value gives `(0, 0)`.
pub fn g_statistic(x: &[Option<usize>], y: &[Option<usize>], rx: usize, ry: usize) -> (f64, usize) {
    let mut table = vec![0.0; rx * ry];
    let mut n = 0.0;
    for (a, b) in x.iter().zip(y) {
        if let (Some(a), Some(b)) = (a, b) {
            table[a * ry + b] += 1.0;
            n += 1.0;
        }
    }
    let rows: Vec<f64> = (0..rx).map(|a| (0..ry).map(|b| table[a * ry + b]).sum()).collect();
    let cols: Vec<f64> = (0..ry).map(|b| (0..rx).map(|a| table[a * ry + b]).sum()).collect();
    let r = rows.iter().filter(|v| **v > 0.0).count();
    let c = cols.iter().filter(|v| **v > 0.0).count();
    if r < 2 || c < 2 {
        return (0.0, 0);
    }
    let mut g = 0.0;
    for a in 0..rx {
        for b in 0..ry {
            let o = table[a * ry + b];
            if o > 0.0 {
                g += o * (o * n / (rows[a] * cols[b])).ln();
            }
        }
    }
    (2.0 * g, (r - 1) * (c - 1))
}

/// True when the G-test rejects independence at significance `p`.
pub fn dependent(x: &[Option<usize>], y: &[Option<usize>], rx: usize, ry: usize, p: f64) -> bool {
    let (g, dof) = g_statistic(x, y, rx, ry);
    if dof == 0 {
        return false;
    }
    let chi = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    g > chi.inverse_cdf(1.0 - p)
}

/// Connected components of the pairwise dependency graph, each sorted, in
/// order of their smallest variable. With binary splits the first component
/// is set against all the others.
pub fn split_variables(slice: &DataSlice<'_>, cfg: &LearnConfig) -> Vec<Vec<VarId>> {
    let codes: Vec<Vec<Option<usize>>> = slice.vars.iter().map(|&v| slice.codes(v)).collect();
    let arity: Vec<usize> = slice.vars.iter().map(|&v| slice.arity(v)).collect();
    let n = slice.vars.len();
    let mut component = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let g = groups.len();
        component[start] = g;
        let mut members = vec![start];
        let mut next = 0;
        while next < members.len() {
            let u = members[next];
            next += 1;
            for w in 0..n {
                if component[w] == usize::MAX && dependent(&codes[u], &codes[w], arity[u], arity[w], cfg.p_value) {
                    component[w] = g;
                    members.push(w);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }
    let mut parts: Vec<Vec<VarId>> =
        groups.into_iter().map(|m| m.into_iter().map(|i| slice.vars[i]).collect()).collect();
    if cfg.binary_splits && parts.len() > 2 {
        let rest: Vec<VarId> = parts.drain(1..).flatten().collect();
        let mut rest = rest;
        rest.sort_unstable();
        parts.push(rest);
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_table() {
        // 2x2 table [[30, 10], [10, 30]]
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (a, b, k) in [(0, 0, 30), (0, 1, 10), (1, 0, 10), (1, 1, 30)] {
            for _ in 0..k {
                x.push(Some(a));
                y.push(Some(b));
            }
        }
        let (g, dof) = g_statistic(&x, &y, 2, 2);
        let expected = 2.0 * (60.0 * 1.5f64.ln() + 20.0 * 0.5f64.ln());
        assert!((g - expected).abs() < 1e-12);
        assert_eq!(dof, 1);
        assert!(dependent(&x, &y, 2, 2, 0.05));
    }

    #[test]
    fn constant_column_is_independent() {
        let x = vec![Some(0); 10];
        let y: Vec<_> = (0..10).map(|i| Some(i % 2)).collect();
        assert_eq!(g_statistic(&x, &y, 2, 2), (0.0, 0));
        assert!(!dependent(&x, &y, 2, 2, 0.05));
    }

    #[test]
    fn unobserved_states_do_not_count() {
        let x: Vec<_> = (0..20).map(|i| Some(i % 2)).collect();
        let y: Vec<_> = (0..20).map(|i| Some(2 * (i % 2))).collect();
        let (_, dof) = g_statistic(&x, &y, 2, 3);
        assert_eq!(dof, 1);
    }
}
