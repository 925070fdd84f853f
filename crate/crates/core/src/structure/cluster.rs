use rand::Rng;

use super::slice::{DataSlice, LearnConfig};

/// Maximum hard-EM iterations when clustering.
pub const MAX_CLUSTER_ITERATIONS: usize = 100;

// Smoothing used inside the clustering only, so that a cluster never gives a
// row probability zero and rows can always move.
const CLUSTER_SMOOTHING: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    /// Row indices into the dataset, each cluster ascending; clusters ordered
    /// by their first row.
    pub clusters: Vec<Vec<usize>>,
    /// |T_i| / |T|.
    pub weights: Vec<f64>,
}

fn mismatches(a: &[Option<usize>], b: &[Option<usize>]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Hard-EM naive Bayes mixture over the slice's variables, seeded k-means++
/// style on the one-hot encoding (whose squared distance is twice the number
/// of mismatching columns).
pub fn cluster_instances<R: Rng + ?Sized>(slice: &DataSlice<'_>, cfg: &LearnConfig, rng: &mut R) -> Clustering {
    let n = slice.rows.len();
    let columns: Vec<Vec<Option<usize>>> = slice.vars.iter().map(|&v| slice.codes(v)).collect();
    let arity: Vec<usize> = slice.vars.iter().map(|&v| slice.arity(v)).collect();
    let rows: Vec<Vec<Option<usize>>> = (0..n).map(|t| columns.iter().map(|c| c[t]).collect()).collect();
    let k = if cfg.binary_splits { 2 } else { cfg.max_clusters }.min(n);

    // seeding
    let mut centers = vec![rng.random_range(0..n)];
    let mut dist: Vec<f64> = rows.iter().map(|r| (2 * mismatches(r, &rows[centers[0]])) as f64).collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        if total == 0.0 {
            break;
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = dist.iter().rposition(|d| *d > 0.0).expect("positive total");
        for (t, d) in dist.iter().enumerate() {
            acc += d;
            if u < acc && *d > 0.0 {
                pick = t;
                break;
            }
        }
        centers.push(pick);
        for (t, r) in rows.iter().enumerate() {
            dist[t] = dist[t].min((2 * mismatches(r, &rows[pick])) as f64);
        }
    }
    let mut assign: Vec<usize> = rows
        .iter()
        .map(|r| {
            let d: Vec<usize> = centers.iter().map(|&c| mismatches(r, &rows[c])).collect();
            (0..centers.len()).min_by_key(|&i| (d[i], i)).expect("at least one center")
        })
        .collect();
    let mut k = centers.len();

    for _ in 0..MAX_CLUSTER_ITERATIONS {
        // M-step: per-cluster, per-variable log probabilities
        let mut counts: Vec<Vec<Vec<f64>>> = vec![arity.iter().map(|&a| vec![0.0; a]).collect(); k];
        for (t, r) in rows.iter().enumerate() {
            for (v, code) in r.iter().enumerate() {
                if let Some(s) = code {
                    counts[assign[t]][v][*s] += 1.0;
                }
            }
        }
        let logp: Vec<Vec<Vec<f64>>> = counts
            .iter()
            .map(|cluster| {
                cluster
                    .iter()
                    .map(|c| {
                        let total: f64 = c.iter().sum::<f64>() + CLUSTER_SMOOTHING * c.len() as f64;
                        c.iter().map(|x| ((x + CLUSTER_SMOOTHING) / total).ln()).collect()
                    })
                    .collect()
            })
            .collect();
        // E-step: most likely cluster, ties to the lowest index
        let next: Vec<usize> = rows
            .iter()
            .map(|r| {
                let mut best = (0, f64::NEG_INFINITY);
                for (i, lp) in logp.iter().enumerate() {
                    let ll: f64 = r.iter().enumerate().filter_map(|(v, c)| c.map(|s| lp[v][s])).sum();
                    if ll > best.1 {
                        best = (i, ll);
                    }
                }
                best.0
            })
            .collect();
        // drop empty clusters, renumbering by first appearance
        let mut relabel = vec![usize::MAX; k];
        let mut used = 0;
        let next: Vec<usize> = next
            .into_iter()
            .map(|c| {
                if relabel[c] == usize::MAX {
                    relabel[c] = used;
                    used += 1;
                }
                relabel[c]
            })
            .collect();
        let same = used == k && {
            // compare partitions rather than labels
            let mut map = vec![usize::MAX; k];
            assign.iter().zip(&next).all(|(&a, &b)| {
                if map[a] == usize::MAX {
                    map[a] = b;
                }
                map[a] == b
            })
        };
        assign = next;
        k = used;
        if same {
            break;
        }
    }

    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (t, &c) in assign.iter().enumerate() {
        clusters[c].push(slice.rows[t]);
    }
    clusters.retain(|c| !c.is_empty());
    clusters.sort_by_key(|c| c[0]);
    let weights = clusters.iter().map(|c| c.len() as f64 / n as f64).collect();
    Clustering { clusters, weights }
}
