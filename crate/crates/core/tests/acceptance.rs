//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{all_partial, partial_marginals, random_dataset, random_network, Spec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spn::augment::augment;
use spn::fixtures;
use spn::graph::{non_selective_nodes, selectivity_check, validate, SelectivityMode, DEFAULT_ENUMERATION_CAP};
use spn::inference::{conditional, max_kbt, mpe_best_tree, sample};
use spn::io::{brute_force_table, load_model, render_model};
use spn::learning::{fit, gradient, log_likelihood, mle_selective, Dataset, FitConfig, FitMethod};
use spn::structure::{learn_spn, naive_factorization, DataSlice, LearnConfig};
use spn::{evaluate, Assignment, Network, Node, VarId, Variable};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn model_path(name: &str) -> String {
    format!("{}/../../models/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn c1_worked_example() -> Check {
    let net = load_model(model_path("running_example.spn")).map_err(|e| e.to_string())?;
    ensure(net == fixtures::running_example(), "shipped model differs from the fixture")?;
    let x = net.parse_assignment("A=+a,B=+b,C=¬c").map_err(|e| e.to_string())?;
    let p = evaluate(&net, &x).map_err(|e| e.to_string())?.value();
    let want = 0.3 * 0.4 * 0.9;
    ensure((p - want).abs() <= 1e-15, format!("S = {p}, expected {want}"))?;
    let mut best = Duration::MAX;
    for _ in 0..50 {
        let t = Instant::now();
        std::hint::black_box(evaluate(&net, &x).map_err(|e| e.to_string())?);
        best = best.min(t.elapsed());
    }
    ensure(best < Duration::from_millis(1), format!("evaluate took {best:?}"))?;
    Ok(format!("S(+a,+b,¬c) = {p:.15} in {best:?}"))
}

fn c2_mpe_with_evidence() -> Check {
    let net = fixtures::running_example();
    let e = net.parse_assignment("C=+c").map_err(|e| e.to_string())?;
    let mpe = mpe_best_tree(&net, &e).map_err(|e| e.to_string())?;
    let want = net.parse_assignment("A=+a,B=¬b").map_err(|e| e.to_string())?;
    ensure(mpe.assignment == want, format!("MPE = {}", net.display_assignment(&mpe.assignment)))?;
    ensure((mpe.value() - 0.144).abs() < 1e-12, format!("S^max = {}", mpe.value()))?;
    let na = conditional(&net, &net.parse_assignment("A=¬a").unwrap(), &e).map_err(|e| e.to_string())?.value();
    let nb = conditional(&net, &net.parse_assignment("B=¬b").unwrap(), &e).map_err(|e| e.to_string())?.value();
    ensure((na - 0.57).abs() <= 0.005 && (nb - 0.68).abs() <= 0.005, format!("P(¬a|+c) = {na}, P(¬b|+c) = {nb}"))?;
    // per-variable argmax picks ¬a and ¬b, which is not the MPE
    ensure(na > 0.5 && nb > 0.5 && mpe.assignment.get(VarId(0)) != Some(spn::Value::State(1)), "argmax coincides")?;
    Ok(format!("MPE (+a,¬b) = {:.6}; P(¬a|+c) = {na:.4}, P(¬b|+c) = {nb:.4}", mpe.value()))
}

// exact up to the rounding of log-space evaluation (a few ulps)
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * b
}

fn c3_counterexamples() -> Check {
    let inc = fixtures::incomplete();
    let a = evaluate(&inc, &inc.parse_assignment("V1=+v1").unwrap()).map_err(|e| e.to_string())?.value();
    let b = evaluate(&inc, &inc.parse_assignment("V1=¬v1").unwrap()).map_err(|e| e.to_string())?.value();
    ensure(close(a, 0.7) && close(b, 0.7), format!("incomplete: {a}, {b}"))?;
    ensure(!validate(&inc).complete, "incomplete fixture not flagged")?;
    let nd = fixtures::non_decomposable();
    let a = evaluate(&nd, &nd.parse_assignment("V=+v").unwrap()).map_err(|e| e.to_string())?.value();
    let b = evaluate(&nd, &nd.parse_assignment("V=¬v").unwrap()).map_err(|e| e.to_string())?.value();
    ensure(close(a, 0.25) && close(b, 0.25), format!("non-decomposable: {a}, {b}"))?;
    ensure(!validate(&nd).decomposable, "non-decomposable fixture not flagged")?;
    Ok("S(+v1) = S(¬v1) = 0.7, S(+v) = S(¬v) = 0.25, both flagged".into())
}

fn c4_normalization() -> Check {
    let t = Instant::now();
    let spec = Spec { max_vars: 10, max_nodes: 200, ..Spec::default() };
    let mut marginals = 0usize;
    for seed in 0..200u64 {
        let net = random_network(seed, spec);
        ensure(net.len() <= 200, format!("seed {seed}: {} nodes", net.len()))?;
        ensure(validate(&net).is_valid(), format!("seed {seed}: {}", validate(&net)))?;
        let n = net.variables().len();
        let table = brute_force_table(&net, DEFAULT_ENUMERATION_CAP).map_err(|e| e.to_string())?;
        ensure((table.total() - 1.0).abs() <= 1e-9, format!("seed {seed}: total {}", table.total()))?;
        let joint: Vec<f64> = table.rows.iter().map(|r| r.1).collect();
        for (x, want) in all_partial(n).iter().zip(partial_marginals(&joint, n)) {
            let got = evaluate(&net, x).map_err(|e| e.to_string())?.value();
            ensure((got - want).abs() <= 1e-9, format!("seed {seed}: {} gives {got}, brute force {want}", net.display_assignment(x)))?;
            marginals += 1;
        }
    }
    let took = t.elapsed();
    ensure(took < Duration::from_secs(60), format!("took {took:?}"))?;
    Ok(format!("200 networks, {marginals} marginals, {took:.2?}"))
}

fn c5_gradient() -> Check {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let net = random_network(1000 + seed, Spec { max_nodes: 80, indicators: false, ..Spec::default() });
        let data = random_dataset(&net, seed, 20, 0.2);
        let g = gradient(&net, &data).map_err(|e| e.to_string())?;
        for ((i, j), analytic) in g.iter() {
            let k = net.node(i).children().iter().position(|&c| c == j).unwrap();
            let ll = |dw: f64| {
                let mut m = net.clone();
                let mut w = net.node(i).weights().unwrap().to_vec();
                w[k] += dw;
                m.set_weights(i, w).unwrap();
                log_likelihood(&m, &data).unwrap()
            };
            let fd = (ll(h) - ll(-h)) / (2.0 * h);
            let rel = (fd - analytic).abs() / analytic.abs().max(1e-2);
            worst = worst.max(rel);
            ensure(rel <= 1e-4, format!("seed {seed} edge {}->{}: fd {fd} analytic {analytic}", i.0, j.0))?;
        }
    }
    Ok(format!("50 fixtures, worst relative error {worst:.2e}"))
}

fn selective_fixture(seed: u64) -> Network {
    random_network(2000 + seed, Spec { max_vars: 5, max_nodes: 60, selective: true, indicators: true })
}

fn c6_mle() -> Check {
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_em: f64 = 0.0;
    for seed in 0..20u64 {
        let net = selective_fixture(seed);
        ensure(selectivity_check(&net, SelectivityMode::exhaustive()).map_err(|e| e.to_string())?.is_selective(), "fixture not selective")?;
        let data = random_dataset(&net, seed, 100, 0.0);
        let mle = mle_selective(&net, &data, 0.0).map_err(|e| e.to_string())?;
        let best = log_likelihood(&mle, &data).map_err(|e| e.to_string())?;
        for i in mle.sum_nodes().filter(|&i| mle.is_reachable(i)) {
            ensure(mle.node(i).children().len() == 2, "grid search expects binary sums")?;
            for step in 0..=100 {
                let a = step as f64 / 100.0;
                let mut trial = mle.clone();
                trial.set_weights(i, vec![a, 1.0 - a]).unwrap();
                let ll = log_likelihood(&trial, &data).map_err(|e| e.to_string())?;
                worst_gap = worst_gap.max(ll - best);
                ensure(ll <= best + 1e-9, format!("seed {seed}: grid point beats closed form by {}", ll - best))?;
            }
        }
        let cfg = FitConfig { epochs: 1, update_leaves: false, ..FitConfig::new(FitMethod::Em) };
        let em = fit(&net, &data, &cfg).map_err(|e| e.to_string())?.network;
        for i in net.sum_nodes() {
            for (a, b) in em.node(i).weights().unwrap().iter().zip(mle.node(i).weights().unwrap()) {
                worst_em = worst_em.max((a - b).abs());
            }
        }
        ensure(worst_em < 1e-9, format!("seed {seed}: EM differs from MLE by {worst_em}"))?;
    }
    Ok(format!("20 fixtures, best grid gap {worst_gap:.2e}, max |EM - MLE| {worst_em:.2e}"))
}

fn c7_em_monotone() -> Check {
    let mut steps = 0;
    for seed in 0..20u64 {
        let net = random_network(3000 + seed, Spec { indicators: false, ..Spec::default() });
        let data = random_dataset(&net, seed, 80, if seed % 2 == 0 { 0.3 } else { 0.0 });
        let mut init = net.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in net.sum_nodes() {
            let raw: Vec<f64> = (0..net.node(i).children().len()).map(|_| 0.1 + rng.random::<f64>()).collect();
            let t: f64 = raw.iter().sum();
            init.set_weights(i, raw.iter().map(|w| w / t).collect()).unwrap();
        }
        let cfg = FitConfig { epochs: 25, tolerance: 0.0, ..FitConfig::new(FitMethod::Em) };
        let out = fit(&init, &data, &cfg).map_err(|e| e.to_string())?;
        for w in out.trace.windows(2) {
            ensure(w[1].log_likelihood >= w[0].log_likelihood - 1e-9, format!("seed {seed}: {} then {}", w[0], w[1]))?;
            steps += 1;
        }
    }
    Ok(format!("20 fixtures (10 with missing cells), {steps} non-decreasing steps"))
}

fn c8_augmentation() -> Check {
    let mut found = 0;
    let mut seed = 4000u64;
    let mut worst: f64 = 0.0;
    while found < 20 {
        seed += 1;
        let net = random_network(seed, Spec { max_vars: 5, max_nodes: 60, ..Spec::default() });
        if non_selective_nodes(&net, DEFAULT_ENUMERATION_CAP).map_err(|e| e.to_string())?.is_empty() {
            continue;
        }
        found += 1;
        let (aug, record) = augment(&net).map_err(|e| e.to_string())?;
        let report = validate(&aug);
        ensure(report.complete && report.decomposable && report.normalized, format!("seed {seed}: {report}"))?;
        ensure(selectivity_check(&aug, SelectivityMode::exhaustive()).map_err(|e| e.to_string())?.is_selective(), format!("seed {seed}: not selective"))?;
        ensure(!record.is_empty(), "nothing augmented")?;
        for x in all_partial(net.variables().len()) {
            let p = evaluate(&net, &x).map_err(|e| e.to_string())?.log;
            let q = evaluate(&aug, &x).map_err(|e| e.to_string())?.log;
            if p != q {
                worst = worst.max((p - q).abs());
                ensure((p - q).abs() <= 1e-12, format!("seed {seed}: ln P {p} vs {q}"))?;
            }
        }
        let (_, second) = augment(&aug).map_err(|e| e.to_string())?;
        ensure(second.is_empty(), format!("seed {seed}: second pass augmented {} nodes", second.augmented.len()))?;
    }
    Ok(format!("20 non-selective fixtures, max |Δ ln P| {worst:.1e}, idempotent"))
}

fn c9_best_tree() -> Check {
    let mut checked = 0;
    for seed in 0..40u64 {
        let net = if seed == 0 { fixtures::running_example() } else { selective_fixture(seed) };
        let table = brute_force_table(&net, DEFAULT_ENUMERATION_CAP).map_err(|e| e.to_string())?;
        for e in all_partial(net.variables().len()).iter().step_by(7) {
            let (_, best) = table.argmax(e).unwrap();
            if *best == 0.0 {
                continue;
            }
            let bt = mpe_best_tree(&net, e).map_err(|e| e.to_string())?;
            ensure(bt.exact, "selective network reported as approximate")?;
            ensure((bt.value() - best).abs() <= 1e-12, format!("seed {seed}: BT {} vs exhaustive {best}", bt.value()))?;
            checked += 1;
        }
    }
    let net = load_model(model_path("bt_divergence.spn")).map_err(|e| e.to_string())?;
    let table = brute_force_table(&net, DEFAULT_ENUMERATION_CAP).map_err(|e| e.to_string())?;
    let (v, best) = table.argmax(&Assignment::empty()).unwrap().clone();
    let bt = mpe_best_tree(&net, &Assignment::empty()).map_err(|e| e.to_string())?;
    let bt_true = evaluate(&net, &bt.assignment).map_err(|e| e.to_string())?.value();
    ensure(!bt.exact && bt.assignment != v && bt_true < best - 1e-3, "BT did not diverge on the fixture")?;
    let kbt = max_kbt(&net, 3).map_err(|e| e.to_string())?;
    ensure(kbt.assignment == v && (kbt.value() - best).abs() < 1e-12, format!("KBT found {}", kbt.value()))?;
    Ok(format!(
        "{checked} selective queries exact; divergence fixture: BT {} (P = {bt_true:.3}) vs MAX {} = {best:.3}, KBT(k=3) recovers it",
        net.display_assignment(&bt.assignment),
        net.display_assignment(&v)
    ))
}

fn pair_data(rng: &mut ChaCha8Rng, n: usize, agree: f64) -> Dataset {
    let vars = vec![Variable::finite("X", ["0", "1"]).unwrap(), Variable::finite("Y", ["0", "1"]).unwrap()];
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let x = rng.random_range(0..2usize);
            let y = if agree < 0.0 {
                rng.random_range(0..2usize)
            } else if rng.random::<f64>() < agree {
                x
            } else {
                1 - x
            };
            vec![x, y]
        })
        .collect();
    Dataset::from_states(vars, &rows).unwrap()
}

fn has_xy_split(net: &Network) -> bool {
    let scopes = net.scopes().unwrap();
    net.ids().filter(|&i| net.is_reachable(i)).any(|i| match net.node(i) {
        Node::Product { children } => {
            let s: Vec<Vec<usize>> = children.iter().map(|c| scopes[c.0].ones().collect()).collect();
            s.contains(&vec![0]) && s.contains(&vec![1])
        }
        _ => false,
    })
}

fn c10_learnspn() -> Check {
    let t = Instant::now();
    let cfg = LearnConfig { seed: 7, ..LearnConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let train = pair_data(&mut rng, 1000, -1.0);
    let test = pair_data(&mut rng, 1000, -1.0);
    let net = learn_spn(&train, &cfg).map_err(|e| e.to_string())?;
    ensure(has_xy_split(&net), "no product node splitting X from Y")?;
    let ll = log_likelihood(&net, &test).map_err(|e| e.to_string())?;
    let truth = -2.0 * std::f64::consts::LN_2 * test.len() as f64;
    let rel = (ll - truth).abs() / truth.abs();
    ensure(rel <= 0.02, format!("independent pair: test L_D {ll} vs {truth}"))?;

    let train = pair_data(&mut rng, 1000, 0.95);
    let test = pair_data(&mut rng, 1000, 0.95);
    let learned = learn_spn(&train, &cfg).map_err(|e| e.to_string())?;
    let indep = naive_factorization(&DataSlice::full(&train), cfg.alpha).map_err(|e| e.to_string())?;
    let margin = log_likelihood(&learned, &test).map_err(|e| e.to_string())?
        - log_likelihood(&indep, &test).map_err(|e| e.to_string())?;
    // exact 2x2 oracle: the true joint has P(x,y) = 0.475 on the diagonal,
    // 0.025 off it, uniform marginals
    let oracle: f64 = test
        .rows()
        .iter()
        .map(|r| {
            let same = r.get(VarId(0)) == r.get(VarId(1));
            (if same { 0.475f64 } else { 0.025 } / 0.25).ln()
        })
        .sum();
    ensure(margin > 0.0 && margin >= 0.9 * oracle, format!("correlated pair: margin {margin:.2} vs oracle {oracle:.2}"))?;
    let took = t.elapsed();
    ensure(took < Duration::from_secs(10), format!("took {took:?}"))?;
    Ok(format!(
        "independent: test L_D {ll:.2} vs {truth:.2} ({:.2}%); correlated: margin {margin:.1} vs oracle {oracle:.1}; {took:.2?}",
        100.0 * rel
    ))
}

fn c11_determinism() -> Check {
    let net = random_network(11, Spec { indicators: false, ..Spec::default() });
    ensure(sample(&net, 5, 300).unwrap() == sample(&net, 5, 300).unwrap(), "sampling")?;
    let data = random_dataset(&net, 5, 500, 0.1);
    for method in [FitMethod::Gd, FitMethod::Em, FitMethod::HardEm] {
        let cfg = |threads| FitConfig { epochs: 4, batch_size: Some(50), seed: 9, threads, ..FitConfig::new(method) };
        let runs: Vec<String> = [1, 1, 2, 4]
            .iter()
            .map(|&th| fit(&net, &data, &cfg(th)).map(|o| render_model(&o.network)).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        ensure(runs.windows(2).all(|w| w[0] == w[1]), format!("{method:?} differs across runs or thread counts"))?;
    }
    let complete = random_dataset(&net, 6, 400, 0.0);
    let cfg = LearnConfig { seed: 3, ..LearnConfig::default() };
    let a = render_model(&learn_spn(&complete, &cfg).map_err(|e| e.to_string())?);
    let b = render_model(&learn_spn(&complete, &cfg).map_err(|e| e.to_string())?);
    ensure(a == b, "LearnSPN")?;
    Ok("sampling, GD, EM, hard EM (1/2/4 threads) and LearnSPN bit-identical".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("worked example value", c1_worked_example),
        ("MPE with evidence", c2_mpe_with_evidence),
        ("incomplete / non-decomposable counterexamples", c3_counterexamples),
        ("normalization and marginals", c4_normalization),
        ("gradient vs finite differences", c5_gradient),
        ("MLE optimality and one-step EM", c6_mle),
        ("EM monotonicity", c7_em_monotone),
        ("augmentation", c8_augmentation),
        ("best tree exactness and limits", c9_best_tree),
        ("LearnSPN behaviour", c10_learnspn),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
