//! Sampling and covariance checks against exact laws.

use rand::RngCore;
use treestat::{
    distance, empirical_marginals, enumerate_trees, exact_cov, marginal_profile, GwModel,
    MetricParams, RngSpec, Tree, TreeSample, TreeSampler, Vertex,
};

fn v(s: &str) -> Vertex {
    Vertex::from_digits(s).unwrap()
}

fn frequencies(model: &GwModel, depth: usize, draws: usize, seed: u64) -> Vec<f64> {
    let sampler = TreeSampler::new(model, depth).unwrap();
    let len = sampler.layout().len();
    let mut counts = vec![0u32; len];
    let mut scratch = vec![false; len];
    let mut rng = RngSpec::new(seed).stream(0);
    sampler.accumulate_counts(&mut rng, draws, &mut counts, &mut scratch);
    counts.iter().map(|&c| c as f64 / draws as f64).collect()
}

/// Probability of each depth-capped tree under a per-slot model, by the
/// product over present vertices of the child-slot outcomes.
fn exact_law(root_prob: f64, rho: &[f64], depth: usize) -> Vec<(Tree, f64)> {
    let m = rho.len();
    enumerate_trees(m, depth)
        .unwrap()
        .into_iter()
        .map(|t| {
            if t.is_empty() {
                return (t, 1.0 - root_prob);
            }
            let mut p = root_prob;
            for u in t.vertices() {
                if u.generation() == depth {
                    continue;
                }
                for (a, r) in rho.iter().enumerate() {
                    p *= if t.contains(&u.child(a as u8 + 1)) {
                        *r
                    } else {
                        1.0 - r
                    };
                }
            }
            (t, p)
        })
        .collect()
}

#[test]
fn exact_law_is_a_distribution() {
    let law = exact_law(0.7, &[0.6, 0.3], 3);
    let total: f64 = law.iter().map(|(_, p)| p).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn vertex_frequency_over_a_million_draws() {
    let model = GwModel::per_slot(1.0, vec![0.6, 0.6]).unwrap();
    let f = frequencies(&model, 2, 1_000_000, 11);
    assert_eq!(f[0], 1.0);
    assert!((f[1] - 0.6).abs() < 0.002, "{}", f[1]);
    assert!((f[2] - 0.6).abs() < 0.002, "{}", f[2]);
}

#[test]
fn count_left_fill_frequencies() {
    let model = GwModel::count_left_fill(1.0, vec![0.25, 0.5, 0.25]).unwrap();
    let exact = marginal_profile(&model, 2).unwrap();
    assert!((exact.get(&v("11")).unwrap() - 0.75).abs() < 1e-15);
    assert!((exact.get(&v("12")).unwrap() - 0.25).abs() < 1e-15);
    let f = frequencies(&model, 2, 1_000_000, 12);
    assert!((f[1] - 0.75).abs() < 0.002, "{}", f[1]);
    assert!((f[2] - 0.25).abs() < 0.002, "{}", f[2]);
}

#[test]
fn empirical_marginals_within_three_standard_errors() {
    let n = 100_000;
    for (seed, model) in [
        (21, GwModel::percolation(2, 0.6).unwrap()),
        (22, GwModel::per_slot(0.9, vec![0.7, 0.4]).unwrap()),
        (
            23,
            GwModel::count_left_fill(0.95, vec![0.2, 0.3, 0.5]).unwrap(),
        ),
    ] {
        let sampler = TreeSampler::new(&model, 4).unwrap();
        let mut rng = RngSpec::new(seed).stream(0);
        let trees = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let sample = TreeSample::new(2, 4, trees).unwrap();
        let observed = empirical_marginals(&sample, 4).unwrap();
        let truth = marginal_profile(&model, 4).unwrap();
        for ((vx, p_hat), (_, p)) in observed.iter().zip(truth.iter()) {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (p_hat - p).abs() <= 3.0 * se,
                "{} at {vx}: {p_hat} vs {p}",
                model.describe()
            );
        }
    }
}

#[test]
fn marginal_profile_matches_exact_law() {
    let rho = [0.7, 0.45];
    let model = GwModel::per_slot(0.8, rho.to_vec()).unwrap();
    let law = exact_law(0.8, &rho, 3);
    let prof = marginal_profile(&model, 3).unwrap();
    for (vx, p) in prof.iter() {
        let oracle: f64 = law
            .iter()
            .filter(|(t, _)| t.contains(&vx))
            .map(|(_, q)| q)
            .sum();
        assert!((p - oracle).abs() < 1e-12, "{vx}");
    }
}

#[test]
fn exact_cov_matches_exact_law() {
    let rho = [0.6, 0.35];
    let model = GwModel::per_slot(0.9, rho.to_vec()).unwrap();
    let params = MetricParams::geometric(2, 0.3, 3).unwrap();
    let law = exact_law(0.9, &rho, 3);
    let probes = enumerate_trees(2, 3).unwrap();
    let d = |s: &Tree| -> Vec<f64> {
        law.iter()
            .map(|(t, _)| distance(t, s, &params).unwrap())
            .collect()
    };
    let mean = |x: &[f64]| -> f64 { x.iter().zip(&law).map(|(a, (_, p))| a * p).sum() };
    for s in probes.iter().step_by(3) {
        let ds = d(s);
        let ms = mean(&ds);
        for t in probes.iter().step_by(4) {
            let dt = d(t);
            let mt = mean(&dt);
            let oracle: f64 = law
                .iter()
                .enumerate()
                .map(|(i, (_, p))| p * (ds[i] - ms) * (dt[i] - mt))
                .sum();
            let c = exact_cov(&model, s, t, &params).unwrap();
            assert!((c - oracle).abs() < 1e-12, "{c} vs {oracle}");
        }
    }
}

#[test]
fn single_bernoulli_variance() {
    let model = GwModel::per_slot(0.5, vec![0.5, 0.5]).unwrap();
    let params = MetricParams::geometric(2, 0.3, 1).unwrap();
    let e = Tree::empty(2).unwrap();
    assert!((exact_cov(&model, &e, &e, &params).unwrap() - 0.0225).abs() < 1e-15);
}

// Sample variance of d(T, t) against exact_cov(t, t), with the standard
// error of a sample variance estimated from the fourth central moment.
fn variance_check(model: &GwModel, probe: &Tree, depth: usize, draws: usize, seed: u64) {
    let params = MetricParams::geometric(2, 0.3, depth).unwrap();
    let sampler = TreeSampler::new(model, depth).unwrap();
    let mut rng = RngSpec::new(seed).stream(0);
    let xs: Vec<f64> = (0..draws)
        .map(|_| distance(&sampler.sample(&mut rng), probe, &params).unwrap())
        .collect();
    let n = draws as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let se = ((m4 - var * var) / n).sqrt();
    let exact = exact_cov(model, probe, probe, &params).unwrap();
    assert!(
        (var - exact).abs() <= 3.0 * se,
        "probe {probe:?}: {var} vs {exact} (se {se})"
    );
}

#[test]
fn exact_variance_against_a_million_draws() {
    let model = GwModel::per_slot(1.0, vec![0.6, 0.6]).unwrap();
    for (i, probe) in [
        Tree::empty(2).unwrap(),
        Tree::full(2, 2).unwrap(),
        Tree::full(2, 3).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        variance_check(&model, probe, 3, 1_000_000, 30 + i as u64);
    }
}

#[test]
fn clt_harness_single_probe_with_one_tree_per_draw() {
    let model = GwModel::per_slot(1.0, vec![0.5, 0.5]).unwrap();
    let params = MetricParams::geometric(2, 0.3, 2).unwrap();
    let probe = Tree::full(2, 2).unwrap();
    let r = 1_000_000;
    let report = treestat::clt_covariance_check(
        &model,
        std::slice::from_ref(&probe),
        1,
        r,
        &params,
        RngSpec::new(41),
    )
    .unwrap();
    // the four depth-2 trees are equally likely, so moments are exact
    let law = exact_law(1.0, &[0.5, 0.5], 2);
    let xs: Vec<(f64, f64)> = law
        .iter()
        .map(|(t, p)| (distance(t, &probe, &params).unwrap(), *p))
        .collect();
    let mu: f64 = xs.iter().map(|(x, p)| x * p).sum();
    let var: f64 = xs.iter().map(|(x, p)| p * (x - mu).powi(2)).sum();
    let m4: f64 = xs.iter().map(|(x, p)| p * (x - mu).powi(4)).sum();
    let se = ((m4 - var * var) / r as f64).sqrt();
    assert!((report.exact[0][0] - var).abs() < 1e-15);
    assert!(
        (report.empirical[0][0] - var).abs() <= 3.0 * se,
        "{} vs {var} (se {se})",
        report.empirical[0][0]
    );
    assert_eq!(report.lipschitz_violations, 0);
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let spec = RngSpec::new(5);
    let a: Vec<u64> = (0..4).map(|_| spec.stream(3).next_u64()).collect();
    assert!(a.windows(2).all(|w| w[0] == w[1]));
    assert_ne!(spec.stream(3).next_u64(), spec.stream(4).next_u64());
    assert_ne!(spec.derive(0), spec.derive(1));
    assert_eq!(spec.derive(7), RngSpec::new(5).derive(7));
}

#[test]
fn sampling_is_deterministic_per_stream() {
    let model = GwModel::percolation(3, 0.4).unwrap();
    let draw = || {
        let mut rng = RngSpec::new(99).stream(2);
        let sampler = TreeSampler::new(&model, 5).unwrap();
        (0..50)
            .map(|_| sampler.sample(&mut rng))
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(), draw());
}
