//! Calibration, reproducibility and report semantics of the tests.

use treestat::inference::{
    permutation_replicates, test_one_sample_bootstrap, test_one_sample_with_null,
};
use treestat::io::{read_null, write_null};
use treestat::{
    critical_value, marginal_profile, p_value, simulate_null, test_one_sample, test_two_sample,
    Calibration, GwModel, MarginalProfile, MetricParams, NullDistribution, NullMeta, RngSpec, Tree,
    TreeSample, TreeSampler,
};

fn params(depth: usize) -> MetricParams {
    MetricParams::geometric(2, 0.3, depth).unwrap()
}

fn draw(model: &GwModel, depth: usize, n: usize, seed: u64) -> TreeSample {
    let sampler = TreeSampler::new(model, depth).unwrap();
    let mut rng = RngSpec::new(seed).stream(0);
    TreeSample::new(
        model.m(),
        depth,
        (0..n).map(|_| sampler.sample(&mut rng)).collect(),
    )
    .unwrap()
}

fn meta() -> NullMeta {
    NullMeta {
        model: "fixed".into(),
        n: 1,
        m: 2,
        depth: 2,
        z: 0.3,
        seed: 0,
    }
}

#[test]
fn null_distribution_has_positive_spread() {
    let model = GwModel::percolation(2, 0.6).unwrap();
    let null = simulate_null(&model, 500, 2000, &params(4), RngSpec::new(1)).unwrap();
    let v = null.values();
    assert_eq!(v.len(), 2000);
    assert!(v.windows(2).all(|w| w[0] <= w[1]));
    assert!(v[0] > 0.0);
    assert!(v[v.len() - 1] > v[0]);
}

#[test]
fn null_simulation_is_reproducible_and_thread_independent() {
    let model = GwModel::percolation(2, 0.6).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_null(&model, 50, 300, &params(4), RngSpec::new(8)).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    let other = simulate_null(&model, 50, 300, &params(4), RngSpec::new(9)).unwrap();
    assert_ne!(a.values(), other.values());
}

#[test]
fn p_value_conventions() {
    let null = NullDistribution::new((1..=99).map(f64::from).collect(), meta());
    assert_eq!(p_value(&null, 1000.0), 1.0 / 100.0);
    assert_eq!(p_value(&null, 0.5), 1.0);
    assert_eq!(p_value(&null, 1.0), 1.0);
    assert!((p_value(&null, 50.0) - 0.5).abs() <= 1.0 / 100.0 + 1e-12);
}

#[test]
fn critical_value_is_an_order_statistic() {
    let null = NullDistribution::new((1..=1000).rev().map(f64::from).collect(), meta());
    assert_eq!(critical_value(&null, 0.05).unwrap(), 950.0);
    assert_eq!(critical_value(&null, 0.1).unwrap(), 900.0);
    assert!(critical_value(&null, 0.0).is_err());
    assert!(critical_value(&null, 1.0).is_err());
}

#[test]
fn reject_and_p_value_agree() {
    let model = GwModel::percolation(2, 0.6).unwrap();
    let alt = GwModel::percolation(2, 0.66).unwrap();
    for seed in 0..20 {
        let s = draw(&alt, 4, 100, 100 + seed);
        let r = test_one_sample(&s, &model, 0.1, 199, &params(4), RngSpec::new(seed)).unwrap();
        if r.p_value <= r.alpha {
            assert!(r.reject);
        }
        if r.reject {
            assert!(r.p_value < r.alpha + 1.0 / 200.0);
        }
    }
}

// Fixed-seed regression: a sample drawn from the null model itself.
#[test]
fn one_sample_regression_fixture() {
    let model = GwModel::percolation(2, 0.6).unwrap();
    let s = draw(&model, 4, 200, 2024);
    let r = test_one_sample(&s, &model, 0.05, 999, &params(4), RngSpec::new(7)).unwrap();
    assert!(r.p_value > 0.05);
    // values recorded when the fixture was created
    assert!((r.statistic - 0.3638480167992122).abs() < 1e-12);
    assert_eq!(r.p_value, 159.0 / 1000.0);
    assert!(!r.reject);
    assert_eq!(r.calibration, Calibration::MonteCarlo);
    assert_eq!(r.replicates, 999);
    assert_eq!(r.sample_sizes, vec![200]);
    assert!((r.truncation_bound_scaled - 200f64.sqrt() * 0.3 * 0.6f64.powi(4) / 0.4).abs() < 1e-12);
}

#[test]
fn precomputed_null_gives_the_same_report() {
    let model = GwModel::percolation(2, 0.6).unwrap();
    let p = params(4);
    let s = draw(&model, 4, 60, 5);
    let direct = test_one_sample(&s, &model, 0.05, 300, &p, RngSpec::new(3)).unwrap();
    let null = simulate_null(&model, 60, 300, &p, RngSpec::new(3)).unwrap();
    let mut buf = Vec::new();
    write_null(&null, &mut buf).unwrap();
    let reloaded = read_null(buf.as_slice()).unwrap();
    assert_eq!(reloaded, null);
    let profile = marginal_profile(&model, 4).unwrap();
    let via_file = test_one_sample_with_null(&s, &profile, &reloaded, 0.05, &p).unwrap();
    assert_eq!(direct, via_file);

    let wrong_n = draw(&model, 4, 61, 5);
    assert!(test_one_sample_with_null(&wrong_n, &profile, &reloaded, 0.05, &p).is_err());
}

#[test]
fn invalid_test_inputs() {
    let model = GwModel::percolation(2, 0.6).unwrap();
    let s = draw(&model, 4, 10, 1);
    let p = params(4);
    assert!(test_one_sample(&s, &model, 0.05, 99, &p, RngSpec::new(1)).is_err());
    assert!(test_one_sample(&s, &model, 1.5, 200, &p, RngSpec::new(1)).is_err());
    let empty = TreeSample::new(2, 4, vec![]).unwrap();
    assert!(test_one_sample(&empty, &model, 0.05, 200, &p, RngSpec::new(1)).is_err());
    let unsafe_z = MetricParams::geometric_relaxed(2, 0.45, 4).unwrap();
    assert!(test_one_sample(&s, &model, 0.05, 200, &unsafe_z, RngSpec::new(1)).is_err());
    let ternary = GwModel::percolation(3, 0.3).unwrap();
    assert!(test_one_sample(&s, &ternary, 0.05, 200, &p, RngSpec::new(1)).is_err());
}

#[test]
fn two_sample_symmetry_and_identical_samples() {
    let p = params(4);
    let a = draw(&GwModel::percolation(2, 0.6).unwrap(), 4, 40, 1);
    let b = draw(&GwModel::percolation(2, 0.7).unwrap(), 4, 55, 2);
    let ab = test_two_sample(&a, &b, 0.05, 300, &p, RngSpec::new(4)).unwrap();
    let ba = test_two_sample(&b, &a, 0.05, 300, &p, RngSpec::new(4)).unwrap();
    assert_eq!(ab.statistic, ba.statistic);
    assert_eq!(ab.p_value, ba.p_value);
    assert_eq!(ab.reject, ba.reject);
    assert_eq!(
        permutation_replicates(&a, &b, 100, &p, RngSpec::new(4)).unwrap(),
        permutation_replicates(&b, &a, 100, &p, RngSpec::new(4)).unwrap()
    );

    let same = test_two_sample(&a, &a, 0.05, 300, &p, RngSpec::new(4)).unwrap();
    assert_eq!(same.statistic, 0.0);
    assert!(!same.reject);
    assert_eq!(same.calibration, Calibration::Permutation);
}

#[test]
fn point_mass_null_never_rejects() {
    let x = Tree::full(2, 2).unwrap();
    let model = GwModel::per_slot(1.0, vec![1.0, 1.0]).unwrap();
    let p = params(2);
    let s = TreeSample::new(2, 2, vec![x.clone(); 30]).unwrap();
    for alpha in [0.01, 0.5, 0.99] {
        let r = test_one_sample(&s, &model, alpha, 100, &p, RngSpec::new(2)).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        assert_eq!(r.p_value, 1.0);
    }
    assert_eq!(
        MarginalProfile::point_mass(&x, 2).unwrap(),
        marginal_profile(&model, 2).unwrap()
    );
}

#[test]
fn bootstrap_calibration_is_labelled() {
    let model = GwModel::percolation(2, 0.6).unwrap();
    let p = params(3);
    let s = draw(&model, 3, 80, 6);
    let profile = marginal_profile(&model, 3).unwrap();
    let r = test_one_sample_bootstrap(&s, &profile, 0.05, 200, &p, RngSpec::new(6)).unwrap();
    assert_eq!(r.calibration, Calibration::Bootstrap);
    assert_eq!(r.calibration.to_string(), "bootstrap-experimental");
    assert!(r.p_value > 0.0 && r.p_value <= 1.0);
}

#[test]
fn clt_harness_small_run() {
    let model = GwModel::percolation(2, 0.6).unwrap();
    let probes = [Tree::empty(2).unwrap(), Tree::full(2, 2).unwrap()];
    let rep = treestat::clt_covariance_check(&model, &probes, 50, 400, &params(3), RngSpec::new(1))
        .unwrap();
    assert_eq!(rep.lipschitz_violations, 0);
    assert_eq!(rep.empirical.len(), 2);
    assert!(rep.max_abs_deviation.is_finite());
    let count = GwModel::count_left_fill(1.0, vec![0.2, 0.3, 0.5]).unwrap();
    assert!(
        treestat::clt_covariance_check(&count, &probes, 50, 400, &params(3), RngSpec::new(1))
            .is_err()
    );
}
