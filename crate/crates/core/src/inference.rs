//! Monte-Carlo calibrated goodness-of-fit and two-sample tests, and a
//! covariance harness for the Gaussian limit of `sqrt(n) (g_n - g)`.
//!
//! Every replicate (null draw, permutation, bootstrap resample, CLT draw)
//! runs on its own stream `rng.stream(i)`, and results are collected in
//! replicate order, so outputs do not depend on the thread schedule.
//!
//! Conventions:
//! * critical value: the `ceil((1 - alpha) B)`-th smallest null value;
//! * p-value: `(1 + #{b : value_b >= observed}) / (B + 1)`;
//! * reject iff `statistic > critical value`.
//!
//! With these, `p_value <= alpha` implies rejection, and rejection implies
//! `p_value < alpha + 1/(B + 1)`.

use std::fmt;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{distance, g_dense, MetricParams};
use crate::numeric::CompensatedSum;
use crate::sampling::{
    exact_cov, marginal_profile, GwModel, MarginalProfile, RngSpec, TreeSampler,
};
use crate::statistic::{
    frequencies, one_sample_sup, sup_value, truncation_bound, two_sample_scale, two_sample_sup,
    vertex_counts,
};
use crate::tree::{check_same_arity, Tree, TreeSample};

/// Smallest null size accepted for critical values.
pub const MIN_REPLICATES: usize = 100;

/// Default number of null replicates or permutations.
pub const DEFAULT_REPLICATES: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct NullMeta {
    pub model: String,
    pub n: usize,
    pub m: usize,
    pub depth: usize,
    pub z: f64,
    pub seed: u64,
}

/// Sorted null statistics and where they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct NullDistribution {
    values: Vec<f64>,
    meta: NullMeta,
}

impl NullDistribution {
    pub fn new(mut values: Vec<f64>, meta: NullMeta) -> Self {
        values.sort_by(f64::total_cmp);
        NullDistribution { values, meta }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &NullMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Calibration {
    MonteCarlo,
    Permutation,
    /// Resampling the observed sample; validity is not established.
    Bootstrap,
}

impl fmt::Display for Calibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Calibration::MonteCarlo => "monte-carlo",
            Calibration::Permutation => "permutation",
            Calibration::Bootstrap => "bootstrap-experimental",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    /// Scale factor times the weight mass beyond the depth cap.
    pub truncation_bound_scaled: f64,
    pub witness: Tree,
    pub calibration: Calibration,
    pub replicates: usize,
    pub sample_sizes: Vec<usize>,
    pub m: usize,
    pub depth: usize,
    pub z: f64,
    pub seed: u64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha = {alpha} must lie in (0, 1)"
        )))
    }
}

fn check_replicates(b: usize) -> Result<()> {
    if b >= MIN_REPLICATES {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{b} replicates; at least {MIN_REPLICATES} are needed"
        )))
    }
}

/// The `ceil((1 - alpha) B)`-th smallest null value.
pub fn critical_value(null: &NullDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_replicates(null.len())?;
    let b = null.len();
    // the 1e-9 keeps (1 - alpha) B from rounding up past an integer
    let rank = (((1.0 - alpha) * b as f64) - 1e-9)
        .ceil()
        .clamp(1.0, b as f64) as usize;
    Ok(null.values[rank - 1])
}

/// `(1 + #{b : value_b >= observed}) / (B + 1)`.
pub fn p_value(null: &NullDistribution, observed: f64) -> f64 {
    let below = null.values.partition_point(|&v| v < observed);
    let at_least = null.values.len() - below;
    (1 + at_least) as f64 / (null.values.len() + 1) as f64
}

fn check_model(model: &GwModel, params: &MetricParams) -> Result<()> {
    check_same_arity(model.m(), params.m())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::EmptySample)
    } else {
        Ok(())
    }
}

/// Unsorted null statistics, replicate `b` drawn on `rng.stream(b)`.
///
/// Each replicate draws `n` trees from `model0` and evaluates the one-sample
/// statistic against the exact marginals of `model0`.
pub fn null_replicates(
    model0: &GwModel,
    n: usize,
    b: usize,
    params: &MetricParams,
    rng: RngSpec,
) -> Result<Vec<f64>> {
    params.require_clt_safe()?;
    check_model(model0, params)?;
    check_n(n)?;
    let sampler = TreeSampler::new(model0, params.depth_cap())?;
    let layout = sampler.layout().clone();
    let null = marginal_profile(model0, params.depth_cap())?;
    let phi = params.vertex_weights(&layout)?;
    let scale = (n as f64).sqrt();
    Ok((0..b as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.stream(i);
            let mut counts = vec![0u32; layout.len()];
            let mut scratch = vec![false; layout.len()];
            sampler.accumulate_counts(&mut stream, n, &mut counts, &mut scratch);
            let delta: Vec<f64> = frequencies(&counts, n)
                .iter()
                .zip(null.probs())
                .map(|(a, b)| a - b)
                .collect();
            scale * sup_value(&layout, &phi, &delta)
        })
        .collect())
}

/// Monte-Carlo null distribution of the one-sample statistic under `model0`.
pub fn simulate_null(
    model0: &GwModel,
    n: usize,
    b: usize,
    params: &MetricParams,
    rng: RngSpec,
) -> Result<NullDistribution> {
    check_replicates(b)?;
    let values = null_replicates(model0, n, b, params, rng)?;
    Ok(NullDistribution::new(
        values,
        NullMeta {
            model: model0.describe(),
            n,
            m: params.m(),
            depth: params.depth_cap(),
            z: params.require_clt_safe()?,
            seed: rng.seed,
        },
    ))
}

/// One-sample test of `H0: sample ~ model0`, calibrated by simulating `b`
/// samples of the same size from `model0`.
pub fn test_one_sample(
    sample: &TreeSample,
    model0: &GwModel,
    alpha: f64,
    b: usize,
    params: &MetricParams,
    rng: RngSpec,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    sample.require_nonempty()?;
    check_model(model0, params)?;
    let null = simulate_null(model0, sample.len(), b, params, rng)?;
    let profile0 = marginal_profile(model0, params.depth_cap())?;
    test_one_sample_with_null(sample, &profile0, &null, alpha, params)
}

/// One-sample test against a precomputed null distribution.
pub fn test_one_sample_with_null(
    sample: &TreeSample,
    profile0: &MarginalProfile,
    null: &NullDistribution,
    alpha: f64,
    params: &MetricParams,
) -> Result<TestReport> {
    let z = params.require_clt_safe()?;
    let meta = null.meta();
    if meta.n != sample.len() {
        return Err(Error::InvalidParameter(format!(
            "null distribution was simulated for n = {}, sample has {}",
            meta.n,
            sample.len()
        )));
    }
    check_same_arity(meta.m, params.m())?;
    if meta.depth != params.depth_cap() {
        return Err(Error::DepthMismatch {
            expected: params.depth_cap(),
            found: meta.depth,
        });
    }
    if meta.z != z {
        return Err(Error::InvalidParameter(format!(
            "null distribution uses z = {}, test uses z = {z}",
            meta.z
        )));
    }
    let observed = one_sample_sup(sample, profile0, params)?;
    report(
        observed.statistic(),
        observed.sup.witness,
        observed.scale,
        null,
        alpha,
        params,
        Calibration::MonteCarlo,
        vec![sample.len()],
    )
}

#[allow(clippy::too_many_arguments)]
fn report(
    statistic: f64,
    witness: Tree,
    scale: f64,
    null: &NullDistribution,
    alpha: f64,
    params: &MetricParams,
    calibration: Calibration,
    sample_sizes: Vec<usize>,
) -> Result<TestReport> {
    let critical = critical_value(null, alpha)?;
    Ok(TestReport {
        statistic,
        critical_value: critical,
        p_value: p_value(null, statistic),
        alpha,
        reject: statistic > critical,
        truncation_bound_scaled: scale * truncation_bound(params, params.depth_cap())?,
        witness,
        calibration,
        replicates: null.len(),
        sample_sizes,
        m: params.m(),
        depth: params.depth_cap(),
        z: params.require_clt_safe()?,
        seed: null.meta().seed,
    })
}

/// Bootstrap null: resample the observed trees with replacement and measure
/// the deviation from the observed marginals. Experimental.
pub fn bootstrap_null(
    sample: &TreeSample,
    b: usize,
    params: &MetricParams,
    rng: RngSpec,
) -> Result<NullDistribution> {
    let z = params.require_clt_safe()?;
    check_replicates(b)?;
    sample.require_nonempty()?;
    warn!("bootstrap calibration of the sup statistic has no established validity");
    let layout = params.layout();
    let phi = params.vertex_weights(&layout)?;
    let indicators = sample
        .iter()
        .map(|t| t.indicator(&layout))
        .collect::<Result<Vec<_>>>()?;
    let n = sample.len();
    let observed = frequencies(&vertex_counts(sample, &layout)?, n);
    let scale = (n as f64).sqrt();
    let values = (0..b as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.stream(i);
            let mut counts = vec![0u32; layout.len()];
            for _ in 0..n {
                let pick = &indicators[stream.gen_range(0..n)];
                for (c, &p) in counts.iter_mut().zip(pick) {
                    *c += p as u32;
                }
            }
            let delta: Vec<f64> = frequencies(&counts, n)
                .iter()
                .zip(&observed)
                .map(|(a, b)| a - b)
                .collect();
            scale * sup_value(&layout, &phi, &delta)
        })
        .collect();
    Ok(NullDistribution::new(
        values,
        NullMeta {
            model: "bootstrap".into(),
            n,
            m: params.m(),
            depth: params.depth_cap(),
            z,
            seed: rng.seed,
        },
    ))
}

/// One-sample test with bootstrap calibration. Experimental.
pub fn test_one_sample_bootstrap(
    sample: &TreeSample,
    profile0: &MarginalProfile,
    alpha: f64,
    b: usize,
    params: &MetricParams,
    rng: RngSpec,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let null = bootstrap_null(sample, b, params, rng)?;
    let observed = one_sample_sup(sample, profile0, params)?;
    report(
        observed.statistic(),
        observed.sup.witness,
        observed.scale,
        &null,
        alpha,
        params,
        Calibration::Bootstrap,
        vec![sample.len()],
    )
}

/// Two-sample statistics over `p` random re-splits of the pooled sample.
///
/// The pool is put in canonical order and the first group always gets the
/// smaller size, so the result is unchanged when the samples are swapped.
pub fn permutation_replicates(
    sample1: &TreeSample,
    sample2: &TreeSample,
    p: usize,
    params: &MetricParams,
    rng: RngSpec,
) -> Result<Vec<f64>> {
    sample1.require_nonempty()?;
    sample2.require_nonempty()?;
    check_same_arity(sample1.m(), sample2.m())?;
    check_same_arity(sample1.m(), params.m())?;
    let layout = params.layout();
    let phi = params.vertex_weights(&layout)?;
    let mut pooled: Vec<&Tree> = sample1.iter().chain(sample2.iter()).collect();
    pooled.sort();
    let indicators = pooled
        .iter()
        .map(|t| t.indicator(&layout))
        .collect::<Result<Vec<_>>>()?;
    let (n1, n2) = (sample1.len(), sample2.len());
    let first = n1.min(n2);
    let total = n1 + n2;
    let mut pooled_counts = vec![0u32; layout.len()];
    for ind in &indicators {
        for (c, &b) in pooled_counts.iter_mut().zip(ind) {
            *c += b as u32;
        }
    }
    let scale = two_sample_scale(n1, n2);
    Ok((0..p as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.stream(i);
            let mut order: Vec<usize> = (0..total).collect();
            order.shuffle(&mut stream);
            let mut counts = vec![0u32; layout.len()];
            for &k in &order[..first] {
                for (c, &b) in counts.iter_mut().zip(&indicators[k]) {
                    *c += b as u32;
                }
            }
            let delta: Vec<f64> = counts
                .iter()
                .zip(&pooled_counts)
                .map(|(&a, &all)| {
                    a as f64 / first as f64 - (all - a) as f64 / (total - first) as f64
                })
                .collect();
            scale * sup_value(&layout, &phi, &delta)
        })
        .collect())
}

/// Two-sample test of equal laws, calibrated by `p` permutations.
pub fn test_two_sample(
    sample1: &TreeSample,
    sample2: &TreeSample,
    alpha: f64,
    p: usize,
    params: &MetricParams,
    rng: RngSpec,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    check_replicates(p)?;
    let z = params.require_clt_safe()?;
    let observed = two_sample_sup(sample1, sample2, params)?;
    let values = permutation_replicates(sample1, sample2, p, params, rng)?;
    let null = NullDistribution::new(
        values,
        NullMeta {
            model: "permutation".into(),
            n: sample1.len() + sample2.len(),
            m: params.m(),
            depth: params.depth_cap(),
            z,
            seed: rng.seed,
        },
    );
    report(
        observed.statistic(),
        observed.sup.witness,
        observed.scale,
        &null,
        alpha,
        params,
        Calibration::Permutation,
        vec![sample1.len(), sample2.len()],
    )
}

/// Empirical versus exact covariance of `sqrt(n) (g_n(t) - g(t))` at the probes.
#[derive(Clone, Debug, PartialEq)]
pub struct CltReport {
    pub probes: Vec<Tree>,
    pub n: usize,
    pub draws: usize,
    pub empirical: Vec<Vec<f64>>,
    pub exact: Vec<Vec<f64>>,
    /// Largest entrywise `|empirical - exact|`.
    pub max_abs_deviation: f64,
    /// Draws on which some pair broke `|X(s) - X(t)| <= 2 d(s, t)`.
    pub lipschitz_violations: usize,
}

pub fn clt_covariance_check(
    model: &GwModel,
    probes: &[Tree],
    n: usize,
    r: usize,
    params: &MetricParams,
    rng: RngSpec,
) -> Result<CltReport> {
    params.require_clt_safe()?;
    check_model(model, params)?;
    check_n(n)?;
    if !model.is_per_slot() {
        return Err(Error::UnsupportedModel(
            "exact covariance needs a perslot model".into(),
        ));
    }
    if r < 2 {
        return Err(Error::InvalidParameter(
            "at least two draws are needed".into(),
        ));
    }
    let k = probes.len();
    let mut exact = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            exact[i][j] = exact_cov(model, &probes[i], &probes[j], params)?;
        }
    }
    let sampler = TreeSampler::new(model, params.depth_cap())?;
    let layout = sampler.layout().clone();
    let phi = params.vertex_weights(&layout)?;
    let truth = marginal_profile(model, params.depth_cap())?;
    let indicators = probes
        .iter()
        .map(|t| t.indicator(&layout))
        .collect::<Result<Vec<_>>>()?;
    let g: Vec<f64> = indicators
        .iter()
        .map(|ind| g_dense(&phi, truth.probs(), ind))
        .collect();
    let mut bounds = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            bounds[i][j] = 2.0 * distance(&probes[i], &probes[j], params)? + 1e-12;
        }
    }
    let scale = (n as f64).sqrt();
    let draws: Vec<(Vec<f64>, bool)> = (0..r as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.stream(i);
            let mut counts = vec![0u32; layout.len()];
            let mut scratch = vec![false; layout.len()];
            sampler.accumulate_counts(&mut stream, n, &mut counts, &mut scratch);
            let freq = frequencies(&counts, n);
            let centered: Vec<f64> = indicators
                .iter()
                .zip(&g)
                .map(|(ind, g0)| g_dense(&phi, &freq, ind) - g0)
                .collect();
            let lipschitz_ok =
                (0..k).all(|a| (0..k).all(|b| (centered[a] - centered[b]).abs() <= bounds[a][b]));
            (centered.iter().map(|x| scale * x).collect(), lipschitz_ok)
        })
        .collect();
    let lipschitz_violations = draws.iter().filter(|(_, ok)| !ok).count();
    let means: Vec<f64> = (0..k)
        .map(|a| {
            draws
                .iter()
                .map(|(x, _)| x[a])
                .collect::<CompensatedSum>()
                .value()
                / r as f64
        })
        .collect();
    let mut empirical = vec![vec![0.0; k]; k];
    let mut max_abs_deviation: f64 = 0.0;
    for a in 0..k {
        for b in 0..k {
            let s: CompensatedSum = draws
                .iter()
                .map(|(x, _)| (x[a] - means[a]) * (x[b] - means[b]))
                .collect();
            empirical[a][b] = s.value() / (r - 1) as f64;
            max_abs_deviation = max_abs_deviation.max((empirical[a][b] - exact[a][b]).abs());
        }
    }
    Ok(CltReport {
        probes: probes.to_vec(),
        n,
        draws: r,
        empirical,
        exact,
        max_abs_deviation,
        lipschitz_violations,
    })
}
