//! Sup-deviation statistics `sup_y |g_n(y) - g_0(y)|`.
//!
//! With `delta_v = phat_v - p0_v`, the deviation at a tree `y` is
//!
//! ```text
//! D(y) = g_n(y) - g_0(y) = sum_v phi(v) delta_v (1 - 2 y(v))
//!      = C + 2 * sum_{v in y} w_v,   C = sum_v phi(v) delta_v,  w_v = -phi(v) delta_v
//! ```
//!
//! so `sup D = C + 2 MWS(w)` and `-inf D = -C + 2 MWS(-w)`, where `MWS` is the
//! heaviest prefix-closed vertex set. On a tree that is a one-pass bottom-up
//! dynamic program.

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::metric::{MetricParams, WeightRule};
use crate::numeric::compensated_sum;
use crate::sampling::MarginalProfile;
use crate::tree::{check_same_arity, enumerate_trees, Tree, TreeSample};

/// `phat - p0` per vertex, in layout order.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaProfile {
    layout: Layout,
    deltas: Vec<f64>,
}

impl DeltaProfile {
    pub fn new(layout: Layout, deltas: Vec<f64>) -> Result<Self> {
        if deltas.len() != layout.len() {
            return Err(Error::InvalidParameter(format!(
                "delta profile has {} entries, layout needs {}",
                deltas.len(),
                layout.len()
            )));
        }
        if let Some(d) = deltas.iter().find(|d| d.is_nan() || d.abs() > 1.0) {
            return Err(Error::InvalidParameter(format!("|delta| = {d} exceeds 1")));
        }
        Ok(DeltaProfile { layout, deltas })
    }

    pub fn between(observed: &MarginalProfile, reference: &MarginalProfile) -> Result<Self> {
        observed.layout().check_same(reference.layout())?;
        let deltas = observed
            .probs()
            .iter()
            .zip(reference.probs())
            .map(|(a, b)| a - b)
            .collect();
        Ok(DeltaProfile {
            layout: observed.layout().clone(),
            deltas,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    /// The supremum of `g_n - g_0` won.
    Positive,
    /// The supremum of `g_0 - g_n` won.
    Negative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupResult {
    pub value: f64,
    pub witness: Tree,
    pub sign: Sign,
}

/// Heaviest prefix-closed vertex set for per-vertex weights `w`.
///
/// Returns the total (0 for the empty set) and the membership vector. A child
/// is kept iff its subtree value is strictly positive, so among equally heavy
/// sets the smallest canonical one is returned.
pub fn max_weight_rooted_subtree(layout: &Layout, w: &[f64]) -> (f64, Vec<bool>) {
    let best = subtree_values(layout, w);
    let mut keep = vec![false; layout.len()];
    if layout.is_empty() || best[0] <= 0.0 {
        return (0.0, keep);
    }
    keep[0] = true;
    for i in 0..layout.len() {
        if keep[i] {
            for c in layout.children(i) {
                keep[c] = best[c] > 0.0;
            }
        }
    }
    (best[0], keep)
}

// f(v) = w_v + sum over children of max(0, f(child)), children after parents
fn subtree_values(layout: &Layout, w: &[f64]) -> Vec<f64> {
    let mut best = w.to_vec();
    for i in (0..layout.len()).rev() {
        let gain: f64 = layout.children(i).map(|c| best[c].max(0.0)).sum();
        best[i] += gain;
    }
    best
}

fn max_weight_value(layout: &Layout, w: &[f64]) -> f64 {
    if layout.is_empty() {
        return 0.0;
    }
    subtree_values(layout, w)[0].max(0.0)
}

// phi * delta per vertex and the constant C
fn signed_weights(phi: &[f64], deltas: &[f64]) -> (Vec<f64>, f64) {
    let pd: Vec<f64> = phi.iter().zip(deltas).map(|(f, d)| f * d).collect();
    let c = compensated_sum(pd.iter().copied());
    (pd, c)
}

/// Value and winning side of the sup, without building the witness.
pub(crate) fn sup_value(layout: &Layout, phi: &[f64], deltas: &[f64]) -> f64 {
    let (pd, c) = signed_weights(phi, deltas);
    let neg: Vec<f64> = pd.iter().map(|x| -x).collect();
    let upper = c + 2.0 * max_weight_value(layout, &neg);
    let lower = -c + 2.0 * max_weight_value(layout, &pd);
    upper.max(lower).max(0.0)
}

/// Exact `sup_y |sum_v phi(v) delta_v (1 - 2 y(v))|` over trees of depth at
/// most the cap, with a witness. Linear in the number of vertices.
pub fn sup_deviation(delta: &DeltaProfile, params: &MetricParams) -> Result<SupResult> {
    params.layout().check_same(&delta.layout)?;
    let layout = &delta.layout;
    let phi = params.vertex_weights(layout)?;
    let (pd, c) = signed_weights(&phi, &delta.deltas);
    let neg: Vec<f64> = pd.iter().map(|x| -x).collect();
    let (pos_mws, pos_keep) = max_weight_rooted_subtree(layout, &neg);
    let (neg_mws, neg_keep) = max_weight_rooted_subtree(layout, &pd);
    let upper = c + 2.0 * pos_mws;
    let lower = -c + 2.0 * neg_mws;
    let (keep, sign) = if prefers_positive(upper, lower) {
        (pos_keep, Sign::Positive)
    } else {
        (neg_keep, Sign::Negative)
    };
    Ok(SupResult {
        value: upper.max(lower).max(0.0),
        witness: Tree::from_indicator(layout, &keep),
        sign,
    })
}

// The two sides are computed by different sums, so an exact tie can come out
// a few ulps apart. Such ties pick the positive witness; the reported value
// stays the exact maximum so that negating delta leaves it unchanged.
fn prefers_positive(upper: f64, lower: f64) -> bool {
    upper >= lower - SIDE_TIE_TOLERANCE * upper.abs().max(lower.abs()).max(1.0)
}

const SIDE_TIE_TOLERANCE: f64 = 1e-12;

/// `D(y) = sum_v phi(v) delta_v (1 - 2 y(v))`.
pub fn deviation_at(y: &Tree, delta: &DeltaProfile, params: &MetricParams) -> Result<f64> {
    params.layout().check_same(&delta.layout)?;
    let phi = params.vertex_weights(&delta.layout)?;
    let present = y.indicator(&delta.layout)?;
    Ok(compensated_sum(
        phi.iter()
            .zip(&delta.deltas)
            .zip(&present)
            .map(|((f, d), &b)| f * d * if b { -1.0 } else { 1.0 }),
    ))
}

/// The same supremum by evaluating every tree of depth at most the cap.
pub fn brute_force_sup(delta: &DeltaProfile, params: &MetricParams) -> Result<SupResult> {
    params.layout().check_same(&delta.layout)?;
    let trees = enumerate_trees(params.m(), params.depth_cap())?;
    let mut best_pos: Option<(f64, &Tree)> = None;
    let mut best_neg: Option<(f64, &Tree)> = None;
    for y in &trees {
        let d = deviation_at(y, delta, params)?;
        if best_pos.is_none_or(|(b, _)| d > b) {
            best_pos = Some((d, y));
        }
        if best_neg.is_none_or(|(b, _)| -d > b) {
            best_neg = Some((-d, y));
        }
    }
    // the empty tree is always enumerated
    let (pv, pt) = best_pos.expect("non-empty enumeration");
    let (nv, nt) = best_neg.expect("non-empty enumeration");
    let (witness, sign) = if prefers_positive(pv, nv) {
        (pt.clone(), Sign::Positive)
    } else {
        (nt.clone(), Sign::Negative)
    };
    Ok(SupResult {
        value: pv.max(nv).max(0.0),
        witness,
        sign,
    })
}

/// Vertex frequencies of the sample through generation `depth`.
pub fn empirical_marginals(sample: &TreeSample, depth: usize) -> Result<MarginalProfile> {
    sample.require_nonempty()?;
    let layout = Layout::new(sample.m(), depth)?;
    let counts = vertex_counts(sample, &layout)?;
    Ok(MarginalProfile::new_unchecked(
        layout,
        frequencies(&counts, sample.len()),
    ))
}

pub(crate) fn vertex_counts(sample: &TreeSample, layout: &Layout) -> Result<Vec<u32>> {
    let mut counts = vec![0u32; layout.len()];
    for t in sample.iter() {
        check_same_arity(layout.m(), t.m())?;
        t.check_depth(layout.depth())?;
        for v in t.vertices() {
            counts[layout.index_of(v).expect("checked depth and arity")] += 1;
        }
    }
    Ok(counts)
}

pub(crate) fn frequencies(counts: &[u32], n: usize) -> Vec<f64> {
    let n = n as f64;
    counts.iter().map(|&c| c as f64 / n).collect()
}

/// `sqrt(n)` times the sup-deviation between a sample and a null profile,
/// with the witness.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledSup {
    pub scale: f64,
    pub sup: SupResult,
}

impl ScaledSup {
    pub fn statistic(&self) -> f64 {
        self.scale * self.sup.value
    }
}

pub fn one_sample_sup(
    sample: &TreeSample,
    null_profile: &MarginalProfile,
    params: &MetricParams,
) -> Result<ScaledSup> {
    params.check_profile(null_profile)?;
    let observed = empirical_marginals(sample, params.depth_cap())?;
    let delta = DeltaProfile::between(&observed, null_profile)?;
    Ok(ScaledSup {
        scale: (sample.len() as f64).sqrt(),
        sup: sup_deviation(&delta, params)?,
    })
}

/// `sqrt(n) * sup_y |g_n(y) - g_0(y)|`.
pub fn one_sample_statistic(
    sample: &TreeSample,
    null_profile: &MarginalProfile,
    params: &MetricParams,
) -> Result<f64> {
    Ok(one_sample_sup(sample, null_profile, params)?.statistic())
}

/// Normalization of the two-sample statistic: `sqrt(2 n n' / (n + n'))`,
/// which is `sqrt(n)` when both samples have size `n`.
pub fn two_sample_scale(n1: usize, n2: usize) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    (2.0 * a * b / (a + b)).sqrt()
}

pub fn two_sample_sup(
    sample1: &TreeSample,
    sample2: &TreeSample,
    params: &MetricParams,
) -> Result<ScaledSup> {
    check_same_arity(sample1.m(), sample2.m())?;
    let k = params.depth_cap();
    let p1 = empirical_marginals(sample1, k)?;
    let p2 = empirical_marginals(sample2, k)?;
    let delta = DeltaProfile::between(&p1, &p2)?;
    Ok(ScaledSup {
        scale: two_sample_scale(sample1.len(), sample2.len()),
        sup: sup_deviation(&delta, params)?,
    })
}

/// Scaled `sup_y |g_n(y) - g'_n(y)|` between two samples.
pub fn two_sample_statistic(
    sample1: &TreeSample,
    sample2: &TreeSample,
    params: &MetricParams,
) -> Result<f64> {
    Ok(two_sample_sup(sample1, sample2, params)?.statistic())
}

/// Total weight of all vertices deeper than `depth` for geometric weights:
/// `z (m z)^depth / (1 - m z)`. No tree-wise deviation can change by more
/// than this when deeper generations are included.
pub fn truncation_bound(params: &MetricParams, depth: usize) -> Result<f64> {
    let z = match params.rule() {
        WeightRule::Geometric { z } => *z,
        WeightRule::PerGeneration(_) => {
            return Err(Error::Unsupported(
                "truncation bound needs geometric weights".into(),
            ))
        }
    };
    let mz = params.m() as f64 * z;
    if mz >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "m z = {mz} >= 1: the weight series diverges"
        )));
    }
    Ok(z * mz.powi(depth as i32) / (1.0 - mz))
}
