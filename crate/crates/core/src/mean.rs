//! d-means: trees minimizing the (empirical) expected distance.
//!
//! For the weighted-L1 distance the objective separates over vertices, so the
//! minimizers are exactly the trees sandwiched between the vertices with
//! marginal above 1/2 and those with marginal at least 1/2 (majority rule).
//! Neither bound depends on the weights.

use crate::error::Result;
use crate::layout::Layout;
use crate::metric::{expected_distance, ExpectedDistanceInput, MetricParams};
use crate::sampling::MarginalProfile;
use crate::statistic::vertex_counts;
use crate::tree::{check_same_arity, enumerate_trees, Tree, TreeSample};

/// Absolute tolerance when collecting tied minimizers by enumeration.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// The set of minimizers `{t : lower ⊆ t ⊆ upper}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeanInterval {
    pub lower: Tree,
    pub upper: Tree,
}

impl MeanInterval {
    pub fn contains(&self, t: &Tree) -> bool {
        self.lower.is_subtree_of(t) && t.is_subtree_of(&self.upper)
    }

    pub fn is_unique(&self) -> bool {
        self.lower == self.upper
    }
}

fn threshold(
    layout: &Layout,
    lower: impl Fn(usize) -> bool,
    upper: impl Fn(usize) -> bool,
) -> MeanInterval {
    let lo: Vec<bool> = (0..layout.len()).map(&lower).collect();
    let hi: Vec<bool> = (0..layout.len()).map(&upper).collect();
    MeanInterval {
        lower: Tree::from_indicator(layout, &lo),
        upper: Tree::from_indicator(layout, &hi),
    }
}

/// Majority-rule mean of a sample (exponent 1).
pub fn empirical_mean(sample: &TreeSample, params: &MetricParams) -> Result<MeanInterval> {
    sample.require_nonempty()?;
    check_same_arity(sample.m(), params.m())?;
    let layout = params.layout();
    // compare integer counts with n/2 to avoid rounding at the tie
    let counts = vertex_counts(sample, &layout)?;
    let n = sample.len() as u64;
    Ok(threshold(
        &layout,
        |i| 2 * counts[i] as u64 > n,
        |i| 2 * counts[i] as u64 >= n,
    ))
}

/// Threshold rule at 1/2 on the marginals of a law.
pub fn mean_from_marginals(
    profile: &MarginalProfile,
    params: &MetricParams,
) -> Result<MeanInterval> {
    params.check_profile(profile)?;
    let p = profile.probs();
    Ok(threshold(profile.layout(), |i| p[i] > 0.5, |i| p[i] >= 0.5))
}

/// Every minimizer of `E d(T, y)^p` over trees of depth at most the cap,
/// found by enumeration.
pub fn brute_force_mean(
    input: &ExpectedDistanceInput,
    params: &MetricParams,
    p: f64,
) -> Result<Vec<Tree>> {
    let candidates = enumerate_trees(params.m(), params.depth_cap())?;
    let values = candidates
        .iter()
        .map(|y| expected_distance(y, input, params, p))
        .collect::<Result<Vec<f64>>>()?;
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(candidates
        .into_iter()
        .zip(values)
        .filter(|(_, g)| *g <= best + TIE_TOLERANCE)
        .map(|(t, _)| t)
        .collect())
}
