//! Statistical inference on random rooted trees.
//!
//! Trees are finite prefix-closed subsets of the full m-ary tree, compared
//! with weighted-L1 distances `d(x, y) = sum_v |x(v) - y(v)| phi(v)`. On top
//! of that the crate provides d-means (majority rule), Galton–Watson-type
//! generators with exact marginals and covariances, the sup-deviation
//! statistic `sqrt(n) sup_y |g_n(y) - g_0(y)|` computed exactly by a
//! max-weight rooted-subtree dynamic program, and Monte-Carlo / permutation
//! calibrated tests. Exhaustive enumeration routines are kept next to each
//! fast algorithm as oracles.

pub mod error;
pub mod inference;
pub mod io;
pub mod layout;
pub mod mean;
pub mod metric;
pub mod numeric;
pub mod sampling;
pub mod statistic;
pub mod tree;

pub use error::{Error, Result};
pub use inference::{
    clt_covariance_check, critical_value, p_value, simulate_null, test_one_sample, test_two_sample,
    Calibration, CltReport, NullDistribution, NullMeta, TestReport,
};
pub use layout::Layout;
pub use mean::{brute_force_mean, empirical_mean, mean_from_marginals, MeanInterval};
pub use metric::{
    distance, distance_otter_neveu, g_empirical, g_from_marginals, ExpectedDistanceInput,
    MetricParams, WeightRule,
};
pub use sampling::{
    exact_cov, joint_presence, marginal_profile, sample_tree, GwModel, MarginalProfile, Offspring,
    RngSpec, TreeSampler,
};
pub use statistic::{
    brute_force_sup, empirical_marginals, one_sample_statistic, sup_deviation, truncation_bound,
    two_sample_statistic, DeltaProfile, Sign, SupResult,
};
pub use tree::{enumerate_trees, Tree, TreeSample, Vertex};
