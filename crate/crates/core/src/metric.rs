//! Weighted-L1 distances on tree space and the expected-distance functionals.
//!
//! A weight `phi(k) > 0` is attached to every vertex of generation `k`, and
//! the distance between two trees is the total weight of the vertices
//! present in exactly one of them. Linearity of expectation turns the mean
//! distance to a random tree into a sum over vertex marginals:
//!
//! ```text
//! g(y) = sum_v phi(v) * [ y(v) (1 - p_v) + (1 - y(v)) p_v ]
//! ```

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::numeric::compensated_sum;
use crate::sampling::MarginalProfile;
use crate::tree::{check_arity, check_same_arity, Tree, TreeSample};

#[derive(Clone, Debug, PartialEq)]
pub enum WeightRule {
    /// `phi(k) = z^k`.
    Geometric { z: f64 },
    /// `phi(k) = weights[k - 1]` for generations `1..=weights.len()`.
    PerGeneration(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricParams {
    m: usize,
    rule: WeightRule,
    depth_cap: usize,
    clt_safe: bool,
}

/// `m^(-3/2)`, the largest geometric ratio (exclusive) covered by the
/// functional central limit theorem.
pub fn clt_z_bound(m: usize) -> f64 {
    (m as f64).powf(-1.5)
}

impl MetricParams {
    /// Geometric weights with `0 < z < m^(-3/2)`.
    pub fn geometric(m: usize, z: f64, depth_cap: usize) -> Result<Self> {
        let p = Self::geometric_relaxed(m, z, depth_cap)?;
        if !p.clt_safe {
            return Err(Error::CltUnsafe {
                z,
                bound: clt_z_bound(m),
            });
        }
        Ok(p)
    }

    /// Geometric weights with only `0 < z < 1` required. Instances with
    /// `z >= m^(-3/2)` are flagged and refused by the inference routines.
    pub fn geometric_relaxed(m: usize, z: f64, depth_cap: usize) -> Result<Self> {
        check_arity(m)?;
        check_depth_cap(depth_cap)?;
        if !(z > 0.0 && z < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "geometric ratio z = {z} must lie in (0, 1)"
            )));
        }
        Ok(MetricParams {
            m,
            rule: WeightRule::Geometric { z },
            depth_cap,
            clt_safe: z < clt_z_bound(m),
        })
    }

    /// One positive weight per generation; the depth cap is the table length.
    pub fn per_generation(m: usize, weights: Vec<f64>) -> Result<Self> {
        check_arity(m)?;
        check_depth_cap(weights.len())?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "generation weights must be positive and finite, got {w}"
            )));
        }
        Ok(MetricParams {
            m,
            depth_cap: weights.len(),
            rule: WeightRule::PerGeneration(weights),
            clt_safe: false,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    pub fn rule(&self) -> &WeightRule {
        &self.rule
    }

    /// The geometric ratio, if any.
    pub fn z(&self) -> Option<f64> {
        match self.rule {
            WeightRule::Geometric { z } => Some(z),
            WeightRule::PerGeneration(_) => None,
        }
    }

    pub fn is_clt_safe(&self) -> bool {
        self.clt_safe
    }

    /// Errors unless these are geometric weights inside the CLT range.
    pub fn require_clt_safe(&self) -> Result<f64> {
        match self.rule {
            WeightRule::Geometric { z } if self.clt_safe => Ok(z),
            WeightRule::Geometric { z } => Err(Error::CltUnsafe {
                z,
                bound: clt_z_bound(self.m),
            }),
            WeightRule::PerGeneration(_) => Err(Error::Unsupported(
                "inference needs geometric weights z^gen(v)".into(),
            )),
        }
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.m, self.depth_cap).expect("validated at construction")
    }

    pub fn phi(&self, generation: usize) -> Result<f64> {
        match &self.rule {
            WeightRule::Geometric { z } if generation >= 1 => Ok(z.powi(generation as i32)),
            WeightRule::PerGeneration(w) if (1..=w.len()).contains(&generation) => {
                Ok(w[generation - 1])
            }
            WeightRule::Geometric { .. } => Err(Error::GenerationOutOfRange {
                generation,
                len: usize::MAX,
            }),
            WeightRule::PerGeneration(w) => Err(Error::GenerationOutOfRange {
                generation,
                len: w.len(),
            }),
        }
    }

    /// `phi` of every vertex of `layout`, in layout order.
    pub fn vertex_weights(&self, layout: &Layout) -> Result<Vec<f64>> {
        check_same_arity(self.m, layout.m())?;
        let mut out = Vec::with_capacity(layout.len());
        for k in 1..=layout.depth() {
            let w = self.phi(k)?;
            out.extend(layout.generation_range(k).map(|_| w));
        }
        Ok(out)
    }

    /// Total weight of generation `k`: `m^(k-1) * phi(k)`.
    pub fn generation_mass(&self, k: usize) -> Result<f64> {
        Ok((self.m as f64).powi(k as i32 - 1) * self.phi(k)?)
    }

    pub(crate) fn check_tree(&self, t: &Tree) -> Result<()> {
        check_same_arity(self.m, t.m())?;
        t.check_depth(self.depth_cap)
    }

    pub(crate) fn check_profile(&self, profile: &MarginalProfile) -> Result<()> {
        check_same_arity(self.m, profile.m())?;
        if profile.depth() != self.depth_cap {
            return Err(Error::DepthMismatch {
                expected: self.depth_cap,
                found: profile.depth(),
            });
        }
        Ok(())
    }
}

fn check_depth_cap(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidParameter("depth cap must be positive".into()))
    } else {
        Ok(())
    }
}

/// Total weight of the vertices present in exactly one of `x`, `y`.
pub fn distance(x: &Tree, y: &Tree, params: &MetricParams) -> Result<f64> {
    check_same_arity(x.m(), y.m())?;
    params.check_tree(x)?;
    params.check_tree(y)?;
    let mut total = 0.0;
    for v in x.symmetric_difference(y) {
        total += params.phi(v.generation())?;
    }
    Ok(total)
}

/// `exp(-k)` where `k` is the last generation through which `x` and `y`
/// agree; 0 for equal trees.
pub fn distance_otter_neveu(x: &Tree, y: &Tree) -> Result<f64> {
    check_same_arity(x.m(), y.m())?;
    let first_disagreement = x.symmetric_difference(y).map(|v| v.generation()).min();
    Ok(match first_disagreement {
        None => 0.0,
        Some(g) => (-((g - 1) as f64)).exp(),
    })
}

/// Mean distance from `y` to a random tree with vertex marginals `profile`.
pub fn g_from_marginals(y: &Tree, profile: &MarginalProfile, params: &MetricParams) -> Result<f64> {
    params.check_profile(profile)?;
    params.check_tree(y)?;
    let layout = profile.layout();
    let phi = params.vertex_weights(layout)?;
    let present = y.indicator(layout)?;
    Ok(g_dense(&phi, profile.probs(), &present))
}

pub(crate) fn g_dense(phi: &[f64], probs: &[f64], present: &[bool]) -> f64 {
    compensated_sum(
        phi.iter()
            .zip(probs)
            .zip(present)
            .map(|((w, p), &y)| w * if y { 1.0 - p } else { *p }),
    )
}

/// `(1/n) * sum_i d(T_i, y)^p` over the sample.
pub fn g_empirical(y: &Tree, sample: &TreeSample, params: &MetricParams, p: f64) -> Result<f64> {
    check_exponent(p)?;
    sample.require_nonempty()?;
    let mut total = 0.0;
    for t in sample.iter() {
        total += pow_distance(distance(t, y, params)?, p);
    }
    Ok(total / sample.len() as f64)
}

pub(crate) fn pow_distance(d: f64, p: f64) -> f64 {
    if p == 1.0 {
        d
    } else {
        d.powf(p)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "exponent p = {p} must be >= 1"
        )))
    }
}

/// Either a law given by its vertex marginals or an observed sample.
#[derive(Clone, Debug)]
pub enum ExpectedDistanceInput {
    Marginals(MarginalProfile),
    Sample(TreeSample),
}

/// `E d(T, y)^p` for the given input.
///
/// Marginals only determine the law of `d(T, y)` when `p = 1` or when the
/// profile is a point mass (all probabilities 0 or 1); other exponents are
/// refused for non-degenerate profiles.
pub fn expected_distance(
    y: &Tree,
    input: &ExpectedDistanceInput,
    params: &MetricParams,
    p: f64,
) -> Result<f64> {
    check_exponent(p)?;
    match input {
        ExpectedDistanceInput::Sample(s) => g_empirical(y, s, params, p),
        ExpectedDistanceInput::Marginals(profile) => {
            let g = g_from_marginals(y, profile, params)?;
            if p == 1.0 {
                Ok(g)
            } else if profile.is_degenerate() {
                Ok(pow_distance(g, p))
            } else {
                Err(Error::Unsupported(
                    "exponent p > 1 needs a sample or a point-mass profile".into(),
                ))
            }
        }
    }
}
