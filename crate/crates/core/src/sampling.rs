//! Galton–Watson-type random trees with exactly computable vertex marginals.
//!
//! Below a present vertex each child slot `a` is occupied with a fixed
//! conditional probability (independently per slot for [`Offspring::PerSlot`],
//! left-filled from a count law for [`Offspring::CountLeftFill`]), so the
//! marginal of a vertex is the root probability times the product of its slot
//! probabilities along the root path.

use rand::distributions::{Bernoulli, Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::metric::MetricParams;
use crate::numeric::compensated_sum;
use crate::tree::{check_arity, check_same_arity, Tree, Vertex};

const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Offspring {
    /// Slot `a` is occupied with probability `rho[a - 1]`, independently.
    PerSlot(Vec<f64>),
    /// `N ~ q` (q over 0..=m) children occupy slots `1..=N`.
    CountLeftFill(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GwModel {
    m: usize,
    root_prob: f64,
    offspring: Offspring,
}

fn check_prob(what: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{what} = {p} is not a probability"
        )))
    }
}

impl GwModel {
    pub fn per_slot(root_prob: f64, rho: Vec<f64>) -> Result<Self> {
        check_arity(rho.len())?;
        check_prob("root probability", root_prob)?;
        for &r in &rho {
            check_prob("slot probability", r)?;
        }
        Ok(GwModel {
            m: rho.len(),
            root_prob,
            offspring: Offspring::PerSlot(rho),
        })
    }

    pub fn count_left_fill(root_prob: f64, q: Vec<f64>) -> Result<Self> {
        if q.len() < 2 {
            return Err(Error::InvalidParameter(
                "offspring law needs masses q_0..q_m with m >= 1".into(),
            ));
        }
        check_arity(q.len() - 1)?;
        check_prob("root probability", root_prob)?;
        for &x in &q {
            check_prob("offspring mass", x)?;
        }
        let total = compensated_sum(q.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "offspring masses sum to {total}, not 1"
            )));
        }
        Ok(GwModel {
            m: q.len() - 1,
            root_prob,
            offspring: Offspring::CountLeftFill(q),
        })
    }

    /// Site percolation with density `rho` on the full m-ary tree, keeping
    /// the cluster of the root.
    pub fn percolation(m: usize, rho: f64) -> Result<Self> {
        GwModel::per_slot(rho, vec![rho; m])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn root_prob(&self) -> f64 {
        self.root_prob
    }

    pub fn offspring(&self) -> &Offspring {
        &self.offspring
    }

    pub fn is_per_slot(&self) -> bool {
        matches!(self.offspring, Offspring::PerSlot(_))
    }

    /// P(slot `a` occupied | mother present), for `a = 1..=m`.
    pub fn slot_probs(&self) -> Vec<f64> {
        match &self.offspring {
            Offspring::PerSlot(rho) => rho.clone(),
            Offspring::CountLeftFill(q) => (1..=self.m)
                .map(|a| compensated_sum(q[a..].iter().copied()).min(1.0))
                .collect(),
        }
    }

    /// Short description, e.g. `perslot:0.6,0.6 root-prob=1`.
    pub fn describe(&self) -> String {
        let (kind, xs) = match &self.offspring {
            Offspring::PerSlot(r) => ("perslot", r),
            Offspring::CountLeftFill(q) => ("countfill", q),
        };
        let list: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
        format!("{kind}:{} root-prob={}", list.join(","), self.root_prob)
    }

    fn require_per_slot(&self) -> Result<&[f64]> {
        match &self.offspring {
            Offspring::PerSlot(rho) => Ok(rho),
            Offspring::CountLeftFill(_) => Err(Error::UnsupportedModel(
                "joint presence needs independent slots (perslot model)".into(),
            )),
        }
    }
}

/// Vertex presence probabilities up to a fixed depth, in [`Layout`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalProfile {
    layout: Layout,
    probs: Vec<f64>,
}

impl MarginalProfile {
    /// Checks range and monotonicity along edges.
    pub fn new(layout: Layout, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != layout.len() {
            return Err(Error::InvalidParameter(format!(
                "profile has {} entries, layout needs {}",
                probs.len(),
                layout.len()
            )));
        }
        for (i, &p) in probs.iter().enumerate() {
            check_prob(&format!("marginal of {}", layout.vertex(i)), p)?;
            if let Some(parent) = layout.parent(i) {
                if p > probs[parent] {
                    return Err(Error::InvalidParameter(format!(
                        "marginal of {} exceeds that of its mother",
                        layout.vertex(i)
                    )));
                }
            }
        }
        Ok(MarginalProfile { layout, probs })
    }

    pub(crate) fn new_unchecked(layout: Layout, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), layout.len());
        MarginalProfile { layout, probs }
    }

    /// Marginals of the law concentrated on `tree`.
    pub fn point_mass(tree: &Tree, depth: usize) -> Result<Self> {
        let layout = Layout::new(tree.m(), depth)?;
        let probs = tree
            .indicator(&layout)?
            .into_iter()
            .map(|b| if b { 1.0 } else { 0.0 })
            .collect();
        Ok(MarginalProfile { layout, probs })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn m(&self) -> usize {
        self.layout.m()
    }

    pub fn depth(&self) -> usize {
        self.layout.depth()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal of `v`; `None` beyond the profile depth or arity.
    pub fn get(&self, v: &Vertex) -> Option<f64> {
        self.layout.index_of(v).map(|i| self.probs[i])
    }

    /// All marginals are 0 or 1, i.e. the law is a point mass.
    pub fn is_degenerate(&self) -> bool {
        self.probs.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vertex, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.layout.vertex(i), p))
    }
}

/// Exact vertex marginals of `model` through generation `depth`.
pub fn marginal_profile(model: &GwModel, depth: usize) -> Result<MarginalProfile> {
    let layout = Layout::new(model.m, depth)?;
    let slot = model.slot_probs();
    let mut probs = vec![0.0; layout.len()];
    if depth > 0 {
        probs[0] = model.root_prob;
    }
    for i in 0..layout.len() {
        for (a, c) in layout.children(i).enumerate() {
            probs[c] = probs[i] * slot[a];
        }
    }
    Ok(MarginalProfile::new_unchecked(layout, probs))
}

/// P(u and v both present). Only defined for independent-slot models.
pub fn joint_presence(model: &GwModel, u: &Vertex, v: &Vertex) -> Result<f64> {
    let rho = model.require_per_slot()?;
    u.check_arity(model.m)?;
    v.check_arity(model.m)?;
    let (lu, lv) = (u.labels(), v.labels());
    let common = lu.iter().zip(lv).take_while(|(a, b)| a == b).count();
    let mut p = model.root_prob;
    // the union of both root paths: shared edges once, then each tail
    for &a in lu[1..].iter().chain(&lv[common..]) {
        p *= rho[a as usize - 1];
    }
    Ok(p)
}

/// `Cov(d(T, s), d(T, t))` over the vertices of generation at most the depth
/// cap, using `|T(u) - s(u)| = s(u) + (1 - 2 s(u)) T(u)`.
pub fn exact_cov(model: &GwModel, s: &Tree, t: &Tree, params: &MetricParams) -> Result<f64> {
    model.require_per_slot()?;
    check_same_arity(model.m, params.m())?;
    params.check_tree(s)?;
    params.check_tree(t)?;
    let layout = params.layout();
    let phi = params.vertex_weights(&layout)?;
    let sign_s: Vec<f64> = sign_vector(&s.indicator(&layout)?);
    let sign_t: Vec<f64> = sign_vector(&t.indicator(&layout)?);
    let marg = marginal_profile(model, layout.depth())?;
    let p = marg.probs();
    let vertices: Vec<Vertex> = layout.vertices().collect();
    let mut terms = Vec::with_capacity(layout.len() * layout.len());
    for (i, u) in vertices.iter().enumerate() {
        for (j, v) in vertices.iter().enumerate() {
            let cov = joint_presence(model, u, v)? - p[i] * p[j];
            terms.push(phi[i] * phi[j] * sign_s[i] * sign_t[j] * cov);
        }
    }
    Ok(compensated_sum(terms))
}

fn sign_vector(present: &[bool]) -> Vec<f64> {
    present
        .iter()
        .map(|&b| if b { -1.0 } else { 1.0 })
        .collect()
}

/// Per-replicate random streams derived from one master seed.
///
/// Stream `i` is ChaCha8 keyed by the master seed with stream id `i`, so it
/// depends only on `(seed, i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngSpec {
    pub seed: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        RngSpec { seed }
    }

    pub fn stream(&self, i: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i);
        rng
    }

    /// A child spec for an independent sub-computation labelled `label`.
    pub fn derive(&self, label: u64) -> RngSpec {
        RngSpec {
            seed: splitmix64(self.seed ^ splitmix64(label.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Draws trees of a model directly into presence vectors.
#[derive(Clone, Debug)]
pub struct TreeSampler {
    layout: Layout,
    root: Bernoulli,
    children: ChildRule,
}

#[derive(Clone, Debug)]
enum ChildRule {
    Slots(Vec<Bernoulli>),
    Count(WeightedIndex<f64>),
    // q concentrated on a single count; WeightedIndex refuses all-zero tails
    FixedCount(usize),
}

impl TreeSampler {
    pub fn new(model: &GwModel, depth: usize) -> Result<Self> {
        let layout = Layout::new(model.m, depth)?;
        let bern = |p: f64| Bernoulli::new(p).map_err(|e| Error::InvalidParameter(e.to_string()));
        let children = match &model.offspring {
            Offspring::PerSlot(rho) => {
                ChildRule::Slots(rho.iter().map(|&r| bern(r)).collect::<Result<_>>()?)
            }
            Offspring::CountLeftFill(q) => match q.iter().position(|&x| x == 1.0) {
                Some(k) => ChildRule::FixedCount(k),
                None => ChildRule::Count(
                    WeightedIndex::new(q).map_err(|e| Error::InvalidParameter(e.to_string()))?,
                ),
            },
        };
        Ok(TreeSampler {
            layout,
            root: bern(model.root_prob)?,
            children,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Overwrites `present` with a fresh draw (layout order).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, present: &mut [bool]) {
        debug_assert_eq!(present.len(), self.layout.len());
        present.fill(false);
        if present.is_empty() || !self.root.sample(rng) {
            return;
        }
        present[0] = true;
        for i in 0..present.len() {
            if !present[i] {
                continue;
            }
            let kids = self.layout.children(i);
            if kids.is_empty() {
                // layout order: everything from here on is in the last generation
                break;
            }
            match &self.children {
                ChildRule::Slots(slots) => {
                    for (c, slot) in kids.zip(slots) {
                        present[c] = slot.sample(rng);
                    }
                }
                ChildRule::Count(law) => {
                    let n = law.sample(rng);
                    present[kids.start..kids.start + n].fill(true);
                }
                ChildRule::FixedCount(n) => {
                    present[kids.start..kids.start + n].fill(true);
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Tree {
        let mut present = vec![false; self.layout.len()];
        self.sample_into(rng, &mut present);
        Tree::from_indicator(&self.layout, &present)
    }

    /// Adds one to `counts[v]` for every present vertex of each of `n` draws.
    pub fn accumulate_counts<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        counts: &mut [u32],
        scratch: &mut [bool],
    ) {
        for _ in 0..n {
            self.sample_into(rng, scratch);
            for (c, &p) in counts.iter_mut().zip(scratch.iter()) {
                *c += p as u32;
            }
        }
    }
}

/// One random tree of depth at most `depth`.
pub fn sample_tree<R: Rng + ?Sized>(model: &GwModel, depth: usize, rng: &mut R) -> Result<Tree> {
    Ok(TreeSampler::new(model, depth)?.sample(rng))
}
