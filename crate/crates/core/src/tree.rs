//! Vertices of the full m-ary tree and finite prefix-closed trees.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::layout::Layout;

/// Largest supported arity.
pub const MAX_ARITY: usize = 99;

/// Largest number of trees [`enumerate_trees`] will materialize.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

pub(crate) fn check_arity(m: usize) -> Result<()> {
    if (1..=MAX_ARITY).contains(&m) {
        Ok(())
    } else {
        Err(Error::InvalidArity(m))
    }
}

pub(crate) fn check_same_arity(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::ArityMismatch { left, right })
    }
}

/// A vertex of the full tree: a label sequence starting at the root `1`.
///
/// Ordering is lexicographic on the labels, so a vertex sorts right before
/// its own descendants.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex(Vec<u8>);

impl Vertex {
    pub fn new(labels: impl Into<Vec<u8>>) -> Result<Self> {
        let labels = labels.into();
        if labels.first() != Some(&1) {
            return Err(Error::NotRooted);
        }
        if let Some(&bad) = labels.iter().find(|&&a| a == 0) {
            return Err(Error::ArityViolation {
                label: bad as usize,
                m: MAX_ARITY,
            });
        }
        Ok(Vertex(labels))
    }

    /// Paper-style compact notation, one digit per label (`"121"`); only
    /// meaningful for m <= 9.
    pub fn from_digits(s: &str) -> Result<Self> {
        let labels = s
            .chars()
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::InvalidParameter(format!("not a digit: {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Vertex::new(labels)
    }

    pub(crate) fn from_labels_unchecked(labels: Vec<u8>) -> Self {
        debug_assert!(labels.first() == Some(&1));
        Vertex(labels)
    }

    pub fn root() -> Self {
        Vertex(vec![1])
    }

    pub fn labels(&self) -> &[u8] {
        &self.0
    }

    pub fn generation(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.len() == 1
    }

    pub fn mother(&self) -> Option<Vertex> {
        if self.is_root() {
            None
        } else {
            Some(Vertex(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, a: u8) -> Vertex {
        debug_assert!(a >= 1);
        let mut labels = self.0.clone();
        labels.push(a);
        Vertex(labels)
    }

    /// True when `self` is `other` or one of its ancestors.
    pub fn is_prefix_of(&self, other: &Vertex) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Every prefix of this vertex, root first, ending with the vertex itself.
    pub fn ancestry(&self) -> impl Iterator<Item = Vertex> + '_ {
        (1..=self.0.len()).map(move |k| Vertex(self.0[..k].to_vec()))
    }

    pub fn check_arity(&self, m: usize) -> Result<()> {
        match self.0.iter().find(|&&a| a as usize > m) {
            Some(&a) => Err(Error::ArityViolation {
                label: a as usize,
                m,
            }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A finite tree: a prefix-closed set of vertices of the full m-ary tree.
///
/// Trees are immutable once built. Every constructor enforces closure and
/// arity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tree {
    m: usize,
    vertices: BTreeSet<Vertex>,
}

impl Tree {
    pub fn empty(m: usize) -> Result<Self> {
        check_arity(m)?;
        Ok(Tree {
            m,
            vertices: BTreeSet::new(),
        })
    }

    /// The tree containing every vertex of generation at most `depth`.
    pub fn full(m: usize, depth: usize) -> Result<Self> {
        let layout = Layout::new(m, depth)?;
        Ok(Tree {
            m,
            vertices: layout.vertices().collect(),
        })
    }

    /// Smallest tree containing all `terminals`.
    pub fn from_terminals<I>(m: usize, terminals: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vertex>,
    {
        check_arity(m)?;
        let mut vertices = BTreeSet::new();
        for t in terminals {
            t.check_arity(m)?;
            if vertices.contains(&t) {
                continue;
            }
            vertices.extend(t.ancestry());
        }
        Ok(Tree { m, vertices })
    }

    /// Accepts `vertices` only if they already form a tree.
    pub fn validate<I>(m: usize, vertices: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vertex>,
    {
        check_arity(m)?;
        let vertices: BTreeSet<Vertex> = vertices.into_iter().collect();
        for v in &vertices {
            v.check_arity(m)?;
        }
        for v in &vertices {
            if let Some(mother) = v.mother() {
                if !vertices.contains(&mother) {
                    return Err(Error::OrphanVertex(v.clone()));
                }
            }
        }
        Ok(Tree { m, vertices })
    }

    /// Builds a tree from a presence vector in `layout` order. Presence must
    /// already be closed under taking mothers.
    pub fn from_indicator(layout: &Layout, present: &[bool]) -> Self {
        debug_assert_eq!(present.len(), layout.len());
        let vertices = present
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(i, _)| {
                debug_assert!(layout.parent(i).is_none_or(|p| present[p]));
                layout.vertex(i)
            })
            .collect();
        Tree {
            m: layout.m(),
            vertices,
        }
    }

    /// Presence vector in `layout` order.
    pub fn indicator(&self, layout: &Layout) -> Result<Vec<bool>> {
        check_same_arity(self.m, layout.m())?;
        self.check_depth(layout.depth())?;
        let mut present = vec![false; layout.len()];
        for v in &self.vertices {
            // depth and arity were checked above
            present[layout.index_of(v).expect("vertex inside layout")] = true;
        }
        Ok(present)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.vertices.contains(v)
    }

    /// Vertices in canonical (lexicographic) order.
    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.vertices.iter()
    }

    /// Vertices with no child in the tree.
    pub fn terminals(&self) -> Vec<Vertex> {
        // In lexicographic order a vertex with a child is immediately
        // followed by one of its descendants.
        let mut out = Vec::new();
        let mut iter = self.vertices.iter().peekable();
        while let Some(v) = iter.next() {
            match iter.peek() {
                Some(next) if v.is_prefix_of(next) => {}
                _ => out.push(v.clone()),
            }
        }
        out
    }

    /// Largest generation present; 0 for the empty tree.
    pub fn depth(&self) -> usize {
        self.vertices
            .iter()
            .map(Vertex::generation)
            .max()
            .unwrap_or(0)
    }

    pub fn check_depth(&self, cap: usize) -> Result<()> {
        let depth = self.depth();
        if depth > cap {
            Err(Error::DepthExceedsCap { depth, cap })
        } else {
            Ok(())
        }
    }

    pub fn is_subtree_of(&self, other: &Tree) -> bool {
        self.m == other.m && self.vertices.is_subset(&other.vertices)
    }

    pub fn symmetric_difference<'a>(&'a self, other: &'a Tree) -> impl Iterator<Item = &'a Vertex> {
        self.vertices.symmetric_difference(&other.vertices)
    }
}

/// An ordered sample of trees sharing arity and a depth cap.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeSample {
    m: usize,
    depth_cap: usize,
    trees: Vec<Tree>,
}

impl TreeSample {
    pub fn new(m: usize, depth_cap: usize, trees: Vec<Tree>) -> Result<Self> {
        check_arity(m)?;
        if depth_cap == 0 {
            return Err(Error::InvalidParameter("depth cap must be positive".into()));
        }
        for t in &trees {
            check_same_arity(m, t.m())?;
            t.check_depth(depth_cap)?;
        }
        Ok(TreeSample {
            m,
            depth_cap,
            trees,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Tree> {
        self.trees.iter()
    }

    pub fn layout(&self) -> Result<Layout> {
        Layout::new(self.m, self.depth_cap)
    }

    pub(crate) fn require_nonempty(&self) -> Result<()> {
        if self.trees.is_empty() {
            Err(Error::EmptySample)
        } else {
            Ok(())
        }
    }
}

/// Number of trees of depth at most `depth` (empty tree included):
/// S(0) = 1, S(k) = 1 + S(k-1)^m. `None` once it exceeds `u128`.
pub fn count_trees(m: usize, depth: usize) -> Option<u128> {
    let mut s: u128 = 1;
    for _ in 0..depth {
        s = s.checked_pow(m as u32)?.checked_add(1)?;
    }
    Some(s)
}

/// Every tree of depth at most `depth`, once each, in canonical order.
pub fn enumerate_trees(m: usize, depth: usize) -> Result<Vec<Tree>> {
    check_arity(m)?;
    match count_trees(m, depth) {
        Some(c) if c <= ENUMERATION_LIMIT => {}
        Some(c) => return Err(Error::EnumerationTooLarge(c.to_string())),
        None => return Err(Error::EnumerationTooLarge("> 2^128".into())),
    }
    let mut trees: Vec<Tree> = rooted_vertex_sets(m, &Vertex::root(), depth)
        .into_iter()
        .map(|vs| Tree {
            m,
            vertices: vs.into_iter().collect(),
        })
        .collect();
    trees.sort();
    Ok(trees)
}

// All trees hanging from `v` (as vertex lists), including the empty one.
fn rooted_vertex_sets(m: usize, v: &Vertex, depth: usize) -> Vec<Vec<Vertex>> {
    let mut out = vec![Vec::new()];
    if depth == 0 {
        return out;
    }
    let mut partial: Vec<Vec<Vertex>> = vec![vec![v.clone()]];
    for a in 1..=m as u8 {
        let options = rooted_vertex_sets(m, &v.child(a), depth - 1);
        let mut next = Vec::with_capacity(partial.len() * options.len());
        for base in &partial {
            for opt in &options {
                let mut combined = base.clone();
                combined.extend(opt.iter().cloned());
                next.push(combined);
            }
        }
        partial = next;
    }
    out.extend(partial);
    out
}
