//! Dense breadth-first indexing of the full m-ary tree truncated at depth K.
//!
//! Generation `k` occupies the contiguous index block
//! `offset(k)..offset(k) + m^(k-1)`, and the children of a vertex are
//! contiguous in the next block. Every per-vertex quantity in the crate
//! (marginals, deltas, weights, indicators) is a `Vec` in this order, so a
//! parent always precedes its children.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::tree::{check_arity, Vertex};

/// Upper limit on the number of indexed vertices.
pub const MAX_VERTICES: usize = 1 << 26;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    m: usize,
    depth: usize,
    // offsets[k] is the index of the first vertex of generation k + 1
    offsets: Vec<usize>,
}

impl Layout {
    pub fn new(m: usize, depth: usize) -> Result<Self> {
        check_arity(m)?;
        let mut offsets = Vec::with_capacity(depth + 1);
        offsets.push(0);
        let mut width = 1usize;
        let mut total = 0usize;
        for _ in 0..depth {
            total = total
                .checked_add(width)
                .filter(|&t| t <= MAX_VERTICES)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "m = {m}, depth = {depth} indexes more than {MAX_VERTICES} vertices"
                    ))
                })?;
            offsets.push(total);
            width = width.saturating_mul(m);
        }
        Ok(Layout { m, depth, offsets })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of vertices of generation at most `depth`.
    pub fn len(&self) -> usize {
        self.offsets[self.depth]
    }

    pub fn is_empty(&self) -> bool {
        self.depth == 0
    }

    /// Index block of generation `k` (1-based); empty when `k` is out of range.
    pub fn generation_range(&self, k: usize) -> Range<usize> {
        if k == 0 || k > self.depth {
            return 0..0;
        }
        self.offsets[k - 1]..self.offsets[k]
    }

    pub fn generation(&self, idx: usize) -> usize {
        debug_assert!(idx < self.len());
        self.offsets.partition_point(|&o| o <= idx)
    }

    pub fn parent(&self, idx: usize) -> Option<usize> {
        let g = self.generation(idx);
        if g <= 1 {
            return None;
        }
        let pos = idx - self.offsets[g - 1];
        Some(self.offsets[g - 2] + pos / self.m)
    }

    /// Indices of the children of `idx`, empty at the last generation.
    pub fn children(&self, idx: usize) -> Range<usize> {
        let g = self.generation(idx);
        if g >= self.depth {
            return 0..0;
        }
        let pos = idx - self.offsets[g - 1];
        let first = self.offsets[g] + pos * self.m;
        first..first + self.m
    }

    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        let g = v.generation();
        if g > self.depth {
            return None;
        }
        let mut pos = 0usize;
        for &a in &v.labels()[1..] {
            let a = a as usize;
            if a > self.m {
                return None;
            }
            pos = pos * self.m + (a - 1);
        }
        Some(self.offsets[g - 1] + pos)
    }

    pub fn vertex(&self, idx: usize) -> Vertex {
        let g = self.generation(idx);
        let mut pos = idx - self.offsets[g - 1];
        let mut labels = vec![1u8; g];
        for slot in labels[1..].iter_mut().rev() {
            *slot = (pos % self.m) as u8 + 1;
            pos /= self.m;
        }
        Vertex::from_labels_unchecked(labels)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.len()).map(move |i| self.vertex(i))
    }

    pub fn check_same(&self, other: &Layout) -> Result<()> {
        if self.m != other.m {
            return Err(Error::ArityMismatch {
                left: self.m,
                right: other.m,
            });
        }
        if self.depth != other.depth {
            return Err(Error::DepthMismatch {
                expected: self.depth,
                found: other.depth,
            });
        }
        Ok(())
    }
}
