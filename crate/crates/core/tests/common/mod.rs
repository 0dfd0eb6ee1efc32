#![allow(dead_code)]

use proptest::prelude::*;
use treestat::{Layout, MetricParams, Tree, TreeSample};

/// Prefix-closes a raw presence pattern: a vertex survives only if its
/// parent does.
pub fn close(layout: &Layout, mut raw: Vec<bool>) -> Tree {
    for i in 0..layout.len() {
        if let Some(p) = layout.parent(i) {
            raw[i] &= raw[p];
        }
    }
    Tree::from_indicator(layout, &raw)
}

pub fn arb_tree(m: usize, depth: usize) -> impl Strategy<Value = Tree> {
    let layout = Layout::new(m, depth).unwrap();
    // a dense pattern, so deep trees actually appear
    proptest::collection::vec(prop::bool::weighted(0.75), layout.len())
        .prop_map(move |raw| close(&layout, raw))
}

pub fn arb_sample(m: usize, depth: usize, max_n: usize) -> impl Strategy<Value = TreeSample> {
    proptest::collection::vec(arb_tree(m, depth), 1..=max_n)
        .prop_map(move |trees| TreeSample::new(m, depth, trees).unwrap())
}

pub fn arb_deltas(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..=1.0, len)
}

pub fn geometric(m: usize, z: f64, depth: usize) -> MetricParams {
    MetricParams::geometric(m, z, depth).unwrap()
}
