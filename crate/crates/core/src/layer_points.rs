//! Layer points, per-axis (slice) layer points, branch points, and the
//! retractions `m_i` / `m` from the Gamma poset onto layer points.
//!
//! On a step grid, `(s, S)` has a strictly smaller element with the same
//! cluster iff `S` is already a cluster one grid step down some axis, so
//! the global test only looks at immediate predecessors. Slice points are
//! computed from the actual slice clusterings and re-embedded, which keeps
//! the two routes independent.

use serde::Serialize;
use thiserror::Error;

use crate::gamma::{ElementId, GammaPoset};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayerPointError {
    #[error("branch points are defined for single-axis clusterings; this one has {0} axes")]
    MultiAxis(usize),
    #[error("axis order must be a permutation of 0..{0}")]
    BadOrder(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Layer,
    Branch,
}

/// Global points plus, for each axis `i`, the `i`-th-parameter points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerPointSet {
    pub kind: PointKind,
    /// Ascending element ids.
    pub global: Vec<ElementId>,
    /// `slices[i]`: ascending element ids of the axis-`i` points.
    pub slices: Vec<Vec<ElementId>>,
}

impl LayerPointSet {
    pub fn contains(&self, e: ElementId) -> bool {
        self.global.binary_search(&e).is_ok()
    }
}

/// True iff no strictly smaller element of `g` carries the same cluster.
pub fn is_global_layer_point(g: &GammaPoset, e: ElementId) -> bool {
    (0..g.dims()).all(|axis| g.down_same(e, axis).is_none())
}

pub fn global_layer_points(g: &GammaPoset) -> LayerPointSet {
    let global = (0..g.len()).filter(|&e| is_global_layer_point(g, e)).collect();
    let slices = (0..g.dims()).map(|axis| slice_layer_points(g, axis)).collect();
    LayerPointSet { kind: PointKind::Layer, global, slices }
}

/// Visits every slice along `axis`: `f(base_flat, stride, slice_gamma)`.
fn for_each_slice(g: &GammaPoset, axis: usize, mut f: impl FnMut(usize, usize, &GammaPoset)) {
    let h = g.source();
    let stride = if axis + 1 == h.dims() { 1 } else { h.flat(&unit(h.dims(), axis)) };
    for base in 0..h.cell_count() {
        if h.position(base, axis) != 0 {
            continue;
        }
        let slice = GammaPoset::new(h.slice_at(axis, &h.cell(base)));
        f(base, stride, &slice);
    }
}

fn unit(dims: usize, axis: usize) -> Vec<usize> {
    let mut v = vec![0; dims];
    v[axis] = 1;
    v
}

/// Re-embeds slice elements selected by `keep` into `g`.
fn embed_slice_points(
    g: &GammaPoset,
    axis: usize,
    keep: impl Fn(&GammaPoset, ElementId) -> bool,
) -> Vec<ElementId> {
    let mut out = Vec::new();
    for_each_slice(g, axis, |base, stride, slice| {
        for e in 0..slice.len() {
            if keep(slice, e) {
                let flat = base + slice.cell(e) * stride;
                out.push(g.find(flat, slice.cluster(e)).expect("slice elements embed into the full poset"));
            }
        }
    });
    out.sort_unstable();
    out
}

/// Layer points of a single-axis clustering read straight off its table.
fn single_axis_layer_point(slice: &GammaPoset, e: ElementId) -> bool {
    let h = slice.source();
    let flat = slice.cell(e);
    flat == 0 || !h.at(flat - 1).contains_cluster(slice.cluster(e))
}

/// Union over anchors of the layer points of the axis-`axis` slices.
pub fn slice_layer_points(g: &GammaPoset, axis: usize) -> Vec<ElementId> {
    embed_slice_points(g, axis, single_axis_layer_point)
}

/// `m_i`: the maximal axis-`axis` layer point below `e` (walks down the
/// axis while the cluster is unchanged).
pub fn max_slice_point(g: &GammaPoset, mut e: ElementId, axis: usize) -> ElementId {
    while let Some(lower) = g.down_same(e, axis) {
        e = lower;
    }
    e
}

/// `m`: applies `m_{order[0]}`, then `m_{order[1]}`, and so on.
pub fn max_layer_point(g: &GammaPoset, e: ElementId, order: &[usize]) -> ElementId {
    order.iter().fold(e, |cur, &axis| max_slice_point(g, cur, axis))
}

/// `m` tabulated over all of Gamma for a fixed axis order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxPointMap {
    pub order: Vec<usize>,
    pub assignment: Vec<ElementId>,
}

impl MaxPointMap {
    pub fn new(g: &GammaPoset, order: &[usize]) -> Result<Self, LayerPointError> {
        check_order(order, g.dims())?;
        let assignment = (0..g.len()).map(|e| max_layer_point(g, e, order)).collect();
        Ok(MaxPointMap { order: order.to_vec(), assignment })
    }

    pub fn apply(&self, e: ElementId) -> ElementId {
        self.assignment[e]
    }
}

pub fn check_order(order: &[usize], dims: usize) -> Result<(), LayerPointError> {
    let mut seen = vec![false; dims];
    if order.len() != dims {
        return Err(LayerPointError::BadOrder(dims));
    }
    for &i in order {
        if i >= dims || std::mem::replace(&mut seen[i], true) {
            return Err(LayerPointError::BadOrder(dims));
        }
    }
    Ok(())
}

/// The identity order `0, 1, ..., dims - 1`.
pub fn default_order(dims: usize) -> Vec<usize> {
    (0..dims).collect()
}

/// Branch points of a single-axis clustering: births (nothing below) and
/// merges (at least two clusters one grid step down fall inside `S`).
/// Growth of one cluster without a merge is excluded.
pub fn branch_points(g: &GammaPoset) -> Result<LayerPointSet, LayerPointError> {
    if g.dims() != 1 {
        return Err(LayerPointError::MultiAxis(g.dims()));
    }
    let global: Vec<ElementId> = (0..g.len()).filter(|&e| single_axis_branch_point(g, e)).collect();
    Ok(LayerPointSet { kind: PointKind::Branch, slices: vec![global.clone()], global })
}

fn single_axis_branch_point(g: &GammaPoset, e: ElementId) -> bool {
    let flat = g.cell(e);
    if flat == 0 {
        return true;
    }
    let cluster = g.cluster(e);
    let below = g
        .source()
        .at(flat - 1)
        .clusters()
        .iter()
        .filter(|t| t.iter().all(|p| cluster.binary_search(p).is_ok()))
        .count();
    below != 1
}

/// Axis-`axis` branch points (branch points of every slice, re-embedded).
pub fn slice_branch_points(g: &GammaPoset, axis: usize) -> Vec<ElementId> {
    embed_slice_points(g, axis, single_axis_branch_point)
}

/// Elements that are branch points of every axis' slices.
pub fn global_branch_points(g: &GammaPoset) -> LayerPointSet {
    let slices: Vec<Vec<ElementId>> = (0..g.dims()).map(|axis| slice_branch_points(g, axis)).collect();
    let global = intersect_all(&slices);
    LayerPointSet { kind: PointKind::Branch, global, slices }
}

/// Intersection of ascending id lists.
pub fn intersect_all(lists: &[Vec<ElementId>]) -> Vec<ElementId> {
    let Some((first, rest)) = lists.split_first() else {
        return Vec::new();
    };
    first.iter().copied().filter(|e| rest.iter().all(|l| l.binary_search(e).is_ok())).collect()
}
