//! The poset of (grid cell, cluster) pairs of a step clustering and its
//! decomposition into layers.
//!
//! `(s, S) <= (t, T)` iff `s <= t` componentwise and `S ⊆ T`. Only covering
//! links between grid-adjacent cells are stored; on a grid every
//! comparability is a chain of single-axis steps.

use std::ops::Range;

use crate::clustering_model::StepClustering;
use crate::degree_rips::UnionFind;
use crate::scalar::Scalar;

pub type ElementId = usize;

#[derive(Debug, Clone)]
pub struct GammaPoset {
    source: StepClustering,
    /// `cell_start[f]..cell_start[f + 1]` are the elements at flat cell `f`.
    cell_start: Vec<usize>,
    element_cell: Vec<usize>,
    /// `up[e * dims + i]`: the element one step up axis `i` containing `e`'s cluster.
    up: Vec<Option<ElementId>>,
    /// `down_same[e * dims + i]`: the element one step down axis `i` with the same cluster.
    down_same: Vec<Option<ElementId>>,
}

/// One equivalence class of equal clusters at comparable cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub cluster: Vec<usize>,
    /// Flat cells, ascending.
    pub support: Vec<usize>,
    pub elements: Vec<ElementId>,
}

/// Outcome of the closed-below check for a layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedBelowReport {
    /// `support == up_set(support) ∩ down_set(support)`.
    pub closed: bool,
    /// Support cells with no support cell one step below on any axis.
    pub minimal_cells: Vec<usize>,
}

pub fn build_gamma(h: &StepClustering) -> GammaPoset {
    GammaPoset::new(h.clone())
}

impl GammaPoset {
    pub fn new(source: StepClustering) -> Self {
        let dims = source.dims();
        let mut cell_start = Vec::with_capacity(source.cell_count() + 1);
        let mut element_cell = Vec::new();
        cell_start.push(0);
        for (flat, clustering) in source.cells() {
            element_cell.extend(std::iter::repeat_n(flat, clustering.len()));
            cell_start.push(element_cell.len());
        }
        let mut up = vec![None; element_cell.len() * dims];
        let mut down_same = vec![None; element_cell.len() * dims];
        for (e, &flat) in element_cell.iter().enumerate() {
            let cluster = &source.at(flat).clusters()[e - cell_start[flat]];
            for axis in 0..dims {
                if let Some(next) = source.step_up(flat, axis) {
                    let idx = source
                        .at(next)
                        .cluster_containing(cluster)
                        .expect("step clusterings are order preserving");
                    let target = cell_start[next] + idx;
                    up[e * dims + axis] = Some(target);
                    if source.at(next).clusters()[idx] == *cluster {
                        down_same[target * dims + axis] = Some(e);
                    }
                }
            }
        }
        GammaPoset { source, cell_start, element_cell, up, down_same }
    }

    pub fn source(&self) -> &StepClustering {
        &self.source
    }

    pub fn dims(&self) -> usize {
        self.source.dims()
    }

    pub fn len(&self) -> usize {
        self.element_cell.len()
    }

    pub fn is_empty(&self) -> bool {
        self.element_cell.is_empty()
    }

    pub fn cell(&self, e: ElementId) -> usize {
        self.element_cell[e]
    }

    pub fn cluster(&self, e: ElementId) -> &[usize] {
        let flat = self.element_cell[e];
        &self.source.at(flat).clusters()[e - self.cell_start[flat]]
    }

    pub fn point(&self, e: ElementId) -> Vec<Scalar> {
        self.source.point_of(self.cell(e))
    }

    pub fn elements_at(&self, flat: usize) -> Range<ElementId> {
        self.cell_start[flat]..self.cell_start[flat + 1]
    }

    /// The element `(flat, set)`, if `set` is a cluster there.
    pub fn find(&self, flat: usize, set: &[usize]) -> Option<ElementId> {
        self.source.at(flat).position(set).map(|i| self.cell_start[flat] + i)
    }

    /// The element at `flat` whose cluster contains `set`.
    pub fn find_containing(&self, flat: usize, set: &[usize]) -> Option<ElementId> {
        self.source.at(flat).cluster_containing(set).map(|i| self.cell_start[flat] + i)
    }

    pub fn up(&self, e: ElementId, axis: usize) -> Option<ElementId> {
        self.up[e * self.dims() + axis]
    }

    pub fn down_same(&self, e: ElementId, axis: usize) -> Option<ElementId> {
        self.down_same[e * self.dims() + axis]
    }

    pub fn leq(&self, a: ElementId, b: ElementId) -> bool {
        if !self.source.cell_leq(self.cell(a), self.cell(b)) {
            return false;
        }
        let big = self.cluster(b);
        self.cluster(a).iter().all(|p| big.binary_search(p).is_ok())
    }

    pub fn lt(&self, a: ElementId, b: ElementId) -> bool {
        a != b && self.leq(a, b)
    }

    /// Hasse diagram edges `(lower, upper, axis)`.
    pub fn covering_edges(&self) -> Vec<(ElementId, ElementId, usize)> {
        let dims = self.dims();
        (0..self.len())
            .flat_map(|e| (0..dims).filter_map(move |i| self.up(e, i).map(|u| (e, u, i))))
            .collect()
    }

    /// Layers, ordered by their first element.
    pub fn layers(&self) -> Vec<Layer> {
        let mut uf = UnionFind::new(self.len());
        for e in 0..self.len() {
            for axis in 0..self.dims() {
                if let Some(lower) = self.down_same(e, axis) {
                    uf.union(e, lower);
                }
            }
        }
        let mut by_root: std::collections::BTreeMap<usize, Vec<ElementId>> = Default::default();
        let mut order = Vec::new();
        for e in 0..self.len() {
            let root = uf.find(e);
            let entry = by_root.entry(root).or_default();
            if entry.is_empty() {
                order.push(root);
            }
            entry.push(e);
        }
        order
            .into_iter()
            .map(|root| {
                let elements = by_root.remove(&root).unwrap_or_default();
                Layer {
                    cluster: self.cluster(elements[0]).to_vec(),
                    support: elements.iter().map(|&e| self.cell(e)).collect(),
                    elements,
                }
            })
            .collect()
    }

    /// Layer index of every element, consistent with [`GammaPoset::layers`].
    pub fn layer_index(&self, layers: &[Layer]) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (i, layer) in layers.iter().enumerate() {
            for &e in &layer.elements {
                out[e] = i;
            }
        }
        out
    }

    /// Grid cells `>=` some cell of `support`, as a membership mask.
    pub fn up_set(&self, support: &[usize]) -> Vec<bool> {
        let h = &self.source;
        let mut mask = vec![false; h.cell_count()];
        for &f in support {
            mask[f] = true;
        }
        for f in 0..h.cell_count() {
            if mask[f] {
                for axis in 0..h.dims() {
                    if let Some(u) = h.step_up(f, axis) {
                        mask[u] = true;
                    }
                }
            }
        }
        mask
    }

    /// Grid cells `<=` some cell of `support`, as a membership mask.
    pub fn down_set(&self, support: &[usize]) -> Vec<bool> {
        let h = &self.source;
        let mut mask = vec![false; h.cell_count()];
        for &f in support {
            mask[f] = true;
        }
        for f in (0..h.cell_count()).rev() {
            if mask[f] {
                for axis in 0..h.dims() {
                    if let Some(d) = h.step_down(f, axis) {
                        mask[d] = true;
                    }
                }
            }
        }
        mask
    }

    pub fn is_closed_below(&self, layer: &Layer) -> ClosedBelowReport {
        let up = self.up_set(&layer.support);
        let down = self.down_set(&layer.support);
        let mut inside = vec![false; self.source.cell_count()];
        for &f in &layer.support {
            inside[f] = true;
        }
        let closed = (0..inside.len()).all(|f| inside[f] == (up[f] && down[f]));
        let minimal_cells = layer
            .support
            .iter()
            .copied()
            .filter(|&f| (0..self.dims()).all(|i| self.source.step_down(f, i).is_none_or(|d| !inside[d])))
            .collect();
        ClosedBelowReport { closed, minimal_cells }
    }
}
