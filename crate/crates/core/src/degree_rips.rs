//! One-skeleta of degree-Rips (Lesnick) complexes and their path-component
//! clusterings.
//!
//! A point `z` is a vertex of `L_{s,k}(Z)` when it has at least `k` other
//! points within distance `s`; edges join vertices at distance `<= s`.
//! Only vertices and edges are ever built since clusters are path
//! components.

use serde::Serialize;
use thiserror::Error;

use crate::metric::FiniteMetricSpace;
use crate::scalar::Scalar;

/// Scale value standing in for the empty region `s < 0`.
pub const SCALE_SENTINEL: Scalar = Scalar::from_int(-1);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DegreeRipsError {
    #[error("degree bound {k_max} exceeds |Z| - 1 = {limit}")]
    DegreeTooLarge { k_max: usize, limit: usize },
}

/// Disjoint-set forest with path compression and union by size.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Returns `true` when two distinct sets were merged.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// A collection of disjoint nonempty subsets of a ground set.
///
/// Clusters are stored as sorted index vectors and ordered by their least
/// element, which also serves as the cluster's canonical label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Clustering {
    clusters: Vec<Vec<usize>>,
}

impl Clustering {
    pub const fn empty() -> Self {
        Clustering { clusters: Vec::new() }
    }

    /// Normalizes the clusters. Returns `None` if any cluster is empty or
    /// two clusters overlap.
    pub fn new(mut clusters: Vec<Vec<usize>>) -> Option<Self> {
        for c in &mut clusters {
            c.sort_unstable();
            c.dedup();
            if c.is_empty() {
                return None;
            }
        }
        clusters.sort_unstable_by_key(|c| c[0]);
        let mut seen = std::collections::HashSet::new();
        for &p in clusters.iter().flatten() {
            if !seen.insert(p) {
                return None;
            }
        }
        Some(Clustering { clusters })
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Index of the cluster containing `point`.
    pub fn cluster_of(&self, point: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.binary_search(&point).is_ok())
    }

    /// Index of the cluster equal to `set` (sorted).
    pub fn position(&self, set: &[usize]) -> Option<usize> {
        let first = *set.first()?;
        let idx = self.cluster_of(first)?;
        (self.clusters[idx] == set).then_some(idx)
    }

    pub fn contains_cluster(&self, set: &[usize]) -> bool {
        self.position(set).is_some()
    }

    /// Index of the cluster containing every point of `set`, if one does.
    pub fn cluster_containing(&self, set: &[usize]) -> Option<usize> {
        let first = *set.first()?;
        let idx = self.cluster_of(first)?;
        let target = &self.clusters[idx];
        set.iter().all(|p| target.binary_search(p).is_ok()).then_some(idx)
    }

    /// Relabels ground points through `map`, e.g. from subsample positions
    /// to parent indices.
    pub fn relabel(&self, map: &[usize]) -> Clustering {
        Clustering::new(self.clusters.iter().map(|c| c.iter().map(|&p| map[p]).collect()).collect())
            .expect("relabelling by an injective map keeps clusters disjoint")
    }

    fn from_union_find(uf: &mut UnionFind, members: impl Iterator<Item = usize>) -> Clustering {
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for p in members {
            by_root.entry(uf.find(p)).or_default().push(p);
        }
        let mut clusters: Vec<Vec<usize>> = by_root.into_values().collect();
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.sort_unstable_by_key(|c| c[0]);
        Clustering { clusters }
    }
}

/// The 1-skeleton of `L_{s,k}(Z)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LesnickGraph {
    pub scale: Scalar,
    pub degree: usize,
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

pub fn lesnick_graph(z: &FiniteMetricSpace, s: Scalar, k: usize) -> LesnickGraph {
    let n = z.len();
    let vertices: Vec<usize> = (0..n)
        .filter(|&p| (0..n).filter(|&q| q != p && z.dist(p, q) <= s).count() >= k)
        .collect();
    let mut edges = Vec::new();
    for (a, &p) in vertices.iter().enumerate() {
        for &q in &vertices[a + 1..] {
            if z.dist(p, q) <= s {
                edges.push((p, q));
            }
        }
    }
    LesnickGraph { scale: s, degree: k, vertices, edges }
}

/// Connected components of `g`, covering exactly its vertices.
pub fn components(g: &LesnickGraph) -> Clustering {
    let n = g.vertices.iter().max().map_or(0, |&m| m + 1);
    let mut uf = UnionFind::new(n);
    for &(p, q) in &g.edges {
        uf.union(p, q);
    }
    Clustering::from_union_find(&mut uf, g.vertices.iter().copied())
}

/// `L(s, t)`: empty unless `s >= 0` and `t >= 0`, otherwise the path
/// components of `L_{s, ceil(t)}(Z)`.
pub fn clustering_at(z: &FiniteMetricSpace, s: Scalar, t: Scalar) -> Clustering {
    if s.is_negative() || t.is_negative() {
        return Clustering::empty();
    }
    let k = usize::try_from(t.ceil_int()).unwrap_or(usize::MAX);
    components(&lesnick_graph(z, s, k))
}

/// Scale at which each point gains its `k`-th neighbour (`None` if never).
pub fn activation_scales(z: &FiniteMetricSpace, k: usize) -> Vec<Option<Scalar>> {
    let mut row = Vec::with_capacity(z.len());
    (0..z.len())
        .map(|p| {
            if k >= z.len() {
                return None;
            }
            row.clear();
            row.extend_from_slice(z.row(p));
            let (_, kth, _) = row.select_nth_unstable(k);
            Some(*kth)
        })
        .collect()
}

/// Clusterings `pi_0 L_{s,k}(Z)` for every `s` in `scales` (ascending), by
/// a single threshold sweep: each vertex and edge is inserted once at the
/// scale where it first appears.
pub fn sweep(z: &FiniteMetricSpace, k: usize, scales: &[Scalar]) -> Vec<Clustering> {
    debug_assert!(scales.windows(2).all(|w| w[0] <= w[1]));
    let n = z.len();
    let active_at = activation_scales(z, k);

    // (appearance scale, vertex) and (appearance scale, p, q)
    let mut vertex_events: Vec<(Scalar, usize)> =
        active_at.iter().enumerate().filter_map(|(p, a)| a.map(|a| (a, p))).collect();
    vertex_events.sort_unstable();
    let mut edge_events = Vec::new();
    for p in 0..n {
        let Some(ap) = active_at[p] else { continue };
        for q in p + 1..n {
            let Some(aq) = active_at[q] else { continue };
            edge_events.push((z.dist(p, q).max(ap).max(aq), p, q));
        }
    }
    edge_events.sort_unstable();

    let mut uf = UnionFind::new(n);
    let mut active = vec![false; n];
    let mut members: Vec<usize> = Vec::new();
    let (mut vi, mut ei) = (0, 0);
    let mut out = Vec::with_capacity(scales.len());
    for &s in scales {
        if s.is_negative() {
            out.push(Clustering::empty());
            continue;
        }
        while vi < vertex_events.len() && vertex_events[vi].0 <= s {
            let p = vertex_events[vi].1;
            active[p] = true;
            members.push(p);
            vi += 1;
        }
        while ei < edge_events.len() && edge_events[ei].0 <= s {
            let (_, p, q) = edge_events[ei];
            uf.union(p, q);
            ei += 1;
        }
        out.push(Clustering::from_union_find(&mut uf, members.iter().copied()));
    }
    out
}

/// Number of clusters of `pi_0 L_{s,k}(Z)` for each `s` in `scales`.
pub fn component_counts(z: &FiniteMetricSpace, k: usize, scales: &[Scalar]) -> Vec<usize> {
    sweep(z, k, scales).iter().map(Clustering::len).collect()
}

/// Finite grid on which the degree-Rips bifiltration is a step function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalGrid {
    /// Sentinel, then the sorted distinct distances of `Z`.
    pub scale: Vec<Scalar>,
    /// `0..=k_max`.
    pub degree: Vec<usize>,
}

pub fn critical_grid(z: &FiniteMetricSpace, k_max: usize) -> Result<CriticalGrid, DegreeRipsError> {
    if k_max + 1 > z.len() {
        return Err(DegreeRipsError::DegreeTooLarge { k_max, limit: z.len() - 1 });
    }
    let mut scale = vec![SCALE_SENTINEL];
    scale.extend(z.distinct_distances());
    Ok(CriticalGrid { scale, degree: (0..=k_max).collect() })
}
