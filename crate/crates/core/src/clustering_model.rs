//! Multi-parameter hierarchical clusterings presented as step functions on
//! a finite grid, plus slices and truncations.
//!
//! Each axis is either covariant (ordered as the reals) or contravariant
//! (the opposite order). Axis positions are always stored in ascending
//! order of the parameter poset, so for a contravariant axis position 0
//! holds the *largest* real value. A point between grid values takes the
//! clustering of the largest grid position below it; a point below every
//! grid position of some axis maps to the empty clustering.

use serde::Serialize;
use thiserror::Error;

use crate::degree_rips::{self, Clustering, DegreeRipsError};
use crate::metric::FiniteMetricSpace;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Covariant,
    Contravariant,
}

impl Variance {
    pub fn sign(self) -> i64 {
        match self {
            Variance::Covariant => 1,
            Variance::Contravariant => -1,
        }
    }

    /// Monotone key: `a <= b` in this axis' order iff `key(a) <= key(b)`.
    pub fn key(self, value: Scalar) -> Scalar {
        match self {
            Variance::Covariant => value,
            Variance::Contravariant => -value,
        }
    }

    /// `value + v * amount`.
    pub fn shift(self, value: Scalar, amount: Scalar) -> Scalar {
        match self {
            Variance::Covariant => value + amount,
            Variance::Contravariant => value - amount,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("a clustering needs at least one axis")]
    NoAxes,
    #[error("axis {axis} values are not strictly increasing in its order")]
    AxisOrder { axis: usize },
    #[error("axis {axis} has no grid values")]
    EmptyAxis { axis: usize },
    #[error("table has {found} cells, expected {expected}")]
    TableSize { found: usize, expected: usize },
    #[error("cluster refers to point {point} outside the ground set of size {ground}")]
    PointOutOfGround { point: usize, ground: usize },
    #[error("not order preserving between cells {lower:?} and {upper:?}")]
    NotOrderPreserving { lower: Vec<usize>, upper: Vec<usize> },
    #[error("the minimal grid cell must carry the empty clustering")]
    NotEmptySomewhere,
    #[error("axis {axis} does not exist")]
    AxisOutOfRange { axis: usize },
    #[error("anchor has {found} entries, expected {expected}")]
    AnchorLength { found: usize, expected: usize },
    #[error("anchor value {value} is not a grid value of axis {axis}")]
    AnchorNotOnGrid { axis: usize, value: Scalar },
    #[error("operation needs a single covariant axis")]
    NotSingleCovariant,
    #[error("truncation point {0} is negative")]
    NegativeTruncation(Scalar),
    #[error(transparent)]
    DegreeRips(#[from] DegreeRipsError),
}

/// Ordered grid values of one parameter axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Axis {
    pub variance: Variance,
    values: Vec<Scalar>,
    /// Position 0 is a sentinel standing for the empty region.
    pub sentinel: bool,
}

impl Axis {
    /// `values` must be strictly increasing in the axis' own order.
    pub fn new(variance: Variance, values: Vec<Scalar>, sentinel: bool) -> Option<Axis> {
        if values.is_empty() || values.windows(2).any(|w| variance.key(w[0]) >= variance.key(w[1])) {
            return None;
        }
        Some(Axis { variance, values, sentinel })
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, position: usize) -> Scalar {
        self.values[position]
    }

    /// Largest position whose value is `<= x` in the axis order.
    pub fn position_of(&self, x: Scalar) -> Option<usize> {
        let key = self.variance.key(x);
        let count = self.values.partition_point(|v| self.variance.key(*v) <= key);
        count.checked_sub(1)
    }

    pub fn exact_position(&self, x: Scalar) -> Option<usize> {
        self.position_of(x).filter(|&p| self.values[p] == x)
    }
}

/// One grid position per axis.
pub type Cell = Vec<usize>;

/// Freezes every axis but `axis` at the given grid values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceSpec {
    pub axis: usize,
    pub anchor: Vec<Scalar>,
}

/// A hierarchical clustering over a finite grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepClustering {
    ground_size: usize,
    axes: Vec<Axis>,
    strides: Vec<usize>,
    table: Vec<Clustering>,
}

impl StepClustering {
    /// Validates the table (row-major, last axis fastest).
    pub fn new(ground_size: usize, axes: Vec<Axis>, table: Vec<Clustering>) -> Result<Self, ModelError> {
        let h = Self::unchecked(ground_size, axes, table)?;
        h.validate()?;
        Ok(h)
    }

    fn unchecked(ground_size: usize, axes: Vec<Axis>, table: Vec<Clustering>) -> Result<Self, ModelError> {
        if axes.is_empty() {
            return Err(ModelError::NoAxes);
        }
        let mut strides = vec![1; axes.len()];
        for i in (0..axes.len() - 1).rev() {
            strides[i] = strides[i + 1] * axes[i + 1].len();
        }
        let expected = strides[0] * axes[0].len();
        if table.len() != expected {
            return Err(ModelError::TableSize { found: table.len(), expected });
        }
        Ok(StepClustering { ground_size, axes, strides, table })
    }

    fn validate(&self) -> Result<(), ModelError> {
        for (axis, a) in self.axes.iter().enumerate() {
            if a.values.is_empty() {
                return Err(ModelError::EmptyAxis { axis });
            }
            if a.values.windows(2).any(|w| a.variance.key(w[0]) >= a.variance.key(w[1])) {
                return Err(ModelError::AxisOrder { axis });
            }
        }
        for c in &self.table {
            if let Some(&point) = c.clusters().iter().flatten().find(|&&p| p >= self.ground_size) {
                return Err(ModelError::PointOutOfGround { point, ground: self.ground_size });
            }
        }
        if !self.table[0].is_empty() {
            return Err(ModelError::NotEmptySomewhere);
        }
        for flat in 0..self.table.len() {
            let cell = self.cell(flat);
            for axis in 0..self.dims() {
                if let Some(up) = self.step_up(flat, axis) {
                    if !clustering_leq(&self.table[flat], &self.table[up]) {
                        return Err(ModelError::NotOrderPreserving { lower: cell, upper: self.cell(up) });
                    }
                }
            }
        }
        Ok(())
    }

    /// The degree-Rips bifiltration `L(s, t)` on `Z` for degrees `0..=k_max`:
    /// axis 0 is the scale (covariant, with sentinel), axis 1 the degree
    /// (contravariant, positions `k_max, ..., 0`).
    pub fn from_degree_rips(z: &FiniteMetricSpace, k_max: usize) -> Result<Self, ModelError> {
        let grid = degree_rips::critical_grid(z, k_max)?;
        let scale = Axis { variance: Variance::Covariant, values: grid.scale.clone(), sentinel: true };
        let degree_values = (0..=k_max).rev().map(|k| Scalar::from_int(k as i64)).collect();
        let degree = Axis { variance: Variance::Contravariant, values: degree_values, sentinel: false };
        let rows: Vec<Vec<Clustering>> = (0..=k_max).rev().map(|k| degree_rips::sweep(z, k, &grid.scale)).collect();
        let mut table = Vec::with_capacity(grid.scale.len() * rows.len());
        for s in 0..grid.scale.len() {
            for row in &rows {
                table.push(row[s].clone());
            }
        }
        let h = Self::unchecked(z.len(), vec![scale, degree], table)?;
        debug_assert!(h.validate().is_ok());
        Ok(h)
    }

    /// `s -> pi_0 L_{s,k}(Z)` as a single covariant axis (the degree-`k`
    /// slice of the bifiltration).
    pub fn degree_rips_slice(z: &FiniteMetricSpace, k: usize) -> Result<Self, ModelError> {
        let grid = degree_rips::critical_grid(z, k)?;
        let table = degree_rips::sweep(z, k, &grid.scale);
        let axis = Axis { variance: Variance::Covariant, values: grid.scale, sentinel: true };
        Self::unchecked(z.len(), vec![axis], table)
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn variances(&self) -> Vec<Variance> {
        self.axes.iter().map(|a| a.variance).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.table.len()
    }

    pub fn flat(&self, cell: &[usize]) -> usize {
        cell.iter().zip(&self.strides).map(|(p, s)| p * s).sum()
    }

    pub fn cell(&self, flat: usize) -> Cell {
        self.strides.iter().zip(&self.axes).map(|(s, a)| (flat / s) % a.len()).collect()
    }

    pub fn position(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.axes[axis].len()
    }

    /// Flat index one step up along `axis`.
    pub fn step_up(&self, flat: usize, axis: usize) -> Option<usize> {
        (self.position(flat, axis) + 1 < self.axes[axis].len()).then(|| flat + self.strides[axis])
    }

    /// Flat index one step down along `axis`.
    pub fn step_down(&self, flat: usize, axis: usize) -> Option<usize> {
        (self.position(flat, axis) > 0).then(|| flat - self.strides[axis])
    }

    pub fn at(&self, flat: usize) -> &Clustering {
        &self.table[flat]
    }

    pub fn at_cell(&self, cell: &[usize]) -> &Clustering {
        &self.table[self.flat(cell)]
    }

    /// Parameter values of a grid cell.
    pub fn point_of(&self, flat: usize) -> Vec<Scalar> {
        (0..self.dims()).map(|i| self.axes[i].value(self.position(flat, i))).collect()
    }

    /// The grid cell governing `point`, or `None` if the point lies below
    /// the grid on some axis.
    pub fn cell_of(&self, point: &[Scalar]) -> Option<usize> {
        let mut flat = 0;
        for (i, x) in point.iter().enumerate() {
            flat += self.axes[i].position_of(*x)? * self.strides[i];
        }
        Some(flat)
    }

    /// `H(point)` under the step extension.
    pub fn eval(&self, point: &[Scalar]) -> &Clustering {
        static EMPTY: Clustering = Clustering::empty();
        self.cell_of(point).map_or(&EMPTY, |f| &self.table[f])
    }

    /// Componentwise `a <= b` on grid cells.
    pub fn cell_leq(&self, a: usize, b: usize) -> bool {
        (0..self.dims()).all(|i| self.position(a, i) <= self.position(b, i))
    }

    /// The single-axis clustering `t -> H(phi_i(t, anchor))`.
    pub fn slice(&self, spec: &SliceSpec) -> Result<StepClustering, ModelError> {
        if spec.axis >= self.dims() {
            return Err(ModelError::AxisOutOfRange { axis: spec.axis });
        }
        if spec.anchor.len() + 1 != self.dims() {
            return Err(ModelError::AnchorLength { found: spec.anchor.len(), expected: self.dims() - 1 });
        }
        let mut base = vec![0; self.dims()];
        let others = (0..self.dims()).filter(|&j| j != spec.axis);
        for (j, value) in others.zip(&spec.anchor) {
            base[j] = self.axes[j]
                .exact_position(*value)
                .ok_or(ModelError::AnchorNotOnGrid { axis: j, value: *value })?;
        }
        Ok(self.slice_at(spec.axis, &base))
    }

    /// Slice along `axis` through the grid cell `base` (its `axis` entry is
    /// ignored).
    pub fn slice_at(&self, axis: usize, base: &[usize]) -> StepClustering {
        let mut cell = base.to_vec();
        cell[axis] = 0;
        let start = self.flat(&cell);
        let table = (0..self.axes[axis].len()).map(|p| self.table[start + p * self.strides[axis]].clone()).collect();
        StepClustering {
            ground_size: self.ground_size,
            axes: vec![self.axes[axis].clone()],
            strides: vec![1],
            table,
        }
    }

    /// `s -> H(s)` for `s >= c` and empty below `c`, on a grid made of the
    /// sentinel, `c`, and the grid values above `c`.
    pub fn truncate_below(&self, c: Scalar) -> Result<StepClustering, ModelError> {
        if self.dims() != 1 || self.axes[0].variance != Variance::Covariant {
            return Err(ModelError::NotSingleCovariant);
        }
        if c.is_negative() {
            return Err(ModelError::NegativeTruncation(c));
        }
        let axis = &self.axes[0];
        let sentinel = if axis.sentinel { axis.values[0] } else { degree_rips::SCALE_SENTINEL };
        let mut values = vec![sentinel, c];
        values.extend(axis.values.iter().copied().filter(|&v| v > c));
        let table = values
            .iter()
            .enumerate()
            .map(|(i, &v)| if i == 0 { Clustering::empty() } else { self.eval(&[v]).clone() })
            .collect();
        let axis = Axis { variance: Variance::Covariant, values, sentinel: true };
        let h = Self::unchecked(self.ground_size, vec![axis], table)?;
        debug_assert!(h.validate().is_ok());
        Ok(h)
    }

    /// Reinterprets the clustering on a larger ground set through an
    /// injective `map` (e.g. a subsample's parent indices).
    pub fn relabel(&self, map: &[usize], ground_size: usize) -> StepClustering {
        StepClustering {
            ground_size,
            axes: self.axes.clone(),
            strides: self.strides.clone(),
            table: self.table.iter().map(|c| c.relabel(map)).collect(),
        }
    }

    /// Iterator over `(flat, clustering)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, &Clustering)> {
        self.table.iter().enumerate()
    }
}

/// `A <= B`: every cluster of `A` lies inside some cluster of `B`.
pub fn clustering_leq(a: &Clustering, b: &Clustering) -> bool {
    a.clusters().iter().all(|c| b.cluster_containing(c).is_some())
}
