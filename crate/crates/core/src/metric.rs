//! Finite metric spaces, subsamples, and the directional statistics consumed
//! by the stability checks: directional Hausdorff distance, the density
//! radius `N_k(X, Y)`, nearest-point maps and phase change numbers.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::degree_rips;
use crate::scalar::{isqrt_nearest, DecimalLiteral, ParseScalarError, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("metric space has no points")]
    Empty,
    #[error("distance matrix is not square: row {row} has {found} entries, expected {expected}")]
    NotSquare { row: usize, found: usize, expected: usize },
    #[error("distance matrix is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },
    #[error("negative distance at ({i}, {j})")]
    NegativeEntry { i: usize, j: usize },
    #[error("nonzero self-distance at ({i}, {i})")]
    NonzeroDiagonal { i: usize },
    #[error("triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("duplicate point label `{0}`")]
    DuplicateLabel(String),
    #[error("distances `{first}` and `{second}` differ by less than the 1e-12 quantum")]
    QuantumCollision { first: String, second: String },
    #[error("coordinate rows have inconsistent dimension: row {row} has {found}, expected {expected}")]
    DimensionMismatch { row: usize, found: usize, expected: usize },
    #[error("coordinates too large for exact distance computation")]
    Overflow,
    #[error("unknown metric `{0}` (expected euclidean, manhattan or chebyshev)")]
    UnknownMetric(String),
    #[error("parse error at line {line}: {source}")]
    Parse { line: usize, source: ParseScalarError },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("subsample is empty")]
    EmptySubsample,
    #[error("subsample index {0} is out of range")]
    IndexOutOfRange(usize),
    #[error("subsample index {0} is repeated")]
    RepeatedIndex(usize),
    #[error("insufficient points for {k} neighbours: space has {points} points")]
    InsufficientPoints { k: usize, points: usize },
}

/// Coordinate metrics accepted by [`FiniteMetricSpace::from_coordinates`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            "chebyshev" => Ok(Metric::Chebyshev),
            _ => Err(MetricError::UnknownMetric(s.to_string())),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Chebyshev => "chebyshev",
        })
    }
}

/// A finite set of labelled points with a validated distance matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Scalar>,
}

impl fmt::Debug for FiniteMetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteMetricSpace")
            .field("labels", &self.labels)
            .field("n", &self.len())
            .finish()
    }
}

impl FiniteMetricSpace {
    /// Validates and wraps a distance matrix. `labels` defaults to `0..n`.
    pub fn new(labels: Option<Vec<String>>, rows: Vec<Vec<Scalar>>) -> Result<Self, MetricError> {
        Self::with_slack(labels, rows, Scalar::ZERO)
    }

    fn with_slack(
        labels: Option<Vec<String>>,
        rows: Vec<Vec<Scalar>>,
        triangle_slack: Scalar,
    ) -> Result<Self, MetricError> {
        let n = rows.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let labels = match labels {
            Some(labels) => {
                if labels.len() != n {
                    return Err(MetricError::NotSquare { row: 0, found: labels.len(), expected: n });
                }
                labels
            }
            None => (0..n).map(|i| i.to_string()).collect(),
        };
        let mut seen = HashMap::new();
        for label in &labels {
            if seen.insert(label.as_str(), ()).is_some() {
                return Err(MetricError::DuplicateLabel(label.clone()));
            }
        }
        let mut dist = Vec::with_capacity(n * n);
        for (row, entries) in rows.into_iter().enumerate() {
            if entries.len() != n {
                return Err(MetricError::NotSquare { row, found: entries.len(), expected: n });
            }
            dist.extend(entries);
        }
        let space = FiniteMetricSpace { labels, dist };
        space.validate(triangle_slack)?;
        Ok(space)
    }

    fn validate(&self, slack: Scalar) -> Result<(), MetricError> {
        let n = self.len();
        for i in 0..n {
            for j in 0..n {
                if self.dist(i, j).is_negative() {
                    return Err(MetricError::NegativeEntry { i, j });
                }
            }
        }
        for i in 0..n {
            if self.dist(i, i) != Scalar::ZERO {
                return Err(MetricError::NonzeroDiagonal { i });
            }
            for j in i + 1..n {
                if self.dist(i, j) != self.dist(j, i) {
                    return Err(MetricError::Asymmetric { i, j });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let dij = self.dist(i, j);
                for k in 0..n {
                    if self.dist(i, k) > dij + self.dist(j, k) + slack {
                        return Err(MetricError::TriangleViolation { i, j, k });
                    }
                }
            }
        }
        Ok(())
    }

    /// Builds a space from coordinate rows under the named metric.
    ///
    /// Manhattan and Chebyshev distances are exact. Euclidean distances are
    /// exact whenever the squared distance is a perfect square in quantum
    /// units and otherwise rounded to the nearest quantum; two different
    /// true distances that round together are rejected.
    pub fn from_coordinates(
        labels: Option<Vec<String>>,
        coords: &[Vec<Scalar>],
        metric: Metric,
    ) -> Result<Self, MetricError> {
        let n = coords.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        let dim = coords[0].len();
        for (row, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(MetricError::DimensionMismatch { row, found: c.len(), expected: dim });
            }
        }
        let mut rows = vec![vec![Scalar::ZERO; n]; n];
        // rounded euclidean value -> exact squared units that produced it
        let mut roots: HashMap<Scalar, i128> = HashMap::new();
        let mut inexact = false;
        for i in 0..n {
            for j in i + 1..n {
                let d = match metric {
                    Metric::Manhattan => {
                        let mut total = Scalar::ZERO;
                        for (a, b) in coords[i].iter().zip(&coords[j]) {
                            total = total.checked_add((*a - *b).abs()).ok_or(MetricError::Overflow)?;
                        }
                        total
                    }
                    Metric::Chebyshev => coords[i]
                        .iter()
                        .zip(&coords[j])
                        .map(|(a, b)| (*a - *b).abs())
                        .max()
                        .unwrap_or(Scalar::ZERO),
                    Metric::Euclidean => {
                        let mut squared: i128 = 0;
                        for (a, b) in coords[i].iter().zip(&coords[j]) {
                            let diff = (*a - *b).units();
                            squared = diff
                                .checked_mul(diff)
                                .and_then(|sq| squared.checked_add(sq))
                                .ok_or(MetricError::Overflow)?;
                        }
                        let (root, exact) = isqrt_nearest(squared);
                        inexact |= !exact;
                        let root = Scalar::from_units(root);
                        if let Some(&previous) = roots.get(&root) {
                            if previous != squared {
                                return Err(MetricError::QuantumCollision {
                                    first: format!("sqrt({previous}e-24)"),
                                    second: format!("sqrt({squared}e-24)"),
                                });
                            }
                        } else {
                            roots.insert(root, squared);
                        }
                        root
                    }
                };
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        // Rounded irrational distances may break the triangle inequality by
        // at most 1.5 quanta.
        let slack = if inexact { Scalar::from_units(2) } else { Scalar::ZERO };
        Self::with_slack(labels, rows, slack)
    }

    /// Points on the real line; convenient for fixtures.
    pub fn on_line(values: &[Scalar]) -> Result<Self, MetricError> {
        let coords: Vec<Vec<Scalar>> = values.iter().map(|v| vec![*v]).collect();
        let labels = values.iter().map(|v| v.to_string()).collect();
        Self::from_coordinates(Some(labels), &coords, Metric::Manhattan)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> Scalar {
        self.dist[i * self.len() + j]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        let n = self.len();
        &self.dist[i * n..(i + 1) * n]
    }

    /// Sorted distinct entries of the distance matrix (always starts at 0).
    pub fn distinct_distances(&self) -> Vec<Scalar> {
        let mut values = self.dist.clone();
        values.sort_unstable();
        values.dedup();
        values
    }

    /// The metric space induced on `indices` (labels carried over).
    pub fn restrict(&self, indices: &[usize]) -> FiniteMetricSpace {
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        let mut dist = Vec::with_capacity(indices.len() * indices.len());
        for &i in indices {
            for &j in indices {
                dist.push(self.dist(i, j));
            }
        }
        FiniteMetricSpace { labels, dist }
    }
}

/// Loads a CSV distance matrix. The first row holds point labels; data rows
/// may optionally start with a row label (the header then either has an
/// empty leading cell or one more cell than there are labels).
pub fn load_distance_matrix<R: Read>(reader: R) -> Result<FiniteMetricSpace, MetricError> {
    let records = read_records(reader)?;
    let Some((header, body)) = records.split_first() else {
        return Err(MetricError::Empty);
    };
    let n = body.len();
    let has_row_labels = body.first().is_some_and(|row| row.len() == n + 1);
    let labels: Vec<String> = if header.len() == n + 1 {
        header[1..].to_vec()
    } else {
        header.clone()
    };

    let mut literals: HashMap<Scalar, DecimalLiteral> = HashMap::new();
    let mut rows = Vec::with_capacity(n);
    for (r, record) in body.iter().enumerate() {
        let cells = if has_row_labels { &record[1..] } else { &record[..] };
        let mut row = Vec::with_capacity(cells.len());
        for cell in cells {
            let literal: DecimalLiteral =
                cell.parse().map_err(|source| MetricError::Parse { line: r + 2, source })?;
            let value = literal.rounded();
            match literals.get(&value) {
                Some(prev) if *prev != literal => {
                    return Err(MetricError::QuantumCollision {
                        first: format!("{prev:?}"),
                        second: cell.trim().to_string(),
                    })
                }
                Some(_) => {}
                None => {
                    literals.insert(value, literal);
                }
            }
            row.push(value);
        }
        rows.push(row);
    }
    FiniteMetricSpace::new(Some(labels), rows)
}

/// Loads a CSV coordinate table `label, x1, ..., xd` (header row optional:
/// it is skipped when its second cell is not a number).
pub fn load_coordinates<R: Read>(reader: R, metric: Metric) -> Result<FiniteMetricSpace, MetricError> {
    let records = read_records(reader)?;
    let mut labels = Vec::new();
    let mut coords = Vec::new();
    for (line, record) in records.iter().enumerate() {
        if line == 0 && record.get(1).is_some_and(|c| c.parse::<Scalar>().is_err()) {
            continue;
        }
        let Some((label, values)) = record.split_first() else {
            continue;
        };
        labels.push(label.trim().to_string());
        let row = values
            .iter()
            .map(|v| v.parse::<Scalar>().map_err(|source| MetricError::Parse { line: line + 1, source }))
            .collect::<Result<Vec<_>, _>>()?;
        coords.push(row);
    }
    FiniteMetricSpace::from_coordinates(Some(labels), &coords, metric)
}

fn read_records<R: Read>(reader: R) -> Result<Vec<Vec<String>>, MetricError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| MetricError::Csv(e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        out.push(record.iter().map(str::to_string).collect());
    }
    Ok(out)
}

/// A nonempty subset `X` of a parent space `Y`, by strictly increasing
/// parent indices.
#[derive(Debug, Clone)]
pub struct Subsample<'a> {
    parent: &'a FiniteMetricSpace,
    indices: Vec<usize>,
}

impl<'a> Subsample<'a> {
    pub fn new(parent: &'a FiniteMetricSpace, mut indices: Vec<usize>) -> Result<Self, MetricError> {
        if indices.is_empty() {
            return Err(MetricError::EmptySubsample);
        }
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(MetricError::RepeatedIndex(w[0]));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= parent.len() {
                return Err(MetricError::IndexOutOfRange(last));
            }
        }
        Ok(Subsample { parent, indices })
    }

    /// The whole parent as a subsample of itself.
    pub fn full(parent: &'a FiniteMetricSpace) -> Self {
        Subsample { parent, indices: (0..parent.len()).collect() }
    }

    pub fn parent(&self) -> &'a FiniteMetricSpace {
        self.parent
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Position of parent index `y` within the subsample, if present.
    pub fn position(&self, y: usize) -> Option<usize> {
        self.indices.binary_search(&y).ok()
    }

    pub fn induced(&self) -> FiniteMetricSpace {
        self.parent.restrict(&self.indices)
    }
}

/// Sorted distinct distances of `X` and the least index `M` at which the
/// Vietoris-Rips clustering is a single cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseChangeProfile {
    pub values: Vec<Scalar>,
    pub merge_index: usize,
}

impl PhaseChangeProfile {
    /// Gaps `s_{i+1} - s_i` for `0 <= i < limit`.
    pub fn gaps(&self, limit: usize) -> Vec<Scalar> {
        self.values.windows(2).take(limit).map(|w| w[1] - w[0]).collect()
    }

    /// Minimum gap over `i < limit`, `None` when there is no such gap.
    pub fn min_gap(&self, limit: usize) -> Option<Scalar> {
        self.gaps(limit).into_iter().min()
    }

    /// `s_1`, the smallest positive distance (absent for a single point).
    pub fn first_positive(&self) -> Option<Scalar> {
        self.values.get(1).copied()
    }

    pub fn last_index(&self) -> usize {
        self.values.len() - 1
    }
}

pub fn phase_change_profile(x: &FiniteMetricSpace) -> PhaseChangeProfile {
    let values = x.distinct_distances();
    let counts = degree_rips::component_counts(x, 0, &values);
    let merge_index = counts.iter().position(|&c| c == 1).unwrap_or(values.len() - 1);
    PhaseChangeProfile { values, merge_index }
}

/// `h(Y, X)`: max over `y` of the distance to its nearest sample point.
pub fn directional_hausdorff(x: &Subsample<'_>) -> Scalar {
    let y = x.parent();
    (0..y.len())
        .map(|p| x.indices().iter().map(|&q| y.dist(p, q)).min().unwrap_or(Scalar::ZERO))
        .max()
        .unwrap_or(Scalar::ZERO)
}

/// `N_k(X, Y)`: the max over `x` in `X` of the `(k+1)`-th smallest distance
/// from `x` to the points of `Y` (counting `x` itself).
pub fn density_radius(x: &Subsample<'_>, k: usize) -> Result<Scalar, MetricError> {
    let y = x.parent();
    if k + 1 > y.len() {
        return Err(MetricError::InsufficientPoints { k, points: y.len() });
    }
    let mut best = Scalar::ZERO;
    let mut row = Vec::with_capacity(y.len());
    for &p in x.indices() {
        row.clear();
        row.extend_from_slice(y.row(p));
        let (_, kth, _) = row.select_nth_unstable(k);
        best = best.max(*kth);
    }
    Ok(best)
}

/// A nearest-point map `theta: Y -> X`, in parent indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NearestPointMap {
    pub theta: Vec<usize>,
    /// Pairs of distinct sample points at distance 0 from each other; for
    /// these `theta(x) = x` may fail.
    pub duplicate_warnings: Vec<(usize, usize)>,
}

pub fn nearest_point_map(x: &Subsample<'_>) -> NearestPointMap {
    let y = x.parent();
    let mut theta = Vec::with_capacity(y.len());
    for p in 0..y.len() {
        let mut best = x.indices()[0];
        for &q in &x.indices()[1..] {
            if y.dist(p, q) < y.dist(p, best) {
                best = q;
            }
        }
        theta.push(best);
    }
    let mut duplicate_warnings = Vec::new();
    for (a, &p) in x.indices().iter().enumerate() {
        for &q in &x.indices()[a + 1..] {
            if y.dist(p, q) == Scalar::ZERO {
                duplicate_warnings.push((p, q));
            }
        }
    }
    NearestPointMap { theta, duplicate_warnings }
}

/// Greedy farthest-point subsample of `count` points. The first point is
/// drawn from `seed`; later ties go to the least index.
pub fn farthest_point_sample(
    y: &FiniteMetricSpace,
    count: usize,
    seed: u64,
) -> Result<Subsample<'_>, MetricError> {
    if count == 0 {
        return Err(MetricError::EmptySubsample);
    }
    if count > y.len() {
        return Err(MetricError::IndexOutOfRange(count - 1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..y.len());
    let mut chosen = vec![first];
    let mut nearest: Vec<Scalar> = y.row(first).to_vec();
    while chosen.len() < count {
        let mut far = 0;
        for p in 1..y.len() {
            if nearest[p] > nearest[far] {
                far = p;
            }
        }
        chosen.push(far);
        for p in 0..y.len() {
            nearest[p] = nearest[p].min(y.dist(p, far));
        }
    }
    Subsample::new(y, chosen)
}
