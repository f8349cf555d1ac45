//! Retract checks for degree-Rips clusterings of a sample `X ⊆ Y`.
//!
//! Each checker evaluates a theorem's hypotheses on exact statistics, runs
//! the corresponding interleaving, and verifies the conclusion element by
//! element. A conclusion that fails while its hypotheses hold is reported
//! as a soundness violation.

use serde::Serialize;
use thiserror::Error;

use crate::clustering_model::{ModelError, StepClustering};
use crate::gamma::{ElementId, GammaPoset};
use crate::interleaving::{
    build_approximation, induced_layer_diagram, ApproximationWitness, Failure, InterleavingError, LayerDiagram,
    TriangleVerdict,
};
use crate::layer_points::global_layer_points;
use crate::metric::{
    density_radius, directional_hausdorff, phase_change_profile, FiniteMetricSpace, MetricError, PhaseChangeProfile,
    Subsample,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StabilityError {
    #[error("parameter {name} must be nonnegative, got {value}")]
    NegativeParameter { name: &'static str, value: Scalar },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Interleaving(#[from] InterleavingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Verified,
    ConditionsUnmet,
    SoundnessViolation,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Verified => 0,
            Outcome::ConditionsUnmet => 1,
            Outcome::SoundnessViolation => 3,
        }
    }

    /// Verified when the claim holds, a violation when it does not, and
    /// no claim when the hypotheses fail.
    fn judge(hypotheses: bool, conclusion: bool) -> Outcome {
        match (hypotheses, conclusion) {
            (false, _) => Outcome::ConditionsUnmet,
            (true, true) => Outcome::Verified,
            (true, false) => Outcome::SoundnessViolation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Parameters {
    pub k: usize,
    pub c: Scalar,
    pub epsilon: Scalar,
    pub delta: Scalar,
    /// Use `M = U` instead of the least merge index.
    pub force_m: bool,
}

impl Parameters {
    fn validate(&self) -> Result<(), StabilityError> {
        for (name, value) in [("c", self.c), ("epsilon", self.epsilon), ("delta", self.delta)] {
            if value.is_negative() {
                return Err(StabilityError::NegativeParameter { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stats {
    /// `h(Y, X)`.
    pub h: Scalar,
    /// `N_k(X, Y)`.
    pub n_k: Scalar,
    pub phase_change_numbers: Vec<Scalar>,
    /// The `M` in use.
    pub m: usize,
    /// `s_{i+1} - s_i` for `i < M`.
    pub gaps: Vec<Scalar>,
    pub min_gap: Option<Scalar>,
}

impl Stats {
    fn compute(x: &Subsample<'_>, k: usize, force_m: bool) -> Result<(Stats, PhaseChangeProfile), StabilityError> {
        let profile = phase_change_profile(&x.induced());
        let m = if force_m { profile.last_index() } else { profile.merge_index };
        let stats = Stats {
            h: directional_hausdorff(x),
            n_k: density_radius(x, k)?,
            phase_change_numbers: profile.values.clone(),
            m,
            gaps: profile.gaps(m),
            min_gap: profile.min_gap(m),
        };
        Ok((stats, profile))
    }

    /// `value < s_{i+1} - s_i` for every `i < M` (vacuous when `M = 0`).
    pub fn below_all_gaps(&self, value: Scalar) -> bool {
        self.min_gap.is_none_or(|g| value < g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Conditions {
    pub delta_ge_2h: bool,
    /// `N_k - ε <= c <= δ`.
    pub eps_window: bool,
    /// `c + ε + δ < s_{i+1} - s_i` for all `i < M`.
    pub gap: bool,
    /// `s - t > ε + δ` for all `(t, T) < (s, S)` in `Λ(L_0 X[c])`.
    pub weak_gap: bool,
}

impl Conditions {
    /// Hypotheses of the approximation lemma.
    pub fn approximation(&self) -> bool {
        self.delta_ge_2h && self.eps_window
    }

    /// Hypotheses of the retract theorem, with the gap condition or its
    /// weaker layer-point form.
    pub fn retract(&self) -> bool {
        self.approximation() && (self.gap || self.weak_gap)
    }
}

/// A layer point `(scale, cluster)` with the cluster in `Y` indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerPointRef {
    pub scale: Scalar,
    pub cluster: Vec<usize>,
    pub labels: Vec<String>,
}

impl LayerPointRef {
    fn of(g: &GammaPoset, e: ElementId, y: &FiniteMetricSpace) -> Self {
        let cluster = g.cluster(e).to_vec();
        LayerPointRef {
            scale: g.point(e)[0],
            labels: cluster.iter().map(|&p| y.label(p).to_string()).collect(),
            cluster,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParamBound {
    /// `s - 2h`.
    pub lower: Scalar,
    /// `s + ε`.
    pub upper: Scalar,
    pub holds: bool,
}

/// `(s, S) -> i_ε -> (t, T) -> θ_δ -> (q, U)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RetractRow {
    pub source: LayerPointRef,
    pub included: LayerPointRef,
    pub returned: LayerPointRef,
    pub identity: bool,
    /// Present when `s > c`.
    pub param_bound: Option<ParamBound>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub parameters: Parameters,
    /// Sample indices in `Y`.
    pub subsample: Vec<usize>,
    pub stats: Stats,
    pub conditions: Conditions,
    pub interleaving_valid: bool,
    pub failures: Vec<Failure>,
    pub upper: TriangleVerdict,
    pub lower: TriangleVerdict,
    /// `m∘(id)_{ε+δ}∘i` is the identity on `Λ(L_0 X[c])`.
    pub shift_is_identity: bool,
    pub table: Vec<RetractRow>,
    /// `θ_δ ∘ i_ε = id` on `Λ(L_0 X[c])`.
    pub retract_holds: bool,
    pub param_bounds_hold: bool,
    pub outcome: Outcome,
    #[serde(skip)]
    pub witness: ApproximationWitness,
    #[serde(skip)]
    pub diagram: LayerDiagram,
}

/// `L_0 X[c]` over `X`'s own indices.
pub fn truncated_single_linkage(x: &FiniteMetricSpace, c: Scalar) -> Result<StepClustering, StabilityError> {
    Ok(StepClustering::degree_rips_slice(x, 0)?.truncate_below(c)?)
}

/// Checks the retract theorem for `X ⊆ Y` at the given parameters.
pub fn check_main_theorem(x: &Subsample<'_>, params: &Parameters) -> Result<StabilityReport, StabilityError> {
    params.validate()?;
    let y = x.parent();
    let (stats, _) = Stats::compute(x, params.k, params.force_m)?;
    let h = truncated_single_linkage(&x.induced(), params.c)?;
    let e = StepClustering::degree_rips_slice(y, params.k)?;
    let witness = build_approximation(x, &h, &e, vec![params.epsilon], vec![params.delta])?;
    let diagram = induced_layer_diagram(&witness.base, &[0], &[0])?;
    let (gh, ge) = (&witness.base.gamma_h, &witness.base.gamma_e);
    let spread = params.epsilon + params.delta;

    let weak_gap = diagram.h_points.iter().all(|&a| {
        diagram.h_points.iter().all(|&b| !gh.lt(a, b) || gh.point(b)[0] - gh.point(a)[0] > spread)
    });
    let conditions = Conditions {
        delta_ge_2h: params.delta >= stats.h.times(2),
        eps_window: stats.n_k - params.epsilon <= params.c && params.c <= params.delta,
        gap: stats.below_all_gaps(params.c + spread),
        weak_gap,
    };

    let mut table = Vec::new();
    if !diagram.forward.is_empty() || diagram.h_points.is_empty() {
        for (j, &a) in diagram.h_points.iter().enumerate() {
            let (t, q) = (diagram.forward[j], diagram.round_h[j]);
            let s = gh.point(a)[0];
            let scale_t = ge.point(t)[0];
            let param_bound = (s > params.c).then(|| {
                let (lower, upper) = (s - stats.h.times(2), s + params.epsilon);
                ParamBound { lower, upper, holds: lower <= scale_t && scale_t <= upper }
            });
            table.push(RetractRow {
                source: LayerPointRef::of(gh, a, y),
                included: LayerPointRef::of(ge, t, y),
                returned: LayerPointRef::of(gh, q, y),
                identity: q == a,
                param_bound,
            });
        }
    }
    let maps_exist = witness.base.exists;
    let retract_holds = maps_exist && table.iter().all(|r| r.identity);
    let param_bounds_hold = maps_exist && table.iter().all(|r| r.param_bound.is_none_or(|b| b.holds));
    let shift_is_identity = diagram.shift_h == diagram.h_points;
    let interleaving_valid = witness.valid();
    let triangles_hold = diagram.upper.holds() && diagram.lower.holds();

    let mut sound = true;
    if conditions.approximation() {
        sound &= interleaving_valid && param_bounds_hold && triangles_hold;
    }
    if conditions.gap && !conditions.weak_gap {
        sound = false;
    }
    let outcome = match Outcome::judge(conditions.retract(), retract_holds) {
        Outcome::Verified if !sound => Outcome::SoundnessViolation,
        Outcome::ConditionsUnmet if !sound => Outcome::SoundnessViolation,
        other => other,
    };
    Ok(StabilityReport {
        parameters: *params,
        subsample: x.indices().to_vec(),
        stats,
        conditions,
        interleaving_valid,
        failures: witness.base.failures.clone(),
        upper: diagram.upper.clone(),
        lower: diagram.lower.clone(),
        shift_is_identity,
        table,
        retract_holds,
        param_bounds_hold,
        outcome,
        witness,
        diagram,
    })
}

/// Lemma-style parameter bounds of every qualifying table row.
pub fn check_param_bounds(report: &StabilityReport) -> Vec<(LayerPointRef, Scalar, ParamBound)> {
    report
        .table
        .iter()
        .filter_map(|r| r.param_bound.map(|b| (r.source.clone(), r.included.scale, b)))
        .collect()
}

/// The default parameters `ε = N_k`, `c = N_k - ε = 0`, `δ = max(2h, N_k - ε)`.
pub fn default_parameters(x: &Subsample<'_>, k: usize, force_m: bool) -> Result<Parameters, StabilityError> {
    let h = directional_hausdorff(x);
    let n_k = density_radius(x, k)?;
    let epsilon = n_k;
    let c = n_k - epsilon;
    Ok(Parameters { k, c, epsilon, delta: h.times(2).max(n_k - epsilon), force_m })
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallParamReport {
    pub n_k: Scalar,
    pub h: Scalar,
    pub min_gap: Option<Scalar>,
    /// `N_k + 2h < s_{i+1} - s_i` for all `i < M`.
    pub condition: bool,
    pub report: Option<StabilityReport>,
    /// Upper triangle commutes exactly.
    pub top_commutes: Option<bool>,
    /// With `X = Y` and `k = 0`, every map in the diagram is the identity.
    pub all_identity: Option<bool>,
    pub outcome: Outcome,
}

/// The small-parameter corollary: a retract `Λ(L_k Y) -> Λ(L_0 X)`.
pub fn check_smallparam(x: &Subsample<'_>, k: usize, force_m: bool) -> Result<SmallParamReport, StabilityError> {
    let params = default_parameters(x, k, force_m)?;
    let (stats, _) = Stats::compute(x, k, force_m)?;
    let condition = stats.below_all_gaps(stats.n_k + stats.h.times(2));
    let mut out = SmallParamReport {
        n_k: stats.n_k,
        h: stats.h,
        min_gap: stats.min_gap,
        condition,
        report: None,
        top_commutes: None,
        all_identity: None,
        outcome: Outcome::ConditionsUnmet,
    };
    if !condition {
        return Ok(out);
    }
    let report = check_main_theorem(x, &params)?;
    let top = report.upper == TriangleVerdict::Commutes && report.shift_is_identity;
    if k == 0 && x.len() == x.parent().len() {
        let d = &report.diagram;
        let same = |a: &[ElementId], b: &[ElementId]| a == b;
        let (gh, ge) = (&report.witness.base.gamma_h, &report.witness.base.gamma_e);
        let forward_identity = d.h_points.iter().zip(&d.forward).all(|(&a, &b)| {
            gh.point(a) == ge.point(b) && gh.cluster(a) == ge.cluster(b)
        });
        out.all_identity = Some(
            forward_identity
                && same(&d.round_h, &d.h_points)
                && same(&d.round_e, &d.e_points)
                && same(&d.shift_h, &d.h_points)
                && same(&d.shift_e, &d.e_points),
        );
    }
    let sound = report.outcome == Outcome::Verified && top && out.all_identity.unwrap_or(true);
    out.outcome = Outcome::judge(true, sound);
    out.top_commutes = Some(top);
    out.report = Some(report);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TruncationReport {
    pub c: Scalar,
    pub s1: Option<Scalar>,
    /// `c < s_{i+1} - s_i` for all `i < M`.
    pub gap_condition: bool,
    pub below_s1: bool,
    /// Round trips of the `ε = 0, δ = c` diagram are the identity.
    pub triangles_identity: Option<bool>,
    /// `i_0` is an order isomorphism `Λ(L_0 X[c]) -> Λ(L_0 X)`.
    pub i0_isomorphism: Option<bool>,
    /// Matching layer points by cluster is an order isomorphism.
    pub direct_isomorphism: Option<bool>,
    /// Layer points of `L_0 X` with no counterpart after truncation.
    pub collapsed: Vec<LayerPointRef>,
    pub outcome: Outcome,
}

fn order_isomorphic(a: &GammaPoset, pa: &[ElementId], b: &GammaPoset, pb: &[ElementId]) -> bool {
    let mut image = pb.to_vec();
    image.sort_unstable();
    image.dedup();
    if image.len() != pa.len() {
        return false;
    }
    (0..pa.len()).all(|i| (0..pa.len()).all(|j| a.leq(pa[i], pa[j]) == b.leq(pb[i], pb[j])))
}

/// The truncation corollary on `X = Y` with `k = 0`.
pub fn check_truncation_iso(x: &FiniteMetricSpace, c: Scalar, force_m: bool) -> Result<TruncationReport, StabilityError> {
    if c.is_negative() {
        return Err(StabilityError::NegativeParameter { name: "c", value: c });
    }
    let full = Subsample::full(x);
    let (stats, profile) = Stats::compute(&full, 0, force_m)?;
    let s1 = profile.first_positive();
    let gap_condition = stats.below_all_gaps(c);
    let below_s1 = s1.is_none_or(|s| c < s);

    let truncated = GammaPoset::new(truncated_single_linkage(x, c)?);
    let untruncated = GammaPoset::new(StepClustering::degree_rips_slice(x, 0)?);
    let lt = global_layer_points(&truncated).global;
    let lu = global_layer_points(&untruncated).global;
    let find_by_cluster = |set: &[usize]| lu.iter().copied().find(|&e| untruncated.cluster(e) == set);
    let matched: Vec<Option<ElementId>> = lt.iter().map(|&e| find_by_cluster(truncated.cluster(e))).collect();
    let collapsed = lu
        .iter()
        .filter(|&&e| !lt.iter().any(|&t| truncated.cluster(t) == untruncated.cluster(e)))
        .map(|&e| LayerPointRef::of(&untruncated, e, x))
        .collect();

    let mut report = TruncationReport {
        c,
        s1,
        gap_condition,
        below_s1,
        triangles_identity: None,
        i0_isomorphism: None,
        direct_isomorphism: None,
        collapsed,
        outcome: Outcome::ConditionsUnmet,
    };
    if below_s1 {
        let direct = matched.iter().all(Option::is_some) && lt.len() == lu.len() && {
            let image: Vec<ElementId> = matched.iter().map(|m| m.unwrap()).collect();
            order_isomorphic(&truncated, &lt, &untruncated, &image)
        };
        report.direct_isomorphism = Some(direct);
    }
    if gap_condition {
        let h = truncated.source().clone();
        let e = untruncated.source().clone();
        let w = build_approximation(&full, &h, &e, vec![Scalar::ZERO], vec![c])?;
        let d = induced_layer_diagram(&w.base, &[0], &[0])?;
        let exists = w.base.exists;
        report.triangles_identity = Some(exists && d.round_h == d.h_points && d.round_e == d.e_points);
        report.i0_isomorphism =
            Some(exists && order_isomorphic(&w.base.gamma_h, &d.h_points, &w.base.gamma_e, &d.forward));
    }
    let claims = [report.direct_isomorphism, report.triangles_identity, report.i0_isomorphism];
    report.outcome = Outcome::judge(below_s1, claims.iter().all(|c| c.unwrap_or(true)));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KPositiveNote {
    pub k: usize,
    /// `N_k(X, X)`.
    pub n_k: Scalar,
    pub s1: Option<Scalar>,
    /// `N_k - ε <= c <= δ`.
    pub admissible: bool,
    /// `c + ε + δ < s_{i+1} - s_i` for all `i < M`.
    pub gap_condition: bool,
    /// No two distinct points are at distance 0.
    pub separated: bool,
    /// `c + ε + δ >= s_1`.
    pub obstruction_holds: bool,
    pub outcome: Outcome,
}

/// With `X = Y` and `k > 0`, admissible parameters always violate the gap
/// condition.
pub fn check_k_positive_note(x: &FiniteMetricSpace, params: &Parameters) -> Result<KPositiveNote, StabilityError> {
    params.validate()?;
    let full = Subsample::full(x);
    let (stats, profile) = Stats::compute(&full, params.k, params.force_m)?;
    let total = params.c + params.epsilon + params.delta;
    let admissible = stats.n_k - params.epsilon <= params.c && params.c <= params.delta;
    let separated = (0..x.len()).all(|i| (0..x.len()).all(|j| i == j || x.dist(i, j) > Scalar::ZERO));
    let s1 = profile.first_positive();
    let obstruction_holds = s1.is_none_or(|s| total >= s);
    let hypotheses = params.k > 0 && admissible && separated && s1.is_some();
    Ok(KPositiveNote {
        k: params.k,
        n_k: stats.n_k,
        s1,
        admissible,
        gap_condition: stats.below_all_gaps(total),
        separated,
        obstruction_holds,
        outcome: Outcome::judge(hypotheses, obstruction_holds),
    })
}
