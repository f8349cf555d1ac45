//! Browser bindings. Each export takes point coordinates as CSV text and
//! returns a JSON document; the `*_json` functions do the work and are
//! plain Rust so they can be tested natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use layerscope::export::{clustering_json, layer_points_json, to_pretty, with_schema, RETRACT_SCHEMA};
use layerscope::layer_points::{branch_points, global_layer_points, PointKind};
use layerscope::metric::{density_radius, directional_hausdorff, load_coordinates};
use layerscope::stability::{check_main_theorem, Parameters};
use layerscope::{FiniteMetricSpace, GammaPoset, Metric, Scalar, StepClustering, Subsample};

fn load(csv: &str, metric: &str) -> Result<FiniteMetricSpace, String> {
    let metric: Metric = metric.parse().map_err(|e: layerscope::MetricError| e.to_string())?;
    load_coordinates(csv.as_bytes(), metric).map_err(|e| e.to_string())
}

fn optional_scalar(text: &str, name: &str) -> Result<Option<Scalar>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(None);
    }
    text.parse().map(Some).map_err(|_| format!("{name}: not a decimal number: {text:?}"))
}

fn parse_indices(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("sample: not an index: {s:?}")))
        .collect()
}

/// The degree-Rips bifiltration for degrees `0..=k_max`, with Gamma and
/// its global layer points.
pub fn cluster_json(csv: &str, metric: &str, k_max: usize) -> Result<String, String> {
    let z = load(csv, metric)?;
    let h = StepClustering::from_degree_rips(&z, k_max).map_err(|e| e.to_string())?;
    let g = GammaPoset::new(h.clone());
    let lp = global_layer_points(&g);
    let mut doc = clustering_json(&h, z.labels(), Some(&g));
    doc["layer_points"] = json!(lp.global);
    Ok(to_pretty(&doc))
}

/// Layer or branch points of the single-parameter slice at degree `k`.
pub fn slice_points_json(csv: &str, metric: &str, k: usize, branch: bool) -> Result<String, String> {
    let z = load(csv, metric)?;
    let g = GammaPoset::new(StepClustering::degree_rips_slice(&z, k).map_err(|e| e.to_string())?);
    let (ids, kind) = if branch {
        (branch_points(&g).map_err(|e| e.to_string())?.global, PointKind::Branch)
    } else {
        (global_layer_points(&g).global, PointKind::Layer)
    };
    Ok(to_pretty(&layer_points_json(&g, &ids, kind, None, z.labels())))
}

/// The retract check for the sample given as comma-separated indices.
/// Empty parameter strings take the defaults `ε = N_k`,
/// `c = max(0, N_k - ε)`, `δ = max(2h, N_k - ε)`.
pub fn retract_json(
    csv: &str,
    metric: &str,
    sample: &str,
    k: usize,
    c: &str,
    eps: &str,
    delta: &str,
) -> Result<String, String> {
    let y = load(csv, metric)?;
    let x = Subsample::new(&y, parse_indices(sample)?).map_err(|e| e.to_string())?;
    let n_k = density_radius(&x, k).map_err(|e| e.to_string())?;
    let epsilon = optional_scalar(eps, "eps")?.unwrap_or(n_k);
    let floor = (n_k - epsilon).max(Scalar::ZERO);
    let c = optional_scalar(c, "c")?.unwrap_or(floor);
    let delta = optional_scalar(delta, "delta")?.unwrap_or(directional_hausdorff(&x).times(2).max(floor));
    let params = Parameters { k, c, epsilon, delta, force_m: false };
    let report = check_main_theorem(&x, &params).map_err(|e| e.to_string())?;
    let mut doc: Value = with_schema(RETRACT_SCHEMA, &report);
    doc["exit_code"] = json!(report.outcome.exit_code());
    Ok(to_pretty(&doc))
}

#[wasm_bindgen]
pub fn cluster(csv: &str, metric: &str, k_max: usize) -> Result<String, JsValue> {
    cluster_json(csv, metric, k_max).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn slice_points(csv: &str, metric: &str, k: usize, branch: bool) -> Result<String, JsValue> {
    slice_points_json(csv, metric, k, branch).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn retract_check(
    csv: &str,
    metric: &str,
    sample: &str,
    k: usize,
    c: &str,
    eps: &str,
    delta: &str,
) -> Result<String, JsValue> {
    retract_json(csv, metric, sample, k, c, eps, delta).map_err(|e| JsValue::from_str(&e))
}
