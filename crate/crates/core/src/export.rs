//! JSON and DOT renderings. Every JSON document carries a top-level
//! `"schema"` key; object keys are emitted in sorted order and arrays in
//! element order, so equal inputs give byte-identical output.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::clustering_model::StepClustering;
use crate::gamma::{ElementId, GammaPoset};
use crate::interleaving::InterleavingWitness;
use crate::layer_points::PointKind;
use crate::scalar::Scalar;

pub const CLUSTERING_SCHEMA: &str = "layerscope.clustering/1";
pub const LAYER_POINTS_SCHEMA: &str = "layerscope.layer-points/1";
pub const INTERLEAVING_SCHEMA: &str = "layerscope.interleaving/1";
pub const RETRACT_SCHEMA: &str = "layerscope.retract-check/1";
pub const ERROR_SCHEMA: &str = "layerscope.error/1";

/// Pretty JSON with a trailing newline.
pub fn to_pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Serializes `body` and adds the `"schema"` key.
pub fn with_schema<T: Serialize>(schema: &str, body: &T) -> Value {
    let mut value = serde_json::to_value(body).expect("report types serialize");
    match &mut value {
        Value::Object(map) => {
            map.insert("schema".into(), Value::String(schema.into()));
            value
        }
        _ => json!({ "schema": schema, "data": value }),
    }
}

pub fn error_json(kind: &str, message: &str) -> Value {
    json!({ "schema": ERROR_SCHEMA, "error": kind, "message": message })
}

fn labels_of(set: &[usize], labels: &[String]) -> Vec<String> {
    set.iter().map(|&p| labels[p].clone()).collect()
}

fn point_text(point: &[Scalar]) -> String {
    let parts: Vec<String> = point.iter().map(Scalar::to_string).collect();
    format!("({})", parts.join(", "))
}

fn element_json(g: &GammaPoset, e: ElementId, labels: &[String]) -> Value {
    let h = g.source();
    json!({
        "id": e,
        "cell": h.cell(g.cell(e)),
        "point": g.point(e),
        "cluster": g.cluster(e),
        "labels": labels_of(g.cluster(e), labels),
    })
}

/// The clustering table, optionally with its Gamma poset.
pub fn clustering_json(h: &StepClustering, labels: &[String], gamma: Option<&GammaPoset>) -> Value {
    let axes: Vec<Value> = h
        .axes()
        .iter()
        .map(|a| json!({ "variance": a.variance, "sentinel": a.sentinel, "values": a.values() }))
        .collect();
    let cells: Vec<Value> = h
        .cells()
        .map(|(flat, c)| json!({ "cell": h.cell(flat), "point": h.point_of(flat), "clusters": c }))
        .collect();
    let mut map = Map::new();
    map.insert("schema".into(), json!(CLUSTERING_SCHEMA));
    map.insert("labels".into(), json!(labels));
    map.insert("axes".into(), Value::Array(axes));
    map.insert("cells".into(), Value::Array(cells));
    if let Some(g) = gamma {
        let elements: Vec<Value> = (0..g.len()).map(|e| element_json(g, e, labels)).collect();
        let edges: Vec<Value> = g.covering_edges().into_iter().map(|(a, b, axis)| json!([a, b, axis])).collect();
        map.insert("gamma".into(), json!({ "elements": elements, "edges": edges }));
    }
    Value::Object(map)
}

/// A list of layer or branch points with its scope (`"global"` or
/// `"slice"` plus the 1-based axis).
pub fn layer_points_json(
    g: &GammaPoset,
    ids: &[ElementId],
    kind: PointKind,
    slice_axis: Option<usize>,
    labels: &[String],
) -> Value {
    let points: Vec<Value> = ids.iter().map(|&e| element_json(g, e, labels)).collect();
    let edges: Vec<Value> = hasse(g, ids).into_iter().map(|(a, b)| json!([a, b])).collect();
    json!({
        "schema": LAYER_POINTS_SCHEMA,
        "kind": kind,
        "scope": if slice_axis.is_some() { "slice" } else { "global" },
        "axis": slice_axis.map(|a| a + 1),
        "labels": labels,
        "points": points,
        "order": edges,
    })
}

/// Covering pairs of the order restricted to `ids`.
pub fn hasse(g: &GammaPoset, ids: &[ElementId]) -> Vec<(ElementId, ElementId)> {
    let mut out = Vec::new();
    for &a in ids {
        for &b in ids {
            if g.lt(a, b) && !ids.iter().any(|&c| g.lt(a, c) && g.lt(c, b)) {
                out.push((a, b));
            }
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn node_label(g: &GammaPoset, e: ElementId, labels: &[String]) -> String {
    format!("{} {{{}}}", point_text(&g.point(e)), labels_of(g.cluster(e), labels).join(","))
}

fn dot(name: &str, g: &GammaPoset, nodes: &[ElementId], edges: &[(ElementId, ElementId)], labels: &[String]) -> String {
    let mut out = format!("digraph {name} {{\n  rankdir=BT;\n");
    for &e in nodes {
        out.push_str(&format!("  n{e} [label=\"{}\"];\n", dot_escape(&node_label(g, e, labels))));
    }
    for &(a, b) in edges {
        out.push_str(&format!("  n{a} -> n{b};\n"));
    }
    out.push_str("}\n");
    out
}

/// Gamma as a DOT digraph of its covering links.
pub fn gamma_dot(g: &GammaPoset, labels: &[String]) -> String {
    let nodes: Vec<ElementId> = (0..g.len()).collect();
    let edges: Vec<(ElementId, ElementId)> = g.covering_edges().into_iter().map(|(a, b, _)| (a, b)).collect();
    dot("gamma", g, &nodes, &edges, labels)
}

/// The sub-poset on `ids` as a DOT Hasse diagram.
pub fn layer_points_dot(g: &GammaPoset, ids: &[ElementId], labels: &[String]) -> String {
    dot("layer_points", g, ids, &hasse(g, ids), labels)
}

/// `{exists, commutes, failures}` plus the checked shifts.
pub fn interleaving_json(w: &InterleavingWitness) -> Value {
    json!({
        "schema": INTERLEAVING_SCHEMA,
        "exists": w.exists,
        "commutes": w.commutes,
        "valid": w.valid(),
        "epsilon": w.f.shift,
        "delta": w.g.shift,
        "checked_points": w.checked_points,
        "failures": w.failures,
    })
}
