//! Browser bindings for the grouprec demo page. Every export takes plain
//! strings and numbers and returns a JSON string.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use grouprec::cli::report::round6;
use grouprec::clustering::{select_k, spectral_cluster};
use grouprec::consensus::{recommend, Catalog, Group, Method, ScoringParams};
use grouprec::corpus::PreferenceProfile;
use grouprec::embedding::{cosine_similarity_matrix, embed_tfidf};
use grouprec::validation::{contingency, MetricsReport, RecallConvention};

fn tokens(s: &str) -> Vec<&str> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect()
}

fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json!(round6(n.as_f64().unwrap_or(0.0))),
        Value::Array(a) => Value::Array(a.into_iter().map(rounded).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}

/// Pair-counting metrics for two label sequences (comma or space
/// separated, any label strings).
pub fn metrics_json(predicted: &str, truth: &str) -> Result<String, String> {
    let p = tokens(predicted);
    let t = tokens(truth);
    let c = contingency(&p, &t).map_err(|e| e.to_string())?;
    let out = json!({
        "standard": MetricsReport::from_counts(&c, RecallConvention::Standard),
        "over_agreements": MetricsReport::from_counts(&c, RecallConvention::OverAgreements),
    });
    Ok(rounded(out).to_string())
}

/// Runs all four consensus methods. Each non-empty line of `profiles` is
/// `user: item item ...` in preference order; the catalog is every listed
/// item in order of first mention.
pub fn consensus_json(profiles: &str, k: usize, a: f64, c: f64) -> Result<String, String> {
    let mut members = Vec::new();
    let mut catalog: Vec<String> = Vec::new();
    for (n, line) in profiles.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (user, items) = line
            .split_once(':')
            .ok_or_else(|| format!("line {}: expected `user: items`", n + 1))?;
        let items = tokens(items);
        for item in &items {
            if !catalog.iter().any(|c| c == item) {
                catalog.push(item.to_string());
            }
        }
        members.push(PreferenceProfile::new(user.trim(), items));
    }
    let group = Group::new(0, members).map_err(|e| e.to_string())?;
    let catalog = Catalog::new(catalog).map_err(|e| e.to_string())?;
    let params = ScoringParams::new(a, c, k).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for method in Method::ALL {
        let (rec, rep) = recommend(method, &group, &catalog, &params).map_err(|e| e.to_string())?;
        out.push(json!({
            "method": method.as_str(),
            "items": rec.items,
            "per_user": rep.per_user,
            "group_score": rep.group_score,
        }));
    }
    Ok(rounded(Value::Array(out)).to_string())
}

/// TF-IDF + spectral clustering of one text per line, choosing the cluster
/// count in `k_min..=k_max` by mean silhouette.
pub fn cluster_json(texts: &str, k_min: usize, k_max: usize, seed: u64) -> Result<String, String> {
    let texts: Vec<&str> = texts.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if texts.len() < 3 {
        return Err("need at least three texts".into());
    }
    let k_max = k_max.min(texts.len() - 1);
    if k_min < 2 || k_min > k_max {
        return Err(format!("cluster counts must satisfy 2 <= min <= max <= {}", texts.len() - 1));
    }
    let sim = cosine_similarity_matrix(&embed_tfidf(&texts).map_err(|e| e.to_string())?);
    let report = select_k(&sim, k_min..=k_max, seed).map_err(|e| e.to_string())?;
    let labels = spectral_cluster(&sim, report.chosen_k, seed).map_err(|e| e.to_string())?;
    let out = json!({
        "chosen_k": report.chosen_k,
        "silhouette": report.per_k,
        "labels": labels,
    });
    Ok(rounded(out).to_string())
}

#[wasm_bindgen]
pub fn metrics(predicted: &str, truth: &str) -> Result<String, JsValue> {
    metrics_json(predicted, truth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn consensus(profiles: &str, k: usize, a: f64, c: f64) -> Result<String, JsValue> {
    consensus_json(profiles, k, a, c).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn cluster(texts: &str, k_min: usize, k_max: usize, seed: u32) -> Result<String, JsValue> {
    cluster_json(texts, k_min, k_max, u64::from(seed)).map_err(|e| JsValue::from_str(&e))
}
