//! Browser bindings. Each function takes a group definition in the file syntax
//! (no nested `base =`/`factor =` paths) and returns a JSON string.

use std::path::Path;

use cayley_core::cogrowth::cogrowth_table;
use cayley_core::group::file::parse_group_definition;
use cayley_core::spectral::spectral_radius_bounds;
use cayley_core::MarkedGroup;
use serde_json::json;
use wasm_bindgen::prelude::*;

// browsers get a hard stop instead of a frozen tab
const MAX_DEPTH: usize = 120;

fn group(text: &str) -> Result<MarkedGroup, String> {
    parse_group_definition(text, Path::new(".")).map_err(|e| e.to_string())
}

fn depth_ok(depth: usize) -> Result<usize, String> {
    if (1..=MAX_DEPTH).contains(&depth) {
        Ok(depth)
    } else {
        Err(format!("depth must be in 1..={MAX_DEPTH}"))
    }
}

pub fn spectral_json(text: &str, depth: usize) -> Result<String, String> {
    let g = group(text)?;
    let e = spectral_radius_bounds(&g, depth_ok(depth)?).map_err(|e| e.to_string())?;
    let extrapolated: Vec<f64> = (1..=e.depth()).map(|n| e.extrapolated_at(n)).collect();
    Ok(json!({
        "group": g.name(),
        "bounds": e.bounds(),
        "extrapolated": extrapolated,
        "estimate": e.extrapolated,
        "upper": e.upper,
    })
    .to_string())
}

pub fn cogrowth_json(text: &str, depth: usize) -> Result<String, String> {
    let g = group(text)?;
    let t = cogrowth_table(&g, depth_ok(depth)?.min(40)).map_err(|e| e.to_string())?;
    let rates: Vec<Option<f64>> = (0..=t.depth()).map(|k| (k > 0).then(|| t.gamma_rate(k))).collect();
    Ok(json!({
        "group": g.name(),
        "gamma": t.gamma.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "rates": rates,
        "girth": t.girth,
        "omega": t.omega_estimate(),
    })
    .to_string())
}

pub fn normal_form_json(text: &str, word: &str) -> Result<String, String> {
    let g = group(text)?;
    let w = g.parse_word(word).map_err(|e| e.to_string())?;
    let x = g.evaluate_word(&w);
    let shortest = g.word_of(&x).map(|v| g.format_word(&v));
    Ok(json!({
        "group": g.name(),
        "input": g.format_word(&w),
        "normal_form": g.describe(&x),
        "word": shortest,
        "identity": x.is_identity(),
    })
    .to_string())
}

/// Return-probability bounds on `rho(G, X)` and their extrapolation.
#[wasm_bindgen]
pub fn spectral(text: &str, depth: usize) -> Result<String, JsValue> {
    spectral_json(text, depth).map_err(|e| JsValue::from_str(&e))
}

/// Cogrowth counts `gamma(k)` and their `k`-th roots.
#[wasm_bindgen]
pub fn cogrowth(text: &str, depth: usize) -> Result<String, JsValue> {
    cogrowth_json(text, depth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = normalForm)]
pub fn normal_form(text: &str, word: &str) -> Result<String, JsValue> {
    normal_form_json(text, word).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const F2: &str = "engine = free\ngenerators = a b\n";

    #[test]
    fn free_group_curves() {
        let v: serde_json::Value = serde_json::from_str(&spectral_json(F2, 40).unwrap()).unwrap();
        assert!((v["estimate"].as_f64().unwrap() - 3f64.sqrt() / 2.0).abs() < 0.01);
        let v: serde_json::Value = serde_json::from_str(&cogrowth_json(F2, 8).unwrap()).unwrap();
        assert_eq!(v["gamma"][8], "1");
        assert!(v["girth"].is_null());
    }

    #[test]
    fn normal_forms() {
        let s3 = "engine = coset-table\ngenerators = a b\nrelators = a^2 b^2 (a b)^3\n";
        let v: serde_json::Value = serde_json::from_str(&normal_form_json(s3, "a b a b a b").unwrap()).unwrap();
        assert_eq!(v["identity"], true);
        let v: serde_json::Value = serde_json::from_str(&normal_form_json(F2, "a b b^-1 a").unwrap()).unwrap();
        assert_eq!(v["word"], "a^2");
        assert!(normal_form_json(F2, "a c").is_err());
        assert!(spectral_json(F2, 0).is_err());
    }
}
