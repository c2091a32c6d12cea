//! WebAssembly entry points for the static demo page. Every export returns a
//! JSON string so the page needs no bindings beyond strings and numbers.

use dflab_core::graph_form::{build_model, topo, InteriorRule, ModelSpec};
use dflab_core::metrics::{auto_scale, ball, budget_metric, budgets_m1, budgets_m2, cutoff_decay_profile, Profile};
use dflab_core::spectral::{cosh_wave, plane_wave, shnol_ratio, PerturbedForm};
use dflab_core::PseudoMetric;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn render(r: dflab_core::Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Annulus-to-bulk ratios of a wave on the line `[-radius, radius]`.
/// `kind` is `"plane"` (parameter θ) or `"cosh"` (parameter μ).
#[wasm_bindgen]
pub fn shnol_curve(kind: &str, param: f64, radius: usize) -> String {
    render((|| {
        let g = build_model(&ModelSpec::lattice(1, radius.max(10)))?;
        let rho = PseudoMetric::lattice_intrinsic(&g)?;
        let (u, lambda) = match kind {
            "cosh" => cosh_wave(&g, &[param])?,
            _ => plane_wave(&g, &[param])?,
        };
        let o = g.index_of(&[0]).expect("origin in window");
        let (a, s) = (2.0, rho.dist(o, o + 1));
        let step = (radius as f64 / 20.0).max(1.0) * s;
        let mut sets = Vec::new();
        for n in 1..=radius {
            let b = ball(&rho, &[o], n as f64 * step)?;
            if b.iter().any(|&x| !g.is_interior(x)) {
                break;
            }
            sets.push(b);
        }
        let h = PerturbedForm::new(g);
        let r = shnol_ratio(&h, &rho, &u, lambda, &sets, a, s, 0.05, None)?;
        let radii: Vec<f64> = r.indices.iter().map(|&n| n as f64 * step).collect();
        Ok(json!({
            "lambda": lambda,
            "radius": radii,
            "ratio": r.annulus_ratio,
            "verdict": r.verdict,
            "threshold": r.threshold,
        }))
    })())
}

/// Energy measure of the cut-off around the origin against the distance from
/// its support, on the exponential kernel with rate `beta`.
#[wasm_bindgen]
pub fn cutoff_profile(beta: f64, radius: usize) -> String {
    render((|| {
        let g = build_model(&ModelSpec::exponential(radius.max(20), beta, InteriorRule::Margin(10)))?;
        let c = auto_scale(&g, Profile::Identity)?;
        let rho = PseudoMetric::coordinate(&g, c, Profile::Identity)?;
        let o = g.index_of(&[0]).expect("origin in window");
        let d = cutoff_decay_profile(&g, &rho, &[o], 5.0 * c, 2)?;
        Ok(json!({
            "beta": beta,
            "delta": d.right.delta,
            "measure": d.right.measure,
            "slope": d.right.slope,
        }))
    })())
}

/// Budget-metric distances on the two-hub graph for `N = 4^k`, `k = 1..=max_k`.
#[wasm_bindgen]
pub fn degeneration(max_k: u32) -> String {
    render((|| {
        let mut rows = Vec::new();
        for k in 1..=max_k.clamp(1, 6) {
            let n = 4usize.pow(k);
            let g = build_model(&ModelSpec::TopoExample { n })?;
            rows.push(json!({
                "n": n,
                "m2_a1_b1": budget_metric(&budgets_m2(&g)).dist(topo::A1, topo::b(1)),
                "m1_a1_a2": budget_metric(&budgets_m1(&g)).dist(topo::A1, topo::A2),
                "inv_sqrt_n": 1.0 / (n as f64).sqrt(),
            }));
        }
        Ok(Value::Array(rows))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn plane_wave_is_in_spectrum_and_cosh_is_not() {
        let v = parse(shnol_curve("plane", 0.7, 400));
        assert_eq!(v["verdict"], "in_spectrum");
        assert!(v["ratio"].as_array().unwrap().len() > 3);
        let v = parse(shnol_curve("cosh", 0.3, 300));
        assert_eq!(v["verdict"], "inconclusive");
        assert!(v["lambda"].as_f64().unwrap() < 0.0);
    }

    #[test]
    fn cutoff_slope_matches_beta() {
        let v = parse(cutoff_profile(0.5, 80));
        assert!((v["slope"].as_f64().unwrap() + 0.5).abs() < 1e-6);
    }

    #[test]
    fn degeneration_rows_shrink() {
        let v = parse(degeneration(4));
        let rows = v.as_array().unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            assert!(r["m2_a1_b1"].as_f64().unwrap() <= 1.01 * r["inv_sqrt_n"].as_f64().unwrap());
        }
    }

    #[test]
    fn errors_come_back_as_json() {
        let v = parse(cutoff_profile(-1.0, 40));
        assert!(v["error"].is_string());
    }
}
