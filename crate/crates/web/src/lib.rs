//! wasm-bindgen bindings for the static page in `www/`.
//!
//! Everything is returned as a JSON string; the page parses it and draws.

use actsense::exponents::{
    causal_lower_bound, causal_upper_bound, default_eta_grid, example_closed_forms, open_loop_exponent,
    sequential_denominator, OptimizerSettings,
};
use actsense::fss::{FssConfig, FssPolicy};
use actsense::model::table1_model;
use actsense::montecarlo::estimate_fss;
use actsense::policies::{PolicyTables, TestState};
use actsense::rng::TrialRng;
use actsense::sequential::{margin, next_control, should_stop, SequentialConfig};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: actsense::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Computed and closed-form exponents of the example at crossover `eps`.
/// The causal lower bound uses a coarse belief lattice to stay interactive.
#[wasm_bindgen]
pub fn exponents(eps: f64) -> Result<String, JsValue> {
    let model = table1_model(eps).map_err(js_err)?;
    let closed = example_closed_forms(eps).map_err(js_err)?;
    let (ol, q) = open_loop_exponent(&model, &OptimizerSettings::default()).map_err(js_err)?;
    let ub = causal_upper_bound(&model).map_err(js_err)?;
    let lb = causal_lower_bound(&model, &default_eta_grid(&model), 0.05).map_err(js_err)?;
    let denominators: Vec<f64> = (0..3)
        .map(|i| sequential_denominator(&model, i).map(|d| d.0))
        .collect::<actsense::Result<_>>()
        .map_err(js_err)?;
    Ok(json!({
        "closed_forms": closed,
        "open_loop": ol,
        "open_loop_q": q,
        "causal_lower": lb.safe,
        "causal_upper": ub,
        "sequential_denominators": denominators,
    })
    .to_string())
}

/// Max error of the fixed-sample test for each `n` in `ns`, for the
/// open-loop and causal policies.
#[wasm_bindgen]
pub fn fss_curve(eps: f64, ns: Vec<u32>, trials: u32, seed: u64) -> Result<String, JsValue> {
    let model = table1_model(eps).map_err(js_err)?;
    let (_, q) = open_loop_exponent(&model, &OptimizerSettings::default()).map_err(js_err)?;
    let mut rows = Vec::new();
    for (name, policy) in [("open_loop", FssPolicy::OpenLoop { q }), ("causal", FssPolicy::CausalChernoff)] {
        for &n in &ns {
            let config = FssConfig {
                policy: policy.clone(),
                n: n as usize,
            };
            let report = estimate_fss(&model, &config, trials.into(), seed, 1).map_err(js_err)?;
            rows.push(json!({ "policy": name, "n": n, "max_error": report.max_error }));
        }
    }
    Ok(serde_json::Value::Array(rows).to_string())
}

/// One run of the sequential Chernoff test: per step the control, the
/// observation, the ML estimate and its log-likelihood margin.
#[wasm_bindgen]
pub fn sequential_trace(eps: f64, c: f64, truth: usize, seed: u64) -> Result<String, JsValue> {
    let model = table1_model(eps).map_err(js_err)?;
    model.check_hypothesis(truth).map_err(js_err)?;
    let config = SequentialConfig::chernoff(c).with_max_steps(10_000);
    config.validate(3).map_err(js_err)?;
    let tables = PolicyTables::new(&model).map_err(js_err)?;
    let mut rng = TrialRng::new(seed, truth, 0);
    let mut state = TestState::new(3);
    let mut steps = Vec::new();
    loop {
        let u = next_control(&state, &config, &tables, 3, &mut rng).map_err(js_err)?;
        let y = model.pmf(truth, u).sample_with(rng.observation_uniform());
        state.update(&model, u, y);
        let m = margin(&state).map_err(js_err)?;
        steps.push(json!({ "control": u, "observation": y, "ml": state.ml_index(), "margin": m }));
        if should_stop(&state, &config) || state.steps() >= config.max_steps {
            break;
        }
    }
    Ok(json!({ "threshold": -c.ln(), "decision": state.ml_index(), "steps": steps }).to_string())
}
