//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Fields are given as the TOML body of the `[field]` section of an
//! experiment config (`variant`, `[profile]`, `[ladder]`, `[layout]`). The plain functions are usable from native Rust; the
//! `js_*` wrappers convert errors for JavaScript.

use flowlab::bc::{bc_lower, bc_upper, exact_at_least, EventProfile, ExactMethod};
use flowlab::coeff::{CoefficientField, FieldConfig};
use flowlab::homog::effective_constants_for;
use flowlab::sde::{integrate_bundle, required_dt, BrownianPath, IntegrateOptions, StopRule};
use wasm_bindgen::prelude::*;

/// Samples allowed per demo path, after striding.
const MAX_POINTS: usize = 400;

fn field(toml_text: &str) -> Result<(FieldConfig, CoefficientField), String> {
    let cfg = FieldConfig::from_toml(toml_text).map_err(|e| e.to_string())?;
    let f = cfg.build().map_err(|e| e.to_string())?;
    Ok((cfg, f))
}

/// `sigma_1` on a `width x height` grid over `[-1, levels] x [0, 1]`, row
/// major with `y` increasing downwards from 1.
pub fn sigma_heatmap(toml_text: &str, width: usize, height: usize) -> Result<Vec<f64>, String> {
    if width < 2 || height < 2 || width * height > 4_000_000 {
        return Err("grid must be at least 2 x 2 and at most 4e6 cells".into());
    }
    let (_, f) = field(toml_text)?;
    let span = f.layout.levels() as f64 + 1.0;
    let mut out = Vec::with_capacity(width * height);
    for r in 0..height {
        let y = 1.0 - r as f64 / (height - 1) as f64;
        for c in 0..width {
            let x = -1.0 + span * c as f64 / (width - 1) as f64;
            out.push(f.eval(x, y)[0]);
        }
    }
    Ok(out)
}

/// Paths from `x0` on `members` equally spaced lines `y`, all driven by one
/// Brownian path, concatenated as `members` blocks of equal length.
pub fn bundle_paths(toml_text: &str, seed: u64, x0: f64, members: usize, horizon: f64) -> Result<Vec<f64>, String> {
    if members == 0 || members > 64 {
        return Err("members must lie in 1..=64".into());
    }
    if !(horizon > 0.0 && horizon <= 10.0) {
        return Err("horizon must lie in (0, 10]".into());
    }
    let (_, f) = field(toml_text)?;
    let dt = required_dt(f.max_frequency() as f64, flowlab::sde::DEFAULT_RHO).min(horizon / 64.0);
    let steps = (horizon / dt).ceil() as usize;
    if steps > 20_000_000 {
        return Err(format!("{steps} steps needed; lower ladder.a_max"));
    }
    let path = BrownianPath::new(seed, dt, horizon, f.drivers.count()).map_err(|e| e.to_string())?;
    let initial: Vec<(f64, f64)> = (0..members).map(|i| (x0, (i as f64 + 0.5) / members as f64)).collect();
    let opts = IntegrateOptions {
        record_stride: steps.div_ceil(MAX_POINTS).max(1),
        ..Default::default()
    };
    let bundle = integrate_bundle(&f, &initial, &path, StopRule::Horizon, &opts).map_err(|e| e.to_string())?;
    let len = bundle.members.iter().map(|m| m.states.len()).min().unwrap_or(0);
    Ok(bundle.members.iter().flat_map(|m| m.states[..len].iter().copied()).collect())
}

/// `v`, `beta1`, `alpha_hat`, `beta_hat` of the field's profile as JSON.
pub fn effective_constants(toml_text: &str) -> Result<String, String> {
    let (cfg, _) = field(toml_text)?;
    let drivers = cfg.drivers().map_err(|e| e.to_string())?;
    let c = effective_constants_for(&drivers, true).map_err(|e| e.to_string())?;
    serde_json::to_string(&c).map_err(|e| e.to_string())
}

/// `[max(0, lower), exact, min(1, upper)]` for `P(at least m of the events)`.
pub fn bc_bounds(p: &[f64], m: usize) -> Result<Vec<f64>, String> {
    let prof = EventProfile::new(p.to_vec(), m).map_err(|e| e.to_string())?;
    let exact = exact_at_least(&prof, ExactMethod::Auto).map_err(|e| e.to_string())?;
    Ok(vec![bc_lower(&prof).max(0.0), exact, bc_upper(&prof).min(1.0)])
}

#[wasm_bindgen]
pub fn js_sigma_heatmap(toml_text: &str, width: usize, height: usize) -> Result<Vec<f64>, JsError> {
    sigma_heatmap(toml_text, width, height).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn js_bundle_paths(toml_text: &str, seed: u32, x0: f64, members: usize, horizon: f64) -> Result<Vec<f64>, JsError> {
    bundle_paths(toml_text, seed as u64, x0, members, horizon).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn js_effective_constants(toml_text: &str) -> Result<String, JsError> {
    effective_constants(toml_text).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn js_bc_bounds(p: Vec<f64>, m: usize) -> Result<Vec<f64>, JsError> {
    bc_bounds(&p, m).map_err(|e| JsError::new(&e))
}
