//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; errors come
//! back as a JS exception carrying the message.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use tbkit::accretive::builtin_system;
use tbkit::avgops::{normalized_mexican_hat, reproduce, SmoothingOptions};
use tbkit::dyadic::{whitney, CellSet, DyadicCube, WhitneyCheck};
use tbkit::gridfn::{Grid, LpExponent, SampledFunction};
use tbkit::sqfn::ScaleGrid;
use tbkit::stopping::{decompose, StoppingOptions};

#[derive(Serialize)]
struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Serialize)]
struct DecomposeView {
    root: Interval,
    selected: Vec<Interval>,
    exceptional_fraction: f64,
    unresolved_leaves: usize,
    /// The system sampled at 256 points across the root, per slot.
    profile: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ReproduceView {
    x: Vec<f64>,
    f: Vec<f64>,
    reproduced: Vec<f64>,
    relative_error: f64,
    scales: usize,
}

#[derive(Serialize)]
struct Square {
    x: f64,
    y: f64,
    side: f64,
}

#[derive(Serialize)]
struct WhitneyView {
    squares: Vec<Square>,
    check: WhitneyCheck,
    passes: bool,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("view serialises")
}

/// Stopping-time decomposition of the unit interval for a built-in system
/// with `slots` copies of exponent `2 * slots`, refined down to `2^-depth`.
pub fn decompose_json(system: &str, slots: usize, depth: u32) -> Result<String, String> {
    if !(1..=10).contains(&depth) {
        return Err("depth must be between 1 and 10".into());
    }
    let sys = builtin_system(system, 1, &vec![2.0 * slots as f64; slots]).map_err(|e| e.to_string())?;
    let root = DyadicCube::new(0, vec![0]);
    let floor = 0.5f64.powi(depth as i32);
    let opts = StoppingOptions { h: floor / 4.0, floor, exact: true };
    let d = decompose(&sys, &root, &opts).map_err(|e| e.to_string())?;
    let profile = sys
        .iter()
        .map(|s| (0..256).map(|k| s.value(&root, &[(k as f64 + 0.5) / 256.0]).map_or(f64::NAN, |v| v.re)).collect())
        .collect();
    Ok(json(&DecomposeView {
        root: Interval { lo: 0.0, hi: 1.0 },
        selected: d.selected.iter().map(|c| Interval { lo: c.lower(0), hi: c.upper(0) }).collect(),
        exceptional_fraction: d.eta_observed,
        unresolved_leaves: d.unresolved_leaves,
        profile,
    }))
}

/// The truncated reproducing formula applied to `exp(-x^2 / width^2)` with
/// scales `[2^lo, 2^hi]` at `per_octave` samples.
pub fn reproduce_json(width: f64, lo: i32, hi: i32, per_octave: usize) -> Result<String, String> {
    if !(width > 0.0 && width <= 8.0) || !(-4..=6).contains(&lo) || !(lo < hi && hi <= 6) || !(1..=16).contains(&per_octave) {
        return Err("need 0 < width <= 8, -4 <= lo < hi <= 6 and 1 <= per_octave <= 16".into());
    }
    let grid = Grid::from_bounds(1.0 / 64.0, &[(-32.0, 32.0)]).map_err(|e| e.to_string())?;
    let f = SampledFunction::from_real_fn(grid, |x| (-(x[0] / width).powi(2)).exp()).map_err(|e| e.to_string())?;
    let scales = ScaleGrid::new(2f64.powi(lo), 2f64.powi(hi), per_octave).map_err(|e| e.to_string())?;
    let psi = normalized_mexican_hat(1).map_err(|e| e.to_string())?;
    let r = reproduce(&f, &scales, &psi, &SmoothingOptions::default()).map_err(|e| e.to_string())?;
    let l2 = LpExponent::new(2.0).unwrap();
    let relative_error = r.sub(&f).map_err(|e| e.to_string())?.lp_norm(l2) / f.lp_norm(l2);
    // every 8th sample is plenty for a plot
    let pick = |g: &SampledFunction| g.values().iter().step_by(8).map(|v| v.re).collect::<Vec<_>>();
    Ok(json(&ReproduceView {
        x: f.grid().centers().step_by(8).map(|c| c[0]).collect(),
        f: pick(&f),
        reproduced: pick(&r),
        relative_error,
        scales: scales.count(),
    }))
}

/// Whitney squares of the open disc of radius `r` centred at `(cx, cy)`
/// inside `[-2, 2)^2`, resolved to cells of side `2^-resolution`.
pub fn whitney_json(cx: f64, cy: f64, r: f64, resolution: u32) -> Result<String, String> {
    if !(2..=7).contains(&resolution) {
        return Err("resolution must be between 2 and 7".into());
    }
    let h = 0.5f64.powi(resolution as i32);
    let grid = Grid::from_bounds(h, &[(-2.0, 2.0), (-2.0, 2.0)]).map_err(|e| e.to_string())?;
    let set = CellSet::from_fn(grid, |x| (x[0] - cx).powi(2) + (x[1] - cy).powi(2) < r * r).map_err(|e| e.to_string())?;
    let dec = whitney(&set, None).map_err(|e| e.to_string())?;
    let check = WhitneyCheck::run(&set, &dec);
    Ok(json(&WhitneyView {
        squares: dec.cubes.iter().map(|c| Square { x: c.lower(0), y: c.lower(1), side: c.side() }).collect(),
        passes: check.passes(2, dec.min_side),
        check,
    }))
}

#[wasm_bindgen(js_name = decompose)]
pub fn decompose_js(system: &str, slots: usize, depth: u32) -> Result<String, JsError> {
    decompose_json(system, slots, depth).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = reproduce)]
pub fn reproduce_js(width: f64, lo: i32, hi: i32, per_octave: usize) -> Result<String, JsError> {
    reproduce_json(width, lo, hi, per_octave).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = whitney)]
pub fn whitney_js(cx: f64, cy: f64, r: f64, resolution: u32) -> Result<String, JsError> {
    whitney_json(cx, cy, r, resolution).map_err(|e| JsError::new(&e))
}
