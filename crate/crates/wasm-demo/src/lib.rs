//! Browser bindings: three reduced-grid sweeps returned as CSV text.
//!
//! The page in `www/` calls these and draws the result on a canvas.

use nasep::experiments::{run_sweep, Axis, Figure, SweepConfig};
use wasm_bindgen::prelude::*;

/// Grid sizes above this are clamped; the browser runs single-threaded.
pub const MAX_STEPS: usize = 101;

fn clamp(steps: usize) -> usize {
    steps.clamp(2, MAX_STEPS)
}

fn sweep_csv(figure: Figure, steps: usize, outputs: &[&str]) -> Result<String, String> {
    let (a1, a2) = figure.default_axes();
    let resize = |a: Axis| Axis::new(&a.path, a.min, a.max, clamp(steps));
    let cfg = SweepConfig {
        axis1: Some(resize(a1)),
        axis2: a2.map(resize),
        outputs: Some(outputs.iter().map(|s| s.to_string()).collect()),
        ..SweepConfig::default()
    };
    run_sweep(figure, &cfg)
        .and_then(|t| t.to_csv_string())
        .map_err(|e| e.to_string())
}

/// Charge-FT closed-form term and correction against the rotation angle.
pub fn charge_ft_curve(steps: usize) -> Result<String, String> {
    sweep_csv(
        Figure::Three,
        steps,
        &["re_exp_kappa", "im_exp_kappa", "re_correction", "im_correction"],
    )
}

/// Average surprisal SEP over the two subsystem-A inverse temperatures.
pub fn surprisal_heatmap(steps: usize) -> Result<String, String> {
    sweep_csv(Figure::Four, steps, &["avg_sigma_surp_traj"])
}

/// Real and imaginary trajectory SEP on the witness trajectory.
pub fn trajectory_heatmap(steps: usize) -> Result<String, String> {
    sweep_csv(Figure::Five, steps, &["re_sigma_traj", "im_sigma_traj"])
}

#[wasm_bindgen(js_name = chargeFtCurve)]
pub fn charge_ft_curve_js(steps: usize) -> Result<String, JsError> {
    charge_ft_curve(steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = surprisalHeatmap)]
pub fn surprisal_heatmap_js(steps: usize) -> Result<String, JsError> {
    surprisal_heatmap(steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trajectoryHeatmap)]
pub fn trajectory_heatmap_js(steps: usize) -> Result<String, JsError> {
    trajectory_heatmap(steps).map_err(|e| JsError::new(&e))
}
