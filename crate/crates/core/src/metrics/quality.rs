use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight of penetration volume in the quality index.
pub const QUALITY_WEIGHT: f64 = 0.301;

/// `a·x + (1 − a)·y` for penetration volume `x` (cm³) and simulation
/// displacement `y` (cm). Lower is better.
pub fn quality_index(penetration: f64, displacement: f64, a: f64) -> f64 {
    a * penetration + (1.0 - a) * displacement
}

/// One point of the high-quality-ratio curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub penetration_threshold: f64,
    pub ratio: f64,
}

/// Fraction of grasps with penetration `<= t` and displacement `<=
/// disp_threshold`, for each `t` in `thresholds`.
pub fn high_quality_ratio(per_grasp: &[(f64, f64)], thresholds: &[f64], disp_threshold: f64) -> Result<Vec<CurvePoint>> {
    if per_grasp.is_empty() {
        return Err(Error::Empty("grasp metrics"));
    }
    let n = per_grasp.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let ok = per_grasp.iter().filter(|(p, d)| *p <= t && *d <= disp_threshold).count();
            CurvePoint { penetration_threshold: t, ratio: ok as f64 / n }
        })
        .collect())
}

/// `steps + 1` evenly spaced thresholds over `[0, max]`.
pub fn threshold_sweep(max: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| max * i as f64 / steps.max(1) as f64).collect()
}
