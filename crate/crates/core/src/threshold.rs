//! Tissue threshold `ω(β, ·)`: the invasion gate driven by the local ECM level
//! relative to the best-preserved point on the interface.

use std::f64::consts::FRAC_PI_2;

/// `ω` as a function of the normalised ECM ratio.
///
/// Zero at `ratio == beta`, rising to one at both ends of `[0, 1]`. The ratio
/// is clamped into `[0, 1]` first.
pub fn tissue_threshold(ratio: f64, beta: f64) -> f64 {
    let r = ratio.clamp(0.0, 1.0);
    let value = if r <= beta {
        (FRAC_PI_2 * (1.0 - r / beta)).sin()
    } else {
        (FRAC_PI_2 / (1.0 - beta) * (r - beta)).sin()
    };
    value.clamp(0.0, 1.0)
}

/// Local ECM divided by its supremum over the interface, clamped to `[0, 1]`.
/// A vanishing supremum (fully degraded interface) maps to ratio 0.
pub fn ecm_ratio(local: f64, supremum: f64) -> f64 {
    if supremum > 0.0 {
        (local / supremum).clamp(0.0, 1.0)
    } else {
        0.0
    }
}
