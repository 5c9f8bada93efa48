//! Shared fixtures for the integrator benchmarks.

use berry_core::{circle_path, eigenframe, CVec2, Level, ParameterPath};
use std::f64::consts::FRAC_PI_2;

/// The adiabatic reference circle: θ = π/2, g·r·T = 100.
pub fn adiabatic_circle() -> ParameterPath {
    circle_path(1.0, FRAC_PI_2, 100.0, 1, 0.0, 4096).expect("valid circle")
}

/// Lower-level eigenstate at the start of `path`.
pub fn minus_state(path: &ParameterPath, coupling: f64) -> CVec2 {
    let polar = path.polar_samples().expect("path avoids the crossing");
    let (e0, _, _) = path.eval(0.0);
    *eigenframe(&polar[0], e0, coupling)
        .expect("non-degenerate start")
        .vector(Level::Minus)
}
