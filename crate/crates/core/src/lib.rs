//! Exact and adiabatic geometric phases for the two-level level-crossing model.
//!
//! The model Hamiltonian is `h(t) = E(t)·1 + g·σ·y(t)` for a three-component
//! background parameter `y(t)` sweeping a path that avoids the crossing point
//! `y = 0`. The crate provides:
//!
//! - [`spectra`]: the gauge-fixed eigenframe of the 2×2 Hamiltonian in polar
//!   coordinates, analytically and by numeric diagonalization, and the real
//!   rotation that diagonalizes the geometric terms near the crossing;
//! - [`connection`]: the geometric-term matrix ⟨m|i∂ₜ|n⟩ in closed form and by
//!   finite differences, plus loop integrals of its diagonal (holonomies,
//!   solid angles);
//! - [`paths`]: parameter-path generators (fixed-θ circles, the real-plane
//!   loop) and interpolated custom paths, with JSON file round-tripping;
//! - [`propagator`]: time-ordered evolution in the original 2×2 picture, the
//!   effective picture with explicit geometric terms, and the near-crossing
//!   rotated picture, with cross-picture equivalence checks;
//! - [`phases`]: total/dynamical/geometric phase extraction, adiabatic
//!   predictions, and the hidden local gauge transformations;
//! - [`experiments`]: runnable experiment configurations with CSV/JSON output.
//!
//! Units: ħ = 1; phases in radians; energies and times in reciprocal units.

pub mod connection;
pub mod error;
pub mod experiments;
pub mod paths;
pub mod phases;
pub mod propagator;
pub mod spectra;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Complex two-component state vector.
pub type CVec2 = nalgebra::Vector2<C64>;
/// Complex 2×2 matrix.
pub type CMat2 = nalgebra::Matrix2<C64>;

pub use connection::{
    connection_analytic, connection_numeric, diagonal_holonomy, solid_angle, AngularVelocity,
    ConnectionSample,
};
pub use paths::{
    circle_path, custom_path, read_path_file, real_plane_loop, write_path_file, Interpolation,
    ParameterPath, PathKnot, PathSample,
};
pub use phases::{
    adiabatic_prediction, dynamical_phase, gauge_invariant_phase, gauge_transform,
    gauged_holonomy, geometric_phase_exact, total_phase, wrap_angle, GaugeFunction, PhaseReport,
};
pub use propagator::{
    equivalence_check, evolve_c_basis, evolve_effective, evolve_original, exp_minus_i,
    CBasisPhases, EvolutionResult, IntegratorConfig, Scheme,
};
pub use spectra::{
    eigenframe, eigenframe_numeric, hamiltonian_at, polar_from_cartesian, rotation_u,
    Hamiltonian2, Level, PolarCoords, RotationU, SpectralFrame,
};
