//! The geometric-term matrix ⟨m|i∂ₜ|n⟩ of the gauge-fixed eigenframe, in
//! closed form and by finite differences, and loop integrals of its diagonal.
//!
//! In the polar-angle frame the matrix depends only on θ and the angular
//! rates: the diagonal entries are `(1 ± cosθ)·φ̇/2` and the off-diagonal one
//! is `(sinθ/2)·φ̇ + (i/2)·θ̇`. The diagonal therefore integrates as a pure
//! 1-form in φ, which the loop integrals exploit: they accumulate azimuth
//! increments of the unwrapped samples, so windings telescope exactly and a
//! pole crossing (where sampled `φ̇` would miss the azimuth jump) still
//! contributes its full increment.

use crate::spectra::{Level, SpectralFrame};
use crate::{C64, CMat2, Error, ParameterPath, Result};

/// Angular rates of the parameter direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularVelocity {
    pub theta_dot: f64,
    pub phi_dot: f64,
}

impl AngularVelocity {
    /// Rates from a Cartesian sample `(y, ẏ)`. At the poles (`y₁ = y₂ = 0`)
    /// the azimuth rate is reported as zero.
    pub fn from_cartesian(y: [f64; 3], y_dot: [f64; 3]) -> Self {
        let [y1, y2, y3] = y;
        let [d1, d2, d3] = y_dot;
        let rho2 = y1 * y1 + y2 * y2;
        let r2 = rho2 + y3 * y3;
        let r = r2.sqrt();
        let rho = rho2.sqrt();
        if rho == 0.0 || r == 0.0 {
            return AngularVelocity {
                theta_dot: 0.0,
                phi_dot: 0.0,
            };
        }
        let r_dot = (y1 * d1 + y2 * d2 + y3 * d3) / r;
        AngularVelocity {
            theta_dot: (y3 * r_dot - d3 * r) / (r * rho),
            phi_dot: (y1 * d2 - y2 * d1) / rho2,
        }
    }
}

/// The 2×2 geometric-term matrix at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionSample {
    pub matrix: CMat2,
    pub t: f64,
}

impl ConnectionSample {
    pub fn diagonal(&self, level: Level) -> f64 {
        match level {
            Level::Plus => self.matrix[(0, 0)].re,
            Level::Minus => self.matrix[(1, 1)].re,
        }
    }

    /// Largest violation of `A₊₋ = conj(A₋₊)` and real diagonals.
    pub fn hermiticity_error(&self) -> f64 {
        let off = (self.matrix[(0, 1)] - self.matrix[(1, 0)].conj()).norm();
        off.max(self.matrix[(0, 0)].im.abs())
            .max(self.matrix[(1, 1)].im.abs())
    }
}

/// Closed-form connection matrix at polar angle θ with the given rates.
pub fn connection_analytic(theta: f64, vel: AngularVelocity) -> ConnectionSample {
    let ct = theta.cos();
    let st = theta.sin();
    let upper = C64::new(0.5 * st * vel.phi_dot, 0.5 * vel.theta_dot);
    ConnectionSample {
        matrix: CMat2::new(
            C64::new(0.5 * (1.0 + ct) * vel.phi_dot, 0.0),
            upper,
            upper.conj(),
            C64::new(0.5 * (1.0 - ct) * vel.phi_dot, 0.0),
        ),
        t: 0.0,
    }
}

/// Central-difference estimate of ⟨m|i∂ₜ|n⟩ from two frames `dt` apart.
///
/// The bra is the unnormalized midpoint `(v(t) + v(t+dt))/2`; with exactly
/// orthonormal end frames this makes the estimate Hermitian to round-off
/// while keeping the O(dt²) accuracy of central differencing.
pub fn connection_numeric(
    before: &SpectralFrame,
    after: &SpectralFrame,
    dt: f64,
) -> Result<ConnectionSample> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let bras = [
        (before.plus_vec + after.plus_vec) * C64::new(0.5, 0.0),
        (before.minus_vec + after.minus_vec) * C64::new(0.5, 0.0),
    ];
    let kets = [
        (after.plus_vec - before.plus_vec) / C64::new(dt, 0.0),
        (after.minus_vec - before.minus_vec) / C64::new(dt, 0.0),
    ];
    let i = C64::i();
    let mut m = CMat2::zeros();
    for (row, bra) in bras.iter().enumerate() {
        for (col, ket) in kets.iter().enumerate() {
            m[(row, col)] = i * bra.dotc(ket);
        }
    }
    // the exact object is Hermitian; the anti-Hermitian residual is frame
    // round-off amplified by 1/dt, so project it out
    let m = (m + m.adjoint()) * C64::new(0.5, 0.0);
    Ok(ConnectionSample { matrix: m, t: 0.0 })
}

fn require_cyclic(path: &ParameterPath, what: &str) -> Result<()> {
    if !path.cyclic {
        return Err(Error::InvalidPath(format!(
            "{what} requires a cyclic path, got open path '{}'",
            path.label
        )));
    }
    Ok(())
}

/// Loop integral ∮A_nn dt of one diagonal connection entry.
///
/// For a fixed-θ circle swept once this is `π(1 ± cosθ)`; the plus sign
/// belongs to the upper level.
pub fn diagonal_holonomy(path: &ParameterPath, level: Level) -> Result<f64> {
    require_cyclic(path, "diagonal holonomy")?;
    let polar = path.polar_samples()?;
    let sign = level.sign();
    let mut acc = 0.0;
    for w in polar.windows(2) {
        let f0 = 0.5 * (1.0 + sign * w[0].theta.cos());
        let f1 = 0.5 * (1.0 + sign * w[1].theta.cos());
        acc += 0.5 * (f0 + f1) * (w[1].phi - w[0].phi);
    }
    Ok(acc)
}

/// Spherical area enclosed by the direction of the path on the unit sphere,
/// `∮(1 − cosθ)dφ`. Equals twice the minus-level holonomy; independent of
/// any radial reparameterization.
pub fn solid_angle(path: &ParameterPath) -> Result<f64> {
    require_cyclic(path, "solid angle")?;
    let polar = path.polar_samples()?;
    let mut acc = 0.0;
    for w in polar.windows(2) {
        let theta_mid = 0.5 * (w[0].theta + w[1].theta);
        acc += (1.0 - theta_mid.cos()) * (w[1].phi - w[0].phi);
    }
    Ok(acc)
}
