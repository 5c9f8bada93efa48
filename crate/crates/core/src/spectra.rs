//! Two-level Hamiltonian, polar coordinates, and the gauge-fixed eigenframe.
//!
//! The eigenvectors are pinned to the convention
//!
//! ```text
//! v₊ = (cos(θ/2)·e^{−iφ}, sin(θ/2)),   v₋ = (sin(θ/2)·e^{−iφ}, −cos(θ/2)),
//! ```
//!
//! which is single-valued under φ → φ + 2π. The frame reduces φ modulo 2π
//! before evaluating the phase factor, so a full revolution reproduces the
//! starting frame bit-for-bit whenever the 2π increment itself was exact.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::{C64, CMat2, CVec2, Error, Result};

/// Radii below this are treated as the level crossing itself: the frame and
/// the polar angles are undefined there.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

/// Eigenlevel selector: `Plus` is the upper level `E + g·r`, `Minus` the
/// lower level `E − g·r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Plus,
    Minus,
}

impl Level {
    /// +1 for the upper level, −1 for the lower.
    pub fn sign(self) -> f64 {
        match self {
            Level::Plus => 1.0,
            Level::Minus => -1.0,
        }
    }
}

/// The two-level Hamiltonian `h = e_shift·1 + g·(σ¹y₁ + σ²y₂ + σ³y₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian2 {
    pub e_shift: f64,
    pub g: f64,
    pub y: [f64; 3],
}

impl Hamiltonian2 {
    pub fn radius(&self) -> f64 {
        let [y1, y2, y3] = self.y;
        (y1 * y1 + y2 * y2 + y3 * y3).sqrt()
    }

    /// Materialized 2×2 Hermitian matrix.
    pub fn matrix(&self) -> CMat2 {
        hamiltonian_matrix(self.e_shift, self.g, self.y)
    }

    /// `(e_shift + g·r, e_shift − g·r)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let gr = self.g * self.radius();
        (self.e_shift + gr, self.e_shift - gr)
    }
}

/// Assemble `e·1 + g·σ·y` without the positivity check on `g` (the evolution
/// routines accept `g = 0`).
pub(crate) fn hamiltonian_matrix(e_shift: f64, g: f64, y: [f64; 3]) -> CMat2 {
    let [y1, y2, y3] = y;
    CMat2::new(
        C64::new(e_shift + g * y3, 0.0),
        C64::new(g * y1, -g * y2),
        C64::new(g * y1, g * y2),
        C64::new(e_shift - g * y3, 0.0),
    )
}

/// Construct the Hamiltonian at one parameter point.
pub fn hamiltonian_at(e_shift: f64, g: f64, y: [f64; 3]) -> Result<Hamiltonian2> {
    if !(g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coupling must be positive, got g = {g}"
        )));
    }
    if !y.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidParameter(
            "parameter vector must be finite".into(),
        ));
    }
    Ok(Hamiltonian2 { e_shift, g, y })
}

/// Spherical coordinates of the parameter vector, with φ unwrapped so that
/// consecutive samples never jump by 2π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarCoords {
    /// Radius `|y⃗| ≥ 0`.
    pub r: f64,
    /// Polar angle in `[0, π]`.
    pub theta: f64,
    /// Azimuth, unwrapped (any real).
    pub phi: f64,
}

impl PolarCoords {
    /// Reconstruct the Cartesian vector.
    pub fn to_cartesian(&self) -> [f64; 3] {
        let (st, ct) = (self.theta.sin(), self.theta.cos());
        let (sp, cp) = (self.phi.sin(), self.phi.cos());
        [self.r * st * cp, self.r * st * sp, self.r * ct]
    }
}

/// Convert a parameter vector to polar coordinates, continuing the azimuth
/// branch from `prev` (nearest-branch, so steps under π in azimuth never
/// produce 2π jumps). At the poles the azimuth is taken from `prev`, or 0.
pub fn polar_from_cartesian(y: [f64; 3], prev: Option<&PolarCoords>) -> Result<PolarCoords> {
    let [y1, y2, y3] = y;
    let rho = y1.hypot(y2);
    let r = rho.hypot(y3);
    if r < DEGENERACY_THRESHOLD {
        return Err(Error::DegeneratePoint {
            radius: r,
            threshold: DEGENERACY_THRESHOLD,
        });
    }
    let theta = rho.atan2(y3);
    let phi = if rho == 0.0 {
        prev.map_or(0.0, |p| p.phi)
    } else {
        let raw = y2.atan2(y1);
        match prev {
            None => raw,
            Some(p) => raw + TAU * ((p.phi - raw) / TAU).round(),
        }
    };
    Ok(PolarCoords { r, theta, phi })
}

/// Gauge-fixed instantaneous eigenframe of the two-level Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    pub plus_vec: CVec2,
    pub minus_vec: CVec2,
    pub plus_energy: f64,
    pub minus_energy: f64,
}

impl SpectralFrame {
    pub fn vector(&self, level: Level) -> &CVec2 {
        match level {
            Level::Plus => &self.plus_vec,
            Level::Minus => &self.minus_vec,
        }
    }

    pub fn energy(&self, level: Level) -> f64 {
        match level {
            Level::Plus => self.plus_energy,
            Level::Minus => self.minus_energy,
        }
    }

    /// Components of `psi` in this frame: `(⟨v₊|ψ⟩, ⟨v₋|ψ⟩)`.
    pub fn components(&self, psi: &CVec2) -> CVec2 {
        CVec2::new(self.plus_vec.dotc(psi), self.minus_vec.dotc(psi))
    }

    /// Reassemble a state from frame components.
    pub fn assemble(&self, b: &CVec2) -> CVec2 {
        self.plus_vec * b[0] + self.minus_vec * b[1]
    }
}

/// Analytic eigenframe at the given polar coordinates.
pub fn eigenframe(coords: &PolarCoords, e_shift: f64, g: f64) -> Result<SpectralFrame> {
    if coords.r < DEGENERACY_THRESHOLD {
        return Err(Error::DegeneratePoint {
            radius: coords.r,
            threshold: DEGENERACY_THRESHOLD,
        });
    }
    let half = 0.5 * coords.theta;
    let (sh, ch) = (half.sin(), half.cos());
    // Reduce φ to [0, 2π) first: the frame is 2π-periodic by construction,
    // and the reduction makes whole revolutions close bit-exactly.
    let phi = coords.phi.rem_euclid(TAU);
    let e_phi = C64::new(phi.cos(), -phi.sin());
    let gr = g * coords.r;
    Ok(SpectralFrame {
        plus_vec: CVec2::new(e_phi * ch, C64::new(sh, 0.0)),
        minus_vec: CVec2::new(e_phi * sh, C64::new(-ch, 0.0)),
        plus_energy: e_shift + gr,
        minus_energy: e_shift - gr,
    })
}

/// Numerically diagonalized frame, phase-aligned to a reference frame.
///
/// Serves as an independent cross-check of [`eigenframe`]: the backend is a
/// Hermitian eigensolver, not the closed-form trigonometry. Each eigenvector
/// is rotated by the phase that maximizes `Re⟨ref|v⟩`.
pub fn eigenframe_numeric(h: &CMat2, reference: &SpectralFrame) -> Result<SpectralFrame> {
    let eig = h.symmetric_eigen();
    let (iplus, iminus) = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let gap = (eig.eigenvalues[iplus] - eig.eigenvalues[iminus]).abs();
    if gap <= 1e-10 {
        return Err(Error::DegeneratePoint {
            radius: 0.5 * gap,
            threshold: DEGENERACY_THRESHOLD,
        });
    }
    let mut plus_vec: CVec2 = eig.eigenvectors.column(iplus).into();
    let mut minus_vec: CVec2 = eig.eigenvectors.column(iminus).into();
    align_phase(&mut plus_vec, &reference.plus_vec);
    align_phase(&mut minus_vec, &reference.minus_vec);
    Ok(SpectralFrame {
        plus_vec,
        minus_vec,
        plus_energy: eig.eigenvalues[iplus],
        minus_energy: eig.eigenvalues[iminus],
    })
}

fn align_phase(v: &mut CVec2, reference: &CVec2) {
    let overlap = reference.dotc(v);
    let mag = overlap.norm();
    if mag > 0.0 {
        *v *= overlap.conj() / mag;
    }
}

/// Real rotation by θ/2 that diagonalizes the geometric terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationU {
    pub theta: f64,
}

impl RotationU {
    /// Rows `(cos θ/2, −sin θ/2)`, `(sin θ/2, cos θ/2)`.
    pub fn matrix(&self) -> CMat2 {
        let half = 0.5 * self.theta;
        let (s, c) = (half.sin(), half.cos());
        CMat2::new(
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        )
    }
}

pub fn rotation_u(theta: f64) -> RotationU {
    RotationU { theta }
}
