//! Parameter paths `t ↦ (E(t), y⃗(t))` with analytic derivative samples.
//!
//! Paths carry precomputed samples rather than closures so they serialize and
//! stay integrator-agnostic; evaluation between samples uses cubic Hermite
//! interpolation of `(y, ẏ)` and linear interpolation of `E`.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::spectra::{polar_from_cartesian, PolarCoords, DEGENERACY_THRESHOLD};
use crate::{Error, Result};

/// Default sample density for generated paths.
pub const DEFAULT_N_SAMPLES: usize = 4096;
/// Minimum sample count a path must carry.
pub const MIN_SAMPLES: usize = 64;
const ENDPOINT_TOL: f64 = 1e-12;

/// One grid point of a parameter path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub t: f64,
    pub energy: f64,
    pub y: [f64; 3],
    pub y_dot: [f64; 3],
}

/// A sampled background path with duration, cyclic flag, and label.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPath {
    pub duration: f64,
    pub samples: Vec<PathSample>,
    pub cyclic: bool,
    pub label: String,
}

impl ParameterPath {
    fn validate(&self) -> Result<()> {
        if self.samples.len() < MIN_SAMPLES {
            return Err(Error::InvalidPath(format!(
                "path needs at least {MIN_SAMPLES} samples, got {}",
                self.samples.len()
            )));
        }
        if !(self.duration > 0.0) {
            return Err(Error::InvalidPath(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if self.samples[0].t != 0.0 || self.samples.last().unwrap().t != self.duration {
            return Err(Error::InvalidPath(
                "samples must span exactly [0, T]".into(),
            ));
        }
        for w in self.samples.windows(2) {
            if w[1].t <= w[0].t {
                return Err(Error::InvalidPath("sample times must strictly increase".into()));
            }
        }
        for s in &self.samples {
            let r = norm3(s.y);
            if r < DEGENERACY_THRESHOLD {
                return Err(Error::DegeneratePoint {
                    radius: r,
                    threshold: DEGENERACY_THRESHOLD,
                });
            }
        }
        if self.cyclic {
            let a = self.samples[0];
            let b = *self.samples.last().unwrap();
            let dy = (0..3).map(|k| (a.y[k] - b.y[k]).powi(2)).sum::<f64>().sqrt();
            if dy >= ENDPOINT_TOL || (a.energy - b.energy).abs() >= ENDPOINT_TOL {
                return Err(Error::InvalidPath(format!(
                    "cyclic path endpoints mismatch: |Δy| = {dy:.3e}, |ΔE| = {:.3e}",
                    (a.energy - b.energy).abs()
                )));
            }
        }
        Ok(())
    }

    /// `(E, y, ẏ)` at an arbitrary time in `[0, T]`, cubic Hermite in `y`.
    pub fn eval(&self, t: f64) -> (f64, [f64; 3], [f64; 3]) {
        let t = t.clamp(0.0, self.duration);
        let idx = match self
            .samples
            .binary_search_by(|s| s.t.partial_cmp(&t).unwrap())
        {
            Ok(i) => {
                let s = &self.samples[i];
                return (s.energy, s.y, s.y_dot);
            }
            Err(i) => i - 1,
        };
        let a = &self.samples[idx];
        let b = &self.samples[idx + 1];
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let (h00, h10, h01, h11) = (
            2.0 * s3 - 3.0 * s2 + 1.0,
            s3 - 2.0 * s2 + s,
            -2.0 * s3 + 3.0 * s2,
            s3 - s2,
        );
        let (d00, d10, d01, d11) = (
            (6.0 * s2 - 6.0 * s) / h,
            3.0 * s2 - 4.0 * s + 1.0,
            (-6.0 * s2 + 6.0 * s) / h,
            3.0 * s2 - 2.0 * s,
        );
        let mut y = [0.0; 3];
        let mut y_dot = [0.0; 3];
        for k in 0..3 {
            y[k] = h00 * a.y[k] + h10 * h * a.y_dot[k] + h01 * b.y[k] + h11 * h * b.y_dot[k];
            y_dot[k] = d00 * a.y[k] + d10 * a.y_dot[k] + d01 * b.y[k] + d11 * b.y_dot[k];
        }
        let energy = a.energy + s * (b.energy - a.energy);
        (energy, y, y_dot)
    }

    /// Polar coordinates of every sample, with the azimuth branch chained
    /// continuously along the path.
    pub fn polar_samples(&self) -> Result<Vec<PolarCoords>> {
        let mut out = Vec::with_capacity(self.samples.len());
        let mut prev: Option<PolarCoords> = None;
        for s in &self.samples {
            let p = polar_from_cartesian(s.y, prev.as_ref())?;
            out.push(p);
            prev = Some(p);
        }
        Ok(out)
    }

    /// Smallest sampled radius along the path.
    pub fn min_radius(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| norm3(s.y))
            .fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid integral of `E(t)` over the sample grid.
    pub fn energy_integral(&self) -> f64 {
        trapezoid(&self.samples, |s| s.energy)
    }

    /// Trapezoid integral of `r(t)` over the sample grid.
    pub fn radius_integral(&self) -> f64 {
        trapezoid(&self.samples, |s| norm3(s.y))
    }
}

fn norm3(y: [f64; 3]) -> f64 {
    (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt()
}

fn trapezoid(samples: &[PathSample], f: impl Fn(&PathSample) -> f64) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (f(&w[0]) + f(&w[1])) * (w[1].t - w[0].t))
        .sum()
}

/// Fixed-θ circle swept uniformly in φ.
pub fn circle_path(
    r: f64,
    theta: f64,
    t_total: f64,
    revolutions: u32,
    e_shift: f64,
    n_samples: usize,
) -> Result<ParameterPath> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    if !(t_total > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "duration must be positive, got {t_total}"
        )));
    }
    if revolutions < 1 {
        return Err(Error::InvalidParameter("revolutions must be >= 1".into()));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "n_samples must be >= {MIN_SAMPLES}, got {n_samples}"
        )));
    }
    let (st, ct) = (theta.sin(), theta.cos());
    let phi_rate = TAU * revolutions as f64 / t_total;
    let samples = (0..n_samples)
        .map(|i| {
            let frac = i as f64 / (n_samples - 1) as f64;
            let t = t_total * frac;
            let phi = TAU * revolutions as f64 * frac;
            let (sp, cp) = (phi.sin(), phi.cos());
            PathSample {
                t,
                energy: e_shift,
                y: [r * st * cp, r * st * sp, r * ct],
                y_dot: [-r * st * sp * phi_rate, r * st * cp * phi_rate, 0.0],
            }
        })
        .collect();
    let path = ParameterPath {
        duration: t_total,
        samples,
        cyclic: true,
        label: format!("circle r={r} theta={theta} revs={revolutions}"),
    };
    path.validate()?;
    Ok(path)
}

/// Loop of radius `r` in the `y₂ = 0` plane encircling the crossing once:
/// `(y₁, y₃) = r(sin α, cos α)`, `α: 0 → 2π`. The Hamiltonian stays real
/// symmetric along it.
pub fn real_plane_loop(r: f64, t_total: f64, n_samples: usize) -> Result<ParameterPath> {
    if !(r > 0.0) || !(t_total > 0.0) {
        return Err(Error::InvalidParameter(
            "radius and duration must be positive".into(),
        ));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "n_samples must be >= {MIN_SAMPLES}, got {n_samples}"
        )));
    }
    let rate = TAU / t_total;
    let samples = (0..n_samples)
        .map(|i| {
            let frac = i as f64 / (n_samples - 1) as f64;
            let t = t_total * frac;
            let alpha = TAU * frac;
            PathSample {
                t,
                energy: 0.0,
                y: [r * alpha.sin(), 0.0, r * alpha.cos()],
                y_dot: [r * alpha.cos() * rate, 0.0, -r * alpha.sin() * rate],
            }
        })
        .collect();
    let path = ParameterPath {
        duration: t_total,
        samples,
        cyclic: true,
        label: format!("real-plane loop r={r}"),
    };
    path.validate()?;
    Ok(path)
}

/// Interpolation family for custom paths and path files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    Linear,
    Cubic,
}

/// A user-supplied knot of a custom path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathKnot {
    pub t: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub y: [f64; 3],
}

/// Build a path by interpolating knots onto a uniform grid of `n_samples`.
pub fn custom_path(
    knots: &[PathKnot],
    interpolation: Interpolation,
    cyclic: bool,
    n_samples: usize,
) -> Result<ParameterPath> {
    if knots.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 knots, got {}",
            knots.len()
        )));
    }
    for w in knots.windows(2) {
        if w[1].t <= w[0].t {
            return Err(Error::InvalidParameter("knot times must strictly increase".into()));
        }
    }
    if knots[0].t != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "first knot must sit at t = 0, got {}",
            knots[0].t
        )));
    }
    let n_samples = n_samples.max(MIN_SAMPLES);
    let t_total = knots.last().unwrap().t;
    let ts: Vec<f64> = knots.iter().map(|k| k.t).collect();
    let interps: Vec<Interpolant> = (0..3)
        .map(|c| {
            let vals: Vec<f64> = knots.iter().map(|k| k.y[c]).collect();
            Interpolant::new(&ts, &vals, interpolation)
        })
        .collect();
    let e_vals: Vec<f64> = knots.iter().map(|k| k.energy).collect();
    let e_interp = Interpolant::new(&ts, &e_vals, Interpolation::Linear);

    let samples = (0..n_samples)
        .map(|i| {
            let frac = i as f64 / (n_samples - 1) as f64;
            let t = t_total * frac;
            let mut y = [0.0; 3];
            let mut y_dot = [0.0; 3];
            for c in 0..3 {
                let (v, d) = interps[c].eval(t);
                y[c] = v;
                y_dot[c] = d;
            }
            let (energy, _) = e_interp.eval(t);
            PathSample { t, energy, y, y_dot }
        })
        .collect();
    let path = ParameterPath {
        duration: t_total,
        samples,
        cyclic,
        label: "custom".into(),
    };
    path.validate()?;
    Ok(path)
}

/// Piecewise interpolant with derivative: linear, or a natural cubic spline.
struct Interpolant {
    ts: Vec<f64>,
    vals: Vec<f64>,
    /// Second derivatives at knots (all zero for linear interpolation).
    second: Vec<f64>,
}

impl Interpolant {
    fn new(ts: &[f64], vals: &[f64], interpolation: Interpolation) -> Self {
        let n = ts.len();
        let second = match interpolation {
            Interpolation::Linear => vec![0.0; n],
            Interpolation::Cubic => natural_spline_second_derivatives(ts, vals),
        };
        Interpolant {
            ts: ts.to_vec(),
            vals: vals.to_vec(),
            second,
        }
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        let n = self.ts.len();
        let t = t.clamp(self.ts[0], self.ts[n - 1]);
        // exact grid hits reproduce knot values bit-for-bit
        if let Ok(k) = self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            let i = k.min(n - 2);
            let h = self.ts[i + 1] - self.ts[i];
            let tau = t - self.ts[i];
            let (m0, m1) = (self.second[i], self.second[i + 1]);
            let b = (self.vals[i + 1] - self.vals[i]) / h - h * (2.0 * m0 + m1) / 6.0;
            let deriv = b + tau * (m0 + tau * (m1 - m0) / (2.0 * h));
            return (self.vals[k], deriv);
        }
        let i = match self.ts.partition_point(|&x| x <= t) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.ts[i + 1] - self.ts[i];
        let tau = t - self.ts[i];
        let (y0, y1) = (self.vals[i], self.vals[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let b = (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0;
        let c = 0.5 * m0;
        let d = (m1 - m0) / (6.0 * h);
        let value = y0 + tau * (b + tau * (c + tau * d));
        let deriv = b + tau * (2.0 * c + tau * 3.0 * d);
        (value, deriv)
    }
}

/// Tridiagonal solve for natural-spline second derivatives (zero at the ends).
fn natural_spline_second_derivatives(ts: &[f64], vals: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = ts[i] - ts[i - 1];
        let h1 = ts[i + 1] - ts[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((vals[i + 1] - vals[i]) / h1 - (vals[i] - vals[i - 1]) / h0);
    }
    // forward sweep (lower element of row i is h0 = ts[i] - ts[i-1])
    for i in 2..n - 1 {
        let h0 = ts[i] - ts[i - 1];
        let w = h0 / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (1..n - 1).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}

/// On-disk path description: knots plus interpolation metadata.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub label: String,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub cyclic: bool,
    pub interpolation: Interpolation,
    pub knots: Vec<PathKnot>,
}

/// Serialize a path: the sample grid becomes the knot list.
pub fn write_path_file(
    path: &ParameterPath,
    interpolation: Interpolation,
    file: &Path,
) -> Result<()> {
    let knots: Vec<PathKnot> = path
        .samples
        .iter()
        .map(|s| PathKnot {
            t: s.t,
            energy: s.energy,
            y: s.y,
        })
        .collect();
    let doc = PathFile {
        label: path.label.clone(),
        t_total: path.duration,
        cyclic: path.cyclic,
        interpolation,
        knots,
    };
    fs::write(file, serde_json::to_string_pretty(&doc)?).map_err(|e| Error::io_at(file, e))?;
    Ok(())
}

/// Load a path file and rebuild the sampled path through its interpolant.
pub fn read_path_file(file: &Path) -> Result<ParameterPath> {
    let text = fs::read_to_string(file).map_err(|e| Error::io_at(file, e))?;
    let doc: PathFile = serde_json::from_str(&text)?;
    if (doc.knots.last().map(|k| k.t).unwrap_or(f64::NAN) - doc.t_total).abs() > 0.0 {
        return Err(Error::Config(format!(
            "path file duration T = {} does not match last knot time",
            doc.t_total
        )));
    }
    let mut path = custom_path(&doc.knots, doc.interpolation, doc.cyclic, doc.knots.len())?;
    path.label = doc.label;
    Ok(path)
}
