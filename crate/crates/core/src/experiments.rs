//! Runnable experiments over the level-crossing model: regime sweeps,
//! cross-picture equivalence tables, connection validation, rotated-picture
//! triviality, and the real-plane sign rule, with deterministic CSV/JSON
//! output.
//!
//! Configuration is JSON with unknown keys rejected; every emitted row echoes
//! the parameters needed to reproduce it. Sweep points are computed in
//! parallel (capped by `BERRY_NUM_THREADS`) and emitted sorted by control
//! value, so repeated runs produce byte-identical files.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connection::{connection_analytic, connection_numeric, AngularVelocity};
use crate::paths::{circle_path, real_plane_loop, DEFAULT_N_SAMPLES};
use crate::phases::{geometric_phase_exact, wrap_angle};
use crate::propagator::{equivalence_check, evolve_c_basis, IntegratorConfig, Scheme};
use crate::spectra::{eigenframe, eigenframe_numeric, Level, PolarCoords, SpectralFrame};
use crate::{C64, CVec2, Error, ParameterPath, Result};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "BERRY_NUM_THREADS";

/// Experiment selector, one per CLI subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sweep,
    Phase,
    Equivalence,
    SignRule,
    ConnectionCheck,
    CBasis,
}

impl ExperimentKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Phase => "phase",
            ExperimentKind::Equivalence => "equivalence",
            ExperimentKind::SignRule => "sign-rule",
            ExperimentKind::ConnectionCheck => "connection-check",
            ExperimentKind::CBasis => "c-basis",
        }
    }
}

/// Circle/loop geometry and model parameters (ħ = 1 units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    pub r: f64,
    pub theta: f64,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub revolutions: u32,
    pub e_shift: f64,
    pub g: f64,
    pub n_samples: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            r: 1.0,
            theta: FRAC_PI_2,
            t_total: 100.0,
            revolutions: 1,
            e_shift: 0.0,
            g: 1.0,
            n_samples: DEFAULT_N_SAMPLES,
        }
    }
}

impl PathConfig {
    pub fn grt(&self) -> f64 {
        self.g * self.r * self.t_total
    }

    pub fn circle(&self) -> Result<ParameterPath> {
        circle_path(
            self.r,
            self.theta,
            self.t_total,
            self.revolutions,
            self.e_shift,
            self.n_samples,
        )
    }

    pub fn loop_in_real_plane(&self) -> Result<ParameterPath> {
        real_plane_loop(self.r, self.t_total, self.n_samples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub n_steps: usize,
    pub scheme: Scheme,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            n_steps: 1 << 14,
            scheme: Scheme::MidpointExponential,
        }
    }
}

impl IntegratorSection {
    pub fn config(&self) -> IntegratorConfig {
        IntegratorConfig {
            n_steps: self.n_steps,
            scheme: self.scheme,
            store_trajectory: false,
        }
    }
}

/// Log-spaced control grid for sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Control quantity; only the dimensionless `grT` is supported.
    pub quantity: String,
    #[serde(rename = "log-min")]
    pub log_min: f64,
    #[serde(rename = "log-max")]
    pub log_max: f64,
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            quantity: "grT".into(),
            log_min: -2.0,
            log_max: 2.0,
            points: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub format: OutputFormat,
    /// Destination path; `None` (or `-` on the CLI) means standard output.
    pub file: Option<String>,
    /// Significant decimal digits for CSV floats.
    pub precision: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            format: OutputFormat::Csv,
            file: None,
            precision: 17,
        }
    }
}

/// Complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub path: PathConfig,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            path: PathConfig::default(),
            integrator: IntegratorSection::default(),
            sweep: SweepSection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.path.r > 0.0) {
            return Err(Error::Config(format!(
                "path.r must be positive, got {}",
                self.path.r
            )));
        }
        if !(self.path.t_total > 0.0) {
            return Err(Error::Config(format!(
                "path.T must be positive, got {}",
                self.path.t_total
            )));
        }
        if !(self.path.g > 0.0) {
            return Err(Error::Config(format!(
                "path.g must be positive, got {}",
                self.path.g
            )));
        }
        if self.path.revolutions < 1 {
            return Err(Error::Config("path.revolutions must be >= 1".into()));
        }
        if self.integrator.n_steps < 64 {
            return Err(Error::Config(format!(
                "integrator.n_steps must be >= 64, got {}",
                self.integrator.n_steps
            )));
        }
        if self.experiment == ExperimentKind::Sweep {
            if self.sweep.quantity != "grT" {
                return Err(Error::Config(format!(
                    "sweep.quantity: unsupported quantity '{}', expected 'grT'",
                    self.sweep.quantity
                )));
            }
            if self.sweep.points < 2 {
                return Err(Error::Config(format!(
                    "sweep.points must be >= 2, got {}",
                    self.sweep.points
                )));
            }
            if !self.sweep.log_min.is_finite()
                || !self.sweep.log_max.is_finite()
                || self.sweep.log_min >= self.sweep.log_max
            {
                return Err(Error::Config("sweep grid needs log-min < log-max".into()));
            }
        }
        if self.output.precision == 0 || self.output.precision > 17 {
            return Err(Error::Config(format!(
                "output.precision must be in 1..=17, got {}",
                self.output.precision
            )));
        }
        Ok(())
    }
}

/// Annotates where a `grT` value sits relative to the adiabatic
/// (`Tgr ≫ ħπ`) and near-crossing (`Tgr ≪ 2πħ`) conditions.
pub fn regime_label(grt: f64) -> &'static str {
    if grt >= 100.0 {
        "adiabatic (Tgr >> hbar*pi)"
    } else if grt <= 0.01 {
        "near-crossing (Tgr << 2*pi*hbar)"
    } else {
        "intermediate"
    }
}

// ---------------------------------------------------------------------------
// rows

fn fmt_float(x: f64, precision: usize) -> String {
    format!("{:.*e}", precision.saturating_sub(1), x)
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One CSV cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self, precision: usize) -> String {
        match self {
            Cell::Float(x) => fmt_float(*x, precision),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => csv_escape(s),
            Cell::Empty => String::new(),
        }
    }
}

/// Table row that can render itself for CSV emission.
pub trait CsvRecord {
    fn headers() -> &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

/// Render rows as CSV: header line plus one line per row, `\n` separated.
pub fn to_csv<R: CsvRecord>(rows: &[R], precision: usize) -> String {
    let mut out = String::new();
    out.push_str(&R::headers().join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.cells().iter().map(|c| c.render(precision)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Render rows as a JSON array mirroring the CSV 1:1.
pub fn to_json<R: Serialize>(rows: &[R]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rows)?)
}

macro_rules! echo_cells {
    ($self:ident) => {
        vec![
            Cell::Float($self.theta_rad),
            Cell::Float($self.t_total),
            Cell::Float($self.g),
            Cell::Int($self.revolutions as i64),
            Cell::Float($self.e_shift),
            Cell::Int($self.n_steps as i64),
            Cell::Text($self.scheme.clone()),
        ]
    };
}

fn scheme_tag(s: Scheme) -> String {
    match s {
        Scheme::MidpointExponential => "midpoint-exponential".into(),
        Scheme::NaiveEuler => "naive-euler".into(),
    }
}

/// One point of the regime sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    #[serde(rename = "grT")]
    pub grt: f64,
    pub r: f64,
    pub geometric_phase_rad: f64,
    pub return_fidelity: f64,
    pub adiabatic_prediction_rad: f64,
    pub discrepancy_rad: f64,
    pub regime: String,
    pub theta_rad: f64,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub g: f64,
    pub revolutions: u32,
    pub e_shift: f64,
    pub n_steps: usize,
    pub scheme: String,
}

impl CsvRecord for SweepRow {
    fn headers() -> &'static [&'static str] {
        &[
            "grT",
            "r",
            "geometric_phase_rad",
            "return_fidelity",
            "adiabatic_prediction_rad",
            "discrepancy_rad",
            "regime",
            "theta_rad",
            "T",
            "g",
            "revolutions",
            "e_shift",
            "n_steps",
            "scheme",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = vec![
            Cell::Float(self.grt),
            Cell::Float(self.r),
            Cell::Float(self.geometric_phase_rad),
            Cell::Float(self.return_fidelity),
            Cell::Float(self.adiabatic_prediction_rad),
            Cell::Float(self.discrepancy_rad),
            Cell::Text(self.regime.clone()),
        ];
        cells.extend(echo_cells!(self));
        cells
    }
}

/// Single-run phase report row.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseRow {
    #[serde(rename = "grT")]
    pub grt: f64,
    pub r: f64,
    pub level: String,
    pub total_phase_rad: f64,
    pub dynamical_phase_rad: f64,
    pub geometric_phase_rad: f64,
    pub geometric_phase_mod_2pi_rad: f64,
    pub return_fidelity: f64,
    pub adiabatic_prediction_rad: f64,
    pub discrepancy_rad: f64,
    pub open_evolution: bool,
    pub theta_rad: f64,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub g: f64,
    pub revolutions: u32,
    pub e_shift: f64,
    pub n_steps: usize,
    pub scheme: String,
}

impl CsvRecord for PhaseRow {
    fn headers() -> &'static [&'static str] {
        &[
            "grT",
            "r",
            "level",
            "total_phase_rad",
            "dynamical_phase_rad",
            "geometric_phase_rad",
            "geometric_phase_mod_2pi_rad",
            "return_fidelity",
            "adiabatic_prediction_rad",
            "discrepancy_rad",
            "open_evolution",
            "theta_rad",
            "T",
            "g",
            "revolutions",
            "e_shift",
            "n_steps",
            "scheme",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = vec![
            Cell::Float(self.grt),
            Cell::Float(self.r),
            Cell::Text(self.level.clone()),
            Cell::Float(self.total_phase_rad),
            Cell::Float(self.dynamical_phase_rad),
            Cell::Float(self.geometric_phase_rad),
            Cell::Float(self.geometric_phase_mod_2pi_rad),
            Cell::Float(self.return_fidelity),
            Cell::Float(self.adiabatic_prediction_rad),
            Cell::Float(self.discrepancy_rad),
            Cell::Text(self.open_evolution.to_string()),
        ];
        cells.extend(echo_cells!(self));
        cells
    }
}

/// Cross-picture discrepancy at one step count.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceRow {
    pub path_label: String,
    pub n_steps: usize,
    pub max_discrepancy: f64,
    /// `discrepancy(previous)/discrepancy(this)` within the same path ladder.
    pub ratio_vs_prev: Option<f64>,
    /// Convergence order from the ratio (steps quadruple between rows).
    pub order_estimate: Option<f64>,
}

impl CsvRecord for EquivalenceRow {
    fn headers() -> &'static [&'static str] {
        &[
            "path_label",
            "n_steps",
            "max_discrepancy",
            "ratio_vs_prev",
            "order_estimate",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Text(self.path_label.clone()),
            Cell::Int(self.n_steps as i64),
            Cell::Float(self.max_discrepancy),
            self.ratio_vs_prev.map_or(Cell::Empty, Cell::Float),
            self.order_estimate.map_or(Cell::Empty, Cell::Float),
        ]
    }
}

/// Analytic-vs-numeric connection residual at one differencing step.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectionCheckRow {
    pub dt: f64,
    pub max_residual: f64,
    pub hermiticity_error: f64,
    pub ratio_vs_prev: Option<f64>,
}

impl CsvRecord for ConnectionCheckRow {
    fn headers() -> &'static [&'static str] {
        &["dt", "max_residual", "hermiticity_error", "ratio_vs_prev"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Float(self.dt),
            Cell::Float(self.max_residual),
            Cell::Float(self.hermiticity_error),
            self.ratio_vs_prev.map_or(Cell::Empty, Cell::Float),
        ]
    }
}

/// Rotated-picture triviality summary.
#[derive(Debug, Clone, Serialize)]
pub struct CBasisRow {
    #[serde(rename = "grT")]
    pub grt: f64,
    pub plus_geometric_rad: f64,
    pub plus_geometric_mod_2pi_rad: f64,
    pub minus_geometric_rad: f64,
    pub plus_total_rad: f64,
    pub minus_total_rad: f64,
    pub theta_rad: f64,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub g: f64,
    pub revolutions: u32,
    pub e_shift: f64,
    pub n_steps: usize,
    pub scheme: String,
}

impl CsvRecord for CBasisRow {
    fn headers() -> &'static [&'static str] {
        &[
            "grT",
            "plus_geometric_rad",
            "plus_geometric_mod_2pi_rad",
            "minus_geometric_rad",
            "plus_total_rad",
            "minus_total_rad",
            "theta_rad",
            "T",
            "g",
            "revolutions",
            "e_shift",
            "n_steps",
            "scheme",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = vec![
            Cell::Float(self.grt),
            Cell::Float(self.plus_geometric_rad),
            Cell::Float(self.plus_geometric_mod_2pi_rad),
            Cell::Float(self.minus_geometric_rad),
            Cell::Float(self.plus_total_rad),
            Cell::Float(self.minus_total_rad),
        ];
        cells.extend(echo_cells!(self));
        cells
    }
}

/// Real-plane loop sign-rule report.
#[derive(Debug, Clone, Serialize)]
pub struct SignRuleRow {
    #[serde(rename = "grT")]
    pub grt: f64,
    pub regime: String,
    /// Sign of the continuation-transported eigenvector after one loop.
    pub holonomy_sign: i32,
    /// `Re⟨v(0)|v(T)⟩` of the transported eigenvector (≈ ±1).
    pub continuation_overlap: f64,
    /// Exact-evolution geometric phase (reduced).
    pub geometric_phase_rad: f64,
    pub return_fidelity: f64,
    pub sign_flip_observed: bool,
    #[serde(rename = "T")]
    pub t_total: f64,
    pub g: f64,
    pub r: f64,
    pub n_steps: usize,
}

impl CsvRecord for SignRuleRow {
    fn headers() -> &'static [&'static str] {
        &[
            "grT",
            "regime",
            "holonomy_sign",
            "continuation_overlap",
            "geometric_phase_rad",
            "return_fidelity",
            "sign_flip_observed",
            "T",
            "g",
            "r",
            "n_steps",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Float(self.grt),
            Cell::Text(self.regime.clone()),
            Cell::Int(self.holonomy_sign as i64),
            Cell::Float(self.continuation_overlap),
            Cell::Float(self.geometric_phase_rad),
            Cell::Float(self.return_fidelity),
            Cell::Text(self.sign_flip_observed.to_string()),
            Cell::Float(self.t_total),
            Cell::Float(self.g),
            Cell::Float(self.r),
            Cell::Int(self.n_steps as i64),
        ]
    }
}

// ---------------------------------------------------------------------------
// runners

fn require_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    cfg.validate()?;
    if cfg.experiment != kind {
        return Err(Error::Config(format!(
            "experiment tag mismatch: config says '{}', runner is '{}'",
            cfg.experiment.tag(),
            kind.tag()
        )));
    }
    Ok(())
}

/// Run `f` inside a rayon pool capped by `BERRY_NUM_THREADS` when set.
fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v.parse().map_err(|_| {
                Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))
            })?;
            if n == 0 {
                return Err(Error::Config(format!("{THREADS_ENV} must be >= 1")));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

/// Sweep the dimensionless control `grT` (varying `r` at fixed `T`) and
/// extract the minus-level geometric phase at each grid point.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    require_kind(cfg, ExperimentKind::Sweep)?;
    let s = &cfg.sweep;
    let grid: Vec<f64> = (0..s.points)
        .map(|i| {
            let frac = i as f64 / (s.points - 1) as f64;
            10f64.powf(s.log_min + frac * (s.log_max - s.log_min))
        })
        .collect();
    let integ = cfg.integrator.config();
    let p = cfg.path;
    let rows: Vec<Result<SweepRow>> = with_thread_cap(move || {
        grid.par_iter()
            .map(|&grt| {
                let r = grt / (p.g * p.t_total);
                let path = circle_path(r, p.theta, p.t_total, p.revolutions, p.e_shift, p.n_samples)?;
                let report = geometric_phase_exact(&path, p.g, Level::Minus, &integ)?;
                Ok(SweepRow {
                    grt,
                    r,
                    geometric_phase_rad: report.geometric_phase_mod_2pi(),
                    return_fidelity: report.return_fidelity,
                    adiabatic_prediction_rad: report.adiabatic_prediction,
                    discrepancy_rad: report.discrepancy,
                    regime: regime_label(grt).to_string(),
                    theta_rad: p.theta,
                    t_total: p.t_total,
                    g: p.g,
                    revolutions: p.revolutions,
                    e_shift: p.e_shift,
                    n_steps: integ.n_steps,
                    scheme: scheme_tag(integ.scheme),
                })
            })
            .collect()
    })?;
    rows.into_iter().collect()
}

/// One full phase report for the configured circle.
pub fn run_phase(cfg: &ExperimentConfig) -> Result<Vec<PhaseRow>> {
    require_kind(cfg, ExperimentKind::Phase)?;
    let p = cfg.path;
    let path = p.circle()?;
    let report = geometric_phase_exact(&path, p.g, Level::Minus, &cfg.integrator.config())?;
    Ok(vec![PhaseRow {
        grt: p.grt(),
        r: p.r,
        level: "minus".into(),
        total_phase_rad: report.total_phase,
        dynamical_phase_rad: report.dynamical_phase,
        geometric_phase_rad: report.geometric_phase,
        geometric_phase_mod_2pi_rad: report.geometric_phase_mod_2pi(),
        return_fidelity: report.return_fidelity,
        adiabatic_prediction_rad: report.adiabatic_prediction,
        discrepancy_rad: report.discrepancy,
        open_evolution: report.open_evolution,
        theta_rad: p.theta,
        t_total: p.t_total,
        g: p.g,
        revolutions: p.revolutions,
        e_shift: p.e_shift,
        n_steps: cfg.integrator.n_steps,
        scheme: scheme_tag(cfg.integrator.scheme),
    }])
}

/// The fixed circle set the equivalence experiment runs over. The real-plane
/// loop is validated separately by the sign-rule experiment: its coordinate
/// pole crossing limits the effective picture to first-order accuracy in the
/// crossing step.
pub fn bundled_paths() -> Result<Vec<(String, f64, ParameterPath)>> {
    let t_total = 100.0;
    let n = DEFAULT_N_SAMPLES;
    let mut out = Vec::new();
    for (label, r, theta) in [
        ("circle theta=pi/2 grT=100", 1.0, FRAC_PI_2),
        ("circle theta=pi/2 grT=0.01", 1e-4, FRAC_PI_2),
        ("circle theta=pi/6 grT=100", 1.0, std::f64::consts::FRAC_PI_6),
        ("circle theta=2pi/3 grT=100", 1.0, 2.0 * std::f64::consts::FRAC_PI_3),
    ] {
        let path = circle_path(r, theta, t_total, 1, 0.0, n)?;
        out.push((label.to_string(), 1.0, path));
    }
    Ok(out)
}

fn minus_state_of(path: &ParameterPath, coupling: f64) -> Result<CVec2> {
    let polar = path.polar_samples()?;
    let (e0, _, _) = path.eval(0.0);
    Ok(*eigenframe(&polar[0], e0, coupling)?.vector(Level::Minus))
}

/// Original-vs-effective propagation discrepancy for every bundled path at a
/// ladder of step counts (quadrupling up to the configured `n_steps`).
pub fn run_equivalence(cfg: &ExperimentConfig) -> Result<Vec<EquivalenceRow>> {
    require_kind(cfg, ExperimentKind::Equivalence)?;
    let top = cfg.integrator.n_steps;
    let ladder: Vec<usize> = vec![top / 16, top / 4, top]
        .into_iter()
        .filter(|&n| n >= 64)
        .collect();
    let mut rows = Vec::new();
    for (label, coupling, path) in bundled_paths()? {
        let psi0 = minus_state_of(&path, coupling)?;
        let mut prev: Option<f64> = None;
        for &n in &ladder {
            let run_cfg = IntegratorConfig {
                n_steps: n,
                scheme: cfg.integrator.scheme,
                store_trajectory: false,
            };
            let d = equivalence_check(&path, coupling, &psi0, &run_cfg)?;
            let ratio = prev.map(|p| p / d);
            rows.push(EquivalenceRow {
                path_label: label.clone(),
                n_steps: n,
                max_discrepancy: d,
                ratio_vs_prev: ratio,
                order_estimate: ratio.map(|r| r.log2() / 2.0),
            });
            prev = Some(d);
        }
    }
    Ok(rows)
}

/// Residual of the finite-difference connection against the closed form at a
/// halving ladder of differencing steps, plus a fine-step probe row.
pub fn run_connection_check(cfg: &ExperimentConfig) -> Result<Vec<ConnectionCheckRow>> {
    require_kind(cfg, ExperimentKind::ConnectionCheck)?;
    let probes = [
        (cfg.path.theta, 0.0, std::f64::consts::TAU / cfg.path.t_total),
        (1.1, 0.4, 0.7),
        (0.4, -0.8, 0.3),
        (2.6, 0.2, -0.5),
    ];
    let frame_at = |theta: f64, phi: f64| -> Result<SpectralFrame> {
        eigenframe(
            &PolarCoords {
                r: 1.0,
                theta,
                phi,
            },
            0.0,
            1.0,
        )
    };
    let residual_at = |dt: f64| -> Result<(f64, f64)> {
        let mut worst = 0.0f64;
        let mut herm = 0.0f64;
        for &(theta, theta_dot, phi_dot) in &probes {
            let before = frame_at(theta - 0.5 * theta_dot * dt, -0.5 * phi_dot * dt)?;
            let after = frame_at(theta + 0.5 * theta_dot * dt, 0.5 * phi_dot * dt)?;
            let numeric = connection_numeric(&before, &after, dt)?;
            let exact = connection_analytic(
                theta,
                AngularVelocity {
                    theta_dot,
                    phi_dot,
                },
            );
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max((numeric.matrix[(i, j)] - exact.matrix[(i, j)]).norm());
                }
            }
            herm = herm.max(numeric.hermiticity_error());
        }
        Ok((worst, herm))
    };
    let mut rows = Vec::new();
    let mut prev: Option<f64> = None;
    for dt in [1e-3, 5e-4, 2.5e-4, 1.25e-4, 1e-5] {
        let (res, herm) = residual_at(dt)?;
        rows.push(ConnectionCheckRow {
            dt,
            max_residual: res,
            hermiticity_error: herm,
            ratio_vs_prev: prev.map(|p| p / res),
        });
        prev = Some(res);
    }
    Ok(rows)
}

/// Rotated-picture phases for the configured circle: the upper-mode
/// geometric factor integrates to 2π per revolution (trivial modulo 2π).
pub fn run_c_basis(cfg: &ExperimentConfig) -> Result<Vec<CBasisRow>> {
    require_kind(cfg, ExperimentKind::CBasis)?;
    let p = cfg.path;
    let path = p.circle()?;
    let c0 = CVec2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let (_, phases) = evolve_c_basis(&path, p.g, &c0, &cfg.integrator.config())?;
    Ok(vec![CBasisRow {
        grt: p.grt(),
        plus_geometric_rad: phases.plus_geometric,
        plus_geometric_mod_2pi_rad: wrap_angle(phases.plus_geometric),
        minus_geometric_rad: 0.0,
        plus_total_rad: phases.plus_total,
        minus_total_rad: phases.minus_total,
        theta_rad: p.theta,
        t_total: p.t_total,
        g: p.g,
        revolutions: p.revolutions,
        e_shift: p.e_shift,
        n_steps: cfg.integrator.n_steps,
        scheme: scheme_tag(cfg.integrator.scheme),
    }])
}

/// Transport one eigenvector around a cyclic path by numeric diagonalization
/// with sign/phase continuation against the previous sample; returns
/// `Re⟨v(0)|v(T)⟩` (≈ −1 when the loop encircles the crossing).
pub fn continuation_transport(
    path: &ParameterPath,
    coupling: f64,
    level: Level,
) -> Result<f64> {
    if !path.cyclic {
        return Err(Error::InvalidPath(
            "sign rule requires a cyclic path".into(),
        ));
    }
    let polar = path.polar_samples()?;
    let (e0, _, _) = path.eval(0.0);
    let start = eigenframe(&polar[0], e0, coupling)?;
    let mut frame = start.clone();
    for s in &path.samples[1..] {
        let h = crate::spectra::hamiltonian_matrix(s.energy, coupling, s.y);
        frame = eigenframe_numeric(&h, &frame)?;
    }
    Ok(start.vector(level).dotc(frame.vector(level)).re)
}

/// Sign-rule experiment on the real-plane loop: frame-continuation holonomy
/// sign plus the exact-evolution phase report for the configured regime.
pub fn run_sign_rule(cfg: &ExperimentConfig) -> Result<Vec<SignRuleRow>> {
    require_kind(cfg, ExperimentKind::SignRule)?;
    let p = cfg.path;
    let path = p.loop_in_real_plane()?;
    let overlap = continuation_transport(&path, p.g, Level::Minus)?;
    let sign = if overlap >= 0.0 { 1 } else { -1 };
    let report = geometric_phase_exact(&path, p.g, Level::Minus, &cfg.integrator.config())?;
    let reduced = report.geometric_phase_mod_2pi();
    Ok(vec![SignRuleRow {
        grt: p.grt(),
        regime: regime_label(p.grt()).to_string(),
        holonomy_sign: sign,
        continuation_overlap: overlap,
        geometric_phase_rad: reduced,
        return_fidelity: report.return_fidelity,
        sign_flip_observed: reduced.abs() > FRAC_PI_2,
        t_total: p.t_total,
        g: p.g,
        r: p.r,
        n_steps: cfg.integrator.n_steps,
    }])
}

// ---------------------------------------------------------------------------
// dispatch and output

/// Result table of any experiment.
#[derive(Debug, Clone)]
pub enum ExperimentOutput {
    Sweep(Vec<SweepRow>),
    Phase(Vec<PhaseRow>),
    Equivalence(Vec<EquivalenceRow>),
    SignRule(Vec<SignRuleRow>),
    ConnectionCheck(Vec<ConnectionCheckRow>),
    CBasis(Vec<CBasisRow>),
}

impl ExperimentOutput {
    pub fn to_csv(&self, precision: usize) -> String {
        match self {
            ExperimentOutput::Sweep(r) => to_csv(r, precision),
            ExperimentOutput::Phase(r) => to_csv(r, precision),
            ExperimentOutput::Equivalence(r) => to_csv(r, precision),
            ExperimentOutput::SignRule(r) => to_csv(r, precision),
            ExperimentOutput::ConnectionCheck(r) => to_csv(r, precision),
            ExperimentOutput::CBasis(r) => to_csv(r, precision),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        match self {
            ExperimentOutput::Sweep(r) => to_json(r),
            ExperimentOutput::Phase(r) => to_json(r),
            ExperimentOutput::Equivalence(r) => to_json(r),
            ExperimentOutput::SignRule(r) => to_json(r),
            ExperimentOutput::ConnectionCheck(r) => to_json(r),
            ExperimentOutput::CBasis(r) => to_json(r),
        }
    }

    pub fn rendered(&self, output: &OutputSection) -> Result<String> {
        match output.format {
            OutputFormat::Csv => Ok(self.to_csv(output.precision)),
            OutputFormat::Json => self.to_json(),
        }
    }
}

/// Run whatever the config selects.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    match cfg.experiment {
        ExperimentKind::Sweep => Ok(ExperimentOutput::Sweep(run_sweep(cfg)?)),
        ExperimentKind::Phase => Ok(ExperimentOutput::Phase(run_phase(cfg)?)),
        ExperimentKind::Equivalence => Ok(ExperimentOutput::Equivalence(run_equivalence(cfg)?)),
        ExperimentKind::SignRule => Ok(ExperimentOutput::SignRule(run_sign_rule(cfg)?)),
        ExperimentKind::ConnectionCheck => {
            Ok(ExperimentOutput::ConnectionCheck(run_connection_check(cfg)?))
        }
        ExperimentKind::CBasis => Ok(ExperimentOutput::CBasis(run_c_basis(cfg)?)),
    }
}

/// Companion gnuplot script for a sweep data file.
pub fn gnuplot_script(data_file: &str, format: OutputFormat) -> String {
    let mut s = String::new();
    s.push_str("set logscale x\n");
    s.push_str("set xlabel 'g r T'\n");
    s.push_str("set ylabel 'geometric phase [rad]'\n");
    if format == OutputFormat::Csv {
        s.push_str("set datafile separator ','\n");
    }
    s.push_str(&format!(
        "plot '{data_file}' every ::1 using 1:(abs($3)) with linespoints title 'exact', \\\n"
    ));
    s.push_str(&format!(
        "     '{data_file}' every ::1 using 1:5 with lines dashtype 2 title 'adiabatic'\n"
    ));
    s
}

/// Write the rendered table to the configured destination.
pub fn write_output(cfg: &ExperimentConfig, output: &ExperimentOutput) -> Result<()> {
    let text = output.rendered(&cfg.output)?;
    match cfg.output.file.as_deref() {
        None | Some("-") => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
        Some(path) => {
            let p = Path::new(path);
            fs::write(p, text).map_err(|e| Error::io_at(p, e))?;
        }
    }
    Ok(())
}
