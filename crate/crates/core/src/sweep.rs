//! Parameter sweeps and vacuum-noise landscapes, emitted as [`Table`]s.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rug::Float;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, InterferometerParams};
use crate::metrology::{evaluate, lodi_db_for, moments, MetrologyError};
use crate::optimize::{optimize_phases, Objective, OptOptions, OptimizeError};
use crate::report::{Cell, Table};
use crate::scalar::real_to_decimal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("axis {0:?}: expected NAME:MIN:MAX:COUNT[:log]")]
    AxisSyntax(String),
    #[error("unknown sweep parameter {0:?}")]
    UnknownParam(String),
    #[error("axis {name}: count must be at least 2 (got {count})")]
    Count { name: String, count: usize },
    #[error("axis {name}: log scale needs positive bounds")]
    LogBounds { name: String },
    #[error("axis {name}: bounds must be finite")]
    Bounds { name: String },
    #[error("sweep needs at least one axis")]
    NoAxes,
    #[error("axis {0} appears twice")]
    DuplicateAxis(String),
    #[error("vacuum map axes must be phi, phi_p or phi_c (got {0})")]
    VacuumAxis(String),
    #[error("the vacuum map requires alpha = beta = 0")]
    SeededVacuum,
    #[error(transparent)]
    Metrology(#[from] MetrologyError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Sweepable knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    R,
    S,
    Alpha,
    Beta,
    Gamma,
    Kappa,
    /// Both local oscillators together.
    GammaKappa,
    /// Internal transmission of both arms.
    Eta,
    EtaP1,
    EtaC1,
    EtaP2,
    EtaC2,
    EtaP3,
    EtaC3,
    ThetaF,
    /// Sample phase; sets `θ_f = −φ`.
    Phi,
    PhiP,
    PhiC,
}

impl Param {
    pub const ALL: [Param; 18] = [
        Param::R,
        Param::S,
        Param::Alpha,
        Param::Beta,
        Param::Gamma,
        Param::Kappa,
        Param::GammaKappa,
        Param::Eta,
        Param::EtaP1,
        Param::EtaC1,
        Param::EtaP2,
        Param::EtaC2,
        Param::EtaP3,
        Param::EtaC3,
        Param::ThetaF,
        Param::Phi,
        Param::PhiP,
        Param::PhiC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::R => "r",
            Param::S => "s",
            Param::Alpha => "alpha",
            Param::Beta => "beta",
            Param::Gamma => "gamma",
            Param::Kappa => "kappa",
            Param::GammaKappa => "gamma_kappa",
            Param::Eta => "eta",
            Param::EtaP1 => "eta_p1",
            Param::EtaC1 => "eta_c1",
            Param::EtaP2 => "eta_p2",
            Param::EtaC2 => "eta_c2",
            Param::EtaP3 => "eta_p3",
            Param::EtaC3 => "eta_c3",
            Param::ThetaF => "theta_f",
            Param::Phi => "phi",
            Param::PhiP => "phi_p",
            Param::PhiC => "phi_c",
        }
    }

    pub fn apply(self, p: &mut InterferometerParams, v: f64) {
        match self {
            Param::R => p.r = v,
            Param::S => p.s = v,
            Param::Alpha => p.alpha = v,
            Param::Beta => p.beta = v,
            Param::Gamma => p.gamma = v,
            Param::Kappa => p.kappa = v,
            Param::GammaKappa => {
                p.gamma = v;
                p.kappa = v;
            }
            Param::Eta => {
                p.eta_p1 = v;
                p.eta_c1 = v;
            }
            Param::EtaP1 => p.eta_p1 = v,
            Param::EtaC1 => p.eta_c1 = v,
            Param::EtaP2 => p.eta_p2 = v,
            Param::EtaC2 => p.eta_c2 = v,
            Param::EtaP3 => p.eta_p3 = v,
            Param::EtaC3 => p.eta_c3 = v,
            Param::ThetaF => p.theta_f = v,
            Param::Phi => p.theta_f = -v,
            Param::PhiP => p.phi_p = v,
            Param::PhiC => p.phi_c = v,
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Param::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| SweepError::UnknownParam(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub scale: Scale,
}

impl AxisSpec {
    pub fn linear(param: Param, min: f64, max: f64, count: usize) -> Self {
        AxisSpec { param, min, max, count, scale: Scale::Linear }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let name = self.param.name().to_string();
        if self.count < 2 {
            return Err(SweepError::Count { name, count: self.count });
        }
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(SweepError::Bounds { name });
        }
        if self.scale == Scale::Log && (self.min <= 0.0 || self.max <= 0.0) {
            return Err(SweepError::LogBounds { name });
        }
        Ok(())
    }

    /// Grid values, endpoints included exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i == self.count - 1 {
                    return self.max;
                }
                // weighted endpoints keep decimal steps like 0.3 exact
                let (w0, w1) = (last - i as f64, i as f64);
                match self.scale {
                    Scale::Linear => (self.min * w0 + self.max * w1) / last,
                    Scale::Log => 10f64.powf((self.min.log10() * w0 + self.max.log10() * w1) / last),
                }
            })
            .collect()
    }
}

impl FromStr for AxisSpec {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SweepError::AxisSyntax(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(bad());
        }
        let param: Param = parts[0].trim().parse()?;
        let min: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[2].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[3].trim().parse().map_err(|_| bad())?;
        let scale = match parts.get(4).map(|t| t.trim()) {
            None | Some("lin") => Scale::Linear,
            Some("log") => Scale::Log,
            Some(_) => return Err(bad()),
        };
        let axis = AxisSpec { param, min, max, count, scale };
        axis.validate()?;
        Ok(axis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Lod,
    Lodi,
    Variance,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Lod => "lod",
            Target::Lodi => "lodi",
            Target::Variance => "variance",
        }
    }
}

impl FromStr for Target {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lod" => Ok(Target::Lod),
            "lodi" => Ok(Target::Lodi),
            "variance" => Ok(Target::Variance),
            other => Err(SweepError::UnknownParam(other.to_string())),
        }
    }
}

/// How the local-oscillator phases are set at each grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// As given in the base parameters.
    Fixed,
    /// `φ_p = φ_c = φ`.
    Aligned,
    /// Grid-plus-simplex optimum of the target at each point.
    Optimized,
}

impl FromStr for PhaseMode {
    type Err = SweepError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(PhaseMode::Fixed),
            "aligned" => Ok(PhaseMode::Aligned),
            "optimized" => Ok(PhaseMode::Optimized),
            other => Err(SweepError::UnknownParam(other.to_string())),
        }
    }
}

impl PhaseMode {
    pub fn name(self) -> &'static str {
        match self {
            PhaseMode::Fixed => "fixed",
            PhaseMode::Aligned => "aligned",
            PhaseMode::Optimized => "optimized",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axes: Vec<AxisSpec>,
    pub base: InterferometerParams,
    pub circuit: Circuit,
    pub target: Target,
    pub phases: PhaseMode,
    /// Grid resolution used when `phases` is [`PhaseMode::Optimized`].
    pub opt_grid: usize,
}

impl SweepGrid {
    pub fn new(axes: Vec<AxisSpec>, base: InterferometerParams, circuit: Circuit, target: Target) -> Self {
        SweepGrid { axes, base, circuit, target, phases: PhaseMode::Fixed, opt_grid: 16 }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axes.is_empty() {
            return Err(SweepError::NoAxes);
        }
        for (i, a) in self.axes.iter().enumerate() {
            a.validate()?;
            if self.axes[..i].iter().any(|b| b.param == a.param) {
                return Err(SweepError::DuplicateAxis(a.param.name().to_string()));
            }
        }
        Ok(())
    }

    /// Parameter points in row-major order, first axis slowest.
    pub fn points(&self) -> Vec<(Vec<f64>, InterferometerParams)> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(AxisSpec::values).collect();
        let mut out = vec![(Vec::new(), self.base.clone())];
        for (axis, vals) in self.axes.iter().zip(&values) {
            let mut next = Vec::with_capacity(out.len() * vals.len());
            for (coords, p) in &out {
                for &v in vals {
                    let mut q = p.clone();
                    axis.param.apply(&mut q, v);
                    let mut c = coords.clone();
                    c.push(v);
                    next.push((c, q));
                }
            }
            out = next;
        }
        out
    }

    fn value_columns(&self) -> Vec<&'static str> {
        match self.target {
            Target::Lod => vec!["variance", "dj_dphi_sq", "lod_db"],
            Target::Lodi => vec!["lod_quantum_db", "lod_classical_db", "lodi_db"],
            Target::Variance => vec!["variance"],
        }
    }
}

fn with_phases(grid: &SweepGrid, p: &InterferometerParams) -> Result<InterferometerParams, SweepError> {
    match grid.phases {
        PhaseMode::Fixed => Ok(p.clone()),
        PhaseMode::Aligned => {
            let phi = p.phi().to_f64();
            Ok(p.clone().with_phases(phi, phi))
        }
        PhaseMode::Optimized => {
            let objective = match grid.target {
                Target::Lodi => Objective::Lodi,
                _ => Objective::Lod,
            };
            let opts = OptOptions { grid: grid.opt_grid, ..OptOptions::default() };
            let r = optimize_phases(grid.circuit, p, objective, &opts)?;
            Ok(p.clone().with_phases(r.phi_p, r.phi_c))
        }
    }
}

/// Value cells plus a note for the `error` column when the point is only
/// partially defined (an undefined LOD still has a variance).
fn point_values(grid: &SweepGrid, p: &InterferometerParams) -> Result<(Vec<Cell>, Option<String>), SweepError> {
    let real = |x: Float| Cell::Real(x);
    Ok(match grid.target {
        Target::Lodi => {
            let r = lodi_db_for(grid.circuit, p)?;
            (vec![real(r.lod_tsu11_db), real(r.lod_classical_db), real(r.lodi_db)], None)
        }
        Target::Lod => {
            let r = evaluate(grid.circuit, p)?;
            let variance = r.variance.re().clone();
            let note = r.lod_db.is_none().then(|| {
                MetrologyError::UndefinedLod { variance: real_to_decimal(&variance, 12) }.to_string()
            });
            let lod = r.lod_db.map_or(Cell::Empty, real);
            (vec![real(variance), real(r.dj_dphi_sq), lod], note)
        }
        Target::Variance => {
            let (j, state) = grid.circuit.build(p)?;
            let (_, _, var) = moments(&j, &state)?;
            (vec![real(var.re().clone())], None)
        }
    })
}

/// Evaluates the target at every grid point. A failing point leaves its value
/// cells empty and records the message in the `error` column.
pub fn run_sweep(grid: &SweepGrid) -> Result<Table, SweepError> {
    grid.validate()?;
    let mut columns: Vec<String> = grid.axes.iter().map(|a| a.param.name().to_string()).collect();
    columns.extend(["phi_p", "phi_c"].map(String::from));
    let values = grid.value_columns();
    columns.extend(values.iter().map(|s| s.to_string()));
    columns.push("error".into());
    let mut table = Table::new(columns, grid.base.precision.digits());

    for (coords, p) in grid.points() {
        let mut row: Vec<Cell> = coords.iter().map(|&v| Cell::Param(v)).collect();
        let outcome = with_phases(grid, &p).and_then(|q| Ok((point_values(grid, &q)?, q)));
        match outcome {
            Ok(((cells, note), q)) => {
                row.push(Cell::Param(q.phi_p));
                row.push(Cell::Param(q.phi_c));
                row.extend(cells);
                row.push(note.map_or(Cell::Empty, Cell::Text));
            }
            Err(e) => {
                row.push(Cell::Param(p.phi_p));
                row.push(Cell::Param(p.phi_c));
                row.extend(values.iter().map(|_| Cell::Empty));
                row.push(Cell::Text(e.to_string()));
            }
        }
        table.rows.push(row);
    }
    Ok(table)
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Location of the lowest variance along the last axis for one value of the
/// leading axes.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimumPoint {
    pub phi: f64,
    pub phi_p: f64,
    pub phi_c: f64,
    pub variance: f64,
    /// `2φ − φ_p − φ_c` wrapped into (−π, π].
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VacuumMap {
    pub table: Table,
    pub minima: Vec<MinimumPoint>,
    pub maxima: Vec<MinimumPoint>,
    /// Spacing of the last axis.
    pub resolution: f64,
}

/// Tabulates Δ²J of the unseeded circuit over one or two of φ, φ_p, φ_c and
/// locates minima and maxima along the last axis. Every row carries all three
/// phases.
pub fn vacuum_noise_map(p: &InterferometerParams, axes: &[AxisSpec]) -> Result<VacuumMap, SweepError> {
    if p.alpha != 0.0 || p.beta != 0.0 {
        return Err(SweepError::SeededVacuum);
    }
    for a in axes {
        if !matches!(a.param, Param::Phi | Param::PhiP | Param::PhiC) {
            return Err(SweepError::VacuumAxis(a.param.name().to_string()));
        }
    }
    let grid = SweepGrid::new(axes.to_vec(), p.clone(), Circuit::Vacuum, Target::Variance);
    grid.validate()?;
    let last = axes.last().expect("validated non-empty");
    let lv = last.values();
    let resolution = (lv[1] - lv[0]).abs();

    let mut table = Table::new(
        ["phi", "phi_p", "phi_c", "variance", "residual"].map(String::from).to_vec(),
        p.precision.digits(),
    );
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    let mut line: Vec<MinimumPoint> = Vec::new();
    let flush = |line: &mut Vec<MinimumPoint>, minima: &mut Vec<MinimumPoint>, maxima: &mut Vec<MinimumPoint>| {
        if let Some(lo) = line.iter().min_by(|a, b| a.variance.total_cmp(&b.variance)) {
            minima.push(lo.clone());
        }
        if let Some(hi) = line.iter().max_by(|a, b| a.variance.total_cmp(&b.variance)) {
            maxima.push(hi.clone());
        }
        line.clear();
    };

    for (_, q) in grid.points() {
        let (j, state) = Circuit::Vacuum.build(&q)?;
        let (_, _, var) = moments(&j, &state)?;
        let phi = q.phi().to_f64();
        let residual = wrap_angle(2.0 * phi - q.phi_p - q.phi_c);
        let mut row = vec![Cell::Param(phi), Cell::Param(q.phi_p), Cell::Param(q.phi_c)];
        row.push(Cell::Real(var.re().clone()));
        row.push(Cell::Param(residual));
        table.rows.push(row);
        line.push(MinimumPoint { phi, phi_p: q.phi_p, phi_c: q.phi_c, variance: var.re().to_f64(), residual });
        if line.len() == last.count {
            flush(&mut line, &mut minima, &mut maxima);
        }
    }
    Ok(VacuumMap { table, minima, maxima, resolution })
}
