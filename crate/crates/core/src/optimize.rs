//! Local-oscillator phase optimization: a coarse grid over (φ_p, φ_c)
//! followed by Nelder–Mead refinement from the best cell.

use std::f64::consts::PI;

use rug::Float;
use thiserror::Error;

use crate::circuit::{Circuit, InterferometerParams};
use crate::metrology::{classical_reference, lod_db, lodi_with_reference, MetrologyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("grid needs at least 2 points per axis (got {0})")]
    Grid(usize),
    #[error("no grid cell produced a finite objective")]
    NoFiniteCell,
    #[error(transparent)]
    Metrology(#[from] MetrologyError),
}

/// Simplex coefficients and stopping rule.
#[derive(Debug, Clone, PartialEq)]
pub struct NelderMead {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_iterations: usize,
    /// Stop once the largest vertex distance from the best vertex falls below this.
    pub diameter_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_iterations: 2000,
            diameter_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

fn toward(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Non-finite objective values are treated as `+∞`.
fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

impl NelderMead {
    /// Minimizes `f` from `x0`, with the initial simplex spanned by `step`
    /// along each coordinate.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], step: f64) -> SimplexResult
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let mut evaluations = 0usize;
        let mut eval = |x: &[f64]| {
            evaluations += 1;
            finite_or_inf(f(x))
        };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let f0 = eval(x0);
        simplex.push((x0.to_vec(), f0));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += step;
            let fx = eval(&x);
            simplex.push((x, fx));
        }

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iterations {
            // stable sort keeps the incumbent first on ties
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if diameter(&simplex) < self.diameter_tol {
                converged = true;
                break;
            }
            iterations += 1;

            let centroid: Vec<f64> =
                (0..n).map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64).collect();
            let (worst_x, worst_f) = simplex[n].clone();
            let best_f = simplex[0].1;
            let second_worst_f = simplex[n - 1].1;

            let xr = toward(&centroid, &worst_x, -self.reflection);
            let fr = eval(&xr);
            if fr < best_f {
                let xe = toward(&centroid, &worst_x, -self.reflection * self.expansion);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < second_worst_f {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < worst_f {
                let xc = toward(&centroid, &xr, self.contraction);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = toward(&centroid, &worst_x, self.contraction);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < worst_f.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            let best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x = toward(&best, &vertex.0, self.shrink);
                let fx = eval(&x);
                *vertex = (x, fx);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        SimplexResult { x, value, iterations, evaluations, converged }
    }
}

/// Quantity minimized over the local-oscillator phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// LOD of the chosen circuit.
    Lod,
    /// LOD of the chosen circuit minus the photon-matched classical LOD.
    Lodi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptOptions {
    /// Grid points per phase axis over [−π, π).
    pub grid: usize,
    pub simplex: NelderMead,
}

impl Default for OptOptions {
    fn default() -> Self {
        OptOptions { grid: 64, simplex: NelderMead::default() }
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub phi_p: f64,
    pub phi_c: f64,
    /// `None` when the objective is undefined at this cell.
    pub value_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub phi_p: f64,
    pub phi_c: f64,
    pub value_db: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub best_cell: GridCell,
    /// Classical LOD the improvement is measured against (LODI objective only).
    pub lod_classical_db: Option<f64>,
    pub landscape: Vec<GridCell>,
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Picks the representative of `(φ_p, φ_c) ~ (φ_p + π, φ_c + π)` with
/// `|φ_p| ≤ π/2`. Shifting both oscillators by π negates `J`, which leaves
/// the variance and the squared derivative unchanged.
pub fn canonical_phases(phi_p: f64, phi_c: f64) -> (f64, f64) {
    let (p, c) = (wrap(phi_p), wrap(phi_c));
    if p.abs() > PI / 2.0 {
        (wrap(p + PI), wrap(c + PI))
    } else {
        (p, c)
    }
}

/// Objective evaluator with the classical reference computed once.
pub struct PhaseObjective {
    circuit: Circuit,
    base: InterferometerParams,
    objective: Objective,
    reference: Option<Float>,
}

impl PhaseObjective {
    pub fn new(circuit: Circuit, p: &InterferometerParams, objective: Objective) -> Result<Self, OptimizeError> {
        let reference = match objective {
            Objective::Lodi => Some(lod_db(Circuit::Classical, &classical_reference(p))?),
            Objective::Lod => None,
        };
        Ok(PhaseObjective { circuit, base: p.clone(), objective, reference })
    }

    pub fn reference_db(&self) -> Option<&Float> {
        self.reference.as_ref()
    }

    pub fn eval(&self, phi_p: f64, phi_c: f64) -> Result<Float, MetrologyError> {
        let p = self.base.clone().with_phases(phi_p, phi_c);
        match (&self.objective, &self.reference) {
            (Objective::Lodi, Some(reference)) => Ok(lodi_with_reference(self.circuit, &p, reference)?.lodi_db),
            _ => lod_db(self.circuit, &p),
        }
    }
}

/// Grid seeding over [−π, π)² plus simplex refinement of the best cell.
pub fn optimize_phases(
    circuit: Circuit,
    p: &InterferometerParams,
    objective: Objective,
    opts: &OptOptions,
) -> Result<OptResult, OptimizeError> {
    if opts.grid < 2 {
        return Err(OptimizeError::Grid(opts.grid));
    }
    let f = PhaseObjective::new(circuit, p, objective)?;
    let spacing = 2.0 * PI / opts.grid as f64;
    let mut landscape = Vec::with_capacity(opts.grid * opts.grid);
    for i in 0..opts.grid {
        let phi_p = -PI + spacing * i as f64;
        for k in 0..opts.grid {
            let phi_c = -PI + spacing * k as f64;
            let value_db = f.eval(phi_p, phi_c).ok().map(|v| v.to_f64()).filter(|v| v.is_finite());
            landscape.push(GridCell { phi_p, phi_c, value_db });
        }
    }
    let best_cell = landscape
        .iter()
        .filter(|c| c.value_db.is_some())
        .min_by(|a, b| a.value_db.unwrap().total_cmp(&b.value_db.unwrap()))
        .cloned()
        .ok_or(OptimizeError::NoFiniteCell)?;

    let refined = opts.simplex.minimize(
        |x| f.eval(x[0], x[1]).map(|v| v.to_f64()).unwrap_or(f64::INFINITY),
        &[best_cell.phi_p, best_cell.phi_c],
        spacing / 2.0,
    );
    let (phi_p, phi_c) = canonical_phases(refined.x[0], refined.x[1]);
    Ok(OptResult {
        phi_p,
        phi_c,
        value_db: refined.value,
        iterations: refined.iterations,
        evaluations: refined.evaluations + landscape.len(),
        converged: refined.converged,
        best_cell,
        lod_classical_db: f.reference_db().map(Float::to_f64),
        landscape,
    })
}
