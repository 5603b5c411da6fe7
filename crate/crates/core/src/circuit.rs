//! Field-level construction of the interferometers and their joint
//! homodyne observable `J = a_f†a_f − a_n†a_n + b_f†b_f − b_n†b_n`.
//!
//! Modes: `a`, `b` are the seeded amplifier inputs, `c`, `d` couple internal
//! loss, `e`, `f` external loss, and `g`, `h` are the probe and conjugate local
//! oscillators. All scalars (cosh r, e^{iφ}, …) are evaluated numerically when
//! the expression is built.

use std::fmt;
use std::str::FromStr;

use rug::Float;
use thiserror::Error;

use crate::algebra::{AlgebraError, CoherentAssignment, ModeId, OperatorExpr};
use crate::jones::transduce;
use crate::scalar::{BigComplex, Precision};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("{name} = {value} is outside [0, 1]")]
    Transmission { name: &'static str, value: f64 },
    #[error("{name} = {value} must be non-negative")]
    Negative { name: &'static str, value: f64 },
    #[error("{name} = {value} is not finite")]
    NotFinite { name: &'static str, value: f64 },
    #[error("precision must be at least {min} digits (got {got})")]
    Precision { min: u32, got: u32 },
    #[error("the vacuum circuit requires alpha = beta = 0 (got alpha = {alpha}, beta = {beta})")]
    SeededVacuum { alpha: f64, beta: f64 },
    #[error("unknown circuit {0:?} (expected classical, tsu11, su11 or vacuum)")]
    UnknownCircuit(String),
    #[error("unknown arms setting {0:?} (expected probe or both)")]
    UnknownArms(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Which beams pass through the sample and pick up the transduced phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arms {
    ProbeOnly,
    Both,
}

impl fmt::Display for Arms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arms::ProbeOnly => "probe",
            Arms::Both => "both",
        })
    }
}

impl FromStr for Arms {
    type Err = CircuitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "probe" | "probe-only" => Ok(Arms::ProbeOnly),
            "both" => Ok(Arms::Both),
            other => Err(CircuitError::UnknownArms(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Circuit {
    /// Coherent beams with photon numbers matched to the squeezed circuit.
    Classical,
    /// Single amplifier followed by dual homodyne readout.
    Tsu11,
    /// Full chain including the second amplifier and external losses.
    Su11,
    /// Truncated circuit with unseeded amplifier inputs.
    Vacuum,
}

impl Circuit {
    pub const ALL: [Circuit; 4] = [Circuit::Classical, Circuit::Tsu11, Circuit::Su11, Circuit::Vacuum];

    pub fn name(self) -> &'static str {
        match self {
            Circuit::Classical => "classical",
            Circuit::Tsu11 => "tsu11",
            Circuit::Su11 => "su11",
            Circuit::Vacuum => "vacuum",
        }
    }

    /// Parameters as this circuit actually uses them: the truncated variants
    /// force `s = 0`, lossless external paths and 50/50 homodyne splitters.
    pub fn effective_params(self, p: &InterferometerParams) -> InterferometerParams {
        let mut q = p.clone();
        if matches!(self, Circuit::Tsu11 | Circuit::Vacuum) {
            q.s = 0.0;
            q.eta_p2 = 1.0;
            q.eta_c2 = 1.0;
            q.eta_p3 = 0.5;
            q.eta_c3 = 0.5;
        }
        q
    }

    /// Builds `J` and the input state with the sample phase set to `phi`
    /// instead of the transduced rotation.
    pub fn build_at(
        self,
        p: &InterferometerParams,
        phi: &Float,
    ) -> Result<(OperatorExpr, CoherentAssignment), CircuitError> {
        let q = self.effective_params(p);
        q.validate()?;
        match self {
            Circuit::Classical => classical_at(&q, phi),
            Circuit::Tsu11 | Circuit::Su11 => su11_at(&q, phi),
            Circuit::Vacuum => {
                require_unseeded(&q)?;
                su11_at(&q, phi)
            }
        }
    }

    pub fn build(self, p: &InterferometerParams) -> Result<(OperatorExpr, CoherentAssignment), CircuitError> {
        self.build_at(p, &p.phi())
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Circuit {
    type Err = CircuitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Circuit::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| CircuitError::UnknownCircuit(s.to_string()))
    }
}

/// Every physical knob of the interferometers.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferometerParams {
    pub r: f64,
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub eta_p1: f64,
    pub eta_c1: f64,
    pub eta_p2: f64,
    pub eta_c2: f64,
    pub eta_p3: f64,
    pub eta_c3: f64,
    pub theta_f: f64,
    pub phi_p: f64,
    pub phi_c: f64,
    pub arms: Arms,
    pub precision: Precision,
}

impl InterferometerParams {
    pub const MIN_DIGITS: u32 = 30;

    /// r = 0.88, α = 2e6, γ = κ = 2e8, θ_f = 0.001, lossless, both arms.
    pub fn paper_start() -> Self {
        InterferometerParams {
            r: 0.88,
            s: 0.0,
            alpha: 2e6,
            beta: 0.0,
            gamma: 2e8,
            kappa: 2e8,
            eta_p1: 1.0,
            eta_c1: 1.0,
            eta_p2: 1.0,
            eta_c2: 1.0,
            eta_p3: 0.5,
            eta_c3: 0.5,
            theta_f: 0.001,
            phi_p: 0.0,
            phi_c: 0.0,
            arms: Arms::Both,
            precision: Precision::default(),
        }
    }

    /// Sets the internal transmission of both arms.
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta_p1 = eta;
        self.eta_c1 = eta;
        self
    }

    pub fn with_phases(mut self, phi_p: f64, phi_c: f64) -> Self {
        self.phi_p = phi_p;
        self.phi_c = phi_c;
        self
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.precision.digits() < Self::MIN_DIGITS {
            return Err(CircuitError::Precision { min: Self::MIN_DIGITS, got: self.precision.digits() });
        }
        for (name, value) in self.named_values() {
            if !value.is_finite() {
                return Err(CircuitError::NotFinite { name, value });
            }
        }
        for (name, value) in [("r", self.r), ("s", self.s)] {
            if value < 0.0 {
                return Err(CircuitError::Negative { name, value });
            }
        }
        for (name, value) in self.etas() {
            if !(0.0..=1.0).contains(&value) {
                return Err(CircuitError::Transmission { name, value });
            }
        }
        Ok(())
    }

    pub fn etas(&self) -> [(&'static str, f64); 6] {
        [
            ("eta_p1", self.eta_p1),
            ("eta_c1", self.eta_c1),
            ("eta_p2", self.eta_p2),
            ("eta_c2", self.eta_c2),
            ("eta_p3", self.eta_p3),
            ("eta_c3", self.eta_c3),
        ]
    }

    /// All numeric fields by name, in a fixed order.
    pub fn named_values(&self) -> [(&'static str, f64); 15] {
        [
            ("r", self.r),
            ("s", self.s),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("eta_p1", self.eta_p1),
            ("eta_c1", self.eta_c1),
            ("eta_p2", self.eta_p2),
            ("eta_c2", self.eta_c2),
            ("eta_p3", self.eta_p3),
            ("eta_c3", self.eta_c3),
            ("theta_f", self.theta_f),
            ("phi_p", self.phi_p),
            ("phi_c", self.phi_c),
        ]
    }

    /// Amplifier gain `cosh² r`.
    pub fn gain(&self) -> f64 {
        self.r.cosh().powi(2)
    }

    pub fn gain_db(&self) -> f64 {
        10.0 * self.gain().log10()
    }

    pub fn real(&self, x: f64) -> Float {
        self.precision.real(x)
    }

    /// Sample phase produced by the polarization rotation.
    pub fn phi(&self) -> Float {
        transduce(&self.real(self.theta_f), self.precision)
    }
}

impl Default for InterferometerParams {
    fn default() -> Self {
        Self::paper_start()
    }
}

fn require_unseeded(p: &InterferometerParams) -> Result<(), CircuitError> {
    if p.alpha != 0.0 || p.beta != 0.0 {
        return Err(CircuitError::SeededVacuum { alpha: p.alpha, beta: p.beta });
    }
    Ok(())
}

/// Shorthands for building fields at one precision.
struct Ctx {
    prec: Precision,
}

impl Ctx {
    fn mode(&self, c: char) -> OperatorExpr {
        OperatorExpr::annihilate(ModeId::ch(c), self.prec)
    }

    fn real(&self, x: &Float) -> BigComplex {
        BigComplex::from_real(Float::with_val(self.prec.bits(), x), self.prec)
    }

    fn f(&self, x: f64) -> Float {
        self.prec.real(x)
    }

    fn sqrt(&self, x: f64) -> Float {
        self.f(x).sqrt()
    }

    /// `sqrt(1 - x)` without the rounding of `1 - x` in f64.
    fn sqrt_complement(&self, x: f64) -> Float {
        (Float::with_val(self.prec.bits(), 1) - self.f(x)).sqrt()
    }

    fn cis(&self, theta: &Float) -> BigComplex {
        BigComplex::cis(theta, self.prec)
    }

    fn i_times(&self, k: &Float) -> BigComplex {
        BigComplex::from_parts(Float::new(self.prec.bits()), Float::with_val(self.prec.bits(), k), self.prec)
    }

    fn lin(&self, parts: &[(&BigComplex, &OperatorExpr)]) -> Result<OperatorExpr, AlgebraError> {
        OperatorExpr::linear_combination(self.prec, parts)
    }

    /// `x†x − y†y`, normal ordered.
    fn intensity_difference(&self, x: &OperatorExpr, y: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
        let nx = x.adjoint().mul(x)?;
        let ny = y.adjoint().mul(y)?;
        Ok(nx.sub(&ny)?.normal_order())
    }
}

fn arm_phase(p: &InterferometerParams, phi: &Float) -> Float {
    match p.arms {
        Arms::Both => Float::with_val(p.precision.bits(), phi),
        Arms::ProbeOnly => Float::new(p.precision.bits()),
    }
}

/// Classical interferometer at sample phase `phi`.
///
/// The conjugate pair enters as `b_f†b_f − b_n†b_n`; the expanded form of the
/// squeezed-circuit observable fixes that reading where the classical
/// definition prints `a_n` a second time.
pub fn classical_at(
    p: &InterferometerParams,
    phi: &Float,
) -> Result<(OperatorExpr, CoherentAssignment), CircuitError> {
    p.validate()?;
    let cx = Ctx { prec: p.precision };
    let (a, b, g, h) = (cx.mode('a'), cx.mode('b'), cx.mode('g'), cx.mode('h'));
    let half = cx.real(&cx.sqrt(0.5));
    let i_half = cx.i_times(&cx.sqrt(0.5));

    let ea = cx.cis(phi);
    let eb = cx.cis(&arm_phase(p, phi));
    let ep = cx.cis(&cx.f(p.phi_p));
    let ec = cx.cis(&cx.f(p.phi_c));

    let af = cx.lin(&[(&(&half * &ea), &a), (&(&i_half * &ep), &g)])?;
    let an = cx.lin(&[(&(&i_half * &ea), &a), (&(&half * &ep), &g)])?;
    let bf = cx.lin(&[(&(&half * &eb), &b), (&(&i_half * &ec), &h)])?;
    let bn = cx.lin(&[(&(&i_half * &eb), &b), (&(&half * &ec), &h)])?;

    let j = cx.intensity_difference(&af, &an)?.add(&cx.intensity_difference(&bf, &bn)?)?;
    let state = classical_state(p)?;
    Ok((j, state))
}

/// Seeds rescaled so each arm carries the photon number of the squeezed
/// circuit: `α' = α√η_p1 cosh r`, `β' = α√η_c1 sinh r`.
pub fn classical_state(p: &InterferometerParams) -> Result<CoherentAssignment, CircuitError> {
    let prec = p.precision;
    let alpha = prec.real(p.alpha);
    let (sh, ch) = prec.real(p.r).sinh_cosh(Float::new(prec.bits()));
    let a = Float::with_val(prec.bits(), &alpha * prec.real(p.eta_p1).sqrt()) * ch;
    let b = Float::with_val(prec.bits(), &alpha * prec.real(p.eta_c1).sqrt()) * sh;
    Ok(CoherentAssignment::vacuum(prec)
        .with(ModeId::ch('a'), BigComplex::from_real(a, prec))?
        .with(ModeId::ch('b'), BigComplex::from_real(b, prec))?
        .with(ModeId::ch('g'), BigComplex::from_f64(p.gamma, prec))?
        .with(ModeId::ch('h'), BigComplex::from_f64(p.kappa, prec))?)
}

/// Seeds `{a: α, b: β, g: γ, h: κ}` of the squeezed circuits.
pub fn su11_state(p: &InterferometerParams) -> Result<CoherentAssignment, CircuitError> {
    let prec = p.precision;
    Ok(CoherentAssignment::vacuum(prec)
        .with(ModeId::ch('a'), BigComplex::from_f64(p.alpha, prec))?
        .with(ModeId::ch('b'), BigComplex::from_f64(p.beta, prec))?
        .with(ModeId::ch('g'), BigComplex::from_f64(p.gamma, prec))?
        .with(ModeId::ch('h'), BigComplex::from_f64(p.kappa, prec))?)
}

/// Intermediate fields of the squeezed chain, exposed for photon-number and
/// loss checks.
pub struct Su11Fields {
    pub u: OperatorExpr,
    pub v: OperatorExpr,
    pub w: OperatorExpr,
    pub z: OperatorExpr,
    pub x: OperatorExpr,
    pub y: OperatorExpr,
    pub m: OperatorExpr,
    pub n: OperatorExpr,
    pub a_f: OperatorExpr,
    pub a_n: OperatorExpr,
    pub b_f: OperatorExpr,
    pub b_n: OperatorExpr,
}

pub fn su11_fields(p: &InterferometerParams, phi: &Float) -> Result<Su11Fields, CircuitError> {
    p.validate()?;
    let cx = Ctx { prec: p.precision };
    let [a, b, c, d, e, f, g, h] = ['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h'].map(|m| cx.mode(m));
    let (ad, bd) = (a.adjoint(), b.adjoint());

    let (sh_r, ch_r) = cx.f(p.r).sinh_cosh(Float::new(p.precision.bits()));
    let (sh_r, ch_r) = (cx.real(&sh_r), cx.real(&ch_r));
    let u = cx.lin(&[(&ch_r, &a), (&sh_r, &bd)])?;
    let v = cx.lin(&[(&sh_r, &ad), (&ch_r, &b)])?;

    // internal loss, with the sample phase on the arms that see it
    let w = cx.lin(&[
        (&cx.i_times(&cx.sqrt_complement(p.eta_p1)), &c),
        (&(&cx.cis(phi) * &cx.real(&cx.sqrt(p.eta_p1))), &u),
    ])?;
    let z = cx.lin(&[
        (&cx.i_times(&cx.sqrt_complement(p.eta_c1)), &d),
        (&(&cx.cis(&arm_phase(p, phi)) * &cx.real(&cx.sqrt(p.eta_c1))), &v),
    ])?;

    let (sh_s, ch_s) = cx.f(p.s).sinh_cosh(Float::new(p.precision.bits()));
    let (sh_s, ch_s) = (cx.real(&sh_s), cx.real(&ch_s));
    let x = cx.lin(&[(&ch_s, &w), (&sh_s, &z.adjoint())])?;
    let y = cx.lin(&[(&sh_s, &w.adjoint()), (&ch_s, &z)])?;

    // external loss
    let m = cx.lin(&[(&cx.real(&cx.sqrt(p.eta_p2)), &x), (&cx.i_times(&cx.sqrt_complement(p.eta_p2)), &e)])?;
    let n = cx.lin(&[(&cx.real(&cx.sqrt(p.eta_c2)), &y), (&cx.i_times(&cx.sqrt_complement(p.eta_c2)), &f)])?;

    // homodyne beamsplitters with the local oscillators
    let ep = cx.cis(&cx.f(p.phi_p));
    let ec = cx.cis(&cx.f(p.phi_c));
    let (tp, rp) = (cx.real(&cx.sqrt(p.eta_p3)), cx.i_times(&cx.sqrt_complement(p.eta_p3)));
    let (tc, rc) = (cx.real(&cx.sqrt(p.eta_c3)), cx.i_times(&cx.sqrt_complement(p.eta_c3)));
    let a_f = cx.lin(&[(&tp, &m), (&(&rp * &ep), &g)])?;
    let a_n = cx.lin(&[(&(&tp * &ep), &g), (&rp, &m)])?;
    let b_f = cx.lin(&[(&tc, &n), (&(&rc * &ec), &h)])?;
    let b_n = cx.lin(&[(&(&tc * &ec), &h), (&rc, &n)])?;

    Ok(Su11Fields { u, v, w, z, x, y, m, n, a_f, a_n, b_f, b_n })
}

/// Squeezed-light chain at sample phase `phi`, parameters taken as given.
pub fn su11_at(
    p: &InterferometerParams,
    phi: &Float,
) -> Result<(OperatorExpr, CoherentAssignment), CircuitError> {
    let fields = su11_fields(p, phi)?;
    let cx = Ctx { prec: p.precision };
    let j = cx
        .intensity_difference(&fields.a_f, &fields.a_n)?
        .add(&cx.intensity_difference(&fields.b_f, &fields.b_n)?)?;
    Ok((j, su11_state(p)?))
}

pub fn build_classical_j(p: &InterferometerParams) -> Result<(OperatorExpr, CoherentAssignment), CircuitError> {
    Circuit::Classical.build(p)
}

/// Full chain with every parameter as supplied.
pub fn build_su11_j(p: &InterferometerParams) -> Result<(OperatorExpr, CoherentAssignment), CircuitError> {
    Circuit::Su11.build(p)
}

/// Truncated chain: `s = 0`, `η_p2 = η_c2 = 1`, `η_p3 = η_c3 = ½`.
pub fn build_tsu11_j(p: &InterferometerParams) -> Result<(OperatorExpr, CoherentAssignment), CircuitError> {
    Circuit::Tsu11.build(p)
}

pub fn build_vacuum_j(p: &InterferometerParams) -> Result<(OperatorExpr, CoherentAssignment), CircuitError> {
    Circuit::Vacuum.build(p)
}
