//! Expectations, variances, phase derivatives and limits of detection.
//!
//! LOD is `10·log10 √(Δ²J / |∂⟨J⟩/∂φ|²)` in dB (rad). The transduction slope
//! has unit magnitude, so the φ derivative doubles as the θ_f derivative.

use std::fmt;

use rug::Float;
use thiserror::Error;

use crate::algebra::{coherent_expectation, AlgebraError, CoherentAssignment, OperatorExpr};
use crate::circuit::{Arms, Circuit, CircuitError, InterferometerParams};
use crate::closed_form::{closed_form_at, ClosedFormError};
use crate::scalar::{BigComplex, Precision};

/// Extra digits carried while forming ⟨J²⟩ − ⟨J⟩², which cancels many
/// leading digits at large seed and oscillator amplitudes.
pub const GUARD_DIGITS: u32 = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetrologyError {
    #[error("LOD is undefined: ∂⟨J⟩/∂φ vanishes (variance {variance})")]
    UndefinedLod { variance: String },
    #[error("variance has imaginary residue {residue} relative to ⟨J²⟩, above 1e-{limit}")]
    ImaginaryResidue { residue: String, limit: u32 },
    #[error("variance is negative ({0})")]
    NegativeVariance(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Engine,
    ClosedForm,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Engine => "engine",
            Source::ClosedForm => "closed-form",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetrologyReport {
    pub circuit: Circuit,
    pub mean_j: BigComplex,
    pub second_moment: BigComplex,
    pub variance: BigComplex,
    pub dj_dphi_sq: Float,
    /// `None` when the phase derivative vanishes.
    pub lod_db: Option<Float>,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LodiReport {
    pub lod_tsu11_db: Float,
    pub lod_classical_db: Float,
    pub lodi_db: Float,
}

/// ⟨J⟩ in the given coherent state.
pub fn mean(j: &OperatorExpr, state: &CoherentAssignment) -> Result<BigComplex, MetrologyError> {
    Ok(coherent_expectation(j, state)?)
}

/// `(⟨J⟩, ⟨J²⟩, Δ²J)` computed with [`GUARD_DIGITS`] extra digits and
/// rounded back. Fails when the imaginary part of Δ²J exceeds
/// `10^-(digits-10)` of |⟨J²⟩| or the real part is negative.
pub fn moments(
    j: &OperatorExpr,
    state: &CoherentAssignment,
) -> Result<(BigComplex, BigComplex, BigComplex), MetrologyError> {
    let prec = j.precision();
    let wide = Precision::new(prec.digits() + GUARD_DIGITS).expect("nonzero precision");
    if state.precision() != prec {
        return Err(AlgebraError::PrecisionMismatch(prec.digits(), state.precision().digits()).into());
    }
    let jw = j.with_precision(wide);
    let sw = state.with_precision(wide);
    let m = coherent_expectation(&jw, &sw)?;
    let m2 = coherent_expectation(&jw.mul(&jw)?, &sw)?;
    let var = &m2 - &(&m * &m);

    let scale = m2.abs();
    if !scale.is_zero() {
        let residue = Float::with_val(wide.bits(), var.im().abs_ref()) / &scale;
        let limit = prec.digits().saturating_sub(10);
        if residue > wide.pow10(-(limit as i32)) {
            return Err(MetrologyError::ImaginaryResidue { residue: residue.to_string_radix(10, Some(6)), limit });
        }
    }
    if var.re().is_sign_negative() && !var.re().is_zero() {
        return Err(MetrologyError::NegativeVariance(var.re().to_string_radix(10, Some(12))));
    }
    let narrow = |z: BigComplex| {
        let (re, im) = z.into_parts();
        BigComplex::from_parts(re, im, prec)
    };
    Ok((narrow(m), narrow(m2), narrow(var)))
}

/// Δ²J = ⟨J²⟩ − ⟨J⟩².
pub fn variance(j: &OperatorExpr, state: &CoherentAssignment) -> Result<BigComplex, MetrologyError> {
    Ok(moments(j, state)?.2)
}

/// Default central-difference step: `10^(-digits/3)`.
pub fn default_step(prec: Precision) -> Float {
    prec.pow10(-(prec.digits() as i32) / 3)
}

/// Step used by the extrapolated derivative: `10^(-digits/5)`.
pub fn richardson_step(prec: Precision) -> Float {
    prec.pow10(-(prec.digits() as i32) / 5)
}

fn mean_at(circuit: Circuit, p: &InterferometerParams, phi: &Float) -> Result<BigComplex, MetrologyError> {
    let (j, state) = circuit.build_at(p, phi)?;
    mean(&j, &state)
}

/// Central difference `(⟨J⟩(φ+h) − ⟨J⟩(φ−h)) / 2h` at the transduced phase.
pub fn dj_dphi_central(circuit: Circuit, p: &InterferometerParams, h: &Float) -> Result<BigComplex, MetrologyError> {
    dj_dphi_central_at(circuit, p, &p.phi(), h)
}

fn dj_dphi_central_at(
    circuit: Circuit,
    p: &InterferometerParams,
    phi: &Float,
    h: &Float,
) -> Result<BigComplex, MetrologyError> {
    let prec = p.precision;
    let bits = prec.bits();
    let hi = mean_at(circuit, p, &Float::with_val(bits, phi + h))?;
    let lo = mean_at(circuit, p, &Float::with_val(bits, phi - h))?;
    let two_h = Float::with_val(bits, h * 2u32);
    Ok((&hi - &lo).scale(&two_h.recip()))
}

/// ∂⟨J⟩/∂φ by one Richardson step on central differences,
/// `(4 D(h/2) − D(h)) / 3`. Evaluated with [`GUARD_DIGITS`] extra digits and
/// `h = 10^(-wide/5)` so neither rounding nor truncation reaches the working
/// digits, then rounded back.
pub fn dj_dphi_at(circuit: Circuit, p: &InterferometerParams, phi: &Float) -> Result<BigComplex, MetrologyError> {
    let prec = p.precision;
    let wide = Precision::new(prec.digits() + GUARD_DIGITS).expect("nonzero precision");
    let pw = InterferometerParams { precision: wide, ..p.clone() };
    let phi = Float::with_val(wide.bits(), phi);
    let h = richardson_step(wide);
    let half = Float::with_val(wide.bits(), &h / 2u32);
    let coarse = dj_dphi_central_at(circuit, &pw, &phi, &h)?;
    let fine = dj_dphi_central_at(circuit, &pw, &phi, &half)?;
    let four = BigComplex::from_f64(4.0, wide);
    let third = BigComplex::from_real(wide.real(3.0).recip(), wide);
    let (re, im) = (&(&(&four * &fine) - &coarse) * &third).into_parts();
    Ok(BigComplex::from_parts(re, im, prec))
}

/// |∂⟨J⟩/∂φ|² at the transduced phase.
pub fn dj_dphi_sq(circuit: Circuit, p: &InterferometerParams) -> Result<Float, MetrologyError> {
    Ok(dj_dphi_at(circuit, p, &p.phi())?.norm_sqr())
}

/// `10·log10 √(variance / dphi_sq)`, `None` when `dphi_sq` is zero.
pub fn lod_from(variance: &Float, dphi_sq: &Float) -> Option<Float> {
    if dphi_sq.is_zero() {
        return None;
    }
    let ratio = Float::with_val(variance.prec(), variance / dphi_sq);
    Some(ratio.sqrt().log10() * 10u32)
}

/// Full engine report for one circuit at its transduced phase.
pub fn evaluate(circuit: Circuit, p: &InterferometerParams) -> Result<MetrologyReport, MetrologyError> {
    evaluate_at(circuit, p, &p.phi())
}

pub fn evaluate_at(circuit: Circuit, p: &InterferometerParams, phi: &Float) -> Result<MetrologyReport, MetrologyError> {
    let (j, state) = circuit.build_at(p, phi)?;
    let (mean_j, second_moment, variance) = moments(&j, &state)?;
    let dj_dphi_sq = dj_dphi_at(circuit, p, phi)?.norm_sqr();
    let lod_db = lod_from(variance.re(), &dj_dphi_sq);
    Ok(MetrologyReport { circuit, mean_j, second_moment, variance, dj_dphi_sq, lod_db, source: Source::Engine })
}

/// Report built from the analytic expressions instead of the engine.
pub fn evaluate_closed_form(circuit: Circuit, p: &InterferometerParams) -> Result<MetrologyReport, MetrologyError> {
    let prec = p.precision;
    let cf = closed_form_at(circuit, p, &p.phi())?;
    let mean_j = BigComplex::from_real(cf.mean.clone(), prec);
    let second = Float::with_val(prec.bits(), &cf.variance + Float::with_val(prec.bits(), cf.mean.square_ref()));
    let lod_db = lod_from(&cf.variance, &cf.dphi_sq);
    Ok(MetrologyReport {
        circuit,
        mean_j,
        second_moment: BigComplex::from_real(second, prec),
        variance: BigComplex::from_real(cf.variance, prec),
        dj_dphi_sq: cf.dphi_sq,
        lod_db,
        source: Source::ClosedForm,
    })
}

/// LOD in dB (rad); errors when the phase derivative vanishes.
pub fn lod_db(circuit: Circuit, p: &InterferometerParams) -> Result<Float, MetrologyError> {
    let report = evaluate(circuit, p)?;
    report.lod_db.ok_or_else(|| MetrologyError::UndefinedLod {
        variance: crate::scalar::real_to_decimal(report.variance.re(), 12),
    })
}

/// Photon-matched classical reference: both arms through the sample and the
/// local oscillators aligned with the sample phase, which maximizes the
/// derivative while the variance does not depend on phase.
pub fn classical_reference(p: &InterferometerParams) -> InterferometerParams {
    let phi = p.phi().to_f64();
    InterferometerParams { arms: Arms::Both, phi_p: phi, phi_c: phi, ..p.clone() }
}

/// `LOD_tSU(1,1) − LOD_classical` with the classical side from
/// [`classical_reference`].
pub fn lodi_db(p: &InterferometerParams) -> Result<LodiReport, MetrologyError> {
    lodi_db_for(Circuit::Tsu11, p)
}

pub fn lodi_db_for(quantum: Circuit, p: &InterferometerParams) -> Result<LodiReport, MetrologyError> {
    let lod_classical_db = lod_db(Circuit::Classical, &classical_reference(p))?;
    lodi_with_reference(quantum, p, &lod_classical_db)
}

/// LODI against an already computed classical LOD.
pub fn lodi_with_reference(
    quantum: Circuit,
    p: &InterferometerParams,
    lod_classical_db: &Float,
) -> Result<LodiReport, MetrologyError> {
    let lod_tsu11_db = lod_db(quantum, p)?;
    let lodi_db = Float::with_val(p.precision.bits(), &lod_tsu11_db - lod_classical_db);
    Ok(LodiReport { lod_tsu11_db, lod_classical_db: lod_classical_db.clone(), lodi_db })
}
