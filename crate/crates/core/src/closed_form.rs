//! Analytic ⟨J⟩, |∂⟨J⟩/∂φ|² and Δ²J for real seeds and local-oscillator
//! amplitudes, used as an independent route next to the operator engine.

use rug::Float;
use thiserror::Error;

use crate::circuit::{Arms, Circuit, CircuitError, InterferometerParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("no closed form for {circuit}: {reason}")]
    OutOfDomain { circuit: Circuit, reason: &'static str },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Analytic moments at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub mean: Float,
    pub dphi_sq: Float,
    pub variance: Float,
}

/// Closed forms for `circuit` at sample phase `phi`.
pub fn closed_form_at(circuit: Circuit, p: &InterferometerParams, phi: &Float) -> Result<ClosedForm, ClosedFormError> {
    let q = circuit.effective_params(p);
    q.validate()?;
    match circuit {
        Circuit::Classical => Ok(classical(&q, phi)),
        Circuit::Tsu11 => truncated(circuit, &q, phi),
        Circuit::Vacuum => {
            if q.alpha != 0.0 || q.beta != 0.0 {
                return Err(CircuitError::SeededVacuum { alpha: q.alpha, beta: q.beta }.into());
            }
            truncated(circuit, &q, phi)
        }
        Circuit::Su11 => Err(ClosedFormError::OutOfDomain { circuit, reason: "only the truncated chain has one" }),
    }
}

pub fn closed_form(circuit: Circuit, p: &InterferometerParams) -> Result<ClosedForm, ClosedFormError> {
    closed_form_at(circuit, p, &p.phi())
}

/// ⟨J⟩ = −2α'γ sin(φ_p − φ) − 2β'κ sin(φ_c − φ_b),
/// Δ²J = α'² + β'² + γ² + κ², with φ_b the conjugate-arm phase.
fn classical(p: &InterferometerParams, phi: &Float) -> ClosedForm {
    let prec = p.precision;
    let bits = prec.bits();
    let r = prec.real(p.r);
    let alpha = prec.real(p.alpha);
    let a1 = Float::with_val(bits, &alpha * prec.real(p.eta_p1).sqrt()) * Float::with_val(bits, r.cosh_ref());
    let b1 = Float::with_val(bits, &alpha * prec.real(p.eta_c1).sqrt()) * Float::with_val(bits, r.sinh_ref());
    let gamma = prec.real(p.gamma);
    let kappa = prec.real(p.kappa);
    let phi_b = match p.arms {
        Arms::Both => Float::with_val(bits, phi),
        Arms::ProbeOnly => Float::new(bits),
    };
    let dp = prec.real(p.phi_p) - Float::with_val(bits, phi);
    let dc = prec.real(p.phi_c) - &phi_b;
    let (sp, cp) = dp.sin_cos(Float::new(bits));
    let (sc, cc) = dc.sin_cos(Float::new(bits));

    let ag = Float::with_val(bits, &a1 * &gamma) * 2u32;
    let bk = Float::with_val(bits, &b1 * &kappa) * 2u32;
    let mean = -(Float::with_val(bits, &ag * &sp) + Float::with_val(bits, &bk * &sc));
    let mut d = Float::with_val(bits, &ag * &cp);
    if p.arms == Arms::Both {
        d += Float::with_val(bits, &bk * &cc);
    }
    let variance = a1.square() + b1.square() + gamma.square() + kappa.square();
    ClosedForm { mean, dphi_sq: d.square(), variance }
}

/// Truncated chain with equal internal transmission η in both arms:
///
/// ⟨J⟩ = 2α√η (γ cosh r sin(φ − φ_p) + κ sinh r sin(φ − φ_c)),
/// ∂⟨J⟩/∂φ = 2α√η (γ cosh r cos(φ − φ_p) + κ sinh r cos(φ − φ_c)),
/// Δ²J = (γ² + κ²)(1 − η + η cosh 2r) − 2γκη sinh 2r cos(2φ − φ_p − φ_c)
///       + α²η cosh 2r + 2η sinh² r.
fn truncated(circuit: Circuit, p: &InterferometerParams, phi: &Float) -> Result<ClosedForm, ClosedFormError> {
    if p.arms != Arms::Both {
        return Err(ClosedFormError::OutOfDomain { circuit, reason: "requires the phase on both arms" });
    }
    if p.eta_p1 != p.eta_c1 {
        return Err(ClosedFormError::OutOfDomain { circuit, reason: "requires eta_p1 = eta_c1" });
    }
    if p.beta != 0.0 {
        return Err(ClosedFormError::OutOfDomain { circuit, reason: "requires beta = 0" });
    }
    let prec = p.precision;
    let bits = prec.bits();
    let eta = prec.real(p.eta_p1);
    let r = prec.real(p.r);
    let (sh, ch) = r.clone().sinh_cosh(Float::new(bits));
    let (sh2, ch2) = (r * 2u32).sinh_cosh(Float::new(bits));
    let alpha = prec.real(p.alpha);
    let gamma = prec.real(p.gamma);
    let kappa = prec.real(p.kappa);
    let phi = Float::with_val(bits, phi);
    let phi_p = prec.real(p.phi_p);
    let phi_c = prec.real(p.phi_c);

    let (sp, cp) = Float::with_val(bits, &phi - &phi_p).sin_cos(Float::new(bits));
    let (sc, cc) = Float::with_val(bits, &phi - &phi_c).sin_cos(Float::new(bits));
    let pre = Float::with_val(bits, &alpha * eta.clone().sqrt()) * 2u32;
    let gch = Float::with_val(bits, &gamma * &ch);
    let ksh = Float::with_val(bits, &kappa * &sh);

    let mean = Float::with_val(bits, &gch * &sp) + Float::with_val(bits, &ksh * &sc);
    let mean = mean * &pre;
    let d = Float::with_val(bits, &gch * &cp) + Float::with_val(bits, &ksh * &cc);
    let d = d * &pre;

    let one = Float::with_val(bits, 1);
    let lo = Float::with_val(bits, gamma.square_ref()) + Float::with_val(bits, kappa.square_ref());
    let spread = one - &eta + Float::with_val(bits, &eta * &ch2);
    let cross_phase = Float::with_val(bits, &phi * 2u32) - &phi_p - &phi_c;
    let cross = Float::with_val(bits, &gamma * &kappa) * &eta * &sh2 * cross_phase.cos() * 2u32;
    let seed = Float::with_val(bits, alpha.square_ref()) * &eta * &ch2;
    let spontaneous = sh.square() * &eta * 2u32;
    let variance = lo * spread - cross + seed + spontaneous;

    Ok(ClosedForm { mean, dphi_sq: d.square(), variance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_variance_ignores_phases() {
        let p = InterferometerParams::paper_start();
        let a = closed_form(Circuit::Classical, &p).unwrap();
        let b = closed_form(Circuit::Classical, &p.clone().with_phases(1.3, -0.4)).unwrap();
        assert_eq!(a.variance, b.variance);
    }

    #[test]
    fn vacuum_mean_vanishes() {
        let p = InterferometerParams { alpha: 0.0, ..InterferometerParams::paper_start() };
        let v = closed_form(Circuit::Vacuum, &p).unwrap();
        assert!(v.mean.is_zero());
        assert!(v.dphi_sq.is_zero());
    }

    #[test]
    fn su11_has_no_closed_form() {
        assert!(closed_form(Circuit::Su11, &InterferometerParams::paper_start()).is_err());
    }

    #[test]
    fn lossless_vacuum_variance_minimum_is_squeezed() {
        // at 2φ = φ_p + φ_c and γ = κ: 2γ²e^{-2r} + 2 sinh² r
        let p = InterferometerParams { alpha: 0.0, theta_f: 0.0, gamma: 10.0, kappa: 10.0, ..InterferometerParams::paper_start() };
        let v = closed_form(Circuit::Vacuum, &p).unwrap().variance.to_f64();
        let expect = 200.0 * (-2.0 * p.r).exp() + 2.0 * p.r.sinh().powi(2);
        assert!((v - expect).abs() < 1e-10 * expect);
    }
}
