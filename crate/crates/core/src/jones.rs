//! Polarization-rotation to phase transduction with two quarter-wave plates.

use rug::Float;

use crate::scalar::{BigComplex, Precision};

/// Two-component Jones vector `(H, V)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JonesVector(pub [BigComplex; 2]);

/// 2×2 Jones matrix, row major.
#[derive(Clone, Debug, PartialEq)]
pub struct JonesMatrix(pub [[BigComplex; 2]; 2]);

impl JonesVector {
    pub fn horizontal(prec: Precision) -> Self {
        JonesVector([BigComplex::one(prec), BigComplex::zero(prec)])
    }

    pub fn vertical(prec: Precision) -> Self {
        JonesVector([BigComplex::zero(prec), BigComplex::one(prec)])
    }

    pub fn h(&self) -> &BigComplex {
        &self.0[0]
    }

    pub fn v(&self) -> &BigComplex {
        &self.0[1]
    }
}

impl JonesMatrix {
    pub fn identity(prec: Precision) -> Self {
        let (o, z) = (BigComplex::one(prec), BigComplex::zero(prec));
        JonesMatrix([[o.clone(), z.clone()], [z, o]])
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        let m = &self.0;
        JonesVector([
            &(&m[0][0] * &v.0[0]) + &(&m[0][1] * &v.0[1]),
            &(&m[1][0] * &v.0[0]) + &(&m[1][1] * &v.0[1]),
        ])
    }

    pub fn compose(&self, rhs: &JonesMatrix) -> JonesMatrix {
        let (a, b) = (&self.0, &rhs.0);
        let cell = |i: usize, j: usize| &(&a[i][0] * &b[0][j]) + &(&a[i][1] * &b[1][j]);
        JonesMatrix([[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]])
    }

    pub fn adjoint(&self) -> JonesMatrix {
        let m = &self.0;
        JonesMatrix([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    /// Largest entry modulus of `M†M − I`.
    pub fn unitarity_defect(&self) -> Float {
        let prec = self.0[0][0].precision();
        let d = self.adjoint().compose(self);
        let id = JonesMatrix::identity(prec);
        let mut worst = Float::new(prec.bits());
        for i in 0..2 {
            for j in 0..2 {
                let e = (&d.0[i][j] - &id.0[i][j]).abs();
                if e > worst {
                    worst = e;
                }
            }
        }
        worst
    }
}

/// `e^{-iπ/4}` times the given entries, each of the form `(x + iy)/2`.
fn plate(prec: Precision, diag: (f64, f64), off: (f64, f64)) -> JonesMatrix {
    let quarter = -prec.pi() / 4u32;
    let global = BigComplex::cis(&quarter, prec);
    let d = &global * &BigComplex::from_parts_f64(diag.0 / 2.0, diag.1 / 2.0, prec);
    let o = &global * &BigComplex::from_parts_f64(off.0 / 2.0, off.1 / 2.0, prec);
    JonesMatrix([[d.clone(), o.clone()], [o, d]])
}

/// Quarter-wave plate with fast axis at +45°.
pub fn qwp_plus45(prec: Precision) -> JonesMatrix {
    plate(prec, (1.0, 1.0), (1.0, -1.0))
}

/// Quarter-wave plate with fast axis at −45°.
pub fn qwp_minus45(prec: Precision) -> JonesMatrix {
    plate(prec, (1.0, 1.0), (-1.0, 1.0))
}

/// Polarization rotation by `theta_f` inside the sample.
pub fn rotation(theta_f: &Float, prec: Precision) -> JonesMatrix {
    let (s, c) = Float::with_val(prec.bits(), theta_f).sin_cos(Float::new(prec.bits()));
    let cos = BigComplex::from_real(c, prec);
    let sin = BigComplex::from_real(s, prec);
    JonesMatrix([[cos.clone(), sin.clone()], [-&sin, cos]])
}

/// QWP(+45°), sample rotation, QWP(−45°) applied to `input` in that order.
pub fn jones_pipeline(theta_f: &Float, input: &JonesVector) -> JonesVector {
    let prec = input.h().precision();
    let circuit = qwp_minus45(prec).compose(&rotation(theta_f, prec)).compose(&qwp_plus45(prec));
    circuit.apply(input)
}

/// Optical phase produced by a rotation `theta_f`: `arg(cos θ − i sin θ)`.
pub fn transduce(theta_f: &Float, prec: Precision) -> Float {
    let (s, c) = Float::with_val(prec.bits(), theta_f).sin_cos(Float::new(prec.bits()));
    BigComplex::from_parts(c, -s, prec).arg()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Precision {
        Precision::default()
    }

    #[test]
    fn plates_and_rotation_are_unitary() {
        let tol = p().pow10(-50);
        assert!(qwp_plus45(p()).unitarity_defect() < tol);
        assert!(qwp_minus45(p()).unitarity_defect() < tol);
        assert!(rotation(&p().real(0.7), p()).unitarity_defect() < tol);
    }

    #[test]
    fn horizontal_input_picks_up_pure_phase() {
        let theta = p().parse_real("0.3").unwrap();
        let out = jones_pipeline(&theta, &JonesVector::horizontal(p()));
        let (s, c) = theta.clone().sin_cos(Float::new(p().bits()));
        let expect = BigComplex::from_parts(c, -s, p());
        assert!(out.h().rel_diff(&expect) < p().pow10(-55));
        assert!(out.v().abs() < p().pow10(-50));
    }

    #[test]
    fn zero_rotation_is_identity_on_h() {
        let out = jones_pipeline(&p().real(0.0), &JonesVector::horizontal(p()));
        assert!(out.h().rel_diff(&BigComplex::one(p())) < p().pow10(-55));
    }

    #[test]
    fn transduction_is_minus_theta() {
        assert!(transduce(&p().real(0.0), p()).is_zero());
        let theta = p().parse_real("0.001").unwrap();
        let phi = transduce(&theta, p());
        assert!(Float::with_val(p().bits(), &phi + &theta).abs() < p().pow10(-58));
    }
}
