#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rug::Float;
use tsu_metrology::algebra::{LadderFactor, ModeId, Monomial, OperatorExpr};
use tsu_metrology::scalar::{BigComplex, Precision};

pub fn prec() -> Precision {
    Precision::default()
}

pub fn mode(c: char) -> ModeId {
    ModeId::ch(c)
}

/// Raw term description: coefficient parts and (mode index, dagger) factors.
pub type RawTerm = (f64, f64, Vec<(u8, bool)>);

pub fn expr_from_raw(raw: &[RawTerm], modes: &[char], prec: Precision) -> OperatorExpr {
    let terms = raw.iter().map(|(re, im, fs)| {
        let mono = Monomial::from_factors(fs.iter().map(|&(m, dagger)| LadderFactor {
            mode: mode(modes[m as usize % modes.len()]),
            dagger,
        }));
        (BigComplex::from_parts_f64(*re, *im, prec), mono)
    });
    OperatorExpr::from_terms(prec, terms).unwrap()
}

/// Random expression with up to `max_terms` terms of degree ≤ `max_degree`.
pub fn random_raw(rng: &mut ChaCha8Rng, n_modes: u8, max_terms: usize, max_degree: usize) -> Vec<RawTerm> {
    let n = rng.random_range(1..=max_terms);
    (0..n)
        .map(|_| {
            let deg = rng.random_range(0..=max_degree);
            let fs = (0..deg).map(|_| (rng.random_range(0..n_modes), rng.random_bool(0.5))).collect();
            (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), fs)
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel(a: &Float, b: &Float) -> Float {
    let scale = Float::with_val(a.prec(), a.abs_ref()).max(&Float::with_val(b.prec(), b.abs_ref()));
    if scale.is_zero() {
        return scale;
    }
    Float::with_val(a.prec(), a - b).abs() / scale
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}
