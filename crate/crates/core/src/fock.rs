//! Brute-force verifier on a truncated Fock space.
//!
//! Operators become matrices over `(cutoff+1)^modes` number states; coherent
//! states become truncated, renormalized vectors. Meant for small amplitudes
//! and a handful of modes only.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{CoherentAssignment, LadderFactor, ModeId, Monomial, OperatorExpr};
use crate::scalar::BigComplex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("mode {0} is not part of the Fock configuration")]
    UnknownMode(ModeId),
    #[error("at most {max} modes are supported (got {got})")]
    TooManyModes { max: usize, got: usize },
    #[error("duplicate mode {0} in the Fock configuration")]
    DuplicateMode(ModeId),
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("|{mode} amplitude|² = {norm_sqr} exceeds cutoff/4 = {limit}")]
    AmplitudeTooLarge { mode: ModeId, norm_sqr: f64, limit: f64 },
}

/// Modes and per-mode photon-number cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockConfig {
    modes: Vec<ModeId>,
    cutoff: u32,
}

impl FockConfig {
    pub const MAX_MODES: usize = 3;

    pub fn new(modes: Vec<ModeId>, cutoff: u32) -> Result<Self, FockError> {
        if modes.len() > Self::MAX_MODES {
            return Err(FockError::TooManyModes { max: Self::MAX_MODES, got: modes.len() });
        }
        if cutoff == 0 {
            return Err(FockError::ZeroCutoff);
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(FockError::DuplicateMode(*m));
            }
        }
        Ok(FockConfig { modes, cutoff })
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn with_cutoff(&self, cutoff: u32) -> Result<Self, FockError> {
        Self::new(self.modes.clone(), cutoff)
    }

    /// Number states per mode.
    pub fn levels(&self) -> usize {
        self.cutoff as usize + 1
    }

    pub fn dim(&self) -> usize {
        self.levels().pow(self.modes.len() as u32)
    }

    /// Occupation numbers of basis state `index`, first mode most significant.
    pub fn occupations(&self, mut index: usize) -> Vec<u32> {
        let levels = self.levels();
        let mut occ = vec![0u32; self.modes.len()];
        for slot in occ.iter_mut().rev() {
            *slot = (index % levels) as u32;
            index /= levels;
        }
        occ
    }

    pub fn index(&self, occ: &[u32]) -> usize {
        occ.iter().fold(0, |acc, &n| acc * self.levels() + n as usize)
    }

    /// True when every mode of the basis state sits at least `margin` below
    /// the cutoff, so products of up to `margin` ladder factors are exact.
    pub fn is_interior(&self, index: usize, margin: u32) -> bool {
        self.occupations(index).iter().all(|&n| n + margin <= self.cutoff)
    }

    fn slot(&self, mode: ModeId) -> Result<usize, FockError> {
        self.modes.iter().position(|m| *m == mode).ok_or(FockError::UnknownMode(mode))
    }
}

/// Scalar types a Fock matrix can be built over.
pub trait FockScalar: Clone {
    fn from_coeff(c: &BigComplex) -> Self;
    fn zero_like(c: &BigComplex) -> Self;
    /// `√n` at the precision of `like`.
    fn sqrt_count(n: u64, like: &BigComplex) -> Self;
    fn add_to(&mut self, other: &Self);
    fn times(&self, other: &Self) -> Self;
}

impl FockScalar for Complex64 {
    fn from_coeff(c: &BigComplex) -> Self {
        let (re, im) = c.to_f64_parts();
        Complex64::new(re, im)
    }
    fn zero_like(_: &BigComplex) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn sqrt_count(n: u64, _: &BigComplex) -> Self {
        Complex64::new((n as f64).sqrt(), 0.0)
    }
    fn add_to(&mut self, other: &Self) {
        *self += other;
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
}

impl FockScalar for BigComplex {
    fn from_coeff(c: &BigComplex) -> Self {
        c.clone()
    }
    fn zero_like(c: &BigComplex) -> Self {
        BigComplex::zero(c.precision())
    }
    fn sqrt_count(n: u64, like: &BigComplex) -> Self {
        let prec = like.precision();
        BigComplex::from_real(rug::Float::with_val(prec.bits(), n).sqrt(), prec)
    }
    fn add_to(&mut self, other: &Self) {
        *self += other;
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FockMatrix<S> {
    pub dim: usize,
    pub data: Vec<S>,
}

impl<S> FockMatrix<S> {
    pub fn get(&self, row: usize, col: usize) -> &S {
        &self.data[row * self.dim + col]
    }
}

/// Image of basis state `col` under the monomial, as `(row, amplitude²)`.
/// The weight is returned squared so it stays an integer; `None` when the
/// state is annihilated or pushed past the cutoff.
fn monomial_action(m: &Monomial, slots: &[usize], cfg: &FockConfig, col: usize) -> Option<(usize, u64)> {
    let mut occ = cfg.occupations(col);
    let mut weight_sq: u64 = 1;
    // rightmost factor acts first
    for (f, &slot) in m.factors().iter().zip(slots).rev() {
        let n = occ[slot];
        if f.dagger {
            if n == cfg.cutoff {
                return None;
            }
            occ[slot] = n + 1;
            weight_sq *= u64::from(n + 1);
        } else {
            if n == 0 {
                return None;
            }
            occ[slot] = n - 1;
            weight_sq *= u64::from(n);
        }
    }
    Some((cfg.index(&occ), weight_sq))
}

fn factor_slots(m: &Monomial, cfg: &FockConfig) -> Result<Vec<usize>, FockError> {
    m.factors().iter().map(|f| cfg.slot(f.mode)).collect()
}

/// Matrix of `x` with every ladder factor replaced by its truncated matrix.
pub fn matrix_of<S: FockScalar>(x: &OperatorExpr, cfg: &FockConfig) -> Result<FockMatrix<S>, FockError> {
    let dim = cfg.dim();
    let proto = BigComplex::zero(x.precision());
    let mut data = vec![S::zero_like(&proto); dim * dim];
    let mut sqrt_cache: HashMap<u64, S> = HashMap::new();
    for (m, c) in x.terms() {
        let slots = factor_slots(m, cfg)?;
        let coeff = S::from_coeff(c);
        for col in 0..dim {
            if let Some((row, w2)) = monomial_action(m, &slots, cfg, col) {
                // √(w2) is a product of √n factors; exact as one square root
                let w = sqrt_cache
                    .entry(w2)
                    .or_insert_with(|| S::sqrt_count(w2, &proto))
                    .clone();
                data[row * dim + col].add_to(&coeff.times(&w));
            }
        }
    }
    Ok(FockMatrix { dim, data })
}

/// Normalized truncated coherent vector for one mode.
pub fn coherent_vector(z: Complex64, cutoff: u32) -> Vec<Complex64> {
    let mut v = Vec::with_capacity(cutoff as usize + 1);
    let mut c = Complex64::new(1.0, 0.0);
    v.push(c);
    for n in 1..=cutoff {
        c = c * z / f64::from(n).sqrt();
        v.push(c);
    }
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|c| c / norm).collect()
}

fn amplitude(state: &CoherentAssignment, mode: ModeId) -> Complex64 {
    state.get(mode).map_or(Complex64::new(0.0, 0.0), |z| {
        let (re, im) = z.to_f64_parts();
        Complex64::new(re, im)
    })
}

fn check_amplitudes(cfg: &FockConfig, state: &CoherentAssignment) -> Result<(), FockError> {
    let limit = f64::from(cfg.cutoff) / 4.0;
    for &mode in cfg.modes() {
        let norm_sqr = amplitude(state, mode).norm_sqr();
        if norm_sqr > limit {
            return Err(FockError::AmplitudeTooLarge { mode, norm_sqr, limit });
        }
    }
    Ok(())
}

/// Kronecker product of per-mode truncated coherent vectors.
pub fn product_state(cfg: &FockConfig, state: &CoherentAssignment) -> Result<Vec<Complex64>, FockError> {
    check_amplitudes(cfg, state)?;
    let per_mode: Vec<Vec<Complex64>> =
        cfg.modes().iter().map(|&m| coherent_vector(amplitude(state, m), cfg.cutoff)).collect();
    Ok((0..cfg.dim())
        .map(|i| {
            cfg.occupations(i).iter().zip(&per_mode).map(|(&n, v)| v[n as usize]).product::<Complex64>()
        })
        .collect())
}

/// `v† M(x) v` on the full Kronecker space of `cfg`.
pub fn oracle_expectation(
    x: &OperatorExpr,
    cfg: &FockConfig,
    state: &CoherentAssignment,
) -> Result<Complex64, FockError> {
    let v = product_state(cfg, state)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (m, c) in x.terms() {
        let slots = factor_slots(m, cfg)?;
        let coeff = Complex64::from_coeff(c);
        let mut part = Complex64::new(0.0, 0.0);
        for (col, vc) in v.iter().enumerate() {
            if vc.norm_sqr() == 0.0 {
                continue;
            }
            if let Some((row, w2)) = monomial_action(m, &slots, cfg, col) {
                part += v[row].conj() * (w2 as f64).sqrt() * vc;
            }
        }
        sum += coeff * part;
    }
    Ok(sum)
}

/// Expectation assembled term by term from single-mode oracles.
///
/// Factors of different modes commute and the state is a product, so each
/// term's expectation is the product of per-mode expectations of its
/// single-mode words. This keeps the Fock dimension at `cutoff + 1` no
/// matter how many modes `x` touches.
pub fn factorized_expectation(
    x: &OperatorExpr,
    cutoff: u32,
    state: &CoherentAssignment,
) -> Result<Complex64, FockError> {
    let mut cache: HashMap<(ModeId, Monomial), Complex64> = HashMap::new();
    let mut sum = Complex64::new(0.0, 0.0);
    for (m, c) in x.terms() {
        let mut words: BTreeMap<ModeId, Vec<LadderFactor>> = BTreeMap::new();
        for f in m.factors() {
            words.entry(f.mode).or_default().push(*f);
        }
        let mut value = Complex64::from_coeff(c);
        for (mode, factors) in words {
            let word = Monomial::from_factors(factors);
            let key = (mode, word.clone());
            let e = match cache.get(&key) {
                Some(e) => *e,
                None => {
                    let cfg = FockConfig::new(vec![mode], cutoff)?;
                    let one = OperatorExpr::term(BigComplex::one(x.precision()), word);
                    let e = oracle_expectation(&one, &cfg, state)?;
                    cache.insert(key, e);
                    e
                }
            };
            value *= e;
        }
        sum += value;
    }
    Ok(sum)
}

/// Largest entrywise difference between two Fock matrices over basis states
/// at least `margin` below the cutoff in every mode.
pub fn interior_max_diff(
    lhs: &FockMatrix<Complex64>,
    rhs: &FockMatrix<Complex64>,
    cfg: &FockConfig,
    margin: u32,
) -> f64 {
    let interior: Vec<usize> = (0..cfg.dim()).filter(|&i| cfg.is_interior(i, margin)).collect();
    let mut worst = 0.0f64;
    for &r in &interior {
        for &c in &interior {
            worst = worst.max((lhs.get(r, c) - rhs.get(r, c)).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Precision;

    fn a() -> ModeId {
        ModeId::ch('a')
    }

    fn number_op(prec: Precision) -> OperatorExpr {
        OperatorExpr::create(a(), prec).mul(&OperatorExpr::annihilate(a(), prec)).unwrap()
    }

    #[test]
    fn number_operator_is_diagonal() {
        let cfg = FockConfig::new(vec![a()], 3).unwrap();
        let m: FockMatrix<Complex64> = matrix_of(&number_op(Precision::default()), &cfg).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expect = if r == c { r as f64 } else { 0.0 };
                assert_eq!(*m.get(r, c), Complex64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn commutator_is_identity_off_the_edge() {
        let prec = Precision::default();
        let cfg = FockConfig::new(vec![a()], 6).unwrap();
        let aad = OperatorExpr::annihilate(a(), prec).mul(&OperatorExpr::create(a(), prec)).unwrap();
        let comm = aad.sub(&number_op(prec)).unwrap();
        let m: FockMatrix<Complex64> = matrix_of(&comm, &cfg).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                assert_eq!(m.get(r, c).re, if r == c { 1.0 } else { 0.0 });
            }
        }
        // the truncated a a† loses the top state
        assert_eq!(m.get(6, 6).re, -6.0);
    }

    #[test]
    fn coherent_photon_number() {
        let prec = Precision::default();
        let cfg = FockConfig::new(vec![a()], 20).unwrap();
        let state = CoherentAssignment::vacuum(prec).with(a(), BigComplex::from_f64(0.5, prec)).unwrap();
        let n = oracle_expectation(&number_op(prec), &cfg, &state).unwrap();
        assert!((n.re - 0.25).abs() < 1e-12 && n.im.abs() < 1e-12);
    }

    #[test]
    fn rejects_large_amplitudes_and_unknown_modes() {
        let prec = Precision::default();
        let cfg = FockConfig::new(vec![a()], 8).unwrap();
        let state = CoherentAssignment::vacuum(prec).with(a(), BigComplex::from_f64(1.5, prec)).unwrap();
        assert!(matches!(
            oracle_expectation(&number_op(prec), &cfg, &state),
            Err(FockError::AmplitudeTooLarge { .. })
        ));
        let b = OperatorExpr::annihilate(ModeId::ch('b'), prec);
        assert!(matches!(matrix_of::<Complex64>(&b, &cfg), Err(FockError::UnknownMode(_))));
        assert!(FockConfig::new(vec![a(), ModeId::ch('b'), ModeId::ch('c'), ModeId::ch('d')], 4).is_err());
    }

    #[test]
    fn basis_indexing_round_trips() {
        let cfg = FockConfig::new(vec![a(), ModeId::ch('b')], 4).unwrap();
        for i in 0..cfg.dim() {
            assert_eq!(cfg.index(&cfg.occupations(i)), i);
        }
    }
}
