//! Multi-mode bosonic ladder-operator algebra.
//!
//! An [`OperatorExpr`] is a finite sum of products of ladder operators with
//! [`BigComplex`] weights. Products are kept exactly as written until
//! [`OperatorExpr::normal_order`] applies `[a, a†] = 1`; expectation values in
//! product coherent states then follow by substituting eigenvalues.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use rug::Float;
use smallvec::SmallVec;
use thiserror::Error;

use crate::scalar::{real_to_exact_decimal, BigComplex, Precision, ScalarError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("precision mismatch: {0} vs {1} digits")]
    PrecisionMismatch(u32, u32),
    #[error("invalid mode label {0:?}: expected 1 to {max} ASCII alphanumeric or '_' characters", max = ModeId::MAX_LEN)]
    BadLabel(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

fn same_precision(a: Precision, b: Precision) -> Result<(), AlgebraError> {
    if a == b {
        Ok(())
    } else {
        Err(AlgebraError::PrecisionMismatch(a.digits(), b.digits()))
    }
}

/// Short symbolic mode label, stored inline.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeId {
    len: u8,
    bytes: [u8; ModeId::MAX_LEN],
}

impl ModeId {
    pub const MAX_LEN: usize = 15;

    pub fn new(label: &str) -> Result<Self, AlgebraError> {
        let ok = !label.is_empty()
            && label.len() <= Self::MAX_LEN
            && label.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_');
        if !ok {
            return Err(AlgebraError::BadLabel(label.to_string()));
        }
        let mut bytes = [0u8; Self::MAX_LEN];
        bytes[..label.len()].copy_from_slice(label.as_bytes());
        Ok(ModeId { len: label.len() as u8, bytes })
    }

    /// Label from a single character; panics on characters [`ModeId::new`] rejects.
    pub fn ch(c: char) -> Self {
        let mut buf = [0u8; 4];
        Self::new(c.encode_utf8(&mut buf)).expect("valid single-character mode label")
    }

    pub fn label(&self) -> &str {
        // constructed from validated ASCII
        std::str::from_utf8(&self.bytes[..self.len as usize]).unwrap()
    }
}

impl Ord for ModeId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.label().cmp(other.label())
    }
}

impl PartialOrd for ModeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ModeId {
    type Err = AlgebraError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModeId::new(s)
    }
}

/// One creation (`dagger = true`) or annihilation operator.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct LadderFactor {
    pub mode: ModeId,
    pub dagger: bool,
}

impl LadderFactor {
    pub fn create(mode: ModeId) -> Self {
        LadderFactor { mode, dagger: true }
    }

    pub fn annihilate(mode: ModeId) -> Self {
        LadderFactor { mode, dagger: false }
    }

    pub fn adjoint(self) -> Self {
        LadderFactor { mode: self.mode, dagger: !self.dagger }
    }
}

/// Creation operators sort first, then by mode label.
impl Ord for LadderFactor {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dagger.cmp(&self.dagger).then_with(|| self.mode.cmp(&other.mode))
    }
}

impl PartialOrd for LadderFactor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for LadderFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for LadderFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.mode, if self.dagger { "+" } else { "-" })
    }
}

impl FromStr for LadderFactor {
    type Err = AlgebraError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AlgebraError::BadLabel(s.to_string());
        let dagger = match s.as_bytes().last() {
            Some(b'+') => true,
            Some(b'-') => false,
            _ => return Err(bad()),
        };
        let mode = ModeId::new(&s[..s.len() - 1]).map_err(|_| bad())?;
        Ok(LadderFactor { mode, dagger })
    }
}

/// Ordered product of ladder factors, read left to right. Empty is the identity.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(SmallVec<[LadderFactor; 4]>);

impl Monomial {
    pub fn identity() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn from_factors<I: IntoIterator<Item = LadderFactor>>(factors: I) -> Self {
        Monomial(factors.into_iter().collect())
    }

    pub fn factors(&self) -> &[LadderFactor] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        out.extend_from_slice(&other.0);
        Monomial(out)
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial(self.0.iter().rev().map(|f| f.adjoint()).collect())
    }

    /// True when every creation factor stands left of every annihilation factor.
    pub fn is_normal_ordered(&self) -> bool {
        self.0.windows(2).all(|w| w[0].dagger || !w[1].dagger)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.as_slice().cmp(other.0.as_slice()))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("I");
        }
        for (i, factor) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

type Expansion = Rc<Vec<(Monomial, u64)>>;
/// `(creations, annihilations, multiplicity)` triples of one ordered word.
type WordExpansion = Rc<Vec<(u16, u16, u64)>>;
/// Per-mode powers of a partially assembled product, with its multiplicity.
type PartialProduct = (Vec<(ModeId, u16, u16)>, u64);

thread_local! {
    static WORD_MEMO: RefCell<HashMap<Vec<bool>, WordExpansion>> = RefCell::new(HashMap::new());
    static MONOMIAL_MEMO: RefCell<HashMap<Monomial, Expansion>> = RefCell::new(HashMap::new());
}

/// Normal-ordered expansion of a single-mode word (`true` = creation) as
/// `(creations, annihilations, multiplicity)` triples.
fn order_word(word: &[bool]) -> WordExpansion {
    if let Some(hit) = WORD_MEMO.with(|m| m.borrow().get(word).cloned()) {
        return hit;
    }
    let result = match word.windows(2).position(|w| !w[0] && w[1]) {
        None => {
            let p = word.iter().filter(|&&d| d).count() as u16;
            Rc::new(vec![(p, word.len() as u16 - p, 1)])
        }
        Some(i) => {
            // a a† = a† a + 1
            let mut swapped = word.to_vec();
            swapped.swap(i, i + 1);
            let mut contracted = word.to_vec();
            contracted.drain(i..i + 2);
            let mut acc: BTreeMap<(u16, u16), u64> = BTreeMap::new();
            for part in [order_word(&swapped), order_word(&contracted)] {
                for &(p, q, n) in part.iter() {
                    *acc.entry((p, q)).or_insert(0) += n;
                }
            }
            Rc::new(acc.into_iter().map(|((p, q), n)| (p, q, n)).collect())
        }
    };
    WORD_MEMO.with(|m| m.borrow_mut().insert(word.to_vec(), result.clone()));
    result
}

/// Normal-ordered expansion of a monomial with integer multiplicities.
/// Output monomials have their factors in canonical [`LadderFactor`] order.
fn order_monomial(mono: &Monomial) -> Expansion {
    if let Some(hit) = MONOMIAL_MEMO.with(|m| m.borrow().get(mono).cloned()) {
        return hit;
    }
    // distinct modes commute, so split into per-mode words keeping relative order
    let mut words: BTreeMap<ModeId, Vec<bool>> = BTreeMap::new();
    for f in mono.factors() {
        words.entry(f.mode).or_default().push(f.dagger);
    }
    let mut partial: Vec<PartialProduct> = vec![(Vec::new(), 1)];
    for (mode, word) in &words {
        let ordered = order_word(word);
        let mut next = Vec::with_capacity(partial.len() * ordered.len());
        for (powers, n) in &partial {
            for &(p, q, m) in ordered.iter() {
                let mut powers = powers.clone();
                powers.push((*mode, p, q));
                next.push((powers, n * m));
            }
        }
        partial = next;
    }
    let expansion: Vec<(Monomial, u64)> = partial
        .into_iter()
        .map(|(powers, n)| {
            let mut factors: SmallVec<[LadderFactor; 4]> = SmallVec::new();
            for &(mode, p, _) in &powers {
                factors.extend(std::iter::repeat_n(LadderFactor::create(mode), p as usize));
            }
            for &(mode, _, q) in &powers {
                factors.extend(std::iter::repeat_n(LadderFactor::annihilate(mode), q as usize));
            }
            (Monomial(factors), n)
        })
        .collect();
    let expansion = Rc::new(expansion);
    MONOMIAL_MEMO.with(|m| m.borrow_mut().insert(mono.clone(), expansion.clone()));
    expansion
}

/// Eigenvalues of a product coherent state; absent modes are vacuum.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentAssignment {
    precision: Precision,
    values: BTreeMap<ModeId, BigComplex>,
}

impl CoherentAssignment {
    pub fn vacuum(precision: Precision) -> Self {
        CoherentAssignment { precision, values: BTreeMap::new() }
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn set(&mut self, mode: ModeId, value: BigComplex) -> Result<(), AlgebraError> {
        same_precision(self.precision, value.precision())?;
        if value.is_zero() {
            self.values.remove(&mode);
        } else {
            self.values.insert(mode, value);
        }
        Ok(())
    }

    pub fn with(mut self, mode: ModeId, value: BigComplex) -> Result<Self, AlgebraError> {
        self.set(mode, value)?;
        Ok(self)
    }

    /// Eigenvalue of `mode`, `None` for vacuum.
    pub fn get(&self, mode: ModeId) -> Option<&BigComplex> {
        self.values.get(&mode)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeId, &BigComplex)> {
        self.values.iter().map(|(m, z)| (*m, z))
    }

    pub fn with_precision(&self, precision: Precision) -> Self {
        let values = self
            .values
            .iter()
            .map(|(m, z)| {
                let (re, im) = z.clone().into_parts();
                (*m, BigComplex::from_parts(re, im, precision))
            })
            .collect();
        CoherentAssignment { precision, values }
    }
}

/// Finite sum of weighted ladder-operator products, canonically merged.
#[derive(Clone, PartialEq)]
pub struct OperatorExpr {
    precision: Precision,
    terms: BTreeMap<Monomial, BigComplex>,
}

impl OperatorExpr {
    pub fn zero(precision: Precision) -> Self {
        OperatorExpr { precision, terms: BTreeMap::new() }
    }

    /// `c · I`.
    pub fn scalar(c: BigComplex) -> Self {
        Self::term(c, Monomial::identity())
    }

    pub fn identity(precision: Precision) -> Self {
        Self::scalar(BigComplex::one(precision))
    }

    pub fn term(coeff: BigComplex, mono: Monomial) -> Self {
        let precision = coeff.precision();
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(mono, coeff);
        }
        OperatorExpr { precision, terms }
    }

    pub fn ladder(factor: LadderFactor, precision: Precision) -> Self {
        Self::term(BigComplex::one(precision), Monomial::from_factors([factor]))
    }

    pub fn annihilate(mode: ModeId, precision: Precision) -> Self {
        Self::ladder(LadderFactor::annihilate(mode), precision)
    }

    pub fn create(mode: ModeId, precision: Precision) -> Self {
        Self::ladder(LadderFactor::create(mode), precision)
    }

    /// Builds from raw terms, merging duplicates.
    pub fn from_terms<I>(precision: Precision, terms: I) -> Result<Self, AlgebraError>
    where
        I: IntoIterator<Item = (BigComplex, Monomial)>,
    {
        let mut map: BTreeMap<Monomial, BigComplex> = BTreeMap::new();
        for (c, m) in terms {
            same_precision(precision, c.precision())?;
            accumulate(&mut map, m, c);
        }
        Ok(Self::canonical(precision, map))
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigComplex)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial) -> Option<&BigComplex> {
        self.terms.get(mono)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn modes(&self) -> Vec<ModeId> {
        let mut modes: Vec<ModeId> =
            self.terms.keys().flat_map(|m| m.factors().iter().map(|f| f.mode)).collect();
        modes.sort();
        modes.dedup();
        modes
    }

    pub fn add(&self, other: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
        same_precision(self.precision, other.precision)?;
        let mut map = self.terms.clone();
        for (m, c) in &other.terms {
            accumulate(&mut map, m.clone(), c.clone());
        }
        Ok(Self::canonical(self.precision, map))
    }

    pub fn sub(&self, other: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> OperatorExpr {
        OperatorExpr {
            precision: self.precision,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: &BigComplex) -> Result<OperatorExpr, AlgebraError> {
        same_precision(self.precision, k.precision())?;
        let map = self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect();
        Ok(Self::canonical(self.precision, map))
    }

    /// `Σ k_i x_i`.
    pub fn linear_combination(
        precision: Precision,
        parts: &[(&BigComplex, &OperatorExpr)],
    ) -> Result<OperatorExpr, AlgebraError> {
        let mut map: BTreeMap<Monomial, BigComplex> = BTreeMap::new();
        for (k, x) in parts {
            same_precision(precision, k.precision())?;
            same_precision(precision, x.precision)?;
            for (m, c) in &x.terms {
                accumulate(&mut map, m.clone(), c * *k);
            }
        }
        Ok(Self::canonical(precision, map))
    }

    /// Distributed product; factor sequences are concatenated, never reordered.
    pub fn mul(&self, other: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
        same_precision(self.precision, other.precision)?;
        let mut map: BTreeMap<Monomial, BigComplex> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                accumulate(&mut map, m1.concat(m2), c1 * c2);
            }
        }
        Ok(Self::canonical(self.precision, map))
    }

    pub fn adjoint(&self) -> OperatorExpr {
        OperatorExpr {
            precision: self.precision,
            terms: self.terms.iter().map(|(m, c)| (m.adjoint(), c.conj())).collect(),
        }
    }

    pub fn normal_order(&self) -> OperatorExpr {
        let mut map: BTreeMap<Monomial, BigComplex> = BTreeMap::new();
        for (m, c) in &self.terms {
            for (ordered, n) in order_monomial(m).iter() {
                accumulate(&mut map, ordered.clone(), times_count(c, *n));
            }
        }
        Self::canonical(self.precision, map)
    }

    pub fn is_normal_ordered(&self) -> bool {
        self.terms.keys().all(Monomial::is_normal_ordered)
    }

    /// Re-rounds every coefficient to `precision`; exact when widening.
    pub fn with_precision(&self, precision: Precision) -> OperatorExpr {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let (re, im) = c.clone().into_parts();
                (m.clone(), BigComplex::from_parts(re, im, precision))
            })
            .collect();
        OperatorExpr { precision, terms }
    }

    /// Largest coefficient modulus, zero for the empty expression.
    pub fn max_coeff(&self) -> Float {
        let mut best = Float::new(self.precision.bits());
        for c in self.terms.values() {
            let a = c.abs();
            if a > best {
                best = a;
            }
        }
        best
    }

    /// Deterministic text form: a header line, then one term per line as
    /// `<re> <im> <factors>` with exact decimal coefficients.
    pub fn to_text(&self) -> String {
        let mut out = format!("precision {}\n", self.precision.digits());
        for (m, c) in &self.terms {
            out.push_str(&real_to_exact_decimal(c.re()));
            out.push(' ');
            out.push_str(&real_to_exact_decimal(c.im()));
            for f in m.factors() {
                out.push(' ');
                out.push_str(&f.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<OperatorExpr, AlgebraError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| AlgebraError::Parse { line: 1, msg: "missing header".into() })?;
        let digits = header
            .trim()
            .strip_prefix("precision ")
            .and_then(|d| d.trim().parse::<u32>().ok())
            .ok_or_else(|| AlgebraError::Parse { line: 1, msg: "expected `precision <digits>`".into() })?;
        let precision = Precision::new(digits)?;
        let mut terms = Vec::new();
        for (idx, line) in lines {
            let err = |msg: String| AlgebraError::Parse { line: idx + 1, msg };
            let mut tokens = line.split_whitespace();
            let re = tokens.next().ok_or_else(|| err("missing real part".into()))?;
            let im = tokens.next().ok_or_else(|| err("missing imaginary part".into()))?;
            let re = precision.parse_real(re).map_err(|e| err(e.to_string()))?;
            let im = precision.parse_real(im).map_err(|e| err(e.to_string()))?;
            let factors = tokens
                .map(|t| t.parse::<LadderFactor>().map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            terms.push((BigComplex::from_parts(re, im, precision), Monomial::from_factors(factors)));
        }
        OperatorExpr::from_terms(precision, terms)
    }

    /// Drops exact zeros and coefficients below `10^(-digits+5)` times the
    /// largest coefficient.
    fn canonical(precision: Precision, mut terms: BTreeMap<Monomial, BigComplex>) -> Self {
        terms.retain(|_, c| !c.is_zero());
        if !terms.is_empty() {
            let mut max = Float::new(precision.bits());
            for c in terms.values() {
                let a = c.abs();
                if a > max {
                    max = a;
                }
            }
            let cut = max * precision.dust();
            terms.retain(|_, c| c.abs() >= cut);
        }
        OperatorExpr { precision, terms }
    }
}

fn accumulate(map: &mut BTreeMap<Monomial, BigComplex>, m: Monomial, c: BigComplex) {
    match map.get_mut(&m) {
        Some(existing) => *existing += &c,
        None => {
            map.insert(m, c);
        }
    }
}

fn times_count(c: &BigComplex, n: u64) -> BigComplex {
    if n == 1 {
        return c.clone();
    }
    let prec = c.precision();
    c.scale(&Float::with_val(prec.bits(), n))
}

impl fmt::Debug for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c:?}·{m}")?;
        }
        Ok(())
    }
}

/// `⟨state| x |state⟩` for a product coherent state.
pub fn coherent_expectation(
    x: &OperatorExpr,
    state: &CoherentAssignment,
) -> Result<BigComplex, AlgebraError> {
    same_precision(x.precision, state.precision)?;
    let precision = x.precision;
    let mut sum = BigComplex::zero(precision);
    // conj(z) stands in for creators, z for annihilators
    let conj: BTreeMap<ModeId, BigComplex> = state.iter().map(|(m, z)| (m, z.conj())).collect();
    for (mono, c) in &x.terms {
        'expansion: for (ordered, n) in order_monomial(mono).iter() {
            let mut value = times_count(c, *n);
            for f in ordered.factors() {
                let z = if f.dagger { conj.get(&f.mode) } else { state.get(f.mode) };
                match z {
                    Some(z) => value *= z,
                    None => continue 'expansion,
                }
            }
            sum += &value;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Precision {
        Precision::default()
    }

    fn a() -> OperatorExpr {
        OperatorExpr::annihilate(ModeId::ch('a'), p())
    }

    fn ad() -> OperatorExpr {
        OperatorExpr::create(ModeId::ch('a'), p())
    }

    fn b() -> OperatorExpr {
        OperatorExpr::annihilate(ModeId::ch('b'), p())
    }

    fn bd() -> OperatorExpr {
        OperatorExpr::create(ModeId::ch('b'), p())
    }

    fn c(re: f64, im: f64) -> BigComplex {
        BigComplex::from_parts_f64(re, im, p())
    }

    fn mono(s: &str) -> Monomial {
        Monomial::from_factors(s.split_whitespace().map(|t| t.parse::<LadderFactor>().unwrap()))
    }

    #[test]
    fn mul_concatenates_without_reordering() {
        let x = a().mul(&ad()).unwrap();
        assert_eq!(x.len(), 1);
        assert!(x.coeff(&mono("a- a+")).is_some());

        let six_b = OperatorExpr::scalar(c(2.0, 0.0)).mul(&b().scale(&c(3.0, 0.0)).unwrap()).unwrap();
        assert_eq!(six_b.coeff(&mono("b-")).unwrap(), &c(6.0, 0.0));

        let prod = a().add(&b()).unwrap().mul(&a().sub(&b()).unwrap()).unwrap();
        assert_eq!(prod.len(), 4);
        assert_eq!(prod.coeff(&mono("a- a-")).unwrap(), &c(1.0, 0.0));
        assert_eq!(prod.coeff(&mono("a- b-")).unwrap(), &c(-1.0, 0.0));
        assert_eq!(prod.coeff(&mono("b- a-")).unwrap(), &c(1.0, 0.0));
        assert_eq!(prod.coeff(&mono("b- b-")).unwrap(), &c(-1.0, 0.0));
    }

    #[test]
    fn mul_rejects_mixed_precision() {
        let other = OperatorExpr::annihilate(ModeId::ch('a'), Precision::new(40).unwrap());
        assert!(matches!(a().mul(&other), Err(AlgebraError::PrecisionMismatch(60, 40))));
    }

    #[test]
    fn adjoint_flips_and_reverses() {
        let x = OperatorExpr::term(c(0.0, 1.0), mono("a- b+"));
        let y = x.adjoint();
        assert_eq!(y.coeff(&mono("b- a+")).unwrap(), &c(0.0, -1.0));
        assert_eq!(y.adjoint(), x);
    }

    #[test]
    fn canonical_commutator() {
        let x = a().mul(&ad()).unwrap().normal_order();
        assert_eq!(x.len(), 2);
        assert_eq!(x.coeff(&mono("a+ a-")).unwrap(), &c(1.0, 0.0));
        assert_eq!(x.coeff(&Monomial::identity()).unwrap(), &c(1.0, 0.0));
    }

    #[test]
    fn distinct_modes_commute_freely() {
        let x = a().mul(&bd()).unwrap().normal_order();
        assert_eq!(x.len(), 1);
        assert_eq!(x.coeff(&mono("b+ a-")).unwrap(), &c(1.0, 0.0));
    }

    #[test]
    fn quartic_word() {
        let x = OperatorExpr::term(c(1.0, 0.0), mono("a- a- a+ a+")).normal_order();
        assert_eq!(x.len(), 3);
        assert_eq!(x.coeff(&mono("a+ a+ a- a-")).unwrap(), &c(1.0, 0.0));
        assert_eq!(x.coeff(&mono("a+ a-")).unwrap(), &c(4.0, 0.0));
        assert_eq!(x.coeff(&Monomial::identity()).unwrap(), &c(2.0, 0.0));
    }

    #[test]
    fn ordered_factors_follow_canonical_order() {
        let x = OperatorExpr::term(c(1.0, 0.0), mono("b- a- b+ a+")).normal_order();
        for m in x.terms().map(|(m, _)| m) {
            assert!(m.factors().windows(2).all(|w| w[0] <= w[1]), "{m}");
        }
        assert!(x.coeff(&mono("a+ b+ a- b-")).is_some());
    }

    #[test]
    fn number_operator_expectation() {
        let z = c(0.6, -0.8);
        let state = CoherentAssignment::vacuum(p()).with(ModeId::ch('a'), z.clone()).unwrap();
        let n = ad().mul(&a()).unwrap();
        let v = coherent_expectation(&n, &state).unwrap();
        assert!(v.rel_diff(&BigComplex::from_real(z.norm_sqr(), p())) < p().pow10(-58));
    }

    #[test]
    fn vacuum_kills_every_nonconstant_term() {
        let x = a().mul(&ad()).unwrap().add(&OperatorExpr::scalar(c(2.5, 1.0))).unwrap();
        let v = coherent_expectation(&x, &CoherentAssignment::vacuum(p())).unwrap();
        // a a† = a† a + 1
        assert_eq!(v, c(3.5, 1.0));
        let y = bd().mul(&b()).unwrap();
        assert!(coherent_expectation(&y, &CoherentAssignment::vacuum(p())).unwrap().is_zero());
    }

    #[test]
    fn dust_is_pruned() {
        let tiny = c(1e-58, 0.0);
        let x = a().add(&b().scale(&tiny).unwrap()).unwrap();
        assert_eq!(x.len(), 1);
        let y = a().add(&b().scale(&c(1e-50, 0.0)).unwrap()).unwrap();
        assert_eq!(y.len(), 2);
    }

    #[test]
    fn text_round_trip() {
        let x = a()
            .scale(&c(0.1, -3.0))
            .unwrap()
            .mul(&bd().add(&OperatorExpr::scalar(c(1.0 / 3.0, 0.0))).unwrap())
            .unwrap()
            .normal_order();
        let text = x.to_text();
        let back = OperatorExpr::from_text(&text).unwrap();
        assert_eq!(back, x);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn mode_labels() {
        assert!(ModeId::new("probe_1").is_ok());
        assert!(ModeId::new("").is_err());
        assert!(ModeId::new("way_too_long_label").is_err());
        assert!(ModeId::new("a b").is_err());
        assert!(ModeId::ch('a') < ModeId::ch('b'));
    }
}
