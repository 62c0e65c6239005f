//! Basis words over {1, σ⁰, σ¹, σ⁺, σ⁻}^⊗n and exact Hermitian-pair algebra.
//!
//! A [`Term`] stores four disjoint bitmasks: `x` marks σ⁰ = |0⟩⟨0|, `y` marks
//! σ¹ = |1⟩⟨1|, `v` marks σ⁺ = |1⟩⟨0| and `w` marks σ⁻ = |0⟩⟨1|. Qubit `i` is
//! bit `i` of every mask and of every basis index.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_cap, Error, Result};
use crate::MAX_LOWER_QUBITS;

pub type Rational = Ratio<i64>;
/// Exact Gaussian-rational coefficient.
pub type Coeff = Complex<Rational>;

pub fn coeff_int(re: i64) -> Coeff {
    Coeff::new(Rational::from_integer(re), Rational::zero())
}

pub fn coeff_ratio(num: i64, den: i64) -> Coeff {
    Coeff::new(Rational::new(num, den), Rational::zero())
}

pub fn coeff_to_c64(c: &Coeff) -> Complex64 {
    let f = |r: &Rational| *r.numer() as f64 / *r.denom() as f64;
    Complex64::new(f(&c.re), f(&c.im))
}

pub fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SingleQubitOp {
    Ident,
    P0,
    P1,
    Raise,
    Lower,
}

impl SingleQubitOp {
    pub const ALL: [SingleQubitOp; 5] = [
        SingleQubitOp::Ident,
        SingleQubitOp::P0,
        SingleQubitOp::P1,
        SingleQubitOp::Raise,
        SingleQubitOp::Lower,
    ];

    /// (row bit, column bit) of the matrix unit, `None` for the identity.
    fn unit(self) -> Option<(bool, bool)> {
        match self {
            SingleQubitOp::Ident => None,
            SingleQubitOp::P0 => Some((false, false)),
            SingleQubitOp::P1 => Some((true, true)),
            SingleQubitOp::Raise => Some((true, false)),
            SingleQubitOp::Lower => Some((false, true)),
        }
    }

    fn from_unit(row: bool, col: bool) -> Self {
        match (row, col) {
            (false, false) => SingleQubitOp::P0,
            (true, true) => SingleQubitOp::P1,
            (true, false) => SingleQubitOp::Raise,
            (false, true) => SingleQubitOp::Lower,
        }
    }

    pub fn matrix(self) -> [[i64; 2]; 2] {
        match self.unit() {
            None => [[1, 0], [0, 1]],
            Some((r, c)) => {
                let mut m = [[0; 2]; 2];
                m[r as usize][c as usize] = 1;
                m
            }
        }
    }

    pub fn adjoint(self) -> Self {
        match self {
            SingleQubitOp::Raise => SingleQubitOp::Lower,
            SingleQubitOp::Lower => SingleQubitOp::Raise,
            op => op,
        }
    }
}

/// Product `a·b`; `None` when it annihilates.
pub fn single_qubit_product(a: SingleQubitOp, b: SingleQubitOp) -> Option<SingleQubitOp> {
    match (a.unit(), b.unit()) {
        (None, _) => Some(b),
        (_, None) => Some(a),
        (Some((ra, ca)), Some((rb, cb))) => (ca == rb).then(|| SingleQubitOp::from_unit(ra, cb)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub n: usize,
    pub x: u64,
    pub y: u64,
    pub v: u64,
    pub w: u64,
}

impl Term {
    pub fn new(n: usize, x: u64, y: u64, v: u64, w: u64) -> Result<Self> {
        if n > 64 {
            return Err(Error::CapExceeded { what: "bitmask width", n, cap: 64 });
        }
        let all = x | y | v | w;
        let disjoint = x & y == 0 && x & v == 0 && x & w == 0 && y & v == 0 && y & w == 0 && v & w == 0;
        if !disjoint || all & !full_mask(n) != 0 {
            return Err(Error::MaskOverlap { n });
        }
        Ok(Term { n, x, y, v, w })
    }

    pub fn identity(n: usize) -> Self {
        Term { n, x: 0, y: 0, v: 0, w: 0 }
    }

    /// Ladder-only word σ⁺ on `v`, σ⁻ on `w`.
    pub fn ladder(n: usize, v: u64, w: u64) -> Result<Self> {
        Term::new(n, 0, 0, v, w)
    }

    pub fn from_ops(ops: &[SingleQubitOp]) -> Result<Self> {
        let mut t = Term::identity(ops.len());
        for (i, op) in ops.iter().enumerate() {
            t = t.with_op(i, *op);
        }
        Term::new(t.n, t.x, t.y, t.v, t.w)
    }

    pub fn op(&self, i: usize) -> SingleQubitOp {
        let b = 1u64 << i;
        if self.x & b != 0 {
            SingleQubitOp::P0
        } else if self.y & b != 0 {
            SingleQubitOp::P1
        } else if self.v & b != 0 {
            SingleQubitOp::Raise
        } else if self.w & b != 0 {
            SingleQubitOp::Lower
        } else {
            SingleQubitOp::Ident
        }
    }

    pub fn ops(&self) -> Vec<SingleQubitOp> {
        (0..self.n).map(|i| self.op(i)).collect()
    }

    /// Returns a copy with qubit `i` replaced by `op`.
    pub fn with_op(mut self, i: usize, op: SingleQubitOp) -> Self {
        let b = 1u64 << i;
        self.x &= !b;
        self.y &= !b;
        self.v &= !b;
        self.w &= !b;
        match op {
            SingleQubitOp::Ident => {}
            SingleQubitOp::P0 => self.x |= b,
            SingleQubitOp::P1 => self.y |= b,
            SingleQubitOp::Raise => self.v |= b,
            SingleQubitOp::Lower => self.w |= b,
        }
        self
    }

    pub fn support(&self) -> u64 {
        self.x | self.y | self.v | self.w
    }

    pub fn locality(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn is_diagonal(&self) -> bool {
        self.v | self.w == 0
    }

    pub fn is_ladder_only(&self) -> bool {
        self.x | self.y == 0
    }

    fn row1(&self) -> u64 {
        self.y | self.v
    }

    fn col1(&self) -> u64 {
        self.y | self.w
    }

    fn from_units(n: usize, def: u64, row1: u64, col1: u64) -> Self {
        Term {
            n,
            x: def & !row1 & !col1,
            y: def & row1 & col1,
            v: def & row1 & !col1,
            w: def & !row1 & col1,
        }
    }

    /// Sort key used wherever terms are processed in a canonical order.
    pub fn order_key(&self) -> (usize, u64, u64, u64, u64) {
        (self.locality(), self.v, self.w, self.x, self.y)
    }

    pub fn restrict(&self, mask: u64) -> Term {
        Term { n: self.n, x: self.x & mask, y: self.y & mask, v: self.v & mask, w: self.w & mask }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in 0..self.n {
            let s = match self.op(i) {
                SingleQubitOp::Ident => continue,
                SingleQubitOp::P0 => "σ⁰",
                SingleQubitOp::P1 => "σ¹",
                SingleQubitOp::Raise => "σ⁺",
                SingleQubitOp::Lower => "σ⁻",
            };
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{s}_{i}")?;
            first = false;
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::DimensionMismatch { expected: a, got: b })
    } else {
        Ok(())
    }
}

/// Word product `t1·t2`; `Ok(None)` when any qubit annihilates. The overcomplete
/// basis never introduces a phase, so the coefficient is always 1.
pub fn term_multiply(t1: &Term, t2: &Term) -> Result<Option<Term>> {
    check_dims(t1.n, t2.n)?;
    Ok(term_multiply_unchecked(t1, t2))
}

pub(crate) fn term_multiply_unchecked(t1: &Term, t2: &Term) -> Option<Term> {
    let (d1, d2) = (t1.support(), t2.support());
    if d1 & d2 & (t1.col1() ^ t2.row1()) != 0 {
        return None;
    }
    let row1 = t1.row1() | (t2.row1() & !d1);
    let col1 = t2.col1() | (t1.col1() & !d2);
    Some(Term::from_units(t1.n, d1 | d2, row1, col1))
}

pub fn term_adjoint(t: &Term) -> Term {
    Term { v: t.w, w: t.v, ..*t }
}

/// Applies `t` to the basis state `s`; `None` when annihilated.
pub fn term_apply(t: &Term, s: u64) -> Option<u64> {
    let def = t.support();
    if (s ^ t.col1()) & def != 0 {
        return None;
    }
    Some((s & !def) | t.row1())
}

/// Same as [`term_apply`] for an explicit bit vector (`bits[i]` is qubit `i`).
pub fn term_apply_bits(t: &Term, bits: &[bool]) -> Result<Option<Vec<bool>>> {
    check_dims(t.n, bits.len())?;
    let s = bits_to_index(bits);
    Ok(term_apply(t, s).map(|r| index_to_bits(r, t.n)))
}

pub fn bits_to_index(bits: &[bool]) -> u64 {
    bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
}

pub fn index_to_bits(s: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| s >> i & 1 == 1).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScaledTerm {
    pub coeff: Coeff,
    pub term: Term,
}

/// α·T + ᾱ·T† stored in canonical orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HermitianPair {
    pub alpha: Coeff,
    pub term: Term,
}

impl HermitianPair {
    pub fn new(alpha: Coeff, term: Term) -> Self {
        let (v, w) = (term.v, term.w);
        if (w, v) < (v, w) {
            HermitianPair { alpha: alpha.conj(), term: term_adjoint(&term) }
        } else {
            HermitianPair { alpha, term }
        }
    }

    pub fn unit(term: Term) -> Self {
        HermitianPair::new(coeff_int(1), term)
    }

    pub fn n(&self) -> usize {
        self.term.n
    }

    pub fn to_sum(&self) -> TermSum {
        let mut s = TermSum::zero(self.term.n);
        s.add_term(self.alpha, self.term);
        s.add_term(self.alpha.conj(), term_adjoint(&self.term));
        s
    }
}

impl PartialOrd for HermitianPair {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HermitianPair {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let key = |p: &HermitianPair| (p.term.order_key(), p.term.n, p.alpha.re, p.alpha.im);
        key(self).cmp(&key(other))
    }
}

/// Linear combination of distinct words with nonzero exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermSum {
    pub n: usize,
    terms: BTreeMap<Term, Coeff>,
}

impl TermSum {
    pub fn zero(n: usize) -> Self {
        TermSum { n, terms: BTreeMap::new() }
    }

    pub fn from_terms(n: usize, items: impl IntoIterator<Item = ScaledTerm>) -> Result<Self> {
        let mut s = TermSum::zero(n);
        for st in items {
            check_dims(n, st.term.n)?;
            s.add_term(st.coeff, st.term);
        }
        Ok(s)
    }

    pub fn add_term(&mut self, coeff: Coeff, term: Term) {
        debug_assert_eq!(term.n, self.n);
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(term).or_insert_with(Coeff::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&term);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = ScaledTerm> + '_ {
        self.terms.iter().map(|(t, c)| ScaledTerm { coeff: *c, term: *t })
    }

    pub fn coeff(&self, t: &Term) -> Coeff {
        self.terms.get(t).copied().unwrap_or_else(Coeff::zero)
    }

    pub fn add(&self, other: &TermSum) -> Result<TermSum> {
        check_dims(self.n, other.n)?;
        let mut s = self.clone();
        for st in other.iter() {
            s.add_term(st.coeff, st.term);
        }
        Ok(s)
    }

    pub fn scale(&self, c: Coeff) -> TermSum {
        let mut s = TermSum::zero(self.n);
        for st in self.iter() {
            s.add_term(st.coeff * c, st.term);
        }
        s
    }

    pub fn sub(&self, other: &TermSum) -> Result<TermSum> {
        self.add(&other.scale(coeff_int(-1)))
    }

    pub fn mul(&self, other: &TermSum) -> Result<TermSum> {
        check_dims(self.n, other.n)?;
        let mut s = TermSum::zero(self.n);
        for a in self.iter() {
            for b in other.iter() {
                if let Some(t) = term_multiply_unchecked(&a.term, &b.term) {
                    s.add_term(a.coeff * b.coeff, t);
                }
            }
        }
        Ok(s)
    }

    pub fn adjoint(&self) -> TermSum {
        let mut s = TermSum::zero(self.n);
        for st in self.iter() {
            s.add_term(st.coeff.conj(), term_adjoint(&st.term));
        }
        s
    }

    /// Rewrites every word in the linearly independent basis {σ⁰,σ¹,σ⁺,σ⁻}
    /// on the union of all supports (identity elsewhere) and regroups.
    pub fn normalized(&self) -> TermSum {
        let union = self.terms.keys().fold(0, |acc, t| acc | t.support());
        let mut s = TermSum::zero(self.n);
        for st in self.iter() {
            let free = union & !st.term.support();
            let mut sub = 0u64;
            loop {
                let t = Term { x: st.term.x | (free & !sub), y: st.term.y | sub, ..st.term };
                s.add_term(st.coeff, t);
                if sub == free {
                    break;
                }
                sub = (sub.wrapping_sub(free)) & free;
            }
        }
        s
    }

    /// Exact test for the zero operator despite the overcomplete basis.
    pub fn is_zero_operator(&self) -> bool {
        self.is_empty() || self.normalized().is_empty()
    }
}

fn ladder_product(t1: &Term, t2: &Term) -> Option<Term> {
    let (v1, w1, v2, w2) = (t1.v, t1.w, t2.v, t2.w);
    if v1 & v2 != 0 || w1 & w2 != 0 {
        return None;
    }
    Some(Term {
        n: t1.n,
        x: w1 & v2,
        y: v1 & w2,
        v: (v1 & !w2) | (v2 & !w1),
        w: (w1 & !v2) | (w2 & !v1),
    })
}

/// (α₁T₁ + ᾱ₁T₁†)(α₂T₂ + ᾱ₂T₂†) expanded into its four branches.
pub fn pair_product(d1: &HermitianPair, d2: &HermitianPair) -> Result<TermSum> {
    check_dims(d1.n(), d2.n())?;
    let closed = d1.term.is_ladder_only() && d2.term.is_ladder_only();
    let mul = |a: &Term, b: &Term| {
        if closed {
            ladder_product(a, b)
        } else {
            term_multiply_unchecked(a, b)
        }
    };
    let left = [(d1.alpha, d1.term), (d1.alpha.conj(), term_adjoint(&d1.term))];
    let right = [(d2.alpha, d2.term), (d2.alpha.conj(), term_adjoint(&d2.term))];
    let mut s = TermSum::zero(d1.n());
    for (ca, ta) in &left {
        for (cb, tb) in &right {
            if let Some(t) = mul(ta, tb) {
                s.add_term(*ca * *cb, t);
            }
        }
    }
    Ok(s)
}

pub fn pair_anticommutator(d1: &HermitianPair, d2: &HermitianPair) -> Result<TermSum> {
    pair_product(d1, d2)?.add(&pair_product(d2, d1)?)
}

pub fn pair_commutator(d1: &HermitianPair, d2: &HermitianPair) -> Result<TermSum> {
    pair_product(d1, d2)?.sub(&pair_product(d2, d1)?)
}

/// Drops σ⁰/σ¹ factors and merges duplicates.
pub fn reduce_linear(ts: &TermSum) -> TermSum {
    let mut s = TermSum::zero(ts.n);
    for st in ts.iter() {
        s.add_term(st.coeff, Term { x: 0, y: 0, ..st.term });
    }
    s
}

/// Dense lowering for oracle tests.
pub trait ToMatrix {
    fn qubits(&self) -> usize;
    fn lower(&self) -> Result<DMatrix<Complex64>>;
}

fn lower_scaled(n: usize, items: impl Iterator<Item = (Complex64, Term)>) -> Result<DMatrix<Complex64>> {
    check_cap("matrix lowering", n, MAX_LOWER_QUBITS)?;
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (c, t) in items {
        for col in 0..dim as u64 {
            if let Some(row) = term_apply(&t, col) {
                m[(row as usize, col as usize)] += c;
            }
        }
    }
    Ok(m)
}

impl ToMatrix for Term {
    fn qubits(&self) -> usize {
        self.n
    }
    fn lower(&self) -> Result<DMatrix<Complex64>> {
        lower_scaled(self.n, std::iter::once((Complex64::new(1.0, 0.0), *self)))
    }
}

impl ToMatrix for HermitianPair {
    fn qubits(&self) -> usize {
        self.n()
    }
    fn lower(&self) -> Result<DMatrix<Complex64>> {
        self.to_sum().lower()
    }
}

impl ToMatrix for TermSum {
    fn qubits(&self) -> usize {
        self.n
    }
    fn lower(&self) -> Result<DMatrix<Complex64>> {
        lower_scaled(self.n, self.iter().map(|st| (coeff_to_c64(&st.coeff), st.term)))
    }
}

pub fn format_hex(mask: u64) -> String {
    format!("{mask:x}")
}

pub fn parse_hex(s: &str) -> Result<u64> {
    let digits = s.strip_prefix("0x").unwrap_or(s);
    u64::from_str_radix(digits, 16).map_err(|e| Error::InvalidInput(format!("bad hex mask {s:?}: {e}")))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    s.trim().parse::<Rational>().map_err(|e| Error::InvalidInput(format!("bad rational {s:?}: {e}")))
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    n: usize,
    x: String,
    y: String,
    v: String,
    w: String,
}

impl TermRepr {
    fn from_term(t: &Term) -> Self {
        TermRepr { n: t.n, x: format_hex(t.x), y: format_hex(t.y), v: format_hex(t.v), w: format_hex(t.w) }
    }
    fn to_term(&self) -> Result<Term> {
        Term::new(self.n, parse_hex(&self.x)?, parse_hex(&self.y)?, parse_hex(&self.v)?, parse_hex(&self.w)?)
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TermRepr::from_term(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        TermRepr::deserialize(d)?.to_term().map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct ScaledRepr {
    #[serde(flatten)]
    term: TermRepr,
    re: String,
    im: String,
}

impl ScaledRepr {
    fn new(c: &Coeff, t: &Term) -> Self {
        ScaledRepr { term: TermRepr::from_term(t), re: c.re.to_string(), im: c.im.to_string() }
    }
    fn parts(&self) -> Result<(Coeff, Term)> {
        Ok((Coeff::new(parse_rational(&self.re)?, parse_rational(&self.im)?), self.term.to_term()?))
    }
}

impl Serialize for HermitianPair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScaledRepr::new(&self.alpha, &self.term).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianPair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (c, t) = ScaledRepr::deserialize(d)?.parts().map_err(serde::de::Error::custom)?;
        Ok(HermitianPair::new(c, t))
    }
}

#[derive(Serialize, Deserialize)]
struct SumRepr {
    n: usize,
    terms: Vec<ScaledRepr>,
}

impl Serialize for TermSum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms = self.iter().map(|st| ScaledRepr::new(&st.coeff, &st.term)).collect();
        SumRepr { n: self.n, terms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TermSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SumRepr::deserialize(d)?;
        let mut s = TermSum::zero(repr.n);
        for r in &repr.terms {
            let (c, t) = r.parts().map_err(serde::de::Error::custom)?;
            if t.n != repr.n {
                return Err(serde::de::Error::custom("term width differs from sum width"));
            }
            s.add_term(c, t);
        }
        Ok(s)
    }
}
