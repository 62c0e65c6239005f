//! Classical equality constraints and their diagonal operator embeddings.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::term_algebra::{coeff_int, format_hex, full_mask, parse_hex, Term, TermSum, ToMatrix};
use crate::MAX_ENUM_QUBITS;

/// c·x = rhs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "LinearRepr", into = "LinearRepr")]
pub struct LinearConstraint {
    c: Vec<i64>,
    rhs: i64,
}

#[derive(Serialize, Deserialize)]
struct LinearRepr {
    c: Vec<i64>,
    rhs: i64,
}

impl TryFrom<LinearRepr> for LinearConstraint {
    type Error = Error;
    fn try_from(r: LinearRepr) -> Result<Self> {
        LinearConstraint::new(r.c, r.rhs)
    }
}

impl From<LinearConstraint> for LinearRepr {
    fn from(l: LinearConstraint) -> Self {
        LinearRepr { c: l.c, rhs: l.rhs }
    }
}

impl LinearConstraint {
    pub fn new(c: Vec<i64>, rhs: i64) -> Result<Self> {
        if c.iter().all(|&k| k == 0) {
            return Err(Error::InvalidConstraint("all coefficients are zero".into()));
        }
        if c.len() > 64 {
            return Err(Error::CapExceeded { what: "bitmask width", n: c.len(), cap: 64 });
        }
        Ok(LinearConstraint { c, rhs })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.c
    }

    pub fn rhs(&self) -> i64 {
        self.rhs
    }

    pub fn support(&self) -> u64 {
        self.c.iter().enumerate().filter(|(_, &k)| k != 0).fold(0, |m, (i, _)| m | 1 << i)
    }

    pub fn evaluate_index(&self, x: u64) -> i64 {
        self.c.iter().enumerate().filter(|(i, _)| x >> i & 1 == 1).map(|(_, &k)| k).sum()
    }

    pub fn evaluate(&self, bits: &[bool]) -> Result<i64> {
        check_len(self.n(), bits.len())?;
        Ok(self.c.iter().zip(bits).filter(|(_, &b)| b).map(|(&k, _)| k).sum())
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

/// β · Π_{k∈a}(1−x_k) · Π_{k∈b} x_k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub a: u64,
    pub b: u64,
    pub beta: i64,
}

impl Monomial {
    pub fn value(&self, x: u64) -> bool {
        x & self.a == 0 && x & self.b == self.b
    }
}

/// Σ_J β_J T(a_J, b_J, 0, 0) = rhs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyConstraint {
    n: usize,
    monomials: Vec<Monomial>,
    rhs: i64,
}

impl PolyConstraint {
    pub fn new(n: usize, monomials: Vec<Monomial>, rhs: i64) -> Result<Self> {
        if n > 64 {
            return Err(Error::CapExceeded { what: "bitmask width", n, cap: 64 });
        }
        for (i, m) in monomials.iter().enumerate() {
            if m.a & m.b != 0 {
                return Err(Error::InvalidConstraint(format!("monomial {i}: a and b overlap")));
            }
            if (m.a | m.b) & !full_mask(n) != 0 {
                return Err(Error::InvalidConstraint(format!("monomial {i}: mask exceeds {n} qubits")));
            }
            if m.beta == 0 {
                return Err(Error::InvalidConstraint(format!("monomial {i}: zero coefficient")));
            }
            if monomials[..i].iter().any(|o| o.a == m.a && o.b == m.b) {
                return Err(Error::InvalidConstraint(format!("monomial {i}: duplicate (a, b)")));
            }
        }
        Ok(PolyConstraint { n, monomials, rhs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn rhs(&self) -> i64 {
        self.rhs
    }

    pub fn support(&self) -> u64 {
        self.monomials.iter().fold(0, |s, m| s | m.a | m.b)
    }

    pub fn evaluate_index(&self, x: u64) -> i64 {
        self.monomials.iter().filter(|m| m.value(x)).map(|m| m.beta).sum()
    }

    pub fn evaluate(&self, bits: &[bool]) -> Result<i64> {
        check_len(self.n, bits.len())?;
        Ok(self.evaluate_index(crate::term_algebra::bits_to_index(bits)))
    }

    /// Embedded operator Ĉ as a sum of diagonal words.
    pub fn operator(&self) -> TermSum {
        let mut s = TermSum::zero(self.n);
        for m in &self.monomials {
            s.add_term(coeff_int(m.beta), Term { n: self.n, x: m.a, y: m.b, v: 0, w: 0 });
        }
        s
    }

    /// Same constraint viewed on `n` qubits (`n` must cover the support).
    pub fn widen(&self, n: usize) -> Result<Self> {
        PolyConstraint::new(n, self.monomials.clone(), self.rhs)
    }
}

impl ToMatrix for PolyConstraint {
    fn qubits(&self) -> usize {
        self.n
    }
    fn lower(&self) -> Result<DMatrix<Complex64>> {
        self.operator().lower()
    }
}

pub fn from_linear(l: &LinearConstraint) -> PolyConstraint {
    let monomials = l
        .c
        .iter()
        .enumerate()
        .filter(|(_, &k)| k != 0)
        .map(|(i, &k)| Monomial { a: 0, b: 1 << i, beta: k })
        .collect();
    PolyConstraint { n: l.n(), monomials, rhs: l.rhs }
}

#[derive(Serialize, Deserialize)]
struct MonomialRepr {
    a: String,
    b: String,
    beta: i64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    monomials: Vec<MonomialRepr>,
    rhs: i64,
}

impl Serialize for PolyConstraint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let monomials = self
            .monomials
            .iter()
            .map(|m| MonomialRepr { a: format_hex(m.a), b: format_hex(m.b), beta: m.beta })
            .collect();
        PolyRepr { n: Some(self.n), monomials, rhs: self.rhs }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolyConstraint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PolyRepr::deserialize(d)?;
        let parse = || -> Result<PolyConstraint> {
            let mut ms = Vec::with_capacity(r.monomials.len());
            for m in &r.monomials {
                ms.push(Monomial { a: parse_hex(&m.a)?, b: parse_hex(&m.b)?, beta: m.beta });
            }
            // without an explicit width the constraint spans up to its highest qubit
            let support = ms.iter().fold(0u64, |s, m| s | m.a | m.b);
            let n = r.n.unwrap_or(64 - support.leading_zeros() as usize);
            PolyConstraint::new(n, ms, r.rhs)
        };
        parse().map_err(serde::de::Error::custom)
    }
}

/// Either constraint shape, as accepted in JSON files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Constraint {
    Linear(LinearConstraint),
    Poly(PolyConstraint),
}

impl Constraint {
    pub fn n(&self) -> usize {
        match self {
            Constraint::Linear(l) => l.n(),
            Constraint::Poly(p) => p.n(),
        }
    }

    pub fn rhs(&self) -> i64 {
        match self {
            Constraint::Linear(l) => l.rhs,
            Constraint::Poly(p) => p.rhs,
        }
    }

    pub fn evaluate_index(&self, x: u64) -> i64 {
        match self {
            Constraint::Linear(l) => l.evaluate_index(x),
            Constraint::Poly(p) => p.evaluate_index(x),
        }
    }

    pub fn evaluate(&self, bits: &[bool]) -> Result<i64> {
        match self {
            Constraint::Linear(l) => l.evaluate(bits),
            Constraint::Poly(p) => p.evaluate(bits),
        }
    }

    pub fn satisfied(&self, x: u64) -> bool {
        self.evaluate_index(x) == self.rhs()
    }

    pub fn to_poly(&self) -> PolyConstraint {
        match self {
            Constraint::Linear(l) => from_linear(l),
            Constraint::Poly(p) => p.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibleSet {
    pub n: usize,
    pub members: Vec<u64>,
}

impl FeasibleSet {
    pub fn contains(&self, x: u64) -> bool {
        self.members.binary_search(&x).is_ok()
    }
}

pub fn feasible_set(constraints: &[Constraint], n: usize) -> Result<FeasibleSet> {
    check_cap("feasible-set enumeration", n, MAX_ENUM_QUBITS)?;
    if let Some(c) = constraints.iter().find(|c| c.n() > n) {
        return Err(Error::DimensionMismatch { expected: n, got: c.n() });
    }
    let members = (0..1u64 << n)
        .into_par_iter()
        .filter(|&x| constraints.iter().all(|c| c.satisfied(x)))
        .collect();
    Ok(FeasibleSet { n, members })
}
