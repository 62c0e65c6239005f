//! Commutation with σ_z-polynomial (Ising) constraints in the {1, σ_z, σ⁺, σ⁻}
//! basis, and a cheap sufficient test for quadratic constraints.
//!
//! Moving σ_z through a ladder operator flips a sign on one side only, so a
//! monomial Z_K commutes with a word exactly when |K ∩ ladders| is even. The
//! odd case contributes 2·Π_{k∈K∩L} u_k times the word with its σ_z mask
//! toggled on K ∖ L, where u = v − w.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::term_algebra::{coeff_int, coeff_ratio, coeff_to_c64, format_hex, full_mask, parse_hex, Coeff, HermitianPair, TermSum};
use crate::MAX_LOWER_QUBITS;

/// Ĉ = Σ_i h_i Z_i + Σ_{i<j} J_ij Z_i Z_j.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IsingRepr", into = "IsingRepr")]
pub struct IsingConstraint {
    h: Vec<i64>,
    j: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct IsingRepr {
    h: Vec<i64>,
    #[serde(rename = "J")]
    j: Vec<Vec<i64>>,
}

impl TryFrom<IsingRepr> for IsingConstraint {
    type Error = Error;
    fn try_from(r: IsingRepr) -> Result<Self> {
        IsingConstraint::new(r.h, r.j)
    }
}

impl From<IsingConstraint> for IsingRepr {
    fn from(c: IsingConstraint) -> Self {
        IsingRepr { h: c.h, j: c.j }
    }
}

impl IsingConstraint {
    pub fn new(h: Vec<i64>, j: Vec<Vec<i64>>) -> Result<Self> {
        let n = h.len();
        if j.len() != n || j.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidConstraint("J must be n×n".into()));
        }
        for a in 0..n {
            if j[a][a] != 0 {
                return Err(Error::InvalidConstraint("J must have a zero diagonal".into()));
            }
            for b in 0..n {
                if j[a][b] != j[b][a] {
                    return Err(Error::InvalidConstraint("J must be symmetric".into()));
                }
            }
        }
        Ok(IsingConstraint { h, j })
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[i64] {
        &self.h
    }

    pub fn j(&self) -> &[Vec<i64>] {
        &self.j
    }

    /// The constraint as (coefficient, qubit set) monomials.
    pub fn ksets(&self) -> Vec<(i64, Vec<usize>)> {
        let n = self.n();
        let mut out: Vec<(i64, Vec<usize>)> =
            (0..n).filter(|&i| self.h[i] != 0).map(|i| (self.h[i], vec![i])).collect();
        for a in 0..n {
            for b in a + 1..n {
                if self.j[a][b] != 0 {
                    out.push((self.j[a][b], vec![a, b]));
                }
            }
        }
        out
    }

    pub fn lower(&self) -> Result<DMatrix<Complex64>> {
        let n = self.n();
        let mut s = ZTermSum::zero(n);
        for (c, k) in self.ksets() {
            let y = k.iter().fold(0u64, |m, &q| m | 1 << q);
            s.add_term(coeff_int(c), ZTerm { n, y, v: 0, w: 0 });
        }
        s.lower()
    }
}

/// Word over {1, σ_z, σ⁺, σ⁻}: `y` marks σ_z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "ZTermRepr", into = "ZTermRepr")]
pub struct ZTerm {
    pub n: usize,
    pub y: u64,
    pub v: u64,
    pub w: u64,
}

#[derive(Serialize, Deserialize)]
struct ZTermRepr {
    n: usize,
    y: String,
    v: String,
    w: String,
}

impl TryFrom<ZTermRepr> for ZTerm {
    type Error = Error;
    fn try_from(r: ZTermRepr) -> Result<Self> {
        ZTerm::new(r.n, parse_hex(&r.y)?, parse_hex(&r.v)?, parse_hex(&r.w)?)
    }
}

impl From<ZTerm> for ZTermRepr {
    fn from(t: ZTerm) -> Self {
        ZTermRepr { n: t.n, y: format_hex(t.y), v: format_hex(t.v), w: format_hex(t.w) }
    }
}

impl ZTerm {
    pub fn new(n: usize, y: u64, v: u64, w: u64) -> Result<Self> {
        if y & v != 0 || y & w != 0 || v & w != 0 || (y | v | w) & !full_mask(n) != 0 || n > 64 {
            return Err(Error::MaskOverlap { n });
        }
        Ok(ZTerm { n, y, v, w })
    }

    pub fn adjoint(&self) -> ZTerm {
        ZTerm { v: self.w, w: self.v, ..*self }
    }

    /// u = v − w as an integer vector.
    pub fn u(&self) -> Vec<i64> {
        (0..self.n).map(|i| (self.v >> i & 1) as i64 - (self.w >> i & 1) as i64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZPair {
    pub alpha: Coeff,
    pub term: ZTerm,
}

impl ZPair {
    pub fn unit(term: ZTerm) -> Self {
        ZPair { alpha: coeff_int(1), term }
    }

    pub fn to_sum(&self) -> ZTermSum {
        let mut s = ZTermSum::zero(self.term.n);
        s.add_term(self.alpha, self.term);
        s.add_term(self.alpha.conj(), self.term.adjoint());
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZTermSum {
    pub n: usize,
    terms: BTreeMap<ZTerm, Coeff>,
}

impl ZTermSum {
    pub fn zero(n: usize) -> Self {
        ZTermSum { n, terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, c: Coeff, t: ZTerm) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(t).or_insert_with(Coeff::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&t);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ZTerm, &Coeff)> {
        self.terms.iter()
    }

    /// Rewrites σ⁰ = (1 + σ_z)/2 and σ¹ = (1 − σ_z)/2.
    pub fn from_term_sum(ts: &TermSum) -> ZTermSum {
        let mut s = ZTermSum::zero(ts.n);
        for st in ts.iter() {
            let t = st.term;
            let diag = t.x | t.y;
            let scale = coeff_ratio(1, 1i64 << diag.count_ones());
            let mut sub = 0u64;
            loop {
                let sign = if (sub & t.y).count_ones() % 2 == 1 { -1 } else { 1 };
                s.add_term(st.coeff * scale * coeff_int(sign), ZTerm { n: ts.n, y: sub, v: t.v, w: t.w });
                if sub == diag {
                    break;
                }
                sub = sub.wrapping_sub(diag) & diag;
            }
        }
        s
    }

    /// The z-basis words of a Hermitian pair, grouped into pairs by orientation.
    pub fn pairs(&self) -> Vec<ZPair> {
        self.terms
            .iter()
            .filter(|(t, _)| (t.w, t.v) >= (t.v, t.w))
            .map(|(t, c)| ZPair { alpha: *c, term: *t })
            .collect()
    }

    pub fn lower(&self) -> Result<DMatrix<Complex64>> {
        check_cap("matrix lowering", self.n, MAX_LOWER_QUBITS)?;
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for (t, c) in &self.terms {
            let c = coeff_to_c64(c);
            let lad = t.v | t.w;
            for col in 0..dim as u64 {
                if (col ^ t.w) & lad != 0 {
                    continue;
                }
                let row = (col & !lad) | t.v;
                let sign = if (col & t.y).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                m[(row as usize, col as usize)] += c * sign;
            }
        }
        Ok(m)
    }
}

/// Symbolic [H, Ĉ] for Ĉ = Σ_K J_K Π_{k∈K} σ_z^k.
pub fn commutator_zbasis(pair: &ZPair, ksets: &[(i64, Vec<usize>)]) -> Result<ZTermSum> {
    let n = pair.term.n;
    let mut out = ZTermSum::zero(n);
    for (coef, t) in [(pair.alpha, pair.term), (pair.alpha.conj(), pair.term.adjoint())] {
        let lad = t.v | t.w;
        for (jk, ks) in ksets {
            let mut kmask = 0u64;
            for &k in ks {
                if k >= n {
                    return Err(Error::IndexOutOfRange { index: k, len: n });
                }
                kmask |= 1 << k;
            }
            let hit = kmask & lad;
            if hit.count_ones() % 2 == 0 {
                continue;
            }
            let sign = if (hit & t.w).count_ones() % 2 == 1 { -2 } else { 2 };
            out.add_term(coef * coeff_int(jk * sign), ZTerm { y: t.y ^ (kmask & !lad), ..t });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadCheck {
    /// h·u = 0
    pub linear: bool,
    /// uᵀJu = 0
    pub quadratic: bool,
    /// (Ju)_l = 0 for every l outside the ladder support
    pub cross: bool,
}

impl QuadCheck {
    pub fn passes(&self) -> bool {
        self.linear && self.quadratic && self.cross
    }

    pub fn failing(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        if !self.linear {
            f.push("h·u ≠ 0");
        }
        if !self.quadratic {
            f.push("uᵀJu ≠ 0");
        }
        if !self.cross {
            f.push("(Ju)_l ≠ 0 off the ladder support");
        }
        f
    }
}

/// A passing result guarantees [H, Ĉ] = 0; a failing one is inconclusive.
pub fn sufficient_quadratic(pair: &ZPair, c: &IsingConstraint) -> Result<QuadCheck> {
    let n = c.n();
    if pair.term.n != n {
        return Err(Error::DimensionMismatch { expected: n, got: pair.term.n });
    }
    let u = pair.term.u();
    let lad = pair.term.v | pair.term.w;
    let ju: Vec<i64> = (0..n).map(|a| (0..n).map(|b| c.j[a][b] * u[b]).sum()).collect();
    Ok(QuadCheck {
        linear: c.h.iter().zip(&u).map(|(h, u)| h * u).sum::<i64>() == 0,
        quadratic: u.iter().zip(&ju).map(|(u, x)| u * x).sum::<i64>() == 0,
        cross: (0..n).filter(|&l| lad >> l & 1 == 0).all(|l| ju[l] == 0),
    })
}

/// Checks every z-basis component of a pair written in the σ⁰/σ¹ basis.
pub fn check_pair(p: &HermitianPair, c: &IsingConstraint) -> Result<Vec<(ZPair, QuadCheck)>> {
    ZTermSum::from_term_sum(&p.to_sum())
        .pairs()
        .into_iter()
        .map(|zp| sufficient_quadratic(&zp, c).map(|q| (zp, q)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term_algebra::{Rational, Term, ToMatrix};
    use proptest::prelude::*;

    fn max_dev(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn hopping_passes_number_constraint() {
        let c = IsingConstraint::new(vec![1, 1, 1], vec![vec![0; 3]; 3]).unwrap();
        let p = ZPair::unit(ZTerm::new(3, 0, 0b001, 0b010).unwrap());
        assert!(sufficient_quadratic(&p, &c).unwrap().passes());
        assert!(commutator_zbasis(&p, &c.ksets()).unwrap().is_empty());
    }

    #[test]
    fn single_raise_against_z() {
        let p = ZPair::unit(ZTerm::new(1, 0, 1, 0).unwrap());
        let comm = commutator_zbasis(&p, &[(1, vec![0])]).unwrap();
        assert_eq!(comm.iter().count(), 2);
        let want = p.to_sum().lower().unwrap();
        let z = IsingConstraint::new(vec![1], vec![vec![0]]).unwrap().lower().unwrap();
        assert!(max_dev(&comm.lower().unwrap(), &(&want * &z - &z * &want)) == 0.0);
        let diag = ZPair::unit(ZTerm::new(2, 0b11, 0, 0).unwrap());
        assert!(commutator_zbasis(&diag, &[(3, vec![0, 1])]).unwrap().is_empty());
        assert!(commutator_zbasis(&p, &[(1, vec![4])]).is_err());
    }

    #[test]
    fn uju_alone_is_not_enough() {
        // σ⁺ on qubit 0 with a Z0·Z1 coupling: h·u = uᵀJu = 0 yet no commutation
        let c = IsingConstraint::new(vec![0, 0], vec![vec![0, 1], vec![1, 0]]).unwrap();
        let p = ZPair::unit(ZTerm::new(2, 0, 1, 0).unwrap());
        let q = sufficient_quadratic(&p, &c).unwrap();
        assert!(q.linear && q.quadratic && !q.cross);
        assert!(!commutator_zbasis(&p, &c.ksets()).unwrap().is_empty());
    }

    #[test]
    fn random_u_with_nonzero_quadratic_form_fails() {
        let c = IsingConstraint::new(vec![0, 0, 0], vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 0]]).unwrap();
        let p = ZPair::unit(ZTerm::new(3, 0, 0b011, 0).unwrap());
        let q = sufficient_quadratic(&p, &c).unwrap();
        assert!(!q.quadratic && !q.passes());
    }

    #[test]
    fn term_sum_conversion_preserves_matrix() {
        let t = Term::new(3, 0b001, 0b100, 0b010, 0).unwrap();
        let p = HermitianPair::new(Coeff::new(Rational::new(1, 3), Rational::new(2, 1)), t);
        let z = ZTermSum::from_term_sum(&p.to_sum());
        assert!(max_dev(&z.lower().unwrap(), &p.lower().unwrap()) < 1e-12);
        assert_eq!(z.pairs().len(), 4);
    }

    #[test]
    fn json_shape() {
        let c: IsingConstraint = serde_json::from_str(r#"{"h":[1,-1],"J":[[0,2],[2,0]]}"#).unwrap();
        assert_eq!(c.ksets(), vec![(1, vec![0]), (-1, vec![1]), (2, vec![0, 1])]);
        assert!(serde_json::from_str::<IsingConstraint>(r#"{"h":[1,-1],"J":[[0,2],[1,0]]}"#).is_err());
        let t = ZTerm::new(5, 0b10000, 0b00011, 0b00100).unwrap();
        let js = serde_json::to_string(&t).unwrap();
        assert_eq!(js, r#"{"n":5,"y":"10","v":"3","w":"4"}"#);
        assert_eq!(serde_json::from_str::<ZTerm>(&js).unwrap(), t);
    }

    fn arb_ising(n: usize) -> impl Strategy<Value = IsingConstraint> {
        (proptest::collection::vec(-2i64..=2, n), proptest::collection::vec(-2i64..=2, n * n)).prop_map(move |(h, raw)| {
            let mut j = vec![vec![0; n]; n];
            for a in 0..n {
                for b in a + 1..n {
                    j[a][b] = raw[a * n + b];
                    j[b][a] = raw[a * n + b];
                }
            }
            IsingConstraint::new(h, j).unwrap()
        })
    }

    fn arb_zpair(n: usize) -> impl Strategy<Value = ZPair> {
        (proptest::collection::vec(0u8..4, n), -2i64..=2, -2i64..=2).prop_map(move |(ops, re, im)| {
            let (mut y, mut v, mut w) = (0, 0, 0);
            for (i, o) in ops.iter().enumerate() {
                match o {
                    1 => y |= 1 << i,
                    2 => v |= 1 << i,
                    3 => w |= 1 << i,
                    _ => {}
                }
            }
            ZPair { alpha: Coeff::new(Rational::from_integer(re), Rational::from_integer(im)), term: ZTerm::new(n, y, v, w).unwrap() }
        })
    }

    proptest! {
        #[test]
        fn zbasis_commutator_matches_matrices((p, c) in (1usize..=6).prop_flat_map(|n| (arb_zpair(n), arb_ising(n)))) {
            let h = p.to_sum().lower().unwrap();
            let m = c.lower().unwrap();
            let comm = commutator_zbasis(&p, &c.ksets()).unwrap().lower().unwrap();
            prop_assert_eq!(comm, &h * &m - &m * &h);
        }

        #[test]
        fn sufficiency_is_sound((p, c) in (1usize..=6).prop_flat_map(|n| (arb_zpair(n), arb_ising(n)))) {
            if sufficient_quadratic(&p, &c).unwrap().passes() {
                let h = p.to_sum().lower().unwrap();
                let m = c.lower().unwrap();
                prop_assert!((&h * &m - &m * &h).iter().all(|z| z.norm() == 0.0));
            }
        }
    }
}
