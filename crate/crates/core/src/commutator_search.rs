//! Commutation tests against embedded constraints and backtracking enumeration
//! of every commuting Hermitian pair up to a locality bound.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{LinearConstraint, PolyConstraint};
use crate::error::{check_cap, Error, Result};
use crate::term_algebra::{term_adjoint, HermitianPair, Term, TermSum, ToMatrix};
use crate::MAX_ORACLE_QUBITS;

/// Linear test: c·(v − w) = 0. Diagonal masks and α play no role.
pub fn commutes_linear(pair: &HermitianPair, l: &LinearConstraint) -> bool {
    ladder_balance(&pair.term, l.coefficients()) == 0
}

fn ladder_balance(t: &Term, c: &[i64]) -> i64 {
    c.iter()
        .enumerate()
        .map(|(i, &k)| k * ((t.v >> i & 1) as i64 - (t.w >> i & 1) as i64))
        .sum()
}

/// [H, Ĉ] built term by term. Each monomial β·T(a,b,0,0) contributes the
/// right product T·M when T's columns agree with M and subtracts M·T when
/// T's rows agree with M.
pub fn constraint_commutator(pair: &HermitianPair, c: &PolyConstraint) -> TermSum {
    let n = pair.n();
    let mut s = TermSum::zero(n);
    for (coef, t) in [(pair.alpha, pair.term), (pair.alpha.conj(), term_adjoint(&pair.term))] {
        for m in c.monomials() {
            let beta = crate::term_algebra::coeff_int(m.beta) * coef;
            let (a, b) = (m.a, m.b);
            if (t.y | t.w) & a == 0 && (t.x | t.v) & b == 0 {
                s.add_term(beta, Term { x: t.x | (a & !t.v), y: t.y | (b & !t.w), ..t });
            }
            if (t.y | t.v) & a == 0 && (t.x | t.w) & b == 0 {
                s.add_term(-beta, Term { x: t.x | (a & !t.w), y: t.y | (b & !t.v), ..t });
            }
        }
    }
    s
}

/// Exact commutation test with a polynomial constraint.
pub fn commutes_poly(pair: &HermitianPair, c: &PolyConstraint) -> bool {
    pair.term.is_diagonal() || constraint_commutator(pair, c).is_zero_operator()
}

/// Dense ground truth: ‖[M_H, M_Ĉ]‖_max ≤ 1e−12 for every constraint.
pub fn commutes_matrix_oracle(pair: &HermitianPair, constraints: &[PolyConstraint], n: usize) -> Result<bool> {
    check_cap("matrix oracle", n, MAX_ORACLE_QUBITS)?;
    if pair.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: pair.n() });
    }
    let h = pair.lower()?;
    for c in constraints {
        let m = c.widen(n)?.lower()?;
        let comm = &h * &m - &m * &h;
        if comm.iter().any(|z| z.norm() > 1e-12) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    #[default]
    Ascending,
    /// Qubits touched by more constraints first.
    Density,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_locality: usize,
    pub require_offdiagonal: bool,
    pub dedup: bool,
    pub prune: bool,
    pub order: ScanOrder,
}

impl SearchConfig {
    pub fn new(max_locality: usize) -> Self {
        SearchConfig { max_locality, require_offdiagonal: true, dedup: true, prune: true, order: ScanOrder::Ascending }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.max_locality == 0 || self.max_locality > n {
            return Err(Error::InvalidInput(format!("locality {} must lie in 1..={n}", self.max_locality)));
        }
        if n > 64 {
            return Err(Error::CapExceeded { what: "bitmask width", n, cap: 64 });
        }
        Ok(())
    }
}

fn scan_order(n: usize, supports: &[u64], order: ScanOrder) -> Vec<usize> {
    let mut q: Vec<usize> = (0..n).collect();
    if order == ScanOrder::Density {
        let touches = |i: usize| supports.iter().filter(|&&s| s >> i & 1 == 1).count();
        q.sort_by_key(|&i| (std::cmp::Reverse(touches(i)), i));
    }
    q
}

fn finish(words: Vec<Term>, dedup: bool) -> Vec<HermitianPair> {
    let pairs = words.into_iter().map(HermitianPair::unit);
    if dedup {
        pairs.collect::<BTreeSet<_>>().into_iter().collect()
    } else {
        let mut v: Vec<_> = pairs.collect();
        v.sort();
        v
    }
}

struct LinearSearch<'a> {
    n: usize,
    order: Vec<usize>,
    coef: Vec<Vec<i64>>,
    /// rem[c][k]: Σ|coef| over scan positions ≥ k.
    rem: Vec<Vec<i64>>,
    cfg: &'a SearchConfig,
}

impl LinearSearch<'_> {
    fn viable(&self, sums: &[i64], k: usize) -> bool {
        !self.cfg.prune || sums.iter().zip(&self.rem).all(|(s, r)| s.abs() <= r[k])
    }

    fn step(&self, sums: &mut [i64], q: usize, sign: i64) {
        for (s, c) in sums.iter_mut().zip(&self.coef) {
            *s += sign * c[q];
        }
    }

    fn recurse(&self, k: usize, d: usize, v: u64, w: u64, sums: &mut Vec<i64>, out: &mut Vec<Term>) {
        if k == self.order.len() {
            if d >= 1 && sums.iter().all(|&s| s == 0) {
                out.push(Term { n: self.n, x: 0, y: 0, v, w });
            }
            return;
        }
        if self.viable(sums, k + 1) {
            self.recurse(k + 1, d, v, w, sums, out);
        }
        if d < self.cfg.max_locality {
            let q = self.order[k];
            for sign in [1, -1] {
                self.step(sums, q, sign);
                if self.viable(sums, k + 1) {
                    let (nv, nw) = if sign > 0 { (v | 1 << q, w) } else { (v, w | 1 << q) };
                    self.recurse(k + 1, d + 1, nv, nw, sums, out);
                }
                self.step(sums, q, -sign);
            }
        }
    }
}

/// Every canonical ladder-only pair of locality ≤ l commuting with all linear constraints.
pub fn search_linear(n: usize, constraints: &[LinearConstraint], cfg: &SearchConfig) -> Result<Vec<HermitianPair>> {
    cfg.validate(n)?;
    if let Some(c) = constraints.iter().find(|c| c.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: c.n() });
    }
    let supports: Vec<u64> = constraints.iter().map(|c| c.support()).collect();
    let order = scan_order(n, &supports, cfg.order);
    let coef: Vec<Vec<i64>> = constraints.iter().map(|c| c.coefficients().to_vec()).collect();
    let rem = coef
        .iter()
        .map(|c| {
            let mut r = vec![0i64; n + 1];
            for k in (0..n).rev() {
                r[k] = r[k + 1] + c[order[k]].abs();
            }
            r
        })
        .collect();
    let s = LinearSearch { n, order, coef, rem, cfg };
    let roots: Vec<(usize, i64)> = (0..n).flat_map(|k| [(k, 1), (k, -1)]).collect();
    let words: Vec<Term> = roots
        .par_iter()
        .flat_map_iter(|&(k, sign)| {
            let mut out = Vec::new();
            let mut sums = vec![0i64; s.coef.len()];
            let q = s.order[k];
            s.step(&mut sums, q, sign);
            if s.viable(&sums, k + 1) {
                let (v, w) = if sign > 0 { (1 << q, 0) } else { (0, 1 << q) };
                s.recurse(k + 1, 1, v, w, &mut sums, &mut out);
            }
            out
        })
        .collect();
    Ok(finish(words, cfg.dedup))
}

struct PolySearch<'a> {
    n: usize,
    order: Vec<usize>,
    constraints: &'a [PolyConstraint],
    /// Constraint indices grouped by the scan position completing them.
    completes_at: Vec<Vec<usize>>,
    cfg: &'a SearchConfig,
}

const DIAGONAL_OPTIONS: [u8; 3] = [0, 1, 2];
const ALL_OPTIONS: [u8; 5] = [0, 1, 2, 3, 4];

fn place(t: Term, q: usize, op: u8) -> Term {
    let b = 1u64 << q;
    match op {
        0 => t,
        1 => Term { x: t.x | b, ..t },
        2 => Term { y: t.y | b, ..t },
        3 => Term { v: t.v | b, ..t },
        _ => Term { w: t.w | b, ..t },
    }
}

impl PolySearch<'_> {
    fn constraint_ok(&self, t: &Term, ci: usize) -> bool {
        let c = &self.constraints[ci];
        commutes_poly(&HermitianPair::unit(t.restrict(c.support())), c)
    }

    fn statuses_ok(&self, t: &Term, k: usize) -> bool {
        !self.cfg.prune || self.completes_at[k].iter().all(|&ci| self.constraint_ok(t, ci))
    }

    /// `first`: scan position of the first ladder, or `None` for diagonal words.
    fn recurse(&self, k: usize, d: usize, t: Term, first: Option<usize>, out: &mut Vec<Term>) {
        if k == self.order.len() {
            let ok = d >= 1 && (self.cfg.prune || (0..self.constraints.len()).all(|ci| self.constraint_ok(&t, ci)));
            if ok {
                out.push(t);
            }
            return;
        }
        let q = self.order[k];
        let options: &[u8] = match first {
            Some(f) if k < f => &DIAGONAL_OPTIONS,
            Some(f) if k == f => &[3, 4],
            Some(_) => &ALL_OPTIONS,
            None => &DIAGONAL_OPTIONS,
        };
        for &op in options {
            let nd = d + (op != 0) as usize;
            if nd > self.cfg.max_locality {
                continue;
            }
            let nt = place(t, q, op);
            if self.statuses_ok(&nt, k) {
                self.recurse(k + 1, nd, nt, first, out);
            }
        }
    }
}

/// Every canonical pair with ≥ 1 ladder (or any diagonal word when
/// `require_offdiagonal` is off) of locality ≤ l commuting with all constraints.
pub fn search_poly(n: usize, constraints: &[PolyConstraint], cfg: &SearchConfig) -> Result<Vec<HermitianPair>> {
    cfg.validate(n)?;
    let widened: Vec<PolyConstraint> = constraints.iter().map(|c| c.widen(n)).collect::<Result<_>>()?;
    let supports: Vec<u64> = widened.iter().map(|c| c.support()).collect();
    let order = scan_order(n, &supports, cfg.order);
    let mut completes_at = vec![Vec::new(); n];
    for (ci, &s) in supports.iter().enumerate() {
        if let Some(k) = (0..n).rev().find(|&k| s >> order[k] & 1 == 1) {
            completes_at[k].push(ci);
        }
    }
    let s = PolySearch { n, order, constraints: &widened, completes_at, cfg: cfg };
    let mut roots: Vec<Option<usize>> = (0..n).map(Some).collect();
    if !cfg.require_offdiagonal {
        roots.push(None);
    }
    let words: Vec<Term> = roots
        .par_iter()
        .flat_map_iter(|&first| {
            let mut out = Vec::new();
            s.recurse(0, 0, Term::identity(s.n), first, &mut out);
            out
        })
        .collect();
    Ok(finish(words, cfg.dedup))
}
