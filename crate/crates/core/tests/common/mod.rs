//! Dense reference computations built from 2×2 matrices, independent of the
//! library's bitmask algebra.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use symmix::constraints::{Monomial, PolyConstraint};
use symmix::mixer_compile::Diffusor;
use symmix::qaoa_engine::{Prepared, Schedule};
use symmix::sat1in3::{AnsatzSpec, Clause, InitialState};
use symmix::term_algebra::{coeff_to_c64, HermitianPair, SingleQubitOp, Term};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// 2×2 integer matrix of a single-qubit operator, written out by hand.
pub fn op_matrix(op: SingleQubitOp) -> [[i64; 2]; 2] {
    match op {
        SingleQubitOp::Ident => [[1, 0], [0, 1]],
        SingleQubitOp::P0 => [[1, 0], [0, 0]],
        SingleQubitOp::P1 => [[0, 0], [0, 1]],
        SingleQubitOp::Raise => [[0, 0], [1, 0]],
        SingleQubitOp::Lower => [[0, 1], [0, 0]],
    }
}

pub fn mat2_mul(a: [[i64; 2]; 2], b: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    let mut out = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Qubit 0 is the least significant bit of the basis index.
pub fn term_matrix(t: &Term) -> CMat {
    let dim = 1usize << t.n;
    let ops = t.ops();
    DMatrix::from_fn(dim, dim, |r, col| {
        let mut e = 1i64;
        for (i, op) in ops.iter().enumerate() {
            e *= op_matrix(*op)[r >> i & 1][col >> i & 1];
        }
        c(e as f64)
    })
}

pub fn pair_matrix(p: &HermitianPair) -> CMat {
    let m = term_matrix(&p.term) * coeff_to_c64(&p.alpha);
    m.adjoint() + m
}

pub fn monomial_value(m: &Monomial, x: usize) -> bool {
    (0..64).all(|i| (m.a >> i & 1 == 0 || x >> i & 1 == 0) && (m.b >> i & 1 == 0 || x >> i & 1 == 1))
}

pub fn constraint_diag(c: &PolyConstraint, n: usize) -> Vec<f64> {
    (0..1usize << n).map(|x| c.monomials().iter().filter(|m| monomial_value(m, x)).map(|m| m.beta as f64).sum()).collect()
}

/// max |[H, diag(c)]| entry.
pub fn commutator_with_diag(h: &CMat, d: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..h.nrows() {
        for col in 0..h.ncols() {
            worst = worst.max((h[(r, col)] * (d[col] - d[r])).norm());
        }
    }
    worst
}

pub fn random_op(rng: &mut impl Rng) -> SingleQubitOp {
    SingleQubitOp::ALL[rng.gen_range(0..5)]
}

pub fn random_poly(rng: &mut impl Rng, n: usize) -> PolyConstraint {
    loop {
        let k = rng.gen_range(1..=3);
        let mut monos: Vec<Monomial> = Vec::new();
        for _ in 0..k {
            let (mut a, mut b) = (0u64, 0u64);
            for i in 0..n {
                match rng.gen_range(0..4) {
                    0 => a |= 1 << i,
                    1 => b |= 1 << i,
                    _ => {}
                }
            }
            let beta = [-2, -1, 1, 2][rng.gen_range(0..4)];
            if (a | b) != 0 && !monos.iter().any(|m| m.a == a && m.b == b) {
                monos.push(Monomial { a, b, beta });
            }
        }
        if let Ok(p) = PolyConstraint::new(n, monos, 0) {
            if !p.monomials().is_empty() {
                return p;
            }
        }
    }
}

/// Basis index reached from `x` by a product of single-qubit matrix units,
/// if any.
pub fn term_image(t: &Term, x: usize) -> Option<usize> {
    let mut y = 0usize;
    for (i, op) in t.ops().iter().enumerate() {
        let m = op_matrix(*op);
        let col = x >> i & 1;
        let row = (0..2).find(|&r| m[r][col] != 0)?;
        y |= row << i;
    }
    Some(y)
}

pub fn projector(d: &Diffusor, n: usize) -> CMat {
    let dim = 1usize << n;
    let mut phi_blocks: Vec<Vec<(usize, Complex64)>> = Vec::new();
    match d {
        Diffusor::Pattern(s) => {
            let support = (s.diag_x | s.diag_y | s.v | s.w) as usize;
            for rest in (0..dim).filter(|r| r & support == 0) {
                let base = rest | s.diag_y as usize;
                let s0 = base | s.w as usize;
                let s1 = base | s.v as usize;
                let h = std::f64::consts::FRAC_1_SQRT_2;
                phi_blocks.push(vec![(s0, c(h)), (s1, Complex64::from_polar(h, s.theta))]);
            }
        }
        Diffusor::Superposition(s) => {
            let support: usize = s.qubits.iter().map(|q| 1usize << q).sum();
            let amp = c(1.0 / (s.states.len() as f64).sqrt());
            for rest in (0..dim).filter(|r| r & support == 0) {
                let block = s
                    .states
                    .iter()
                    .map(|&st| {
                        let off: usize = s.qubits.iter().enumerate().filter(|(k, _)| st >> k & 1 == 1).map(|(_, q)| 1usize << q).sum();
                        (rest | off, amp)
                    })
                    .collect();
                phi_blocks.push(block);
            }
        }
    }
    let mut p = CMat::zeros(dim, dim);
    for blk in phi_blocks {
        for &(r, a) in &blk {
            for &(col, b) in &blk {
                p[(r, col)] += a * b.conj();
            }
        }
    }
    p
}

pub fn diffusor_unitary(d: &Diffusor, n: usize, angle: f64) -> CMat {
    let dim = 1usize << n;
    CMat::identity(dim, dim) + projector(d, n) * (Complex64::from_polar(1.0, -angle) - 1.0)
}

pub fn violations(clauses: &[Clause], x: usize) -> f64 {
    clauses
        .iter()
        .filter(|cl| cl.lits.iter().filter(|l| (x >> l.var & 1 == 1) == (l.pol > 0)).count() != 1)
        .count() as f64
}

pub fn initial_vector(a: &AnsatzSpec) -> DVector<Complex64> {
    let dim = 1usize << a.n;
    match &a.initial_state {
        InitialState::Uniform => DVector::from_element(dim, c(1.0 / (dim as f64).sqrt())),
        InitialState::Product { factors } => DVector::from_fn(dim, |x, _| {
            let mut amp = c(1.0);
            for f in factors {
                let local: u64 = f.qubits.iter().enumerate().map(|(k, &q)| ((x >> q & 1) as u64) << k).sum();
                amp *= if f.states.contains(&local) { c(1.0 / (f.states.len() as f64).sqrt()) } else { c(0.0) };
            }
            amp
        }),
    }
}

/// One factor of the circuit: its unitary, the parameter it depends on and
/// dU/dθ.
struct Factor {
    u: CMat,
    du: CMat,
    param: usize,
}

/// Success probability and its exact gradient with respect to α ‖ β ‖ γ,
/// from the chain rule over dense circuit factors.
pub fn analytic_gradient(prep: &Prepared, clauses: &[Clause], s: &Schedule) -> (f64, Vec<f64>) {
    let a = &prep.ansatz;
    let n = a.n;
    let dim = 1usize << n;
    let p = s.p;
    let i = Complex64::new(0.0, 1.0);
    let diag: Vec<f64> = (0..dim).map(|x| violations(clauses, x)).collect();
    let mut factors = Vec::new();
    for l in 0..p {
        let ph = DVector::from_fn(dim, |x, _| Complex64::from_polar(1.0, s.alpha[l] * diag[x]));
        let u = CMat::from_diagonal(&ph);
        let du = CMat::from_diagonal(&DVector::from_fn(dim, |x, _| i * diag[x] * ph[x]));
        factors.push(Factor { u, du, param: l });
        let programs = std::iter::once(&a.mixer).chain(a.symcov.as_ref());
        for d in programs.flat_map(|prog| prog.diffusors()) {
            let (angle, param) = match d.tag() {
                symmix::mixer_compile::AngleTag::Beta => (s.beta[l], p + l),
                symmix::mixer_compile::AngleTag::Gamma => (s.gamma.as_ref().unwrap()[l], 2 * p + l),
            };
            let proj = projector(d, n);
            let u = CMat::identity(dim, dim) + &proj * (Complex64::from_polar(1.0, -angle) - 1.0);
            let du = proj * (-i * Complex64::from_polar(1.0, -angle));
            factors.push(Factor { u, du, param });
        }
    }
    let psi0 = initial_vector(a);
    let mut prefix = vec![psi0];
    for f in &factors {
        let next = &f.u * prefix.last().unwrap();
        prefix.push(next);
    }
    let fin = prefix.last().unwrap().clone();
    let sols: Vec<usize> = prep.solutions.iter().map(|&x| x as usize).collect();
    let value: f64 = sols.iter().map(|&x| fin[x].norm_sqr()).sum();
    let nparams = if s.gamma.is_some() { 3 * p } else { 2 * p };
    let mut grad = vec![0.0; nparams];
    for (k, f) in factors.iter().enumerate() {
        let mut d = &f.du * &prefix[k];
        for g in &factors[k + 1..] {
            d = &g.u * d;
        }
        grad[f.param] += sols.iter().map(|&x| 2.0 * (fin[x].conj() * d[x]).re).sum::<f64>();
    }
    (value, grad)
}
