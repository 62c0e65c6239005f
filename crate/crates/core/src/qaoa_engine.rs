//! Statevector QAOA: clause-violation phases, in-place diffusors and
//! success-probability readout.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::mixer_compile::{AngleTag, Diffusor, DiffusorSpec, MixerProgram, StateDiffusor};
use crate::sat1in3::{brute_solutions, AnsatzSpec, Clause, InitialState, SatInstance};
use crate::term_algebra::full_mask;
use crate::MAX_ENUM_QUBITS;

const PAR_MIN_QUBITS: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero_state(n: usize) -> Result<Self> {
        check_cap("statevector", n, MAX_ENUM_QUBITS)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        check_cap("statevector", n, MAX_ENUM_QUBITS)?;
        let a = Complex64::new((1u64 << n) as f64, 0.0).sqrt().inv();
        Ok(StateVector { n, amps: vec![a; 1 << n] })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_cap("statevector", n, MAX_ENUM_QUBITS)?;
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, got: amps.len() });
        }
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, x: u64) -> Complex64 {
        self.amps[x as usize]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probability(&self, x: u64) -> f64 {
        self.amps[x as usize].norm_sqr()
    }
}

pub fn prepare_initial(ansatz: &AnsatzSpec) -> Result<StateVector> {
    let n = ansatz.n;
    match &ansatz.initial_state {
        InitialState::Uniform => StateVector::uniform(n),
        InitialState::Product { factors } => {
            let mut psi = StateVector::zero_state(n)?;
            let mut covered = 0u64;
            for f in factors {
                let sd = StateDiffusor::new(f.qubits.clone(), f.states.clone(), AngleTag::Beta)?;
                if sd.support() & covered != 0 || sd.support() & !full_mask(n) != 0 {
                    return Err(Error::InvalidInput("initial-state factors must be disjoint and fit n".into()));
                }
                covered |= sd.support();
                let offs = sd.offsets();
                let scale = (offs.len() as f64).sqrt().recip();
                let mut next = vec![Complex64::new(0.0, 0.0); 1 << n];
                for (x, a) in psi.amps.iter().enumerate() {
                    if a.norm_sqr() == 0.0 {
                        continue;
                    }
                    for &o in &offs {
                        next[x | o as usize] += a * scale;
                    }
                }
                psi.amps = next;
            }
            Ok(psi)
        }
    }
}

/// Per-basis-state violation counts for `clauses`.
pub fn violation_table(n: usize, clauses: &[Clause]) -> Result<Vec<u8>> {
    check_cap("violation table", n, MAX_ENUM_QUBITS)?;
    if clauses.len() > u8::MAX as usize {
        return Err(Error::CapExceeded { what: "phase clauses", n: clauses.len(), cap: u8::MAX as usize });
    }
    if let Some(v) = clauses.iter().flat_map(|c| c.vars()).find(|&v| v >= n) {
        return Err(Error::IndexOutOfRange { index: v, len: n });
    }
    let masks: Vec<(u64, u64)> = clauses
        .iter()
        .map(|c| {
            c.lits.iter().fold((0, 0), |(p, q), l| if l.pol > 0 { (p | 1 << l.var, q) } else { (p, q | 1 << l.var) })
        })
        .collect();
    Ok((0..1u64 << n)
        .into_par_iter()
        .map(|x| masks.iter().filter(|&&(p, q)| (x & p).count_ones() + (!x & q).count_ones() != 1).count() as u8)
        .collect())
}

/// ψ_x ← e^{iα·V(x)} ψ_x with V read from a violation table.
pub fn apply_phase_table(psi: &mut StateVector, alpha: f64, table: &[u8]) -> Result<()> {
    if table.len() != psi.amps.len() {
        return Err(Error::DimensionMismatch { expected: psi.amps.len(), got: table.len() });
    }
    let m = table.iter().copied().max().unwrap_or(0) as usize;
    let phases: Vec<Complex64> = (0..=m).map(|k| Complex64::from_polar(1.0, alpha * k as f64)).collect();
    if psi.n >= PAR_MIN_QUBITS {
        psi.amps.par_iter_mut().zip(table.par_iter()).for_each(|(a, &v)| *a *= phases[v as usize]);
    } else {
        psi.amps.iter_mut().zip(table).for_each(|(a, &v)| *a *= phases[v as usize]);
    }
    Ok(())
}

pub fn apply_phase(psi: &mut StateVector, alpha: f64, clauses: &[Clause]) -> Result<()> {
    let table = violation_table(psi.n, clauses)?;
    apply_phase_table(psi, alpha, &table)
}

/// Visits every subset of `comp` in ascending order.
fn for_each_subset(comp: u64, mut f: impl FnMut(u64)) {
    let mut sub = 0u64;
    loop {
        f(sub);
        if sub == comp {
            break;
        }
        sub = sub.wrapping_sub(comp) & comp;
    }
}

fn check_fits(psi: &StateVector, support: u64) -> Result<()> {
    if support & !full_mask(psi.n) != 0 {
        return Err(Error::DimensionMismatch { expected: psi.n, got: 64 - support.leading_zeros() as usize });
    }
    Ok(())
}

/// ψ ← ψ + (e^{−i·angle} − 1)·Pψ for a pattern projector.
pub fn apply_diffusor(psi: &mut StateVector, angle: f64, spec: &DiffusorSpec) -> Result<()> {
    check_fits(psi, spec.support())?;
    let k = Complex64::from_polar(1.0, -angle) - 1.0;
    let e = Complex64::from_polar(1.0, spec.theta);
    let (k0, k1) = (k * FRAC_1_SQRT_2, k * e * FRAC_1_SQRT_2);
    let comp = full_mask(psi.n) & !spec.support();
    let amps = &mut psi.amps;
    for_each_subset(comp, |sub| {
        let base = sub | spec.diag_y;
        let (i0, i1) = ((base | spec.w) as usize, (base | spec.v) as usize);
        let c = (amps[i0] + e.conj() * amps[i1]) * FRAC_1_SQRT_2;
        amps[i0] += k0 * c;
        amps[i1] += k1 * c;
    });
    Ok(())
}

/// Same rotation about a uniform superposition of local states.
pub fn apply_state_diffusor(psi: &mut StateVector, angle: f64, sd: &StateDiffusor) -> Result<()> {
    check_fits(psi, sd.support())?;
    let offs: Vec<usize> = sd.offsets().into_iter().map(|o| o as usize).collect();
    let s = offs.len() as f64;
    let k = (Complex64::from_polar(1.0, -angle) - 1.0) / s;
    let comp = full_mask(psi.n) & !sd.support();
    let amps = &mut psi.amps;
    for_each_subset(comp, |sub| {
        let base = sub as usize;
        let c: Complex64 = offs.iter().map(|&o| amps[base | o]).sum();
        let d = k * c;
        for &o in &offs {
            amps[base | o] += d;
        }
    });
    Ok(())
}

pub fn apply(psi: &mut StateVector, angle: f64, d: &Diffusor) -> Result<()> {
    match d {
        Diffusor::Pattern(s) => apply_diffusor(psi, angle, s),
        Diffusor::Superposition(s) => apply_state_diffusor(psi, angle, s),
    }
}

fn apply_program(psi: &mut StateVector, prog: &MixerProgram, beta: f64, gamma: Option<f64>) -> Result<()> {
    for d in prog.diffusors() {
        let angle = match d.tag() {
            AngleTag::Beta => beta,
            AngleTag::Gamma => gamma.ok_or_else(|| Error::InvalidInput("γ-tagged diffusor needs a gamma schedule".into()))?,
        };
        apply(psi, angle, d)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr")]
pub struct Schedule {
    pub p: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct ScheduleRepr {
    p: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    #[serde(default)]
    gamma: Option<Vec<f64>>,
}

impl TryFrom<ScheduleRepr> for Schedule {
    type Error = Error;
    fn try_from(r: ScheduleRepr) -> Result<Self> {
        Schedule::new(r.alpha, r.beta, r.gamma).and_then(|s| {
            if s.p == r.p {
                Ok(s)
            } else {
                Err(Error::DimensionMismatch { expected: r.p, got: s.p })
            }
        })
    }
}

impl Schedule {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, gamma: Option<Vec<f64>>) -> Result<Self> {
        let p = alpha.len();
        if beta.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: beta.len() });
        }
        if let Some(g) = &gamma {
            if g.len() != p {
                return Err(Error::DimensionMismatch { expected: p, got: g.len() });
            }
        }
        if alpha.iter().chain(&beta).chain(gamma.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Schedule { p, alpha, beta, gamma })
    }

    pub fn zeros(p: usize, with_gamma: bool) -> Self {
        Schedule { p, alpha: vec![0.0; p], beta: vec![0.0; p], gamma: with_gamma.then(|| vec![0.0; p]) }
    }

    /// Flat parameter vector α ‖ β ‖ γ.
    pub fn params(&self) -> Vec<f64> {
        let mut v = self.alpha.clone();
        v.extend(&self.beta);
        if let Some(g) = &self.gamma {
            v.extend(g);
        }
        v
    }

    pub fn with_params(&self, theta: &[f64]) -> Result<Self> {
        let p = self.p;
        let want = if self.gamma.is_some() { 3 * p } else { 2 * p };
        if theta.len() != want {
            return Err(Error::DimensionMismatch { expected: want, got: theta.len() });
        }
        let gamma = self.gamma.as_ref().map(|_| theta[2 * p..].to_vec());
        Schedule::new(theta[..p].to_vec(), theta[p..2 * p].to_vec(), gamma)
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub state: StateVector,
    pub success: f64,
    /// ‖ψ‖ after each round.
    pub norms: Vec<f64>,
}

pub fn success_probability(psi: &StateVector, solutions: &[u64]) -> f64 {
    solutions.iter().map(|&x| psi.probability(x)).sum::<f64>().min(1.0)
}

/// Probability mass outside the subspace the ansatz mixers preserve.
pub fn leakage(psi: &StateVector, ansatz: &AnsatzSpec) -> f64 {
    psi.amps
        .iter()
        .enumerate()
        .filter(|(x, _)| !ansatz.in_subspace(*x as u64))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// An instance bound to an ansatz with its phase table, initial state and
/// solution list precomputed, so repeated schedule evaluations are cheap.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub ansatz: AnsatzSpec,
    pub solutions: Vec<u64>,
    table: Vec<u8>,
    initial: StateVector,
}

impl Prepared {
    pub fn new(inst: &SatInstance, ansatz: AnsatzSpec) -> Result<Self> {
        let solutions = brute_solutions(inst)?;
        Self::with_solutions(inst, ansatz, solutions)
    }

    pub fn with_solutions(inst: &SatInstance, ansatz: AnsatzSpec, solutions: Vec<u64>) -> Result<Self> {
        if ansatz.n != inst.n {
            return Err(Error::DimensionMismatch { expected: inst.n, got: ansatz.n });
        }
        let clauses: Vec<Clause> = ansatz
            .phase_clauses
            .iter()
            .map(|&i| inst.clauses.get(i).copied().ok_or(Error::IndexOutOfRange { index: i, len: inst.clauses.len() }))
            .collect::<Result<_>>()?;
        let table = violation_table(inst.n, &clauses)?;
        let initial = prepare_initial(&ansatz)?;
        Ok(Prepared { ansatz, solutions, table, initial })
    }

    pub fn initial(&self) -> &StateVector {
        &self.initial
    }

    pub fn run(&self, schedule: &Schedule) -> Result<RunResult> {
        if self.ansatz.symcov.as_ref().is_some_and(|s| !s.is_empty()) && schedule.gamma.is_none() {
            return Err(Error::InvalidInput("SymCov ansatz needs a gamma schedule".into()));
        }
        let mut psi = self.initial.clone();
        let mut norms = Vec::with_capacity(schedule.p);
        for l in 0..schedule.p {
            let gamma = schedule.gamma.as_ref().map(|g| g[l]);
            apply_phase_table(&mut psi, schedule.alpha[l], &self.table)?;
            apply_program(&mut psi, &self.ansatz.mixer, schedule.beta[l], gamma)?;
            if let Some(sc) = &self.ansatz.symcov {
                apply_program(&mut psi, sc, schedule.beta[l], gamma)?;
            }
            norms.push(psi.norm());
        }
        let success = success_probability(&psi, &self.solutions);
        Ok(RunResult { state: psi, success, norms })
    }

    pub fn success(&self, schedule: &Schedule) -> Result<f64> {
        self.run(schedule).map(|r| r.success)
    }
}

pub fn run(inst: &SatInstance, ansatz: &AnsatzSpec, schedule: &Schedule, solutions: &[u64]) -> Result<RunResult> {
    Prepared::with_solutions(inst, ansatz.clone(), solutions.to_vec())?.run(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator_reduction::select_generators;
    use crate::mixer_compile::{build_p, projector_hamiltonian, MixerProgram};
    use crate::sat1in3::{build_ansatz, example_instance, generate_satisfiable, reduce, AnsatzConfig, AnsatzKind, Literal};
    use crate::term_algebra::{HermitianPair, Term, ToMatrix};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn dense_apply(m: &DMatrix<Complex64>, psi: &StateVector) -> Vec<Complex64> {
        (m * DVector::from_column_slice(psi.amplitudes())).iter().copied().collect()
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..1 << n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(n, amps).unwrap()
    }

    fn fig2() -> (SatInstance, AnsatzSpec) {
        let (red, _) = reduce(&example_instance());
        let a = build_ansatz(&red, AnsatzKind::Mds, &AnsatzConfig::default()).unwrap();
        (red, a)
    }

    #[test]
    fn uniform_and_initial_states() {
        let psi = StateVector::uniform(2).unwrap();
        assert!(psi.amplitudes().iter().all(|a| (a - Complex64::new(0.5, 0.0)).norm() < 1e-15));
        let (_, a) = fig2();
        let init = prepare_initial(&a).unwrap();
        let nz: Vec<_> = init.amplitudes().iter().filter(|z| z.norm() > 1e-14).collect();
        assert_eq!(nz.len(), 9);
        assert!(nz.iter().all(|z| (z.re - 1.0 / 3.0).abs() < 1e-14 && z.im.abs() < 1e-14));
        assert!((init.norm() - 1.0).abs() < 1e-14);
        assert!(StateVector::uniform(27).is_err());
    }

    #[test]
    fn phase_counts_violations() {
        let (red, a) = fig2();
        let mut psi = prepare_initial(&a).unwrap();
        let before = psi.clone();
        let cl: Vec<Clause> = a.phase_clauses.iter().map(|&i| red.clauses[i]).collect();
        apply_phase(&mut psi, 0.0, &cl).unwrap();
        assert_eq!(psi, before);
        apply_phase(&mut psi, 0.7, &cl).unwrap();
        let hit = (0..64u64).filter(|&x| before.probability(x) > 0.0 && (psi.amplitude(x) - before.amplitude(x)).norm() > 1e-12).count();
        // only the subspace states that violate C₂ pick up a phase
        let violators = (0..64u64).filter(|&x| before.probability(x) > 0.0 && !red.clauses[1].satisfied(x)).count();
        assert_eq!(hit, violators);

        let lit = |var: usize, pol: i8| Literal { var, pol };
        let cs = vec![Clause::new([lit(0, 1), lit(1, 1), lit(2, 1)]).unwrap(), Clause::new([lit(1, 1), lit(2, 1), lit(3, 1)]).unwrap()];
        let mut basis = StateVector::zero_state(4).unwrap();
        apply_phase(&mut basis, 0.3, &cs).unwrap();
        assert!((basis.amplitude(0) - Complex64::from_polar(1.0, 0.6)).norm() < 1e-15);
    }

    #[test]
    fn x_diffusor_matches_two_by_two() {
        let beta = 0.37;
        let mut psi = StateVector::zero_state(1).unwrap();
        apply_diffusor(&mut psi, beta, &build_p(0, 0, 1, 0).unwrap()).unwrap();
        let k = Complex64::from_polar(1.0, -beta) - 1.0;
        assert!((psi.amplitude(0) - (1.0 + k / 2.0)).norm() < 1e-15);
        assert!((psi.amplitude(1) - k / 2.0).norm() < 1e-15);
        let mut same = psi.clone();
        apply_diffusor(&mut same, 0.0, &build_p(0, 0, 1, 0).unwrap()).unwrap();
        assert_eq!(same, psi);
    }

    #[test]
    fn diffusors_match_dense() {
        let n = 5;
        let mut spec = build_p(0b00100, 0b10000, 0b00001, 0b00010).unwrap();
        spec.theta = 0.9;
        let sd = StateDiffusor::new(vec![3, 0, 2], vec![0b001, 0b100, 0b111], AngleTag::Beta).unwrap();
        for (seed, d) in [Diffusor::Pattern(spec), Diffusor::Superposition(sd)].iter().enumerate() {
            let mut psi = random_state(n, seed as u64);
            let want = dense_apply(&d.unitary_matrix(1.3, n).unwrap(), &psi);
            apply(&mut psi, 1.3, d).unwrap();
            assert!(close(psi.amplitudes(), &want, 1e-13));
        }
    }

    #[test]
    fn p0_success() {
        let (red, mds) = fig2();
        let sols = brute_solutions(&red).unwrap();
        let zero = Schedule::zeros(0, false);
        assert!((run(&red, &mds, &zero, &sols).unwrap().success - 2.0 / 9.0).abs() < 1e-14);
        let x = build_ansatz(&red, AnsatzKind::X, &AnsatzConfig::default()).unwrap();
        assert!((run(&red, &x, &zero, &sols).unwrap().success - 2.0 / 64.0).abs() < 1e-14);
        let sc = build_ansatz(&red, AnsatzKind::MdsSymcov, &AnsatzConfig::default()).unwrap();
        assert!(run(&red, &sc, &Schedule::zeros(1, false), &sols).is_err());
    }

    #[test]
    fn success_probability_edges() {
        let psi = StateVector::zero_state(3).unwrap();
        assert_eq!(success_probability(&psi, &[0]), 1.0);
        assert_eq!(success_probability(&psi, &[1, 2]), 0.0);
        let u = StateVector::uniform(3).unwrap();
        assert!((success_probability(&u, &[1, 2, 5]) - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::new(vec![0.1], vec![0.1, 0.2], None).is_err());
        assert!(Schedule::new(vec![f64::NAN], vec![0.1], None).is_err());
        let s = Schedule::new(vec![0.1, 0.2], vec![0.3, 0.4], Some(vec![0.5, 0.6])).unwrap();
        assert_eq!(s.with_params(&s.params()).unwrap(), s);
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<Schedule>(&js).unwrap(), s);
        assert!(serde_json::from_str::<Schedule>(r#"{"p":3,"alpha":[0],"beta":[0]}"#).is_err());
    }

    fn dense_round(prep: &Prepared, s: &Schedule) -> DMatrix<Complex64> {
        let n = prep.ansatz.n;
        let dim = 1 << n;
        let mut u = DMatrix::identity(dim, dim);
        for l in 0..s.p {
            let phase = DMatrix::from_diagonal(&DVector::from_iterator(dim, prep.table.iter().map(|&v| Complex64::from_polar(1.0, s.alpha[l] * v as f64))));
            u = phase * u;
            u = prep.ansatz.mixer.unitary_matrix(s.beta[l]).unwrap() * u;
            if let Some(sc) = &prep.ansatz.symcov {
                u = sc.unitary_matrix(s.gamma.as_ref().unwrap()[l]).unwrap() * u;
            }
        }
        u
    }

    #[test]
    fn matrix_free_matches_dense_p3() {
        let (inst, _) = generate_satisfiable(9, 11).unwrap();
        let (red, _) = reduce(&inst);
        for kind in AnsatzKind::ALL {
            let a = build_ansatz(&red, kind, &AnsatzConfig::default()).unwrap();
            let prep = Prepared::new(&red, a).unwrap();
            let s = Schedule::new(vec![0.3, -0.5, 1.1], vec![0.7, 0.2, -0.4], Some(vec![0.25, -0.6, 0.9])).unwrap();
            let r = prep.run(&s).unwrap();
            let want = dense_apply(&dense_round(&prep, &s), prep.initial());
            assert!(close(r.state.amplitudes(), &want, 1e-9), "{kind:?}");
            assert!(r.norms.iter().all(|v| (v - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn mds_mixer_keeps_subspace() {
        let (inst, _) = generate_satisfiable(12, 5).unwrap();
        let (red, _) = reduce(&inst);
        for kind in [AnsatzKind::Mds, AnsatzKind::MdsSymcov] {
            let a = build_ansatz(&red, kind, &AnsatzConfig::default()).unwrap();
            let prep = Prepared::new(&red, a).unwrap();
            let p = 14;
            let s = Schedule::new((0..p).map(|j| 0.1 * j as f64).collect(), vec![0.8; p], Some(vec![-0.6; p])).unwrap();
            let r = prep.run(&s).unwrap();
            assert!(leakage(&r.state, &prep.ansatz) <= 1e-10);
        }
    }

    #[test]
    fn trotter_error_is_second_order() {
        let hop = |i: usize, j: usize| HermitianPair::unit(Term::ladder(4, 1 << i, 1 << j).unwrap());
        let coll = select_generators(&[hop(0, 1), hop(1, 2), hop(2, 3), hop(0, 3)], true);
        let prog: MixerProgram = crate::mixer_compile::compile_mixer(4, &coll, AngleTag::Beta).unwrap();
        let h = projector_hamiltonian(4, &coll).unwrap().lower().unwrap();
        let err = |eps: f64| {
            let exact = (h.clone() * Complex64::new(0.0, -eps)).exp();
            (prog.unitary_matrix(eps).unwrap() - exact).norm()
        };
        let slope = (err(1e-2) / err(1e-3)).log10();
        assert!((slope - 2.0).abs() < 0.05, "{slope}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn runs_preserve_norm(seed in any::<u64>(), angles in proptest::collection::vec(-3.0f64..3.0, 9)) {
            let (inst, _) = generate_satisfiable(8, seed).unwrap();
            let (red, _) = reduce(&inst);
            for kind in AnsatzKind::ALL {
                let a = build_ansatz(&red, kind, &AnsatzConfig::default()).unwrap();
                let prep = Prepared::new(&red, a).unwrap();
                let s = Schedule::new(angles[..3].to_vec(), angles[3..6].to_vec(), Some(angles[6..].to_vec())).unwrap();
                let r = prep.run(&s).unwrap();
                prop_assert!(r.norms.iter().all(|v| (v - 1.0).abs() <= 1e-10));
                prop_assert!((0.0..=1.0).contains(&r.success));
            }
        }
    }
}
