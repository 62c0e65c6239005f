//! Diffusor mixers U(β) = I + (e^{−iβ} − 1)·P around rank-1 projectors.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::generator_reduction::GeneratorCollection;
use crate::term_algebra::{
    coeff_int, coeff_ratio, format_hex, full_mask, parse_hex, Coeff, HermitianPair, Term, TermSum, ToMatrix,
};
use crate::MAX_ORACLE_QUBITS;

/// Which schedule vector supplies a diffusor's angle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleTag {
    Beta,
    Gamma,
}

/// P = T(x, y, 0, 0)·Q(θ, v, w) with Q = |φ⟩⟨φ|, φ = (|a⟩ + e^{iθ}|b⟩)/√2,
/// where `a` is 0 on `v` and 1 on `w` and `b` is the reverse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct DiffusorSpec {
    pub diag_x: u64,
    pub diag_y: u64,
    pub v: u64,
    pub w: u64,
    pub theta: f64,
    pub tag: AngleTag,
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    x: String,
    y: String,
    v: String,
    w: String,
    theta: f64,
    tag: AngleTag,
}

impl TryFrom<SpecRepr> for DiffusorSpec {
    type Error = Error;
    fn try_from(r: SpecRepr) -> Result<Self> {
        let mut s = build_p(parse_hex(&r.x)?, parse_hex(&r.y)?, parse_hex(&r.v)?, parse_hex(&r.w)?)?;
        s.theta = r.theta;
        s.tag = r.tag;
        Ok(s)
    }
}

impl From<DiffusorSpec> for SpecRepr {
    fn from(s: DiffusorSpec) -> Self {
        SpecRepr {
            x: format_hex(s.diag_x),
            y: format_hex(s.diag_y),
            v: format_hex(s.v),
            w: format_hex(s.w),
            theta: s.theta,
            tag: s.tag,
        }
    }
}

pub fn build_q(theta: f64, v: u64, w: u64) -> Result<DiffusorSpec> {
    let mut s = build_p(0, 0, v, w)?;
    s.theta = theta;
    Ok(s)
}

pub fn build_p(x: u64, y: u64, v: u64, w: u64) -> Result<DiffusorSpec> {
    if v | w == 0 {
        return Err(Error::EmptyPattern);
    }
    let disjoint = x & y == 0 && x & v == 0 && x & w == 0 && y & v == 0 && y & w == 0 && v & w == 0;
    if !disjoint {
        return Err(Error::MaskOverlap { n: 64 });
    }
    Ok(DiffusorSpec { diag_x: x, diag_y: y, v, w, theta: 0.0, tag: AngleTag::Beta })
}

impl DiffusorSpec {
    pub fn support(&self) -> u64 {
        self.diag_x | self.diag_y | self.v | self.w
    }

    /// P as four gated words: both pattern projectors and both transitions.
    pub fn projector_terms(&self, n: usize) -> Result<Vec<(Complex64, Term)>> {
        let (x, y, v, w) = (self.diag_x, self.diag_y, self.v, self.w);
        let phase = Complex64::from_polar(0.5, self.theta);
        Ok(vec![
            (Complex64::new(0.5, 0.0), Term::new(n, x | v, y | w, 0, 0)?),
            (Complex64::new(0.5, 0.0), Term::new(n, x | w, y | v, 0, 0)?),
            (phase, Term::new(n, x, y, v, w)?),
            (phase.conj(), Term::new(n, x, y, w, v)?),
        ])
    }
}

/// Rotation about the uniform superposition of listed local states on `qubits`
/// (local bit k is `qubits[k]`), tensored with the identity elsewhere.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SuperRepr", into = "SuperRepr")]
pub struct StateDiffusor {
    pub qubits: Vec<usize>,
    pub states: Vec<u64>,
    pub tag: AngleTag,
}

#[derive(Serialize, Deserialize)]
struct SuperRepr {
    support: Vec<usize>,
    states: Vec<String>,
    tag: AngleTag,
}

impl TryFrom<SuperRepr> for StateDiffusor {
    type Error = Error;
    fn try_from(r: SuperRepr) -> Result<Self> {
        let states = r.states.iter().map(|s| parse_hex(s)).collect::<Result<_>>()?;
        StateDiffusor::new(r.support, states, r.tag)
    }
}

impl From<StateDiffusor> for SuperRepr {
    fn from(s: StateDiffusor) -> Self {
        SuperRepr { support: s.qubits, states: s.states.iter().map(|&x| format_hex(x)).collect(), tag: s.tag }
    }
}

impl StateDiffusor {
    pub fn new(qubits: Vec<usize>, states: Vec<u64>, tag: AngleTag) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let mut sorted = qubits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != qubits.len() || qubits.iter().any(|&q| q >= 64) {
            return Err(Error::InvalidInput("superposition support must be distinct qubits".into()));
        }
        let local = full_mask(qubits.len());
        let mut seen = states.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != states.len() || states.iter().any(|s| s & !local != 0) {
            return Err(Error::InvalidInput("superposition states must be distinct local patterns".into()));
        }
        Ok(StateDiffusor { qubits, states, tag })
    }

    pub fn support(&self) -> u64 {
        self.qubits.iter().fold(0, |m, &q| m | 1 << q)
    }

    /// Global basis offsets of the listed local states.
    pub fn offsets(&self) -> Vec<u64> {
        self.states.iter().map(|&s| scatter(s, &self.qubits)).collect()
    }
}

pub fn scatter(local: u64, qubits: &[usize]) -> u64 {
    qubits.iter().enumerate().filter(|(k, _)| local >> k & 1 == 1).fold(0, |m, (_, &q)| m | 1 << q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Diffusor {
    Pattern(DiffusorSpec),
    Superposition(StateDiffusor),
}

impl Diffusor {
    pub fn tag(&self) -> AngleTag {
        match self {
            Diffusor::Pattern(s) => s.tag,
            Diffusor::Superposition(s) => s.tag,
        }
    }

    pub fn support(&self) -> u64 {
        match self {
            Diffusor::Pattern(s) => s.support(),
            Diffusor::Superposition(s) => s.support(),
        }
    }

    pub fn projector_matrix(&self, n: usize) -> Result<DMatrix<Complex64>> {
        check_cap("diffusor lowering", n, MAX_ORACLE_QUBITS)?;
        if self.support() & !full_mask(n) != 0 {
            return Err(Error::DimensionMismatch { expected: n, got: 64 - self.support().leading_zeros() as usize });
        }
        match self {
            Diffusor::Pattern(s) => {
                let dim = 1usize << n;
                let mut m = DMatrix::zeros(dim, dim);
                for (c, t) in s.projector_terms(n)? {
                    m += t.lower()? * c;
                }
                Ok(m)
            }
            Diffusor::Superposition(s) => {
                let dim = 1usize << n;
                let rest = full_mask(n) & !s.support();
                let offs = s.offsets();
                let amp = 1.0 / offs.len() as f64;
                let mut m = DMatrix::zeros(dim, dim);
                for base in 0..dim as u64 {
                    if base & !rest != 0 {
                        continue;
                    }
                    for &r in &offs {
                        for &c in &offs {
                            m[((base | r) as usize, (base | c) as usize)] = Complex64::new(amp, 0.0);
                        }
                    }
                }
                Ok(m)
            }
        }
    }

    pub fn unitary_matrix(&self, angle: f64, n: usize) -> Result<DMatrix<Complex64>> {
        diffusor_unitary_matrix(angle, self, n)
    }
}

/// U = I + (e^{−iβ} − 1)·P.
pub fn diffusor_unitary_matrix(beta: f64, d: &Diffusor, n: usize) -> Result<DMatrix<Complex64>> {
    let p = d.projector_matrix(n)?;
    let k = Complex64::from_polar(1.0, -beta) - 1.0;
    Ok(DMatrix::identity(p.nrows(), p.ncols()) + p * k)
}

/// Ordered layers of diffusors; layer 0 acts first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixerProgram {
    pub n: usize,
    pub layers: Vec<Vec<Diffusor>>,
}

impl MixerProgram {
    pub fn empty(n: usize) -> Self {
        MixerProgram { n, layers: Vec::new() }
    }

    pub fn diffusors(&self) -> impl Iterator<Item = &Diffusor> {
        self.layers.iter().flatten()
    }

    pub fn is_empty(&self) -> bool {
        self.diffusors().next().is_none()
    }

    pub fn append(&mut self, other: MixerProgram) {
        self.layers.extend(other.layers);
    }

    /// Dense product of every diffusor at a shared angle.
    pub fn unitary_matrix(&self, angle: f64) -> Result<DMatrix<Complex64>> {
        check_cap("mixer lowering", self.n, MAX_ORACLE_QUBITS)?;
        let dim = 1usize << self.n;
        let mut u = DMatrix::identity(dim, dim);
        for d in self.diffusors() {
            u = d.unitary_matrix(angle, self.n)? * u;
        }
        Ok(u)
    }
}

fn spec_for(p: &HermitianPair, tag: AngleTag) -> Result<DiffusorSpec> {
    let t = p.term;
    let mut s = build_p(t.x, t.y, t.v, t.w)?;
    s.tag = tag;
    Ok(s)
}

/// One layer per group, one pattern diffusor per generator.
pub fn compile_mixer(n: usize, collection: &GeneratorCollection, tag: AngleTag) -> Result<MixerProgram> {
    let mut layers = Vec::with_capacity(collection.groups.len());
    for g in &collection.groups {
        let layer = g.members.iter().map(|p| spec_for(p, tag).map(Diffusor::Pattern)).collect::<Result<Vec<_>>>()?;
        layers.push(layer);
    }
    Ok(MixerProgram { n, layers })
}

/// Σ α g + ᾱ g† over every generator (α = 1 when `coeffs` is `None`).
pub fn compile_driver(n: usize, collection: &GeneratorCollection, coeffs: Option<&[Coeff]>) -> Result<TermSum> {
    if let Some(c) = coeffs {
        if c.len() != collection.len() {
            return Err(Error::DimensionMismatch { expected: collection.len(), got: c.len() });
        }
    }
    let mut h = TermSum::zero(n);
    for (k, g) in collection.members().enumerate() {
        let alpha = coeffs.map(|c| c[k]).unwrap_or_else(|| coeff_int(1));
        h = h.add(&HermitianPair::new(alpha * g.alpha, g.term).to_sum())?;
    }
    Ok(h)
}

/// Σ_g P_g at θ = 0, the generator of the layered diffusor product.
pub fn projector_hamiltonian(n: usize, collection: &GeneratorCollection) -> Result<TermSum> {
    let half = coeff_ratio(1, 2);
    let mut h = TermSum::zero(n);
    for g in collection.members() {
        let t = g.term;
        h.add_term(half, Term::new(n, t.x | t.v, t.y | t.w, 0, 0)?);
        h.add_term(half, Term::new(n, t.x | t.w, t.y | t.v, 0, 0)?);
        h.add_term(half, Term::new(n, t.x, t.y, t.v, t.w)?);
        h.add_term(half, Term::new(n, t.x, t.y, t.w, t.v)?);
    }
    Ok(h)
}

pub fn prefab_x_mixer(n: usize) -> Result<MixerProgram> {
    if n == 0 {
        return Err(Error::InvalidInput("x-mixer needs n ≥ 1".into()));
    }
    let layer = (0..n).map(|j| build_p(0, 0, 1 << j, 0).map(Diffusor::Pattern)).collect::<Result<Vec<_>>>()?;
    Ok(MixerProgram { n, layers: vec![layer] })
}

/// Hopping diffusors on ring edges: pairs starting at even sites, then odd
/// sites; for odd n the wrap-around edge forms a third layer.
pub fn prefab_ring_xy(n: usize) -> Result<MixerProgram> {
    if n < 2 {
        return Err(Error::InvalidInput("ring mixer needs n ≥ 2".into()));
    }
    let hop = |i: usize| build_p(0, 0, 1 << i, 1 << ((i + 1) % n)).map(Diffusor::Pattern);
    let mut layers = Vec::new();
    if n % 2 == 0 {
        layers.push((0..n).step_by(2).map(hop).collect::<Result<Vec<_>>>()?);
        layers.push((1..n).step_by(2).map(hop).collect::<Result<Vec<_>>>()?);
    } else {
        layers.push((0..n - 1).step_by(2).map(hop).collect::<Result<Vec<_>>>()?);
        layers.push((1..n - 1).step_by(2).map(hop).collect::<Result<Vec<_>>>()?);
        layers.push(vec![hop(n - 1)?]);
    }
    Ok(MixerProgram { n, layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutator_search::{search_linear, SearchConfig};
    use crate::constraints::{from_linear, LinearConstraint};
    use crate::generator_reduction::{select_generators, GeneratorGroup};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_dev(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn pat(s: DiffusorSpec) -> Diffusor {
        Diffusor::Pattern(s)
    }

    #[test]
    fn q_examples() {
        let p = pat(build_q(0.0, 0b01, 0b10).unwrap()).projector_matrix(2).unwrap();
        // a = (q0=0, q1=1) → index 2, b = index 1
        let mut want = DMatrix::zeros(4, 4);
        for (r, cc) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            want[(r, cc)] = c(0.5, 0.0);
        }
        assert!(max_dev(&p, &want) < 1e-15);
        let plus = pat(build_q(0.0, 1, 0).unwrap()).projector_matrix(1).unwrap();
        assert!(plus.iter().all(|z| (z - c(0.5, 0.0)).norm() < 1e-15));
        let tr = pat(build_q(0.0, 0b011, 0).unwrap()).projector_matrix(3).unwrap().trace();
        assert!((tr - c(2.0, 0.0)).norm() < 1e-12);
        assert_eq!(build_q(0.0, 0, 0), Err(Error::EmptyPattern));
        assert!(build_p(1, 0, 1, 0).is_err());
    }

    #[test]
    fn gated_projector_kills_blocks() {
        let p = pat(build_p(0b100, 0, 0b001, 0b010).unwrap()).projector_matrix(3).unwrap();
        for r in 0..8 {
            for cc in 0..8 {
                if r & 4 != 0 || cc & 4 != 0 {
                    assert_eq!(p[(r, cc)], c(0.0, 0.0));
                }
            }
        }
        assert!((p.trace() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unitary_examples() {
        let d = pat(build_q(0.0, 0b01, 0b10).unwrap());
        assert!(max_dev(&d.unitary_matrix(0.0, 2).unwrap(), &DMatrix::identity(4, 4)) < 1e-15);
        let u = d.unitary_matrix(std::f64::consts::PI, 2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let phi = nalgebra::DVector::from_vec(vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]);
        assert!((&u * &phi + &phi).norm() < 1e-12);
        // x-mixer diffusor equals RX(β) = e^{−iβX/2} up to the phase e^{−iβ/2}
        let beta = 0.37;
        let ux = pat(build_p(0, 0, 1, 0).unwrap()).unitary_matrix(beta, 1).unwrap();
        let (co, si) = ((beta / 2.0).cos(), (beta / 2.0).sin());
        let rx = DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)]);
        assert!(max_dev(&ux, &(rx * Complex64::from_polar(1.0, -beta / 2.0))) < 1e-12);
    }

    #[test]
    fn prefab_layouts() {
        let x1 = prefab_x_mixer(1).unwrap();
        assert_eq!(x1.layers.len(), 1);
        assert_eq!(x1.layers[0].len(), 1);
        let r4 = prefab_ring_xy(4).unwrap();
        let edges: Vec<Vec<u64>> = r4.layers.iter().map(|l| l.iter().map(|d| d.support()).collect()).collect();
        assert_eq!(edges, vec![vec![0b0011, 0b1100], vec![0b0110, 0b1001]]);
        let r2 = prefab_ring_xy(2).unwrap();
        assert_eq!(r2.layers.iter().map(|l| l.len()).collect::<Vec<_>>(), vec![1, 1]);
        assert_eq!(prefab_ring_xy(5).unwrap().layers.len(), 3);
        assert!(prefab_ring_xy(1).is_err());
        assert!(prefab_x_mixer(0).is_err());
    }

    #[test]
    fn ring_preserves_excitation_number() {
        for n in [3, 4, 5] {
            let u = prefab_ring_xy(n).unwrap().unitary_matrix(0.61).unwrap();
            let num = from_linear(&LinearConstraint::new(vec![1; n], 0).unwrap()).lower().unwrap();
            assert!(max_dev(&(&u * &num), &(&num * &u)) < 1e-12);
        }
    }

    #[test]
    fn compile_ring_collection() {
        let hop = |i: usize, j: usize| HermitianPair::unit(Term::ladder(4, 1 << i, 1 << j).unwrap());
        let coll = select_generators(&[hop(0, 1), hop(1, 2), hop(2, 3), hop(0, 3)], true);
        let prog = compile_mixer(4, &coll, AngleTag::Beta).unwrap();
        assert_eq!(prog.layers.len(), 2);
        assert!(compile_mixer(4, &GeneratorCollection::default(), AngleTag::Beta).unwrap().is_empty());
        let h = compile_driver(4, &coll, None).unwrap().lower().unwrap();
        assert!(max_dev(&h, &h.adjoint()) < 1e-15);
        // hopping terms couple |0110⟩-type neighbours with unit amplitude
        assert_eq!(h[(0b0010, 0b0001)], c(1.0, 0.0));
        let one = GeneratorCollection { groups: vec![GeneratorGroup { members: vec![HermitianPair::unit(Term::ladder(1, 1, 0).unwrap())] }] };
        let x = compile_driver(1, &one, None).unwrap().lower().unwrap();
        assert!(max_dev(&x, &DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])) < 1e-15);
        assert!(compile_driver(4, &coll, Some(&[coeff_int(1)])).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut prog = prefab_ring_xy(3).unwrap();
        prog.layers.push(vec![Diffusor::Superposition(StateDiffusor::new(vec![0, 2], vec![0, 1, 2], AngleTag::Gamma).unwrap())]);
        let s = serde_json::to_string(&prog).unwrap();
        assert!(s.contains("\"tag\":\"beta\""));
        assert!(s.contains("\"support\":[0,2]"));
        let back: MixerProgram = serde_json::from_str(&s).unwrap();
        assert_eq!(back, prog);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn projector_properties(n in 1usize..=6, raw in (0u64..64, 0u64..64, 0u64..64, 0u64..64), theta in -3.0f64..3.0) {
            let full = (1u64 << n) - 1;
            let v = raw.0 & full;
            let w = raw.1 & full & !v;
            let x = raw.2 & full & !(v | w);
            let y = raw.3 & full & !(v | w | x);
            prop_assume!(v | w != 0);
            let mut s = build_p(x, y, v, w).unwrap();
            s.theta = theta;
            let p = pat(s).projector_matrix(n).unwrap();
            prop_assert!(max_dev(&p, &p.adjoint()) < 1e-12);
            prop_assert!(max_dev(&(&p * &p), &p) < 1e-12);
            let expect = (1u64 << (n - (x | y | v | w).count_ones() as usize)) as f64;
            prop_assert!((p.trace().re - expect).abs() < 1e-12);
            let u = pat(s).unitary_matrix(theta * 0.7, n).unwrap();
            prop_assert!(max_dev(&(u.adjoint() * &u), &DMatrix::identity(1 << n, 1 << n)) < 1e-12);
        }

        #[test]
        fn compiled_mixers_preserve_constraints(rows in proptest::collection::vec(proptest::collection::vec(-1i64..=1, 5), 1..=2), beta in 0.1f64..3.0) {
            let cons: Vec<LinearConstraint> = rows.into_iter().filter(|r| r.iter().any(|&k| k != 0)).map(|r| LinearConstraint::new(r, 0).unwrap()).collect();
            let k = search_linear(5, &cons, &SearchConfig::new(3)).unwrap();
            let prog = compile_mixer(5, &select_generators(&k, true), AngleTag::Beta).unwrap();
            let u = prog.unitary_matrix(beta).unwrap();
            for l in &cons {
                let m = from_linear(l).lower().unwrap();
                prop_assert!(max_dev(&(&u * &m), &(&m * &u)) < 1e-12);
            }
            for layer in &prog.layers {
                for a in layer {
                    for b in layer {
                        let (pa, pb) = (a.projector_matrix(5).unwrap(), b.projector_matrix(5).unwrap());
                        prop_assert!(max_dev(&(&pa * &pb), &(&pb * &pa)) < 1e-12);
                    }
                }
            }
        }
    }
}
