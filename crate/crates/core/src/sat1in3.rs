//! Random exactly-one 3-SAT instances, exact solving, maximum disjoint clause
//! sets and the three QAOA ansätze built on them.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutator_search::{commutes_poly, search_linear, SearchConfig};
use crate::constraints::{LinearConstraint, Monomial, PolyConstraint};
use crate::error::{check_cap, Error, Result};
use crate::generator_reduction::select_generators;
use crate::mixer_compile::{build_p, compile_mixer, AngleTag, Diffusor, MixerProgram, StateDiffusor};
use crate::term_algebra::{HermitianPair, Term};
use crate::{mix_seed, MAX_ENUM_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub pol: i8,
}

impl Literal {
    pub fn is_true(&self, x: u64) -> bool {
        (x >> self.var & 1 == 1) == (self.pol > 0)
    }

    /// Variable value that makes the literal take `truth`.
    pub fn value_for(&self, truth: bool) -> bool {
        truth == (self.pol > 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[Literal; 3]", into = "[Literal; 3]")]
pub struct Clause {
    pub lits: [Literal; 3],
}

impl TryFrom<[Literal; 3]> for Clause {
    type Error = Error;
    fn try_from(lits: [Literal; 3]) -> Result<Self> {
        Clause::new(lits)
    }
}

impl From<Clause> for [Literal; 3] {
    fn from(c: Clause) -> Self {
        c.lits
    }
}

impl Clause {
    pub fn new(lits: [Literal; 3]) -> Result<Self> {
        let [a, b, c] = lits;
        if a.var == b.var || a.var == c.var || b.var == c.var {
            return Err(Error::InvalidInput("clause variables must be distinct".into()));
        }
        if lits.iter().any(|l| l.pol != 1 && l.pol != -1) {
            return Err(Error::InvalidInput("literal polarity must be ±1".into()));
        }
        Ok(Clause { lits })
    }

    pub fn vars(&self) -> [usize; 3] {
        self.lits.map(|l| l.var)
    }

    pub fn var_mask(&self) -> u64 {
        self.lits.iter().fold(0, |m, l| m | 1 << l.var)
    }

    pub fn true_count(&self, x: u64) -> u32 {
        self.lits.iter().filter(|l| l.is_true(x)).count() as u32
    }

    pub fn satisfied(&self, x: u64) -> bool {
        self.true_count(x) == 1
    }

    /// c·x = 1 − #negative literals.
    pub fn to_linear(&self, n: usize) -> Result<LinearConstraint> {
        let mut c = vec![0i64; n];
        for l in &self.lits {
            if l.var >= n {
                return Err(Error::IndexOutOfRange { index: l.var, len: n });
            }
            c[l.var] = l.pol as i64;
        }
        let negs = self.lits.iter().filter(|l| l.pol < 0).count() as i64;
        LinearConstraint::new(c, 1 - negs)
    }
}

/// Local assignments (bit k is the variable of literal k) making exactly one
/// literal true, ordered by which literal is true.
pub fn clause_solutions(c: &Clause) -> [u64; 3] {
    let mut out = [0u64; 3];
    for (t, slot) in out.iter_mut().enumerate() {
        for (k, l) in c.lits.iter().enumerate() {
            if l.value_for(k == t) {
                *slot |= 1 << k;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatInstance {
    pub n: usize,
    pub clauses: Vec<Clause>,
    pub seed: u64,
}

impl SatInstance {
    pub fn new(n: usize, clauses: Vec<Clause>, seed: u64) -> Result<Self> {
        for c in &clauses {
            if let Some(v) = c.vars().into_iter().find(|&v| v >= n) {
                return Err(Error::IndexOutOfRange { index: v, len: n });
            }
        }
        if n > 64 {
            return Err(Error::CapExceeded { what: "bitmask width", n, cap: 64 });
        }
        Ok(SatInstance { n, clauses, seed })
    }

    pub fn violations(&self, x: u64) -> u32 {
        self.clauses.iter().filter(|c| !c.satisfied(x)).count() as u32
    }
}

pub fn generate(n: usize, seed: u64) -> Result<SatInstance> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 variables, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = n.div_ceil(3);
    let mut clauses = Vec::with_capacity(m);
    for _ in 0..m {
        let idx = sample(&mut rng, n, 3);
        let mut lits = [Literal { var: 0, pol: 1 }; 3];
        for (k, var) in idx.into_iter().enumerate() {
            let pol = if rng.gen_bool(0.5) { 1 } else { -1 };
            lits[k] = Literal { var, pol };
        }
        clauses.push(Clause::new(lits)?);
    }
    SatInstance::new(n, clauses, seed)
}

/// Draws sub-seeded instances until one has a solution; returns the attempt count.
pub fn generate_satisfiable(n: usize, seed: u64) -> Result<(SatInstance, u64)> {
    check_cap("brute-force solving", n, MAX_ENUM_QUBITS)?;
    for attempt in 0.. {
        let inst = generate(n, mix_seed(seed, attempt))?;
        if !brute_solutions(&inst)?.is_empty() {
            return Ok((inst, attempt + 1));
        }
    }
    unreachable!()
}

/// Drops unused variables; `map[old] = Some(new)`.
pub fn reduce(inst: &SatInstance) -> (SatInstance, Vec<Option<usize>>) {
    let used = inst.clauses.iter().fold(0u64, |m, c| m | c.var_mask());
    let mut map = vec![None; inst.n];
    let mut next = 0;
    for (old, slot) in map.iter_mut().enumerate() {
        if used >> old & 1 == 1 {
            *slot = Some(next);
            next += 1;
        }
    }
    let clauses = inst
        .clauses
        .iter()
        .map(|c| Clause { lits: c.lits.map(|l| Literal { var: map[l.var].unwrap(), pol: l.pol }) })
        .collect();
    (SatInstance { n: next, clauses, seed: inst.seed }, map)
}

pub fn brute_solutions(inst: &SatInstance) -> Result<Vec<u64>> {
    check_cap("brute-force solving", inst.n, MAX_ENUM_QUBITS)?;
    let masks: Vec<(u64, u64)> = inst
        .clauses
        .iter()
        .map(|c| {
            let pos = c.lits.iter().filter(|l| l.pol > 0).fold(0u64, |m, l| m | 1 << l.var);
            let neg = c.lits.iter().filter(|l| l.pol < 0).fold(0u64, |m, l| m | 1 << l.var);
            (pos, neg)
        })
        .collect();
    Ok((0..1u64 << inst.n)
        .into_par_iter()
        .filter(|&x| masks.iter().all(|&(p, q)| (x & p).count_ones() + (!x & q).count_ones() == 1))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdsResult {
    pub clauses: Vec<usize>,
    pub var_sets: Vec<Vec<usize>>,
}

struct MdsSearch<'a> {
    masks: &'a [u64],
    best: Vec<usize>,
}

impl MdsSearch<'_> {
    fn go(&mut self, i: usize, used: u64, chosen: &mut Vec<usize>) {
        let open = self.masks[i..].iter().filter(|&&m| m & used == 0).count();
        if chosen.len() + open <= self.best.len() {
            return;
        }
        if i == self.masks.len() {
            self.best = chosen.clone();
            return;
        }
        if self.masks[i] & used == 0 {
            chosen.push(i);
            self.go(i + 1, used | self.masks[i], chosen);
            chosen.pop();
        }
        self.go(i + 1, used, chosen);
    }
}

/// Exact maximum set of pairwise variable-disjoint clauses, preferring the
/// lowest clause indices among optima.
pub fn find_mds(inst: &SatInstance) -> MdsResult {
    let masks: Vec<u64> = inst.clauses.iter().map(|c| c.var_mask()).collect();
    let mut greedy = Vec::new();
    let mut used = 0u64;
    for (i, &m) in masks.iter().enumerate() {
        if m & used == 0 {
            greedy.push(i);
            used |= m;
        }
    }
    let mut s = MdsSearch { masks: &masks, best: greedy };
    s.go(0, 0, &mut Vec::new());
    let var_sets = s
        .best
        .iter()
        .map(|&i| {
            let mut v = inst.clauses[i].vars().to_vec();
            v.sort_unstable();
            v
        })
        .collect();
    MdsResult { clauses: s.best, var_sets }
}

/// Clauses sharing at least one variable with clause `idx`, itself included.
pub fn neighborhood(inst: &SatInstance, idx: usize) -> Result<Vec<usize>> {
    let c = inst.clauses.get(idx).ok_or(Error::IndexOutOfRange { index: idx, len: inst.clauses.len() })?;
    let m = c.var_mask();
    Ok((0..inst.clauses.len()).filter(|&j| inst.clauses[j].var_mask() & m != 0).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    X,
    Mds,
    #[serde(rename = "symcov")]
    MdsSymcov,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 3] = [AnsatzKind::X, AnsatzKind::Mds, AnsatzKind::MdsSymcov];

    pub fn name(&self) -> &'static str {
        match self {
            AnsatzKind::X => "x",
            AnsatzKind::Mds => "mds",
            AnsatzKind::MdsSymcov => "symcov",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    pub locality: usize,
    /// `None` picks the kind's default: off for MDS, on for SymCov.
    pub partial_mixers: Option<bool>,
    pub reduce_generators: bool,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig { locality: 4, partial_mixers: None, reduce_generators: true }
    }
}

/// Uniform superposition of `states` on `qubits` (local bit k is `qubits[k]`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateFactor {
    pub qubits: Vec<usize>,
    pub states: Vec<u64>,
}

impl StateFactor {
    pub fn admits(&self, x: u64) -> bool {
        let local = self.qubits.iter().enumerate().fold(0u64, |m, (k, &q)| m | (x >> q & 1) << k);
        self.states.contains(&local)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Uniform,
    Product { factors: Vec<StateFactor> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    pub n: usize,
    pub phase_clauses: Vec<usize>,
    pub mixer: MixerProgram,
    pub symcov: Option<MixerProgram>,
    pub initial_state: InitialState,
    pub uses_partial_mixers: bool,
    /// Clause indices of the disjoint set (empty for the X ansatz).
    pub mds: Vec<usize>,
    /// Partial-mixer clauses with their two uncovered variables.
    pub partial: Vec<(usize, [usize; 2])>,
}

impl AnsatzSpec {
    /// Whether `x` lies in the subspace the mixers are built to preserve.
    pub fn in_subspace(&self, x: u64) -> bool {
        match &self.initial_state {
            InitialState::Uniform => true,
            InitialState::Product { factors } => factors.iter().all(|f| f.admits(x)),
        }
    }
}

/// Literal-space states (0,0), (1,0), (0,1) of two literals as variable values.
fn partial_states(a: &Literal, b: &Literal) -> Vec<u64> {
    [(false, false), (true, false), (false, true)]
        .iter()
        .map(|&(ta, tb)| a.value_for(ta) as u64 | (b.value_for(tb) as u64) << 1)
        .collect()
}

fn partial_constraint(n: usize, a: &Literal, b: &Literal) -> Result<PolyConstraint> {
    // ℓ_a·ℓ_b as a monomial: σ¹ on positive literals, σ⁰ on negative ones
    let (mut am, mut bm) = (0u64, 0u64);
    for l in [a, b] {
        if l.pol > 0 {
            bm |= 1 << l.var;
        } else {
            am |= 1 << l.var;
        }
    }
    PolyConstraint::new(n, vec![Monomial { a: am, b: bm, beta: 1 }], 0)
}

struct MdsLayout {
    mds: MdsResult,
    partial: Vec<(usize, [Literal; 2])>,
    free: Vec<usize>,
}

fn mds_layout(inst: &SatInstance, partial: bool) -> MdsLayout {
    let mds = find_mds(inst);
    let mut covered = mds.clauses.iter().fold(0u64, |m, &i| m | inst.clauses[i].var_mask());
    let mut pairs = Vec::new();
    if partial {
        for (i, c) in inst.clauses.iter().enumerate() {
            if mds.clauses.contains(&i) {
                continue;
            }
            let open: Vec<Literal> = c.lits.iter().copied().filter(|l| covered >> l.var & 1 == 0).collect();
            if open.len() == 2 {
                pairs.push((i, [open[0], open[1]]));
                covered |= 1 << open[0].var | 1 << open[1].var;
            }
        }
    }
    let free = (0..inst.n).filter(|&q| covered >> q & 1 == 0).collect();
    MdsLayout { mds, partial: pairs, free }
}

/// γ-tagged programs, one per disjoint-set clause, built from the terms
/// commuting with its neighbourhood (and with every disjoint or partial
/// constraint touching the same variables).
pub fn symcov_programs(inst: &SatInstance, mds: &[usize], partial: &[(usize, [Literal; 2])], cfg: &AnsatzConfig) -> Result<Vec<(usize, MixerProgram)>> {
    if cfg.locality < 2 {
        return Err(Error::InvalidInput("SymCov needs locality ≥ 2".into()));
    }
    let mut out = Vec::new();
    for &d in mds {
        let hood = neighborhood(inst, d)?;
        let union = hood.iter().fold(0u64, |m, &j| m | inst.clauses[j].var_mask());
        let vars: Vec<usize> = (0..inst.n).filter(|&q| union >> q & 1 == 1).collect();
        let local = |q: usize| vars.binary_search(&q).ok();
        let mut rows: Vec<usize> = hood.clone();
        for &e in mds {
            if !rows.contains(&e) && inst.clauses[e].var_mask() & union != 0 {
                rows.push(e);
            }
        }
        let mut cons = Vec::new();
        for &j in &rows {
            let mut c = vec![0i64; vars.len()];
            for l in &inst.clauses[j].lits {
                if let Some(k) = local(l.var) {
                    c[k] = l.pol as i64;
                }
            }
            cons.push(LinearConstraint::new(c, 0)?);
        }
        let l = cfg.locality.min(vars.len());
        let terms = search_linear(vars.len(), &cons, &SearchConfig::new(l))?;
        let partials: Vec<PolyConstraint> = partial
            .iter()
            .filter(|(_, [a, b])| union >> a.var & 1 == 1 || union >> b.var & 1 == 1)
            .map(|(_, [a, b])| partial_constraint(inst.n, a, b))
            .collect::<Result<_>>()?;
        let spread = |m: u64| (0..vars.len()).filter(|k| m >> k & 1 == 1).fold(0u64, |acc, k| acc | 1 << vars[k]);
        let mut global = Vec::with_capacity(terms.len());
        for p in terms {
            let t = Term::new(inst.n, 0, 0, spread(p.term.v), spread(p.term.w))?;
            let gp = HermitianPair::new(p.alpha, t);
            if partials.iter().all(|c| commutes_poly(&gp, c)) {
                global.push(gp);
            }
        }
        let coll = select_generators(&global, cfg.reduce_generators);
        out.push((d, compile_mixer(inst.n, &coll, AngleTag::Gamma)?));
    }
    Ok(out)
}

pub fn build_ansatz(inst: &SatInstance, kind: AnsatzKind, cfg: &AnsatzConfig) -> Result<AnsatzSpec> {
    let n = inst.n;
    if kind == AnsatzKind::X {
        return Ok(AnsatzSpec {
            kind,
            n,
            phase_clauses: (0..inst.clauses.len()).collect(),
            mixer: crate::mixer_compile::prefab_x_mixer(n)?,
            symcov: None,
            initial_state: InitialState::Uniform,
            uses_partial_mixers: false,
            mds: Vec::new(),
            partial: Vec::new(),
        });
    }
    if kind == AnsatzKind::MdsSymcov && cfg.locality < 2 {
        return Err(Error::InvalidInput("SymCov needs locality ≥ 2".into()));
    }
    let use_partial = cfg.partial_mixers.unwrap_or(kind == AnsatzKind::MdsSymcov);
    let layout = mds_layout(inst, use_partial);
    let mut layer = Vec::new();
    let mut factors = Vec::new();
    for &i in &layout.mds.clauses {
        let c = &inst.clauses[i];
        let qubits = c.vars().to_vec();
        let states = clause_solutions(c).to_vec();
        layer.push(Diffusor::Superposition(StateDiffusor::new(qubits.clone(), states.clone(), AngleTag::Beta)?));
        factors.push(StateFactor { qubits, states });
    }
    for (_, [a, b]) in &layout.partial {
        let qubits = vec![a.var, b.var];
        let states = partial_states(a, b);
        layer.push(Diffusor::Superposition(StateDiffusor::new(qubits.clone(), states.clone(), AngleTag::Beta)?));
        factors.push(StateFactor { qubits, states });
    }
    for &q in &layout.free {
        layer.push(Diffusor::Pattern(build_p(0, 0, 1 << q, 0)?));
        factors.push(StateFactor { qubits: vec![q], states: vec![0, 1] });
    }
    let symcov = if kind == AnsatzKind::MdsSymcov {
        let mut prog = MixerProgram::empty(n);
        for (_, p) in symcov_programs(inst, &layout.mds.clauses, &layout.partial, cfg)? {
            prog.append(p);
        }
        Some(prog)
    } else {
        None
    };
    Ok(AnsatzSpec {
        kind,
        n,
        phase_clauses: (0..inst.clauses.len()).filter(|i| !layout.mds.clauses.contains(i)).collect(),
        mixer: MixerProgram { n, layers: if layer.is_empty() { Vec::new() } else { vec![layer] } },
        symcov,
        initial_state: InitialState::Product { factors },
        uses_partial_mixers: use_partial,
        mds: layout.mds.clauses,
        partial: layout.partial.iter().map(|(i, [a, b])| (*i, [a.var, b.var])).collect(),
    })
}

/// The worked example: 9 variables, 3 clauses, variables 2, 6, 8 unused
/// (1-based names x1'..x9' map to indices 0..8).
pub fn example_instance() -> SatInstance {
    let lit = |var: usize, pol: i8| Literal { var, pol };
    let clauses = vec![
        Clause::new([lit(0, -1), lit(2, 1), lit(4, -1)]).unwrap(),
        Clause::new([lit(3, 1), lit(4, 1), lit(6, 1)]).unwrap(),
        Clause::new([lit(3, -1), lit(6, -1), lit(8, 1)]).unwrap(),
    ];
    SatInstance { n: 9, clauses, seed: 0 }
}
