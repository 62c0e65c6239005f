//! Angle training (family grid sweep, stochastic finite differences),
//! benchmark runs with quartile summaries, and exponential curve fits.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::mix_seed;
use crate::qaoa_engine::{Prepared, Schedule};
use crate::sat1in3::{build_ansatz, generate_satisfiable, reduce, AnsatzConfig, AnsatzKind, SatInstance};
use crate::MAX_ENUM_QUBITS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Constant,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFamily {
    pub kind: FamilyKind,
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl ScheduleFamily {
    /// CONSTANT repeats each scalar; LINEAR ramps α up to `a` and β (and γ)
    /// down from `b` (`c`).
    pub fn expand(&self, p: usize) -> Schedule {
        let up = |s: f64| -> Vec<f64> {
            match self.kind {
                FamilyKind::Constant => vec![s; p],
                FamilyKind::Linear => (1..=p).map(|j| s * j as f64 / p as f64).collect(),
            }
        };
        let down = |s: f64| -> Vec<f64> {
            match self.kind {
                FamilyKind::Constant => vec![s; p],
                FamilyKind::Linear => (1..=p).map(|j| s * (p - j + 1) as f64 / p as f64).collect(),
            }
        };
        Schedule { p, alpha: up(self.a), beta: down(self.b), gamma: self.c.map(down) }
    }
}

/// Mean success over a set of training items.
pub trait Objective: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn eval(&self, items: &[usize], schedule: &Schedule) -> Result<f64>;

    fn eval_all(&self, schedule: &Schedule) -> Result<f64> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.eval(&all, schedule)
    }
}

/// Reduced instances bound to one ansatz kind.
#[derive(Clone, Debug)]
pub struct TrainSet {
    pub kind: AnsatzKind,
    pub items: Vec<Prepared>,
}

impl TrainSet {
    pub fn new(instances: &[SatInstance], kind: AnsatzKind, cfg: &AnsatzConfig) -> Result<Self> {
        let items = instances
            .par_iter()
            .map(|inst| {
                let (red, _) = reduce(inst);
                Prepared::new(&red, build_ansatz(&red, kind, cfg)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainSet { kind, items })
    }
}

impl Objective for TrainSet {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn eval(&self, items: &[usize], schedule: &Schedule) -> Result<f64> {
        if items.is_empty() {
            return Err(Error::InvalidInput("empty evaluation batch".into()));
        }
        // collect then sum in order so results do not depend on thread scheduling
        let vals = items.par_iter().map(|&i| self.items[i].success(schedule)).collect::<Result<Vec<f64>>>()?;
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        if mean.is_finite() {
            Ok(mean)
        } else {
            Err(Error::NonFinite)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub a_count: usize,
    pub b_count: usize,
    pub kinds: Vec<FamilyKind>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { a_range: (0.0, 0.2), b_range: (0.0, 0.05), a_count: 10, b_count: 10, kinds: vec![FamilyKind::Constant, FamilyKind::Linear] }
    }
}

fn linspace((lo, hi): (f64, f64), count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub family: ScheduleFamily,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: Schedule,
    pub family: ScheduleFamily,
    pub value: f64,
    pub surface: Vec<GridPoint>,
}

/// Mean-success argmax over both family kinds. Ties go to smaller a, then
/// smaller b, then CONSTANT.
pub fn grid_sweep(obj: &dyn Objective, p: usize, with_gamma: bool, grid: &GridSpec) -> Result<GridResult> {
    if obj.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let bad_range = |(lo, hi): (f64, f64)| !(lo.is_finite() && hi.is_finite() && lo <= hi);
    if grid.a_count == 0 || grid.b_count == 0 || grid.kinds.is_empty() || bad_range(grid.a_range) || bad_range(grid.b_range) {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let mut families = Vec::new();
    for &a in &linspace(grid.a_range, grid.a_count) {
        for &b in &linspace(grid.b_range, grid.b_count) {
            for &kind in &grid.kinds {
                families.push(ScheduleFamily { kind, a, b, c: with_gamma.then_some(0.0) });
            }
        }
    }
    let surface = families
        .par_iter()
        .map(|f| obj.eval_all(&f.expand(p)).map(|value| GridPoint { family: *f, value }))
        .collect::<Result<Vec<_>>>()?;
    let best = surface
        .iter()
        .fold(None::<&GridPoint>, |acc, pt| match acc {
            Some(b) if b.value >= pt.value => Some(b),
            _ => Some(pt),
        })
        .expect("grid is nonempty");
    Ok(GridResult { best: best.family.expand(p), family: best.family, value: best.value, surface })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub steps: usize,
    pub epsilon: f64,
    /// Step size at step 1; decays as 1/√step.
    pub rate: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { steps: 5000, epsilon: 1e-4, rate: 0.05, batch: 8, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdResult {
    pub last: Schedule,
    pub best: Schedule,
    pub best_value: f64,
    /// Best full-set objective after each step (index 0 is the start).
    pub history: Vec<f64>,
}

/// Central-difference gradient of the batch mean.
pub fn fd_gradient(obj: &dyn Objective, items: &[usize], schedule: &Schedule, epsilon: f64) -> Result<Vec<f64>> {
    let theta = schedule.params();
    (0..theta.len())
        .into_par_iter()
        .map(|k| {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[k] += epsilon;
            minus[k] -= epsilon;
            let hi = obj.eval(items, &schedule.with_params(&plus)?)?;
            let lo = obj.eval(items, &schedule.with_params(&minus)?)?;
            Ok((hi - lo) / (2.0 * epsilon))
        })
        .collect()
}

pub fn fd_gradient_ascent(obj: &dyn Objective, init: &Schedule, cfg: &FdConfig) -> Result<FdResult> {
    if obj.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if !(cfg.epsilon > 0.0 && cfg.rate.is_finite()) || cfg.batch == 0 {
        return Err(Error::InvalidInput("fd config needs epsilon > 0, finite rate and batch ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = init.clone();
    let mut best = init.clone();
    let mut best_value = obj.eval_all(init)?;
    let mut history = vec![best_value];
    let batch = cfg.batch.min(obj.len());
    for step in 1..=cfg.steps {
        let mut items = sample(&mut rng, obj.len(), batch).into_vec();
        items.sort_unstable();
        let grad = fd_gradient(obj, &items, &current, cfg.epsilon)?;
        let lr = cfg.rate / (step as f64).sqrt();
        let theta: Vec<f64> = current.params().iter().zip(&grad).map(|(t, g)| t + lr * g).collect();
        current = current.with_params(&theta)?;
        let value = obj.eval_all(&current)?;
        if value > best_value {
            best_value = value;
            best = current.clone();
        }
        history.push(best_value);
    }
    Ok(FdResult { last: current, best, best_value, history })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub grid: GridSpec,
    pub fd: FdConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { grid: GridSpec::default(), fd: FdConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub kind: AnsatzKind,
    pub grid_family: ScheduleFamily,
    pub grid_value: f64,
    pub schedule: Schedule,
    pub value: f64,
}

/// Grid sweep over (a, b) with γ = 0, then finite-difference refinement of
/// every angle; returns the best-seen schedule.
pub fn train(set: &TrainSet, p: usize, cfg: &TrainConfig) -> Result<TrainResult> {
    let with_gamma = set.kind == AnsatzKind::MdsSymcov;
    let grid = grid_sweep(set, p, with_gamma, &cfg.grid)?;
    let fd = fd_gradient_ascent(set, &grid.best, &cfg.fd)?;
    Ok(TrainResult { kind: set.kind, grid_family: grid.family, grid_value: grid.value, schedule: fd.best, value: fd.best_value })
}

/// `count` satisfiable instances of size `n` from deterministic sub-seeds.
pub fn instances(n: usize, count: usize, seed0: u64) -> Result<Vec<SatInstance>> {
    check_cap("benchmark size", n, MAX_ENUM_QUBITS)?;
    let base = mix_seed(seed0, n as u64);
    (0..count as u64).into_par_iter().map(|k| generate_satisfiable(n, mix_seed(base, k)).map(|(inst, _)| inst)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub n: usize,
    pub seed: u64,
    pub kind: AnsatzKind,
    pub p: usize,
    pub success: f64,
}

pub fn benchmark(sizes: &[usize], count: usize, kind: AnsatzKind, schedule: &Schedule, cfg: &AnsatzConfig, seed0: u64) -> Result<Vec<BenchmarkRecord>> {
    let mut out = Vec::with_capacity(sizes.len() * count);
    for &n in sizes {
        let insts = instances(n, count, seed0)?;
        let recs = insts
            .par_iter()
            .map(|inst| {
                let (red, _) = reduce(inst);
                let prep = Prepared::new(&red, build_ansatz(&red, kind, cfg)?)?;
                Ok(BenchmarkRecord { n, seed: inst.seed, kind, p: schedule.p, success: prep.success(schedule)? })
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(recs);
    }
    Ok(out)
}

pub fn records_to_csv(records: &[BenchmarkRecord]) -> String {
    let mut s = String::from("n,seed,kind,p,success\n");
    for r in records {
        let _ = writeln!(s, "{},{},{},{},{}", r.n, r.seed, r.kind.name(), r.p, r.success);
    }
    s
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub kind: AnsatzKind,
    pub p: usize,
    pub sizes: Vec<SizeSummary>,
    pub fit: Option<CurveFit>,
}

/// Per-kind, per-size quartiles and a fit of inverse median (or mean)
/// success against n.
pub fn summarize(records: &[BenchmarkRecord], use_mean: bool) -> Vec<KindSummary> {
    let mut kinds: Vec<(AnsatzKind, usize)> = Vec::new();
    for r in records {
        if !kinds.contains(&(r.kind, r.p)) {
            kinds.push((r.kind, r.p));
        }
    }
    kinds
        .into_iter()
        .map(|(kind, p)| {
            let mut ns: Vec<usize> = records.iter().filter(|r| r.kind == kind && r.p == p).map(|r| r.n).collect();
            ns.sort_unstable();
            ns.dedup();
            let sizes: Vec<SizeSummary> = ns
                .into_iter()
                .map(|n| {
                    let mut v: Vec<f64> = records.iter().filter(|r| r.kind == kind && r.p == p && r.n == n).map(|r| r.success).collect();
                    v.sort_by(f64::total_cmp);
                    SizeSummary {
                        n,
                        count: v.len(),
                        median: quantile(&v, 0.5),
                        q1: quantile(&v, 0.25),
                        q3: quantile(&v, 0.75),
                        mean: v.iter().sum::<f64>() / v.len() as f64,
                    }
                })
                .collect();
            let pts: Vec<(f64, f64)> = sizes.iter().map(|s| (s.n as f64, 1.0 / if use_mean { s.mean } else { s.median })).collect();
            KindSummary { kind, p, sizes, fit: fit_exponential(&pts).ok() }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFit {
    pub a: f64,
    pub b: f64,
    pub mse: f64,
    /// MSE of the log-linear starting point.
    pub seed_mse: f64,
}

fn mse(points: &[(f64, f64)], a: f64, b: f64) -> f64 {
    points.iter().map(|&(n, y)| (a * b.powf(n) - y).powi(2)).sum::<f64>() / points.len() as f64
}

/// Fits y = A·Bⁿ minimizing MSE in the original scale: log-linear least
/// squares, then Levenberg–Marquardt steps accepted only when MSE drops.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<CurveFit> {
    if points.iter().any(|&(n, y)| !n.is_finite() || !y.is_finite() || y <= 0.0) {
        return Err(Error::DegenerateFit("ordinates must be positive and finite".into()));
    }
    let Some(&(n0, y0)) = points.first() else {
        return Err(Error::DegenerateFit("no points".into()));
    };
    if points.iter().all(|&(n, _)| n == n0) {
        return Err(Error::DegenerateFit("need at least two distinct n".into()));
    }
    let k = points.len() as f64;
    let nbar = points.iter().map(|p| p.0).sum::<f64>() / k;
    // offsets from the first point keep constant data exactly flat
    let l0 = y0.ln();
    let dl: Vec<f64> = points.iter().map(|&(_, y)| y.ln() - l0).collect();
    let sxx: f64 = points.iter().map(|&(n, _)| (n - nbar).powi(2)).sum();
    let sxy: f64 = points.iter().zip(&dl).map(|(&(n, _), d)| (n - nbar) * d).sum();
    let slope = sxy / sxx;
    let intercept = l0 + dl.iter().sum::<f64>() / k - slope * nbar;
    let (mut a, mut b) = (intercept.exp(), slope.exp());
    let seed_mse = mse(points, a, b);
    let mut cur = seed_mse;
    let mut lambda = 1e-3;
    for _ in 0..10_000 {
        let (mut jtj, mut jtr) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
        for &(n, y) in points {
            let bn = b.powf(n);
            let r = a * bn - y;
            let j = [bn, a * n * b.powf(n - 1.0)];
            for p in 0..2 {
                jtr[p] += j[p] * r;
                for q in 0..2 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        let grad_norm = 2.0 / k * jtr[0].hypot(jtr[1]);
        if grad_norm <= 1e-10 || lambda > 1e30 {
            break;
        }
        let m = [[jtj[0][0] * (1.0 + lambda), jtj[0][1]], [jtj[1][0], jtj[1][1] * (1.0 + lambda)]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let da = -(m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det;
        let db = -(m[0][0] * jtr[1] - m[1][0] * jtr[0]) / det;
        let (na, nb) = (a + da, b + db);
        let next = if det.is_finite() && det != 0.0 && nb > 0.0 { mse(points, na, nb) } else { f64::INFINITY };
        if next < cur {
            (a, b, cur) = (na, nb, next);
            lambda = (lambda / 10.0).max(1e-15);
        } else {
            lambda *= 10.0;
        }
    }
    Ok(CurveFit { a, b, mse: cur, seed_mse })
}
