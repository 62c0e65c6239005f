use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::json;

use symmix::commutator_search::{search_linear, search_poly, SearchConfig};
use symmix::constraints::{Constraint, LinearConstraint, PolyConstraint};
use symmix::generator_reduction::{select_generators, GeneratorCollection};
use symmix::mixer_compile::{compile_driver, compile_mixer, AngleTag};
use symmix::qaoa_engine::{Prepared, Schedule};
use symmix::quad_condition::{check_pair, IsingConstraint};
use symmix::sat1in3::{brute_solutions, build_ansatz, find_mds, generate, generate_satisfiable, reduce, AnsatzConfig, AnsatzKind, AnsatzSpec, SatInstance};
use symmix::term_algebra::{format_hex, HermitianPair};
use symmix::train_bench::{
    benchmark, fit_exponential, instances, records_to_csv, summarize, train, BenchmarkRecord, FdConfig, GridSpec, TrainConfig, TrainResult, TrainSet,
};

use crate::manifest::Session;
use crate::{AnsatzOpts, Cli, Command, FdOpts, KindArg, TagArg};

const MAX_AMPLITUDE_DUMP: usize = 12;

impl AnsatzOpts {
    fn config(&self) -> AnsatzConfig {
        let partial_mixers = match (self.partial_mixers, self.no_partial_mixers) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        };
        AnsatzConfig { locality: self.locality, partial_mixers, reduce_generators: !self.no_reduce }
    }
}

impl FdOpts {
    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            grid: GridSpec {
                a_range: (0.0, self.grid_a_max),
                b_range: (0.0, self.grid_b_max),
                a_count: self.grid_count,
                b_count: self.grid_count,
                ..GridSpec::default()
            },
            fd: FdConfig { steps: self.steps, epsilon: self.epsilon, rate: self.rate, batch: self.batch, seed },
        }
    }
}

/// A schedule file holds either a bare schedule or a `train` result.
#[derive(Deserialize)]
#[serde(untagged)]
enum ScheduleFile {
    Trained(TrainResult),
    Plain(Schedule),
}

impl ScheduleFile {
    fn schedule(self) -> Schedule {
        match self {
            ScheduleFile::Trained(t) => t.schedule,
            ScheduleFile::Plain(s) => s,
        }
    }
}

/// Drops unused variables, noting it on stderr when anything changed.
fn reduced(inst: &SatInstance) -> SatInstance {
    let (red, _) = reduce(inst);
    if red.n != inst.n {
        eprintln!("note: dropped {} unused variables ({} → {})", inst.n - red.n, inst.n, red.n);
    }
    red
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let mut s = Session::new(cli.json_pretty);
    let name = cli.command.name();
    match &cli.command {
        Command::Gen(a) => {
            let inst = if a.satisfiable {
                let (inst, attempts) = generate_satisfiable(a.n, a.seed)?;
                s.details = Some(json!({ "attempts": attempts }));
                inst
            } else {
                generate(a.n, a.seed)?
            };
            let inst = if a.drop_unused { reduce(&inst).0 } else { inst };
            s.finish(name, a, a.out.out.as_ref(), &inst)
        }
        Command::Solve(a) => {
            let inst: SatInstance = s.read_json(&a.instance)?;
            let sols = brute_solutions(&inst)?;
            let out = json!({ "n": inst.n, "count": sols.len(), "solutions": sols.iter().map(|&x| format_hex(x)).collect::<Vec<_>>() });
            s.finish(name, a, a.out.out.as_ref(), &out)
        }
        Command::Mds(a) => {
            let inst: SatInstance = s.read_json(&a.instance)?;
            s.finish(name, a, a.out.out.as_ref(), &find_mds(&inst))
        }
        Command::Ansatz(a) => {
            let inst = reduced(&s.read_json(&a.instance)?);
            let spec = build_ansatz(&inst, a.kind.into(), &a.opts.config())?;
            s.finish(name, a, a.out.out.as_ref(), &spec)
        }
        Command::Search(a) => {
            let cons: Vec<Constraint> = s.read_json(&a.constraints)?;
            if cons.is_empty() {
                bail!("no constraints given");
            }
            let n = a.n.unwrap_or_else(|| cons.iter().map(|c| c.n()).max().unwrap_or(0));
            let mut cfg = SearchConfig::new(a.locality);
            cfg.require_offdiagonal = !a.include_diagonal;
            let all_linear = cons.iter().all(|c| matches!(c, Constraint::Linear(_)));
            let linear = match a.algorithm {
                crate::Algorithm::Auto => all_linear,
                crate::Algorithm::Linear if !all_linear => bail!("--algorithm linear needs every constraint in {{\"c\", \"rhs\"}} form"),
                crate::Algorithm::Linear => true,
                crate::Algorithm::Poly => false,
            };
            let terms = if linear {
                let lin = cons
                    .iter()
                    .map(|c| match c {
                        Constraint::Linear(l) if l.n() <= n => {
                            let mut coeffs = l.coefficients().to_vec();
                            coeffs.resize(n, 0);
                            Ok(LinearConstraint::new(coeffs, l.rhs())?)
                        }
                        _ => Err(anyhow!("constraint wider than n = {n}")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                search_linear(n, &lin, &cfg)?
            } else {
                let poly = cons.iter().map(|c| c.to_poly().widen(n)).collect::<symmix::Result<Vec<PolyConstraint>>>()?;
                search_poly(n, &poly, &cfg)?
            };
            s.details = Some(json!({ "count": terms.len() }));
            s.finish(name, a, a.out.out.as_ref(), &terms)
        }
        Command::Reduce(a) => {
            let terms: Vec<HermitianPair> = s.read_json(&a.terms)?;
            s.finish(name, a, a.out.out.as_ref(), &select_generators(&terms, !a.no_reduce))
        }
        Command::Compile(a) => {
            let coll: GeneratorCollection = s.read_json(&a.collection)?;
            let n = match (a.n, coll.members().next()) {
                (Some(n), _) => n,
                (None, Some(g)) => g.n(),
                (None, None) => bail!("empty collection: pass --n"),
            };
            if a.driver {
                s.finish(name, a, a.out.out.as_ref(), &compile_driver(n, &coll, None)?)
            } else {
                let tag = match a.tag {
                    TagArg::Beta => AngleTag::Beta,
                    TagArg::Gamma => AngleTag::Gamma,
                };
                s.finish(name, a, a.out.out.as_ref(), &compile_mixer(n, &coll, tag)?)
            }
        }
        Command::Quadcheck(a) => {
            let c: IsingConstraint = s.read_json(&a.constraint)?;
            let terms: Vec<HermitianPair> = s.read_json(&a.terms)?;
            let mut report = Vec::with_capacity(terms.len());
            for t in &terms {
                let parts = check_pair(t, &c)?;
                let pass = parts.iter().all(|(_, q)| q.passes());
                let mut failing: Vec<&str> = parts.iter().flat_map(|(_, q)| q.failing()).collect();
                failing.sort_unstable();
                failing.dedup();
                eprintln!("{}: {}{}", t.term, if pass { "pass" } else { "fail" }, if pass { String::new() } else { format!(" ({})", failing.join(", ")) });
                report.push(json!({
                    "term": t,
                    "passes": pass,
                    "failing": failing,
                    "components": parts.iter().map(|(z, q)| json!({ "zterm": z.term, "check": q })).collect::<Vec<_>>(),
                }));
            }
            s.finish(name, a, a.out.out.as_ref(), &report)
        }
        Command::Run(a) => {
            let inst = reduced(&s.read_json(&a.instance)?);
            let spec: AnsatzSpec = s.read_json(&a.ansatz)?;
            let sched = s.read_json::<ScheduleFile>(&a.schedule)?.schedule();
            let prep = Prepared::new(&inst, spec).context("ansatz does not match the (reduced) instance")?;
            let r = prep.run(&sched)?;
            let mut out = json!({ "n": inst.n, "p": sched.p, "success": r.success, "norms": r.norms });
            if a.amplitudes {
                if inst.n > MAX_AMPLITUDE_DUMP {
                    bail!("amplitude dump is limited to n ≤ {MAX_AMPLITUDE_DUMP}");
                }
                out["amplitudes"] = json!(r.state.amplitudes().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
            }
            s.finish(name, a, a.out.out.as_ref(), &out)
        }
        Command::Train(a) => {
            let insts = instances(a.size, a.count, a.seed)?;
            let set = TrainSet::new(&insts, a.kind.into(), &a.opts.config())?;
            let r = train(&set, a.p, &a.fd.train_config(a.seed))?;
            s.finish(name, a, a.out.out.as_ref(), &r)
        }
        Command::Bench(a) => {
            let mut records: Vec<BenchmarkRecord> = Vec::new();
            let cfg = a.opts.config();
            for spec in &a.schedules {
                let (kind, path) = spec.split_once('=').ok_or_else(|| anyhow!("--schedule expects KIND=FILE, got {spec:?}"))?;
                let kind: AnsatzKind = KindArg::from_str(kind, true).map_err(|e| anyhow!("{e}"))?.into();
                let sched = s.read_json::<ScheduleFile>(Path::new(path))?.schedule();
                if a.retrain {
                    for &n in &a.sizes {
                        let set = TrainSet::new(&instances(n, a.train_count, a.train_seed)?, kind, &cfg)?;
                        let trained = train(&set, sched.p, &a.fd.train_config(a.train_seed))?;
                        records.extend(benchmark(&[n], a.count, kind, &trained.schedule, &cfg, a.seed)?);
                    }
                } else {
                    records.extend(benchmark(&a.sizes, a.count, kind, &sched, &cfg, a.seed)?);
                }
            }
            s.write_file(&a.csv, &records_to_csv(&records))?;
            s.finish(name, a, a.out.out.as_ref(), &summarize(&records, a.mean))
        }
        Command::Fit(a) => {
            let bytes = s.read(&a.input)?;
            let text = String::from_utf8(bytes).context("input is not UTF-8")?;
            if text.trim_start().starts_with('[') {
                let pts: Vec<(f64, f64)> = serde_json::from_str(&text).context("expected a JSON array of [n, y] pairs")?;
                s.finish(name, a, a.out.out.as_ref(), &fit_exponential(&pts)?)
            } else {
                let mut rdr = csv::Reader::from_reader(text.as_bytes());
                let records = rdr.deserialize().collect::<std::result::Result<Vec<BenchmarkRecord>, _>>().context("parsing benchmark CSV")?;
                #[derive(Serialize)]
                struct KindFit {
                    kind: AnsatzKind,
                    p: usize,
                    fit: Option<symmix::train_bench::CurveFit>,
                }
                let fits: Vec<KindFit> = summarize(&records, a.mean).into_iter().map(|k| KindFit { kind: k.kind, p: k.p, fit: k.fit }).collect();
                s.finish(name, a, a.out.out.as_ref(), &fits)
            }
        }
    }
}
