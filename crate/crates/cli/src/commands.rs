use std::fmt;
use std::io::Write;

use forest_core::enumeration::{breadth_first_tree, enumerate_separating_forests, enumerate_spanning_trees};
use forest_core::markov::{absorption_distribution, absorption_estimate, equilibrium_flow, expected_hitting_time};
use forest_core::oracle::{branch_currents, fundamental_hitting, injected_from_voltages, solve_dirichlet, solve_injected};
use forest_core::sampler::{worker_rng, ForestSampler, SamplerConfig, SpanningTreeSampler};
use forest_core::theorems::{
    iv_estimate, iv_exact, ji_estimate, ji_exact, tree_current_distribution, vj_estimate_all, vj_exact_all,
    vv_estimate_all, vv_exact_all,
};
use forest_core::{
    to_markov_chain, CurrentMatrix, EstimateReport, FixedVoltages, InjectedCurrents, McConfig, Network,
};
use serde_json::{json, Map, Value};

use crate::args::{
    Boundary, Common, EnumerateArgs, EstimateArgs, MarkovAction, MarkovArgs, SampleArgs, SolveArgs, Theorem,
    TheoremArgs,
};
use crate::output::{num, Output, PairValue};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(forest_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(forest_core::Error::SingularSystem | forest_core::Error::WalkBudgetExceeded(_)) => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<forest_core::Error> for CliError {
    fn from(e: forest_core::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn load(path: &std::path::Path) -> CliResult<Network> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(Network::from_json(&text)?)
}

/// Parses `a=1.0,b=-2` into name/value pairs.
pub fn parse_assignments(spec: &str) -> CliResult<Vec<(String, f64)>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("expected node=value, got `{item}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad number `{value}` for node `{name}`")))?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

fn parse_nodes(net: &Network, spec: &str) -> CliResult<Vec<usize>> {
    let names: Vec<&str> = spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return usage("node list is empty");
    }
    Ok(net.node_set(&names)?)
}

fn fixed_of(net: &Network, b: &Boundary) -> CliResult<FixedVoltages> {
    match (&b.fixed, &b.inject) {
        (Some(spec), None) => Ok(FixedVoltages::from_names(net, &parse_assignments(spec)?)?),
        _ => usage("this theorem needs --fixed (and no --inject)"),
    }
}

fn injection_of(net: &Network, b: &Boundary) -> CliResult<(InjectedCurrents, usize)> {
    match (&b.inject, &b.fixed) {
        (Some(spec), None) => {
            let j = InjectedCurrents::from_names(net, &parse_assignments(spec)?)?;
            let ground = match &b.ground {
                Some(name) => net.node(name)?,
                None => 0,
            };
            Ok((j, ground))
        }
        _ => usage("this theorem needs --inject (and no --fixed)"),
    }
}

fn named(net: &Network, values: &[f64]) -> Vec<(String, f64)> {
    values.iter().enumerate().map(|(k, &x)| (net.name(k).to_string(), x)).collect()
}

/// Node pairs `u < v` joined by at least one non-loop branch.
fn adjacent_pairs(net: &Network) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = net
        .branches()
        .iter()
        .filter(|b| !b.is_self_loop())
        .map(|b| (b.u.min(b.v), b.u.max(b.v)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

fn pair_values(net: &Network, value: impl Fn(usize, usize) -> f64, err: Option<&dyn Fn(usize, usize) -> f64>) -> Vec<PairValue> {
    adjacent_pairs(net)
        .into_iter()
        .map(|(u, v)| PairValue {
            branch: None,
            u: net.name(u).to_string(),
            v: net.name(v).to_string(),
            value: value(u, v),
            std_error: err.map(|f| f(u, v)),
        })
        .collect()
}

fn branch_values(net: &Network, currents: &CurrentMatrix) -> Vec<PairValue> {
    let per_branch = currents.per_branch.as_ref().expect("per-branch currents");
    net.branches()
        .iter()
        .map(|b| PairValue {
            branch: Some(b.id),
            u: net.name(b.u).to_string(),
            v: net.name(b.v).to_string(),
            value: per_branch[b.id],
            std_error: None,
        })
        .collect()
}

/// Normwise relative error `max|a - b| / max|b|`.
fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Largest deviation from the oracle in units of standard error; zero-error
/// components must match exactly.
fn max_z(est: &[f64], se: &[f64], oracle: &[f64]) -> f64 {
    est.iter().zip(se).zip(oracle).fold(0.0f64, |m, ((x, s), y)| {
        let d = (x - y).abs();
        m.max(if *s > 0.0 { d / s } else if d <= 1e-12 * (1.0 + y.abs()) { 0.0 } else { f64::INFINITY })
    })
}

fn append_exact_check(out: &mut Output, oracle: Output, ours: &[f64], truth: &[f64], tol: f64) {
    out.nested("oracle", oracle);
    let err = max_rel_err(ours, truth);
    out.scalar("max_rel_err", err);
    out.flag("check_passed", err <= tol);
}

fn append_estimate_check(out: &mut Output, oracle: Output, est: &[f64], se: &[f64], truth: &[f64]) {
    out.nested("oracle", oracle);
    out.scalar("max_rel_err", max_rel_err(est, truth));
    let z = max_z(est, se, truth);
    out.scalar("max_z", z);
    out.flag("check_passed", z <= 4.0);
}

fn emit(text: &str) -> CliResult<()> {
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::Usage(format!("write failed: {e}")))
}

pub fn solve(args: &SolveArgs) -> CliResult<()> {
    let net = load(&args.common.network)?;
    let b = &args.boundary;
    let v = match (&b.fixed, &b.inject) {
        (Some(_), None) => solve_dirichlet(&net, &fixed_of(&net, b)?)?,
        (None, Some(_)) => {
            let (j, ground) = injection_of(&net, b)?;
            solve_injected(&net, &j, ground)?
        }
        _ => return usage("solve needs exactly one of --fixed or --inject"),
    };
    let mut out = Output::new();
    out.node_map("voltages", &named(&net, &v.values));
    out.pairs("currents", &branch_values(&net, &branch_currents(&net, &v)));
    emit(&out.render(args.common.format))
}

/// Values of the chosen theorem on the full node set, plus the matching oracle values.
struct TheoremRun {
    key: &'static str,
    /// Entries emitted, as node indices (vectors) or node pairs (currents).
    nodes: Vec<usize>,
    pairs: bool,
    oracle: Vec<f64>,
}

fn oracle_for(net: &Network, theorem: Theorem, b: &Boundary) -> CliResult<TheoremRun> {
    let n = net.node_count();
    Ok(match theorem {
        Theorem::Vj => {
            let fixed = fixed_of(net, b)?;
            let v = solve_dirichlet(net, &fixed)?;
            let j = injected_from_voltages(net, &v.values);
            let nodes = fixed.nodes();
            TheoremRun { key: "injected", oracle: nodes.iter().map(|&k| j[k]).collect(), nodes, pairs: false }
        }
        Theorem::Vv => {
            let v = solve_dirichlet(net, &fixed_of(net, b)?)?;
            TheoremRun { key: "voltages", nodes: (0..n).collect(), pairs: false, oracle: v.values }
        }
        Theorem::Ji => {
            let (j, ground) = injection_of(net, b)?;
            let i = branch_currents(net, &solve_injected(net, &j, ground)?);
            let oracle = adjacent_pairs(net).iter().map(|&(u, v)| i.get(u, v)).collect();
            TheoremRun { key: "currents", nodes: Vec::new(), pairs: true, oracle }
        }
        Theorem::Iv => {
            let (j, ground) = injection_of(net, b)?;
            let v = solve_injected(net, &j, ground)?;
            TheoremRun { key: "voltages", nodes: (0..n).collect(), pairs: false, oracle: v.values }
        }
    })
}

fn emit_values(out: &mut Output, net: &Network, run: &TheoremRun, key: &str, values: &[f64]) {
    if run.pairs {
        let pairs = adjacent_pairs(net);
        let list: Vec<PairValue> = pairs
            .iter()
            .zip(values)
            .map(|(&(u, v), &x)| PairValue {
                branch: None,
                u: net.name(u).to_string(),
                v: net.name(v).to_string(),
                value: x,
                std_error: None,
            })
            .collect();
        out.pairs(key, &list);
    } else {
        let entries: Vec<(String, f64)> =
            run.nodes.iter().zip(values).map(|(&k, &x)| (net.name(k).to_string(), x)).collect();
        out.node_map(key, &entries);
    }
}

/// A consistent current distribution for `iv`: the injection routed along the breadth-first tree.
fn routed_currents(net: &Network, j: &InjectedCurrents) -> CliResult<CurrentMatrix> {
    Ok(tree_current_distribution(net, &breadth_first_tree(net), j)?)
}

fn theorem_name(t: Theorem) -> &'static str {
    match t {
        Theorem::Vj => "vj",
        Theorem::Vv => "vv",
        Theorem::Ji => "ji",
        Theorem::Iv => "iv",
    }
}

pub fn exact(args: &TheoremArgs) -> CliResult<()> {
    let net = load(&args.common.network)?;
    let b = &args.boundary;
    // validate the boundary shape before enumerating
    let reference = oracle_for(&net, args.theorem, b)?;
    let values: Vec<f64> = match args.theorem {
        Theorem::Vj => vj_exact_all(&net, &fixed_of(&net, b)?)?.into_iter().map(|(_, x)| x).collect(),
        Theorem::Vv => vv_exact_all(&net, &fixed_of(&net, b)?)?.values,
        Theorem::Ji => {
            let (j, _) = injection_of(&net, b)?;
            let i = ji_exact(&net, &j)?;
            adjacent_pairs(&net).iter().map(|&(u, v)| i.get(u, v)).collect()
        }
        Theorem::Iv => {
            let (j, ground) = injection_of(&net, b)?;
            iv_exact(&net, &routed_currents(&net, &j)?, ground)?.values
        }
    };
    let mut out = Output::new();
    out.text("theorem", theorem_name(args.theorem));
    emit_values(&mut out, &net, &reference, reference.key, &values);
    if args.check {
        let mut oracle = Output::new();
        emit_values(&mut oracle, &net, &reference, reference.key, &reference.oracle);
        append_exact_check(&mut out, oracle, &values, &reference.oracle, args.common.tol);
    }
    emit(&out.render(args.common.format))
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let t = &args.theorem;
    let net = load(&t.common.network)?;
    let b = &t.boundary;
    let mc = McConfig::new(args.mc.count, args.mc.seed).with_workers(args.mc.workers);
    let reference = oracle_for(&net, t.theorem, b)?;
    let report: EstimateReport = match t.theorem {
        Theorem::Vj => vj_estimate_all(&net, &fixed_of(&net, b)?, &mc)?,
        Theorem::Vv => vv_estimate_all(&net, &fixed_of(&net, b)?, &mc)?,
        Theorem::Ji => ji_estimate(&net, &injection_of(&net, b)?.0, &mc)?,
        Theorem::Iv => {
            let (j, ground) = injection_of(&net, b)?;
            iv_estimate(&net, &routed_currents(&net, &j)?, ground, &mc)?
        }
    };
    let n = net.node_count();
    let pick = |data: &[f64]| -> Vec<f64> {
        if reference.pairs {
            adjacent_pairs(&net).iter().map(|&(u, v)| data[u * n + v]).collect()
        } else {
            reference.nodes.iter().map(|&k| data[k]).collect()
        }
    };
    let (values, errors) = (pick(&report.values), pick(&report.std_error));
    let mut out = Output::new();
    out.text("theorem", theorem_name(t.theorem));
    if reference.pairs {
        let value = |u: usize, v: usize| report.values[u * n + v];
        let err = |u: usize, v: usize| report.std_error[u * n + v];
        out.pairs(reference.key, &pair_values(&net, value, Some(&err)));
    } else {
        emit_values(&mut out, &net, &reference, reference.key, &values);
        emit_values(&mut out, &net, &reference, "std_error", &errors);
    }
    out.integer("samples", report.samples);
    out.integer("seed", report.seed);
    out.integer("workers", report.workers as u64);
    if t.check {
        let mut oracle = Output::new();
        emit_values(&mut oracle, &net, &reference, reference.key, &reference.oracle);
        append_estimate_check(&mut out, oracle, &values, &errors, &reference.oracle);
    }
    emit(&out.render(t.common.format))
}

fn json_line(value: Value) -> String {
    serde_json::to_string(&value).expect("serializable") + "\n"
}

pub fn sample(args: &SampleArgs) -> CliResult<()> {
    let net = load(&args.network)?;
    let cfg = SamplerConfig::with_seed(args.seed);
    let mut rng = worker_rng(args.seed, 0);
    let mut text = String::new();
    match &args.roots {
        Some(spec) => {
            let sampler = ForestSampler::new(&net, &parse_nodes(&net, spec)?, &cfg)?;
            for _ in 0..args.count {
                text.push_str(&json_line(json!({ "branches": sampler.sample(&mut rng)?.branches() })));
            }
        }
        None => {
            let sampler = SpanningTreeSampler::new(&net, &cfg);
            for _ in 0..args.count {
                text.push_str(&json_line(json!({ "branches": sampler.sample_branches(&mut rng)? })));
            }
        }
    }
    emit(&text)
}

pub fn enumerate(args: &EnumerateArgs) -> CliResult<()> {
    let net = load(&args.network)?;
    let forests = match &args.roots {
        Some(spec) => enumerate_separating_forests(&net, &parse_nodes(&net, spec)?)?,
        None => enumerate_spanning_trees(&net)?
            .into_iter()
            .map(|(t, w)| Ok((t.rooted_at(&net, 0)?, w)))
            .collect::<forest_core::Result<Vec<_>>>()?,
    };
    let mut text = String::new();
    for (f, w) in forests {
        let mut block_of = Map::new();
        for k in 0..net.node_count() {
            block_of.insert(net.name(k).to_string(), Value::String(net.name(f.block_of(k)).to_string()));
        }
        text.push_str(&json_line(json!({ "branches": f.branches(), "weight": num(w), "block_of": block_of })));
    }
    emit(&text)
}

pub fn markov(args: &MarkovArgs) -> CliResult<()> {
    let Common { network, tol, format } = &args.common;
    let net = load(network)?;
    let chain = to_markov_chain(&net);
    let mut out = Output::new();
    match &args.action {
        MarkovAction::Hitting { start, roots } => {
            let start = net.node(start)?;
            let roots = parse_nodes(&net, roots)?;
            let tau = expected_hitting_time(&chain, start, &roots)?;
            out.scalar("tau", tau);
            if args.check {
                let truth = fundamental_hitting(&chain, start, &roots)?.tau;
                let mut oracle = Output::new();
                oracle.scalar("tau", truth);
                append_exact_check(&mut out, oracle, &[tau], &[truth], *tol);
            }
        }
        MarkovAction::Absorb { start, roots, estimate, seed, workers } => {
            let start = net.node(start)?;
            let roots = parse_nodes(&net, roots)?;
            let label = |list: &[f64]| -> Vec<(String, f64)> {
                roots.iter().zip(list).map(|(&r, &x)| (net.name(r).to_string(), x)).collect()
            };
            let truth = || -> CliResult<Vec<f64>> {
                Ok(fundamental_hitting(&chain, start, &roots)?.absorb.into_iter().map(|(_, p)| p).collect())
            };
            match estimate {
                Some(count) => {
                    let mc = McConfig::new(*count, *seed).with_workers(*workers);
                    let report = absorption_estimate(&chain, start, &roots, &mc)?;
                    out.node_map("absorb", &label(&report.values));
                    out.node_map("std_error", &label(&report.std_error));
                    out.integer("samples", report.samples);
                    out.integer("seed", report.seed);
                    out.integer("workers", report.workers as u64);
                    if args.check {
                        let truth = truth()?;
                        let mut oracle = Output::new();
                        oracle.node_map("absorb", &label(&truth));
                        append_estimate_check(&mut out, oracle, &report.values, &report.std_error, &truth);
                    }
                }
                None => {
                    let values: Vec<f64> =
                        absorption_distribution(&chain, start, &roots)?.into_iter().map(|(_, p)| p).collect();
                    out.node_map("absorb", &label(&values));
                    if args.check {
                        let truth = truth()?;
                        let mut oracle = Output::new();
                        oracle.node_map("absorb", &label(&truth));
                        append_exact_check(&mut out, oracle, &values, &truth, *tol);
                    }
                }
            }
        }
        MarkovAction::Flow { p0 } => {
            let mut dist = vec![0.0; net.node_count()];
            for (name, p) in parse_assignments(p0)? {
                dist[net.node(&name)?] += p;
            }
            let flow = equilibrium_flow(&chain, &dist)?;
            let ours: Vec<f64> = adjacent_pairs(&net).iter().map(|&(u, v)| flow.get(u, v)).collect();
            out.pairs("flow", &pair_values(&net, |u, v| flow.get(u, v), None));
            if args.check {
                let scaled = chain.network();
                let j: Vec<f64> = dist.iter().zip(chain.stationary()).map(|(p, pi)| p - pi).collect();
                let j = InjectedCurrents::new(scaled, j)?;
                let i = branch_currents(scaled, &solve_injected(scaled, &j, 0)?);
                let truth: Vec<f64> = adjacent_pairs(&net).iter().map(|&(u, v)| i.get(u, v)).collect();
                let mut oracle = Output::new();
                oracle.pairs("flow", &pair_values(&net, |u, v| i.get(u, v), None));
                append_exact_check(&mut out, oracle, &ours, &truth, *tol);
            }
        }
    }
    emit(&out.render(*format))
}
