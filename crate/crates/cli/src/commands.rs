use std::path::{Path, PathBuf};

use markov_ustat::bounds::{
    compute_tn, continuous_ergodicity, finite_bound_constants, mc_bound_constants, BoundConstants, BoundSettings,
    ConstantsBudget, Variant,
};
use markov_ustat::chain::{
    ergodicity_constants, finite_initial_law, simulate, ChainModel, ErgodicityConstants, FiniteChain, Initial,
    McBudget,
};
use markov_ustat::experiments::{
    identity_suite, rate_experiment, regeneration_suite, tail_experiment, IdentityReport, RatePlan, RegenerationReport,
    TailPlan,
};
use markov_ustat::kernels::{KernelFamily, PairWeight};
use markov_ustat::splitting::{block_sums, orlicz_norm_estimate, split_simulate, ORLICZ_MIN_SAMPLES};
use markov_ustat::ustat::{
    martingale_decomposition, tau_ap, tau_kendall, u_stat, wilcoxon_weighted, Centering, DecompositionResult,
    Normalization, CSV_HEADER,
};
use markov_ustat::{fmt_num, Error};
use serde::Serialize;

use crate::args::*;
use crate::config::{pick, pick_opt, RunConfig, RunParams};
use crate::error::CliError;
use crate::output::{to_json, OutputDir};

pub struct Outcome {
    pub code: u8,
    pub out: PathBuf,
}

pub fn run(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Constants(a) => constants_cmd(a),
        Command::Ustat(a) => ustat_cmd(a),
        Command::Decompose(a) => decompose_cmd(a),
        Command::Bounds(a) => bounds_cmd(a),
        Command::Split(a) => split_cmd(a),
        Command::Stats(s) => stats_cmd(s),
        Command::Verify(a) => verify_cmd(a),
        Command::Rate(a) => rate_cmd(a),
        Command::Tail(a) => tail_cmd(a),
    }
}

fn load(command: &str, config: Option<&Path>, out: Option<PathBuf>) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = RunConfig::load(config)?;
    Ok((cfg, out.unwrap_or_else(|| PathBuf::from("mcustat-out").join(command))))
}

/// Writes the resolved config first, then `files`.
fn emit(dir: PathBuf, resolved: &RunConfig, files: &[(&str, &str)]) -> Result<OutputDir, CliError> {
    let out = OutputDir::create(dir)?;
    out.write("resolved_config.toml", &resolved.to_toml()?)?;
    for (name, body) in files {
        out.write(name, body)?;
    }
    Ok(out)
}

fn done(out: OutputDir) -> Outcome {
    Outcome { code: 0, out: out.path }
}

fn nonempty<T>(v: Vec<T>) -> Option<Vec<T>> {
    if v.is_empty() {
        None
    } else {
        Some(v)
    }
}

fn parse_initial(s: &str) -> Result<Initial, CliError> {
    Ok(s.parse::<Initial>()?)
}

fn parse_centering(s: Option<String>) -> Result<Option<Centering>, CliError> {
    s.map(|s| s.parse::<Centering>().map_err(CliError::from)).transpose()
}

fn parse_normalization(s: Option<String>) -> Result<Option<Normalization>, CliError> {
    s.map(|s| match s.as_str() {
        "raw" => Ok(Normalization::Raw),
        "pairs-normalized" => Ok(Normalization::PairsNormalized),
        other => Err(CliError::Usage(format!("unknown normalization `{other}`"))),
    })
    .transpose()
}

fn parse_weight(s: Option<String>) -> Result<Option<PairWeight>, CliError> {
    s.map(|s| match s.as_str() {
        "one" => Ok(PairWeight::One),
        "inverse-lag" => Ok(PairWeight::InverseLag),
        "inverse-earlier" => Ok(PairWeight::InverseEarlier),
        other => match other.strip_prefix("constant:").and_then(|v| v.parse::<f64>().ok()) {
            Some(value) => Ok(PairWeight::Constant { value }),
            None => Err(CliError::Usage(format!("unknown weight `{other}`"))),
        },
    })
    .transpose()
}

/// Initial law from flag or config, default stationary.
fn initial_of(flag: Option<String>, p: &RunParams) -> Result<Initial, CliError> {
    parse_initial(&pick(flag, &p.initial, "stationary".into()))
}

fn finite<'a>(model: &'a ChainModel, what: &str) -> Result<&'a FiniteChain, CliError> {
    model
        .as_finite()
        .ok_or_else(|| Error::Unsupported(format!("{what} needs a finite chain, got a {} model", model.kind())).into())
}

fn rate_pair(l: Option<f64>, rho: Option<f64>) -> Result<Option<(f64, f64)>, CliError> {
    match (l, rho) {
        (Some(l), Some(rho)) => Ok(Some((l, rho))),
        (None, None) => Ok(None),
        _ => Err(CliError::Usage("rate_l and rate_rho must be given together".into())),
    }
}

fn state_function(f: Option<Vec<f64>>, chain: &FiniteChain) -> Result<Vec<f64>, CliError> {
    let s = chain.n_states();
    let f = f.unwrap_or_else(|| (0..s).map(|x| if x == 0 { 1.0 } else { 0.0 }).collect());
    if f.len() != s {
        return Err(Error::InvalidInput(format!("f has {} entries, the chain has {s} states", f.len())).into());
    }
    Ok(f)
}

fn simulate_cmd(a: SimulateArgs) -> Result<Outcome, CliError> {
    let (cfg, dir) = load("simulate", a.common.config.as_deref(), a.common.out)?;
    let p = &cfg.run;
    let seed = pick(a.common.seed, &p.seed, 0);
    let n = pick(a.n, &p.n, 100);
    let initial = initial_of(a.initial, p)?;
    let path = simulate(cfg.model()?, n, seed, &initial)?;
    let run = RunParams { seed: Some(seed), n: Some(n), initial: Some(initial.to_string()), ..Default::default() };
    Ok(done(emit(dir, &cfg.resolved("simulate", run), &[("path.csv", &path.to_csv())])?))
}

#[derive(Serialize)]
#[serde(untagged)]
enum ConstantsBody<'a> {
    Finite(&'a ErgodicityConstants),
    Continuous(&'a markov_ustat::bounds::ContinuousErgodicity),
}

#[derive(Serialize)]
struct ConstantsJson<'a> {
    model: &'static str,
    #[serde(flatten)]
    body: ConstantsBody<'a>,
}

fn constants_cmd(a: ConstantsArgs) -> Result<Outcome, CliError> {
    let (cfg, dir) = load("constants", a.common.config.as_deref(), a.common.out)?;
    let p = &cfg.run;
    let seed = pick(a.common.seed, &p.seed, 0);
    let rate = rate_pair(pick_opt(a.rate_l, &p.rate_l), pick_opt(a.rate_rho, &p.rate_rho))?;
    let model = cfg.model()?;
    let json = match model {
        ChainModel::Finite(chain) => {
            let mut k = ergodicity_constants(chain)?;
            if let Some((l, rho)) = rate {
                k = k.with_rate(l, rho)?;
            }
            to_json(&ConstantsJson { model: "finite", body: ConstantsBody::Finite(&k) })?
        }
        _ => {
            if rate.is_some() {
                return Err(Error::Unsupported("user rates apply to finite chains only".into()).into());
            }
            let k = continuous_ergodicity(model)?;
            to_json(&ConstantsJson { model: model.kind(), body: ConstantsBody::Continuous(&k) })?
        }
    };
    let run = RunParams {
        seed: Some(seed),
        rate_l: rate.map(|r| r.0),
        rate_rho: rate.map(|r| r.1),
        ..Default::default()
    };
    let out = emit(dir, &cfg.resolved("constants", run), &[("constants.json", &json)])?;
    print!("{json}");
    Ok(done(out))
}

fn ustat_cmd(a: UstatArgs) -> Result<Outcome, CliError> {
    let (cfg, dir) = load("ustat", a.common.config.as_deref(), a.common.out)?;
    let p = &cfg.run;
    let seed = pick(a.common.seed, &p.seed, 0);
    let n = pick(a.n, &p.n, 100);
    let initial = initial_of(a.initial, p)?;
    let centering = pick(parse_centering(a.centering)?, &p.centering, Centering::JointExpectation);
    let normalization = pick(parse_normalization(a.normalization)?, &p.normalization, Normalization::Raw);
    let mc_samples = pick(a.mc_samples, &p.mc_samples, 4096);
    let model = cfg.model()?;
    let family = KernelFamily::from_spec(cfg.kernel()?, n)?;
    let path = simulate(model, n, seed, &initial)?;
    let budget = McBudget { samples: mc_samples, seed };
    let result = u_stat(model, &path, &family, centering, normalization, Some(&budget))?;
    let csv = format!(
        "{CSV_HEADER}\nu_stat,{n},{seed},{centering},{},{}\n",
        fmt_num(result.value),
        fmt_num(result.stderr)
    );
    let run = RunParams {
        seed: Some(seed),
        n: Some(n),
        initial: Some(initial.to_string()),
        centering: Some(centering),
        normalization: Some(normalization),
        mc_samples: Some(mc_samples),
        ..Default::default()
    };
    let out = emit(dir, &cfg.resolved("ustat", run), &[("ustat.csv", &csv)])?;
    println!("{}", fmt_num(result.value));
    Ok(done(out))
}

#[derive(Serialize)]
struct DecompositionJson<'a> {
    seed: u64,
    n: usize,
    initial: String,
    decomposition: &'a DecompositionResult,
}

fn decompose_cmd(a: DecomposeArgs) -> Result<Outcome, CliError> {
    let (cfg, dir) = load("decompose", a.common.config.as_deref(), a.common.out)?;
    let p = &cfg.run;
    let seed = pick(a.common.seed, &p.seed, 0);
    let n = pick(a.n, &p.n, 100);
    let initial = initial_of(a.initial, p)?;
    let r = pick_opt(a.r, &p.r);
    let model = cfg.model()?;
    let chain = finite(model, "decompose")?;
    let consts = ergodicity_constants(chain)?;
    let t_n = match pick_opt(a.t_n, &p.t_n) {
        Some(t) => t,
        None => compute_tn(consts.rho, n, r)?.t_n,
    };
    let kernel = KernelFamily::from_spec(cfg.kernel()?, n)?.tabulate(chain)?;
    let law = finite_initial_law(chain, &initial)?;
    let path = simulate(model, n, seed, &initial)?;
    let states = path.finite_states().expect("finite model yields states");
    let result = martingale_decomposition(chain, &law, states, &kernel, t_n)?;
    let json = to_json(&DecompositionJson { seed, n, initial: initial.to_string(), decomposition: &result })?;
    let run = RunParams {
        seed: Some(seed),
        n: Some(n),
        initial: Some(initial.to_string()),
        t_n: Some(t_n),
        r,
        ..Default::default()
    };
    Ok(done(emit(dir, &cfg.resolved("decompose", run), &[("decomposition.json", &json)])?))
}

#[derive(Serialize)]
struct BoundRow {
    u: f64,
    any_start: f64,
    density_ratio: f64,
    stationary: f64,
    pairs_normalized: f64,
    /// Smallest applicable general-start bound.
    best_general_start: Option<f64>,
    best_general_start_variant: Option<Variant>,
}

#[derive(Serialize)]
struct BoundsJson<'a> {
    initial: String,
    density_ratio_applicable: bool,
    constants: &'a BoundConstants,
    rows: Vec<BoundRow>,
}

fn bounds_cmd(a: BoundsArgs) -> Result<Outcome, CliError> {
    let (cfg, dir) = load("bounds", a.common.config.as_deref(), a.common.out)?;
    let p = &cfg.run;
    let seed = pick(a.common.seed, &p.seed, 0);
    let n = pick(a.n, &p.n, 100);
    let initial = initial_of(a.initial, p)?;
    let u_grid = pick(nonempty(a.u_grid), &p.u_grid, vec![1.0, 2.0, 4.0, 8.0]);
    let settings = BoundSettings {
        r: pick_opt(a.r, &p.r),
        t_n: pick_opt(a.t_n, &p.t_n),
        kappa: pick(a.kappa, &p.kappa, 1.0),
        beta: pick(a.beta, &p.beta, 1.0),
        rate: rate_pair(pick_opt(a.rate_l, &p.rate_l), pick_opt(a.rate_rho, &p.rate_rho))?,
    };
    let budget = ConstantsBudget {
        samples: pick(a.constants_samples, &p.constants_samples, 32),
        inner: pick(a.constants_inner, &p.constants_inner, 32),
        probes: pick(a.constants_probes, &p.constants_probes, 50),
        seed,
    };
    let model = cfg.model()?;
    let family = KernelFamily::from_spec(cfg.kernel()?, n)?;
    let (constants, density_ratio_applicable) = match model {
        ChainModel::Finite(chain) => {
            let consts = ergodicity_constants(chain)?;
            let law = match initial {
                Initial::Stationary => None,
                _ => Some(finite_initial_law(chain, &initial)?),
            };
            // the stationary law charges every state, so the density ratio is finite
            (finite_bound_constants(chain, &consts, law.as_deref(), &family.tabulate(chain)?, &settings)?, true)
        }
        _ => (
            mc_bound_constants(model, &initial, &family, &settings, &budget)?,
            initial == Initial::Stationary,
        ),
    };
    let mut rows = Vec::with_capacity(u_grid.len());
    let mut csv = String::from("u,any_start,density_ratio,stationary,pairs_normalized,best_general_start,best_general_start_variant\n");
    for &u in &u_grid {
        let best = constants.best_general_start(u, density_ratio_applicable)?;
        let row = BoundRow {
            u,
            any_start: constants.rhs(Variant::AnyStart, u)?,
            density_ratio: constants.rhs(Variant::DensityRatio, u)?,
            stationary: constants.rhs(Variant::Stationary, u)?,
            pairs_normalized: constants.rhs(Variant::PairsNormalized, u)?,
            best_general_start: best.map(|b| b.1),
            best_general_start_variant: best.map(|b| b.0),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_num(u),
            fmt_num(row.any_start),
            fmt_num(row.density_ratio),
            fmt_num(row.stationary),
            fmt_num(row.pairs_normalized),
            best.map_or("NA".into(), |b| fmt_num(b.1)),
            best.map_or("NA".into(), |b| b.0.to_string()),
        ));
        rows.push(row);
    }
    let json = to_json(&BoundsJson { initial: initial.to_string(), density_ratio_applicable, constants: &constants, rows })?;
    let mut run = RunParams {
        seed: Some(seed),
        n: Some(n),
        initial: Some(initial.to_string()),
        u_grid: Some(u_grid),
        t_n: settings.t_n,
        r: settings.r,
        kappa: Some(settings.kappa),
        beta: Some(settings.beta),
        rate_l: settings.rate.map(|r| r.0),
        rate_rho: settings.rate.map(|r| r.1),
        ..Default::default()
    };
    if model.as_finite().is_none() {
        run.constants_samples = Some(budget.samples);
        run.constants_inner = Some(budget.inner);
        run.constants_probes = Some(budget.probes);
    }
    Ok(done(emit(dir, &cfg.resolved("bounds", run), &[("bounds.json", &json), ("bounds.csv", &csv)])?))
}

#[derive(Serialize)]
struct Summary {
    count: usize,
    mean: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct SplitJson {
    steps: usize,
    seed: u64,
    delta1: f64,
    bells: usize,
    /// Regeneration times `T_i`, `i >= 2`.
    regeneration_times: Option<Summary>,
    block_sums: Option<Summary>,
    /// Orlicz norm estimate of `T_i`, `i >= 2`, when enough are observed.
    regeneration_time_orlicz: Option<f64>,
}

fn mean_stderr(v: &[f64]) -> Summary {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    Summary { count: v.len(), mean, stderr: (var / m).sqrt() }
}

fn split_cmd(a: SplitArgs) -> Result<Outcome, CliError> {
    let (cfg, dir) = load("split", a.common.config.as_deref(), a.common.out)?;
    let p = &cfg.run;
    let seed = pick(a.common.seed, &p.seed, 0);
    let steps = pick(a.steps, &p.steps, 100_000);
    let chain = finite(cfg.model()?, "split")?;
    let f = state_function(pick_opt(nonempty(a.f), &p.f), chain)?;
    let consts = ergodicity_constants(chain)?;
    let trace = split_simulate(chain, &consts, steps, seed, 0)?;
    let later: Vec<f64> = match trace.regeneration_times() {
        Ok(times) => times.iter().skip(1).map(|&t| t as f64).collect(),
        Err(_) => Vec::new(),
    };
    let orlicz = if later.len() >= ORLICZ_MIN_SAMPLES { Some(orlicz_norm_estimate(&later)?.tau_hat) } else { None };
    let summary = SplitJson {
        steps,
        seed,
        delta1: trace.delta,
        bells: trace.bell_times().len(),
        regeneration_times: (!later.is_empty()).then(|| mean_stderr(&later)),
        block_sums: block_sums(&trace, &f).ok().map(|b| mean_stderr(&b.sums)),
        regeneration_time_orlicz: orlicz,
    };
    let run = RunParams { seed: Some(seed), steps: Some(steps), f: Some(f), ..Default::default() };
    let files = [("split.csv", trace.to_csv()), ("split.json", to_json(&summary)?)];
    let files: Vec<(&str, &str)> = files.iter().map(|(k, v)| (*k, v.as_str())).collect();
    Ok(done(emit(dir, &cfg.resolved("split", run), &files)?))
}

#[derive(Serialize)]
struct StatJson {
    statistic: &'static str,
    value: f64,
}

fn stats_cmd(s: StatsCommand) -> Result<Outcome, CliError> {
    let (name, io, value, run, cfg) = match s {
        StatsCommand::TauKendall(a) => ranks_stat("tau-kendall", a, tau_kendall)?,
        StatsCommand::TauAp(a) => ranks_stat("tau-ap", a, tau_ap)?,
        StatsCommand::Wilcoxon(a) => {
            let (cfg, _) = load("stats", a.io.config.as_deref(), None)?;
            let p = &cfg.run;
            let need = |v: Vec<f64>, c: &Option<Vec<f64>>, flag: &str| {
                pick_opt(nonempty(v), c).ok_or_else(|| CliError::Usage(format!("wilcoxon needs --{flag}")))
            };
            let s0 = need(a.sample0, &p.sample0, "sample0")?;
            let s1 = need(a.sample1, &p.sample1, "sample1")?;
            let w0 = pick(nonempty(a.weights0), &p.weights0, vec![1.0; s0.len()]);
            let w1 = pick(nonempty(a.weights1), &p.weights1, vec![1.0; s1.len()]);
            let value = wilcoxon_weighted(&s0, &s1, &w0, &w1)?;
            let run = RunParams {
                sample0: Some(s0),
                sample1: Some(s1),
                weights0: Some(w0),
                weights1: Some(w1),
                ..Default::default()
            };
            ("wilcoxon", a.io, value, run, cfg)
        }
    };
    let dir = io.out.unwrap_or_else(|| PathBuf::from("mcustat-out").join("stats"));
    let run = RunParams { seed: Some(0), ..run };
    let json = to_json(&StatJson { statistic: name, value })?;
    let out = emit(dir, &cfg.resolved(&format!("stats {name}"), run), &[("stats.json", &json)])?;
    println!("{value}");
    Ok(done(out))
}

type StatParts = (&'static str, StatsIo, f64, RunParams, RunConfig);

fn ranks_stat(name: &'static str, a: RanksArgs, stat: fn(&[f64]) -> markov_ustat::Result<f64>) -> Result<StatParts, CliError> {
    let (cfg, _) = load("stats", a.io.config.as_deref(), None)?;
    let ranks = pick_opt(nonempty(a.ranks), &cfg.run.ranks)
        .ok_or_else(|| CliError::Usage(format!("{name} needs --ranks")))?;
    let value = stat(&ranks)?;
    Ok((name, a.io, value, RunParams { ranks: Some(ranks), ..Default::default() }, cfg))
}

#[derive(Serialize)]
struct VerifyJson<'a> {
    passed: bool,
    identity: &'a IdentityReport,
    regeneration: &'a RegenerationReport,
}

fn verify_cmd(a: VerifyArgs) -> Result<Outcome, CliError> {
    let (cfg, dir) = load("verify", a.common.config.as_deref(), a.common.out)?;
    let p = &cfg.run;
    let seed = pick(a.common.seed, &p.seed, 0);
    let n = pick(a.n, &p.n, 50);
    let replicates = pick(a.replicates, &p.replicates, 100);
    let steps = pick(a.steps, &p.steps, 200_000);
    let t_n = pick_opt(a.t_n, &p.t_n);
    let chain = finite(cfg.model()?, "verify")?;
    let f = state_function(pick_opt(nonempty(a.f), &p.f), chain)?;
    let family = KernelFamily::from_spec(cfg.kernel()?, n)?;
    let identity = identity_suite(chain, &family, n, t_n, replicates, seed, a.common.threads)?;
    let consts = ergodicity_constants(chain)?;
    let regeneration = regeneration_suite(chain, &consts, steps, seed, Some(&f))?;
    let passed = identity.passed() && regeneration.passed();
    let json = to_json(&VerifyJson { passed, identity: &identity, regeneration: &regeneration })?;
    let run = RunParams {
        seed: Some(seed),
        n: Some(n),
        replicates: Some(replicates),
        t_n,
        steps: Some(steps),
        f: Some(f),
        ..Default::default()
    };
    let out = emit(dir, &cfg.resolved("verify", run), &[("verify.json", &json)])?;
    println!(
        "decomposition {} (max residual {:e}), martingale {} (max residual {:e}), remainder {}, regeneration {}",
        ok(identity.decomposition_ok),
        identity.max_decomposition_residual,
        ok(identity.martingale_ok),
        identity.max_martingale_residual,
        identity.remainder_ok.map_or("not checked", ok),
        ok(regeneration.passed()),
    );
    Ok(Outcome { code: if passed { 0 } else { 2 }, out: out.path })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

fn rate_cmd(a: RateArgs) -> Result<Outcome, CliError> {
    let (cfg, dir) = load("rate", a.common.config.as_deref(), a.common.out)?;
    let p = &cfg.run;
    let plan = RatePlan {
        model: cfg.model()?.clone(),
        kernel: cfg.kernel()?.clone(),
        weights: pick(parse_weight(a.weights)?, &p.weights, PairWeight::InverseLag),
        n_grid: pick(nonempty(a.n_grid), &p.n_grid, vec![32, 64, 128, 256]),
        replicates: pick(a.replicates, &p.replicates, 1000),
        seed: pick(a.common.seed, &p.seed, 0),
        centering: pick(parse_centering(a.centering)?, &p.centering, Centering::JointExpectation),
        initial: initial_of(a.initial, p)?,
        mc_budget: pick(a.mc_samples, &p.mc_samples, 256),
    };
    let report = rate_experiment(&plan, a.common.threads)?;
    let run = RunParams {
        seed: Some(plan.seed),
        n_grid: Some(plan.n_grid.clone()),
        replicates: Some(plan.replicates),
        initial: Some(plan.initial.to_string()),
        centering: Some(plan.centering),
        weights: Some(plan.weights.clone()),
        mc_samples: Some(plan.mc_budget),
        ..Default::default()
    };
    let out = emit(
        dir,
        &cfg.resolved("rate", run),
        &[
            ("raw_unweighted.csv", &report.raw_csv_unweighted()),
            ("raw_weighted.csv", &report.raw_csv_weighted()),
            ("quantiles.csv", &report.quantile_csv()),
            ("summary.json", &to_json(&report)?),
        ],
    )?;
    println!(
        "unweighted slope {} (se {}), weighted slope {} (se {}), separation {}",
        report.unweighted.slope,
        report.unweighted.slope_stderr,
        report.weighted.slope,
        report.weighted.slope_stderr,
        report.separation
    );
    Ok(done(out))
}

fn tail_cmd(a: TailArgs) -> Result<Outcome, CliError> {
    let (cfg, dir) = load("tail", a.common.config.as_deref(), a.common.out)?;
    let p = &cfg.run;
    let seed = pick(a.common.seed, &p.seed, 0);
    let plan = TailPlan {
        model: cfg.model()?.clone(),
        kernel: cfg.kernel()?.clone(),
        n_grid: pick(nonempty(a.n_grid), &p.n_grid, vec![50, 100, 200]),
        replicates: pick(a.replicates, &p.replicates, 1000),
        u_grid: pick(nonempty(a.u_grid), &p.u_grid, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
        seed,
        centering: pick(parse_centering(a.centering)?, &p.centering, Centering::JointExpectation),
        initial: initial_of(a.initial, p)?,
        beta: pick(a.beta, &p.beta, 1.0),
        kappa: pick_opt(a.kappa, &p.kappa),
        held_out_u: pick_opt(a.held_out_u, &p.held_out_u),
        mc_budget: pick(a.mc_samples, &p.mc_samples, 256),
        constants_budget: ConstantsBudget {
            samples: pick(a.constants_samples, &p.constants_samples, 32),
            inner: pick(a.constants_inner, &p.constants_inner, 32),
            probes: pick(a.constants_probes, &p.constants_probes, 50),
            seed,
        },
    };
    let report = tail_experiment(&plan, a.common.threads)?;
    let run = RunParams {
        seed: Some(seed),
        n_grid: Some(plan.n_grid.clone()),
        u_grid: Some(plan.u_grid.clone()),
        replicates: Some(plan.replicates),
        initial: Some(plan.initial.to_string()),
        centering: Some(plan.centering),
        beta: Some(plan.beta),
        kappa: plan.kappa,
        held_out_u: plan.held_out_u,
        mc_samples: Some(plan.mc_budget),
        constants_samples: Some(plan.constants_budget.samples),
        constants_inner: Some(plan.constants_budget.inner),
        constants_probes: Some(plan.constants_budget.probes),
        ..Default::default()
    };
    let out = emit(
        dir,
        &cfg.resolved("tail", run),
        &[("raw.csv", &report.raw_csv()), ("quantiles.csv", &report.quantile_csv()), ("summary.json", &to_json(&report)?)],
    )?;
    println!(
        "kappa {} ({}), held-out u {}: {}",
        report.kappa,
        report.kappa_source,
        report.held_out_u.map_or("none".into(), |u| u.to_string()),
        report.held_out_pass.map_or("not checked", ok)
    );
    Ok(done(out))
}
