//! Replicated Monte Carlo studies.
//!
//! Replicate `r` at horizon `n` always draws from stream
//! [`replicate_stream(n, r)`](crate::rng::replicate_stream) of the plan seed,
//! and replicates are collected in index order, so every report is a
//! deterministic function of its plan whatever the number of worker threads.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    compute_tn, finite_bound_constants, mc_bound_constants, remainder_bound, BoundConstants,
    BoundSettings, ConstantsBudget, Depth, RemainderVariant, Variant,
};
use crate::chain::{
    ergodicity_constants, finite_initial_law, simulate_stream, stationary_distribution, ChainModel,
    ErgodicityConstants, FiniteChain, Initial, McBudget,
};
use crate::error::{Error, Result};
use crate::fmt_num;
use crate::kernels::{pi_canonical_deviation, sup_constant_finite, KernelFamily, KernelSpec, PairWeight};
use crate::rng::replicate_stream;
use crate::splitting::{block_sums, orlicz_norm_estimate, split_simulate};
use crate::ustat::{
    continuous_center, martingale_decomposition, martingale_residuals, mean_and_stderr, pair_sum_real,
    Centering, FiniteEvaluator,
};

pub const RAW_CSV_HEADER: &str = "n,replicate,seed,value";
pub const QUANTILE_CSV_HEADER: &str = "n,u,level,quantile,bound_any_start,bound_density_ratio,bound_stationary";

/// Quantile level of the rate fits.
pub const RATE_QUANTILE: f64 = 0.99;
/// Allowed excess of the held-out quantile over the calibrated bound.
pub const HELD_OUT_SLACK: f64 = 0.05;

fn default_beta() -> f64 {
    1.0
}

fn default_mc_budget() -> usize {
    256
}

fn default_initial() -> Initial {
    Initial::Stationary
}

fn default_centering() -> Centering {
    Centering::JointExpectation
}

fn default_constants_budget() -> ConstantsBudget {
    ConstantsBudget { samples: 32, inner: 32, probes: 50, seed: 0 }
}

/// Everything a tail experiment depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPlan {
    pub model: ChainModel,
    pub kernel: KernelSpec,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub u_grid: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_centering")]
    pub centering: Centering,
    #[serde(default = "default_initial")]
    pub initial: Initial,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Supplied `kappa`; calibrated from the simulations when absent.
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Level held out of the calibration; defaults to the middle of `u_grid`.
    #[serde(default)]
    pub held_out_u: Option<f64>,
    /// Sampling budget for continuous centering.
    #[serde(default = "default_mc_budget")]
    pub mc_budget: usize,
    #[serde(default = "default_constants_budget")]
    pub constants_budget: ConstantsBudget,
}

/// Everything a rate experiment depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePlan {
    pub model: ChainModel,
    /// Unweighted base kernel.
    pub kernel: KernelSpec,
    /// Extra weight applied for the weighted series.
    #[serde(default = "default_rate_weight")]
    pub weights: PairWeight,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_centering")]
    pub centering: Centering,
    #[serde(default = "default_initial")]
    pub initial: Initial,
    #[serde(default = "default_mc_budget")]
    pub mc_budget: usize,
}

fn default_rate_weight() -> PairWeight {
    PairWeight::InverseLag
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

/// Replicate evaluator of raw centered U-statistics at one horizon.
enum Evaluator {
    Finite(Vec<FiniteEvaluator>),
    Continuous(Vec<(KernelFamily, f64)>),
}

impl Evaluator {
    fn new(model: &ChainModel, families: &[KernelFamily], initial: &Initial, centering: Centering, mc: &McBudget) -> Result<Self> {
        for f in families {
            f.check_model(model)?;
        }
        match model {
            ChainModel::Finite(chain) => {
                let law = finite_initial_law(chain, initial)?;
                Ok(Evaluator::Finite(
                    families
                        .iter()
                        .map(|f| FiniteEvaluator::new(chain, &law, f.tabulate(chain)?, centering))
                        .collect::<Result<_>>()?,
                ))
            }
            _ => Ok(Evaluator::Continuous(
                families
                    .iter()
                    .map(|f| Ok((f.clone(), continuous_center(model, f, initial, centering, Some(mc))?.0)))
                    .collect::<Result<_>>()?,
            )),
        }
    }

    fn eval(&self, model: &ChainModel, n: usize, seed: u64, r: usize, initial: &Initial) -> Result<Vec<f64>> {
        let path = simulate_stream(model, n, seed, replicate_stream(n, r), initial)?;
        Ok(match self {
            Evaluator::Finite(evals) => {
                let states = path.finite_states().expect("finite model yields finite path");
                evals.iter().map(|e| e.raw(states)).collect()
            }
            Evaluator::Continuous(fams) => {
                let xs = path.scalar_values();
                fams.iter().map(|(f, c)| pair_sum_real(&xs, f) - c).collect()
            }
        })
    }
}

/// Raw centered statistics of all replicates, one vector per family.
fn replicate_values(
    model: &ChainModel,
    families: &[KernelFamily],
    n: usize,
    replicates: usize,
    seed: u64,
    initial: &Initial,
    centering: Centering,
    mc_budget: usize,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Vec<f64>>> {
    let mc = McBudget { samples: mc_budget, seed };
    let eval = Evaluator::new(model, families, initial, centering, &mc)?;
    let rows: Vec<Vec<f64>> = pool.install(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| eval.eval(model, n, seed, r, initial))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok((0..families.len()).map(|k| rows.iter().map(|row| row[k]).collect()).collect())
}

/// `sorted[ceil(level m) - 1]`.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let m = sorted.len();
    let idx = ((level * m as f64).ceil() as usize).clamp(1, m) - 1;
    sorted[idx]
}

/// Ordinary least squares slope and its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    if x.len() <= 2 {
        return (slope, 0.0);
    }
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, (ssr / (k - 2.0) / sxx).sqrt())
}

/// Nonnegative least squares `min ||X c - y||, c >= 0` by exhaustive search
/// over active sets; meant for a handful of features.
pub fn nnls(features: &DMatrix<f64>, y: &DVector<f64>) -> Vec<f64> {
    let p = features.ncols();
    assert!(p <= 12, "exhaustive NNLS is for small problems");
    let mut best = (y.norm_squared(), vec![0.0; p]);
    for mask in 1u32..(1 << p) {
        let cols: Vec<usize> = (0..p).filter(|c| mask & (1 << c) != 0).collect();
        if cols.len() > features.nrows() {
            continue;
        }
        let sub = DMatrix::from_fn(features.nrows(), cols.len(), |r, c| features[(r, cols[c])]);
        let Ok(coef) = sub.clone().svd(true, true).solve(y, 1e-12) else { continue };
        if coef.iter().any(|&c| c < 0.0) {
            continue;
        }
        let resid = (&sub * &coef - y).norm_squared();
        if resid < best.0 - 1e-15 * (1.0 + best.0) {
            let mut full = vec![0.0; p];
            for (k, &c) in cols.iter().enumerate() {
                full[c] = coef[k];
            }
            best = (resid, full);
        }
    }
    best.1
}

// ---------------------------------------------------------------------------
// Tail experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCell {
    pub n: usize,
    pub u: f64,
    pub level: f64,
    /// `level <= 0`: no quantile is estimated.
    pub skipped: bool,
    pub quantile: Option<f64>,
    pub bound_any_start: f64,
    pub bound_density_ratio: f64,
    pub bound_stationary: f64,
    /// Quantile over the reference bound (0 when both vanish).
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NnlsFit {
    pub n: usize,
    /// Coefficients of `(sqrt u, u, u^{3/2}, u^2, 1)`.
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub seed: u64,
    pub replicates: usize,
    pub beta: f64,
    pub kappa: f64,
    /// `user` or `calibrated`.
    pub kappa_source: String,
    pub reference_variant: Variant,
    pub held_out_u: Option<f64>,
    pub held_out_max_ratio: Option<f64>,
    pub held_out_pass: Option<bool>,
    pub nnls: Vec<NnlsFit>,
    pub constants: Vec<BoundConstants>,
    pub cells: Vec<TailCell>,
    #[serde(skip)]
    pub raw: Vec<(usize, Vec<f64>)>,
}

impl TailReport {
    pub fn raw_csv(&self) -> String {
        raw_csv(&self.raw, self.seed)
    }

    pub fn quantile_csv(&self) -> String {
        let mut out = format!("{QUANTILE_CSV_HEADER}\n");
        for c in &self.cells {
            let q = c.quantile.map_or("NA".to_string(), fmt_num);
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.n,
                fmt_num(c.u),
                fmt_num(c.level),
                q,
                fmt_num(c.bound_any_start),
                fmt_num(c.bound_density_ratio),
                fmt_num(c.bound_stationary)
            ));
        }
        out
    }
}

fn raw_csv(raw: &[(usize, Vec<f64>)], seed: u64) -> String {
    let mut out = format!("{RAW_CSV_HEADER}\n");
    for (n, values) in raw {
        for (r, v) in values.iter().enumerate() {
            out.push_str(&format!("{n},{r},{seed},{}\n", fmt_num(*v)));
        }
    }
    out
}

fn constants_at(plan_model: &ChainModel, initial: &Initial, family: &KernelFamily, budget: &ConstantsBudget) -> Result<BoundConstants> {
    let settings = BoundSettings::default();
    match plan_model {
        ChainModel::Finite(chain) => {
            let erg = ergodicity_constants(chain)?;
            let law = match initial {
                Initial::Stationary => None,
                other => Some(finite_initial_law(chain, other)?),
            };
            finite_bound_constants(chain, &erg, law.as_deref(), &family.tabulate(chain)?, &settings)
        }
        _ => mc_bound_constants(plan_model, initial, family, &settings, budget),
    }
}

pub fn tail_experiment(plan: &TailPlan, threads: Option<usize>) -> Result<TailReport> {
    if plan.replicates < 100 {
        return Err(Error::InvalidInput(format!("tail experiments need at least 100 replicates, got {}", plan.replicates)));
    }
    if plan.n_grid.is_empty() || plan.u_grid.is_empty() {
        return Err(Error::InvalidInput("n_grid and u_grid must be non-empty".into()));
    }
    if plan.u_grid.iter().any(|u| !(*u > 0.0)) {
        return Err(Error::InvalidInput("u values must be positive".into()));
    }
    if !(plan.beta > 0.0) {
        return Err(Error::InvalidInput("beta must be positive".into()));
    }
    plan.model.validate()?;
    let pool = pool(threads)?;
    let stationary = matches!(plan.initial, Initial::Stationary);
    let mut u_grid = plan.u_grid.clone();
    u_grid.sort_by(f64::total_cmp);
    u_grid.dedup();

    let mut raw = Vec::new();
    let mut constants = Vec::new();
    let mut quantiles: Vec<Vec<Option<(f64, f64)>>> = Vec::new();
    for &n in &plan.n_grid {
        let family = KernelFamily::from_spec(&plan.kernel, n)?;
        let values = replicate_values(
            &plan.model,
            std::slice::from_ref(&family),
            n,
            plan.replicates,
            plan.seed,
            &plan.initial,
            plan.centering,
            plan.mc_budget,
            &pool,
        )?
        .remove(0);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let log_n = (n as f64).ln();
        quantiles.push(
            u_grid
                .iter()
                .map(|&u| {
                    let level = 1.0 - (plan.beta * (-u).exp() * log_n).min(1.0);
                    (level > 0.0).then(|| (level, empirical_quantile(&sorted, level)))
                })
                .collect(),
        );
        let budget = ConstantsBudget { seed: plan.seed, ..plan.constants_budget };
        let mut k = constants_at(&plan.model, &plan.initial, &family, &budget)?;
        k.beta = plan.beta;
        constants.push(k);
        raw.push((n, values));
    }
    if quantiles.iter().flatten().all(Option::is_none) {
        return Err(Error::DegenerateQuantile(
            "1 - beta e^{-u} log n <= 0 for every (n, u) cell".into(),
        ));
    }

    let reference = if stationary {
        Variant::Stationary
    } else if !constants[0].depends_on_i {
        Variant::AnyStart
    } else {
        Variant::DensityRatio
    };
    let unit_bound = |k: &BoundConstants, v: Variant, u: f64| -> Result<f64> {
        let mut c = k.clone();
        c.kappa = 1.0;
        c.rhs(v, u)
    };

    let held_out = match (plan.kappa, plan.held_out_u) {
        (Some(_), _) => None,
        (None, Some(u)) => Some(u),
        (None, None) if u_grid.len() >= 3 => Some(u_grid[u_grid.len() / 2]),
        (None, None) => None,
    };
    let (kappa, source) = match plan.kappa {
        Some(k) => (k, "user"),
        None => {
            let mut best: f64 = 0.0;
            for (ni, k) in constants.iter().enumerate() {
                for (ui, &u) in u_grid.iter().enumerate() {
                    if Some(u) == held_out {
                        continue;
                    }
                    if let Some((_, q)) = quantiles[ni][ui] {
                        let g = unit_bound(k, reference, u)?;
                        if g > 0.0 {
                            best = best.max(q / g);
                        }
                    }
                }
            }
            (best, "calibrated")
        }
    };
    for k in constants.iter_mut() {
        k.kappa = kappa;
        k.constants_source = source.to_string();
    }

    let mut cells = Vec::new();
    let mut held_ratio: Option<f64> = None;
    let mut nnls_fits = Vec::new();
    for (ni, k) in constants.iter().enumerate() {
        let n = plan.n_grid[ni];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (ui, &u) in u_grid.iter().enumerate() {
            let level = 1.0 - (plan.beta * (-u).exp() * (n as f64).ln()).min(1.0);
            let q = quantiles[ni][ui].map(|(_, q)| q);
            let reference_bound = k.rhs(reference, u)?;
            let ratio = q.map(|q| if q == 0.0 { 0.0 } else { q / reference_bound });
            if Some(u) == held_out {
                if let Some(r) = ratio {
                    held_ratio = Some(held_ratio.map_or(r, |h: f64| h.max(r)));
                }
            }
            if let Some(q) = q {
                xs.push([u.sqrt(), u, u.powf(1.5), u * u, 1.0]);
                ys.push(q);
            }
            cells.push(TailCell {
                n,
                u,
                level,
                skipped: q.is_none(),
                quantile: q,
                bound_any_start: k.rhs(Variant::AnyStart, u)?,
                bound_density_ratio: k.rhs(Variant::DensityRatio, u)?,
                bound_stationary: k.rhs(Variant::Stationary, u)?,
                ratio,
            });
        }
        if !ys.is_empty() {
            let x = DMatrix::from_fn(xs.len(), 5, |r, c| xs[r][c]);
            nnls_fits.push(NnlsFit { n, coefficients: nnls(&x, &DVector::from_vec(ys)) });
        }
    }
    Ok(TailReport {
        seed: plan.seed,
        replicates: plan.replicates,
        beta: plan.beta,
        kappa,
        kappa_source: source.to_string(),
        reference_variant: reference,
        held_out_u: held_out,
        held_out_max_ratio: held_ratio,
        held_out_pass: held_ratio.map(|r| r <= 1.0 + HELD_OUT_SLACK),
        nnls: nnls_fits,
        constants,
        cells,
        raw,
    })
}

// ---------------------------------------------------------------------------
// Rate experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSeries {
    pub label: String,
    pub n_grid: Vec<usize>,
    /// 0.99 quantile of the absolute pairs-normalized statistic per horizon.
    pub quantiles: Vec<f64>,
    pub slope: f64,
    pub slope_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub seed: u64,
    pub replicates: usize,
    pub quantile_level: f64,
    pub unweighted: RateSeries,
    pub weighted: RateSeries,
    /// `unweighted.slope - weighted.slope`.
    pub separation: f64,
    #[serde(skip)]
    pub raw_unweighted: Vec<(usize, Vec<f64>)>,
    #[serde(skip)]
    pub raw_weighted: Vec<(usize, Vec<f64>)>,
}

impl RateReport {
    pub fn raw_csv_unweighted(&self) -> String {
        raw_csv(&self.raw_unweighted, self.seed)
    }

    pub fn raw_csv_weighted(&self) -> String {
        raw_csv(&self.raw_weighted, self.seed)
    }

    /// `series,n,quantile` table.
    pub fn quantile_csv(&self) -> String {
        let mut out = String::from("series,n,quantile\n");
        for s in [&self.unweighted, &self.weighted] {
            for (n, q) in s.n_grid.iter().zip(&s.quantiles) {
                out.push_str(&format!("{},{n},{}\n", s.label, fmt_num(*q)));
            }
        }
        out
    }
}

fn fit_series(label: &str, n_grid: &[usize], raw: &[(usize, Vec<f64>)]) -> Result<RateSeries> {
    let mut quantiles = Vec::new();
    for (n, values) in raw {
        let factor = 2.0 / (*n as f64 * (*n as f64 - 1.0));
        let mut abs: Vec<f64> = values.iter().map(|v| (v * factor).abs()).collect();
        abs.sort_by(f64::total_cmp);
        let q = empirical_quantile(&abs, RATE_QUANTILE);
        if !(q > 0.0) {
            return Err(Error::DegenerateQuantile(format!(
                "{label} quantile at n = {n} is {q}; the log-log fit needs positive quantiles"
            )));
        }
        quantiles.push(q);
    }
    let x: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = quantiles.iter().map(|q| q.ln()).collect();
    let (slope, slope_stderr) = ols_slope(&x, &y);
    Ok(RateSeries { label: label.into(), n_grid: n_grid.to_vec(), quantiles, slope, slope_stderr })
}

pub fn rate_experiment(plan: &RatePlan, threads: Option<usize>) -> Result<RateReport> {
    if plan.n_grid.len() < 3 {
        return Err(Error::InvalidInput(format!("rate fits need at least 3 horizons, got {}", plan.n_grid.len())));
    }
    if plan.replicates < 2 {
        return Err(Error::InvalidInput("rate fits need at least 2 replicates".into()));
    }
    plan.model.validate()?;
    let pool = pool(threads)?;
    let mut raw_u = Vec::new();
    let mut raw_w = Vec::new();
    for &n in &plan.n_grid {
        let base = KernelFamily::from_spec(&plan.kernel, n)?;
        let weighted = crate::kernels::weighted_kernel(&base, plan.weights.clone())?;
        let mut vals = replicate_values(
            &plan.model,
            &[base, weighted],
            n,
            plan.replicates,
            plan.seed,
            &plan.initial,
            plan.centering,
            plan.mc_budget,
            &pool,
        )?;
        raw_w.push((n, vals.pop().unwrap()));
        raw_u.push((n, vals.pop().unwrap()));
    }
    let unweighted = fit_series("unweighted", &plan.n_grid, &raw_u)?;
    let weighted = fit_series("weighted", &plan.n_grid, &raw_w)?;
    Ok(RateReport {
        seed: plan.seed,
        replicates: plan.replicates,
        quantile_level: RATE_QUANTILE,
        separation: unweighted.slope - weighted.slope,
        unweighted,
        weighted,
        raw_unweighted: raw_u,
        raw_weighted: raw_w,
    })
}

// ---------------------------------------------------------------------------
// Identity and regeneration suites
// ---------------------------------------------------------------------------

pub const DECOMPOSITION_TOL: f64 = 1e-9;
pub const MARTINGALE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub n: usize,
    pub t_n: usize,
    pub replicates: usize,
    pub seed: u64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub rho: f64,
    pub canonical: bool,
    /// Whether `rho^{t_n/2} <= 1/n`.
    pub t_n_admissible: bool,
    pub max_decomposition_residual: f64,
    pub max_martingale_residual: f64,
    pub max_abs_r_stationary: f64,
    pub remainder_bound_stationary: f64,
    pub max_abs_r_general: f64,
    pub remainder_bound_general: f64,
    pub decomposition_ok: bool,
    pub martingale_ok: bool,
    /// Only checked for canonical kernels.
    pub remainder_ok: Option<bool>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.decomposition_ok && self.martingale_ok && self.remainder_ok.unwrap_or(true)
    }
}

struct PathCheck {
    decomposition: f64,
    martingale: f64,
    abs_r: f64,
}

/// Runs the decomposition on `replicates` stationary paths and as many paths
/// from the chain's declared initial law.
pub fn identity_suite(
    chain: &FiniteChain,
    family: &KernelFamily,
    n: usize,
    t_n: Option<usize>,
    replicates: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<IdentityReport> {
    let constants = ergodicity_constants(chain)?;
    let kernel = family.with_horizon(n)?.tabulate(chain)?;
    let t_n = match t_n {
        Some(t) => t,
        None => compute_tn(constants.rho, n, None)?.t_n,
    };
    if t_n < 1 || t_n > n {
        return Err(Error::InvalidInput(format!("t_n = {t_n} outside [1, {n}]")));
    }
    let canonical = pi_canonical_deviation(&kernel, &constants.pi)?.canonical;
    let a = sup_constant_finite(&kernel).value;
    let model = ChainModel::Finite(chain.clone());
    let pi = stationary_distribution(chain)?;
    let declared = chain.initial().to_vec();
    let pool = pool(threads)?;
    let run = |r: usize, stationary: bool| -> Result<PathCheck> {
        let (initial, law, stream) = if stationary {
            (Initial::Stationary, &pi, replicate_stream(n, 2 * r))
        } else {
            (Initial::Declared, &declared, replicate_stream(n, 2 * r + 1))
        };
        let path = simulate_stream(&model, n, seed, stream, &initial)?;
        let states = path.finite_states().expect("finite path");
        let d = martingale_decomposition(chain, law, states, &kernel, t_n)?;
        let mart = martingale_residuals(chain, states, &kernel).into_iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(PathCheck { decomposition: d.residual / (1.0 + d.ustat.abs()), martingale: mart, abs_r: d.r.abs() })
    };
    let checks: Vec<(PathCheck, PathCheck)> = pool.install(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| Ok((run(r, true)?, run(r, false)?)))
            .collect::<Result<Vec<_>>>()
    })?;
    let fold = |f: &dyn Fn(&(PathCheck, PathCheck)) -> f64| checks.iter().map(f).fold(0.0, f64::max);
    let max_dec = fold(&|c| c.0.decomposition.max(c.1.decomposition));
    let max_mart = fold(&|c| c.0.martingale.max(c.1.martingale));
    let r_stat = fold(&|c| c.0.abs_r);
    let r_gen = fold(&|c| c.1.abs_r);
    let bound_stat = remainder_bound(RemainderVariant::Stationary, a, constants.l, n, t_n);
    let bound_gen = remainder_bound(RemainderVariant::General, a, constants.l, n, t_n);
    Ok(IdentityReport {
        n,
        t_n,
        replicates,
        seed,
        a,
        l: constants.l,
        rho: constants.rho,
        canonical,
        t_n_admissible: Depth::admissible(constants.rho, n, t_n),
        max_decomposition_residual: max_dec,
        max_martingale_residual: max_mart,
        max_abs_r_stationary: r_stat,
        remainder_bound_stationary: bound_stat,
        max_abs_r_general: r_gen,
        remainder_bound_general: bound_gen,
        decomposition_ok: max_dec <= DECOMPOSITION_TOL,
        martingale_ok: max_mart <= MARTINGALE_TOL,
        remainder_ok: canonical.then_some(r_stat <= bound_stat && r_gen <= bound_gen),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegenerationReport {
    pub steps: usize,
    pub seed: u64,
    pub delta1: f64,
    pub n_regen: usize,
    pub n_blocks: usize,
    /// Mean of `T_i`, `i >= 2`.
    #[serde(rename = "mean_T")]
    pub mean_t: f64,
    #[serde(rename = "mean_T_stderr")]
    pub mean_t_stderr: f64,
    #[serde(rename = "mean_T_z")]
    pub mean_t_z: f64,
    pub block_mean: f64,
    pub block_stderr: f64,
    pub block_target: f64,
    pub block_z: f64,
    pub block_lag1_correlation: f64,
    pub tau_hat: f64,
    pub orlicz_sample_size: usize,
    /// Slope of `log P(T > t)` against `t`, when at least two points qualify.
    pub tail_slope: Option<f64>,
    pub expected_tail_slope: Option<f64>,
    pub block_identity_ok: bool,
    pub mean_t_ok: bool,
}

impl RegenerationReport {
    pub fn passed(&self) -> bool {
        self.block_identity_ok && self.mean_t_ok
    }
}

fn z_score(estimate: f64, target: f64, se: f64) -> f64 {
    let diff = estimate - target;
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 * (1.0 + target.abs()) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Minimum count behind a survival point used in the tail fit.
const TAIL_MIN_COUNT: usize = 30;

/// Split-chain checks; `f` defaults to the indicator of state 0.
pub fn regeneration_suite(
    chain: &FiniteChain,
    constants: &ErgodicityConstants,
    steps: usize,
    seed: u64,
    f: Option<&[f64]>,
) -> Result<RegenerationReport> {
    let s = chain.n_states();
    let default_f: Vec<f64> = (0..s).map(|x| if x == 0 { 1.0 } else { 0.0 }).collect();
    let f = f.unwrap_or(&default_f);
    if f.len() != s {
        return Err(Error::InvalidInput(format!("f has {} entries, chain has {s} states", f.len())));
    }
    let trace = split_simulate(chain, constants, steps, seed, 0)?;
    let times = trace.regeneration_times()?;
    let later: Vec<f64> = times.iter().skip(1).map(|&t| t as f64).collect();
    if later.len() < 2 {
        return Err(Error::TooFewBlocks(later.len()));
    }
    let delta = constants.delta_m;
    let (mean_t, mean_t_stderr) = mean_and_stderr(&later);
    let mean_t_z = z_score(mean_t, 1.0 / delta, mean_t_stderr);
    let blocks = block_sums(&trace, f)?;
    let target = constants.pi.iter().zip(f).map(|(p, v)| p * v).sum::<f64>() / delta;
    let block_z = z_score(blocks.mean, target, blocks.stderr);
    let orlicz = orlicz_norm_estimate(&later)?;

    let z = &blocks.sums;
    let zm = blocks.mean;
    let var: f64 = z.iter().map(|v| (v - zm).powi(2)).sum();
    let cov: f64 = z.windows(2).map(|w| (w[0] - zm) * (w[1] - zm)).sum();
    let block_lag1_correlation = if var > 0.0 { cov / var } else { 0.0 };

    let m = later.len();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sorted = later.clone();
    sorted.sort_by(f64::total_cmp);
    for t in 1.. {
        let above = m - sorted.partition_point(|&v| v <= t as f64);
        if above < TAIL_MIN_COUNT {
            break;
        }
        xs.push(t as f64);
        ys.push((above as f64 / m as f64).ln());
    }
    let tail_slope = (xs.len() >= 2).then(|| ols_slope(&xs, &ys).0);
    Ok(RegenerationReport {
        steps,
        seed,
        delta1: delta,
        n_regen: times.len(),
        n_blocks: blocks.sums.len(),
        mean_t,
        mean_t_stderr,
        mean_t_z,
        block_mean: blocks.mean,
        block_stderr: blocks.stderr,
        block_target: target,
        block_z,
        block_lag1_correlation,
        tau_hat: orlicz.tau_hat,
        orlicz_sample_size: orlicz.sample_size,
        tail_slope,
        expected_tail_slope: (delta < 1.0).then(|| (1.0 - delta).ln()),
        block_identity_ok: block_z.abs() <= 3.0,
        mean_t_ok: mean_t_z.abs() <= 3.0,
    })
}
