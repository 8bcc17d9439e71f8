//! Variance proxies `B_n`, `C_n`, the depth `t_n`, tail-bound right-hand
//! sides, remainder bounds, and the Bernstein inequality for additive
//! functionals.
//!
//! With `p_{i,j} = a_{i,j} (h - e)`, `e = E_{pi x pi} h`, every constant factors
//! into a weight sum times a state-space term:
//!
//! ```text
//! C_n^2 = sum_i (sum_{j>i} a_{i,j}^2) E[q(X_i)],   q(x) = E_{X'~nu} (h(x,X') - e)^2
//! B_n^2 = max( max_i sum_{j>i} a_{i,j}^2 * max_{k,x} E_{X'~nu} ((P^k d(x,.))(X'))^2,
//!              max_j sum_{i<j} a_{i,j}^2 * max_{k,y} E_{X~pi} ((P^k d(X,.))(y))^2 )
//! ```

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chain::{
    arch_envelopes, scalar_step, simulate_stream, stationary_samples, ArchEnvelopes, ChainModel,
    DensityConvention, ErgodicityConstants, FiniteChain, Initial, MatrixPowers, McBudget,
};
use crate::error::{Error, Result};
use crate::kernels::{EstimationMethod, FiniteKernel, KernelFamily};
use crate::rng::{auxiliary_stream, stream_rng};

/// Slack on the smallest admissible depth rate.
pub const RATE_SLACK: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Depth {
    pub t_n: usize,
    pub r: f64,
    /// `2 / log(1/rho)`; rates must exceed it.
    pub r_min: f64,
    pub clamped: bool,
}

impl Depth {
    /// Whether `rho^{t_n/2} <= 1/n`, the condition under which the stationary
    /// remainder bound is derived.
    pub fn admissible(rho: f64, n: usize, t_n: usize) -> bool {
        rho == 0.0 || (t_n as f64 / 2.0) * rho.ln() <= -(n as f64).ln() + 1e-12
    }
}

/// `t_n = floor(r log n)`, clamped to `[1, n]`.
pub fn compute_tn(rho: f64, n: usize, r: Option<f64>) -> Result<Depth> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidInput(format!("rho must lie in [0, 1), got {rho}")));
    }
    if n < 2 {
        return Err(Error::PathTooShort(n));
    }
    let r_min = if rho == 0.0 { 0.0 } else { 2.0 / (1.0 / rho).ln() };
    let r = match r {
        Some(r) if !(r > r_min) || !r.is_finite() => {
            return Err(Error::InvalidInput(format!("rate r = {r} must exceed 2/log(1/rho) = {r_min}")))
        }
        Some(r) => r,
        None => RATE_SLACK * r_min,
    };
    let raw = (r * (n as f64).ln()).floor();
    let t_n = raw.clamp(1.0, n as f64) as usize;
    Ok(Depth { t_n, r, r_min, clamped: raw < 1.0 || raw > n as f64 })
}

/// `C_n` on a finite chain; `law = None` means a stationary start.
pub fn compute_cn(chain: &FiniteChain, constants: &ErgodicityConstants, law: Option<&[f64]>, kernel: &FiniteKernel) -> f64 {
    let n = kernel.horizon;
    let s = chain.n_states();
    let d = kernel.centered(&constants.pi);
    let q: Vec<f64> = (0..s)
        .map(|x| (0..s).map(|y| constants.nu[y] * d[(x, y)].powi(2)).sum())
        .collect();
    let weights = kernel.weight.squared_row_sums(n);
    let sum = match law {
        None => dot(&constants.pi, &q) * weights.iter().sum::<f64>(),
        Some(law) => chain
            .marginal_laws(law, n)
            .iter()
            .enumerate()
            .map(|(i, li)| weights[i + 1] * dot(li, &q))
            .sum(),
    };
    sum.max(0.0).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// State-space factors of the two `B_n^2` branches, maximized over
/// `k = 0..=t_n` and the free state.
pub fn bn_state_terms(chain: &FiniteChain, constants: &ErgodicityConstants, kernel: &FiniteKernel, t_n: usize) -> (f64, f64) {
    let s = chain.n_states();
    let d = kernel.centered(&constants.pi);
    let mut mp = MatrixPowers::new(chain);
    let (mut first, mut second) = (0.0_f64, 0.0_f64);
    for k in 0..=t_n {
        let pk = mp.get(k);
        // m[(z, x)] = sum_X P^k(z, X) d(x, X)
        let m: DMatrix<f64> = pk * d.transpose();
        for x in 0..s {
            let v: f64 = (0..s).map(|z| constants.nu[z] * m[(z, x)].powi(2)).sum();
            first = first.max(v);
        }
        for y in 0..s {
            let v: f64 = (0..s).map(|xt| constants.pi[xt] * m[(y, xt)].powi(2)).sum();
            second = second.max(v);
        }
    }
    (first, second)
}

/// `B_n` on a finite chain.
pub fn compute_bn(chain: &FiniteChain, constants: &ErgodicityConstants, kernel: &FiniteKernel, t_n: usize) -> f64 {
    let (rows, cols) = kernel.weight.squared_line_maxima(kernel.horizon);
    let (first, second) = bn_state_terms(chain, constants, kernel, t_n);
    (rows * first).max(cols * second).sqrt()
}

/// `(B_n, C_n)` for independent draws from `pi`.
pub fn independent_bn_cn(pi: &[f64], kernel: &FiniteKernel) -> (f64, f64) {
    let n = kernel.horizon;
    let s = kernel.n_states();
    let d = kernel.centered(pi);
    let row_var: Vec<f64> = (0..s).map(|x| (0..s).map(|y| pi[y] * d[(x, y)].powi(2)).sum()).collect();
    let col_var: Vec<f64> = (0..s).map(|y| (0..s).map(|x| pi[x] * d[(x, y)].powi(2)).sum()).collect();
    let (rows, cols) = kernel.weight.squared_line_maxima(n);
    let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let b2 = (rows * sup(&row_var)).max(cols * sup(&col_var));
    let total: f64 = kernel.weight.squared_row_sums(n).iter().sum();
    let c2 = total * dot(pi, &row_var);
    (b2.sqrt(), c2.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemainderVariant {
    General,
    Stationary,
}

pub fn remainder_bound(variant: RemainderVariant, a: f64, l: f64, n: usize, t_n: usize) -> f64 {
    let t = t_n as f64;
    match variant {
        RemainderVariant::General => a * (2.0 * l + n as f64 * t),
        RemainderVariant::Stationary => 2.0 * l * a * (1.0 + t + t * t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Any start; weights must not depend on `i`.
    AnyStart,
    /// Start with a finite density ratio against `pi`.
    DensityRatio,
    Stationary,
    /// Pairs-normalized statistic.
    PairsNormalized,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::AnyStart => "any-start",
            Variant::DensityRatio => "density-ratio",
            Variant::Stationary => "stationary",
            Variant::PairsNormalized => "pairs-normalized",
        })
    }
}

/// Inputs of the tail-bound right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsInputs {
    pub a: f64,
    pub b_n: f64,
    pub c_n: Option<f64>,
    pub kappa: f64,
}

/// Right-hand side of the selected tail bound at level `u`.
///
/// The first three variants are on the raw scale; `PairsNormalized` is not, and
/// uses `max |h_{i,j}| = A / 2`.
pub fn tail_rhs(variant: Variant, inputs: &RhsInputs, n: usize, u: f64) -> Result<f64> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::InvalidInput(format!("u must be positive, got {u}")));
    }
    if n < 2 {
        return Err(Error::PathTooShort(n));
    }
    let RhsInputs { a, b_n, kappa, .. } = *inputs;
    let nf = n as f64;
    let log_n = nf.ln();
    let sqrt_n = nf.sqrt();
    let c_n = || {
        inputs
            .c_n
            .ok_or_else(|| Error::InvalidInput(format!("{variant} needs C_n")))
    };
    let value = match variant {
        Variant::AnyStart => {
            kappa
                * log_n
                * ((a * log_n * sqrt_n) * u.sqrt()
                    + (a + b_n * sqrt_n) * u
                    + (2.0 * a * sqrt_n) * u.powf(1.5)
                    + a * (u * u + nf))
        }
        Variant::DensityRatio => {
            kappa
                * log_n
                * ((c_n()? + a * log_n * sqrt_n) * u.sqrt()
                    + (a + b_n * sqrt_n) * u
                    + (2.0 * a * sqrt_n) * u.powf(1.5)
                    + a * (u * u + nf))
        }
        Variant::Stationary => {
            kappa
                * log_n
                * ((c_n()? + a * log_n * sqrt_n) * u.sqrt()
                    + (a + b_n * sqrt_n) * u
                    + (2.0 * a * sqrt_n) * u.powf(1.5)
                    + a * (u * u + log_n))
        }
        Variant::PairsNormalized => kappa * (a / 2.0) * log_n * (u / nf + (u / nf).powi(2)),
    };
    Ok(value)
}

/// `A`, `B_n`, `C_n`, `t_n` and the labelled constants `kappa`, `beta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundConstants {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "Bn")]
    pub b_n: f64,
    #[serde(rename = "Cn")]
    pub c_n: f64,
    #[serde(rename = "tn")]
    pub t_n: usize,
    pub r: f64,
    pub kappa: f64,
    pub beta: f64,
    /// `user` (supplied or default) or `calibrated` (fitted to simulations).
    pub constants_source: String,
    pub method: EstimationMethod,
    pub budgets: Option<ConstantsBudget>,
    pub flags: Vec<String>,
    pub depends_on_i: bool,
    pub stationary: bool,
    #[serde(rename = "L")]
    pub l: f64,
    pub rho: f64,
}

impl BoundConstants {
    pub fn rhs_inputs(&self) -> RhsInputs {
        RhsInputs { a: self.a, b_n: self.b_n, c_n: Some(self.c_n), kappa: self.kappa }
    }

    pub fn rhs(&self, variant: Variant, u: f64) -> Result<f64> {
        tail_rhs(variant, &self.rhs_inputs(), self.n, u)
    }

    /// Smallest general-start bound that applies: `AnyStart` needs weights
    /// that ignore `i`, `DensityRatio` a finite density ratio of the start.
    pub fn best_general_start(&self, u: f64, density_ratio_applicable: bool) -> Result<Option<(Variant, f64)>> {
        let mut best: Option<(Variant, f64)> = None;
        if !self.depends_on_i {
            best = Some((Variant::AnyStart, self.rhs(Variant::AnyStart, u)?));
        }
        if density_ratio_applicable {
            let v = self.rhs(Variant::DensityRatio, u)?;
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((Variant::DensityRatio, v));
            }
        }
        Ok(best)
    }
}

/// Tail-bound settings shared by the constant builders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSettings {
    pub r: Option<f64>,
    pub t_n: Option<usize>,
    pub kappa: f64,
    pub beta: f64,
    /// Caller-supplied `(L, rho)` replacing the derived pair.
    pub rate: Option<(f64, f64)>,
}

impl Default for BoundSettings {
    fn default() -> Self {
        BoundSettings { r: None, t_n: None, kappa: 1.0, beta: 1.0, rate: None }
    }
}

fn resolve_depth(rho: f64, n: usize, settings: &BoundSettings, flags: &mut Vec<String>) -> Result<Depth> {
    let mut depth = compute_tn(rho, n, settings.r)?;
    if let Some(t) = settings.t_n {
        if t < 1 || t > n {
            return Err(Error::InvalidInput(format!("t_n = {t} outside [1, {n}]")));
        }
        depth.t_n = t;
        depth.clamped = false;
        flags.push("tn-override".into());
    }
    if depth.clamped {
        flags.push("tn-clamped".into());
    }
    if !Depth::admissible(rho, n, depth.t_n) {
        flags.push("tn-below-admissible-depth".into());
    }
    Ok(depth)
}

/// Exact constants on a finite chain. `law = None` is a stationary start.
pub fn finite_bound_constants(
    chain: &FiniteChain,
    constants: &ErgodicityConstants,
    law: Option<&[f64]>,
    kernel: &FiniteKernel,
    settings: &BoundSettings,
) -> Result<BoundConstants> {
    let mut constants = constants.clone();
    let mut flags = Vec::new();
    if let Some((l, rho)) = settings.rate {
        constants = constants.with_rate(l, rho)?;
        flags.push("user-rate".into());
    }
    let n = kernel.horizon;
    let depth = resolve_depth(constants.rho, n, settings, &mut flags)?;
    let a = crate::kernels::sup_constant_finite(kernel).value;
    Ok(BoundConstants {
        n,
        a,
        b_n: compute_bn(chain, &constants, kernel, depth.t_n),
        c_n: compute_cn(chain, &constants, law, kernel),
        t_n: depth.t_n,
        r: depth.r,
        kappa: settings.kappa,
        beta: settings.beta,
        constants_source: "user".into(),
        method: EstimationMethod::ExactEnumeration,
        budgets: None,
        flags,
        depends_on_i: kernel.weight.depends_on_i(),
        stationary: law.is_none(),
        l: constants.l,
        rho: constants.rho,
    })
}

// ---------------------------------------------------------------------------
// Continuous models
// ---------------------------------------------------------------------------

/// Sample sizes used by the Monte Carlo constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantsBudget {
    /// Draws from `nu`, `pi` and the outer expectation.
    pub samples: usize,
    /// Draws from `P^k(z, .)` per outer point.
    pub inner: usize,
    /// Probe points for the sup over the free state.
    pub probes: usize,
    pub seed: u64,
}

/// Doeblin constants of the first-coordinate chain of a continuous model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousErgodicity {
    pub envelopes: ArchEnvelopes,
    /// `1 - delta_m` under the normalized density, with `L = 1`.
    pub rho: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

/// Envelopes of the first-coordinate transition density. For AR(1) models
/// these are the ARCH envelopes with `G = 1`, `b = sup |H|`, `sigma = noise_sd`.
pub fn continuous_ergodicity(model: &ChainModel) -> Result<ContinuousErgodicity> {
    let envelopes = match model {
        ChainModel::Ar1(m) => {
            m.validate()?;
            ArchEnvelopes::from_parameters(1.0, m.h.sup_abs(), 1.0, m.noise_sd, DensityConvention::Normalized)?
        }
        ChainModel::Arch(m) => arch_envelopes(m, DensityConvention::Normalized)?,
        ChainModel::Finite(_) => {
            return Err(Error::InvalidInput("finite chains use exact ergodicity constants".into()))
        }
    };
    let rho = (1.0 - envelopes.delta_m).max(0.0);
    if rho >= 1.0 {
        return Err(Error::MinorizationFailure);
    }
    Ok(ContinuousErgodicity { envelopes, rho, l: 1.0 })
}

/// Draws from the majorization measure `nu = g_M / delta_M`: uniform on
/// `[-b, b]` mixed with half-Gaussian tails of scale `sigma c` beyond `+-b`.
pub fn sample_nu(env: &ArchEnvelopes, count: usize, seed: u64, purpose: u32) -> Vec<f64> {
    let scale = env.sigma * env.c;
    let middle = 2.0 * env.b;
    let tail = scale * (std::f64::consts::PI / 2.0).sqrt();
    let p_middle = middle / (middle + 2.0 * tail);
    let mut rng = stream_rng(seed, auxiliary_stream(purpose, 0));
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            if u < p_middle {
                -env.b + 2.0 * env.b * rng.random::<f64>()
            } else {
                let z: f64 = rng.sample::<f64, _>(StandardNormal).abs();
                let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
                side * (env.b + scale * z)
            }
        })
        .collect()
}

/// `P^k(z, .)` draws for `k = 0..=depth`: `out[k][m]` for inner sample `m`.
fn forward_draws(model: &ChainModel, z: f64, depth: usize, inner: usize, seed: u64, purpose: u32, index: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; inner]; depth + 1];
    for m in 0..inner {
        let mut rng = stream_rng(seed, auxiliary_stream(purpose, index * inner + m));
        let mut x = z;
        out[0][m] = x;
        for row in out.iter_mut().skip(1) {
            x = scalar_step(model, x, &mut rng);
            row[m] = x;
        }
    }
    out
}

/// Monte Carlo constants on a continuous model. The sup over the free state
/// is a maximum over probe points, so `B_n` is a lower proxy.
pub fn mc_bound_constants(
    model: &ChainModel,
    initial: &Initial,
    family: &KernelFamily,
    settings: &BoundSettings,
    budget: &ConstantsBudget,
) -> Result<BoundConstants> {
    if budget.samples < 2 || budget.inner < 1 || budget.probes < 1 {
        return Err(Error::InvalidInput("Monte Carlo constants need a positive budget".into()));
    }
    family.check_model(model)?;
    let n = family.horizon;
    let erg = continuous_ergodicity(model)?;
    let (l, rho) = settings.rate.unwrap_or((erg.l, erg.rho));
    let mut flags = vec!["sup-over-probes".to_string(), "doeblin-rate".to_string()];
    if settings.rate.is_some() {
        flags.retain(|f| f != "doeblin-rate");
        flags.push("user-rate".into());
    }
    if let ChainModel::Ar1(m) = model {
        if m.dim > 1 {
            flags.push("first-coordinate-chain".into());
        }
    }
    let depth = resolve_depth(rho, n, settings, &mut flags)?;
    let mc = McBudget { samples: budget.samples, seed: budget.seed };
    let pi_a = stationary_samples(model, &mc, 10)?;
    let pi_b = stationary_samples(model, &mc, 11)?;
    let nu = sample_nu(&erg.envelopes, budget.samples, budget.seed, 12);
    let h = |x: f64, y: f64| family.base.eval_real(x, y);
    let e = pi_a.iter().zip(&pi_b).map(|(&x, &y)| h(x, y)).sum::<f64>() / budget.samples as f64;
    let d = |x: f64, y: f64| h(x, y) - e;

    let lo = pi_a.iter().chain(&nu).copied().fold(f64::INFINITY, f64::min);
    let hi = pi_a.iter().chain(&nu).copied().fold(f64::NEG_INFINITY, f64::max);
    let probes: Vec<f64> = if budget.probes == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..budget.probes).map(|k| lo + (hi - lo) * k as f64 / (budget.probes - 1) as f64).collect()
    };

    // First branch: outer X' ~ nu, inner X ~ P^k(X', .), free state x.
    let mut first = 0.0_f64;
    let from_nu: Vec<Vec<Vec<f64>>> = nu
        .iter()
        .enumerate()
        .map(|(o, &z)| forward_draws(model, z, depth.t_n, budget.inner, budget.seed, 13, o))
        .collect();
    for &x in &probes {
        for k in 0..=depth.t_n {
            let v = from_nu
                .iter()
                .map(|draws| {
                    let m = draws[k].iter().map(|&xx| d(x, xx)).sum::<f64>() / budget.inner as f64;
                    m * m
                })
                .sum::<f64>()
                / budget.samples as f64;
            first = first.max(v);
        }
    }
    // Second branch: free state y, inner X ~ P^k(y, .), outer X~ ~ pi.
    let mut second = 0.0_f64;
    for (p, &y) in probes.iter().enumerate() {
        let draws = forward_draws(model, y, depth.t_n, budget.inner, budget.seed, 14, p);
        for row in &draws {
            let v = pi_a
                .iter()
                .map(|&xt| {
                    let m = row.iter().map(|&xx| d(xt, xx)).sum::<f64>() / budget.inner as f64;
                    m * m
                })
                .sum::<f64>()
                / budget.samples as f64;
            second = second.max(v);
        }
    }
    let (rows, cols) = family.weight.squared_line_maxima(n);
    let b_n = (rows * first).max(cols * second).sqrt();

    let q = |x: f64| nu.iter().map(|&y| d(x, y).powi(2)).sum::<f64>() / nu.len() as f64;
    let weights = family.weight.squared_row_sums(n);
    let stationary = matches!(initial, Initial::Stationary);
    let c2 = if stationary {
        let eq = pi_a.iter().map(|&x| q(x)).sum::<f64>() / pi_a.len() as f64;
        eq * weights.iter().sum::<f64>()
    } else {
        let mut acc = vec![0.0; n];
        for k in 0..budget.samples {
            let path = simulate_stream(model, n, budget.seed, auxiliary_stream(15, k), initial)?;
            for (i, x) in path.scalar_values().into_iter().enumerate() {
                acc[i] += q(x);
            }
        }
        acc.iter().enumerate().map(|(i, s)| weights[i + 1] * s / budget.samples as f64).sum()
    };
    if stationary {
        flags.push("approximate-stationary".into());
    }
    let a = crate::kernels::sup_constant_probed(family, &probes)?.value;
    Ok(BoundConstants {
        n,
        a,
        b_n,
        c_n: c2.max(0.0).sqrt(),
        t_n: depth.t_n,
        r: depth.r,
        kappa: settings.kappa,
        beta: settings.beta,
        constants_source: "user".into(),
        method: EstimationMethod::MonteCarlo,
        budgets: Some(*budget),
        flags,
        depends_on_i: family.depends_on_i(),
        stationary,
        l,
        rho,
    })
}

// ---------------------------------------------------------------------------
// Density ratio and Bernstein inequality
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRatioNorm {
    /// Order `p`; `f64::INFINITY` for the sup norm.
    pub p: f64,
    pub q: f64,
    pub value: f64,
}

/// `|| d chi / d pi ||_{pi, p}` for finite laws.
pub fn density_ratio_norm(chi: &[f64], pi: &[f64], p: f64) -> Result<DensityRatioNorm> {
    if chi.len() != pi.len() {
        return Err(Error::InvalidInput("chi and pi have different lengths".into()));
    }
    if !(p > 1.0) {
        return Err(Error::InvalidInput(format!("order p must lie in (1, inf], got {p}")));
    }
    if let Some(x) = (0..pi.len()).find(|&x| pi[x] <= 0.0 && chi[x] > 0.0) {
        return Err(Error::InvalidInput(format!(
            "chi is not absolutely continuous w.r.t. pi at state {x}"
        )));
    }
    let ratios = (0..pi.len()).filter(|&x| pi[x] > 0.0).map(|x| (pi[x], chi[x] / pi[x]));
    let (value, q) = if p.is_infinite() {
        (ratios.map(|(_, r)| r).fold(0.0, f64::max), 1.0)
    } else {
        let s: f64 = ratios.map(|(w, r)| w * r.powf(p)).sum();
        (s.powf(1.0 / p), p / (p - 1.0))
    };
    Ok(DensityRatioNorm { p, q, value })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernsteinParams {
    pub lambda: f64,
    #[serde(rename = "A1")]
    pub a1: f64,
    #[serde(rename = "A2")]
    pub a2: f64,
    pub c: f64,
    pub sigma2: f64,
}

impl BernsteinParams {
    pub fn new(lambda: f64, c: f64, sigma2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidInput(format!("lambda must lie in [0, 1), got {lambda}")));
        }
        if !(c >= 0.0 && sigma2 >= 0.0) {
            return Err(Error::InvalidInput("c and sigma2 must be nonnegative".into()));
        }
        let a1 = if lambda == 0.0 { 1.0 / 3.0 } else { 5.0 / (1.0 - lambda) };
        let a2 = (1.0 + lambda) / (1.0 - lambda);
        Ok(BernsteinParams { lambda, a1, a2, c, sigma2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernsteinBound {
    pub threshold: f64,
    pub failure_probability: f64,
}

pub fn bernstein_mc_bound(params: &BernsteinParams, norm: &DensityRatioNorm, n: usize, u: f64) -> Result<BernsteinBound> {
    if !(u >= 0.0) || n == 0 {
        return Err(Error::InvalidInput("need u >= 0 and n >= 1".into()));
    }
    let nf = n as f64;
    let q = norm.q;
    let threshold = 2.0 * q * u * params.a1 * params.c / nf + (2.0 * q * u * params.a2 * params.sigma2 / nf).sqrt();
    Ok(BernsteinBound { threshold, failure_probability: norm.value * (-u).exp() })
}
