//! Weighted U-statistics, their martingale/remainder decomposition, and rank
//! statistics.
//!
//! Indices follow the usual convention: the path is `X_1, ..., X_n` and pairs
//! are `1 <= i < j <= n`. Conditional expectations `E_l[.] = E[. | X_1..X_l]`
//! are computed exactly on finite chains from powers of the transition matrix;
//! for `l < 1` they reduce to plain expectations under the initial law.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::{
    finite_initial_law, simulate_stream, stationary_samples, ChainModel, ChainPath, FiniteChain, Initial,
    MatrixPowers, McBudget,
};
use crate::error::{Error, Result};
use crate::kernels::{FiniteKernel, KernelFamily};
use crate::rng::auxiliary_stream;

pub const CSV_HEADER: &str = "statistic,n,seed,centering,value,stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    /// Subtract `E[h_{i,j}(X_i, X_j)]` under the path's initial law.
    JointExpectation,
    /// Subtract `E_{pi x pi}[h_{i,j}]`.
    PiExpectation,
    None,
}

impl FromStr for Centering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint-expectation" | "joint" => Ok(Centering::JointExpectation),
            "pi-expectation" | "pi" => Ok(Centering::PiExpectation),
            "none" => Ok(Centering::None),
            other => Err(Error::InvalidInput(format!("unknown centering `{other}`"))),
        }
    }
}

impl fmt::Display for Centering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Centering::JointExpectation => "joint-expectation",
            Centering::PiExpectation => "pi-expectation",
            Centering::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Raw,
    /// Multiplied by `2 / (n (n - 1))`.
    PairsNormalized,
}

impl Normalization {
    pub fn factor(self, n: usize) -> f64 {
        match self {
            Normalization::Raw => 1.0,
            Normalization::PairsNormalized => 2.0 / (n as f64 * (n as f64 - 1.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UStatResult {
    pub value: f64,
    pub centering: Centering,
    pub n: usize,
    pub normalization: Normalization,
    /// Standard error of the sampled centering term (0 when exact).
    pub stderr: f64,
}

/// `sum_{i<j} a_{i,j} h(x_i, x_j)` on a finite path.
///
/// Runs in `O(n S)` when the weight does not depend on `i`, by keeping counts
/// of the states seen so far; otherwise in `O(n^2)`.
pub fn pair_sum_finite(states: &[usize], kernel: &FiniteKernel) -> f64 {
    let n = states.len();
    let s = kernel.n_states();
    let mut total = 0.0;
    if !kernel.weight.depends_on_i() {
        let mut counts = vec![0.0; s];
        counts[states[0]] += 1.0;
        for j in 2..=n {
            let y = states[j - 1];
            let inner: f64 = (0..s).map(|a| counts[a] * kernel.table[(a, y)]).sum();
            total += kernel.weight.column(j) * inner;
            counts[y] += 1.0;
        }
    } else {
        for j in 2..=n {
            let y = states[j - 1];
            let mut inner = 0.0;
            for i in 1..j {
                inner += kernel.weight.at(i, j) * kernel.table[(states[i - 1], y)];
            }
            total += inner;
        }
    }
    total
}

/// `sum_{i<j} a_{i,j} h(x_i, x_j)` on real-valued states.
pub fn pair_sum_real(values: &[f64], family: &KernelFamily) -> f64 {
    let n = values.len();
    let mut total = 0.0;
    for j in 2..=n {
        let y = values[j - 1];
        let mut inner = 0.0;
        for i in 1..j {
            inner += family.weight.at(i, j) * family.base.eval_real(values[i - 1], y);
        }
        total += inner;
    }
    total
}

/// Laws of `X_i` and the lag functions `g_d(a) = sum_b P^d(a,b) h(a,b)`.
#[derive(Debug, Clone)]
pub struct PairMoments {
    laws: Vec<Vec<f64>>,
    /// `lag[d][a]` for `d = 0..n-1`.
    lag: Vec<Vec<f64>>,
}

impl PairMoments {
    pub fn new(chain: &FiniteChain, law: &[f64], kernel: &FiniteKernel, n: usize) -> Self {
        let s = chain.n_states();
        let laws = chain.marginal_laws(law, n);
        let mut lag = Vec::with_capacity(n);
        let mut power = DMatrix::<f64>::identity(s, s);
        for d in 0..n {
            if d > 0 {
                power = &power * chain.matrix();
            }
            lag.push((0..s).map(|a| (0..s).map(|b| power[(a, b)] * kernel.table[(a, b)]).sum()).collect());
        }
        PairMoments { laws, lag }
    }

    /// `E[h(X_i, X_j)]` for `i < j`.
    pub fn mean(&self, i: usize, j: usize) -> f64 {
        dot(&self.laws[i - 1], &self.lag[j - i])
    }

    pub fn lag(&self, d: usize) -> &[f64] {
        &self.lag[d]
    }

    /// `sum_{i<j} a_{i,j} E[h(X_i, X_j)]`.
    pub fn weighted_total(&self, kernel: &FiniteKernel) -> f64 {
        let n = self.laws.len();
        let mut total = 0.0;
        if !kernel.weight.depends_on_i() {
            for j in 2..=n {
                let inner: f64 = (1..j).map(|i| self.mean(i, j)).sum();
                total += kernel.weight.column(j) * inner;
            }
        } else {
            for j in 2..=n {
                for i in 1..j {
                    total += kernel.weight.at(i, j) * self.mean(i, j);
                }
            }
        }
        total
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Total centering `sum_{i<j} a_{i,j} c_{i,j}` on a finite chain.
pub fn finite_center(chain: &FiniteChain, law: &[f64], kernel: &FiniteKernel, centering: Centering) -> Result<f64> {
    let n = kernel.horizon;
    Ok(match centering {
        Centering::None => 0.0,
        Centering::PiExpectation => {
            let pi = crate::chain::stationary_distribution(chain)?;
            kernel.pi_mean(&pi) * kernel.weight.total(n)
        }
        Centering::JointExpectation => PairMoments::new(chain, law, kernel, n).weighted_total(kernel),
    })
}

/// Precomputed evaluator for repeated statistics on one finite setup.
#[derive(Debug, Clone)]
pub struct FiniteEvaluator {
    pub kernel: FiniteKernel,
    pub center: f64,
    pub centering: Centering,
}

impl FiniteEvaluator {
    pub fn new(chain: &FiniteChain, law: &[f64], kernel: FiniteKernel, centering: Centering) -> Result<Self> {
        let center = finite_center(chain, law, &kernel, centering)?;
        Ok(FiniteEvaluator { kernel, center, centering })
    }

    pub fn raw(&self, states: &[usize]) -> f64 {
        pair_sum_finite(states, &self.kernel) - self.center
    }
}

/// Sampled centering `(total, stderr)` for a continuous model.
pub fn continuous_center(
    model: &ChainModel,
    family: &KernelFamily,
    initial: &Initial,
    centering: Centering,
    budget: Option<&McBudget>,
) -> Result<(f64, f64)> {
    let n = family.horizon;
    let need = || {
        budget.copied().ok_or_else(|| {
            Error::InvalidInput(format!("{centering} centering on a continuous model needs a sampling budget"))
        })
    };
    match centering {
        Centering::None => Ok((0.0, 0.0)),
        Centering::PiExpectation => {
            let b = need()?;
            let first = stationary_samples(model, &b, 1)?;
            let second = stationary_samples(model, &b, 2)?;
            let vals: Vec<f64> = first.iter().zip(&second).map(|(&x, &y)| family.base.eval_real(x, y)).collect();
            let (mean, se) = mean_and_stderr(&vals);
            let total = family.weight.total(n);
            Ok((mean * total, se * total.abs()))
        }
        Centering::JointExpectation => {
            let b = need()?;
            b.check()?;
            let sums = (0..b.samples)
                .map(|k| {
                    let path = simulate_stream(model, n, b.seed, auxiliary_stream(3, k), initial)?;
                    Ok(pair_sum_real(&path.scalar_values(), family))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(mean_and_stderr(&sums))
        }
    }
}

pub(crate) fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// The centered U-statistic of `path`.
pub fn u_stat(
    model: &ChainModel,
    path: &ChainPath,
    family: &KernelFamily,
    centering: Centering,
    normalization: Normalization,
    budget: Option<&McBudget>,
) -> Result<UStatResult> {
    let n = path.len();
    if n != family.horizon {
        return Err(Error::HorizonMismatch { path: n, kernel: family.horizon });
    }
    family.check_model(model)?;
    let (raw, stderr) = match (model, path.finite_states()) {
        (ChainModel::Finite(chain), Some(states)) => {
            let law = finite_initial_law(chain, &path.initial)?;
            let eval = FiniteEvaluator::new(chain, &law, family.tabulate(chain)?, centering)?;
            (eval.raw(states), 0.0)
        }
        (ChainModel::Finite(_), None) | (_, Some(_)) => {
            return Err(Error::InvalidInput("path does not belong to the model".into()))
        }
        _ => {
            let (center, se) = continuous_center(model, family, &path.initial, centering, budget)?;
            (pair_sum_real(&path.scalar_values(), family) - center, se)
        }
    };
    let factor = normalization.factor(n);
    Ok(UStatResult { value: raw * factor, centering, n, normalization, stderr: stderr * factor })
}

// ---------------------------------------------------------------------------
// Martingale decomposition
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionResult {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub t_n: usize,
    /// `levels[k-1] = sum_{i<j} a_{i,j} (E_{j-k+1} - E_{j-k}) h(X_i, X_j)`.
    pub levels: Vec<f64>,
    /// Joint-expectation-centered U-statistic.
    pub ustat: f64,
    /// `|M + R - U|`.
    pub residual: f64,
}

/// Exact conditional expectations `E_l[h(X_i, X_j)]` along a fixed path.
struct Conditioner<'a> {
    states: &'a [usize],
    kernel: &'a FiniteKernel,
    moments: PairMoments,
    powers: Vec<DMatrix<f64>>,
    /// `hp[k][(x, y)] = sum_b h(x, b) P^k(y, b)`.
    hp: Vec<DMatrix<f64>>,
}

impl<'a> Conditioner<'a> {
    fn new(chain: &FiniteChain, law: &[f64], states: &'a [usize], kernel: &'a FiniteKernel, depth: usize) -> Self {
        let n = states.len();
        let mut mp = MatrixPowers::new(chain);
        let powers = mp.up_to(depth).to_vec();
        let hp = powers.iter().map(|pk| &kernel.table * pk.transpose()).collect();
        Conditioner { states, kernel, moments: PairMoments::new(chain, law, kernel, n), powers, hp }
    }

    /// `E_l[h(X_i, X_j)]` with 1-based `i < j` and `l` possibly below 1.
    fn at(&self, l: i64, i: usize, j: usize) -> f64 {
        let x = |t: usize| self.states[t - 1];
        if l >= j as i64 {
            return self.kernel.h(x(i), x(j));
        }
        if l < 1 {
            return self.moments.mean(i, j);
        }
        let l = l as usize;
        if i <= l {
            self.hp[j - l][(x(i), x(l))]
        } else {
            let lag = self.moments.lag(j - i);
            let row = self.powers[i - l].row(x(l));
            row.iter().zip(lag).map(|(p, g)| p * g).sum()
        }
    }
}

/// Splits the joint-centered U-statistic into `t_n` martingale levels and a
/// remainder, using exact conditional expectations.
pub fn martingale_decomposition(
    chain: &FiniteChain,
    law: &[f64],
    states: &[usize],
    kernel: &FiniteKernel,
    t_n: usize,
) -> Result<DecompositionResult> {
    let n = states.len();
    if n < 2 {
        return Err(Error::PathTooShort(n));
    }
    if n != kernel.horizon {
        return Err(Error::HorizonMismatch { path: n, kernel: kernel.horizon });
    }
    if t_n < 1 || t_n > n {
        return Err(Error::InvalidInput(format!("t_n = {t_n} outside [1, {n}]")));
    }
    let cond = Conditioner::new(chain, law, states, kernel, t_n);
    let mut levels = vec![0.0; t_n];
    let mut r = 0.0;
    let mut ustat = 0.0;
    let mut chain_of_levels = vec![0.0; t_n + 1];
    for j in 2..=n {
        for i in 1..j {
            let a = kernel.weight.at(i, j);
            if a == 0.0 {
                continue;
            }
            for (k, slot) in chain_of_levels.iter_mut().enumerate() {
                *slot = cond.at(j as i64 - k as i64, i, j);
            }
            for k in 1..=t_n {
                levels[k - 1] += a * (chain_of_levels[k - 1] - chain_of_levels[k]);
            }
            let mean = cond.moments.mean(i, j);
            r += a * (chain_of_levels[t_n] - mean);
            ustat += a * (chain_of_levels[0] - mean);
        }
    }
    let m: f64 = levels.iter().sum();
    Ok(DecompositionResult { m, r, t_n, levels, ustat, residual: (m + r - ustat).abs() })
}

/// `E_{j-1}[Y_j]` for `j = 2..n`, where
/// `Y_j = sum_{i<j} a_{i,j} (h(X_i, X_j) - sum_w h(X_i, w) P(X_{j-1}, w))`,
/// computed by summing over the conditional law of `X_j`.
pub fn martingale_residuals(chain: &FiniteChain, states: &[usize], kernel: &FiniteKernel) -> Vec<f64> {
    let n = states.len();
    let s = chain.n_states();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for j in 2..=n {
        let prev = states[j - 2];
        let mut expect = 0.0;
        for z in 0..s {
            let pz = chain.p(prev, z);
            if pz == 0.0 {
                continue;
            }
            let mut y = 0.0;
            for i in 1..j {
                let xi = states[i - 1];
                let drift: f64 = (0..s).map(|w| kernel.h(xi, w) * chain.p(prev, w)).sum();
                y += kernel.weight.at(i, j) * (kernel.h(xi, z) - drift);
            }
            expect += pz * y;
        }
        out.push(expect);
    }
    out
}

// ---------------------------------------------------------------------------
// Rank statistics
// ---------------------------------------------------------------------------

fn check_distinct(x: &[f64]) -> Result<()> {
    if let Some(p) = x.iter().position(|v| v.is_nan()) {
        return Err(Error::InvalidInput(format!("NaN at position {}", p + 1)));
    }
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    for w in idx.windows(2) {
        if x[w[0]] == x[w[1]] {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::Ties { first: a + 1, second: b + 1 });
        }
    }
    Ok(())
}

/// Kendall's tau of the sequence against its index order.
pub fn tau_kendall(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::PathTooShort(n));
    }
    check_distinct(x)?;
    let mut concordant = 0usize;
    for j in 1..n {
        concordant += (0..j).filter(|&i| x[i] < x[j]).count();
    }
    // Each concordant unordered pair is counted twice in the ordered sum.
    Ok(4.0 * concordant as f64 / (n as f64 * (n as f64 - 1.0)) - 1.0)
}

/// Average-precision correlation of the sequence against its index order.
pub fn tau_ap(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::PathTooShort(n));
    }
    check_distinct(x)?;
    let mut total = 0.0;
    for j in 1..n {
        let below = (0..j).filter(|&i| x[i] < x[j]).count();
        total += below as f64 / j as f64;
    }
    Ok(2.0 / (n as f64 - 1.0) * total - 1.0)
}

/// Weighted two-sample Wilcoxon statistic with kernel
/// `h(x, y) = 1{x < y}/2 + 1{x <= y}/2`, `x` from the first sample.
pub fn wilcoxon_weighted(sample0: &[f64], sample1: &[f64], weights0: &[f64], weights1: &[f64]) -> Result<f64> {
    if sample0.is_empty() || sample1.is_empty() {
        return Err(Error::InvalidInput("both samples must be non-empty".into()));
    }
    if sample0.len() != weights0.len() || sample1.len() != weights1.len() {
        return Err(Error::InvalidInput("each sample needs one weight per observation".into()));
    }
    if let Some(w) = weights0.iter().chain(weights1).find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidInput(format!("weights must be positive and finite, got {w}")));
    }
    let total0: f64 = weights0.iter().sum();
    let total1: f64 = weights1.iter().sum();
    let mut acc = 0.0;
    for (x, wx) in sample0.iter().zip(weights0) {
        for (y, wy) in sample1.iter().zip(weights1) {
            let h = if x < y {
                1.0
            } else if x == y {
                0.5
            } else {
                0.0
            };
            acc += h * wx * wy;
        }
    }
    Ok(acc / (total0 * total1))
}
