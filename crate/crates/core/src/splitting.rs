//! Split chain with a regeneration bell (minorization order one),
//! regeneration times, block sums, and empirical psi_1 Orlicz norms.
//!
//! The bell is drawn before the next state: with probability `delta` it rings
//! and the next state comes from `mu`, otherwise the next state comes from the
//! residual kernel `(P(x, .) - delta mu) / (1 - delta)`. The mixture equals `P`
//! exactly, so the state sequence is a copy of the original chain.

use std::ops::Range;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::chain::{cumulative, sample_cumulative, ErgodicityConstants, FiniteChain};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::ustat::mean_and_stderr;

/// Smallest sample accepted by [`orlicz_norm_estimate`].
pub const ORLICZ_MIN_SAMPLES: usize = 1000;
/// Relative bisection tolerance of [`orlicz_norm_estimate`].
pub const ORLICZ_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitTrace {
    pub states: Vec<usize>,
    /// `bells[t - 1]` is the bell drawn after state `t`.
    pub bells: Vec<bool>,
    pub delta: f64,
    pub seed: u64,
    pub stream: u64,
}

/// Residual kernel `(P - delta 1 mu) / (1 - delta)`; `None` when `delta = 1`.
pub fn residual_kernel(chain: &FiniteChain, delta: f64, mu: &[f64]) -> Option<DMatrix<f64>> {
    if delta >= 1.0 {
        return None;
    }
    let s = chain.n_states();
    Some(DMatrix::from_fn(s, s, |x, y| ((chain.p(x, y) - delta * mu[y]) / (1.0 - delta)).max(0.0)))
}

/// `max |delta mu(y) + (1 - delta) residual(x, y) - P(x, y)|`.
pub fn reconstruction_error(chain: &FiniteChain, delta: f64, mu: &[f64]) -> f64 {
    let s = chain.n_states();
    let res = residual_kernel(chain, delta, mu);
    let mut worst: f64 = 0.0;
    for x in 0..s {
        for y in 0..s {
            let r = res.as_ref().map_or(0.0, |m| m[(x, y)]);
            worst = worst.max((delta * mu[y] + (1.0 - delta) * r - chain.p(x, y)).abs());
        }
    }
    worst
}

/// Simulates `n` steps of the split chain started from the chain's declared
/// initial law.
pub fn split_simulate(chain: &FiniteChain, constants: &ErgodicityConstants, n: usize, seed: u64, stream: u64) -> Result<SplitTrace> {
    let delta = constants.delta_m;
    if !(delta > 0.0) {
        return Err(Error::MinorizationFailure);
    }
    if n < 2 {
        return Err(Error::PathTooShort(n));
    }
    let s = chain.n_states();
    let mu_cum = cumulative(&constants.mu);
    let residual: Option<Vec<Vec<f64>>> = residual_kernel(chain, delta, &constants.mu)
        .map(|m| (0..s).map(|x| cumulative(&m.row(x).iter().copied().collect::<Vec<_>>())).collect());
    let mut rng = stream_rng(seed, stream);
    let mut x = sample_cumulative(&cumulative(chain.initial()), &mut rng);
    let mut states = Vec::with_capacity(n);
    let mut bells = Vec::with_capacity(n);
    for t in 0..n {
        states.push(x);
        let ring = delta >= 1.0 || rng.random::<f64>() < delta;
        bells.push(ring);
        if t + 1 < n {
            x = match (&residual, ring) {
                (Some(res), false) => sample_cumulative(&res[x], &mut rng),
                _ => sample_cumulative(&mu_cum, &mut rng),
            };
        }
    }
    Ok(SplitTrace { states, bells, delta, seed, stream })
}

impl SplitTrace {
    /// 1-based times `S_1 < S_2 < ...` at which the bell rang.
    pub fn bell_times(&self) -> Vec<usize> {
        self.bells.iter().enumerate().filter(|(_, &b)| b).map(|(t, _)| t + 1).collect()
    }

    /// `T_1 = S_1` and `T_{i+1} = S_{i+1} - S_i`.
    pub fn regeneration_times(&self) -> Result<Vec<usize>> {
        let times = self.bell_times();
        if times.is_empty() {
            return Err(Error::NoRegeneration(self.states.len()));
        }
        let mut out = Vec::with_capacity(times.len());
        out.push(times[0]);
        out.extend(times.windows(2).map(|w| w[1] - w[0]));
        Ok(out)
    }

    /// 0-based index ranges of the complete blocks `S_i + 1 ..= S_{i+1}`.
    pub fn blocks(&self) -> Vec<Range<usize>> {
        self.bell_times().windows(2).map(|w| w[0]..w[1]).collect()
    }

    /// CSV with header `step,state,bell`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,state,bell\n");
        for (t, (x, b)) in self.states.iter().zip(&self.bells).enumerate() {
            out.push_str(&format!("{},{},{}\n", t + 1, x, u8::from(*b)));
        }
        out
    }
}

pub fn regeneration_times(trace: &SplitTrace) -> Result<Vec<usize>> {
    trace.regeneration_times()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSums {
    pub sums: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
}

/// Sums of `f` over each complete block.
pub fn block_sums(trace: &SplitTrace, f: &[f64]) -> Result<BlockSums> {
    let blocks = trace.blocks();
    if blocks.len() < 2 {
        return Err(Error::TooFewBlocks(blocks.len()));
    }
    let sums: Vec<f64> = blocks
        .into_iter()
        .map(|r| trace.states[r].iter().map(|&x| f[x]).sum())
        .collect();
    let (mean, stderr) = mean_and_stderr(&sums);
    Ok(BlockSums { sums, mean, stderr })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrliczEstimate {
    pub tau_hat: f64,
    pub sample_size: usize,
    pub bracket: (f64, f64),
    /// Sample mean of `exp(|T| / tau_hat)`.
    pub moment_at_tau: f64,
}

fn exp_moment(samples: &[f64], gamma: f64) -> f64 {
    samples.iter().map(|t| (t.abs() / gamma).exp()).sum::<f64>() / samples.len() as f64
}

/// Smallest `gamma` with sample mean of `exp(|T|/gamma) <= 2`, by bisection
/// inside `[max|T|/50, 50 max|T|]`.
pub fn orlicz_norm_estimate(samples: &[f64]) -> Result<OrliczEstimate> {
    if samples.len() < ORLICZ_MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "Orlicz estimation needs at least {ORLICZ_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("samples must be finite".into()));
    }
    let max = samples.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let (lo0, hi0) = (max / 50.0, 50.0 * max);
    if !(max > 0.0) || exp_moment(samples, lo0) <= 2.0 || exp_moment(samples, hi0) > 2.0 {
        return Err(Error::OrliczBracket { lo: lo0, hi: hi0 });
    }
    let (mut lo, mut hi) = (lo0, hi0);
    while hi - lo > ORLICZ_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if exp_moment(samples, mid) <= 2.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(OrliczEstimate {
        tau_hat: hi,
        sample_size: samples.len(),
        bracket: (lo0, hi0),
        moment_at_tau: exp_moment(samples, hi),
    })
}
