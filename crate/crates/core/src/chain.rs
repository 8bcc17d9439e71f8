//! Chain models, trajectory simulation and ergodicity constants.
//!
//! Three model families are supported: finite-state chains given by a
//! row-stochastic matrix, bounded AR(1) recursions `X' = H(X) + Z` and scalar
//! ARCH recursions `X' = H(X) + G(X) Z`, both with Gaussian noise.
//!
//! For finite chains every constant consumed by the tail bounds is computed
//! exactly: the invariant law, the Dobrushin coefficient (used as the
//! geometric rate with prefactor `L = 1`), the second-largest eigenvalue
//! modulus, the Doeblin minorization/majorization pairs obtained from column
//! minima and maxima, and the mixing time.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{auxiliary_stream, stream_rng, StreamRng};

const STOCHASTIC_TOL: f64 = 1e-12;
const STATIONARY_RESIDUAL_TOL: f64 = 1e-12;
const MAX_MIXING_STEPS: usize = 1_000_000;

// ---------------------------------------------------------------------------
// Finite chains
// ---------------------------------------------------------------------------

/// Plain description of a finite chain, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSpec {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<f64>>,
}

/// Finite-state chain with a validated transition matrix.
///
/// `labels` are the numeric values attached to the states; label-aware kernels
/// (cosine, indicators) read them. They default to `0, 1, ..., S-1`. The
/// declared initial law defaults to the uniform distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FiniteSpec", into = "FiniteSpec")]
pub struct FiniteChain {
    p: DMatrix<f64>,
    initial: Vec<f64>,
    labels: Vec<f64>,
}

impl TryFrom<FiniteSpec> for FiniteChain {
    type Error = Error;

    fn try_from(spec: FiniteSpec) -> Result<Self> {
        let chain = FiniteChain::new(spec.matrix)?;
        let chain = match spec.initial {
            Some(init) => chain.with_initial(init)?,
            None => chain,
        };
        match spec.labels {
            Some(labels) => chain.with_labels(labels),
            None => Ok(chain),
        }
    }
}

impl From<FiniteChain> for FiniteSpec {
    fn from(chain: FiniteChain) -> Self {
        let s = chain.n_states();
        FiniteSpec {
            matrix: (0..s).map(|x| chain.row(x).to_vec()).collect(),
            initial: Some(chain.initial),
            labels: Some(chain.labels),
        }
    }
}

impl FiniteChain {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let s = rows.len();
        if s == 0 {
            return Err(Error::InvalidModel("transition matrix is empty".into()));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != s {
                return Err(Error::InvalidModel(format!(
                    "row {x} has {} entries, expected {s}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidModel(format!(
                    "row {x} has entry {v} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidModel(format!("row {x} sums to {sum}, not 1")));
            }
        }
        let p = DMatrix::from_fn(s, s, |x, y| rows[x][y]);
        Ok(FiniteChain {
            p,
            initial: vec![1.0 / s as f64; s],
            labels: (0..s).map(|x| x as f64).collect(),
        })
    }

    pub fn with_initial(mut self, initial: Vec<f64>) -> Result<Self> {
        validate_law(&initial, self.n_states(), "initial law")?;
        self.initial = initial;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != self.n_states() {
            return Err(Error::InvalidModel(format!(
                "{} labels for {} states",
                labels.len(),
                self.n_states()
            )));
        }
        if labels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("state labels must be finite".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.p[(x, y)]
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        self.p.row(x).iter().copied().collect()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `law * P`.
    pub fn step_law(&self, law: &[f64]) -> Vec<f64> {
        let s = self.n_states();
        (0..s)
            .map(|y| (0..s).map(|x| law[x] * self.p[(x, y)]).sum())
            .collect()
    }

    /// Laws of `X_1, ..., X_n` when `X_1 ~ start`.
    pub fn marginal_laws(&self, start: &[f64], n: usize) -> Vec<Vec<f64>> {
        let mut laws = Vec::with_capacity(n);
        let mut cur = start.to_vec();
        for _ in 0..n {
            let next = self.step_law(&cur);
            laws.push(cur);
            cur = next;
        }
        laws
    }
}

fn validate_law(law: &[f64], s: usize, what: &str) -> Result<()> {
    if law.len() != s {
        return Err(Error::InvalidModel(format!(
            "{what} has {} entries, expected {s}",
            law.len()
        )));
    }
    if law.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidModel(format!("{what} has entries outside [0, 1]")));
    }
    let sum: f64 = law.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Memoized powers `P^0, P^1, ...` of a transition matrix.
#[derive(Debug, Clone)]
pub struct MatrixPowers {
    p: DMatrix<f64>,
    powers: Vec<DMatrix<f64>>,
}

impl MatrixPowers {
    pub fn new(chain: &FiniteChain) -> Self {
        let s = chain.n_states();
        MatrixPowers {
            p: chain.matrix().clone(),
            powers: vec![DMatrix::identity(s, s)],
        }
    }

    pub fn get(&mut self, k: usize) -> &DMatrix<f64> {
        while self.powers.len() <= k {
            let next = self.powers.last().unwrap() * &self.p;
            self.powers.push(next);
        }
        &self.powers[k]
    }

    /// Ensures powers up to `k` are cached and returns them all.
    pub fn up_to(&mut self, k: usize) -> &[DMatrix<f64>] {
        self.get(k);
        &self.powers[..=k]
    }
}

/// Total variation distance `sup_A |p(A) - q(A)|`, i.e. half the L1 distance.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn check_primitive(chain: &FiniteChain) -> Result<()> {
    let s = chain.n_states();
    let max_power = s * s;
    let support = chain.matrix().map(|v| v > 0.0);
    let mut cur = support.clone();
    for _ in 1..=max_power {
        if cur.iter().all(|&b| b) {
            return Ok(());
        }
        cur = DMatrix::from_fn(s, s, |x, y| (0..s).any(|z| cur[(x, z)] && support[(z, y)]));
    }
    // `cur` now holds the support of P^{max_power + 1}; report the last checked power.
    let mut last = support.clone();
    for _ in 1..max_power {
        last = DMatrix::from_fn(s, s, |x, y| (0..s).any(|z| last[(x, z)] && support[(z, y)]));
    }
    let (row, col) = (0..s)
        .flat_map(|x| (0..s).map(move |y| (x, y)))
        .find(|&(x, y)| !last[(x, y)])
        .unwrap_or((0, 0));
    Err(Error::NotPrimitive { max_power, row, col })
}

/// Unique invariant law of an irreducible aperiodic finite chain.
pub fn stationary_distribution(chain: &FiniteChain) -> Result<Vec<f64>> {
    check_primitive(chain)?;
    let s = chain.n_states();
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = chain.matrix().transpose() - DMatrix::<f64>::identity(s, s);
    for y in 0..s {
        a[(s - 1, y)] = 1.0;
    }
    let mut b = nalgebra::DVector::zeros(s);
    b[s - 1] = 1.0;
    let solved = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidModel("singular stationary system".into()))?;
    let mut pi: Vec<f64> = solved.iter().map(|v| v.max(0.0)).collect();
    // Two power sweeps polish the last ulps of the direct solve.
    for _ in 0..2 {
        pi = chain.step_law(&pi);
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|v| *v /= total);
    }
    let residual = chain
        .step_law(&pi)
        .iter()
        .zip(&pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(Error::InvalidModel(format!(
            "stationary residual {residual:e} exceeds {STATIONARY_RESIDUAL_TOL:e}"
        )));
    }
    Ok(pi)
}

/// Where the `(L, rho)` pair of an [`ErgodicityConstants`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateSource {
    Dobrushin,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityConstants {
    pub pi: Vec<f64>,
    pub rho: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub rate_source: RateSource,
    pub lambda: f64,
    pub delta_m: f64,
    pub mu: Vec<f64>,
    /// Minorization order; always 1 here.
    pub m: usize,
    #[serde(rename = "delta_M")]
    pub delta_major: f64,
    pub nu: Vec<f64>,
    pub t_mix: usize,
}

impl ErgodicityConstants {
    /// Replaces the Dobrushin-derived `(L, rho)` by a caller-supplied pair.
    pub fn with_rate(mut self, l: f64, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) || !(l >= 0.0) || !l.is_finite() {
            return Err(Error::InvalidInput(format!(
                "need 0 < rho < 1 and L >= 0, got rho = {rho}, L = {l}"
            )));
        }
        self.l = l;
        self.rho = rho;
        self.rate_source = RateSource::User;
        Ok(self)
    }
}

/// Dobrushin contraction coefficient `max_{x,x'} TV(P(x,.), P(x',.))`.
pub fn dobrushin_coefficient(chain: &FiniteChain) -> f64 {
    let s = chain.n_states();
    let rows: Vec<Vec<f64>> = (0..s).map(|x| chain.row(x)).collect();
    let mut rho: f64 = 0.0;
    for x in 0..s {
        for x2 in (x + 1)..s {
            rho = rho.max(total_variation(&rows[x], &rows[x2]));
        }
    }
    rho
}

/// Second-largest eigenvalue modulus of `P`.
pub fn slem(chain: &FiniteChain) -> f64 {
    let s = chain.n_states();
    if s == 1 {
        return 0.0;
    }
    let eig = chain.matrix().clone().complex_eigenvalues();
    let mut moduli: Vec<(f64, f64)> = eig.iter().map(|z| ((z - 1.0).norm(), z.norm())).collect();
    // Drop the Perron eigenvalue (the one closest to 1).
    moduli.sort_by(|a, b| a.0.total_cmp(&b.0));
    moduli[1..].iter().map(|m| m.1).fold(0.0, f64::max)
}

/// Least `t` with `sup_x TV(P^t(x,.), pi) < 1/4`.
pub fn mixing_time(chain: &FiniteChain, pi: &[f64]) -> Result<usize> {
    let s = chain.n_states();
    let mut pt = DMatrix::<f64>::identity(s, s);
    for t in 0..=MAX_MIXING_STEPS {
        let worst = (0..s)
            .map(|x| {
                let row: Vec<f64> = pt.row(x).iter().copied().collect();
                total_variation(&row, pi)
            })
            .fold(0.0, f64::max);
        if worst < 0.25 {
            return Ok(t);
        }
        pt = &pt * chain.matrix();
    }
    Err(Error::InvalidModel(format!(
        "chain did not mix within {MAX_MIXING_STEPS} steps"
    )))
}

/// Column-minimum minorization pair `(delta_m, mu)`.
pub fn minorization(chain: &FiniteChain) -> Result<(f64, Vec<f64>)> {
    let s = chain.n_states();
    let mins: Vec<f64> = (0..s)
        .map(|y| (0..s).map(|x| chain.p(x, y)).fold(f64::INFINITY, f64::min))
        .collect();
    let delta: f64 = mins.iter().sum();
    if delta <= 0.0 {
        return Err(Error::MinorizationFailure);
    }
    Ok((delta, mins.iter().map(|v| v / delta).collect()))
}

/// Column-maximum majorization pair `(delta_M, nu)`.
pub fn majorization(chain: &FiniteChain) -> (f64, Vec<f64>) {
    let s = chain.n_states();
    let maxs: Vec<f64> = (0..s)
        .map(|y| (0..s).map(|x| chain.p(x, y)).fold(0.0, f64::max))
        .collect();
    let delta: f64 = maxs.iter().sum();
    (delta, maxs.iter().map(|v| v / delta).collect())
}

pub fn ergodicity_constants(chain: &FiniteChain) -> Result<ErgodicityConstants> {
    let pi = stationary_distribution(chain)?;
    let rho = dobrushin_coefficient(chain);
    if rho >= 1.0 {
        return Err(Error::NotContracting { rho });
    }
    let (delta_m, mu) = minorization(chain)?;
    let (delta_major, nu) = majorization(chain);
    let lambda = slem(chain);
    let t_mix = mixing_time(chain, &pi)?;
    Ok(ErgodicityConstants {
        pi,
        rho,
        l: 1.0,
        rate_source: RateSource::Dobrushin,
        lambda,
        delta_m,
        mu,
        m: 1,
        delta_major,
        nu,
        t_mix,
    })
}

// ---------------------------------------------------------------------------
// Continuous models
// ---------------------------------------------------------------------------

/// Named scalar maps `offset + amplitude * shape(gain * x)` used for the
/// drift and volatility functions of the continuous models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarMap {
    Constant {
        value: f64,
    },
    Tanh {
        amplitude: f64,
        #[serde(default = "unit")]
        gain: f64,
        #[serde(default)]
        offset: f64,
    },
    Sin {
        amplitude: f64,
        #[serde(default = "unit")]
        gain: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `offset + amplitude * exp(-(gain x)^2)`.
    Bump {
        amplitude: f64,
        #[serde(default = "unit")]
        gain: f64,
        #[serde(default)]
        offset: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl ScalarMap {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScalarMap::Constant { value } => value,
            ScalarMap::Tanh { amplitude, gain, offset } => offset + amplitude * (gain * x).tanh(),
            ScalarMap::Sin { amplitude, gain, offset } => offset + amplitude * (gain * x).sin(),
            ScalarMap::Bump { amplitude, gain, offset } => {
                offset + amplitude * (-(gain * x).powi(2)).exp()
            }
        }
    }

    /// Closed interval containing every value of the map.
    pub fn range(&self) -> (f64, f64) {
        match *self {
            ScalarMap::Constant { value } => (value, value),
            ScalarMap::Tanh { amplitude, offset, .. } | ScalarMap::Sin { amplitude, offset, .. } => {
                (offset - amplitude.abs(), offset + amplitude.abs())
            }
            ScalarMap::Bump { amplitude, offset, .. } => {
                let (lo, hi) = if amplitude >= 0.0 { (0.0, amplitude) } else { (amplitude, 0.0) };
                (offset + lo, offset + hi)
            }
        }
    }

    pub fn sup_abs(&self) -> f64 {
        let (lo, hi) = self.range();
        lo.abs().max(hi.abs())
    }

    pub fn inf_abs(&self) -> f64 {
        let (lo, hi) = self.range();
        if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else {
            lo.abs().min(hi.abs())
        }
    }

    fn is_finite(&self) -> bool {
        let (lo, hi) = self.range();
        lo.is_finite() && hi.is_finite()
    }
}

/// Deterministic probe grid on `[-50, 50]` used to check declared bounds.
pub fn probe_grid() -> Vec<f64> {
    (0..=2000).map(|k| -50.0 + 0.05 * k as f64).collect()
}

/// `X_{t+1} = H(X_t) + Z_t` on `R^dim`, `H` applied coordinatewise,
/// `Z_t ~ N(0, noise_sd^2 I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ar1Model {
    #[serde(default = "one_dim")]
    pub dim: usize,
    pub h: ScalarMap,
    /// Declared bound on the Euclidean norm of `H(x)`.
    pub h_bound: f64,
    pub noise_sd: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

fn one_dim() -> usize {
    1
}

impl Ar1Model {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidModel("AR(1) dimension must be positive".into()));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidModel("AR(1) noise_sd must be positive".into()));
        }
        if !self.h.is_finite() || !self.h_bound.is_finite() {
            return Err(Error::InvalidModel("AR(1) map H must be bounded".into()));
        }
        let per_coord = probe_grid()
            .into_iter()
            .map(|x| self.h.eval(x).abs())
            .fold(self.h.sup_abs(), f64::max);
        let norm = per_coord * (self.dim as f64).sqrt();
        if norm > self.h_bound * (1.0 + 1e-12) {
            return Err(Error::InvalidModel(format!(
                "declared ||H|| bound {} is below the probed value {norm}",
                self.h_bound
            )));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != self.dim {
                return Err(Error::InvalidModel("x0 dimension mismatch".into()));
            }
        }
        Ok(())
    }

    fn start(&self) -> Vec<f64> {
        self.x0.clone().unwrap_or_else(|| vec![0.0; self.dim])
    }

    fn step(&self, x: &[f64], rng: &mut StreamRng, out: &mut Vec<f64>) {
        out.clear();
        for &xi in x {
            let z: f64 = rng.sample(StandardNormal);
            out.push(self.h.eval(xi) + self.noise_sd * z);
        }
    }
}

/// How the ARCH transition density is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityConvention {
    /// Prefactor `(2 pi sigma^2)^{-1}` in front of the Gaussian exponent,
    /// shared by the transition density and both envelopes.
    Literal,
    /// Proper Gaussian density `(2 pi sigma^2 G(x)^2)^{-1/2} exp(...)`, with
    /// envelope prefactors `(2 pi sigma^2 c^2)^{-1/2}` and `(2 pi sigma^2 a^2)^{-1/2}`.
    Normalized,
}

/// `X_{t+1} = H(X_t) + G(X_t) Z_{t+1}` on the real line, `Z ~ N(0, sigma^2)`,
/// with `|H| <= b` and `a <= |G| <= c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchModel {
    pub h: ScalarMap,
    pub g: ScalarMap,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

impl ArchModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) {
            return Err(Error::InvalidModel(format!("ARCH requires a > 0, got {}", self.a)));
        }
        if !(self.b >= 0.0 && self.b.is_finite() && self.c.is_finite() && self.c >= self.a) {
            return Err(Error::InvalidModel("ARCH requires finite b >= 0 and c >= a".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidModel("ARCH requires sigma > 0".into()));
        }
        if !self.h.is_finite() || !self.g.is_finite() {
            return Err(Error::InvalidModel("ARCH maps must be bounded".into()));
        }
        let slack = 1e-12;
        let mut sup_h = self.h.sup_abs();
        let mut inf_g = self.g.inf_abs();
        let mut sup_g = self.g.sup_abs();
        for x in probe_grid() {
            sup_h = sup_h.max(self.h.eval(x).abs());
            inf_g = inf_g.min(self.g.eval(x).abs());
            sup_g = sup_g.max(self.g.eval(x).abs());
        }
        if sup_h > self.b + slack {
            return Err(Error::InvalidModel(format!("|H| reaches {sup_h} > b = {}", self.b)));
        }
        if inf_g < self.a - slack {
            return Err(Error::InvalidModel(format!("|G| drops to {inf_g} < a = {}", self.a)));
        }
        if sup_g > self.c + slack {
            return Err(Error::InvalidModel(format!("|G| reaches {sup_g} > c = {}", self.c)));
        }
        Ok(())
    }

    /// Transition density `p(x, y)` under the chosen normalization.
    pub fn density(&self, x: f64, y: f64, convention: DensityConvention) -> f64 {
        let g = self.g.eval(x);
        let s2 = self.sigma * self.sigma;
        let expo = (-(y - self.h.eval(x)).powi(2) / (2.0 * s2 * g * g)).exp();
        match convention {
            DensityConvention::Literal => expo / (2.0 * std::f64::consts::PI * s2),
            DensityConvention::Normalized => {
                expo / (2.0 * std::f64::consts::PI * s2 * g * g).sqrt()
            }
        }
    }

    fn step(&self, x: f64, rng: &mut StreamRng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.h.eval(x) + self.g.eval(x) * self.sigma * z
    }
}

/// Lower/upper envelopes `g_m <= p(x, .) <= g_M` of an ARCH transition density
/// together with their masses `delta_m = ||g_m||_1` and `delta_M = ||g_M||_1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchEnvelopes {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sigma: f64,
    pub convention: DensityConvention,
    pub delta_m: f64,
    #[serde(rename = "delta_M")]
    pub delta_major: f64,
}

impl ArchEnvelopes {
    fn prefactors(&self) -> (f64, f64) {
        let s2 = self.sigma * self.sigma;
        let two_pi = 2.0 * std::f64::consts::PI;
        match self.convention {
            DensityConvention::Literal => (1.0 / (two_pi * s2), 1.0 / (two_pi * s2)),
            DensityConvention::Normalized => (
                1.0 / (two_pi * s2 * self.c * self.c).sqrt(),
                1.0 / (two_pi * s2 * self.a * self.a).sqrt(),
            ),
        }
    }

    /// `g_m(y)`.
    pub fn lower(&self, y: f64) -> f64 {
        let (pre, _) = self.prefactors();
        let (a, b, s2) = (self.a, self.b, self.sigma * self.sigma);
        let expo = if y < -b {
            -(y - b).powi(2) / (2.0 * s2 * a * a)
        } else if y > b {
            -(y + b).powi(2) / (2.0 * s2 * a * a)
        } else {
            -2.0 * b * b / (s2 * a * a)
        };
        pre * expo.exp()
    }

    /// `g_M(y)`.
    pub fn upper(&self, y: f64) -> f64 {
        let (_, pre) = self.prefactors();
        let (b, c, s2) = (self.b, self.c, self.sigma * self.sigma);
        let expo = if y < -b {
            -(y + b).powi(2) / (2.0 * s2 * c * c)
        } else if y > b {
            -(y - b).powi(2) / (2.0 * s2 * c * c)
        } else {
            0.0
        };
        pre * expo.exp()
    }

    /// Counts probe pairs where `g_m(y) <= p(x, y) <= g_M(y)` fails.
    pub fn violations(&self, model: &ArchModel, xs: &[f64], ys: &[f64]) -> usize {
        let mut bad = 0;
        for &x in xs {
            for &y in ys {
                let p = model.density(x, y, self.convention);
                let slack = 1e-12 * p.max(1e-300);
                if self.lower(y) > p + slack || p > self.upper(y) + slack {
                    bad += 1;
                }
            }
        }
        bad
    }
}

pub fn arch_envelopes(model: &ArchModel, convention: DensityConvention) -> Result<ArchEnvelopes> {
    model.validate()?;
    ArchEnvelopes::from_parameters(model.a, model.b, model.c, model.sigma, convention)
}

impl ArchEnvelopes {
    /// Envelopes for `|H| <= b`, `a <= |G| <= c`, noise scale `sigma`.
    pub fn from_parameters(a: f64, b: f64, c: f64, sigma: f64, convention: DensityConvention) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidModel(format!("envelopes need a > 0, got {a}")));
        }
        if !(b >= 0.0 && b.is_finite() && c.is_finite() && c >= a && sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel("envelopes need finite b >= 0, c >= a and sigma > 0".into()));
        }
        let mut env = ArchEnvelopes { a, b, c, sigma, convention, delta_m: 0.0, delta_major: 0.0 };
        // Beyond 40 noise scales the Gaussian tails are below 1e-300.
        let reach = 40.0 * sigma * c;
        let integrate = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
            let left = adaptive_simpson(f, -b - reach, -b, QUAD_TOL)?;
            let mid = if b > 0.0 { adaptive_simpson(f, -b, b, QUAD_TOL)? } else { 0.0 };
            let right = adaptive_simpson(f, b, b + reach, QUAD_TOL)?;
            Ok(left + mid + right)
        };
        let delta_m = integrate(&|y| env.lower(y))?;
        let delta_major = integrate(&|y| env.upper(y))?;
        env.delta_m = delta_m;
        env.delta_major = delta_major;
        Ok(env)
    }
}

const QUAD_TOL: f64 = 1e-8;
const QUAD_MAX_DEPTH: u32 = 60;

/// Adaptive Simpson quadrature to relative tolerance `rel_tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        Some(
            recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)?
                + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)?,
        )
    }
    if hi <= lo {
        return Ok(0.0);
    }
    // Coarse pass to set an absolute target from the relative one.
    let coarse: f64 = {
        let k = 64;
        let h = (hi - lo) / k as f64;
        (0..k)
            .map(|i| {
                let a = lo + i as f64 * h;
                h / 6.0 * (f(a) + 4.0 * f(a + h / 2.0) + f(a + h))
            })
            .sum()
    };
    let abs_tol = (rel_tol * coarse.abs()).max(f64::MIN_POSITIVE);
    let pieces = 16;
    let width = (hi - lo) / pieces as f64;
    let mut total = 0.0;
    for k in 0..pieces {
        let a = lo + k as f64 * width;
        let b = if k + 1 == pieces { hi } else { a + width };
        let (fa, fb) = (f(a), f(b));
        let (m, fm, whole) = simpson(f, a, fa, b, fb);
        total += recurse(f, a, fa, b, fb, m, fm, whole, abs_tol / pieces as f64, QUAD_MAX_DEPTH)
            .ok_or(Error::Quadrature(rel_tol))?;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Models, initial laws and simulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChainModel {
    Finite(FiniteChain),
    Ar1(Ar1Model),
    Arch(ArchModel),
}

impl ChainModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            ChainModel::Finite(_) => Ok(()),
            ChainModel::Ar1(m) => m.validate(),
            ChainModel::Arch(m) => m.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ChainModel::Finite(_) => "finite",
            ChainModel::Ar1(_) => "ar1",
            ChainModel::Arch(_) => "arch",
        }
    }

    pub fn as_finite(&self) -> Option<&FiniteChain> {
        match self {
            ChainModel::Finite(c) => Some(c),
            _ => None,
        }
    }
}

/// Law of `X_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    /// The law declared with the model (`initial` for finite chains, `x0` for
    /// continuous ones).
    Declared,
    /// The invariant law; approximated by burn-in for continuous models.
    Stationary,
    /// Explicit probability vector (finite chains only).
    Law(Vec<f64>),
    /// Deterministic starting state (a state index for finite chains).
    Point(Vec<f64>),
}

impl std::str::FromStr for Initial {
    type Err = Error;

    /// Parses `declared`, `stationary`, `law:p1,p2,..` or `point:x1,..`.
    fn from_str(s: &str) -> Result<Self> {
        let parse_list = |body: &str| -> Result<Vec<f64>> {
            body.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidInitial(s.to_string()))
                })
                .collect()
        };
        match s.trim() {
            "declared" => Ok(Initial::Declared),
            "stationary" => Ok(Initial::Stationary),
            other => {
                if let Some(body) = other.strip_prefix("law:") {
                    Ok(Initial::Law(parse_list(body)?))
                } else if let Some(body) = other.strip_prefix("point:") {
                    Ok(Initial::Point(parse_list(body)?))
                } else {
                    Err(Error::InvalidInitial(s.to_string()))
                }
            }
        }
    }
}

impl std::fmt::Display for Initial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Initial::Declared => write!(f, "declared"),
            Initial::Stationary => write!(f, "stationary"),
            Initial::Law(v) => write!(f, "law:{}", join(v)),
            Initial::Point(v) => write!(f, "point:{}", join(v)),
        }
    }
}

/// Resolves the law of `X_1` for a finite chain.
pub fn finite_initial_law(chain: &FiniteChain, initial: &Initial) -> Result<Vec<f64>> {
    let s = chain.n_states();
    match initial {
        Initial::Declared => Ok(chain.initial().to_vec()),
        Initial::Stationary => stationary_distribution(chain),
        Initial::Law(v) => {
            validate_law(v, s, "initial law").map_err(|e| Error::InvalidInitial(e.to_string()))?;
            Ok(v.clone())
        }
        Initial::Point(v) => {
            let state = point_state(v, s)?;
            let mut law = vec![0.0; s];
            law[state] = 1.0;
            Ok(law)
        }
    }
}

fn point_state(v: &[f64], s: usize) -> Result<usize> {
    match v {
        [x] if x.fract() == 0.0 && *x >= 0.0 && (*x as usize) < s => Ok(*x as usize),
        _ => Err(Error::InvalidInitial(format!(
            "point start for a finite chain must be one state index in 0..{s}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathValues {
    Finite(Vec<usize>),
    /// Row-major `len x dim` block of real states.
    Real { dim: usize, data: Vec<f64> },
}

/// One simulated trajectory with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPath {
    pub values: PathValues,
    pub seed: u64,
    pub stream: u64,
    pub model: String,
    pub initial: Initial,
    /// Burn-in steps discarded for an approximate stationary start.
    pub burn_in: Option<usize>,
}

impl ChainPath {
    pub fn len(&self) -> usize {
        match &self.values {
            PathValues::Finite(v) => v.len(),
            PathValues::Real { dim, data } => data.len() / dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn finite_states(&self) -> Option<&[usize]> {
        match &self.values {
            PathValues::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// First coordinate of every state (state label index for finite paths).
    pub fn scalar_values(&self) -> Vec<f64> {
        match &self.values {
            PathValues::Finite(v) => v.iter().map(|&x| x as f64).collect(),
            PathValues::Real { dim, data } => data.chunks(*dim).map(|c| c[0]).collect(),
        }
    }

    pub fn is_approximately_stationary(&self) -> bool {
        self.burn_in.is_some()
    }

    /// CSV with header `step,state`; steps are 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,state\n");
        match &self.values {
            PathValues::Finite(v) => {
                for (t, x) in v.iter().enumerate() {
                    out.push_str(&format!("{},{}\n", t + 1, x));
                }
            }
            PathValues::Real { dim, data } => {
                for (t, c) in data.chunks(*dim).enumerate() {
                    let cell: Vec<String> = c.iter().map(|v| crate::fmt_num(*v)).collect();
                    out.push_str(&format!("{},{}\n", t + 1, cell.join(";")));
                }
            }
        }
        out
    }
}

/// Samples an index from cumulative weights.
pub(crate) fn sample_cumulative(cum: &[f64], rng: &mut StreamRng) -> usize {
    let u: f64 = rng.random::<f64>() * cum[cum.len() - 1];
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

pub(crate) fn cumulative(weights: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

pub fn simulate(model: &ChainModel, n: usize, seed: u64, initial: &Initial) -> Result<ChainPath> {
    simulate_stream(model, n, seed, 0, initial)
}

/// Simulates `X_1..X_n` on the random stream `(seed, stream)`.
pub fn simulate_stream(
    model: &ChainModel,
    n: usize,
    seed: u64,
    stream: u64,
    initial: &Initial,
) -> Result<ChainPath> {
    if n < 2 {
        return Err(Error::PathTooShort(n));
    }
    model.validate()?;
    let mut rng = stream_rng(seed, stream);
    let (values, burn_in) = match model {
        ChainModel::Finite(chain) => {
            let law = finite_initial_law(chain, initial)?;
            (PathValues::Finite(simulate_finite(chain, &law, n, &mut rng)), None)
        }
        ChainModel::Ar1(m) => {
            let (start, burn) = match initial {
                Initial::Declared => (m.start(), None),
                Initial::Point(v) if v.len() == m.dim => (v.clone(), None),
                Initial::Stationary => {
                    let burn = burn_in_length(|x, r| scalar_step(model, x, r), m.start()[0], &mut rng);
                    let mut x = m.start();
                    let mut next = Vec::with_capacity(m.dim);
                    for _ in 0..burn {
                        m.step(&x, &mut rng, &mut next);
                        std::mem::swap(&mut x, &mut next);
                    }
                    (x, Some(burn))
                }
                other => return Err(Error::InvalidInitial(format!("{other} for an AR(1) model"))),
            };
            let mut data = Vec::with_capacity(n * m.dim);
            let mut x = start;
            let mut next = Vec::with_capacity(m.dim);
            data.extend_from_slice(&x);
            for _ in 1..n {
                m.step(&x, &mut rng, &mut next);
                std::mem::swap(&mut x, &mut next);
                data.extend_from_slice(&x);
            }
            (PathValues::Real { dim: m.dim, data }, burn)
        }
        ChainModel::Arch(m) => {
            let declared = m.x0.unwrap_or(0.0);
            let (start, burn) = match initial {
                Initial::Declared => (declared, None),
                Initial::Point(v) if v.len() == 1 => (v[0], None),
                Initial::Stationary => {
                    let burn = burn_in_length(|x, r| scalar_step(model, x, r), declared, &mut rng);
                    let mut x = declared;
                    for _ in 0..burn {
                        x = m.step(x, &mut rng);
                    }
                    (x, Some(burn))
                }
                other => return Err(Error::InvalidInitial(format!("{other} for an ARCH model"))),
            };
            let mut data = Vec::with_capacity(n);
            let mut x = start;
            data.push(x);
            for _ in 1..n {
                x = m.step(x, &mut rng);
                data.push(x);
            }
            (PathValues::Real { dim: 1, data }, burn)
        }
    };
    Ok(ChainPath {
        values,
        seed,
        stream,
        model: model.kind().to_string(),
        initial: initial.clone(),
        burn_in,
    })
}

fn simulate_finite(chain: &FiniteChain, law: &[f64], n: usize, rng: &mut StreamRng) -> Vec<usize> {
    let rows: Vec<Vec<f64>> = (0..chain.n_states()).map(|x| cumulative(&chain.row(x))).collect();
    let mut x = sample_cumulative(&cumulative(law), rng);
    let mut out = Vec::with_capacity(n);
    out.push(x);
    for _ in 1..n {
        x = sample_cumulative(&rows[x], rng);
        out.push(x);
    }
    out
}

/// Sampling budget for Monte Carlo estimates on continuous models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McBudget {
    pub samples: usize,
    pub seed: u64,
}

impl McBudget {
    pub fn check(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::InvalidInput(format!(
                "sampling budget must be at least 2, got {}",
                self.samples
            )));
        }
        Ok(())
    }
}

/// One step of the first coordinate. For AR(1) models the coordinates evolve
/// independently, so the first coordinate is itself a Markov chain.
pub(crate) fn scalar_step(model: &ChainModel, x: f64, rng: &mut StreamRng) -> f64 {
    match model {
        ChainModel::Ar1(m) => {
            let z: f64 = rng.sample(StandardNormal);
            m.h.eval(x) + m.noise_sd * z
        }
        ChainModel::Arch(m) => m.step(x, rng),
        ChainModel::Finite(_) => unreachable!("scalar_step is for continuous models"),
    }
}

fn scalar_start(model: &ChainModel) -> f64 {
    match model {
        ChainModel::Ar1(m) => m.start()[0],
        ChainModel::Arch(m) => m.x0.unwrap_or(0.0),
        ChainModel::Finite(_) => 0.0,
    }
}

/// Independent approximate draws of the first coordinate under the invariant
/// law: each draw runs its own stream through the burn-in used for
/// stationary starts. Finite chains draw state labels from `pi` exactly.
pub fn stationary_samples(model: &ChainModel, budget: &McBudget, purpose: u32) -> Result<Vec<f64>> {
    budget.check()?;
    model.validate()?;
    if let ChainModel::Finite(chain) = model {
        let cum = cumulative(&stationary_distribution(chain)?);
        let mut rng = stream_rng(budget.seed, auxiliary_stream(purpose, 0));
        return Ok((0..budget.samples)
            .map(|_| chain.labels()[sample_cumulative(&cum, &mut rng)])
            .collect());
    }
    let x0 = scalar_start(model);
    let mut pilot = stream_rng(budget.seed, auxiliary_stream(purpose, u32::MAX as usize));
    let burn = burn_in_length(|x, r| scalar_step(model, x, r), x0, &mut pilot);
    Ok((0..budget.samples)
        .map(|k| {
            let mut rng = stream_rng(budget.seed, auxiliary_stream(purpose, k));
            let mut x = x0;
            for _ in 0..burn {
                x = scalar_step(model, x, &mut rng);
            }
            x
        })
        .collect())
}

const PILOT_STEPS: usize = 2000;

/// Burn-in `ceil(20 / (1 - lambda_hat))`, with `lambda_hat` the lag-one
/// autocorrelation of a pilot run (clamped to `[0, 0.99]`).
fn burn_in_length(step: impl Fn(f64, &mut StreamRng) -> f64, x0: f64, rng: &mut StreamRng) -> usize {
    let mut xs = Vec::with_capacity(PILOT_STEPS);
    let mut x = x0;
    for _ in 0..PILOT_STEPS {
        x = step(x, rng);
        xs.push(x);
    }
    let lambda_hat = lag_one_autocorrelation(&xs).clamp(0.0, 0.99);
    (20.0 / (1.0 - lambda_hat)).ceil() as usize
}

pub(crate) fn lag_one_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    if var <= 0.0 {
        return 0.0;
    }
    let cov: f64 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> FiniteChain {
        FiniteChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(FiniteChain::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
        assert!(FiniteChain::new(vec![vec![1.2, -0.2], vec![0.5, 0.5]]).is_err());
        assert!(FiniteChain::new(vec![vec![1.0]]).is_ok());
    }

    #[test]
    fn stationary_of_symmetric_and_two_state() {
        let sym = FiniteChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let pi = stationary_distribution(&sym).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
        let pi = stationary_distribution(&two_state()).unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((pi[1] - 1.0 / 3.0).abs() < 1e-12);
        let eps = 0.01;
        let near_id = FiniteChain::new(vec![vec![1.0 - eps, eps], vec![eps, 1.0 - eps]]).unwrap();
        let pi = stationary_distribution(&near_id).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn periodic_chain_is_rejected_with_power() {
        let flip = FiniteChain::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        match stationary_distribution(&flip) {
            Err(Error::NotPrimitive { max_power, .. }) => assert_eq!(max_power, 4),
            other => panic!("expected NotPrimitive, got {other:?}"),
        }
        let reducible = FiniteChain::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            stationary_distribution(&reducible),
            Err(Error::NotPrimitive { .. })
        ));
    }

    #[test]
    fn two_state_constants() {
        let k = ergodicity_constants(&two_state()).unwrap();
        assert!((k.rho - 0.7).abs() < 1e-12);
        assert!((k.lambda - 0.7).abs() < 1e-12);
        assert!((k.delta_m - 0.3).abs() < 1e-12);
        assert!((k.mu[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((k.delta_major - 1.7).abs() < 1e-12);
        assert!((k.nu[0] - 9.0 / 17.0).abs() < 1e-12);
        assert!((k.nu[1] - 8.0 / 17.0).abs() < 1e-12);
        assert_eq!(k.t_mix, 3);
        assert_eq!(k.l, 1.0);
        assert_eq!(k.rate_source, RateSource::Dobrushin);
    }

    #[test]
    fn iid_chain_constants() {
        let iid = FiniteChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let k = ergodicity_constants(&iid).unwrap();
        assert_eq!(k.rho, 0.0);
        assert!((k.delta_m - 1.0).abs() < 1e-15);
        assert!((k.delta_major - 1.0).abs() < 1e-15);
        assert_eq!(k.mu, vec![0.5, 0.5]);
        assert_eq!(k.nu, vec![0.5, 0.5]);
        assert!(k.lambda.abs() < 1e-12);
        assert_eq!(k.t_mix, 1);
    }

    #[test]
    fn contraction_and_minorization_failures() {
        let sticky = FiniteChain::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(ergodicity_constants(&sticky), Err(Error::NotPrimitive { .. })));
        // Primitive, contracting in one step, but no column is positive everywhere.
        let cyc = FiniteChain::new(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.5, 0.5],
            vec![0.5, 0.0, 0.5],
        ])
        .unwrap();
        assert_eq!(ergodicity_constants(&cyc), Err(Error::MinorizationFailure));
        // Primitive but rows 0 and 3 have disjoint supports.
        let slow = FiniteChain::new(vec![
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.0, 0.0, 0.5, 0.5],
        ])
        .unwrap();
        assert!(matches!(ergodicity_constants(&slow), Err(Error::NotContracting { .. })));
    }

    #[test]
    fn user_rate_override_is_recorded() {
        let k = ergodicity_constants(&two_state()).unwrap().with_rate(2.0, 0.8).unwrap();
        assert_eq!(k.rate_source, RateSource::User);
        assert_eq!((k.l, k.rho), (2.0, 0.8));
        assert!(ergodicity_constants(&two_state()).unwrap().with_rate(1.0, 1.0).is_err());
    }

    #[test]
    fn simulation_is_deterministic() {
        let model = ChainModel::Finite(two_state());
        let a = simulate(&model, 50, 11, &Initial::Stationary).unwrap();
        let b = simulate(&model, 50, 11, &Initial::Stationary).unwrap();
        let c = simulate(&model, 50, 12, &Initial::Stationary).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert!(matches!(simulate(&model, 1, 0, &Initial::Declared), Err(Error::PathTooShort(1))));
    }

    #[test]
    fn fair_coin_chain_gives_five_states() {
        let model = ChainModel::Finite(FiniteChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap());
        let path = simulate(&model, 5, 3, &Initial::Declared).unwrap();
        assert_eq!(path.len(), 5);
        assert!(path.finite_states().unwrap().iter().all(|&x| x < 2));
        assert!(path.to_csv().starts_with("step,state\n1,"));
    }

    #[test]
    fn initial_parsing() {
        assert_eq!("stationary".parse::<Initial>().unwrap(), Initial::Stationary);
        assert_eq!("law:0.25,0.75".parse::<Initial>().unwrap(), Initial::Law(vec![0.25, 0.75]));
        assert!("sideways".parse::<Initial>().is_err());
        let chain = two_state();
        assert!(finite_initial_law(&chain, &Initial::Point(vec![2.0])).is_err());
        assert_eq!(finite_initial_law(&chain, &Initial::Point(vec![1.0])).unwrap(), vec![0.0, 1.0]);
    }

    fn arch(b: f64, a: f64, c: f64) -> ArchModel {
        ArchModel {
            h: ScalarMap::Tanh { amplitude: b, gain: 1.0, offset: 0.0 },
            g: ScalarMap::Bump { amplitude: c - a, gain: 0.5, offset: a },
            a,
            b,
            c,
            sigma: 1.0,
            x0: None,
        }
    }

    #[test]
    fn arch_validation() {
        assert!(arch(1.0, 0.5, 2.0).validate().is_ok());
        let mut bad = arch(1.0, 0.5, 2.0);
        bad.a = 0.0;
        assert!(matches!(arch_envelopes(&bad, DensityConvention::Literal), Err(Error::InvalidModel(_))));
        let mut bad = arch(1.0, 0.5, 2.0);
        bad.b = 0.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn arch_upper_envelope_middle_branch() {
        let env = arch_envelopes(&arch(1.0, 0.5, 2.0), DensityConvention::Literal).unwrap();
        let expect = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((env.upper(0.0) - expect).abs() < 1e-15);
        assert!(env.delta_m < env.delta_major);
    }

    #[test]
    fn ar1_stationary_start_is_flagged() {
        let model = ChainModel::Ar1(Ar1Model {
            dim: 2,
            h: ScalarMap::Tanh { amplitude: 0.5, gain: 1.0, offset: 0.0 },
            h_bound: 1.0,
            noise_sd: 1.0,
            x0: None,
        });
        let path = simulate(&model, 10, 4, &Initial::Stationary).unwrap();
        assert!(path.is_approximately_stationary());
        assert_eq!(path.len(), 10);
        assert!(simulate(&model, 10, 4, &Initial::Law(vec![1.0])).is_err());
    }

    #[test]
    fn ar1_declared_bound_is_checked() {
        let m = Ar1Model {
            dim: 4,
            h: ScalarMap::Tanh { amplitude: 1.0, gain: 1.0, offset: 0.0 },
            h_bound: 1.5,
            noise_sd: 1.0,
            x0: None,
        };
        assert!(m.validate().is_err());
    }
}
