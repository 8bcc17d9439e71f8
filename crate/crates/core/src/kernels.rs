//! Index-dependent kernel families `h_{i,j}(x, y) = a_{i,j} h(x, y)`.
//!
//! A family is a base kernel on pairs of states times a pair weight. Every
//! built-in family factors this way, which keeps the variance constants in
//! [`crate::bounds`] cheap to evaluate exactly on finite chains.
//!
//! Base kernels read state labels on finite chains and the first coordinate of
//! the state on continuous models. `table` and `product` with an explicit `f`
//! vector index states directly and are therefore finite-only.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainModel, FiniteChain, ScalarMap};
use crate::error::{Error, Result};

/// Exact canonicality tolerance on finite chains.
pub const CANONICAL_TOL: f64 = 1e-10;

/// Order relation used by indicator kernels, `x` is the earlier state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `1{x = y}`.
    Equal,
    /// `1{x < y}`.
    Less,
    /// `1{x <= y}`.
    LessEq,
    /// `1{x < y}/2 + 1{x <= y}/2`.
    Wilcoxon,
}

impl Relation {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        let b = |c: bool| if c { 1.0 } else { 0.0 };
        match self {
            Relation::Equal => b(x == y),
            Relation::Less => b(x < y),
            Relation::LessEq => b(x <= y),
            Relation::Wilcoxon => 0.5 * b(x < y) + 0.5 * b(x <= y),
        }
    }
}

/// Pair weights `a_{i,j}` for `1 <= i < j <= n` (indices are 1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PairWeight {
    One,
    Constant {
        value: f64,
    },
    /// `1 / (j - i)`.
    InverseLag,
    /// `1 / (j - 1)`.
    InverseEarlier,
    /// Explicit `n x n` matrix; entry `[i-1][j-1]` is `a_{i,j}`.
    Table {
        values: Vec<Vec<f64>>,
    },
    Product {
        left: Box<PairWeight>,
        right: Box<PairWeight>,
    },
}

impl PairWeight {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        match self {
            PairWeight::One => 1.0,
            PairWeight::Constant { value } => *value,
            PairWeight::InverseLag => 1.0 / (j - i) as f64,
            PairWeight::InverseEarlier => 1.0 / (j - 1) as f64,
            PairWeight::Table { values } => values[i - 1][j - 1],
            PairWeight::Product { left, right } => left.at(i, j) * right.at(i, j),
        }
    }

    /// Whether `a_{i,j}` varies with `i` for fixed `j`.
    pub fn depends_on_i(&self) -> bool {
        match self {
            PairWeight::One | PairWeight::Constant { .. } | PairWeight::InverseEarlier => false,
            PairWeight::InverseLag | PairWeight::Table { .. } => true,
            PairWeight::Product { left, right } => left.depends_on_i() || right.depends_on_i(),
        }
    }

    /// The weight as a function of `j` alone; only meaningful when
    /// `!depends_on_i()`.
    pub fn column(&self, j: usize) -> f64 {
        self.at(1, j)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            PairWeight::Constant { value } if !value.is_finite() => {
                Err(Error::InvalidInput(format!("non-finite weight {value}")))
            }
            PairWeight::Table { values } => {
                if values.len() < n || values.iter().take(n).any(|r| r.len() < n) {
                    return Err(Error::InvalidInput(format!(
                        "weight table must be at least {n} x {n}"
                    )));
                }
                for i in 1..=n {
                    for j in (i + 1)..=n {
                        if !values[i - 1][j - 1].is_finite() {
                            return Err(Error::InvalidInput(format!(
                                "non-finite weight at ({i}, {j})"
                            )));
                        }
                    }
                }
                Ok(())
            }
            PairWeight::Product { left, right } => {
                left.validate(n)?;
                right.validate(n)
            }
            _ => Ok(()),
        }
    }

    /// `max_{i<j<=n} |a_{i,j}|`.
    pub fn max_abs(&self, n: usize) -> f64 {
        if n < 2 {
            return 0.0;
        }
        match self {
            PairWeight::One | PairWeight::InverseLag | PairWeight::InverseEarlier => 1.0,
            PairWeight::Constant { value } => value.abs(),
            _ => self.fold_pairs(n, 0.0, |acc, a| acc.max(a.abs())),
        }
    }

    /// `sum_{i<j<=n} a_{i,j}`.
    pub fn total(&self, n: usize) -> f64 {
        match self {
            PairWeight::One => (n * n.saturating_sub(1) / 2) as f64,
            PairWeight::Constant { value } => value * (n * n.saturating_sub(1) / 2) as f64,
            _ => self.fold_pairs(n, 0.0, |acc, a| acc + a),
        }
    }

    /// `max_i sum_{j>i} a_{i,j}^2` and `max_j sum_{i<j} a_{i,j}^2`.
    pub fn squared_line_maxima(&self, n: usize) -> (f64, f64) {
        let mut rows = vec![0.0; n + 1];
        let mut cols = vec![0.0; n + 1];
        for j in 2..=n {
            for i in 1..j {
                let a2 = self.at(i, j).powi(2);
                rows[i] += a2;
                cols[j] += a2;
            }
        }
        (
            rows.into_iter().fold(0.0, f64::max),
            cols.into_iter().fold(0.0, f64::max),
        )
    }

    /// `sum_{j>i} a_{i,j}^2` for every `i = 1..n` (index 0 unused).
    pub fn squared_row_sums(&self, n: usize) -> Vec<f64> {
        let mut rows = vec![0.0; n + 1];
        for j in 2..=n {
            for i in 1..j {
                rows[i] += self.at(i, j).powi(2);
            }
        }
        rows
    }

    fn fold_pairs(&self, n: usize, init: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut acc = init;
        for j in 2..=n {
            for i in 1..j {
                acc = f(acc, self.at(i, j));
            }
        }
        acc
    }

    /// Weight whose values are the product of both factors.
    pub fn times(self, other: PairWeight) -> PairWeight {
        match (self, other) {
            (PairWeight::One, w) | (w, PairWeight::One) => w,
            (l, r) => PairWeight::Product { left: Box::new(l), right: Box::new(r) },
        }
    }
}

/// Serializable kernel description, as it appears in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    /// Finite lookup table, row = earlier state.
    Table { table: Vec<Vec<f64>> },
    /// `f(x) f(y)` with `f` given per state or as a scalar map of the label.
    Product {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        map: Option<ScalarMap>,
    },
    /// `cos(scale (x - y))`.
    Cosine {
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    Indicator { relation: Relation },
    Weighted {
        base: Box<KernelSpec>,
        weights: PairWeight,
    },
}

fn unit_scale() -> f64 {
    1.0
}

/// Base kernel `h(x, y)` shared by every index pair.
#[derive(Debug, Clone)]
pub enum BaseKernel {
    Table(DMatrix<f64>),
    ProductVector(Vec<f64>),
    ProductMap(ScalarMap),
    Cosine(f64),
    Indicator(Relation),
    /// Monte Carlo Hoeffding projection of a continuous kernel against a
    /// sample from the invariant law.
    Projected {
        inner: Box<BaseKernel>,
        samples: Arc<Vec<f64>>,
    },
}

impl BaseKernel {
    pub fn is_finite_only(&self) -> bool {
        match self {
            BaseKernel::Table(_) | BaseKernel::ProductVector(_) => true,
            BaseKernel::Projected { inner, .. } => inner.is_finite_only(),
            _ => false,
        }
    }

    /// Evaluates at real-valued states (labels or first coordinates).
    pub fn eval_real(&self, x: f64, y: f64) -> f64 {
        match self {
            BaseKernel::Table(_) | BaseKernel::ProductVector(_) => {
                panic!("state-indexed kernel evaluated at real states")
            }
            BaseKernel::ProductMap(m) => m.eval(x) * m.eval(y),
            BaseKernel::Cosine(scale) => (scale * (x - y)).cos(),
            BaseKernel::Indicator(rel) => rel.eval(x, y),
            BaseKernel::Projected { inner, samples } => {
                let m = samples.len() as f64;
                let row: f64 = samples.iter().map(|&s| inner.eval_real(x, s)).sum::<f64>() / m;
                let col: f64 = samples.iter().map(|&s| inner.eval_real(s, y)).sum::<f64>() / m;
                inner.eval_real(x, y) - row - col
            }
        }
    }

    /// Evaluates at finite states `x, y` with numeric labels.
    pub fn eval_state(&self, x: usize, y: usize, labels: &[f64]) -> f64 {
        match self {
            BaseKernel::Table(t) => t[(x, y)],
            BaseKernel::ProductVector(f) => f[x] * f[y],
            _ => self.eval_real(labels[x], labels[y]),
        }
    }

    /// Declared bound on `sup |h|`, if the kernel's form gives one.
    pub fn declared_sup(&self) -> Option<f64> {
        match self {
            BaseKernel::Table(t) => Some(t.iter().fold(0.0, |m, v| m.max(v.abs()))),
            BaseKernel::ProductVector(f) => {
                let m = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                Some(m * m)
            }
            BaseKernel::ProductMap(m) => Some(m.sup_abs().powi(2)),
            BaseKernel::Cosine(_) | BaseKernel::Indicator(_) => Some(1.0),
            BaseKernel::Projected { inner, .. } => inner.declared_sup().map(|s| 3.0 * s),
        }
    }
}

/// A kernel family `h_{i,j} = a_{i,j} h` on a horizon `n`.
#[derive(Debug, Clone)]
pub struct KernelFamily {
    pub base: BaseKernel,
    pub weight: PairWeight,
    pub horizon: usize,
}

impl KernelFamily {
    pub fn new(base: BaseKernel, weight: PairWeight, horizon: usize) -> Result<Self> {
        weight.validate(horizon)?;
        Ok(KernelFamily { base, weight, horizon })
    }

    pub fn from_spec(spec: &KernelSpec, horizon: usize) -> Result<Self> {
        let (base, weight) = flatten(spec)?;
        KernelFamily::new(base, weight, horizon)
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        KernelFamily::new(self.base.clone(), self.weight.clone(), horizon)
    }

    pub fn depends_on_i(&self) -> bool {
        self.weight.depends_on_i()
    }

    pub fn eval_state(&self, i: usize, j: usize, x: usize, y: usize, labels: &[f64]) -> f64 {
        self.weight.at(i, j) * self.base.eval_state(x, y, labels)
    }

    pub fn eval_real(&self, i: usize, j: usize, x: f64, y: f64) -> f64 {
        self.weight.at(i, j) * self.base.eval_real(x, y)
    }

    /// Tabulates the base kernel on a finite chain.
    pub fn tabulate(&self, chain: &FiniteChain) -> Result<FiniteKernel> {
        let s = chain.n_states();
        match &self.base {
            BaseKernel::Table(t) if t.nrows() != s || t.ncols() != s => {
                return Err(Error::InvalidInput(format!(
                    "kernel table is {}x{}, chain has {s} states",
                    t.nrows(),
                    t.ncols()
                )))
            }
            BaseKernel::ProductVector(f) if f.len() != s => {
                return Err(Error::InvalidInput(format!(
                    "product vector has {} entries, chain has {s} states",
                    f.len()
                )))
            }
            _ => {}
        }
        let labels = chain.labels();
        let table = DMatrix::from_fn(s, s, |x, y| self.base.eval_state(x, y, labels));
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("kernel has non-finite values".into()));
        }
        Ok(FiniteKernel { table, weight: self.weight.clone(), horizon: self.horizon })
    }

    /// Rejects state-indexed kernels on continuous models.
    pub fn check_model(&self, model: &ChainModel) -> Result<()> {
        if model.as_finite().is_none() && self.base.is_finite_only() {
            return Err(Error::InvalidInput(format!(
                "state-indexed kernel cannot be used with a {} model",
                model.kind()
            )));
        }
        Ok(())
    }
}

fn flatten(spec: &KernelSpec) -> Result<(BaseKernel, PairWeight)> {
    let base = match spec {
        KernelSpec::Table { table } => {
            let s = table.len();
            if s == 0 || table.iter().any(|r| r.len() != s) {
                return Err(Error::InvalidInput("kernel table must be square and non-empty".into()));
            }
            if table.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("kernel table has non-finite entries".into()));
            }
            BaseKernel::Table(DMatrix::from_fn(s, s, |x, y| table[x][y]))
        }
        KernelSpec::Product { f: Some(f), map: None } => {
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("product vector has non-finite entries".into()));
            }
            BaseKernel::ProductVector(f.clone())
        }
        KernelSpec::Product { f: None, map: Some(m) } => {
            let (lo, hi) = m.range();
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidInput("product map must be bounded".into()));
            }
            BaseKernel::ProductMap(*m)
        }
        KernelSpec::Product { .. } => {
            return Err(Error::InvalidInput("product kernel needs exactly one of `f`, `map`".into()))
        }
        KernelSpec::Cosine { scale } => {
            if !scale.is_finite() {
                return Err(Error::InvalidInput("cosine scale must be finite".into()));
            }
            BaseKernel::Cosine(*scale)
        }
        KernelSpec::Indicator { relation } => BaseKernel::Indicator(*relation),
        KernelSpec::Weighted { base, weights } => {
            let (b, w) = flatten(base)?;
            return Ok((b, w.times(weights.clone())));
        }
    };
    Ok((base, PairWeight::One))
}

/// A family tabulated on a finite state space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteKernel {
    pub table: DMatrix<f64>,
    pub weight: PairWeight,
    pub horizon: usize,
}

impl FiniteKernel {
    pub fn n_states(&self) -> usize {
        self.table.nrows()
    }

    pub fn h(&self, x: usize, y: usize) -> f64 {
        self.table[(x, y)]
    }

    /// `E_{X~pi} h(x, X)` for each `x`.
    pub fn row_means(&self, pi: &[f64]) -> Vec<f64> {
        let s = self.n_states();
        (0..s).map(|x| (0..s).map(|y| pi[y] * self.table[(x, y)]).sum()).collect()
    }

    /// `E_{X~pi} h(X, y)` for each `y`.
    pub fn col_means(&self, pi: &[f64]) -> Vec<f64> {
        let s = self.n_states();
        (0..s).map(|y| (0..s).map(|x| pi[x] * self.table[(x, y)]).sum()).collect()
    }

    /// `E_{pi x pi} h`.
    pub fn pi_mean(&self, pi: &[f64]) -> f64 {
        self.row_means(pi).iter().zip(pi).map(|(r, p)| r * p).sum()
    }

    /// Centered base table `h - E_{pi x pi} h`.
    pub fn centered(&self, pi: &[f64]) -> DMatrix<f64> {
        let e = self.pi_mean(pi);
        self.table.map(|v| v - e)
    }

    pub fn max_abs_base(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Result of a canonicality check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalityReport {
    pub deviation: f64,
    /// Largest standard error of the compared differences (0 when exact).
    pub stderr: f64,
    pub tolerance: f64,
    pub canonical: bool,
    pub method: EstimationMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMethod {
    ExactEnumeration,
    MonteCarlo,
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Exact canonicality deviation on a finite chain: the largest spread of the
/// two marginal pi-means, scaled by `max |a_{i,j}|`.
pub fn pi_canonical_deviation(kernel: &FiniteKernel, pi: &[f64]) -> Result<CanonicalityReport> {
    if pi.len() != kernel.n_states() {
        return Err(Error::InvalidInput("pi does not match the kernel's state space".into()));
    }
    let scale = kernel.weight.max_abs(kernel.horizon.max(2));
    let deviation = scale * spread(&kernel.row_means(pi)).max(spread(&kernel.col_means(pi)));
    Ok(CanonicalityReport {
        deviation,
        stderr: 0.0,
        tolerance: CANONICAL_TOL,
        canonical: deviation <= CANONICAL_TOL,
        method: EstimationMethod::ExactEnumeration,
    })
}

/// Number of probe points used by the sampled canonicality check.
pub const MC_PROBES: usize = 9;

/// Sampled canonicality check against draws `samples` from the invariant law.
///
/// The kernel is declared canonical when every pairwise difference of the
/// marginal means at the probe points stays within three standard errors.
pub fn pi_canonical_deviation_mc(base: &BaseKernel, weight_max: f64, samples: &[f64]) -> Result<CanonicalityReport> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("sampled canonicality needs a positive budget".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let probes: Vec<f64> = (0..MC_PROBES)
        .map(|k| sorted[(k * (sorted.len() - 1)) / (MC_PROBES - 1)])
        .collect();
    let m = samples.len() as f64;
    let mut deviation: f64 = 0.0;
    let mut worst_se: f64 = 0.0;
    let mut canonical = true;
    for a in 0..probes.len() {
        for b in (a + 1)..probes.len() {
            for second_arg in [true, false] {
                let diffs: Vec<f64> = samples
                    .iter()
                    .map(|&s| {
                        if second_arg {
                            base.eval_real(s, probes[a]) - base.eval_real(s, probes[b])
                        } else {
                            base.eval_real(probes[a], s) - base.eval_real(probes[b], s)
                        }
                    })
                    .collect();
                let mean = diffs.iter().sum::<f64>() / m;
                let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0);
                let se = (var / m).sqrt();
                let dev = weight_max * mean.abs();
                deviation = deviation.max(dev);
                worst_se = worst_se.max(weight_max * se);
                if dev > 3.0 * weight_max * se + CANONICAL_TOL {
                    canonical = false;
                }
            }
        }
    }
    Ok(CanonicalityReport {
        deviation,
        stderr: worst_se,
        tolerance: 3.0 * worst_se,
        canonical,
        method: EstimationMethod::MonteCarlo,
    })
}

/// Hoeffding projection `h(x,y) - E_pi h(x,.) - E_pi h(.,y)` on a finite chain.
pub fn hoeffding_project(kernel: &FiniteKernel, pi: &[f64]) -> FiniteKernel {
    let rows = kernel.row_means(pi);
    let cols = kernel.col_means(pi);
    let s = kernel.n_states();
    FiniteKernel {
        table: DMatrix::from_fn(s, s, |x, y| kernel.table[(x, y)] - rows[x] - cols[y]),
        weight: kernel.weight.clone(),
        horizon: kernel.horizon,
    }
}

/// Projects a family on a finite chain and returns it as a table family.
pub fn hoeffding_project_family(family: &KernelFamily, chain: &FiniteChain, pi: &[f64]) -> Result<KernelFamily> {
    let projected = hoeffding_project(&family.tabulate(chain)?, pi);
    KernelFamily::new(BaseKernel::Table(projected.table), family.weight.clone(), family.horizon)
}

/// Sampled Hoeffding projection for continuous models.
pub fn hoeffding_project_mc(family: &KernelFamily, samples: Vec<f64>) -> Result<KernelFamily> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("projection needs a positive sampling budget".into()));
    }
    if family.base.is_finite_only() {
        return Err(Error::InvalidInput("state-indexed kernels project exactly on finite chains".into()));
    }
    KernelFamily::new(
        BaseKernel::Projected { inner: Box::new(family.base.clone()), samples: Arc::new(samples) },
        family.weight.clone(),
        family.horizon,
    )
}

/// Applies an extra pair weight on top of a family.
pub fn weighted_kernel(base: &KernelFamily, weight: PairWeight) -> Result<KernelFamily> {
    KernelFamily::new(base.base.clone(), base.weight.clone().times(weight), base.horizon)
}

/// `A = 2 max |h_{i,j}|`, with a probed lower value for continuous kernels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupConstant {
    #[serde(rename = "A")]
    pub value: f64,
    /// Probed lower value (continuous models only).
    pub lower: Option<f64>,
    pub method: EstimationMethod,
}

pub fn sup_constant_finite(kernel: &FiniteKernel) -> SupConstant {
    SupConstant {
        value: 2.0 * kernel.weight.max_abs(kernel.horizon) * kernel.max_abs_base(),
        lower: None,
        method: EstimationMethod::ExactEnumeration,
    }
}

/// Continuous case: the declared sup bounds `A` from above, the maximum over
/// `probes x probes` from below.
pub fn sup_constant_probed(family: &KernelFamily, probes: &[f64]) -> Result<SupConstant> {
    let wmax = family.weight.max_abs(family.horizon);
    let mut probed: f64 = 0.0;
    for &x in probes {
        for &y in probes {
            probed = probed.max(family.base.eval_real(x, y).abs());
        }
    }
    let lower = 2.0 * wmax * probed;
    let value = match family.base.declared_sup() {
        Some(s) => 2.0 * wmax * s,
        None => lower,
    };
    Ok(SupConstant { value: value.max(lower), lower: Some(lower), method: EstimationMethod::MonteCarlo })
}

/// Kernel of the average-precision correlation: `1{x < y} / (j - 1)`.
pub fn tau_ap_kernel(horizon: usize) -> KernelFamily {
    KernelFamily {
        base: BaseKernel::Indicator(Relation::Less),
        weight: PairWeight::InverseEarlier,
        horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[[f64; 2]; 2]) -> FiniteKernel {
        FiniteKernel {
            table: DMatrix::from_fn(2, 2, |x, y| rows[x][y]),
            weight: PairWeight::One,
            horizon: 5,
        }
    }

    const PI: [f64; 2] = [2.0 / 3.0, 1.0 / 3.0];

    #[test]
    fn canonical_product_kernel() {
        let k = table(&[[1.0, -2.0], [-2.0, 4.0]]);
        let rep = pi_canonical_deviation(&k, &PI).unwrap();
        assert!(rep.deviation < 1e-15 && rep.canonical);
        let one = table(&[[1.0, 1.0], [1.0, 1.0]]);
        assert_eq!(pi_canonical_deviation(&one, &PI).unwrap().deviation, 0.0);
    }

    #[test]
    fn equality_indicator_is_not_canonical() {
        let k = table(&[[1.0, 0.0], [0.0, 1.0]]);
        let rep = pi_canonical_deviation(&k, &PI).unwrap();
        assert!((rep.deviation - 1.0 / 3.0).abs() < 1e-15);
        assert!(!rep.canonical);
    }

    #[test]
    fn worked_projection() {
        let k = table(&[[1.0, 0.0], [0.0, 1.0]]);
        let p = hoeffding_project(&k, &PI);
        let expect = [[-1.0 / 3.0, -1.0], [-1.0, 1.0 / 3.0]];
        for x in 0..2 {
            for y in 0..2 {
                assert!((p.h(x, y) - expect[x][y]).abs() < 1e-15);
            }
        }
        for c in p.col_means(&PI) {
            assert!((c + 5.0 / 9.0).abs() < 1e-15);
        }
        let c = table(&[[2.5, 2.5], [2.5, 2.5]]);
        let pc = hoeffding_project(&c, &PI);
        assert!(pc.table.iter().all(|v| (v + 2.5).abs() < 1e-15));
    }

    #[test]
    fn sup_constant_of_weighted_family() {
        let spec = KernelSpec::Weighted {
            base: Box::new(KernelSpec::Product { f: Some(vec![1.0, -2.0]), map: None }),
            weights: PairWeight::InverseLag,
        };
        let chain = FiniteChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let fam = KernelFamily::from_spec(&spec, 10).unwrap();
        assert!(fam.depends_on_i());
        let k = fam.tabulate(&chain).unwrap();
        assert_eq!(sup_constant_finite(&k).value, 8.0);
        assert_eq!(k.weight.at(1, 3), 0.5);
        let zero = FiniteKernel { weight: PairWeight::Constant { value: 0.0 }, ..k };
        assert_eq!(sup_constant_finite(&zero).value, 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(KernelFamily::from_spec(&KernelSpec::Product { f: None, map: None }, 4).is_err());
        let bad = KernelSpec::Weighted {
            base: Box::new(KernelSpec::Cosine { scale: 1.0 }),
            weights: PairWeight::Constant { value: f64::NAN },
        };
        assert!(KernelFamily::from_spec(&bad, 4).is_err());
        let chain = FiniteChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let wrong = KernelFamily::from_spec(&KernelSpec::Product { f: Some(vec![1.0]), map: None }, 4).unwrap();
        assert!(wrong.tabulate(&chain).is_err());
    }

    #[test]
    fn weight_helpers() {
        assert_eq!(PairWeight::One.total(4), 6.0);
        assert!((PairWeight::InverseLag.total(3) - 2.5).abs() < 1e-15);
        assert!(!PairWeight::InverseEarlier.depends_on_i());
        let (r, c) = PairWeight::One.squared_line_maxima(4);
        assert_eq!((r, c), (3.0, 3.0));
        assert_eq!(tau_ap_kernel(5).weight.at(2, 4), 1.0 / 3.0);
    }

    #[test]
    fn sampled_projection_is_nearly_canonical() {
        let fam = KernelFamily::from_spec(&KernelSpec::Cosine { scale: 1.0 }, 4).unwrap();
        let samples: Vec<f64> = (0..400).map(|k| -2.0 + 4.0 * k as f64 / 399.0).collect();
        let raw = pi_canonical_deviation_mc(&fam.base, 1.0, &samples).unwrap();
        assert!(!raw.canonical);
        let proj = hoeffding_project_mc(&fam, samples.clone()).unwrap();
        let rep = pi_canonical_deviation_mc(&proj.base, 1.0, &samples).unwrap();
        assert!(rep.deviation < 1e-12, "{rep:?}");
    }
}
