//! Acceptance suite: one line per criterion; exits non-zero on any failure
//! outside the documented unattainable set.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;

use markov_ustat::bounds::{compute_bn, compute_cn, compute_tn, independent_bn_cn};
use markov_ustat::chain::{ergodicity_constants, simulate_stream, ChainModel, FiniteChain, Initial};
use markov_ustat::experiments::{
    identity_suite, rate_experiment, regeneration_suite, tail_experiment, RatePlan, TailPlan,
};
use markov_ustat::kernels::{
    hoeffding_project, pi_canonical_deviation, sup_constant_finite, FiniteKernel, KernelFamily, KernelSpec,
    PairWeight,
};
use markov_ustat::rng::{stream_rng, StreamRng};
use markov_ustat::splitting::{orlicz_norm_estimate, split_simulate};
use markov_ustat::ustat::{martingale_decomposition, martingale_residuals, tau_ap, tau_kendall, wilcoxon_weighted};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, format!("{what}: got {a}, expected {b}"))
}

fn two_state() -> FiniteChain {
    FiniteChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap()
}

fn random_law(rng: &mut StreamRng, s: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..s).map(|_| 0.05 + rng.random::<f64>()).collect();
    let t: f64 = w.iter().sum();
    w.iter().map(|v| v / t).collect()
}

fn random_chain(rng: &mut StreamRng, max_states: usize) -> FiniteChain {
    let s = rng.random_range(2..=max_states);
    let rows = (0..s).map(|_| random_law(rng, s)).collect();
    let init = random_law(rng, s);
    FiniteChain::new(rows).unwrap().with_initial(init).unwrap()
}

fn random_weight(rng: &mut StreamRng) -> PairWeight {
    match rng.random_range(0..4) {
        0 => PairWeight::One,
        1 => PairWeight::InverseLag,
        2 => PairWeight::InverseEarlier,
        _ => PairWeight::Constant { value: rng.random_range(-2.0..2.0) },
    }
}

fn random_kernel(rng: &mut StreamRng, s: usize, n: usize) -> FiniteKernel {
    FiniteKernel {
        table: DMatrix::from_fn(s, s, |_, _| rng.random_range(-1.0..1.0)),
        weight: random_weight(rng),
        horizon: n,
    }
}

fn random_path(chain: &FiniteChain, law: &[f64], n: usize, seed: u64, stream: u64) -> Vec<usize> {
    let model = ChainModel::Finite(chain.clone());
    let path = simulate_stream(&model, n, seed, stream, &Initial::Law(law.to_vec())).unwrap();
    path.finite_states().unwrap().to_vec()
}

/// `E[h(X_i, X_j)]` from naive matrix products.
fn naive_pair_mean(chain: &FiniteChain, law: &[f64], h: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let p = chain.matrix();
    let mut li = DMatrix::from_row_slice(1, law.len(), law);
    for _ in 1..i {
        li = &li * p;
    }
    let mut pk = DMatrix::identity(law.len(), law.len());
    for _ in 0..(j - i) {
        pk = &pk * p;
    }
    let mut total = 0.0;
    for x in 0..law.len() {
        for y in 0..law.len() {
            total += li[(0, x)] * pk[(x, y)] * h[(x, y)];
        }
    }
    total
}

fn criterion_1() -> Outcome {
    let k = ergodicity_constants(&two_state()).map_err(|e| e.to_string())?;
    let tol = 1e-12;
    close(k.pi[0], 2.0 / 3.0, tol, "pi_0")?;
    close(k.pi[1], 1.0 / 3.0, tol, "pi_1")?;
    close(k.rho, 0.7, tol, "rho")?;
    close(k.lambda, 0.7, tol, "lambda")?;
    close(k.delta_m, 0.3, tol, "delta_1")?;
    close(k.mu[0], 2.0 / 3.0, tol, "mu_0")?;
    close(k.mu[1], 1.0 / 3.0, tol, "mu_1")?;
    close(k.delta_major, 1.7, tol, "delta_M")?;
    close(k.nu[0], 9.0 / 17.0, tol, "nu_0")?;
    close(k.nu[1], 8.0 / 17.0, tol, "nu_1")?;
    ensure(k.t_mix == 3, format!("t_mix = {}", k.t_mix))?;
    Ok("all ten constants exact to 1e-12".into())
}

fn criterion_2() -> Outcome {
    let mut rng = stream_rng(2, 0);
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for trial in 0..1000u64 {
        let chain = random_chain(&mut rng, 5);
        let n = rng.random_range(2..=50);
        let kernel = random_kernel(&mut rng, chain.n_states(), n);
        let t_n = rng.random_range(1..=n);
        let law = chain.initial().to_vec();
        let states = random_path(&chain, &law, n, 2, trial);
        let d = martingale_decomposition(&chain, &law, &states, &kernel, t_n).map_err(|e| e.to_string())?;
        worst = worst.max(d.residual / (1.0 + d.ustat.abs()));
        if trial % 10 == 0 {
            // U against the centered pair sum built from naive matrix powers
            let mut u = 0.0;
            for j in 2..=n {
                for i in 1..j {
                    let m = naive_pair_mean(&chain, &law, &kernel.table, i, j);
                    u += kernel.weight.at(i, j) * (kernel.h(states[i - 1], states[j - 1]) - m);
                }
            }
            worst_oracle = worst_oracle.max((u - d.ustat).abs() / (1.0 + u.abs()));
        }
    }
    ensure(worst <= 1e-9, format!("relative residual {worst:e}"))?;
    ensure(worst_oracle <= 1e-9, format!("U differs from the naive oracle by {worst_oracle:e}"))?;
    Ok(format!("max relative residual {worst:.2e} over 1000 tuples"))
}

fn criterion_3() -> Outcome {
    let mut rng = stream_rng(3, 0);
    let mut worst: f64 = 0.0;
    for trial in 0..1000u64 {
        let chain = random_chain(&mut rng, 5);
        let n = rng.random_range(2..=50);
        let kernel = random_kernel(&mut rng, chain.n_states(), n);
        let states = random_path(&chain, chain.initial(), n, 3, trial);
        for r in martingale_residuals(&chain, &states, &kernel) {
            worst = worst.max(r.abs());
        }
    }
    ensure(worst <= 1e-10, format!("conditional residual {worst:e}"))?;
    Ok(format!("max |E_(j-1) Y_j| {worst:.2e} over 1000 paths"))
}

fn criterion_4() -> Outcome {
    let mut rng = stream_rng(4, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let chain = random_chain(&mut rng, 6);
        let pi = ergodicity_constants(&chain).map_err(|e| e.to_string())?.pi;
        let kernel = random_kernel(&mut rng, chain.n_states(), 10);
        let projected = hoeffding_project(&kernel, &pi);
        worst = worst.max(pi_canonical_deviation(&projected, &pi).map_err(|e| e.to_string())?.deviation);
    }
    ensure(worst <= 1e-10, format!("deviation {worst:e}"))?;
    let pi = [2.0 / 3.0, 1.0 / 3.0];
    let eq = FiniteKernel { table: DMatrix::identity(2, 2), weight: PairWeight::One, horizon: 4 };
    let p = hoeffding_project(&eq, &pi);
    let expect = [[-1.0 / 3.0, -1.0], [-1.0, 1.0 / 3.0]];
    for x in 0..2 {
        for y in 0..2 {
            close(p.h(x, y), expect[x][y], 1e-15, "projected indicator")?;
        }
    }
    Ok(format!("max deviation {worst:.2e}; worked 2x2 projection exact"))
}

fn criterion_5() -> Outcome {
    let mut rng = stream_rng(5, 0);
    let mut configs = 0;
    for _ in 0..200 {
        let chain = random_chain(&mut rng, 5);
        let consts = ergodicity_constants(&chain).map_err(|e| e.to_string())?;
        let n = rng.random_range(2..=60);
        let kernel = random_kernel(&mut rng, chain.n_states(), n);
        let a = sup_constant_finite(&kernel).value;
        let t_n = compute_tn(consts.rho, n, None).map_err(|e| e.to_string())?.t_n;
        let b = compute_bn(&chain, &consts, &kernel, t_n);
        let nf = n as f64;
        ensure(b <= a * nf.sqrt() + 1e-9, format!("B_n {b} > A sqrt(n) = {}", a * nf.sqrt()))?;
        for law in [None, Some(chain.initial())] {
            let c = compute_cn(&chain, &consts, law, &kernel);
            ensure(c <= a * nf + 1e-9, format!("C_n {c} > A n = {}", a * nf))?;
            configs += 1;
        }
    }
    // Hand derivation for P = [[0.9,0.1],[0.2,0.8]], f = (1,-2), h = f (x) f:
    // pi = (2/3,1/3) gives E_pi f = 0 so the centered kernel is h itself,
    // E_pi f^2 = 2/3 + 4/3 = 2 and nu = (9/17, 8/17) gives E_nu f^2 = 41/17.
    // With a = 1 and n = 3 the row sums of squared weights total 2 + 1 = 3,
    // so C_n^2 = 3 * 2 * 41/17 = 246/17. Pf = 0.7 f, so the k = 0 terms
    // dominate: the first branch is (n-1) * E_nu f^2 * max f^2 = 2 * 41/17 * 4
    // and the second (n-1) * max f^2 * E_pi f^2 = 2 * 4 * 2 = 16.
    let chain = two_state();
    let consts = ergodicity_constants(&chain).unwrap();
    let f = [1.0, -2.0];
    let kernel = FiniteKernel { table: DMatrix::from_fn(2, 2, |x, y| f[x] * f[y]), weight: PairWeight::One, horizon: 3 };
    let c = compute_cn(&chain, &consts, None, &kernel);
    close(c * c, 246.0 / 17.0, 1e-9, "C_n^2")?;
    for t_n in [1, 2, 3] {
        let b = compute_bn(&chain, &consts, &kernel, t_n);
        close(b * b, 328.0 / 17.0, 1e-9, "B_n^2")?;
    }
    Ok(format!("{configs} configurations dominated; C_n^2 = 246/17, B_n^2 = 328/17"))
}

fn criterion_6() -> Outcome {
    let chain = two_state();
    let consts = ergodicity_constants(&chain).unwrap();
    let spec = KernelSpec::Weighted {
        base: Box::new(KernelSpec::Product { f: Some(vec![1.0, -2.0]), map: None }),
        weights: PairWeight::InverseLag,
    };
    let mut detail = Vec::new();
    let mut violations = Vec::new();
    for n in [10usize, 100, 1000] {
        let kernel = KernelFamily::from_spec(&spec, n).unwrap().tabulate(&chain).unwrap();
        let a = sup_constant_finite(&kernel).value;
        let t_n = compute_tn(consts.rho, n, None).unwrap().t_n;
        let b2 = compute_bn(&chain, &consts, &kernel, t_n).powi(2);
        let c2 = compute_cn(&chain, &consts, None, &kernel).powi(2);
        let b_cap = a * a * std::f64::consts::PI.powi(2) / 6.0;
        let c_cap = a * a * (1.0 + (n as f64).ln());
        // sum_{i<j} (j-i)^{-2} = sum_s (n-s)/s^2, which grows like n pi^2/6
        let lag_sum: f64 = (1..n).map(|s| (n - s) as f64 / (s * s) as f64).sum();
        if b2 > b_cap {
            violations.push(format!("n = {n}: B_n^2 {b2:.4} > {b_cap:.4}"));
        }
        if c2 > c_cap {
            violations.push(format!(
                "n = {n}: C_n^2 {c2:.4} > A^2(1 + log n) = {c_cap:.4} (sum of squared weights {lag_sum:.4} vs 1 + log n = {:.4})",
                1.0 + (n as f64).ln()
            ));
        }
        detail.push(format!("n={n}: B^2/cap {:.3}, C^2/cap {:.3}", b2 / b_cap, c2 / c_cap));
    }
    if violations.is_empty() {
        Ok(detail.join("; "))
    } else {
        Err(violations.join("; "))
    }
}

fn criterion_7() -> Outcome {
    let chain = two_state();
    let consts = ergodicity_constants(&chain).unwrap();
    let report = regeneration_suite(&chain, &consts, 360_000, 7, None).map_err(|e| e.to_string())?;
    close(report.block_target, 20.0 / 9.0, 1e-12, "block target")?;
    ensure(report.n_blocks >= 100_000, format!("only {} blocks", report.n_blocks))?;
    ensure(report.block_identity_ok, format!("block z = {:.3}", report.block_z))?;
    ensure(report.mean_t_ok, format!("T z = {:.3}", report.mean_t_z))?;
    Ok(format!(
        "{} blocks; block z {:.2}, mean T {:.4} (z {:.2})",
        report.n_blocks, report.block_z, report.mean_t, report.mean_t_z
    ))
}

fn criterion_8() -> Outcome {
    let mut chains = vec![
        two_state(),
        FiniteChain::new(vec![vec![0.2, 0.5, 0.3]; 3]).unwrap(),
        FiniteChain::new(vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.3, 0.3, 0.4]]).unwrap(),
    ];
    let mut rng = stream_rng(8, 0);
    for _ in 0..5 {
        chains.push(random_chain(&mut rng, 5));
    }
    let mut taus = Vec::new();
    for (k, chain) in chains.iter().enumerate() {
        let consts = ergodicity_constants(chain).map_err(|e| e.to_string())?;
        let steps = (3000.0 / consts.delta_m).ceil() as usize + 100;
        let trace = split_simulate(chain, &consts, steps, 8, k as u64).map_err(|e| e.to_string())?;
        let times: Vec<f64> = trace.regeneration_times().map_err(|e| e.to_string())?[1..]
            .iter()
            .map(|&t| t as f64)
            .collect();
        let est = orlicz_norm_estimate(&times).map_err(|e| format!("chain {k}: {e}"))?;
        ensure(est.tau_hat.is_finite() && est.moment_at_tau <= 2.0, format!("chain {k}: {est:?}"))?;
        close(est.moment_at_tau, 2.0, 1e-6, "moment at the estimate")?;
        taus.push(format!("{:.3}", est.tau_hat));
    }
    let constant = orlicz_norm_estimate(&vec![3.0; 1000]).map_err(|e| e.to_string())?;
    close(constant.tau_hat, 3.0 / std::f64::consts::LN_2, 1e-6, "constant sample")?;
    Ok(format!("tau_hat per chain [{}]; constant sample exact", taus.join(", ")))
}

fn criterion_9() -> Outcome {
    let chain = two_state().with_initial(vec![0.0, 1.0]).unwrap();
    let spec = KernelSpec::Product { f: Some(vec![1.0, -2.0]), map: None };
    let family = KernelFamily::from_spec(&spec, 40).unwrap();
    let report = identity_suite(&chain, &family, 40, None, 1000, 9, None).map_err(|e| e.to_string())?;
    ensure(report.canonical, "kernel should be canonical")?;
    ensure(
        report.max_abs_r_stationary <= report.remainder_bound_stationary,
        format!("stationary |R| {} > {}", report.max_abs_r_stationary, report.remainder_bound_stationary),
    )?;
    ensure(
        report.max_abs_r_general <= report.remainder_bound_general,
        format!("general |R| {} > {}", report.max_abs_r_general, report.remainder_bound_general),
    )?;
    Ok(format!(
        "t_n = {}; stationary |R| {:.3} <= {:.3}; declared |R| {:.3} <= {:.1}",
        report.t_n,
        report.max_abs_r_stationary,
        report.remainder_bound_stationary,
        report.max_abs_r_general,
        report.remainder_bound_general
    ))
}

fn criterion_10() -> Outcome {
    let chain = FiniteChain::new(vec![vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
    let plan = RatePlan {
        model: ChainModel::Finite(chain),
        kernel: KernelSpec::Product { f: Some(vec![1.0, -1.0]), map: None },
        weights: PairWeight::InverseLag,
        n_grid: vec![64, 128, 256, 512, 1024],
        replicates: 500,
        seed: 10,
        centering: markov_ustat::ustat::Centering::JointExpectation,
        initial: Initial::Stationary,
        mc_budget: 256,
    };
    let report = rate_experiment(&plan, None).map_err(|e| e.to_string())?;
    let (w, u) = (report.weighted.slope, report.unweighted.slope);
    ensure((-1.8..=-1.2).contains(&w), format!("weighted slope {w:.3}"))?;
    ensure((-1.2..=-0.8).contains(&u), format!("unweighted slope {u:.3}"))?;
    ensure(report.separation >= 0.3, format!("separation {:.3}", report.separation))?;
    Ok(format!("weighted {w:.3}, unweighted {u:.3}, separation {:.3}", report.separation))
}

fn criterion_11() -> Outcome {
    let chain = FiniteChain::new(vec![vec![0.2, 0.5, 0.3]; 3]).unwrap();
    let consts = ergodicity_constants(&chain).unwrap();
    let mut rng = stream_rng(11, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=40);
        let kernel = random_kernel(&mut rng, 3, n);
        let t_n = rng.random_range(1..=n);
        let (b_ind, c_ind) = independent_bn_cn(&consts.pi, &kernel);
        let b = compute_bn(&chain, &consts, &kernel, t_n);
        let c = compute_cn(&chain, &consts, None, &kernel);
        worst = worst.max((b - b_ind).abs()).max((c - c_ind).abs());
    }
    ensure(worst <= 1e-12, format!("difference {worst:e}"))?;
    Ok(format!("max difference {worst:.2e}"))
}

fn criterion_12() -> Outcome {
    for n in 2..=100 {
        let up: Vec<f64> = (1..=n).map(f64::from).collect();
        let down: Vec<f64> = up.iter().rev().copied().collect();
        for (x, want) in [(&up, 1.0), (&down, -1.0)] {
            let k = tau_kendall(x).map_err(|e| e.to_string())?;
            let a = tau_ap(x).map_err(|e| e.to_string())?;
            close(k, want, 1e-12, &format!("tau Kendall n = {n}"))?;
            close(a, want, 1e-12, &format!("tau AP n = {n}"))?;
        }
    }
    close(tau_ap(&[2.0, 1.0, 3.0]).unwrap(), 0.0, 1e-15, "tau AP (2,1,3)")?;
    let w = |a: &[f64], b: &[f64], wa: &[f64], wb: &[f64]| wilcoxon_weighted(a, b, wa, wb).unwrap();
    close(w(&[1.0, 2.0], &[3.0, 4.0, 5.0], &[1.0; 2], &[1.0; 3]), 1.0, 1e-15, "separated samples")?;
    close(w(&[5.0], &[5.0], &[1.0], &[1.0]), 0.5, 1e-15, "tied singletons")?;
    close(w(&[1.0, 10.0], &[5.0], &[3.0, 1.0], &[1.0]), 0.75, 1e-15, "weighted pair")?;
    Ok("identity/reversal for n <= 100, tau AP (2,1,3) = 0, Wilcoxon hand cases".into())
}

fn criterion_13() -> Outcome {
    let finite = TailPlan {
        model: ChainModel::Finite(two_state()),
        kernel: KernelSpec::Product { f: Some(vec![1.0, -2.0]), map: None },
        n_grid: vec![20, 40],
        replicates: 100,
        u_grid: vec![1.0, 2.0, 3.0, 4.0, 5.0],
        seed: 13,
        centering: markov_ustat::ustat::Centering::JointExpectation,
        initial: Initial::Stationary,
        beta: 1.0,
        kappa: None,
        held_out_u: None,
        mc_budget: 64,
        constants_budget: markov_ustat::bounds::ConstantsBudget { samples: 16, inner: 16, probes: 20, seed: 0 },
    };
    let ar1: ChainModel = serde_json::from_str(
        r#"{"kind":"ar1","h":{"shape":"tanh","amplitude":0.8},"h_bound":0.8,"noise_sd":1.0}"#,
    )
    .map_err(|e| e.to_string())?;
    let continuous = TailPlan {
        model: ar1,
        kernel: KernelSpec::Cosine { scale: 1.0 },
        n_grid: vec![16],
        ..finite.clone()
    };
    let mut checked = 0;
    for plan in [&finite, &continuous] {
        let run = |threads| -> Result<(String, String, String), String> {
            let r = tail_experiment(plan, Some(threads)).map_err(|e| e.to_string())?;
            Ok((r.raw_csv(), r.quantile_csv(), serde_json::to_string(&r).unwrap()))
        };
        let (a, b, c) = (run(1)?, run(4)?, run(1)?);
        ensure(a == b && a == c, "tail outputs differ between runs")?;
        checked += 1;
    }
    let rate = RatePlan {
        model: ChainModel::Finite(two_state()),
        kernel: KernelSpec::Product { f: Some(vec![1.0, -2.0]), map: None },
        weights: PairWeight::InverseLag,
        n_grid: vec![8, 16, 32],
        replicates: 60,
        seed: 13,
        centering: markov_ustat::ustat::Centering::JointExpectation,
        initial: Initial::Declared,
        mc_budget: 64,
    };
    let run = |threads| -> Result<(String, String, String), String> {
        let r = rate_experiment(&rate, Some(threads)).map_err(|e| e.to_string())?;
        Ok((r.raw_csv_weighted() + &r.raw_csv_unweighted(), r.quantile_csv(), serde_json::to_string(&r).unwrap()))
    };
    ensure(run(1)? == run(3)?, "rate outputs differ between thread counts")?;
    let chain = two_state();
    let family = KernelFamily::from_spec(&finite.kernel, 12).unwrap();
    let id = |threads| serde_json::to_string(&identity_suite(&chain, &family, 12, None, 50, 13, Some(threads)).unwrap()).unwrap();
    ensure(id(1) == id(4), "identity suite differs between thread counts")?;
    Ok(format!("{} tail plans, a rate plan and the identity suite byte-identical across runs", checked))
}

/// Criteria that cannot hold as stated, with the reason printed next to the
/// failure. They still run at full tolerance.
const UNATTAINABLE: &[(usize, &str)] = &[(
    6,
    "the C_n cap needs sum_{i<j} (j-i)^{-2} <= 1 + log n, but that sum is sum_s (n-s)/s^2 ~ n pi^2/6",
)];

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 13] = [
        ("constants oracle", criterion_1, Duration::from_secs(1)),
        ("decomposition identity", criterion_2, Duration::from_secs(60)),
        ("martingale property", criterion_3, Duration::from_secs(60)),
        ("canonical projection", criterion_4, Duration::MAX),
        ("coarse-bound dominance", criterion_5, Duration::MAX),
        ("weighted-kernel constants", criterion_6, Duration::MAX),
        ("regeneration identity", criterion_7, Duration::from_secs(60)),
        ("Orlicz finiteness", criterion_8, Duration::MAX),
        ("remainder bound", criterion_9, Duration::MAX),
        ("rate separation", criterion_10, Duration::from_secs(600)),
        ("nu = pi reduction", criterion_11, Duration::MAX),
        ("rank statistics", criterion_12, Duration::MAX),
        ("determinism", criterion_13, Duration::MAX),
    ];
    let mut passed = 0;
    let mut unexpected = 0;
    for (k, (name, run, limit)) in criteria.iter().enumerate() {
        let id = k + 1;
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed > *limit {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            } else {
                Ok(msg)
            }
        });
        let known = UNATTAINABLE.iter().find(|(c, _)| *c == id).map(|(_, why)| *why);
        match (outcome, known) {
            (Ok(msg), _) => {
                passed += 1;
                println!("PASS criterion {id:>2} {name}: {msg} [{elapsed:.2?}]");
            }
            (Err(msg), Some(why)) => {
                println!("FAIL criterion {id:>2} {name}: {msg} [{elapsed:.2?}] (unattainable: {why})");
            }
            (Err(msg), None) => {
                unexpected += 1;
                println!("FAIL criterion {id:>2} {name}: {msg} [{elapsed:.2?}]");
            }
        }
    }
    println!("{passed}/13 acceptance criteria passed, {unexpected} unexpected failures");
    if unexpected > 0 {
        std::process::exit(1);
    }
}
