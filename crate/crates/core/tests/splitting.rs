use markov_ustat::chain::{ergodicity_constants, FiniteChain};
use markov_ustat::experiments::{ols_slope, regeneration_suite};
use markov_ustat::splitting::{block_sums, orlicz_norm_estimate, reconstruction_error, split_simulate};
use proptest::prelude::*;

fn chain_strategy() -> impl Strategy<Value = FiniteChain> {
    (2usize..=5).prop_flat_map(|s| {
        prop::collection::vec(prop::collection::vec(0.02f64..1.0, s), s).prop_map(|rows| {
            let rows = rows
                .into_iter()
                .map(|r| {
                    let t: f64 = r.iter().sum();
                    r.into_iter().map(|v| v / t).collect()
                })
                .collect();
            FiniteChain::new(rows).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixture_reconstructs_the_kernel(chain in chain_strategy()) {
        let k = ergodicity_constants(&chain).unwrap();
        prop_assert!(reconstruction_error(&chain, k.delta_m, &k.mu) <= 1e-14);
    }
}

fn three_state() -> FiniteChain {
    FiniteChain::new(vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.3, 0.3, 0.4]]).unwrap()
}

#[test]
fn split_chain_keeps_the_transition_law() {
    let chain = three_state();
    let k = ergodicity_constants(&chain).unwrap();
    let trace = split_simulate(&chain, &k, 1_000_000, 21, 0).unwrap();
    let mut counts = [[0usize; 3]; 3];
    for w in trace.states.windows(2) {
        counts[w[0]][w[1]] += 1;
    }
    for (x, row) in counts.iter().enumerate() {
        let total: usize = row.iter().sum();
        for (y, &c) in row.iter().enumerate() {
            let p = chain.p(x, y);
            let se = (p * (1.0 - p) / total as f64).sqrt();
            let freq = c as f64 / total as f64;
            assert!((freq - p).abs() <= 3.0 * se, "({x},{y}): {freq} vs {p}, se {se}");
        }
    }
}

#[test]
fn regeneration_times_have_geometric_tails() {
    let chain = three_state();
    let k = ergodicity_constants(&chain).unwrap();
    let report = regeneration_suite(&chain, &k, 300_000, 22, None).unwrap();
    let slope = report.tail_slope.unwrap();
    assert!(slope < 0.0);
    // bells are Bernoulli(delta), so the survival slope is log(1 - delta)
    let expected = report.expected_tail_slope.unwrap();
    assert!((slope - expected).abs() < 0.05, "{slope} vs {expected}");
    assert!(report.block_lag1_correlation.abs() * (report.n_blocks as f64).sqrt() <= 3.0);
    assert!(report.passed());
    assert!(report.tau_hat.is_finite() && report.orlicz_sample_size >= 1000);
}

#[test]
fn survival_of_later_times_decreases() {
    let chain = FiniteChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let k = ergodicity_constants(&chain).unwrap();
    let trace = split_simulate(&chain, &k, 200_000, 23, 0).unwrap();
    let times = trace.regeneration_times().unwrap();
    let later = &times[1..];
    let m = later.len() as f64;
    let survival: Vec<f64> = (1..15).map(|t| later.iter().filter(|&&v| v > t).count() as f64 / m).collect();
    assert!(survival.windows(2).all(|w| w[1] <= w[0]));
    let xs: Vec<f64> = (1..15).map(f64::from).collect();
    let ys: Vec<f64> = survival.iter().map(|s| s.ln()).collect();
    let (slope, _) = ols_slope(&xs, &ys);
    assert!(slope < 0.0);
    let intercept = ys.iter().sum::<f64>() / ys.len() as f64 - slope * xs.iter().sum::<f64>() / xs.len() as f64;
    // the fitted line bounds the empirical log-survival up to sampling noise
    for (x, y) in xs.iter().zip(&ys) {
        assert!(*y <= intercept + slope * x + 0.05);
    }
}

#[test]
fn block_sums_and_orlicz_on_the_two_state_chain() {
    let chain = FiniteChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let k = ergodicity_constants(&chain).unwrap();
    let trace = split_simulate(&chain, &k, 50_000, 24, 0).unwrap();
    let sums = block_sums(&trace, &[1.0, 1.0]).unwrap();
    // with f = 1 each block sum is the block length
    let lengths: Vec<f64> = trace.blocks().iter().map(|r| r.len() as f64).collect();
    assert_eq!(sums.sums, lengths);
    let est = orlicz_norm_estimate(&lengths).unwrap();
    assert!((est.moment_at_tau - 2.0).abs() < 1e-6);
    assert!(est.bracket.0 < est.tau_hat && est.tau_hat < est.bracket.1);
}
