use markov_ustat::bounds::{
    bn_state_terms, compute_bn, compute_cn, compute_tn, finite_bound_constants, independent_bn_cn,
    mc_bound_constants, tail_rhs, BoundSettings, ConstantsBudget, RhsInputs, Variant,
};
use markov_ustat::chain::{ergodicity_constants, ChainModel, FiniteChain, Initial};
use markov_ustat::kernels::{sup_constant_finite, FiniteKernel, KernelFamily, KernelSpec, PairWeight};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn law(s: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, s).prop_map(|w| {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|v| v / t).collect()
    })
}

fn weight() -> impl Strategy<Value = PairWeight> {
    prop_oneof![
        Just(PairWeight::One),
        Just(PairWeight::InverseLag),
        Just(PairWeight::InverseEarlier),
        (-3.0f64..3.0).prop_map(|value| PairWeight::Constant { value }),
    ]
}

/// A chain, a kernel on its states and a horizon.
fn case() -> impl Strategy<Value = (FiniteChain, FiniteKernel)> {
    (2usize..=5).prop_flat_map(|s| {
        (prop::collection::vec(law(s), s), prop::collection::vec(-2.0f64..2.0, s * s), weight(), 2usize..80)
            .prop_map(move |(rows, t, w, n)| {
                let chain = FiniteChain::new(rows).unwrap();
                (chain, FiniteKernel { table: DMatrix::from_row_slice(s, s, &t), weight: w, horizon: n })
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn coarse_bounds_dominate((chain, kernel) in case(), init_seed in law(5)) {
        let consts = ergodicity_constants(&chain).unwrap();
        let n = kernel.horizon as f64;
        let a = sup_constant_finite(&kernel).value;
        let t_n = compute_tn(consts.rho, kernel.horizon, None).unwrap().t_n;
        prop_assert!(compute_bn(&chain, &consts, &kernel, t_n) <= a * n.sqrt() + 1e-9);
        let s = chain.n_states();
        let total: f64 = init_seed[..s].iter().sum();
        let init: Vec<f64> = init_seed[..s].iter().map(|v| v / total).collect();
        prop_assert!(compute_cn(&chain, &consts, None, &kernel) <= a * n + 1e-9);
        prop_assert!(compute_cn(&chain, &consts, Some(&init), &kernel) <= a * n + 1e-9);
    }

    #[test]
    fn identical_rows_reduce_to_the_independent_formulas(
        row in (2usize..=5).prop_flat_map(law),
        vals in prop::collection::vec(-2.0f64..2.0, 25),
        w in weight(),
        n in 2usize..60,
        t_n in 0usize..10,
    ) {
        let s = row.len();
        let chain = FiniteChain::new(vec![row; s]).unwrap();
        let consts = ergodicity_constants(&chain).unwrap();
        let kernel = FiniteKernel { table: DMatrix::from_row_slice(s, s, &vals[..s * s]), weight: w, horizon: n };
        let (b, c) = independent_bn_cn(&consts.pi, &kernel);
        prop_assert!((compute_bn(&chain, &consts, &kernel, t_n) - b).abs() <= 1e-12);
        prop_assert!((compute_cn(&chain, &consts, None, &kernel) - c).abs() <= 1e-12);
    }

    #[test]
    fn rhs_is_increasing_in_u(
        a in 0.1f64..10.0,
        b_n in 0.0f64..50.0,
        c_n in 0.0f64..500.0,
        n in 2usize..5000,
        u in 0.01f64..50.0,
        du in 1e-3f64..5.0,
    ) {
        let inp = RhsInputs { a, b_n, c_n: Some(c_n), kappa: 1.0 };
        for v in [Variant::AnyStart, Variant::DensityRatio, Variant::Stationary, Variant::PairsNormalized] {
            prop_assert!(tail_rhs(v, &inp, n, u + du).unwrap() > tail_rhs(v, &inp, n, u).unwrap());
        }
    }
}

#[test]
fn eigenfunction_kernel_peaks_at_lag_zero() {
    // f = (1,-2) satisfies Pf = 0.7 f, so every k-term is the k = 0 term times
    // 0.49^k: first branch max_x f(x)^2 E_nu f^2 = 4 * 41/17, second branch
    // E_pi f^2 * max_y f(y)^2 = 2 * 4.
    let chain = FiniteChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let consts = ergodicity_constants(&chain).unwrap();
    let f = [1.0, -2.0];
    let kernel = FiniteKernel { table: DMatrix::from_fn(2, 2, |x, y| f[x] * f[y]), weight: PairWeight::One, horizon: 3 };
    for t_n in 0..8 {
        let (first, second) = bn_state_terms(&chain, &consts, &kernel, t_n);
        assert!((first - 164.0 / 17.0).abs() < 1e-12);
        assert!((second - 8.0).abs() < 1e-12);
    }
    let pf: Vec<f64> = (0..2).map(|x| chain.p(x, 0) * f[0] + chain.p(x, 1) * f[1]).collect();
    assert!((pf[0] - 0.7).abs() < 1e-15 && (pf[1] + 1.4).abs() < 1e-15);
}

#[test]
fn independent_example() {
    let chain = FiniteChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    let consts = ergodicity_constants(&chain).unwrap();
    let f = [1.0, -1.0];
    let kernel = FiniteKernel { table: DMatrix::from_fn(2, 2, |x, y| f[x] * f[y]), weight: PairWeight::One, horizon: 3 };
    let (b, c) = independent_bn_cn(&consts.pi, &kernel);
    assert!((c * c - 3.0).abs() < 1e-12);
    assert!((b * b - 2.0).abs() < 1e-12);
}

#[test]
fn finite_constants_record_their_provenance() {
    let chain = FiniteChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let consts = ergodicity_constants(&chain).unwrap();
    let kernel = FiniteKernel {
        table: DMatrix::from_fn(2, 2, |x, y| [1.0, -2.0][x] * [1.0, -2.0][y]),
        weight: PairWeight::One,
        horizon: 100,
    };
    let plain = finite_bound_constants(&chain, &consts, None, &kernel, &BoundSettings::default()).unwrap();
    assert_eq!(plain.t_n, 27);
    assert!(plain.flags.is_empty());
    assert_eq!(plain.constants_source, "user");
    let shallow = BoundSettings { t_n: Some(3), ..BoundSettings::default() };
    let k = finite_bound_constants(&chain, &consts, None, &kernel, &shallow).unwrap();
    assert_eq!(k.flags, vec!["tn-override".to_string(), "tn-below-admissible-depth".to_string()]);
    let user = BoundSettings { rate: Some((2.0, 0.8)), ..BoundSettings::default() };
    let k = finite_bound_constants(&chain, &consts, None, &kernel, &user).unwrap();
    assert_eq!((k.l, k.rho), (2.0, 0.8));
    assert!(k.flags.contains(&"user-rate".to_string()));
    let best = plain.best_general_start(2.0, true).unwrap().unwrap();
    assert!(best.1 <= plain.rhs(Variant::AnyStart, 2.0).unwrap());
}

#[test]
fn monte_carlo_constants_are_flagged_and_reproducible() {
    let model: ChainModel = serde_json::from_str(
        r#"{"kind":"ar1","dim":2,"h":{"shape":"tanh","amplitude":0.5},"h_bound":0.75,"noise_sd":1.0}"#,
    )
    .unwrap();
    let family = KernelFamily::from_spec(&KernelSpec::Cosine { scale: 1.0 }, 20).unwrap();
    let budget = ConstantsBudget { samples: 24, inner: 12, probes: 15, seed: 5 };
    let a = mc_bound_constants(&model, &Initial::Stationary, &family, &BoundSettings::default(), &budget).unwrap();
    let b = mc_bound_constants(&model, &Initial::Stationary, &family, &BoundSettings::default(), &budget).unwrap();
    assert_eq!(a, b);
    for flag in ["sup-over-probes", "doeblin-rate", "first-coordinate-chain", "approximate-stationary"] {
        assert!(a.flags.iter().any(|f| f == flag), "missing {flag} in {:?}", a.flags);
    }
    assert!(a.b_n <= a.a * 20f64.sqrt() + 1e-9 && a.c_n <= a.a * 20.0 + 1e-9);
    assert!(a.rho > 0.0 && a.rho < 1.0);
}
