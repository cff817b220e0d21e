use proptest::prelude::*;
use qualeval::reduce::{choose_components, fit_pca};

mod common;
use common::{correlated, covariance_eigenvalues, sample_variance};

#[test]
fn components_are_orthonormal() {
    let x = correlated(300, 6, 5);
    let pca = fit_pca(x.view(), 6).unwrap();
    for (i, a) in pca.components.iter().enumerate() {
        for (j, b) in pca.components.iter().enumerate() {
            let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-8, "<{i},{j}> = {dot}");
        }
    }
}

#[test]
fn projected_variances_match_nalgebra_eigenvalues() {
    for seed in 0..5 {
        let x = correlated(250, 5, seed);
        let oracle = covariance_eigenvalues(x.view());
        let pca = fit_pca(x.view(), 5).unwrap();
        let z = pca.transform(x.view()).unwrap();
        for (j, want) in oracle.iter().enumerate() {
            let var = sample_variance(&z.column(j).to_vec());
            assert!((var - want).abs() < 1e-8, "seed {seed} comp {j}: {var} vs {want}");
            assert!((pca.eigenvalues[j] - want).abs() < 1e-8);
        }
    }
}

#[test]
fn component_choice() {
    assert_eq!(choose_components(&[0.7, 0.2, 0.1], 0.8), 2);
    assert_eq!(choose_components(&[0.9, 0.1], 0.8), 1);
    assert_eq!(choose_components(&[0.5, 0.3, 0.2], 0.8), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn full_rank_round_trip(seed in 0u64..10_000, d in 2usize..6) {
        let x = correlated(60, d, seed);
        let pca = fit_pca(x.view(), d).unwrap();
        let back = pca.inverse_transform(pca.transform(x.view()).unwrap().view()).unwrap();
        let err = (&back - &x).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        prop_assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn ratios_are_sorted_and_sum_to_one(seed in 0u64..10_000, d in 2usize..6) {
        let x = correlated(40, d, seed);
        let pca = fit_pca(x.view(), d).unwrap();
        let r = &pca.variance_ratios;
        prop_assert!(r.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
