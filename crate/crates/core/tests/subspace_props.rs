mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use nnident::linalg;
use nnident::oracle::{vec_sym, FdConfig};
use nnident::subspace::{
    active_subspace, approximate_w, estimate_alpha, exact_w, pca_subspace, subspace_distance, Origin,
    SampleDistribution, SymSubspace,
};
use nnident::{rng, Activation, Error, QueryOracle};
use proptest::prelude::*;

fn random_subspace(seed: u64, d: usize, r: usize) -> SymSubspace {
    let mut g = rng::stream(seed, "subspace", 0);
    let mats: Vec<DMatrix<f64>> = (0..r)
        .map(|_| {
            let m = DMatrix::from_column_slice(d, d, rng::gaussian_vector(&mut g, d * d, 1.0).as_slice());
            &m + m.transpose()
        })
        .collect();
    SymSubspace::spanned_by(d, &mats, Origin::Exact).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_idempotent_and_contractive(seed in 0u64..1000, d in 2usize..6, r in 1usize..4) {
        let sub = random_subspace(seed, d, r);
        let basis = sub.basis();
        prop_assert!((basis.tr_mul(basis) - DMatrix::identity(r, r)).amax() <= 1e-10);
        let mut g = rng::stream(seed, "m", 1);
        let m = DMatrix::from_column_slice(d, d, rng::gaussian_vector(&mut g, d * d, 1.0).as_slice());
        let m = &m + m.transpose();
        let p = sub.project(&m).unwrap();
        prop_assert!((sub.project(&p).unwrap() - &p).norm() <= 1e-10);
        prop_assert!(p.norm() <= m.norm() + 1e-12);
    }

    #[test]
    fn distance_is_symmetric(s1 in 0u64..500, s2 in 500u64..1000, d in 2usize..5) {
        let a = random_subspace(s1, d, 2);
        let b = random_subspace(s2, d, 2);
        let ab = subspace_distance(&a, &b).unwrap();
        prop_assert!((ab - subspace_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(subspace_distance(&a, &a).unwrap() < 1e-6);
    }
}

#[test]
fn orthogonal_subspaces_are_sqrt_2r_apart() {
    let e = |i: usize, j: usize| {
        let mut m = DMatrix::zeros(4, 4);
        m[(i, j)] = 1.0;
        m[(j, i)] = 1.0;
        m
    };
    let a = SymSubspace::spanned_by(4, &[e(0, 0), e(1, 1)], Origin::Exact).unwrap();
    let b = SymSubspace::spanned_by(4, &[e(2, 2), e(0, 1)], Origin::Exact).unwrap();
    assert!((subspace_distance(&a, &b).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn hessians_with_frozen_first_layer_lie_in_w() {
    // With Aᵀx = 0 every Hessian is Σγ_i a_i⊗a_i + Στ_ℓ v_ℓ⊗v_ℓ, i.e. inside W.
    let net = random_net(3, 9, 5, 2, Activation::ShiftedSigmoid, 0.3);
    let w = exact_w(&net).unwrap();
    let (q, _) = linalg::column_basis(net.a());
    let complement = DMatrix::identity(9, 9) - linalg::projector(&q.columns(0, 5).into_owned());
    let mut r = rng::stream(1, "orth-points", 0);
    for _ in 0..10 {
        let x = &complement * rng::unit_sphere(&mut r, 9) * 2.0;
        assert!(net.a().tr_mul(&x).amax() < 1e-12);
        let h = net.hessian(&x);
        assert!(w.residual(&h) <= 1e-8 * h.norm().max(1.0));
    }
}

fn samples_in_span(profiles: &DMatrix<f64>, n: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut r = rng::stream(seed, "coefficients", 0);
    (0..n)
        .map(|_| {
            let c = rng::gaussian_vector(&mut r, profiles.ncols(), 1.0);
            profiles.column_iter().zip(c.iter()).map(|(p, &ci)| linalg::outer(&p.into_owned()) * ci).sum()
        })
        .collect()
}

#[test]
fn pca_of_samples_in_span_recovers_w() {
    let net = random_net(8, 6, 5, 2, Activation::Tanh, 0.3);
    let samples = samples_in_span(&net.profiles().unwrap(), 100, 2);
    let est = pca_subspace(&samples, 7, Origin::Estimated).unwrap();
    let dist = subspace_distance(&est.subspace, &exact_w(&net).unwrap()).unwrap();
    assert!(dist < 1e-8, "distance {dist}");
    assert!(est.alpha_hat > 0.0);
}

#[test]
fn alpha_scales_quadratically_and_vanishes_on_zero() {
    let net = random_net(5, 6, 4, 2, Activation::ShiftedSigmoid, 0.2);
    let samples = samples_in_span(&net.profiles().unwrap(), 30, 3);
    let a = estimate_alpha(&samples, 6).unwrap();
    let b = estimate_alpha(&samples.iter().map(|h| h * 3.0).collect::<Vec<_>>(), 6).unwrap();
    assert!(a > 1e-3 && (b - 9.0 * a).abs() <= 1e-9 * a, "{a} {b}");
    assert!(estimate_alpha(&samples, 7).unwrap() < 1e-9 * a);
    let zeros = vec![DMatrix::zeros(4, 4); 10];
    assert_eq!(estimate_alpha(&zeros, 6).unwrap(), 0.0);
}

#[test]
fn active_subspace_examples() {
    let net = random_net(6, 6, 6, 2, Activation::Tanh, 0.2);
    let p = active_subspace(&QueryOracle::from_network(net), 6, 50, FdConfig::default(), 0).unwrap();
    assert!((p - DMatrix::identity(6, 6)).norm() < 1e-8);

    let net = random_net(7, 6, 3, 2, Activation::Tanh, 0.2);
    let (q, _) = linalg::column_basis(net.a());
    let truth = linalg::projector(&q.columns(0, 3).into_owned());
    let p = active_subspace(&QueryOracle::from_network(net), 3, 200, FdConfig::default(), 0).unwrap();
    assert!((p - truth).norm() <= 0.05);

    let flat = QueryOracle::from_fn(4, |_| 1.0);
    assert!(matches!(active_subspace(&flat, 2, 10, FdConfig::default(), 0), Err(Error::RankDeficient { .. })));
}

#[test]
fn coincident_single_neuron_is_rank_deficient() {
    // m0 = m1 = 1 gives v₁ = ±a₁, so a₁⊗a₁ and v₁⊗v₁ coincide.
    let net = random_net(1, 3, 1, 1, Activation::ShiftedSigmoid, 0.1);
    assert!(matches!(exact_w(&net), Err(Error::RankDeficient { .. })));
}

#[test]
fn more_samples_do_not_hurt() {
    let (mut small, mut large) = (0.0, 0.0);
    for seed in 0..10 {
        let net = pod_net(Activation::ShiftedSigmoid, 30, 3, seed);
        let w = exact_w(&net).unwrap();
        let oracle = QueryOracle::from_network(net);
        let dist = SampleDistribution::default_for(30, seed);
        let fd = FdConfig::default();
        for (m_x, acc) in [(100, &mut small), (1000, &mut large)] {
            let est = approximate_w(&oracle, 30, 3, m_x, fd, &dist).unwrap();
            *acc += subspace_distance(&est.subspace, &w).unwrap().powi(2) / 33.0;
        }
    }
    assert!(large <= small, "m_X=1000: {large}, m_X=100: {small}");
}

#[test]
fn vectorization_of_identity() {
    assert_eq!(vec_sym(&DMatrix::<f64>::identity(2, 2)), DVector::from_column_slice(&[1.0, 0.0, 0.0, 1.0]));
}
