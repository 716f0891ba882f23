mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use nnident::attribution::{
    assign_layers, ground_truth_labels, success_rates, trajectory_energies, trajectory_energy, TrajectoryConfig,
};
use nnident::oracle::FdConfig;
use nnident::{rng, Activation, QueryOracle};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assignment_is_invariant_under_monotone_maps(
        energies in prop::collection::vec(0.0f64..100.0, 1..30),
        frac in 0.0f64..1.0,
    ) {
        let m0 = ((energies.len() as f64) * frac) as usize;
        let base = assign_layers(&energies, m0).unwrap();
        let mapped: Vec<f64> = energies.iter().map(|e| (e + 1.0).ln() * 3.0 - 7.0).collect();
        let other = assign_layers(&mapped, m0).unwrap();
        prop_assert_eq!(&base.layer1_indices, &other.layer1_indices);
        prop_assert_eq!(base.layer1_indices.len(), m0);
        prop_assert_eq!(base.layer1_indices.len() + base.layer2_indices.len(), energies.len());
        let min1 = base.layer1_indices.iter().map(|&j| energies[j]).fold(f64::INFINITY, f64::min);
        let max2 = base.layer2_indices.iter().map(|&j| energies[j]).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(base.layer1_indices.is_empty() || base.layer2_indices.is_empty() || min1 >= max2);
    }

    #[test]
    fn success_rates_are_fractions(labels in prop::collection::vec(1u8..3, 2..20), frac in 0.0f64..1.0) {
        let energies: Vec<f64> = (0..labels.len()).map(|i| i as f64).collect();
        let m0 = ((labels.len() as f64) * frac) as usize;
        let (l1, l2) = success_rates(&assign_layers(&energies, m0).unwrap(), &labels);
        prop_assert!((0.0..=1.0).contains(&l1) && (0.0..=1.0).contains(&l2));
    }
}

#[test]
fn energy_is_even_for_odd_networks() {
    // Zero biases make the tanh network odd, so ∇f is even and a symmetric grid gives Î(w) = Î(−w).
    let net = random_net(2, 5, 4, 2, Activation::Tanh, 0.0);
    let oracle = QueryOracle::from_network(net);
    let cfg = TrajectoryConfig::from_range(-10.0, 10.0, 1.0, FdConfig::default()).unwrap();
    let mut r = rng::stream(0, "w", 0);
    for _ in 0..5 {
        let w = rng::unit_sphere(&mut r, 5);
        let (p, n) = (trajectory_energy(&oracle, &w, &cfg), trajectory_energy(&oracle, &-&w, &cfg));
        assert!((p - n).abs() <= 1e-6 * p, "{p} vs {n}");
    }
}

#[test]
fn energy_is_bounded_by_lipschitz_constant() {
    // ‖∇f‖ ≤ Σ_ℓ ‖A‖₂ ‖b_ℓ‖ max φ'²; the shifted sigmoid has max φ' = 1/4.
    for (act, slope) in [(Activation::Tanh, 1.0), (Activation::ShiftedSigmoid, 0.25)] {
        let net = random_net(6, 6, 6, 3, act, 0.1);
        let a_norm = net.a().singular_values().max();
        let lip: f64 = net.b().column_iter().map(|b| slope * slope * a_norm * b.norm()).sum();
        let oracle = QueryOracle::from_network(net);
        let cfg = TrajectoryConfig::default();
        let bound = cfg.t_grid().len() as f64 * lip * lip;
        let mut r = rng::stream(1, "w", 0);
        for _ in 0..5 {
            let e = trajectory_energy(&oracle, &rng::unit_sphere(&mut r, 6), &cfg);
            assert!(e <= bound * 1.01, "{e} > {bound}");
        }
    }
}

#[test]
fn energies_use_the_stated_query_budget() {
    let net = random_net(4, 4, 3, 1, Activation::Tanh, 0.1);
    let oracle = QueryOracle::from_network(net);
    let cfg = TrajectoryConfig::default();
    let profiles = DMatrix::identity(4, 3);
    let e = trajectory_energies(&oracle, &profiles, &cfg);
    assert_eq!(e.len(), 3);
    assert_eq!(oracle.query_count(), 3 * cfg.queries_per_profile(4));
    assert_eq!(
        e[1],
        trajectory_energy(
            &QueryOracle::from_network(random_net(4, 4, 3, 1, Activation::Tanh, 0.1)),
            &DVector::from_column_slice(&[0.0, 1.0, 0.0, 0.0]),
            &cfg
        )
    );
}

#[test]
fn true_profiles_are_labelled_by_layer() {
    let net = pod_net(Activation::ShiftedSigmoid, 30, 3, 4);
    let profiles = net.profiles().unwrap();
    let labels = ground_truth_labels(&-&profiles, &net).unwrap();
    assert_eq!(labels, [vec![1; 30], vec![2; 3]].concat());
    let oracle = QueryOracle::from_network(net);
    let energies = trajectory_energies(&oracle, &profiles, &TrajectoryConfig::default());
    let assignment = assign_layers(&energies, 30).unwrap();
    assert_eq!(success_rates(&assignment, &labels), (1.0, 1.0));
}
