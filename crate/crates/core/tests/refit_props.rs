mod common;

use common::*;
use nalgebra::DMatrix;
use nnident::activation::ScalarActivation;
use nnident::refit::{
    exact_params, fit, permuted_weights, verify_reparametrization, ColumnMatching, FitConfig, RefitParams,
    RefitProblem, Reparametrization,
};
use nnident::{rng, Activation, QueryOracle};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_matching(seed: u64, n: usize, tag: &str) -> ColumnMatching {
    let mut r = rng::stream(seed, tag, 0);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut r);
    let signs = (0..n).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
    ColumnMatching { perm, signs }
}

fn small_problem(seed: u64, act: Activation, m0: usize, m1: usize, m_f: usize) -> RefitProblem {
    let net = random_net(seed, m0, m0, m1, act, 0.2);
    let oracle = QueryOracle::from_network(net.clone());
    let v = net.entangled_weights().unwrap();
    RefitProblem::sample(&oracle, net.a().clone(), v, act, m_f, seed).unwrap()
}

fn random_params(seed: u64, m0: usize, m1: usize) -> RefitParams {
    let mut r = rng::stream(seed, "params", 0);
    let mut draw = |n| rng::gaussian_vector(&mut r, n, 0.7).as_slice().to_vec();
    RefitParams { d1: draw(m1), d2: draw(m0), d3: draw(m0), w: draw(m0), z: draw(m1) }
}

fn activation() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::Tanh), Just(Activation::ShiftedSigmoid)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_matches_central_differences(seed in 0u64..10_000, act in activation()) {
        let problem = small_problem(seed, act, 4, 2, 20);
        let p = random_params(seed, 4, 2);
        let (_, grad) = problem.loss_and_grad(&p).unwrap();
        let numeric = central_param_gradient(&problem, &p, 1e-6);
        for (analytic, fd) in grad.blocks().iter().zip(&numeric) {
            let e = rel_err(analytic, fd, 1e-6);
            prop_assert!(e <= 1e-5, "relative error {e}");
        }
    }

    #[test]
    fn exact_parameters_reproduce_the_network(seed in 0u64..10_000, act in activation(), m0 in 2usize..8, m1 in 1usize..4) {
        prop_assume!(m1 <= m0);
        let net = random_net(seed, m0, m0, m1, act, 0.3);
        let am = random_matching(seed, m0, "a");
        let vm = random_matching(seed, m1, "v");
        let err = verify_reparametrization(&net, &am, &vm, Reparametrization::Standard, seed).unwrap();
        prop_assert!(err <= 1e-9, "{err}");
        if act.is_odd() {
            let err = verify_reparametrization(&net, &am, &vm, Reparametrization::OddSimplified, seed).unwrap();
            prop_assert!(err <= 1e-9, "{err}");
        }
    }

    #[test]
    fn odd_activation_admits_first_layer_sign_flips(seed in 0u64..10_000) {
        let problem = small_problem(seed, Activation::Tanh, 5, 2, 30);
        let p = random_params(seed, 5, 2);
        let flips = random_matching(seed, 5, "s").signs;
        let mut q = p.clone();
        for (k, s) in flips.iter().enumerate() {
            q.d2[k] *= s;
            q.d3[k] *= s;
            q.w[k] *= s;
        }
        let a = problem.predictions(&p).unwrap();
        let b = problem.predictions(&q).unwrap();
        prop_assert!(rel_err(&a, &b, 1e-12) <= 1e-12);
    }

    #[test]
    fn parameters_survive_json(seed in 0u64..10_000) {
        let p = random_params(seed, 3, 2);
        prop_assert_eq!(RefitParams::from_json(&p.to_json().unwrap()).unwrap(), p);
    }
}

#[test]
fn fifty_reparametrization_draws() {
    let mut worst = 0.0f64;
    for draw in 0..50u64 {
        let act = if draw % 2 == 0 { Activation::Tanh } else { Activation::ShiftedSigmoid };
        let net = random_net(100 + draw, 6, 6, 3, act, 0.1);
        let am = random_matching(draw, 6, "a");
        let vm = random_matching(draw, 3, "v");
        worst = worst.max(verify_reparametrization(&net, &am, &vm, Reparametrization::Standard, draw).unwrap());
    }
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn teacher_parameters_have_zero_loss() {
    let net = random_net(9, 5, 5, 2, Activation::ShiftedSigmoid, 0.1);
    let am = random_matching(1, 5, "a");
    let vm = random_matching(1, 2, "v");
    let (a_hat, v_hat) = permuted_weights(&net, &am, &vm).unwrap();
    let oracle = QueryOracle::from_network(net.clone());
    let problem = RefitProblem::sample(&oracle, a_hat, v_hat, net.activation(), 200, 3).unwrap();
    let p = exact_params(&net, &am, &vm, Reparametrization::Standard).unwrap();
    let (loss, grad) = problem.loss_and_grad(&p).unwrap();
    assert!(loss < 1e-24, "{loss}");
    assert!(grad.blocks().iter().flat_map(|b| b.iter()).all(|g| g.abs() < 1e-10));
}

#[test]
fn loss_trace_rarely_increases() {
    for act in [Activation::Tanh, Activation::ShiftedSigmoid] {
        let problem = small_problem(21, act, 6, 2, 200);
        let cfg = FitConfig { iters: 3000, ..FitConfig::default() };
        let out = fit(&problem, &cfg, None).unwrap();
        assert!(out.increase_fraction() <= 0.01, "{act:?}: {}", out.increase_fraction());
        assert!(out.final_loss() < out.trace[0], "{act:?}");
        if act.is_odd() {
            assert!(out.params.d3.iter().all(|&v| v == 1.0));
        }
    }
}

#[test]
fn non_square_first_layer_is_rejected() {
    let a = DMatrix::identity(4, 3);
    let v = DMatrix::identity(4, 1);
    let xs = DMatrix::zeros(4, 5);
    assert!(RefitProblem::new(a, v, Activation::Tanh, &xs, &[0.0; 5]).is_err());
}
