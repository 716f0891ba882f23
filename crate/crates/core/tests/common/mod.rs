//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nnident::activation::ScalarActivation;
use nnident::harness::{generate_network, Scenario};
use nnident::refit::{RefitParams, RefitProblem};
use nnident::{rng, Activation, TwoLayerNetwork};

/// Scalar forward pass written out with loops, independent of the library's evaluation.
pub fn naive_eval(net: &TwoLayerNetwork, x: &[f64]) -> f64 {
    let act = net.activation();
    let (a, b) = (net.a(), net.b());
    let mut out = 0.0;
    for l in 0..net.m1() {
        let mut s = 0.0;
        for i in 0..net.m0() {
            let mut dot = 0.0;
            for k in 0..net.d() {
                dot += a[(k, i)] * x[k];
            }
            s += b[(i, l)] * act.value(dot + net.theta()[i]);
        }
        out += act.value(s + net.tau()[l]);
    }
    out
}

/// Central-difference gradient with step `h`.
pub fn central_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DVector<f64> {
    let d = x.len();
    DVector::from_fn(d, |i, _| {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        p[i] += h;
        m[i] -= h;
        (f(&p) - f(&m)) / (2.0 * h)
    })
}

/// Central-difference Hessian with step `h` (fourth-point stencil).
pub fn central_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let d = x.len();
    let shifted = |i: usize, si: f64, j: usize, sj: f64| {
        let mut y = x.to_vec();
        y[i] += si * h;
        y[j] += sj * h;
        f(&y)
    };
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = (shifted(i, 1.0, j, 1.0) - shifted(i, 1.0, j, -1.0) - shifted(i, -1.0, j, 1.0)
                + shifted(i, -1.0, j, -1.0))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Central differences of `J` over every refit parameter, in block order `d1, d2, d3, w, z`.
pub fn central_param_gradient(problem: &RefitProblem, p: &RefitParams, h: f64) -> Vec<Vec<f64>> {
    let loss = |q: &RefitParams| problem.loss_and_grad(q).unwrap().0;
    let mut out = Vec::new();
    for block in 0..5 {
        let len = p.blocks()[block].len();
        let mut g = vec![0.0; len];
        for (k, gk) in g.iter_mut().enumerate() {
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.blocks_mut()[block][k] += h;
            minus.blocks_mut()[block][k] -= h;
            *gk = (loss(&plus) - loss(&minus)) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

/// Network with unit-sphere weights and `N(0, bias_std²)` biases in dimension `d`.
pub fn random_net(seed: u64, d: usize, m0: usize, m1: usize, act: Activation, bias_std: f64) -> TwoLayerNetwork {
    let mut r = rng::stream(seed, "test-net", 0);
    let a = DMatrix::from_columns(&(0..m0).map(|_| rng::unit_sphere(&mut r, d)).collect::<Vec<_>>());
    let b = DMatrix::from_columns(&(0..m1).map(|_| rng::unit_sphere(&mut r, m0)).collect::<Vec<_>>());
    let theta = rng::gaussian_vector(&mut r, m0, bias_std);
    let tau = rng::gaussian_vector(&mut r, m1, bias_std);
    TwoLayerNetwork::new(a, b, theta, tau, act).unwrap()
}

pub fn pod_net(act: Activation, m0: usize, m1: usize, seed: u64) -> TwoLayerNetwork {
    generate_network(&Scenario::pod(act, m0, m1, seed)).unwrap()
}

/// Point with `‖x‖ ≤ 1`.
pub fn point_in_ball(seed: u64, d: usize) -> DVector<f64> {
    let mut r = rng::stream(seed, "test-point", 0);
    let u = rng::unit_sphere(&mut r, d);
    let radius: f64 = rand::Rng::random(&mut r);
    u * radius
}

/// `min_{j, s=±1} ‖s·w_j − u‖` over the columns of `truth`.
pub fn min_signed_distance(u: &DVector<f64>, truth: &DMatrix<f64>) -> f64 {
    truth.column_iter().map(|w| (u - w).norm().min((u + w).norm())).fold(f64::INFINITY, f64::min)
}

/// Relative error `‖a − b‖ / max(‖b‖, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(floor)
}
