//! Black-box query access and finite-difference derivative estimators.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::network::TwoLayerNetwork;

type QueryFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Point-query access to a scalar function on `ℝ^d` with an exact, thread-safe
/// count of evaluations.
pub struct QueryOracle {
    dim: usize,
    eval: Arc<QueryFn>,
    count: AtomicU64,
}

impl std::fmt::Debug for QueryOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QueryOracle").field("dim", &self.dim).field("queries", &self.query_count()).finish()
    }
}

impl QueryOracle {
    pub fn from_fn(dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { dim, eval: Arc::new(f), count: AtomicU64::new(0) }
    }

    pub fn from_network(net: TwoLayerNetwork) -> Self {
        let dim = net.d();
        Self::from_fn(dim, move |x| net.evaluate_slice(x))
    }

    /// Wraps a model stored in the network JSON format.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::from_network(TwoLayerNetwork::load(path)?))
    }

    /// Parses an oracle selector; only `file:<path>` is currently understood.
    pub fn from_spec(spec: &str) -> Result<Self> {
        match spec.split_once(':') {
            Some(("file", path)) => Self::from_file(path),
            _ => Err(Error::InvalidConfig(format!("unknown oracle `{spec}` (expected file:<path>)"))),
        }
    }

    /// Evaluates `f(x)` on an orthonormal reduction: `y ↦ f(Q y)`.
    pub fn reduced(self: &Arc<Self>, q: DMatrix<f64>) -> Self {
        let inner = Arc::clone(self);
        let dim = q.ncols();
        Self::from_fn(dim, move |y| {
            let x = &q * DVector::from_column_slice(y);
            inner.query(x.as_slice())
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn query(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.count.fetch_add(1, Ordering::Relaxed);
        (self.eval)(x)
    }

    pub fn query_vec(&self, x: &DVector<f64>) -> f64 {
        self.query(x.as_slice())
    }

    pub fn query_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

/// Step size of the forward-difference estimators, `ε ∈ (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    epsilon: f64,
}

impl FdConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!("finite-difference step must lie in (0, 1), got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(self) -> f64 {
        self.epsilon
    }
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { epsilon: 1e-5 }
    }
}

/// Forward differences `(f(x+εe_i) − f(x))/ε`; `d + 1` queries.
pub fn fd_gradient(oracle: &QueryOracle, x: &DVector<f64>, cfg: FdConfig) -> DVector<f64> {
    let eps = cfg.epsilon;
    let f0 = oracle.query_vec(x);
    let mut xp = x.clone();
    DVector::from_fn(x.len(), |i, _| {
        xp[i] += eps;
        let fi = oracle.query_vec(&xp);
        xp[i] = x[i];
        (fi - f0) / eps
    })
}

/// Second-order forward differences
/// `(f(x+εe_i+εe_j) − f(x+εe_i) − f(x+εe_j) + f(x))/ε²`.
///
/// `f(x)` and the `f(x+εe_i)` are shared between entries, so one call costs
/// exactly `1 + d + d(d+1)/2` queries. Entries are computed for `i ≥ j` and
/// mirrored, so the result is exactly symmetric.
pub fn fd_hessian(oracle: &QueryOracle, x: &DVector<f64>, cfg: FdConfig) -> DMatrix<f64> {
    let eps = cfg.epsilon;
    let d = x.len();
    let f0 = oracle.query_vec(x);
    let mut xp = x.clone();
    let single: Vec<f64> = (0..d)
        .map(|i| {
            xp[i] += eps;
            let v = oracle.query_vec(&xp);
            xp[i] = x[i];
            v
        })
        .collect();
    let mut h = DMatrix::zeros(d, d);
    let eps2 = eps * eps;
    for j in 0..d {
        for i in j..d {
            xp[i] += eps;
            xp[j] += eps;
            let fij = oracle.query_vec(&xp);
            xp[i] = x[i];
            xp[j] = x[j];
            let v = (fij - single[i] - single[j] + f0) / eps2;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Number of queries one [`fd_hessian`] call issues in dimension `d`.
pub fn fd_hessian_queries(d: usize) -> u64 {
    (1 + d + d * (d + 1) / 2) as u64
}

/// Column-stacked vectorization; symmetrizes first when `M` drifts by more than 1e-12.
pub fn vec_sym(m: &DMatrix<f64>) -> DVector<f64> {
    if linalg::asymmetry(m) > 1e-12 {
        DVector::from_column_slice(linalg::symmetrize(m).as_slice())
    } else {
        DVector::from_column_slice(m.as_slice())
    }
}

/// Inverse of [`vec_sym`]; `v` must have a square length.
pub fn unvec_sym(v: &DVector<f64>) -> DMatrix<f64> {
    let d = (v.len() as f64).sqrt().round() as usize;
    assert_eq!(d * d, v.len(), "vector length {} is not a perfect square", v.len());
    DMatrix::from_column_slice(d, d, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_exact_on_linear_functions() {
        let a = [0.5, -2.0, 3.25];
        let oracle = QueryOracle::from_fn(3, move |x| a.iter().zip(x).map(|(p, q)| p * q).sum());
        let x = DVector::from_vec(vec![0.1, 0.2, -0.3]);
        for eps in [0.5, 0.125, 0.0078125] {
            let g = fd_gradient(&oracle, &x, FdConfig::new(eps).unwrap());
            for i in 0..3 {
                assert!((g[i] - a[i]).abs() < 1e-12);
            }
        }
        assert_eq!(oracle.query_count(), 3 * 4);
    }

    #[test]
    fn hessian_exact_on_quadratics() {
        let q = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, -0.25, 0.5, 2.0, 0.0, -0.25, 0.0, -1.0]);
        let qq = q.clone();
        let oracle = QueryOracle::from_fn(3, move |x| {
            let v = DVector::from_column_slice(x);
            v.dot(&(&qq * &v))
        });
        let x = DVector::from_vec(vec![0.3, -0.1, 0.7]);
        let h = fd_hessian(&oracle, &x, FdConfig::new(0.25).unwrap());
        assert!((h - &q * 2.0).amax() < 1e-12);
        assert_eq!(oracle.query_count(), fd_hessian_queries(3));
        assert_eq!(fd_hessian_queries(3), 1 + 3 + 6);
    }

    #[test]
    fn rejects_bad_steps() {
        assert!(FdConfig::new(0.0).is_err());
        assert!(FdConfig::new(1.0).is_err());
        assert!(FdConfig::new(-1e-3).is_err());
        assert!(FdConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn vec_layout_and_inner_products() {
        let v = vec_sym(&DMatrix::identity(2, 2));
        assert_eq!(v.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]);
        let n = DMatrix::from_row_slice(2, 2, &[0.5, -1.0, -1.0, 3.0]);
        let direct: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| m[(i, j)] * n[(i, j)]).sum();
        assert!((vec_sym(&m).dot(&vec_sym(&n)) - direct).abs() < 1e-12);
        assert_eq!(unvec_sym(&vec_sym(&m)), m);
        assert!((vec_sym(&m).norm() - m.norm()).abs() < 1e-12);
    }

    #[test]
    fn vec_symmetrizes_drifting_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.5, 5.0]);
        assert_eq!(vec_sym(&m).as_slice(), &[1.0, 2.25, 2.25, 5.0]);
    }
}
