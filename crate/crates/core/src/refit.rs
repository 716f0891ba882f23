//! Deparametrized refit of the remaining network parameters.
//!
//! With `Â` (square, invertible) and `V̂` fixed, the surrogate
//!
//! ```text
//! f̂(x) = 1ᵀφ(D₁ V̂ᵀ Â⁻ᵀ D₂ φ(D₃ Âᵀx + w) + z)
//! ```
//!
//! has only `3m0 + 2m1` free parameters. When `Â`, `V̂` equal the true weights up to
//! signs and permutation there are parameters with `f̂ = f` (see
//! [`exact_params`]), and plain gradient descent on `Σ(Y_i − f̂(X_i))²` finds them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::activation::{Activation, ScalarActivation};
use crate::error::{Error, Result};
use crate::linalg;
use crate::network::TwoLayerNetwork;
use crate::oracle::QueryOracle;
use crate::rng;

/// Refits with `cond(Â)` at or above this are rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// A point of `Ω = 𝒟_{m1} × 𝒟_{m0} × 𝒟_{m0} × ℝ^{m0} × ℝ^{m1}`; diagonals stored as vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefitParams {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

impl RefitParams {
    pub fn zeros(m0: usize, m1: usize) -> Self {
        Self { d1: vec![0.0; m1], d2: vec![0.0; m0], d3: vec![0.0; m0], w: vec![0.0; m0], z: vec![0.0; m1] }
    }

    /// `D₂ = D₃ = I`; `D₁`, `w`, `z` with i.i.d. `N(0, 0.1²)` entries.
    pub fn initial(m0: usize, m1: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, "refit-init", 0);
        Self {
            d1: rng::gaussian_vector(&mut r, m1, 0.1).as_slice().to_vec(),
            d2: vec![1.0; m0],
            d3: vec![1.0; m0],
            w: rng::gaussian_vector(&mut r, m0, 0.1).as_slice().to_vec(),
            z: rng::gaussian_vector(&mut r, m1, 0.1).as_slice().to_vec(),
        }
    }

    pub fn m0(&self) -> usize {
        self.d2.len()
    }

    pub fn m1(&self) -> usize {
        self.d1.len()
    }

    /// `3m0 + 2m1`
    pub fn dim(&self) -> usize {
        3 * self.m0() + 2 * self.m1()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    pub fn blocks(&self) -> [&[f64]; 5] {
        [&self.d1, &self.d2, &self.d3, &self.w, &self.z]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [&mut self.d1, &mut self.d2, &mut self.d3, &mut self.w, &mut self.z]
    }

    /// `self += alpha · other`
    pub fn axpy(&mut self, alpha: f64, other: &RefitParams) {
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += alpha * b;
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        let m0 = p.d2.len();
        if p.d3.len() != m0 || p.w.len() != m0 || p.z.len() != p.d1.len() {
            return Err(Error::InvalidConfig("inconsistent refit parameter lengths".into()));
        }
        Ok(p)
    }
}

/// `φ'` expressed through `φ` (both activations satisfy `φ' = c − φ²`).
#[inline]
fn dphi_from_value(act: Activation, v: f64) -> f64 {
    match act {
        Activation::Tanh => 1.0 - v * v,
        Activation::ShiftedSigmoid => 0.25 - v * v,
    }
}

/// Fixed weights and training samples of a refit.
#[derive(Clone, Debug)]
pub struct RefitProblem {
    a_hat: DMatrix<f64>,
    v_hat: DMatrix<f64>,
    activation: Activation,
    /// `V̂ᵀÂ⁻ᵀ`, row-major `m1 × m0`.
    c: Vec<f64>,
    /// `ÂᵀX_i`, sample-major.
    z_samples: Vec<f64>,
    y: Vec<f64>,
}

impl RefitProblem {
    /// `xs` holds one sample per column.
    pub fn new(
        a_hat: DMatrix<f64>,
        v_hat: DMatrix<f64>,
        activation: Activation,
        xs: &DMatrix<f64>,
        ys: &[f64],
    ) -> Result<Self> {
        let (d, m0) = a_hat.shape();
        if d != m0 {
            return Err(Error::DimensionMismatch { expected: d, got: m0 });
        }
        if v_hat.nrows() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v_hat.nrows() });
        }
        if xs.nrows() != d {
            return Err(Error::DimensionMismatch { expected: d, got: xs.nrows() });
        }
        if xs.ncols() != ys.len() {
            return Err(Error::DimensionMismatch { expected: xs.ncols(), got: ys.len() });
        }
        let cond = linalg::condition_number(&a_hat);
        if !(cond < MAX_CONDITION) {
            return Err(Error::SingularAHat(cond));
        }
        let a_inv = a_hat.clone().try_inverse().ok_or(Error::SingularAHat(f64::INFINITY))?;
        // V̂ᵀÂ⁻ᵀ = (Â⁻¹V̂)ᵀ
        let ct = &a_inv * &v_hat;
        let m1 = v_hat.ncols();
        let c = (0..m1).flat_map(|l| (0..m0).map(move |k| (l, k))).map(|(l, k)| ct[(k, l)]).collect();
        let zs = a_hat.tr_mul(xs);
        Ok(Self { a_hat, v_hat, activation, c, z_samples: zs.as_slice().to_vec(), y: ys.to_vec() })
    }

    /// Draws `m_f` points `X_i ~ N(0, I)` and labels them with the oracle.
    pub fn sample(
        oracle: &QueryOracle,
        a_hat: DMatrix<f64>,
        v_hat: DMatrix<f64>,
        activation: Activation,
        m_f: usize,
        seed: u64,
    ) -> Result<Self> {
        let d = oracle.dim();
        let xs = gaussian_points(d, m_f, seed, "refit-samples");
        let ys: Vec<f64> = xs.column_iter().map(|c| oracle.query(c.as_slice())).collect();
        Self::new(a_hat, v_hat, activation, &xs, &ys)
    }

    pub fn m0(&self) -> usize {
        self.a_hat.ncols()
    }

    pub fn m1(&self) -> usize {
        self.v_hat.ncols()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn a_hat(&self) -> &DMatrix<f64> {
        &self.a_hat
    }

    pub fn v_hat(&self) -> &DMatrix<f64> {
        &self.v_hat
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn check(&self, p: &RefitParams) -> Result<()> {
        let (m0, m1) = (self.m0(), self.m1());
        for (len, want) in [(p.d1.len(), m1), (p.z.len(), m1), (p.d2.len(), m0), (p.d3.len(), m0), (p.w.len(), m0)] {
            if len != want {
                return Err(Error::DimensionMismatch { expected: want, got: len });
            }
        }
        Ok(())
    }

    /// `f̂` at `Âᵀx = zx`.
    fn eval_projected(&self, p: &RefitParams, zx: &[f64], s: &mut [f64]) -> f64 {
        let (m0, act) = (self.m0(), self.activation);
        for k in 0..m0 {
            s[k] = p.d2[k] * act.value(p.d3[k] * zx[k] + p.w[k]);
        }
        let mut out = 0.0;
        for l in 0..self.m1() {
            let row = &self.c[l * m0..(l + 1) * m0];
            let cg: f64 = row.iter().zip(s.iter()).map(|(a, b)| a * b).sum();
            out += act.value(p.d1[l] * cg + p.z[l]);
        }
        out
    }

    /// `f̂(x; params)`.
    pub fn fhat_eval(&self, p: &RefitParams, x: &DVector<f64>) -> Result<f64> {
        self.check(p)?;
        if x.len() != self.a_hat.nrows() {
            return Err(Error::DimensionMismatch { expected: self.a_hat.nrows(), got: x.len() });
        }
        let zx = self.a_hat.tr_mul(x);
        let mut s = vec![0.0; self.m0()];
        Ok(self.eval_projected(p, zx.as_slice(), &mut s))
    }

    /// `f̂` at every training sample.
    pub fn predictions(&self, p: &RefitParams) -> Result<Vec<f64>> {
        self.check(p)?;
        let m0 = self.m0();
        let mut s = vec![0.0; m0];
        Ok(self.z_samples.chunks_exact(m0).map(|zx| self.eval_projected(p, zx, &mut s)).collect())
    }

    /// `J = Σ_i (Y_i − f̂(X_i))²` and its gradient in all five blocks.
    pub fn loss_and_grad(&self, p: &RefitParams) -> Result<(f64, RefitParams)> {
        self.check(p)?;
        let mut grad = RefitParams::zeros(self.m0(), self.m1());
        Ok((self.loss_and_grad_into(p, &mut grad), grad))
    }

    fn loss_and_grad_into(&self, p: &RefitParams, grad: &mut RefitParams) -> f64 {
        let (m0, m1, act) = (self.m0(), self.m1(), self.activation);
        for b in grad.blocks_mut() {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut phi_u = vec![0.0; m0];
        let mut g = vec![0.0; m0];
        let mut cg = vec![0.0; m1];
        let mut phi_y = vec![0.0; m1];
        let mut pq = vec![0.0; m0];
        let mut loss = 0.0;
        for (zx, &yi) in self.z_samples.chunks_exact(m0).zip(&self.y) {
            for k in 0..m0 {
                phi_u[k] = act.value(p.d3[k] * zx[k] + p.w[k]);
                g[k] = p.d2[k] * phi_u[k];
            }
            let mut fhat = 0.0;
            for l in 0..m1 {
                let row = &self.c[l * m0..(l + 1) * m0];
                cg[l] = row.iter().zip(&g).map(|(a, b)| a * b).sum();
                phi_y[l] = act.value(p.d1[l] * cg[l] + p.z[l]);
                fhat += phi_y[l];
            }
            let r = fhat - yi;
            loss += r * r;
            let coef = 2.0 * r;
            pq.iter_mut().for_each(|v| *v = 0.0);
            for l in 0..m1 {
                let q = coef * dphi_from_value(act, phi_y[l]);
                grad.d1[l] += q * cg[l];
                grad.z[l] += q;
                let qd = q * p.d1[l];
                let row = &self.c[l * m0..(l + 1) * m0];
                for (acc, c) in pq.iter_mut().zip(row) {
                    *acc += qd * c;
                }
            }
            for k in 0..m0 {
                grad.d2[k] += pq[k] * phi_u[k];
                let e = pq[k] * p.d2[k] * dphi_from_value(act, phi_u[k]);
                grad.d3[k] += e * zx[k];
                grad.w[k] += e;
            }
        }
        loss
    }
}

fn gaussian_points(d: usize, n: usize, seed: u64, tag: &str) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let mut r = rng::stream(seed, tag, i as u64);
            rng::gaussian_vector(&mut r, d, 1.0)
        })
        .collect();
    DMatrix::from_columns(&cols)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Step size on the per-sample loss `J / m_f`; `None` uses the activation's default.
    pub lr: Option<f64>,
    pub iters: usize,
    pub seed: u64,
    /// Optimize `D₃` even for odd activations, where it can be fixed to the identity.
    pub optimize_d3: bool,
    /// Stop once the loss drops by a relative amount below `stall_tol` over `stall_window` steps.
    pub stall_window: usize,
    pub stall_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { lr: None, iters: 100_000, seed: 0, optimize_d3: false, stall_window: 1000, stall_tol: 1e-12 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitOutcome {
    pub params: RefitParams,
    /// Loss before each step, plus the final loss.
    pub trace: Vec<f64>,
    pub iters: usize,
    pub stalled: bool,
}

impl FitOutcome {
    pub fn final_loss(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial loss")
    }

    /// Fraction of steps where the loss went up.
    pub fn increase_fraction(&self) -> f64 {
        let steps = self.trace.len().saturating_sub(1);
        if steps == 0 {
            return 0.0;
        }
        self.trace.windows(2).filter(|w| w[1] > w[0]).count() as f64 / steps as f64
    }
}

/// Full-batch gradient descent from `init` (or [`RefitParams::initial`]).
///
/// Steps are `−lr · ∇J / m_f`; the trace records `J` itself.
pub fn fit(problem: &RefitProblem, cfg: &FitConfig, init: Option<RefitParams>) -> Result<FitOutcome> {
    let lr = cfg.lr.unwrap_or_else(|| problem.activation.default_refit_lr());
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidConfig(format!("learning rate must be positive, got {lr}")));
    }
    let (m0, m1) = (problem.m0(), problem.m1());
    let fix_d3 = !cfg.optimize_d3 && problem.activation.is_odd();
    let mut params = init.unwrap_or_else(|| RefitParams::initial(m0, m1, cfg.seed));
    problem.check(&params)?;
    if fix_d3 {
        params.d3.iter_mut().for_each(|v| *v = 1.0);
    }
    let step = lr / problem.len().max(1) as f64;
    let mut grad = RefitParams::zeros(m0, m1);
    let mut trace = Vec::with_capacity(cfg.iters + 1);
    let mut stalled = false;
    let mut iters = 0;
    loop {
        let loss = problem.loss_and_grad_into(&params, &mut grad);
        if !loss.is_finite() {
            return Err(Error::Diverged(iters));
        }
        trace.push(loss);
        if iters == cfg.iters || loss == 0.0 {
            break;
        }
        if cfg.stall_window > 0 && iters >= cfg.stall_window && iters % cfg.stall_window == 0 {
            let before = trace[iters - cfg.stall_window];
            if (before - loss) / before < cfg.stall_tol {
                stalled = true;
                break;
            }
        }
        if fix_d3 {
            grad.d3.iter_mut().for_each(|v| *v = 0.0);
        }
        params.axpy(-step, &grad);
        iters += 1;
    }
    if !params.is_finite() {
        return Err(Error::Diverged(iters));
    }
    Ok(FitOutcome { params, trace, iters, stalled })
}

/// Correspondence of estimated columns to true columns: `est[:, j] ≈ signs[j] · truth[:, perm[j]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnMatching {
    pub perm: Vec<usize>,
    pub signs: Vec<f64>,
}

/// Greedy matching by largest `|⟨est_j, truth_i⟩|`.
pub fn match_columns(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<ColumnMatching> {
    if est.shape() != truth.shape() {
        return Err(Error::DimensionMismatch { expected: truth.ncols(), got: est.ncols() });
    }
    let n = est.ncols();
    let inner = est.tr_mul(truth);
    let mut perm = vec![usize::MAX; n];
    let mut signs = vec![1.0; n];
    let mut used = vec![false; n];
    for _ in 0..n {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for j in (0..n).filter(|&j| perm[j] == usize::MAX) {
            for i in (0..n).filter(|&i| !used[i]) {
                if inner[(j, i)].abs() > best.0 {
                    best = (inner[(j, i)].abs(), j, i);
                }
            }
        }
        let (_, j, i) = best;
        perm[j] = i;
        used[i] = true;
        signs[j] = if inner[(j, i)] < 0.0 { -1.0 } else { 1.0 };
    }
    Ok(ColumnMatching { perm, signs })
}

/// Which exact solution [`exact_params`] constructs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reparametrization {
    /// `D₃ = S_A`, `w = π_Aᵀθ`.
    Standard,
    /// Odd `φ`: `D₃ = I`, `D₂` and `w` absorb `S_A`.
    OddSimplified,
}

/// Parameters with `f̂ = f` when `Â = Aπ_A S_A` and `V̂ = Vπ_V S_V`.
///
/// `D₁ = S_V diag(1/‖π_AᵀG⁻¹π_A S_A Â⁻¹v̂_ℓ‖)`, `D₂ = S_A π_AᵀG⁻¹π_A` with `G = diag(φ'(θ))`.
pub fn exact_params(
    net: &TwoLayerNetwork,
    a_match: &ColumnMatching,
    v_match: &ColumnMatching,
    variant: Reparametrization,
) -> Result<RefitParams> {
    let (m0, m1) = (net.m0(), net.m1());
    if net.d() != m0 {
        return Err(Error::DimensionMismatch { expected: m0, got: net.d() });
    }
    if variant == Reparametrization::OddSimplified && !net.activation().is_odd() {
        return Err(Error::InvalidConfig("odd simplification needs an odd activation".into()));
    }
    let (a_hat, v_hat) = permuted_weights(net, a_match, v_match)?;
    let a_inv = a_hat.clone().try_inverse().ok_or(Error::SingularAHat(f64::INFINITY))?;
    let g0 = net.g0();
    let (pa, sa) = (&a_match.perm, &a_match.signs);
    // π_AᵀG⁻¹π_A is diag(1/g0[π(j)])
    let ginv: Vec<f64> = (0..m0).map(|j| 1.0 / g0[pa[j]]).collect();
    let coeffs = &a_inv * &v_hat;
    let d1 = (0..m1)
        .map(|l| {
            let n = (0..m0).map(|j| (ginv[j] * sa[j] * coeffs[(j, l)]).powi(2)).sum::<f64>().sqrt();
            v_match.signs[l] / n
        })
        .collect();
    let theta = net.theta();
    let z = (0..m1).map(|l| net.tau()[v_match.perm[l]]).collect();
    let (d2, d3, w) = match variant {
        Reparametrization::Standard => {
            ((0..m0).map(|j| sa[j] * ginv[j]).collect(), sa.clone(), (0..m0).map(|j| theta[pa[j]]).collect())
        }
        Reparametrization::OddSimplified => {
            (ginv.clone(), vec![1.0; m0], (0..m0).map(|j| sa[j] * theta[pa[j]]).collect())
        }
    };
    Ok(RefitParams { d1, d2, d3, w, z })
}

/// `(Aπ_A S_A, Vπ_V S_V)`.
pub fn permuted_weights(
    net: &TwoLayerNetwork,
    a_match: &ColumnMatching,
    v_match: &ColumnMatching,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let v = net.entangled_weights()?;
    let build = |m: &DMatrix<f64>, cm: &ColumnMatching| -> Result<DMatrix<f64>> {
        if cm.perm.len() != m.ncols() || cm.signs.len() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.ncols(), got: cm.perm.len() });
        }
        let mut sorted = cm.perm.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(Error::InvalidConfig("not a permutation".into()));
        }
        Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| cm.signs[c] * m[(r, cm.perm[c])]))
    };
    Ok((build(net.a(), a_match)?, build(&v, v_match)?))
}

/// `max |f(x) − f̂(x)|` over 100 points `x ~ N(0, I)` for the exact parameters.
pub fn verify_reparametrization(
    net: &TwoLayerNetwork,
    a_match: &ColumnMatching,
    v_match: &ColumnMatching,
    variant: Reparametrization,
    seed: u64,
) -> Result<f64> {
    let params = exact_params(net, a_match, v_match, variant)?;
    let (a_hat, v_hat) = permuted_weights(net, a_match, v_match)?;
    let xs = gaussian_points(net.d(), 100, seed, "reparam-check");
    let ys: Vec<f64> = xs.column_iter().map(|c| net.evaluate_slice(c.as_slice())).collect();
    let problem = RefitProblem::new(a_hat, v_hat, net.activation(), &xs, &ys)?;
    let pred = problem.predictions(&params)?;
    Ok(pred.iter().zip(&ys).map(|(p, y)| (p - y).abs()).fold(0.0, f64::max))
}

/// Test-set errors of a fitted surrogate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefitMetrics {
    /// `Σ(f̂ − f)² / Σf²`
    pub mse: f64,
    /// `max|f̂ − f| / max|f|`
    pub e_inf: f64,
    /// `‖w − w*‖² / ‖θ‖²`, `None` if no target is available.
    pub e_theta: Option<f64>,
    /// `‖z − π_Vᵀτ‖² / ‖τ‖²`
    pub e_tau: Option<f64>,
}

/// Errors on `m_test` fresh points `Z_i ~ N(0, I)`.
///
/// Bias errors compare against the true biases permuted by greedy column matching of
/// `Â`, `V̂` to the true weights. For odd activations the first-layer target carries the
/// sign `sign(D₃)·s_A`, since `(D₂, D₃, w) → (SD₂, SD₃, Sw)` leaves `f̂` unchanged.
pub fn refit_metrics(
    problem: &RefitProblem,
    params: &RefitParams,
    net: &TwoLayerNetwork,
    m_test: usize,
    seed: u64,
) -> Result<RefitMetrics> {
    if m_test == 0 {
        return Err(Error::InvalidConfig("m_test must be positive".into()));
    }
    problem.check(params)?;
    let m0 = problem.m0();
    let mut s = vec![0.0; m0];
    let (mut num, mut den, mut max_err, mut max_f) = (0.0, 0.0, 0.0f64, 0.0f64);
    for i in 0..m_test {
        let mut r = rng::stream(seed, "refit-test", i as u64);
        let x = rng::gaussian_vector(&mut r, net.d(), 1.0);
        let f = net.evaluate(&x);
        let zx = problem.a_hat.tr_mul(&x);
        let fh = problem.eval_projected(params, zx.as_slice(), &mut s);
        num += (fh - f) * (fh - f);
        den += f * f;
        max_err = max_err.max((fh - f).abs());
        max_f = max_f.max(f.abs());
    }
    let (e_theta, e_tau) = bias_errors(problem, params, net).unwrap_or_default();
    Ok(RefitMetrics { mse: num / den, e_inf: max_err / max_f, e_theta, e_tau })
}

fn relative_sq(est: &[f64], target: &[f64], scale: f64) -> Option<f64> {
    let n: f64 = est.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
    let r = n / scale;
    r.is_finite().then_some(r)
}

fn bias_errors(
    problem: &RefitProblem,
    params: &RefitParams,
    net: &TwoLayerNetwork,
) -> Result<(Option<f64>, Option<f64>)> {
    let am = match_columns(&problem.a_hat, net.a())?;
    let vm = match_columns(&problem.v_hat, &net.entangled_weights()?)?;
    let theta = net.theta();
    let tau = net.tau();
    let odd = problem.activation.is_odd();
    let w_target: Vec<f64> = (0..problem.m0())
        .map(|j| {
            let t = theta[am.perm[j]];
            if odd {
                params.d3[j].signum() * am.signs[j] * t
            } else {
                t
            }
        })
        .collect();
    let z_target: Vec<f64> = vm.perm.iter().map(|&l| tau[l]).collect();
    Ok((relative_sq(&params.w, &w_target, theta.norm_squared()), relative_sq(&params.z, &z_target, tau.norm_squared())))
}
