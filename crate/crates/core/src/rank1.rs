//! Rank-1 recovery inside a matrix subspace by projected spectral-norm ascent.
//!
//! The iteration is `F_γ(M) = P_𝕊 ∘ P_Ŵ(M + γ u₁(M) ⊗ u₁(M))` on the Frobenius
//! sphere of `Ŵ`. It increases `λ₁` monotonically; its fixed points are the
//! stationary points of `max ‖M‖ s.t. M ∈ Ŵ, ‖M‖_F ≤ 1`, and near-rank-1 fixed
//! points carry a neuron profile as their leading eigenvector.
//!
//! Internally iterates live as coordinates `c ∈ ℝ^r` over the orthonormal basis of
//! the subspace, so `‖M‖_F = ‖c‖` and one step costs two `d² × r` products plus a
//! `d × d` eigen-solve.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::network::{riesz_constants, RieszConstants};
use crate::rng;
use crate::subspace::SymSubspace;

const MAX_RESTARTS: usize = 5;

/// Leading eigenpair by magnitude.
#[derive(Clone, Debug)]
pub struct TopEigen {
    /// Signed eigenvalue of largest magnitude.
    pub lambda: f64,
    pub u: DVector<f64>,
    /// Set when the dominant eigenvalue is negative, i.e. the caller should work with `−M`.
    pub negate: bool,
}

impl TopEigen {
    pub fn effective_lambda(&self) -> f64 {
        self.lambda.abs()
    }
}

pub fn top_eigenpair(m: &DMatrix<f64>) -> TopEigen {
    let (values, vectors) = linalg::sym_eigen_desc(m);
    let n = values.len();
    let (k, negate) = if values[n - 1].abs() > values[0].abs() { (n - 1, true) } else { (0, false) };
    TopEigen { lambda: values[k], u: vectors.column(k).into_owned(), negate }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rank1Config {
    pub gamma: f64,
    /// Stop once `λ₁` grows by less than this between steps.
    pub tol: f64,
    pub max_iters: usize,
    /// `λ₁` at or above this classifies a limit as near rank-1.
    pub rank1_threshold: f64,
    /// `λ₁` at or below this classifies a limit as spurious.
    pub spurious_threshold: f64,
}

impl Default for Rank1Config {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            tol: 1e-5,
            max_iters: 200,
            rank1_threshold: std::f64::consts::FRAC_1_SQRT_2,
            spurious_threshold: 0.3,
        }
    }
}

impl Rank1Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !(self.tol >= 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidConfig("need γ > 0, tol ≥ 0 and max_iters ≥ 1".into()));
        }
        if !(self.spurious_threshold <= self.rank1_threshold) {
            return Err(Error::InvalidConfig("spurious threshold exceeds rank-1 threshold".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    NearRank1,
    Spurious,
    MaxIters,
}

/// Limit of one ascent run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Candidate {
    /// Leading eigenvector of the limit, defined up to sign.
    pub u: Vec<f64>,
    pub lambda1: f64,
    /// `λ₁ − λ₂` of the limit.
    pub gap: f64,
    pub status: CandidateStatus,
    pub iters: usize,
    /// `‖P_Ŵ(u₁ ⊗ u₁)‖_F` at the limit; equals `λ₁` at a fixed point.
    pub proj_norm: f64,
    /// `λ₁` increase of the final step.
    pub last_increase: f64,
}

impl Candidate {
    pub fn vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.u)
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda1 - self.gap
    }
}

/// Spectral data of one iterate.
#[derive(Clone, Debug)]
struct Spectral {
    lambda1: f64,
    lambda2: f64,
    u1: DVector<f64>,
}

fn spectral(sub: &SymSubspace, c: &DVector<f64>) -> Spectral {
    let m = sub.from_coefficients(c);
    let (values, vectors) = linalg::sym_eigen_desc(&m);
    Spectral {
        lambda1: values[0],
        lambda2: values.get(1).copied().unwrap_or(f64::NEG_INFINITY),
        u1: vectors.column(0).into_owned(),
    }
}

/// Coordinates of `P_Ŵ(u ⊗ u)`.
fn rank1_coefficients(sub: &SymSubspace, u: &DVector<f64>) -> DVector<f64> {
    sub.coefficients(&linalg::outer(u))
}

/// One application of `F_γ` with the quantities of the well-definedness identity.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub next: DMatrix<f64>,
    pub lambda1: f64,
    /// `‖P_Ŵ(u₁ ⊗ u₁)‖_F`
    pub proj_norm: f64,
    /// `‖P_Ŵ(M + γu₁⊗u₁)‖_F`
    pub denominator: f64,
}

impl StepReport {
    /// `|denominator² − (1 + 2γλ₁ + γ²‖P_Ŵ(u₁⊗u₁)‖²_F)|`.
    pub fn identity_defect(&self, gamma: f64) -> f64 {
        let rhs = 1.0 + 2.0 * gamma * self.lambda1 + gamma * gamma * self.proj_norm.powi(2);
        (self.denominator.powi(2) - rhs).abs()
    }
}

/// `F_γ(M)`; `M` must lie in `sub` with `‖M‖_F = 1` and `λ₁(M) > 0`.
pub fn f_gamma_step(sub: &SymSubspace, m: &DMatrix<f64>, gamma: f64) -> Result<StepReport> {
    let c = sub.coefficients(m);
    let s = spectral(sub, &c);
    if s.lambda1 <= 0.0 {
        return Err(Error::NonpositiveLeadingEigenvalue(s.lambda1));
    }
    let p = rank1_coefficients(sub, &s.u1);
    let raw = &c + &p * gamma;
    let denominator = raw.norm();
    Ok(StepReport {
        next: sub.from_coefficients(&(raw / denominator)),
        lambda1: s.lambda1,
        proj_norm: p.norm(),
        denominator,
    })
}

/// Per-iteration record of a run, for monotonicity and fixed-point checks.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    /// `λ₁(M_j)` for `j = 0..=iters`.
    pub lambdas: Vec<f64>,
}

fn initial_coefficients(sub: &SymSubspace, seed: u64, attempt: usize) -> DVector<f64> {
    let mut r = rng::stream(seed, "rank1-init", attempt as u64);
    let g = rng::gaussian_vector(&mut r, sub.rank(), 1.0);
    let norm = g.norm();
    g / norm
}

/// One run of the ascent from a random start in `sub ∩ 𝕊`.
pub fn recover_candidate(sub: &SymSubspace, cfg: &Rank1Config, seed: u64) -> Result<Candidate> {
    recover_candidate_traced(sub, cfg, seed).map(|(c, _)| c)
}

pub fn recover_candidate_traced(sub: &SymSubspace, cfg: &Rank1Config, seed: u64) -> Result<(Candidate, Trace)> {
    cfg.validate()?;
    if sub.rank() == 0 {
        return Err(Error::InvalidConfig("empty subspace".into()));
    }
    let mut last_err = None;
    for attempt in 0..MAX_RESTARTS {
        match run_from(sub, cfg, initial_coefficients(sub, seed, attempt)) {
            Ok(out) => return Ok(out),
            Err(e @ Error::NonpositiveLeadingEigenvalue(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn run_from(sub: &SymSubspace, cfg: &Rank1Config, mut c: DVector<f64>) -> Result<(Candidate, Trace)> {
    let mut s = spectral(sub, &c);
    // Work with −M₀ when its norm is carried by a negative eigenvalue.
    let m0 = sub.from_coefficients(&c);
    if top_eigenpair(&m0).negate {
        c.neg_mut();
        s = spectral(sub, &c);
    }
    let mut trace = Trace { lambdas: vec![s.lambda1] };
    let mut iters = 0;
    let mut last_increase = f64::INFINITY;
    let mut p = rank1_coefficients(sub, &s.u1);
    while iters < cfg.max_iters {
        if s.lambda1 <= 0.0 {
            return Err(Error::NonpositiveLeadingEigenvalue(s.lambda1));
        }
        let raw = &c + &p * cfg.gamma;
        c = &raw / raw.norm();
        let next = spectral(sub, &c);
        iters += 1;
        last_increase = next.lambda1 - s.lambda1;
        trace.lambdas.push(next.lambda1);
        p = rank1_coefficients(sub, &next.u1);
        s = next;
        if last_increase < cfg.tol {
            break;
        }
    }
    let status = if s.lambda1 >= cfg.rank1_threshold {
        CandidateStatus::NearRank1
    } else if s.lambda1 <= cfg.spurious_threshold {
        CandidateStatus::Spurious
    } else {
        CandidateStatus::MaxIters
    };
    let candidate = Candidate {
        u: s.u1.as_slice().to_vec(),
        lambda1: s.lambda1,
        gap: s.lambda1 - s.lambda2,
        status,
        iters,
        proj_norm: p.norm(),
        last_increase,
    };
    Ok((candidate, trace))
}

/// `K` independent runs with per-restart seeds, returned in restart order.
pub fn recover_candidates(sub: &SymSubspace, cfg: &Rank1Config, restarts: usize, seed: u64) -> Result<Vec<Candidate>> {
    (0..restarts)
        .into_par_iter()
        .map(|k| recover_candidate(sub, cfg, rng::derive_seed(seed, "rank1-restart", k as u64)))
        .collect()
}

/// Constants entering the recovery certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateConstants {
    /// Lower Riesz constant of `{w_j ⊗ w_j}`.
    pub c_r: f64,
    /// `C_F − 1` of the profile frame.
    pub nu: f64,
    /// `‖P_W − P_Ŵ‖_F`
    pub delta: f64,
}

/// `√8 (c_r^{−1/2}√ν + ν + 2δ) / (λ₁ − λ₂)` without checking preconditions.
pub fn certificate_bound(lambda1: f64, lambda2: f64, k: &CertificateConstants) -> f64 {
    8f64.sqrt() * (k.nu.max(0.0).sqrt() / k.c_r.sqrt() + k.nu + 2.0 * k.delta) / (lambda1 - lambda2)
}

/// Upper bound on `min_{j,s} ‖s w_j − u₁‖`, valid when `max{δ, ν} ≤ 1/4` and
/// `λ₁ > max{2δ, λ₂}`.
pub fn certify_recovery(candidate: &Candidate, k: &CertificateConstants) -> Result<f64> {
    let l1 = candidate.lambda1;
    let l2 = candidate.lambda2();
    if k.delta.max(k.nu) > 0.25 {
        return Err(Error::PreconditionViolated(format!("max(δ, ν) = {} exceeds 1/4", k.delta.max(k.nu))));
    }
    if !(l1 > 2.0 * k.delta && l1 > l2) {
        return Err(Error::PreconditionViolated(format!("λ₁ = {l1} must exceed max(2δ, λ₂ = {l2})")));
    }
    if !(k.c_r > 0.0) {
        return Err(Error::PreconditionViolated("lower Riesz constant must be positive".into()));
    }
    Ok(certificate_bound(l1, l2, k))
}

/// Gap diagnostic `Θ = (C/c)^{1/2} Σ_{λ_j>0} λ_j ‖P_W(u_j⊗u_j)‖_F` with `(c, C)`
/// the frame bounds of `{w_ℓ ⊗ w_ℓ}` in `W`.
#[derive(Clone, Copy, Debug)]
pub struct GapConstant {
    pub theta: f64,
    pub lambda1: f64,
    /// `‖P_W(u₁ ⊗ u₁)‖_F`
    pub proj_norm: f64,
}

pub fn gap_constant(sub: &SymSubspace, m: &DMatrix<f64>, profiles: &DMatrix<f64>) -> Result<GapConstant> {
    let RieszConstants { lower, upper } = riesz_constants(profiles).map_err(|e| match e {
        Error::NotRieszBasis(v) => Error::NotAFrame(v),
        other => other,
    })?;
    let (values, vectors) = linalg::sym_eigen_desc(m);
    let mut sum = 0.0;
    for (k, &lam) in values.iter().enumerate() {
        if lam > 0.0 {
            let u = vectors.column(k).into_owned();
            sum += lam * rank1_coefficients(sub, &u).norm();
        }
    }
    let u1 = vectors.column(0).into_owned();
    Ok(GapConstant {
        theta: (upper / lower).sqrt() * sum,
        lambda1: values[0],
        proj_norm: rank1_coefficients(sub, &u1).norm(),
    })
}

/// `|u₁ᵀXu₁ − λ₁⟨X, M⟩|`, the first-order optimality residual of `M` in direction `X`.
pub fn stationarity_residual(m: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let top = top_eigenpair(m);
    let quad = (x * &top.u).dot(&top.u);
    (quad - top.lambda * linalg::frobenius_inner(x, m)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::{exact_w_from_profiles, Origin};

    fn e(d: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn top_eigenpair_cases() {
        let w = DVector::from_vec(vec![0.6, 0.8]);
        let t = top_eigenpair(&linalg::outer(&w));
        assert!((t.lambda - 1.0).abs() < 1e-12 && !t.negate);
        assert!((t.u.dot(&w).abs() - 1.0).abs() < 1e-12);

        let t = top_eigenpair(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -5.0])));
        assert!(t.negate);
        assert_eq!(t.lambda, -5.0);
        assert_eq!(t.effective_lambda(), 5.0);

        let m = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 7 + i * j) % 11) as f64 - 5.0);
        let t = top_eigenpair(&m);
        assert!((&m * &t.u - &t.u * t.lambda).norm() < 1e-10);
    }

    #[test]
    fn one_dimensional_subspace_recovers_its_generator() {
        let w = DVector::from_vec(vec![0.48, -0.6, 0.64]);
        let sub = SymSubspace::spanned_by(3, &[linalg::outer(&w)], Origin::Exact).unwrap();
        for seed in 0..10 {
            let c = recover_candidate(&sub, &Rank1Config::default(), seed).unwrap();
            let u = c.vector();
            assert!((u.dot(&w).abs() - 1.0).abs() < 1e-12);
            assert!((c.lambda1 - 1.0).abs() < 1e-12);
            assert!(c.iters <= 2);
            assert_eq!(c.status, CandidateStatus::NearRank1);
        }
    }

    #[test]
    fn rank1_elements_are_fixed_points() {
        let sub = exact_w_from_profiles(&DMatrix::identity(4, 4)).unwrap();
        let m = linalg::outer(&e(4, 1));
        let step = f_gamma_step(&sub, &m, 2.0).unwrap();
        assert!((&step.next - &m).norm() < 1e-10);
        assert!(step.identity_defect(2.0) < 1e-12);
    }

    #[test]
    fn generic_step_increases_lambda_and_satisfies_identity() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let profiles = DMatrix::from_column_slice(3, 4, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, s, s, 0.0]);
        let sub = exact_w_from_profiles(&profiles).unwrap();
        let c = DVector::from_vec(vec![0.5, 0.3, 0.2, 0.4]);
        let mut m = sub.from_coefficients(&(&c / c.norm()));
        if top_eigenpair(&m).negate {
            m = -m;
        }
        let before = top_eigenpair(&m).lambda;
        let step = f_gamma_step(&sub, &m, 2.0).unwrap();
        let after = top_eigenpair(&step.next).lambda;
        assert!(after > before);
        assert!(step.identity_defect(2.0) < 1e-10);
        assert!((step.next.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_rejects_nonpositive_leading_eigenvalue() {
        let sub = exact_w_from_profiles(&DMatrix::identity(2, 2)).unwrap();
        let m = -linalg::outer(&e(2, 0)) * std::f64::consts::FRAC_1_SQRT_2
            - linalg::outer(&e(2, 1)) * std::f64::consts::FRAC_1_SQRT_2;
        assert!(matches!(f_gamma_step(&sub, &m, 2.0), Err(Error::NonpositiveLeadingEigenvalue(_))));
    }

    #[test]
    fn certificate_cases() {
        let cand = Candidate {
            u: vec![1.0, 0.0],
            lambda1: 1.0,
            gap: 1.0,
            status: CandidateStatus::NearRank1,
            iters: 1,
            proj_norm: 1.0,
            last_increase: 0.0,
        };
        let exact = CertificateConstants { c_r: 1.0, nu: 0.0, delta: 0.0 };
        assert_eq!(certify_recovery(&cand, &exact).unwrap(), 0.0);
        let k = CertificateConstants { c_r: 0.8, nu: 0.1, delta: 0.05 };
        let expected = 8f64.sqrt() * (0.1f64.sqrt() / 0.8f64.sqrt() + 0.1 + 0.1);
        assert!((certify_recovery(&cand, &k).unwrap() - expected).abs() < 1e-15);
        let flat = Candidate { gap: 0.0, ..cand.clone() };
        assert!(matches!(certify_recovery(&flat, &exact), Err(Error::PreconditionViolated(_))));
        let loose = CertificateConstants { nu: 0.3, ..exact };
        assert!(matches!(certify_recovery(&cand, &loose), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn gap_constant_cases() {
        let w = DVector::from_vec(vec![0.6, 0.8]);
        let profiles = DMatrix::from_column_slice(2, 1, w.as_slice());
        let sub = exact_w_from_profiles(&profiles).unwrap();
        let g = gap_constant(&sub, &linalg::outer(&w), &profiles).unwrap();
        assert!((g.theta - 1.0).abs() < 1e-12);
        assert!((g.lambda1 - g.proj_norm).abs() < 1e-12);

        let dup = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(gap_constant(&sub, &linalg::outer(&w), &dup), Err(Error::NotAFrame(_))));
    }

    #[test]
    fn orthonormal_frame_has_unit_prefactor() {
        let profiles = DMatrix::<f64>::identity(3, 3);
        let sub = exact_w_from_profiles(&profiles).unwrap();
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.8, 0.6, 0.0]));
        let g = gap_constant(&sub, &m, &profiles).unwrap();
        // Prefactor 1 and ‖P_W(e_j⊗e_j)‖ = 1, so Θ = Σ λ_j⁺.
        assert!((g.theta - 1.4).abs() < 1e-12);
    }
}
