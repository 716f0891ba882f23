//! Active-subspace reduction and PCA estimation of the matrix space
//! `W = span{a_i ⊗ a_i, v_ℓ ⊗ v_ℓ}` from sampled Hessians.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::network::TwoLayerNetwork;
use crate::oracle::{fd_gradient, fd_hessian, unvec_sym, vec_sym, FdConfig, QueryOracle};
use crate::rng;

const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Exact,
    Estimated,
}

/// Linear space of symmetric `d×d` matrices, stored as an orthonormal basis of
/// their column-stacked vectorizations (`d² × r`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymSubspace {
    d: usize,
    basis: DMatrix<f64>,
    origin: Origin,
}

impl SymSubspace {
    /// `basis` must have `d²` rows and orthonormal columns (checked to 1e-10).
    pub fn from_basis(d: usize, basis: DMatrix<f64>, origin: Origin) -> Result<Self> {
        if basis.nrows() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, got: basis.nrows() });
        }
        let r = basis.ncols();
        let gram = basis.tr_mul(&basis);
        if (gram - DMatrix::identity(r, r)).amax() > 1e-10 {
            return Err(Error::InvalidConfig("subspace basis is not orthonormal".into()));
        }
        Ok(Self { d, basis, origin })
    }

    /// Orthonormalizes the given symmetric matrices; `RankDeficient` when they are
    /// linearly dependent.
    pub fn spanned_by(d: usize, mats: &[DMatrix<f64>], origin: Origin) -> Result<Self> {
        let cols: Vec<DVector<f64>> = mats.iter().map(vec_sym).collect();
        let stacked = DMatrix::from_columns(&cols);
        let (basis, sigma) = linalg::column_basis(&stacked);
        let top = sigma.first().copied().unwrap_or(0.0);
        if let Some((index, &s)) = sigma.iter().enumerate().find(|(_, &s)| s <= RANK_TOL * top.max(1.0)) {
            return Err(Error::RankDeficient { index, sigma: s });
        }
        Ok(Self { d, basis, origin })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }
    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// Basis element `k` as a `d×d` matrix.
    pub fn basis_matrix(&self, k: usize) -> DMatrix<f64> {
        unvec_sym(&self.basis.column(k).into_owned())
    }

    /// Coordinates `Uᵀvec(M)`.
    pub fn coefficients(&self, m: &DMatrix<f64>) -> DVector<f64> {
        self.basis.tr_mul(&DVector::from_column_slice(m.as_slice()))
    }

    /// Matrix with coordinates `c`, symmetrized.
    pub fn from_coefficients(&self, c: &DVector<f64>) -> DMatrix<f64> {
        let m = unvec_sym(&(&self.basis * c));
        linalg::symmetrize(&m)
    }

    /// Orthogonal projection `unvec(UUᵀvec(M))`.
    pub fn project(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if m.shape() != (self.d, self.d) {
            return Err(Error::DimensionMismatch { expected: self.d, got: m.nrows() });
        }
        Ok(self.from_coefficients(&self.coefficients(m)))
    }

    /// `‖M − P(M)‖_F`.
    pub fn residual(&self, m: &DMatrix<f64>) -> f64 {
        let c = self.coefficients(m);
        (m.norm().powi(2) - c.norm_squared()).max(0.0).sqrt()
    }

    /// The `d² × d²` projector `UUᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        linalg::projector(&self.basis)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: SymSubspace = serde_json::from_str(s)?;
        Self::from_basis(raw.d, raw.basis, raw.origin)
    }
}

/// `‖P₁ − P₂‖_F` for the projectors of two subspaces, via
/// `r₁ + r₂ − 2‖U₁ᵀU₂‖²_F` (no `d²×d²` matrices formed).
pub fn subspace_distance(s1: &SymSubspace, s2: &SymSubspace) -> Result<f64> {
    if s1.d != s2.d {
        return Err(Error::DimensionMismatch { expected: s1.d, got: s2.d });
    }
    let cross = s1.basis.tr_mul(&s2.basis).norm_squared();
    Ok((s1.rank() as f64 + s2.rank() as f64 - 2.0 * cross).max(0.0).sqrt())
}

/// Frobenius distance of two explicit projectors.
pub fn projector_distance(p1: &DMatrix<f64>, p2: &DMatrix<f64>) -> Result<f64> {
    if p1.shape() != p2.shape() {
        return Err(Error::DimensionMismatch { expected: p1.nrows(), got: p2.nrows() });
    }
    Ok((p1 - p2).norm())
}

/// Sampling law of the Hessian locations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "radius")]
pub enum SampleKind {
    UnitSphere,
    /// `ρ · Unif(𝕊^{d−1})`
    ScaledSphere(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleDistribution {
    pub kind: SampleKind,
    pub seed: u64,
}

impl SampleDistribution {
    pub fn new(kind: SampleKind, seed: u64) -> Result<Self> {
        if let SampleKind::ScaledSphere(rho) = kind {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::InvalidConfig(format!("sphere radius must be positive, got {rho}")));
            }
        }
        Ok(Self { kind, seed })
    }

    /// `√m0 · Unif(𝕊^{d−1})`.
    pub fn default_for(m0: usize, seed: u64) -> Self {
        Self { kind: SampleKind::ScaledSphere((m0 as f64).sqrt()), seed }
    }

    /// The `i`-th sample; each index has its own random stream.
    pub fn point(&self, d: usize, i: usize) -> DVector<f64> {
        let mut r = rng::stream(self.seed, "hessian-location", i as u64);
        let u = rng::unit_sphere(&mut r, d);
        match self.kind {
            SampleKind::UnitSphere => u,
            SampleKind::ScaledSphere(rho) => u * rho,
        }
    }
}

/// Result of the Hessian PCA with its spectrum.
#[derive(Clone, Debug)]
pub struct WEstimate {
    pub subspace: SymSubspace,
    /// Singular values of the stacked vectorized Hessians, descending.
    pub singular_values: Vec<f64>,
    /// Empirical `σ_{m0+m1}` of the second-moment matrix.
    pub alpha_hat: f64,
}

/// Top-`m0` left singular subspace of sampled forward-difference gradients at
/// `x_i ~ Unif(𝕊^{d−1})`; returns the `d×d` projector.
pub fn active_subspace(oracle: &QueryOracle, m0: usize, m_x: usize, fd: FdConfig, seed: u64) -> Result<DMatrix<f64>> {
    Ok(linalg::projector(&active_subspace_basis(oracle, m0, m_x, fd, seed)?))
}

/// Orthonormal `d×m0` basis of the estimated active subspace.
pub fn active_subspace_basis(
    oracle: &QueryOracle,
    m0: usize,
    m_x: usize,
    fd: FdConfig,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let d = oracle.dim();
    if m_x < m0 {
        return Err(Error::InvalidConfig(format!("need m_X ≥ m0, got {m_x} < {m0}")));
    }
    let dist = SampleDistribution { kind: SampleKind::UnitSphere, seed };
    let grads: Vec<DVector<f64>> =
        (0..m_x).into_par_iter().map(|i| fd_gradient(oracle, &dist.point(d, i), fd)).collect();
    let stacked = DMatrix::from_columns(&grads);
    let (u, sigma) = linalg::top_left_singular(&stacked, m0);
    check_rank(&sigma, m0)?;
    Ok(u)
}

fn check_rank(sigma: &[f64], r: usize) -> Result<()> {
    match sigma.get(r - 1) {
        Some(&s) if s >= RANK_TOL => Ok(()),
        Some(&s) => Err(Error::RankDeficient { index: r - 1, sigma: s }),
        None => Err(Error::RankDeficient { index: sigma.len(), sigma: 0.0 }),
    }
}

/// Finite-difference Hessians at the first `m_x` points of `dist`.
pub fn sample_fd_hessians(
    oracle: &QueryOracle,
    m_x: usize,
    fd: FdConfig,
    dist: &SampleDistribution,
) -> Vec<DMatrix<f64>> {
    let d = oracle.dim();
    (0..m_x).into_par_iter().map(|i| fd_hessian(oracle, &dist.point(d, i), fd)).collect()
}

/// Span of the top `r` left singular vectors of the stacked vectorized samples.
pub fn pca_subspace(samples: &[DMatrix<f64>], r: usize, origin: Origin) -> Result<WEstimate> {
    let d = samples.first().map(|m| m.nrows()).ok_or(Error::InvalidConfig("no samples".into()))?;
    if r == 0 {
        return Err(Error::InvalidConfig("target rank must be positive".into()));
    }
    let cols: Vec<DVector<f64>> = samples.iter().map(vec_sym).collect();
    let stacked = DMatrix::from_columns(&cols);
    let (u, sigma) = linalg::top_left_singular(&stacked, r);
    check_rank(&sigma, r)?;
    let alpha_hat = sigma[r - 1].powi(2) / samples.len() as f64;
    Ok(WEstimate { subspace: SymSubspace { d, basis: u, origin }, singular_values: sigma, alpha_hat })
}

/// Hessian PCA: draws `m_x` points from `dist`, stacks `vec(Δ²_ε f(x_i))` and keeps
/// the top `m0 + m1` left singular vectors.
pub fn approximate_w(
    oracle: &QueryOracle,
    m0: usize,
    m1: usize,
    m_x: usize,
    fd: FdConfig,
    dist: &SampleDistribution,
) -> Result<WEstimate> {
    let r = m0 + m1;
    if m_x < r {
        return Err(Error::InvalidConfig(format!("need m_X ≥ m0 + m1, got {m_x} < {r}")));
    }
    let samples = sample_fd_hessians(oracle, m_x, fd, dist);
    pca_subspace(&samples, r, Origin::Estimated)
}

/// Exact `W` of a known network: orthonormalized `{vec(a_i⊗a_i)} ∪ {vec(v_ℓ⊗v_ℓ)}`.
pub fn exact_w(net: &TwoLayerNetwork) -> Result<SymSubspace> {
    exact_w_from_profiles(&net.profiles()?)
}

pub fn exact_w_from_profiles(profiles: &DMatrix<f64>) -> Result<SymSubspace> {
    let mats: Vec<DMatrix<f64>> = profiles.column_iter().map(|c| linalg::outer(&c.into_owned())).collect();
    SymSubspace::spanned_by(profiles.nrows(), &mats, Origin::Exact)
}

/// `(m0+m1)`-th eigenvalue of `(1/n) Σ vec(H_i) vec(H_i)ᵀ`.
pub fn estimate_alpha(samples: &[DMatrix<f64>], r: usize) -> Result<f64> {
    if r == 0 || samples.len() < r {
        return Err(Error::InvalidConfig(format!("need at least {r} samples, got {}", samples.len())));
    }
    let n = samples.len();
    let cols: Vec<DVector<f64>> = samples.iter().map(vec_sym).collect();
    let stacked = DMatrix::from_columns(&cols);
    // Same nonzero spectrum as the d²×d² second-moment matrix.
    let gram = if stacked.nrows() < n { &stacked * stacked.transpose() } else { stacked.tr_mul(&stacked) };
    let ev = linalg::sym_eigenvalues_desc(&gram);
    Ok(ev.get(r - 1).copied().unwrap_or(0.0).max(0.0) / n as f64)
}
