//! Ground-truth two-hidden-layer network with shifted activations.
//!
//! `f(x) = Σ_ℓ h_ℓ(Σ_i b_{iℓ} g_i(a_iᵀx))` with `g_i(t) = φ(t + θ_i)` and
//! `h_ℓ(t) = φ(t + τ_ℓ)`. Besides evaluation this module supplies the analytic
//! gradient and Hessian (in the factored form `AΓ_xAᵀ + V_xT_xV_xᵀ`), the
//! entangled weights `v_ℓ = AG₀b_ℓ/‖AG₀b_ℓ‖` and frame diagnostics.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::activation::{Activation, ScalarActivation};
use crate::error::{Error, Result};
use crate::linalg;

const UNIT_NORM_TOL: f64 = 1e-12;
const MIN_SLOPE: f64 = 1e-8;
const DEGENERATE_NORM: f64 = 1e-12;
const RIESZ_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct TwoLayerNetwork {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    theta: DVector<f64>,
    tau: DVector<f64>,
    activation: Activation,
}

/// Second-derivative factors at a point `x`.
#[derive(Clone, Debug)]
pub struct HessianFactors {
    /// `g_i'(a_iᵀx)`
    pub gx: DVector<f64>,
    /// `γ_i(x) = g_i''(a_iᵀx) Σ_ℓ h_ℓ'(·) b_{iℓ}`
    pub gamma_x: DVector<f64>,
    /// `τ_ℓ(x) = h_ℓ''(b_ℓᵀ g(Aᵀx))`
    pub t_x: DVector<f64>,
    /// `V_x = A G_x B` (unnormalized entangled weights at `x`)
    pub v_x: DMatrix<f64>,
}

impl HessianFactors {
    /// `A Γ_x Aᵀ + V_x T_x V_xᵀ`, computed on the lower triangle and mirrored.
    pub fn assemble(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let d = a.nrows();
        let mut h = DMatrix::zeros(d, d);
        for j in 0..d {
            for i in j..d {
                let mut s = 0.0;
                for k in 0..a.ncols() {
                    s += self.gamma_x[k] * a[(i, k)] * a[(j, k)];
                }
                for l in 0..self.v_x.ncols() {
                    s += self.t_x[l] * self.v_x[(i, l)] * self.v_x[(j, l)];
                }
                h[(i, j)] = s;
                h[(j, i)] = s;
            }
        }
        h
    }
}

/// Frame bounds `c_f‖x‖² ≤ Σ⟨x,w_j⟩² ≤ C_F‖x‖²` and `ν = C_F − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameConstants {
    pub lower: f64,
    pub upper: f64,
    pub nu: f64,
}

/// Riesz bounds of the rank-1 system `{w_j ⊗ w_j}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszConstants {
    pub lower: f64,
    pub upper: f64,
}

impl TwoLayerNetwork {
    /// Validates shapes, unit-norm columns and `|φ'(θ_i)| ≥ 1e-8`.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        theta: DVector<f64>,
        tau: DVector<f64>,
        activation: Activation,
    ) -> Result<Self> {
        let (d, m0) = a.shape();
        let m1 = b.ncols();
        if m0 == 0 || m1 == 0 {
            return Err(Error::InvalidNetwork("layer widths must be positive".into()));
        }
        if !(m1 <= m0 && m0 <= d) {
            return Err(Error::InvalidNetwork(format!("need m1 ≤ m0 ≤ d, got d={d}, m0={m0}, m1={m1}")));
        }
        if b.nrows() != m0 || theta.len() != m0 || tau.len() != m1 {
            return Err(Error::InvalidNetwork("inconsistent shapes of B, theta or tau".into()));
        }
        let all = a.iter().chain(b.iter()).chain(theta.iter()).chain(tau.iter());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidNetwork("non-finite parameter".into()));
        }
        for (name, m) in [("A", &a), ("B", &b)] {
            for (k, col) in m.column_iter().enumerate() {
                let n = col.norm();
                if (n - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(Error::InvalidNetwork(format!("column {k} of {name} has norm {n}")));
                }
            }
        }
        for (i, &t) in theta.iter().enumerate() {
            if activation.d1(t).abs() < MIN_SLOPE {
                return Err(Error::InvalidNetwork(format!("g_{i}'(0) vanishes (θ_{i} = {t})")));
            }
        }
        Ok(Self { a, b, theta, tau, activation })
    }

    pub fn d(&self) -> usize {
        self.a.nrows()
    }
    pub fn m0(&self) -> usize {
        self.a.ncols()
    }
    pub fn m1(&self) -> usize {
        self.b.ncols()
    }
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }
    pub fn tau(&self) -> &DVector<f64> {
        &self.tau
    }
    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// `diag(G₀) = (g_i'(0))_i`, recomputed from θ on every call.
    pub fn g0(&self) -> DVector<f64> {
        self.theta.map(|t| self.activation.d1(t))
    }

    fn first_layer(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut z = self.a.tr_mul(x);
        z += &self.theta;
        z
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> f64 {
        self.evaluate_slice(x.as_slice())
    }

    /// Allocation-light evaluation used by the query oracle.
    pub fn evaluate_slice(&self, x: &[f64]) -> f64 {
        let (d, m0) = self.a.shape();
        let act = self.activation;
        let mut hidden = [0.0f64; 64];
        let mut heap;
        let g: &mut [f64] = if m0 <= hidden.len() {
            &mut hidden[..m0]
        } else {
            heap = vec![0.0; m0];
            &mut heap
        };
        let a = self.a.as_slice();
        for i in 0..m0 {
            let col = &a[i * d..(i + 1) * d];
            let z: f64 = col.iter().zip(x).map(|(p, q)| p * q).sum();
            g[i] = act.value(z + self.theta[i]);
        }
        let b = self.b.as_slice();
        let mut out = 0.0;
        for l in 0..self.m1() {
            let col = &b[l * m0..(l + 1) * m0];
            let y: f64 = col.iter().zip(g.iter()).map(|(p, q)| p * q).sum();
            out += act.value(y + self.tau[l]);
        }
        out
    }

    /// `∇f(x) = A G_x B h'(Bᵀg(Aᵀx))`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let act = self.activation;
        let z = self.first_layer(x);
        let g = z.map(|t| act.value(t));
        let gp = z.map(|t| act.d1(t));
        let mut y = self.b.tr_mul(&g);
        y += &self.tau;
        let hp = y.map(|t| act.d1(t));
        let inner = (&self.b * hp).component_mul(&gp);
        &self.a * inner
    }

    pub fn hessian_factors(&self, x: &DVector<f64>) -> HessianFactors {
        let act = self.activation;
        let z = self.first_layer(x);
        let g = z.map(|t| act.value(t));
        let gx = z.map(|t| act.d1(t));
        let gpp = z.map(|t| act.d2(t));
        let mut y = self.b.tr_mul(&g);
        y += &self.tau;
        let hp = y.map(|t| act.d1(t));
        let t_x = y.map(|t| act.d2(t));
        let gamma_x = (&self.b * hp).component_mul(&gpp);
        let mut gb = self.b.clone();
        for (i, mut row) in gb.row_iter_mut().enumerate() {
            row *= gx[i];
        }
        let v_x = &self.a * gb;
        HessianFactors { gx, gamma_x, t_x, v_x }
    }

    /// `∇²f(x) = Σ_i γ_i(x) a_i⊗a_i + Σ_ℓ τ_ℓ(x) v_ℓ(x)⊗v_ℓ(x)`, exactly symmetric.
    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.hessian_factors(x).assemble(&self.a)
    }

    pub fn hessian_with_factors(&self, x: &DVector<f64>) -> (DMatrix<f64>, HessianFactors) {
        let f = self.hessian_factors(x);
        (f.assemble(&self.a), f)
    }

    /// Columns `v_ℓ = AG₀b_ℓ / ‖AG₀b_ℓ‖`.
    pub fn entangled_weights(&self) -> Result<DMatrix<f64>> {
        let g0 = self.g0();
        let mut v = DMatrix::zeros(self.d(), self.m1());
        for l in 0..self.m1() {
            let scaled = self.b.column(l).component_mul(&g0);
            let col = &self.a * scaled;
            let norm = col.norm();
            if norm <= DEGENERATE_NORM {
                return Err(Error::DegenerateEntangledWeight { index: l, norm });
            }
            v.set_column(l, &(col / norm));
        }
        Ok(v)
    }

    /// `[a_1 | … | a_{m0} | v_1 | … | v_{m1}]`.
    pub fn profiles(&self) -> Result<DMatrix<f64>> {
        let v = self.entangled_weights()?;
        let mut w = DMatrix::zeros(self.d(), self.m0() + self.m1());
        w.columns_mut(0, self.m0()).copy_from(&self.a);
        w.columns_mut(self.m0(), self.m1()).copy_from(&v);
        Ok(w)
    }

    /// Relabels first-layer neurons by `perm` (new column `j` is old column `perm[j]`);
    /// the network function is unchanged.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let m0 = self.m0();
        if perm.len() != m0 {
            return Err(Error::DimensionMismatch { expected: m0, got: perm.len() });
        }
        let a = DMatrix::from_fn(self.d(), m0, |r, c| self.a[(r, perm[c])]);
        let b = DMatrix::from_fn(m0, self.m1(), |r, c| self.b[(perm[r], c)]);
        let theta = DVector::from_fn(m0, |r, _| self.theta[perm[r]]);
        Self::new(a, b, theta, self.tau.clone(), self.activation)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk layout; matrices are column-major lists.
#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    d: usize,
    m0: usize,
    m1: usize,
    activation: Activation,
    #[serde(rename = "A")]
    a: Vec<f64>,
    #[serde(rename = "B")]
    b: Vec<f64>,
    theta: Vec<f64>,
    tau: Vec<f64>,
}

impl Serialize for TwoLayerNetwork {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NetworkDoc {
            d: self.d(),
            m0: self.m0(),
            m1: self.m1(),
            activation: self.activation,
            a: self.a.as_slice().to_vec(),
            b: self.b.as_slice().to_vec(),
            theta: self.theta.as_slice().to_vec(),
            tau: self.tau.as_slice().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TwoLayerNetwork {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = NetworkDoc::deserialize(de)?;
        if doc.a.len() != doc.d * doc.m0 || doc.b.len() != doc.m0 * doc.m1 {
            return Err(D::Error::custom("matrix lengths do not match d, m0, m1"));
        }
        TwoLayerNetwork::new(
            DMatrix::from_column_slice(doc.d, doc.m0, &doc.a),
            DMatrix::from_column_slice(doc.m0, doc.m1, &doc.b),
            DVector::from_vec(doc.theta),
            DVector::from_vec(doc.tau),
            doc.activation,
        )
        .map_err(D::Error::custom)
    }
}

/// Extreme eigenvalues of the frame operator `Σ_j w_j w_jᵀ` of the columns of `vectors`.
pub fn frame_constants(vectors: &DMatrix<f64>) -> FrameConstants {
    let op = vectors * vectors.transpose();
    let ev = linalg::sym_eigenvalues_desc(&op);
    let upper = ev[0];
    let lower = ev[ev.len() - 1].max(0.0);
    let lower = if lower < 1e-12 { 0.0 } else { lower };
    FrameConstants { lower, upper, nu: upper - 1.0 }
}

/// Gram matrix `G_jk = ⟨w_j, w_k⟩²` of the rank-1 system `{w_j ⊗ w_j}`.
pub fn rank1_gram(vectors: &DMatrix<f64>) -> DMatrix<f64> {
    let inner = vectors.tr_mul(vectors);
    inner.map(|v| v * v)
}

/// Extreme eigenvalues of the rank-1 Gram matrix.
pub fn riesz_constants(vectors: &DMatrix<f64>) -> Result<RieszConstants> {
    let ev = linalg::sym_eigenvalues_desc(&rank1_gram(vectors));
    let lower = ev[ev.len() - 1];
    if lower < RIESZ_TOL {
        return Err(Error::NotRieszBasis(lower));
    }
    Ok(RieszConstants { lower, upper: ev[0] })
}
