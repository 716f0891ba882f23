//! Random test networks: perturbed orthogonal frames or unit-sphere weights.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::linalg;
use crate::network::TwoLayerNetwork;
use crate::rng;

/// Scale search stops once the statistic is this close to the target.
const STAT_TOL: f64 = 1e-3;
const MAX_DRAWS: u64 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightDesign {
    /// Haar-random orthonormal columns plus a Gaussian perturbation, scaled so that
    /// `(Σ_i (σ_i − 1)²)^{1/2} ≈ target` after column renormalization. `target = 0`
    /// keeps the orthonormal frame.
    PerturbedOrthogonal { target: f64 },
    /// Columns i.i.d. uniform on the unit sphere.
    UnitSphere,
}

impl Default for WeightDesign {
    fn default() -> Self {
        WeightDesign::PerturbedOrthogonal { target: 0.3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub weight_design: WeightDesign,
    pub activation: Activation,
    /// Input dimension; `None` means `d = m0`.
    pub d: Option<usize>,
    pub m0: usize,
    pub m1: usize,
    /// Standard deviation of the biases `θ`, `τ`.
    pub bias_std: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            weight_design: WeightDesign::default(),
            activation: Activation::ShiftedSigmoid,
            d: None,
            m0: 30,
            m1: 3,
            bias_std: 0.01,
            seed: 0,
        }
    }
}

impl Scenario {
    pub fn pod(activation: Activation, m0: usize, m1: usize, seed: u64) -> Self {
        Self { activation, m0, m1, seed, ..Self::default() }
    }

    pub fn dim(&self) -> usize {
        self.d.unwrap_or(self.m0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m0 == 0 || self.m1 == 0 || self.m1 > self.m0 || self.m0 > self.dim() {
            return Err(Error::InvalidConfig(format!(
                "need 0 < m1 ≤ m0 ≤ d, got d={}, m0={}, m1={}",
                self.dim(),
                self.m0,
                self.m1
            )));
        }
        if !(self.bias_std >= 0.0 && self.bias_std.is_finite()) {
            return Err(Error::InvalidConfig(format!("bias_std must be non-negative, got {}", self.bias_std)));
        }
        if let WeightDesign::PerturbedOrthogonal { target } = self.weight_design {
            if !(target >= 0.0 && target.is_finite()) {
                return Err(Error::InvalidConfig(format!("perturbation target must be non-negative, got {target}")));
            }
        }
        Ok(())
    }
}

/// `(Σ_i (σ_i(M) − 1)²)^{1/2}`
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    linalg::singular_values_desc(m).iter().map(|s| (s - 1.0).powi(2)).sum::<f64>().sqrt()
}

fn normalize_columns(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    m
}

fn gaussian_matrix(r: &mut impl rand::Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let data = rng::gaussian_vector(r, rows * cols, 1.0);
    DMatrix::from_column_slice(rows, cols, data.as_slice())
}

/// Perturbed orthonormal `rows × cols` frame with unit columns.
///
/// The perturbation is `s·QE` with `E` a `cols × cols` Gaussian matrix, i.e. the columns
/// are mixed inside their own span. An i.i.d. perturbation of thin frames cannot reach
/// the target: its columns decorrelate as `s` grows. If one draw of `E` saturates below
/// the target, the next draw is tried.
pub fn perturbed_orthogonal(rows: usize, cols: usize, target: f64, seed: u64, tag: &str) -> Result<DMatrix<f64>> {
    let mut r = rng::stream(seed, tag, 0);
    let q = linalg::haar_orthonormal(gaussian_matrix(&mut r, rows, cols));
    // A single unit column has σ = 1 whatever the perturbation.
    if target == 0.0 || cols == 1 {
        return Ok(q);
    }
    for draw in 1..=MAX_DRAWS {
        let mut r = rng::stream(seed, tag, draw);
        let e = &q * gaussian_matrix(&mut r, cols, cols);
        let at = |s: f64| normalize_columns(&q + &e * s);
        let stat = |s: f64| orthogonality_defect(&at(s));
        let mut hi = target / (cols as f64).sqrt();
        let mut grow = 0;
        while stat(hi) < target && grow < 40 {
            hi *= 2.0;
            grow += 1;
        }
        if stat(hi) < target {
            continue;
        }
        let mut lo = 0.0;
        let mut s = hi;
        for _ in 0..100 {
            s = 0.5 * (lo + hi);
            let v = stat(s);
            if (v - target).abs() < STAT_TOL {
                break;
            }
            if v < target {
                lo = s;
            } else {
                hi = s;
            }
        }
        return Ok(at(s));
    }
    Err(Error::InvalidConfig(format!("perturbation target {target} unreachable for a {rows}×{cols} frame")))
}

/// Draws weights and biases for `scenario`. Every block has its own random stream.
pub fn generate_network(scenario: &Scenario) -> Result<TwoLayerNetwork> {
    scenario.validate()?;
    let (d, m0, m1, seed) = (scenario.dim(), scenario.m0, scenario.m1, scenario.seed);
    let (a, b) = match scenario.weight_design {
        WeightDesign::PerturbedOrthogonal { target } => (
            perturbed_orthogonal(d, m0, target, seed, "weights-a")?,
            perturbed_orthogonal(m0, m1, target, seed, "weights-b")?,
        ),
        WeightDesign::UnitSphere => {
            let mut r = rng::stream(seed, "weights-a", 0);
            let a: Vec<DVector<f64>> = (0..m0).map(|_| rng::unit_sphere(&mut r, d)).collect();
            let mut r = rng::stream(seed, "weights-b", 0);
            let b: Vec<DVector<f64>> = (0..m1).map(|_| rng::unit_sphere(&mut r, m0)).collect();
            (DMatrix::from_columns(&a), DMatrix::from_columns(&b))
        }
    };
    let mut r = rng::stream(seed, "biases", 0);
    let theta = rng::gaussian_vector(&mut r, m0, scenario.bias_std);
    let tau = rng::gaussian_vector(&mut r, m1, scenario.bias_std);
    let net = TwoLayerNetwork::new(a, b, theta, tau, scenario.activation)?;
    net.entangled_weights()?;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pod_hits_target() {
        for (m0, m1, seed) in [(10, 3, 0), (30, 3, 1), (30, 9, 2), (5, 2, 3)] {
            let net = generate_network(&Scenario::pod(Activation::Tanh, m0, m1, seed)).unwrap();
            let sa = orthogonality_defect(net.a());
            assert!((0.25..=0.35).contains(&sa), "A: {sa}");
            let sb = orthogonality_defect(net.b());
            assert!((0.25..=0.35).contains(&sb), "B: {sb}");
        }
    }

    #[test]
    fn zero_perturbation_is_orthonormal() {
        let s = Scenario { weight_design: WeightDesign::PerturbedOrthogonal { target: 0.0 }, ..Scenario::default() };
        let net = generate_network(&s).unwrap();
        let gram = net.a().tr_mul(net.a());
        assert!((gram - DMatrix::identity(30, 30)).norm() < 1e-12);
    }

    #[test]
    fn seed_determinism() {
        let s = Scenario::pod(Activation::ShiftedSigmoid, 8, 3, 42);
        assert_eq!(generate_network(&s).unwrap().to_json().unwrap(), generate_network(&s).unwrap().to_json().unwrap());
        let other = Scenario { seed: 43, ..s };
        assert_ne!(generate_network(&s).unwrap(), generate_network(&other).unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(generate_network(&Scenario { m0: 3, m1: 4, ..Scenario::default() }).is_err());
        assert!(generate_network(&Scenario { d: Some(2), m0: 3, m1: 1, ..Scenario::default() }).is_err());
    }

    #[test]
    fn wide_input_dimension() {
        let s = Scenario { d: Some(12), m0: 6, m1: 2, weight_design: WeightDesign::UnitSphere, ..Scenario::default() };
        let net = generate_network(&s).unwrap();
        assert_eq!((net.d(), net.m0(), net.m1()), (12, 6, 2));
    }
}
