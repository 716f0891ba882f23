//! Layer attribution of recovered profiles by gradient decay along rays.
//!
//! Along `t ↦ t·a_i` a first-layer direction keeps one neuron in its linear regime, so
//! `‖∇f(t a_i)‖` levels off at a positive constant. Along an entangled direction every
//! first-layer neuron saturates and the gradient decays to zero. The energy
//! `Î(w) = Σ_k ‖Δ_ε f(t_k w)‖²` therefore separates the two layers.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::TwoLayerNetwork;
use crate::oracle::{fd_gradient, FdConfig, QueryOracle};

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryConfig {
    t_grid: Vec<f64>,
    fd: FdConfig,
}

impl Default for TrajectoryConfig {
    /// `t_k = −20 + k`, `k = 1..=40`, `ε = 1e-5`.
    fn default() -> Self {
        Self { t_grid: (1..=40).map(|k| -20.0 + k as f64).collect(), fd: FdConfig::default() }
    }
}

impl TrajectoryConfig {
    pub fn new(t_grid: Vec<f64>, fd: FdConfig) -> Result<Self> {
        if t_grid.is_empty() {
            return Err(Error::InvalidConfig("trajectory grid is empty".into()));
        }
        if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("trajectory grid must be finite and strictly increasing".into()));
        }
        Ok(Self { t_grid, fd })
    }

    /// Grid `lo, lo+step, …` up to and including `hi` (up to rounding).
    pub fn from_range(lo: f64, hi: f64, step: f64, fd: FdConfig) -> Result<Self> {
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!("bad grid range {lo}:{hi}:{step}")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::new((0..n).map(|k| lo + k as f64 * step).collect(), fd)
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn fd(&self) -> FdConfig {
        self.fd
    }

    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    /// Oracle queries per profile.
    pub fn queries_per_profile(&self, d: usize) -> u64 {
        (self.t_grid.len() * (d + 1)) as u64
    }
}

/// Parses `lo:hi:step` with the default finite-difference step.
impl FromStr for TrajectoryConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(Error::InvalidConfig(format!("expected lo:hi:step, got `{s}`")));
        };
        let num = |v: &str| v.parse::<f64>().map_err(|e| Error::InvalidConfig(format!("`{v}`: {e}")));
        Self::from_range(num(lo)?, num(hi)?, num(step)?, FdConfig::default())
    }
}

/// `Σ_k ‖Δ_ε f(t_k w)‖²`.
pub fn trajectory_energy(oracle: &QueryOracle, w: &DVector<f64>, cfg: &TrajectoryConfig) -> f64 {
    cfg.t_grid.iter().map(|&t| fd_gradient(oracle, &(w * t), cfg.fd).norm_squared()).sum()
}

/// Energies of all columns of `profiles`, computed in parallel.
pub fn trajectory_energies(oracle: &QueryOracle, profiles: &DMatrix<f64>, cfg: &TrajectoryConfig) -> Vec<f64> {
    (0..profiles.ncols())
        .into_par_iter()
        .map(|j| trajectory_energy(oracle, &profiles.column(j).into_owned(), cfg))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerAssignment {
    #[serde(rename = "layer1")]
    pub layer1_indices: Vec<usize>,
    #[serde(rename = "layer2")]
    pub layer2_indices: Vec<usize>,
    pub energies: Vec<f64>,
}

impl LayerAssignment {
    /// `1` or `2` per profile.
    pub fn labels(&self) -> Vec<u8> {
        let mut out = vec![2; self.energies.len()];
        for &j in &self.layer1_indices {
            out[j] = 1;
        }
        out
    }
}

/// The `m0` profiles with the largest energy go to layer 1; equal energies keep index order.
pub fn assign_layers(energies: &[f64], m0: usize) -> Result<LayerAssignment> {
    if m0 > energies.len() {
        return Err(Error::DimensionMismatch { expected: m0, got: energies.len() });
    }
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&i, &j| energies[j].total_cmp(&energies[i]));
    let mut layer1 = order[..m0].to_vec();
    let mut layer2 = order[m0..].to_vec();
    layer1.sort_unstable();
    layer2.sort_unstable();
    Ok(LayerAssignment { layer1_indices: layer1, layer2_indices: layer2, energies: energies.to_vec() })
}

/// Label `1` if the nearest element of `{±a_i} ∪ {±v_ℓ}` is a first-layer weight, else `2`.
pub fn ground_truth_labels(profiles: &DMatrix<f64>, net: &TwoLayerNetwork) -> Result<Vec<u8>> {
    let truth = net.profiles()?;
    if truth.nrows() != profiles.nrows() {
        return Err(Error::DimensionMismatch { expected: truth.nrows(), got: profiles.nrows() });
    }
    let m0 = net.m0();
    Ok(profiles
        .column_iter()
        .map(|u| {
            let mut best = (f64::INFINITY, 0);
            for (k, w) in truth.column_iter().enumerate() {
                let d = (u - w).norm_squared().min((u + w).norm_squared());
                if d < best.0 {
                    best = (d, k);
                }
            }
            if best.1 < m0 {
                1
            } else {
                2
            }
        })
        .collect())
}

/// `(L1, L2)`: fraction of layer-1 slots holding true layer-1 profiles, and likewise
/// for layer 2. An empty layer scores `1`.
pub fn success_rates(assignment: &LayerAssignment, truth: &[u8]) -> (f64, f64) {
    let rate = |idx: &[usize], label: u8| {
        if idx.is_empty() {
            1.0
        } else {
            idx.iter().filter(|&&j| truth.get(j) == Some(&label)).count() as f64 / idx.len() as f64
        }
    };
    (rate(&assignment.layer1_indices, 1), rate(&assignment.layer2_indices, 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Activation;

    #[test]
    fn default_grid() {
        let cfg = TrajectoryConfig::default();
        assert_eq!(cfg.t_grid().len(), 40);
        assert_eq!(cfg.t_grid()[0], -19.0);
        assert_eq!(cfg.t_grid()[39], 20.0);
        let parsed: TrajectoryConfig = "-19:20:1".parse().unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn grid_validation() {
        assert!(TrajectoryConfig::new(vec![], FdConfig::default()).is_err());
        assert!(TrajectoryConfig::new(vec![1.0, 1.0], FdConfig::default()).is_err());
        assert!("1:0:1".parse::<TrajectoryConfig>().is_err());
        assert!("0:1".parse::<TrajectoryConfig>().is_err());
        assert!("0:1:0".parse::<TrajectoryConfig>().is_err());
    }

    #[test]
    fn constant_function_has_zero_energy() {
        let oracle = QueryOracle::from_fn(3, |_| 2.5);
        let w = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let cfg = TrajectoryConfig::default();
        assert_eq!(trajectory_energy(&oracle, &w, &cfg), 0.0);
        assert_eq!(oracle.query_count(), cfg.queries_per_profile(3));
    }

    #[test]
    fn assignment_examples() {
        let a = assign_layers(&[5.0, 1.0, 4.0], 2).unwrap();
        assert_eq!(a.layer1_indices, vec![0, 2]);
        assert_eq!(a.layer2_indices, vec![1]);
        let tie = assign_layers(&[1.0; 5], 3).unwrap();
        assert_eq!(tie.layer1_indices, vec![0, 1, 2]);
        assert_eq!(tie.labels(), vec![1, 1, 1, 2, 2]);
        assert!(assign_layers(&[1.0], 2).is_err());
    }

    #[test]
    fn rates() {
        let a = LayerAssignment { layer1_indices: vec![0, 1], layer2_indices: vec![2, 3], energies: vec![0.0; 4] };
        assert_eq!(success_rates(&a, &[1, 1, 2, 2]), (1.0, 1.0));
        assert_eq!(success_rates(&a, &[2, 2, 1, 1]), (0.0, 0.0));
        assert_eq!(success_rates(&a, &[1, 2, 2, 2]), (0.5, 1.0));
    }

    #[test]
    fn labels_ignore_sign() {
        let a = DMatrix::<f64>::identity(3, 3);
        let b = DMatrix::from_column_slice(3, 1, &[0.6, 0.8, 0.0]);
        let net = TwoLayerNetwork::new(a, b, DVector::zeros(3), DVector::zeros(1), Activation::Tanh).unwrap();
        let truth = net.profiles().unwrap();
        let labels = ground_truth_labels(&truth, &net).unwrap();
        assert_eq!(labels, vec![1, 1, 1, 2]);
        assert_eq!(ground_truth_labels(&(-truth), &net).unwrap(), labels);
    }
}
