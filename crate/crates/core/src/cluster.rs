//! Sign canonicalization and kMeans++ clustering of candidate profiles.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Flips `u` so that its largest-magnitude entry is positive (lowest index wins ties).
pub fn canonicalize_sign(u: &DVector<f64>) -> DVector<f64> {
    let mut best = 0;
    for (i, v) in u.iter().enumerate() {
        if v.abs() > u[best].abs() {
            best = i;
        }
    }
    if !u.is_empty() && u[best] < 0.0 {
        -u
    } else {
        u.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Relative tolerance, scaled by the mean per-coordinate variance of the data.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { restarts: 10, max_iters: 300, tol: 1e-4, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileSet {
    /// Unit-norm cluster centers.
    pub vectors: Vec<Vec<f64>>,
    pub members_per_cluster: Vec<usize>,
    /// Final kMeans objective (before projecting centers to the sphere).
    pub inertia: f64,
}

impl ProfileSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, j: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.vectors[j])
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        let cols: Vec<DVector<f64>> = (0..self.len()).map(|j| self.vector(j)).collect();
        nalgebra::DMatrix::from_columns(&cols)
    }
}

/// Outcome of a single Lloyd run.
#[derive(Clone, Debug)]
pub struct LloydRun {
    pub centers: Vec<DVector<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub history: Vec<f64>,
}

fn sq_dist(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &DVector<f64>, centers: &[DVector<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Greedy kMeans++ seeding with `2 + ⌊ln k⌋` local trials per center.
fn kmeanspp<R: Rng>(points: &[DVector<f64>], k: usize, r: &mut R) -> Vec<DVector<f64>> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centers = vec![points[r.random_range(0..n)].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = closest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let idx = if total > 0.0 {
                let mut target = r.random::<f64>() * total;
                let mut pick = n - 1;
                for (i, &c) in closest.iter().enumerate() {
                    if target < c {
                        pick = i;
                        break;
                    }
                    target -= c;
                }
                pick
            } else {
                r.random_range(0..n)
            };
            let updated: Vec<f64> =
                points.iter().zip(&closest).map(|(p, &c)| c.min(sq_dist(p, &points[idx]))).collect();
            let pot: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|b| pot < b.0) {
                best = Some((pot, idx, updated));
            }
        }
        let (_, idx, updated) = best.expect("at least one trial");
        centers.push(points[idx].clone());
        closest = updated;
    }
    centers
}

/// Lloyd iterations from the given centers.
pub fn lloyd(points: &[DVector<f64>], mut centers: Vec<DVector<f64>>, max_iters: usize, tol_abs: f64) -> LloydRun {
    let k = centers.len();
    let dim = points[0].len();
    let mut labels = vec![0; points.len()];
    let mut history = Vec::new();
    for _ in 0..max_iters {
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (l, d) = nearest(p, &centers);
            labels[i] = l;
            inertia += d;
        }
        history.push(inertia);
        let mut sums = vec![DVector::<f64>::zeros(dim); k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l] += p;
            counts[l] += 1;
        }
        // Empty clusters take the point farthest from its current center.
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[labels[a]])
                            .total_cmp(&sq_dist(&points[b], &centers[labels[b]]))
                            .then(b.cmp(&a))
                    })
                    .expect("non-empty input");
                let old = labels[far];
                sums[old] -= &points[far];
                counts[old] -= 1;
                labels[far] = c;
                sums[c] = points[far].clone();
                counts[c] = 1;
            }
        }
        let new_centers: Vec<DVector<f64>> = sums.into_iter().zip(&counts).map(|(s, &n)| s / n.max(1) as f64).collect();
        let shift: f64 = new_centers.iter().zip(&centers).map(|(a, b)| sq_dist(a, b)).sum();
        centers = new_centers;
        if shift <= tol_abs {
            break;
        }
    }
    let mut inertia = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (l, d) = nearest(p, &centers);
        labels[i] = l;
        inertia += d;
    }
    history.push(inertia);
    LloydRun { centers, labels, inertia, history }
}

/// Sign-canonicalizes the candidates, clusters them into `k` groups with the best of
/// `cfg.restarts` kMeans++ runs, and projects the centers onto the unit sphere.
///
/// Candidates are sorted before clustering, so the result does not depend on their
/// input order.
pub fn cluster_profiles(candidates: &[DVector<f64>], k: usize, cfg: &KMeansConfig) -> Result<ProfileSet> {
    if k == 0 || candidates.len() < k {
        return Err(Error::TooFewCandidates { needed: k.max(1), got: candidates.len() });
    }
    let mut points: Vec<DVector<f64>> = candidates.iter().map(canonicalize_sign).collect();
    points.sort_by(|a, b| {
        a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let dim = points[0].len();
    let mean = points.iter().fold(DVector::zeros(dim), |acc, p| acc + p) / points.len() as f64;
    let var: f64 = points.iter().map(|p| sq_dist(p, &mean)).sum::<f64>() / (points.len() * dim) as f64;
    let tol_abs = cfg.tol * var;

    let mut best: Option<LloydRun> = None;
    for restart in 0..cfg.restarts.max(1) {
        let mut r = rng::stream(cfg.seed, "kmeans", restart as u64);
        let init = kmeanspp(&points, k, &mut r);
        let run = lloyd(&points, init, cfg.max_iters.max(1), tol_abs);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let mut members = vec![0; k];
    for &l in &best.labels {
        members[l] += 1;
    }
    let vectors = best
        .centers
        .iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 { c / n } else { c.clone() }.as_slice().to_vec()
        })
        .collect();
    Ok(ProfileSet { vectors, members_per_cluster: members, inertia: best.inertia })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn sign_canonicalization() {
        assert_eq!(canonicalize_sign(&v(&[-0.8, 0.6])), v(&[0.8, -0.6]));
        assert_eq!(canonicalize_sign(&v(&[0.6, 0.8])), v(&[0.6, 0.8]));
        // Tie between |−0.6| and |0.6|: the first index decides.
        assert_eq!(canonicalize_sign(&v(&[-0.6, 0.6, 0.5])), v(&[0.6, -0.6, -0.5]));
        for x in [v(&[-0.3, 0.1, -0.9]), v(&[0.0, -1.0]), v(&[0.5, 0.5])] {
            let once = canonicalize_sign(&x);
            assert_eq!(canonicalize_sign(&once), once);
        }
    }

    fn matched(centers: &ProfileSet, truth: &[DVector<f64>], tol: f64) -> bool {
        truth.iter().all(|t| (0..centers.len()).any(|j| (centers.vector(j) - canonicalize_sign(t)).norm() < tol))
    }

    #[test]
    fn one_candidate_per_cluster_returns_inputs() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let truth = vec![v(&[1.0, 0.0, 0.0]), v(&[0.0, -1.0, 0.0]), v(&[s, 0.0, s])];
        let set = cluster_profiles(&truth, 3, &KMeansConfig::default()).unwrap();
        assert!(matched(&set, &truth, 1e-12));
        assert_eq!(set.members_per_cluster.iter().sum::<usize>(), 3);
        let doubled: Vec<_> = truth.iter().chain(truth.iter()).cloned().collect();
        let set2 = cluster_profiles(&doubled, 3, &KMeansConfig::default()).unwrap();
        assert!(matched(&set2, &truth, 1e-12));
    }

    #[test]
    fn opposite_signs_share_a_cluster() {
        let pts = vec![v(&[1.0, 0.01]), v(&[-1.0, 0.0]), v(&[0.0, 1.0]), v(&[0.01, -1.0])];
        let set = cluster_profiles(&pts, 2, &KMeansConfig::default()).unwrap();
        assert_eq!(set.members_per_cluster, vec![2, 2]);
    }

    #[test]
    fn too_few_candidates() {
        let err = cluster_profiles(&[v(&[1.0, 0.0])], 2, &KMeansConfig::default()).unwrap_err();
        assert!(matches!(err, Error::TooFewCandidates { needed: 2, got: 1 }));
    }

    #[test]
    fn lloyd_inertia_never_increases() {
        let pts: Vec<_> = (0..40).map(|i| v(&[((i * 7) % 13) as f64 / 13.0, ((i * 5) % 11) as f64 / 11.0])).collect();
        let init = pts[0..4].to_vec();
        let run = lloyd(&pts, init, 100, 0.0);
        for w in run.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}
