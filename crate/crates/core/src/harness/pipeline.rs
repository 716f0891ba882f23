//! End-to-end identification: Hessian PCA, rank-1 ascent, clustering, attribution
//! and refit, with evaluation against a known network.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{error_measures, ErrorMeasures, MetricsReport};
use super::scenario::{generate_network, Scenario, WeightDesign};
use crate::activation::Activation;
use crate::attribution::{
    assign_layers, ground_truth_labels, success_rates, trajectory_energies, LayerAssignment, TrajectoryConfig,
};
use crate::cluster::{cluster_profiles, KMeansConfig, ProfileSet};
use crate::error::{Error, Result};
use crate::network::{frame_constants, riesz_constants, TwoLayerNetwork};
use crate::oracle::{FdConfig, QueryOracle};
use crate::rank1::{recover_candidates, Candidate, CandidateStatus, Rank1Config};
use crate::refit::{fit, refit_metrics, FitConfig, FitOutcome, RefitMetrics, RefitProblem};
use crate::rng::derive_seed;
use crate::subspace::{
    active_subspace_basis, approximate_w, exact_w_from_profiles, subspace_distance, SampleDistribution, SampleKind,
    WEstimate,
};

/// Every tunable of the pipeline. Field names double as config-file keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Number of Hessian locations.
    pub m_x: usize,
    /// Finite-difference step.
    pub epsilon: f64,
    /// Radius of the sampling sphere; `None` means `√m0`.
    pub sample_radius: Option<f64>,
    /// Number of rank-1 ascent runs `K`.
    pub restarts: usize,
    pub rank1: Rank1Config,
    /// Seeds are derived from the run seed; the `seed` field is ignored.
    pub kmeans: KMeansConfig,
    /// Threshold `T` of the error measures.
    pub threshold: f64,
    /// Attribution grid as `lo:hi:step`.
    pub traj_grid: String,
    pub refit: bool,
    /// Seeds are derived from the run seed; the `seed` field is ignored.
    pub fit: FitConfig,
    /// `m_f = mf_mult · (m0 + m1)`
    pub mf_mult: usize,
    pub m_test: usize,
    /// Work in the estimated active subspace (needed when `d > m0`).
    pub reduce: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            m_x: 1000,
            epsilon: 1e-5,
            sample_radius: None,
            restarts: 1000,
            rank1: Rank1Config::default(),
            kmeans: KMeansConfig::default(),
            threshold: 0.05,
            traj_grid: "-19:20:1".into(),
            refit: false,
            fit: FitConfig::default(),
            mf_mult: 10,
            m_test: 50_000,
            reduce: false,
        }
    }
}

impl PipelineConfig {
    pub fn fd(&self) -> Result<FdConfig> {
        FdConfig::new(self.epsilon)
    }

    pub fn trajectory(&self) -> Result<TrajectoryConfig> {
        Ok(self.traj_grid.parse::<TrajectoryConfig>()?.with_fd(self.fd()?))
    }

    pub fn validate(&self) -> Result<()> {
        self.fd()?;
        self.trajectory()?;
        self.rank1.validate()?;
        if self.restarts == 0 || self.m_x == 0 || self.mf_mult == 0 || self.m_test == 0 {
            return Err(Error::InvalidConfig("m_x, restarts, mf_mult and m_test must be positive".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidConfig("threshold must be positive".into()));
        }
        Ok(())
    }

    /// Queries issued by the recovery, attribution and refit stages on a `d = m0` run.
    pub fn expected_queries(&self, d: usize, m0: usize, m1: usize) -> Result<u64> {
        let hess = self.m_x as u64 * crate::oracle::fd_hessian_queries(d);
        let attr = (m0 + m1) as u64 * self.trajectory()?.queries_per_profile(d);
        let refit = if self.refit { (self.mf_mult * (m0 + m1)) as u64 } else { 0 };
        Ok(hess + attr + refit)
    }
}

/// Output of the recovery stages on an oracle.
#[derive(Clone, Debug)]
pub struct Recovery {
    /// Orthonormal basis of the active subspace when the run was reduced.
    pub reduction: Option<DMatrix<f64>>,
    pub w_hat: WEstimate,
    pub candidates: Vec<Candidate>,
    /// Profiles in the working coordinates (reduced if `reduction` is set).
    pub profiles: ProfileSet,
}

impl Recovery {
    /// Profiles as columns, mapped back to the input space.
    pub fn profiles_in_input_space(&self) -> DMatrix<f64> {
        let p = self.profiles.to_matrix();
        match &self.reduction {
            Some(q) => {
                let mut full = q * p;
                for mut c in full.column_iter_mut() {
                    let n = c.norm();
                    c /= n;
                }
                full
            }
            None => p,
        }
    }

    pub fn near_rank1(&self) -> usize {
        self.candidates.iter().filter(|c| c.status == CandidateStatus::NearRank1).count()
    }
}

/// Oracle the later stages work on: the input oracle or its active-subspace restriction.
pub fn working_oracle(oracle: &Arc<QueryOracle>, reduction: Option<&DMatrix<f64>>) -> Arc<QueryOracle> {
    match reduction {
        Some(q) => Arc::new(oracle.reduced(q.clone())),
        None => Arc::clone(oracle),
    }
}

/// Hessian PCA → `K` rank-1 ascents → clustering of the near rank-1 limits.
pub fn recover(oracle: &Arc<QueryOracle>, m0: usize, m1: usize, cfg: &PipelineConfig, seed: u64) -> Result<Recovery> {
    cfg.validate()?;
    let fd = cfg.fd()?;
    let reduction = if cfg.reduce {
        Some(
            active_subspace_basis(oracle, m0, cfg.m_x, fd, derive_seed(seed, "active-subspace", 0))
                .map_err(|e| e.in_stage("active subspace"))?,
        )
    } else {
        None
    };
    let work = working_oracle(oracle, reduction.as_ref());
    let radius = cfg.sample_radius.unwrap_or((m0 as f64).sqrt());
    let dist = SampleDistribution::new(SampleKind::ScaledSphere(radius), derive_seed(seed, "hessian-sampling", 0))?;
    let w_hat = approximate_w(&work, m0, m1, cfg.m_x, fd, &dist).map_err(|e| e.in_stage("subspace"))?;
    let candidates = recover_candidates(&w_hat.subspace, &cfg.rank1, cfg.restarts, derive_seed(seed, "rank1", 0))
        .map_err(|e| e.in_stage("rank1"))?;
    let near: Vec<_> =
        candidates.iter().filter(|c| c.status == CandidateStatus::NearRank1).map(Candidate::vector).collect();
    let kcfg = KMeansConfig { seed: derive_seed(seed, "cluster", 0), ..cfg.kmeans };
    let profiles = cluster_profiles(&near, m0 + m1, &kcfg).map_err(|e| e.in_stage("cluster"))?;
    Ok(Recovery { reduction, w_hat, candidates, profiles })
}

/// Trajectory energies of the recovered profiles and the resulting layer split.
pub fn attribute(
    work: &QueryOracle,
    profiles: &ProfileSet,
    m0: usize,
    cfg: &PipelineConfig,
) -> Result<LayerAssignment> {
    let traj = cfg.trajectory()?;
    let energies = trajectory_energies(work, &profiles.to_matrix(), &traj);
    assign_layers(&energies, m0).map_err(|e| e.in_stage("attribution"))
}

/// `(Â, V̂)` from the layer split, columns in index order.
pub fn split_profiles(profiles: &ProfileSet, assignment: &LayerAssignment) -> (DMatrix<f64>, DMatrix<f64>) {
    let pick = |idx: &[usize]| DMatrix::from_columns(&idx.iter().map(|&j| profiles.vector(j)).collect::<Vec<_>>());
    (pick(&assignment.layer1_indices), pick(&assignment.layer2_indices))
}

/// Samples `m_f` labelled points and fits the deparametrized surrogate.
pub fn refit_stage(
    work: &QueryOracle,
    a_hat: DMatrix<f64>,
    v_hat: DMatrix<f64>,
    activation: Activation,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<(RefitProblem, FitOutcome)> {
    let m_f = cfg.mf_mult * (a_hat.ncols() + v_hat.ncols());
    let problem = RefitProblem::sample(work, a_hat, v_hat, activation, m_f, derive_seed(seed, "refit-data", 0))
        .map_err(|e| e.in_stage("refit"))?;
    let fcfg = FitConfig { seed: derive_seed(seed, "refit-init", 0), ..cfg.fit.clone() };
    let outcome = fit(&problem, &fcfg, None).map_err(|e| e.in_stage("refit"))?;
    Ok((problem, outcome))
}

/// Artifacts of a full run on a generated network.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub network: TwoLayerNetwork,
    pub recovery: Recovery,
    pub errors: ErrorMeasures,
    pub assignment: LayerAssignment,
    pub refit: Option<(FitOutcome, RefitMetrics)>,
    pub report: MetricsReport,
}

pub fn architecture_label(s: &Scenario) -> String {
    let design = match s.weight_design {
        WeightDesign::PerturbedOrthogonal { .. } => "pod",
        WeightDesign::UnitSphere => "sphere",
    };
    let act = match s.activation {
        Activation::ShiftedSigmoid => "sig",
        Activation::Tanh => "tanh",
    };
    format!("{design}/{act}/{}x{}", s.m0, s.m1)
}

/// Generates the scenario's network and runs every stage on it. All randomness is
/// derived from `scenario.seed`.
pub fn run_pipeline(scenario: &Scenario, cfg: &PipelineConfig) -> Result<PipelineRun> {
    let start = Instant::now();
    let net = generate_network(scenario).map_err(|e| e.in_stage("generate"))?;
    let oracle = Arc::new(QueryOracle::from_network(net.clone()));
    let seed = scenario.seed;
    let (m0, m1) = (net.m0(), net.m1());

    let recovery = recover(&oracle, m0, m1, cfg, seed)?;
    let work = working_oracle(&oracle, recovery.reduction.as_ref());
    let truth = net.profiles()?;
    let exact = match &recovery.reduction {
        Some(q) => {
            let mut t = q.tr_mul(&truth);
            for mut c in t.column_iter_mut() {
                let n = c.norm();
                c /= n;
            }
            exact_w_from_profiles(&t)?
        }
        None => exact_w_from_profiles(&truth)?,
    };
    let delta = subspace_distance(&recovery.w_hat.subspace, &exact)?;
    let full_profiles = recovery.profiles_in_input_space();
    let mut errors = error_measures(&full_profiles, &net, cfg.threshold, None)?;
    errors.proj_err = Some(delta * delta / (m0 + m1) as f64);

    let assignment = attribute(&work, &recovery.profiles, m0, cfg)?;
    let labels = ground_truth_labels(&full_profiles, &net)?;
    let (l1, l2) = success_rates(&assignment, &labels);

    let refit = if cfg.refit {
        let (a_hat, v_hat) = split_profiles(&recovery.profiles, &assignment);
        let (problem, outcome) = refit_stage(&work, a_hat, v_hat, net.activation(), cfg, seed)?;
        let test_seed = derive_seed(seed, "refit-test", 0);
        let metrics = match &recovery.reduction {
            None => refit_metrics(&problem, &outcome.params, &net, cfg.m_test, test_seed)?,
            Some(q) => reduced_refit_metrics(&problem, &outcome, &net, q, cfg.m_test, test_seed)?,
        };
        Some((outcome, metrics))
    } else {
        None
    };

    let frame = frame_constants(&truth);
    let riesz = riesz_constants(&truth).ok();
    let report = MetricsReport {
        architecture: architecture_label(scenario),
        m0,
        m1,
        seed,
        threshold: cfg.threshold,
        proj_error_normalized: errors.proj_err,
        fp_rate: Some(errors.fp_rate),
        recov_a: Some(errors.recov_a),
        recov_v: Some(errors.recov_v),
        l1: Some(l1),
        l2: Some(l2),
        mse: refit.as_ref().map(|r| r.1.mse),
        e_inf: refit.as_ref().map(|r| r.1.e_inf),
        e_theta: refit.as_ref().and_then(|r| r.1.e_theta),
        e_tau: refit.as_ref().and_then(|r| r.1.e_tau),
        trial: Some(errors.is_trial()),
        alpha_hat: Some(recovery.w_hat.alpha_hat),
        delta: Some(delta),
        c_f: Some(frame.lower),
        big_c_f: Some(frame.upper),
        nu: Some(frame.nu),
        c_r: riesz.map(|r| r.lower),
        big_c_r: riesz.map(|r| r.upper),
        n_candidates: recovery.candidates.len(),
        n_near_rank1: recovery.near_rank1(),
        query_count: oracle.query_count(),
        wallclock_secs: start.elapsed().as_secs_f64(),
    };
    Ok(PipelineRun { network: net, recovery, errors, assignment, refit, report })
}

/// Function errors in reduced coordinates against `y ↦ f(Qy)`, evaluated directly on
/// the network. Bias errors are not defined there.
fn reduced_refit_metrics(
    problem: &RefitProblem,
    outcome: &FitOutcome,
    net: &TwoLayerNetwork,
    q: &DMatrix<f64>,
    m_test: usize,
    seed: u64,
) -> Result<RefitMetrics> {
    let (mut num, mut den, mut max_err, mut max_f) = (0.0, 0.0, 0.0f64, 0.0f64);
    for i in 0..m_test {
        let mut r = crate::rng::stream(seed, "refit-test", i as u64);
        let y = crate::rng::gaussian_vector(&mut r, q.ncols(), 1.0);
        let f = net.evaluate(&(q * &y));
        let fh = problem.fhat_eval(&outcome.params, &y)?;
        num += (fh - f) * (fh - f);
        den += f * f;
        max_err = max_err.max((fh - f).abs());
        max_f = max_f.max(f.abs());
    }
    Ok(RefitMetrics { mse: num / den, e_inf: max_err / max_f, e_theta: None, e_tau: None })
}

/// Runs `repetitions` seeds `base_seed, base_seed + 1, …` of each scenario in parallel.
/// Failed runs are returned as errors in place.
pub fn bench(
    scenarios: &[Scenario],
    cfg: &PipelineConfig,
    repetitions: usize,
) -> Vec<(Scenario, Result<MetricsReport>)> {
    let jobs: Vec<Scenario> = scenarios
        .iter()
        .flat_map(|s| (0..repetitions as u64).map(move |k| Scenario { seed: s.seed + k, ..s.clone() }))
        .collect();
    jobs.into_par_iter()
        .map(|s| {
            let r = run_pipeline(&s, cfg).map(|run| run.report);
            (s, r)
        })
        .collect()
}
