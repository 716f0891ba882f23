//! Command-line front end. Every flag can also be set in a TOML file passed with
//! `--config`; flags win over the file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use nnident::attribution::LayerAssignment;
use nnident::cluster::ProfileSet;
use nnident::harness::config::RunConfig;
use nnident::harness::metrics::{emit_report, load_reports, mean_row, ReportFormat};
use nnident::harness::pipeline::{attribute, bench, recover, refit_stage, split_profiles, working_oracle};
use nnident::harness::scenario::{generate_network, Scenario, WeightDesign};
use nnident::refit::refit_metrics;
use nnident::{Activation, Error, QueryOracle, Result, TwoLayerNetwork};

#[derive(Parser)]
#[command(name = "nnident", version, about = "Identify two-hidden-layer networks from point queries")]
struct Cli {
    /// TOML config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network from a scenario and write it as JSON.
    Gen {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Recover neuron profiles from an oracle.
    Recover {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Split recovered profiles into first and second layer.
    Attribute {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Output of `recover`.
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Fit the remaining scalings and biases.
    Refit {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        profiles: PathBuf,
        /// Output of `attribute`.
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long, value_enum)]
        activation: Option<ActivationArg>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run the full pipeline on generated networks over architectures and repetitions.
    Bench {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Repetitions per architecture.
        #[arg(long)]
        reps: Option<usize>,
        /// Comma-separated `m0xm1` list, e.g. `30x3,30x9`.
        #[arg(long)]
        arch: Option<String>,
        /// Output directory for reports.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Re-emit CSV/plot data from a `reports.json` and print the means.
    Report {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "csv,json,plot")]
        format: Vec<FormatArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ActivationArg {
    Sigmoid,
    Tanh,
}

impl From<ActivationArg> for Activation {
    fn from(a: ActivationArg) -> Self {
        match a {
            ActivationArg::Sigmoid => Activation::ShiftedSigmoid,
            ActivationArg::Tanh => Activation::Tanh,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignArg {
    Pod,
    Sphere,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    /// Unit sphere.
    Sphere,
    /// Sphere of radius `--radius` (default √m0).
    Scaled,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Plot,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum)]
    activation: Option<ActivationArg>,
    #[arg(long, value_enum)]
    design: Option<DesignArg>,
    /// Orthogonality defect target of the perturbed design.
    #[arg(long)]
    target: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    bias_std: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn apply(&self, s: &mut Scenario) {
        if let Some(a) = self.activation {
            s.activation = a.into();
        }
        let target = match s.weight_design {
            WeightDesign::PerturbedOrthogonal { target } => target,
            WeightDesign::UnitSphere => 0.3,
        };
        match self.design {
            Some(DesignArg::Sphere) => s.weight_design = WeightDesign::UnitSphere,
            Some(DesignArg::Pod) => s.weight_design = WeightDesign::PerturbedOrthogonal { target },
            None => {}
        }
        if let (Some(t), WeightDesign::PerturbedOrthogonal { .. }) = (self.target, s.weight_design) {
            s.weight_design = WeightDesign::PerturbedOrthogonal { target: t };
        }
        s.d = self.d.or(s.d);
        s.m0 = self.m0.unwrap_or(s.m0);
        s.m1 = self.m1.unwrap_or(s.m1);
        s.bias_std = self.bias_std.unwrap_or(s.bias_std);
        s.seed = self.seed.unwrap_or(s.seed);
    }
}

/// Where queries go: a network file, either directly or as `--oracle file:<path>`.
#[derive(Args)]
struct SourceArgs {
    /// Oracle selector, e.g. `file:net.json`.
    #[arg(long, conflicts_with = "net")]
    oracle: Option<String>,
    /// Network JSON (same as `--oracle file:<path>`).
    #[arg(long)]
    net: Option<PathBuf>,
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SourceArgs {
    fn path(&self) -> Result<PathBuf> {
        match (&self.net, &self.oracle) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(spec)) => match spec.split_once(':') {
                Some(("file", p)) => Ok(PathBuf::from(p)),
                _ => Err(Error::InvalidConfig(format!("unknown oracle `{spec}` (expected file:<path>)"))),
            },
            (None, None) => Err(Error::InvalidConfig("need --net or --oracle".into())),
        }
    }

    /// Oracle plus the network itself (used for widths, activation and evaluation).
    fn open(&self) -> Result<(Arc<QueryOracle>, TwoLayerNetwork)> {
        let net = TwoLayerNetwork::load(self.path()?)?;
        Ok((Arc::new(QueryOracle::from_network(net.clone())), net))
    }
}

#[derive(Args)]
struct PipelineArgs {
    /// Number of Hessian locations.
    #[arg(long)]
    mx: Option<usize>,
    /// Finite-difference step.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum)]
    dist: Option<DistArg>,
    #[arg(long)]
    radius: Option<f64>,
    /// Rank-1 ascent restarts `K`.
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    cluster_restarts: Option<usize>,
    /// Error-measure threshold `T`.
    #[arg(long)]
    threshold: Option<f64>,
    /// Attribution grid `lo:hi:step`.
    #[arg(long, allow_hyphen_values = true)]
    traj_grid: Option<String>,
    #[arg(long)]
    refit: Option<bool>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    mf_mult: Option<usize>,
    /// Keep `D₃ = I` for odd activations.
    #[arg(long)]
    fix_d3: Option<bool>,
    #[arg(long)]
    m_test: Option<usize>,
    #[arg(long)]
    reduce: Option<bool>,
}

impl PipelineArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let p = &mut cfg.pipeline;
        p.m_x = self.mx.unwrap_or(p.m_x);
        p.epsilon = self.eps.unwrap_or(p.epsilon);
        match self.dist {
            Some(DistArg::Sphere) => p.sample_radius = Some(1.0),
            Some(DistArg::Scaled) => p.sample_radius = self.radius,
            None => p.sample_radius = self.radius.or(p.sample_radius),
        }
        p.restarts = self.restarts.unwrap_or(p.restarts);
        p.rank1.gamma = self.gamma.unwrap_or(p.rank1.gamma);
        p.rank1.tol = self.tol.unwrap_or(p.rank1.tol);
        p.rank1.max_iters = self.max_iters.unwrap_or(p.rank1.max_iters);
        p.kmeans.restarts = self.cluster_restarts.unwrap_or(p.kmeans.restarts);
        p.threshold = self.threshold.unwrap_or(p.threshold);
        if let Some(g) = &self.traj_grid {
            p.traj_grid = g.clone();
        }
        p.refit = self.refit.unwrap_or(p.refit);
        p.fit.lr = self.lr.or(p.fit.lr);
        p.fit.iters = self.iters.unwrap_or(p.fit.iters);
        p.mf_mult = self.mf_mult.unwrap_or(p.mf_mult);
        if let Some(f) = self.fix_d3 {
            p.fit.optimize_d3 = !f;
        }
        p.m_test = self.m_test.unwrap_or(p.m_test);
        p.reduce = self.reduce.unwrap_or(p.reduce);
    }
}

/// Output of `recover`.
#[derive(Serialize, Deserialize)]
struct RecoverFile {
    m0: usize,
    m1: usize,
    /// Profiles in working coordinates (reduced when `reduction` is set).
    profiles: ProfileSet,
    /// Columns of the active-subspace basis.
    reduction: Option<Vec<Vec<f64>>>,
    /// Profiles mapped to the input space, one per entry.
    profiles_input_space: Vec<Vec<f64>>,
    alpha_hat: f64,
    n_near_rank1: usize,
    n_candidates: usize,
    query_count: u64,
}

impl RecoverFile {
    fn reduction(&self) -> Option<DMatrix<f64>> {
        self.reduction.as_ref().map(|cols| {
            let d = cols.first().map_or(0, Vec::len);
            DMatrix::from_fn(d, cols.len(), |r, c| cols[c][r])
        })
    }
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().copied().collect()).collect()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn parse_arch(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(|item| {
            let (a, b) = item
                .trim()
                .split_once('x')
                .ok_or_else(|| Error::InvalidConfig(format!("architecture `{item}` is not m0xm1")))?;
            let num = |v: &str| v.parse::<usize>().map_err(|e| Error::InvalidConfig(format!("`{v}`: {e}")));
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Gen { scenario, out } => {
            scenario.apply(&mut cfg.scenario);
            let net = generate_network(&cfg.scenario)?;
            net.save(&out)?;
            println!("wrote {} (d={}, m0={}, m1={})", out.display(), net.d(), net.m0(), net.m1());
        }
        Command::Recover { source, pipeline, out } => {
            pipeline.apply(&mut cfg);
            let (oracle, net) = source.open()?;
            let (m0, m1) = (source.m0.unwrap_or(net.m0()), source.m1.unwrap_or(net.m1()));
            let rec = recover(&oracle, m0, m1, &cfg.pipeline, source.seed.unwrap_or(cfg.scenario.seed))?;
            let file = RecoverFile {
                m0,
                m1,
                profiles: rec.profiles.clone(),
                reduction: rec.reduction.as_ref().map(columns),
                profiles_input_space: columns(&rec.profiles_in_input_space()),
                alpha_hat: rec.w_hat.alpha_hat,
                n_near_rank1: rec.near_rank1(),
                n_candidates: rec.candidates.len(),
                query_count: oracle.query_count(),
            };
            write_json(&out, &file)?;
            println!(
                "{} profiles from {}/{} near rank-1 candidates, {} queries -> {}",
                file.profiles.len(),
                file.n_near_rank1,
                file.n_candidates,
                file.query_count,
                out.display()
            );
        }
        Command::Attribute { source, pipeline, profiles, out } => {
            pipeline.apply(&mut cfg);
            let (oracle, _) = source.open()?;
            let rec: RecoverFile = read_json(&profiles)?;
            let work = working_oracle(&oracle, rec.reduction().as_ref());
            let assignment = attribute(&work, &rec.profiles, source.m0.unwrap_or(rec.m0), &cfg.pipeline)?;
            write_json(&out, &assignment)?;
            println!("layer 1: {:?}\nlayer 2: {:?}", assignment.layer1_indices, assignment.layer2_indices);
        }
        Command::Refit { source, pipeline, profiles, assignment, activation, out } => {
            pipeline.apply(&mut cfg);
            let (oracle, net) = source.open()?;
            let rec: RecoverFile = read_json(&profiles)?;
            let assignment: LayerAssignment = read_json(&assignment)?;
            let reduction = rec.reduction();
            let work = working_oracle(&oracle, reduction.as_ref());
            let (a_hat, v_hat) = split_profiles(&rec.profiles, &assignment);
            let act = activation.map(Activation::from).unwrap_or(net.activation());
            let seed = source.seed.unwrap_or(cfg.scenario.seed);
            let (problem, outcome) = refit_stage(&work, a_hat, v_hat, act, &cfg.pipeline, seed)?;
            write_json(&out, &outcome.params)?;
            println!("{} iterations, final loss {:e}", outcome.iters, outcome.final_loss());
            if reduction.is_none() {
                let m = refit_metrics(&problem, &outcome.params, &net, cfg.pipeline.m_test, seed)?;
                println!("{}", serde_json::to_string_pretty(&m)?);
            }
        }
        Command::Bench { scenario, pipeline, reps, arch, out } => {
            scenario.apply(&mut cfg.scenario);
            pipeline.apply(&mut cfg);
            if let Some(a) = arch {
                cfg.bench.architectures = parse_arch(&a)?;
            }
            let reps = reps.unwrap_or(cfg.bench.repetitions);
            let scenarios: Vec<Scenario> =
                cfg.bench.architectures.iter().map(|&(m0, m1)| Scenario { m0, m1, ..cfg.scenario.clone() }).collect();
            let mut reports = Vec::new();
            for (s, r) in bench(&scenarios, &cfg.pipeline, reps) {
                match r {
                    Ok(rep) => reports.push(rep),
                    Err(e) => eprintln!("{}x{} seed {}: {e}", s.m0, s.m1, s.seed),
                }
            }
            let paths = emit_report(&reports, &out, &[ReportFormat::Csv, ReportFormat::Json, ReportFormat::Plot])?;
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Command::Report { input, out, format } => {
            let reports = load_reports(&input)?;
            for (name, v) in mean_row(&reports) {
                if let Some(v) = v {
                    println!("{name:>24} {v:.6e}");
                }
            }
            if let Some(dir) = out {
                let formats: Vec<ReportFormat> = format
                    .into_iter()
                    .map(|f| match f {
                        FormatArg::Csv => ReportFormat::Csv,
                        FormatArg::Json => ReportFormat::Json,
                        FormatArg::Plot => ReportFormat::Plot,
                    })
                    .collect();
                emit_report(&reports, &dir, &formats)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
