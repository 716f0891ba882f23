// Runs every stage on a generated network and prints the per-run report.

use nnident::harness::{run_pipeline, PipelineConfig, Scenario};
use nnident::refit::FitConfig;
use nnident::Activation;

fn main() -> nnident::Result<()> {
    let cfg = PipelineConfig {
        m_x: 300,
        restarts: 300,
        refit: true,
        fit: FitConfig { iters: 2_000, ..FitConfig::default() },
        m_test: 2_000,
        ..PipelineConfig::default()
    };
    let run = run_pipeline(&Scenario::pod(Activation::ShiftedSigmoid, 10, 3, 0), &cfg)?;
    let r = &run.report;
    println!("{}: {} of {} candidates near rank-1", r.architecture, r.n_near_rank1, r.n_candidates);
    println!("R_a = {:?}, R_v = {:?}, FP = {:?}", r.recov_a, r.recov_v, r.fp_rate);
    println!("L1 = {:?}, L2 = {:?}, MSE = {:?}", r.l1, r.l2, r.mse);
    println!("{} queries (budget {})", r.query_count, cfg.expected_queries(10, 10, 3)?);
    Ok(())
}
