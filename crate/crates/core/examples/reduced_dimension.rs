// Input dimension above the first-layer width: the pipeline first finds span(A) from
// gradients and then works in those coordinates.

use nnident::harness::{run_pipeline, PipelineConfig, Scenario};
use nnident::Activation;

fn main() -> nnident::Result<()> {
    let scenario = Scenario { d: Some(16), ..Scenario::pod(Activation::Tanh, 8, 2, 3) };
    let cfg = PipelineConfig { m_x: 200, restarts: 200, reduce: true, ..PipelineConfig::default() };
    let run = run_pipeline(&scenario, &cfg)?;
    let q = run.recovery.reduction.as_ref().expect("reduction requested");
    println!("active subspace basis {}x{}", q.nrows(), q.ncols());
    println!("R_a = {:?}, R_v = {:?}, L1 = {:?}", run.report.recov_a, run.report.recov_v, run.report.l1);
    Ok(())
}
