// Repeats a small scenario over a few seeds and writes CSV, JSON and plot tables.

use nnident::harness::{bench, emit_report, PipelineConfig, ReportFormat, Scenario};
use nnident::Activation;

fn main() -> nnident::Result<()> {
    let cfg = PipelineConfig { m_x: 150, restarts: 150, ..PipelineConfig::default() };
    let scenarios = [Scenario::pod(Activation::ShiftedSigmoid, 8, 2, 0), Scenario::pod(Activation::Tanh, 8, 4, 0)];
    let mut reports = Vec::new();
    for (s, r) in bench(&scenarios, &cfg, 2) {
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => eprintln!("seed {} failed: {e}", s.seed),
        }
    }
    let dir = std::env::temp_dir().join("nnident-example-report");
    for path in emit_report(&reports, &dir, &[ReportFormat::Csv, ReportFormat::Json, ReportFormat::Plot])? {
        println!("wrote {}", path.display());
    }
    print!("{}", std::fs::read_to_string(dir.join("reports.csv"))?);
    Ok(())
}
