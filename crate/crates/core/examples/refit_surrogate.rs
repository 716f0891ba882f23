// Fits the scales and biases of a surrogate network whose weights are known, then checks
// that the closed-form reparametrization reproduces the teacher.

use nnident::harness::{generate_network, Scenario};
use nnident::refit::{
    fit, refit_metrics, verify_reparametrization, ColumnMatching, FitConfig, RefitProblem, Reparametrization,
};
use nnident::{Activation, QueryOracle};

fn main() -> nnident::Result<()> {
    let net = generate_network(&Scenario::pod(Activation::Tanh, 8, 2, 4))?;
    let identity = |n| ColumnMatching { perm: (0..n).collect(), signs: vec![1.0; n] };
    let err = verify_reparametrization(&net, &identity(8), &identity(2), Reparametrization::Standard, 0)?;
    println!("closed-form parameters: max |f - f̂| = {err:.2e}");

    let oracle = QueryOracle::from_network(net.clone());
    let problem = RefitProblem::sample(&oracle, net.a().clone(), net.entangled_weights()?, Activation::Tanh, 100, 1)?;
    let out = fit(&problem, &FitConfig { iters: 5_000, ..FitConfig::default() }, None)?;
    let m = refit_metrics(&problem, &out.params, &net, 2_000, 2)?;
    println!(
        "after {} steps: loss {:.3e}, relative MSE {:.3e}, E_inf {:.3e}",
        out.iters,
        out.final_loss(),
        m.mse,
        m.e_inf
    );
    println!("{}", out.params.to_json()?);
    Ok(())
}
