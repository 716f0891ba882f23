// Estimates the matrix space W spanned by a_i ⊗ a_i and v_ℓ ⊗ v_ℓ from sampled Hessians.

use nnident::harness::{generate_network, Scenario};
use nnident::oracle::FdConfig;
use nnident::subspace::{approximate_w, exact_w, subspace_distance, SampleDistribution};
use nnident::{Activation, QueryOracle};

fn main() -> nnident::Result<()> {
    let net = generate_network(&Scenario::pod(Activation::ShiftedSigmoid, 10, 3, 3))?;
    let truth = exact_w(&net)?;
    let oracle = QueryOracle::from_network(net);
    for m_x in [50, 200, 800] {
        let dist = SampleDistribution::default_for(10, 0);
        let est = approximate_w(&oracle, 10, 3, m_x, FdConfig::default(), &dist)?;
        let delta = subspace_distance(&est.subspace, &truth)?;
        println!("m_X = {m_x:4}: ‖P_Ŵ − P_W‖²_F/(m0+m1) = {:.4}, alpha = {:.2e}", delta * delta / 13.0, est.alpha_hat);
    }
    println!("total queries {}", oracle.query_count());
    Ok(())
}
