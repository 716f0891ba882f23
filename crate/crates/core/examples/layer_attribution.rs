// Splits profiles into layers by the gradient energy along the line t ↦ t·w.

use nnident::attribution::{assign_layers, ground_truth_labels, success_rates, trajectory_energies, TrajectoryConfig};
use nnident::harness::{generate_network, Scenario};
use nnident::{Activation, QueryOracle};

fn main() -> nnident::Result<()> {
    let net = generate_network(&Scenario::pod(Activation::ShiftedSigmoid, 10, 3, 2))?;
    let profiles = net.profiles()?;
    let labels = ground_truth_labels(&profiles, &net)?;
    let oracle = QueryOracle::from_network(net);
    let cfg: TrajectoryConfig = "-19:20:1".parse()?;
    let energies = trajectory_energies(&oracle, &profiles, &cfg);
    for (e, l) in energies.iter().zip(&labels) {
        println!("layer {l}: energy {e:.4e}");
    }
    let assignment = assign_layers(&energies, 10)?;
    let (l1, l2) = success_rates(&assignment, &labels);
    println!("L1 = {l1:.2}, L2 = {l2:.2}");
    Ok(())
}
