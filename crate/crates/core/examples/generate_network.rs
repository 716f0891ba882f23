// Draws a perturbed-orthogonal network, inspects its profile frame and saves it as JSON.

use nnident::harness::{generate_network, Scenario};
use nnident::network::frame_constants;
use nnident::{Activation, TwoLayerNetwork};

fn main() -> nnident::Result<()> {
    let scenario = Scenario::pod(Activation::ShiftedSigmoid, 12, 3, 7);
    let net = generate_network(&scenario)?;
    let frame = frame_constants(&net.profiles()?);
    println!("d = {}, m0 = {}, m1 = {}", net.d(), net.m0(), net.m1());
    println!("profile frame bounds [{:.3}, {:.3}], nu = {:.3}", frame.lower, frame.upper, frame.nu);

    let path = std::env::temp_dir().join("nnident-example-net.json");
    net.save(&path)?;
    let back = TwoLayerNetwork::load(&path)?;
    let x = nalgebra::DVector::from_element(12, 0.1);
    println!("f(x) = {:.6}, reloaded {:.6}", net.evaluate(&x), back.evaluate(&x));
    Ok(())
}
