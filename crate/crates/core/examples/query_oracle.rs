// Treats a network as a black box and estimates its Hessian from point queries.

use nnident::harness::{generate_network, Scenario};
use nnident::oracle::{fd_hessian, fd_hessian_queries, FdConfig};
use nnident::{Activation, QueryOracle};

fn main() -> nnident::Result<()> {
    let net = generate_network(&Scenario::pod(Activation::Tanh, 8, 2, 1))?;
    let x = nalgebra::DVector::from_fn(8, |i, _| 0.1 * i as f64 - 0.3);
    let exact = net.hessian(&x);
    let oracle = QueryOracle::from_network(net);
    for eps in [1e-3, 1e-4, 1e-5] {
        let est = fd_hessian(&oracle, &x, FdConfig::new(eps)?);
        println!("eps = {eps:.0e}: ‖H − Δ²f‖_F = {:.3e}", (est - &exact).norm());
    }
    println!("{} queries, {} per Hessian", oracle.query_count(), fd_hessian_queries(8));

    // Any function of the right dimension can stand in for a network.
    let quad = QueryOracle::from_fn(3, |x| x[0] * x[1] + x[2] * x[2]);
    println!("{:.4}", fd_hessian(&quad, &nalgebra::DVector::zeros(3), FdConfig::default()));
    Ok(())
}
