// Finds rank-1 elements of W by spectral-norm ascent and compares them with the true profiles.

use nnident::harness::{generate_network, Scenario};
use nnident::rank1::{recover_candidates, CandidateStatus, Rank1Config};
use nnident::subspace::exact_w;
use nnident::Activation;

fn main() -> nnident::Result<()> {
    let net = generate_network(&Scenario::pod(Activation::ShiftedSigmoid, 10, 3, 0))?;
    let truth = net.profiles()?;
    let w = exact_w(&net)?;
    let candidates = recover_candidates(&w, &Rank1Config::default(), 20, 0)?;
    for c in &candidates {
        let u = c.vector();
        let dist = truth.column_iter().map(|t| (&u - t).norm().min((&u + t).norm())).fold(f64::INFINITY, f64::min);
        println!(
            "{:?} after {:3} steps: lambda1 = {:.4}, distance to a profile {:.2e}",
            c.status, c.iters, c.lambda1, dist
        );
    }
    let near = candidates.iter().filter(|c| c.status == CandidateStatus::NearRank1).count();
    println!("{near}/{} near rank-1", candidates.len());
    Ok(())
}
