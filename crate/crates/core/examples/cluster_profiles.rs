// Groups noisy, sign-ambiguous candidate vectors into profile estimates with kMeans++.

use nnident::cluster::{cluster_profiles, KMeansConfig};
use nnident::rng;

fn main() -> nnident::Result<()> {
    let mut r = rng::stream(5, "example", 0);
    let centers: Vec<_> = (0..4).map(|_| rng::unit_sphere(&mut r, 6)).collect();
    let mut candidates = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for i in 0..5 + 3 * k {
            let noisy = c + rng::gaussian_vector(&mut r, 6, 0.02);
            candidates.push(if i % 2 == 0 { noisy } else { -noisy });
        }
    }
    let set = cluster_profiles(&candidates, 4, &KMeansConfig::default())?;
    for j in 0..set.len() {
        let v = set.vector(j);
        let err = centers.iter().map(|c| (&v - c).norm().min((&v + c).norm())).fold(f64::INFINITY, f64::min);
        println!("cluster {j}: {} members, {:.3e} from the nearest center", set.members_per_cluster[j], err);
    }
    Ok(())
}
