//! Per-path random streams make results independent of the thread count.

use incentive_duality::mc::{estimate, par_map_paths, RngPlan};
use rand::Rng;
use rand_distr::StandardNormal;

fn run(threads: usize) -> f64 {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| {
        let v = par_map_paths(RngPlan::new(99), 100_000, |_, rng| rng.sample::<f64, _>(StandardNormal).exp());
        estimate(&v, "E[exp(N)]", 99).expect("non-empty").mean
    })
}

fn main() {
    for t in [1, 4, 8] {
        println!("{t} threads: {:.17} (bits {:016x})", run(t), run(t).to_bits());
    }
}
