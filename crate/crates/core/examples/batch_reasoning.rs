//! Row-at-a-time versus bit-parallel consistency checks.
//!
//! ```text
//! cargo run --release --example batch_reasoning
//! ```

use dlcircuit::datagen::{generate_ontology, rng_from_seed, GenConfig};
use dlcircuit::fixtures::bench_reasoning;
use dlcircuit::pipeline::{compile_ontology, CompileOptions};

fn main() -> dlcircuit::Result<()> {
    let cfg = GenConfig {
        n_concepts: 10,
        n_roles: 5,
        p_domain: 0.5,
        p_range: 0.5,
        p_disjoint: 1.0,
        seed: 0,
    };
    let co = compile_ontology(&generate_ontology(&cfg)?, &CompileOptions::default())?;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut rng = rng_from_seed(0);
    println!("{:>9} {:>14} {:>14} {:>8}", "rows", "scalar/s", "batch/s", "speedup");
    for rows in [1_000, 10_000, 100_000, 1_000_000] {
        let p = bench_reasoning(&co.circuit, rows, 3, threads, &mut rng)?;
        assert!(p.identical);
        println!(
            "{:>9} {:>14.0} {:>14.0} {:>8.1}",
            rows, p.scalar_rows_per_sec, p.batch_rows_per_sec, p.speedup
        );
    }
    Ok(())
}
