//! Generate a random ontology, compile it and sample a knowledge graph.
//!
//! ```text
//! cargo run --release --example generate_kg -- [concepts] [roles] [individuals]
//! ```

use dlcircuit::datagen::{generate_ontology, rng_from_seed, sample_individuals, sample_kg, GenConfig};
use dlcircuit::pipeline::{compile_ontology, CompileOptions};

fn main() -> dlcircuit::Result<()> {
    let arg = |i: usize, d: usize| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let cfg = GenConfig {
        n_concepts: arg(1, 10),
        n_roles: arg(2, 5),
        p_domain: 0.5,
        p_range: 0.5,
        p_disjoint: 1.0,
        seed: 0,
    };
    let o = generate_ontology(&cfg)?;
    println!("{}", o.to_dsl());
    let co = compile_ontology(&o, &CompileOptions::default())?;
    println!(
        "# {} domino variables, {} circuit nodes, label width {}",
        co.varmap.total(),
        co.circuit.node_count(),
        co.label_layout.width()
    );

    let mut rng = rng_from_seed(cfg.seed + 1);
    let inds = sample_individuals(&co, arg(3, 100), &mut rng)?;
    let kg = sample_kg(&co, &inds, &mut rng)?;
    let with_role = kg
        .pairs
        .values()
        .filter(|x| co.varmap.role_var_range().any(|v| x[v]))
        .count();
    println!(
        "# {} individuals, {} pairs, {} with at least one role, {} skipped",
        kg.individuals.len(),
        kg.pairs.len(),
        with_role,
        kg.skipped.len()
    );
    Ok(())
}
