//! Noisy observation datasets under each covariance scheme.

use dlcircuit::datagen::{
    generate_ontology, rng_from_seed, sample_individuals, sample_kg, synthesize_dataset, CovarianceScheme, GenConfig,
    RowPlan,
};
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
    let mut rng = rng_from_seed(1);
    let inds = sample_individuals(&co, 100, &mut rng)?;
    let kg = sample_kg(&co, &inds, &mut rng)?;

    for (k, scheme) in CovarianceScheme::STANDARD.into_iter().enumerate() {
        let ds = synthesize_dataset(&kg, &co, scheme, RowPlan::Total(1500), &mut rng_from_seed(100 + k as u64))?;
        // Mean squared distance between observation and its clean label.
        let mse: f64 = ds
            .rows
            .iter()
            .zip(&ds.targets)
            .map(|(x, y)| x.iter().zip(y).map(|(a, &b)| (a - b as u8 as f64).powi(2)).sum::<f64>())
            .sum::<f64>()
            / (ds.len() * ds.width()) as f64;
        println!(
            "{:>7}: {} rows of width {}, noise mse {:.3}, covariance digest {}",
            scheme.label(),
            ds.len(),
            ds.width(),
            mse,
            &ds.covariance_digest[..12]
        );
    }
    Ok(())
}
