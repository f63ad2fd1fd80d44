//! Train the unconstrained baseline, Semantic Loss and the circuit output
//! layer on one synthetic dataset, with and without background knowledge.
//!
//! ```text
//! cargo run --release --example train_models -- [epochs]
//! ```

use dlcircuit::datagen::CovarianceScheme;
use dlcircuit::fixtures::{recipe_table2, ModelSpec};
use dlcircuit::nesy::{train, Hyper, Mode};

fn main() -> dlcircuit::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let recipe = recipe_table2(&[0]);
    let co = recipe.compile()?;
    let data = recipe.data(&co)?;
    let (_, train_ds, test_ds) = data
        .iter()
        .find(|(s, _, _)| *s == CovarianceScheme::Wishart)
        .expect("wishart scheme");

    let models = [
        ModelSpec { mode: Mode::Baseline, lambda: 0.0 },
        ModelSpec { mode: Mode::Sl, lambda: 0.01 },
        ModelSpec { mode: Mode::Spl, lambda: 0.0 },
    ];
    println!("{:<6} {:<10} {:>6} {:>6} {:>6} {:>6} {:>6}", "bg", "model", "P", "R", "F1", "exact", "cons");
    for background in [false, true] {
        for m in &models {
            let hyper = Hyper {
                mode: m.mode,
                lambda: m.lambda,
                background,
                epochs,
                ..Default::default()
            };
            let (model, _) = train(train_ds, &co, hyper)?;
            let r = model.evaluate(test_ds)?;
            println!(
                "{:<6} {:<10} {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
                background,
                m.name(),
                r.precision,
                r.recall,
                r.f1,
                r.exact_match,
                r.consistent
            );
        }
    }
    Ok(())
}
