//! Run a full results table: four covariance schemes, five models and
//! several initializations.
//!
//! ```text
//! cargo run --release --example table_recipe -- 2 0,1,2
//! cargo run --release --example table_recipe -- 3 0
//! ```

use dlcircuit::fixtures::{recipe_table2, recipe_table3};

fn main() -> dlcircuit::Result<()> {
    let table = std::env::args().nth(1).unwrap_or_else(|| "2".into());
    let seeds: Vec<u64> = std::env::args()
        .nth(2)
        .unwrap_or_else(|| "0".into())
        .split(',')
        .map(|s| s.parse().expect("seed list"))
        .collect();
    let recipe = if table == "3" { recipe_table3(&seeds) } else { recipe_table2(&seeds) };
    let report = recipe.run(|c| eprintln!("{} {} seed {} ({:.1}s)", c.scheme.label(), c.model.name(), c.seed, c.seconds))?;
    print!("{}", report.render());
    println!("checksum {}", report.checksum());
    Ok(())
}
