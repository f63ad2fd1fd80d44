//! How the initial clause set grows with the number of concepts.

use dlcircuit::fixtures::cnf_growth;

fn main() -> dlcircuit::Result<()> {
    let concepts: Vec<usize> = (1..=8).map(|k| 5 * k).collect();
    for (nc, clauses) in cnf_growth(&concepts, 5, 0)? {
        println!("{nc:>3} concepts: {clauses:>10.1} clauses");
    }
    Ok(())
}
