//! Compile the music ontology and check a few knowledge-graph assertions.
//!
//! ```text
//! cargo run --example music_reasoning
//! ```

use dlcircuit::dl::parse_ontology;
use dlcircuit::fixtures::{assertion_labels, fixture_music};
use dlcircuit::infer::evaluate;
use dlcircuit::pipeline::{compile_text, CompileOptions};

fn main() -> dlcircuit::Result<()> {
    let fx = fixture_music();
    let co = compile_text(fx.source, &CompileOptions::default())?;
    let (_, kg) = parse_ontology(fx.source)?;

    println!("parts:");
    for p in co.parts() {
        println!("  {p}");
    }
    println!(
        "{} variables, {} circuit nodes, {} refinement rounds",
        co.varmap.total(),
        co.circuit.node_count(),
        co.refinement_rounds
    );

    for e in &fx.evaluations {
        let y = assertion_labels(&co, &kg, e.subject, e.role, e.object)?;
        let ok = evaluate(&co.label_circuit, &y)?;
        println!("{} {} {}: {}", e.subject, e.role, e.object, if ok { "consistent" } else { "inconsistent" });
    }
    Ok(())
}
