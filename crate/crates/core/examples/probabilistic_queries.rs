//! Weighted model counting, conditional sampling and MAP states on the
//! music circuit.

use dlcircuit::datagen::rng_from_seed;
use dlcircuit::fixtures::MUSIC_DSL;
use dlcircuit::infer::{map_state, sample_many, wmc, InputDist, Parameterization};
use dlcircuit::pipeline::{compile_text, CompileOptions};

fn main() -> dlcircuit::Result<()> {
    let co = compile_text(MUSIC_DSL, &CompileOptions::default())?;
    let c = &co.smooth_circuit;
    let n = c.num_vars();

    // Fair coins on every variable: the fraction of consistent dominoes.
    let fair = Parameterization::bernoulli(&vec![0.5; n]);
    println!("P(consistent) under fair coins: {:.4}", wmc(c, &fair)?);
    println!("models: {}", (wmc(c, &fair)? * 2f64.powi(n as i32)).round());

    // Condition on the first label: the subject is an Artist.
    let artist = co.varmap.column_name(0);
    let mut evidence = vec![None; n];
    evidence[0] = Some(true);
    let conditioned = fair.with_evidence(&evidence)?;
    println!("P(consistent | {artist}) = {:.4}", wmc(c, &conditioned)?);

    let mut rng = rng_from_seed(7);
    println!("three samples with {artist}:");
    for x in sample_many(c, &Parameterization::marginalized(n), &evidence, 3, &mut rng)? {
        let on: Vec<String> = (0..n).filter(|&v| x[v]).map(|v| co.varmap.column_name(v)).collect();
        println!("  {}", on.join(" "));
    }

    // Biased inputs: most likely consistent domino.
    let mut theta = Parameterization::marginalized(n);
    for (v, d) in theta.inputs.iter_mut().enumerate() {
        *d = InputDist::Bernoulli(if v % 3 == 0 { 0.8 } else { 0.3 });
    }
    let best = map_state(c, &theta, &vec![None; n])?;
    let x = best.assignment.expect("satisfiable");
    let on: Vec<String> = (0..n).filter(|&v| x[v]).map(|v| co.varmap.column_name(v)).collect();
    assert!(dlcircuit::infer::evaluate(&co.circuit, &x)?);
    println!("MAP state (weight {:.3e}): {}", best.value, on.join(" "));
    Ok(())
}
