//! Probabilistic queries against brute-force enumeration on random
//! ontologies with biased inputs, explicit weights and evidence.

use dlcircuit::infer::{log_wmc, map_state, sample_many, wmc, InputDist, Parameterization, SumWeights};
use dlcircuit::oracle::{oracle_distribution, oracle_map, oracle_models, oracle_wmc, path_weight, random_ontology};
use dlcircuit::pipeline::{compile_ontology, CompileOptions};
use dlcircuit::sdd::{Circuit, CircuitNode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_weights(c: &Circuit, rng: &mut ChaCha8Rng) -> SumWeights {
    SumWeights::Explicit(
        c.nodes()
            .iter()
            .map(|n| match n {
                CircuitNode::Decision { elements, .. } => {
                    let w: Vec<f64> = elements.iter().map(|_| rng.random_range(0.05..1.0)).collect();
                    let z: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / z).collect()
                }
                _ => Vec::new(),
            })
            .collect(),
    )
}

fn random_theta(c: &Circuit, explicit: bool, rng: &mut ChaCha8Rng) -> Parameterization {
    let inputs = (0..c.num_vars())
        .map(|_| match rng.random_range(0..3) {
            0 => InputDist::Marginalized,
            _ => InputDist::Bernoulli(rng.random_range(0.05..0.95)),
        })
        .collect();
    let weights = if explicit { random_weights(c, rng) } else { SumWeights::Uniform };
    Parameterization { inputs, weights }
}

fn random_evidence(n: usize, rng: &mut ChaCha8Rng) -> Vec<Option<bool>> {
    (0..n)
        .map(|_| if rng.random_bool(0.15) { Some(rng.random_bool(0.5)) } else { None })
        .collect()
}

fn setup(seed: u64) -> (Circuit, dlcircuit::oracle::ExplicitSet, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = random_ontology(&mut rng, 14, false);
    let co = compile_ontology(&o, &CompileOptions::default()).unwrap();
    let models = oracle_models(&co.smooth_circuit).unwrap();
    (co.smooth_circuit, models, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wmc_matches_enumeration(seed in any::<u64>(), explicit in any::<bool>()) {
        let (c, models, mut rng) = setup(seed);
        prop_assume!(!models.is_empty());
        let theta = random_theta(&c, explicit, &mut rng);
        let want = oracle_wmc(&models, &c, &theta);
        let got = wmc(&c, &theta).unwrap();
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{got} vs {want}");
        if want > 0.0 {
            let l = log_wmc(&c, &theta).unwrap();
            prop_assert!((l - want.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn map_matches_enumeration(seed in any::<u64>(), explicit in any::<bool>()) {
        let (c, models, mut rng) = setup(seed);
        prop_assume!(!models.is_empty());
        let theta = random_theta(&c, explicit, &mut rng);
        let ev = random_evidence(c.num_vars(), &mut rng);
        match oracle_map(&models, &c, &theta, &ev) {
            None => prop_assert!(map_state(&c, &theta, &ev).is_err()),
            Some((x, w)) => {
                let r = map_state(&c, &theta, &ev).unwrap();
                let got = r.assignment.unwrap();
                prop_assert!(models.contains(&got));
                prop_assert_eq!(&got, &x);
                let all = Parameterization {
                    inputs: vec![InputDist::Marginalized; c.num_vars()],
                    weights: theta.weights.clone(),
                };
                let z_all: f64 = models.models.iter().map(|m| path_weight(&c, &all, m)).sum();
                prop_assert!((r.value - w / z_all).abs() <= 1e-9 * (1.0 + r.value));
            }
        }
    }
}

/// Sample frequencies against the enumerated distribution, total variation
/// within a bound that holds with overwhelming probability at this size.
#[test]
fn sampling_matches_distribution() {
    let mut checked = 0;
    for seed in 0..40u64 {
        let (c, models, mut rng) = setup(seed);
        if models.is_empty() {
            continue;
        }
        let theta = random_theta(&c, seed % 2 == 0, &mut rng);
        let ev = random_evidence(c.num_vars(), &mut rng);
        let dist = oracle_distribution(&models, &c, &theta, &ev);
        if dist.is_empty() || dist.iter().all(|(_, p)| !p.is_finite() || *p == 0.0) {
            continue;
        }
        let n = 20_000;
        let draws = sample_many(&c, &theta, &ev, n, &mut rng).unwrap();
        let mut tv = 0.0;
        for (m, p) in &dist {
            let f = draws.iter().filter(|d| *d == m).count() as f64 / n as f64;
            tv += (f - p).abs();
        }
        assert!(draws.iter().all(|d| models.contains(d)));
        let k = dist.len() as f64;
        assert!(tv / 2.0 < 0.02 + 0.5 * (k / n as f64).sqrt(), "seed {seed}: tv {}", tv / 2.0);
        checked += 1;
    }
    assert!(checked >= 20);
}
