//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Correctness guarantees (oracle equality, structural properties, SPL
//! consistency, determinism) abort the run when violated. Empirical claims
//! that depend on the random instance are reported and do not abort.

use std::collections::BTreeMap;
use std::fs;
use std::rc::Rc;
use std::time::Instant;

use dlcircuit::cnf::Side;
use dlcircuit::datagen::{
    generate_ontology, rng_from_seed, sample_individuals, sample_kg, synthesize_dataset, CovarianceScheme, GenConfig,
    RowPlan,
};
use dlcircuit::dl::{parse_ontology, Part, RoleExpr};
use dlcircuit::fixtures::{assertion_labels, bench_reasoning, cnf_growth, fixture_music, recipe_table2, recipe_table3, ModelSpec, TableReport};
use dlcircuit::infer::{evaluate, map_state, marginalize, sample_many, wmc, InputDist, Parameterization, SumWeights};
use dlcircuit::nesy::{train, CircuitProgram, Hyper, Mat, Mode, NesyModel, Params, Tape, SL_FLOOR};
use dlcircuit::oracle::{oracle_canonical, oracle_map, oracle_models, oracle_wmc, path_weight, random_ontology, ExplicitSet};
use dlcircuit::pipeline::{compile_ontology, compile_text, write_bundle, CompileOptions, CompiledOntology};
use dlcircuit::sdd::{check_properties, Circuit, CircuitNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion.
struct Outcome {
    pass: bool,
    detail: String,
    /// Violated guarantees; any entry fails the run.
    broken: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome {
            pass,
            detail,
            broken: Vec::new(),
        }
    }

    fn guarantee(pass: bool, detail: String) -> Self {
        let broken = if pass { Vec::new() } else { vec![detail.clone()] };
        Outcome { pass, detail, broken }
    }
}

fn music() -> CompiledOntology {
    compile_text(fixture_music().source, &CompileOptions::default()).unwrap()
}

fn n_c10() -> GenConfig {
    GenConfig {
        n_concepts: 10,
        n_roles: 5,
        p_domain: 0.5,
        p_range: 0.5,
        p_disjoint: 1.0,
        seed: 0,
    }
}

fn c1_worked_example() -> Outcome {
    let start = Instant::now();
    let fx = fixture_music();
    let co = music();
    let (_, kg) = parse_ontology(fx.source).unwrap();

    // Label ⊓ ∃influence.Artist: a label with an artist as influence.
    let mut y = vec![false; co.label_layout.width()];
    let l = &co.label_layout;
    let idx = |name: &str| l.concepts.iter().position(|c| c == name).unwrap();
    y[l.subject(idx("Label"))] = true;
    y[l.object(idx("Artist"))] = true;
    y[l.role(l.roles.iter().position(|r| r.name == "influence").unwrap())] = true;
    let label_influence = evaluate(&co.label_circuit, &y).unwrap();

    let evals_ok = fx.evaluations.iter().all(|e| {
        let y = assertion_labels(&co, &kg, e.subject, e.role, e.object).unwrap();
        evaluate(&co.label_circuit, &y).unwrap() == e.consistent
    });

    let var = |name: &str, side| co.varmap.var_of_part(&Part::Atomic(name.into()), side).unwrap();
    let mut theta = Parameterization::marginalized(co.varmap.total());
    theta.inputs[var("Label", Side::One)] = InputDist::Indicator(true);
    theta.inputs[var("Artist", Side::Two)] = InputDist::Indicator(true);
    theta.inputs[co.varmap.role_var(&RoleExpr::atomic("signedTo")).unwrap()] = InputDist::Indicator(false);
    theta.inputs[co.varmap.role_var(&RoleExpr::atomic("influence")).unwrap()] = InputDist::Bernoulli(0.34);
    let p = wmc(&co.smooth_circuit, &theta).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let ok = !label_influence && evals_ok && (p - 0.66).abs() <= 1e-9 && co.varmap.total() == 14;
    let mut o = Outcome::guarantee(
        ok,
        format!(
            "evaluate(Label,{{influence}},Artist) = {}, fixture evaluations {}, query = {p:.12}, {:.3}s",
            label_influence as u8,
            if evals_ok { "match" } else { "differ" },
            secs
        ),
    );
    o.pass &= secs < 1.0;
    o
}

/// Random ontologies with at most 20 domino variables, compiled, with their
/// enumerated models.
struct Corpus {
    items: Vec<(CompiledOntology, ExplicitSet)>,
    matches: usize,
}

fn build_corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut items = Vec::new();
    let mut matches = 0;
    for k in 0..60 {
        let split = k % 3 == 2;
        let o = random_ontology(&mut rng, 20, split);
        let opts = CompileOptions {
            split_inverses: split,
            ..Default::default()
        };
        let co = compile_ontology(&o, &opts).unwrap();
        let want = oracle_canonical(&o, split).unwrap();
        let got = oracle_models(&co.circuit).unwrap();
        if got == want {
            matches += 1;
        }
        items.push((co, got));
    }
    Corpus { items, matches }
}

fn c2_oracle_equivalence(corpus: &Corpus, secs: f64) -> Outcome {
    let n = corpus.items.len();
    let max_vars = corpus.items.iter().map(|(co, _)| co.varmap.total()).max().unwrap();
    let refined = corpus.items.iter().filter(|(co, _)| co.refinement_rounds > 1).count();
    let mut o = Outcome::guarantee(
        corpus.matches == n && n >= 50,
        format!("{}/{n} ontologies equal the enumerated fixpoint (≤{max_vars} vars, {refined} needed refinement), {secs:.1}s", corpus.matches),
    );
    o.pass &= secs <= 600.0;
    o
}

fn c3_properties(corpus: &Corpus) -> Outcome {
    let mut circuits: Vec<(Circuit, Circuit)> = corpus
        .items
        .iter()
        .map(|(co, _)| (co.circuit.clone(), co.smooth_circuit.clone()))
        .collect();
    let mut labels: Vec<Circuit> = corpus.items.iter().map(|(co, _)| co.label_circuit.clone()).collect();
    for co in [music(), compile_ontology(&generate_ontology(&n_c10()).unwrap(), &CompileOptions::default()).unwrap()] {
        circuits.push((co.circuit.clone(), co.smooth_circuit.clone()));
        labels.push(co.label_circuit.clone());
    }
    let mut bad = 0;
    for (c, s) in &circuits {
        let p = check_properties(c);
        let q = check_properties(s);
        if !(p.decomposable && p.deterministic && q.smooth && q.decomposable && q.deterministic) {
            bad += 1;
        }
    }
    for l in &labels {
        let p = check_properties(l);
        if !(p.smooth && p.decomposable && p.deterministic) {
            bad += 1;
        }
    }
    let total = circuits.len() + labels.len();
    Outcome::guarantee(bad == 0, format!("{}/{total} circuits decomposable, deterministic and smooth after smoothing", total - bad))
}

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

fn c4_queries(corpus: &Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut params, mut wmc_err, mut map_bad, mut marg_bad, mut tie_bad) = (0, 0.0f64, 0, 0, 0);
    for (co, models) in &corpus.items {
        if models.is_empty() {
            continue;
        }
        let c = &co.smooth_circuit;
        let n = c.num_vars();
        for k in 0..4 {
            let inputs = (0..n)
                .map(|_| match rng.random_range(0..3) {
                    0 => InputDist::Marginalized,
                    _ => InputDist::Bernoulli(rng.random_range(0.05..0.95)),
                })
                .collect();
            let weights = if k % 2 == 0 { SumWeights::Uniform } else { random_weights(c, &mut rng) };
            let theta = Parameterization { inputs, weights };
            params += 1;

            let want = oracle_wmc(models, c, &theta);
            let got = wmc(c, &theta).unwrap();
            wmc_err = wmc_err.max((got - want).abs() / (1.0 + want.abs()));

            let ev: Vec<Option<bool>> = (0..n)
                .map(|_| if rng.random_bool(0.15) { Some(rng.random_bool(0.5)) } else { None })
                .collect();
            match (oracle_map(models, c, &theta, &ev), map_state(c, &theta, &ev)) {
                (None, Err(_)) => {}
                (Some((x, w)), Ok(r)) => {
                    let all = Parameterization {
                        inputs: vec![InputDist::Marginalized; n],
                        weights: theta.weights.clone(),
                    };
                    let z: f64 = models.models.iter().map(|m| path_weight(c, &all, m)).sum();
                    if r.assignment.as_ref() != Some(&x) || (r.value - w / z).abs() > 1e-9 * (1.0 + r.value) {
                        map_bad += 1;
                    }
                }
                _ => map_bad += 1,
            }
        }

        // Marginalizing a random subset equals projecting the enumerated models.
        let vars: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
        let m = marginalize(c, &vars).unwrap();
        let got = oracle_models(&m).unwrap();
        let mut want: Vec<Vec<bool>> = Vec::new();
        for x in &models.models {
            for mask in 0u32..1 << vars.len() {
                let mut y = x.clone();
                for (i, &v) in vars.iter().enumerate() {
                    y[v] = mask >> i & 1 == 1;
                }
                want.push(y);
            }
        }
        want.sort();
        want.dedup();
        if got.models != want {
            marg_bad += 1;
        }

        // All models weigh the same: the lexicographically first must win.
        let r = map_state(c, &Parameterization::marginalized(n), &vec![None; n]).unwrap();
        if r.assignment.as_ref() != Some(&models.models[0]) {
            tie_bad += 1;
        }
    }
    let ok = params >= 200 && wmc_err <= 1e-9 && map_bad == 0 && marg_bad == 0 && tie_bad == 0;
    Outcome::guarantee(
        ok,
        format!(
            "{params} parameterizations: wmc max rel err {wmc_err:.1e}, map mismatches {map_bad}, marginalize mismatches {marg_bad}, tie-break mismatches {tie_bad}"
        ),
    )
}

fn c5_sampling() -> Outcome {
    let co = music();
    let c = &co.smooth_circuit;
    let n = c.num_vars();
    let models = oracle_models(&co.circuit).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = sample_many(c, &Parameterization::marginalized(n), &vec![None; n], 100_000, &mut rng).unwrap();
    let all_models = draws.iter().all(|x| evaluate(&co.circuit, x).unwrap());
    let mut counts: BTreeMap<&Vec<bool>, usize> = BTreeMap::new();
    for x in &draws {
        *counts.entry(x).or_default() += 1;
    }
    let u = 1.0 / models.len() as f64;
    let tv = models
        .models
        .iter()
        .map(|m| (counts.get(m).copied().unwrap_or(0) as f64 / draws.len() as f64 - u).abs())
        .sum::<f64>()
        / 2.0;

    let mut respected = 0;
    let mut total = 0;
    for k in 0..50 {
        let mut ev = vec![None; n];
        let x = &models.models[k % models.len()];
        for v in 0..n {
            if rng.random_bool(0.3) {
                ev[v] = Some(x[v]);
            }
        }
        for d in sample_many(c, &Parameterization::marginalized(n), &ev, 200, &mut rng).unwrap() {
            total += 1;
            if ev.iter().zip(&d).all(|(e, &b)| e.is_none_or(|e| e == b)) && evaluate(&co.circuit, &d).unwrap() {
                respected += 1;
            }
        }
    }
    let ok = all_models && tv < 0.02 && respected == total;
    Outcome::guarantee(
        ok,
        format!(
            "100000 draws over {} models, all consistent: {all_models}, TV {tv:.4}; evidence respected on {respected}/{total}",
            models.len()
        ),
    )
}

fn rel_err(fd: &[f64], an: &[f64]) -> f64 {
    let diff: f64 = fd.iter().zip(an).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm(fd).max(norm(an)).max(1e-8)
}

/// Gradient of a scalar loss of one parameter matrix, by the tape and by
/// central differences over every coordinate.
fn check_loss(init: Mat, loss: &dyn Fn(&mut Tape, &Params) -> dlcircuit::nesy::Var) -> f64 {
    let h = 1e-5;
    let mut params = Params::new(vec![init]);
    let mut tape = Tape::new();
    let out = loss(&mut tape, &params);
    tape.backward(out, &mut params);
    let an = params.flat_grads();
    let theta = params.flat();
    let mut fd = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let mut at = |s: f64| {
            let mut t = theta.clone();
            t[i] += s;
            params.set_flat(&t);
            let mut tape = Tape::new();
            let out = loss(&mut tape, &params);
            tape.value(out).data[0]
        };
        fd.push((at(h) - at(-h)) / (2.0 * h));
    }
    rel_err(&fd, &an)
}

fn c6_gradients() -> Outcome {
    let co = music();
    let w = co.label_layout.width();
    let program = Rc::new(CircuitProgram::new(&co.label_circuit).unwrap());
    let label_models = oracle_models(&co.label_circuit).unwrap().models;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rows = 4;
    let (mut ce, mut sl, mut spl, mut e2e) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for point in 0..50 {
        let logits = Mat {
            rows,
            cols: w,
            data: (0..rows * w).map(|_| rng.random_range(-3.0..3.0)).collect(),
        };
        let ys: Vec<Vec<bool>> = (0..rows).map(|_| label_models[rng.random_range(0..label_models.len())].clone()).collect();
        let ys = Rc::new(ys);
        // Alternate plain and evidence-conditioned settings.
        let bg = point % 2 == 1;
        let model = NesyModel::new(&co, w, Hyper { background: bg, hidden: vec![4], ..Hyper::default() }).unwrap();
        let ev: Vec<Vec<Option<bool>>> = ys
            .iter()
            .map(|y| if bg { model.background_evidence(y) } else { vec![None; w] })
            .collect();
        let ev = Rc::new(ev);
        let mask = Rc::new((0..w).map(|c| !bg || co.label_layout.role_range().contains(&c)).collect::<Vec<bool>>());

        ce = ce.max(check_loss(logits.clone(), &|t, p| {
            let z = t.param(p, 0);
            t.bce_logits(z, ys.clone(), mask.clone())
        }));
        sl = sl.max(check_loss(logits.clone(), &|t, p| {
            let z = t.param(p, 0);
            t.semantic_loss(z, program.clone(), ev.clone(), SL_FLOOR)
        }));
        let gates = Mat {
            rows,
            cols: program.num_gates(),
            data: (0..rows * program.num_gates()).map(|_| rng.random_range(-3.0..3.0)).collect(),
        };
        spl = spl.max(check_loss(gates, &|t, p| {
            let g = t.param(p, 0);
            t.spl_nll(g, program.clone(), ys.clone(), ev.clone())
        }));

        // End to end through the network, along a random direction.
        let mode = [Mode::Baseline, Mode::Sl, Mode::Spl][point % 3];
        let mut m = NesyModel::new(
            &co,
            w,
            Hyper {
                mode,
                lambda: 0.5,
                background: bg,
                hidden: vec![6],
                seed: point as u64,
                ..Hyper::default()
            },
        )
        .unwrap();
        let xs: Vec<Vec<f64>> = (0..rows).map(|_| (0..w).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let (_, g) = m.batch_loss_grad(&xs, &ys).unwrap();
        let theta = m.params.flat();
        let d: Vec<f64> = (0..theta.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut at = |s: f64| {
            let t: Vec<f64> = theta.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            m.params.set_flat(&t);
            m.batch_loss(&xs, &ys).unwrap()
        };
        let fd = (at(1e-5) - at(-1e-5)) / 2e-5;
        let an: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        e2e = e2e.max(rel_err(&[fd], &[an]));
    }
    let ok = ce < 1e-4 && sl < 1e-4 && spl < 1e-4 && e2e < 1e-4;
    Outcome::guarantee(
        ok,
        format!("50 points each, max rel err: CE {ce:.1e}, SL {sl:.1e}, SPL {spl:.1e}, through the network {e2e:.1e}"),
    )
}

fn scheme_mean(r: &TableReport, s: CovarianceScheme, m: &ModelSpec, f: fn(&dlcircuit::nesy::Metrics) -> f64) -> f64 {
    r.mean(s, m, f)
}

fn c7_nesy() -> Outcome {
    let start = Instant::now();
    let base = ModelSpec { mode: Mode::Baseline, lambda: 0.0 };
    let sl = ModelSpec { mode: Mode::Sl, lambda: 0.01 };
    let spl = ModelSpec { mode: Mode::Spl, lambda: 0.0 };
    let mut t2 = recipe_table2(&[0, 1, 2]);
    t2.models = vec![base, sl, spl];
    let r2 = t2.run(|_| {}).unwrap();
    let mut t3 = recipe_table3(&[0, 1, 2]);
    t3.models = vec![base, spl];
    let r3 = t3.run(|_| {}).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let schemes = CovarianceScheme::STANDARD;
    let cons = |r: &TableReport, s, m: &ModelSpec| scheme_mean(r, s, m, |x| x.consistent);
    let exact = |r: &TableReport, s, m: &ModelSpec| scheme_mean(r, s, m, |x| x.exact_match);
    let fmt = |f: &dyn Fn(CovarianceScheme) -> f64| {
        schemes.iter().map(|&s| format!("{}={:.3}", s.label(), f(s))).collect::<Vec<_>>().join(" ")
    };

    let spl_ok = r2.cells.iter().chain(&r3.cells).filter(|c| c.model.mode == Mode::Spl).all(|c| c.metrics.consistent == 1.0);
    let sl_ok = schemes.iter().all(|&s| cons(&r2, s, &sl) >= 0.95);
    let base_ok = schemes[..3].iter().all(|&s| cons(&r2, s, &base) <= 0.5);
    let w = CovarianceScheme::Wishart;
    let dir_ok = exact(&r2, w, &spl) > exact(&r2, w, &base);
    let time_ok = secs <= 1800.0;

    let mark = |b: bool| if b { "ok" } else { "MISSED" };
    let detail = format!(
        "SPL consistency 1.000 everywhere [{}]; SL l=0.01 consistency ≥0.95 [{}] ({}); baseline consistency ≤0.5 on I,N(0,1),W [{}] ({}); W exact SPL {:.3} > MLP {:.3} [{}]; bg W exact SPL {:.3} vs MLP {:.3}; {secs:.0}s [{}]",
        mark(spl_ok),
        mark(sl_ok),
        fmt(&|s| cons(&r2, s, &sl)),
        mark(base_ok),
        fmt(&|s| cons(&r2, s, &base)),
        exact(&r2, w, &spl),
        exact(&r2, w, &base),
        mark(dir_ok),
        exact(&r3, w, &spl),
        exact(&r3, w, &base),
        mark(time_ok),
    );
    let mut o = Outcome::new(spl_ok && sl_ok && base_ok && dir_ok && time_ok, detail);
    if !spl_ok {
        o.broken.push("SPL produced an inconsistent prediction".into());
    }
    o
}

fn c8_throughput() -> Outcome {
    let co = compile_ontology(&generate_ontology(&n_c10()).unwrap(), &CompileOptions::default()).unwrap();
    let p = bench_reasoning(&co.circuit, 1_000_000, 1, 1, &mut rng_from_seed(8)).unwrap();
    let mut o = Outcome::new(
        p.speedup >= 10.0 && p.identical,
        format!(
            "10^6 rows over {} vars: scalar {:.0}/s, batch {:.0}/s, speedup {:.1}, identical {}",
            co.varmap.total(),
            p.scalar_rows_per_sec,
            p.batch_rows_per_sec,
            p.speedup,
            p.identical
        ),
    );
    if !p.identical {
        o.broken.push("batched and scalar verdicts differ".into());
    }
    o
}

fn c9_cnf_growth() -> Outcome {
    let grid = [5, 10, 25];
    let mut all_ok = true;
    let mut parts = Vec::new();
    for nr in [5, 25, 50] {
        // Mean over three generator seeds of the grid means.
        let runs: Vec<Vec<(usize, f64)>> = (0..3).map(|s| cnf_growth(&grid, nr, s).unwrap()).collect();
        let mean: Vec<f64> = (0..grid.len()).map(|i| runs.iter().map(|r| r[i].1).sum::<f64>() / 3.0).collect();
        let ratios: Vec<String> = (1..grid.len())
            .map(|i| {
                let r = mean[i] / mean[i - 1];
                let lin = grid[i] as f64 / grid[i - 1] as f64;
                all_ok &= r > lin;
                format!("{:.2}/{:.1}", r, lin)
            })
            .collect();
        parts.push(format!("N_r={nr}: clauses {:.0},{:.0},{:.0} ratios {}", mean[0], mean[1], mean[2], ratios.join(" ")));
    }
    Outcome::new(all_ok, format!("observed/linear ratio per step; {}", parts.join("; ")))
}

fn c10_determinism() -> Outcome {
    let run = || -> Vec<(String, Vec<u8>)> {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GenConfig { seed: 9, ..n_c10() };
        let o = generate_ontology(&cfg).unwrap();
        let co = compile_ontology(&o, &CompileOptions::default()).unwrap();
        write_bundle(&co, dir.path()).unwrap();
        let mut files = Vec::new();
        let mut names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names {
            let name = n.to_string_lossy().to_string();
            let mut bytes = fs::read(dir.path().join(&n)).unwrap();
            if name == "meta.json" {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                v["stats"]["seconds"] = 0.0.into();
                bytes = serde_json::to_vec(&v).unwrap();
            }
            files.push((name, bytes));
        }
        let mut rng = rng_from_seed(10);
        let inds = sample_individuals(&co, 40, &mut rng).unwrap();
        let kg = sample_kg(&co, &inds, &mut rng).unwrap();
        files.push(("kg.tsv".into(), kg.to_tsv(&co).into_bytes()));
        let ds = synthesize_dataset(&kg, &co, CovarianceScheme::InvWishart, RowPlan::Total(300), &mut rng_from_seed(11)).unwrap();
        files.push(("dataset.csv".into(), ds.to_csv().into_bytes()));
        let (tr, te) = ds.split(200);
        for mode in [Mode::Baseline, Mode::Sl, Mode::Spl] {
            let hyper = Hyper { mode, lambda: 0.01, epochs: 2, hidden: vec![16], seed: 12, ..Hyper::default() };
            let (m, _) = train(&tr, &co, hyper).unwrap();
            files.push((format!("{}.ckpt", mode.name()), m.to_checkpoint()));
            files.push((format!("{}.json", mode.name()), serde_json::to_vec(&m.evaluate(&te).unwrap()).unwrap()));
        }
        files
    };
    let a = run();
    let b = run();
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    Outcome::guarantee(
        a == b,
        format!("{same}/{} seeded outputs byte-identical across two runs (bundle, kg, dataset, checkpoints, metrics)", a.len()),
    )
}

fn main() {
    let mut outcomes: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |k: usize, name: &'static str, o: Outcome| {
        println!("criterion {k:>2} {:<4} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        outcomes.push((k, name, o));
    };
    report(1, "worked example", c1_worked_example());
    let t = Instant::now();
    let corpus = build_corpus();
    report(2, "oracle equivalence", c2_oracle_equivalence(&corpus, t.elapsed().as_secs_f64()));
    report(3, "structural properties", c3_properties(&corpus));
    report(4, "query correctness", c4_queries(&corpus));
    report(5, "sampling soundness", c5_sampling());
    report(6, "gradient checks", c6_gradients());
    report(7, "nesy guarantees", c7_nesy());
    report(8, "reasoning throughput", c8_throughput());
    report(9, "cnf growth", c9_cnf_growth());
    report(10, "determinism", c10_determinism());

    let passed = outcomes.iter().filter(|(_, _, o)| o.pass).count();
    println!("{passed}/{} criteria pass", outcomes.len());
    let broken: Vec<String> = outcomes
        .iter()
        .flat_map(|(k, _, o)| o.broken.iter().map(move |b| format!("criterion {k}: {b}")))
        .collect();
    if !broken.is_empty() {
        for b in &broken {
            eprintln!("guarantee violated, {b}");
        }
        std::process::exit(1);
    }
}
