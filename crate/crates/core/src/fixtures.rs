//! Frozen fixtures and experiment recipes.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{
    generate_ontology, rng_from_seed, sample_individuals, sample_kg, synthesize_dataset, CovarianceScheme, GenConfig,
    ObservationDataset, RowPlan,
};
use crate::cnf::{build_d0_cnf, varmap_for};
use crate::dl::{normalize, Axiom, KnowledgeGraphInput};
use crate::infer::{evaluate_batch_threads, BitMatrix};
use crate::sdd::Circuit;
use crate::error::{Error, Result};
use crate::nesy::{train, Hyper, Metrics, Mode, SL_LAMBDAS};
use crate::pipeline::{compile_ontology, CompileOptions, CompiledOntology};

/// The two-concept, two-role music ontology with its three-individual ABox.
pub const MUSIC_DSL: &str = "\
concept Artist.
concept Label.
role influence.
role signedTo.
individual Fugazi.
individual TheSmiths.
individual Dischord.
axiom Artist subclassof not Label.
axiom top subclassof forall influence . Artist.
axiom top subclassof forall inv(influence) . Artist.
axiom top subclassof forall signedTo . Label.
axiom top subclassof forall inv(signedTo) . Artist.
assert Fugazi : Artist.
assert TheSmiths : Artist.
assert Dischord : Label.
assert Fugazi signedTo Dischord.
";

/// A frozen ontology with the values it is expected to produce.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fixture {
    pub name: &'static str,
    pub source: &'static str,
    /// SHA-256 of `source`, hex encoded.
    pub checksum: String,
    pub expected_parts: Vec<&'static str>,
    pub expected_vars: usize,
    /// Assertions with the expected consistency verdict.
    pub evaluations: Vec<Evaluation>,
}

/// One row of a fixture's evaluation table: `subject role object` pairs the
/// ABox types of two individuals with a single role.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub subject: &'static str,
    pub role: &'static str,
    pub object: &'static str,
    pub consistent: bool,
}

/// Checksum recorded for [`MUSIC_DSL`]. Editing the fixture without updating
/// this constant fails the fixture tests.
pub const MUSIC_SHA256: &str = "669814d27a15e8c05ce566b1d08e10624d2c351902afb197700f39246f8bc861";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// The music ontology with its part list, variable count and the
/// influence assertions of the worked example.
pub fn fixture_music() -> Fixture {
    Fixture {
        name: "music",
        source: MUSIC_DSL,
        checksum: sha256_hex(MUSIC_DSL.as_bytes()),
        expected_parts: vec![
            "Artist",
            "Label",
            "forall influence . Artist",
            "forall inv(influence) . Artist",
            "forall signedTo . Label",
            "forall inv(signedTo) . Artist",
        ],
        expected_vars: 14,
        evaluations: vec![
            Evaluation {
                subject: "Fugazi",
                role: "influence",
                object: "TheSmiths",
                consistent: true,
            },
            Evaluation {
                subject: "Dischord",
                role: "influence",
                object: "TheSmiths",
                consistent: false,
            },
            Evaluation {
                subject: "Fugazi",
                role: "signedTo",
                object: "Dischord",
                consistent: true,
            },
            Evaluation {
                subject: "Dischord",
                role: "signedTo",
                object: "Fugazi",
                consistent: false,
            },
        ],
    }
}

/// Label vector for `subject role object` using the ABox types of the two
/// individuals. Every bit not asserted is false.
pub fn assertion_labels(co: &CompiledOntology, kg: &KnowledgeGraphInput, subject: &str, role: &str, object: &str) -> Result<Vec<bool>> {
    let layout = &co.label_layout;
    let mut y = vec![false; layout.width()];
    for a in &kg.abox {
        if let Axiom::ConceptAssertion { concept, individual } = a {
            let Some(c) = layout.concepts.iter().position(|x| x == concept) else {
                continue;
            };
            if individual == subject {
                y[layout.subject(c)] = true;
            }
            if individual == object {
                y[layout.object(c)] = true;
            }
        }
    }
    let r = layout
        .roles
        .iter()
        .position(|r| r.name == role && !r.inverted)
        .ok_or_else(|| Error::UnknownSymbol(role.to_string()))?;
    y[layout.role(r)] = true;
    Ok(y)
}

/// One trained configuration of a results table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub mode: Mode,
    pub lambda: f64,
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self.mode {
            Mode::Baseline => "MLP".into(),
            Mode::Sl => format!("SL l={}", self.lambda),
            Mode::Spl => "SPL".into(),
        }
    }

    /// MLP, SL at the three swept λ values, SPL.
    pub fn table_rows() -> Vec<ModelSpec> {
        let mut v = vec![ModelSpec {
            mode: Mode::Baseline,
            lambda: 0.0,
        }];
        v.extend(SL_LAMBDAS.iter().map(|&lambda| ModelSpec { mode: Mode::Sl, lambda }));
        v.push(ModelSpec {
            mode: Mode::Spl,
            lambda: 0.0,
        });
        v
    }
}

/// Everything needed to regenerate a multilabel results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRecipe {
    pub ontology: GenConfig,
    pub individuals: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub schemes: Vec<CovarianceScheme>,
    pub models: Vec<ModelSpec>,
    /// Training seeds; the data is fixed across seeds.
    pub seeds: Vec<u64>,
    pub background: bool,
    pub epochs: usize,
    pub hidden: Vec<usize>,
}

/// The joint subject/role/object classification table: N_c=10, N_r=5,
/// p_d=p_r=0.5, p_c=1, 100 individuals, 1000 training and 500 test rows.
pub fn recipe_table2(seeds: &[u64]) -> TableRecipe {
    TableRecipe {
        ontology: GenConfig {
            n_concepts: 10,
            n_roles: 5,
            p_domain: 0.5,
            p_range: 0.5,
            p_disjoint: 1.0,
            seed: 0,
        },
        individuals: 100,
        train_rows: 1000,
        test_rows: 500,
        schemes: CovarianceScheme::STANDARD.to_vec(),
        models: ModelSpec::table_rows(),
        seeds: seeds.to_vec(),
        background: false,
        epochs: 30,
        hidden: vec![128, 128],
    }
}

/// The link prediction table: as [`recipe_table2`] with the subject and
/// object blocks given as evidence.
pub fn recipe_table3(seeds: &[u64]) -> TableRecipe {
    TableRecipe {
        background: true,
        ..recipe_table2(seeds)
    }
}

/// One (scheme, model, seed) result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub scheme: CovarianceScheme,
    pub model: ModelSpec,
    pub seed: u64,
    pub metrics: Metrics,
    /// Wall-clock training time; excluded from checksums.
    pub seconds: f64,
}

/// Report of a table recipe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub recipe: TableRecipe,
    pub cells: Vec<Cell>,
    pub covariance_digests: Vec<(CovarianceScheme, String)>,
}

/// Shown above every rendered table.
pub const DIRECTIONAL_NOTE: &str = "Random ontology and seeds differ from any published run; \
compare orderings and the consistency guarantee, not absolute values.";

impl TableRecipe {
    /// Compiles the ontology of the recipe.
    pub fn compile(&self) -> Result<CompiledOntology> {
        let o = generate_ontology(&self.ontology)?;
        compile_ontology(&o, &CompileOptions::default())
    }

    /// Individuals and knowledge graph, shared by every scheme, then one
    /// dataset per scheme. All draws come from the ontology seed.
    pub fn data(&self, co: &CompiledOntology) -> Result<Vec<(CovarianceScheme, ObservationDataset, ObservationDataset)>> {
        let mut rng = rng_from_seed(self.ontology.seed.wrapping_add(1));
        let inds = sample_individuals(co, self.individuals, &mut rng)?;
        let kg = sample_kg(co, &inds, &mut rng)?;
        self.schemes
            .iter()
            .enumerate()
            .map(|(k, &scheme)| {
                let mut rng = rng_from_seed(self.ontology.seed.wrapping_add(100 + k as u64));
                let plan = RowPlan::Total(self.train_rows + self.test_rows);
                let ds = synthesize_dataset(&kg, co, scheme, plan, &mut rng)?;
                let (train, test) = ds.split(self.train_rows);
                Ok((scheme, train, test))
            })
            .collect()
    }

    fn hyper(&self, m: ModelSpec, seed: u64) -> Hyper {
        Hyper {
            mode: m.mode,
            lambda: m.lambda,
            background: self.background,
            hidden: self.hidden.clone(),
            epochs: self.epochs,
            seed,
            ..Hyper::default()
        }
    }

    /// Trains and evaluates one cell.
    pub fn run_cell(&self, co: &CompiledOntology, train_ds: &ObservationDataset, test: &ObservationDataset, m: ModelSpec, seed: u64) -> Result<(Metrics, f64)> {
        let t = Instant::now();
        let (model, _) = train(train_ds, co, self.hyper(m, seed))?;
        let metrics = model.evaluate(test)?;
        Ok((metrics, t.elapsed().as_secs_f64()))
    }

    /// Runs every cell. `progress` sees each finished cell.
    pub fn run(&self, mut progress: impl FnMut(&Cell)) -> Result<TableReport> {
        let co = self.compile()?;
        let data = self.data(&co)?;
        let mut cells = Vec::new();
        let mut digests = Vec::new();
        for (scheme, train_ds, test) in &data {
            digests.push((*scheme, train_ds.covariance_digest.clone()));
            for &m in &self.models {
                for &seed in &self.seeds {
                    let (metrics, seconds) = self.run_cell(&co, train_ds, test, m, seed)?;
                    let cell = Cell {
                        scheme: *scheme,
                        model: m,
                        seed,
                        metrics,
                        seconds,
                    };
                    progress(&cell);
                    cells.push(cell);
                }
            }
        }
        Ok(TableReport {
            recipe: self.clone(),
            cells,
            covariance_digests: digests,
        })
    }
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl TableReport {
    /// Metrics of every seed for one (scheme, model) row.
    pub fn row(&self, scheme: CovarianceScheme, model: &ModelSpec) -> Vec<Metrics> {
        self.cells
            .iter()
            .filter(|c| c.scheme == scheme && c.model == *model)
            .map(|c| c.metrics)
            .collect()
    }

    /// Mean over seeds of one metric.
    pub fn mean(&self, scheme: CovarianceScheme, model: &ModelSpec, f: impl Fn(&Metrics) -> f64) -> f64 {
        mean_std(&self.row(scheme, model).iter().map(f).collect::<Vec<_>>()).0
    }

    /// Plain-text table: one block per scheme, one line per model, columns
    /// precision, recall, F1, exact match, consistent as mean±std.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let title = if self.recipe.background {
            "link prediction (subject/object given)"
        } else {
            "joint multilabel classification"
        };
        let _ = writeln!(out, "# {title}, {} seed(s)", self.recipe.seeds.len());
        let _ = writeln!(out, "# {DIRECTIONAL_NOTE}");
        let _ = writeln!(
            out,
            "{:<8} {:<12} {:>13} {:>13} {:>13} {:>13} {:>13}",
            "scheme", "model", "precision", "recall", "f1", "exact", "consistent"
        );
        let fields: [fn(&Metrics) -> f64; 5] = [|m| m.precision, |m| m.recall, |m| m.f1, |m| m.exact_match, |m| m.consistent];
        for &scheme in &self.recipe.schemes {
            for model in &self.recipe.models {
                let rows = self.row(scheme, model);
                if rows.is_empty() {
                    continue;
                }
                let _ = write!(out, "{:<8} {:<12}", scheme.label(), model.name());
                for f in fields {
                    let (m, s) = mean_std(&rows.iter().map(f).collect::<Vec<_>>());
                    let _ = write!(out, " {:>13}", format!("{m:.3}±{s:.3}"));
                }
                out.push('\n');
            }
        }
        out
    }

    /// JSON report. Timings are kept but [`TableReport::checksum`] ignores
    /// them.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// SHA-256 over the report with timings zeroed.
    pub fn checksum(&self) -> String {
        let mut r = self.clone();
        r.cells.iter_mut().for_each(|c| c.seconds = 0.0);
        sha256_hex(serde_json::to_string(&r).expect("report serializes").as_bytes())
    }
}

/// Scalar versus batched evaluation throughput at one row count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    pub rows: usize,
    /// Median over repeats, rows per second.
    pub scalar_rows_per_sec: f64,
    pub batch_rows_per_sec: f64,
    pub speedup: f64,
    /// Both paths returned the same verdicts.
    pub identical: bool,
    pub consistent_rows: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Times a row-at-a-time loop against [`evaluate_batch_threads`] on
/// `rows` uniformly random assignments.
pub fn bench_reasoning<R: Rng + ?Sized>(c: &Circuit, rows: usize, repeat: usize, threads: usize, rng: &mut R) -> Result<BenchPoint> {
    let n = c.num_vars();
    let mut xs = BitMatrix::zeros(rows, n);
    for r in 0..rows {
        for v in 0..n {
            if rng.random_bool(0.5) {
                xs.set(r, v, true);
            }
        }
    }
    let mut scalar_t = Vec::new();
    let mut batch_t = Vec::new();
    let mut scalar = Vec::new();
    let mut batch = Vec::new();
    let mut row = vec![false; n];
    for _ in 0..repeat.max(1) {
        let t = Instant::now();
        scalar.clear();
        for r in 0..rows {
            for (v, b) in row.iter_mut().enumerate() {
                *b = xs.get(r, v);
            }
            scalar.push(c.evaluate(&row)?);
        }
        scalar_t.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        batch = evaluate_batch_threads(c, &xs, threads)?;
        batch_t.push(t.elapsed().as_secs_f64());
    }
    let per_sec = |secs: f64| rows as f64 / secs.max(1e-12);
    let s = per_sec(median(scalar_t));
    let b = per_sec(median(batch_t));
    Ok(BenchPoint {
        rows,
        scalar_rows_per_sec: s,
        batch_rows_per_sec: b,
        speedup: b / s,
        identical: scalar == batch,
        consistent_rows: batch.iter().filter(|&&x| x).count(),
    })
}

/// Size of the initial clause set for one generated ontology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnfSize {
    pub n_concepts: usize,
    pub n_roles: usize,
    pub seed: u64,
    pub vars: usize,
    pub clauses: usize,
    pub mean_clause_len: f64,
}

/// Builds the initial CNF of a generated ontology without compiling it.
pub fn cnf_size(cfg: &GenConfig) -> Result<CnfSize> {
    let o = normalize(&generate_ontology(cfg)?);
    let vm = varmap_for(&o, false);
    let cnf = build_d0_cnf(&o, &vm)?;
    let lits: usize = cnf.clauses.iter().map(Vec::len).sum();
    Ok(CnfSize {
        n_concepts: cfg.n_concepts,
        n_roles: cfg.n_roles,
        seed: cfg.seed,
        vars: cnf.num_vars,
        clauses: cnf.clauses.len(),
        mean_clause_len: lits as f64 / cnf.clauses.len().max(1) as f64,
    })
}

/// Mean clause count over the probability grid `p_d, p_r ∈ {0.3, 0.5,
/// 0.8}`, `p_c ∈ {0.3, 0.5, 1.0}` for each concept count.
pub fn cnf_growth(concepts: &[usize], n_roles: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
    const GRID: [f64; 3] = [0.3, 0.5, 0.8];
    const DISJOINT: [f64; 3] = [0.3, 0.5, 1.0];
    concepts
        .iter()
        .map(|&nc| {
            let mut total = 0.0;
            let mut count = 0.0;
            for &pd in &GRID {
                for &pr in &GRID {
                    for &pc in &DISJOINT {
                        let cfg = GenConfig {
                            n_concepts: nc,
                            n_roles,
                            p_domain: pd,
                            p_range: pr,
                            p_disjoint: pc,
                            seed,
                        };
                        total += cnf_size(&cfg)?.clauses as f64;
                        count += 1.0;
                    }
                }
            }
            Ok((nc, total / count))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::{extract_parts, parse_ontology};
    use crate::infer::evaluate;
    use crate::pipeline::compile_text;

    #[test]
    fn music_fixture_is_frozen() {
        let f = fixture_music();
        assert_eq!(f.checksum, MUSIC_SHA256);
        let (o, kg) = parse_ontology(f.source).unwrap();
        let parts: Vec<String> = extract_parts(&normalize(&o)).iter().map(|p| p.to_string()).collect();
        assert_eq!(parts, f.expected_parts);
        let co = compile_text(f.source, &CompileOptions::default()).unwrap();
        assert_eq!(co.varmap.total(), f.expected_vars);
        for e in &f.evaluations {
            let y = assertion_labels(&co, &kg, e.subject, e.role, e.object).unwrap();
            assert_eq!(evaluate(&co.label_circuit, &y).unwrap(), e.consistent, "{e:?}");
        }
    }

    #[test]
    fn recipes_have_table_shape() {
        let r2 = recipe_table2(&[0, 1, 2]);
        assert_eq!(r2.schemes.len() * r2.models.len(), 20);
        assert!(recipe_table3(&[0]).background);
        let report = TableReport {
            recipe: TableRecipe {
                schemes: vec![CovarianceScheme::Identity],
                ..r2
            },
            cells: vec![Cell {
                scheme: CovarianceScheme::Identity,
                model: ModelSpec::table_rows()[0],
                seed: 0,
                metrics: Metrics::default(),
                seconds: 1.0,
            }],
            covariance_digests: vec![],
        };
        let text = report.render();
        assert!(text.contains("MLP"));
        assert!(text.contains("0.000±0.000"));
        let mut slower = report.clone();
        slower.cells[0].seconds = 2.0;
        assert_eq!(report.checksum(), slower.checksum());
    }

    #[test]
    fn bench_paths_agree() {
        let co = compile_text(MUSIC_DSL, &CompileOptions::default()).unwrap();
        let p = bench_reasoning(&co.circuit, 500, 1, 2, &mut rng_from_seed(1)).unwrap();
        assert!(p.identical);
    }

    #[test]
    fn clause_counts_grow() {
        let g = cnf_growth(&[3, 6], 2, 0).unwrap();
        assert!(g[1].1 > g[0].1);
    }
}
