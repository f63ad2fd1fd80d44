//! `dlcircuit` command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 unsatisfiable ontology, 3 resource
//! cap, 4 I/O or schema error. Every command writes a JSON manifest next to
//! its outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use dlcircuit::cnf::{build_d0_cnf, dimacs_string};
use dlcircuit::datagen::{
    generate_ontology, rng_from_seed, sample_individuals, sample_kg, synthesize_dataset, CovarianceScheme, GenConfig,
    ObservationDataset, RowPlan, SyntheticKg,
};
use dlcircuit::fixtures::{bench_reasoning, mean_std, recipe_table2, recipe_table3};
use dlcircuit::infer::{evaluate_batch_threads, read_assignments, write_results, BitMatrix};
use dlcircuit::nesy::{train, Hyper, Metrics, Mode, NesyModel};
use dlcircuit::pipeline::{compile_text, read_bundle, write_bundle, CompileOptions, CompiledOntology, VTreeStrategyName, NODE_CAP_ENV};
use dlcircuit::Error;

const BUILD_ID: &str = concat!("dlcircuit ", env!("CARGO_PKG_VERSION"));

#[derive(Parser)]
#[command(name = "dlcircuit", version = env!("CARGO_PKG_VERSION"), about = "Compile description-logic ontologies to circuits and use them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile an ontology to a circuit bundle.
    Compile(CompileArgs),
    /// Check assignments against a compiled bundle.
    Reason(ReasonArgs),
    /// Generate synthetic ontologies, knowledge graphs and datasets.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Train classifiers over one or more seeds.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Scalar versus batched reasoning throughput.
    Bench(BenchArgs),
    /// Run a full multilabel or link-prediction table recipe.
    Table(TableArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum VtreeArg {
    Balanced,
    RightLinear,
}

#[derive(Args, Serialize)]
struct CompileArgs {
    /// Ontology in the text DSL.
    input: PathBuf,
    /// Bundle directory to create.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "balanced")]
    vtree: VtreeArg,
    /// Give `r` and `r⁻` separate variables.
    #[arg(long)]
    split_inverses: bool,
    /// Abort once the circuit manager holds this many nodes.
    #[arg(long, env = NODE_CAP_ENV)]
    node_cap: Option<usize>,
    /// Also write the initial CNF in DIMACS form.
    #[arg(long)]
    dimacs: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ReasonArgs {
    bundle: PathBuf,
    /// Tab-separated 0/1 assignments with a varmap header.
    assignments: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Rows evaluated per chunk.
    #[arg(long, default_value_t = 65_536)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum GenerateCmd {
    /// Random ontology with disjointness and domain/range axioms.
    Ontology(GenOntologyArgs),
    /// Individuals and pairwise dominoes sampled from a bundle.
    Kg(GenKgArgs),
    /// Noisy observation rows for a knowledge graph.
    Dataset(GenDatasetArgs),
}

#[derive(Args, Serialize)]
struct GenOntologyArgs {
    #[arg(long, default_value_t = 10)]
    concepts: usize,
    #[arg(long, default_value_t = 5)]
    roles: usize,
    #[arg(long, default_value_t = 0.5)]
    p_domain: f64,
    #[arg(long, default_value_t = 0.5)]
    p_range: f64,
    #[arg(long, default_value_t = 1.0)]
    p_disjoint: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file, conventionally `ontology.dsl`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct GenKgArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Number of individuals.
    #[arg(long, default_value_t = 100)]
    individuals: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file, conventionally `kg.tsv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct GenDatasetArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    kg: PathBuf,
    /// identity, diag-normal, wishart, inv-wishart or zero.
    #[arg(long, default_value = "identity")]
    scheme: String,
    /// Rows per pair.
    #[arg(long, conflicts_with = "total")]
    per_pair: Option<usize>,
    /// Total rows, each from a uniformly drawn pair.
    #[arg(long)]
    total: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file, conventionally `dataset.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize, Clone)]
struct ModelArgs {
    #[arg(long, default_value = "baseline")]
    mode: String,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Subject and object blocks are given as evidence.
    #[arg(long)]
    bg: bool,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "128,128")]
    hidden: Vec<usize>,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Repeat for several initializations.
    #[arg(long = "seed", default_values_t = [0u64])]
    seeds: Vec<u64>,
    /// Leading rows used for training; the rest is the test split.
    #[arg(long)]
    train_rows: Option<usize>,
    /// Directory for checkpoints and metrics.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Skip this many leading rows (the training split).
    #[arg(long, default_value_t = 0)]
    skip_rows: usize,
    /// Metrics JSON file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    bundle: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000,1000000")]
    rows: Vec<usize>,
    /// Timings are the median over this many runs.
    #[arg(long, default_value_t = 3)]
    repeat: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for `bench.json` and `bench.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct TableArgs {
    /// 2 for joint multilabel classification, 3 for link prediction.
    #[arg(value_parser = ["2", "3"])]
    table: String,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// Failure carrying its exit code.
struct Fail {
    code: u8,
    message: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) => 1,
            Error::Unsatisfiable => 2,
            Error::NodeCap { .. } | Error::LimitExceeded { .. } | Error::EnumerationCap { .. } => 3,
            _ => 4,
        };
        Fail {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

fn usage(message: impl Into<String>) -> Fail {
    Fail {
        code: 1,
        message: message.into(),
    }
}

fn schema(message: impl Into<String>) -> Fail {
    Fail {
        code: 4,
        message: message.into(),
    }
}

type CmdResult = Result<u8, Fail>;

struct Manifest {
    command: &'static str,
    config: Value,
    seeds: Vec<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    start: Instant,
}

impl Manifest {
    fn new(command: &'static str, config: &impl Serialize, seeds: Vec<u64>) -> Self {
        Manifest {
            command,
            config: serde_json::to_value(config).expect("arguments serialize"),
            seeds,
            inputs: Vec::new(),
            outputs: Vec::new(),
            start: Instant::now(),
        }
    }

    fn write(&self, path: &Path) -> Result<(), Fail> {
        let v = json!({
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_clock_seconds": self.start.elapsed().as_secs_f64(),
            "version": BUILD_ID,
        });
        write_file(path, serde_json::to_string_pretty(&v)? + "\n")
    }
}

/// Manifest path for a single output file: `<file>.manifest.json`.
fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Fail> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| schema(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| schema(format!("{}: {e}", path.display())))
}

fn load_bundle(dir: &Path) -> Result<CompiledOntology, Fail> {
    read_bundle(dir).map_err(|e| {
        let f = Fail::from(e);
        Fail {
            code: f.code,
            message: format!("{}: {}", dir.display(), f.message),
        }
    })
}

fn cmd_compile(a: &CompileArgs) -> CmdResult {
    let mut m = Manifest::new("compile", a, vec![]);
    let mut options = CompileOptions {
        vtree: match a.vtree {
            VtreeArg::Balanced => VTreeStrategyName::Balanced,
            VtreeArg::RightLinear => VTreeStrategyName::RightLinear,
        },
        split_inverses: a.split_inverses,
        ..Default::default()
    };
    if let Some(cap) = a.node_cap {
        options.node_cap = cap;
    }
    let text = read_text(&a.input)?;
    m.inputs.push(a.input.clone());
    if let Some(path) = &a.dimacs {
        let (o, _) = dlcircuit::dl::parse_ontology(&text)?;
        let n = dlcircuit::dl::normalize(&o);
        let vm = dlcircuit::cnf::varmap_for(&n, a.split_inverses);
        write_file(path, dimacs_string(&build_d0_cnf(&n, &vm)?))?;
        m.outputs.push(path.clone());
    }
    let co = compile_text(&text, &options)?;
    write_bundle(&co, &a.out)?;
    m.outputs.push(a.out.clone());
    m.write(&a.out.join("manifest.json"))?;
    let s = &co.stats;
    eprintln!(
        "{} variables, {} circuit nodes, {} label nodes, {} refinement rounds",
        co.varmap.total(),
        s.circuit_nodes,
        s.label_nodes,
        s.refinement_rounds
    );
    if co.is_unsatisfiable() {
        eprintln!("error: the ontology is unsatisfiable; bundle written to {}", a.out.display());
        return Ok(2);
    }
    Ok(0)
}

fn cmd_reason(a: &ReasonArgs) -> CmdResult {
    if a.batch_size == 0 || a.threads == 0 {
        return Err(usage("--batch-size and --threads must be positive"));
    }
    let mut m = Manifest::new("reason", a, vec![]);
    let co = load_bundle(&a.bundle)?;
    let columns: Vec<String> = (0..co.varmap.total()).map(|v| co.varmap.column_name(v)).collect();
    let text = read_text(&a.assignments)?;
    m.inputs.extend([a.bundle.clone(), a.assignments.clone()]);
    if text.trim().is_empty() {
        write_file(&a.out, "")?;
    } else {
        let xs = read_assignments(&text, &columns)?;
        let start = Instant::now();
        let mut results = Vec::with_capacity(xs.rows());
        for lo in (0..xs.rows()).step_by(a.batch_size) {
            let hi = (lo + a.batch_size).min(xs.rows());
            let mut chunk = BitMatrix::zeros(hi - lo, xs.cols());
            for r in lo..hi {
                chunk.row_words_mut(r - lo).copy_from_slice(xs.row_words(r));
            }
            results.extend(evaluate_batch_threads(&co.circuit, &chunk, a.threads)?);
        }
        let secs = start.elapsed().as_secs_f64();
        eprintln!(
            "{} rows, {} consistent, {:.0} rows/sec",
            xs.rows(),
            results.iter().filter(|&&b| b).count(),
            xs.rows() as f64 / secs.max(1e-12)
        );
        write_file(&a.out, write_results(&columns, &xs, &results, "consistent"))?;
    }
    m.outputs.push(a.out.clone());
    m.write(&sidecar(&a.out))?;
    Ok(0)
}

fn cmd_generate(g: &GenerateCmd) -> CmdResult {
    match g {
        GenerateCmd::Ontology(a) => {
            let m = Manifest::new("generate ontology", a, vec![a.seed]);
            let cfg = GenConfig {
                n_concepts: a.concepts,
                n_roles: a.roles,
                p_domain: a.p_domain,
                p_range: a.p_range,
                p_disjoint: a.p_disjoint,
                seed: a.seed,
            };
            let o = generate_ontology(&cfg)?;
            write_file(&a.out, o.to_dsl())?;
            finish(m, &a.out)
        }
        GenerateCmd::Kg(a) => {
            let mut m = Manifest::new("generate kg", a, vec![a.seed]);
            let co = load_bundle(&a.bundle)?;
            m.inputs.push(a.bundle.clone());
            let mut rng = rng_from_seed(a.seed);
            let inds = sample_individuals(&co, a.individuals, &mut rng)?;
            let kg = sample_kg(&co, &inds, &mut rng)?;
            if !kg.skipped.is_empty() {
                eprintln!("{} pairs had no consistent domino and were skipped", kg.skipped.len());
            }
            write_file(&a.out, kg.to_tsv(&co))?;
            finish(m, &a.out)
        }
        GenerateCmd::Dataset(a) => {
            let mut m = Manifest::new("generate dataset", a, vec![a.seed]);
            let scheme: CovarianceScheme = a.scheme.parse()?;
            let plan = match (a.per_pair, a.total) {
                (Some(k), None) => RowPlan::PerPair(k),
                (None, Some(n)) => RowPlan::Total(n),
                (None, None) => RowPlan::PerPair(1),
                (Some(_), Some(_)) => unreachable!("clap rejects both"),
            };
            let co = load_bundle(&a.bundle)?;
            let kg = SyntheticKg::from_tsv(&read_text(&a.kg)?, &co)?;
            m.inputs.extend([a.bundle.clone(), a.kg.clone()]);
            let ds = synthesize_dataset(&kg, &co, scheme, plan, &mut rng_from_seed(a.seed))?;
            write_file(&a.out, ds.to_csv())?;
            eprintln!("{} rows of width {}", ds.len(), ds.width());
            m.config["covariance_digest"] = json!(ds.covariance_digest);
            finish(m, &a.out)
        }
    }
}

fn finish(mut m: Manifest, out: &Path) -> CmdResult {
    m.outputs.push(out.to_path_buf());
    m.write(&sidecar(out))?;
    Ok(0)
}

fn hyper_from(a: &ModelArgs, seed: u64) -> Result<Hyper, Fail> {
    Ok(Hyper {
        mode: a.mode.parse::<Mode>()?,
        lambda: a.lambda,
        background: a.bg,
        hidden: a.hidden.clone(),
        epochs: a.epochs,
        batch_size: a.batch_size,
        lr: a.lr,
        seed,
    })
}

fn load_dataset(co: &CompiledOntology, path: &Path) -> Result<ObservationDataset, Fail> {
    let ds = ObservationDataset::from_csv(&read_text(path)?)?;
    let width = co.label_layout.width();
    if !ds.is_empty() && ds.width() != width {
        return Err(schema(format!(
            "{}: label width {} does not match the bundle's {width}",
            path.display(),
            ds.width()
        )));
    }
    Ok(ds)
}

fn metrics_summary(all: &[Metrics]) -> Value {
    let field = |f: fn(&Metrics) -> f64| {
        let (mean, std) = mean_std(&all.iter().map(f).collect::<Vec<_>>());
        json!({ "mean": mean, "std": std })
    };
    json!({
        "precision": field(|m| m.precision),
        "recall": field(|m| m.recall),
        "f1": field(|m| m.f1),
        "exact_match": field(|m| m.exact_match),
        "consistent": field(|m| m.consistent),
    })
}

fn cmd_train(a: &TrainArgs) -> CmdResult {
    let mut m = Manifest::new("train", a, a.seeds.clone());
    let co = load_bundle(&a.bundle)?;
    let ds = load_dataset(&co, &a.data)?;
    m.inputs.extend([a.bundle.clone(), a.data.clone()]);
    let n_train = a.train_rows.unwrap_or(ds.len() * 2 / 3);
    if n_train == 0 || n_train > ds.len() {
        return Err(usage(format!("--train-rows must be in 1..={}", ds.len())));
    }
    let (train_ds, test_ds) = ds.split(n_train);
    fs::create_dir_all(&a.out)?;
    let mut per_seed = Vec::new();
    let mut all = Vec::new();
    for &seed in &a.seeds {
        let (model, log) = train(&train_ds, &co, hyper_from(&a.model, seed)?)?;
        let metrics = if test_ds.is_empty() { model.evaluate(&train_ds)? } else { model.evaluate(&test_ds)? };
        let ckpt = a.out.join(format!("model-seed{seed}.ckpt"));
        write_file(&ckpt, model.to_checkpoint())?;
        m.outputs.push(ckpt.clone());
        eprintln!(
            "seed {seed}: final loss {:.4}, f1 {:.3}, exact {:.3}, consistent {:.3}",
            log.epoch_losses.last().copied().unwrap_or(f64::NAN),
            metrics.f1,
            metrics.exact_match,
            metrics.consistent
        );
        per_seed.push(json!({ "seed": seed, "checkpoint": ckpt, "metrics": metrics, "epoch_losses": log.epoch_losses }));
        all.push(metrics);
    }
    let report = json!({
        "mode": a.model.mode,
        "lambda": a.model.lambda,
        "background": a.model.bg,
        "train_rows": train_ds.len(),
        "test_rows": test_ds.len(),
        "runs": per_seed,
        "summary": metrics_summary(&all),
    });
    let path = a.out.join("metrics.json");
    write_file(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    m.outputs.push(path);
    m.write(&a.out.join("manifest.json"))?;
    Ok(0)
}

fn cmd_eval(a: &EvalArgs) -> CmdResult {
    let mut m = Manifest::new("eval", a, vec![]);
    let co = load_bundle(&a.bundle)?;
    let bytes = fs::read(&a.model).map_err(|e| schema(format!("{}: {e}", a.model.display())))?;
    let model = NesyModel::from_checkpoint(&bytes, &co)?;
    m.seeds.push(model.hyper.seed);
    let ds = load_dataset(&co, &a.data)?;
    m.inputs.extend([a.bundle.clone(), a.model.clone(), a.data.clone()]);
    let (_, test) = ds.split(a.skip_rows);
    if !test.is_empty() && test.rows[0].len() != model.input_width {
        return Err(schema(format!(
            "dataset rows have width {}, the model expects {}",
            test.rows[0].len(),
            model.input_width
        )));
    }
    let metrics = model.evaluate(&test)?;
    write_file(&a.out, serde_json::to_string_pretty(&metrics)? + "\n")?;
    finish(m, &a.out)
}

fn cmd_bench(a: &BenchArgs) -> CmdResult {
    if a.threads == 0 {
        return Err(usage("--threads must be positive"));
    }
    let mut m = Manifest::new("bench", a, vec![a.seed]);
    let co = load_bundle(&a.bundle)?;
    m.inputs.push(a.bundle.clone());
    let mut rng = rng_from_seed(a.seed);
    let mut points = Vec::new();
    for &rows in &a.rows {
        let p = bench_reasoning(&co.circuit, rows, a.repeat, a.threads, &mut rng)?;
        eprintln!(
            "{rows} rows: scalar {:.0}/s, batch {:.0}/s, speedup {:.1}",
            p.scalar_rows_per_sec, p.batch_rows_per_sec, p.speedup
        );
        points.push(p);
    }
    fs::create_dir_all(&a.out)?;
    let json_path = a.out.join("bench.json");
    write_file(&json_path, serde_json::to_string_pretty(&points)? + "\n")?;
    let mut csv = String::from("rows,scalar_rows_per_sec,batch_rows_per_sec,speedup,identical\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.rows, p.scalar_rows_per_sec, p.batch_rows_per_sec, p.speedup, p.identical
        ));
    }
    let csv_path = a.out.join("bench.csv");
    write_file(&csv_path, csv)?;
    m.outputs.extend([json_path, csv_path]);
    m.write(&a.out.join("manifest.json"))?;
    Ok(0)
}

fn cmd_table(a: &TableArgs) -> CmdResult {
    let m = Manifest::new("table", a, a.seeds.clone());
    let recipe = if a.table == "2" { recipe_table2(&a.seeds) } else { recipe_table3(&a.seeds) };
    let report = recipe.run(|c| {
        eprintln!(
            "{} {} seed {}: f1 {:.3} exact {:.3} consistent {:.3} ({:.1}s)",
            c.scheme.label(),
            c.model.name(),
            c.seed,
            c.metrics.f1,
            c.metrics.exact_match,
            c.metrics.consistent,
            c.seconds
        )
    })?;
    fs::create_dir_all(&a.out)?;
    let txt = a.out.join("report.txt");
    let js = a.out.join("report.json");
    write_file(&txt, report.render())?;
    write_file(&js, report.to_json())?;
    print!("{}", report.render());
    let mut m = m;
    m.config["checksum"] = json!(report.checksum());
    m.outputs.extend([txt, js]);
    m.write(&a.out.join("manifest.json"))?;
    Ok(0)
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Reason(a) => cmd_reason(a),
        Command::Generate(g) => cmd_generate(g),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Table(a) => cmd_table(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
