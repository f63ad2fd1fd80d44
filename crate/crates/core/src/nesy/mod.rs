//! Neural classifiers over label vectors: a factorized sigmoid baseline,
//! Semantic Loss training and a gated circuit output layer (SPL).
//!
//! Everything runs on a small reverse-mode tape in double precision. The
//! label circuit enters training through two fused tape operations, see
//! [`CircuitProgram`].

mod circuit;
mod tape;

use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use circuit::CircuitProgram;
pub use tape::{log_sigmoid, sigmoid, Adam, Mat, Params, Tape, Var};

use crate::datagen::{rng_from_seed, ObservationDataset};
use crate::error::{Error, Result};
use crate::infer::{self, InputDist, Parameterization, SumWeights};
use crate::pipeline::{CompiledOntology, LabelLayout};
use crate::sdd::Circuit;

/// Probability floor applied before the log in the Semantic Loss.
pub const SL_FLOOR: f64 = 1e-12;

/// The λ values swept for Semantic Loss.
pub const SL_LAMBDAS: [f64; 3] = [0.01, 0.001, 0.0001];

/// Output layer and training objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Independent sigmoid outputs trained with cross-entropy.
    Baseline,
    /// Sigmoid outputs trained with cross-entropy plus λ times Semantic Loss.
    Sl,
    /// Circuit output layer with gated sum weights, trained by likelihood.
    Spl,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Sl => "sl",
            Mode::Spl => "spl",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "sl" => Ok(Mode::Sl),
            "spl" => Ok(Mode::Spl),
            _ => Err(Error::InvalidParameter(format!("unknown mode `{s}`"))),
        }
    }
}

/// Training hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub mode: Mode,
    /// Semantic Loss weight; ignored outside [`Mode::Sl`].
    pub lambda: f64,
    /// Subject and object blocks are known at prediction time.
    pub background: bool,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            mode: Mode::Baseline,
            lambda: 0.0,
            background: false,
            hidden: vec![128, 128],
            epochs: 30,
            batch_size: 64,
            lr: 1e-3,
            seed: 0,
        }
    }
}

impl Hyper {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be a finite non-negative number");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return bad("learning rate must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        Ok(())
    }
}

/// A trained (or freshly initialized) classifier bound to a label circuit.
#[derive(Clone, Debug)]
pub struct NesyModel {
    pub hyper: Hyper,
    pub input_width: usize,
    pub label_width: usize,
    pub params: Params,
    layout: LabelLayout,
    circuit: Circuit,
    program: Rc<CircuitProgram>,
}

/// Per-epoch mean training loss.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_losses: Vec<f64>,
}

/// Multilabel classification metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact_match: f64,
    pub consistent: f64,
}

fn init_layer<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> (Mat, Mat) {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let mut draw = |n| (0..n).map(|_| rng.random_range(-bound..=bound)).collect::<Vec<f64>>();
    let w = Mat {
        rows: fan_in,
        cols: fan_out,
        data: draw(fan_in * fan_out),
    };
    let b = Mat {
        rows: 1,
        cols: fan_out,
        data: draw(fan_out),
    };
    (w, b)
}

impl NesyModel {
    /// A randomly initialized model for `co`'s label circuit.
    pub fn new(co: &CompiledOntology, input_width: usize, hyper: Hyper) -> Result<Self> {
        hyper.validate()?;
        if co.is_unsatisfiable() {
            return Err(Error::Unsatisfiable);
        }
        let program = CircuitProgram::new(&co.label_circuit)?;
        let label_width = co.label_layout.width();
        let out = match hyper.mode {
            Mode::Spl => program.num_gates(),
            _ => label_width,
        };
        let mut rng = rng_from_seed(hyper.seed);
        let mut values = Vec::new();
        let mut fan_in = input_width;
        for &h in hyper.hidden.iter().chain([out].iter()) {
            let (w, b) = init_layer(fan_in, h, &mut rng);
            values.push(w);
            values.push(b);
            fan_in = h;
        }
        Ok(NesyModel {
            hyper,
            input_width,
            label_width,
            params: Params::new(values),
            layout: co.label_layout.clone(),
            circuit: co.label_circuit.clone(),
            program: Rc::new(program),
        })
    }

    pub fn mode(&self) -> Mode {
        self.hyper.mode
    }

    pub fn program(&self) -> &CircuitProgram {
        &self.program
    }

    pub fn label_circuit(&self) -> &Circuit {
        &self.circuit
    }

    fn check_rows(&self, xs: &[Vec<f64>]) -> Result<()> {
        match xs.iter().find(|x| x.len() != self.input_width) {
            Some(x) => Err(Error::LengthMismatch {
                expected: self.input_width,
                found: x.len(),
            }),
            None => Ok(()),
        }
    }

    fn check_labels<T>(&self, ys: &[Vec<T>]) -> Result<()> {
        match ys.iter().find(|y| y.len() != self.label_width) {
            Some(y) => Err(Error::LengthMismatch {
                expected: self.label_width,
                found: y.len(),
            }),
            None => Ok(()),
        }
    }

    /// Records the network on `t`; returns the output logits (sigmoid
    /// logits or gate logits depending on the mode).
    fn forward(&self, t: &mut Tape, xs: &[Vec<f64>]) -> Var {
        let mut h = t.input(Mat::from_rows(xs));
        let layers = self.params.values.len() / 2;
        for l in 0..layers {
            let w = t.param(&self.params, 2 * l);
            let b = t.param(&self.params, 2 * l + 1);
            let z = t.matmul(h, w);
            h = t.add_bias(z, b);
            if l + 1 < layers {
                h = t.relu(h);
            }
        }
        h
    }

    fn outputs(&self, xs: &[Vec<f64>]) -> Mat {
        let mut t = Tape::new();
        let v = self.forward(&mut t, xs);
        t.value(v).clone()
    }

    /// Evidence for the background-knowledge setting: subject and object
    /// blocks of `y` fixed, roles free.
    pub fn background_evidence(&self, y: &[bool]) -> Vec<Option<bool>> {
        let roles = self.layout.role_range();
        y.iter()
            .enumerate()
            .map(|(i, &b)| if roles.contains(&i) { None } else { Some(b) })
            .collect()
    }

    fn evidence_rows(&self, ys: &[Vec<bool>]) -> Vec<Vec<Option<bool>>> {
        ys.iter()
            .map(|y| {
                if self.hyper.background {
                    self.background_evidence(y)
                } else {
                    vec![None; self.label_width]
                }
            })
            .collect()
    }

    /// Records the training objective for one batch.
    fn loss_on(&self, t: &mut Tape, xs: &[Vec<f64>], ys: &[Vec<bool>]) -> Var {
        let out = self.forward(t, xs);
        let targets = Rc::new(ys.to_vec());
        let evidence = Rc::new(self.evidence_rows(ys));
        match self.hyper.mode {
            Mode::Spl => t.spl_nll(out, self.program.clone(), targets, evidence),
            Mode::Baseline | Mode::Sl => {
                let roles = self.layout.role_range();
                let mask: Vec<bool> = (0..self.label_width)
                    .map(|i| !self.hyper.background || roles.contains(&i))
                    .collect();
                let ce = t.bce_logits(out, targets, Rc::new(mask));
                if self.hyper.mode == Mode::Sl && self.hyper.lambda > 0.0 {
                    let sl = t.semantic_loss(out, self.program.clone(), evidence, SL_FLOOR);
                    let sl = t.scale(sl, self.hyper.lambda);
                    t.add(ce, sl)
                } else {
                    ce
                }
            }
        }
    }

    /// Training objective on a batch.
    pub fn batch_loss(&self, xs: &[Vec<f64>], ys: &[Vec<bool>]) -> Result<f64> {
        self.check_rows(xs)?;
        self.check_labels(ys)?;
        let mut t = Tape::new();
        let l = self.loss_on(&mut t, xs, ys);
        Ok(t.value(l).data[0])
    }

    /// Training objective on a batch and its gradient in the flat
    /// parameter vector.
    pub fn batch_loss_grad(&mut self, xs: &[Vec<f64>], ys: &[Vec<bool>]) -> Result<(f64, Vec<f64>)> {
        self.check_rows(xs)?;
        self.check_labels(ys)?;
        self.params.zero_grad();
        let mut t = Tape::new();
        let l = self.loss_on(&mut t, xs, ys);
        t.backward(l, &mut self.params);
        Ok((t.value(l).data[0], self.params.flat_grads()))
    }

    /// Per-bit probabilities from the sigmoid heads.
    pub fn factorized_predict(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.check_rows(xs)?;
        if self.hyper.mode == Mode::Spl {
            return Err(Error::InvalidParameter("an SPL model has no sigmoid heads".into()));
        }
        let z = self.outputs(xs);
        Ok((0..z.rows).map(|r| z.row(r).iter().map(|&v| sigmoid(v)).collect()).collect())
    }

    /// As [`NesyModel::factorized_predict`] with subject and object blocks
    /// replaced by the indicators of the evidence.
    pub fn factorized_predict_bg(&self, xs: &[Vec<f64>], evidence_s: &[Vec<bool>], evidence_o: &[Vec<bool>]) -> Result<Vec<Vec<f64>>> {
        let mut probs = self.factorized_predict(xs)?;
        let nc = self.layout.concepts.len();
        for ((p, s), o) in probs.iter_mut().zip(evidence_s).zip(evidence_o) {
            if s.len() != nc || o.len() != nc {
                return Err(Error::LengthMismatch {
                    expected: nc,
                    found: if s.len() != nc { s.len() } else { o.len() },
                });
            }
            for (i, &b) in self.layout.subject_range().zip(s) {
                p[i] = b as u8 as f64;
            }
            for (i, &b) in self.layout.object_range().zip(o) {
                p[i] = b as u8 as f64;
            }
        }
        Ok(probs)
    }

    fn gates(&self, xs: &[Vec<f64>]) -> Result<Mat> {
        self.check_rows(xs)?;
        if self.hyper.mode != Mode::Spl {
            return Err(Error::InvalidParameter("only an SPL model has a gating head".into()));
        }
        Ok(self.outputs(xs))
    }

    /// `p(y | x)` under the gated circuit; 0 when `y` is not a model.
    pub fn spl_forward(&self, x: &[f64], y: &[bool]) -> Result<f64> {
        self.check_labels(std::slice::from_ref(&y.to_vec()))?;
        let g = self.gates(std::slice::from_ref(&x.to_vec()))?;
        let none = vec![None; self.label_width];
        Ok(self.program.gated_log_prob(g.row(0), y, &none).exp())
    }

    /// Gated parameterization of the label circuit for one gate row.
    fn gated_theta(&self, gates: &[f64]) -> Parameterization {
        Parameterization {
            inputs: vec![InputDist::Marginalized; self.label_width],
            weights: SumWeights::Explicit(self.program.node_weights(gates)),
        }
    }

    /// Most probable label vector under the gated circuit, optionally
    /// conditioned on a partial assignment.
    pub fn spl_predict(&self, xs: &[Vec<f64>], evidence: Option<&[Vec<Option<bool>>]>) -> Result<Vec<Vec<bool>>> {
        let g = self.gates(xs)?;
        let none = vec![None; self.label_width];
        (0..g.rows)
            .map(|r| {
                let ev = evidence.map_or(&none[..], |e| &e[r][..]);
                let q = infer::map_state(&self.circuit, &self.gated_theta(g.row(r)), ev)?;
                Ok(q.assignment.expect("map_state returns an assignment"))
            })
            .collect()
    }

    /// Hard predictions: thresholded probabilities for sigmoid models, MAP
    /// states for SPL. `gold` supplies the evidence in the background
    /// setting.
    pub fn predict(&self, xs: &[Vec<f64>], gold: &[Vec<bool>], threshold: f64) -> Result<Vec<Vec<bool>>> {
        match self.hyper.mode {
            Mode::Spl => {
                if self.hyper.background {
                    let ev = self.evidence_rows(gold);
                    self.spl_predict(xs, Some(&ev))
                } else {
                    self.spl_predict(xs, None)
                }
            }
            Mode::Baseline | Mode::Sl => {
                let probs = if self.hyper.background {
                    let s: Vec<Vec<bool>> = gold.iter().map(|y| y[self.layout.subject_range()].to_vec()).collect();
                    let o: Vec<Vec<bool>> = gold.iter().map(|y| y[self.layout.object_range()].to_vec()).collect();
                    self.factorized_predict_bg(xs, &s, &o)?
                } else {
                    self.factorized_predict(xs)?
                };
                Ok(probs
                    .into_iter()
                    .map(|p| p.into_iter().map(|v| v >= threshold).collect())
                    .collect())
            }
        }
    }

    /// Metrics at threshold 0.5. In the background setting precision,
    /// recall, F1 and exact match only look at the role block, which is the
    /// part being predicted; consistency always checks the full vector.
    pub fn evaluate(&self, ds: &ObservationDataset) -> Result<Metrics> {
        let pred = self.predict(&ds.rows, &ds.targets, 0.5)?;
        let cols = if self.hyper.background {
            self.layout.role_range()
        } else {
            0..self.label_width
        };
        let consistent = pred
            .iter()
            .map(|y| infer::evaluate(&self.circuit, y))
            .collect::<Result<Vec<bool>>>()?;
        Ok(compute_metrics(&pred, &ds.targets, &consistent, cols))
    }

    /// Serializes as a JSON header line followed by the little-endian
    /// parameter block.
    pub fn to_checkpoint(&self) -> Vec<u8> {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.into(),
            hyper: self.hyper.clone(),
            input_width: self.input_width,
            label_width: self.label_width,
            num_gates: self.program.num_gates(),
            shapes: self.params.values.iter().map(|m| (m.rows, m.cols)).collect(),
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        for v in self.params.flat() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Reads a checkpoint written by [`NesyModel::to_checkpoint`] for the
    /// same compiled ontology.
    pub fn from_checkpoint(bytes: &[u8], co: &CompiledOntology) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Schema("checkpoint has no header line".into()))?;
        let header: CheckpointHeader =
            serde_json::from_slice(&bytes[..nl]).map_err(|e| Error::Schema(format!("checkpoint header: {e}")))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(Error::Schema(format!("unknown checkpoint format `{}`", header.format)));
        }
        let mut model = NesyModel::new(co, header.input_width, header.hyper)?;
        let shapes: Vec<(usize, usize)> = model.params.values.iter().map(|m| (m.rows, m.cols)).collect();
        if shapes != header.shapes || model.label_width != header.label_width || model.program.num_gates() != header.num_gates {
            return Err(Error::Schema("checkpoint does not match the label circuit".into()));
        }
        let blob = &bytes[nl + 1..];
        if blob.len() != 8 * model.params.count() {
            return Err(Error::Schema(format!(
                "expected {} parameter bytes, found {}",
                8 * model.params.count(),
                blob.len()
            )));
        }
        let flat: Vec<f64> = blob
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        model.params.set_flat(&flat);
        Ok(model)
    }
}

const CHECKPOINT_FORMAT: &str = "dlcircuit-nesy-1";

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    hyper: Hyper,
    input_width: usize,
    label_width: usize,
    num_gates: usize,
    shapes: Vec<(usize, usize)>,
}

/// Trains a model with Adam on shuffled minibatches. Parameter
/// initialization and shuffling are driven by `hyper.seed` alone.
pub fn train(ds: &ObservationDataset, co: &CompiledOntology, hyper: Hyper) -> Result<(NesyModel, TrainLog)> {
    if ds.is_empty() {
        return Err(Error::InvalidParameter("empty training set".into()));
    }
    let width = ds.rows[0].len();
    let mut model = NesyModel::new(co, width, hyper)?;
    model.check_rows(&ds.rows)?;
    model.check_labels(&ds.targets)?;
    if model.hyper.mode == Mode::Spl {
        for (i, y) in ds.targets.iter().enumerate() {
            if !infer::evaluate(&model.circuit, y)? {
                return Err(Error::Schema(format!("target row {i} is not a model of the label circuit")));
            }
        }
    }
    let mut rng = rng_from_seed(model.hyper.seed ^ 0x5eed_5eed);
    let mut adam = Adam::new(&model.params, model.hyper.lr);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut log = TrainLog::default();
    for epoch in 0..model.hyper.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(model.hyper.batch_size) {
            let xs: Vec<Vec<f64>> = chunk.iter().map(|&i| ds.rows[i].clone()).collect();
            let ys: Vec<Vec<bool>> = chunk.iter().map(|&i| ds.targets[i].clone()).collect();
            let (loss, _) = model.batch_loss_grad(&xs, &ys)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!("loss {loss} at epoch {epoch}")));
            }
            total += loss * chunk.len() as f64;
            adam.step(&mut model.params);
        }
        log.epoch_losses.push(total / ds.len() as f64);
    }
    model.params.zero_grad();
    Ok((model, log))
}

/// Trains with Semantic Loss weight `lambda`.
pub fn train_sl(ds: &ObservationDataset, co: &CompiledOntology, lambda: f64, hyper: Hyper) -> Result<(NesyModel, TrainLog)> {
    train(ds, co, Hyper { mode: Mode::Sl, lambda, ..hyper })
}

/// Trains the gated circuit output layer.
pub fn train_spl(ds: &ObservationDataset, co: &CompiledOntology, hyper: Hyper) -> Result<(NesyModel, TrainLog)> {
    train(ds, co, Hyper { mode: Mode::Spl, ..hyper })
}

/// `-ln max(m, 1e-12)` where `m` is the mass independent Bernoulli labels
/// place on models of `label_circuit`.
pub fn semantic_loss(label_circuit: &Circuit, probs: &[f64]) -> Result<f64> {
    let m = infer::wmc(label_circuit, &Parameterization::bernoulli(probs))?;
    Ok(-m.max(SL_FLOOR).ln())
}

/// Micro-averaged precision/recall/F1 over `cols`, exact match over `cols`
/// and the fraction of `consistent` flags set.
pub fn compute_metrics(pred: &[Vec<bool>], gold: &[Vec<bool>], consistent: &[bool], cols: std::ops::Range<usize>) -> Metrics {
    let (mut tp, mut fp, mut fneg, mut exact) = (0usize, 0usize, 0usize, 0usize);
    for (p, g) in pred.iter().zip(gold) {
        let mut all = true;
        for c in cols.clone() {
            match (p[c], g[c]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
            all &= p[c] == g[c];
        }
        exact += all as usize;
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Metrics {
        precision,
        recall,
        f1,
        exact_match: ratio(exact, pred.len()),
        consistent: ratio(consistent.iter().filter(|&&c| c).count(), consistent.len()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_ontology, sample_individuals, sample_kg, synthesize_dataset, CovarianceScheme, GenConfig, RowPlan};
    use crate::fixtures::MUSIC_DSL;
    use crate::pipeline::{compile_ontology, compile_text, CompileOptions};

    fn music() -> CompiledOntology {
        compile_text(MUSIC_DSL, &CompileOptions::default()).unwrap()
    }

    fn models(c: &Circuit) -> Vec<Vec<bool>> {
        c.enumerate_models(1 << 20).models
    }

    fn small_hyper(mode: Mode, seed: u64) -> Hyper {
        Hyper {
            mode,
            lambda: 0.5,
            hidden: vec![5],
            seed,
            ..Hyper::default()
        }
    }

    fn rand_rows(n: usize, w: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| (0..w).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    /// Directional central differences against the tape gradient.
    fn grad_check(model: &mut NesyModel, xs: &[Vec<f64>], ys: &[Vec<bool>], seed: u64) {
        let mut rng = rng_from_seed(seed);
        let (_, g) = model.batch_loss_grad(xs, ys).unwrap();
        let theta = model.params.flat();
        let d: Vec<f64> = (0..theta.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = 1e-5;
        let at = |m: &mut NesyModel, s: f64| {
            let t: Vec<f64> = theta.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            m.params.set_flat(&t);
            m.batch_loss(xs, ys).unwrap()
        };
        let fd = (at(model, h) - at(model, -h)) / (2.0 * h);
        model.params.set_flat(&theta);
        let an: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
        assert!(rel < 1e-4, "fd {fd} analytic {an} rel {rel}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        let co = music();
        let ms = models(&co.label_circuit);
        let w = co.label_layout.width();
        for (k, mode) in [Mode::Baseline, Mode::Sl, Mode::Spl].into_iter().enumerate() {
            for bg in [false, true] {
                let mut m = NesyModel::new(&co, w, Hyper { background: bg, ..small_hyper(mode, k as u64) }).unwrap();
                let xs = rand_rows(4, w, 7 + k as u64);
                let ys: Vec<Vec<bool>> = (0..4).map(|i| ms[(i * 3 + k) % ms.len()].clone()).collect();
                grad_check(&mut m, &xs, &ys, 99);
            }
        }
    }

    #[test]
    fn spl_normalizes_and_zeroes_non_models() {
        let co = music();
        let w = co.label_layout.width();
        let m = NesyModel::new(&co, w, small_hyper(Mode::Spl, 3)).unwrap();
        let x = rand_rows(1, w, 1).pop().unwrap();
        let mut total = 0.0;
        for bits in 0u32..1 << w {
            let y: Vec<bool> = (0..w).map(|i| bits >> i & 1 == 1).collect();
            let p = m.spl_forward(&x, &y).unwrap();
            if infer::evaluate(&co.label_circuit, &y).unwrap() {
                total += p;
            } else {
                assert_eq!(p, 0.0);
            }
        }
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spl_predict_is_brute_force_argmax() {
        let co = music();
        let w = co.label_layout.width();
        let m = NesyModel::new(&co, w, small_hyper(Mode::Spl, 4)).unwrap();
        let ms = models(&co.label_circuit);
        for x in rand_rows(10, w, 2) {
            let y = m.spl_predict(std::slice::from_ref(&x), None).unwrap().pop().unwrap();
            let best = ms
                .iter()
                .map(|y| m.spl_forward(&x, y).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((m.spl_forward(&x, &y).unwrap() - best).abs() < 1e-12);
            let ev = m.background_evidence(&ms[1]);
            let yb = m.spl_predict(std::slice::from_ref(&x), Some(std::slice::from_ref(&ev))).unwrap().pop().unwrap();
            for (b, e) in yb.iter().zip(&ev) {
                if let Some(e) = e {
                    assert_eq!(b, e);
                }
            }
            assert!(infer::evaluate(&co.label_circuit, &yb).unwrap());
        }
    }

    #[test]
    fn semantic_loss_matches_enumeration() {
        let co = music();
        let w = co.label_layout.width();
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let p: Vec<f64> = (0..w).map(|_| rng.random_range(0.0..1.0)).collect();
            let mut good = 0.0;
            let mut bad = 0.0;
            for bits in 0u32..1 << w {
                let y: Vec<bool> = (0..w).map(|i| bits >> i & 1 == 1).collect();
                let mass: f64 = y.iter().zip(&p).map(|(&b, &q)| if b { q } else { 1.0 - q }).product();
                if infer::evaluate(&co.label_circuit, &y).unwrap() {
                    good += mass;
                } else {
                    bad += mass;
                }
            }
            let sl = semantic_loss(&co.label_circuit, &p).unwrap();
            assert!((sl + good.ln()).abs() < 1e-9);
            assert!(((-sl).exp() + bad - 1.0).abs() < 1e-9);
            let z: Vec<f64> = p.iter().map(|q| (q / (1.0 - q)).ln()).collect();
            let lm = CircuitProgram::new(&co.label_circuit).unwrap().bernoulli_log_mass(&z, &vec![None; w]);
            assert!((lm - good.ln()).abs() < 1e-9);
        }
        let model = &models(&co.label_circuit)[0];
        let onehot: Vec<f64> = model.iter().map(|&b| b as u8 as f64).collect();
        assert_eq!(semantic_loss(&co.label_circuit, &onehot).unwrap(), 0.0);
        let mut non = model.clone();
        non[co.label_layout.subject(0)] = true;
        non[co.label_layout.subject(1)] = true;
        let onehot: Vec<f64> = non.iter().map(|&b| b as u8 as f64).collect();
        assert!((semantic_loss(&co.label_circuit, &onehot).unwrap() + SL_FLOOR.ln()).abs() < 1e-12);
    }

    #[test]
    fn metrics_recount() {
        let mut rng = rng_from_seed(8);
        let pred: Vec<Vec<bool>> = (0..20).map(|_| (0..6).map(|_| rng.random_bool(0.5)).collect()).collect();
        let gold: Vec<Vec<bool>> = (0..20).map(|_| (0..6).map(|_| rng.random_bool(0.5)).collect()).collect();
        let cons: Vec<bool> = (0..20).map(|i| i % 4 != 0).collect();
        let m = compute_metrics(&pred, &gold, &cons, 0..6);
        let flat = |f: &dyn Fn(bool, bool) -> bool| {
            pred.iter()
                .flatten()
                .zip(gold.iter().flatten())
                .filter(|(p, g)| f(**p, **g))
                .count() as f64
        };
        let tp = flat(&|p, g| p && g);
        assert!((m.precision - tp / flat(&|p, _| p)).abs() < 1e-15);
        assert!((m.recall - tp / flat(&|_, g| g)).abs() < 1e-15);
        let exact = pred.iter().zip(&gold).filter(|(p, g)| p == g).count() as f64 / 20.0;
        assert_eq!(m.exact_match, exact);
        assert_eq!(m.consistent, 0.75);
        let perfect = compute_metrics(&gold, &gold, &[true; 20], 0..6);
        assert_eq!((perfect.f1, perfect.exact_match, perfect.consistent), (1.0, 1.0, 1.0));
        let zeros = vec![vec![false; 3]; 2];
        let z = compute_metrics(&zeros, &zeros, &[true, true], 0..3);
        assert_eq!((z.precision, z.recall, z.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn zero_weights_give_half() {
        let co = music();
        let w = co.label_layout.width();
        let mut m = NesyModel::new(&co, w, small_hyper(Mode::Baseline, 0)).unwrap();
        let n = m.params.count();
        m.params.set_flat(&vec![0.0; n]);
        let p = m.factorized_predict(&rand_rows(3, w, 0)).unwrap();
        assert!(p.iter().flatten().all(|&v| v == 0.5));
        let s = vec![vec![true, false]; 3];
        let o = vec![vec![false, true]; 3];
        let pb = m.factorized_predict_bg(&rand_rows(3, w, 0), &s, &o).unwrap();
        assert_eq!(&pb[0][..2], &[1.0, 0.0]);
        assert_eq!(pb[0][co.label_layout.role(0)], 0.5);
    }

    fn tiny_dataset(seed: u64) -> (CompiledOntology, ObservationDataset) {
        let o = generate_ontology(&GenConfig {
            n_concepts: 4,
            n_roles: 2,
            p_domain: 0.5,
            p_range: 0.5,
            p_disjoint: 1.0,
            seed,
        })
        .unwrap();
        let co = compile_ontology(&o, &CompileOptions::default()).unwrap();
        let mut rng = rng_from_seed(seed);
        let inds = sample_individuals(&co, 12, &mut rng).unwrap();
        let kg = sample_kg(&co, &inds, &mut rng).unwrap();
        let ds = synthesize_dataset(&kg, &co, CovarianceScheme::Identity, RowPlan::Total(120), &mut rng).unwrap();
        (co, ds)
    }

    #[test]
    fn training_is_deterministic_and_lambda_zero_is_baseline() {
        let (co, ds) = tiny_dataset(2);
        let h = Hyper {
            hidden: vec![16],
            epochs: 3,
            seed: 9,
            ..Hyper::default()
        };
        let (a, la) = train(&ds, &co, h.clone()).unwrap();
        let (b, lb) = train(&ds, &co, h.clone()).unwrap();
        assert_eq!(la, lb);
        assert_eq!(a.params, b.params);
        let (c, lc) = train_sl(&ds, &co, 0.0, h.clone()).unwrap();
        assert_eq!(la, lc);
        assert_eq!(a.params.flat(), c.params.flat());
        let (s, _) = train_spl(&ds, &co, h).unwrap();
        let m = s.evaluate(&ds).unwrap();
        assert_eq!(m.consistent, 1.0);
    }

    #[test]
    fn spl_memorizes_ten_rows() {
        let (co, ds) = tiny_dataset(3);
        let (small, _) = ds.split(10);
        let h = Hyper {
            hidden: vec![32],
            epochs: 200,
            batch_size: 10,
            lr: 1e-3,
            seed: 1,
            ..Hyper::default()
        };
        let (_, log) = train_spl(&small, &co, h).unwrap();
        for w in log.epoch_losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let (co, ds) = tiny_dataset(4);
        let h = Hyper {
            hidden: vec![8, 8],
            epochs: 1,
            background: true,
            seed: 2,
            ..Hyper::default()
        };
        let (m, _) = train_spl(&ds, &co, h).unwrap();
        let bytes = m.to_checkpoint();
        let back = NesyModel::from_checkpoint(&bytes, &co).unwrap();
        assert_eq!(back.params, m.params);
        assert_eq!(back.hyper, m.hyper);
        assert!(NesyModel::from_checkpoint(&bytes[..bytes.len() - 1], &co).is_err());
        assert_eq!(back.evaluate(&ds).unwrap(), m.evaluate(&ds).unwrap());
    }
}
