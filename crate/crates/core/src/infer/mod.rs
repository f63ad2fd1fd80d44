//! Queries on compiled circuits: membership checks, weighted model counts,
//! marginalization, sampling and MAP states.
//!
//! Weighted queries expect a smooth circuit (see [`crate::sdd::smooth`]) and
//! run in log-space. Two readings of the sum weights are supported:
//!
//! * [`SumWeights::Uniform`]: every element weighs 1. [`wmc`] returns the
//!   probability, under the input distributions, that the non-marginalized
//!   variables take values that extend to a model. Marginalized variables
//!   are projected away first, so all-Marginalized inputs give 1 on any
//!   satisfiable circuit.
//! * [`SumWeights::Explicit`]: the circuit is a probabilistic circuit with the
//!   given element weights. [`wmc`] returns the circuit's value with
//!   Marginalized inputs set to 1 on both literals, divided by the value with
//!   every input Marginalized.
//!
//! Sampling and MAP always follow the probabilistic-circuit reading, with
//! unit weights in the uniform case; that is, under uniform weights and
//! Marginalized inputs samples are uniform over the models.

mod batch;

pub use batch::{evaluate_batch, evaluate_batch_threads, read_assignments, write_results, BitMatrix};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sdd::{Circuit, CircuitNode};

/// Distribution of one input variable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InputDist {
    Indicator(bool),
    /// Probability of the variable being true.
    Bernoulli(f64),
    Marginalized,
}

/// Weights of the decision elements.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum SumWeights {
    #[default]
    Uniform,
    /// Indexed by circuit node; entries of non-decision nodes are ignored and
    /// may be empty. Each decision's weights must sum to 1.
    Explicit(Vec<Vec<f64>>),
}

/// Input distributions plus sum weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Parameterization {
    pub inputs: Vec<InputDist>,
    pub weights: SumWeights,
}

impl Parameterization {
    /// Every input Marginalized, uniform weights.
    pub fn marginalized(num_vars: usize) -> Self {
        Parameterization {
            inputs: vec![InputDist::Marginalized; num_vars],
            weights: SumWeights::Uniform,
        }
    }

    /// Boolean mode: every input an indicator of `x`.
    pub fn indicators(x: &[bool]) -> Self {
        Parameterization {
            inputs: x.iter().map(|&b| InputDist::Indicator(b)).collect(),
            weights: SumWeights::Uniform,
        }
    }

    /// Independent Bernoulli inputs.
    pub fn bernoulli(probs: &[f64]) -> Self {
        Parameterization {
            inputs: probs.iter().map(|&p| InputDist::Bernoulli(p)).collect(),
            weights: SumWeights::Uniform,
        }
    }

    /// Overrides inputs with the fixed values of `evidence`.
    pub fn with_evidence(&self, evidence: &[Option<bool>]) -> Result<Self> {
        if evidence.len() != self.inputs.len() {
            return Err(Error::LengthMismatch {
                expected: self.inputs.len(),
                found: evidence.len(),
            });
        }
        let mut out = self.clone();
        for (d, e) in out.inputs.iter_mut().zip(evidence) {
            if let Some(b) = e {
                *d = InputDist::Indicator(*b);
            }
        }
        Ok(out)
    }

    fn validate(&self, c: &Circuit) -> Result<()> {
        if self.inputs.len() != c.num_vars() {
            return Err(Error::LengthMismatch {
                expected: c.num_vars(),
                found: self.inputs.len(),
            });
        }
        for (v, d) in self.inputs.iter().enumerate() {
            if let InputDist::Bernoulli(p) = d {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidParameter(format!(
                        "variable {v}: Bernoulli parameter {p} outside [0, 1]"
                    )));
                }
            }
        }
        if let SumWeights::Explicit(w) = &self.weights {
            if w.len() != c.node_count() {
                return Err(Error::InvalidParameter(format!(
                    "expected weights for {} nodes, found {}",
                    c.node_count(),
                    w.len()
                )));
            }
            for (i, n) in c.nodes().iter().enumerate() {
                if let CircuitNode::Decision { elements, .. } = n {
                    let ws = &w[i];
                    if ws.len() != elements.len() {
                        return Err(Error::InvalidParameter(format!(
                            "node {i}: expected {} weights, found {}",
                            elements.len(),
                            ws.len()
                        )));
                    }
                    if ws.iter().any(|x| !x.is_finite() || *x < 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "node {i}: weights must be finite and nonnegative"
                        )));
                    }
                    let s: f64 = ws.iter().sum();
                    if (s - 1.0).abs() > 1e-6 {
                        return Err(Error::InvalidParameter(format!(
                            "node {i}: weights sum to {s}, not 1"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Result of a query that may carry an assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    /// Probability, or natural log of it when `log_space` is set.
    pub value: f64,
    pub assignment: Option<Vec<bool>>,
    pub log_space: bool,
}

/// Uniform weights of a circuit, in the explicit form.
pub fn uniform_weights(c: &Circuit) -> Vec<Vec<f64>> {
    c.nodes()
        .iter()
        .map(|n| match n {
            CircuitNode::Decision { elements, .. } => vec![1.0 / elements.len() as f64; elements.len()],
            _ => Vec::new(),
        })
        .collect()
}

/// Membership of a full assignment: true iff `x` is a model.
pub fn evaluate(c: &Circuit, x: &[bool]) -> Result<bool> {
    c.evaluate(x)
}

/// Whether every node covers exactly the variables of its vtree node, the
/// shape produced by [`crate::sdd::smooth`].
pub fn is_smooth(c: &Circuit) -> bool {
    let vt = c.vtree();
    let home = |i: usize| -> Option<usize> {
        match &c.nodes()[i] {
            CircuitNode::Literal { var, .. } => vt.leaf_of(*var),
            CircuitNode::Decision { vtree, .. } => Some(*vtree),
            _ => None,
        }
    };
    let nodes = c.nodes();
    if matches!(nodes[c.root()], CircuitNode::True) {
        return false;
    }
    nodes.iter().all(|n| match n {
        CircuitNode::Decision { vtree: u, elements } => match vt.children(*u) {
            None => elements.iter().all(|&(p, s)| {
                home(p) == Some(*u) && matches!(nodes[s], CircuitNode::True | CircuitNode::False)
            }),
            Some((l, r)) => elements.iter().all(|&(p, s)| {
                let ok = |x: usize, want: usize| {
                    matches!(nodes[x], CircuitNode::False) || home(x) == Some(want)
                };
                ok(p, l) && ok(s, r)
            }),
        },
        _ => true,
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log masses of a literal's two polarities: (negative, positive).
fn literal_logs(d: InputDist, marg: f64) -> (f64, f64) {
    match d {
        InputDist::Indicator(true) => (f64::NEG_INFINITY, 0.0),
        InputDist::Indicator(false) => (0.0, f64::NEG_INFINITY),
        InputDist::Bernoulli(p) => ((1.0 - p).ln(), p.ln()),
        InputDist::Marginalized => (marg, marg),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Combine {
    Sum,
    Max,
}

/// Upward pass in log-space. `marg` is the log mass a Marginalized input
/// gives each literal.
fn upward(c: &Circuit, inputs: &[InputDist], weights: &SumWeights, marg: f64, mode: Combine) -> Vec<f64> {
    let mut val = vec![f64::NEG_INFINITY; c.node_count()];
    for (i, n) in c.nodes().iter().enumerate() {
        val[i] = match n {
            CircuitNode::False => f64::NEG_INFINITY,
            CircuitNode::True => 0.0,
            CircuitNode::Literal { var, positive } => {
                let (neg, pos) = literal_logs(inputs[*var], marg);
                if *positive {
                    pos
                } else {
                    neg
                }
            }
            CircuitNode::Decision { elements, .. } => {
                let mut acc = f64::NEG_INFINITY;
                for (k, &(p, s)) in elements.iter().enumerate() {
                    let lw = match weights {
                        SumWeights::Uniform => 0.0,
                        SumWeights::Explicit(w) => w[i][k].ln(),
                    };
                    let t = lw + val[p] + val[s];
                    acc = match mode {
                        Combine::Sum => log_add(acc, t),
                        Combine::Max => acc.max(t),
                    };
                }
                acc
            }
        };
    }
    val
}

/// Natural log of [`wmc`].
pub fn log_wmc(c: &Circuit, theta: &Parameterization) -> Result<f64> {
    theta.validate(c)?;
    if c.is_false() {
        return Ok(f64::NEG_INFINITY);
    }
    if !is_smooth(c) {
        return Err(Error::NotSmooth);
    }
    match &theta.weights {
        SumWeights::Explicit(_) => {
            let z = upward(c, &theta.inputs, &theta.weights, 0.0, Combine::Sum)[c.root()];
            let all = vec![InputDist::Marginalized; c.num_vars()];
            let z_all = upward(c, &all, &theta.weights, 0.0, Combine::Sum)[c.root()];
            Ok(z - z_all)
        }
        SumWeights::Uniform => {
            let marg: Vec<usize> = (0..c.num_vars())
                .filter(|&v| theta.inputs[v] == InputDist::Marginalized)
                .collect();
            let half = 0.5f64.ln();
            if marg.is_empty() {
                return Ok(upward(c, &theta.inputs, &theta.weights, half, Combine::Sum)[c.root()]);
            }
            let projected = marginalize(c, &marg)?;
            Ok(upward(&projected, &theta.inputs, &theta.weights, half, Combine::Sum)[projected.root()])
        }
    }
}

/// Weighted model count under `theta`; see the module docs for how the two
/// weight readings normalize.
pub fn wmc(c: &Circuit, theta: &Parameterization) -> Result<f64> {
    log_wmc(c, theta).map(f64::exp)
}

/// Existentially quantifies `vars` and smooths the result.
pub fn marginalize(c: &Circuit, vars: &[usize]) -> Result<Circuit> {
    if let Some(&v) = vars.iter().find(|&&v| v >= c.num_vars()) {
        return Err(Error::UnknownVariable(v));
    }
    let (mut m, root) = c.to_manager()?;
    let r = m.exists(root, vars)?;
    Ok(crate::sdd::smooth(&m.export(r)))
}

fn sampling_pass(c: &Circuit, theta: &Parameterization, evidence: &[Option<bool>]) -> Result<(Parameterization, Vec<f64>)> {
    theta.validate(c)?;
    let th = theta.with_evidence(evidence)?;
    if c.is_false() {
        return Err(Error::ZeroProbabilityEvidence);
    }
    if !is_smooth(c) {
        return Err(Error::NotSmooth);
    }
    let up = upward(c, &th.inputs, &th.weights, 0.0, Combine::Sum);
    if up[c.root()] == f64::NEG_INFINITY {
        return Err(Error::ZeroProbabilityEvidence);
    }
    Ok((th, up))
}

fn element_log(th: &Parameterization, node: usize, k: usize) -> f64 {
    match &th.weights {
        SumWeights::Uniform => 0.0,
        SumWeights::Explicit(w) => w[node][k].ln(),
    }
}

/// Draws one model from the distribution `theta` induces on `c`,
/// conditioned on `evidence` (one entry per variable).
pub fn sample<R: Rng + ?Sized>(
    c: &Circuit,
    theta: &Parameterization,
    evidence: &[Option<bool>],
    rng: &mut R,
) -> Result<Vec<bool>> {
    let (th, up) = sampling_pass(c, theta, evidence)?;
    Ok(sample_prepared(c, &th, &up, rng))
}

/// Draws `n` models, sharing one upward pass.
pub fn sample_many<R: Rng + ?Sized>(
    c: &Circuit,
    theta: &Parameterization,
    evidence: &[Option<bool>],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<bool>>> {
    let (th, up) = sampling_pass(c, theta, evidence)?;
    Ok((0..n).map(|_| sample_prepared(c, &th, &up, rng)).collect())
}

fn sample_prepared<R: Rng + ?Sized>(c: &Circuit, th: &Parameterization, up: &[f64], rng: &mut R) -> Vec<bool> {
    let mut x = vec![false; c.num_vars()];
    let mut stack = vec![c.root()];
    while let Some(n) = stack.pop() {
        match &c.nodes()[n] {
            CircuitNode::Literal { var, positive } => x[*var] = *positive,
            CircuitNode::Decision { elements, .. } => {
                let total = up[n];
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = None;
                for (k, &(p, s)) in elements.iter().enumerate() {
                    let t = element_log(th, n, k) + up[p] + up[s];
                    if t == f64::NEG_INFINITY {
                        continue;
                    }
                    acc += (t - total).exp();
                    pick = Some((p, s));
                    if u < acc {
                        break;
                    }
                }
                // Rounding can leave `acc` a hair below 1; the last live
                // element absorbs the remainder.
                let (p, s) = pick.expect("a live decision has a live element");
                stack.push(s);
                stack.push(p);
            }
            CircuitNode::True | CircuitNode::False => {}
        }
    }
    x
}

/// The most probable model under `theta` given `evidence`. Among equally
/// weighted models the lexicographically smallest is returned, comparing
/// variable 0 first and ordering false before true.
///
/// The result's value is the model's probability under the distribution
/// [`sample`] draws from, without the evidence.
pub fn map_state(c: &Circuit, theta: &Parameterization, evidence: &[Option<bool>]) -> Result<QueryResult> {
    let (mut th, _) = sampling_pass(c, theta, evidence)?;
    let best = upward(c, &th.inputs, &th.weights, 0.0, Combine::Max)[c.root()];
    if best == f64::NEG_INFINITY {
        return Err(Error::ZeroProbabilityEvidence);
    }
    let mut x = vec![false; c.num_vars()];
    #[allow(clippy::needless_range_loop)]
    for v in 0..c.num_vars() {
        if let InputDist::Indicator(b) = th.inputs[v] {
            x[v] = b;
            continue;
        }
        // Pinning drops the variable's own mass, so add it back before
        // comparing the two branches.
        let (mf, mt) = match th.inputs[v] {
            InputDist::Bernoulli(p) => ((1.0 - p).ln(), p.ln()),
            _ => (0.0, 0.0),
        };
        th.inputs[v] = InputDist::Indicator(false);
        let f = upward(c, &th.inputs, &th.weights, 0.0, Combine::Max)[c.root()] + mf;
        th.inputs[v] = InputDist::Indicator(true);
        let t = upward(c, &th.inputs, &th.weights, 0.0, Combine::Max)[c.root()] + mt;
        // Ties, up to rounding, go to false.
        let pick_true = t > f + 1e-9 * (1.0 + f.abs().min(t.abs()));
        x[v] = pick_true;
        th.inputs[v] = InputDist::Indicator(pick_true);
    }
    let all = vec![InputDist::Marginalized; c.num_vars()];
    let z_all = upward(c, &all, &theta.weights, 0.0, Combine::Sum)[c.root()];
    let w = model_log_weight(c, theta, &x);
    Ok(QueryResult {
        value: (w - z_all).exp(),
        assignment: Some(x),
        log_space: false,
    })
}

/// Log weight of one full assignment: input masses (Marginalized counts as
/// 1) times the weights along its unique path.
pub fn model_log_weight(c: &Circuit, theta: &Parameterization, x: &[bool]) -> f64 {
    let mut val = vec![f64::NEG_INFINITY; c.node_count()];
    for (i, n) in c.nodes().iter().enumerate() {
        val[i] = match n {
            CircuitNode::False => f64::NEG_INFINITY,
            CircuitNode::True => 0.0,
            CircuitNode::Literal { var, positive } => {
                if *positive != x[*var] {
                    f64::NEG_INFINITY
                } else {
                    match theta.inputs[*var] {
                        InputDist::Indicator(b) if b == x[*var] => 0.0,
                        InputDist::Indicator(_) => f64::NEG_INFINITY,
                        InputDist::Bernoulli(q) if x[*var] => q.ln(),
                        InputDist::Bernoulli(q) => (1.0 - q).ln(),
                        InputDist::Marginalized => 0.0,
                    }
                }
            }
            CircuitNode::Decision { elements, .. } => {
                let mut acc = f64::NEG_INFINITY;
                for (k, &(p, s)) in elements.iter().enumerate() {
                    acc = log_add(acc, element_log(theta, i, k) + val[p] + val[s]);
                }
                acc
            }
        };
    }
    val[c.root()]
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::cnf::Side;
    use crate::dl::{Part, RoleExpr};
    use crate::fixtures::MUSIC_DSL;
    use crate::pipeline::{compile_text, CompileOptions, CompiledOntology};

    fn music() -> CompiledOntology {
        compile_text(MUSIC_DSL, &CompileOptions::default()).unwrap()
    }

    fn concept(co: &CompiledOntology, name: &str, side: Side) -> usize {
        co.varmap.var_of_part(&Part::Atomic(name.into()), side).unwrap()
    }

    fn role(co: &CompiledOntology, name: &str) -> usize {
        co.varmap.role_var(&RoleExpr::atomic(name)).unwrap()
    }

    #[test]
    fn label_cannot_influence() {
        let co = music();
        let mut ev = vec![None; co.varmap.total()];
        ev[concept(&co, "Label", Side::One)] = Some(true);
        ev[concept(&co, "Artist", Side::Two)] = Some(true);
        ev[role(&co, "influence")] = Some(true);
        let theta = Parameterization::marginalized(co.varmap.total()).with_evidence(&ev).unwrap();
        assert_eq!(wmc(&co.smooth_circuit, &theta).unwrap(), 0.0);
    }

    #[test]
    fn worked_probability() {
        let co = music();
        let mut theta = Parameterization::marginalized(co.varmap.total());
        theta.inputs[concept(&co, "Label", Side::One)] = InputDist::Indicator(true);
        theta.inputs[concept(&co, "Artist", Side::Two)] = InputDist::Indicator(true);
        theta.inputs[role(&co, "signedTo")] = InputDist::Indicator(false);
        theta.inputs[role(&co, "influence")] = InputDist::Bernoulli(0.34);
        let p = wmc(&co.smooth_circuit, &theta).unwrap();
        assert!((p - 0.66).abs() < 1e-9, "{p}");
        let all = Parameterization::marginalized(co.varmap.total());
        assert!((wmc(&co.smooth_circuit, &all).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indicator_wmc_matches_membership() {
        let co = music();
        let n = co.varmap.total();
        for bits in 0u32..1 << n {
            let x: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            let w = wmc(&co.smooth_circuit, &Parameterization::indicators(&x)).unwrap();
            assert_eq!(w == 1.0, evaluate(&co.circuit, &x).unwrap());
        }
    }

    #[test]
    fn non_smooth_is_rejected() {
        let co = music();
        let theta = Parameterization::marginalized(co.varmap.total());
        if !is_smooth(&co.circuit) {
            assert!(matches!(wmc(&co.circuit, &theta), Err(Error::NotSmooth)));
        }
        assert!(is_smooth(&co.smooth_circuit));
    }

    #[test]
    fn sampling_respects_evidence() {
        let co = music();
        let n = co.varmap.total();
        let mut ev = vec![None; n];
        let a1 = concept(&co, "Artist", Side::One);
        ev[a1] = Some(true);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let theta = Parameterization::marginalized(n);
        for x in sample_many(&co.smooth_circuit, &theta, &ev, 500, &mut rng).unwrap() {
            assert!(x[a1]);
            assert!(co.circuit.evaluate(&x).unwrap());
        }
        let mut bad = vec![None; n];
        bad[a1] = Some(true);
        bad[concept(&co, "Label", Side::One)] = Some(true);
        assert!(matches!(
            sample(&co.smooth_circuit, &theta, &bad, &mut rng),
            Err(Error::ZeroProbabilityEvidence)
        ));
    }

    #[test]
    fn map_prefers_lexicographically_smallest() {
        let co = music();
        let n = co.varmap.total();
        let r = map_state(&co.smooth_circuit, &Parameterization::marginalized(n), &vec![None; n]).unwrap();
        let x = r.assignment.unwrap();
        let first = co.circuit.enumerate_models(1).models.remove(0);
        // Enumeration lists models with variable 0 as the most significant
        // position, false first.
        assert_eq!(x, first);
    }

    #[test]
    fn batch_matches_scalar() {
        let co = music();
        let n = co.varmap.total();
        let rows: Vec<Vec<bool>> = (0u32..1 << n)
            .map(|bits| (0..n).map(|i| bits >> i & 1 == 1).collect())
            .collect();
        let xs = BitMatrix::from_rows(n, &rows).unwrap();
        let got = evaluate_batch(&co.circuit, &xs).unwrap();
        let par = evaluate_batch_threads(&co.circuit, &xs, 3).unwrap();
        assert_eq!(got, par);
        for (row, g) in rows.iter().zip(got) {
            assert_eq!(co.circuit.evaluate(row).unwrap(), g);
        }
    }

    #[test]
    fn assignment_files() {
        let cols = vec!["a".to_string(), "b".to_string()];
        let m = read_assignments("a\tb\n1\t0\n0\t1\n", &cols).unwrap();
        assert_eq!(m.row(0), vec![true, false]);
        assert_eq!(write_results(&cols, &m, &[true, false], "consistent"), "a\tb\tconsistent\n1\t0\t1\n0\t1\t0\n");
        assert!(read_assignments("b\ta\n", &cols).is_err());
        assert!(read_assignments("a\tb\n1\t2\n", &cols).is_err());
        assert_eq!(read_assignments("", &cols).unwrap().rows(), 0);
    }
}
