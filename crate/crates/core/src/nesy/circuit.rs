//! Differentiable evaluation of a smooth label circuit.

use crate::error::{Error, Result};
use crate::infer::is_smooth;
use crate::sdd::{Circuit, CircuitNode};

use super::tape::{log_sigmoid, sigmoid};

#[derive(Clone, Debug)]
enum PNode {
    False,
    True,
    Lit { var: usize, positive: bool },
    /// Elements `(prime, sub, gate)`; `gate` indexes the gating vector and is
    /// `None` for single-element decisions, whose weight is always 1.
    Dec(Vec<(usize, usize, Option<usize>)>),
}

/// A smooth circuit flattened for repeated log-space evaluation, with one
/// gate per element of every decision that has more than one element.
#[derive(Clone, Debug)]
pub struct CircuitProgram {
    nodes: Vec<PNode>,
    num_vars: usize,
    /// Gate ranges of the multi-element decisions, in node order.
    groups: Vec<std::ops::Range<usize>>,
    num_gates: usize,
}

fn lse(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

impl CircuitProgram {
    pub fn new(c: &Circuit) -> Result<Self> {
        if !c.is_false() && !is_smooth(c) {
            return Err(Error::NotSmooth);
        }
        let mut groups = Vec::new();
        let mut next = 0;
        let nodes = c
            .nodes()
            .iter()
            .map(|n| match n {
                CircuitNode::False => PNode::False,
                CircuitNode::True => PNode::True,
                CircuitNode::Literal { var, positive } => PNode::Lit {
                    var: *var,
                    positive: *positive,
                },
                CircuitNode::Decision { elements, .. } => {
                    if elements.len() == 1 {
                        PNode::Dec(vec![(elements[0].0, elements[0].1, None)])
                    } else {
                        let start = next;
                        next += elements.len();
                        groups.push(start..next);
                        PNode::Dec(
                            elements
                                .iter()
                                .enumerate()
                                .map(|(k, &(p, s))| (p, s, Some(start + k)))
                                .collect(),
                        )
                    }
                }
            })
            .collect();
        Ok(CircuitProgram {
            nodes,
            num_vars: c.num_vars(),
            groups,
            num_gates: next,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Width of the gating vector.
    pub fn num_gates(&self) -> usize {
        self.num_gates
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Per-gate log weights: a log-softmax inside every decision.
    pub fn log_weights(&self, gates: &[f64]) -> Vec<f64> {
        let mut lw = vec![0.0; self.num_gates];
        for g in &self.groups {
            let m = gates[g.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = gates[g.clone()].iter().map(|x| (x - m).exp()).sum::<f64>().ln() + m;
            for k in g.clone() {
                lw[k] = gates[k] - z;
            }
        }
        lw
    }

    /// Gated weights in the per-node layout of [`crate::infer::SumWeights`].
    pub fn node_weights(&self, gates: &[f64]) -> Vec<Vec<f64>> {
        let lw = self.log_weights(gates);
        self.nodes
            .iter()
            .map(|n| match n {
                PNode::Dec(els) => els.iter().map(|e| e.2.map_or(1.0, |k| lw[k].exp())).collect(),
                _ => Vec::new(),
            })
            .collect()
    }

    /// Upward pass. `leaf(var, positive)` gives literal log masses and `lw`
    /// the gate log weights (unit weights when `None`).
    fn upward(&self, leaf: &dyn Fn(usize, bool) -> f64, lw: Option<&[f64]>) -> Vec<f64> {
        let mut val = vec![f64::NEG_INFINITY; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            val[i] = match n {
                PNode::False => f64::NEG_INFINITY,
                PNode::True => 0.0,
                PNode::Lit { var, positive } => leaf(*var, *positive),
                PNode::Dec(els) => {
                    let mut acc = f64::NEG_INFINITY;
                    for &(p, s, g) in els {
                        let w = match (g, lw) {
                            (Some(k), Some(lw)) => lw[k],
                            _ => 0.0,
                        };
                        acc = lse(acc, w + val[p] + val[s]);
                    }
                    acc
                }
            };
        }
        val
    }

    /// Downward pass: derivative of the root log value with respect to every
    /// node's log value, plus with respect to every gate log weight.
    fn downward(&self, val: &[f64], lw: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
        let mut adj = vec![0.0; self.nodes.len()];
        let mut dw = vec![0.0; self.num_gates];
        let root = self.root();
        if val[root] == f64::NEG_INFINITY {
            return (adj, dw);
        }
        adj[root] = 1.0;
        for i in (0..self.nodes.len()).rev() {
            if adj[i] == 0.0 {
                continue;
            }
            if let PNode::Dec(els) = &self.nodes[i] {
                for &(p, s, g) in els {
                    let w = match (g, lw) {
                        (Some(k), Some(lw)) => lw[k],
                        _ => 0.0,
                    };
                    let t = w + val[p] + val[s];
                    if t == f64::NEG_INFINITY {
                        continue;
                    }
                    let f = adj[i] * (t - val[i]).exp();
                    adj[p] += f;
                    adj[s] += f;
                    if let Some(k) = g {
                        dw[k] += f;
                    }
                }
            }
        }
        (adj, dw)
    }

    fn bernoulli_leaf<'a>(z: &'a [f64], evidence: &'a [Option<bool>]) -> impl Fn(usize, bool) -> f64 + 'a {
        move |v, pos| match evidence.get(v).copied().flatten() {
            Some(b) => {
                if b == pos {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            None => {
                if pos {
                    log_sigmoid(z[v])
                } else {
                    log_sigmoid(-z[v])
                }
            }
        }
    }

    /// Log probability that labels drawn independently with `P(v) = σ(z_v)`
    /// form a model, with `evidence` bits fixed.
    pub fn bernoulli_log_mass(&self, z: &[f64], evidence: &[Option<bool>]) -> f64 {
        let leaf = Self::bernoulli_leaf(z, evidence);
        self.upward(&leaf, None)[self.root()]
    }

    /// [`CircuitProgram::bernoulli_log_mass`] and its gradient in `z`.
    pub fn bernoulli_log_mass_grad(&self, z: &[f64], evidence: &[Option<bool>]) -> (f64, Vec<f64>) {
        let leaf = Self::bernoulli_leaf(z, evidence);
        let val = self.upward(&leaf, None);
        let (adj, _) = self.downward(&val, None);
        let mut dz = vec![0.0; z.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let PNode::Lit { var, positive } = n {
                if adj[i] == 0.0 || evidence.get(*var).copied().flatten().is_some() {
                    continue;
                }
                // d ln σ(z)/dz = σ(-z); d ln σ(-z)/dz = -σ(z).
                dz[*var] += adj[i] * if *positive { sigmoid(-z[*var]) } else { -sigmoid(z[*var]) };
            }
        }
        (val[self.root()], dz)
    }

    fn indicator_leaf<'a>(y: &'a [bool]) -> impl Fn(usize, bool) -> f64 + 'a {
        move |v, pos| if y[v] == pos { 0.0 } else { f64::NEG_INFINITY }
    }

    fn evidence_leaf<'a>(evidence: &'a [Option<bool>]) -> impl Fn(usize, bool) -> f64 + 'a {
        move |v, pos| match evidence.get(v).copied().flatten() {
            Some(b) if b != pos => f64::NEG_INFINITY,
            _ => 0.0,
        }
    }

    /// `ln p(y | evidence)`: the gated circuit value at `y` minus its value
    /// with only the evidence fixed. `-inf` when `y` is not a model.
    pub fn gated_log_prob(&self, gates: &[f64], y: &[bool], evidence: &[Option<bool>]) -> f64 {
        let lw = self.log_weights(gates);
        let num = self.upward(&Self::indicator_leaf(y), Some(&lw))[self.root()];
        let den = self.upward(&Self::evidence_leaf(evidence), Some(&lw))[self.root()];
        num - den
    }

    /// [`CircuitProgram::gated_log_prob`] and its gradient in the gates.
    pub fn gated_log_prob_grad(&self, gates: &[f64], y: &[bool], evidence: &[Option<bool>]) -> (f64, Vec<f64>) {
        let lw = self.log_weights(gates);
        let vn = self.upward(&Self::indicator_leaf(y), Some(&lw));
        let vd = self.upward(&Self::evidence_leaf(evidence), Some(&lw));
        let (_, dn) = self.downward(&vn, Some(&lw));
        let (_, dd) = self.downward(&vd, Some(&lw));
        let dlw: Vec<f64> = dn.iter().zip(&dd).map(|(a, b)| a - b).collect();
        let mut dg = vec![0.0; self.num_gates];
        for g in &self.groups {
            let total: f64 = dlw[g.clone()].iter().sum();
            for k in g.clone() {
                dg[k] = dlw[k] - lw[k].exp() * total;
            }
        }
        (vn[self.root()] - vd[self.root()], dg)
    }
}
