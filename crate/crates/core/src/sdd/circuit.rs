//! Immutable circuits: serialization, structural checks, smoothing and
//! model counting.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use num_bigint::BigUint;

use super::manager::{NodeId, SddManager};
use super::vtree::VTree;
use crate::error::{Error, Result};

/// One node of a frozen circuit. Children are referenced by index and always
/// precede their parents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CircuitNode {
    False,
    True,
    Literal { var: usize, positive: bool },
    /// A sum over products `prime × sub`, normalized for a vtree node.
    Decision {
        vtree: usize,
        elements: Vec<(usize, usize)>,
    },
}

/// A frozen circuit over the variables of its vtree. The root is the last node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    vtree: VTree,
    nodes: Vec<CircuitNode>,
}

/// Outcome of [`check_properties`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Properties {
    pub smooth: bool,
    pub decomposable: bool,
    pub deterministic: bool,
}

/// Models listed by [`Circuit::enumerate_models`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub models: Vec<Vec<bool>>,
    /// False when the limit cut the listing short.
    pub complete: bool,
}

impl Circuit {
    /// Builds a circuit from nodes in topological order (root last).
    ///
    /// # Panics
    /// If a node references a later node or the node list is empty.
    pub fn from_parts(vtree: VTree, nodes: Vec<CircuitNode>) -> Self {
        assert!(!nodes.is_empty(), "a circuit needs a root");
        for (i, n) in nodes.iter().enumerate() {
            if let CircuitNode::Decision { elements, .. } = n {
                assert!(elements.iter().all(|&(p, s)| p < i && s < i));
            }
        }
        Circuit { vtree, nodes }
    }

    pub fn constant(vtree: VTree, value: bool) -> Self {
        let node = if value {
            CircuitNode::True
        } else {
            CircuitNode::False
        };
        Circuit {
            vtree,
            nodes: vec![node],
        }
    }

    pub fn vtree(&self) -> &VTree {
        &self.vtree
    }

    pub fn nodes(&self) -> &[CircuitNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of products (decision elements) in the circuit.
    pub fn edge_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                CircuitNode::Decision { elements, .. } => elements.len(),
                _ => 0,
            })
            .sum()
    }

    pub fn num_vars(&self) -> usize {
        self.vtree.var_bound()
    }

    pub fn is_false(&self) -> bool {
        matches!(self.nodes[self.root()], CircuitNode::False)
    }

    pub fn is_true(&self) -> bool {
        matches!(self.nodes[self.root()], CircuitNode::True)
    }

    /// Membership of a full assignment.
    pub fn evaluate(&self, x: &[bool]) -> Result<bool> {
        if x.len() != self.num_vars() {
            return Err(Error::LengthMismatch {
                expected: self.num_vars(),
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[bool]) -> bool {
        let mut val = vec![false; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            val[i] = match n {
                CircuitNode::False => false,
                CircuitNode::True => true,
                CircuitNode::Literal { var, positive } => x[*var] == *positive,
                CircuitNode::Decision { elements, .. } => {
                    elements.iter().any(|&(p, s)| val[p] && val[s])
                }
            };
        }
        val[self.root()]
    }

    /// Variables each node depends on syntactically, as bitsets.
    pub(crate) fn scopes(&self) -> Vec<Vec<u64>> {
        let words = self.num_vars().div_ceil(64).max(1);
        let mut out: Vec<Vec<u64>> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let mut s = vec![0u64; words];
            match n {
                CircuitNode::Literal { var, .. } => s[var / 64] |= 1 << (var % 64),
                CircuitNode::Decision { elements, .. } => {
                    for &(p, q) in elements {
                        for w in 0..words {
                            s[w] |= out[p][w] | out[q][w];
                        }
                    }
                }
                _ => {}
            }
            out.push(s);
        }
        out
    }

    /// The vtree node whose variables a node's function is defined over;
    /// `None` for constants.
    fn home(&self, i: usize) -> Option<usize> {
        match &self.nodes[i] {
            CircuitNode::False | CircuitNode::True => None,
            CircuitNode::Literal { var, .. } => self.vtree.leaf_of(*var),
            CircuitNode::Decision { vtree, .. } => Some(*vtree),
        }
    }

    fn home_size(&self, i: usize) -> usize {
        self.home(i).map_or(0, |h| self.vtree.scope_size(h))
    }

    /// Number of satisfying assignments over all vtree variables.
    ///
    /// Works for any decomposable, deterministic circuit whose nodes respect
    /// their vtree nodes, smoothed or not.
    pub fn model_count(&self) -> BigUint {
        let mut c: Vec<BigUint> = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let v = match n {
                CircuitNode::False => BigUint::from(0u32),
                CircuitNode::True | CircuitNode::Literal { .. } => BigUint::from(1u32),
                CircuitNode::Decision { elements, .. } => {
                    let total = self.home_size(i);
                    let mut acc = BigUint::from(0u32);
                    for &(p, s) in elements {
                        let gap = total - self.home_size(p) - self.home_size(s);
                        acc += (&c[p] * &c[s]) << gap;
                    }
                    acc
                }
            };
            c.push(v);
        }
        let root = self.root();
        let gap = self.num_vars_in_tree() - self.home_size(root);
        c[root].clone() << gap
    }

    fn num_vars_in_tree(&self) -> usize {
        self.vtree.num_vars()
    }

    /// Whether some completion of a partial assignment is a model.
    /// `None` entries are unconstrained.
    pub fn satisfiable_with(&self, partial: &[Option<bool>]) -> bool {
        let mut val = vec![false; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            val[i] = match n {
                CircuitNode::False => false,
                CircuitNode::True => true,
                CircuitNode::Literal { var, positive } => {
                    partial[*var].is_none_or(|b| b == *positive)
                }
                CircuitNode::Decision { elements, .. } => {
                    elements.iter().any(|&(p, s)| val[p] && val[s])
                }
            };
        }
        val[self.root()]
    }

    /// Models in lexicographic order of the bit vector `x[0], x[1], ...`,
    /// at most `limit` of them.
    pub fn enumerate_models(&self, limit: usize) -> Enumeration {
        let n = self.num_vars();
        let mut models = Vec::new();
        let mut partial: Vec<Option<bool>> = vec![None; n];
        if !self.satisfiable_with(&partial) {
            return Enumeration {
                models,
                complete: true,
            };
        }
        let complete = self.enumerate_rec(0, &mut partial, &mut models, limit);
        Enumeration { models, complete }
    }

    fn enumerate_rec(
        &self,
        var: usize,
        partial: &mut Vec<Option<bool>>,
        out: &mut Vec<Vec<bool>>,
        limit: usize,
    ) -> bool {
        if var == partial.len() {
            if out.len() == limit {
                return false;
            }
            out.push(partial.iter().map(|b| b.unwrap()).collect());
            return true;
        }
        for value in [false, true] {
            partial[var] = Some(value);
            if self.satisfiable_with(partial) && !self.enumerate_rec(var + 1, partial, out, limit) {
                partial[var] = None;
                return false;
            }
        }
        partial[var] = None;
        true
    }

    /// Text form: `sdd <n>` header then one record per node.
    pub fn to_text(&self) -> String {
        let mut out = format!("sdd {}\n", self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                CircuitNode::False => writeln!(out, "F {i}").unwrap(),
                CircuitNode::True => writeln!(out, "T {i}").unwrap(),
                CircuitNode::Literal { var, positive } => {
                    writeln!(out, "L {i} {var} {}", u8::from(*positive)).unwrap()
                }
                CircuitNode::Decision { vtree, elements } => {
                    write!(out, "D {i} {vtree} {}", elements.len()).unwrap();
                    for (p, s) in elements {
                        write!(out, " {p} {s}").unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    /// Parses the text form against a vtree.
    pub fn from_text(source: impl BufRead, vtree: VTree) -> Result<Self> {
        let mut expected = None;
        let mut nodes: Vec<CircuitNode> = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let bad = |message: String| Error::CircuitFormat {
                line: lineno,
                message,
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.is_empty() {
                continue;
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad number `{s}`")));
            if expected.is_none() {
                if f[0] != "sdd" || f.len() != 2 {
                    return Err(bad("expected `sdd <node_count>` header".into()));
                }
                expected = Some(num(f[1])?);
                continue;
            }
            if f.len() < 2 || num(f[1])? != nodes.len() {
                return Err(bad("node ids must be consecutive from 0".into()));
            }
            let id = nodes.len();
            let node = match (f[0], f.len()) {
                ("F", 2) => CircuitNode::False,
                ("T", 2) => CircuitNode::True,
                ("L", 4) => {
                    let var = num(f[2])?;
                    if !vtree.contains_var(var) {
                        return Err(bad(format!("variable {var} is not in the vtree")));
                    }
                    let positive = match f[3] {
                        "1" => true,
                        "0" => false,
                        p => return Err(bad(format!("bad polarity `{p}`"))),
                    };
                    CircuitNode::Literal { var, positive }
                }
                ("D", n) if n >= 4 => {
                    let vt = num(f[2])?;
                    if vt >= vtree.len() {
                        return Err(bad(format!("vtree node {vt} does not exist")));
                    }
                    let k = num(f[3])?;
                    if n != 4 + 2 * k {
                        return Err(bad(format!("decision announces {k} elements")));
                    }
                    let mut elements = Vec::with_capacity(k);
                    for j in 0..k {
                        let p = num(f[4 + 2 * j])?;
                        let s = num(f[5 + 2 * j])?;
                        if p >= id || s >= id {
                            return Err(bad(format!("dangling reference in node {id}")));
                        }
                        elements.push((p, s));
                    }
                    CircuitNode::Decision {
                        vtree: vt,
                        elements,
                    }
                }
                _ => return Err(bad(format!("unexpected record `{line}`"))),
            };
            nodes.push(node);
        }
        match expected {
            Some(n) if n == nodes.len() && n > 0 => Ok(Circuit { vtree, nodes }),
            Some(n) => Err(Error::CircuitFormat {
                line: 0,
                message: format!("header announces {n} nodes, found {}", nodes.len()),
            }),
            None => Err(Error::CircuitFormat {
                line: 0,
                message: "missing header".into(),
            }),
        }
    }

    /// Loads this circuit into a fresh manager over its vtree.
    pub fn to_manager(&self) -> Result<(SddManager, NodeId)> {
        let mut m = SddManager::new(self.vtree.clone());
        let root = m.import(self)?;
        Ok((m, root))
    }
}

/// Checks smoothness, decomposability and determinism of every decision.
///
/// Determinism is decided semantically: primes are rebuilt as canonical
/// diagrams and every pair must conjoin to false.
pub fn check_properties(c: &Circuit) -> Properties {
    let scopes = c.scopes();
    let mut smooth = true;
    let mut decomposable = true;
    for n in c.nodes() {
        let CircuitNode::Decision { elements, .. } = n else {
            continue;
        };
        let mut first: Option<Vec<u64>> = None;
        for &(p, s) in elements {
            if scopes[p].iter().zip(&scopes[s]).any(|(a, b)| a & b != 0) {
                decomposable = false;
            }
            let u: Vec<u64> = scopes[p].iter().zip(&scopes[s]).map(|(a, b)| a | b).collect();
            match &first {
                None => first = Some(u),
                Some(f) if *f != u => smooth = false,
                _ => {}
            }
        }
    }
    Properties {
        smooth,
        decomposable,
        deterministic: is_deterministic(c),
    }
}

fn is_deterministic(c: &Circuit) -> bool {
    let mut m = SddManager::new(c.vtree().clone());
    let mut f: Vec<NodeId> = Vec::with_capacity(c.node_count());
    for n in c.nodes() {
        let id = match n {
            CircuitNode::False => NodeId::FALSE,
            CircuitNode::True => NodeId::TRUE,
            CircuitNode::Literal { var, positive } => match m.literal(*var, *positive) {
                Ok(l) => l,
                Err(_) => return false,
            },
            CircuitNode::Decision { elements, .. } => {
                let primes: Vec<NodeId> = elements.iter().map(|&(p, _)| f[p]).collect();
                for i in 0..primes.len() {
                    for j in i + 1..primes.len() {
                        match m.and(primes[i], primes[j]) {
                            Ok(x) if x.is_false() => {}
                            _ => return false,
                        }
                    }
                }
                let mut acc = NodeId::FALSE;
                for &(p, s) in elements {
                    let Ok(t) = m.and(f[p], f[s]) else { return false };
                    let Ok(a) = m.or(acc, t) else { return false };
                    acc = a;
                }
                acc
            }
        };
        f.push(id);
    }
    true
}

/// Lifts every node to the vtree position its parent expects so that all
/// products of a decision mention the same variables and the root mentions
/// every variable. Gaps are filled with `v ∨ ¬v` decisions; elements with a
/// false sub are dropped.
pub fn smooth(c: &Circuit) -> Circuit {
    let vt = c.vtree().clone();
    let mut b = Smoother {
        src: c,
        out: Vec::new(),
        memo: HashMap::new(),
        true_memo: HashMap::new(),
        false_id: None,
    };
    let root = c.root();
    if matches!(c.nodes()[root], CircuitNode::False) {
        return Circuit::constant(vt, false);
    }
    let top = vt.root();
    let r = b.lift(root, top);
    // The root must be the last node; it is, since lift pushes parents last.
    debug_assert_eq!(r, b.out.len() - 1);
    let mut nodes = b.out;
    if r != nodes.len() - 1 {
        let n = nodes[r].clone();
        nodes.push(n);
    }
    Circuit::from_parts(vt, nodes)
}

struct Smoother<'a> {
    src: &'a Circuit,
    out: Vec<CircuitNode>,
    memo: HashMap<(usize, usize), usize>,
    true_memo: HashMap<usize, usize>,
    false_id: Option<usize>,
}

impl Smoother<'_> {
    fn push(&mut self, n: CircuitNode) -> usize {
        self.out.push(n);
        self.out.len() - 1
    }

    fn tautology(&mut self, u: usize) -> usize {
        if let Some(&id) = self.true_memo.get(&u) {
            return id;
        }
        let vt = self.src.vtree();
        let node = match vt.children(u) {
            None => {
                let var = vt.leaf_var(u).unwrap();
                let t = self.constant_true();
                let pos = self.push(CircuitNode::Literal {
                    var,
                    positive: true,
                });
                let neg = self.push(CircuitNode::Literal {
                    var,
                    positive: false,
                });
                CircuitNode::Decision {
                    vtree: u,
                    elements: vec![(pos, t), (neg, t)],
                }
            }
            Some((l, r)) => {
                let a = self.tautology(l);
                let b = self.tautology(r);
                CircuitNode::Decision {
                    vtree: u,
                    elements: vec![(a, b)],
                }
            }
        };
        let id = self.push(node);
        self.true_memo.insert(u, id);
        id
    }

    fn constant_true(&mut self) -> usize {
        if let Some(&id) = self.true_memo.get(&usize::MAX) {
            return id;
        }
        let id = self.push(CircuitNode::True);
        self.true_memo.insert(usize::MAX, id);
        id
    }

    fn constant_false(&mut self) -> usize {
        if let Some(id) = self.false_id {
            return id;
        }
        let id = self.push(CircuitNode::False);
        self.false_id = Some(id);
        id
    }

    /// Smooth copy of source node `n` over exactly the variables of `u`.
    /// Returns a False node when `n` is unsatisfiable.
    fn lift(&mut self, n: usize, u: usize) -> usize {
        if let Some(&id) = self.memo.get(&(n, u)) {
            return id;
        }
        let vt = self.src.vtree();
        let id = match self.src.nodes()[n].clone() {
            CircuitNode::False => self.constant_false(),
            CircuitNode::True => self.tautology(u),
            CircuitNode::Literal { var, positive } => {
                let leaf = vt.leaf_of(var).expect("literal variable is in the vtree");
                if leaf == u {
                    self.push(CircuitNode::Literal { var, positive })
                } else {
                    self.wrap(n, leaf, u)
                }
            }
            CircuitNode::Decision { vtree: w, elements } => {
                if w == u {
                    let (l, r) = vt.children(u).map_or((u, u), |c| c);
                    let leaf_decision = vt.is_leaf(u);
                    let mut elems = Vec::with_capacity(elements.len());
                    for (p, s) in elements {
                        if matches!(self.src.nodes()[s], CircuitNode::False)
                            || matches!(self.src.nodes()[p], CircuitNode::False)
                        {
                            continue;
                        }
                        if leaf_decision {
                            // Already smooth leaf decisions (from earlier passes).
                            let pp = self.lift(p, u);
                            let ss = self.lift_constant_sub(s);
                            elems.push((pp, ss));
                        } else {
                            let pp = self.lift(p, l);
                            let ss = self.lift(s, r);
                            elems.push((pp, ss));
                        }
                    }
                    if elems.is_empty() {
                        self.constant_false()
                    } else {
                        self.push(CircuitNode::Decision {
                            vtree: u,
                            elements: elems,
                        })
                    }
                } else {
                    self.wrap(n, w, u)
                }
            }
        };
        self.memo.insert((n, u), id);
        id
    }

    fn lift_constant_sub(&mut self, s: usize) -> usize {
        match self.src.nodes()[s] {
            CircuitNode::True => self.constant_true(),
            _ => self.constant_false(),
        }
    }

    /// Embeds source node `n` (homed at `h`, strictly inside `u`) into `u`.
    fn wrap(&mut self, n: usize, h: usize, u: usize) -> usize {
        let vt = self.src.vtree();
        let (l, r) = vt.children(u).expect("a strict ancestor is internal");
        let elements = if vt.is_within(h, l) {
            let a = self.lift(n, l);
            let b = self.tautology(r);
            vec![(a, b)]
        } else {
            let a = self.tautology(l);
            let b = self.lift(n, r);
            vec![(a, b)]
        };
        self.push(CircuitNode::Decision { vtree: u, elements })
    }
}
