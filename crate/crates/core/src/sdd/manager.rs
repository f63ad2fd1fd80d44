//! Canonical sentential decision diagrams with hash-consing.

use std::collections::HashMap;
use std::rc::Rc;

use super::circuit::{Circuit, CircuitNode};
use super::vtree::VTree;
use crate::error::{Error, Result};

/// Default limit on the number of nodes a manager may allocate.
pub const DEFAULT_NODE_CAP: usize = 5_000_000;

const NO_VTREE: u32 = u32::MAX;
const NO_NEG: u32 = u32::MAX;

/// Handle to a node owned by an [`SddManager`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub const FALSE: NodeId = NodeId(0);
    pub const TRUE: NodeId = NodeId(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_false(self) -> bool {
        self == Self::FALSE
    }

    pub fn is_true(self) -> bool {
        self == Self::TRUE
    }

    pub fn is_constant(self) -> bool {
        self.0 < 2
    }
}

type Elements = Rc<[(NodeId, NodeId)]>;

#[derive(Clone, Debug)]
enum Node {
    False,
    True,
    Literal(usize, bool),
    Decision(Elements),
}

/// Boolean operator for [`SddManager::apply`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    And,
    Or,
}

/// Owns the nodes of one compilation session over a fixed vtree.
///
/// Every node is compressed (subs are distinct) and trimmed, and the unique
/// table guarantees that equal functions are the same [`NodeId`].
pub struct SddManager {
    vtree: VTree,
    nodes: Vec<Node>,
    node_vtree: Vec<u32>,
    neg: Vec<u32>,
    unique: HashMap<(u32, Elements), NodeId>,
    apply_cache: HashMap<(u32, u32, Op), NodeId>,
    literals: Vec<[NodeId; 2]>,
    cap: usize,
}

impl SddManager {
    pub fn new(vtree: VTree) -> Self {
        Self::with_cap(vtree, DEFAULT_NODE_CAP)
    }

    pub fn with_cap(vtree: VTree, cap: usize) -> Self {
        let mut m = SddManager {
            nodes: vec![Node::False, Node::True],
            node_vtree: vec![NO_VTREE, NO_VTREE],
            neg: vec![1, 0],
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            literals: Vec::new(),
            cap,
            vtree,
        };
        let bound = m.vtree.var_bound();
        for v in 0..bound {
            match m.vtree.leaf_of(v) {
                Some(leaf) => {
                    let pos = m.push(Node::Literal(v, true), leaf as u32);
                    let neg = m.push(Node::Literal(v, false), leaf as u32);
                    m.neg[pos.index()] = neg.0;
                    m.neg[neg.index()] = pos.0;
                    m.literals.push([neg, pos]);
                }
                None => m.literals.push([NodeId::FALSE, NodeId::FALSE]),
            }
        }
        m
    }

    pub fn vtree(&self) -> &VTree {
        &self.vtree
    }

    pub fn node_cap(&self) -> usize {
        self.cap
    }

    /// Nodes allocated so far, including unreachable ones.
    pub fn allocated(&self) -> usize {
        self.nodes.len()
    }

    fn push(&mut self, node: Node, vtree: u32) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node);
        self.node_vtree.push(vtree);
        self.neg.push(NO_NEG);
        id
    }

    pub fn literal(&self, var: usize, positive: bool) -> Result<NodeId> {
        match self.literals.get(var) {
            Some(l) if !l[1].is_false() => Ok(l[usize::from(positive)]),
            _ => Err(Error::UnknownVariable(var)),
        }
    }

    /// The vtree node a non-constant node is normalized for.
    pub fn vtree_of(&self, n: NodeId) -> Option<usize> {
        let v = self.node_vtree[n.index()];
        (v != NO_VTREE).then_some(v as usize)
    }

    pub fn as_literal(&self, n: NodeId) -> Option<(usize, bool)> {
        match self.nodes[n.index()] {
            Node::Literal(v, p) => Some((v, p)),
            _ => None,
        }
    }

    /// Elements of a decision node; empty for terminals and literals.
    pub fn elements(&self, n: NodeId) -> &[(NodeId, NodeId)] {
        match &self.nodes[n.index()] {
            Node::Decision(e) => e,
            _ => &[],
        }
    }

    fn elements_rc(&self, n: NodeId) -> Elements {
        match &self.nodes[n.index()] {
            Node::Decision(e) => e.clone(),
            _ => unreachable!("not a decision node"),
        }
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::And, a, b)
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.apply(Op::Or, a, b)
    }

    pub fn implies(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let na = self.negate(a)?;
        self.or(na, b)
    }

    pub fn conjoin_all(&mut self, items: impl IntoIterator<Item = NodeId>) -> Result<NodeId> {
        let mut acc = NodeId::TRUE;
        for x in items {
            acc = self.and(acc, x)?;
            if acc.is_false() {
                break;
            }
        }
        Ok(acc)
    }

    pub fn disjoin_all(&mut self, items: impl IntoIterator<Item = NodeId>) -> Result<NodeId> {
        let mut acc = NodeId::FALSE;
        for x in items {
            acc = self.or(acc, x)?;
            if acc.is_true() {
                break;
            }
        }
        Ok(acc)
    }

    /// Conjunction or disjunction of two nodes of this manager.
    pub fn apply(&mut self, op: Op, a: NodeId, b: NodeId) -> Result<NodeId> {
        match op {
            Op::And => {
                if a.is_false() || b.is_false() {
                    return Ok(NodeId::FALSE);
                }
                if a.is_true() {
                    return Ok(b);
                }
                if b.is_true() || a == b {
                    return Ok(a);
                }
            }
            Op::Or => {
                if a.is_true() || b.is_true() {
                    return Ok(NodeId::TRUE);
                }
                if a.is_false() {
                    return Ok(b);
                }
                if b.is_false() || a == b {
                    return Ok(a);
                }
            }
        }
        if self.neg[a.index()] == b.0 {
            return Ok(match op {
                Op::And => NodeId::FALSE,
                Op::Or => NodeId::TRUE,
            });
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if let Some(&r) = self.apply_cache.get(&(a.0, b.0, op)) {
            return Ok(r);
        }
        let va = self.node_vtree[a.index()] as usize;
        let vb = self.node_vtree[b.index()] as usize;
        let r = if va == vb {
            if self.vtree.is_leaf(va) {
                // Two distinct literals of one variable are complementary.
                match op {
                    Op::And => NodeId::FALSE,
                    Op::Or => NodeId::TRUE,
                }
            } else {
                let ea = self.elements_rc(a);
                let eb = self.elements_rc(b);
                let elems = self.product(op, &ea, &eb)?;
                self.decision(va, elems)?
            }
        } else if self.vtree.in_left(va, vb) {
            let na = self.negate(a)?;
            let eb = self.elements_rc(b);
            let elems = self.product(op, &[(a, NodeId::TRUE), (na, NodeId::FALSE)], &eb)?;
            self.decision(vb, elems)?
        } else if self.vtree.in_left(vb, va) {
            let nb = self.negate(b)?;
            let ea = self.elements_rc(a);
            let elems = self.product(op, &ea, &[(b, NodeId::TRUE), (nb, NodeId::FALSE)])?;
            self.decision(va, elems)?
        } else if self.vtree.in_right(va, vb) {
            let eb = self.elements_rc(b);
            let elems = self.product(op, &[(NodeId::TRUE, a)], &eb)?;
            self.decision(vb, elems)?
        } else if self.vtree.in_right(vb, va) {
            let ea = self.elements_rc(a);
            let elems = self.product(op, &ea, &[(NodeId::TRUE, b)])?;
            self.decision(va, elems)?
        } else {
            let w = self.vtree.lca(va, vb);
            let (l, r) = if self.vtree.in_left(va, w) { (a, b) } else { (b, a) };
            let nl = self.negate(l)?;
            let elems = match op {
                Op::And => vec![(l, r), (nl, NodeId::FALSE)],
                Op::Or => vec![(l, NodeId::TRUE), (nl, r)],
            };
            self.decision(w, elems)?
        };
        self.apply_cache.insert((a.0, b.0, op), r);
        Ok(r)
    }

    fn product(
        &mut self,
        op: Op,
        ea: &[(NodeId, NodeId)],
        eb: &[(NodeId, NodeId)],
    ) -> Result<Vec<(NodeId, NodeId)>> {
        let mut out = Vec::with_capacity(ea.len() * eb.len());
        for &(p1, s1) in ea {
            for &(p2, s2) in eb {
                let p = self.and(p1, p2)?;
                if p.is_false() {
                    continue;
                }
                let s = self.apply(op, s1, s2)?;
                out.push((p, s));
            }
        }
        Ok(out)
    }

    /// Compresses, trims and hash-conses a decision over vtree node `w`.
    /// The primes must partition the left scope of `w`.
    fn decision(&mut self, w: usize, mut elems: Vec<(NodeId, NodeId)>) -> Result<NodeId> {
        elems.sort_by_key(|&(p, s)| (s, p));
        let mut compressed: Vec<(NodeId, NodeId)> = Vec::with_capacity(elems.len());
        for (p, s) in elems {
            match compressed.last_mut() {
                Some(last) if last.1 == s => {
                    let merged = self.or(last.0, p)?;
                    last.0 = merged;
                }
                _ => compressed.push((p, s)),
            }
        }
        if compressed.len() == 1 {
            return Ok(compressed[0].1);
        }
        if compressed.len() == 2 {
            // Sorted by sub, so FALSE (id 0) comes before TRUE (id 1).
            if compressed[0].1.is_false() && compressed[1].1.is_true() {
                return Ok(compressed[1].0);
            }
        }
        self.intern(w, compressed.into())
    }

    fn intern(&mut self, w: usize, elems: Elements) -> Result<NodeId> {
        if let Some(&id) = self.unique.get(&(w as u32, elems.clone())) {
            return Ok(id);
        }
        if self.nodes.len() >= self.cap {
            return Err(Error::NodeCap { cap: self.cap });
        }
        let id = self.push(Node::Decision(elems.clone()), w as u32);
        self.unique.insert((w as u32, elems), id);
        Ok(id)
    }

    pub fn negate(&mut self, a: NodeId) -> Result<NodeId> {
        let n = self.neg[a.index()];
        if n != NO_NEG {
            return Ok(NodeId(n));
        }
        let w = self.node_vtree[a.index()] as usize;
        let ea = self.elements_rc(a);
        let mut elems = Vec::with_capacity(ea.len());
        for &(p, s) in ea.iter() {
            elems.push((p, self.negate(s)?));
        }
        elems.sort_by_key(|&(p, s)| (s, p));
        let r = self.intern(w, elems.into())?;
        self.neg[a.index()] = r.0;
        self.neg[r.index()] = a.0;
        Ok(r)
    }

    /// Sets `var` to `value` and drops it from the function.
    pub fn condition(&mut self, a: NodeId, var: usize, value: bool) -> Result<NodeId> {
        let leaf = self.vtree.leaf_of(var).ok_or(Error::UnknownVariable(var))?;
        let mut memo = HashMap::new();
        self.condition_rec(a, var, value, leaf, &mut memo)
    }

    fn condition_rec(
        &mut self,
        a: NodeId,
        var: usize,
        value: bool,
        leaf: usize,
        memo: &mut HashMap<NodeId, NodeId>,
    ) -> Result<NodeId> {
        if a.is_constant() {
            return Ok(a);
        }
        if let Node::Literal(v, p) = self.nodes[a.index()] {
            return Ok(if v != var {
                a
            } else if p == value {
                NodeId::TRUE
            } else {
                NodeId::FALSE
            });
        }
        let w = self.node_vtree[a.index()] as usize;
        if !self.vtree.is_within(leaf, w) {
            return Ok(a);
        }
        if let Some(&r) = memo.get(&a) {
            return Ok(r);
        }
        let ea = self.elements_rc(a);
        let mut elems = Vec::with_capacity(ea.len());
        for &(p, s) in ea.iter() {
            let p2 = self.condition_rec(p, var, value, leaf, memo)?;
            if p2.is_false() {
                continue;
            }
            let s2 = self.condition_rec(s, var, value, leaf, memo)?;
            elems.push((p2, s2));
        }
        let r = self.decision(w, elems)?;
        memo.insert(a, r);
        Ok(r)
    }

    /// Existential quantification of every variable in `vars`.
    pub fn exists(&mut self, a: NodeId, vars: &[usize]) -> Result<NodeId> {
        let mut mark = vec![false; self.vtree.len()];
        for &v in vars {
            let leaf = self.vtree.leaf_of(v).ok_or(Error::UnknownVariable(v))?;
            mark[leaf] = true;
        }
        // Propagate marks to ancestors (children have smaller ids).
        for i in 0..self.vtree.len() {
            if mark[i] {
                if let Some(p) = self.vtree.parent(i) {
                    mark[p] = true;
                }
            }
        }
        let mut memo = HashMap::new();
        self.exists_rec(a, &mark, &mut memo)
    }

    fn exists_rec(
        &mut self,
        a: NodeId,
        mark: &[bool],
        memo: &mut HashMap<NodeId, NodeId>,
    ) -> Result<NodeId> {
        if a.is_constant() {
            return Ok(a);
        }
        let w = self.node_vtree[a.index()] as usize;
        if !mark[w] {
            return Ok(a);
        }
        if matches!(self.nodes[a.index()], Node::Literal(..)) {
            return Ok(NodeId::TRUE);
        }
        if let Some(&r) = memo.get(&a) {
            return Ok(r);
        }
        let ea = self.elements_rc(a);
        let left = self.vtree.left(w);
        let r = if !mark[left] {
            // Primes untouched: they still partition, only subs change.
            let mut elems = Vec::with_capacity(ea.len());
            for &(p, s) in ea.iter() {
                elems.push((p, self.exists_rec(s, mark, memo)?));
            }
            self.decision(w, elems)?
        } else {
            let mut acc = NodeId::FALSE;
            for &(p, s) in ea.iter() {
                let p2 = self.exists_rec(p, mark, memo)?;
                let s2 = self.exists_rec(s, mark, memo)?;
                let t = self.and(p2, s2)?;
                acc = self.or(acc, t)?;
                if acc.is_true() {
                    break;
                }
            }
            acc
        };
        memo.insert(a, r);
        Ok(r)
    }

    /// Substitutes variables through `map` (which must be injective on the
    /// support of `a`).
    pub fn rename(&mut self, a: NodeId, map: &dyn Fn(usize) -> usize) -> Result<NodeId> {
        let mut memo = HashMap::new();
        self.rename_rec(a, map, &mut memo)
    }

    fn rename_rec(
        &mut self,
        a: NodeId,
        map: &dyn Fn(usize) -> usize,
        memo: &mut HashMap<NodeId, NodeId>,
    ) -> Result<NodeId> {
        if a.is_constant() {
            return Ok(a);
        }
        if let Node::Literal(v, p) = self.nodes[a.index()] {
            return self.literal(map(v), p);
        }
        if let Some(&r) = memo.get(&a) {
            return Ok(r);
        }
        let ea = self.elements_rc(a);
        let mut acc = NodeId::FALSE;
        for &(p, s) in ea.iter() {
            let p2 = self.rename_rec(p, map, memo)?;
            let s2 = self.rename_rec(s, map, memo)?;
            let t = self.and(p2, s2)?;
            acc = self.or(acc, t)?;
        }
        memo.insert(a, acc);
        Ok(acc)
    }

    /// Rebuilds a node of another manager here, mapping variables through `map`.
    pub fn transfer_from(
        &mut self,
        other: &SddManager,
        a: NodeId,
        map: &dyn Fn(usize) -> usize,
    ) -> Result<NodeId> {
        let mut memo: HashMap<NodeId, NodeId> = HashMap::new();
        // Iterative post-order to bound recursion by the source depth.
        let order = other.topological(a);
        for n in order {
            let r = match &other.nodes[n.index()] {
                Node::False => NodeId::FALSE,
                Node::True => NodeId::TRUE,
                Node::Literal(v, p) => self.literal(map(*v), *p)?,
                Node::Decision(e) => {
                    let mut acc = NodeId::FALSE;
                    for &(p, s) in e.iter() {
                        let t = self.and(memo[&p], memo[&s])?;
                        acc = self.or(acc, t)?;
                    }
                    acc
                }
            };
            memo.insert(n, r);
        }
        Ok(memo[&a])
    }

    /// Nodes reachable from `root`, children first.
    pub fn topological(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen: HashMap<NodeId, ()> = HashMap::new();
        let mut order = Vec::new();
        let mut stack = vec![(root, false)];
        while let Some((n, expanded)) = stack.pop() {
            if expanded {
                order.push(n);
                continue;
            }
            if seen.insert(n, ()).is_some() {
                continue;
            }
            stack.push((n, true));
            for &(p, s) in self.elements(n).iter().rev() {
                for c in [s, p] {
                    if !seen.contains_key(&c) {
                        stack.push((c, false));
                    }
                }
            }
        }
        order
    }

    /// Number of nodes reachable from `root`.
    pub fn size(&self, root: NodeId) -> usize {
        self.topological(root).len()
    }

    /// Freezes the function rooted at `root` into an immutable circuit.
    pub fn export(&self, root: NodeId) -> Circuit {
        let order = self.topological(root);
        let mut index: HashMap<NodeId, usize> = HashMap::with_capacity(order.len());
        let mut nodes = Vec::with_capacity(order.len());
        for n in order {
            let node = match &self.nodes[n.index()] {
                Node::False => CircuitNode::False,
                Node::True => CircuitNode::True,
                Node::Literal(v, p) => CircuitNode::Literal {
                    var: *v,
                    positive: *p,
                },
                Node::Decision(e) => CircuitNode::Decision {
                    vtree: self.node_vtree[n.index()] as usize,
                    elements: e.iter().map(|(p, s)| (index[p], index[s])).collect(),
                },
            };
            index.insert(n, nodes.len());
            nodes.push(node);
        }
        Circuit::from_parts(self.vtree.clone(), nodes)
    }

    /// Loads a circuit built over the same vtree. Decisions are re-derived
    /// through `apply`, so any decomposable circuit is accepted.
    pub fn import(&mut self, c: &Circuit) -> Result<NodeId> {
        let mut ids: Vec<NodeId> = Vec::with_capacity(c.nodes().len());
        for node in c.nodes() {
            let id = match node {
                CircuitNode::False => NodeId::FALSE,
                CircuitNode::True => NodeId::TRUE,
                CircuitNode::Literal { var, positive } => self.literal(*var, *positive)?,
                CircuitNode::Decision { elements, .. } => {
                    let mut acc = NodeId::FALSE;
                    for &(p, s) in elements {
                        let t = self.and(ids[p], ids[s])?;
                        acc = self.or(acc, t)?;
                    }
                    acc
                }
            };
            ids.push(id);
        }
        Ok(*ids.last().unwrap_or(&NodeId::FALSE))
    }

    /// Drops every node not reachable from `roots` and clears caches,
    /// returning the new ids of the roots in order.
    pub fn collect_garbage(&mut self, roots: &[NodeId]) -> Vec<NodeId> {
        let mut fresh = SddManager::with_cap(self.vtree.clone(), self.cap);
        let mut map: HashMap<NodeId, NodeId> = HashMap::new();
        map.insert(NodeId::FALSE, NodeId::FALSE);
        map.insert(NodeId::TRUE, NodeId::TRUE);
        let mut out = Vec::with_capacity(roots.len());
        for &r in roots {
            for n in self.topological(r) {
                if map.contains_key(&n) {
                    continue;
                }
                let id = match &self.nodes[n.index()] {
                    Node::Literal(v, p) => fresh.literals[*v][usize::from(*p)],
                    Node::Decision(e) => {
                        let elems: Vec<(NodeId, NodeId)> =
                            e.iter().map(|(p, s)| (map[p], map[s])).collect();
                        // Already canonical; intern directly.
                        fresh
                            .intern(self.node_vtree[n.index()] as usize, elems.into())
                            .expect("compaction never grows the node count")
                    }
                    Node::False | Node::True => unreachable!(),
                };
                map.insert(n, id);
            }
            out.push(map[&r]);
        }
        *self = fresh;
        out
    }

    /// Evaluates `a` on a full assignment.
    pub fn eval(&self, a: NodeId, x: &[bool]) -> bool {
        match &self.nodes[a.index()] {
            Node::False => false,
            Node::True => true,
            Node::Literal(v, p) => x[*v] == *p,
            Node::Decision(e) => {
                for &(p, s) in e.iter() {
                    if self.eval(p, x) {
                        return self.eval(s, x);
                    }
                }
                false
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdd::VTreeStrategy;

    fn mgr(n: usize) -> SddManager {
        SddManager::new(VTree::build(n, VTreeStrategy::Balanced))
    }

    #[test]
    fn identities() {
        let mut m = mgr(4);
        let x = m.literal(0, true).unwrap();
        let y = m.literal(3, false).unwrap();
        let f = m.or(x, y).unwrap();
        assert_eq!(m.and(f, NodeId::TRUE).unwrap(), f);
        let nf = m.negate(f).unwrap();
        assert_eq!(m.and(f, nf).unwrap(), NodeId::FALSE);
        assert_eq!(m.negate(nf).unwrap(), f);
        let ex = m.exists(x, &[0]).unwrap();
        assert_eq!(ex, NodeId::TRUE);
    }

    #[test]
    fn distributivity_is_canonical() {
        let mut m = mgr(6);
        let lits: Vec<NodeId> = (0..6).map(|v| m.literal(v, v % 2 == 0).unwrap()).collect();
        let a = m.or(lits[0], lits[5]).unwrap();
        let b = m.and(lits[1], lits[3]).unwrap();
        let c = m.or(lits[2], lits[4]).unwrap();
        let bc = m.or(b, c).unwrap();
        let lhs = m.and(a, bc).unwrap();
        let ab = m.and(a, b).unwrap();
        let ac = m.and(a, c).unwrap();
        let rhs = m.or(ab, ac).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn condition_and_exists() {
        let mut m = mgr(3);
        let a = m.literal(0, true).unwrap();
        let b = m.literal(1, true).unwrap();
        let c = m.literal(2, false).unwrap();
        let ab = m.and(a, b).unwrap();
        let f = m.or(ab, c).unwrap();
        assert_eq!(m.condition(f, 0, false).unwrap(), c);
        let g = m.or(b, c).unwrap();
        assert_eq!(m.condition(f, 0, true).unwrap(), g);
        assert_eq!(m.exists(f, &[0]).unwrap(), g);
        assert_eq!(m.exists(f, &[0, 1, 2]).unwrap(), NodeId::TRUE);
        assert!(m.condition(f, 7, true).is_err());
    }

    #[test]
    fn node_cap_is_reported() {
        let mut m = SddManager::with_cap(VTree::build(8, VTreeStrategy::Balanced), 20);
        let mut acc = NodeId::FALSE;
        let mut hit = false;
        for i in 0..4 {
            let x = m.literal(i, true).unwrap();
            let y = m.literal(i + 4, true).unwrap();
            let t = match m.and(x, y) {
                Ok(t) => t,
                Err(Error::NodeCap { cap: 20 }) => {
                    hit = true;
                    break;
                }
                Err(e) => panic!("{e}"),
            };
            acc = match m.or(acc, t) {
                Ok(a) => a,
                Err(Error::NodeCap { .. }) => {
                    hit = true;
                    break;
                }
                Err(e) => panic!("{e}"),
            };
        }
        assert!(hit);
    }

    #[test]
    fn garbage_collection_keeps_functions() {
        let mut m = mgr(5);
        let a = m.literal(0, true).unwrap();
        let b = m.literal(4, true).unwrap();
        let c = m.literal(2, false).unwrap();
        let ab = m.and(a, b).unwrap();
        let f = m.or(ab, c).unwrap();
        let _junk = m.or(a, c).unwrap();
        let before: Vec<bool> = (0..32u32)
            .map(|bits| m.eval(f, &(0..5).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>()))
            .collect();
        let roots = m.collect_garbage(&[f]);
        let after: Vec<bool> = (0..32u32)
            .map(|bits| m.eval(roots[0], &(0..5).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>()))
            .collect();
        assert_eq!(before, after);
        // Canonicity survives compaction.
        let a = m.literal(0, true).unwrap();
        let b = m.literal(4, true).unwrap();
        let c = m.literal(2, false).unwrap();
        let ab = m.and(a, b).unwrap();
        assert_eq!(m.or(ab, c).unwrap(), roots[0]);
    }
}
