//! The circuit engine: vtrees, a canonical SDD manager, and frozen circuits.

mod circuit;
mod manager;
mod vtree;

use std::collections::BTreeMap;

pub use circuit::{check_properties, smooth, Circuit, CircuitNode, Enumeration, Properties};
pub use manager::{NodeId, Op, SddManager, DEFAULT_NODE_CAP};
pub use vtree::{VTree, VTreeStrategy};

use crate::cnf::{Cnf, VarMap};
use crate::error::{Error, Result};

/// A vtree over every variable of a variable map.
pub fn build_vtree(vm: &VarMap, strategy: VTreeStrategy) -> VTree {
    VTree::build(vm.total().max(1), strategy)
}

/// Conjoins the clauses of `c` bottom-up over the vtree: clauses are bucketed
/// by the vtree node that is the lowest common ancestor of their variables,
/// each subtree is compiled before its parent, and a node's own clauses are
/// conjoined after its children's results.
pub fn compile_cnf(c: &Cnf, m: &mut SddManager) -> Result<NodeId> {
    if c.clauses.iter().any(Vec::is_empty) {
        return Ok(NodeId::FALSE);
    }
    let vt = m.vtree().clone();
    let mut buckets: BTreeMap<usize, Vec<&Vec<i64>>> = BTreeMap::new();
    for clause in &c.clauses {
        let mut home: Option<usize> = None;
        for &l in clause {
            let var = l.unsigned_abs() as usize - 1;
            let leaf = vt.leaf_of(var).ok_or(Error::UnknownVariable(var))?;
            home = Some(match home {
                None => leaf,
                Some(h) => vt.lca(h, leaf),
            });
        }
        buckets.entry(home.unwrap()).or_default().push(clause);
    }
    // Vtree ids put children before parents, so an increasing sweep is a
    // valid bottom-up order.
    let mut partial: Vec<Option<NodeId>> = vec![None; vt.len()];
    for u in 0..vt.len() {
        let mut acc = NodeId::TRUE;
        if let Some((l, r)) = vt.children(u) {
            for child in [l, r] {
                if let Some(x) = partial[child].take() {
                    acc = m.and(acc, x)?;
                }
            }
        }
        if let Some(clauses) = buckets.get(&u) {
            for clause in clauses {
                let mut disj = NodeId::FALSE;
                for &l in clause.iter() {
                    let lit = m.literal(l.unsigned_abs() as usize - 1, l > 0)?;
                    disj = m.or(disj, lit)?;
                }
                acc = m.and(acc, disj)?;
                if acc.is_false() {
                    return Ok(NodeId::FALSE);
                }
            }
        }
        if acc.is_false() {
            return Ok(NodeId::FALSE);
        }
        partial[u] = Some(acc);
    }
    Ok(partial[vt.root()].unwrap_or(NodeId::TRUE))
}

/// Compiles a CNF into a frozen circuit over a fresh manager for `vt`.
pub fn compile_cnf_circuit(c: &Cnf, vt: &VTree) -> Result<Circuit> {
    if c.num_vars > vt.var_bound() {
        return Err(Error::UnknownVariable(c.num_vars - 1));
    }
    let mut m = SddManager::new(vt.clone());
    let root = compile_cnf(c, &mut m)?;
    Ok(m.export(root))
}
