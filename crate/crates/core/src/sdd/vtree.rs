//! Variable trees.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Shape of a vtree built by [`VTree::build`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VTreeStrategy {
    #[default]
    Balanced,
    RightLinear,
}

impl std::str::FromStr for VTreeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(VTreeStrategy::Balanced),
            "right-linear" => Ok(VTreeStrategy::RightLinear),
            _ => Err(Error::InvalidParameter(format!("unknown vtree strategy `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Kind {
    Leaf(usize),
    Internal(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct VNode {
    kind: Kind,
    parent: usize,
    depth: usize,
    // In-order position and the span of positions covered by the subtree.
    pos: usize,
    first: usize,
    last: usize,
    num_vars: usize,
}

/// A full binary tree whose leaves are distinct variables.
///
/// Node ids are assigned children first, so the root has the largest id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VTree {
    nodes: Vec<VNode>,
    var_leaf: Vec<usize>,
}

impl VTree {
    /// Builds a vtree over the variables `0..n`.
    pub fn build(n: usize, strategy: VTreeStrategy) -> Self {
        let vars: Vec<usize> = (0..n).collect();
        match strategy {
            VTreeStrategy::Balanced => Self::balanced(&vars),
            VTreeStrategy::RightLinear => Self::right_linear(&vars),
        }
    }

    /// Balanced vtree; the left half takes the extra variable on odd splits.
    pub fn balanced(vars: &[usize]) -> Self {
        assert!(!vars.is_empty(), "a vtree needs at least one variable");
        let mut kinds = Vec::new();
        fn go(vars: &[usize], kinds: &mut Vec<Kind>) -> usize {
            if vars.len() == 1 {
                kinds.push(Kind::Leaf(vars[0]));
            } else {
                let mid = vars.len().div_ceil(2);
                let l = go(&vars[..mid], kinds);
                let r = go(&vars[mid..], kinds);
                kinds.push(Kind::Internal(l, r));
            }
            kinds.len() - 1
        }
        go(vars, &mut kinds);
        Self::from_kinds(kinds).expect("generated vtree is well formed")
    }

    /// Right-linear vtree: every left child is a leaf.
    pub fn right_linear(vars: &[usize]) -> Self {
        assert!(!vars.is_empty(), "a vtree needs at least one variable");
        let mut kinds = Vec::new();
        let mut leaves = Vec::new();
        for &v in vars {
            kinds.push(Kind::Leaf(v));
            leaves.push(kinds.len() - 1);
        }
        let mut right = *leaves.last().unwrap();
        for &l in leaves.iter().rev().skip(1) {
            kinds.push(Kind::Internal(l, right));
            right = kinds.len() - 1;
        }
        Self::from_kinds(kinds).expect("generated vtree is well formed")
    }

    fn from_kinds(kinds: Vec<Kind>) -> Result<Self> {
        let n = kinds.len();
        if n == 0 {
            return Err(Error::CircuitFormat {
                line: 0,
                message: "empty vtree".into(),
            });
        }
        let mut nodes: Vec<VNode> = kinds
            .into_iter()
            .map(|kind| VNode {
                kind,
                parent: NONE,
                depth: 0,
                pos: 0,
                first: 0,
                last: 0,
                num_vars: 0,
            })
            .collect();
        let mut max_var = 0;
        for i in 0..n {
            match nodes[i].kind {
                Kind::Leaf(v) => {
                    max_var = max_var.max(v);
                    nodes[i].num_vars = 1;
                }
                Kind::Internal(l, r) => {
                    if l >= i || r >= i || l == r {
                        return Err(Error::CircuitFormat {
                            line: 0,
                            message: format!("vtree node {i} has invalid children"),
                        });
                    }
                    for c in [l, r] {
                        if nodes[c].parent != NONE {
                            return Err(Error::CircuitFormat {
                                line: 0,
                                message: format!("vtree node {c} has two parents"),
                            });
                        }
                        nodes[c].parent = i;
                    }
                    nodes[i].num_vars = nodes[l].num_vars + nodes[r].num_vars;
                }
            }
        }
        let root = n - 1;
        if (0..root).any(|i| nodes[i].parent == NONE) {
            return Err(Error::CircuitFormat {
                line: 0,
                message: "vtree is not a single tree rooted at the last node".into(),
            });
        }
        let mut var_leaf = vec![NONE; max_var + 1];
        for (i, node) in nodes.iter().enumerate() {
            if let Kind::Leaf(v) = node.kind {
                if var_leaf[v] != NONE {
                    return Err(Error::CircuitFormat {
                        line: 0,
                        message: format!("variable {v} appears twice in the vtree"),
                    });
                }
                var_leaf[v] = i;
            }
        }
        // Depths top-down (parents have larger ids).
        for i in (0..root).rev() {
            nodes[i].depth = nodes[nodes[i].parent].depth + 1;
        }
        // In-order positions.
        let mut counter = 0;
        fn inorder(nodes: &mut [VNode], i: usize, counter: &mut usize) {
            match nodes[i].kind {
                Kind::Leaf(_) => {
                    nodes[i].pos = *counter;
                    nodes[i].first = *counter;
                    nodes[i].last = *counter;
                    *counter += 1;
                }
                Kind::Internal(l, r) => {
                    inorder(nodes, l, counter);
                    nodes[i].pos = *counter;
                    *counter += 1;
                    inorder(nodes, r, counter);
                    nodes[i].first = nodes[l].first;
                    nodes[i].last = nodes[r].last;
                }
            }
        }
        inorder(&mut nodes, root, &mut counter);
        Ok(VTree { nodes, var_leaf })
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of variables in the whole tree.
    pub fn num_vars(&self) -> usize {
        self.nodes[self.root()].num_vars
    }

    /// One past the largest variable index.
    pub fn var_bound(&self) -> usize {
        self.var_leaf.len()
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        matches!(self.nodes[i].kind, Kind::Leaf(_))
    }

    pub fn leaf_var(&self, i: usize) -> Option<usize> {
        match self.nodes[i].kind {
            Kind::Leaf(v) => Some(v),
            Kind::Internal(..) => None,
        }
    }

    pub fn children(&self, i: usize) -> Option<(usize, usize)> {
        match self.nodes[i].kind {
            Kind::Leaf(_) => None,
            Kind::Internal(l, r) => Some((l, r)),
        }
    }

    pub fn left(&self, i: usize) -> usize {
        self.children(i).expect("internal vtree node").0
    }

    pub fn right(&self, i: usize) -> usize {
        self.children(i).expect("internal vtree node").1
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        let p = self.nodes[i].parent;
        (p != NONE).then_some(p)
    }

    pub fn depth(&self, i: usize) -> usize {
        self.nodes[i].depth
    }

    /// Length of the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn leaf_of(&self, var: usize) -> Option<usize> {
        self.var_leaf.get(var).copied().filter(|&l| l != NONE)
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.leaf_of(var).is_some()
    }

    /// Number of variables below `i`.
    pub fn scope_size(&self, i: usize) -> usize {
        self.nodes[i].num_vars
    }

    /// Variables below `i`, left to right.
    pub fn vars_below(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[i].num_vars);
        let mut stack = vec![i];
        while let Some(j) = stack.pop() {
            match self.nodes[j].kind {
                Kind::Leaf(v) => out.push(v),
                Kind::Internal(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
            }
        }
        out
    }

    /// `u` lies in the subtree of `w` (inclusive).
    pub fn is_within(&self, u: usize, w: usize) -> bool {
        let (a, b) = (&self.nodes[u], &self.nodes[w]);
        b.first <= a.pos && a.pos <= b.last
    }

    /// `u` lies strictly inside the left subtree of `w`.
    pub fn in_left(&self, u: usize, w: usize) -> bool {
        let (a, b) = (&self.nodes[u], &self.nodes[w]);
        b.first <= a.pos && a.pos < b.pos
    }

    /// `u` lies strictly inside the right subtree of `w`.
    pub fn in_right(&self, u: usize, w: usize) -> bool {
        let (a, b) = (&self.nodes[u], &self.nodes[w]);
        b.pos < a.pos && a.pos <= b.last
    }

    /// Lowest common ancestor.
    pub fn lca(&self, mut u: usize, mut w: usize) -> usize {
        while self.nodes[u].depth > self.nodes[w].depth {
            u = self.nodes[u].parent;
        }
        while self.nodes[w].depth > self.nodes[u].depth {
            w = self.nodes[w].parent;
        }
        while u != w {
            u = self.nodes[u].parent;
            w = self.nodes[w].parent;
        }
        u
    }

    /// Text form: `vtree <n>` then `L <id> <var>` / `I <id> <left> <right>`.
    pub fn to_text(&self) -> String {
        let mut out = format!("vtree {}\n", self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            match n.kind {
                Kind::Leaf(v) => writeln!(out, "L {i} {v}").unwrap(),
                Kind::Internal(l, r) => writeln!(out, "I {i} {l} {r}").unwrap(),
            }
        }
        out
    }

    pub fn from_text(source: impl BufRead) -> Result<Self> {
        let mut expected = None;
        let mut kinds = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let line = line?;
            let bad = |message: String| Error::CircuitFormat {
                line: i + 1,
                message,
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.is_empty() {
                continue;
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad number `{s}`")));
            match (f[0], expected) {
                ("vtree", None) if f.len() == 2 => expected = Some(num(f[1])?),
                ("L", Some(_)) if f.len() == 3 => {
                    if num(f[1])? != kinds.len() {
                        return Err(bad("vtree ids must be consecutive".into()));
                    }
                    kinds.push(Kind::Leaf(num(f[2])?));
                }
                ("I", Some(_)) if f.len() == 4 => {
                    if num(f[1])? != kinds.len() {
                        return Err(bad("vtree ids must be consecutive".into()));
                    }
                    kinds.push(Kind::Internal(num(f[2])?, num(f[3])?));
                }
                _ => return Err(bad(format!("unexpected record `{line}`"))),
            }
        }
        match expected {
            Some(n) if n == kinds.len() => Self::from_kinds(kinds),
            Some(n) => Err(Error::CircuitFormat {
                line: 0,
                message: format!("header announces {n} vtree nodes, found {}", kinds.len()),
            }),
            None => Err(Error::CircuitFormat {
                line: 0,
                message: "missing vtree header".into(),
            }),
        }
    }
}
