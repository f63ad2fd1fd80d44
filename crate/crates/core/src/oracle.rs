//! Brute-force reference implementations for tests.
//!
//! Everything here enumerates assignments explicitly and evaluates the
//! ontology semantics directly on dominoes. It uses the `dl` module for
//! parsing and normalization but none of the propositional encoding,
//! compilation or query code, so agreement with those modules is evidence
//! rather than tautology. Enumeration is capped at [`MAX_VARS`] variables.

use std::collections::{HashMap, HashSet};

use rand::Rng;

use crate::dl::{extract_parts, normalize, ConceptExpr, Ontology, Part, Quantifier, RoleExpr, SubClassOf};
use crate::error::{Error, Result};
use crate::infer::{InputDist, Parameterization, SumWeights};
use crate::sdd::{Circuit, CircuitNode};

/// Largest variable count any oracle will enumerate.
pub const MAX_VARS: usize = 24;

fn check_cap(n: usize) -> Result<()> {
    if n > MAX_VARS {
        Err(Error::EnumerationCap {
            cap: MAX_VARS,
            found: n,
        })
    } else {
        Ok(())
    }
}

/// A sorted, deduplicated set of full assignments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitSet {
    pub num_vars: usize,
    /// Lexicographic order, variable 0 first, false before true.
    pub models: Vec<Vec<bool>>,
}

impl ExplicitSet {
    fn from_masks(num_vars: usize, masks: impl IntoIterator<Item = u32>) -> Self {
        let mut models: Vec<Vec<bool>> = masks
            .into_iter()
            .map(|m| (0..num_vars).map(|v| m >> v & 1 == 1).collect())
            .collect();
        models.sort();
        models.dedup();
        ExplicitSet { num_vars, models }
    }

    fn masks(&self) -> Vec<u32> {
        self.models
            .iter()
            .map(|x| x.iter().enumerate().fold(0u32, |m, (v, &b)| m | (b as u32) << v))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn contains(&self, x: &[bool]) -> bool {
        self.models.binary_search_by(|m| m.as_slice().cmp(x)).is_ok()
    }

    /// Assignment-file rendering: header of `columns`, then 0/1 rows.
    pub fn to_tsv(&self, columns: &[String]) -> String {
        let mut out = columns.join("\t");
        out.push('\n');
        for m in &self.models {
            let row: Vec<&str> = m.iter().map(|&b| if b { "1" } else { "0" }).collect();
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Variable layout re-derived from the normalized ontology: side-1 parts,
/// role keys, side-2 parts.
#[derive(Clone, Debug)]
pub struct OracleLayout {
    pub normalized: Ontology,
    pub parts: Vec<Part>,
    /// `(role name, inverted)` per role key.
    pub keys: Vec<(String, bool)>,
    pub split: bool,
    index: HashMap<Part, usize>,
}

impl OracleLayout {
    pub fn new(o: &Ontology, split: bool) -> Self {
        let normalized = normalize(o);
        let parts = extract_parts(&normalized);
        let mut keys = Vec::new();
        for r in &normalized.roles {
            keys.push((r.clone(), false));
            if split {
                keys.push((r.clone(), true));
            }
        }
        let index = parts.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        OracleLayout {
            normalized,
            parts,
            keys,
            split,
            index,
        }
    }

    pub fn total(&self) -> usize {
        2 * self.parts.len() + self.keys.len()
    }

    fn part_bit(&self, part: usize, side: usize) -> usize {
        if side == 1 {
            part
        } else {
            self.parts.len() + self.keys.len() + part
        }
    }

    fn key_bit(&self, name: &str, inverted: bool) -> Option<usize> {
        self.keys
            .iter()
            .position(|(n, i)| n == name && *i == inverted)
            .map(|k| self.parts.len() + k)
    }

    /// Column names in the same style as the production variable map.
    pub fn column_names(&self) -> Vec<String> {
        let part_name = |p: &Part| p.to_string().replace(' ', "");
        let mut out: Vec<String> = self.parts.iter().map(|p| format!("{}@1", part_name(p))).collect();
        out.extend(self.keys.iter().map(|(n, i)| if *i { format!("inv({n})") } else { n.clone() }));
        out.extend(self.parts.iter().map(|p| format!("{}@2", part_name(p))));
        out
    }

    /// Type of one side: the part block as a bit mask.
    fn side_type(&self, m: u32, side: usize) -> u32 {
        let mut t = 0;
        for i in 0..self.parts.len() {
            if m >> self.part_bit(i, side) & 1 == 1 {
                t |= 1 << i;
            }
        }
        t
    }

    /// Whether the element on side `from` reaches the one on side `to`
    /// through `role`. Each role bit describes edges from side 1 to side 2;
    /// in split mode the inverse bit describes edges from side 2 to side 1.
    fn edge(&self, m: u32, from: usize, to: usize, role: &RoleExpr) -> bool {
        debug_assert_ne!(from, to);
        let bit = |name: &str, inv: bool| self.key_bit(name, inv).is_some_and(|b| m >> b & 1 == 1);
        if self.split {
            let key_inverted = if from == 1 { role.inverted } else { !role.inverted };
            bit(&role.name, key_inverted)
        } else {
            // Only d1 -> d2 edges of atomic roles exist.
            match (from, role.inverted) {
                (1, false) | (2, true) => bit(&role.name, false),
                _ => false,
            }
        }
    }

    fn holds(&self, e: &ConceptExpr, m: u32, side: usize) -> bool {
        match e {
            ConceptExpr::Top => true,
            ConceptExpr::Bottom => false,
            ConceptExpr::Not(a) => !self.holds(a, m, side),
            ConceptExpr::And(a, b) => self.holds(a, m, side) && self.holds(b, m, side),
            ConceptExpr::Or(a, b) => self.holds(a, m, side) || self.holds(b, m, side),
            other => {
                let p = Part::from_concept(other).expect("flat ontology");
                m >> self.part_bit(self.index[&p], side) & 1 == 1
            }
        }
    }

    fn in_d0(&self, m: u32) -> bool {
        for side in [1, 2] {
            for SubClassOf { lhs, rhs } in &self.normalized.tbox {
                if self.holds(lhs, m, side) && !self.holds(rhs, m, side) {
                    return false;
                }
            }
        }
        for (i, p) in self.parts.iter().enumerate() {
            let Part::Restriction {
                quantifier,
                role,
                filler,
            } = p
            else {
                continue;
            };
            let a = self.index[&Part::Atomic(filler.clone())];
            for (x, y) in [(1, 2), (2, 1)] {
                if !self.edge(m, x, y, role) {
                    continue;
                }
                let has_p = m >> self.part_bit(i, x) & 1 == 1;
                let has_a = m >> self.part_bit(a, y) & 1 == 1;
                let ok = match quantifier {
                    Quantifier::Forall => !has_p || has_a,
                    Quantifier::Exists => has_p || !has_a,
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}

/// The initial domino set by enumeration.
pub fn oracle_d0(o: &Ontology, split: bool) -> Result<ExplicitSet> {
    let lay = OracleLayout::new(o, split);
    let n = lay.total();
    check_cap(n)?;
    let masks = (0..1u64 << n).map(|m| m as u32).filter(|&m| lay.in_d0(m));
    Ok(ExplicitSet::from_masks(n, masks))
}

/// Removes dominoes with a side whose type lacks a required successor among
/// the current dominoes, until nothing changes. An existential part needs a
/// successor with the filler; a false universal part needs one without it.
pub fn oracle_refine(d0: &ExplicitSet, o: &Ontology, split: bool) -> Result<ExplicitSet> {
    let lay = OracleLayout::new(o, split);
    if lay.total() != d0.num_vars {
        return Err(Error::LengthMismatch {
            expected: lay.total(),
            found: d0.num_vars,
        });
    }
    check_cap(d0.num_vars)?;
    let mut cur = d0.masks();
    loop {
        // (type, part, filler value on the successor)
        let mut seen: HashSet<(u32, usize, bool)> = HashSet::new();
        for &m in &cur {
            for (x, y) in [(1, 2), (2, 1)] {
                let t = lay.side_type(m, x);
                for (i, p) in lay.parts.iter().enumerate() {
                    if let Part::Restriction { role, filler, .. } = p {
                        if lay.edge(m, x, y, role) {
                            let a = lay.index[&Part::Atomic(filler.clone())];
                            seen.insert((t, i, m >> lay.part_bit(a, y) & 1 == 1));
                        }
                    }
                }
            }
        }
        let type_ok = |t: u32| {
            lay.parts.iter().enumerate().all(|(i, p)| match p {
                Part::Restriction { quantifier, .. } => {
                    let has = t >> i & 1 == 1;
                    match quantifier {
                        Quantifier::Exists => !has || seen.contains(&(t, i, true)),
                        Quantifier::Forall => has || seen.contains(&(t, i, false)),
                    }
                }
                Part::Atomic(_) => true,
            })
        };
        let next: Vec<u32> = cur
            .iter()
            .copied()
            .filter(|&m| type_ok(lay.side_type(m, 1)) && type_ok(lay.side_type(m, 2)))
            .collect();
        if next.len() == cur.len() {
            return Ok(ExplicitSet::from_masks(d0.num_vars, cur));
        }
        cur = next;
    }
}

/// `oracle_refine(oracle_d0(o))`.
pub fn oracle_canonical(o: &Ontology, split: bool) -> Result<ExplicitSet> {
    oracle_refine(&oracle_d0(o, split)?, o, split)
}

/// Models of a circuit by evaluating every assignment.
pub fn oracle_models(c: &Circuit) -> Result<ExplicitSet> {
    let n = c.num_vars();
    check_cap(n)?;
    let masks = (0..1u64 << n).map(|m| m as u32).filter(|&m| {
        let x: Vec<bool> = (0..n).map(|v| m >> v & 1 == 1).collect();
        eval_plain(c, &x)
    });
    Ok(ExplicitSet::from_masks(n, masks))
}

/// Models of a CNF projected onto its first `keep` variables.
pub fn oracle_cnf_models(cnf: &crate::cnf::Cnf, keep: usize) -> Result<ExplicitSet> {
    check_cap(cnf.num_vars)?;
    let mut out = HashSet::new();
    for m in 0..1u64 << cnf.num_vars {
        let sat = cnf.clauses.iter().all(|cl| {
            cl.iter().any(|&l| {
                let v = l.unsigned_abs() as usize - 1;
                (m >> v & 1 == 1) == (l > 0)
            })
        });
        if sat {
            out.insert((m & ((1u64 << keep) - 1)) as u32);
        }
    }
    Ok(ExplicitSet::from_masks(keep, out))
}

fn eval_plain(c: &Circuit, x: &[bool]) -> bool {
    node_values(c, x)[c.root()]
}

fn node_values(c: &Circuit, x: &[bool]) -> Vec<bool> {
    let mut val = Vec::with_capacity(c.node_count());
    for n in c.nodes() {
        let v = match n {
            CircuitNode::False => false,
            CircuitNode::True => true,
            CircuitNode::Literal { var, positive } => x[*var] == *positive,
            CircuitNode::Decision { elements, .. } => elements.iter().any(|&(p, s)| val[p] && val[s]),
        };
        val.push(v);
    }
    val
}

/// Weight of model `x` under `theta` on a smooth circuit: input masses
/// (Marginalized counts 1) times the element weights met on the walk from
/// the root through the unique satisfied element of each decision.
pub fn path_weight(c: &Circuit, theta: &Parameterization, x: &[bool]) -> f64 {
    let val = node_values(c, x);
    if !val[c.root()] {
        return 0.0;
    }
    let mut w = 1.0;
    let mut stack = vec![c.root()];
    while let Some(n) = stack.pop() {
        match &c.nodes()[n] {
            CircuitNode::Literal { var, .. } => {
                w *= match theta.inputs[*var] {
                    InputDist::Indicator(b) => (b == x[*var]) as u8 as f64,
                    InputDist::Bernoulli(p) => {
                        if x[*var] {
                            p
                        } else {
                            1.0 - p
                        }
                    }
                    InputDist::Marginalized => 1.0,
                }
            }
            CircuitNode::Decision { elements, .. } => {
                let live: Vec<usize> = (0..elements.len())
                    .filter(|&k| val[elements[k].0] && val[elements[k].1])
                    .collect();
                assert_eq!(live.len(), 1, "circuit is not deterministic");
                let k = live[0];
                if let SumWeights::Explicit(ws) = &theta.weights {
                    w *= ws[n][k];
                }
                stack.push(elements[k].0);
                stack.push(elements[k].1);
            }
            CircuitNode::True | CircuitNode::False => {}
        }
    }
    w
}

fn input_mass(theta: &Parameterization, x: &[bool], skip_marg: bool) -> f64 {
    theta
        .inputs
        .iter()
        .zip(x)
        .map(|(d, &b)| match *d {
            InputDist::Indicator(e) => (e == b) as u8 as f64,
            InputDist::Bernoulli(p) => {
                if b {
                    p
                } else {
                    1.0 - p
                }
            }
            InputDist::Marginalized => {
                if skip_marg {
                    1.0
                } else {
                    0.5
                }
            }
        })
        .product()
}

/// Reference weighted model count, following the conventions of
/// [`crate::infer::wmc`]. Uniform weights: the input probability of the set
/// of assignments to the non-marginalized variables that extend to a model.
/// Explicit weights: the sum of path weights over models divided by the
/// same sum with every input Marginalized.
pub fn oracle_wmc(models: &ExplicitSet, c: &Circuit, theta: &Parameterization) -> f64 {
    match &theta.weights {
        SumWeights::Uniform => {
            let marg: Vec<bool> = theta.inputs.iter().map(|d| *d == InputDist::Marginalized).collect();
            let mut seen = HashSet::new();
            let mut total = 0.0;
            for m in &models.models {
                let key: Vec<bool> = m.iter().zip(&marg).map(|(&b, &mg)| b && !mg).collect();
                if seen.insert(key) {
                    total += input_mass(theta, m, true);
                }
            }
            total
        }
        SumWeights::Explicit(_) => {
            let all = Parameterization {
                inputs: vec![InputDist::Marginalized; theta.inputs.len()],
                weights: theta.weights.clone(),
            };
            let z: f64 = models.models.iter().map(|m| path_weight(c, theta, m)).sum();
            let z_all: f64 = models.models.iter().map(|m| path_weight(c, &all, m)).sum();
            z / z_all
        }
    }
}

/// The distribution sampling draws from: models consistent with `evidence`,
/// weighted by path weight and normalized. Models outside the evidence are
/// omitted.
pub fn oracle_distribution(
    models: &ExplicitSet,
    c: &Circuit,
    theta: &Parameterization,
    evidence: &[Option<bool>],
) -> Vec<(Vec<bool>, f64)> {
    let ok = |m: &[bool]| evidence.iter().zip(m).all(|(e, &b)| e.is_none_or(|e| e == b));
    let weighted: Vec<(Vec<bool>, f64)> = models
        .models
        .iter()
        .filter(|m| ok(m))
        .map(|m| (m.clone(), path_weight(c, theta, m)))
        .collect();
    let z: f64 = weighted.iter().map(|(_, w)| w).sum();
    weighted.into_iter().map(|(m, w)| (m, w / z)).collect()
}

/// Marginal probability of `var` being true under [`oracle_distribution`].
pub fn oracle_marginal(
    models: &ExplicitSet,
    c: &Circuit,
    theta: &Parameterization,
    evidence: &[Option<bool>],
    var: usize,
) -> f64 {
    oracle_distribution(models, c, theta, evidence)
        .iter()
        .filter(|(m, _)| m[var])
        .map(|(_, p)| p)
        .sum()
}

/// Highest-weight model consistent with `evidence`, with its path weight.
/// Weights within a relative 1e-9 count as ties, broken toward the
/// lexicographically smallest model.
pub fn oracle_map(
    models: &ExplicitSet,
    c: &Circuit,
    theta: &Parameterization,
    evidence: &[Option<bool>],
) -> Option<(Vec<bool>, f64)> {
    let ok = |m: &[bool]| evidence.iter().zip(m).all(|(e, &b)| e.is_none_or(|e| e == b));
    let mut best: Option<(Vec<bool>, f64)> = None;
    for m in models.models.iter().filter(|m| ok(m)) {
        let w = path_weight(c, theta, m);
        if w == 0.0 {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, b)) => w > b * (1.0 + 1e-9),
        };
        if better {
            best = Some((m.clone(), w));
        }
    }
    best
}

/// Probability mass of Bernoulli `probs` on the models of `models`.
pub fn oracle_bernoulli_mass(models: &ExplicitSet, probs: &[f64]) -> f64 {
    let theta = Parameterization::bernoulli(probs);
    models.models.iter().map(|m| input_mass(&theta, m, true)).sum()
}

fn random_concept<R: Rng + ?Sized>(rng: &mut R, concepts: &[String], roles: &[String], depth: usize) -> ConceptExpr {
    let atom = |rng: &mut R| ConceptExpr::atomic(concepts[rng.random_range(0..concepts.len())].clone());
    if depth == 0 {
        return match rng.random_range(0..6) {
            0 => ConceptExpr::not(atom(rng)),
            _ => atom(rng),
        };
    }
    let role = |rng: &mut R| {
        let name = roles[rng.random_range(0..roles.len())].clone();
        if rng.random_bool(0.4) {
            RoleExpr::inverse_of(name)
        } else {
            RoleExpr::atomic(name)
        }
    };
    match rng.random_range(0..7) {
        0 | 1 => atom(rng),
        2 => ConceptExpr::not(random_concept(rng, concepts, roles, depth - 1)),
        3 => ConceptExpr::and(
            random_concept(rng, concepts, roles, depth - 1),
            random_concept(rng, concepts, roles, depth - 1),
        ),
        4 => ConceptExpr::or(
            random_concept(rng, concepts, roles, depth - 1),
            random_concept(rng, concepts, roles, depth - 1),
        ),
        5 => ConceptExpr::exists(role(rng), random_concept(rng, concepts, roles, depth - 1)),
        _ => ConceptExpr::forall(role(rng), random_concept(rng, concepts, roles, depth - 1)),
    }
}

/// A random small ontology using negation, both quantifiers and inverse
/// roles whose domino variable count (in the given mode) lies between
/// `max_vars / 2` and `max_vars`. Retries until one fits.
pub fn random_ontology<R: Rng + ?Sized>(rng: &mut R, max_vars: usize, split: bool) -> Ontology {
    loop {
        let nc = rng.random_range(1..=4);
        let nr = rng.random_range(1..=2);
        let concepts: Vec<String> = (0..nc).map(|i| format!("C{i}")).collect();
        let roles: Vec<String> = (0..nr).map(|i| format!("r{i}")).collect();
        let mut o = Ontology {
            concepts: concepts.clone(),
            roles: roles.clone(),
            tbox: Vec::new(),
        };
        for _ in 0..rng.random_range(1..=3) {
            let lhs = match rng.random_range(0..10) {
                0..=1 => ConceptExpr::Top,
                2..=6 => ConceptExpr::atomic(concepts[rng.random_range(0..nc)].clone()),
                _ => {
                    let d = rng.random_range(0..=1);
                    random_concept(rng, &concepts, &roles, d)
                }
            };
            let d = rng.random_range(1..=2);
            let rhs = random_concept(rng, &concepts, &roles, d);
            o.tbox.push(SubClassOf::new(lhs, rhs));
        }
        // Existential demands are what refinement acts on.
        if rng.random_bool(0.6) {
            let lhs = ConceptExpr::atomic(concepts[rng.random_range(0..nc)].clone());
            let name = roles[rng.random_range(0..nr)].clone();
            let role = if rng.random_bool(0.4) {
                RoleExpr::inverse_of(name)
            } else {
                RoleExpr::atomic(name)
            };
            let d = rng.random_range(0..=1);
            let filler = random_concept(rng, &concepts, &roles, d);
            o.tbox.push(SubClassOf::new(lhs, ConceptExpr::exists(role, filler)));
        }
        let total = OracleLayout::new(&o, split).total();
        if total <= max_vars && 2 * total >= max_vars {
            return o;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::parse_ontology;
    use crate::fixtures::MUSIC_DSL;

    #[test]
    fn empty_ontology_keeps_everything() {
        let mut o = Ontology::new();
        o.concepts.push("A".into());
        o.roles.push("r".into());
        let d0 = oracle_d0(&o, false).unwrap();
        assert_eq!(d0.len(), 8);
    }

    #[test]
    fn music_rejects_label_influencing_artist() {
        let (o, _) = parse_ontology(MUSIC_DSL).unwrap();
        let lay = OracleLayout::new(&o, false);
        assert_eq!(lay.total(), 14);
        let d = oracle_canonical(&o, false).unwrap();
        let cols = lay.column_names();
        let at = |name: &str| cols.iter().position(|c| c == name).unwrap();
        for m in &d.models {
            assert!(!(m[at("Label@1")] && m[at("influence")]));
            assert!(!(m[at("Artist@1")] && m[at("Label@1")]));
        }
        let again = oracle_refine(&d, &o, false).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn cap_is_enforced() {
        let mut o = Ontology::new();
        for i in 0..13 {
            o.concepts.push(format!("C{i}"));
        }
        assert!(matches!(oracle_d0(&o, false), Err(Error::EnumerationCap { .. })));
    }
}
