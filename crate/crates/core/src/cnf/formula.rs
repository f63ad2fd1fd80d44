//! Propositional formulas and their clausal form.

use std::collections::HashMap;

/// A propositional formula over variable indices.
///
/// The smart constructors [`PropFormula::and`] and [`PropFormula::or`]
/// flatten nested connectives of the same kind and fold constants, so the
/// lists of a built formula are never empty and never directly nested.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PropFormula {
    Lit(usize, bool),
    True,
    False,
    And(Vec<PropFormula>),
    Or(Vec<PropFormula>),
}

impl PropFormula {
    pub fn lit(var: usize, positive: bool) -> Self {
        PropFormula::Lit(var, positive)
    }

    pub fn and(items: impl IntoIterator<Item = PropFormula>) -> Self {
        let mut out = Vec::new();
        for f in items {
            match f {
                PropFormula::True => {}
                PropFormula::False => return PropFormula::False,
                PropFormula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => PropFormula::True,
            1 => out.pop().unwrap(),
            _ => PropFormula::And(out),
        }
    }

    pub fn or(items: impl IntoIterator<Item = PropFormula>) -> Self {
        let mut out = Vec::new();
        for f in items {
            match f {
                PropFormula::False => {}
                PropFormula::True => return PropFormula::True,
                PropFormula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        match out.len() {
            0 => PropFormula::False,
            1 => out.pop().unwrap(),
            _ => PropFormula::Or(out),
        }
    }

    pub fn implies(a: PropFormula, b: PropFormula) -> Self {
        Self::or([a.negate(), b])
    }

    /// Negation pushed to the literals.
    pub fn negate(&self) -> Self {
        match self {
            PropFormula::Lit(v, p) => PropFormula::Lit(*v, !p),
            PropFormula::True => PropFormula::False,
            PropFormula::False => PropFormula::True,
            PropFormula::And(xs) => Self::or(xs.iter().map(|x| x.negate())),
            PropFormula::Or(xs) => Self::and(xs.iter().map(|x| x.negate())),
        }
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        match self {
            PropFormula::Lit(v, p) => assignment[*v] == *p,
            PropFormula::True => true,
            PropFormula::False => false,
            PropFormula::And(xs) => xs.iter().all(|x| x.eval(assignment)),
            PropFormula::Or(xs) => xs.iter().any(|x| x.eval(assignment)),
        }
    }

    /// Largest variable index mentioned, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            PropFormula::Lit(v, _) => Some(*v),
            PropFormula::True | PropFormula::False => None,
            PropFormula::And(xs) | PropFormula::Or(xs) => xs.iter().filter_map(|x| x.max_var()).max(),
        }
    }

    /// Replaces every variable through `map`.
    pub fn rename(&self, map: &impl Fn(usize) -> usize) -> Self {
        match self {
            PropFormula::Lit(v, p) => PropFormula::Lit(map(*v), *p),
            PropFormula::True => PropFormula::True,
            PropFormula::False => PropFormula::False,
            PropFormula::And(xs) => PropFormula::And(xs.iter().map(|x| x.rename(map)).collect()),
            PropFormula::Or(xs) => PropFormula::Or(xs.iter().map(|x| x.rename(map)).collect()),
        }
    }
}

/// A formula in conjunctive normal form. Literals use DIMACS conventions:
/// variable `v` (0-based) appears as `v + 1` or `-(v + 1)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i64>>,
}

impl Cnf {
    pub fn new(num_vars: usize) -> Self {
        Cnf {
            num_vars,
            clauses: Vec::new(),
        }
    }

    /// Adds a clause after removing duplicate literals. Tautological clauses
    /// are dropped.
    pub fn add_clause(&mut self, lits: impl IntoIterator<Item = i64>) {
        let mut clause: Vec<i64> = Vec::new();
        for l in lits {
            if clause.contains(&-l) {
                return;
            }
            if !clause.contains(&l) {
                clause.push(l);
            }
        }
        for &l in &clause {
            self.num_vars = self.num_vars.max(l.unsigned_abs() as usize);
        }
        self.clauses.push(clause);
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|&l| assignment[l.unsigned_abs() as usize - 1] == (l > 0))
        })
    }

    pub fn literal_count(&self) -> usize {
        self.clauses.iter().map(Vec::len).sum()
    }
}

/// DIMACS literal for a variable index and polarity.
pub fn dimacs_lit(var: usize, positive: bool) -> i64 {
    let v = var as i64 + 1;
    if positive {
        v
    } else {
        -v
    }
}

/// Tseitin clausifier. Auxiliary variables are numbered from `next_aux`
/// upward in the order subformulas are first met; repeated subformulas share
/// one auxiliary.
pub struct Tseitin<'a> {
    cnf: &'a mut Cnf,
    next_aux: usize,
    defined: HashMap<PropFormula, usize>,
}

impl<'a> Tseitin<'a> {
    pub fn new(cnf: &'a mut Cnf, next_aux: usize) -> Self {
        Tseitin {
            cnf,
            next_aux,
            defined: HashMap::new(),
        }
    }

    pub fn next_aux(&self) -> usize {
        self.next_aux
    }

    /// Adds clauses asserting `f`.
    pub fn assert(&mut self, f: &PropFormula) {
        match f {
            PropFormula::True => {}
            PropFormula::False => self.cnf.clauses.push(Vec::new()),
            PropFormula::Lit(v, p) => self.cnf.add_clause([dimacs_lit(*v, *p)]),
            PropFormula::And(xs) => {
                for x in xs {
                    self.assert(x);
                }
            }
            PropFormula::Or(xs) => {
                let lits: Vec<i64> = xs.iter().map(|x| self.literal_for(x)).collect();
                self.cnf.add_clause(lits);
            }
        }
    }

    /// A literal equivalent to `f`, defining an auxiliary when `f` is compound.
    fn literal_for(&mut self, f: &PropFormula) -> i64 {
        match f {
            PropFormula::Lit(v, p) => dimacs_lit(*v, *p),
            PropFormula::True | PropFormula::False => {
                // Constants are folded by the smart constructors; handle
                // hand-built formulas with a fixed auxiliary.
                let t = self.define_const();
                if matches!(f, PropFormula::True) {
                    t
                } else {
                    -t
                }
            }
            PropFormula::And(xs) | PropFormula::Or(xs) => {
                if let Some(&v) = self.defined.get(f) {
                    return dimacs_lit(v, true);
                }
                let lits: Vec<i64> = xs.iter().map(|x| self.literal_for(x)).collect();
                let v = self.next_aux;
                self.next_aux += 1;
                self.defined.insert(f.clone(), v);
                let t = dimacs_lit(v, true);
                if matches!(f, PropFormula::And(_)) {
                    for &l in &lits {
                        self.cnf.add_clause([-t, l]);
                    }
                    self.cnf
                        .add_clause(std::iter::once(t).chain(lits.iter().map(|l| -l)));
                } else {
                    self.cnf.add_clause(std::iter::once(-t).chain(lits.iter().copied()));
                    for &l in &lits {
                        self.cnf.add_clause([t, -l]);
                    }
                }
                self.cnf.num_vars = self.cnf.num_vars.max(v + 1);
                t
            }
        }
    }

    fn define_const(&mut self) -> i64 {
        if let Some(&v) = self.defined.get(&PropFormula::True) {
            return dimacs_lit(v, true);
        }
        let v = self.next_aux;
        self.next_aux += 1;
        self.defined.insert(PropFormula::True, v);
        self.cnf.add_clause([dimacs_lit(v, true)]);
        dimacs_lit(v, true)
    }
}
