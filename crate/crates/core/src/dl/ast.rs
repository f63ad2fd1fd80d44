//! Syntax trees for ALCI concepts, roles, axioms and ontologies.

use std::fmt;

/// An atomic role or the inverse of one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoleExpr {
    pub name: String,
    pub inverted: bool,
}

impl RoleExpr {
    pub fn atomic(name: impl Into<String>) -> Self {
        RoleExpr {
            name: name.into(),
            inverted: false,
        }
    }

    pub fn inverse_of(name: impl Into<String>) -> Self {
        RoleExpr {
            name: name.into(),
            inverted: true,
        }
    }

    /// The inverse role; inverting twice yields the original.
    pub fn inverse(&self) -> Self {
        RoleExpr {
            name: self.name.clone(),
            inverted: !self.inverted,
        }
    }
}

impl fmt::Display for RoleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "inv({})", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

/// Quantifier of a role restriction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        }
    }

    pub fn dual(self) -> Self {
        match self {
            Quantifier::Forall => Quantifier::Exists,
            Quantifier::Exists => Quantifier::Forall,
        }
    }
}

/// A concept expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConceptExpr {
    Atomic(String),
    Top,
    Bottom,
    Not(Box<ConceptExpr>),
    And(Box<ConceptExpr>, Box<ConceptExpr>),
    Or(Box<ConceptExpr>, Box<ConceptExpr>),
    Exists(RoleExpr, Box<ConceptExpr>),
    Forall(RoleExpr, Box<ConceptExpr>),
}

impl ConceptExpr {
    pub fn atomic(name: impl Into<String>) -> Self {
        ConceptExpr::Atomic(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: ConceptExpr) -> Self {
        ConceptExpr::Not(Box::new(e))
    }

    pub fn and(a: ConceptExpr, b: ConceptExpr) -> Self {
        ConceptExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: ConceptExpr, b: ConceptExpr) -> Self {
        ConceptExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(role: RoleExpr, filler: ConceptExpr) -> Self {
        ConceptExpr::Exists(role, Box::new(filler))
    }

    pub fn forall(role: RoleExpr, filler: ConceptExpr) -> Self {
        ConceptExpr::Forall(role, Box::new(filler))
    }

    /// Builds a restriction from a quantifier tag.
    pub fn restriction(q: Quantifier, role: RoleExpr, filler: ConceptExpr) -> Self {
        match q {
            Quantifier::Forall => Self::forall(role, filler),
            Quantifier::Exists => Self::exists(role, filler),
        }
    }

    /// Negation normal form: negation only in front of atomic concepts.
    pub fn is_nnf(&self) -> bool {
        match self {
            ConceptExpr::Atomic(_) | ConceptExpr::Top | ConceptExpr::Bottom => true,
            ConceptExpr::Not(inner) => matches!(**inner, ConceptExpr::Atomic(_)),
            ConceptExpr::And(a, b) | ConceptExpr::Or(a, b) => a.is_nnf() && b.is_nnf(),
            ConceptExpr::Exists(_, c) | ConceptExpr::Forall(_, c) => c.is_nnf(),
        }
    }

    /// Every restriction filler is an atomic concept.
    pub fn is_flat(&self) -> bool {
        match self {
            ConceptExpr::Atomic(_) | ConceptExpr::Top | ConceptExpr::Bottom => true,
            ConceptExpr::Not(inner) => inner.is_flat(),
            ConceptExpr::And(a, b) | ConceptExpr::Or(a, b) => a.is_flat() && b.is_flat(),
            ConceptExpr::Exists(_, c) | ConceptExpr::Forall(_, c) => {
                matches!(**c, ConceptExpr::Atomic(_))
            }
        }
    }

    /// Visits every subexpression in pre-order, left to right.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a ConceptExpr)) {
        f(self);
        match self {
            ConceptExpr::Atomic(_) | ConceptExpr::Top | ConceptExpr::Bottom => {}
            ConceptExpr::Not(inner) => inner.walk(f),
            ConceptExpr::And(a, b) | ConceptExpr::Or(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ConceptExpr::Exists(_, c) | ConceptExpr::Forall(_, c) => c.walk(f),
        }
    }

    /// Atomic concept names in first-occurrence order.
    pub fn concept_names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.walk(&mut |e| {
            if let ConceptExpr::Atomic(n) = e {
                if !out.contains(&n.as_str()) {
                    out.push(n);
                }
            }
        });
        out
    }

    /// Role names in first-occurrence order.
    pub fn role_names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.walk(&mut |e| {
            if let ConceptExpr::Exists(r, _) | ConceptExpr::Forall(r, _) = e {
                if !out.contains(&r.name.as_str()) {
                    out.push(&r.name);
                }
            }
        });
        out
    }

    fn binding(&self) -> u8 {
        match self {
            ConceptExpr::Or(..) => 0,
            ConceptExpr::And(..) => 1,
            _ => 2,
        }
    }

    fn fmt_unary(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.binding() < 2 {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for ConceptExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConceptExpr::Atomic(n) => f.write_str(n),
            ConceptExpr::Top => f.write_str("top"),
            ConceptExpr::Bottom => f.write_str("bottom"),
            ConceptExpr::Not(inner) => {
                f.write_str("not ")?;
                inner.fmt_unary(f)
            }
            ConceptExpr::And(a, b) => {
                // Binary connectives associate to the left.
                if a.binding() < 1 {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                f.write_str(" and ")?;
                b.fmt_unary(f)
            }
            ConceptExpr::Or(a, b) => {
                write!(f, "{a} or ")?;
                if b.binding() < 1 {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            ConceptExpr::Exists(r, c) | ConceptExpr::Forall(r, c) => {
                let kw = if matches!(self, ConceptExpr::Exists(..)) {
                    "exists"
                } else {
                    "forall"
                };
                write!(f, "{kw} {r} . ")?;
                c.fmt_unary(f)
            }
        }
    }
}

/// A general concept inclusion `lhs ⊑ rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SubClassOf {
    pub lhs: ConceptExpr,
    pub rhs: ConceptExpr,
}

impl SubClassOf {
    pub fn new(lhs: ConceptExpr, rhs: ConceptExpr) -> Self {
        SubClassOf { lhs, rhs }
    }
}

/// Any statement the DSL can express.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Axiom {
    SubClassOf(SubClassOf),
    EquivalentTo(ConceptExpr, ConceptExpr),
    ConceptAssertion { concept: String, individual: String },
    RoleAssertion {
        role: RoleExpr,
        subject: String,
        object: String,
    },
}

/// Terminological part of a knowledge base.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ontology {
    pub concepts: Vec<String>,
    pub roles: Vec<String>,
    pub tbox: Vec<SubClassOf>,
}

impl Ontology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn has_concept(&self, name: &str) -> bool {
        self.concepts.iter().any(|c| c == name)
    }

    pub fn has_role(&self, name: &str) -> bool {
        self.roles.iter().any(|r| r == name)
    }

    pub fn concept_index(&self, name: &str) -> Option<usize> {
        self.concepts.iter().position(|c| c == name)
    }

    pub fn role_index(&self, name: &str) -> Option<usize> {
        self.roles.iter().position(|r| r == name)
    }

    /// Adds a TBox axiom, expanding equivalences into two inclusions.
    ///
    /// Assertions are ignored here; they belong to a [`KnowledgeGraphInput`].
    pub fn add_axiom(&mut self, axiom: Axiom) {
        match axiom {
            Axiom::SubClassOf(s) => self.tbox.push(s),
            Axiom::EquivalentTo(a, b) => {
                self.tbox.push(SubClassOf::new(a.clone(), b.clone()));
                self.tbox.push(SubClassOf::new(b, a));
            }
            Axiom::ConceptAssertion { .. } | Axiom::RoleAssertion { .. } => {}
        }
    }

    /// Serializes to the DSL. Parsing the result yields an equal ontology.
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for c in &self.concepts {
            out.push_str(&format!("concept {c}.\n"));
        }
        for r in &self.roles {
            out.push_str(&format!("role {r}.\n"));
        }
        for ax in &self.tbox {
            out.push_str(&format!("axiom {} subclassof {}.\n", ax.lhs, ax.rhs));
        }
        out
    }
}

/// Individuals and assertions about them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeGraphInput {
    pub individuals: Vec<String>,
    pub abox: Vec<Axiom>,
}

impl KnowledgeGraphInput {
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        for i in &self.individuals {
            out.push_str(&format!("individual {i}.\n"));
        }
        for a in &self.abox {
            match a {
                Axiom::ConceptAssertion {
                    concept,
                    individual,
                } => out.push_str(&format!("assert {individual} : {concept}.\n")),
                Axiom::RoleAssertion {
                    role,
                    subject,
                    object,
                } => out.push_str(&format!("assert {subject} {role} {object}.\n")),
                _ => {}
            }
        }
        out
    }
}
