//! Negation normal form, filler flattening and part extraction.

use std::collections::VecDeque;
use std::fmt;

use super::ast::{ConceptExpr, Ontology, Quantifier, RoleExpr, SubClassOf};

/// Pushes negation inward until it only sits on atomic concepts.
pub fn to_nnf(e: &ConceptExpr) -> ConceptExpr {
    nnf(e, false)
}

fn nnf(e: &ConceptExpr, negate: bool) -> ConceptExpr {
    use ConceptExpr as C;
    match (e, negate) {
        (C::Atomic(_), false) => e.clone(),
        (C::Atomic(_), true) => C::not(e.clone()),
        (C::Top, false) | (C::Bottom, true) => C::Top,
        (C::Top, true) | (C::Bottom, false) => C::Bottom,
        (C::Not(inner), _) => nnf(inner, !negate),
        (C::And(a, b), false) => C::and(nnf(a, false), nnf(b, false)),
        (C::And(a, b), true) => C::or(nnf(a, true), nnf(b, true)),
        (C::Or(a, b), false) => C::or(nnf(a, false), nnf(b, false)),
        (C::Or(a, b), true) => C::and(nnf(a, true), nnf(b, true)),
        (C::Exists(r, c), false) => C::exists(r.clone(), nnf(c, false)),
        (C::Exists(r, c), true) => C::forall(r.clone(), nnf(c, true)),
        (C::Forall(r, c), false) => C::forall(r.clone(), nnf(c, false)),
        (C::Forall(r, c), true) => C::exists(r.clone(), nnf(c, true)),
    }
}

/// Rewrites both sides of every axiom into NNF.
pub fn nnf_ontology(o: &Ontology) -> Ontology {
    Ontology {
        concepts: o.concepts.clone(),
        roles: o.roles.clone(),
        tbox: o
            .tbox
            .iter()
            .map(|ax| SubClassOf::new(to_nnf(&ax.lhs), to_nnf(&ax.rhs)))
            .collect(),
    }
}

/// Replaces every compound restriction filler with a fresh atomic concept.
///
/// A filler in positive position (right-hand side) becomes `X` with the new
/// axiom `⊤ ⊑ ¬X ⊔ filler`. A filler on the left-hand side occurs negatively,
/// so the new axiom is `⊤ ⊑ nnf(¬filler) ⊔ X` instead; either way every model
/// of the result is a model of the input and every model of the input extends
/// to one of the result. Fresh names are `_aux0`, `_aux1`, ... assigned in
/// axiom order, left-hand side first, outermost restriction first; new axioms
/// are queued after the existing ones. Names already declared are skipped.
///
/// Expects axioms in NNF.
pub fn flatten(o: &Ontology) -> Ontology {
    let mut out = Ontology {
        concepts: o.concepts.clone(),
        roles: o.roles.clone(),
        tbox: Vec::new(),
    };
    let mut queue: VecDeque<SubClassOf> = o.tbox.iter().cloned().collect();
    let mut next_aux = 0usize;
    while let Some(ax) = queue.pop_front() {
        let mut fresh = |concepts: &mut Vec<String>| loop {
            let name = format!("_aux{next_aux}");
            next_aux += 1;
            if !concepts.contains(&name) {
                concepts.push(name.clone());
                return name;
            }
        };
        let mut pending = Vec::new();
        let lhs = flatten_expr(&ax.lhs, false, &mut out.concepts, &mut fresh, &mut pending);
        let rhs = flatten_expr(&ax.rhs, true, &mut out.concepts, &mut fresh, &mut pending);
        out.tbox.push(SubClassOf::new(lhs, rhs));
        queue.extend(pending);
    }
    out
}

fn flatten_expr(
    e: &ConceptExpr,
    positive: bool,
    concepts: &mut Vec<String>,
    fresh: &mut impl FnMut(&mut Vec<String>) -> String,
    pending: &mut Vec<SubClassOf>,
) -> ConceptExpr {
    use ConceptExpr as C;
    match e {
        C::Atomic(_) | C::Top | C::Bottom => e.clone(),
        // NNF: negation wraps an atom, nothing to rewrite below.
        C::Not(_) => e.clone(),
        C::And(a, b) => C::and(
            flatten_expr(a, positive, concepts, fresh, pending),
            flatten_expr(b, positive, concepts, fresh, pending),
        ),
        C::Or(a, b) => C::or(
            flatten_expr(a, positive, concepts, fresh, pending),
            flatten_expr(b, positive, concepts, fresh, pending),
        ),
        C::Exists(r, f) | C::Forall(r, f) => {
            let q = if matches!(e, C::Exists(..)) {
                Quantifier::Exists
            } else {
                Quantifier::Forall
            };
            if matches!(**f, C::Atomic(_)) {
                return e.clone();
            }
            let x = C::Atomic(fresh(concepts));
            let def = if positive {
                SubClassOf::new(C::Top, C::or(C::not(x.clone()), (**f).clone()))
            } else {
                SubClassOf::new(C::Top, C::or(to_nnf(&C::not((**f).clone())), x.clone()))
            };
            pending.push(def);
            C::restriction(q, r.clone(), x)
        }
    }
}

/// A building block of domino types: an atomic concept or a flat restriction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Atomic(String),
    Restriction {
        quantifier: Quantifier,
        role: RoleExpr,
        filler: String,
    },
}

impl Part {
    pub fn is_restriction(&self) -> bool {
        matches!(self, Part::Restriction { .. })
    }

    /// The part as a concept expression.
    pub fn to_concept(&self) -> ConceptExpr {
        match self {
            Part::Atomic(n) => ConceptExpr::Atomic(n.clone()),
            Part::Restriction {
                quantifier,
                role,
                filler,
            } => ConceptExpr::restriction(*quantifier, role.clone(), ConceptExpr::Atomic(filler.clone())),
        }
    }

    /// Recognizes an atomic concept or a restriction with an atomic filler.
    pub fn from_concept(e: &ConceptExpr) -> Option<Part> {
        match e {
            ConceptExpr::Atomic(n) => Some(Part::Atomic(n.clone())),
            ConceptExpr::Exists(r, f) | ConceptExpr::Forall(r, f) => match &**f {
                ConceptExpr::Atomic(n) => Some(Part::Restriction {
                    quantifier: if matches!(e, ConceptExpr::Exists(..)) {
                        Quantifier::Exists
                    } else {
                        Quantifier::Forall
                    },
                    role: r.clone(),
                    filler: n.clone(),
                }),
                _ => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_concept())
    }
}

/// Atomic concepts in declaration order, then every distinct restriction
/// subexpression of the TBox in first-occurrence order.
///
/// Expects a flattened ontology.
pub fn extract_parts(o: &Ontology) -> Vec<Part> {
    let mut parts: Vec<Part> = o.concepts.iter().cloned().map(Part::Atomic).collect();
    let mut seen: std::collections::HashSet<Part> = parts.iter().cloned().collect();
    for ax in &o.tbox {
        for side in [&ax.lhs, &ax.rhs] {
            side.walk(&mut |e| {
                if matches!(e, ConceptExpr::Exists(..) | ConceptExpr::Forall(..)) {
                    if let Some(p) = Part::from_concept(e) {
                        if seen.insert(p.clone()) {
                            parts.push(p);
                        }
                    }
                }
            });
        }
    }
    parts
}

/// NNF conversion followed by flattening.
pub fn normalize(o: &Ontology) -> Ontology {
    flatten(&nnf_ontology(o))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::parse_ontology;

    fn atom(s: &str) -> ConceptExpr {
        ConceptExpr::atomic(s)
    }

    #[test]
    fn nnf_of_negated_union_under_universal() {
        let e = ConceptExpr::forall(
            RoleExpr::inverse_of("influence"),
            ConceptExpr::not(ConceptExpr::or(atom("Pop"), atom("Classical"))),
        );
        let want = ConceptExpr::forall(
            RoleExpr::inverse_of("influence"),
            ConceptExpr::and(
                ConceptExpr::not(atom("Pop")),
                ConceptExpr::not(atom("Classical")),
            ),
        );
        assert_eq!(to_nnf(&e), want);
        assert!(want.is_nnf());
        assert_eq!(to_nnf(&ConceptExpr::not(ConceptExpr::not(atom("A")))), atom("A"));
        assert_eq!(to_nnf(&ConceptExpr::not(ConceptExpr::Top)), ConceptExpr::Bottom);
        assert_eq!(
            to_nnf(&ConceptExpr::not(ConceptExpr::exists(RoleExpr::atomic("r"), atom("A")))),
            ConceptExpr::forall(RoleExpr::atomic("r"), ConceptExpr::not(atom("A")))
        );
    }

    #[test]
    fn flatten_rewrites_compound_filler() {
        let (o, _) = parse_ontology(
            "concept Punk. concept Pop. concept Classical. role influence.\n\
             axiom Punk subclassof forall inv(influence) . (not Pop and not Classical).",
        )
        .unwrap();
        let f = flatten(&nnf_ontology(&o));
        assert_eq!(f.concepts.last().unwrap(), "_aux0");
        assert_eq!(f.tbox.len(), 2);
        assert_eq!(
            f.tbox[0].rhs,
            ConceptExpr::forall(RoleExpr::inverse_of("influence"), atom("_aux0"))
        );
        assert_eq!(f.tbox[1].lhs, ConceptExpr::Top);
        assert_eq!(
            f.tbox[1].rhs,
            ConceptExpr::or(
                ConceptExpr::not(atom("_aux0")),
                ConceptExpr::and(
                    ConceptExpr::not(atom("Pop")),
                    ConceptExpr::not(atom("Classical"))
                )
            )
        );
        assert_eq!(flatten(&f), f);
    }

    #[test]
    fn nested_fillers_are_numbered_top_down() {
        let (o, _) = parse_ontology(
            "concept A. concept B. concept C. role r. role s.\n\
             axiom A subclassof forall r . (B and exists s . (B or C)).\n\
             axiom exists r . not C subclassof B.",
        )
        .unwrap();
        let f = normalize(&o);
        assert_eq!(&f.concepts[3..], &["_aux0", "_aux1", "_aux2"]);
        // The lhs filler gets the reversed definition.
        assert_eq!(
            f.tbox[3].rhs,
            ConceptExpr::or(atom("C"), atom("_aux1"))
        );
        assert!(f.tbox.iter().all(|ax| ax.lhs.is_flat() && ax.rhs.is_flat()));
    }

    #[test]
    fn music_parts() {
        let src = "concept Artist. concept Label. role influence. role signedTo.\n\
                   axiom Artist subclassof not Label.\n\
                   axiom top subclassof forall influence . Artist.\n\
                   axiom top subclassof forall inv(influence) . Artist.\n\
                   axiom top subclassof forall signedTo . Label.\n\
                   axiom top subclassof forall inv(signedTo) . Artist.";
        let (o, _) = parse_ontology(src).unwrap();
        let parts = extract_parts(&normalize(&o));
        let names: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
        assert_eq!(
            names,
            [
                "Artist",
                "Label",
                "forall influence . Artist",
                "forall inv(influence) . Artist",
                "forall signedTo . Label",
                "forall inv(signedTo) . Artist"
            ]
        );
    }

    #[test]
    fn no_restrictions_means_atomic_parts_only() {
        let (o, _) = parse_ontology("concept A. concept B. axiom A subclassof not B.").unwrap();
        assert_eq!(
            extract_parts(&normalize(&o)),
            vec![Part::Atomic("A".into()), Part::Atomic("B".into())]
        );
    }
}
