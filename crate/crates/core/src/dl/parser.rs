//! Line-oriented ontology DSL.
//!
//! ```text
//! concept NAME.   role NAME.   individual NAME.
//! axiom CEXPR subclassof CEXPR.
//! axiom CEXPR equivalentto CEXPR.
//! assert NAME : CNAME.   assert NAME RX NAME.
//! CEXPR := CNAME | top | bottom | not CEXPR | CEXPR and CEXPR | CEXPR or CEXPR
//!        | forall RX . CEXPR | exists RX . CEXPR | ( CEXPR )
//! RX    := RNAME | inv(RNAME)
//! ```
//!
//! `not` binds tighter than `and`, which binds tighter than `or`. A
//! quantifier filler extends over a single unary expression, so compound
//! fillers need parentheses. `#` starts a comment.

use super::ast::{Axiom, ConceptExpr, KnowledgeGraphInput, Ontology, RoleExpr, SubClassOf};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Dot,
    LParen,
    RParen,
    Colon,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const KEYWORDS: &[&str] = &[
    "concept",
    "role",
    "axiom",
    "individual",
    "assert",
    "subclassof",
    "equivalentto",
    "subroleof",
    "not",
    "and",
    "or",
    "forall",
    "exists",
    "top",
    "bottom",
    "inv",
];

/// Whether `s` can be used as a concept, role or individual name.
pub fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '-')
        && !KEYWORDS.contains(&s)
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let simple = match c {
                '.' => Some(Tok::Dot),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                ':' => Some(Tok::Colon),
                _ => None,
            };
            if let Some(tok) = simple {
                out.push(Token {
                    tok,
                    line: line_no,
                    column,
                });
                i += 1;
                continue;
            }
            if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '-')
                {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: line_no,
                    column,
                });
                continue;
            }
            return Err(Error::Syntax {
                line: line_no,
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    onto: &'a mut Ontology,
    kg: &'a mut KnowledgeGraphInput,
    eof_line: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        match self.peek() {
            Some(t) => (t.line, t.column),
            None => (self.eof_line, 1),
        }
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = self.here();
        Err(Error::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if s == kw)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => self.syntax(format!("expected {what}")),
        }
    }

    /// A non-keyword identifier, with its position.
    fn name(&mut self, what: &str) -> Result<(String, usize, usize)> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Ident(s),
                line,
                column,
            }) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok((s, line, column))
            }
            _ => self.syntax(format!("expected {what}")),
        }
    }

    fn statement(&mut self) -> Result<()> {
        let (line, _) = self.here();
        let Some(Token {
            tok: Tok::Ident(kw),
            ..
        }) = self.next()
        else {
            self.pos -= 1;
            return self.syntax("expected a statement keyword");
        };
        match kw.as_str() {
            "concept" => {
                let (n, _, _) = self.name("a concept name")?;
                if self.onto.has_concept(&n) {
                    return Err(Error::Duplicate {
                        kind: "concept",
                        name: n,
                        line,
                    });
                }
                self.onto.concepts.push(n);
            }
            "role" => {
                let (n, _, _) = self.name("a role name")?;
                if self.onto.has_role(&n) {
                    return Err(Error::Duplicate {
                        kind: "role",
                        name: n,
                        line,
                    });
                }
                self.onto.roles.push(n);
            }
            "individual" => {
                let (n, _, _) = self.name("an individual name")?;
                if self.kg.individuals.contains(&n) {
                    return Err(Error::Duplicate {
                        kind: "individual",
                        name: n,
                        line,
                    });
                }
                self.kg.individuals.push(n);
            }
            "axiom" => self.axiom()?,
            "assert" => self.assertion()?,
            other => {
                self.pos -= 1;
                return self.syntax(format!("unknown statement `{other}`"));
            }
        }
        self.expect(Tok::Dot, "`.` ending the statement")
    }

    fn axiom(&mut self) -> Result<()> {
        // Role inclusion: `axiom R subroleof S.` or `axiom inv(R) subroleof S.`
        let kw_at = |i: usize, kw: &str| {
            matches!(self.toks.get(i), Some(Token { tok: Tok::Ident(s), .. }) if s == kw)
        };
        if kw_at(self.pos + 1, "subroleof") || (kw_at(self.pos, "inv") && kw_at(self.pos + 4, "subroleof")) {
            return Err(Error::Unsupported(
                "role inclusion axioms are outside ALCI".into(),
            ));
        }
        let lhs = self.concept()?;
        if self.at_keyword("subclassof") {
            self.pos += 1;
            let rhs = self.concept()?;
            self.onto.add_axiom(Axiom::SubClassOf(SubClassOf::new(lhs, rhs)));
        } else if self.at_keyword("equivalentto") {
            self.pos += 1;
            let rhs = self.concept()?;
            self.onto.add_axiom(Axiom::EquivalentTo(lhs, rhs));
        } else if self.at_keyword("subroleof") {
            return Err(Error::Unsupported(
                "role inclusion axioms are outside ALCI".into(),
            ));
        } else {
            return self.syntax("expected `subclassof`");
        }
        Ok(())
    }

    fn assertion(&mut self) -> Result<()> {
        let (subject, l, c) = self.name("an individual name")?;
        self.check_individual(&subject, l, c)?;
        if self.peek().map(|t| &t.tok) == Some(&Tok::Colon) {
            self.pos += 1;
            let (concept, l, c) = self.name("a concept name")?;
            if !self.onto.has_concept(&concept) {
                return Err(unknown("concept", concept, l, c));
            }
            self.kg.abox.push(Axiom::ConceptAssertion {
                concept,
                individual: subject,
            });
        } else {
            let role = self.role()?;
            let (object, l, c) = self.name("an individual name")?;
            self.check_individual(&object, l, c)?;
            self.kg.abox.push(Axiom::RoleAssertion {
                role,
                subject,
                object,
            });
        }
        Ok(())
    }

    fn check_individual(&self, name: &str, line: usize, column: usize) -> Result<()> {
        if self.kg.individuals.iter().any(|i| i == name) {
            Ok(())
        } else {
            Err(unknown("individual", name.to_string(), line, column))
        }
    }

    fn role(&mut self) -> Result<RoleExpr> {
        let inverted = if self.at_keyword("inv") {
            self.pos += 1;
            self.expect(Tok::LParen, "`(` after `inv`")?;
            true
        } else {
            false
        };
        let (name, l, c) = self.name("a role name")?;
        if !self.onto.has_role(&name) {
            return Err(unknown("role", name, l, c));
        }
        if inverted {
            self.expect(Tok::RParen, "`)` closing `inv(`")?;
        }
        Ok(RoleExpr { name, inverted })
    }

    fn concept(&mut self) -> Result<ConceptExpr> {
        let mut lhs = self.conjunction()?;
        while self.at_keyword("or") {
            self.pos += 1;
            let rhs = self.conjunction()?;
            lhs = ConceptExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<ConceptExpr> {
        let mut lhs = self.unary()?;
        while self.at_keyword("and") {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = ConceptExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ConceptExpr> {
        let Some(t) = self.peek().cloned() else {
            return self.syntax("unexpected end of input in a concept expression");
        };
        match t.tok {
            Tok::LParen => {
                self.pos += 1;
                let e = self.concept()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "top" => {
                    self.pos += 1;
                    Ok(ConceptExpr::Top)
                }
                "bottom" => {
                    self.pos += 1;
                    Ok(ConceptExpr::Bottom)
                }
                "not" => {
                    self.pos += 1;
                    Ok(ConceptExpr::not(self.unary()?))
                }
                "forall" | "exists" => {
                    self.pos += 1;
                    let role = self.role()?;
                    self.expect(Tok::Dot, "`.` after the restricted role")?;
                    let filler = self.unary()?;
                    Ok(if s == "forall" {
                        ConceptExpr::forall(role, filler)
                    } else {
                        ConceptExpr::exists(role, filler)
                    })
                }
                _ if KEYWORDS.contains(&s.as_str()) => {
                    self.syntax(format!("unexpected keyword `{s}`"))
                }
                _ => {
                    self.pos += 1;
                    if !self.onto.has_concept(&s) {
                        return Err(unknown("concept", s, t.line, t.column));
                    }
                    Ok(ConceptExpr::Atomic(s))
                }
            },
            _ => self.syntax("expected a concept expression"),
        }
    }
}

fn unknown(kind: &'static str, name: String, line: usize, column: usize) -> Error {
    Error::UnknownName {
        kind,
        name,
        line,
        column,
    }
}

/// Parses DSL text into an ontology and the ABox it mentions.
///
/// Names must be declared before use.
pub fn parse_ontology(text: &str) -> Result<(Ontology, KnowledgeGraphInput)> {
    let toks = tokenize(text)?;
    let mut onto = Ontology::new();
    let mut kg = KnowledgeGraphInput::default();
    let mut p = Parser {
        toks,
        pos: 0,
        onto: &mut onto,
        kg: &mut kg,
        eof_line: text.lines().count().max(1),
    };
    while p.peek().is_some() {
        p.statement()?;
    }
    Ok((onto, kg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_line_with_several_statements() {
        let (o, kg) =
            parse_ontology("concept Artist. concept Label. axiom Artist subclassof not Label.")
                .unwrap();
        assert_eq!(o.concepts, vec!["Artist", "Label"]);
        assert!(o.roles.is_empty());
        assert_eq!(o.tbox.len(), 1);
        assert_eq!(
            o.tbox[0].rhs,
            ConceptExpr::not(ConceptExpr::atomic("Label"))
        );
        assert!(kg.individuals.is_empty());
    }

    #[test]
    fn empty_input() {
        let (o, kg) = parse_ontology("").unwrap();
        assert_eq!(o, Ontology::new());
        assert_eq!(kg, KnowledgeGraphInput::default());
    }

    #[test]
    fn precedence_and_quantifier_scope() {
        let src = "concept A. concept B. concept C. role r.\n\
                   axiom A or B and not C subclassof forall inv(r) . A and B.";
        let (o, _) = parse_ontology(src).unwrap();
        let a = || ConceptExpr::atomic("A");
        let b = || ConceptExpr::atomic("B");
        let c = || ConceptExpr::atomic("C");
        assert_eq!(
            o.tbox[0].lhs,
            ConceptExpr::or(a(), ConceptExpr::and(b(), ConceptExpr::not(c())))
        );
        assert_eq!(
            o.tbox[0].rhs,
            ConceptExpr::and(ConceptExpr::forall(RoleExpr::inverse_of("r"), a()), b())
        );
    }

    #[test]
    fn reports_positions() {
        let err = parse_ontology("concept A.\naxiom A subclassof B.").unwrap_err();
        match err {
            Error::UnknownName {
                kind, line, column, ..
            } => {
                assert_eq!(kind, "concept");
                assert_eq!((line, column), (2, 20));
            }
            e => panic!("unexpected {e:?}"),
        }
        let err = parse_ontology("concept A.\n  concept $.").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, column: 11, .. }));
        let err = parse_ontology("concept A").unwrap_err();
        assert!(matches!(err, Error::Syntax { .. }));
    }

    #[test]
    fn duplicates_and_role_inclusions_are_rejected() {
        assert!(matches!(
            parse_ontology("concept A.\nconcept A."),
            Err(Error::Duplicate { line: 2, .. })
        ));
        assert!(matches!(
            parse_ontology("role r. role s. axiom r subroleof s."),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            parse_ontology("role r. role s. axiom inv(r) subroleof s."),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn assertions_and_equivalence() {
        let src = "# music\nconcept Artist. concept Band. role plays.\n\
                   axiom Band equivalentto exists plays . Artist.\n\
                   individual a. individual b.\n\
                   assert a : Artist. assert b inv(plays) a.";
        let (o, kg) = parse_ontology(src).unwrap();
        assert_eq!(o.tbox.len(), 2);
        assert_eq!(o.tbox[0].lhs, o.tbox[1].rhs);
        assert_eq!(kg.abox.len(), 2);
        assert!(matches!(
            parse_ontology("concept A. individual a. assert b : A."),
            Err(Error::UnknownName { kind: "individual", .. })
        ));
    }
}
