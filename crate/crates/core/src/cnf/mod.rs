//! Variable layout, characteristic boolean functions and the clausal
//! encoding of the initial domino set.

mod formula;
mod varmap;

use std::io::{BufRead, Write};

pub use formula::{dimacs_lit, Cnf, PropFormula, Tseitin};
pub use varmap::{Reading, Side, VarMap};

use crate::dl::{extract_parts, ConceptExpr, Ontology, Part, Quantifier, RoleExpr};
use crate::error::{Error, Result};

/// A full assignment to the variables of a [`VarMap`].
pub type DominoVector = Vec<bool>;

/// Builds the variable map for a normalized, flattened ontology.
pub fn build_varmap(o: &Ontology, parts: Vec<Part>, split_inverses: bool) -> VarMap {
    VarMap::new(parts, &o.roles, split_inverses)
}

/// Convenience: parts and variable map in one call.
pub fn varmap_for(o: &Ontology, split_inverses: bool) -> VarMap {
    build_varmap(o, extract_parts(o), split_inverses)
}

/// Characteristic boolean function of a concept on one side of a domino.
///
/// Atomic concepts and flat restrictions map to their part variable; `⊤`/`⊥`
/// to constants; the connectives to their propositional counterparts.
pub fn cbf(x: &ConceptExpr, side: Side, vm: &VarMap) -> Result<PropFormula> {
    Ok(match x {
        ConceptExpr::Top => PropFormula::True,
        ConceptExpr::Bottom => PropFormula::False,
        ConceptExpr::Not(inner) => cbf(inner, side, vm)?.negate(),
        ConceptExpr::And(a, b) => PropFormula::and([cbf(a, side, vm)?, cbf(b, side, vm)?]),
        ConceptExpr::Or(a, b) => PropFormula::or([cbf(a, side, vm)?, cbf(b, side, vm)?]),
        ConceptExpr::Atomic(_) | ConceptExpr::Exists(..) | ConceptExpr::Forall(..) => {
            let part = Part::from_concept(x).ok_or_else(|| Error::UnknownSymbol(x.to_string()))?;
            let v = vm
                .var_of_part(&part, side)
                .ok_or_else(|| Error::UnknownSymbol(x.to_string()))?;
            PropFormula::lit(v, true)
        }
    })
}

/// Characteristic boolean function of a role.
pub fn cbf_role(r: &RoleExpr, vm: &VarMap) -> Result<PropFormula> {
    vm.role_var(r)
        .map(|v| PropFormula::lit(v, true))
        .ok_or_else(|| Error::UnknownSymbol(r.to_string()))
}

/// The initial domino constraints as formulas, grouped by origin:
/// axioms on both sides, universal propagation, existential triggering.
pub fn d0_formulas(o: &Ontology, vm: &VarMap) -> Result<Vec<PropFormula>> {
    let mut out = Vec::new();
    for ax in &o.tbox {
        for side in [Side::One, Side::Two] {
            let f = PropFormula::or([cbf(&ax.lhs, side, vm)?.negate(), cbf(&ax.rhs, side, vm)?]);
            out.push(f);
        }
    }
    for (i, part) in vm.parts().iter().enumerate() {
        let Part::Restriction {
            quantifier,
            role,
            filler,
        } = part
        else {
            continue;
        };
        let filler_part = Part::Atomic(filler.clone());
        for rd in vm.readings(role)? {
            let p = PropFormula::lit(vm.part_var(i, rd.holder), true);
            let v = PropFormula::lit(rd.role_var, true);
            let a = vm
                .var_of_part(&filler_part, rd.target)
                .ok_or_else(|| Error::UnknownSymbol(filler.clone()))?;
            let a = PropFormula::lit(a, true);
            out.push(match quantifier {
                // ∀R.A on the holder and an R-edge force A on the target.
                Quantifier::Forall => PropFormula::or([p.negate(), v.negate(), a]),
                // A on the target and an R-edge force ∃R.A on the holder.
                Quantifier::Exists => PropFormula::or([a.negate(), v.negate(), p]),
            });
        }
    }
    Ok(out)
}

/// Clausal form of the initial domino set. Tseitin auxiliaries are numbered
/// from `vm.total()` upward.
pub fn build_d0_cnf(o: &Ontology, vm: &VarMap) -> Result<Cnf> {
    let mut cnf = Cnf::new(vm.total());
    let mut ts = Tseitin::new(&mut cnf, vm.total());
    for f in d0_formulas(o, vm)? {
        ts.assert(&f);
    }
    Ok(cnf)
}

/// Writes DIMACS CNF.
pub fn write_dimacs(c: &Cnf, sink: &mut impl Write) -> std::io::Result<()> {
    writeln!(sink, "p cnf {} {}", c.num_vars, c.clauses.len())?;
    for clause in &c.clauses {
        for l in clause {
            write!(sink, "{l} ")?;
        }
        writeln!(sink, "0")?;
    }
    Ok(())
}

pub fn dimacs_string(c: &Cnf) -> String {
    let mut buf = Vec::new();
    write_dimacs(c, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("DIMACS output is ASCII")
}

/// Reads DIMACS CNF. Comment lines start with `c`; clauses may span lines.
pub fn read_dimacs(source: impl BufRead) -> Result<Cnf> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('c') || t.starts_with('%') {
            continue;
        }
        let bad = |message: String| Error::Dimacs {
            line: lineno,
            message,
        };
        if t.starts_with('p') {
            let f: Vec<&str> = t.split_whitespace().collect();
            if f.len() != 4 || f[1] != "cnf" || header.is_some() {
                return Err(bad(format!("bad header `{t}`")));
            }
            let nv = f[2].parse().map_err(|_| bad(format!("bad variable count `{}`", f[2])))?;
            let nc = f[3].parse().map_err(|_| bad(format!("bad clause count `{}`", f[3])))?;
            header = Some((nv, nc));
            continue;
        }
        let Some((nv, _)) = header else {
            return Err(bad("clause before header".into()));
        };
        for tok in t.split_whitespace() {
            let l: i64 = tok.parse().map_err(|_| bad(format!("bad literal `{tok}`")))?;
            if l == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                if l.unsigned_abs() as usize > nv {
                    return Err(bad(format!("literal {l} exceeds variable count {nv}")));
                }
                current.push(l);
            }
        }
    }
    let Some((num_vars, nc)) = header else {
        return Err(Error::Dimacs {
            line: 0,
            message: "missing header".into(),
        });
    };
    if !current.is_empty() {
        clauses.push(current);
    }
    if clauses.len() != nc {
        return Err(Error::Dimacs {
            line: 0,
            message: format!("header announces {nc} clauses, found {}", clauses.len()),
        });
    }
    Ok(Cnf { num_vars, clauses })
}
