//! The variable space of domino assignments.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;

use crate::dl::{Part, RoleExpr};
use crate::error::{Error, Result};

/// Position of a type inside a domino.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::One => 1,
            Side::Two => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Side> {
        match i {
            1 => Some(Side::One),
            2 => Some(Side::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// How a restriction part constrains a domino: the type holding the
/// restriction sits on `holder`, its candidate successor on `target`, and
/// the edge between them is the variable `role_var`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reading {
    pub holder: Side,
    pub target: Side,
    pub role_var: usize,
}

/// Dense variable indices laid out as `[parts side 1][roles][parts side 2]`.
///
/// In the default mode a role and its inverse share one variable: bit `r`
/// set on domino `(d1, d2)` means `d1 r d2`. With `split_inverses` every role
/// gets a second variable for its inverse, so that bit `inv(r)` means `d2 r d1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarMap {
    parts: Vec<Part>,
    role_keys: Vec<RoleExpr>,
    split_inverses: bool,
    part_index: HashMap<Part, usize>,
}

impl VarMap {
    pub fn new(parts: Vec<Part>, roles: &[String], split_inverses: bool) -> Self {
        let mut role_keys = Vec::new();
        for r in roles {
            role_keys.push(RoleExpr::atomic(r.clone()));
            if split_inverses {
                role_keys.push(RoleExpr::inverse_of(r.clone()));
            }
        }
        let part_index = parts.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        VarMap {
            parts,
            role_keys,
            split_inverses,
            part_index,
        }
    }

    pub fn total(&self) -> usize {
        2 * self.parts.len() + self.role_keys.len()
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn role_keys(&self) -> &[RoleExpr] {
        &self.role_keys
    }

    pub fn split_inverses(&self) -> bool {
        self.split_inverses
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn num_roles(&self) -> usize {
        self.role_keys.len()
    }

    pub fn part_index(&self, p: &Part) -> Option<usize> {
        self.part_index.get(p).copied()
    }

    pub fn part_var(&self, part: usize, side: Side) -> usize {
        match side {
            Side::One => part,
            Side::Two => self.parts.len() + self.role_keys.len() + part,
        }
    }

    pub fn var_of_part(&self, p: &Part, side: Side) -> Option<usize> {
        self.part_index(p).map(|i| self.part_var(i, side))
    }

    /// Variable for a role expression. In the default mode `inv(r)` resolves
    /// to the variable of `r`.
    pub fn role_var(&self, r: &RoleExpr) -> Option<usize> {
        let key = if self.split_inverses {
            r.clone()
        } else {
            RoleExpr::atomic(r.name.clone())
        };
        self.role_keys
            .iter()
            .position(|k| *k == key)
            .map(|i| self.parts.len() + i)
    }

    pub fn side_vars(&self, side: Side) -> Range<usize> {
        let start = self.part_var(0, side);
        start..start + self.parts.len()
    }

    pub fn role_var_range(&self) -> Range<usize> {
        self.parts.len()..self.parts.len() + self.role_keys.len()
    }

    /// Maps a side-`from` part variable to the same part on the other side.
    /// Role variables map to themselves.
    pub fn swap_sides(&self, v: usize) -> usize {
        let p = self.parts.len();
        let k = self.role_keys.len();
        if v < p {
            v + p + k
        } else if v >= p + k {
            v - p - k
        } else {
            v
        }
    }

    /// Edge readings of a restriction part with role `role`.
    pub fn readings(&self, role: &RoleExpr) -> Result<Vec<Reading>> {
        let missing = || Error::UnknownSymbol(role.to_string());
        if self.split_inverses {
            Ok(vec![
                Reading {
                    holder: Side::One,
                    target: Side::Two,
                    role_var: self.role_var(role).ok_or_else(missing)?,
                },
                Reading {
                    holder: Side::Two,
                    target: Side::One,
                    role_var: self.role_var(&role.inverse()).ok_or_else(missing)?,
                },
            ])
        } else {
            let holder = if role.inverted { Side::Two } else { Side::One };
            Ok(vec![Reading {
                holder,
                target: holder.other(),
                role_var: self.role_var(role).ok_or_else(missing)?,
            }])
        }
    }

    /// What a variable stands for: `(kind, name, side)`.
    pub fn describe(&self, v: usize) -> (&'static str, String, Option<Side>) {
        let p = self.parts.len();
        let k = self.role_keys.len();
        let part_desc = |i: usize, side| {
            let part = &self.parts[i];
            let kind = if part.is_restriction() {
                "restriction"
            } else {
                "concept"
            };
            (kind, part.to_string(), Some(side))
        };
        if v < p {
            part_desc(v, Side::One)
        } else if v < p + k {
            ("role", self.role_keys[v - p].to_string(), None)
        } else {
            part_desc(v - p - k, Side::Two)
        }
    }

    /// Short column name used in assignment files, e.g. `Artist@1`, `influence`.
    pub fn column_name(&self, v: usize) -> String {
        match self.describe(v) {
            (_, name, Some(side)) => format!("{}@{side}", name.replace(' ', "")),
            (_, name, None) => name,
        }
    }

    /// Sidecar listing `index<TAB>kind<TAB>name<TAB>side` per variable.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for v in 0..self.total() {
            let (kind, name, side) = self.describe(v);
            let side = side.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
            out.push_str(&format!("{v}\t{kind}\t{name}\t{side}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::Quantifier;

    fn sample() -> VarMap {
        let parts = vec![
            Part::Atomic("A".into()),
            Part::Restriction {
                quantifier: Quantifier::Forall,
                role: RoleExpr::inverse_of("r"),
                filler: "A".into(),
            },
        ];
        VarMap::new(parts, &["r".into(), "s".into()], false)
    }

    #[test]
    fn layout() {
        let vm = sample();
        assert_eq!(vm.total(), 6);
        assert_eq!(vm.part_var(1, Side::One), 1);
        assert_eq!(vm.role_var(&RoleExpr::atomic("s")), Some(3));
        assert_eq!(vm.role_var(&RoleExpr::inverse_of("r")), Some(2));
        assert_eq!(vm.part_var(0, Side::Two), 4);
        assert_eq!(vm.swap_sides(1), 5);
        assert_eq!(vm.swap_sides(5), 1);
        assert_eq!(vm.swap_sides(3), 3);
        let r = vm.readings(&RoleExpr::inverse_of("r")).unwrap();
        assert_eq!(r[0].holder, Side::Two);
    }

    #[test]
    fn split_layout() {
        let vm = VarMap::new(sample().parts, &["r".into(), "s".into()], true);
        assert_eq!(vm.total(), 8);
        assert_eq!(vm.role_var(&RoleExpr::inverse_of("r")), Some(3));
        assert_eq!(vm.readings(&RoleExpr::atomic("s")).unwrap()[1].role_var, 5);
    }

    #[test]
    fn sidecar() {
        let tsv = sample().to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[1], "1\trestriction\tforall inv(r) . A\t1");
        assert_eq!(lines[2], "2\trole\tr\t-");
        assert_eq!(sample().column_name(1), "forallinv(r).A@1");
    }
}
