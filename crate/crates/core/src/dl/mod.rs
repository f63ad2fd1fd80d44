//! ALCI syntax: expressions, the ontology DSL, and the normalization steps
//! that bring a TBox into the shape the compiler expects.

mod ast;
mod normalize;
mod parser;

pub use ast::{
    Axiom, ConceptExpr, KnowledgeGraphInput, Ontology, Quantifier, RoleExpr, SubClassOf,
};
pub use normalize::{extract_parts, flatten, nnf_ontology, normalize, to_nnf, Part};
pub use parser::{is_valid_name, parse_ontology};
