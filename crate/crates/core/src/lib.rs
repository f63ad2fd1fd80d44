//! Compile ALCI ontologies into smooth, decomposable and deterministic
//! circuits, then use them to check, sample and learn under the ontology.
//!
//! The pipeline runs parse → normalize → parts → domino CNF → SDD →
//! fixpoint refinement, producing a circuit whose models are exactly the
//! consistent dominoes (pairs of individual types plus the roles between
//! them). [`infer`] queries that circuit, [`datagen`] samples synthetic
//! ontologies and knowledge graphs from it, and [`nesy`] trains classifiers
//! whose predictions stay consistent with it.

pub mod cnf;
pub mod datagen;
pub mod dl;
pub mod error;
pub mod fixtures;
pub mod infer;
pub mod nesy;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod pipeline;
pub mod sdd;

pub use error::{Error, Result};
