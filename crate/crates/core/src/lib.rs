//! Pattern-driven evolution of configurable process models: a typed model
//! with variation points, a well-formedness validator, the evolution pattern
//! catalog and its transformations, configuration and derivation, and a
//! replayable evolution trace.

pub mod applicability;
pub mod catalog;
pub mod cli;
pub mod config;
pub mod constraints;
pub mod dot;
pub mod edit;
pub mod evolution;
pub mod io;
pub mod model;
pub mod trace;
pub mod validate;

pub use applicability::{applicable_patterns, ApplicabilityVerdict};
pub use catalog::{list_patterns, pattern_relations, PatternDescriptor, PatternId};
pub use config::{check_selection, derive_variant, enumerate_configurations, Configuration};
pub use constraints::{check_evolution_constraints, check_vcc_consistency, variant_dependents};
pub use dot::export_dot;
pub use edit::{apply_edits, model_diff, Edit};
pub use evolution::{apply_pattern, ApplyResult, EvolutionError};
pub use io::{canonical_hash, load_model, save_model};
pub use model::ProcessModel;
pub use trace::{record, replay, undo, Trace, TraceEntry};
pub use validate::{validate_model, ValidationReport};
