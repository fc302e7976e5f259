//! strandlab — a symbolic security-protocol analysis workbench.
//!
//! The crate models protocol executions as *bundles*: finite acyclic graphs of
//! send/receive events grouped into strands, with a causal partial order whose
//! minimal elements drive all reasoning. On top of that core it provides a
//! Dolev-Yao intruder (both as strand classifier and as a knowledge-closure
//! engine), a "maximal" intruder defined by forbidden originations instead of
//! enumerated capabilities, bounded exhaustive attack search for agreement and
//! secrecy properties, the protected-predicate secrecy primitive, and a
//! fixpoint analysis for key-management policies (wrap/unwrap closures).

pub mod kmp;
pub mod parse;
pub mod pattern;
pub mod penetrator;
pub mod protect;
pub mod protocols;
pub mod role;
pub mod scenario;
pub mod search;
pub mod strand;
pub mod term;

pub use pattern::{instantiate, unify, Bindings, MatchMode, Pattern};
pub use penetrator::{
    analz_synth_close, classify_dy, derivable, is_maximal_penetrator_strand, no_forge_cipher,
    DYModel, DYStrandKind, KeyPredicate, Knowledge, MaximalModel,
};
pub use protect::{protected, ProtectionSpec};
pub use role::{Admission, ProtocolSpec, RoleTemplate, SideCondition};
pub use search::{check_composition, check_property, PropertyKind, PropertySpec, SearchConfig, Verdict};
pub use strand::{Bundle, BundleError, NodeRef, Strand};
pub use term::{inverse, subterm, Key, Sign, SignedTerm, Term, TextAtom};
