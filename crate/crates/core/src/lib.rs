//! Black-box Bell scenarios: behaviors, local deterministic strategies,
//! local-polytope membership by linear programming, Bell functionals and
//! behaviors generated by bipartite quantum systems.

pub mod analysis;
pub mod error;
pub mod exact;
pub mod facets;
pub mod format;
pub mod functional;
pub mod local;
pub mod lp;
pub mod quantum;
pub mod scenario;
pub mod symmetry;

pub use error::{Error, ErrorClass, Result};
pub use facets::{enumerate_facets, FacetCaps};
pub use functional::{chsh_functional, BellFunctional, Provenance};
pub use local::{
    enumerate_strategies, local_bound, DeterministicStrategy, LocalModel, DEFAULT_STRATEGY_CAP,
};
pub use scenario::{
    mix, named_behavior, no_signalling_defect, validate_behavior, Behavior, NoSignallingReport,
    Scenario, DEFAULT_TOL,
};
pub use analysis::{
    chsh_value, classify, derive_critical_inequality, efficiency_threshold, membership,
    visibility_threshold, Classification, Membership, NonlocalWitness, ThresholdResult, Verdict,
};
pub use format::{emit_document, parse_document, read_document, Document};
pub use quantum::{behavior_from_setup, lift_with_efficiency, named_setup, random_setup, BellSetup};
