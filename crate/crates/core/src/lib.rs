//! Process discovery over partially ordered event logs.
//!
//! Logs are multisets of labeled partial orders. Candidate places are
//! enumerated in a pruned tree and each one is replayed on every log
//! variant with compact tokenflows: a closed form for overfed places, then
//! cheap forward/backward passes, then max-flow when neither pass decides.

pub mod discovery;
pub mod export;
pub mod log_io;
pub mod maxflow;
pub mod model;
pub mod oracle;
pub mod tokenflow;

pub use discovery::{
    candidate_children, candidate_space_size, discover, transition_order, CandidateChildren,
    DiscoveryConfig, DiscoveryError, OrderMode, TraversalStats,
};
pub use export::{
    dedupe_places, export_net, parse_pnml, replay_statistics, AlphabetMismatchError, NetFormat,
    PlaceReport, PnmlError, ReplayReport,
};
pub use log_io::{
    canonical_form, extend_log, extend_with_endpoints, fold_variants, parse_lpo_json,
    parse_sequential_csv, write_lpo_json, Case, CsvColumns, Event, LogError, SequentialLog,
    Timestamp,
};
pub use model::{
    normalize_order, validate_lpo, Activity, ActivityError, CandidatePlace, EventLog, ExtendedLog,
    ExtendedLpo, Lpo, LpoViolation, OrderError, PlaceError, Transition, Variant, WorkflowNet,
};
pub use oracle::{
    alpha_concurrency, alpha_partialize, bucket_case, directly_follows, granularity_partialize,
    is_linear_extension, partialize_case, ConcurrencyRelation,
};
pub use tokenflow::{
    aggregate_verdicts, backward_pass, classify_lpo, final_marking, forward_pass, maxflow_classify,
    DecidedBy, FlowAssignment, LogVerdict, PlaceVerdict,
};
