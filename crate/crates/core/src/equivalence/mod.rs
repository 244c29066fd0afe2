//! Normative equivalence: observable systems compared up to bisimulation.

pub mod bisim;
pub mod obs_lts;
pub mod observe;
pub mod rename;

pub use bisim::{bisimilar, Divergence, EquivError, EquivalenceVerdict, Side, Verdict, Witness};
pub use obs_lts::{
    env_signature, observable_lts, ready_set, EnvSignature, ObsLts, ObsOptions, ObsState, ObsTransition,
    ReadyEntry, StateKind,
};
pub use observe::{batch_trace, garbage_collect_events, AgreementObs, ObsLabel, Observation};
pub use rename::Renaming;
