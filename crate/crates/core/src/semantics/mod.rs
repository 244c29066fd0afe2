//! Operational semantics: configurations, steps, scenarios and exploration.

pub mod config;
pub mod contract;
pub mod env;
pub mod eval;
pub mod explore;
pub mod label;
pub mod reduce;
pub mod scenario;
pub mod step;

pub use config::{Bindings, Configuration, Holder, PendingEvent, Phase};
pub use contract::{Contract, Site, StateId};
pub use env::{Domains, EnvError, Environment};
pub use eval::EvalError;
pub use explore::{explore, random_walk, successors, Edge, ExploreOptions, Lts, Node, NodeId, Walk, ROOT};
pub use label::{Action, CallAction, ClauseTerms, Enabled, Label, TauCause, Terms};
pub use scenario::{run_scenario, Scenario, ScenarioEntry, ScenarioError, Trace, TraceEntry};
pub use step::{StepError, StepResult, StuckReason};
