//! Deterministic scenario runner.
//!
//! A run advances in epochs. At each epoch boundary vehicles move, scheduled
//! router failures apply, a fresh prefix announcement is built and vehicles
//! report their locations; then the epoch's messages are disseminated by
//! every enabled model on the same trace. Everything random is drawn from
//! seeded ChaCha streams, so a config and seed fix the event log byte for
//! byte.

mod baselines;
mod config;
mod metrics;
mod mobility;
mod runner;
mod verify;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::RingError;
use crate::privacy::PrivacyError;
use crate::routing::RoutingError;
use crate::zorder::ZOrderError;

pub use baselines::{baseline_random_assignment, baseline_single_server, RandomAssignment, SingleServer};
pub use config::{FailureSpec, Placement, PolicyConfig, RelevanceConfig, ScenarioConfig};
pub use metrics::{compare_models, delivered_digest, ComparisonSummary, DisseminationRow, EpochRow, MetricsLedger, ModelSummary};
pub use mobility::{random_point, MobilityModel, Vehicle};
pub use runner::{build_distributed_ring, build_layered_network, run, Simulation};
pub use verify::{reduced, verify, Check};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid config at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("cannot fail router {0}: no such router or it is the last one")]
    Failure(u32),
    #[error("cannot compare ledgers: {0}")]
    Compare(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("csv error: {0}")]
    Csv(String),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Privacy(#[from] PrivacyError),
    #[error(transparent)]
    ZOrder(#[from] ZOrderError),
}

/// The dissemination models a run can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Location-based assignment on the ring (optionally layered).
    Distributed,
    SingleServer,
    RandomAssignment,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Distributed => "distributed",
            Model::SingleServer => "single_server",
            Model::RandomAssignment => "random_assignment",
        })
    }
}
