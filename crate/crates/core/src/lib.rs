//! Privacy-aware geographic message dissemination for connected vehicles.
//!
//! Locations are Z-order codes ([`zorder`]). Vehicles attach to routers by
//! location on a consistent-hashing style ring ([`assignment`]); a message
//! with a rectangular relevance area is routed to the routers owning that
//! area, which run range queries over their clients ([`spatial_index`],
//! [`routing`]). Vehicles may report only a prefix of their code, with
//! router-announced prefix lengths guaranteeing k-anonymity ([`privacy`]).
//! [`sim`] drives whole scenarios and compares against a single server and a
//! random-assignment router pool.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod assignment;
pub mod privacy;
pub mod routing;
pub mod sim;
pub mod spatial_index;
pub mod zorder;

pub use assignment::{EmpiricalSnapshot, Ring, RouterRecord};
pub use privacy::{GranularityPolicy, PrefixAnnouncement, PrefixTrie, TripPhase};
pub use routing::{DeliveryReport, EventLog, LayeredNetwork, Message, Network, Origin, RouterState};
pub use spatial_index::{IntervalIndex, RangeTree};
pub use zorder::{GridPoint, Rect, ZCode, ZInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RouterId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub u32);

impl fmt::Display for RouterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}
