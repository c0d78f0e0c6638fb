//! Routers, clients and message dissemination.
//!
//! A [`Network`] is a ring of routers with their routing tables. Clients
//! attach to every router responsible for some part of their reported
//! region. A message is sent by its originator to each router owning a cell
//! of the relevance area; each of those routers range-queries its clients and
//! forwards the message. A prefix client attached to several routers receives
//! the message from exactly one of them: the owner of the lowest-Z cell of
//! the overlap between its region and the relevance area. Sends per message
//! are therefore `m + k` for `m` routers and `k` recipients.
//!
//! [`LayeredNetwork`] splits the grid into coarse regions, each with its own
//! ring, under a top layer that only ever sees region prefixes.

mod events;
mod layered;
mod network;
mod router;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::RingError;
use crate::spatial_index::IndexError;
use crate::zorder::{GridPoint, Rect, ZCode, ZOrderError};
use crate::{ClientId, RouterId};

pub use events::{Event, EventKind, EventLog};
pub use layered::{LayeredNetwork, LayeredReport, TopLayerRecord};
pub use network::{relevant_routers, Attachment, FailoverReport, Network, Relocation};
pub use router::{handoff, RouterState, DEFAULT_REBUILD_FRACTION};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("client {0} is not connected")]
    UnknownClient(ClientId),
    #[error("client {0} is already connected")]
    DuplicateClient(ClientId),
    #[error("unknown router {0}")]
    UnknownRouter(RouterId),
    #[error("router {router} is not responsible for the location reported by {client}")]
    NotResponsible { client: ClientId, router: RouterId },
    #[error("regional rings do not match the coarse partition: {0}")]
    InconsistentRegions(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    ZOrder(#[from] ZOrderError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// Who generated a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Traffic management center.
    Tmc,
    Vehicle(ClientId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub msg_id: u64,
    pub relevance: Rect,
    pub payload: Vec<u8>,
    pub origin: Origin,
}

/// A vehicle as the simulator sees it. Routers only ever learn `reported`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientRecord {
    pub client_id: ClientId,
    pub reported: ZCode,
    pub true_location: GridPoint,
    pub connected_routers: Vec<RouterId>,
}

/// Outcome of disseminating one message.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeliveryReport {
    pub msg_id: u64,
    /// `m`: routers the originator contacted.
    pub routers_contacted: usize,
    /// `k`: distinct clients that received the message.
    pub clients_delivered: usize,
    pub delivered_ids: BTreeSet<ClientId>,
    /// Key comparisons across router selection and all router queries.
    pub comparisons: u64,
    /// Network sends: one per contacted router plus one per client delivery.
    pub sends: u64,
    /// Copies a client dropped because it already had the message.
    pub duplicates_suppressed: u64,
}

impl DeliveryReport {
    pub fn new(msg_id: u64) -> Self {
        Self {
            msg_id,
            ..Self::default()
        }
    }

    /// Records one physical send to `client`; returns whether it was new.
    pub(crate) fn deliver(&mut self, client: ClientId) -> bool {
        self.sends += 1;
        let fresh = self.delivered_ids.insert(client);
        if fresh {
            self.clients_delivered += 1;
        } else {
            self.duplicates_suppressed += 1;
        }
        fresh
    }

    /// Folds another partial report for the same message into this one.
    pub(crate) fn absorb(&mut self, other: DeliveryReport) {
        self.routers_contacted += other.routers_contacted;
        self.comparisons += other.comparisons;
        self.sends += other.sends;
        self.duplicates_suppressed += other.duplicates_suppressed;
        for c in other.delivered_ids {
            if !self.delivered_ids.insert(c) {
                self.duplicates_suppressed += 1;
            }
        }
        self.clients_delivered = self.delivered_ids.len();
    }
}
