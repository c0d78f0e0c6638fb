use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::privacy::PrefixAnnouncement;
use crate::routing::RoutingError;
use crate::spatial_index::{IntervalIndex, RangeTree};
use crate::zorder::{decode, Rect, ZCode, ZInterval};
use crate::{ClientId, RouterId};

/// Default share of changed clients that triggers an index rebuild.
pub const DEFAULT_REBUILD_FRACTION: f64 = 0.1;

#[derive(Debug, Clone)]
struct Snapshot {
    points: RangeTree<ClientId>,
    prefixes: IntervalIndex<ClientId>,
}

/// One router's routing table.
///
/// Full-precision clients live in a range tree, prefix clients in an interval
/// index. Both are static snapshots; clients changed since the last build
/// are tracked in `dirty`, skipped in snapshot results and scanned linearly
/// until the next rebuild.
#[derive(Debug, Clone)]
pub struct RouterState {
    router_id: RouterId,
    bits_per_axis: u8,
    responsibility: Vec<ZInterval>,
    announcement: Option<Arc<PrefixAnnouncement>>,
    clients: BTreeMap<ClientId, ZCode>,
    snapshot: Snapshot,
    dirty: BTreeSet<ClientId>,
    rebuild_fraction: f64,
}

impl RouterState {
    pub fn new(router_id: RouterId, bits_per_axis: u8, responsibility: Vec<ZInterval>) -> Self {
        Self {
            router_id,
            bits_per_axis,
            responsibility,
            announcement: None,
            clients: BTreeMap::new(),
            snapshot: Snapshot {
                points: RangeTree::build(Vec::new()).expect("empty"),
                prefixes: IntervalIndex::build(Vec::new()).expect("empty"),
            },
            dirty: BTreeSet::new(),
            rebuild_fraction: DEFAULT_REBUILD_FRACTION,
        }
    }

    pub fn with_rebuild_fraction(mut self, fraction: f64) -> Self {
        self.rebuild_fraction = fraction;
        self
    }

    pub fn router_id(&self) -> RouterId {
        self.router_id
    }

    pub fn responsibility(&self) -> &[ZInterval] {
        &self.responsibility
    }

    pub fn set_responsibility(&mut self, intervals: Vec<ZInterval>) {
        self.responsibility = intervals;
    }

    pub fn announcement(&self) -> Option<&PrefixAnnouncement> {
        self.announcement.as_deref()
    }

    pub fn set_announcement(&mut self, ann: Option<Arc<PrefixAnnouncement>>) {
        self.announcement = ann;
    }

    pub fn len(&self) -> usize {
        self.clients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clients.is_empty()
    }

    pub fn contains(&self, client: ClientId) -> bool {
        self.clients.contains_key(&client)
    }

    pub fn reported(&self, client: ClientId) -> Option<ZCode> {
        self.clients.get(&client).copied()
    }

    /// Connected clients with their reported codes, ascending by id.
    pub fn clients(&self) -> impl Iterator<Item = (ClientId, ZCode)> + '_ {
        self.clients.iter().map(|(c, z)| (*c, *z))
    }

    /// `(full-precision, prefix)` client counts.
    pub fn index_sizes(&self) -> (usize, usize) {
        let full = self.clients.values().filter(|z| z.is_full()).count();
        (full, self.clients.len() - full)
    }

    pub fn is_responsible_for(&self, reported: &ZCode) -> bool {
        let iv = reported.interval();
        self.responsibility.iter().any(|r| r.intersects(&iv))
    }

    /// Indexes the client under its reported code, replacing an earlier entry.
    /// Returns whether anything changed.
    pub fn subscribe(&mut self, client: ClientId, reported: ZCode) -> Result<bool, RoutingError> {
        if !self.is_responsible_for(&reported) {
            return Err(RoutingError::NotResponsible {
                client,
                router: self.router_id,
            });
        }
        if self.clients.insert(client, reported) == Some(reported) {
            return Ok(false);
        }
        self.dirty.insert(client);
        Ok(true)
    }

    pub fn unsubscribe(&mut self, client: ClientId) -> Result<ZCode, RoutingError> {
        let z = self
            .clients
            .remove(&client)
            .ok_or(RoutingError::UnknownClient(client))?;
        self.dirty.insert(client);
        Ok(z)
    }

    /// Rebuilds the snapshot when enough clients changed since the last one.
    pub fn maybe_rebuild(&mut self) -> bool {
        let threshold = (self.rebuild_fraction * self.clients.len().max(1) as f64).ceil() as usize;
        if self.dirty.len() >= threshold.max(1) {
            self.rebuild();
            true
        } else {
            false
        }
    }

    pub fn rebuild(&mut self) {
        let mut points = Vec::new();
        let mut prefixes = Vec::new();
        for (&c, z) in &self.clients {
            if z.is_full() {
                points.push((c, decode(z).expect("full precision")));
            } else {
                prefixes.push((c, z.interval()));
            }
        }
        self.snapshot = Snapshot {
            points: RangeTree::build(points).expect("client ids are map keys"),
            prefixes: IntervalIndex::build(prefixes).expect("client ids are map keys"),
        };
        self.dirty.clear();
    }

    /// Clients whose reported region intersects `area`, ascending by id.
    ///
    /// `intervals` must be a sorted, disjoint Z-interval cover of `area` (for
    /// example [`crate::zorder::decompose_rect`]); prefix matches are checked
    /// against `area` exactly, so a covering superset is fine.
    pub fn query(&self, area: &Rect, intervals: &[ZInterval], comparisons: &mut u64) -> Result<Vec<(ClientId, ZCode)>, RoutingError> {
        let mut hits = Vec::new();
        let mut ids = Vec::new();
        self.snapshot.points.query_into(area, comparisons, &mut ids);
        for c in ids {
            if !self.dirty.contains(&c) {
                hits.push((c, self.clients[&c]));
            }
        }
        for c in self.snapshot.prefixes.query_intervals(intervals, comparisons)? {
            if self.dirty.contains(&c) {
                continue;
            }
            let z = self.clients[&c];
            *comparisons += 1;
            if z.region().intersects(area) {
                hits.push((c, z));
            }
        }
        for c in &self.dirty {
            if let Some(z) = self.clients.get(c) {
                *comparisons += 1;
                if z.region().intersects(area) {
                    hits.push((*c, *z));
                }
            }
        }
        hits.sort_unstable_by_key(|(c, _)| *c);
        Ok(hits)
    }

    pub fn bits_per_axis(&self) -> u8 {
        self.bits_per_axis
    }
}

/// Moves a client from `old` to `new` with one disconnect and one connect.
///
/// Returns the number of network messages spent. `new` is checked before
/// `old` is touched, so a failed handoff leaves both routers unchanged.
pub fn handoff(old: &mut RouterState, new: &mut RouterState, client: ClientId, new_reported: ZCode) -> Result<u32, RoutingError> {
    if !old.contains(client) {
        return Err(RoutingError::UnknownClient(client));
    }
    if !new.is_responsible_for(&new_reported) {
        return Err(RoutingError::NotResponsible {
            client,
            router: new.router_id,
        });
    }
    old.unsubscribe(client)?;
    new.subscribe(client, new_reported)?;
    Ok(2)
}
