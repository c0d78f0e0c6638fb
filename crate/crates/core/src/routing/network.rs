use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::assignment::{Ring, RingError};
use crate::privacy::PrefixAnnouncement;
use crate::routing::{handoff, DeliveryReport, EventKind, EventLog, Message, RouterState, RoutingError, DEFAULT_REBUILD_FRACTION};
use crate::spatial_index::RangeTree;
use crate::zorder::{decompose_rect_exact, encode, Rect, ZCode, ZInterval};
use crate::{ClientId, RouterId};

/// Where a client is attached: its reported code and routers in ring order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attachment {
    pub reported: ZCode,
    pub routers: Vec<RouterId>,
}

/// Cost of one location update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Relocation {
    pub disconnects: u32,
    pub connects: u32,
    /// Routers kept whose entry changed (a finer or coarser code).
    pub updates: u32,
}

impl Relocation {
    /// Messages caused by router membership changes.
    pub fn handoff_messages(&self) -> u32 {
        self.disconnects + self.connects
    }

    pub fn membership_changed(&self) -> bool {
        self.handoff_messages() > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailoverReport {
    pub failed: RouterId,
    /// Clients that were attached to the failed router, ascending.
    pub former_clients: Vec<ClientId>,
    /// Re-subscription messages sent by former clients.
    pub messages: u64,
}

/// Routers whose responsibility intersects `r`.
///
/// Virtual locations inside `r` are found with a range query; the owner of
/// each Z-interval's lower end covers the cells before the first location
/// in that interval. Together they own every cell of `r`.
pub fn relevant_routers(ring: &Ring, location_tree: &RangeTree<u32>, r: &Rect, comparisons: &mut u64) -> Result<Vec<RouterId>, RoutingError> {
    if ring.is_empty() {
        return Err(RingError::EmptyRing.into());
    }
    let intervals = decompose_rect_exact(r, ring.bits_per_axis())?;
    Ok(relevant_for(ring, location_tree, r, &intervals, comparisons))
}

fn relevant_for(ring: &Ring, location_tree: &RangeTree<u32>, r: &Rect, intervals: &[ZInterval], comparisons: &mut u64) -> Vec<RouterId> {
    let slots = ring.slots();
    let mut out = BTreeSet::new();
    for i in location_tree.query_rect(r, comparisons) {
        out.insert(slots[i as usize].1);
    }
    // Binary search over the slots per interval.
    let search = u64::from(usize::BITS - slots.len().leading_zeros());
    for iv in intervals {
        *comparisons += search;
        out.insert(ring.owner_of_value(iv.lo().value()));
    }
    out.into_iter().collect()
}

/// A single ring of routers with their tables and attached clients.
#[derive(Debug, Clone)]
pub struct Network {
    ring: Ring,
    location_tree: RangeTree<u32>,
    routers: BTreeMap<RouterId, RouterState>,
    attachments: BTreeMap<ClientId, Attachment>,
    scope: Rect,
    rebuild_fraction: f64,
}

impl Network {
    pub fn new(ring: Ring) -> Result<Self, RoutingError> {
        Self::with_rebuild_fraction(ring, DEFAULT_REBUILD_FRACTION)
    }

    pub fn with_rebuild_fraction(ring: Ring, rebuild_fraction: f64) -> Result<Self, RoutingError> {
        let scope = Rect::full(ring.bits_per_axis())?;
        Self::scoped(ring, scope, rebuild_fraction)
    }

    /// A network that only serves the cells of `scope`.
    pub(crate) fn scoped(ring: Ring, scope: Rect, rebuild_fraction: f64) -> Result<Self, RoutingError> {
        if ring.is_empty() {
            return Err(RingError::EmptyRing.into());
        }
        let bits = ring.bits_per_axis();
        let mut routers = BTreeMap::new();
        for id in ring.router_ids() {
            let state = RouterState::new(id, bits, ring.responsibility(id)?).with_rebuild_fraction(rebuild_fraction);
            routers.insert(id, state);
        }
        Ok(Self {
            location_tree: ring.location_tree(),
            ring,
            routers,
            attachments: BTreeMap::new(),
            scope,
            rebuild_fraction,
        })
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn bits_per_axis(&self) -> u8 {
        self.ring.bits_per_axis()
    }

    pub fn scope(&self) -> Rect {
        self.scope
    }

    pub fn router(&self, id: RouterId) -> Option<&RouterState> {
        self.routers.get(&id)
    }

    pub fn routers(&self) -> impl Iterator<Item = &RouterState> {
        self.routers.values()
    }

    pub fn attachment(&self, client: ClientId) -> Option<&Attachment> {
        self.attachments.get(&client)
    }

    pub fn attachments(&self) -> impl Iterator<Item = (ClientId, &Attachment)> {
        self.attachments.iter().map(|(c, a)| (*c, a))
    }

    pub fn client_count(&self) -> usize {
        self.attachments.len()
    }

    /// Clients per router, zero entries included.
    pub fn router_loads(&self) -> BTreeMap<RouterId, usize> {
        self.routers.iter().map(|(id, s)| (*id, s.len())).collect()
    }

    fn state_mut(&mut self, id: RouterId) -> Result<&mut RouterState, RoutingError> {
        self.routers.get_mut(&id).ok_or(RoutingError::UnknownRouter(id))
    }

    /// Connects a new client to every router covering its reported region.
    /// Returns the number of connection messages.
    pub fn subscribe_client(&mut self, client: ClientId, reported: ZCode, log: &mut EventLog) -> Result<u32, RoutingError> {
        if self.attachments.contains_key(&client) {
            return Err(RoutingError::DuplicateClient(client));
        }
        let routers = self.ring.assign_prefix(&reported)?;
        for &r in &routers {
            self.state_mut(r)?.subscribe(client, reported)?;
            log.push(EventKind::Subscribe { client, router: r, code: reported });
        }
        let n = routers.len() as u32;
        self.attachments.insert(client, Attachment { reported, routers });
        Ok(n)
    }

    /// Disconnects a client from all its routers. Returns the message count.
    pub fn unsubscribe_client(&mut self, client: ClientId, log: &mut EventLog) -> Result<u32, RoutingError> {
        let att = self.attachments.remove(&client).ok_or(RoutingError::UnknownClient(client))?;
        for &r in &att.routers {
            self.state_mut(r)?.unsubscribe(client)?;
            log.push(EventKind::Unsubscribe { client, router: r });
        }
        Ok(att.routers.len() as u32)
    }

    /// Reports a new location for an attached client.
    ///
    /// Routers the client leaves get a disconnect, routers it joins a connect,
    /// and routers it keeps an update if the code changed. A change of
    /// membership is logged as one `HANDOFF`.
    pub fn relocate(&mut self, client: ClientId, reported: ZCode, log: &mut EventLog) -> Result<Relocation, RoutingError> {
        let old = self.attachments.get(&client).ok_or(RoutingError::UnknownClient(client))?.clone();
        let routers = self.ring.assign_prefix(&reported)?;
        let mut cost = Relocation::default();

        if let ([from], [to]) = (old.routers.as_slice(), routers.as_slice()) {
            if from != to {
                let mut old_state = self.routers.remove(from).ok_or(RoutingError::UnknownRouter(*from))?;
                let result = handoff(&mut old_state, self.routers.get_mut(to).ok_or(RoutingError::UnknownRouter(*to))?, client, reported);
                self.routers.insert(*from, old_state);
                result?;
                cost.disconnects = 1;
                cost.connects = 1;
            }
        }
        if !cost.membership_changed() {
            let kept: BTreeSet<_> = routers.iter().copied().collect();
            let had: BTreeSet<_> = old.routers.iter().copied().collect();
            for &r in &routers {
                if self.state_mut(r)?.subscribe(client, reported)? {
                    if had.contains(&r) {
                        cost.updates += 1;
                    } else {
                        cost.connects += 1;
                    }
                }
            }
            for &r in old.routers.iter().filter(|r| !kept.contains(r)) {
                self.state_mut(r)?.unsubscribe(client)?;
                cost.disconnects += 1;
            }
        }
        if cost.membership_changed() {
            let had: BTreeSet<_> = old.routers.iter().copied().collect();
            let kept: BTreeSet<_> = routers.iter().copied().collect();
            log.push(EventKind::Handoff {
                client,
                from: had.difference(&kept).copied().collect(),
                to: kept.difference(&had).copied().collect(),
                code: reported,
                messages: cost.handoff_messages(),
            });
        }
        self.attachments.insert(client, Attachment { reported, routers });
        Ok(cost)
    }

    /// Sends `msg` to every client whose reported region meets the relevance
    /// area (clipped to this network's scope).
    pub fn disseminate(&self, msg: &Message, log: &mut EventLog) -> Result<DeliveryReport, RoutingError> {
        let bits = self.bits_per_axis();
        msg.relevance.validate(bits)?;
        let mut report = DeliveryReport::new(msg.msg_id);
        let Some(area) = msg.relevance.intersection(&self.scope) else {
            return Ok(report);
        };
        let intervals = decompose_rect_exact(&area, bits)?;
        let relevant = relevant_for(&self.ring, &self.location_tree, &area, &intervals, &mut report.comparisons);
        log.push(EventKind::Disseminate {
            msg: msg.msg_id,
            origin: msg.origin,
            rect: msg.relevance,
            routers: relevant.clone(),
        });
        report.routers_contacted = relevant.len();
        report.sends = relevant.len() as u64;
        for &r in &relevant {
            let state = &self.routers[&r];
            for (client, z) in state.query(&area, &intervals, &mut report.comparisons)? {
                if !z.is_full() && !self.designated(r, &z, &msg.relevance) {
                    report.comparisons += 1;
                    continue;
                }
                if report.deliver(client) {
                    log.push(EventKind::Deliver { msg: msg.msg_id, client, router: r });
                }
            }
        }
        Ok(report)
    }

    /// Whether `router` is the one that forwards to a prefix client: the owner
    /// of the lowest-Z cell of the client's region within the relevance area.
    /// In a scoped network that cell must also lie in scope, so exactly one
    /// regional network takes the client.
    fn designated(&self, router: RouterId, z: &ZCode, relevance: &Rect) -> bool {
        let bits = self.bits_per_axis();
        let overlap = z.region().intersection(relevance).expect("query matched the region");
        let first = overlap.min_corner(bits);
        self.scope.contains_point(&first) && self.ring.owner_of_value(encode(first).value()) == router
    }

    /// Removes a router. Its codes fall to ring predecessors and its clients
    /// re-subscribe; every other attachment is untouched.
    pub fn fail_router(&mut self, failed: RouterId, log: &mut EventLog) -> Result<FailoverReport, RoutingError> {
        let ring = self.ring.fallback(failed)?;
        let state = self.routers.remove(&failed).ok_or(RoutingError::UnknownRouter(failed))?;
        let former: Vec<ClientId> = state.clients().map(|(c, _)| c).collect();
        log.push(EventKind::RouterFail { router: failed, clients: former.len() });

        self.ring = ring;
        self.location_tree = self.ring.location_tree();
        for (id, s) in self.routers.iter_mut() {
            s.set_responsibility(self.ring.responsibility(*id)?);
        }

        let mut messages = 0u64;
        for &client in &former {
            let att = self.attachments[&client].clone();
            let routers = self.ring.assign_prefix(&att.reported)?;
            let mut sent = 0u64;
            for &r in &routers {
                let fresh = !att.routers.contains(&r);
                let s = self.routers.get_mut(&r).ok_or(RoutingError::UnknownRouter(r))?;
                s.subscribe(client, att.reported)?;
                if fresh {
                    sent += 1;
                    log.push(EventKind::Subscribe { client, router: r, code: att.reported });
                }
            }
            // A client whose share moved to a router it already uses still
            // tells that router it lost the other connection.
            messages += sent.max(1);
            self.attachments.insert(client, Attachment { reported: att.reported, routers });
        }
        Ok(FailoverReport {
            failed,
            former_clients: former,
            messages,
        })
    }

    /// Epoch boundary upkeep: rebuild router indexes with enough churn.
    pub fn end_epoch(&mut self) -> usize {
        self.routers.values_mut().map(|s| s.maybe_rebuild()).filter(|&b| b).count()
    }

    pub fn rebuild_all(&mut self) {
        for s in self.routers.values_mut() {
            s.rebuild();
        }
    }

    pub fn set_announcement(&mut self, ann: Option<Arc<PrefixAnnouncement>>) {
        for s in self.routers.values_mut() {
            s.set_announcement(ann.clone());
        }
    }

    pub fn rebuild_fraction(&self) -> f64 {
        self.rebuild_fraction
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{random_virtual_locations, RouterRecord};
    use crate::routing::Origin;
    use crate::zorder::{decode, encode_xy, GridPoint};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const BITS: u8 = 4;

    fn ring_from(locs: &[&[u64]]) -> Ring {
        let routers = locs
            .iter()
            .enumerate()
            .map(|(i, vs)| RouterRecord {
                router_id: RouterId(i as u32),
                virtual_locations: vs.iter().map(|&v| ZCode::full(v, BITS).unwrap()).collect(),
            })
            .collect();
        Ring::new(routers, BITS).unwrap()
    }

    fn msg(id: u64, r: Rect) -> Message {
        Message { msg_id: id, relevance: r, payload: Vec::new(), origin: Origin::Tmc }
    }

    fn rect(x0: u32, x1: u32, y0: u32, y1: u32) -> Rect {
        Rect::new(x0, x1, y0, y1, BITS).unwrap()
    }

    #[test]
    fn whole_grid_contacts_every_router() {
        let ring = ring_from(&[&[10], &[40, 200], &[70]]);
        let mut c = 0;
        let got = relevant_routers(&ring, &ring.location_tree(), &Rect::full(BITS).unwrap(), &mut c).unwrap();
        assert_eq!(got, vec![RouterId(0), RouterId(1), RouterId(2)]);
    }

    #[test]
    fn rect_inside_one_interval_needs_one_router() {
        let ring = ring_from(&[&[0], &[128]]);
        let mut c = 0;
        // x, y < 8 is codes 0..=63.
        let got = relevant_routers(&ring, &ring.location_tree(), &rect(1, 6, 2, 5), &mut c).unwrap();
        assert_eq!(got, vec![RouterId(0)]);
    }

    #[test]
    fn owner_of_interior_is_found_without_a_location_inside() {
        // Router 1 owns 40..=69 but its location 40 is outside the rectangle.
        let ring = ring_from(&[&[10], &[40], &[70]]);
        let p = decode(&ZCode::full(50, BITS).unwrap()).unwrap();
        let mut c = 0;
        let got = relevant_routers(&ring, &ring.location_tree(), &Rect::cell(p), &mut c).unwrap();
        assert_eq!(got, vec![RouterId(1)]);
    }

    #[test]
    fn no_clients_still_contacts_routers() {
        let net = Network::new(ring_from(&[&[0], &[128]])).unwrap();
        let r = net.disseminate(&msg(1, rect(0, 15, 0, 15)), &mut EventLog::disabled()).unwrap();
        assert_eq!((r.routers_contacted, r.clients_delivered, r.sends), (2, 0, 2));
    }

    #[test]
    fn prefix_client_on_two_routers_gets_one_copy() {
        let mut net = Network::new(ring_from(&[&[0], &[32]])).unwrap();
        let mut log = EventLog::new();
        // Prefix 0 spans codes 0..=127, owned by both routers.
        let z = ZCode::parse("0", BITS).unwrap();
        assert_eq!(net.subscribe_client(ClientId(1), z, &mut log).unwrap(), 2);
        net.rebuild_all();
        let r = net.disseminate(&msg(7, rect(0, 15, 0, 15)), &mut log).unwrap();
        assert_eq!(r.delivered_ids.iter().copied().collect::<Vec<_>>(), vec![ClientId(1)]);
        assert_eq!(r.duplicates_suppressed, 0);
        assert_eq!(r.sends, (r.routers_contacted + r.clients_delivered) as u64);
    }

    #[test]
    fn relocation_costs() {
        let mut net = Network::new(ring_from(&[&[0], &[128]])).unwrap();
        let mut log = EventLog::new();
        let c = ClientId(3);
        net.subscribe_client(c, encode_xy(1, 1, BITS).unwrap(), &mut log).unwrap();
        // Same router.
        let r = net.relocate(c, encode_xy(2, 1, BITS).unwrap(), &mut log).unwrap();
        assert_eq!(r.handoff_messages(), 0);
        // Across the boundary at code 128.
        let r = net.relocate(c, encode_xy(12, 12, BITS).unwrap(), &mut log).unwrap();
        assert_eq!(r.handoff_messages(), 2);
        assert_eq!(net.attachment(c).unwrap().routers, vec![RouterId(1)]);
        assert!(matches!(log.events().last().unwrap().kind, EventKind::Handoff { messages: 2, .. }));
        assert_eq!(net.unsubscribe_client(c, &mut log).unwrap(), 1);
        assert_eq!(net.relocate(c, ZCode::root(BITS).unwrap(), &mut log), Err(RoutingError::UnknownClient(c)));
    }

    #[test]
    fn failing_an_empty_router_sends_nothing() {
        let mut net = Network::new(ring_from(&[&[0], &[128]])).unwrap();
        let mut log = EventLog::new();
        net.subscribe_client(ClientId(1), encode_xy(0, 0, BITS).unwrap(), &mut log).unwrap();
        let f = net.fail_router(RouterId(1), &mut log).unwrap();
        assert_eq!((f.former_clients.len(), f.messages), (0, 0));
        assert!(matches!(
            net.fail_router(RouterId(0), &mut log),
            Err(RoutingError::Ring(RingError::LastRouter(_)))
        ));
    }

    /// Clients at random cells, a fraction truncated to random prefixes.
    fn random_clients(rng: &mut ChaCha8Rng, n: usize, bits: u8) -> Vec<(ClientId, GridPoint, ZCode)> {
        (0..n)
            .map(|i| {
                let p = GridPoint::new(rng.random_range(0..1 << bits), rng.random_range(0..1 << bits), bits).unwrap();
                let full = encode(p);
                let z = if rng.random_bool(0.3) { full.truncate(rng.random_range(0..=2 * bits)).unwrap() } else { full };
                (ClientId(i as u32), p, z)
            })
            .collect()
    }

    fn random_rect(rng: &mut ChaCha8Rng, bits: u8) -> Rect {
        let side = 1u32 << bits;
        let (a, b) = (rng.random_range(0..side), rng.random_range(0..side));
        let (c, d) = (rng.random_range(0..side), rng.random_range(0..side));
        Rect::new(a.min(b), a.max(b), c.min(d), c.max(d), bits).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn relevant_routers_cover_every_cell(seed in any::<u64>()) {
            let bits = 6;
            let ring = random_virtual_locations(7, 3, bits, seed).and_then(|r| Ring::new(r, bits)).unwrap();
            let tree = ring.location_tree();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..10 {
                let r = random_rect(&mut rng, bits);
                let mut c = 0;
                let got: BTreeSet<_> = relevant_routers(&ring, &tree, &r, &mut c).unwrap().into_iter().collect();
                let owners: BTreeSet<_> = r.cells().map(|(x, y)| ring.assign(&encode_xy(x, y, bits).unwrap()).unwrap()).collect();
                // Exact decomposition: no router beyond the cell owners.
                prop_assert_eq!(got, owners);
            }
        }

        #[test]
        fn dissemination_is_complete_and_counted(seed in any::<u64>()) {
            let bits = 5;
            let ring = random_virtual_locations(6, 3, bits, seed).and_then(|r| Ring::new(r, bits)).unwrap();
            let mut net = Network::new(ring).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let clients = random_clients(&mut rng, 120, bits);
            let mut log = EventLog::disabled();
            for (c, _, z) in &clients {
                net.subscribe_client(*c, *z, &mut log).unwrap();
            }
            if rng.random_bool(0.5) {
                net.rebuild_all();
            }
            for id in 0..20 {
                let r = random_rect(&mut rng, bits);
                let rep = net.disseminate(&msg(id, r), &mut log).unwrap();
                let expect: BTreeSet<_> = clients.iter().filter(|(_, _, z)| z.region().intersects(&r)).map(|(c, _, _)| *c).collect();
                prop_assert_eq!(&rep.delivered_ids, &expect);
                prop_assert_eq!(rep.duplicates_suppressed, 0);
                prop_assert_eq!(rep.sends, (rep.routers_contacted + rep.clients_delivered) as u64);
            }
        }

        #[test]
        fn random_walk_membership_matches_assignment(seed in any::<u64>()) {
            let bits = 5;
            let ring = random_virtual_locations(5, 2, bits, seed).and_then(|r| Ring::new(r, bits)).unwrap();
            let mut net = Network::new(ring.clone()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut log = EventLog::disabled();
            let clients = random_clients(&mut rng, 20, bits);
            for (c, _, z) in &clients {
                net.subscribe_client(*c, *z, &mut log).unwrap();
            }
            for _ in 0..200 {
                let (c, _, _) = clients[rng.random_range(0..clients.len())];
                let p = GridPoint::new(rng.random_range(0..32), rng.random_range(0..32), bits).unwrap();
                let z = encode(p).truncate(rng.random_range(0..=2 * bits)).unwrap();
                let cost = net.relocate(c, z, &mut log).unwrap();
                prop_assert!(cost.handoff_messages() <= 2 * ring.len() as u32);
            }
            for (c, att) in net.attachments() {
                prop_assert_eq!(&att.routers, &ring.assign_prefix(&att.reported).unwrap());
                for r in net.routers() {
                    prop_assert_eq!(r.contains(c), att.routers.contains(&r.router_id()));
                }
            }
        }

        #[test]
        fn failover_keeps_delivery_complete(seed in any::<u64>()) {
            let bits = 5;
            let ring = random_virtual_locations(6, 2, bits, seed).and_then(|r| Ring::new(r, bits)).unwrap();
            let mut net = Network::new(ring).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut log = EventLog::disabled();
            let clients: Vec<_> = (0..80u32)
                .map(|i| (ClientId(i), encode_xy(rng.random_range(0..32), rng.random_range(0..32), bits).unwrap()))
                .collect();
            for (c, z) in &clients {
                net.subscribe_client(*c, *z, &mut log).unwrap();
            }
            let victim = RouterId(rng.random_range(0..6));
            let before: BTreeSet<_> = net.router(victim).unwrap().clients().map(|(c, _)| c).collect();
            let f = net.fail_router(victim, &mut log).unwrap();
            prop_assert_eq!(f.former_clients.iter().copied().collect::<BTreeSet<_>>(), before.clone());
            prop_assert_eq!(f.messages, before.len() as u64);
            let r = random_rect(&mut rng, bits);
            let rep = net.disseminate(&msg(1, r), &mut log).unwrap();
            let expect: BTreeSet<_> = clients.iter().filter(|(_, z)| z.region().intersects(&r)).map(|(c, _)| *c).collect();
            prop_assert_eq!(rep.delivered_ids, expect);
        }
    }
}
