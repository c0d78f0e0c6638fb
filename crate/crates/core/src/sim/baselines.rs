//! The two reference models: one central server, and a router pool with
//! clients assigned at random instead of by location.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::routing::{DeliveryReport, Message, RouterState, RoutingError};
use crate::zorder::{decompose_rect_exact, ZCode, ZInterval};
use crate::{ClientId, RouterId};

fn whole_ring(bits_per_axis: u8) -> Result<Vec<ZInterval>, RoutingError> {
    Ok(vec![ZInterval::full_ring(bits_per_axis)?])
}

/// Queries `state` for `msg` and delivers to every match.
fn serve(state: &RouterState, msg: &Message, intervals: &[ZInterval], report: &mut DeliveryReport) -> Result<(), RoutingError> {
    for (c, _) in state.query(&msg.relevance, intervals, &mut report.comparisons)? {
        report.deliver(c);
    }
    Ok(())
}

/// All clients in one routing table.
#[derive(Debug, Clone)]
pub struct SingleServer {
    state: RouterState,
}

impl SingleServer {
    pub fn new(bits_per_axis: u8, rebuild_fraction: f64) -> Result<Self, RoutingError> {
        let state = RouterState::new(RouterId(0), bits_per_axis, whole_ring(bits_per_axis)?).with_rebuild_fraction(rebuild_fraction);
        Ok(Self { state })
    }

    /// Adds or moves a client. Returns whether its entry changed.
    pub fn upsert(&mut self, client: ClientId, reported: ZCode) -> Result<bool, RoutingError> {
        self.state.subscribe(client, reported)
    }

    pub fn end_epoch(&mut self) -> bool {
        self.state.maybe_rebuild()
    }

    pub fn rebuild(&mut self) {
        self.state.rebuild();
    }

    /// No routers are contacted; one send per recipient.
    pub fn disseminate(&self, msg: &Message) -> Result<DeliveryReport, RoutingError> {
        let intervals = decompose_rect_exact(&msg.relevance, self.state.bits_per_axis())?;
        let mut report = DeliveryReport::new(msg.msg_id);
        serve(&self.state, msg, &intervals, &mut report)?;
        Ok(report)
    }
}

/// `M` routers, each client on one router picked uniformly at random.
#[derive(Debug, Clone)]
pub struct RandomAssignment {
    routers: Vec<RouterState>,
    home: BTreeMap<ClientId, usize>,
    rng: ChaCha8Rng,
}

impl RandomAssignment {
    pub fn new(m_routers: usize, bits_per_axis: u8, rebuild_fraction: f64, seed: u64) -> Result<Self, RoutingError> {
        let ring = whole_ring(bits_per_axis)?;
        let routers = (0..m_routers)
            .map(|i| RouterState::new(RouterId(i as u32), bits_per_axis, ring.clone()).with_rebuild_fraction(rebuild_fraction))
            .collect();
        Ok(Self {
            routers,
            home: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn len(&self) -> usize {
        self.routers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routers.is_empty()
    }

    /// Adds or moves a client; a new client draws its router.
    pub fn upsert(&mut self, client: ClientId, reported: ZCode) -> Result<bool, RoutingError> {
        let m = self.routers.len();
        let rng = &mut self.rng;
        let home = *self.home.entry(client).or_insert_with(|| rng.random_range(0..m));
        self.routers[home].subscribe(client, reported)
    }

    pub fn end_epoch(&mut self) -> usize {
        self.routers.iter_mut().map(|s| s.maybe_rebuild()).filter(|&b| b).count()
    }

    pub fn rebuild(&mut self) {
        for s in &mut self.routers {
            s.rebuild();
        }
    }

    /// Location says nothing about the router, so all of them are asked.
    pub fn disseminate(&self, msg: &Message) -> Result<DeliveryReport, RoutingError> {
        let bits = self.routers.first().map(RouterState::bits_per_axis).unwrap_or(1);
        let intervals = decompose_rect_exact(&msg.relevance, bits)?;
        let mut report = DeliveryReport::new(msg.msg_id);
        report.routers_contacted = self.routers.len();
        report.sends = self.routers.len() as u64;
        for s in &self.routers {
            serve(s, msg, &intervals, &mut report)?;
        }
        Ok(report)
    }
}

/// One-shot single-server dissemination over `clients`.
pub fn baseline_single_server(clients: &[(ClientId, ZCode)], msg: &Message, bits_per_axis: u8) -> Result<DeliveryReport, RoutingError> {
    let mut s = SingleServer::new(bits_per_axis, crate::routing::DEFAULT_REBUILD_FRACTION)?;
    for &(c, z) in clients {
        s.upsert(c, z)?;
    }
    s.rebuild();
    s.disseminate(msg)
}

/// One-shot random-assignment dissemination over `clients`.
pub fn baseline_random_assignment(
    clients: &[(ClientId, ZCode)],
    m_routers: usize,
    seed: u64,
    msg: &Message,
    bits_per_axis: u8,
) -> Result<DeliveryReport, RoutingError> {
    let mut s = RandomAssignment::new(m_routers, bits_per_axis, crate::routing::DEFAULT_REBUILD_FRACTION, seed)?;
    for &(c, z) in clients {
        s.upsert(c, z)?;
    }
    s.rebuild();
    s.disseminate(msg)
}
