use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::Serialize;

use crate::assignment::{Ring, RouterRecord};
use crate::privacy::PrefixAnnouncement;
use crate::routing::{DeliveryReport, EventLog, FailoverReport, Message, Network, Relocation, RoutingError};
use crate::zorder::ZCode;
use crate::{ClientId, RouterId};

/// What the top layer learns about one forwarded message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopLayerRecord {
    pub msg: u64,
    pub region: ZCode,
    pub top_router: RouterId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredReport {
    /// Regional routers and client deliveries, summed over regions.
    pub report: DeliveryReport,
    /// Distinct top-layer routers that forwarded the message.
    pub top_hops: usize,
    pub regions: Vec<ZCode>,
}

/// Two-tier topology: a top ring over coarse regions of prefix length `L`,
/// and one regional ring per region that clients attach to.
#[derive(Debug, Clone)]
pub struct LayeredNetwork {
    coarse_len: u8,
    top: Ring,
    regions: BTreeMap<ZCode, Network>,
    client_regions: BTreeMap<ClientId, Vec<ZCode>>,
    top_ledger: Vec<TopLayerRecord>,
}

impl LayeredNetwork {
    /// `regional` must hold one ring for each of the `2^L` prefixes of length
    /// `coarse_len`, with every virtual location inside its region and router
    /// ids distinct across regions.
    pub fn new(top: Ring, regional: BTreeMap<ZCode, Ring>, coarse_len: u8, rebuild_fraction: f64) -> Result<Self, RoutingError> {
        let bits = top.bits_per_axis();
        let bad = |s: String| Err(RoutingError::InconsistentRegions(s));
        if coarse_len >= 2 * bits {
            return bad(format!("coarse length {coarse_len} must be below {}", 2 * bits));
        }
        if regional.len() as u128 != 1u128 << coarse_len {
            return bad(format!("expected {} regions, got {}", 1u128 << coarse_len, regional.len()));
        }
        let mut seen = BTreeSet::new();
        let mut regions = BTreeMap::new();
        for (prefix, ring) in regional {
            if prefix.len() != coarse_len || prefix.bits_per_axis() != bits || ring.bits_per_axis() != bits {
                return bad(format!("region {prefix} does not match length {coarse_len} at {bits} bits per axis"));
            }
            for r in ring.routers() {
                if !seen.insert(r.router_id) {
                    return bad(format!("router {} appears in two regions", r.router_id));
                }
                if let Some(v) = r.virtual_locations.iter().find(|v| !prefix.is_prefix_of(v)) {
                    return bad(format!("virtual location {v} of {} lies outside region {prefix}", r.router_id));
                }
            }
            let net = Network::scoped(ring, prefix.region(), rebuild_fraction)?;
            regions.insert(prefix, net);
        }
        Ok(Self {
            coarse_len,
            top,
            regions,
            client_regions: BTreeMap::new(),
            top_ledger: Vec::new(),
        })
    }

    pub fn coarse_len(&self) -> u8 {
        self.coarse_len
    }

    pub fn top(&self) -> &Ring {
        &self.top
    }

    pub fn regions(&self) -> impl Iterator<Item = (&ZCode, &Network)> {
        self.regions.iter()
    }

    pub fn region(&self, prefix: &ZCode) -> Option<&Network> {
        self.regions.get(prefix)
    }

    pub fn top_ledger(&self) -> &[TopLayerRecord] {
        &self.top_ledger
    }

    /// Longest prefix the top layer ever handled.
    pub fn max_top_prefix_len(&self) -> Option<u8> {
        self.top_ledger.iter().map(|r| r.region.len()).max()
    }

    /// One ring holding every regional router, for comparison runs.
    pub fn flat_ring(&self) -> Result<Ring, RoutingError> {
        let routers: Vec<RouterRecord> = self.regions.values().flat_map(|n| n.ring().routers().iter().cloned()).collect();
        Ok(Ring::new(routers, self.top.bits_per_axis())?)
    }

    /// Regions a client reporting `z` attaches to.
    fn regions_for(&self, z: &ZCode) -> Result<Vec<ZCode>, RoutingError> {
        if z.len() >= self.coarse_len {
            return Ok(vec![z.truncate(self.coarse_len)?]);
        }
        Ok(self.regions.keys().filter(|p| z.is_prefix_of(p)).copied().collect())
    }

    fn net_mut(&mut self, prefix: &ZCode) -> &mut Network {
        self.regions.get_mut(prefix).expect("regions cover every coarse prefix")
    }

    pub fn subscribe_client(&mut self, client: ClientId, reported: ZCode, log: &mut EventLog) -> Result<u32, RoutingError> {
        if self.client_regions.contains_key(&client) {
            return Err(RoutingError::DuplicateClient(client));
        }
        let regions = self.regions_for(&reported)?;
        let mut n = 0;
        for p in &regions {
            n += self.net_mut(p).subscribe_client(client, reported, log)?;
        }
        self.client_regions.insert(client, regions);
        Ok(n)
    }

    pub fn unsubscribe_client(&mut self, client: ClientId, log: &mut EventLog) -> Result<u32, RoutingError> {
        let regions = self.client_regions.remove(&client).ok_or(RoutingError::UnknownClient(client))?;
        let mut n = 0;
        for p in &regions {
            n += self.net_mut(p).unsubscribe_client(client, log)?;
        }
        Ok(n)
    }

    pub fn relocate(&mut self, client: ClientId, reported: ZCode, log: &mut EventLog) -> Result<Relocation, RoutingError> {
        let old = self.client_regions.get(&client).ok_or(RoutingError::UnknownClient(client))?.clone();
        let new = self.regions_for(&reported)?;
        let mut cost = Relocation::default();
        for p in &old {
            if !new.contains(p) {
                cost.disconnects += self.net_mut(p).unsubscribe_client(client, log)?;
            }
        }
        for p in &new {
            if old.contains(p) {
                let r = self.net_mut(p).relocate(client, reported, log)?;
                cost.disconnects += r.disconnects;
                cost.connects += r.connects;
                cost.updates += r.updates;
            } else {
                cost.connects += self.net_mut(p).subscribe_client(client, reported, log)?;
            }
        }
        self.client_regions.insert(client, new);
        Ok(cost)
    }

    /// Routes `msg` through the top layer to every region it touches.
    pub fn disseminate(&mut self, msg: &Message, log: &mut EventLog) -> Result<LayeredReport, RoutingError> {
        msg.relevance.validate(self.top.bits_per_axis())?;
        let targets: Vec<ZCode> = self.regions.keys().filter(|p| p.region().intersects(&msg.relevance)).copied().collect();
        let mut top_routers = BTreeSet::new();
        let mut report = DeliveryReport::new(msg.msg_id);
        for p in &targets {
            let top_router = self.top.owner_of_value(p.lower());
            top_routers.insert(top_router);
            self.top_ledger.push(TopLayerRecord { msg: msg.msg_id, region: *p, top_router });
            report.absorb(self.regions[p].disseminate(msg, log)?);
        }
        Ok(LayeredReport {
            report,
            top_hops: top_routers.len(),
            regions: targets,
        })
    }

    pub fn fail_router(&mut self, failed: RouterId, log: &mut EventLog) -> Result<FailoverReport, RoutingError> {
        let prefix = self
            .regions
            .iter()
            .find(|(_, n)| n.ring().contains(failed))
            .map(|(p, _)| *p)
            .ok_or(RoutingError::UnknownRouter(failed))?;
        self.net_mut(&prefix).fail_router(failed, log)
    }

    pub fn end_epoch(&mut self) -> usize {
        self.regions.values_mut().map(Network::end_epoch).sum()
    }

    pub fn rebuild_all(&mut self) {
        for n in self.regions.values_mut() {
            n.rebuild_all();
        }
    }

    pub fn set_announcement(&mut self, ann: Option<Arc<PrefixAnnouncement>>) {
        for n in self.regions.values_mut() {
            n.set_announcement(ann.clone());
        }
    }

    /// Clients per regional router.
    pub fn router_loads(&self) -> BTreeMap<RouterId, usize> {
        self.regions.values().flat_map(|n| n.router_loads()).collect()
    }
}
