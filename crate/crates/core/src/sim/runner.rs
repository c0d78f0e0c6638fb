use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::{place_virtual_locations, random_virtual_locations, EmpiricalSnapshot, Ring, RouterRecord};
use crate::privacy::{announce, apply_policy, build_trie, conform, overdelivery_ratio, PrefixAnnouncement};
use crate::routing::{DeliveryReport, EventLog, FailoverReport, LayeredNetwork, Message, Network, Origin, Relocation};
use crate::sim::{
    delivered_digest, DisseminationRow, EpochRow, MetricsLedger, Model, Placement, RandomAssignment, ScenarioConfig, SimError,
    SingleServer, Vehicle,
};
use crate::zorder::{Rect, ZCode};
use crate::{ClientId, RouterId};

// Independent random streams, so enabling a model or a feature never shifts
// another part of the trace.
const STREAM_VEHICLES: u64 = 1;
const STREAM_MOBILITY: u64 = 2;
const STREAM_MESSAGES: u64 = 3;
const STREAM_PLACEMENT: u64 = 4;
const STREAM_RANDOM_MODEL: u64 = 5;
const STREAM_TOP: u64 = 6;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn stream_seed(seed: u64, id: u64) -> u64 {
    stream(seed, id).random()
}

enum Distributed {
    Flat(Network),
    Layered(LayeredNetwork),
}

impl Distributed {
    fn subscribe(&mut self, c: ClientId, z: ZCode, log: &mut EventLog) -> Result<u32, SimError> {
        Ok(match self {
            Self::Flat(n) => n.subscribe_client(c, z, log)?,
            Self::Layered(n) => n.subscribe_client(c, z, log)?,
        })
    }

    fn relocate(&mut self, c: ClientId, z: ZCode, log: &mut EventLog) -> Result<Relocation, SimError> {
        Ok(match self {
            Self::Flat(n) => n.relocate(c, z, log)?,
            Self::Layered(n) => n.relocate(c, z, log)?,
        })
    }

    /// The report and the number of top-layer hops.
    fn disseminate(&mut self, msg: &Message, log: &mut EventLog) -> Result<(DeliveryReport, usize), SimError> {
        Ok(match self {
            Self::Flat(n) => (n.disseminate(msg, log)?, 0),
            Self::Layered(n) => {
                let r = n.disseminate(msg, log)?;
                (r.report, r.top_hops)
            }
        })
    }

    fn fail_router(&mut self, r: RouterId, log: &mut EventLog) -> Result<FailoverReport, SimError> {
        let result = match self {
            Self::Flat(n) => n.fail_router(r, log),
            Self::Layered(n) => n.fail_router(r, log),
        };
        result.map_err(|_| SimError::Failure(r.0))
    }

    fn end_epoch(&mut self) -> usize {
        match self {
            Self::Flat(n) => n.end_epoch(),
            Self::Layered(n) => n.end_epoch(),
        }
    }

    fn set_announcement(&mut self, ann: Option<Arc<PrefixAnnouncement>>) {
        match self {
            Self::Flat(n) => n.set_announcement(ann),
            Self::Layered(n) => n.set_announcement(ann),
        }
    }

    fn router_loads(&self) -> BTreeMap<RouterId, usize> {
        match self {
            Self::Flat(n) => n.router_loads(),
            Self::Layered(n) => n.router_loads(),
        }
    }
}

/// Virtual locations for the flat topology, placed from the initial vehicle
/// distribution or uniformly, per the config.
pub fn build_distributed_ring(config: &ScenarioConfig, initial: &[ZCode]) -> Result<Ring, SimError> {
    let (m, v, bits) = (config.m_routers, config.locations_per_router(), config.bits_per_axis);
    let seed = stream_seed(config.rng_seed, STREAM_PLACEMENT);
    let records = match config.placement {
        Placement::Density => place_virtual_locations(&EmpiricalSnapshot::new(initial.to_vec(), 0)?, m, v, seed)?,
        Placement::Random => random_virtual_locations(m, v, bits, seed)?,
    };
    Ok(Ring::new(records, bits)?)
}

/// The two-tier topology for a config with `coarse_layer_length` set:
/// routers split evenly over the regions and placed uniformly inside them.
pub fn build_layered_network(config: &ScenarioConfig) -> Result<LayeredNetwork, SimError> {
    let Some(l) = config.coarse_layer_length else {
        return Err(SimError::Config {
            field: "coarse_layer_length".into(),
            message: "required for the layered topology".into(),
        });
    };
    let (m, v, bits) = (config.m_routers, config.locations_per_router(), config.bits_per_axis);
    let regions = 1usize << l;
    let region_cells = 1u128 << (2 * u32::from(bits) - u32::from(l));
    let mut rng = stream(config.rng_seed, STREAM_PLACEMENT);
    let mut regional = BTreeMap::new();
    for i in 0..regions {
        let prefix = ZCode::new(i as u64, l, 2 * bits)?;
        let ids = (i * m / regions)..((i + 1) * m / regions);
        let offsets = index::sample(&mut rng, region_cells as usize, ids.len() * v).into_vec();
        let records = ids
            .enumerate()
            .map(|(j, id)| RouterRecord {
                router_id: RouterId(id as u32),
                virtual_locations: offsets[j * v..(j + 1) * v]
                    .iter()
                    .map(|&o| ZCode::full(prefix.lower() + o as u64, bits).expect("inside the region"))
                    .collect(),
            })
            .collect();
        regional.insert(prefix, Ring::new(records, bits)?);
    }
    let top = random_virtual_locations(config.top_routers, 1, bits, stream_seed(config.rng_seed, STREAM_TOP))?;
    Ok(LayeredNetwork::new(Ring::new(top, bits)?, regional, l, config.rebuild_fraction)?)
}

/// A scenario in progress. [`run`] drives one to completion.
pub struct Simulation {
    config: ScenarioConfig,
    vehicles: Vec<Vehicle>,
    private: Vec<bool>,
    reported: Vec<ZCode>,
    distributed: Distributed,
    single: Option<SingleServer>,
    random: Option<RandomAssignment>,
    failures: BTreeMap<u64, Vec<u32>>,
    announcement: Option<Arc<PrefixAnnouncement>>,
    mobility_rng: ChaCha8Rng,
    message_rng: ChaCha8Rng,
    next_epoch: u64,
    next_msg: u64,
    log: EventLog,
    ledger: MetricsLedger,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let bits = config.bits_per_axis;
        let mut rng = stream(config.rng_seed, STREAM_VEHICLES);
        let mut vehicles = Vec::with_capacity(config.n_clients);
        let mut private = Vec::with_capacity(config.n_clients);
        for _ in 0..config.n_clients {
            let hotspot = rng.random_bool(config.hotspot_fraction);
            private.push(rng.random_bool(config.privacy_fraction));
            vehicles.push(config.mobility.spawn(&mut rng, bits, hotspot));
        }
        let initial: Vec<ZCode> = vehicles.iter().map(|v| v.pos.encode()).collect();
        let distributed = match config.coarse_layer_length {
            None => Distributed::Flat(Network::with_rebuild_fraction(build_distributed_ring(config, &initial)?, config.rebuild_fraction)?),
            Some(_) => Distributed::Layered(build_layered_network(config)?),
        };
        let enabled = |m: Model| config.comparison_models.contains(&m);
        let single = enabled(Model::SingleServer)
            .then(|| SingleServer::new(bits, config.rebuild_fraction))
            .transpose()?;
        let random = enabled(Model::RandomAssignment)
            .then(|| RandomAssignment::new(config.m_routers, bits, config.rebuild_fraction, stream_seed(config.rng_seed, STREAM_RANDOM_MODEL)))
            .transpose()?;
        let mut sim = Self {
            vehicles,
            private,
            reported: initial,
            distributed,
            single,
            random,
            failures: BTreeMap::new(),
            announcement: None,
            mobility_rng: stream(config.rng_seed, STREAM_MOBILITY),
            message_rng: stream(config.rng_seed, STREAM_MESSAGES),
            next_epoch: 0,
            next_msg: 0,
            log: EventLog::new(),
            ledger: MetricsLedger::new(),
            config: config.clone(),
        };
        for f in &config.failures {
            sim.schedule_failure(f.router, f.epoch)?;
        }
        Ok(sim)
    }

    /// Fails `router` at the boundary of `epoch`.
    pub fn schedule_failure(&mut self, router: u32, epoch: u64) -> Result<(), SimError> {
        let scheduled: usize = self.failures.values().map(Vec::len).sum();
        let already = self.failures.values().any(|rs| rs.contains(&router));
        if router as usize >= self.config.m_routers || already || scheduled + 1 >= self.config.m_routers {
            return Err(SimError::Failure(router));
        }
        if epoch < self.next_epoch || epoch >= self.config.epochs {
            return Err(SimError::Config {
                field: "failures.epoch".into(),
                message: format!("epoch {epoch} is not ahead in this run"),
            });
        }
        self.failures.entry(epoch).or_default().push(router);
        Ok(())
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    /// What each vehicle currently reports, indexed by client id.
    pub fn reported(&self) -> &[ZCode] {
        &self.reported
    }

    pub fn is_finished(&self) -> bool {
        self.next_epoch >= self.config.epochs
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn ledger(&self) -> &MetricsLedger {
        &self.ledger
    }

    pub fn into_parts(self) -> (EventLog, MetricsLedger) {
        (self.log, self.ledger)
    }

    fn report_for(&self, i: usize) -> Result<ZCode, SimError> {
        let v = &self.vehicles[i];
        let full = v.pos.encode();
        let Some(ann) = self.announcement.as_deref().filter(|_| self.private[i]) else {
            return Ok(full);
        };
        Ok(match self.config.granularity_policy() {
            Some(p) => apply_policy(&p, self.config.mobility.phase(v), &full, ann)?,
            None => conform(&full, ann)?,
        })
    }

    /// Runs the next epoch: boundary updates, then its messages.
    pub fn step(&mut self) -> Result<(), SimError> {
        let e = self.next_epoch;
        if self.is_finished() {
            return Ok(());
        }
        self.log.set_time(e);
        if e > 0 {
            for v in &mut self.vehicles {
                self.config.mobility.step(v, &mut self.mobility_rng);
            }
        }

        let mut row = EpochRow {
            epoch: e,
            clients: self.vehicles.len(),
            subscribe_messages: 0,
            handoffs: 0,
            handoff_messages: 0,
            updates: 0,
            rebuilds: 0,
            load_min: 0,
            load_max: 0,
            load_mean: 0.0,
            load_histogram: String::new(),
            announced_prefixes: 0,
            announced_min_len: 0,
            announced_max_len: 0,
            failed_routers: String::new(),
            failover_clients: 0,
            failover_messages: 0,
        };

        let mut failed = Vec::new();
        for r in self.failures.remove(&e).unwrap_or_default() {
            let f = self.distributed.fail_router(RouterId(r), &mut self.log)?;
            row.failover_clients += f.former_clients.len();
            row.failover_messages += f.messages;
            failed.push(r.to_string());
        }
        row.failed_routers = failed.join(" ");

        if self.config.privacy_fraction > 0.0 {
            let codes: Vec<ZCode> = self.vehicles.iter().map(|v| v.pos.encode()).collect();
            let ann = announce(&build_trie(&codes, self.config.bits_per_axis)?, self.config.k_anonymity)?;
            row.announced_prefixes = ann.allowed.len();
            row.announced_min_len = ann.min_len();
            row.announced_max_len = ann.max_len();
            let ann = Arc::new(ann);
            self.announcement = Some(ann.clone());
            self.distributed.set_announcement(Some(ann));
        }

        for i in 0..self.vehicles.len() {
            let c = ClientId(i as u32);
            let z = self.report_for(i)?;
            self.reported[i] = z;
            if e == 0 {
                row.subscribe_messages += u64::from(self.distributed.subscribe(c, z, &mut self.log)?);
            } else {
                let moved = self.distributed.relocate(c, z, &mut self.log)?;
                row.handoffs += u64::from(moved.membership_changed());
                row.handoff_messages += u64::from(moved.handoff_messages());
                row.updates += u64::from(moved.updates);
            }
            if let Some(s) = &mut self.single {
                s.upsert(c, z)?;
            }
            if let Some(s) = &mut self.random {
                s.upsert(c, z)?;
            }
        }
        row.rebuilds = self.distributed.end_epoch();
        if let Some(s) = &mut self.single {
            row.rebuilds += usize::from(s.end_epoch());
        }
        if let Some(s) = &mut self.random {
            row.rebuilds += s.end_epoch();
        }

        let loads = self.distributed.router_loads();
        row.load_min = loads.values().copied().min().unwrap_or(0);
        row.load_max = loads.values().copied().max().unwrap_or(0);
        row.load_mean = loads.values().sum::<usize>() as f64 / loads.len().max(1) as f64;
        row.load_histogram = loads.values().map(usize::to_string).collect::<Vec<_>>().join(" ");

        let total = self.config.messages;
        let epochs = self.config.epochs;
        let count = total * (e + 1) / epochs - total * e / epochs;
        for _ in 0..count {
            let msg = self.next_message();
            self.disseminate(e, &msg)?;
        }
        self.ledger.push_epoch(row);
        self.next_epoch += 1;
        Ok(())
    }

    fn next_message(&mut self) -> Message {
        let rng = &mut self.message_rng;
        let (lo, hi) = (self.config.relevance.min_side, self.config.max_side());
        let side = (f64::from(lo) * (f64::from(hi) / f64::from(lo)).powf(rng.random::<f64>())).round() as u32;
        let side = side.clamp(lo, hi);
        let grid = self.config.grid_side();
        let x = rng.random_range(0..=grid - side);
        let y = rng.random_range(0..=grid - side);
        let origin = if rng.random_bool(self.config.vehicle_origin_fraction) {
            Origin::Vehicle(ClientId(rng.random_range(0..self.vehicles.len()) as u32))
        } else {
            Origin::Tmc
        };
        let msg_id = self.next_msg;
        self.next_msg += 1;
        Message {
            msg_id,
            relevance: Rect::new(x, x + side - 1, y, y + side - 1, self.config.bits_per_axis).expect("inside the grid"),
            payload: msg_id.to_le_bytes().to_vec(),
            origin,
        }
    }

    fn disseminate(&mut self, epoch: u64, msg: &Message) -> Result<(), SimError> {
        let area = &msg.relevance;
        let mut exact_k = 0;
        let mut expect = BTreeSet::new();
        for (i, (v, z)) in self.vehicles.iter().zip(&self.reported).enumerate() {
            let inside = area.contains_point(&v.pos);
            exact_k += usize::from(inside);
            let hit = if z.is_full() { inside } else { z.region().intersects(area) };
            if hit {
                expect.insert(ClientId(i as u32));
            }
        }
        let mut rows = Vec::new();
        let routers_total = self.distributed.router_loads().len();
        let (report, top_hops) = self.distributed.disseminate(msg, &mut self.log)?;
        rows.push((Model::Distributed, routers_total, report, top_hops));
        if let Some(s) = &self.single {
            rows.push((Model::SingleServer, 1, s.disseminate(msg)?, 0));
        }
        if let Some(s) = &self.random {
            rows.push((Model::RandomAssignment, s.len(), s.disseminate(msg)?, 0));
        }
        for (model, routers_total, report, top_hops) in rows {
            self.ledger.push_dissemination(DisseminationRow {
                msg_id: msg.msg_id,
                epoch,
                model,
                routers_total,
                m: report.routers_contacted,
                k: report.clients_delivered,
                top_hops,
                sends: report.sends,
                comparisons: report.comparisons,
                exact_k,
                overdelivery: overdelivery_ratio(&report, exact_k),
                duplicates: report.duplicates_suppressed,
                complete: report.delivered_ids == expect,
                delivered_digest: delivered_digest(&report.delivered_ids),
            });
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }
}

/// Runs a whole scenario.
pub fn run(config: &ScenarioConfig) -> Result<(EventLog, MetricsLedger), SimError> {
    let mut sim = Simulation::new(config)?;
    sim.run_to_end()?;
    Ok(sim.into_parts())
}
