//! Location-based assignment of vehicles to routers.
//!
//! Every router claims one or more virtual locations on the Z-order ring. A
//! code belongs to the router with the greatest virtual location not above it;
//! codes below the smallest virtual location wrap around to the greatest one.
//! The router is therefore responsible for the half-open stretch from each of
//! its virtual locations up to the next one on the ring.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::spatial_index::RangeTree;
use crate::zorder::{decode_value, ZCode, ZInterval, ZOrderError};
use crate::RouterId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RingError {
    #[error("ring has no routers")]
    EmptyRing,
    #[error("router {0} has no virtual locations")]
    NoVirtualLocations(RouterId),
    #[error("router {0} appears twice")]
    DuplicateRouter(RouterId),
    #[error("virtual location {0} is claimed twice")]
    DuplicateLocation(ZCode),
    #[error("unknown router {0}")]
    UnknownRouter(RouterId),
    #[error("cannot remove {0}: it is the last router")]
    LastRouter(RouterId),
    #[error("snapshot has {have} samples, placement needs {need}")]
    InsufficientSample { need: usize, have: usize },
    #[error("router and location counts must be positive")]
    ZeroCount,
    #[error("no free ring position left for a virtual location")]
    PlacementExhausted,
    #[error(transparent)]
    ZOrder(#[from] ZOrderError),
}

pub type Result<T> = std::result::Result<T, RingError>;

/// A router and the virtual locations it claims on the ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouterRecord {
    pub router_id: RouterId,
    pub virtual_locations: Vec<ZCode>,
}

/// Immutable assignment ring. Mutating operations return a new ring.
#[derive(Debug, Clone)]
pub struct Ring {
    bits_per_axis: u8,
    routers: Vec<RouterRecord>,
    /// `(virtual location value, owner)` ascending by location.
    slots: Vec<(u64, RouterId)>,
}

impl Ring {
    pub fn new(routers: Vec<RouterRecord>, bits_per_axis: u8) -> Result<Self> {
        ZCode::root(bits_per_axis)?;
        let resolution = 2 * bits_per_axis;
        let mut routers = routers;
        routers.sort_by_key(|r| r.router_id);
        if let Some(w) = routers.windows(2).find(|w| w[0].router_id == w[1].router_id) {
            return Err(RingError::DuplicateRouter(w[0].router_id));
        }
        let mut slots = Vec::new();
        for r in &mut routers {
            if r.virtual_locations.is_empty() {
                return Err(RingError::NoVirtualLocations(r.router_id));
            }
            r.virtual_locations.sort();
            for z in &r.virtual_locations {
                if z.resolution() != resolution {
                    return Err(ZOrderError::ResolutionMismatch(z.resolution(), resolution).into());
                }
                if !z.is_full() {
                    return Err(ZOrderError::NotFullPrecision {
                        len: z.len(),
                        resolution,
                    }
                    .into());
                }
                slots.push((z.value(), r.router_id));
            }
        }
        slots.sort_unstable();
        if let Some(w) = slots.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(RingError::DuplicateLocation(ZCode::full(w[0].0, bits_per_axis)?));
        }
        Ok(Ring {
            bits_per_axis,
            routers,
            slots,
        })
    }

    pub fn bits_per_axis(&self) -> u8 {
        self.bits_per_axis
    }

    /// Routers ordered by id.
    pub fn routers(&self) -> &[RouterRecord] {
        &self.routers
    }

    pub fn router_ids(&self) -> impl Iterator<Item = RouterId> + '_ {
        self.routers.iter().map(|r| r.router_id)
    }

    pub fn contains(&self, id: RouterId) -> bool {
        self.routers.binary_search_by_key(&id, |r| r.router_id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.routers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routers.is_empty()
    }

    /// All virtual locations with their owners, ascending on the ring.
    pub fn slots(&self) -> &[(u64, RouterId)] {
        &self.slots
    }

    fn check_code(&self, z: &ZCode) -> Result<()> {
        if z.bits_per_axis() != self.bits_per_axis {
            return Err(ZOrderError::ResolutionMismatch(z.resolution(), 2 * self.bits_per_axis).into());
        }
        Ok(())
    }

    /// Index of the slot owning code `value`.
    fn owner_slot(&self, value: u64) -> usize {
        match self.slots.partition_point(|(v, _)| *v <= value) {
            0 => self.slots.len() - 1,
            i => i - 1,
        }
    }

    /// Owner of a raw full-precision code value. Panics on an empty ring.
    pub(crate) fn owner_of_value(&self, value: u64) -> RouterId {
        self.slots[self.owner_slot(value)].1
    }

    /// The router responsible for the full-precision code `z`.
    pub fn assign(&self, z: &ZCode) -> Result<RouterId> {
        self.check_code(z)?;
        if !z.is_full() {
            return Err(ZOrderError::NotFullPrecision {
                len: z.len(),
                resolution: z.resolution(),
            }
            .into());
        }
        if self.slots.is_empty() {
            return Err(RingError::EmptyRing);
        }
        Ok(self.owner_of_value(z.value()))
    }

    /// Every router responsible for some extension of the prefix `p`, in
    /// ascending ring order of the first such extension.
    pub fn assign_prefix(&self, p: &ZCode) -> Result<Vec<RouterId>> {
        self.check_code(p)?;
        if self.slots.is_empty() {
            return Err(RingError::EmptyRing);
        }
        Ok(self.owners_in(p.lower(), p.upper()))
    }

    /// Owners of the codes `lo..=hi` (non-wrapping), deduplicated in ring order.
    pub(crate) fn owners_in(&self, lo: u64, hi: u64) -> Vec<RouterId> {
        let mut out = vec![self.owner_of_value(lo)];
        let start = self.slots.partition_point(|(v, _)| *v <= lo);
        let end = self.slots.partition_point(|(v, _)| *v <= hi);
        let mut seen: HashSet<RouterId> = out.iter().copied().collect();
        for &(_, r) in &self.slots[start..end] {
            if seen.insert(r) {
                out.push(r);
            }
        }
        out
    }

    /// The responsibility interval starting at slot `i`.
    fn slot_interval(&self, i: usize) -> ZInterval {
        let mask = if self.bits_per_axis == 32 {
            u64::MAX
        } else {
            (1u64 << (2 * self.bits_per_axis)) - 1
        };
        let lo = self.slots[i].0;
        let next = self.slots[(i + 1) % self.slots.len()].0;
        ZInterval::from_values(lo, next.wrapping_sub(1) & mask, 2 * self.bits_per_axis)
    }

    /// The ring intervals the router is responsible for, in ring order.
    pub fn responsibility(&self, id: RouterId) -> Result<Vec<ZInterval>> {
        if !self.contains(id) {
            return Err(RingError::UnknownRouter(id));
        }
        Ok((0..self.slots.len())
            .filter(|&i| self.slots[i].1 == id)
            .map(|i| self.slot_interval(i))
            .collect())
    }

    /// The ring without `failed`. Codes it owned fall to the predecessor of
    /// each of its virtual locations; every other code keeps its owner.
    pub fn fallback(&self, failed: RouterId) -> Result<Ring> {
        if !self.contains(failed) {
            return Err(RingError::UnknownRouter(failed));
        }
        if self.routers.len() == 1 {
            return Err(RingError::LastRouter(failed));
        }
        Ok(Ring {
            bits_per_axis: self.bits_per_axis,
            routers: self.routers.iter().filter(|r| r.router_id != failed).cloned().collect(),
            slots: self.slots.iter().copied().filter(|(_, r)| *r != failed).collect(),
        })
    }

    /// The ring with one more router.
    pub fn with_router(&self, record: RouterRecord) -> Result<Ring> {
        let mut routers = self.routers.clone();
        routers.push(record);
        Ring::new(routers, self.bits_per_axis)
    }

    /// Range tree over the grid positions of all virtual locations, keyed by
    /// slot index (see [`Ring::slots`]).
    pub fn location_tree(&self) -> RangeTree<u32> {
        let points = self
            .slots
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i as u32, decode_value(*v, self.bits_per_axis)))
            .collect();
        RangeTree::build(points).expect("slot indices are unique")
    }

    /// Number of clients per router, zero entries included.
    pub fn load_report(&self, clients: &[ZCode]) -> Result<BTreeMap<RouterId, usize>> {
        if self.slots.is_empty() {
            return Err(RingError::EmptyRing);
        }
        let mut load: BTreeMap<RouterId, usize> = self.router_ids().map(|r| (r, 0)).collect();
        for z in clients {
            *load.get_mut(&self.assign(z)?).expect("owner is on the ring") += 1;
        }
        Ok(load)
    }
}

/// Sorted sample of vehicle codes taken at one logical time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalSnapshot {
    sample: Vec<ZCode>,
    taken_at: u64,
}

impl EmpiricalSnapshot {
    pub fn new(mut sample: Vec<ZCode>, taken_at: u64) -> Result<Self> {
        if let Some(first) = sample.first().copied() {
            for z in &sample {
                if z.resolution() != first.resolution() {
                    return Err(ZOrderError::ResolutionMismatch(z.resolution(), first.resolution()).into());
                }
                if !z.is_full() {
                    return Err(ZOrderError::NotFullPrecision {
                        len: z.len(),
                        resolution: z.resolution(),
                    }
                    .into());
                }
            }
        }
        sample.sort();
        Ok(Self { sample, taken_at })
    }

    pub fn sample(&self) -> &[ZCode] {
        &self.sample
    }

    pub fn taken_at(&self) -> u64 {
        self.taken_at
    }
}

/// `ceil(log2 m)`, at least one.
pub fn default_locations_per_router(m_routers: usize) -> usize {
    (m_routers.max(1).next_power_of_two().trailing_zeros() as usize).max(1)
}

fn ring_size(bits_per_axis: u8) -> u128 {
    1u128 << (2 * bits_per_axis)
}

/// Places `m_routers * per_router` virtual locations following the snapshot's
/// empirical distribution.
///
/// The gaps between consecutive sample codes (the last one wrapping to the
/// first) are numbered. Distinct gap numbers are drawn uniformly and each
/// location is drawn uniformly inside its gap, so dense stretches of the ring
/// receive proportionally more locations. Location `j` of the draw goes to
/// router `j / per_router`.
pub fn place_virtual_locations(
    snapshot: &EmpiricalSnapshot,
    m_routers: usize,
    per_router: usize,
    rng_seed: u64,
) -> Result<Vec<RouterRecord>> {
    if m_routers == 0 || per_router == 0 {
        return Err(RingError::ZeroCount);
    }
    let need = m_routers * per_router;
    let sample = snapshot.sample();
    if sample.len() < need {
        return Err(RingError::InsufficientSample {
            need,
            have: sample.len(),
        });
    }
    let bits = sample[0].bits_per_axis();
    let size = ring_size(bits);
    let n = sample.len();
    let gap = |i: usize| -> (u128, u128) {
        let lo = sample[i].value() as u128;
        let next = sample[(i + 1) % n].value() as u128;
        let len = (next + size - lo) % size;
        // A lone sample owns the whole ring; co-located samples a single point.
        let len = if n == 1 { size } else { len.max(1) };
        (lo, len)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let chosen = index::sample(&mut rng, n, need).into_vec();
    let mut tried: HashSet<usize> = chosen.iter().copied().collect();
    let mut used: HashSet<u64> = HashSet::with_capacity(need);
    let mut locations = Vec::with_capacity(need);
    for &first in &chosen {
        let mut interval = first;
        let point = loop {
            let (lo, len) = gap(interval);
            if let Some(p) = draw_free(lo, len, size, &used, &mut rng) {
                break p;
            }
            if tried.len() == n {
                return Err(RingError::PlacementExhausted);
            }
            interval = loop {
                let i = rng.random_range(0..n);
                if tried.insert(i) {
                    break i;
                }
            };
        };
        used.insert(point);
        locations.push(point);
    }

    Ok(locations
        .chunks(per_router)
        .enumerate()
        .map(|(r, chunk)| RouterRecord {
            router_id: RouterId(r as u32),
            virtual_locations: chunk.iter().map(|&v| ZCode::full(v, bits).expect("value on ring")).collect(),
        })
        .collect())
}

/// Uniform point of `lo .. lo + len` (mod ring) not in `used`.
fn draw_free(lo: u128, len: u128, size: u128, used: &HashSet<u64>, rng: &mut ChaCha8Rng) -> Option<u64> {
    let at = |off: u128| ((lo + off) % size) as u64;
    if len <= 64 {
        let free: Vec<u64> = (0..len).map(at).filter(|p| !used.contains(p)).collect();
        return (!free.is_empty()).then(|| free[rng.random_range(0..free.len())]);
    }
    (0..256).map(|_| at(rng.random_range(0..len))).find(|p| !used.contains(p))
}

/// Virtual locations drawn uniformly from the whole ring, ignoring where
/// vehicles are. This is the plain consistent-hashing placement.
pub fn random_virtual_locations(
    m_routers: usize,
    per_router: usize,
    bits_per_axis: u8,
    rng_seed: u64,
) -> Result<Vec<RouterRecord>> {
    if m_routers == 0 || per_router == 0 {
        return Err(RingError::ZeroCount);
    }
    ZCode::root(bits_per_axis)?;
    let size = ring_size(bits_per_axis);
    let need = m_routers * per_router;
    if (need as u128) > size {
        return Err(RingError::PlacementExhausted);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut used = BTreeSet::new();
    let mut locations = Vec::with_capacity(need);
    while locations.len() < need {
        let v = (rng.random::<u64>() as u128 % size) as u64;
        if used.insert(v) {
            locations.push(v);
        }
    }
    Ok(locations
        .chunks(per_router)
        .enumerate()
        .map(|(r, chunk)| RouterRecord {
            router_id: RouterId(r as u32),
            virtual_locations: chunk.iter().map(|&v| ZCode::full(v, bits_per_axis).expect("value on ring")).collect(),
        })
        .collect())
}
