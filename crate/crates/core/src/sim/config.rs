use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assignment::default_locations_per_router;
use crate::privacy::GranularityPolicy;
use crate::sim::{MobilityModel, Model, SimError};
use crate::zorder::MAX_BITS_PER_AXIS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Follow the initial vehicle distribution.
    Density,
    /// Uniform over the ring.
    Random,
}

/// Square relevance areas with side drawn log-uniformly in `min_side..=max_side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelevanceConfig {
    pub min_side: u32,
    /// Defaults to an eighth of the grid side.
    pub max_side: Option<u32>,
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        Self { min_side: 1, max_side: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub origin: u8,
    pub highway: u8,
    pub destination: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureSpec {
    pub router: u32,
    pub epoch: u64,
}

/// A whole scenario. Every field has a default; a TOML file only lists the
/// ones it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub bits_per_axis: u8,
    pub n_clients: usize,
    pub m_routers: usize,
    /// Defaults to `ceil(log2 m_routers)`.
    pub v_per_router: Option<usize>,
    pub k_anonymity: usize,
    /// Enables the two-tier topology with regions of this prefix length.
    pub coarse_layer_length: Option<u8>,
    pub top_routers: usize,
    pub rng_seed: u64,
    pub epochs: u64,
    /// Total messages, spread evenly over the epochs.
    pub messages: u64,
    pub vehicle_origin_fraction: f64,
    /// Share of vehicles that report announced prefixes instead of full codes.
    pub privacy_fraction: f64,
    /// Share of vehicles that live in the lower-left quadrant.
    pub hotspot_fraction: f64,
    pub placement: Placement,
    pub rebuild_fraction: f64,
    pub comparison_models: Vec<Model>,
    pub mobility: MobilityModel,
    pub relevance: RelevanceConfig,
    /// Trip-phase prefix lengths; only with scripted trips.
    pub policy: Option<PolicyConfig>,
    pub failures: Vec<FailureSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bits_per_axis: 10,
            n_clients: 50_000,
            m_routers: 64,
            v_per_router: None,
            k_anonymity: 10,
            coarse_layer_length: None,
            top_routers: 4,
            rng_seed: 1,
            epochs: 50,
            messages: 1_000,
            vehicle_origin_fraction: 0.1,
            privacy_fraction: 0.0,
            hotspot_fraction: 0.0,
            placement: Placement::Density,
            rebuild_fraction: crate::routing::DEFAULT_REBUILD_FRACTION,
            comparison_models: vec![Model::Distributed, Model::SingleServer, Model::RandomAssignment],
            mobility: MobilityModel::default(),
            relevance: RelevanceConfig::default(),
            policy: None,
            failures: Vec::new(),
        }
    }
}

fn invalid<T>(field: &str, message: impl Into<String>) -> Result<T, SimError> {
    Err(SimError::Config {
        field: field.to_string(),
        message: message.into(),
    })
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let config: Self = toml::from_str(text).map_err(|e| SimError::Config {
            field: e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_default(),
            message: e.message().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid_side(&self) -> u32 {
        1u32.checked_shl(u32::from(self.bits_per_axis)).unwrap_or(u32::MAX)
    }

    pub fn locations_per_router(&self) -> usize {
        self.v_per_router.unwrap_or_else(|| default_locations_per_router(self.m_routers))
    }

    pub fn max_side(&self) -> u32 {
        self.relevance.max_side.unwrap_or((self.grid_side() / 8).max(1))
    }

    pub fn granularity_policy(&self) -> Option<GranularityPolicy> {
        self.policy
            .map(|p| GranularityPolicy::new(p.origin, p.highway, p.destination).expect("validated"))
    }

    /// Checks every field; errors name the offending field.
    pub fn validate(&self) -> Result<(), SimError> {
        // The simulator keeps coordinates in u32 with room for the grid side.
        if self.bits_per_axis == 0 || self.bits_per_axis >= MAX_BITS_PER_AXIS {
            return invalid("bits_per_axis", format!("must be in 1..{MAX_BITS_PER_AXIS}"));
        }
        for (field, v) in [
            ("n_clients", self.n_clients),
            ("m_routers", self.m_routers),
            ("k_anonymity", self.k_anonymity),
            ("top_routers", self.top_routers),
            ("v_per_router", self.locations_per_router()),
        ] {
            if v == 0 {
                return invalid(field, "must be positive");
            }
        }
        if self.epochs == 0 {
            return invalid("epochs", "must be positive");
        }
        let cells = 1u128 << (2 * self.bits_per_axis);
        if (self.m_routers * self.locations_per_router()) as u128 > cells {
            return invalid("v_per_router", "more virtual locations than grid cells");
        }
        for (field, v) in [
            ("vehicle_origin_fraction", self.vehicle_origin_fraction),
            ("privacy_fraction", self.privacy_fraction),
            ("hotspot_fraction", self.hotspot_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return invalid(field, "must be in [0, 1]");
            }
        }
        if !(self.rebuild_fraction > 0.0 && self.rebuild_fraction.is_finite()) {
            return invalid("rebuild_fraction", "must be positive");
        }
        if let Some(l) = self.coarse_layer_length {
            if l >= 2 * self.bits_per_axis {
                return invalid("coarse_layer_length", format!("must be below {}", 2 * self.bits_per_axis));
            }
            if l > 16 || (1usize << l) > self.m_routers {
                return invalid("coarse_layer_length", "every region needs at least one router");
            }
            let per_region = self.m_routers.div_ceil(1 << l);
            if (per_region * self.locations_per_router()) as u128 > cells >> l {
                return invalid("v_per_router", "more virtual locations than region cells");
            }
        }
        if self.comparison_models.is_empty() {
            return invalid("comparison_models", "must not be empty");
        }
        if !self.comparison_models.contains(&Model::Distributed) {
            return invalid("comparison_models", "must include distributed");
        }
        let distinct: BTreeSet<_> = self.comparison_models.iter().collect();
        if distinct.len() != self.comparison_models.len() {
            return invalid("comparison_models", "duplicate model");
        }
        self.mobility.validate()?;
        if self.relevance.min_side == 0 {
            return invalid("relevance.min_side", "must be positive");
        }
        if self.max_side() < self.relevance.min_side || self.max_side() > self.grid_side() {
            return invalid("relevance.max_side", "must be in min_side..=grid side");
        }
        if let Some(p) = self.policy {
            if !matches!(self.mobility, MobilityModel::ScriptedTrips { .. }) {
                return invalid("policy", "requires scripted_trips mobility");
            }
            if let Err(e) = GranularityPolicy::new(p.origin, p.highway, p.destination) {
                return invalid("policy", e.to_string());
            }
        }
        let mut failed = BTreeSet::new();
        for (i, f) in self.failures.iter().enumerate() {
            if f.router as usize >= self.m_routers {
                return invalid(&format!("failures[{i}].router"), "no such router");
            }
            if f.epoch >= self.epochs {
                return invalid(&format!("failures[{i}].epoch"), "after the last epoch");
            }
            if !failed.insert(f.router) {
                return invalid(&format!("failures[{i}].router"), "fails twice");
            }
        }
        if failed.len() >= self.m_routers {
            return invalid("failures", "cannot fail every router");
        }
        Ok(())
    }
}
