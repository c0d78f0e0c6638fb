use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::privacy::TripPhase;
use crate::sim::SimError;
use crate::zorder::GridPoint;

fn default_speed() -> u32 {
    8
}

fn default_phase_epochs() -> u64 {
    2
}

/// How vehicles move between epochs. Both models drive each vehicle towards
/// a target by at most `speed` cells per axis and draw a new target on
/// arrival; scripted trips also track the trip phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum MobilityModel {
    RandomWaypoint {
        #[serde(default = "default_speed")]
        speed: u32,
    },
    ScriptedTrips {
        #[serde(default = "default_speed")]
        speed: u32,
        /// Epochs after departure spent in the origin phase.
        #[serde(default = "default_phase_epochs")]
        origin_epochs: u64,
        /// Epochs before arrival spent in the destination phase.
        #[serde(default = "default_phase_epochs")]
        destination_epochs: u64,
    },
}

impl Default for MobilityModel {
    fn default() -> Self {
        Self::RandomWaypoint { speed: default_speed() }
    }
}

/// Simulator-side state of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vehicle {
    pub pos: GridPoint,
    pub target: GridPoint,
    /// Epochs since the current trip started.
    pub trip_epoch: u64,
    /// Hotspot vehicles keep their targets in the lower-left quadrant.
    pub hotspot: bool,
}

/// Uniform cell, restricted to the lower-left quadrant for hotspot vehicles.
pub fn random_point<R: Rng>(rng: &mut R, bits_per_axis: u8, hotspot: bool) -> GridPoint {
    let side = 1u32 << bits_per_axis;
    let span = if hotspot { (side / 2).max(1) } else { side };
    GridPoint::new(rng.random_range(0..span), rng.random_range(0..span), bits_per_axis).expect("inside the grid")
}

fn approach(from: u32, to: u32, speed: u32) -> u32 {
    if from < to {
        from + (to - from).min(speed)
    } else {
        from - (from - to).min(speed)
    }
}

impl MobilityModel {
    pub fn speed(&self) -> u32 {
        match *self {
            Self::RandomWaypoint { speed } | Self::ScriptedTrips { speed, .. } => speed,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), SimError> {
        if self.speed() == 0 {
            return Err(SimError::Config {
                field: "mobility.speed".into(),
                message: "must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn spawn<R: Rng>(&self, rng: &mut R, bits_per_axis: u8, hotspot: bool) -> Vehicle {
        Vehicle {
            pos: random_point(rng, bits_per_axis, hotspot),
            target: random_point(rng, bits_per_axis, hotspot),
            trip_epoch: 0,
            hotspot,
        }
    }

    /// Advances one epoch. Arriving vehicles start a new trip.
    pub fn step<R: Rng>(&self, v: &mut Vehicle, rng: &mut R) {
        let speed = self.speed();
        let bits = v.pos.bits_per_axis;
        v.pos = GridPoint::new(approach(v.pos.x, v.target.x, speed), approach(v.pos.y, v.target.y, speed), bits)
            .expect("between two grid cells");
        v.trip_epoch += 1;
        if v.pos == v.target {
            v.target = random_point(rng, bits, v.hotspot);
            v.trip_epoch = 0;
        }
    }

    /// Trip phase; random waypoint vehicles are always on the highway.
    pub fn phase(&self, v: &Vehicle) -> TripPhase {
        match *self {
            Self::RandomWaypoint { .. } => TripPhase::Highway,
            Self::ScriptedTrips { speed, origin_epochs, destination_epochs } => {
                let dist = v.pos.x.abs_diff(v.target.x).max(v.pos.y.abs_diff(v.target.y));
                let remaining = u64::from(dist.div_ceil(speed));
                if v.trip_epoch < origin_epochs {
                    TripPhase::Origin
                } else if remaining <= destination_epochs {
                    TripPhase::Destination
                } else {
                    TripPhase::Highway
                }
            }
        }
    }
}
