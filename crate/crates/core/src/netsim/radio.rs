use serde::{Deserialize, Serialize};

use crate::world::WorldModel;
use crate::Point;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioProfile {
    pub band_label: String,
    /// Loss at the 1 m reference distance, dB.
    pub ref_loss_at_1m: f64,
    pub path_loss_exponent: f64,
    /// Scales each crossed wall's own attenuation.
    pub per_wall_loss_multiplier: f64,
    /// Largest usable loss, dB.
    pub link_budget: f64,
    /// Bits per second.
    pub capacity: f64,
    /// Per-hop latency after the last bit is sent, seconds.
    pub base_latency: f64,
}

impl RadioProfile {
    /// Low band: open-field range of about 109 m, walls cost their face value.
    pub fn band_915mhz() -> Self {
        Self {
            band_label: "915 MHz".into(),
            ref_loss_at_1m: 40.0,
            path_loss_exponent: 2.7,
            per_wall_loss_multiplier: 1.0,
            link_budget: 95.0,
            capacity: 4.0e6,
            base_latency: 0.005,
        }
    }

    /// High band: more throughput, poor wall penetration.
    pub fn band_5ghz() -> Self {
        Self {
            band_label: "5 GHz".into(),
            ref_loss_at_1m: 46.0,
            path_loss_exponent: 2.2,
            per_wall_loss_multiplier: 3.0,
            link_budget: 92.0,
            capacity: 40.0e6,
            base_latency: 0.002,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.path_loss_exponent > 0.0) {
            return Err("path_loss_exponent must be > 0".into());
        }
        if !(self.capacity > 0.0) {
            return Err("capacity must be > 0".into());
        }
        if !(self.base_latency >= 0.0) || !(self.per_wall_loss_multiplier >= 0.0) {
            return Err("base_latency and per_wall_loss_multiplier must be >= 0".into());
        }
        if !self.ref_loss_at_1m.is_finite() || !self.link_budget.is_finite() {
            return Err("losses must be finite".into());
        }
        Ok(())
    }

    /// Path loss over `distance` meters with `wall_loss` dB of walls.
    pub fn loss(&self, distance: f64, wall_loss: f64) -> f64 {
        self.ref_loss_at_1m + 10.0 * self.path_loss_exponent * distance.max(1.0).log10() + self.per_wall_loss_multiplier * wall_loss
    }

    /// Longest open-field distance whose loss stays within budget.
    pub fn open_field_range(&self) -> f64 {
        10f64.powf((self.link_budget - self.ref_loss_at_1m) / (10.0 * self.path_loss_exponent))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioNode {
    pub id: String,
    pub position: Point,
    pub profile: RadioProfile,
}

/// Loss between two nodes; with differing profiles the lossier one rules.
/// Returns the loss and the governing profile.
pub fn link_loss<'a>(world: &WorldModel, a: &'a RadioNode, b: &'a RadioNode) -> (f64, &'a RadioProfile) {
    let d = a.position.distance(b.position);
    let walls = if a.position == b.position {
        0.0
    } else {
        world.walls_between(a.position, b.position)
    };
    let la = a.profile.loss(d, walls);
    let lb = b.profile.loss(d, walls);
    if lb > la {
        (lb, &b.profile)
    } else {
        (la, &a.profile)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub a: String,
    pub b: String,
    pub loss: f64,
    pub budget: f64,
    pub up: bool,
    /// Bits per second; zero while down.
    pub effective_capacity: f64,
    pub latency: f64,
    pub forced_down: bool,
}
