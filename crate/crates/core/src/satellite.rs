//! Ground-satellite freespace links through an exponential atmosphere.
//!
//! The slant path is weighted by relative air density to get an effective
//! absorption distance, which then drives both the attenuation and the
//! diffraction spreading of the link.

use serde::{Deserialize, Serialize};

use crate::cost::{purify, swap_compose, to_physical, CostVector, PhysicalCost};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtmosphereModel {
    /// Sea-level density scale (relative units; cancels in the integral).
    pub rho0: f64,
    /// Reference altitude of the density profile, km.
    pub h0: f64,
    /// Density scale height, km.
    pub scale_height: f64,
    /// Attenuation per effective kilometer.
    pub beta: f64,
    /// Diffraction reference distance, km.
    pub d0: f64,
    /// Trapezoid intervals for the effective-distance integral.
    pub integration_steps: usize,
}

impl Default for AtmosphereModel {
    fn default() -> Self {
        AtmosphereModel {
            rho0: 1.0,
            h0: 0.0,
            scale_height: 8.0,
            beta: 0.02,
            d0: 100.0,
            integration_steps: 1000,
        }
    }
}

impl AtmosphereModel {
    pub fn density(&self, altitude: f64) -> f64 {
        self.rho0 * (-(altitude - self.h0) / self.scale_height).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho0 > 0.0
            && self.scale_height > 0.0
            && self.beta >= 0.0
            && self.d0 > 0.0
            && self.integration_steps >= 2
        {
            Ok(())
        } else {
            Err(Error::InvalidAtmosphere)
        }
    }
}

fn euclid(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let dz = b[2] - a[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Density-weighted path length between two points: the trapezoid rule on
/// `integral of rho(h(x)) / rho0 dx` along the straight line, where altitude
/// is the z coordinate. `steps >= 2` intervals.
pub fn effective_distance(a: [f64; 3], b: [f64; 3], model: &AtmosphereModel, steps: usize) -> f64 {
    let length = euclid(a, b);
    if length == 0.0 {
        return 0.0;
    }
    let steps = steps.max(2);
    let dz = (b[2] - a[2]) / length;
    let dx = length / steps as f64;
    let mut sum = 0.5 * (model.density(a[2]) + model.density(b[2]));
    for i in 1..steps {
        let x = i as f64 * dx;
        sum += model.density(a[2] + x * dz);
    }
    sum * dx / model.rho0
}

/// Physical cost of a freespace leg with effective distance `d`:
/// `eta = exp(-beta d) * d0^2 / (d + d0)^2`, `F = (1 + exp(-beta d)) / 2`.
pub fn freespace_cost(d: f64, model: &AtmosphereModel) -> PhysicalCost {
    let absorb = (-model.beta * d).exp();
    let spread = model.d0 * model.d0 / ((d + model.d0) * (d + model.d0));
    PhysicalCost::new(absorb * spread, (1.0 + absorb) / 2.0)
        .expect("freespace figures lie in domain for d >= 0")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PassConfig {
    pub ground_a: [f64; 3],
    pub ground_b: [f64; 3],
    /// Fixed ground-to-ground channel the pass is compared against.
    pub static_cost: CostVector,
    pub satellite_start: [f64; 3],
    /// Kilometers per time step.
    pub satellite_velocity: [f64; 3],
    /// Number of samples; t runs from 0 to `time_steps - 1`.
    pub time_steps: usize,
    pub model: AtmosphereModel,
}

impl Default for PassConfig {
    /// An illustrative overhead pass: closest approach at t = 5 of 11 steps.
    fn default() -> Self {
        PassConfig {
            ground_a: [-50.0, 0.0, 0.0],
            ground_b: [50.0, 0.0, 0.0],
            static_cost: CostVector::new(5.0, 5.0).expect("constant"),
            satellite_start: [-500.0, 0.0, 500.0],
            satellite_velocity: [100.0, 0.0, 0.0],
            time_steps: 11,
            model: AtmosphereModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PassSample {
    pub t: u64,
    /// The fixed channel, converted once.
    pub static_link: PhysicalCost,
    /// Swap of the two ground-satellite legs.
    pub freespace: PhysicalCost,
    /// Purification of the static channel with the freespace channel.
    pub purified: PhysicalCost,
}

/// Simulates a satellite pass: per time step, both ground-satellite legs are
/// integrated through the atmosphere, swapped into an end-to-end freespace
/// channel, and purified against the static channel.
pub fn simulate_pass(config: &PassConfig) -> Result<Vec<PassSample>> {
    config.model.validate()?;
    if config.time_steps == 0 {
        return Err(Error::InvalidConfig("pass needs at least one time step".into()));
    }
    let static_link = to_physical(config.static_cost);
    let mut samples = Vec::with_capacity(config.time_steps);
    for t in 0..config.time_steps as u64 {
        let sat = [
            config.satellite_start[0] + t as f64 * config.satellite_velocity[0],
            config.satellite_start[1] + t as f64 * config.satellite_velocity[1],
            config.satellite_start[2] + t as f64 * config.satellite_velocity[2],
        ];
        let steps = config.model.integration_steps;
        let leg_a = freespace_cost(effective_distance(config.ground_a, sat, &config.model, steps), &config.model);
        let leg_b = freespace_cost(effective_distance(config.ground_b, sat, &config.model, steps), &config.model);
        let freespace = swap_compose(leg_a, leg_b);
        samples.push(PassSample {
            t,
            static_link,
            freespace,
            purified: purify(static_link, freespace),
        });
    }
    Ok(samples)
}
