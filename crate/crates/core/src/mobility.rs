//! UAV motion inside the cell and the stochastic link dynamics
//! (Rician-factor resampling and communication interruptions).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::Position;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry {
    pub cell_radius_m: f64,
    pub bs_height_m: f64,
    pub alt_min_m: f64,
    pub alt_max_m: f64,
}

impl Default for CellGeometry {
    fn default() -> Self {
        Self {
            cell_radius_m: 500.0,
            bs_height_m: 20.0,
            alt_min_m: 20.0,
            alt_max_m: 80.0,
        }
    }
}

impl CellGeometry {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.cell_radius_m > 0.0) {
            errs.push(format!("cell_radius must be > 0 (got {})", self.cell_radius_m));
        }
        if !(self.alt_min_m <= self.alt_max_m) {
            errs.push(format!(
                "alt_min ({}) must not exceed alt_max ({})",
                self.alt_min_m, self.alt_max_m
            ));
        }
        if !self.bs_height_m.is_finite() {
            errs.push("bs_height must be finite".to_string());
        }
        errs
    }

    pub fn bs_position(&self) -> Position {
        Position::new(0.0, 0.0, self.bs_height_m)
    }

    pub fn contains(&self, p: Position) -> bool {
        p.is_finite()
            && p.horizontal_radius() <= self.cell_radius_m
            && p.z >= self.alt_min_m
            && p.z <= self.alt_max_m
    }

    /// Uniform draw over the flying cylinder.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        let r = self.cell_radius_m * rng.random::<f64>().sqrt();
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        let z = if self.alt_max_m > self.alt_min_m {
            rng.random_range(self.alt_min_m..=self.alt_max_m)
        } else {
            self.alt_min_m
        };
        Position::new(r * phi.cos(), r * phi.sin(), z)
    }

    fn clamp(&self, mut p: Position) -> Position {
        let r = p.horizontal_radius();
        if r > self.cell_radius_m {
            let s = self.cell_radius_m / r;
            p.x *= s;
            p.y *= s;
        }
        p.z = p.z.clamp(self.alt_min_m, self.alt_max_m);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavState {
    pub id: usize,
    pub position: Position,
    pub waypoint: Position,
    pub speed_mps: f64,
    pub k_db: f64,
    /// Communication interruption for the current round.
    pub interrupted: bool,
    /// First epoch (1-based) at which an interrupted link is down.
    pub interrupt_epoch: Option<usize>,
    /// Compute-limited UAVs are scheduled with split learning.
    pub sl_required: bool,
    pub compute_s_per_sample: f64,
    pub partition_id: usize,
}

/// Random-waypoint step: advance `speed·dt` meters along the path, drawing a
/// fresh waypoint each time the current one is reached.
pub fn step_position<R: Rng + ?Sized>(
    uav: &UavState,
    geometry: &CellGeometry,
    dt: f64,
    rng: &mut R,
) -> UavState {
    let mut next = uav.clone();
    let mut remaining = uav.speed_mps * dt;
    // a handful of waypoint hops per step is plenty; cap guards degenerate cells
    let mut hops = 0;
    while remaining > 0.0 && hops < 64 {
        let dx = next.waypoint.x - next.position.x;
        let dy = next.waypoint.y - next.position.y;
        let dz = next.waypoint.z - next.position.z;
        let dist = (dx * dx + dy * dy + dz * dz).sqrt();
        if dist > remaining {
            let f = remaining / dist;
            next.position = geometry.clamp(Position::new(
                next.position.x + f * dx,
                next.position.y + f * dy,
                next.position.z + f * dz,
            ));
            remaining = 0.0;
        } else {
            next.position = next.waypoint;
            remaining -= dist;
            next.waypoint = geometry.sample_uniform(rng);
            hops += 1;
        }
    }
    next
}

pub fn resample_k<R: Rng + ?Sized>(rng: &mut R, k_min_db: f64, k_max_db: f64) -> f64 {
    if k_max_db > k_min_db {
        rng.random_range(k_min_db..=k_max_db)
    } else {
        k_min_db
    }
}

pub fn sample_interruption<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Uniform epoch in `1..=epochs` at which an interrupted link goes down.
pub fn sample_interruption_epoch<R: Rng + ?Sized>(rng: &mut R, epochs: usize) -> usize {
    rng.random_range(1..=epochs)
}

/// Parameters for placing a fresh fleet.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetSpec {
    pub num_uavs: usize,
    pub speed_mps: f64,
    pub sl_fraction: f64,
    pub compute_s_per_sample: f64,
    pub limited_compute_s_per_sample: f64,
    pub k_min_db: f64,
    pub k_max_db: f64,
}

/// Uniform initial placement; `round(sl_fraction · n)` UAVs are marked
/// compute-limited.
pub fn init_fleet<R: Rng + ?Sized>(
    spec: &FleetSpec,
    geometry: &CellGeometry,
    rng: &mut R,
) -> Vec<UavState> {
    let n = spec.num_uavs;
    let limited = ((spec.sl_fraction * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut is_limited = vec![false; n];
    for &i in &order[..limited] {
        is_limited[i] = true;
    }
    (0..n)
        .map(|id| {
            let position = geometry.sample_uniform(rng);
            let waypoint = geometry.sample_uniform(rng);
            let k_db = resample_k(rng, spec.k_min_db, spec.k_max_db);
            UavState {
                id,
                position,
                waypoint,
                speed_mps: spec.speed_mps,
                k_db,
                interrupted: false,
                interrupt_epoch: None,
                sl_required: is_limited[id],
                compute_s_per_sample: if is_limited[id] {
                    spec.limited_compute_s_per_sample
                } else {
                    spec.compute_s_per_sample
                },
                partition_id: id,
            }
        })
        .collect()
}
