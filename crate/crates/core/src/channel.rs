//! Air-to-ground link chain: geometry, LOS probability, path loss, Rician
//! gain and achievable rate.
//!
//! Angles are degrees, distances meters, powers dBm at the boundary and
//! rates bits per second. Every function here is pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{db_to_linear, dbm_to_mw};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn horizontal_radius(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// How the receiver noise power is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// Spectral density in dBm/Hz, scaled by the allocated bandwidth.
    DensityDbmPerHz(f64),
    /// Literal total noise power in dBm, independent of bandwidth.
    TotalDbm(f64),
}

impl NoiseModel {
    /// Noise power in milliwatts over `bandwidth_hz`.
    pub fn power_mw(&self, bandwidth_hz: f64) -> f64 {
        match *self {
            NoiseModel::DensityDbmPerHz(d) => dbm_to_mw(d) * bandwidth_hz,
            NoiseModel::TotalDbm(p) => dbm_to_mw(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEnvironment {
    pub a0: f64,
    pub b0: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
    pub carrier_hz: f64,
    pub light_speed: f64,
    pub uav_bandwidth_hz: f64,
    pub uav_power_dbm: f64,
    pub bs_bandwidth_hz: f64,
    pub bs_power_dbm: f64,
    pub noise: NoiseModel,
    /// Power of the distance inside the free-space bracket. The printed
    /// air-to-ground formula uses `d²` (2.0); 1.0 gives textbook FSPL.
    pub fspl_exponent: f64,
}

impl Default for ChannelEnvironment {
    fn default() -> Self {
        Self {
            a0: 5.0188,
            b0: 0.3511,
            eta_los_db: 21.0,
            eta_nlos_db: 1.0,
            carrier_hz: 2.0e9,
            light_speed: SPEED_OF_LIGHT,
            uav_bandwidth_hz: 10.0e6,
            uav_power_dbm: 24.0,
            bs_bandwidth_hz: 5.0e6,
            bs_power_dbm: 40.0,
            noise: NoiseModel::DensityDbmPerHz(-174.0),
            fspl_exponent: 2.0,
        }
    }
}

impl ChannelEnvironment {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.a0 > 0.0) {
            errs.push(format!("a0 must be > 0 (got {})", self.a0));
        }
        if !(self.b0 >= 0.0) {
            errs.push(format!("b0 must be >= 0 (got {})", self.b0));
        }
        if !(self.carrier_hz > 0.0) {
            errs.push(format!("carrier_hz must be > 0 (got {})", self.carrier_hz));
        }
        if !(self.light_speed > 0.0) {
            errs.push("light_speed must be > 0".to_string());
        }
        if !(self.uav_bandwidth_hz > 0.0) {
            errs.push(format!("bw_uav_hz must be > 0 (got {})", self.uav_bandwidth_hz));
        }
        if !(self.bs_bandwidth_hz > 0.0) {
            errs.push(format!("bw_bs_hz must be > 0 (got {})", self.bs_bandwidth_hz));
        }
        if !(self.fspl_exponent > 0.0) {
            errs.push(format!("fspl_exponent must be > 0 (got {})", self.fspl_exponent));
        }
        errs
    }

    /// Uplink rate (UAV → BS) for a given gain and bandwidth share.
    pub fn uplink_rate_bps(&self, n: f64, gain: f64) -> f64 {
        let noise = self.noise.power_mw(n * self.uav_bandwidth_hz);
        shannon_rate_bps(n, self.uav_bandwidth_hz, gain, dbm_to_mw(self.uav_power_dbm), noise)
    }

    /// Downlink rate (BS → UAV), same gain by reciprocity.
    pub fn downlink_rate_bps(&self, n: f64, gain: f64) -> f64 {
        let noise = self.noise.power_mw(n * self.bs_bandwidth_hz);
        shannon_rate_bps(n, self.bs_bandwidth_hz, gain, dbm_to_mw(self.bs_power_dbm), noise)
    }
}

/// One evaluation of the full chain for a UAV at an instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSample {
    pub distance_m: f64,
    pub elevation_deg: f64,
    pub p_los: f64,
    pub path_loss_dbm: f64,
    pub los_amplitude: f64,
    pub nlos_amplitude: f64,
    pub gain: f64,
    pub rate_bps: f64,
}

pub fn distance(uav: Position, bs: Position) -> f64 {
    let dx = uav.x - bs.x;
    let dy = uav.y - bs.y;
    let dz = uav.z - bs.z;
    (dx * dx + dy * dy + dz * dz).sqrt()
}

pub fn elevation_angle_deg(uav: Position, bs: Position) -> Result<f64> {
    let d = distance(uav, bs);
    if !(d > 0.0) {
        return Err(Error::domain("elevation undefined at zero distance"));
    }
    // |dz| <= d up to rounding; clamp keeps asin in its domain.
    let ratio = ((uav.z - bs.z).abs() / d).min(1.0);
    Ok(ratio.asin().to_degrees())
}

pub fn los_probability(theta_deg: f64, env: &ChannelEnvironment) -> f64 {
    1.0 / (1.0 + env.a0 * (-env.b0 * (theta_deg - env.a0)).exp())
}

pub fn path_loss_dbm(p_los: f64, distance_m: f64, env: &ChannelEnvironment) -> Result<f64> {
    if !(p_los > 0.0 && p_los <= 1.0) {
        return Err(Error::domain(format!("LOS probability must lie in (0, 1], got {p_los}")));
    }
    if !(distance_m > 0.0) {
        return Err(Error::domain(format!("distance must be > 0, got {distance_m}")));
    }
    let bracket = 4.0 * std::f64::consts::PI * distance_m.powf(env.fspl_exponent) * env.carrier_hz
        / env.light_speed;
    Ok(-(env.eta_los_db - env.eta_nlos_db) / p_los
        - 10.0 * (bracket * bracket).log10()
        - env.eta_nlos_db)
}

/// LOS and scattered amplitudes `(v, s)` for a linear Rician factor.
pub fn rician_amplitudes(k_linear: f64) -> Result<(f64, f64)> {
    if !(k_linear >= 0.0) {
        return Err(Error::domain(format!("Rician factor must be >= 0, got {k_linear}")));
    }
    if k_linear.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let v = (k_linear / (k_linear + 1.0)).sqrt();
    let s = (1.0 / (2.0 * (k_linear + 1.0))).sqrt();
    Ok((v, s))
}

pub fn channel_gain(path_loss_dbm: f64, k_linear: f64) -> Result<f64> {
    let (v, s) = rician_amplitudes(k_linear)?;
    Ok(db_to_linear(path_loss_dbm) * (v + s))
}

/// `n·B·log2(1 + g·P/σ²)` with every quantity already linear.
pub fn shannon_rate_bps(n: f64, bandwidth_hz: f64, gain: f64, power_mw: f64, noise_mw: f64) -> f64 {
    let snr = gain * power_mw / noise_mw;
    n * bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2
}

/// Rate with noise given as a density over the allocated bandwidth `n·B`.
pub fn transmission_rate_bps(
    n: f64,
    bandwidth_hz: f64,
    gain: f64,
    power_dbm: f64,
    noise_dbm_per_hz: f64,
) -> f64 {
    let noise = dbm_to_mw(noise_dbm_per_hz) * n * bandwidth_hz;
    shannon_rate_bps(n, bandwidth_hz, gain, dbm_to_mw(power_dbm), noise)
}

/// Chains every stage for one UAV; `k_db` is converted to linear first.
pub fn link_sample(
    uav: Position,
    bs: Position,
    k_db: f64,
    n: f64,
    env: &ChannelEnvironment,
) -> Result<LinkSample> {
    let distance_m = distance(uav, bs);
    let elevation_deg = elevation_angle_deg(uav, bs)?;
    let p_los = los_probability(elevation_deg, env);
    let path_loss_dbm = path_loss_dbm(p_los, distance_m, env)?;
    let k_linear = db_to_linear(k_db);
    let (los_amplitude, nlos_amplitude) = rician_amplitudes(k_linear)?;
    let gain = channel_gain(path_loss_dbm, k_linear)?;
    let rate_bps = env.uplink_rate_bps(n, gain);
    Ok(LinkSample {
        distance_m,
        elevation_deg,
        p_los,
        path_loss_dbm,
        los_amplitude,
        nlos_amplitude,
        gain,
        rate_bps,
    })
}
