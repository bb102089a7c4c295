//! Parametric model of the optical head: aperture gain, beam divergence,
//! wavefront-error Strehl loss, throughput, pointing loss and single-mode
//! receive coupling.

use std::f64::consts::PI;

use thiserror::Error;

/// Ideal coupling of a uniformly illuminated circular aperture into a
/// matched fundamental fibre mode.
pub const IDEAL_SMF_COUPLING: f64 = 0.81;
/// Default beacon 1/e² half-angle divergence, radians.
pub const DEFAULT_BEACON_DIVERGENCE_RAD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid optics parameter {field}: {reason}")]
pub struct OpticsError {
    pub field: &'static str,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelescopeSpec {
    pub aperture_m: f64,
    pub magnification: f64,
    /// RMS wavefront error in waves.
    pub wfe_waves_rms: f64,
    pub throughput: f64,
    pub wavelength_m: f64,
    /// Divergence scale `k` in `θ_w = k·λ/D`.
    pub divergence_factor: f64,
}

impl Default for TelescopeSpec {
    fn default() -> Self {
        Self {
            aperture_m: 0.09,
            magnification: 40.0,
            wfe_waves_rms: 1.0 / 19.0,
            throughput: 0.93,
            wavelength_m: 1.55e-6,
            divergence_factor: 1.0,
        }
    }
}

impl TelescopeSpec {
    pub fn validate(&self) -> Result<(), OpticsError> {
        let err = |field, reason: &str| {
            Err(OpticsError {
                field,
                reason: reason.to_string(),
            })
        };
        if !(self.aperture_m > 0.0) {
            return err("aperture_m", "must be > 0");
        }
        if !(self.magnification >= 1.0) {
            return err("magnification", "must be >= 1");
        }
        if !(self.wfe_waves_rms >= 0.0) {
            return err("wfe_waves_rms", "must be >= 0");
        }
        if !(self.throughput > 0.0 && self.throughput <= 1.0) {
            return err("throughput", "must be in (0, 1]");
        }
        if !(self.wavelength_m > 0.0) {
            return err("wavelength_m", "must be > 0");
        }
        if !(self.divergence_factor > 0.0) {
            return err("divergence_factor", "must be > 0");
        }
        Ok(())
    }

    pub fn gain_db(&self) -> f64 {
        antenna_gain(self.aperture_m, self.wavelength_m)
    }

    pub fn strehl(&self) -> f64 {
        strehl(self.wfe_waves_rms)
    }

    pub fn divergence(&self) -> f64 {
        divergence(self)
    }
}

/// Gaussian transmit beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamModel {
    pub divergence_rad: f64,
    pub power_w: f64,
}

impl BeamModel {
    pub fn new(divergence_rad: f64, power_w: f64) -> Result<Self, OpticsError> {
        if !(divergence_rad > 0.0) {
            return Err(OpticsError {
                field: "divergence_rad",
                reason: "must be > 0".into(),
            });
        }
        if !(power_w >= 0.0) {
            return Err(OpticsError {
                field: "power_w",
                reason: "must be >= 0".into(),
            });
        }
        Ok(Self {
            divergence_rad,
            power_w,
        })
    }

    /// On-axis gain of a Gaussian beam with 1/e² half-angle `θ`: `8/θ²`.
    pub fn gain_db(&self) -> f64 {
        to_db(8.0 / (self.divergence_rad * self.divergence_rad))
    }
}

/// Maréchal approximation `exp(-(2πσ)²)`, `σ` in waves RMS.
pub fn strehl(wfe_waves_rms: f64) -> f64 {
    let phase = 2.0 * PI * wfe_waves_rms;
    (-phase * phase).exp()
}

/// 1/e² half-angle divergence `k·λ/D` of the transmit beam.
pub fn divergence(spec: &TelescopeSpec) -> f64 {
    spec.divergence_factor * spec.wavelength_m / spec.aperture_m
}

/// Aperture gain `20·log10(πD/λ)` in dB.
pub fn antenna_gain(aperture_m: f64, wavelength_m: f64) -> f64 {
    20.0 * (PI * aperture_m / wavelength_m).log10()
}

/// Gaussian-beam pointing loss `10·log10(exp(-2(θ_err/θ_w)²))`, always ≤ 0 dB.
pub fn pointing_loss(error_rad: f64, divergence_rad: f64) -> f64 {
    let x = error_rad / divergence_rad;
    // 10*log10(e^y) = y * 10/ln(10)
    -2.0 * x * x * 10.0 / std::f64::consts::LN_10
}

/// Single-mode fibre coupling efficiency degraded by the wavefront Strehl.
pub fn coupling_efficiency(strehl: f64, base: f64) -> f64 {
    base * strehl
}

/// Power ratio to decibels.
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}
