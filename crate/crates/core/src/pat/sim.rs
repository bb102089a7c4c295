use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{Angle2, DisturbanceModel, DisturbanceProcess, Mode, PatConfig, PatError, PatInput, PatState};
use crate::optics::pointing_loss;

/// What the terminal knows about the counter-terminal at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosSample {
    pub los_rate: Angle2,
    pub point_ahead: Angle2,
    pub beacon_dbm: Option<f64>,
}

pub trait LineOfSight {
    fn sample(&mut self, t: f64) -> Result<LosSample, PatError>;
}

/// Fixed line of sight with a constant beacon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticLos {
    pub beacon_dbm: Option<f64>,
    pub point_ahead: Angle2,
}

impl StaticLos {
    pub fn new(beacon_dbm: f64) -> Self {
        Self {
            beacon_dbm: Some(beacon_dbm),
            point_ahead: Angle2::zeros(),
        }
    }
}

impl LineOfSight for StaticLos {
    fn sample(&mut self, _t: f64) -> Result<LosSample, PatError> {
        Ok(LosSample {
            los_rate: Angle2::zeros(),
            point_ahead: self.point_ahead,
            beacon_dbm: self.beacon_dbm,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatSample {
    pub t_s: f64,
    pub mode: Mode,
    pub gimbal: [f64; 2],
    pub fpm: [f64; 2],
    pub pam: [f64; 2],
    pub residual_rad: f64,
    pub tx_error_rad: f64,
    pub pointing_loss_db: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatTimeSeries {
    pub samples: Vec<PatSample>,
}

impl PatTimeSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t_s,mode,gimbal_x,gimbal_y,fpm_x,fpm_y,pam_x,pam_y,residual_rad,tx_error_rad,pointing_loss_db\n",
        );
        for s in &self.samples {
            out += &format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                s.t_s,
                s.mode,
                s.gimbal[0],
                s.gimbal[1],
                s.fpm[0],
                s.fpm[1],
                s.pam[0],
                s.pam[1],
                s.residual_rad,
                s.tx_error_rad,
                s.pointing_loss_db
            );
        }
        out
    }

    /// Mode changes as `(from, to)` pairs in time order.
    pub fn transitions(&self) -> Vec<(Mode, Mode)> {
        self.samples
            .windows(2)
            .filter(|w| w[0].mode != w[1].mode)
            .map(|w| (w[0].mode, w[1].mode))
            .collect()
    }

    pub fn first_time_in(&self, mode: Mode) -> Option<f64> {
        self.samples.iter().find(|s| s.mode == mode).map(|s| s.t_s)
    }
}

/// A PAT run in progress: state, disturbance realisation and sensor noise.
#[derive(Debug, Clone)]
pub struct PatSimulator {
    cfg: PatConfig,
    state: PatState,
    disturbance: DisturbanceProcess,
    noise: ChaCha8Rng,
    divergence_rad: f64,
}

impl PatSimulator {
    pub fn new(
        cfg: PatConfig,
        disturbance: DisturbanceModel,
        seed: u64,
        divergence_rad: f64,
    ) -> Result<Self, PatError> {
        cfg.validate()?;
        disturbance.validate()?;
        if !(divergence_rad > 0.0) {
            return Err(PatError::Config {
                field: "beam divergence",
                reason: format!("{divergence_rad} rad must be > 0"),
            });
        }
        Ok(Self {
            state: PatState::new(&cfg),
            cfg,
            disturbance: DisturbanceProcess::new(disturbance),
            noise: ChaCha8Rng::seed_from_u64(seed),
            divergence_rad,
        })
    }

    /// Start from a given state instead of IDLE.
    pub fn with_state(mut self, state: PatState) -> Self {
        self.state = state;
        self
    }

    pub fn state(&self) -> &PatState {
        &self.state
    }

    pub fn config(&self) -> &PatConfig {
        &self.cfg
    }

    fn gaussian2(&mut self, sigma: f64) -> Angle2 {
        let x: f64 = StandardNormal.sample(&mut self.noise);
        let y: f64 = StandardNormal.sample(&mut self.noise);
        Angle2::new(x, y) * sigma
    }

    /// Advance one FPM tick at time `t`.
    pub fn tick(&mut self, t: f64, los: &LosSample) -> Result<PatSample, PatError> {
        let dt = self.cfg.tick_s();
        let offset = self.disturbance.next(t, dt);
        let coarse_noise = self.gaussian2(self.cfg.coarse_noise_rad);
        let fine_noise = self.gaussian2(self.cfg.fine_noise_rad);
        let input = PatInput {
            los_offset: offset,
            los_rate: los.los_rate,
            beacon_dbm: los.beacon_dbm,
            coarse_noise,
            fine_noise,
            point_ahead: los.point_ahead,
        };
        self.state.advance(&self.cfg, &input, dt)?;
        let s = &self.state;
        let tx = s.tx_error.norm();
        Ok(PatSample {
            t_s: t,
            mode: s.mode,
            gimbal: [s.gimbal.x, s.gimbal.y],
            fpm: [s.fpm.x, s.fpm.y],
            pam: [s.pam.x, s.pam.y],
            residual_rad: s.residual.norm(),
            tx_error_rad: tx,
            pointing_loss_db: pointing_loss(tx, self.divergence_rad),
        })
    }
}

/// Timing of a PAT run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub start_s: f64,
    pub duration_s: f64,
    pub dt_s: f64,
    pub seed: u64,
    pub divergence_rad: f64,
}

/// Run the PAT chain, handing every tick's sample to `sink`.
pub fn run_with<L: LineOfSight>(
    los: &mut L,
    cfg: &PatConfig,
    disturbance: &DisturbanceModel,
    spec: RunSpec,
    mut sink: impl FnMut(&PatSample),
) -> Result<(), PatError> {
    if !(spec.duration_s > 0.0) {
        return Err(PatError::Config {
            field: "duration",
            reason: format!("{} s must be > 0", spec.duration_s),
        });
    }
    if (spec.dt_s * cfg.fpm_rate_hz - 1.0).abs() > 1e-9 {
        return Err(PatError::Config {
            field: "time step",
            reason: format!("dt = {} s must equal 1 / fpm_rate_hz", spec.dt_s),
        });
    }
    let mut sim = PatSimulator::new(cfg.clone(), disturbance.clone(), spec.seed, spec.divergence_rad)?;
    let n = (spec.duration_s / spec.dt_s).round() as u64;
    for k in 0..n {
        let t = spec.start_s + k as f64 * spec.dt_s;
        let l = los.sample(t)?;
        sink(&sim.tick(t, &l)?);
    }
    Ok(())
}

/// Run the PAT chain and collect every tick.
pub fn run<L: LineOfSight>(
    los: &mut L,
    cfg: &PatConfig,
    disturbance: &DisturbanceModel,
    spec: RunSpec,
) -> Result<PatTimeSeries, PatError> {
    let mut series = PatTimeSeries::default();
    run_with(los, cfg, disturbance, spec, |s| series.samples.push(*s))?;
    Ok(series)
}
