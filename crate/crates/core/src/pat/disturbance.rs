use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Angle2, PatError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude_x_rad: f64,
    pub amplitude_y_rad: f64,
    pub frequency_hz: f64,
    pub phase_rad: f64,
}

/// Platform pointing disturbance: the offset of the true line of sight from
/// the ephemeris-predicted one, in the terminal's two tracking axes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisturbanceModel {
    pub bias_x_rad: f64,
    pub bias_y_rad: f64,
    /// Per-axis random-walk density, rad/√s.
    pub random_walk_sigma: f64,
    pub sinusoids: Vec<Sinusoid>,
    pub seed: u64,
}

impl DisturbanceModel {
    pub fn validate(&self) -> Result<(), PatError> {
        let bad = |reason: &str| {
            Err(PatError::Config {
                field: "disturbance",
                reason: reason.into(),
            })
        };
        if !(self.random_walk_sigma >= 0.0) {
            return bad("random_walk_sigma must be >= 0");
        }
        if !self.bias_x_rad.is_finite() || !self.bias_y_rad.is_finite() {
            return bad("bias must be finite");
        }
        for s in &self.sinusoids {
            if !(s.amplitude_x_rad >= 0.0 && s.amplitude_y_rad >= 0.0) {
                return bad("sinusoid amplitudes must be >= 0");
            }
            if !(s.frequency_hz >= 0.0) || !s.phase_rad.is_finite() {
                return bad("sinusoid frequency must be >= 0 and phase finite");
            }
        }
        Ok(())
    }

    pub fn bias(&self) -> Angle2 {
        Angle2::new(self.bias_x_rad, self.bias_y_rad)
    }
}

/// Sequential realisation of a [`DisturbanceModel`].
#[derive(Debug, Clone)]
pub struct DisturbanceProcess {
    model: DisturbanceModel,
    rng: ChaCha8Rng,
    walk: Angle2,
}

impl DisturbanceProcess {
    pub fn new(model: DisturbanceModel) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(model.seed);
        Self {
            model,
            rng,
            walk: Angle2::zeros(),
        }
    }

    /// Offset at time `t`, advancing the random walk by `dt` first.
    pub fn next(&mut self, t: f64, dt: f64) -> Angle2 {
        if self.model.random_walk_sigma > 0.0 {
            let s = self.model.random_walk_sigma * dt.sqrt();
            let zx: f64 = StandardNormal.sample(&mut self.rng);
            let zy: f64 = StandardNormal.sample(&mut self.rng);
            self.walk += Angle2::new(zx, zy) * s;
        }
        let mut d = self.model.bias() + self.walk;
        for s in &self.model.sinusoids {
            let arg = 2.0 * std::f64::consts::PI * s.frequency_hz * t + s.phase_rad;
            d += Angle2::new(s.amplitude_x_rad, s.amplitude_y_rad) * arg.sin();
        }
        d
    }
}
