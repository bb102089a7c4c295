use super::PatError;

/// Proportional-integral gains of a velocity-form loop (the PI output is an
/// actuator rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
}

impl PiGains {
    /// Gains placing the continuous closed-loop poles of an integrating
    /// actuator at natural frequency `bandwidth_hz` with damping `zeta`:
    /// `s² + kp·s + ki`.
    pub fn from_bandwidth(bandwidth_hz: f64, zeta: f64) -> Self {
        let w = 2.0 * std::f64::consts::PI * bandwidth_hz;
        Self {
            kp: 2.0 * zeta * w,
            ki: w * w,
        }
    }
}

/// Default gimbal loop: 2 Hz natural frequency, ζ = 1/√2.
pub const GIMBAL_BANDWIDTH_HZ: f64 = 2.0;
/// Default fine-pointing loop: 50 Hz natural frequency, ζ = 1/√2.
pub const FPM_BANDWIDTH_HZ: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PatConfig {
    pub coarse_fov_rad: f64,
    pub fine_fov_rad: f64,
    pub gimbal_rate_limit_rad_s: f64,
    pub gimbal_rate_hz: f64,
    pub gimbal_gains: PiGains,
    pub fpm_range_rad: f64,
    pub fpm_rate_hz: f64,
    pub fpm_gains: PiGains,
    pub coarse_noise_rad: f64,
    pub fine_noise_rad: f64,
    /// Consecutive coarse samples inside the fine FOV before handover.
    pub handover_dwell: u32,
    pub beacon_threshold_dbm: f64,
    /// Half-angle of the open-loop pointing uncertainty scanned in ACQUIRE.
    pub uncertainty_cone_rad: f64,
    /// Spiral pitch as a fraction of the coarse FOV (≤ 0.8).
    pub spiral_pitch_factor: f64,
    pub scan_rate_rad_s: f64,
    /// Fine-sensor RMS over the link window below which the link is declared.
    pub link_threshold_rad: f64,
    pub link_window_s: f64,
    /// LINKED falls back to FINE_TRACK above `link_threshold · unlink_factor`.
    pub unlink_factor: f64,
    pub fine_loop_enabled: bool,
    pub point_ahead_enabled: bool,
}

impl Default for PatConfig {
    fn default() -> Self {
        let sqrt_half = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            coarse_fov_rad: 2.5f64.to_radians(),
            fine_fov_rad: 1e-3,
            gimbal_rate_limit_rad_s: 0.35,
            gimbal_rate_hz: 100.0,
            gimbal_gains: PiGains::from_bandwidth(GIMBAL_BANDWIDTH_HZ, sqrt_half),
            fpm_range_rad: 2e-3,
            fpm_rate_hz: 1000.0,
            fpm_gains: PiGains::from_bandwidth(FPM_BANDWIDTH_HZ, sqrt_half),
            coarse_noise_rad: 20e-6,
            fine_noise_rad: 0.5e-6,
            handover_dwell: 50,
            beacon_threshold_dbm: -95.0,
            uncertainty_cone_rad: 10f64.to_radians(),
            spiral_pitch_factor: 0.8,
            scan_rate_rad_s: 0.175,
            link_threshold_rad: 5e-6,
            link_window_s: 1.0,
            unlink_factor: 2.0,
            fine_loop_enabled: true,
            point_ahead_enabled: true,
        }
    }
}

impl PatConfig {
    pub fn validate(&self) -> Result<(), PatError> {
        let bad = |field: &'static str, reason: String| Err(PatError::Config { field, reason });
        let positive = [
            ("coarse detector FOV (coarse_fov_rad)", self.coarse_fov_rad),
            ("fine detector FOV (fine_fov_rad)", self.fine_fov_rad),
            (
                "gimbal rate limit (gimbal_rate_limit_rad_s)",
                self.gimbal_rate_limit_rad_s,
            ),
            ("gimbal loop rate (gimbal_rate_hz)", self.gimbal_rate_hz),
            ("gimbal kp (gimbal_kp)", self.gimbal_gains.kp),
            ("gimbal ki (gimbal_ki)", self.gimbal_gains.ki),
            ("FPM range (fpm_range_rad)", self.fpm_range_rad),
            ("FPM loop rate (fpm_rate_hz)", self.fpm_rate_hz),
            ("FPM kp (fpm_kp)", self.fpm_gains.kp),
            ("FPM ki (fpm_ki)", self.fpm_gains.ki),
            (
                "uncertainty cone (uncertainty_cone_rad)",
                self.uncertainty_cone_rad,
            ),
            ("scan rate (scan_rate_rad_s)", self.scan_rate_rad_s),
            ("link threshold (link_threshold_rad)", self.link_threshold_rad),
            ("link window (link_window_s)", self.link_window_s),
        ];
        for (field, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return bad(field, format!("{v} must be finite and > 0"));
            }
        }
        if !(self.fine_fov_rad < self.coarse_fov_rad) {
            return bad(
                "fine detector FOV (fine_fov_rad)",
                format!(
                    "{} rad must be smaller than the coarse detector FOV {} rad",
                    self.fine_fov_rad, self.coarse_fov_rad
                ),
            );
        }
        if !(self.fpm_rate_hz >= self.gimbal_rate_hz) {
            return bad(
                "FPM loop rate (fpm_rate_hz)",
                "must be >= the gimbal loop rate".into(),
            );
        }
        let ratio = self.fpm_rate_hz / self.gimbal_rate_hz;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return bad(
                "gimbal loop rate (gimbal_rate_hz)",
                format!("FPM rate / gimbal rate = {ratio} is not an integer"),
            );
        }
        if !(self.spiral_pitch_factor > 0.0 && self.spiral_pitch_factor <= 0.8) {
            return bad(
                "spiral pitch (spiral_pitch_factor)",
                format!("{} must be in (0, 0.8]", self.spiral_pitch_factor),
            );
        }
        if self.scan_rate_rad_s > self.gimbal_rate_limit_rad_s {
            return bad(
                "scan rate (scan_rate_rad_s)",
                "must not exceed the gimbal rate limit".into(),
            );
        }
        if !(self.coarse_noise_rad >= 0.0) || !(self.fine_noise_rad >= 0.0) {
            return bad(
                "detector noise (coarse_noise_rad, fine_noise_rad)",
                "must be >= 0".into(),
            );
        }
        if self.handover_dwell == 0 {
            return bad("handover dwell (handover_dwell)", "must be > 0".into());
        }
        if !(self.unlink_factor >= 1.0) {
            return bad("unlink factor (unlink_factor)", "must be >= 1".into());
        }
        if !self.beacon_threshold_dbm.is_finite() {
            return bad(
                "beacon detection threshold (beacon_threshold_dbm)",
                "must be finite".into(),
            );
        }
        Ok(())
    }

    /// FPM ticks per gimbal update.
    pub fn gimbal_divider(&self) -> u64 {
        (self.fpm_rate_hz / self.gimbal_rate_hz).round() as u64
    }

    pub fn tick_s(&self) -> f64 {
        1.0 / self.fpm_rate_hz
    }

    pub fn spiral_pitch_rad(&self) -> f64 {
        self.spiral_pitch_factor * self.coarse_fov_rad
    }

    pub fn link_window_ticks(&self) -> usize {
        (self.link_window_s * self.fpm_rate_hz).round().max(1.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = PatConfig::default();
        c.validate().unwrap();
        assert_eq!(c.gimbal_divider(), 10);
        assert!((c.gimbal_gains.kp - 17.7715).abs() < 1e-3);
        assert!((c.fpm_gains.ki - 98_696.04).abs() < 0.01);
    }

    #[test]
    fn fine_fov_must_be_smaller() {
        let c = PatConfig {
            fine_fov_rad: 0.1,
            ..Default::default()
        };
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("fine detector FOV"), "{err}");
    }

    #[test]
    fn rates_must_divide() {
        let c = PatConfig {
            gimbal_rate_hz: 300.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = PatConfig {
            spiral_pitch_factor: 0.9,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
