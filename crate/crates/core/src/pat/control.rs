use std::collections::VecDeque;

use super::{Angle2, Mode, PatConfig, PatError};

/// Everything the terminal sees or is told during one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatInput {
    /// True line of sight minus the predicted one.
    pub los_offset: Angle2,
    /// Rate of the predicted line of sight (gimbal feed-forward).
    pub los_rate: Angle2,
    /// Beacon power at the coarse detector; `None` when there is no beacon.
    pub beacon_dbm: Option<f64>,
    pub coarse_noise: Angle2,
    pub fine_noise: Angle2,
    /// Required transmit lead angle.
    pub point_ahead: Angle2,
}

impl PatInput {
    pub fn quiet(los_offset: Angle2, beacon_dbm: f64) -> Self {
        Self {
            los_offset,
            los_rate: Angle2::zeros(),
            beacon_dbm: Some(beacon_dbm),
            coarse_noise: Angle2::zeros(),
            fine_noise: Angle2::zeros(),
            point_ahead: Angle2::zeros(),
        }
    }
}

/// Sliding mean-square over the last `len` samples.
#[derive(Debug, Clone, PartialEq)]
struct RmsWindow {
    len: usize,
    buf: VecDeque<f64>,
    sum: f64,
    pushes: usize,
}

impl RmsWindow {
    fn new(len: usize) -> Self {
        Self {
            len,
            buf: VecDeque::with_capacity(len + 1),
            sum: 0.0,
            pushes: 0,
        }
    }

    fn clear(&mut self) {
        self.buf.clear();
        self.sum = 0.0;
        self.pushes = 0;
    }

    fn push(&mut self, sq: f64) {
        self.buf.push_back(sq);
        self.sum += sq;
        if self.buf.len() > self.len {
            self.sum -= self.buf.pop_front().unwrap_or(0.0);
        }
        self.pushes += 1;
        if self.pushes % self.len == 0 {
            // Drop accumulated round-off.
            self.sum = self.buf.iter().sum();
        }
    }

    fn rms(&self) -> Option<f64> {
        (self.buf.len() == self.len).then(|| (self.sum.max(0.0) / self.len as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatState {
    pub mode: Mode,
    pub tick: u64,
    /// Gimbal pointing relative to the predicted line of sight.
    pub gimbal: Angle2,
    pub gimbal_integrator: Angle2,
    pub fpm: Angle2,
    pub fpm_integrator: Angle2,
    pub pam: Angle2,
    pub coarse_meas: Option<Angle2>,
    pub fine_meas: Option<Angle2>,
    /// True receive boresight error (line of sight minus gimbal and FPM).
    pub residual: Angle2,
    /// Transmit pointing error including the point-ahead offset.
    pub tx_error: Angle2,
    gimbal_correction: Angle2,
    handover_count: u32,
    spiral_theta: f64,
    window: RmsWindow,
}

fn clip(v: Angle2, radius: f64) -> Angle2 {
    let n = v.norm();
    if n > radius {
        v * (radius / n)
    } else {
        v
    }
}

impl PatState {
    pub fn new(cfg: &PatConfig) -> Self {
        Self {
            mode: Mode::Idle,
            tick: 0,
            gimbal: Angle2::zeros(),
            gimbal_integrator: Angle2::zeros(),
            fpm: Angle2::zeros(),
            fpm_integrator: Angle2::zeros(),
            pam: Angle2::zeros(),
            coarse_meas: None,
            fine_meas: None,
            residual: Angle2::zeros(),
            tx_error: Angle2::zeros(),
            gimbal_correction: Angle2::zeros(),
            handover_count: 0,
            spiral_theta: 0.0,
            window: RmsWindow::new(cfg.link_window_ticks()),
        }
    }

    /// State already in `mode` with the gimbal at the predicted line of sight.
    pub fn in_mode(cfg: &PatConfig, mode: Mode) -> Self {
        Self {
            mode,
            ..Self::new(cfg)
        }
    }

    /// Fine-detector RMS over the link window, once the window is full.
    pub fn window_rms(&self) -> Option<f64> {
        self.window.rms()
    }

    /// Advance one tick, dispatching on the current mode. At most one mode
    /// transition happens per tick.
    pub fn advance(&mut self, cfg: &PatConfig, input: &PatInput, dt: f64) -> Result<(), PatError> {
        check_tick(cfg, dt)?;
        match self.mode {
            Mode::Idle | Mode::Lost => {
                self.mode = Mode::Acquire;
                self.spiral_theta = 0.0;
                self.reset_loops();
                self.update_errors(cfg, input);
                self.tick += 1;
                Ok(())
            }
            Mode::Acquire => self.acquire_step(cfg, input, dt),
            _ => self.track_step(cfg, input, dt),
        }
    }

    fn reset_loops(&mut self) {
        self.gimbal_integrator = Angle2::zeros();
        self.gimbal_correction = Angle2::zeros();
        self.fpm = Angle2::zeros();
        self.fpm_integrator = Angle2::zeros();
        self.handover_count = 0;
        self.coarse_meas = None;
        self.fine_meas = None;
        self.window.clear();
    }

    fn update_errors(&mut self, cfg: &PatConfig, input: &PatInput) {
        self.pam = if cfg.point_ahead_enabled {
            input.point_ahead
        } else {
            Angle2::zeros()
        };
        self.residual = input.los_offset - self.gimbal - self.fpm;
        self.tx_error = self.pam - input.point_ahead - self.residual;
    }

    fn beacon_ok(cfg: &PatConfig, input: &PatInput) -> bool {
        input.beacon_dbm.is_some_and(|p| p >= cfg.beacon_threshold_dbm)
    }

    /// One tick of the Archimedean spiral search around the predicted line
    /// of sight. The gimbal follows the scan ideally; the scan restarts from
    /// the centre once it has covered the uncertainty cone.
    pub fn acquire_step(&mut self, cfg: &PatConfig, input: &PatInput, dt: f64) -> Result<(), PatError> {
        if self.mode != Mode::Acquire {
            return Err(PatError::WrongMode {
                op: "acquire_step",
                found: self.mode,
            });
        }
        check_tick(cfg, dt)?;
        let pitch = cfg.spiral_pitch_rad();
        if cfg.uncertainty_cone_rad > cfg.coarse_fov_rad {
            // r = b·θ, ds = b·sqrt(1 + θ²)·dθ
            let b = pitch / (2.0 * std::f64::consts::PI);
            let th = self.spiral_theta;
            self.spiral_theta = th + cfg.scan_rate_rad_s * dt / (b * (1.0 + th * th).sqrt());
            if b * self.spiral_theta > cfg.uncertainty_cone_rad {
                self.spiral_theta = 0.0;
            }
            let (s, c) = self.spiral_theta.sin_cos();
            self.gimbal = Angle2::new(c, s) * (b * self.spiral_theta);
        } else {
            self.gimbal = Angle2::zeros();
        }
        self.fpm = Angle2::zeros();
        self.update_errors(cfg, input);
        if self.residual.norm() < cfg.coarse_fov_rad && Self::beacon_ok(cfg, input) {
            self.mode = Mode::CoarseTrack;
            self.reset_loops();
        }
        self.tick += 1;
        Ok(())
    }

    /// One tick of closed-loop tracking.
    pub fn track_step(&mut self, cfg: &PatConfig, input: &PatInput, dt: f64) -> Result<(), PatError> {
        if !self.mode.is_tracking() {
            return Err(PatError::WrongMode {
                op: "track_step",
                found: self.mode,
            });
        }
        check_tick(cfg, dt)?;
        let start_mode = self.mode;
        self.update_errors(cfg, input);

        let coarse_err = input.los_offset - self.gimbal;
        if !Self::beacon_ok(cfg, input) || coarse_err.norm() > cfg.coarse_fov_rad {
            self.mode = Mode::Lost;
            self.tick += 1;
            return Ok(());
        }

        // Coarse loop.
        if self.tick % cfg.gimbal_divider() == 0 {
            let t_g = 1.0 / cfg.gimbal_rate_hz;
            let meas = clip(coarse_err + input.coarse_noise, cfg.coarse_fov_rad);
            self.coarse_meas = Some(meas);
            let g = cfg.gimbal_gains;
            let mut integ = self.gimbal_integrator + meas * t_g;
            let mut u = meas * g.kp + integ * g.ki;
            for axis in 0..2 {
                let total = input.los_rate[axis] + u[axis];
                if total.abs() > cfg.gimbal_rate_limit_rad_s {
                    let limited = cfg.gimbal_rate_limit_rad_s.copysign(total);
                    u[axis] = limited - input.los_rate[axis];
                    // Conditional integration: stop winding into the limit.
                    if meas[axis].signum() == total.signum() {
                        integ[axis] = self.gimbal_integrator[axis];
                    }
                }
            }
            self.gimbal_integrator = integ;
            self.gimbal_correction = u;

            if self.mode == Mode::CoarseTrack {
                if meas.norm() < cfg.fine_fov_rad {
                    self.handover_count += 1;
                } else {
                    self.handover_count = 0;
                }
                if cfg.fine_loop_enabled && self.handover_count >= cfg.handover_dwell {
                    self.mode = Mode::FineTrack;
                    self.fpm = Angle2::zeros();
                    self.fpm_integrator = Angle2::zeros();
                    self.window.clear();
                }
            }
        }

        // Fine loop, only in the fine modes held since the start of the tick.
        if matches!(start_mode, Mode::FineTrack | Mode::Linked) {
            let fine_err = coarse_err - self.fpm;
            if fine_err.norm() > cfg.fine_fov_rad {
                self.fine_meas = None;
                if start_mode == Mode::Linked {
                    self.mode = Mode::FineTrack;
                } else {
                    self.mode = Mode::CoarseTrack;
                    self.fpm = Angle2::zeros();
                    self.fpm_integrator = Angle2::zeros();
                    self.handover_count = 0;
                    self.window.clear();
                }
            } else {
                let meas = clip(fine_err + input.fine_noise, cfg.fine_fov_rad);
                self.fine_meas = Some(meas);
                let g = cfg.fpm_gains;
                let mut integ = self.fpm_integrator + meas * dt;
                let u = meas * g.kp + integ * g.ki;
                let mut next = self.fpm + u * dt;
                for axis in 0..2 {
                    if next[axis].abs() > cfg.fpm_range_rad {
                        next[axis] = cfg.fpm_range_rad.copysign(next[axis]);
                        if meas[axis].signum() == next[axis].signum() {
                            integ[axis] = self.fpm_integrator[axis];
                        }
                    }
                }
                self.fpm = next;
                self.fpm_integrator = integ;
                self.window.push(meas.norm_squared());
                if let Some(rms) = self.window.rms() {
                    if start_mode == Mode::FineTrack && rms < cfg.link_threshold_rad {
                        self.mode = Mode::Linked;
                    } else if start_mode == Mode::Linked && rms > cfg.link_threshold_rad * cfg.unlink_factor {
                        self.mode = Mode::FineTrack;
                    }
                }
            }
        }

        // Gimbal motion: feed-forward plus the held correction, rate limited.
        for axis in 0..2 {
            let total = (input.los_rate[axis] + self.gimbal_correction[axis])
                .clamp(-cfg.gimbal_rate_limit_rad_s, cfg.gimbal_rate_limit_rad_s);
            self.gimbal[axis] += dt * (total - input.los_rate[axis]);
        }
        self.tick += 1;
        Ok(())
    }
}

fn check_tick(cfg: &PatConfig, dt: f64) -> Result<(), PatError> {
    if (dt * cfg.fpm_rate_hz - 1.0).abs() > 1e-9 {
        return Err(PatError::Config {
            field: "time step",
            reason: format!("dt = {dt} s must equal one FPM tick (1/{} s)", cfg.fpm_rate_hz),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1e-3;

    #[test]
    fn zero_error_detects_in_one_step() {
        let cfg = PatConfig::default();
        let mut s = PatState::in_mode(&cfg, Mode::Acquire);
        s.acquire_step(&cfg, &PatInput::quiet(Angle2::zeros(), -50.0), DT)
            .unwrap();
        assert_eq!(s.mode, Mode::CoarseTrack);
    }

    #[test]
    fn weak_beacon_never_detects() {
        let cfg = PatConfig::default();
        let mut s = PatState::in_mode(&cfg, Mode::Acquire);
        let input = PatInput::quiet(Angle2::zeros(), cfg.beacon_threshold_dbm - 1.0);
        for _ in 0..20_000 {
            s.acquire_step(&cfg, &input, DT).unwrap();
            assert_eq!(s.mode, Mode::Acquire);
        }
    }

    #[test]
    fn small_cone_stays_centred() {
        let cfg = PatConfig {
            uncertainty_cone_rad: 0.01,
            ..Default::default()
        };
        let mut s = PatState::in_mode(&cfg, Mode::Acquire);
        s.acquire_step(&cfg, &PatInput::quiet(Angle2::new(0.03, 0.0), -50.0), DT)
            .unwrap();
        assert_eq!(s.gimbal, Angle2::zeros());
        assert_eq!(s.mode, Mode::CoarseTrack);
    }

    #[test]
    fn wrong_mode_and_bad_dt_are_errors() {
        let cfg = PatConfig::default();
        let mut s = PatState::new(&cfg);
        let input = PatInput::quiet(Angle2::zeros(), -50.0);
        assert!(matches!(
            s.track_step(&cfg, &input, DT),
            Err(PatError::WrongMode { .. })
        ));
        let mut s = PatState::in_mode(&cfg, Mode::CoarseTrack);
        assert!(matches!(
            s.track_step(&cfg, &input, 2e-3),
            Err(PatError::Config { .. })
        ));
    }

    #[test]
    fn fpm_saturates_without_windup() {
        let cfg = PatConfig::default();
        let mut s = PatState::in_mode(&cfg, Mode::FineTrack);
        // Gimbal held away so the fine error sits just inside the fine FOV
        // and the mirror demand exceeds its range.
        let cfg = PatConfig {
            fine_fov_rad: 5e-3,
            gimbal_gains: super::super::PiGains { kp: 1e-9, ki: 1e-9 },
            ..cfg
        };
        let offset = Angle2::new(3e-3, -3e-3);
        let input = PatInput::quiet(offset, -50.0);
        let mut integ_at_sat = None;
        for k in 0..2000 {
            s.track_step(&cfg, &input, DT).unwrap();
            assert!(s.fpm.x.abs() <= cfg.fpm_range_rad && s.fpm.y.abs() <= cfg.fpm_range_rad);
            if s.fpm.x == cfg.fpm_range_rad && integ_at_sat.is_none() {
                integ_at_sat = Some((k, s.fpm_integrator));
            }
        }
        assert_eq!(s.fpm, Angle2::new(cfg.fpm_range_rad, -cfg.fpm_range_rad));
        let (_, i0) = integ_at_sat.expect("mirror saturates");
        assert_eq!(s.fpm_integrator, i0);
        // Once the demand drops the mirror leaves the stop immediately.
        let back = PatInput::quiet(s.gimbal, -50.0);
        s.track_step(&cfg, &back, DT).unwrap();
        assert!(s.fpm.x < cfg.fpm_range_rad);
    }

    #[test]
    fn lost_on_large_error_then_acquire() {
        let cfg = PatConfig::default();
        let mut s = PatState::in_mode(&cfg, Mode::CoarseTrack);
        let far = PatInput::quiet(Angle2::new(0.1, 0.0), -50.0);
        s.advance(&cfg, &far, DT).unwrap();
        assert_eq!(s.mode, Mode::Lost);
        s.advance(&cfg, &far, DT).unwrap();
        assert_eq!(s.mode, Mode::Acquire);
    }

    #[test]
    fn gimbal_respects_rate_limit() {
        let cfg = PatConfig::default();
        let mut s = PatState::in_mode(&cfg, Mode::CoarseTrack);
        let input = PatInput::quiet(Angle2::new(0.04, 0.0), -50.0);
        let mut prev = s.gimbal;
        for _ in 0..200 {
            s.track_step(&cfg, &input, DT).unwrap();
            assert!((s.gimbal - prev).x.abs() <= cfg.gimbal_rate_limit_rad_s * DT * (1.0 + 1e-12));
            prev = s.gimbal;
        }
    }

    #[test]
    fn window_rms() {
        let mut w = RmsWindow::new(4);
        for _ in 0..3 {
            w.push(4.0);
        }
        assert_eq!(w.rms(), None);
        w.push(4.0);
        assert_eq!(w.rms(), Some(2.0));
        for _ in 0..4 {
            w.push(1.0);
        }
        assert_eq!(w.rms(), Some(1.0));
    }
}
