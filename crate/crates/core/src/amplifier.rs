//! Thermal-power model of the two-stage EDFA.
//!
//! The case temperature relaxes exponentially towards `T_env + ΔT_ss` with
//! time constant `τ`, and the output power falls linearly with temperature:
//! `P = max(0, P0 − c·(T − T_ref))`.

use thiserror::Error;

/// Power floor the amplifier must hold during a link, watts.
pub const DEFAULT_POWER_FLOOR_W: f64 = 2.0;
/// Typical LEO-ground pass duration used for calibration, seconds.
pub const TYPICAL_PASS_S: f64 = 360.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmplifierError {
    #[error("invalid EDFA parameter {field}: {reason}")]
    InvalidModel { field: &'static str, reason: String },
    #[error("infeasible calibration: constraint {constraint} violated ({detail})")]
    Infeasible {
        constraint: &'static str,
        detail: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdfaModel {
    pub initial_power_w: f64,
    pub slope_w_per_c: f64,
    pub time_constant_s: f64,
    pub self_heating_c: f64,
    pub reference_temp_c: f64,
    pub ambient_temp_c: f64,
}

impl Default for EdfaModel {
    /// Default free parameters with the slope left at zero; run
    /// [`calibrate`] to obtain the calibrated default model.
    fn default() -> Self {
        Self {
            initial_power_w: 2.5,
            slope_w_per_c: 0.0,
            time_constant_s: 1200.0,
            self_heating_c: 20.0,
            reference_temp_c: 25.0,
            ambient_temp_c: 25.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdfaState {
    pub t_s: f64,
    pub temp_c: f64,
    pub power_w: f64,
}

impl EdfaModel {
    pub fn validate(&self) -> Result<(), AmplifierError> {
        let bad = |field, reason: &str| {
            Err(AmplifierError::InvalidModel {
                field,
                reason: reason.into(),
            })
        };
        if !(self.initial_power_w > 0.0) {
            return bad("initial_power_w", "must be > 0");
        }
        if !(self.time_constant_s > 0.0) {
            return bad("time_constant_s", "must be > 0");
        }
        if !(self.slope_w_per_c >= 0.0) {
            return bad("slope_w_per_c", "must be >= 0");
        }
        if !self.self_heating_c.is_finite()
            || !self.reference_temp_c.is_finite()
            || !self.ambient_temp_c.is_finite()
        {
            return bad("temperatures", "must be finite");
        }
        Ok(())
    }

    pub fn target_temp_c(&self) -> f64 {
        self.ambient_temp_c + self.self_heating_c
    }

    pub fn power_at_temp(&self, temp_c: f64) -> f64 {
        (self.initial_power_w - self.slope_w_per_c * (temp_c - self.reference_temp_c)).max(0.0)
    }

    pub fn initial_state(&self, start_temp_c: f64) -> EdfaState {
        EdfaState {
            t_s: 0.0,
            temp_c: start_temp_c,
            power_w: self.power_at_temp(start_temp_c),
        }
    }

    /// Closed-form state at elapsed time `t` from `start`.
    pub fn state_at(&self, start_temp_c: f64, t: f64) -> EdfaState {
        step(self, &self.initial_state(start_temp_c), t)
    }
}

/// Advance the thermal state by `dt` seconds with the exact exponential
/// update.
pub fn step(model: &EdfaModel, state: &EdfaState, dt: f64) -> EdfaState {
    let target = model.target_temp_c();
    let decay = if dt.is_infinite() {
        0.0
    } else {
        (-dt / model.time_constant_s).exp()
    };
    let temp = target + (state.temp_c - target) * decay;
    EdfaState {
        t_s: state.t_s + dt,
        temp_c: temp,
        power_w: model.power_at_temp(temp),
    }
}

/// Minimum output power over `[0, duration]`, sampled at ≤ 1 s resolution.
pub fn guarantee(model: &EdfaModel, start_temp_c: f64, duration_s: f64) -> f64 {
    let n = duration_s.ceil().max(1.0) as usize;
    let dt = duration_s / n as f64;
    let mut state = model.initial_state(start_temp_c);
    let mut min = state.power_w;
    for k in 1..=n {
        // Stepping from the start each time avoids accumulating round-off.
        state = step(model, &model.initial_state(start_temp_c), k as f64 * dt);
        min = min.min(state.power_w);
    }
    min
}

/// Outcome of checking an amplifier against a power floor over a link.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ThermalAssessment {
    pub min_power_w: f64,
    pub end_power_w: f64,
    pub floor_w: f64,
    pub duration_s: f64,
    /// Power falls below the floor: the link needs extra heat removal.
    pub long_link_warning: bool,
}

pub fn assess(model: &EdfaModel, start_temp_c: f64, duration_s: f64, floor_w: f64) -> ThermalAssessment {
    let min = guarantee(model, start_temp_c, duration_s);
    ThermalAssessment {
        min_power_w: min,
        end_power_w: model.state_at(start_temp_c, duration_s).power_w,
        floor_w,
        duration_s,
        long_link_warning: min < floor_w,
    }
}

/// Calibration target: start at `initial_power_w` and stay at or above
/// `min_power_w` until `t1_s`, with the case starting at the reference
/// temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTarget {
    pub initial_power_w: f64,
    pub min_power_w: f64,
    pub t1_s: f64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        Self {
            initial_power_w: 2.5,
            min_power_w: DEFAULT_POWER_FLOOR_W,
            t1_s: TYPICAL_PASS_S,
        }
    }
}

/// Which parameters the calibrator may choose. `slope_w_per_c = Some(c)`
/// pins the slope; the thermal parameters are always taken as given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParams {
    pub slope_w_per_c: Option<f64>,
    pub time_constant_s: f64,
    pub self_heating_c: f64,
    pub reference_temp_c: f64,
    pub ambient_temp_c: f64,
}

impl Default for FreeParams {
    fn default() -> Self {
        let m = EdfaModel::default();
        Self {
            slope_w_per_c: None,
            time_constant_s: m.time_constant_s,
            self_heating_c: m.self_heating_c,
            reference_temp_c: m.reference_temp_c,
            ambient_temp_c: m.ambient_temp_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub model: EdfaModel,
    /// `P(t1) − P_min` of the returned model.
    pub margin_w: f64,
    /// The constraints do not pin the free parameters.
    pub under_determined: bool,
}

/// Fit the power–temperature slope so that `P(t1) = P_min` exactly (the
/// largest slope that still meets the floor).
pub fn calibrate(target: CalibrationTarget, free: FreeParams) -> Result<Calibration, AmplifierError> {
    if !(target.initial_power_w > 0.0) {
        return Err(AmplifierError::Infeasible {
            constraint: "P(0) > 0",
            detail: format!("P(0) = {} W", target.initial_power_w),
        });
    }
    if target.min_power_w > target.initial_power_w {
        return Err(AmplifierError::Infeasible {
            constraint: "P_min <= P(0)",
            detail: format!(
                "P_min = {} W exceeds P(0) = {} W",
                target.min_power_w, target.initial_power_w
            ),
        });
    }
    if !(target.t1_s > 0.0) {
        return Err(AmplifierError::Infeasible {
            constraint: "t1 > 0",
            detail: format!("t1 = {} s", target.t1_s),
        });
    }
    let mut model = EdfaModel {
        initial_power_w: target.initial_power_w,
        slope_w_per_c: free.slope_w_per_c.unwrap_or(0.0),
        time_constant_s: free.time_constant_s,
        self_heating_c: free.self_heating_c,
        reference_temp_c: free.reference_temp_c,
        ambient_temp_c: free.ambient_temp_c,
    };
    model.validate()?;
    let start = model.reference_temp_c;
    let rise = model.state_at(start, target.t1_s).temp_c - start;

    let under_determined = match free.slope_w_per_c {
        Some(_) => true,
        None if rise <= 0.0 => true,
        None => {
            let mut c = (target.initial_power_w - target.min_power_w) / rise;
            model.slope_w_per_c = c;
            // Nudge down by ulps until the floor holds in floating point.
            while model.state_at(start, target.t1_s).power_w < target.min_power_w && c > 0.0 {
                c = f64::from_bits(c.to_bits() - 1);
                model.slope_w_per_c = c;
            }
            false
        }
    };

    let end = model.state_at(start, target.t1_s).power_w;
    if end < target.min_power_w {
        return Err(AmplifierError::Infeasible {
            constraint: "P(t1) >= P_min",
            detail: format!(
                "P({} s) = {end} W below P_min = {} W",
                target.t1_s, target.min_power_w
            ),
        });
    }
    Ok(Calibration {
        model,
        margin_w: end - target.min_power_w,
        under_determined,
    })
}

/// The calibrated default amplifier: 2.5 W at start, exactly 2 W after a
/// 6-minute pass.
pub fn default_model() -> EdfaModel {
    calibrate(CalibrationTarget::default(), FreeParams::default())
        .expect("default calibration is feasible")
        .model
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_slope_holds_power() {
        let m = EdfaModel::default();
        for t in [0.0, 10.0, 1e4, f64::INFINITY] {
            assert_eq!(m.state_at(25.0, t).power_w, 2.5);
        }
        assert_eq!(guarantee(&m, 25.0, 7200.0), 2.5);
    }

    #[test]
    fn infinite_step_reaches_fixed_point() {
        let m = default_model();
        let s = step(&m, &m.initial_state(25.0), f64::INFINITY);
        assert_eq!(s.temp_c, 45.0);
        assert_eq!(s.power_w, (2.5 - m.slope_w_per_c * 20.0).max(0.0));
    }

    #[test]
    fn default_model_meets_pass_guarantee() {
        let m = default_model();
        // c = 0.5 / (20 * (1 - exp(-0.3))) = 0.09646 W/degC
        let oracle = 0.5 / (20.0 * (1.0 - (-0.3f64).exp()));
        assert!((m.slope_w_per_c - oracle).abs() < 1e-12);
        assert_eq!(m.state_at(25.0, 0.0).power_w, 2.5);
        assert!(m.state_at(25.0, 360.0).power_w >= 2.0);
        let g = guarantee(&m, 25.0, 360.0);
        assert!(g >= 2.0);
        assert!((g - m.state_at(25.0, 360.0).power_w).abs() < 1e-9);
    }

    #[test]
    fn one_hour_link_warns() {
        let m = default_model();
        let a = assess(&m, 25.0, 3600.0, DEFAULT_POWER_FLOOR_W);
        assert!(a.min_power_w < 2.0);
        assert!(a.long_link_warning);
        assert!(!assess(&m, 25.0, 360.0, DEFAULT_POWER_FLOOR_W).long_link_warning);
    }

    #[test]
    fn calibration_round_trip() {
        let cal = calibrate(CalibrationTarget::default(), FreeParams::default()).unwrap();
        assert!(!cal.under_determined);
        let m = cal.model;
        assert!((m.state_at(25.0, 0.0).power_w - 2.5).abs() < 1e-6);
        let p1 = m.state_at(25.0, 360.0).power_w;
        assert!((p1 - 2.0).abs() < 1e-6 && p1 >= 2.0);
        assert!(cal.margin_w >= 0.0 && cal.margin_w < 1e-9);
    }

    #[test]
    fn infeasible_calibration_names_constraint() {
        let target = CalibrationTarget {
            min_power_w: 3.0,
            ..Default::default()
        };
        match calibrate(target, FreeParams::default()) {
            Err(AmplifierError::Infeasible { constraint, .. }) => {
                assert_eq!(constraint, "P_min <= P(0)")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pinned_zero_slope_is_under_determined() {
        let free = FreeParams {
            slope_w_per_c: Some(0.0),
            ..Default::default()
        };
        let cal = calibrate(CalibrationTarget::default(), free).unwrap();
        assert!(cal.under_determined);
        assert_eq!(cal.model.time_constant_s, 1200.0);
        assert_eq!(cal.model.self_heating_c, 20.0);
        assert!((cal.margin_w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pinned_steep_slope_fails_floor() {
        let free = FreeParams {
            slope_w_per_c: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            calibrate(CalibrationTarget::default(), free),
            Err(AmplifierError::Infeasible {
                constraint: "P(t1) >= P_min",
                ..
            })
        ));
    }

    #[test]
    fn power_clamps_at_zero() {
        let m = EdfaModel {
            slope_w_per_c: 1.0,
            ..Default::default()
        };
        assert_eq!(m.state_at(25.0, f64::INFINITY).power_w, 0.0);
    }

    proptest! {
        #[test]
        fn semigroup(dt1 in 0.0f64..5000.0, dt2 in 0.0f64..5000.0, t0 in -20.0f64..80.0) {
            let m = default_model();
            let s = m.initial_state(t0);
            let one = step(&m, &s, dt1 + dt2);
            let two = step(&m, &step(&m, &s, dt1), dt2);
            prop_assert!((one.temp_c - two.temp_c).abs() <= 1e-12 * one.temp_c.abs().max(1.0));
            prop_assert!((one.power_w - two.power_w).abs() <= 1e-12 * one.power_w.abs().max(1.0));
        }

        #[test]
        fn power_non_increasing_below_target(t_start in -20.0f64..45.0, a in 0.0f64..4000.0, b in 0.0f64..4000.0) {
            let m = default_model();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(m.state_at(t_start, hi).power_w <= m.state_at(t_start, lo).power_w + 1e-12);
            prop_assert!(m.state_at(t_start, hi).temp_c >= m.state_at(t_start, lo).temp_c - 1e-12);
        }

        #[test]
        fn guarantee_monotone(d1 in 1.0f64..4000.0, d2 in 1.0f64..4000.0, ta in 0.0f64..40.0, tb in 0.0f64..40.0) {
            let m = default_model();
            let (dlo, dhi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(guarantee(&m, 25.0, dhi) <= guarantee(&m, 25.0, dlo) + 1e-12);
            let (tlo, thi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            prop_assert!(guarantee(&m, thi, 360.0) <= guarantee(&m, tlo, 360.0) + 1e-12);
        }
    }
}
