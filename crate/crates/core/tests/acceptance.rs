//! Acceptance report: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use lasercom::amplifier::{assess, default_model, guarantee, DEFAULT_POWER_FLOOR_W};
use lasercom::geometry::{
    link_geometry, point_ahead_light_time, predict_passes, EarthRotation, PlatformSpec, PlatformState, Vec3,
};
use lasercom::link_budget::{compose, free_space_loss, ReceiverSpec, Term};
use lasercom::optics::{antenna_gain, strehl, TelescopeSpec};
use lasercom::pat::{
    mode_graph, run, Angle2, DisturbanceModel, LosSample, Mode, PatConfig, PatSimulator, PatState,
    PatTimeSeries, RunSpec, Sinusoid, StaticLos,
};
use lasercom::runner::{load_scenario, run_scenario};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RE: f64 = 6_371_000.0;
const MU: f64 = 3.986004418e14;
const C: f64 = 299_792_458.0;
const H: f64 = 6.626_070_15e-34;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac1() -> Outcome {
    let t = TelescopeSpec::default();
    let spec_ok = t.aperture_m == 0.09
        && t.magnification == 40.0
        && t.throughput == 0.93
        && (t.wfe_waves_rms - 1.0 / 19.0).abs() < 1e-15;
    let s = strehl(1.0 / 19.0);
    let oracle = (-(2.0 * PI / 19.0).powi(2)).exp();
    check(
        spec_ok && (s - 0.8964).abs() <= 0.0005 && (s - oracle).abs() < 1e-12,
        format!(
            "D = {} m, M = {}, eta = {}, wfe = 1/{:.3} waves; strehl = {s:.5} (oracle {oracle:.5})",
            t.aperture_m,
            t.magnification,
            t.throughput,
            1.0 / t.wfe_waves_rms
        ),
    )
}

fn ac2() -> Outcome {
    let lambda = 1.55e-6;
    let fsl = free_space_loss(35_786_000.0, lambda);
    let fsl_oracle = 20.0 * (lambda / (4.0 * PI * 35_786_000.0)).log10();
    let g = antenna_gain(0.09, lambda);
    let g_oracle = 20.0 * (PI * 0.09 / lambda).log10();
    check(
        (fsl + 289.3).abs() <= 0.05
            && (g - 105.2).abs() <= 0.05
            && (fsl - fsl_oracle).abs() < 1e-9
            && (g - g_oracle).abs() < 1e-9,
        format!("FSL = {fsl:.4} dB (oracle {fsl_oracle:.4}), gain = {g:.4} dB (oracle {g_oracle:.4})"),
    )
}

fn ac3() -> Outcome {
    let m = default_model();
    let p0 = m.initial_state(m.reference_temp_c).power_w;
    let g360 = guarantee(&m, m.reference_temp_c, 360.0);
    let hour = assess(&m, m.reference_temp_c, 3600.0, DEFAULT_POWER_FLOOR_W);
    let pass = assess(&m, m.reference_temp_c, 360.0, DEFAULT_POWER_FLOOR_W);
    check(
        (p0 - 2.5).abs() < 1e-12 && g360 >= 2.0 && !pass.long_link_warning && hour.long_link_warning,
        format!(
            "P(0) = {p0} W, min over 360 s = {g360:.6} W, min over 3600 s = {:.4} W, warning at 3600 s = {}",
            hour.min_power_w, hour.long_link_warning
        ),
    )
}

fn ac4() -> Outcome {
    let h = 400_000.0;
    let orbit = PlatformSpec::LeoCircular {
        altitude_m: h,
        inclination_deg: 0.0,
        raan_deg: 0.0,
        phase_deg: 0.0,
    };
    let site = PlatformSpec::GroundSite {
        latitude_deg: 0.0,
        longitude_deg: 0.0,
        altitude_m: 0.0,
    };
    let el = 5f64.to_radians();
    let r = RE + h;
    let n = (MU / r.powi(3)).sqrt();
    let oracle = 2.0 * ((RE * el.cos() / r).acos() - el) / n;
    let period = 2.0 * PI / n;
    let passes = match predict_passes(&orbit, &site, EarthRotation::Off, el, (0.0, 3.0 * period), 1.0) {
        Ok(p) => p,
        Err(e) => return Err(e.to_string()),
    };
    let max = passes.iter().map(|p| p.duration_s).fold(0.0, f64::max);
    check(
        (400.0..=600.0).contains(&max) && (max - oracle).abs() < 0.01,
        format!(
            "max pass = {max:.3} s over {} windows, central-angle oracle {oracle:.3} s",
            passes.len()
        ),
    )
}

/// Independent light-time solution: angle between the retarded and
/// advanced apparent directions of `b` for straight-line relative motion.
fn light_time_angle(p: Vec3, v: Vec3) -> f64 {
    let fixed_point = |sign: f64| {
        let mut tau = 0.0;
        for _ in 0..100 {
            tau = (p + v * (sign * tau)).norm() / C;
        }
        p + v * (sign * tau)
    };
    let (a, b) = (fixed_point(-1.0), fixed_point(1.0));
    (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
}

fn ac5() -> Outcome {
    let at = |p: Vec3, v: Vec3| PlatformState {
        t_s: 0.0,
        position: p,
        velocity: v,
    };
    let a = at(Vec3::new(RE, 0.0, 0.0), Vec3::zeros());
    let b = at(
        Vec3::new(RE + 1_000_000.0, 0.0, 0.0),
        Vec3::new(0.0, 7_500.0, 0.0),
    );
    let g = link_geometry(&a, &b).map_err(|e| e.to_string())?;
    let lt = point_ahead_light_time(&a, &b).map_err(|e| e.to_string())?;
    let oracle = light_time_angle(b.position - a.position, b.velocity - a.velocity);
    let rel = (g.point_ahead_rad - oracle).abs() / oracle;
    check(
        (g.point_ahead_rad * 1e6 - 50.0).abs() <= 0.1 && rel < 1e-6 && (lt - oracle).abs() / oracle < 1e-6,
        format!(
            "alpha = {:.4} urad, light-time oracle {:.4} urad, relative difference {rel:.2e}",
            g.point_ahead_rad * 1e6,
            oracle * 1e6
        ),
    )
}

fn ac6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC6);
    let rx = ReceiverSpec::default();
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let p = 10f64.powf(rng.gen_range(-3.0..1.5));
        let mut terms: Vec<(Term, f64)> = Vec::new();
        for t in Term::ALL {
            if rng.gen_bool(0.8) {
                let mag = rng.gen_range(0.0..120.0);
                let db = if t.is_loss() {
                    -mag
                } else {
                    rng.gen_range(-5.0..mag)
                };
                terms.push((t, db));
            }
        }
        let report = compose(p, &terms, &rx).map_err(|e| format!("budget {i}: {e}"))?;
        let linear_mw = terms
            .iter()
            .fold(p * 1000.0, |acc, &(_, db)| acc * 10f64.powf(db / 10.0));
        let diff = (10.0 * linear_mw.log10() - report.received_dbm).abs();
        worst = worst.max(diff);
    }
    check(
        worst <= 1e-9,
        format!("1000 budgets, worst dB/linear disagreement {worst:.2e} dB"),
    )
}

const DT: f64 = 1e-3;
const BEACON: f64 = -60.0;
const THETA_W: f64 = 17.2e-6;

fn quiet() -> PatConfig {
    PatConfig {
        coarse_noise_rad: 0.0,
        fine_noise_rad: 0.0,
        ..Default::default()
    }
}

fn spec(duration_s: f64, seed: u64) -> RunSpec {
    RunSpec {
        start_s: 0.0,
        duration_s,
        dt_s: DT,
        seed,
        divergence_rad: THETA_W,
    }
}

fn jitter(amplitude: f64) -> DisturbanceModel {
    DisturbanceModel {
        sinusoids: vec![Sinusoid {
            amplitude_x_rad: amplitude,
            amplitude_y_rad: 0.0,
            frequency_hz: 10.0,
            phase_rad: 0.0,
        }],
        ..Default::default()
    }
}

fn ticks(
    cfg: &PatConfig,
    dist: &DisturbanceModel,
    state: PatState,
    duration: f64,
    pa: Angle2,
) -> Result<PatTimeSeries, String> {
    let mut sim = PatSimulator::new(cfg.clone(), dist.clone(), 1, THETA_W)
        .map_err(|e| e.to_string())?
        .with_state(state);
    let los = LosSample {
        los_rate: Angle2::zeros(),
        point_ahead: pa,
        beacon_dbm: Some(BEACON),
    };
    let n = (duration / DT).round() as usize;
    let samples = (0..n)
        .map(|k| sim.tick(k as f64 * DT, &los))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok(PatTimeSeries { samples })
}

fn sensitivity(kp: f64, ki: f64, t: f64, f_hz: f64) -> f64 {
    let z = Complex64::from_polar(1.0, 2.0 * PI * f_hz * t);
    let l = ((z - 1.0) * kp + z * (ki * t)) * t / ((z - 1.0) * (z - 1.0));
    (1.0 / (1.0 + l)).norm()
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    (s / n as f64).sqrt()
}

fn ac7() -> Outcome {
    let e = |e: lasercom::pat::PatError| e.to_string();
    let mut notes = Vec::new();
    let mut ok = true;

    // (a) determinism
    let cfg = PatConfig::default();
    let noisy = DisturbanceModel {
        bias_x_rad: 0.02,
        random_walk_sigma: 1e-5,
        seed: 4,
        ..jitter(100e-6)
    };
    let a1 = run(&mut StaticLos::new(BEACON), &cfg, &noisy, spec(3.0, 77)).map_err(e)?;
    let a2 = run(&mut StaticLos::new(BEACON), &cfg, &noisy, spec(3.0, 77)).map_err(e)?;
    let same = a1.to_csv() == a2.to_csv();
    ok &= same;
    notes.push(format!("(a) identical={same}"));

    // (b) convergence
    let bias = DisturbanceModel {
        bias_x_rad: 1f64.to_radians(),
        ..Default::default()
    };
    let b = run(&mut StaticLos::new(BEACON), &quiet(), &bias, spec(12.0, 0)).map_err(e)?;
    let last = b.samples.last().ok_or("empty run")?;
    let linked = b.first_time_in(Mode::Linked);
    let conv = last.mode == Mode::Linked && last.residual_rad < 1e-6;
    ok &= conv;
    notes.push(format!(
        "(b) LINKED at {:.2} s, final residual {:.1e} rad",
        linked.unwrap_or(f64::NAN),
        last.residual_rad
    ));

    // (c) fine-loop benefit
    let fine_cfg = quiet();
    let coarse_cfg = PatConfig {
        fine_loop_enabled: false,
        ..quiet()
    };
    let d = jitter(100e-6);
    let fine = ticks(
        &fine_cfg,
        &d,
        PatState::in_mode(&fine_cfg, Mode::CoarseTrack),
        4.0,
        Angle2::zeros(),
    )?;
    let coarse = ticks(
        &coarse_cfg,
        &d,
        PatState::in_mode(&coarse_cfg, Mode::CoarseTrack),
        4.0,
        Angle2::zeros(),
    )?;
    let ratio = rms(coarse.samples[2000..].iter().map(|s| s.residual_rad))
        / rms(fine.samples[2000..].iter().map(|s| s.residual_rad));
    let predicted = 1.0 / sensitivity(fine_cfg.fpm_gains.kp, fine_cfg.fpm_gains.ki, DT, 10.0);
    let benefit = ratio >= 5.0 && (ratio - predicted).abs() / predicted < 0.2;
    ok &= benefit;
    notes.push(format!("(c) improvement {ratio:.1}x, oracle {predicted:.1}x"));

    // (d) point-ahead isolation
    let iso_dist = DisturbanceModel {
        bias_x_rad: 2e-3,
        random_walk_sigma: 20e-6,
        seed: 9,
        ..jitter(100e-6)
    };
    let without = ticks(&cfg, &iso_dist, PatState::new(&cfg), 3.0, Angle2::zeros())?;
    let with = ticks(
        &cfg,
        &iso_dist,
        PatState::new(&cfg),
        3.0,
        Angle2::new(50e-6, -20e-6),
    )?;
    let isolated = without.samples.len() == with.samples.len()
        && without
            .samples
            .iter()
            .zip(&with.samples)
            .all(|(x, y)| x.residual_rad.to_bits() == y.residual_rad.to_bits() && x.mode == y.mode);
    ok &= isolated;
    notes.push(format!("(d) receive residual identical={isolated}"));

    // (e) transitions
    let graph = mode_graph();
    let beating = DisturbanceModel {
        sinusoids: [150.0, 150.25]
            .iter()
            .map(|&f| Sinusoid {
                amplitude_x_rad: 30e-6,
                amplitude_y_rad: 0.0,
                frequency_hz: f,
                phase_rad: 0.0,
            })
            .collect(),
        ..Default::default()
    };
    let narrow = PatConfig {
        fine_fov_rad: 60e-6,
        ..PatConfig::default()
    };
    let far = DisturbanceModel {
        bias_x_rad: 0.08,
        bias_y_rad: -0.03,
        seed: 2,
        ..Default::default()
    };
    let logs = [
        a1,
        b,
        run(&mut StaticLos::new(BEACON), &cfg, &far, spec(15.0, 3)).map_err(e)?,
        run(&mut StaticLos::new(BEACON), &narrow, &beating, spec(20.0, 6)).map_err(e)?,
    ];
    let mut observed = std::collections::BTreeSet::new();
    let mut bad = Vec::new();
    for log in &logs {
        for tr in log.transitions() {
            if !graph.contains(&tr) {
                bad.push(tr);
            }
            observed.insert(tr);
        }
    }
    ok &= bad.is_empty();
    notes.push(format!(
        "(e) {} distinct transitions observed, {} outside the graph",
        observed.len(),
        bad.len()
    ));

    check(ok, notes.join("; "))
}

fn ac8() -> Outcome {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/geo_ground.toml");
    let base = load_scenario(&path).map_err(|e| e.to_string())?;
    let geo_lon = match base.config.platform_a {
        PlatformSpec::Geo { longitude_deg } => longitude_deg,
        _ => return Err("fixture A is not GEO".into()),
    };
    let (site_lon, site_alt) = match base.config.platform_b {
        PlatformSpec::GroundSite {
            longitude_deg,
            altitude_m,
            ..
        } => (longitude_deg, altitude_m),
        _ => return Err("fixture B is not a ground site".into()),
    };
    if site_alt != 0.0 {
        return Err("hand ledger assumes a sea-level site".into());
    }
    let power_w = match base.config.source {
        lasercom::runner::SourceConfig::Constant { power_w } => power_w,
        _ => return Err("fixture source is not constant".into()),
    };
    let lambda = 1.55e-6;
    let r_geo = RE + 35_786_000.0;
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for lat in [0.0f64, 35.7, 60.0] {
        let mut s = base.clone();
        if let PlatformSpec::GroundSite { latitude_deg, .. } = &mut s.config.platform_b {
            *latitude_deg = lat;
        }
        let out = run_scenario(&s).map_err(|e| e.to_string())?;

        // Hand ledger.
        let cos_g = lat.to_radians().cos() * (site_lon - geo_lon).to_radians().cos();
        let sin_g = (1.0 - cos_g * cos_g).sqrt();
        let range = (RE * RE + r_geo * r_geo - 2.0 * RE * r_geo * cos_g).sqrt();
        let el = (cos_g - RE / r_geo).atan2(sin_g);
        let db = |x: f64| 10.0 * x.log10();
        let gain = 20.0 * (PI * 0.09 / lambda).log10();
        let st = (-(2.0 * PI / 19.0).powi(2)).exp();
        let fsl = 20.0 * (lambda / (4.0 * PI * range)).log10();
        let atm = -1.0 / el.sin();
        let rx_dbm =
            db(power_w * 1000.0) + db(0.93) + gain + db(st) + fsl + atm + gain + db(0.93) + db(0.81 * st);
        let required = db(1000.0 * H * C / lambda * 1e10 * 1000.0);
        let margin = rx_dbm - required;

        for r in &out.records {
            let m = r
                .margin_db
                .ok_or(format!("lat {lat}: no margin at t = {}", r.t_s))?;
            worst = worst.max((m - margin).abs());
        }
        notes.push(format!("el {:.2} deg margin {margin:.3} dB", el.to_degrees()));
    }
    check(
        worst <= 0.01,
        format!("{}; worst deviation {worst:.2e} dB", notes.join(", ")),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(d) => println!("{name} PASS: {d}"),
            Err(d) => {
                failed += 1;
                println!("{name} FAIL: {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
