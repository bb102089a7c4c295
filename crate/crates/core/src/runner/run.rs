use serde::Serialize;
use thiserror::Error;

use crate::amplifier::{assess, calibrate, EdfaModel, ThermalAssessment, DEFAULT_POWER_FLOOR_W};
use crate::geometry::{
    azimuth_elevation, earth_blocks, link_geometry, predict_passes, propagate, tangent_components,
    LinkGeometry, PassWindow, PlatformKind, PlatformSpec, PlatformState,
};
use crate::link_budget::{
    atmospheric_loss, compose, free_space_loss, scintillation_draw, Atmosphere, LinkOutcome, Term,
};
use crate::optics::{coupling_efficiency, to_db, BeamModel};
use crate::pat::{Angle2, LineOfSight, LosSample, Mode, PatError, PatSimulator};

use super::scenario::{Provenance, Scenario, ScenarioConfig, ScenarioKind, SourceConfig};

/// A module failure during a run, located by budget step when it happened
/// inside the time loop.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{module} failed{}: {message}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
pub struct RunError {
    pub module: &'static str,
    pub step: Option<usize>,
    pub message: String,
}

impl RunError {
    fn new(module: &'static str, step: Option<usize>, e: impl std::fmt::Display) -> Self {
        Self {
            module,
            step,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkStatus {
    Available,
    /// Atmospheric path below the elevation mask.
    Unavailable,
    /// Exo-atmospheric path occulted by the Earth.
    Blocked,
    /// PAT enabled but not in fine tracking.
    Unpointed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatColumns {
    pub residual_rad: f64,
    pub pointing_loss_db: f64,
    pub mode: Mode,
}

/// One budget step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t_s: f64,
    pub range_m: f64,
    pub elevation_rad: f64,
    pub alpha_rad: f64,
    pub edfa_w: Option<f64>,
    pub pat: Option<PatColumns>,
    pub status: LinkStatus,
    pub rx_dbm: Option<f64>,
    pub margin_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatusCounts {
    pub available: usize,
    pub unavailable: usize,
    pub blocked: usize,
    pub unpointed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub steps: usize,
    pub margin_db: Option<MarginStats>,
    /// Fraction of steps with a closed budget.
    pub availability: f64,
    pub status_counts: StatusCounts,
    /// First budget step in LINKED, relative to the window start.
    pub time_to_linked_s: Option<f64>,
    /// RMS receive residual over steps in FINE_TRACK or LINKED.
    pub residual_rms_rad: Option<f64>,
    pub edfa_min_w: Option<f64>,
    pub thermal: Option<ThermalAssessment>,
    pub passes: Option<Vec<PassWindow>>,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
    pub has_edfa: bool,
    pub has_pat: bool,
}

fn edfa_model(cfg: &ScenarioConfig) -> Result<Option<EdfaModel>, RunError> {
    match cfg.source {
        SourceConfig::Constant { .. } => Ok(None),
        SourceConfig::Edfa { target, free } => calibrate(target, free)
            .map(|c| Some(c.model))
            .map_err(|e| RunError::new("amplifier", None, e)),
    }
}

/// Transmit power of terminal A at absolute time `t`. The amplifier is
/// switched on at the start of the window with its case at the reference
/// temperature.
pub fn tx_power_at(cfg: &ScenarioConfig, t: f64) -> Result<f64, RunError> {
    let model = edfa_model(cfg)?;
    source_power(cfg, model.as_ref(), t)
}

fn source_power(cfg: &ScenarioConfig, model: Option<&EdfaModel>, t: f64) -> Result<f64, RunError> {
    match (cfg.source, model) {
        (SourceConfig::Constant { power_w }, _) => Ok(power_w),
        (_, Some(m)) => {
            let since = t - cfg.start_s;
            if since < 0.0 {
                return Err(RunError::new(
                    "amplifier",
                    None,
                    format!("time {t} s precedes the window start {} s", cfg.start_s),
                ));
            }
            Ok(m.state_at(m.reference_temp_c, since).power_w)
        }
        _ => unreachable!("EDFA source without a model"),
    }
}

fn power_floor(cfg: &ScenarioConfig) -> f64 {
    match cfg.source {
        SourceConfig::Edfa { target, .. } => target.min_power_w,
        SourceConfig::Constant { .. } => DEFAULT_POWER_FLOOR_W,
    }
}

fn crosses_atmosphere(cfg: &ScenarioConfig) -> bool {
    cfg.platform_a.kind().is_sub_atmospheric() || cfg.platform_b.kind().is_sub_atmospheric()
}

fn states(
    cfg: &ScenarioConfig,
    t: f64,
) -> Result<(PlatformState, PlatformState), crate::geometry::GeometryError> {
    Ok((
        propagate(&cfg.platform_a, t, cfg.earth_rotation)?,
        propagate(&cfg.platform_b, t, cfg.earth_rotation)?,
    ))
}

/// Path terms shared by the data and beacon budgets, or why there is no
/// path.
enum Path {
    Open { fsl_db: f64, atm_db: f64 },
    BelowMask,
    Blocked,
}

fn path(
    cfg: &ScenarioConfig,
    a: &PlatformState,
    b: &PlatformState,
    g: &LinkGeometry,
    wavelength_m: f64,
) -> Path {
    let crosses = crosses_atmosphere(cfg);
    match atmospheric_loss(&cfg.channel, g.elevation_rad, crosses) {
        Atmosphere::BelowMask => Path::BelowMask,
        Atmosphere::LossDb(_) if !crosses && earth_blocks(&a.position, &b.position) => Path::Blocked,
        Atmosphere::LossDb(atm_db) => Path::Open {
            fsl_db: free_space_loss(g.range_m, wavelength_m),
            atm_db,
        },
    }
}

/// Data link A → B at one instant.
fn data_budget(
    cfg: &ScenarioConfig,
    a: &PlatformState,
    b: &PlatformState,
    g: &LinkGeometry,
    tx_power_w: f64,
    pointing_loss_db: f64,
) -> Result<LinkOutcome, RunError> {
    let ta = &cfg.terminal_a;
    let tb = &cfg.terminal_b;
    let (fsl_db, atm_db) = match path(cfg, a, b, g, ta.telescope.wavelength_m) {
        Path::BelowMask => {
            return Ok(LinkOutcome::Unavailable {
                elevation_rad: g.elevation_rad,
            })
        }
        Path::Blocked => return Ok(LinkOutcome::Blocked),
        Path::Open { fsl_db, atm_db } => (fsl_db, atm_db),
    };
    let mut terms = vec![
        (Term::TxPathEfficiency, to_db(ta.telescope.throughput)),
        (Term::TxAntennaGain, ta.telescope.gain_db()),
        (Term::Strehl, to_db(ta.telescope.strehl())),
        (Term::PointingLoss, pointing_loss_db),
        (Term::FreeSpaceLoss, fsl_db),
        (Term::AtmosphericLoss, atm_db),
        (Term::RxAntennaGain, tb.telescope.gain_db()),
        (Term::RxPathEfficiency, to_db(tb.telescope.throughput)),
        (
            Term::CouplingEfficiency,
            to_db(coupling_efficiency(tb.telescope.strehl(), tb.coupling_base)),
        ),
    ];
    if crosses_atmosphere(cfg) && cfg.channel.scintillation_sigma > 0.0 {
        terms.push((
            Term::Scintillation,
            scintillation_draw(cfg.channel.scintillation_sigma, cfg.seed, a.t_s),
        ));
    }
    compose(tx_power_w, &terms, &cfg.receiver)
        .map(LinkOutcome::Available)
        .map_err(|e| RunError::new("link_budget", None, e))
}

/// Beacon power from B arriving at A's tracking detectors, if there is a
/// path.
fn beacon_dbm(
    cfg: &ScenarioConfig,
    a: &PlatformState,
    b: &PlatformState,
    g: &LinkGeometry,
) -> Result<Option<f64>, String> {
    let ta = &cfg.terminal_a;
    let tb = &cfg.terminal_b;
    let (fsl_db, atm_db) = match path(cfg, a, b, g, tb.telescope.wavelength_m) {
        Path::Open { fsl_db, atm_db } => (fsl_db, atm_db),
        _ => return Ok(None),
    };
    let beam = BeamModel::new(tb.beacon_divergence_rad, tb.beacon_power_w).map_err(|e| e.to_string())?;
    let terms = [
        (Term::TxAntennaGain, beam.gain_db()),
        (Term::FreeSpaceLoss, fsl_db),
        (Term::AtmosphericLoss, atm_db),
        (Term::RxAntennaGain, ta.telescope.gain_db()),
        (Term::RxPathEfficiency, to_db(ta.telescope.throughput)),
    ];
    compose(beam.power_w, &terms, &cfg.receiver)
        .map(|r| Some(r.received_dbm))
        .map_err(|e| e.to_string())
}

/// Line of sight from A to B as seen by A's PAT chain: rates and the
/// point-ahead offset in A's azimuth/elevation axes.
struct EphemerisLos<'a> {
    cfg: &'a ScenarioConfig,
}

impl LineOfSight for EphemerisLos<'_> {
    fn sample(&mut self, t: f64) -> Result<LosSample, PatError> {
        let (a, b) = states(self.cfg, t)?;
        let g = link_geometry(&a, &b)?;
        let u = g.line_of_sight;
        let v = b.velocity - a.velocity;
        let u_dot = (v - u * v.dot(&u)) / g.range_m;
        let (az, el) = azimuth_elevation(&a.position, &u);
        let (rate_az, rate_el) = tangent_components(&a.position, az, el, &u_dot);
        let point_ahead = match g.point_ahead_dir {
            Some(d) => {
                let (pa_az, pa_el) = tangent_components(&a.position, az, el, &(d * g.point_ahead_rad));
                Angle2::new(pa_az, pa_el)
            }
            None => Angle2::zeros(),
        };
        Ok(LosSample {
            los_rate: Angle2::new(rate_az, rate_el),
            point_ahead,
            beacon_dbm: beacon_dbm(self.cfg, &a, &b, &g).map_err(PatError::LineOfSight)?,
        })
    }
}

/// Budget with zero pointing error at absolute time `t`.
pub fn budget_at(cfg: &ScenarioConfig, t: f64) -> Result<(LinkGeometry, LinkOutcome), RunError> {
    let (a, b) = states(cfg, t).map_err(|e| RunError::new("geometry", None, e))?;
    let g = link_geometry(&a, &b).map_err(|e| RunError::new("geometry", None, e))?;
    let p = tx_power_at(cfg, t)?;
    Ok((g, data_budget(cfg, &a, &b, &g, p, 0.0)?))
}

/// Pass windows over the run window when the scenario pairs a LEO with a
/// ground or HAPS site.
pub fn passes_for(cfg: &ScenarioConfig) -> Result<Option<Vec<PassWindow>>, RunError> {
    let (orbit, site) = match (cfg.platform_a.kind(), cfg.platform_b.kind()) {
        (PlatformKind::LeoCircular, PlatformKind::GroundSite | PlatformKind::Haps) => {
            (&cfg.platform_a, &cfg.platform_b)
        }
        (PlatformKind::GroundSite | PlatformKind::Haps, PlatformKind::LeoCircular) => {
            (&cfg.platform_b, &cfg.platform_a)
        }
        _ => return Ok(None),
    };
    passes(cfg, orbit, site).map(Some)
}

fn passes(
    cfg: &ScenarioConfig,
    orbit: &PlatformSpec,
    site: &PlatformSpec,
) -> Result<Vec<PassWindow>, RunError> {
    predict_passes(
        orbit,
        site,
        cfg.earth_rotation,
        cfg.channel.min_elevation_rad(),
        (cfg.start_s, cfg.start_s + cfg.duration_s),
        1.0,
    )
    .map_err(|e| RunError::new("geometry", None, e))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Run a scenario end to end: geometry, transmit power, PAT and the link
/// budget at every step, then the aggregates.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput, RunError> {
    let cfg = &scenario.config;
    let model = edfa_model(cfg)?;
    let n_steps = (cfg.duration_s / cfg.step_s + 1e-9).floor() as usize + 1;

    let mut pat = match &cfg.pat {
        Some(setup) => {
            let mut disturbance = setup.disturbance.clone();
            disturbance.seed = cfg.seed.wrapping_add(1);
            let sim = PatSimulator::new(
                setup.config.clone(),
                disturbance,
                cfg.seed,
                cfg.terminal_a.telescope.divergence(),
            )
            .map_err(|e| RunError::new("pat", None, e))?;
            let ratio = (cfg.step_s * setup.config.fpm_rate_hz).round() as u64;
            Some((sim, ratio, setup.config.tick_s()))
        }
        None => None,
    };
    let mut los = EphemerisLos { cfg };
    let mut next_tick = 0u64;

    let mut records = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let t = cfg.start_s + k as f64 * cfg.step_s;
        let (a, b) = states(cfg, t).map_err(|e| RunError::new("geometry", Some(k), e))?;
        let g = link_geometry(&a, &b).map_err(|e| RunError::new("geometry", Some(k), e))?;
        let power = source_power(cfg, model.as_ref(), t).map_err(|e| RunError { step: Some(k), ..e })?;

        let pat_cols = match pat.as_mut() {
            Some((sim, ratio, tick)) => {
                let last = k as u64 * *ratio;
                let mut sample = None;
                while next_tick <= last {
                    let tt = cfg.start_s + next_tick as f64 * *tick;
                    let l = los.sample(tt).map_err(|e| RunError::new("pat", Some(k), e))?;
                    sample = Some(sim.tick(tt, &l).map_err(|e| RunError::new("pat", Some(k), e))?);
                    next_tick += 1;
                }
                let s = sample.expect("at least one PAT tick per step");
                Some(PatColumns {
                    residual_rad: s.residual_rad,
                    pointing_loss_db: s.pointing_loss_db,
                    mode: s.mode,
                })
            }
            None => None,
        };

        let pointing = pat_cols.map_or(0.0, |p| p.pointing_loss_db);
        let outcome =
            data_budget(cfg, &a, &b, &g, power, pointing).map_err(|e| RunError { step: Some(k), ..e })?;
        let (status, report) = match (&outcome, pat_cols) {
            (LinkOutcome::Unavailable { .. }, _) => (LinkStatus::Unavailable, None),
            (LinkOutcome::Blocked, _) => (LinkStatus::Blocked, None),
            (LinkOutcome::Available(_), Some(p)) if !matches!(p.mode, Mode::FineTrack | Mode::Linked) => {
                (LinkStatus::Unpointed, None)
            }
            (LinkOutcome::Available(r), _) => (LinkStatus::Available, Some(r)),
        };
        records.push(StepRecord {
            t_s: t,
            range_m: g.range_m,
            elevation_rad: g.elevation_rad,
            alpha_rad: g.point_ahead_rad,
            edfa_w: model.map(|_| power),
            pat: pat_cols,
            status,
            rx_dbm: report.map(|r| r.received_dbm),
            margin_db: report.map(|r| r.margin_db),
        });
    }

    let summary = summarize(scenario, &records, model.as_ref())?;
    Ok(RunOutput {
        records,
        summary,
        has_edfa: model.is_some(),
        has_pat: cfg.pat.is_some(),
    })
}

fn summarize(
    scenario: &Scenario,
    records: &[StepRecord],
    model: Option<&EdfaModel>,
) -> Result<RunSummary, RunError> {
    let cfg = &scenario.config;
    let mut margins: Vec<f64> = records.iter().filter_map(|r| r.margin_db).collect();
    margins.sort_by(f64::total_cmp);
    let margin_db = (!margins.is_empty()).then(|| MarginStats {
        min: margins[0],
        median: median(&margins),
        max: margins[margins.len() - 1],
    });
    let count = |s| records.iter().filter(|r| r.status == s).count();
    let status_counts = StatusCounts {
        available: count(LinkStatus::Available),
        unavailable: count(LinkStatus::Unavailable),
        blocked: count(LinkStatus::Blocked),
        unpointed: count(LinkStatus::Unpointed),
    };
    let fine: Vec<f64> = records
        .iter()
        .filter_map(|r| r.pat)
        .filter(|p| matches!(p.mode, Mode::FineTrack | Mode::Linked))
        .map(|p| p.residual_rad)
        .collect();
    Ok(RunSummary {
        scenario: cfg.kind,
        seed: cfg.seed,
        steps: records.len(),
        margin_db,
        availability: status_counts.available as f64 / records.len() as f64,
        status_counts,
        time_to_linked_s: records
            .iter()
            .find(|r| r.pat.is_some_and(|p| p.mode == Mode::Linked))
            .map(|r| r.t_s - cfg.start_s),
        residual_rms_rad: (!fine.is_empty())
            .then(|| (fine.iter().map(|x| x * x).sum::<f64>() / fine.len() as f64).sqrt()),
        edfa_min_w: records.iter().filter_map(|r| r.edfa_w).reduce(f64::min),
        thermal: model.map(|m| assess(m, m.reference_temp_c, cfg.duration_s, power_floor(cfg))),
        passes: passes_for(cfg)?,
        provenance: scenario.provenance.clone(),
    })
}
