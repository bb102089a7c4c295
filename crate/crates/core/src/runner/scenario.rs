//! Scenario files: TOML with unit-suffixed keys, resolved into a validated
//! [`ScenarioConfig`] plus the list of every value that was defaulted.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::amplifier::{CalibrationTarget, FreeParams};
use crate::geometry::{EarthRotation, PlatformKind, PlatformSpec, Waypoint};
use crate::link_budget::{ChannelConfig, ReceiverSpec};
use crate::optics::{TelescopeSpec, DEFAULT_BEACON_DIVERGENCE_RAD, IDEAL_SMF_COUPLING};
use crate::pat::{DisturbanceModel, PatConfig, PatError, PiGains, Sinusoid};

use super::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScenarioKind {
    LeoGround,
    LeoGeo,
    GeoGround,
    HapsGround,
    DroneGround,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::LeoGround,
        ScenarioKind::LeoGeo,
        ScenarioKind::GeoGround,
        ScenarioKind::HapsGround,
        ScenarioKind::DroneGround,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::LeoGround => "LEO_GROUND",
            ScenarioKind::LeoGeo => "LEO_GEO",
            ScenarioKind::GeoGround => "GEO_GROUND",
            ScenarioKind::HapsGround => "HAPS_GROUND",
            ScenarioKind::DroneGround => "DRONE_GROUND",
        }
    }

    /// Default platform kinds for terminals A and B. A transmits and runs
    /// the PAT chain.
    pub fn platform_kinds(self) -> (PlatformKind, PlatformKind) {
        use PlatformKind::*;
        match self {
            ScenarioKind::LeoGround => (LeoCircular, GroundSite),
            ScenarioKind::LeoGeo => (LeoCircular, Geo),
            ScenarioKind::GeoGround => (Geo, GroundSite),
            ScenarioKind::HapsGround => (Haps, GroundSite),
            ScenarioKind::DroneGround => (Drone, GroundSite),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ScenarioKind::ALL.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown scenario kind {s:?}; expected one of {}",
                    names.join(", ")
                )
            })
    }
}

/// One optical terminal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalSpec {
    pub telescope: TelescopeSpec,
    /// Single-mode coupling before wavefront degradation.
    pub coupling_base: f64,
    pub beacon_power_w: f64,
    pub beacon_divergence_rad: f64,
}

impl Default for TerminalSpec {
    fn default() -> Self {
        Self {
            telescope: TelescopeSpec::default(),
            coupling_base: IDEAL_SMF_COUPLING,
            beacon_power_w: 1.0,
            beacon_divergence_rad: DEFAULT_BEACON_DIVERGENCE_RAD,
        }
    }
}

/// Transmit power source of terminal A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceConfig {
    Constant {
        power_w: f64,
    },
    /// EDFA switched on at the start of the window; the slope is calibrated
    /// from `target` unless `free.slope_w_per_c` pins it.
    Edfa {
        target: CalibrationTarget,
        free: FreeParams,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatSetup {
    pub config: PatConfig,
    /// The seed is replaced by one derived from the scenario seed at run time.
    pub disturbance: DisturbanceModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub earth_rotation: EarthRotation,
    pub start_s: f64,
    pub duration_s: f64,
    /// Budget cadence.
    pub step_s: f64,
    pub seed: u64,
    pub platform_a: PlatformSpec,
    pub platform_b: PlatformSpec,
    pub terminal_a: TerminalSpec,
    pub terminal_b: TerminalSpec,
    pub source: SourceConfig,
    pub channel: ChannelConfig,
    pub receiver: ReceiverSpec,
    pub pat: Option<PatSetup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Published figure of the terminal hardware.
    DeviceParameter,
    /// Modelling choice with no published value.
    Assumption,
}

/// A value the scenario file did not set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub key: String,
    pub value: String,
    pub basis: Basis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub provenance: Vec<Provenance>,
}

// Raw file layout. Every leaf is optional so that defaults can be recorded.

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    scenario: RawScenario,
    #[serde(skip_serializing_if = "Option::is_none")]
    platform_a: Option<RawPlatform>,
    #[serde(skip_serializing_if = "Option::is_none")]
    platform_b: Option<RawPlatform>,
    #[serde(skip_serializing_if = "Option::is_none")]
    terminal_a: Option<RawTerminal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    terminal_b: Option<RawTerminal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<RawSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    channel: Option<RawChannel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    receiver: Option<RawReceiver>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pat: Option<RawPat>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    earth_rotation: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlatform {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    latitude_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    longitude_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    altitude_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inclination_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    raan_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    waypoints: Option<Vec<RawWaypoint>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWaypoint {
    t_s: f64,
    latitude_deg: f64,
    longitude_deg: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerminal {
    #[serde(skip_serializing_if = "Option::is_none")]
    aperture_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    magnification: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wfe_waves_rms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    throughput: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wavelength_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    divergence_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coupling_base: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beacon_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beacon_divergence_rad: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t1_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slope_w_per_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_constant_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    self_heating_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_temp_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ambient_temp_c: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    #[serde(skip_serializing_if = "Option::is_none")]
    zenith_loss_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scintillation_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_elevation_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReceiver {
    #[serde(skip_serializing_if = "Option::is_none")]
    data_rate_bps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    photons_per_bit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    wavelength_m: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPat {
    #[serde(skip_serializing_if = "Option::is_none")]
    coarse_fov_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fine_fov_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gimbal_rate_limit_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gimbal_rate_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gimbal_kp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gimbal_ki: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fpm_range_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fpm_rate_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fpm_kp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fpm_ki: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coarse_noise_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fine_noise_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    handover_dwell: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beacon_threshold_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uncertainty_cone_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spiral_pitch_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan_rate_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    link_threshold_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    link_window_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unlink_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fine_loop_enabled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    point_ahead_enabled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    disturbance: Option<RawDisturbance>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisturbance {
    #[serde(skip_serializing_if = "Option::is_none")]
    bias_x_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bias_y_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    random_walk_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sinusoids: Option<Vec<RawSinusoid>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSinusoid {
    amplitude_x_rad: f64,
    amplitude_y_rad: f64,
    frequency_hz: f64,
    phase_rad: f64,
}

pub const DEFAULT_SITE_LAT_DEG: f64 = 35.7;
pub const DEFAULT_SITE_LON_DEG: f64 = 139.5;
pub const DEFAULT_GEO_LON_DEG: f64 = 135.0;
pub const DEFAULT_LEO_ALTITUDE_M: f64 = 400e3;
pub const DEFAULT_LEO_INCLINATION_DEG: f64 = 51.6;
pub const DEFAULT_HAPS_ALTITUDE_M: f64 = 20e3;
pub const DEFAULT_DRONE_ALTITUDE_M: f64 = 300.0;

struct Resolver {
    prov: Vec<Provenance>,
}

impl Resolver {
    fn take<T: Copy + fmt::Display>(&mut self, key: String, v: Option<T>, default: T, basis: Basis) -> T {
        v.unwrap_or_else(|| {
            self.prov.push(Provenance {
                key,
                value: default.to_string(),
                basis,
            });
            default
        })
    }
}

fn semantic(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Semantic {
        field: field.into(),
        reason: reason.into(),
    }
}

fn syntax_error(text: &str, err: &toml::de::Error) -> ConfigError {
    let line = err
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    ConfigError::Syntax {
        line,
        message: err.message().to_string(),
    }
}

/// Parse and validate a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let raw: RawFile = toml::from_str(text).map_err(|e| syntax_error(text, &e))?;
    let mut r = Resolver { prov: Vec::new() };
    let config = resolve(raw, &mut r)?;
    Ok(Scenario {
        config,
        provenance: r.prov,
    })
}

fn resolve(raw: RawFile, r: &mut Resolver) -> Result<ScenarioConfig, ConfigError> {
    use Basis::*;
    let s = raw.scenario;
    let kind: ScenarioKind = s
        .kind
        .as_deref()
        .ok_or_else(|| semantic("scenario.kind", "missing"))?
        .parse()
        .map_err(|e: String| semantic("scenario.kind", e))?;
    let earth_rotation = r.take(
        "scenario.earth_rotation".into(),
        s.earth_rotation,
        false,
        Assumption,
    );
    let start_s = r.take("scenario.start_s".into(), s.start_s, 0.0, Assumption);
    let duration_s = r.take("scenario.duration_s".into(), s.duration_s, 600.0, Assumption);
    let step_s = r.take("scenario.step_s".into(), s.step_s, 0.1, Assumption);
    let seed = r.take("scenario.seed".into(), s.seed, 0, Assumption);
    if !(start_s >= 0.0) || !start_s.is_finite() {
        return Err(semantic("scenario.start_s", "must be finite and >= 0"));
    }
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(semantic("scenario.duration_s", "must be finite and > 0"));
    }
    if !(step_s > 0.0) || step_s > duration_s {
        return Err(semantic("scenario.step_s", "must be in (0, duration_s]"));
    }

    let (ka, kb) = kind.platform_kinds();
    let platform_a = resolve_platform("platform_a", raw.platform_a, ka, r)?;
    let platform_b = resolve_platform("platform_b", raw.platform_b, kb, r)?;
    let mut expected = [ka, kb];
    let mut found = [platform_a.kind(), platform_b.kind()];
    expected.sort_by_key(|k| k.as_str());
    found.sort_by_key(|k| k.as_str());
    if expected != found {
        return Err(semantic(
            "platform kinds",
            format!(
                "{kind} needs {} and {}, found {} and {}",
                ka.as_str(),
                kb.as_str(),
                platform_a.kind().as_str(),
                platform_b.kind().as_str()
            ),
        ));
    }

    let terminal_a = resolve_terminal("terminal_a", raw.terminal_a.unwrap_or_default(), r)?;
    let terminal_b = resolve_terminal("terminal_b", raw.terminal_b.unwrap_or_default(), r)?;
    let source = resolve_source(raw.source.unwrap_or_default(), r)?;

    let c = raw.channel.unwrap_or_default();
    let dc = ChannelConfig::default();
    let channel = ChannelConfig {
        zenith_loss_db: r.take(
            "channel.zenith_loss_db".into(),
            c.zenith_loss_db,
            dc.zenith_loss_db,
            Assumption,
        ),
        scintillation_sigma: r.take(
            "channel.scintillation_sigma".into(),
            c.scintillation_sigma,
            dc.scintillation_sigma,
            Assumption,
        ),
        min_elevation_deg: r.take(
            "channel.min_elevation_deg".into(),
            c.min_elevation_deg,
            dc.min_elevation_deg,
            Assumption,
        ),
    };
    if !(channel.zenith_loss_db >= 0.0) {
        return Err(semantic("channel.zenith_loss_db", "must be >= 0"));
    }
    if !(channel.scintillation_sigma >= 0.0) {
        return Err(semantic("channel.scintillation_sigma", "must be >= 0"));
    }
    if !(channel.min_elevation_deg > 0.0 && channel.min_elevation_deg < 90.0) {
        return Err(semantic("channel.min_elevation_deg", "must be in (0, 90)"));
    }

    let rx = raw.receiver.unwrap_or_default();
    let dr = ReceiverSpec::default();
    let receiver = ReceiverSpec {
        data_rate_bps: r.take(
            "receiver.data_rate_bps".into(),
            rx.data_rate_bps,
            dr.data_rate_bps,
            Assumption,
        ),
        photons_per_bit: r.take(
            "receiver.photons_per_bit".into(),
            rx.photons_per_bit,
            dr.photons_per_bit,
            Assumption,
        ),
        wavelength_m: r.take(
            "receiver.wavelength_m".into(),
            rx.wavelength_m,
            dr.wavelength_m,
            DeviceParameter,
        ),
    };
    for (k, v) in [
        ("receiver.data_rate_bps", receiver.data_rate_bps),
        ("receiver.photons_per_bit", receiver.photons_per_bit),
        ("receiver.wavelength_m", receiver.wavelength_m),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(semantic(k, "must be finite and > 0"));
        }
    }

    let pat = raw.pat.map(|p| resolve_pat(p, r)).transpose()?;
    if let Some(p) = &pat {
        let ticks = step_s * p.config.fpm_rate_hz;
        if (ticks - ticks.round()).abs() > 1e-9 * ticks.max(1.0) || ticks.round() < 1.0 {
            return Err(semantic(
                "scenario.step_s",
                format!(
                    "{step_s} s is not a whole number of PAT ticks at {} Hz",
                    p.config.fpm_rate_hz
                ),
            ));
        }
    }

    Ok(ScenarioConfig {
        kind,
        earth_rotation: earth_rotation.into(),
        start_s,
        duration_s,
        step_s,
        seed,
        platform_a,
        platform_b,
        terminal_a,
        terminal_b,
        source,
        channel,
        receiver,
        pat,
    })
}

fn resolve_platform(
    section: &str,
    raw: Option<RawPlatform>,
    default_kind: PlatformKind,
    r: &mut Resolver,
) -> Result<PlatformSpec, ConfigError> {
    use Basis::Assumption;
    let p = raw.unwrap_or_default();
    let kind = match &p.kind {
        Some(k) => k
            .parse::<PlatformKind>()
            .map_err(|e| semantic(format!("{section}.kind"), e.to_string()))?,
        None => r
            .take(format!("{section}.kind"), None, default_kind.as_str(), Assumption)
            .parse()
            .expect("built-in platform kind"),
    };
    let key = |f: &str| format!("{section}.{f}");
    let allowed: &[&str] = match kind {
        PlatformKind::GroundSite | PlatformKind::Haps => &["latitude_deg", "longitude_deg", "altitude_m"],
        PlatformKind::Drone => &["altitude_m", "waypoints"],
        PlatformKind::LeoCircular => &["altitude_m", "inclination_deg", "raan_deg", "phase_deg"],
        PlatformKind::Geo => &["longitude_deg"],
    };
    let present = [
        ("latitude_deg", p.latitude_deg.is_some()),
        ("longitude_deg", p.longitude_deg.is_some()),
        ("altitude_m", p.altitude_m.is_some()),
        ("inclination_deg", p.inclination_deg.is_some()),
        ("raan_deg", p.raan_deg.is_some()),
        ("phase_deg", p.phase_deg.is_some()),
        ("waypoints", p.waypoints.is_some()),
    ];
    for (f, is_set) in present {
        if is_set && !allowed.contains(&f) {
            return Err(semantic(key(f), format!("does not apply to {}", kind.as_str())));
        }
    }
    let spec = match kind {
        PlatformKind::GroundSite => PlatformSpec::GroundSite {
            latitude_deg: r.take(
                key("latitude_deg"),
                p.latitude_deg,
                DEFAULT_SITE_LAT_DEG,
                Assumption,
            ),
            longitude_deg: r.take(
                key("longitude_deg"),
                p.longitude_deg,
                DEFAULT_SITE_LON_DEG,
                Assumption,
            ),
            altitude_m: r.take(key("altitude_m"), p.altitude_m, 0.0, Assumption),
        },
        PlatformKind::Haps => PlatformSpec::Haps {
            latitude_deg: r.take(
                key("latitude_deg"),
                p.latitude_deg,
                DEFAULT_SITE_LAT_DEG + 0.1,
                Assumption,
            ),
            longitude_deg: r.take(
                key("longitude_deg"),
                p.longitude_deg,
                DEFAULT_SITE_LON_DEG,
                Assumption,
            ),
            altitude_m: r.take(
                key("altitude_m"),
                p.altitude_m,
                DEFAULT_HAPS_ALTITUDE_M,
                Assumption,
            ),
        },
        PlatformKind::Drone => {
            let altitude_m = r.take(
                key("altitude_m"),
                p.altitude_m,
                DEFAULT_DRONE_ALTITUDE_M,
                Assumption,
            );
            let waypoints = match p.waypoints {
                Some(w) => w
                    .into_iter()
                    .map(|w| Waypoint {
                        t_s: w.t_s,
                        latitude_deg: w.latitude_deg,
                        longitude_deg: w.longitude_deg,
                    })
                    .collect(),
                None => {
                    let w = Waypoint {
                        t_s: 0.0,
                        latitude_deg: DEFAULT_SITE_LAT_DEG + 0.01,
                        longitude_deg: DEFAULT_SITE_LON_DEG,
                    };
                    r.prov.push(Provenance {
                        key: key("waypoints"),
                        value: format!("hold at ({}, {})", w.latitude_deg, w.longitude_deg),
                        basis: Assumption,
                    });
                    vec![w]
                }
            };
            PlatformSpec::Drone {
                altitude_m,
                waypoints,
            }
        }
        PlatformKind::LeoCircular => PlatformSpec::LeoCircular {
            altitude_m: r.take(
                key("altitude_m"),
                p.altitude_m,
                DEFAULT_LEO_ALTITUDE_M,
                Assumption,
            ),
            inclination_deg: r.take(
                key("inclination_deg"),
                p.inclination_deg,
                DEFAULT_LEO_INCLINATION_DEG,
                Assumption,
            ),
            raan_deg: r.take(key("raan_deg"), p.raan_deg, 0.0, Assumption),
            phase_deg: r.take(key("phase_deg"), p.phase_deg, 0.0, Assumption),
        },
        PlatformKind::Geo => PlatformSpec::Geo {
            longitude_deg: r.take(
                key("longitude_deg"),
                p.longitude_deg,
                DEFAULT_GEO_LON_DEG,
                Assumption,
            ),
        },
    };
    spec.validate().map_err(|e| semantic(section, e.to_string()))?;
    Ok(spec)
}

fn resolve_terminal(section: &str, t: RawTerminal, r: &mut Resolver) -> Result<TerminalSpec, ConfigError> {
    use Basis::*;
    let key = |f: &str| format!("{section}.{f}");
    let d = TerminalSpec::default();
    let dt = d.telescope;
    let telescope = TelescopeSpec {
        aperture_m: r.take(key("aperture_m"), t.aperture_m, dt.aperture_m, DeviceParameter),
        magnification: r.take(
            key("magnification"),
            t.magnification,
            dt.magnification,
            DeviceParameter,
        ),
        wfe_waves_rms: r.take(
            key("wfe_waves_rms"),
            t.wfe_waves_rms,
            dt.wfe_waves_rms,
            DeviceParameter,
        ),
        throughput: r.take(key("throughput"), t.throughput, dt.throughput, DeviceParameter),
        wavelength_m: r.take(
            key("wavelength_m"),
            t.wavelength_m,
            dt.wavelength_m,
            DeviceParameter,
        ),
        divergence_factor: r.take(
            key("divergence_factor"),
            t.divergence_factor,
            dt.divergence_factor,
            Assumption,
        ),
    };
    telescope
        .validate()
        .map_err(|e| semantic(key(e.field), e.reason))?;
    let spec = TerminalSpec {
        telescope,
        coupling_base: r.take(key("coupling_base"), t.coupling_base, d.coupling_base, Assumption),
        beacon_power_w: r.take(
            key("beacon_power_w"),
            t.beacon_power_w,
            d.beacon_power_w,
            Assumption,
        ),
        beacon_divergence_rad: r.take(
            key("beacon_divergence_rad"),
            t.beacon_divergence_rad,
            d.beacon_divergence_rad,
            Assumption,
        ),
    };
    if !(spec.coupling_base > 0.0 && spec.coupling_base <= 1.0) {
        return Err(semantic(key("coupling_base"), "must be in (0, 1]"));
    }
    if !(spec.beacon_power_w > 0.0) || !spec.beacon_power_w.is_finite() {
        return Err(semantic(key("beacon_power_w"), "must be finite and > 0"));
    }
    if !(spec.beacon_divergence_rad > 0.0) || !spec.beacon_divergence_rad.is_finite() {
        return Err(semantic(key("beacon_divergence_rad"), "must be finite and > 0"));
    }
    Ok(spec)
}

fn resolve_source(s: RawSource, r: &mut Resolver) -> Result<SourceConfig, ConfigError> {
    use Basis::*;
    let kind = match s.kind.as_deref() {
        Some(k) => k.to_string(),
        None => r.take("source.kind".into(), None, "edfa", Assumption).to_string(),
    };
    match kind.as_str() {
        "constant" => {
            for (f, set) in [
                ("initial_power_w", s.initial_power_w.is_some()),
                ("min_power_w", s.min_power_w.is_some()),
                ("t1_s", s.t1_s.is_some()),
                ("slope_w_per_c", s.slope_w_per_c.is_some()),
                ("time_constant_s", s.time_constant_s.is_some()),
                ("self_heating_c", s.self_heating_c.is_some()),
                ("reference_temp_c", s.reference_temp_c.is_some()),
                ("ambient_temp_c", s.ambient_temp_c.is_some()),
            ] {
                if set {
                    return Err(semantic(
                        format!("source.{f}"),
                        "does not apply to a constant source",
                    ));
                }
            }
            let power_w = r.take("source.power_w".into(), s.power_w, 2.0, Assumption);
            if !(power_w > 0.0) || !power_w.is_finite() {
                return Err(semantic("source.power_w", "must be finite and > 0"));
            }
            Ok(SourceConfig::Constant { power_w })
        }
        "edfa" => {
            if s.power_w.is_some() {
                return Err(semantic("source.power_w", "does not apply to an edfa source"));
            }
            let dt = CalibrationTarget::default();
            let df = FreeParams::default();
            let target = CalibrationTarget {
                initial_power_w: r.take(
                    "source.initial_power_w".into(),
                    s.initial_power_w,
                    dt.initial_power_w,
                    DeviceParameter,
                ),
                min_power_w: r.take(
                    "source.min_power_w".into(),
                    s.min_power_w,
                    dt.min_power_w,
                    DeviceParameter,
                ),
                t1_s: r.take("source.t1_s".into(), s.t1_s, dt.t1_s, DeviceParameter),
            };
            let free = FreeParams {
                slope_w_per_c: s.slope_w_per_c,
                time_constant_s: r.take(
                    "source.time_constant_s".into(),
                    s.time_constant_s,
                    df.time_constant_s,
                    Assumption,
                ),
                self_heating_c: r.take(
                    "source.self_heating_c".into(),
                    s.self_heating_c,
                    df.self_heating_c,
                    Assumption,
                ),
                reference_temp_c: r.take(
                    "source.reference_temp_c".into(),
                    s.reference_temp_c,
                    df.reference_temp_c,
                    Assumption,
                ),
                ambient_temp_c: r.take(
                    "source.ambient_temp_c".into(),
                    s.ambient_temp_c,
                    df.ambient_temp_c,
                    Assumption,
                ),
            };
            crate::amplifier::calibrate(target, free).map_err(|e| semantic("source", e.to_string()))?;
            Ok(SourceConfig::Edfa { target, free })
        }
        other => Err(semantic(
            "source.kind",
            format!("unknown source kind {other:?}; expected constant or edfa"),
        )),
    }
}

fn resolve_pat(p: RawPat, r: &mut Resolver) -> Result<PatSetup, ConfigError> {
    use Basis::Assumption;
    let d = PatConfig::default();
    let mut f =
        |name: &str, v: Option<f64>, default: f64| r.take(format!("pat.{name}"), v, default, Assumption);
    let mut config = PatConfig {
        coarse_fov_rad: f("coarse_fov_rad", p.coarse_fov_rad, d.coarse_fov_rad),
        fine_fov_rad: f("fine_fov_rad", p.fine_fov_rad, d.fine_fov_rad),
        gimbal_rate_limit_rad_s: f(
            "gimbal_rate_limit_rad_s",
            p.gimbal_rate_limit_rad_s,
            d.gimbal_rate_limit_rad_s,
        ),
        gimbal_rate_hz: f("gimbal_rate_hz", p.gimbal_rate_hz, d.gimbal_rate_hz),
        gimbal_gains: PiGains {
            kp: f("gimbal_kp", p.gimbal_kp, d.gimbal_gains.kp),
            ki: f("gimbal_ki", p.gimbal_ki, d.gimbal_gains.ki),
        },
        fpm_range_rad: f("fpm_range_rad", p.fpm_range_rad, d.fpm_range_rad),
        fpm_rate_hz: f("fpm_rate_hz", p.fpm_rate_hz, d.fpm_rate_hz),
        fpm_gains: PiGains {
            kp: f("fpm_kp", p.fpm_kp, d.fpm_gains.kp),
            ki: f("fpm_ki", p.fpm_ki, d.fpm_gains.ki),
        },
        coarse_noise_rad: f("coarse_noise_rad", p.coarse_noise_rad, d.coarse_noise_rad),
        fine_noise_rad: f("fine_noise_rad", p.fine_noise_rad, d.fine_noise_rad),
        handover_dwell: d.handover_dwell,
        beacon_threshold_dbm: f(
            "beacon_threshold_dbm",
            p.beacon_threshold_dbm,
            d.beacon_threshold_dbm,
        ),
        uncertainty_cone_rad: f(
            "uncertainty_cone_rad",
            p.uncertainty_cone_rad,
            d.uncertainty_cone_rad,
        ),
        spiral_pitch_factor: f(
            "spiral_pitch_factor",
            p.spiral_pitch_factor,
            d.spiral_pitch_factor,
        ),
        scan_rate_rad_s: f("scan_rate_rad_s", p.scan_rate_rad_s, d.scan_rate_rad_s),
        link_threshold_rad: f("link_threshold_rad", p.link_threshold_rad, d.link_threshold_rad),
        link_window_s: f("link_window_s", p.link_window_s, d.link_window_s),
        unlink_factor: f("unlink_factor", p.unlink_factor, d.unlink_factor),
        fine_loop_enabled: d.fine_loop_enabled,
        point_ahead_enabled: d.point_ahead_enabled,
    };
    config.handover_dwell = r.take(
        "pat.handover_dwell".into(),
        p.handover_dwell,
        d.handover_dwell,
        Assumption,
    );
    config.fine_loop_enabled = r.take(
        "pat.fine_loop_enabled".into(),
        p.fine_loop_enabled,
        d.fine_loop_enabled,
        Assumption,
    );
    config.point_ahead_enabled = r.take(
        "pat.point_ahead_enabled".into(),
        p.point_ahead_enabled,
        d.point_ahead_enabled,
        Assumption,
    );
    config.validate().map_err(|e| match e {
        PatError::Config { field, reason } => semantic(format!("pat: {field}"), reason),
        other => semantic("pat", other.to_string()),
    })?;

    let raw = p.disturbance.unwrap_or_default();
    let mut f = |name: &str, v: Option<f64>| r.take(format!("pat.disturbance.{name}"), v, 0.0, Assumption);
    let disturbance = DisturbanceModel {
        bias_x_rad: f("bias_x_rad", raw.bias_x_rad),
        bias_y_rad: f("bias_y_rad", raw.bias_y_rad),
        random_walk_sigma: f("random_walk_sigma", raw.random_walk_sigma),
        sinusoids: match raw.sinusoids {
            Some(v) => v
                .into_iter()
                .map(|s| Sinusoid {
                    amplitude_x_rad: s.amplitude_x_rad,
                    amplitude_y_rad: s.amplitude_y_rad,
                    frequency_hz: s.frequency_hz,
                    phase_rad: s.phase_rad,
                })
                .collect(),
            None => {
                r.prov.push(Provenance {
                    key: "pat.disturbance.sinusoids".into(),
                    value: "none".into(),
                    basis: Assumption,
                });
                Vec::new()
            }
        },
        seed: 0,
    };
    disturbance.validate().map_err(|e| match e {
        PatError::Config { reason, .. } => semantic("pat.disturbance", reason),
        other => semantic("pat.disturbance", other.to_string()),
    })?;
    Ok(PatSetup { config, disturbance })
}

impl ScenarioConfig {
    /// Scenario file text with every value written out.
    pub fn to_toml(&self) -> String {
        let raw = RawFile {
            scenario: RawScenario {
                kind: Some(self.kind.as_str().into()),
                earth_rotation: Some(self.earth_rotation == EarthRotation::On),
                start_s: Some(self.start_s),
                duration_s: Some(self.duration_s),
                step_s: Some(self.step_s),
                seed: Some(self.seed),
            },
            platform_a: Some(raw_platform(&self.platform_a)),
            platform_b: Some(raw_platform(&self.platform_b)),
            terminal_a: Some(raw_terminal(&self.terminal_a)),
            terminal_b: Some(raw_terminal(&self.terminal_b)),
            source: Some(match self.source {
                SourceConfig::Constant { power_w } => RawSource {
                    kind: Some("constant".into()),
                    power_w: Some(power_w),
                    ..Default::default()
                },
                SourceConfig::Edfa { target, free } => RawSource {
                    kind: Some("edfa".into()),
                    power_w: None,
                    initial_power_w: Some(target.initial_power_w),
                    min_power_w: Some(target.min_power_w),
                    t1_s: Some(target.t1_s),
                    slope_w_per_c: free.slope_w_per_c,
                    time_constant_s: Some(free.time_constant_s),
                    self_heating_c: Some(free.self_heating_c),
                    reference_temp_c: Some(free.reference_temp_c),
                    ambient_temp_c: Some(free.ambient_temp_c),
                },
            }),
            channel: Some(RawChannel {
                zenith_loss_db: Some(self.channel.zenith_loss_db),
                scintillation_sigma: Some(self.channel.scintillation_sigma),
                min_elevation_deg: Some(self.channel.min_elevation_deg),
            }),
            receiver: Some(RawReceiver {
                data_rate_bps: Some(self.receiver.data_rate_bps),
                photons_per_bit: Some(self.receiver.photons_per_bit),
                wavelength_m: Some(self.receiver.wavelength_m),
            }),
            pat: self.pat.as_ref().map(raw_pat),
        };
        toml::to_string(&raw).expect("scenario serializes to TOML")
    }
}

fn raw_platform(p: &PlatformSpec) -> RawPlatform {
    let mut raw = RawPlatform {
        kind: Some(p.kind().as_str().into()),
        ..Default::default()
    };
    match p {
        PlatformSpec::GroundSite {
            latitude_deg,
            longitude_deg,
            altitude_m,
        }
        | PlatformSpec::Haps {
            latitude_deg,
            longitude_deg,
            altitude_m,
        } => {
            raw.latitude_deg = Some(*latitude_deg);
            raw.longitude_deg = Some(*longitude_deg);
            raw.altitude_m = Some(*altitude_m);
        }
        PlatformSpec::Drone {
            altitude_m,
            waypoints,
        } => {
            raw.altitude_m = Some(*altitude_m);
            raw.waypoints = Some(
                waypoints
                    .iter()
                    .map(|w| RawWaypoint {
                        t_s: w.t_s,
                        latitude_deg: w.latitude_deg,
                        longitude_deg: w.longitude_deg,
                    })
                    .collect(),
            );
        }
        PlatformSpec::LeoCircular {
            altitude_m,
            inclination_deg,
            raan_deg,
            phase_deg,
        } => {
            raw.altitude_m = Some(*altitude_m);
            raw.inclination_deg = Some(*inclination_deg);
            raw.raan_deg = Some(*raan_deg);
            raw.phase_deg = Some(*phase_deg);
        }
        PlatformSpec::Geo { longitude_deg } => raw.longitude_deg = Some(*longitude_deg),
    }
    raw
}

fn raw_terminal(t: &TerminalSpec) -> RawTerminal {
    RawTerminal {
        aperture_m: Some(t.telescope.aperture_m),
        magnification: Some(t.telescope.magnification),
        wfe_waves_rms: Some(t.telescope.wfe_waves_rms),
        throughput: Some(t.telescope.throughput),
        wavelength_m: Some(t.telescope.wavelength_m),
        divergence_factor: Some(t.telescope.divergence_factor),
        coupling_base: Some(t.coupling_base),
        beacon_power_w: Some(t.beacon_power_w),
        beacon_divergence_rad: Some(t.beacon_divergence_rad),
    }
}

fn raw_pat(p: &PatSetup) -> RawPat {
    let c = &p.config;
    let d = &p.disturbance;
    RawPat {
        coarse_fov_rad: Some(c.coarse_fov_rad),
        fine_fov_rad: Some(c.fine_fov_rad),
        gimbal_rate_limit_rad_s: Some(c.gimbal_rate_limit_rad_s),
        gimbal_rate_hz: Some(c.gimbal_rate_hz),
        gimbal_kp: Some(c.gimbal_gains.kp),
        gimbal_ki: Some(c.gimbal_gains.ki),
        fpm_range_rad: Some(c.fpm_range_rad),
        fpm_rate_hz: Some(c.fpm_rate_hz),
        fpm_kp: Some(c.fpm_gains.kp),
        fpm_ki: Some(c.fpm_gains.ki),
        coarse_noise_rad: Some(c.coarse_noise_rad),
        fine_noise_rad: Some(c.fine_noise_rad),
        handover_dwell: Some(c.handover_dwell),
        beacon_threshold_dbm: Some(c.beacon_threshold_dbm),
        uncertainty_cone_rad: Some(c.uncertainty_cone_rad),
        spiral_pitch_factor: Some(c.spiral_pitch_factor),
        scan_rate_rad_s: Some(c.scan_rate_rad_s),
        link_threshold_rad: Some(c.link_threshold_rad),
        link_window_s: Some(c.link_window_s),
        unlink_factor: Some(c.unlink_factor),
        fine_loop_enabled: Some(c.fine_loop_enabled),
        point_ahead_enabled: Some(c.point_ahead_enabled),
        disturbance: Some(RawDisturbance {
            bias_x_rad: Some(d.bias_x_rad),
            bias_y_rad: Some(d.bias_y_rad),
            random_walk_sigma: Some(d.random_walk_sigma),
            sinusoids: Some(
                d.sinusoids
                    .iter()
                    .map(|s| RawSinusoid {
                        amplitude_x_rad: s.amplitude_x_rad,
                        amplitude_y_rad: s.amplitude_y_rad,
                        frequency_hz: s.frequency_hz,
                        phase_rad: s.phase_rad,
                    })
                    .collect(),
            ),
        }),
    }
}
