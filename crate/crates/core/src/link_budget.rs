//! Itemized dB ledger from transmit power to receive margin, plus the
//! photons-per-bit sensitivity model standing in for the modem.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

use crate::optics::to_db;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
pub use crate::geometry::SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BudgetError {
    #[error("transmit power {0} W must be > 0")]
    TxPower(f64),
    #[error("loss term {name} is {value} dB; losses must be <= 0 dB")]
    PositiveLoss { name: &'static str, value: f64 },
    #[error("term {0} appears more than once")]
    DuplicateTerm(&'static str),
    #[error("term {name} is not finite ({value})")]
    NonFinite { name: &'static str, value: f64 },
    #[error("dB ledger and linear product disagree by {0} dB")]
    CrossCheck(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub zenith_loss_db: f64,
    /// Log-amplitude standard deviation; 0 disables fading.
    pub scintillation_sigma: f64,
    pub min_elevation_deg: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            zenith_loss_db: 1.0,
            scintillation_sigma: 0.0,
            min_elevation_deg: 5.0,
        }
    }
}

impl ChannelConfig {
    pub fn min_elevation_rad(&self) -> f64 {
        self.min_elevation_deg.to_radians()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceiverSpec {
    pub data_rate_bps: f64,
    pub photons_per_bit: f64,
    pub wavelength_m: f64,
}

impl Default for ReceiverSpec {
    fn default() -> Self {
        Self {
            data_rate_bps: 1e10,
            photons_per_bit: 1000.0,
            wavelength_m: 1.55e-6,
        }
    }
}

/// Budget line items in canonical ledger order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    TxPathEfficiency,
    TxAntennaGain,
    Strehl,
    PointingLoss,
    FreeSpaceLoss,
    AtmosphericLoss,
    Scintillation,
    RxAntennaGain,
    RxPathEfficiency,
    CouplingEfficiency,
}

impl Term {
    pub const ALL: [Term; 10] = [
        Term::TxPathEfficiency,
        Term::TxAntennaGain,
        Term::Strehl,
        Term::PointingLoss,
        Term::FreeSpaceLoss,
        Term::AtmosphericLoss,
        Term::Scintillation,
        Term::RxAntennaGain,
        Term::RxPathEfficiency,
        Term::CouplingEfficiency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Term::TxPathEfficiency => "tx_path_efficiency",
            Term::TxAntennaGain => "tx_antenna_gain",
            Term::Strehl => "strehl",
            Term::PointingLoss => "pointing_loss",
            Term::FreeSpaceLoss => "free_space_loss",
            Term::AtmosphericLoss => "atmospheric_loss",
            Term::Scintillation => "scintillation",
            Term::RxAntennaGain => "rx_antenna_gain",
            Term::RxPathEfficiency => "rx_path_efficiency",
            Term::CouplingEfficiency => "coupling_efficiency",
        }
    }

    /// Terms that may only attenuate.
    pub fn is_loss(self) -> bool {
        !matches!(
            self,
            Term::TxAntennaGain | Term::RxAntennaGain | Term::Scintillation
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub name: &'static str,
    pub db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkBudgetReport {
    pub tx_power_dbm: f64,
    /// Ledger after the transmit power, in canonical order.
    pub terms: Vec<LedgerEntry>,
    pub received_dbm: f64,
    pub required_dbm: f64,
    pub margin_db: f64,
}

impl LinkBudgetReport {
    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|e| e.name == name).map(|e| e.db)
    }

    /// Human-readable ledger, one line per item.
    pub fn render(&self) -> String {
        let mut out = format!("{:<22} {:>12.4} dBm\n", "tx_power", self.tx_power_dbm);
        for e in &self.terms {
            out += &format!("{:<22} {:>12.4} dB\n", e.name, e.db);
        }
        out += &format!("{:<22} {:>12.4} dBm\n", "received_power", self.received_dbm);
        out += &format!("{:<22} {:>12.4} dBm\n", "required_power", self.required_dbm);
        out += &format!("{:<22} {:>12.4} dB\n", "margin", self.margin_db);
        out
    }
}

/// Link state at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkOutcome {
    Available(LinkBudgetReport),
    /// Atmospheric path below the elevation mask.
    Unavailable {
        elevation_rad: f64,
    },
    /// Exo-atmospheric path occulted by the Earth.
    Blocked,
}

impl LinkOutcome {
    pub fn report(&self) -> Option<&LinkBudgetReport> {
        match self {
            LinkOutcome::Available(r) => Some(r),
            _ => None,
        }
    }
}

/// Free-space loss `20·log10(λ/(4πR))`, negative.
pub fn free_space_loss(range_m: f64, wavelength_m: f64) -> f64 {
    20.0 * (wavelength_m / (4.0 * std::f64::consts::PI * range_m)).log10()
}

/// Atmospheric attenuation result; `BelowMask` marks an unusable path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Atmosphere {
    LossDb(f64),
    BelowMask,
}

/// Flat airmass model `zenith_loss / sin(elevation)`; zero for paths that do
/// not cross the atmosphere.
pub fn atmospheric_loss(cfg: &ChannelConfig, elevation_rad: f64, crosses_atmosphere: bool) -> Atmosphere {
    if !crosses_atmosphere {
        return Atmosphere::LossDb(0.0);
    }
    if !(elevation_rad >= cfg.min_elevation_rad()) || elevation_rad <= 0.0 {
        return Atmosphere::BelowMask;
    }
    Atmosphere::LossDb(-cfg.zenith_loss_db / elevation_rad.sin())
}

/// Photon energy `h·c/λ`, joules.
pub fn photon_energy(wavelength_m: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength_m
}

/// Receiver sensitivity in dBm.
pub fn required_power(rx: &ReceiverSpec) -> f64 {
    watts_to_dbm(rx.photons_per_bit * photon_energy(rx.wavelength_m) * rx.data_rate_bps)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    to_db(w * 1000.0)
}

/// Assemble the ledger. Terms are sorted into canonical order; each may
/// appear at most once.
pub fn compose(
    tx_power_w: f64,
    terms: &[(Term, f64)],
    rx: &ReceiverSpec,
) -> Result<LinkBudgetReport, BudgetError> {
    if !(tx_power_w > 0.0) || !tx_power_w.is_finite() {
        return Err(BudgetError::TxPower(tx_power_w));
    }
    let mut sorted = terms.to_vec();
    sorted.sort_by_key(|(t, _)| *t);
    for pair in sorted.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(BudgetError::DuplicateTerm(pair[0].0.name()));
        }
    }
    for &(t, db) in &sorted {
        if !db.is_finite() {
            return Err(BudgetError::NonFinite {
                name: t.name(),
                value: db,
            });
        }
        if t.is_loss() && db > 0.0 {
            return Err(BudgetError::PositiveLoss {
                name: t.name(),
                value: db,
            });
        }
    }
    let tx_dbm = watts_to_dbm(tx_power_w);
    let received = tx_dbm + sorted.iter().map(|(_, db)| db).sum::<f64>();

    // Same ledger in the linear domain.
    let linear_mw = sorted
        .iter()
        .fold(tx_power_w * 1000.0, |acc, (_, db)| acc * 10f64.powf(db / 10.0));
    // Extreme pointing losses leave the f64 range; only a representable
    // product can be compared.
    if linear_mw.is_normal() {
        let diff = (10.0 * linear_mw.log10() - received).abs();
        if !(diff <= 1e-6) {
            return Err(BudgetError::CrossCheck(diff));
        }
    }

    let required = required_power(rx);
    Ok(LinkBudgetReport {
        tx_power_dbm: tx_dbm,
        terms: sorted
            .into_iter()
            .map(|(t, db)| LedgerEntry { name: t.name(), db })
            .collect(),
        received_dbm: received,
        required_dbm: required,
        margin_db: received - required,
    })
}

/// Log-normal intensity fade in dB with unit mean intensity.
///
/// The log-amplitude `χ ~ N(−σ², σ²)` gives intensity `exp(2χ)` with
/// `E[exp(2χ)] = 1`. The draw is a pure function of `(seed, t)`.
pub fn scintillation_draw(sigma: f64, seed: u64, t: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t.to_bits().rotate_left(29));
    let z: f64 = StandardNormal.sample(&mut rng);
    let chi = -sigma * sigma + sigma * z;
    // 10*log10(exp(2 chi))
    20.0 * chi / std::f64::consts::LN_10
}
