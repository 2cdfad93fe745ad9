//! Figures of merit for published memories and their ranking.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{check, Error, Result};
use crate::model::{external_efficiency, fractional_delays, noise_to_signal};
use crate::sync::{n_photon_rate, SyncParams};

/// Shortest clock cycle the feed-forward electronics can support, s.
pub const CLOCK_FLOOR_S: f64 = 20e-12;

/// Where a tabulated value came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Provenance {
    /// Own measurement, no annotation.
    #[default]
    Unspecified,
    /// Main text of the source.
    MainText,
    /// Methods section.
    Methods,
    /// Supplementary material.
    Supplement,
    /// Read off a figure; holds the figure tag, e.g. `4a`.
    Figure(String),
    /// Calculated from other values.
    Calculated,
    /// Not given; an upper-limit estimate is used.
    NotGiven,
}

impl Provenance {
    pub fn is_not_given(&self) -> bool {
        matches!(self, Provenance::NotGiven)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Unspecified => Ok(()),
            Provenance::MainText => f.write_str("MT"),
            Provenance::Methods => f.write_str("MS"),
            Provenance::Supplement => f.write_str("SM"),
            Provenance::Figure(tag) => write!(f, "EF{tag}"),
            Provenance::Calculated => f.write_str("C"),
            Provenance::NotGiven => f.write_str("NG"),
        }
    }
}

/// Unknown provenance code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseProvenanceError(pub String);

impl fmt::Display for ParseProvenanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown provenance code `{}`", self.0)
    }
}

impl FromStr for Provenance {
    type Err = ParseProvenanceError;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        let s = s.trim();
        Ok(match s {
            "" => Provenance::Unspecified,
            "MT" => Provenance::MainText,
            "MS" => Provenance::Methods,
            "SM" => Provenance::Supplement,
            "C" => Provenance::Calculated,
            "NG" => Provenance::NotGiven,
            _ => match s.strip_prefix("EF") {
                Some(tag) => Provenance::Figure(tag.trim().to_string()),
                None => return Err(ParseProvenanceError(s.to_string())),
            },
        })
    }
}

/// A value the source table quotes directly instead of computing it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Quoted {
    pub value: f64,
    pub provenance: Provenance,
}

/// Per-field provenance of a [`MemoryRecord`].
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecordProvenance {
    pub tau_p: Provenance,
    pub tau_s: Provenance,
    pub eta_int: Provenance,
    pub t_setup: Provenance,
    pub nu: Provenance,
}

/// Raw parameters of one published memory.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MemoryRecord {
    pub label: String,
    /// Signal pulse duration (FWHM), s.
    pub tau_p: f64,
    /// 1/e storage time, s.
    pub tau_s: f64,
    /// Internal efficiency at zero storage time.
    pub eta_int: f64,
    /// Setup transmission. 1.0 when not given by the source.
    pub t_setup: f64,
    /// Noise photons per retrieval attempt.
    pub nu: f64,
    pub provenance: RecordProvenance,
    pub footnotes: String,
    /// Clock cycle fixed by the device itself rather than by the pulse.
    pub tau_c: Option<Quoted>,
    /// External efficiency quoted by the source.
    pub eta0: Option<Quoted>,
    /// Noise-to-signal ratio quoted by the source.
    pub mu1: Option<Quoted>,
}

impl MemoryRecord {
    /// Record with unspecified provenance and no quoted overrides.
    pub fn new(label: impl Into<String>, tau_p: f64, tau_s: f64, eta_int: f64, t_setup: f64, nu: f64) -> Self {
        Self {
            label: label.into(),
            tau_p,
            tau_s,
            eta_int,
            t_setup,
            nu,
            provenance: RecordProvenance::default(),
            footnotes: String::new(),
            tau_c: None,
            eta0: None,
            mu1: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.tau_p > 0.0 && self.tau_p.is_finite(),
            "tau_p",
            self.tau_p,
            "must be positive",
        )?;
        check(
            self.tau_s > 0.0 && self.tau_s.is_finite(),
            "tau_s",
            self.tau_s,
            "must be positive",
        )?;
        check(
            (0.0..=1.0).contains(&self.eta_int),
            "eta_int",
            self.eta_int,
            "must lie in [0, 1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.t_setup),
            "t_setup",
            self.t_setup,
            "must lie in [0, 1]",
        )?;
        check(
            self.nu >= 0.0 && self.nu.is_finite(),
            "nu",
            self.nu,
            "must be non-negative",
        )?;
        if let Some(tc) = &self.tau_c {
            check(
                tc.value >= self.tau_p,
                "tau_c",
                tc.value,
                "must not be shorter than tau_p",
            )?;
        }
        if let Some(e) = &self.eta0 {
            check(e.value > 0.0 && e.value <= 1.0, "eta0", e.value, "must lie in (0, 1]")?;
        }
        if let Some(m) = &self.mu1 {
            check(m.value >= 0.0, "mu1", m.value, "must be non-negative")?;
        }
        Ok(())
    }

    /// Setup transmission is an upper-limit estimate.
    pub fn transmission_not_given(&self) -> bool {
        self.provenance.t_setup.is_not_given()
    }
}

/// Computed figures of merit for one memory.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DerivedMetrics {
    /// Clock cycle, s.
    pub tau_c: f64,
    pub eta0: f64,
    pub f_prime: f64,
    pub f_prime_e: f64,
    pub mu1: f64,
    /// Six-photon rate, min⁻¹.
    pub r6_per_min: f64,
    /// Computed with an upper-limit setup transmission.
    pub transmission_upper_limit: bool,
}

/// Knobs shared by every derived row.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeriveConfig {
    pub clock_floor: f64,
    /// Template for the rate formula; `tau_c`, `eta0` and `f` are replaced per row.
    pub sync: SyncParams,
}

impl Default for DeriveConfig {
    fn default() -> Self {
        Self {
            clock_floor: CLOCK_FLOOR_S,
            sync: SyncParams::six_photon(1.0, 0.0, 1.0),
        }
    }
}

/// Clock cycle: the pulse duration, but never faster than `floor`.
pub fn clock_cycle(tau_p: f64, floor: f64) -> f64 {
    tau_p.max(floor)
}

/// Figures of merit for one record.
pub fn derive(rec: &MemoryRecord, cfg: &DeriveConfig) -> Result<DerivedMetrics> {
    rec.validate()?;
    let tau_c = match &rec.tau_c {
        Some(q) => q.value.max(cfg.clock_floor),
        None => clock_cycle(rec.tau_p, cfg.clock_floor),
    };
    let eta0 = match &rec.eta0 {
        Some(q) => q.value,
        None => external_efficiency(rec.eta_int, rec.t_setup),
    };
    let (f_prime, f_prime_e) = fractional_delays(eta0, rec.tau_s, tau_c);
    let mu1 = match &rec.mu1 {
        Some(q) => q.value,
        None => noise_to_signal(rec.nu, eta0)?,
    };
    let sync = SyncParams {
        tau_c,
        eta0,
        f: f_prime,
        ..cfg.sync
    };
    let rate = n_photon_rate(&sync)?;
    Ok(DerivedMetrics {
        tau_c,
        eta0,
        f_prime,
        f_prime_e,
        mu1,
        r6_per_min: rate.rate_per_min(),
        transmission_upper_limit: rec.transmission_not_given(),
    })
}

/// Derives every record, keeping input order.
pub fn derive_all(records: &[MemoryRecord], cfg: &DeriveConfig) -> Result<Vec<DerivedMetrics>> {
    records.iter().map(|r| derive(r, cfg)).collect()
}

/// Ranking key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SortKey {
    /// Six-photon rate, descending.
    R6,
    /// Noise-to-signal ratio, ascending.
    Mu1,
    /// Effective fractional delay, descending.
    Fe,
}

impl SortKey {
    fn compare(self, a: &DerivedMetrics, b: &DerivedMetrics) -> Ordering {
        match self {
            SortKey::R6 => b.r6_per_min.total_cmp(&a.r6_per_min),
            SortKey::Mu1 => a.mu1.total_cmp(&b.mu1),
            SortKey::Fe => b.f_prime_e.total_cmp(&a.f_prime_e),
        }
    }
}

/// Indices of `derived` ordered by `key`. Ties keep input order.
pub fn rank(derived: &[DerivedMetrics], key: SortKey) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..derived.len()).collect();
    idx.sort_by(|&i, &j| key.compare(&derived[i], &derived[j]));
    idx
}

/// Index of the largest `f'_e` among rows whose noise-to-signal ratio is
/// below `mu1_limit` (typically the source emission probability).
pub fn best_low_noise_fe(derived: &[DerivedMetrics], mu1_limit: f64) -> Option<usize> {
    derived
        .iter()
        .enumerate()
        .filter(|(_, d)| d.mu1 < mu1_limit)
        .max_by(|a, b| a.1.f_prime_e.total_cmp(&b.1.f_prime_e))
        .map(|(i, _)| i)
}

/// Position and record carrying `label`.
pub fn find_label<'a>(records: &'a [MemoryRecord], label: &str) -> Result<(usize, &'a MemoryRecord)> {
    records
        .iter()
        .enumerate()
        .find(|(_, r)| r.label == label)
        .ok_or(Error::Domain("label not found"))
}
