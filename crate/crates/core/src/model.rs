//! Storage-efficiency decay model and the scalar figures of merit built on it.
//!
//! Times are in seconds and frequencies are cyclic (Hz) everywhere; the 2π
//! factor is applied only where an angular frequency enters a phase.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::{check, Error, Result};

/// Default 5D5/2 F=4 to F=3 hyperfine splitting, Hz.
pub const BEAT43_HZ: f64 = 28.82e6;
/// Default 5D5/2 F=4 to F=2 hyperfine splitting, Hz.
pub const BEAT42_HZ: f64 = 51.77e6;

/// Parameters of the beating, doubly-decaying efficiency curve.
///
/// The envelope is parameterised by the 1/e lifetime `tau_s` and the
/// complementary time `tau_bar`; see [`derived_times`] for the mapping to the
/// homogeneous and inhomogeneous decay times.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayModelParams {
    /// Efficiency at the storage reference time `t0`.
    pub eta0: f64,
    /// 1/e memory lifetime, s.
    pub tau_s: f64,
    /// Complementary envelope time, s.
    pub tau_bar: f64,
    /// Storage reference time, s.
    pub t0: f64,
    /// Amplitude of the F=3 beat.
    pub beat_a: f64,
    /// Amplitude of the F=2 beat.
    pub beat_b: f64,
    /// F=4/F=3 beat frequency, Hz.
    #[cfg_attr(feature = "serde", serde(default = "default_beat43"))]
    pub beat43_hz: f64,
    /// F=4/F=2 beat frequency, Hz.
    #[cfg_attr(feature = "serde", serde(default = "default_beat42"))]
    pub beat42_hz: f64,
}

#[cfg(feature = "serde")]
fn default_beat43() -> f64 {
    BEAT43_HZ
}

#[cfg(feature = "serde")]
fn default_beat42() -> f64 {
    BEAT42_HZ
}

impl DecayModelParams {
    /// Envelope-only parameters with the default hyperfine beat frequencies.
    pub fn new(eta0: f64, tau_s: f64, tau_bar: f64, t0: f64) -> Self {
        Self {
            eta0,
            tau_s,
            tau_bar,
            t0,
            beat_a: 0.0,
            beat_b: 0.0,
            beat43_hz: BEAT43_HZ,
            beat42_hz: BEAT42_HZ,
        }
    }

    pub fn with_beats(mut self, beat_a: f64, beat_b: f64) -> Self {
        self.beat_a = beat_a;
        self.beat_b = beat_b;
        self
    }

    /// Fit result for off-resonant storage (Δ = 1.15 GHz).
    pub fn off_resonance() -> Self {
        Self::new(0.251, 86e-9, 101e-9, -1.0e-9).with_beats(0.160, 0.006)
    }

    /// Fit result for resonant storage (Δ = 0).
    pub fn on_resonance() -> Self {
        Self::new(0.171, 82e-9, 337e-9, 9.2e-9).with_beats(0.032, 0.007)
    }

    pub fn omega43(&self) -> f64 {
        TAU * self.beat43_hz
    }

    pub fn omega42(&self) -> f64 {
        TAU * self.beat42_hz
    }

    /// Checks the type invariants. `tau_bar > tau_s` is not required here; it
    /// only matters once the envelope is split into [`EnvelopeTimes`].
    pub fn validate(&self) -> Result<()> {
        check(
            self.eta0 > 0.0 && self.eta0 <= 1.0,
            "eta0",
            self.eta0,
            "must lie in (0, 1]",
        )?;
        check(
            self.tau_s > 0.0 && self.tau_s.is_finite(),
            "tau_s",
            self.tau_s,
            "must be positive",
        )?;
        check(
            self.tau_bar > 0.0 && self.tau_bar.is_finite(),
            "tau_bar",
            self.tau_bar,
            "must be positive",
        )?;
        check(self.t0.is_finite(), "t0", self.t0, "must be finite")?;
        check(self.beat_a >= 0.0, "beat_a", self.beat_a, "must be non-negative")?;
        check(self.beat_b >= 0.0, "beat_b", self.beat_b, "must be non-negative")?;
        check(
            self.beat43_hz.is_finite(),
            "beat43_hz",
            self.beat43_hz,
            "must be finite",
        )?;
        check(
            self.beat42_hz.is_finite(),
            "beat42_hz",
            self.beat42_hz,
            "must be finite",
        )?;
        Ok(())
    }

    /// True when the homogeneous decay time is positive, i.e. `tau_bar > tau_s`.
    pub fn has_positive_homogeneous_time(&self) -> bool {
        self.tau_bar > self.tau_s
    }

    /// Exponent of the envelope at elapsed time `u = t - t0`, in the
    /// expanded form `-u²/(τs τ̄) - u/τs + u/τ̄`.
    pub(crate) fn envelope_exponent(&self, u: f64) -> f64 {
        -u * u / (self.tau_s * self.tau_bar) - u / self.tau_s + u / self.tau_bar
    }

    /// Real and imaginary parts of `1 + A e^{-iω43 u} + B e^{-iω42 u}`.
    fn beat_amplitude(&self, u: f64) -> (f64, f64) {
        let (p43, p42) = (self.omega43() * u, self.omega42() * u);
        let re = 1.0 + self.beat_a * libm::cos(p43) + self.beat_b * libm::cos(p42);
        let im = -(self.beat_a * libm::sin(p43) + self.beat_b * libm::sin(p42));
        (re, im)
    }

    /// Unnormalised beat intensity `|1 + A e^{-iω43 u} + B e^{-iω42 u}|²`.
    pub(crate) fn beat_numerator(&self, u: f64) -> f64 {
        let (re, im) = self.beat_amplitude(u);
        re * re + im * im
    }

    /// Beat factor normalised to one at `t = t0`.
    pub fn beat_factor(&self, t: f64) -> f64 {
        // normalise before squaring so that the factor is exactly 1 at t0
        let norm = 1.0 + self.beat_a + self.beat_b;
        let (re, im) = self.beat_amplitude(t - self.t0);
        let (re, im) = (re / norm, im / norm);
        re * re + im * im
    }
}

/// Homogeneous and inhomogeneous decay times of the envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvelopeTimes {
    /// Homogeneous (exponential) decay time, s.
    pub tau_gamma: f64,
    /// Inhomogeneous (Gaussian) decay time, s.
    pub tau_sigma: f64,
}

impl EnvelopeTimes {
    /// Inverse of [`derived_times`]: recovers `(tau_s, tau_bar)`.
    pub fn lifetimes(&self) -> (f64, f64) {
        let product = 2.0 * self.tau_sigma * self.tau_sigma;
        let diff = product / self.tau_gamma;
        let tau_s = 2.0 * product / (diff + libm::sqrt(diff * diff + 4.0 * product));
        (tau_s, tau_s + diff)
    }
}

/// Splits `(tau_s, tau_bar)` into `τγ = τs τ̄/(τ̄ − τs)` and `τσ = √(τs τ̄/2)`.
pub fn derived_times(tau_s: f64, tau_bar: f64) -> Result<EnvelopeTimes> {
    check(tau_s > 0.0, "tau_s", tau_s, "must be positive")?;
    if tau_bar <= tau_s {
        return Err(Error::Domain(
            "tau_bar must exceed tau_s for a positive homogeneous decay time",
        ));
    }
    Ok(EnvelopeTimes {
        tau_gamma: tau_s * tau_bar / (tau_bar - tau_s),
        tau_sigma: libm::sqrt(tau_s * tau_bar / 2.0),
    })
}

/// Beat-free envelope `η0 e^{-(t-t0)/τγ} e^{-(t-t0)²/(2τσ²)}`.
///
/// Evaluated from `tau_s` and `tau_bar` directly, so it is also defined when
/// `tau_bar <= tau_s` (where τγ would be negative or infinite).
pub fn envelope_efficiency(p: &DecayModelParams, t: f64) -> f64 {
    p.eta0 * libm::exp(p.envelope_exponent(t - p.t0))
}

/// Full model: envelope times the normalised hyperfine beat factor.
pub fn efficiency_at(p: &DecayModelParams, t: f64) -> f64 {
    envelope_efficiency(p, t) * p.beat_factor(t)
}

/// External efficiency as internal efficiency times setup transmission.
pub fn external_efficiency(eta_int: f64, t_setup: f64) -> f64 {
    eta_int * t_setup
}

/// Fractional delay `f' = τs/τc` and effective fractional delay `f'_e = η0 f'`.
pub fn fractional_delays(eta0: f64, tau_s: f64, tau_c: f64) -> (f64, f64) {
    let f_prime = tau_s / tau_c;
    (f_prime, eta0 * f_prime)
}

/// Noise-to-signal ratio `μ1 = ν/η0`.
pub fn noise_to_signal(nu: f64, eta0: f64) -> Result<f64> {
    if eta0 <= 0.0 {
        return Err(Error::Domain("noise-to-signal ratio needs a positive efficiency"));
    }
    Ok(nu / eta0)
}

/// One dephasing or decay channel.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateComponent {
    pub label: String,
    /// Cyclic rate, Hz.
    pub rate_hz: f64,
}

/// A set of decay channels whose rates add.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateBudget {
    pub components: Vec<RateComponent>,
}

impl RateBudget {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, label: impl Into<String>, rate_hz: f64) -> Self {
        self.components.push(RateComponent {
            label: label.into(),
            rate_hz,
        });
        self
    }

    pub fn total_hz(&self) -> f64 {
        self.components.iter().map(|c| c.rate_hz).sum()
    }

    /// Thermal-motion budget of the rubidium ladder: residual Doppler,
    /// transit time, and the 5D5/2 natural coherence decay.
    pub fn rubidium_ladder() -> Self {
        Self::new()
            .with("residual Doppler", 1.22e6)
            .with("transit time", 0.34e6)
            .with("5D natural decay", 0.33e6)
    }
}

/// Lifetime `1/(2π Σ f_i)` of a budget of cyclic rates.
pub fn lifetime_budget(budget: &RateBudget) -> Result<f64> {
    if budget.components.is_empty() {
        return Err(Error::Domain("rate budget has no components"));
    }
    for c in &budget.components {
        check(c.rate_hz >= 0.0, "rate_hz", c.rate_hz, "must be non-negative")?;
    }
    let total = budget.total_hz();
    if total <= 0.0 {
        return Err(Error::Domain("total decay rate must be positive"));
    }
    Ok(1.0 / (TAU * total))
}

/// Storage coupling `C = (Ω/Δ) √(τp γ OD) / 4`, with `γ·OD` given as one
/// cyclic rate in Hz.
pub fn coupling_parameter(omega_over_delta: f64, tau_p: f64, gamma_od_hz: f64) -> f64 {
    omega_over_delta * libm::sqrt(tau_p * TAU * gamma_od_hz) / 4.0
}

/// Fraction of isotropic fluorescence accepted by a fibre of numerical
/// aperture `na` behind a demagnifying imaging system: `(NA/M)²/4`.
pub fn fluorescence_collection_fraction(na: f64, demag: f64) -> f64 {
    let na_eff = na / demag;
    na_eff * na_eff / 4.0
}

/// Period of the F=3 beat, s.
pub fn beat43_period(p: &DecayModelParams) -> f64 {
    2.0 * PI / p.omega43()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// The model exponent exactly as printed, product form.
    fn printed_exponent_form(p: &DecayModelParams, t: f64) -> f64 {
        let u = t - p.t0;
        p.eta0 * libm::exp(-((u - p.tau_s) * (u + p.tau_bar) / (p.tau_s * p.tau_bar) + 1.0))
    }

    /// Envelope form built from the split decay times.
    fn split_form(p: &DecayModelParams, t: f64) -> f64 {
        let e = derived_times(p.tau_s, p.tau_bar).unwrap();
        let u = t - p.t0;
        p.eta0 * libm::exp(-u / e.tau_gamma) * libm::exp(-u * u / (2.0 * e.tau_sigma * e.tau_sigma))
    }

    #[test]
    fn sigma_times_match_reported_fits() {
        let off = derived_times(86e-9, 101e-9).unwrap();
        assert!((off.tau_sigma * 1e9 - 65.9).abs() < 0.05, "{}", off.tau_sigma);
        assert!((off.tau_sigma * 1e9 - 65.0).abs() < 4.0);
        let on = derived_times(82e-9, 337e-9).unwrap();
        assert!((on.tau_sigma * 1e9 - 117.5).abs() < 0.05);
    }

    #[test]
    fn doubled_tau_bar_identity() {
        let e = derived_times(50e-9, 100e-9).unwrap();
        assert!(rel(e.tau_gamma, 100e-9) < 1e-15);
        assert!(rel(e.tau_sigma, 50e-9) < 1e-15);
    }

    #[test]
    fn tau_bar_not_above_tau_s_is_rejected() {
        assert!(matches!(derived_times(86e-9, 86e-9), Err(Error::Domain(_))));
        assert!(derived_times(86e-9, 50e-9).is_err());
        assert!(derived_times(-1.0, 2.0).is_err());
    }

    #[test]
    fn efficiency_at_t0_is_eta0() {
        let p = DecayModelParams::off_resonance();
        assert_eq!(efficiency_at(&p, p.t0), p.eta0);
        assert_eq!(envelope_efficiency(&p, p.t0), p.eta0);
    }

    #[test]
    fn lifetime_is_one_over_e_point() {
        let p = DecayModelParams::new(0.3, 86e-9, 101e-9, 2e-9);
        let v = envelope_efficiency(&p, p.t0 + p.tau_s);
        assert!(rel(v, 0.3 * libm::exp(-1.0)) < 1e-12);
    }

    #[test]
    fn no_beats_means_envelope() {
        let p = DecayModelParams::new(0.2, 80e-9, 300e-9, 0.0);
        for i in 0..50 {
            let t = i as f64 * 4e-9;
            assert_eq!(efficiency_at(&p, t), envelope_efficiency(&p, t));
        }
    }

    #[test]
    fn beat_minima_follow_f3_period() {
        let p = DecayModelParams::off_resonance();
        let dt = 0.01e-9;
        let n = (200e-9 / dt) as usize;
        let beat: Vec<f64> = (0..=n).map(|i| p.beat_factor(i as f64 * dt)).collect();
        let minima: Vec<f64> = (1..n)
            .filter(|&i| beat[i] < beat[i - 1] && beat[i] <= beat[i + 1])
            .map(|i| i as f64 * dt)
            .collect();
        assert!(minima.len() >= 5);
        let period = beat43_period(&p);
        assert!((period * 1e9 - 34.7).abs() < 0.05);
        for w in minima.windows(2) {
            assert!((w[1] - w[0] - period).abs() < 1.5e-9, "spacing {}", w[1] - w[0]);
        }
    }

    #[test]
    fn external_efficiency_examples() {
        assert!((external_efficiency(0.322, 0.78) - 0.251).abs() < 5e-4);
        assert!((external_efficiency(0.21, 0.088) - 0.0185).abs() < 1e-4);
        assert_eq!(external_efficiency(0.37, 1.0), 0.37);
    }

    #[test]
    fn fractional_delay_examples() {
        let (f, fe) = fractional_delays(0.251, 86e-9, 1.7e-9);
        assert!((f - 50.6).abs() < 0.05);
        assert!((fe - 12.6).abs() < 0.1);
        let (f, fe) = fractional_delays(0.0185, 1.5e-6, 0.36e-9);
        assert!(rel(f, 4167.0) < 1e-3);
        assert!((fe - 77.0).abs() < 0.5);
        assert_eq!(fractional_delays(1.0, 3e-9, 3e-9), (1.0, 1.0));
    }

    #[test]
    fn noise_to_signal_examples() {
        assert!(rel(noise_to_signal(5.8e-5, 0.251).unwrap(), 2.3e-4) < 0.01);
        assert!(rel(noise_to_signal(1.9e-4, 0.171).unwrap(), 1.1e-3) < 0.02);
        assert_eq!(noise_to_signal(0.0, 0.4).unwrap(), 0.0);
        assert!(noise_to_signal(1e-4, 0.0).is_err());
    }

    #[test]
    fn lifetime_budget_examples() {
        let inhom = RateBudget::new().with("doppler", 1.22e6).with("transit", 0.34e6);
        assert!((lifetime_budget(&inhom).unwrap() * 1e9 - 102.0).abs() < 1.0);
        let full = RateBudget::rubidium_ladder();
        assert!((lifetime_budget(&full).unwrap() * 1e9 - 84.0).abs() < 1.0);
        let one = RateBudget::new().with("x", 3.0e6);
        assert!(rel(lifetime_budget(&one).unwrap(), 1.0 / (TAU * 3.0e6)) < 1e-15);
        assert!(lifetime_budget(&RateBudget::new()).is_err());
        assert!(lifetime_budget(&RateBudget::new().with("z", 0.0)).is_err());
        assert!(lifetime_budget(&RateBudget::new().with("neg", -1.0)).is_err());
    }

    #[test]
    fn coupling_examples() {
        let c = coupling_parameter(0.36, 1.7e-9, 5e9);
        assert!((c - 0.66).abs() < 0.01, "{c}");
        // Scaled-up projection: Ω→√30 Ω, Δ→3Δ, OD→10×, 200 ps pulses.
        let proj = coupling_parameter(0.36 * libm::sqrt(30.0) / 3.0, 0.2e-9, 50e9);
        assert!((proj - 1.3).abs() < 0.05, "{proj}");
        assert_eq!(coupling_parameter(0.0, 1e-9, 1e9), 0.0);
    }

    #[test]
    fn collection_fraction_examples() {
        let z = fluorescence_collection_fraction(0.11, 30.0);
        assert!(z > 2.5e-6 && z < 3.5e-6, "{z}");
        assert!(rel(fluorescence_collection_fraction(0.11, 1.0), 3.025e-3) < 1e-12);
        let base = fluorescence_collection_fraction(0.05, 7.0);
        assert!(rel(fluorescence_collection_fraction(0.10, 7.0), 4.0 * base) < 1e-12);
    }

    #[test]
    fn presets_validate() {
        DecayModelParams::off_resonance().validate().unwrap();
        DecayModelParams::on_resonance().validate().unwrap();
        let mut bad = DecayModelParams::off_resonance();
        bad.eta0 = 1.2;
        assert!(bad.validate().is_err());
        bad = DecayModelParams::off_resonance();
        bad.beat_a = -0.1;
        assert!(bad.validate().is_err());
    }

    fn params() -> impl Strategy<Value = DecayModelParams> {
        (
            0.01f64..1.0,
            1e-9f64..1e-6,
            1.01f64..20.0,
            -20e-9f64..20e-9,
            0.0f64..1.0,
            0.0f64..1.0,
        )
            .prop_map(|(eta0, tau_s, ratio, t0, a, b)| {
                DecayModelParams::new(eta0, tau_s, tau_s * ratio, t0).with_beats(a, b)
            })
    }

    proptest! {
        #[test]
        fn printed_and_split_forms_agree(p in params(), x in 0.0f64..3.0) {
            let t = p.t0 + x * p.tau_s;
            let a = printed_exponent_form(&p, t);
            prop_assert!(rel(envelope_efficiency(&p, t), a) < 1e-12);
            prop_assert!(rel(split_form(&p, t), a) < 1e-12);
        }

        #[test]
        fn beat_factor_bounds(p in params(), t in -50e-9f64..500e-9) {
            let f = p.beat_factor(t);
            prop_assert!(f >= 0.0);
            prop_assert!(efficiency_at(&p, t) >= 0.0);
            if p.beat_a + p.beat_b <= 1.0 {
                let s = 1.0 + p.beat_a + p.beat_b;
                let lo = (1.0 - p.beat_a - p.beat_b) / s;
                prop_assert!(f >= lo * lo - 1e-12);
                prop_assert!(f <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn derived_times_round_trip(tau_s in 1e-10f64..1e-4, ratio in 1.001f64..100.0) {
            let tau_bar = tau_s * ratio;
            let (s, b) = derived_times(tau_s, tau_bar).unwrap().lifetimes();
            prop_assert!(rel(s, tau_s) < 1e-10);
            prop_assert!(rel(b, tau_bar) < 1e-10);
        }

        #[test]
        fn budget_permutation_and_monotonicity(
            rates in proptest::collection::vec(1e3f64..1e8, 1..6),
            k in 0usize..6,
            bump in 1.0f64..1e6,
        ) {
            let fwd = rates.iter().fold(RateBudget::new(), |b, r| b.with("c", *r));
            let rev = rates.iter().rev().fold(RateBudget::new(), |b, r| b.with("c", *r));
            let t_fwd = lifetime_budget(&fwd).unwrap();
            prop_assert!(rel(lifetime_budget(&rev).unwrap(), t_fwd) < 1e-14);
            let mut bumped = rates.clone();
            let i = k % bumped.len();
            bumped[i] += bump;
            let b = bumped.iter().fold(RateBudget::new(), |b, r| b.with("c", *r));
            prop_assert!(lifetime_budget(&b).unwrap() < t_fwd);
        }
    }

    #[test]
    fn budget_labels_kept() {
        let b = RateBudget::rubidium_ladder();
        let labels: Vec<&str> = b.components.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, vec!["residual Doppler", "transit time", "5D natural decay"]);
    }
}
