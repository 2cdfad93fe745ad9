//! Least-squares estimation of [`DecayModelParams`] from efficiency-versus-time
//! samples.
//!
//! The solver is a projected Levenberg-Marquardt iteration on the internal
//! vector `[η0, ln τs, ln τ̄, t0/T, A, B]`, where `T` is the span of the sample
//! times. The beat frequencies are held fixed. Uncertainties come from the
//! Gauss-Newton curvature at the optimum.

use alloc::vec::Vec;

use nalgebra::{SMatrix, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check, Error, Result};
use crate::model::{efficiency_at, DecayModelParams};

pub const N_PARAMS: usize = 6;
/// Names of the fitted parameters, in internal order.
pub const PARAM_NAMES: [&str; N_PARAMS] = ["eta0", "tau_s", "tau_bar", "t0", "beat_a", "beat_b"];

type Vec6 = SVector<f64, N_PARAMS>;
type Mat6 = SMatrix<f64, N_PARAMS, N_PARAMS>;

/// One measured efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecaySample {
    /// Storage time, s.
    pub t: f64,
    pub eta: f64,
    /// Standard error of `eta`, if known.
    pub sigma: Option<f64>,
}

impl DecaySample {
    pub fn new(t: f64, eta: f64) -> Self {
        Self { t, eta, sigma: None }
    }

    pub fn validate(&self) -> Result<()> {
        check(self.t.is_finite(), "t", self.t, "must be finite")?;
        check(
            self.eta >= 0.0 && self.eta.is_finite(),
            "eta",
            self.eta,
            "must be non-negative",
        )?;
        if let Some(s) = self.sigma {
            check(s > 0.0 && s.is_finite(), "sigma", s, "must be positive")?;
        }
        Ok(())
    }

    fn weight(&self) -> f64 {
        self.sigma.map_or(1.0, |s| 1.0 / (s * s))
    }
}

/// Per-parameter values (used for uncertainties and bounds).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParamSet {
    pub eta0: f64,
    pub tau_s: f64,
    pub tau_bar: f64,
    pub t0: f64,
    pub beat_a: f64,
    pub beat_b: f64,
}

impl ParamSet {
    pub fn splat(v: f64) -> Self {
        Self::from_array([v; N_PARAMS])
    }

    pub fn to_array(self) -> [f64; N_PARAMS] {
        [self.eta0, self.tau_s, self.tau_bar, self.t0, self.beat_a, self.beat_b]
    }

    pub fn from_array(a: [f64; N_PARAMS]) -> Self {
        Self {
            eta0: a[0],
            tau_s: a[1],
            tau_bar: a[2],
            t0: a[3],
            beat_a: a[4],
            beat_b: a[5],
        }
    }

    pub fn of(p: &DecayModelParams) -> Self {
        Self::from_array([p.eta0, p.tau_s, p.tau_bar, p.t0, p.beat_a, p.beat_b])
    }
}

/// Box constraints on the fitted parameters, in natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bounds {
    pub lower: ParamSet,
    pub upper: ParamSet,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            lower: ParamSet::from_array([0.0, 0.0, 0.0, f64::NEG_INFINITY, 0.0, 0.0]),
            upper: ParamSet::from_array([1.0, f64::INFINITY, f64::INFINITY, f64::INFINITY, 2.0, 2.0]),
        }
    }
}

/// How samples are weighted in the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Weighting {
    /// Every sample weighs 1; uncertainties are scaled by the reduced χ².
    #[default]
    Uniform,
    /// `1/σ²` for samples that carry σ (1 otherwise); uncertainties taken as absolute.
    InverseVariance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub bounds: Bounds,
    pub weighting: Weighting,
    pub max_iterations: usize,
    /// Stop when `‖step‖ ≤ xtol (‖x‖ + xtol)`.
    pub xtol: f64,
    /// Stop when an accepted step lowers the objective by less than `ftol` relative.
    pub ftol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bounds: Bounds::default(),
            weighting: Weighting::Uniform,
            max_iterations: 500,
            xtol: 1e-10,
            ftol: 1e-12,
        }
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FitStatus {
    StepTolerance,
    ObjectiveTolerance,
    ExactFit,
    /// Damping grew without finding a descent step.
    Stalled,
    MaxIterations,
}

impl FitStatus {
    pub fn is_converged(self) -> bool {
        !matches!(self, FitStatus::MaxIterations)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub params: DecayModelParams,
    /// 1σ uncertainties; infinite when the curvature matrix is singular.
    pub stderr: ParamSet,
    /// `√Σ wᵢ (model − data)²` at the optimum.
    pub residual_norm: f64,
    pub converged: bool,
    pub status: FitStatus,
    /// Curvature matrix could not be inverted.
    pub singular: bool,
    pub iterations: usize,
    /// Objective after each accepted step, starting with the initial guess.
    pub objective_trace: Vec<f64>,
}

/// Samples of the model curve with additive Gaussian noise, clamped at zero.
pub fn generate_synthetic(
    p: &DecayModelParams,
    times: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<Vec<DecaySample>> {
    check(
        noise_sigma >= 0.0 && noise_sigma.is_finite(),
        "noise_sigma",
        noise_sigma,
        "must be non-negative",
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma).map_err(|_| Error::Domain("invalid noise level"))?;
    Ok(times
        .iter()
        .map(|&t| {
            let clean = efficiency_at(p, t);
            let eta = if noise_sigma > 0.0 {
                (clean + normal.sample(&mut rng)).max(0.0)
            } else {
                clean
            };
            DecaySample {
                t,
                eta,
                sigma: (noise_sigma > 0.0).then_some(noise_sigma),
            }
        })
        .collect())
}

/// Weighted residuals `(model − data)/σ` (σ = 1 when absent), in sample order.
pub fn residuals(p: &DecayModelParams, samples: &[DecaySample]) -> Vec<f64> {
    samples
        .iter()
        .map(|s| (efficiency_at(p, s.t) - s.eta) * libm::sqrt(s.weight()))
        .collect()
}

/// `√Σ r²` of [`residuals`].
pub fn residual_norm(p: &DecayModelParams, samples: &[DecaySample]) -> f64 {
    libm::sqrt(residuals(p, samples).iter().map(|r| r * r).sum())
}

/// Partial derivatives of the model at `t` with respect to
/// `(η0, τs, τ̄, t0, A, B)`.
pub fn model_gradient(p: &DecayModelParams, t: f64) -> [f64; N_PARAMS] {
    let u = t - p.t0;
    let (ts, tb) = (p.tau_s, p.tau_bar);
    let (a, b) = (p.beat_a, p.beat_b);
    let w43 = p.omega43();
    let w42 = p.omega42();
    let w32 = w43 - w42;

    let env = libm::exp(p.envelope_exponent(u));
    let num = p.beat_numerator(u);
    let s = 1.0 + a + b;
    let den = s * s;
    let eta = p.eta0 * env * num / den;

    let dg_dts = u * u / (ts * ts * tb) + u / (ts * ts);
    let dg_dtb = u * u / (ts * tb * tb) - u / (tb * tb);
    let dg_du = -2.0 * u / (ts * tb) - 1.0 / ts + 1.0 / tb;
    let dnum_du = -2.0 * a * w43 * libm::sin(w43 * u)
        - 2.0 * b * w42 * libm::sin(w42 * u)
        - 2.0 * a * b * w32 * libm::sin(w32 * u);
    let dnum_da = 2.0 * a + 2.0 * libm::cos(w43 * u) + 2.0 * b * libm::cos(w32 * u);
    let dnum_db = 2.0 * b + 2.0 * libm::cos(w42 * u) + 2.0 * a * libm::cos(w32 * u);
    let scale = p.eta0 * env;

    [
        env * num / den,
        eta * dg_dts,
        eta * dg_dtb,
        -(eta * dg_du + scale * dnum_du / den),
        scale * (dnum_da * den - num * 2.0 * s) / (den * den),
        scale * (dnum_db * den - num * 2.0 * s) / (den * den),
    ]
}

/// Deterministic starting point: `η0` is the largest sample and `t0` its
/// time; `τs` is where a 3-point moving average first drops below `η0/e`
/// (linearly interpolated, measured from `t0`); `τ̄ = 2τs`, `A = 0.1`,
/// `B = 0.01`.
pub fn initial_guess(samples: &[DecaySample]) -> Result<DecayModelParams> {
    validate_samples(samples)?;
    let mut sorted: Vec<DecaySample> = samples.to_vec();
    sorted.sort_by(|x, y| x.t.total_cmp(&y.t));
    let n = sorted.len();
    let (imax, peak) = sorted
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.eta.total_cmp(&b.1.eta))
        .map(|(i, s)| (i, *s))
        .ok_or(Error::TooFewSamples { needed: 7, got: 0 })?;
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            sorted[lo..=hi].iter().map(|s| s.eta).sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let eta0 = peak.eta.clamp(1e-6, 1.0);
    let t0 = peak.t;
    let threshold = eta0 / core::f64::consts::E;
    let span = sorted[n - 1].t - sorted[0].t;
    let mut tau_s = sorted[n - 1].t - t0;
    for i in (imax + 1)..n {
        if smooth[i] < threshold {
            let (t1, y1) = (sorted[i - 1].t, smooth[i - 1]);
            let (t2, y2) = (sorted[i].t, smooth[i]);
            let frac = if y1 > y2 {
                ((y1 - threshold) / (y1 - y2)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            tau_s = t1 + frac * (t2 - t1) - t0;
            break;
        }
    }
    let tau_s = tau_s.max(span / 100.0);
    Ok(DecayModelParams::new(eta0, tau_s, 2.0 * tau_s, t0).with_beats(0.1, 0.01))
}

fn validate_samples(samples: &[DecaySample]) -> Result<()> {
    if samples.len() < N_PARAMS + 1 {
        return Err(Error::TooFewSamples {
            needed: N_PARAMS + 1,
            got: samples.len(),
        });
    }
    for s in samples {
        s.validate()?;
    }
    let t_first = samples[0].t;
    if samples.iter().all(|s| s.t == t_first) {
        return Err(Error::DegenerateTimes);
    }
    Ok(())
}

struct Problem<'a> {
    samples: &'a [DecaySample],
    sqrt_w: Vec<f64>,
    template: DecayModelParams,
    time_scale: f64,
    lower: Vec6,
    upper: Vec6,
}

impl<'a> Problem<'a> {
    fn new(samples: &'a [DecaySample], init: &DecayModelParams, opts: &FitOptions) -> Self {
        let sqrt_w = samples
            .iter()
            .map(|s| match opts.weighting {
                Weighting::Uniform => 1.0,
                Weighting::InverseVariance => libm::sqrt(s.weight()),
            })
            .collect();
        let (tmin, tmax) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.t), hi.max(s.t))
        });
        let time_scale = tmax - tmin;
        let mut problem = Self {
            samples,
            sqrt_w,
            template: *init,
            time_scale,
            lower: Vec6::zeros(),
            upper: Vec6::zeros(),
        };
        problem.lower = problem.internal_bound(&opts.bounds.lower);
        problem.upper = problem.internal_bound(&opts.bounds.upper);
        problem
    }

    fn internal_bound(&self, b: &ParamSet) -> Vec6 {
        Vec6::from([
            b.eta0,
            ln_or_inf(b.tau_s),
            ln_or_inf(b.tau_bar),
            b.t0 / self.time_scale,
            b.beat_a,
            b.beat_b,
        ])
    }

    fn to_internal(&self, p: &DecayModelParams) -> Vec6 {
        Vec6::from([
            p.eta0,
            libm::log(p.tau_s),
            libm::log(p.tau_bar),
            p.t0 / self.time_scale,
            p.beat_a,
            p.beat_b,
        ])
    }

    fn to_params(&self, x: &Vec6) -> DecayModelParams {
        DecayModelParams {
            eta0: x[0],
            tau_s: libm::exp(x[1]),
            tau_bar: libm::exp(x[2]),
            t0: x[3] * self.time_scale,
            beat_a: x[4],
            beat_b: x[5],
            ..self.template
        }
    }

    fn project(&self, x: &Vec6) -> Vec6 {
        Vec6::from_fn(|i, _| x[i].clamp(self.lower[i], self.upper[i]))
    }

    fn residuals(&self, x: &Vec6) -> Vec<f64> {
        let p = self.to_params(x);
        self.samples
            .iter()
            .zip(&self.sqrt_w)
            .map(|(s, w)| (efficiency_at(&p, s.t) - s.eta) * w)
            .collect()
    }

    /// Normal-equation pieces `(JᵀJ, Jᵀr)` in internal coordinates.
    fn normal_equations(&self, x: &Vec6, r: &[f64]) -> (Mat6, Vec6) {
        let p = self.to_params(x);
        let chain = [1.0, p.tau_s, p.tau_bar, self.time_scale, 1.0, 1.0];
        let mut jtj = Mat6::zeros();
        let mut jtr = Vec6::zeros();
        for ((s, w), ri) in self.samples.iter().zip(&self.sqrt_w).zip(r) {
            let g = model_gradient(&p, s.t);
            let row = Vec6::from_fn(|i, _| g[i] * chain[i] * w);
            jtj += row * row.transpose();
            jtr += row * *ri;
        }
        (jtj, jtr)
    }

    /// `JᵀJ` in natural coordinates.
    fn natural_curvature(&self, p: &DecayModelParams) -> Mat6 {
        let mut jtj = Mat6::zeros();
        for (s, w) in self.samples.iter().zip(&self.sqrt_w) {
            let g = model_gradient(p, s.t);
            let row = Vec6::from_fn(|i, _| g[i] * w);
            jtj += row * row.transpose();
        }
        jtj
    }

    fn linearised_objective(&self, x: &Vec6, r: &[f64], step: &Vec6) -> f64 {
        let (jtj, jtr) = self.normal_equations(x, r);
        let base: f64 = r.iter().map(|v| v * v).sum();
        base + 2.0 * step.dot(&jtr) + (step.transpose() * jtj * step)[(0, 0)]
    }
}

fn ln_or_inf(v: f64) -> f64 {
    if v <= 0.0 {
        f64::NEG_INFINITY
    } else {
        libm::log(v)
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Fits the six free parameters of `init` to `samples`; beat frequencies are
/// copied from `init` and never varied.
pub fn fit_decay(samples: &[DecaySample], init: &DecayModelParams, opts: &FitOptions) -> Result<FitResult> {
    validate_samples(samples)?;
    init.validate()?;
    let problem = Problem::new(samples, init, opts);

    let mut x = problem.project(&problem.to_internal(init));
    let mut r = problem.residuals(&x);
    let mut obj = sum_sq(&r);
    let mut trace = alloc::vec![obj];
    let (mut jtj, mut jtr) = problem.normal_equations(&x, &r);
    let max_diag = (0..N_PARAMS).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
    let mut mu = 1e-3 * max_diag.max(f64::MIN_POSITIVE);
    let mut nu = 2.0;
    let mut status = FitStatus::MaxIterations;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        if obj == 0.0 {
            status = FitStatus::ExactFit;
            break;
        }
        let mut damped = jtj;
        for i in 0..N_PARAMS {
            damped[(i, i)] += mu * jtj[(i, i)].max(1e-12 * max_diag.max(1e-300));
        }
        let Some(chol) = damped.cholesky() else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        let x_new = problem.project(&(x - chol.solve(&jtr)));
        let step = x_new - x;
        if step.norm() <= opts.xtol * (x.norm() + opts.xtol) {
            status = FitStatus::StepTolerance;
            break;
        }
        let r_new = problem.residuals(&x_new);
        let obj_new = sum_sq(&r_new);
        let predicted = obj - problem.linearised_objective(&x, &r, &step);
        if obj_new < obj && obj_new.is_finite() {
            let rho = if predicted > 0.0 {
                (obj - obj_new) / predicted
            } else {
                1.0
            };
            let relative_drop = (obj - obj_new) / obj;
            x = x_new;
            r = r_new;
            obj = obj_new;
            trace.push(obj);
            (jtj, jtr) = problem.normal_equations(&x, &r);
            let t = 2.0 * rho - 1.0;
            mu *= (1.0 - t * t * t).max(1.0 / 3.0);
            nu = 2.0;
            if relative_drop <= opts.ftol {
                status = FitStatus::ObjectiveTolerance;
                break;
            }
        } else {
            mu *= nu;
            nu *= 2.0;
            if mu > 1e30 * max_diag.max(1.0) {
                status = FitStatus::Stalled;
                break;
            }
        }
    }

    let params = problem.to_params(&x);
    let n = samples.len();
    let dof = (n - N_PARAMS) as f64;
    let variance_scale = match opts.weighting {
        Weighting::Uniform => obj / dof,
        Weighting::InverseVariance if samples.iter().all(|s| s.sigma.is_some()) => 1.0,
        Weighting::InverseVariance => obj / dof,
    };
    let curvature = problem.natural_curvature(&params);
    let (stderr, singular) = match invert_spd(&curvature) {
        Some(cov) => (
            ParamSet::from_array(core::array::from_fn(|i| {
                libm::sqrt((cov[(i, i)] * variance_scale).max(0.0))
            })),
            false,
        ),
        None => (ParamSet::splat(f64::INFINITY), true),
    };

    Ok(FitResult {
        params,
        stderr,
        residual_norm: libm::sqrt(obj),
        converged: status.is_converged(),
        status,
        singular,
        iterations,
        objective_trace: trace,
    })
}

/// Inverse of a symmetric positive-definite matrix, via a Jacobi-scaled
/// Cholesky factorisation. `None` when the scaled matrix is numerically singular.
fn invert_spd(m: &Mat6) -> Option<Mat6> {
    let d = Vec6::from_fn(|i, _| {
        let v = m[(i, i)];
        if v > 0.0 {
            1.0 / libm::sqrt(v)
        } else {
            0.0
        }
    });
    if d.iter().any(|&v| v == 0.0) {
        return None;
    }
    let scaled = Mat6::from_fn(|i, j| m[(i, j)] * d[i] * d[j]);
    let eig_floor = 1e-13;
    let chol = scaled.cholesky()?;
    let diag_min = (0..N_PARAMS).map(|i| chol.l()[(i, i)]).fold(f64::INFINITY, f64::min);
    if diag_min * diag_min < eig_floor {
        return None;
    }
    let inv = chol.inverse();
    Some(Mat6::from_fn(|i, j| inv[(i, j)] * d[i] * d[j]))
}

/// Fits with the [`initial_guess`] heuristic and default beat frequencies.
pub fn fit_decay_auto(samples: &[DecaySample], opts: &FitOptions) -> Result<FitResult> {
    let init = initial_guess(samples)?;
    fit_decay(samples, &init, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(n: usize, t_end: f64) -> Vec<f64> {
        (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let p = DecayModelParams::off_resonance();
        for &t in &[-5e-9, 0.0, 13e-9, 57e-9, 140e-9] {
            let g = model_gradient(&p, t);
            let base = ParamSet::of(&p).to_array();
            for k in 0..N_PARAMS {
                let h = 1e-6 * base[k].abs().max(1e-9);
                let mut up = base;
                let mut dn = base;
                up[k] += h;
                dn[k] -= h;
                let mk = |a: [f64; N_PARAMS]| {
                    let s = ParamSet::from_array(a);
                    DecayModelParams {
                        eta0: s.eta0,
                        tau_s: s.tau_s,
                        tau_bar: s.tau_bar,
                        t0: s.t0,
                        beat_a: s.beat_a,
                        beat_b: s.beat_b,
                        ..p
                    }
                };
                let fd = (efficiency_at(&mk(up), t) - efficiency_at(&mk(dn), t)) / (2.0 * h);
                let scale = g[k].abs().max(1e-6 * efficiency_at(&p, t) / base[k].abs().max(1e-9));
                assert!((g[k] - fd).abs() <= 1e-5 * scale, "param {k} t {t}: {} vs {fd}", g[k]);
            }
        }
    }

    #[test]
    fn noiseless_synthetic_lies_on_curve() {
        let p = DecayModelParams::off_resonance();
        let s = generate_synthetic(&p, &grid(40, 200e-9), 0.0, 1).unwrap();
        assert!(s.iter().all(|x| x.eta == efficiency_at(&p, x.t) && x.sigma.is_none()));
        assert!(residuals(&p, &s).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn synthetic_is_seeded() {
        let p = DecayModelParams::on_resonance();
        let a = generate_synthetic(&p, &grid(40, 200e-9), 0.01, 99).unwrap();
        let b = generate_synthetic(&p, &grid(40, 200e-9), 0.01, 99).unwrap();
        let c = generate_synthetic(&p, &grid(40, 200e-9), 0.01, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|s| s.eta >= 0.0));
        assert!(generate_synthetic(&p, &[0.0], -1.0, 0).is_err());
    }

    #[test]
    fn residual_sign_convention() {
        let p = DecayModelParams::off_resonance();
        let delta = 0.01;
        let s = [DecaySample::new(20e-9, efficiency_at(&p, 20e-9) + delta)];
        let r = residuals(&p, &s);
        assert!((r[0] + delta).abs() < 1e-15);
        let weighted = [DecaySample {
            sigma: Some(0.5),
            ..s[0]
        }];
        assert!((residuals(&p, &weighted)[0] + 2.0 * delta).abs() < 1e-14);
    }

    #[test]
    fn wrong_params_fit_worse() {
        let on = DecayModelParams::on_resonance();
        let data = generate_synthetic(&on, &grid(40, 200e-9), 0.0, 3).unwrap();
        let self_fit = fit_decay(&data, &on, &FitOptions::default()).unwrap();
        assert!(residual_norm(&DecayModelParams::off_resonance(), &data) > self_fit.residual_norm);
    }

    #[test]
    fn recovers_both_reported_parameter_sets() {
        for truth in [DecayModelParams::off_resonance(), DecayModelParams::on_resonance()] {
            let data = generate_synthetic(&truth, &grid(40, 200e-9), 0.0, 0).unwrap();
            let fit = fit_decay(&data, &truth, &FitOptions::default()).unwrap();
            assert!(fit.converged);
            let got = ParamSet::of(&fit.params).to_array();
            for (g, w) in got.iter().zip(ParamSet::of(&truth).to_array()) {
                assert!(rel(*g, w) < 1e-4, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn recovers_from_heuristic_guess() {
        let truth = DecayModelParams::off_resonance();
        let data = generate_synthetic(&truth, &grid(60, 200e-9), 0.0, 0).unwrap();
        let guess = initial_guess(&data).unwrap();
        assert!(guess.tau_s > 40e-9 && guess.tau_s < 150e-9, "{}", guess.tau_s);
        let fit = fit_decay_auto(&data, &FitOptions::default()).unwrap();
        assert!(rel(fit.params.tau_s, truth.tau_s) < 1e-2, "{:?}", fit.params);
    }

    #[test]
    fn objective_never_increases() {
        let truth = DecayModelParams::on_resonance();
        let data = generate_synthetic(&truth, &grid(40, 200e-9), 0.005, 17).unwrap();
        let init = DecayModelParams {
            eta0: 0.2,
            tau_s: 60e-9,
            tau_bar: 200e-9,
            t0: 3e-9,
            beat_a: 0.1,
            beat_b: 0.05,
            ..truth
        };
        let fit = fit_decay(&data, &init, &FitOptions::default()).unwrap();
        assert!(fit.objective_trace.len() > 1);
        assert!(fit.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.converged && !fit.singular);
        assert!(fit.stderr.to_array().iter().all(|&e| e >= 0.0 && e.is_finite()));
    }

    #[test]
    fn beats_absent_fit_to_zero() {
        let truth = DecayModelParams::new(0.25, 86e-9, 101e-9, -1e-9);
        let init = truth.with_beats(0.1, 0.01);
        let mut consistent = 0;
        for seed in 0..20 {
            let data = generate_synthetic(&truth, &grid(40, 200e-9), 0.005, seed).unwrap();
            let fit = fit_decay(&data, &init, &FitOptions::default()).unwrap();
            let a_ok = fit.params.beat_a <= 2.0 * fit.stderr.beat_a;
            let b_ok = fit.params.beat_b <= 2.0 * fit.stderr.beat_b;
            consistent += usize::from(a_ok && b_ok);
        }
        // a 2σ band holds for ~95% of noise draws
        assert!(consistent >= 17, "{consistent}/20");
    }

    #[test]
    fn iteration_cap_is_reported() {
        let truth = DecayModelParams::off_resonance();
        let data = generate_synthetic(&truth, &grid(40, 200e-9), 0.005, 2).unwrap();
        let init = DecayModelParams::new(0.1, 40e-9, 300e-9, 5e-9).with_beats(0.5, 0.2);
        let opts = FitOptions {
            max_iterations: 1,
            ..FitOptions::default()
        };
        let fit = fit_decay(&data, &init, &opts).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.status, FitStatus::MaxIterations);
        assert_eq!(fit.iterations, 1);
    }

    #[test]
    fn degenerate_curvature_is_flagged() {
        // all samples at the same two times cannot pin six parameters
        let truth = DecayModelParams::off_resonance();
        let times = [0.0, 0.0, 0.0, 0.0, 50e-9, 50e-9, 50e-9];
        let data = generate_synthetic(&truth, &times, 0.0, 0).unwrap();
        let fit = fit_decay(&data, &truth, &FitOptions::default()).unwrap();
        assert!(fit.singular);
        assert!(fit.stderr.tau_s.is_infinite());
    }

    #[test]
    fn input_checks() {
        let p = DecayModelParams::off_resonance();
        let few = generate_synthetic(&p, &grid(6, 100e-9), 0.0, 0).unwrap();
        assert_eq!(
            fit_decay(&few, &p, &FitOptions::default()),
            Err(Error::TooFewSamples { needed: 7, got: 6 })
        );
        let same = vec![DecaySample::new(1e-9, 0.2); 8];
        assert_eq!(
            fit_decay(&same, &p, &FitOptions::default()),
            Err(Error::DegenerateTimes)
        );
        let mut bad = generate_synthetic(&p, &grid(8, 100e-9), 0.0, 0).unwrap();
        bad[3].sigma = Some(0.0);
        assert!(fit_decay(&bad, &p, &FitOptions::default()).is_err());
    }

    #[test]
    fn respects_bounds() {
        let truth = DecayModelParams::off_resonance();
        let data = generate_synthetic(&truth, &grid(40, 200e-9), 0.0, 0).unwrap();
        let mut opts = FitOptions::default();
        opts.bounds.upper.beat_a = 0.1;
        let fit = fit_decay(&data, &truth.with_beats(0.05, 0.006), &opts).unwrap();
        assert!(fit.params.beat_a <= 0.1);
    }
}
