//! Ornstein–Uhlenbeck process `dX = dW − λ(t) X dt` with exact Gaussian
//! transitions, together with its periodic auxiliary process driven by `g`.
//!
//! Given `X_s = x`, `X_t ~ Normal(m·x, σ²)` with
//!
//! ```text
//! m  = exp(−∫_s^t λ)
//! σ² = m² ∫_s^t exp(2∫_s^u λ) du
//! ```
//!
//! Both are obtained in one pass of the coupled system
//! `(ln m)' = −λ`, `(σ²)' = 1 − 2λσ²` started from `(0, 0)` at `s`, which is
//! the derivative form of the two integrals above and stays finite over long
//! windows where `exp(2∫λ)` would overflow.

use alloc::vec::Vec;

use crate::process::Stepper;
use crate::quad::integrate_fn;
use crate::rng::Stream;
use crate::special::{gaussian_density, normal_cdf};
use crate::timefn::{TimeFunction, TimeGrid};
use crate::{Error, Result};

/// Product of the drift scale and the RK4 substep.
const RATE_STEP: f64 = 0.005;
const MAX_SUBSTEP: f64 = 0.01;

/// Law of `X_t` given `X_s = x`: `Normal(m·x, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianTransition {
    pub m: f64,
    pub sigma: f64,
}

impl GaussianTransition {
    pub const IDENTITY: GaussianTransition = GaussianTransition { m: 1.0, sigma: 0.0 };

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// `(mean, sd)` of the law started at `x`.
    pub fn law_from(&self, x: f64) -> (f64, f64) {
        (self.m * x, self.sigma)
    }

    #[inline]
    pub fn sample(&self, x: f64, z: f64) -> f64 {
        self.m * x + self.sigma * z
    }

    /// Transition over `[s, u]` followed by `self` over `[u, t]`.
    pub fn after(&self, first: &GaussianTransition) -> GaussianTransition {
        let var = self.m * self.m * first.variance() + self.variance();
        GaussianTransition { m: first.m * self.m, sigma: libm::sqrt(var) }
    }
}

fn rate_scale(drift: &TimeFunction, s: f64, t: f64) -> f64 {
    let (lo, hi) = (drift.lower_bound(), drift.upper_bound());
    if lo.is_finite() && hi.is_finite() {
        return lo.abs().max(hi.abs());
    }
    let mut m: f64 = 0.0;
    for i in 0..=64 {
        m = m.max(drift.eval(s + (t - s) * i as f64 / 64.0).abs());
    }
    1.5 * m
}

fn substep_for(scale: f64) -> f64 {
    if scale > 0.0 {
        (RATE_STEP / (2.0 * scale)).min(MAX_SUBSTEP)
    } else {
        MAX_SUBSTEP
    }
}

/// Mean factor and standard deviation of the OU transition over `[s, t]`.
pub fn transition_params(drift: &TimeFunction, s: f64, t: f64) -> Result<GaussianTransition> {
    if !(s <= t) {
        return Err(Error::InvalidInput(alloc::format!("transition needs s <= t, got s={s}, t={t}")));
    }
    if s == t {
        return Ok(GaussianTransition::IDENTITY);
    }
    let h_max = substep_for(rate_scale(drift, s, t));
    integrate_window(drift, s, t, h_max)
}

fn integrate_window(drift: &TimeFunction, s: f64, t: f64, h_max: f64) -> Result<GaussianTransition> {
    let n = libm::ceil((t - s) / h_max).max(1.0) as usize;
    let h = (t - s) / n as f64;
    let mut log_m = 0.0;
    let mut var = 0.0;
    let mut l0 = drift.eval(s);
    for i in 0..n {
        let u = s + i as f64 * h;
        let lm = drift.eval(u + 0.5 * h);
        let l1 = drift.eval(if i + 1 == n { t } else { u + h });
        // RK4 for v' = 1 − 2λv
        let k1 = 1.0 - 2.0 * l0 * var;
        let k2 = 1.0 - 2.0 * lm * (var + 0.5 * h * k1);
        let k3 = 1.0 - 2.0 * lm * (var + 0.5 * h * k2);
        let k4 = 1.0 - 2.0 * l1 * (var + h * k3);
        var += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        log_m -= h / 6.0 * (l0 + 4.0 * lm + l1);
        l0 = l1;
    }
    if !(log_m.is_finite() && var.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!("drift not finite on [{s}, {t}]")));
    }
    Ok(GaussianTransition { m: libm::exp(log_m), sigma: libm::sqrt(var.max(0.0)) })
}

/// Drift rate λ, its γ-periodic companion g, and the period γ.
#[derive(Debug, Clone, PartialEq)]
pub struct OuSpec {
    pub lambda: TimeFunction,
    pub g: TimeFunction,
    pub gamma: f64,
}

impl OuSpec {
    pub fn new(lambda: TimeFunction, g: TimeFunction, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("gamma must be positive, got {gamma}")));
        }
        Ok(OuSpec { lambda, g, gamma })
    }

    /// `g(t) = 1 + 0.5 sin(2πt)`, `γ = 1`, `λ(t) = g(t)(1 + 0.3 e^{−0.7t})`.
    pub fn default_experiment() -> Self {
        let g = TimeFunction::parse("1 + 0.5*sin(2*pi*t)")
            .expect("static expression")
            .with_bounds(0.5, 1.5)
            .with_period(1.0);
        let lambda = TimeFunction::parse("(1 + 0.5*sin(2*pi*t)) * (1 + 0.3*exp(-0.7*t))")
            .expect("static expression")
            .with_bounds(0.5, 1.95);
        OuSpec { lambda, g, gamma: 1.0 }
    }

    /// Constant drift `λ = g = c` with period 1.
    pub fn constant(c: f64) -> Self {
        let f = TimeFunction::constant(c).with_period(1.0);
        OuSpec { lambda: f.clone(), g: f, gamma: 1.0 }
    }

    pub fn drift(&self, use_auxiliary: bool) -> &TimeFunction {
        if use_auxiliary {
            &self.g
        } else {
            &self.lambda
        }
    }

    /// `inf_s (1/γ)∫_s^{s+γ} λ` over `n + 1` starts in `[0, horizon]`.
    pub fn c_inf(&self, horizon: f64, n: usize) -> Result<f64> {
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let s = horizon * i as f64 / n as f64;
            let v = integrate_fn(|u| self.lambda.eval(u), s, s + self.gamma, 1e-10)? / self.gamma;
            best = best.min(v);
        }
        Ok(best)
    }

    /// Check bounded λ, positive `c_inf`, and γ-periodic `g` on `[0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        if !(self.lambda.lower_bound().is_finite() && self.lambda.upper_bound().is_finite()) {
            return Err(Error::InvalidInput("lambda needs finite declared bounds".into()));
        }
        self.lambda.validate(horizon, 20_000)?;
        let c = self.c_inf(horizon, 400)?;
        if !(c > 0.0) {
            return Err(Error::InvalidInput(alloc::format!("c_inf = {c} is not positive")));
        }
        match self.g.period() {
            Some(p) if (p - self.gamma).abs() <= 1e-12 * self.gamma => {}
            other => {
                return Err(Error::InvalidInput(alloc::format!(
                    "g must declare period gamma={}, found {other:?}",
                    self.gamma
                )))
            }
        }
        self.g.validate(horizon.min(10.0 * self.gamma), 20_000)
    }
}

/// Exact sampler on a fixed grid; one `(m, σ)` pair per grid step.
#[derive(Debug, Clone)]
pub struct OuStepper {
    grid: TimeGrid,
    steps: Vec<GaussianTransition>,
    drift: TimeFunction,
}

impl OuStepper {
    pub fn new(spec: &OuSpec, use_auxiliary: bool, grid: &TimeGrid) -> Result<Self> {
        let drift = spec.drift(use_auxiliary).clone();
        let h_max = substep_for(rate_scale(&drift, grid.t0(), grid.end()));
        let mut steps = Vec::with_capacity(grid.n_steps());
        for k in 0..grid.n_steps() {
            steps.push(integrate_window(&drift, grid.time(k), grid.time(k + 1), h_max)?);
        }
        Ok(OuStepper { grid: *grid, steps, drift })
    }

    /// Same means, zero noise.
    pub fn without_noise(mut self) -> Self {
        for s in &mut self.steps {
            s.sigma = 0.0;
        }
        self
    }

    pub fn transitions(&self) -> &[GaussianTransition] {
        &self.steps
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }
}

impl Stepper for OuStepper {
    fn step(&self, k: usize, t0: f64, t1: f64, x: f64, rng: &mut Stream) -> Result<f64> {
        let tr = match self.steps.get(k) {
            Some(tr) if t0 == self.grid.time(k) && t1 == self.grid.time(k + 1) => *tr,
            _ => transition_params(&self.drift, t0, t1)?,
        };
        let z = rng.next_normal();
        Ok(tr.sample(x, z))
    }
}

/// Total variation between `Normal(mean1, sd1²)` and `Normal(mean2, sd2²)`,
/// by quadrature of `½|p − q|` between the density crossing points.
pub fn gaussian_tv(mean1: f64, sd1: f64, mean2: f64, sd2: f64) -> Result<f64> {
    if sd1 < 0.0 || sd2 < 0.0 {
        return Err(Error::InvalidInput("negative standard deviation".into()));
    }
    if sd1 == 0.0 || sd2 == 0.0 {
        let same = sd1 == sd2 && mean1 == mean2;
        return Ok(if same { 0.0 } else { 1.0 });
    }
    if mean1 == mean2 && sd1 == sd2 {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = crossings(mean1, sd1, mean2, sd2);
    let lo = (mean1 - 40.0 * sd1).min(mean2 - 40.0 * sd2);
    let hi = (mean1 + 40.0 * sd1).max(mean2 + 40.0 * sd2);
    cuts.retain(|c| *c > lo && *c < hi);
    cuts.insert(0, lo);
    cuts.push(hi);
    let diff = |x: f64| 0.5 * (gaussian_density(x, mean1, sd1) - gaussian_density(x, mean2, sd2)).abs();
    let mut tv = 0.0;
    for w in cuts.windows(2) {
        // Split wide pieces so the starting Simpson stencil sees the bulk.
        let pieces = 64;
        let step = (w[1] - w[0]) / pieces as f64;
        for j in 0..pieces {
            let a = w[0] + j as f64 * step;
            tv += integrate_fn(diff, a, a + step, 1e-14)?;
        }
    }
    Ok(tv.clamp(0.0, 1.0))
}

/// Points where the two normal densities are equal.
fn crossings(m1: f64, s1: f64, m2: f64, s2: f64) -> Vec<f64> {
    let a = 0.5 / (s2 * s2) - 0.5 / (s1 * s1);
    let b = m1 / (s1 * s1) - m2 / (s2 * s2);
    let c = 0.5 * m2 * m2 / (s2 * s2) - 0.5 * m1 * m1 / (s1 * s1) + libm::log(s2 / s1);
    let mut out = Vec::new();
    if a.abs() < 1e-300 || (s1 == s2) {
        if b != 0.0 {
            out.push(-c / b);
        }
        return out;
    }
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let r = libm::sqrt(disc);
        // Stable quadratic roots.
        let q = -0.5 * (b + if b >= 0.0 { r } else { -r });
        let mut x1 = q / a;
        let mut x2 = if q != 0.0 { c / q } else { -b / (2.0 * a) };
        if x1 > x2 {
            core::mem::swap(&mut x1, &mut x2);
        }
        out.push(x1);
        out.push(x2);
    }
    out
}

/// TV between `δ_x P_{s+kγ, s+(k+n)γ}` and `δ_x Q_{s, s+nγ}` for one `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicityRow {
    pub k: u32,
    pub n: u32,
    pub s: f64,
    pub x: f64,
    pub tv: f64,
}

pub fn asymptotic_periodicity_report(
    spec: &OuSpec,
    s: f64,
    n: u32,
    k_values: &[u32],
    x: f64,
) -> Result<Vec<PeriodicityRow>> {
    if !(0.0..spec.gamma).contains(&s) {
        return Err(Error::InvalidInput(alloc::format!("s={s} must lie in [0, gamma)")));
    }
    let q = transition_params(&spec.g, s, s + n as f64 * spec.gamma)?;
    let (mq, sq) = q.law_from(x);
    k_values
        .iter()
        .map(|&k| {
            let t0 = s + k as f64 * spec.gamma;
            let p = transition_params(&spec.lambda, t0, t0 + n as f64 * spec.gamma)?;
            let (mp, sp) = p.law_from(x);
            Ok(PeriodicityRow { k, n, s, x, tv: gaussian_tv(mp, sp, mq, sq)? })
        })
        .collect()
}

/// Closed-form TV between two normals with equal variance.
pub fn gaussian_tv_equal_sd(mean1: f64, mean2: f64, sd: f64) -> f64 {
    2.0 * normal_cdf((mean1 - mean2).abs() / (2.0 * sd)) - 1.0
}
