//! Brownian motion killed at a moving boundary `±h(t)`.
//!
//! Paths use Euler increments with a Brownian-bridge crossing test between
//! grid points (boundary linearized on each step). Every step consumes
//! exactly [`DRAWS_PER_STEP`] counters of its stream, two for the Gaussian
//! increment and one for the bridge uniform, so runs against different
//! boundaries share noise draw for draw.

mod conditioned;
mod girsanov;
mod particles;

pub use conditioned::{
    boundary_convergence_report, boundary_gap_tally, conditional_minorization_estimate, conditioned_law,
    minorization_from_histograms, qed_comparison, GapRow, GapTally, MinorizationEstimate, QedComparison,
    SurvivorHistogram,
};
pub use girsanov::{girsanov_weight, ClockPath, GirsanovSampler};
pub use particles::{
    fleming_viot, q_process_approx, FvConfig, FvResult, OccupationMeasure, ParticleSystem, QProcessReport,
    ResampleRecord,
};

use alloc::vec::Vec;
use core::ops::Range;

use crate::process::replica_stream;
use crate::rng::Stream;
use crate::stats::Moments;
use crate::timefn::{TimeFunction, TimeGrid};
use crate::{Error, Result};

pub const DRAWS_PER_STEP: u64 = 3;
pub const DEFAULT_DT: f64 = 1e-3;

/// Probability that a Brownian bridge from `x0` to `x1` over `dt` leaves the
/// corridor whose half-width moves linearly from `h0` to `h1`.
#[inline]
pub fn crossing_probability(h0: f64, h1: f64, x0: f64, x1: f64, dt: f64) -> f64 {
    if x0.abs() >= h0 || x1.abs() >= h1 {
        return 1.0;
    }
    let up = libm::exp(-2.0 * (h0 - x0) * (h1 - x1) / dt);
    let lo = libm::exp(-2.0 * (h0 + x0) * (h1 + x1) / dt);
    up + lo - up * lo
}

/// One Euler step with absorption test. Returns the new state and whether
/// the path was absorbed during the step.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn bm_step(
    x: f64,
    h0: f64,
    h1: f64,
    sqrt_dt: f64,
    dt: f64,
    rng: &Stream,
    c: u64,
    bridge: bool,
) -> (f64, bool) {
    let x1 = x + sqrt_dt * rng.normal_at(c);
    let dead = if bridge {
        let p = crossing_probability(h0, h1, x, x1, dt);
        p >= 1.0 || (p > 0.0 && rng.f64_at(c + 2) < p)
    } else {
        x1.abs() >= h1
    };
    (x1, dead)
}

/// Boundary values on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl BoundaryPath {
    pub fn new(h: &TimeFunction, grid: TimeGrid) -> Result<Self> {
        let values: Vec<f64> = grid.times().map(|t| h.eval(t)).collect();
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(alloc::format!("boundary {h} = {v} at t={}", grid.time(k))));
        }
        Ok(BoundaryPath { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Run one path from `x0`; `visit(k, x)` sees the state after each
    /// surviving step `k`. Returns `(τ, last state)` with `τ = None` on survival.
    pub fn run<F: FnMut(usize, f64)>(&self, x0: f64, rng: &Stream, bridge: bool, mut visit: F) -> (Option<f64>, f64) {
        let dt = self.grid.dt();
        let sq = libm::sqrt(dt);
        let mut x = x0;
        for k in 0..self.grid.n_steps() {
            let (x1, dead) =
                bm_step(x, self.values[k], self.values[k + 1], sq, dt, rng, DRAWS_PER_STEP * k as u64, bridge);
            x = x1;
            if dead {
                return (Some(self.grid.time(k) + 0.5 * dt), x);
            }
            visit(k, x);
        }
        (None, x)
    }
}

fn check_start(h: &TimeFunction, s: f64, x0: f64) -> Result<()> {
    let hs = h.eval(s);
    if !(x0.abs() < hs) {
        return Err(Error::InvalidInput(alloc::format!("start {x0} outside (-{hs}, {hs}) at time {s}")));
    }
    Ok(())
}

/// A single killed path on `[0, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbedPath {
    pub grid: TimeGrid,
    /// States up to and including the step where absorption happened.
    pub states: Vec<f64>,
    /// Absorption time (step midpoint), `None` if the path survived.
    pub tau: Option<f64>,
}

/// One bridge-corrected path from `x0` at time 0 (replica 0 of `seed`).
pub fn simulate_absorbed(h: &TimeFunction, x0: f64, dt: f64, t_end: f64, seed: u64) -> Result<AbsorbedPath> {
    check_start(h, 0.0, x0)?;
    let grid = TimeGrid::covering(0.0, t_end, dt)?;
    let bp = BoundaryPath::new(h, grid)?;
    let mut states = alloc::vec![x0];
    let (tau, last) = bp.run(x0, &replica_stream(seed, 0), true, |_, x| states.push(x));
    if tau.is_some() {
        states.push(last);
    }
    Ok(AbsorbedPath { grid, states, tau })
}

/// Survival frequency `P_{s,x0}[τ_h > t]` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEstimate {
    pub p: f64,
    pub stderr: f64,
    pub n: u64,
}

impl From<Moments> for SurvivalEstimate {
    fn from(m: Moments) -> Self {
        SurvivalEstimate { p: m.mean(), stderr: m.std_error(), n: m.count() }
    }
}

/// Direct Monte Carlo of survival over `[s, t]`.
#[derive(Debug, Clone)]
pub struct SurvivalSampler {
    path: Option<BoundaryPath>,
    x0: f64,
    bridge: bool,
    seed: u64,
}

impl SurvivalSampler {
    #[allow(clippy::too_many_arguments)]
    pub fn new(h: &TimeFunction, s: f64, x0: f64, t: f64, dt: f64, bridge: bool, seed: u64) -> Result<Self> {
        check_start(h, s, x0)?;
        if !(t >= s) {
            return Err(Error::InvalidInput(alloc::format!("need t >= s, got s={s}, t={t}")));
        }
        let path = if t > s { Some(BoundaryPath::new(h, TimeGrid::covering(s, t, dt)?)?) } else { None };
        Ok(SurvivalSampler { path, x0, bridge, seed })
    }

    pub fn survives(&self, r: u64) -> bool {
        match &self.path {
            Some(p) => p.run(self.x0, &replica_stream(self.seed, r), self.bridge, |_, _| {}).0.is_none(),
            None => true,
        }
    }

    /// Moments of the survival indicator over a replica range.
    pub fn tally(&self, replicas: Range<u64>) -> Moments {
        replicas.map(|r| if self.survives(r) { 1.0 } else { 0.0 }).collect()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn survival_probability(
    h: &TimeFunction,
    s: f64,
    x0: f64,
    t: f64,
    dt: f64,
    n_paths: u64,
    bridge: bool,
    seed: u64,
) -> Result<SurvivalEstimate> {
    Ok(SurvivalSampler::new(h, s, x0, t, dt, bridge, seed)?.tally(0..n_paths).into())
}

/// `P_0[τ > t]` for Brownian motion started at `x` in `(−1, 1)` with
/// constant boundary 1 (Dirichlet eigenfunction expansion).
pub fn unit_interval_survival(x: f64, t: f64) -> f64 {
    let mut sum = 0.0;
    for j in 0..2000 {
        let k = (2 * j + 1) as f64;
        let decay = libm::exp(-k * k * core::f64::consts::PI * core::f64::consts::PI * t / 8.0);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = 4.0 / (core::f64::consts::PI * k) * sign * libm::cos(k * core::f64::consts::PI * x / 2.0) * decay;
        sum += term;
        if decay < 1e-18 {
            break;
        }
    }
    sum
}

/// The moving boundary `h` and its periodic companion `g ≥ h`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPair {
    pub h: TimeFunction,
    pub g: TimeFunction,
    pub gamma: f64,
    pub n0: u32,
}

impl BoundaryPair {
    pub fn new(h: TimeFunction, g: TimeFunction, gamma: f64, n0: u32) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("gamma must be positive, got {gamma}")));
        }
        match g.period() {
            Some(p) if (p - gamma).abs() <= 1e-12 * gamma => {}
            _ => return Err(Error::InvalidInput(alloc::format!("g must declare period {gamma}"))),
        }
        Ok(BoundaryPair { h, g, gamma, n0 })
    }

    /// `g = 1 + 0.25 sin(2πt)`, `γ = 1`, `h = g/(1 + 0.3 e^{−0.7t})`.
    pub fn default_pair() -> Self {
        let g = TimeFunction::parse("1 + 0.25*sin(2*pi*t)").expect("literal").with_bounds(0.75, 1.25).with_period(1.0);
        let h = TimeFunction::parse("(1 + 0.25*sin(2*pi*t)) / (1 + 0.3*exp(-0.7*t))")
            .expect("literal")
            .with_bounds(0.75 / 1.3, 1.25);
        BoundaryPair { h, g, gamma: 1.0, n0: 1 }
    }

    /// `h = g = c`.
    pub fn constant(c: f64) -> Self {
        let f = TimeFunction::constant(c).with_period(1.0);
        BoundaryPair { h: f.clone(), g: f, gamma: 1.0, n0: 1 }
    }

    /// Largest value either boundary can take, used for histogram ranges.
    pub fn h_max(&self, horizon: f64) -> f64 {
        let declared = self.g.upper_bound().max(self.h.upper_bound());
        if declared.is_finite() {
            declared
        } else {
            let (_, a) = self.g.sampled_range(horizon.max(self.gamma), 4096);
            let (_, b) = self.h.sampled_range(horizon.max(self.gamma), 4096);
            a.max(b)
        }
    }

    /// Dense-grid checks on `[0, horizon]`: declared bounds and period,
    /// `0 < h ≤ g`, and the argmin condition for `s` in `[0, horizon]`.
    pub fn validate(&self, horizon: f64) -> Result<()> {
        let n = libm::ceil(horizon / self.gamma * 256.0).max(256.0) as usize;
        self.h.validate(horizon, n)?;
        self.g.validate(horizon, n)?;
        let tail = horizon + (self.n0 as f64 + 8.0) * self.gamma;
        let du = self.gamma / 256.0;
        let m = libm::ceil(tail / du) as usize;
        let hv: Vec<f64> = (0..=m).map(|i| self.h.eval(i as f64 * du)).collect();
        for (i, v) in hv.iter().enumerate() {
            let t = i as f64 * du;
            if !(*v > 0.0) {
                return Err(Error::InvalidInput(alloc::format!("h({t}) = {v} is not positive")));
            }
            let gv = self.g.eval(t);
            if *v > gv + 1e-12 * (1.0 + gv.abs()) {
                return Err(Error::InvalidInput(alloc::format!("h({t}) = {v} exceeds g({t}) = {gv}")));
            }
        }
        // Suffix minima: first index attaining the min over [i, m].
        let mut arg = alloc::vec![m; m + 1];
        for i in (0..m).rev() {
            arg[i] = if hv[i] <= hv[arg[i + 1]] { i } else { arg[i + 1] };
        }
        let limit = self.n0 as f64 * self.gamma + du;
        let last_s = (horizon / du) as usize;
        for (i, a) in arg.iter().enumerate().take(last_s.min(m) + 1) {
            let lag = (a - i) as f64 * du;
            if lag > limit {
                return Err(Error::InvalidInput(alloc::format!(
                    "argmin condition fails at s={}: infimum reached {lag} later (n0 = {})",
                    i as f64 * du,
                    self.n0
                )));
            }
        }
        Ok(())
    }
}
