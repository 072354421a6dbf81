//! Change of clock and measure mapping the moving boundary `±h` to `±1`.
//!
//! With `I(u) = ∫_0^u h⁻²` and a Brownian motion `W` started at `x/h(s)` at
//! clock time `I(s)` and killed at `±1`,
//!
//! ```text
//! P_{s,x}[τ_h > t] = E[ E_{s,t}(W) 1{W survives up to I(t)} ]
//! E_{s,t}(w) = √(h(t)/h(s)) exp(−½[h'(t)h(t) w²_{I(t)} − h'(s)h(s) w²_{I(s)}
//!                                 + ∫_s^t w²_{I(u)} ((h')² − (hh')')(u) du])
//! ```
//!
//! and `(h')² − (hh')' = −h h''`, which is the form evaluated here.

use alloc::vec::Vec;
use core::ops::Range;

use super::{crossing_probability, DRAWS_PER_STEP};
use crate::process::replica_stream;
use crate::quad::cumulative_integral_fn;
use crate::rng::Stream;
use crate::stats::Moments;
use crate::timefn::{TimeFunction, TimeGrid};
use crate::{Error, Result};

/// A unit-boundary path sampled at physical times, paired with clock values.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockPath {
    /// Physical times `u_k` (uniform spacing).
    pub times: Vec<f64>,
    /// `I(u_k)`.
    pub clock: Vec<f64>,
    /// `w_{I(u_k)}`.
    pub w: Vec<f64>,
}

fn locate(times: &[f64], t: f64) -> Option<usize> {
    times.iter().position(|u| (u - t).abs() <= 1e-9 * (1.0 + t.abs()))
}

/// `E_{s,t}(w)` for a path on the `I^h` clock. The trapezoid rule is used
/// for the time integral; `s` and `t` must be sample times of the path.
pub fn girsanov_weight(path: &ClockPath, h: &TimeFunction, s: f64, t: f64) -> Result<f64> {
    if path.w.len() != path.clock.len() || path.times.len() != path.clock.len() {
        return Err(Error::ClockMismatch { path: path.w.len(), clock: path.clock.len() });
    }
    let (Some(i0), Some(i1)) = (locate(&path.times, s), locate(&path.times, t)) else {
        return Err(Error::InvalidInput(alloc::format!("s={s} and t={t} must be sample times of the path")));
    };
    if i0 > i1 {
        return Err(Error::InvalidInput("girsanov weight needs s <= t".into()));
    }
    for k in i0..i1 {
        let (u0, u1) = (path.times[k], path.times[k + 1]);
        let want = (u1 - u0) / 6.0 * (h_inv2(h, u0) + 4.0 * h_inv2(h, 0.5 * (u0 + u1)) + h_inv2(h, u1));
        let got = path.clock[k + 1] - path.clock[k];
        if (got - want).abs() > 1e-8 * want.abs() + 1e-14 {
            return Err(Error::InvalidInput(alloc::format!(
                "clock increment {got} on [{u0}, {u1}] does not match h (expected {want})"
            )));
        }
    }
    let js = h.jet(s)?;
    let jt = h.jet(t)?;
    let (ws, wt) = (path.w[i0], path.w[i1]);
    let mut integral = 0.0;
    for k in i0..i1 {
        let (u0, u1) = (path.times[k], path.times[k + 1]);
        let a = h.jet(u0)?;
        let b = h.jet(u1)?;
        let fa = -a.v * a.d2 * path.w[k] * path.w[k];
        let fb = -b.v * b.d2 * path.w[k + 1] * path.w[k + 1];
        integral += 0.5 * (u1 - u0) * (fa + fb);
    }
    let bracket = jt.d1 * jt.v * wt * wt - js.d1 * js.v * ws * ws + integral;
    Ok(libm::sqrt(jt.v / js.v) * libm::exp(-0.5 * bracket))
}

#[inline]
fn h_inv2(h: &TimeFunction, u: f64) -> f64 {
    let v = h.eval(u);
    1.0 / (v * v)
}

/// Weighted unit-boundary estimator of `P_{s,x}[τ_h > t]`.
#[derive(Debug, Clone)]
pub struct GirsanovSampler {
    grid: TimeGrid,
    /// Clock increments `I(u_{k+1}) − I(u_k)`.
    d_clock: Vec<f64>,
    clock: Vec<f64>,
    /// `−h h''` at grid points.
    curvature: Vec<f64>,
    /// `h'h` at `s` and `t`.
    edge_s: f64,
    edge_t: f64,
    prefactor: f64,
    h_s: f64,
    x: f64,
    seed: u64,
}

impl GirsanovSampler {
    #[allow(clippy::too_many_arguments)]
    pub fn new(h: &TimeFunction, s: f64, x: f64, t: f64, dt: f64, seed: u64) -> Result<Self> {
        let h_s = h.eval(s);
        if !(x.abs() < h_s) {
            return Err(Error::InvalidInput(alloc::format!("start {x} outside (-{h_s}, {h_s})")));
        }
        let grid = TimeGrid::covering(s, t, dt)?;
        let clock = cumulative_integral_fn(|u| h_inv2(h, u), s, &grid)?;
        let d_clock = clock.windows(2).map(|w| w[1] - w[0]).collect();
        let curvature = grid.times().map(|u| h.jet(u).map(|j| -j.v * j.d2)).collect::<Result<Vec<_>>>()?;
        let js = h.jet(s)?;
        let jt = h.jet(grid.end())?;
        Ok(GirsanovSampler {
            grid,
            d_clock,
            clock,
            curvature,
            edge_s: js.d1 * js.v,
            edge_t: jt.d1 * jt.v,
            prefactor: libm::sqrt(jt.v / js.v),
            h_s,
            x,
            seed,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Unit-boundary path driven by `rng`, stopped at absorption.
    /// Returns the path and whether it survived.
    pub fn path(&self, rng: &Stream) -> (ClockPath, bool) {
        let n = self.grid.n_steps();
        let mut w = Vec::with_capacity(n + 1);
        let mut b = self.x / self.h_s;
        w.push(b);
        let mut alive = true;
        for k in 0..n {
            let (b1, dead) = self.step(b, k, rng);
            b = b1;
            w.push(b);
            if dead {
                alive = false;
                break;
            }
        }
        let m = w.len();
        let times = (0..m).map(|k| self.grid.time(k)).collect();
        (ClockPath { times, clock: self.clock[..m].to_vec(), w }, alive)
    }

    #[inline]
    fn step(&self, b: f64, k: usize, rng: &Stream) -> (f64, bool) {
        let dv = self.d_clock[k];
        let c = DRAWS_PER_STEP * k as u64;
        let b1 = b + libm::sqrt(dv) * rng.normal_at(c);
        let p = crossing_probability(1.0, 1.0, b, b1, dv);
        (b1, p >= 1.0 || (p > 0.0 && rng.f64_at(c + 2) < p))
    }

    /// `E_{s,t}(W)·1{survival}` for replica `r`.
    pub fn sample(&self, r: u64) -> f64 {
        let rng = replica_stream(self.seed, r);
        let dt = self.grid.dt();
        let mut b = self.x / self.h_s;
        let w0 = b;
        let mut integral = 0.0;
        let mut f_prev = self.curvature[0] * b * b;
        for k in 0..self.grid.n_steps() {
            let (b1, dead) = self.step(b, k, &rng);
            if dead {
                return 0.0;
            }
            let f1 = self.curvature[k + 1] * b1 * b1;
            integral += 0.5 * dt * (f_prev + f1);
            f_prev = f1;
            b = b1;
        }
        let bracket = self.edge_t * b * b - self.edge_s * w0 * w0 + integral;
        self.prefactor * libm::exp(-0.5 * bracket)
    }

    pub fn tally(&self, replicas: Range<u64>) -> Moments {
        replicas.map(|r| self.sample(r)).collect()
    }
}
