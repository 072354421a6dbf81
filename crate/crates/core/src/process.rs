//! Path simulation: one-step samplers, replica ensembles and time averages.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::Stream;
use crate::timefn::{parse_expr_in, Expr, TimeGrid};
use crate::{Error, Result};

/// One-step transition sampler `x_{k+1} ~ K_{t_k, t_{k+1}}(x_k, ·)`.
pub trait Stepper {
    fn step(&self, k: usize, t0: f64, t1: f64, x: f64, rng: &mut Stream) -> Result<f64>;
}

impl<F> Stepper for F
where
    F: Fn(usize, f64, f64, f64, &mut Stream) -> Result<f64>,
{
    fn step(&self, k: usize, t0: f64, t1: f64, x: f64, rng: &mut Stream) -> Result<f64> {
        self(k, t0, t1, x, rng)
    }
}

/// Keeps the state where it is.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Stepper for Identity {
    fn step(&self, _: usize, _: f64, _: f64, x: f64, _: &mut Stream) -> Result<f64> {
        Ok(x)
    }
}

pub trait InitialSampler {
    fn sample(&self, rng: &mut Stream) -> f64;
}

/// Initial laws available from configuration files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLaw {
    Point(f64),
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl InitialSampler for InitialLaw {
    fn sample(&self, rng: &mut Stream) -> f64 {
        match *self {
            InitialLaw::Point(x) => x,
            InitialLaw::Normal { mean, sd } => mean + sd * rng.next_normal(),
            InitialLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.next_f64(),
        }
    }
}

impl<F: Fn(&mut Stream) -> f64> InitialSampler for F {
    fn sample(&self, rng: &mut Stream) -> f64 {
        self(rng)
    }
}

/// A pointwise map `x ↦ f(x)` with an optional declared sup-norm bound.
#[derive(Clone)]
pub struct Observable {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    bound: Option<f64>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable").field("name", &self.name).field("bound", &self.bound).finish()
    }
}

impl Observable {
    pub fn new<F>(name: impl Into<String>, f: F, bound: Option<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Observable { name: name.into(), f: Arc::new(f), bound }
    }

    /// Parse an expression in the free variable `x` (same grammar as time functions).
    pub fn parse(text: &str) -> Result<Self> {
        let expr: Expr = parse_expr_in(text, "x")?;
        let bound = if expr.is_constant() { Some(expr.eval(0.0).abs()) } else { None };
        Ok(Observable { name: text.to_string(), f: Arc::new(move |x| expr.eval(x)), bound })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(alloc::format!("{c}"), move |_| c, Some(c.abs()))
    }

    pub fn identity() -> Self {
        Self::new("x", |x| x, None)
    }

    pub fn square() -> Self {
        Self::new("x^2", |x| x * x, None)
    }

    /// `1_{[lo, hi)}(x)`.
    pub fn indicator(lo: f64, hi: f64) -> Self {
        Self::new(alloc::format!("1[{lo},{hi})"), move |x| if (lo..hi).contains(&x) { 1.0 } else { 0.0 }, Some(1.0))
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

/// States of `n_replicas` paths on a common grid, stored replica-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: TimeGrid,
    n_replicas: usize,
    states: Vec<f64>,
    seed: u64,
}

impl PathEnsemble {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_replicas(&self) -> usize {
        self.n_replicas
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self, r: usize) -> &[f64] {
        let n = self.grid.n_points();
        &self.states[r * n..(r + 1) * n]
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// Assemble from a buffer filled by [`simulate_replica_into`].
    pub fn from_parts(grid: TimeGrid, n_replicas: usize, states: Vec<f64>, seed: u64) -> Result<Self> {
        if states.len() != n_replicas * grid.n_points() {
            return Err(Error::InvalidInput(alloc::format!(
                "state buffer has {} values, expected {}",
                states.len(),
                n_replicas * grid.n_points()
            )));
        }
        Ok(PathEnsemble { grid, n_replicas, states, seed })
    }
}

/// Stream used by replica `r` of a run seeded with `seed`.
pub fn replica_stream(seed: u64, r: u64) -> Stream {
    Stream::new(seed).substream(r)
}

/// Simulate one replica into `out` (length `grid.n_points()`).
pub fn simulate_replica_into<S: Stepper + ?Sized, I: InitialSampler + ?Sized>(
    stepper: &S,
    initial: &I,
    grid: &TimeGrid,
    seed: u64,
    replica: u64,
    out: &mut [f64],
) -> Result<()> {
    debug_assert_eq!(out.len(), grid.n_points());
    let mut rng = replica_stream(seed, replica);
    let mut x = initial.sample(&mut rng);
    out[0] = x;
    for k in 0..grid.n_steps() {
        x = stepper.step(k, grid.time(k), grid.time(k + 1), x, &mut rng).map_err(|e| Error::Stepper {
            replica,
            step: k,
            msg: e.to_string(),
        })?;
        out[k + 1] = x;
    }
    Ok(())
}

/// Sequential ensemble; replica `r` depends only on `(seed, r)`.
pub fn simulate_ensemble<S: Stepper + ?Sized, I: InitialSampler + ?Sized>(
    stepper: &S,
    initial: &I,
    grid: &TimeGrid,
    n_replicas: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if n_replicas == 0 {
        return Err(Error::InvalidInput("n_replicas must be at least 1".into()));
    }
    let n = grid.n_points();
    let mut states = alloc::vec![0.0; n_replicas * n];
    for (r, chunk) in states.chunks_mut(n).enumerate() {
        simulate_replica_into(stepper, initial, grid, seed, r as u64, chunk)?;
    }
    Ok(PathEnsemble { grid: *grid, n_replicas, states, seed })
}

/// `(1/(t - t0)) ∫_{t0}^{t} f(X_s) ds` by the trapezoid rule on the grid.
///
/// A `t` between grid points closes the last partial interval with the
/// linearly interpolated state.
pub fn time_average(path: &[f64], grid: &TimeGrid, f: &Observable, t: f64) -> Result<f64> {
    if path.len() != grid.n_points() {
        return Err(Error::InvalidInput(alloc::format!(
            "path has {} points, grid has {}",
            path.len(),
            grid.n_points()
        )));
    }
    let span = t - grid.t0();
    if !(span > 0.0) {
        return Err(Error::InvalidInput(alloc::format!("time average needs t > {}, got {t}", grid.t0())));
    }
    if t > grid.end() * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::InvalidInput(alloc::format!("t={t} beyond grid end {}", grid.end())));
    }
    let dt = grid.dt();
    let full = libm::floor(span / dt * (1.0 + 1e-12)) as usize;
    let full = full.min(grid.n_steps());
    // Normalizing by the accumulated interval lengths keeps f ≡ c exact.
    let (mut acc, mut len) = (0.0, 0.0);
    let mut f_prev = f.eval(path[0]);
    for k in 0..full {
        let f_next = f.eval(path[k + 1]);
        acc += 0.5 * dt * (f_prev + f_next);
        len += dt;
        f_prev = f_next;
    }
    let rest = span - full as f64 * dt;
    if rest > 1e-12 * dt && full < grid.n_steps() {
        let w = rest / dt;
        let x = path[full] + w * (path[full + 1] - path[full]);
        acc += 0.5 * rest * (f_prev + f.eval(x));
        len += rest;
    }
    Ok(acc / len)
}
