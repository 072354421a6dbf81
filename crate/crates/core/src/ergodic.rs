//! Time-average experiments for the OU process.
//!
//! Replicas are streamed (no path storage): each replica keeps a running
//! trapezoid integral and records `Ā_t` at the checkpoints. Work is split
//! over replica ranges and combined with [`ErgodicTally::merge`].

use alloc::vec::Vec;
use core::ops::Range;

use crate::ou::{OuSpec, OuStepper};
use crate::periodic::limiting_value;
use crate::process::{replica_stream, InitialLaw, InitialSampler, Observable, Stepper};
use crate::stats::{ks_two_sample, linear_fit, KsResult, LinearFit, Moments};
use crate::timefn::TimeGrid;
use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-2;

/// A prepared experiment: stepper on a grid covering the last checkpoint.
#[derive(Debug, Clone)]
pub struct ErgodicRun {
    stepper: OuStepper,
    grid: TimeGrid,
    f: Observable,
    initial: InitialLaw,
    checkpoints: Vec<f64>,
    seed: u64,
}

fn check_times(t: &[f64]) -> Result<()> {
    if t.is_empty() {
        return Err(Error::InvalidInput("need at least one time".into()));
    }
    if !(t[0] > 0.0) || t.windows(2).any(|w| !(w[0] < w[1])) || t.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("times must be positive, finite and strictly increasing".into()));
    }
    Ok(())
}

impl ErgodicRun {
    pub fn new(
        spec: &OuSpec,
        use_auxiliary: bool,
        f: Observable,
        initial: InitialLaw,
        checkpoints: &[f64],
        dt: f64,
        seed: u64,
    ) -> Result<Self> {
        check_times(checkpoints)?;
        let grid = TimeGrid::covering(0.0, *checkpoints.last().unwrap_or(&0.0), dt)?;
        let stepper = OuStepper::new(spec, use_auxiliary, &grid)?;
        Ok(ErgodicRun { stepper, grid, f, initial, checkpoints: checkpoints.to_vec(), seed })
    }

    pub fn checkpoints(&self) -> &[f64] {
        &self.checkpoints
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `Ā_t` of replica `r` at every checkpoint.
    ///
    /// Draw order matches [`crate::process::simulate_replica_into`], so the
    /// path is the one `simulate_ensemble` would store for replica `r`.
    pub fn replica(&self, r: u64) -> Result<Vec<f64>> {
        let mut rng = replica_stream(self.seed, r);
        let mut x = self.initial.sample(&mut rng);
        let dt = self.grid.dt();
        let mut out = Vec::with_capacity(self.checkpoints.len());
        let mut next = 0;
        let (mut acc, mut len) = (0.0, 0.0);
        let mut fx = self.f.eval(x);
        for k in 0..self.grid.n_steps() {
            let t0 = self.grid.time(k);
            let x1 = self.stepper.step(k, t0, self.grid.time(k + 1), x, &mut rng).map_err(|e| Error::Stepper {
                replica: r,
                step: k,
                msg: alloc::string::ToString::to_string(&e),
            })?;
            // Checkpoints falling strictly inside this step.
            while next < self.checkpoints.len() {
                let rest = self.checkpoints[next] - t0;
                if rest >= dt * (1.0 - 1e-12) {
                    break;
                }
                if rest > 1e-12 * dt {
                    let xm = x + rest / dt * (x1 - x);
                    let a = acc + 0.5 * rest * (fx + self.f.eval(xm));
                    out.push(a / (len + rest));
                } else {
                    out.push(acc / len);
                }
                next += 1;
            }
            let f1 = self.f.eval(x1);
            acc += 0.5 * dt * (fx + f1);
            len += dt;
            fx = f1;
            x = x1;
        }
        while next < self.checkpoints.len() {
            out.push(acc / len);
            next += 1;
        }
        Ok(out)
    }

    pub fn tally(&self, replicas: Range<u64>, limit: f64) -> Result<ErgodicTally> {
        let mut t = ErgodicTally::new(self.checkpoints.clone(), limit);
        for r in replicas {
            t.push(&self.replica(r)?);
        }
        Ok(t)
    }
}

/// Mergeable per-checkpoint moments of `Ā_t` and of `(Ā_t − L)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicTally {
    t_values: Vec<f64>,
    limit: f64,
    avg: Vec<Moments>,
    sq_err: Vec<Moments>,
}

impl ErgodicTally {
    pub fn new(t_values: Vec<f64>, limit: f64) -> Self {
        let n = t_values.len();
        ErgodicTally { t_values, limit, avg: alloc::vec![Moments::new(); n], sq_err: alloc::vec![Moments::new(); n] }
    }

    pub fn push(&mut self, averages: &[f64]) {
        for ((a, e), v) in self.avg.iter_mut().zip(&mut self.sq_err).zip(averages) {
            a.push(*v);
            e.push((v - self.limit) * (v - self.limit));
        }
    }

    pub fn merge(&mut self, other: &ErgodicTally) -> Result<()> {
        if self.t_values != other.t_values || self.limit.to_bits() != other.limit.to_bits() {
            return Err(Error::InvalidInput("cannot merge tallies of different experiments".into()));
        }
        for (a, b) in self.avg.iter_mut().zip(&other.avg) {
            a.merge(b);
        }
        for (a, b) in self.sq_err.iter_mut().zip(&other.sq_err) {
            a.merge(b);
        }
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.avg.first().map_or(0, Moments::count)
    }

    pub fn finish(&self) -> ErgodicReport {
        let variance: Vec<f64> = self.avg.iter().map(Moments::variance).collect();
        let (lx, ly): (Vec<f64>, Vec<f64>) = self
            .t_values
            .iter()
            .zip(&variance)
            .filter(|(_, v)| **v > 0.0)
            .map(|(t, v)| (libm::log(*t), libm::log(*v)))
            .unzip();
        ErgodicReport {
            t_values: self.t_values.clone(),
            limit: self.limit,
            n_replicas: self.count(),
            mean_avg: self.avg.iter().map(Moments::mean).collect(),
            stderr: self.avg.iter().map(Moments::std_error).collect(),
            l2_err: self.sq_err.iter().map(Moments::mean).collect(),
            l2_stderr: self.sq_err.iter().map(Moments::std_error).collect(),
            variance,
            variance_fit: linear_fit(&lx, &ly),
        }
    }
}

/// Per-checkpoint summary of an L² experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicReport {
    pub t_values: Vec<f64>,
    pub limit: f64,
    pub n_replicas: u64,
    /// Cross-replica mean of `Ā_t`.
    pub mean_avg: Vec<f64>,
    /// Standard error of `mean_avg`.
    pub stderr: Vec<f64>,
    /// Mean of `(Ā_t − L)²`.
    pub l2_err: Vec<f64>,
    pub l2_stderr: Vec<f64>,
    /// Cross-replica variance of `Ā_t`.
    pub variance: Vec<f64>,
    /// `log Var(Ā_t)` against `log t`; `None` with fewer than two positive variances.
    pub variance_fit: Option<LinearFit>,
}

/// L² experiment for the process driven by `spec.lambda`, sequentially.
#[allow(clippy::too_many_arguments)]
pub fn run_l2_experiment(
    spec: &OuSpec,
    f: &Observable,
    initial: InitialLaw,
    t_values: &[f64],
    n_replicas: u64,
    dt: f64,
    seed: u64,
) -> Result<ErgodicReport> {
    if n_replicas == 0 {
        return Err(Error::InvalidInput("n_replicas must be at least 1".into()));
    }
    let limit = limiting_value(spec, f)?;
    let run = ErgodicRun::new(spec, false, f.clone(), initial, t_values, dt, seed)?;
    Ok(run.tally(0..n_replicas, limit)?.finish())
}

/// Checkpoints `{n²} ∪ {10^k} ∪ {t_max}` up to `t_max`.
pub fn default_checkpoints(t_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut n = 1u64;
    while ((n * n) as f64) <= t_max {
        out.push((n * n) as f64);
        n += 1;
    }
    let mut d = 1.0;
    while d <= t_max {
        out.push(d);
        d *= 10.0;
    }
    if t_max > 0.0 {
        out.push(t_max);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Single-path deviations `|Ā_t − L|`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsReport {
    pub checkpoints: Vec<f64>,
    pub averages: Vec<f64>,
    pub deviations: Vec<f64>,
    pub limit: f64,
}

impl AsReport {
    pub fn final_deviation(&self) -> f64 {
        self.deviations.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_average(&self) -> f64 {
        self.averages.last().copied().unwrap_or(f64::NAN)
    }
}

/// One path (replica 0 of `seed`) observed at the checkpoints
/// (defaults from [`default_checkpoints`]).
pub fn run_as_experiment(
    spec: &OuSpec,
    f: &Observable,
    initial: InitialLaw,
    t_max: f64,
    checkpoints: Option<&[f64]>,
    dt: f64,
    seed: u64,
) -> Result<AsReport> {
    let cps = match checkpoints {
        Some(c) => c.to_vec(),
        None => default_checkpoints(t_max),
    };
    if cps.last().is_some_and(|t| *t > t_max) {
        return Err(Error::InvalidInput("checkpoints exceed t_max".into()));
    }
    let limit = limiting_value(spec, f)?;
    let run = ErgodicRun::new(spec, false, f.clone(), initial, &cps, dt, seed)?;
    let averages = run.replica(0)?;
    let deviations = averages.iter().map(|a| (a - limit).abs()).collect();
    Ok(AsReport { checkpoints: cps, averages, deviations, limit })
}

/// Two-sample KS test between `Ā_t` under `P` (drift λ, `seed_p`) and under
/// the auxiliary `Q` (drift g, `seed_q`). When λ = g the laws coincide.
#[allow(clippy::too_many_arguments)]
pub fn auxiliary_ks_check(
    spec: &OuSpec,
    f: &Observable,
    initial: InitialLaw,
    t: f64,
    n_replicas: u64,
    dt: f64,
    seed_p: u64,
    seed_q: u64,
) -> Result<KsResult> {
    let p = ErgodicRun::new(spec, false, f.clone(), initial, &[t], dt, seed_p)?;
    let q = ErgodicRun::new(spec, true, f.clone(), initial, &[t], dt, seed_q)?;
    let a = (0..n_replicas).map(|r| p.replica(r).map(|v| v[0])).collect::<Result<Vec<_>>>()?;
    let b = (0..n_replicas).map(|r| q.replica(r).map(|v| v[0])).collect::<Result<Vec<_>>>()?;
    Ok(ks_two_sample(&a, &b))
}
