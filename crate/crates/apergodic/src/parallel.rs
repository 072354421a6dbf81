//! Multi-threaded drivers over the core's replica-range tallies.
//!
//! Replicas are split into fixed chunks of [`CHUNK`], each chunk is tallied
//! independently, and the partial tallies are merged in chunk order. The
//! result therefore depends on the seed and chunk size, never on the
//! number of threads.

use std::ops::Range;

use apergodic_core::absorbed::{
    boundary_gap_tally, conditioned_law, BoundaryPair, GapRow, GapTally, GirsanovSampler, SurvivalEstimate,
    SurvivalSampler, SurvivorHistogram,
};
use apergodic_core::ergodic::{ErgodicReport, ErgodicRun};
use apergodic_core::periodic::Mesh;
use apergodic_core::process::{simulate_replica_into, InitialSampler, PathEnsemble, Stepper};
use apergodic_core::stats::Moments;
use apergodic_core::{Result, TimeFunction, TimeGrid};
use rayon::prelude::*;

pub const CHUNK: u64 = 256;

/// Evaluate `f` on consecutive replica ranges of length `chunk` in parallel,
/// returning results in range order.
pub fn chunked<T, F>(n: u64, chunk: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync,
{
    let chunk = chunk.max(1);
    (0..n.div_ceil(chunk)).into_par_iter().map(|c| f(c * chunk..((c + 1) * chunk).min(n))).collect()
}

fn merged_moments(parts: Vec<Moments>) -> Moments {
    parts.into_iter().fold(Moments::new(), |mut acc, m| {
        acc.merge(&m);
        acc
    })
}

pub fn ergodic_report(run: &ErgodicRun, n_replicas: u64, limit: f64) -> Result<ErgodicReport> {
    let parts = chunked(n_replicas, CHUNK, |r| run.tally(r, limit))?;
    let mut it = parts.into_iter();
    let mut total = it.next().expect("at least one replica");
    for p in it {
        total.merge(&p)?;
    }
    Ok(total.finish())
}

pub fn survival(sampler: &SurvivalSampler, n: u64) -> Result<SurvivalEstimate> {
    Ok(merged_moments(chunked(n, CHUNK, |r| Ok(sampler.tally(r)))?).into())
}

pub fn girsanov_survival(sampler: &GirsanovSampler, n: u64) -> Result<SurvivalEstimate> {
    Ok(merged_moments(chunked(n, CHUNK, |r| Ok(sampler.tally(r)))?).into())
}

#[allow(clippy::too_many_arguments)]
pub fn gap_row(pair: &BoundaryPair, s: f64, t: f64, x: f64, k: u32, n: u64, dt: f64, seed: u64) -> Result<GapRow> {
    let parts = chunked(n, CHUNK, |r| boundary_gap_tally(pair, s, t, x, k, dt, seed, r))?;
    let mut total = GapTally::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.row(k))
}

#[allow(clippy::too_many_arguments)]
pub fn conditioned_histogram(
    h: &TimeFunction,
    s: f64,
    x0: f64,
    lag: f64,
    dt: f64,
    mesh: Mesh,
    n: u64,
    seed: u64,
) -> Result<SurvivorHistogram> {
    let parts = chunked(n, CHUNK, |r| conditioned_law(h, s, x0, lag, dt, mesh, seed, r))?;
    let mut total = SurvivorHistogram::new(mesh);
    for p in &parts {
        total.merge(p)?;
    }
    Ok(total)
}

/// Same paths as the sequential `simulate_ensemble`, filled in parallel.
pub fn ensemble<S, I>(stepper: &S, initial: &I, grid: &TimeGrid, n_replicas: usize, seed: u64) -> Result<PathEnsemble>
where
    S: Stepper + Sync + ?Sized,
    I: InitialSampler + Sync + ?Sized,
{
    let n = grid.n_points();
    let mut states = vec![0.0; n_replicas * n];
    states
        .par_chunks_mut(n)
        .enumerate()
        .try_for_each(|(r, out)| simulate_replica_into(stepper, initial, grid, seed, r as u64, out))?;
    PathEnsemble::from_parts(*grid, n_replicas, states, seed)
}
