//! Conditioned laws, conditional minorization, boundary-convergence and
//! quasi-ergodic comparisons.

use alloc::vec::Vec;
use core::ops::Range;

use super::particles::{fleming_viot, FvConfig, FvResult};
use super::{bm_step, check_start, BoundaryPair, BoundaryPath, DRAWS_PER_STEP};
use crate::periodic::{Mesh, MeshMeasure};
use crate::process::replica_stream;
use crate::rng::Stream;
use crate::timefn::{TimeFunction, TimeGrid};
use crate::{Error, Result};

/// Mergeable histogram of survivors' positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivorHistogram {
    pub mesh: Mesh,
    pub counts: Vec<u64>,
    pub survivors: u64,
    pub paths: u64,
}

impl SurvivorHistogram {
    pub fn new(mesh: Mesh) -> Self {
        SurvivorHistogram { mesh, counts: alloc::vec![0; mesh.n_cells()], survivors: 0, paths: 0 }
    }

    pub fn merge(&mut self, other: &SurvivorHistogram) -> Result<()> {
        if self.counts.len() != other.counts.len() {
            return Err(Error::MeshMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.survivors += other.survivors;
        self.paths += other.paths;
        Ok(())
    }

    pub fn survival(&self) -> f64 {
        self.survivors as f64 / self.paths.max(1) as f64
    }

    pub fn measure(&self) -> Result<MeshMeasure> {
        MeshMeasure::from_masses(self.mesh, self.counts.iter().map(|c| *c as f64).collect())
    }

    /// Binomial standard error of each cell frequency.
    pub fn cell_stderr(&self) -> Vec<f64> {
        let n = self.survivors.max(1) as f64;
        self.counts
            .iter()
            .map(|c| {
                let p = *c as f64 / n;
                libm::sqrt(p * (1.0 - p) / n)
            })
            .collect()
    }
}

/// Histograms of `X_{s+lag}` on survival to `s+lag`, for several lags from
/// one batch of paths started at `(s, x0)`.
#[allow(clippy::too_many_arguments)]
fn survivor_histograms(
    h: &TimeFunction,
    s: f64,
    x0: f64,
    lags: &[f64],
    dt: f64,
    mesh: Mesh,
    seed: u64,
    replicas: Range<u64>,
) -> Result<Vec<SurvivorHistogram>> {
    check_start(h, s, x0)?;
    if lags.is_empty() || lags.iter().any(|l| !(*l > 0.0)) || lags.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("lags must be positive and strictly increasing".into()));
    }
    let grid = TimeGrid::covering(s, s + lags[lags.len() - 1], dt)?;
    let bp = BoundaryPath::new(h, grid)?;
    let steps: Vec<usize> = lags.iter().map(|l| (libm::round(l / dt) as usize).max(1) - 1).collect();
    let mut out: Vec<SurvivorHistogram> = lags.iter().map(|_| SurvivorHistogram::new(mesh)).collect();
    for r in replicas {
        let rng = replica_stream(seed, r);
        let mut next = 0;
        bp.run(x0, &rng, true, |k, x| {
            while next < steps.len() && steps[next] == k {
                let hist = &mut out[next];
                hist.counts[mesh.cell_of(x)] += 1;
                hist.survivors += 1;
                next += 1;
            }
        });
        for hist in &mut out {
            hist.paths += 1;
        }
    }
    Ok(out)
}

/// Law of `X_t` given `τ_h > t` for paths from `(s, x0)`, `t = s + lag`.
#[allow(clippy::too_many_arguments)]
pub fn conditioned_law(
    h: &TimeFunction,
    s: f64,
    x0: f64,
    lag: f64,
    dt: f64,
    mesh: Mesh,
    seed: u64,
    replicas: Range<u64>,
) -> Result<SurvivorHistogram> {
    Ok(survivor_histograms(h, s, x0, &[lag], dt, mesh, seed, replicas)?.remove(0))
}

/// Cell-wise minimum of several laws: returns its mass `c₁` and, when
/// positive, the normalized minimum `ν`.
pub fn minorization_from_histograms(laws: &[MeshMeasure]) -> Result<(f64, Option<MeshMeasure>)> {
    let first = laws.first().ok_or_else(|| Error::InvalidInput("no histograms".into()))?;
    let mut min = first.weights().to_vec();
    for law in &laws[1..] {
        if law.weights().len() != min.len() {
            return Err(Error::MeshMismatch);
        }
        for (m, w) in min.iter_mut().zip(law.weights()) {
            *m = m.min(*w);
        }
    }
    let c1: f64 = min.iter().sum();
    if c1 > 0.0 {
        Ok((c1, Some(MeshMeasure::from_masses(*first.mesh(), min)?)))
    } else {
        Ok((0.0, None))
    }
}

/// Output of [`conditional_minorization_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinorizationEstimate {
    pub c1: f64,
    /// One-sided 95% lower confidence value from binomial cell errors.
    pub c1_lower: f64,
    pub nu: Option<MeshMeasure>,
    /// `(probe, lag, histogram)` for every pair.
    pub histograms: Vec<(f64, f64, SurvivorHistogram)>,
}

/// Conditional Doeblin constant of the one-window laws
/// `P_{s,x}[W_{s+lag} ∈ · | τ_h > s+lag]` over probes `x` and lags.
#[allow(clippy::too_many_arguments)]
pub fn conditional_minorization_estimate(
    h: &TimeFunction,
    s: f64,
    lags: &[f64],
    probes: &[f64],
    n_paths: u64,
    mesh: Mesh,
    dt: f64,
    seed: u64,
) -> Result<MinorizationEstimate> {
    if probes.is_empty() {
        return Err(Error::InvalidInput("need at least one probe".into()));
    }
    let root = Stream::new(seed);
    let mut histograms = Vec::new();
    for (i, &x) in probes.iter().enumerate() {
        let sub = root.substream(i as u64).key();
        for (lag, hist) in lags.iter().zip(survivor_histograms(h, s, x, lags, dt, mesh, sub, 0..n_paths)?) {
            histograms.push((x, *lag, hist));
        }
    }
    let n = mesh.n_cells();
    let mut pooled = alloc::vec![0u64; n];
    for (_, _, hist) in &histograms {
        if hist.survivors == 0 {
            return Err(Error::SparseHistogram { empty: n, cells: n, suggested_cells: 1 });
        }
        for (p, c) in pooled.iter_mut().zip(&hist.counts) {
            *p += c;
        }
    }
    let empty = pooled.iter().filter(|c| **c == 0).count();
    if 2 * empty > n {
        return Err(Error::SparseHistogram { empty, cells: n, suggested_cells: (n - empty).max(1) });
    }
    let laws = histograms.iter().map(|(_, _, hist)| hist.measure()).collect::<Result<Vec<_>>>()?;
    let (c1, nu) = minorization_from_histograms(&laws)?;
    let errs: Vec<Vec<f64>> = histograms.iter().map(|(_, _, hist)| hist.cell_stderr()).collect();
    let c1_lower = (0..n)
        .map(|c| {
            laws.iter().zip(&errs).map(|(l, e)| l.weights()[c] - 1.645 * e[c]).fold(f64::INFINITY, f64::min).max(0.0)
        })
        .sum();
    Ok(MinorizationEstimate { c1, c1_lower, nu, histograms })
}

/// Common-noise survival counts against `h` on `[s+kγ, t+kγ]` and `g`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GapTally {
    pub paths: u64,
    pub survived_h: u64,
    pub survived_g: u64,
    /// Paths with `τ_h ≤ t+kγ < τ_g`.
    pub sandwich: u64,
}

impl GapTally {
    pub fn merge(&mut self, other: &GapTally) {
        self.paths += other.paths;
        self.survived_h += other.survived_h;
        self.survived_g += other.survived_g;
        self.sandwich += other.sandwich;
    }

    pub fn row(&self, k: u32) -> GapRow {
        let n = self.paths.max(1) as f64;
        let (ph, pg) = (self.survived_h as f64 / n, self.survived_g as f64 / n);
        let q = self.sandwich as f64 / n;
        GapRow { k, p_h: ph, p_g: pg, gap: (ph - pg).abs(), stderr: libm::sqrt(q * (1.0 - q) / n), sandwich_prob: q }
    }
}

/// One line of the boundary-convergence report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub k: u32,
    pub p_h: f64,
    pub p_g: f64,
    pub gap: f64,
    /// Standard error of the gap (the gap equals the sandwich frequency
    /// pathwise under common noise).
    pub stderr: f64,
    pub sandwich_prob: f64,
}

/// Survival against `h` over `[s+kγ, t+kγ]` and against `g` over the same
/// window (equal in law to `[s, t]` by periodicity), driven by the same
/// increments and bridge uniforms.
#[allow(clippy::too_many_arguments)]
pub fn boundary_gap_tally(
    pair: &BoundaryPair,
    s: f64,
    t: f64,
    x: f64,
    k: u32,
    dt: f64,
    seed: u64,
    replicas: Range<u64>,
) -> Result<GapTally> {
    let shift = k as f64 * pair.gamma;
    check_start(&pair.h, s + shift, x)?;
    if !(t >= s) {
        return Err(Error::InvalidInput(alloc::format!("need t >= s, got s={s}, t={t}")));
    }
    let n = replicas.end.saturating_sub(replicas.start);
    if t == s {
        return Ok(GapTally { paths: n, survived_h: n, survived_g: n, sandwich: 0 });
    }
    let grid = TimeGrid::covering(s + shift, t + shift, dt)?;
    let hp = BoundaryPath::new(&pair.h, grid)?;
    let gp = BoundaryPath::new(&pair.g, grid)?;
    let (hv, gv) = (hp.values(), gp.values());
    let dt = grid.dt();
    let sq = libm::sqrt(dt);
    let mut tally = GapTally::default();
    for r in replicas {
        let rng = replica_stream(seed, r);
        let (mut x_cur, mut alive_h, mut alive_g) = (x, true, true);
        for kk in 0..grid.n_steps() {
            let c = DRAWS_PER_STEP * kk as u64;
            let (x1, dead_g) = bm_step(x_cur, gv[kk], gv[kk + 1], sq, dt, &rng, c, true);
            if alive_h {
                let (_, dead_h) = bm_step(x_cur, hv[kk], hv[kk + 1], sq, dt, &rng, c, true);
                alive_h = !dead_h;
            }
            x_cur = x1;
            if dead_g {
                alive_g = false;
                alive_h = false;
                break;
            }
        }
        tally.paths += 1;
        tally.survived_h += alive_h as u64;
        tally.survived_g += alive_g as u64;
        tally.sandwich += (alive_g && !alive_h) as u64;
    }
    Ok(tally)
}

#[allow(clippy::too_many_arguments)]
pub fn boundary_convergence_report(
    pair: &BoundaryPair,
    s: f64,
    t: f64,
    x: f64,
    ks: &[u32],
    n_paths: u64,
    dt: f64,
    seed: u64,
) -> Result<Vec<GapRow>> {
    ks.iter().map(|&k| Ok(boundary_gap_tally(pair, s, t, x, k, dt, seed, 0..n_paths)?.row(k))).collect()
}

/// Occupation measures under `h` and `g` and their total variation distance.
#[derive(Debug, Clone, PartialEq)]
pub struct QedComparison {
    pub tv: f64,
    /// Bootstrap standard deviation of the TV (lineage rows resampled).
    pub bootstrap_se: f64,
    pub under_h: FvResult,
    pub under_g: FvResult,
}

pub const BOOTSTRAP_ROUNDS: u64 = 200;

/// Run identically configured Fleming–Viot systems against `h` (seed
/// `seeds.0`) and `g` (seed `seeds.1`) on a common histogram range.
pub fn qed_comparison(pair: &BoundaryPair, cfg: &FvConfig, seeds: (u64, u64)) -> Result<QedComparison> {
    let mut cfg = cfg.clone();
    cfg.h_max = Some(cfg.h_max.unwrap_or_else(|| pair.h_max(cfg.t0 + cfg.duration)));
    let under_h = fleming_viot(&pair.h, &FvConfig { seed: seeds.0, ..cfg.clone() })?;
    let under_g = fleming_viot(&pair.g, &FvConfig { seed: seeds.1, ..cfg.clone() })?;
    let tv = under_h.occupation.normalized()?.tv(&under_g.occupation.normalized()?)?;
    let n = cfg.n_particles as u64;
    let boot = Stream::new(seeds.0 ^ seeds.1.rotate_left(32)).substream(0xb007);
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for b in 0..BOOTSTRAP_ROUNDS {
        let mut rng = boot.substream(b);
        let ra: Vec<usize> = (0..n).map(|_| rng.next_below(n) as usize).collect();
        let rb: Vec<usize> = (0..n).map(|_| rng.next_below(n) as usize).collect();
        let a = under_h.occupation_from_rows(ra).normalized()?;
        let g = under_g.occupation_from_rows(rb).normalized()?;
        let d = a.tv(&g)?;
        sum += d;
        sum2 += d * d;
    }
    let m = BOOTSTRAP_ROUNDS as f64;
    let var = (sum2 - sum * sum / m) / (m - 1.0);
    Ok(QedComparison { tv, bootstrap_se: libm::sqrt(var.max(0.0)), under_h, under_g })
}
