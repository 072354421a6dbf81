//! Fleming–Viot particle systems for conditioned Brownian motion.
//!
//! `N` particles move as killed Brownian motions; a killed particle restarts
//! at the position of a uniformly chosen particle that survived the step.
//! The empirical measure at time `t` approximates `P[X_t ∈ · | τ > t]`.
//!
//! Conditioned time averages `E[(1/t)∫_0^t f(X_u) du | τ > t]` need the law
//! of whole surviving paths, not of the current position. Each particle
//! therefore carries the occupation histogram of its ancestral line; on
//! resampling the restarted particle inherits a copy of its donor's
//! histogram. Averaging these lineage histograms over the final population
//! estimates the quasi-ergodic distribution. The plain time average of the
//! empirical measure is also kept; it converges to the quasi-stationary
//! distribution instead.

use alloc::vec::Vec;

use super::{bm_step, BoundaryPath, DRAWS_PER_STEP};
use crate::periodic::{Mesh, MeshMeasure};
use crate::rng::Stream;
use crate::timefn::{TimeFunction, TimeGrid};
use crate::{Error, Result};

/// Fleming–Viot run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FvConfig {
    pub n_particles: usize,
    pub dt: f64,
    /// Start time `s` of the run.
    pub t0: f64,
    /// Length of the run.
    pub duration: f64,
    /// Common initial position of all particles.
    pub x0: f64,
    /// Histogram cells on `[−h_max, h_max]`.
    pub bins: usize,
    /// Occupation is accumulated only after `t0 + burn_in`.
    pub burn_in: f64,
    /// Half-width of the histogram range; `None` uses the boundary's bound.
    pub h_max: Option<f64>,
    pub log_resampling: bool,
    pub seed: u64,
}

impl FvConfig {
    pub fn new(n_particles: usize, dt: f64, duration: f64, seed: u64) -> Self {
        FvConfig {
            n_particles,
            dt,
            t0: 0.0,
            duration,
            x0: 0.0,
            bins: 40,
            burn_in: 0.0,
            h_max: None,
            log_resampling: false,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::InvalidInput("Fleming-Viot needs at least 2 particles".into()));
        }
        if !(self.dt > 0.0 && self.duration > 0.0 && self.burn_in >= 0.0 && self.burn_in < self.duration) {
            return Err(Error::InvalidInput("need dt > 0, duration > 0 and 0 <= burn_in < duration".into()));
        }
        if self.bins == 0 {
            return Err(Error::InvalidInput("bins must be positive".into()));
        }
        Ok(())
    }
}

/// One resampling event: particle `absorbed` restarted at `donor`'s position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleRecord {
    pub time: f64,
    pub absorbed: u32,
    pub donor: u32,
}

/// Final state of a particle system.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystem {
    pub positions: Vec<f64>,
    pub time: f64,
    pub resample_log: Vec<ResampleRecord>,
    pub n_absorptions: u64,
    pub seed: u64,
}

/// Time-weighted histogram on `[−h_max, h_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    mesh: Mesh,
    mass: Vec<f64>,
}

impl OccupationMeasure {
    pub fn new(mesh: Mesh) -> Self {
        OccupationMeasure { mesh, mass: alloc::vec![0.0; mesh.n_cells()] }
    }

    pub fn from_mass(mesh: Mesh, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != mesh.n_cells() {
            return Err(Error::MeshMismatch);
        }
        Ok(OccupationMeasure { mesh, mass })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Unnormalized accumulated mass per cell.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn add(&mut self, x: f64, w: f64) {
        let c = self.mesh.cell_of(x);
        self.mass[c] += w;
    }

    pub fn normalized(&self) -> Result<MeshMeasure> {
        MeshMeasure::from_masses(self.mesh, self.mass.clone())
    }
}

/// Output of [`fleming_viot`].
#[derive(Debug, Clone, PartialEq)]
pub struct FvResult {
    pub system: ParticleSystem,
    /// Average of the final population's lineage histograms (QED estimate).
    pub occupation: OccupationMeasure,
    /// Time average of the empirical measure (QSD-type average).
    pub empirical: OccupationMeasure,
    /// Lineage histograms, `n_particles × bins`, row-major.
    pub lineage: Vec<f64>,
}

impl FvResult {
    /// Occupation built from a subset (with repetition) of lineage rows.
    pub fn occupation_from_rows(&self, rows: impl IntoIterator<Item = usize>) -> OccupationMeasure {
        let bins = self.occupation.mesh().n_cells();
        let mut mass = alloc::vec![0.0; bins];
        for r in rows {
            for (m, v) in mass.iter_mut().zip(&self.lineage[r * bins..(r + 1) * bins]) {
                *m += v;
            }
        }
        OccupationMeasure { mesh: *self.occupation.mesh(), mass }
    }
}

/// Shared Fleming–Viot stepping.
struct Swarm {
    x: Vec<f64>,
    dead: Vec<bool>,
    alive: Vec<u32>,
}

impl Swarm {
    fn new(n: usize, x0: f64) -> Self {
        Swarm { x: alloc::vec![x0; n], dead: alloc::vec![false; n], alive: Vec::with_capacity(n) }
    }

    /// Move every particle one step, then restart the killed ones in index
    /// order. Draws: particle `i` uses counters `3i..3i+3` of `rng`; donors
    /// are drawn sequentially from counter `3N`.
    fn step<F: FnMut(usize, usize)>(
        &mut self,
        h0: f64,
        h1: f64,
        dt: f64,
        time: f64,
        rng: &Stream,
        mut on_restart: F,
    ) -> Result<usize> {
        let n = self.x.len();
        let sq = libm::sqrt(dt);
        self.alive.clear();
        for i in 0..n {
            let (x1, dead) = bm_step(self.x[i], h0, h1, sq, dt, rng, DRAWS_PER_STEP * i as u64, true);
            self.x[i] = x1;
            self.dead[i] = dead;
            if !dead {
                self.alive.push(i as u32);
            }
        }
        let killed = n - self.alive.len();
        if killed == 0 {
            return Ok(0);
        }
        if self.alive.is_empty() {
            return Err(Error::Extinction { time, dt });
        }
        let mut pick = (*rng).at(DRAWS_PER_STEP * n as u64);
        for i in 0..n {
            if self.dead[i] {
                let j = self.alive[pick.next_below(self.alive.len() as u64) as usize] as usize;
                self.x[i] = self.x[j];
                on_restart(i, j);
            }
        }
        Ok(killed)
    }
}

fn histogram_mesh(h: &TimeFunction, t0: f64, t1: f64, h_max: Option<f64>, bins: usize) -> Result<Mesh> {
    let r = match h_max {
        Some(r) => r,
        None if h.upper_bound().is_finite() => h.upper_bound(),
        None => {
            let mut m: f64 = 0.0;
            for i in 0..=4096 {
                m = m.max(h.eval(t0 + (t1 - t0) * i as f64 / 4096.0));
            }
            m
        }
    };
    Mesh::new(-r, r, bins)
}

fn check_inside(h: &TimeFunction, t: f64, x: f64) -> Result<()> {
    let v = h.eval(t);
    if !(x.abs() < v) {
        return Err(Error::InvalidInput(alloc::format!("start {x} outside (-{v}, {v}) at time {t}")));
    }
    Ok(())
}

/// Run a Fleming–Viot system against the boundary `h`.
pub fn fleming_viot(h: &TimeFunction, cfg: &FvConfig) -> Result<FvResult> {
    cfg.validate()?;
    check_inside(h, cfg.t0, cfg.x0)?;
    let n = cfg.n_particles;
    let grid = TimeGrid::covering(cfg.t0, cfg.t0 + cfg.duration, cfg.dt)?;
    let bp = BoundaryPath::new(h, grid)?;
    let mesh = histogram_mesh(h, cfg.t0, grid.end(), cfg.h_max, cfg.bins)?;
    let bins = mesh.n_cells();
    let dt = grid.dt();
    let root = Stream::new(cfg.seed);
    let mut swarm = Swarm::new(n, cfg.x0);
    let mut lineage = alloc::vec![0.0; n * bins];
    let mut empirical = OccupationMeasure::new(mesh);
    let mut log = Vec::new();
    let mut n_abs = 0u64;
    let start = cfg.t0 + cfg.burn_in;
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let hv = bp.values();
        let rng = root.substream(k as u64);
        let killed = swarm.step(hv[k], hv[k + 1], dt, t, &rng, |i, j| {
            lineage.copy_within(j * bins..(j + 1) * bins, i * bins);
            if cfg.log_resampling {
                log.push(ResampleRecord { time: t + 0.5 * dt, absorbed: i as u32, donor: j as u32 });
            }
        })?;
        n_abs += killed as u64;
        if grid.time(k + 1) > start + 1e-12 * dt {
            for (i, x) in swarm.x.iter().enumerate() {
                let c = mesh.cell_of(*x);
                lineage[i * bins + c] += dt;
                empirical.mass[c] += dt;
            }
        }
    }
    let mut occ = OccupationMeasure::new(mesh);
    for row in lineage.chunks(bins) {
        for (m, v) in occ.mass.iter_mut().zip(row) {
            *m += v;
        }
    }
    let system = ParticleSystem {
        positions: swarm.x,
        time: grid.end(),
        resample_log: log,
        n_absorptions: n_abs,
        seed: cfg.seed,
    };
    Ok(FvResult { system, occupation: occ, empirical, lineage })
}

/// Horizon-conditioned laws of `X_t` from [`q_process_approx`].
#[derive(Debug, Clone, PartialEq)]
pub struct QProcessReport {
    pub horizons: Vec<f64>,
    /// Law of `X_t` given survival to each horizon.
    pub laws: Vec<MeshMeasure>,
    /// Distinct time-`t` ancestors among the population at each horizon.
    pub lineages: Vec<usize>,
    /// Horizons where fewer than [`MIN_LINEAGES`] ancestors remain.
    pub flagged: Vec<bool>,
    /// TV between consecutive horizons (length `horizons.len() − 1`).
    pub tv_consecutive: Vec<f64>,
}

pub const MIN_LINEAGES: usize = 100;

/// Approximate `P_{s,x}[X_t ∈ · | τ > T]` for each horizon `T`.
///
/// A Fleming–Viot system runs from `(s, x)`. At time `t` every particle
/// records its position as its ancestor value; restarted particles inherit
/// the donor's ancestor. At horizon `T` the ancestor values of the current
/// population are distributed as `X_t` given survival to `T`.
#[allow(clippy::too_many_arguments)]
pub fn q_process_approx(
    h: &TimeFunction,
    s: f64,
    x: f64,
    t: f64,
    horizons: &[f64],
    n_particles: usize,
    dt: f64,
    bins: usize,
    seed: u64,
) -> Result<QProcessReport> {
    check_inside(h, s, x)?;
    if n_particles < 2 || bins == 0 || !(dt > 0.0) {
        return Err(Error::InvalidInput("need n_particles >= 2, bins > 0, dt > 0".into()));
    }
    if !(s <= t) || horizons.is_empty() || !(horizons[0] >= t) || horizons.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("need s <= t <= horizons, horizons strictly increasing".into()));
    }
    let t_end = *horizons.last().unwrap_or(&t);
    let mesh = histogram_mesh(h, s, t_end.max(s + dt), None, bins)?;
    let n = n_particles;
    let root = Stream::new(seed);
    let mut swarm = Swarm::new(n, x);
    let mut anc_val = alloc::vec![x; n];
    let mut anc_id: Vec<u32> = (0..n as u32).collect();

    let snapshot = |anc_val: &[f64], anc_id: &[u32]| -> Result<(MeshMeasure, usize)> {
        let mut counts = alloc::vec![0.0; mesh.n_cells()];
        for v in anc_val {
            counts[mesh.cell_of(*v)] += 1.0;
        }
        let mut ids = anc_id.to_vec();
        ids.sort_unstable();
        ids.dedup();
        Ok((MeshMeasure::from_masses(mesh, counts)?, ids.len()))
    };

    let mut laws = Vec::new();
    let mut lineages = Vec::new();
    let (mut k, mut time) = (0u64, s);
    let mut recorded = false;
    let mut next_h = 0;
    // Step to `target`, tracking ancestors once time `t` has been passed.
    let steps_to = |from: f64, to: f64| -> usize { libm::round((to - from) / dt).max(0.0) as usize };
    let mut targets: Vec<f64> = Vec::with_capacity(horizons.len() + 1);
    targets.push(t);
    targets.extend_from_slice(horizons);
    for &target in &targets {
        let m = steps_to(time, target);
        for _ in 0..m {
            let rng = root.substream(k);
            let (h0, h1) = (h.eval(time), h.eval(time + dt));
            swarm.step(h0, h1, dt, time, &rng, |i, j| {
                anc_val[i] = anc_val[j];
                anc_id[i] = anc_id[j];
            })?;
            k += 1;
            time += dt;
        }
        time = target;
        if !recorded {
            anc_val.copy_from_slice(&swarm.x);
            for (i, a) in anc_id.iter_mut().enumerate() {
                *a = i as u32;
            }
            recorded = true;
            if t == s {
                anc_val.iter_mut().for_each(|v| *v = x);
            }
            continue;
        }
        let (law, distinct) = snapshot(&anc_val, &anc_id)?;
        laws.push(law);
        lineages.push(distinct);
        next_h += 1;
    }
    debug_assert_eq!(next_h, horizons.len());
    let tv_consecutive = laws.windows(2).map(|w| w[0].tv(&w[1])).collect::<Result<Vec<_>>>()?;
    let flagged = lineages.iter().map(|l| *l < MIN_LINEAGES).collect();
    Ok(QProcessReport { horizons: horizons.to_vec(), laws, lineages, flagged, tv_consecutive })
}
