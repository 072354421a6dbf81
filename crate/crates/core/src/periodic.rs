//! Limit of time averages for the asymptotically periodic OU process.
//!
//! The periodic skeleton `Y_{nγ}` of the auxiliary process is the AR(1) map
//! `y ↦ a·y + s0·Z` with `a = exp(−∫_0^γ g)`, so its invariant law is
//! `Normal(0, s0²/(1 − a²))`. Time averages of `f` converge to
//!
//! ```text
//! L(f) = (1/γ) ∫_0^γ E[f(Y_s)] ds,   Y_0 ~ invariant law.
//! ```
//!
//! The same invariant law is also computed by power iteration on a mesh
//! discretisation of the skeleton kernel, which serves as an independent
//! cross-check of the closed form.

use alloc::vec::Vec;

use crate::ou::{transition_params, GaussianTransition, OuSpec};
use crate::process::Observable;
use crate::special::{gaussian_interval_mass, GaussHermite};
use crate::{Error, Result};

/// Number of trapezoid nodes per period in [`limiting_value`].
pub const PERIOD_NODES: usize = 1024;
pub const HERMITE_ORDER: usize = 64;

/// One period of the auxiliary process as an AR(1) map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonMap {
    /// Contraction factor `exp(−∫_0^γ g)`.
    pub a: f64,
    /// Standard deviation of the one-period noise.
    pub s0: f64,
}

impl SkeletonMap {
    pub fn from_spec(spec: &OuSpec) -> Result<Self> {
        let tr = transition_params(&spec.g, 0.0, spec.gamma)?;
        Ok(SkeletonMap { a: tr.m, s0: tr.sigma })
    }

    pub fn transition(&self) -> GaussianTransition {
        GaussianTransition { m: self.a, sigma: self.s0 }
    }

    /// Variance after one step from `Normal(0, var)`.
    pub fn push_variance(&self, var: f64) -> f64 {
        self.a * self.a * var + self.s0 * self.s0
    }
}

/// Centered Gaussian invariant law of the skeleton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantGaussian {
    pub mean: f64,
    pub variance: f64,
}

pub fn invariant_gaussian(spec: &OuSpec) -> Result<InvariantGaussian> {
    invariant_of(&SkeletonMap::from_spec(spec)?)
}

pub fn invariant_of(map: &SkeletonMap) -> Result<InvariantGaussian> {
    if !(map.a < 1.0) {
        return Err(Error::NotContracting { factor: map.a });
    }
    Ok(InvariantGaussian { mean: 0.0, variance: map.s0 * map.s0 / (1.0 - map.a * map.a) })
}

/// Uniform cells on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    lo: f64,
    hi: f64,
    n_cells: usize,
}

impl Mesh {
    pub fn new(lo: f64, hi: f64, n_cells: usize) -> Result<Self> {
        if !(lo < hi) || n_cells == 0 || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(alloc::format!("bad mesh [{lo}, {hi}] with {n_cells} cells")));
        }
        Ok(Mesh { lo, hi, n_cells })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.n_cells as f64
    }

    pub fn edge(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.hi
        } else {
            self.lo + i as f64 * self.width()
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.center(i))
    }

    /// Cell containing `x`; points outside fold into the edge cells.
    #[inline]
    pub fn cell_of(&self, x: f64) -> usize {
        let i = libm::floor((x - self.lo) / self.width());
        if i < 0.0 {
            0
        } else {
            (i as usize).min(self.n_cells - 1)
        }
    }

    /// `z`-dilation of the mesh.
    pub fn dilate(&self, z: f64) -> Result<Mesh> {
        if z > 0.0 {
            Mesh::new(z * self.lo, z * self.hi, self.n_cells)
        } else {
            Mesh::new(z * self.hi, z * self.lo, self.n_cells)
        }
    }
}

/// Probability weights on the cells of a [`Mesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeshMeasure {
    mesh: Mesh,
    weights: Vec<f64>,
}

impl MeshMeasure {
    /// Normalizes nonnegative masses; fails on a zero or negative total.
    pub fn from_masses(mesh: Mesh, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != mesh.n_cells() {
            return Err(Error::MeshMismatch);
        }
        if masses.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidInput("masses must be finite and nonnegative".into()));
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("measure has zero total mass".into()));
        }
        let weights = masses.into_iter().map(|m| m / total).collect();
        Ok(MeshMeasure { mesh, weights })
    }

    pub fn uniform(mesh: Mesh) -> Self {
        let n = mesh.n_cells();
        MeshMeasure { mesh, weights: alloc::vec![1.0 / n as f64; n] }
    }

    /// Unit mass in the cell containing `x`.
    pub fn dirac(mesh: Mesh, x: f64) -> Self {
        let mut w = alloc::vec![0.0; mesh.n_cells()];
        w[mesh.cell_of(x)] = 1.0;
        MeshMeasure { mesh, weights: w }
    }

    /// Exact cell masses of `Normal(mean, sd²)`, tails folded into edge cells.
    pub fn gaussian(mesh: Mesh, mean: f64, sd: f64) -> Self {
        let n = mesh.n_cells();
        let w = (0..n)
            .map(|i| {
                let lo = if i == 0 { f64::NEG_INFINITY } else { mesh.edge(i) };
                let hi = if i + 1 == n { f64::INFINITY } else { mesh.edge(i + 1) };
                gaussian_interval_mass(lo, hi, mean, sd)
            })
            .collect();
        MeshMeasure::from_masses(mesh, w).unwrap_or_else(|_| MeshMeasure::dirac(mesh, mean))
    }

    /// Cell masses of a density by per-cell Simpson integration.
    pub fn from_density<F: Fn(f64) -> f64>(mesh: Mesh, density: F) -> Result<Self> {
        let masses = (0..mesh.n_cells())
            .map(|i| crate::quad::integrate_fn(&density, mesh.edge(i), mesh.edge(i + 1), 1e-13))
            .collect::<Result<Vec<f64>>>()?;
        MeshMeasure::from_masses(mesh, masses.into_iter().map(|m| m.max(0.0)).collect())
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_i f(center_i)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.weights.iter().zip(self.mesh.centers()).map(|(w, x)| w * f(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.integrate(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.integrate(|x| (x - m) * (x - m))
    }

    /// Half the L¹ distance between weight vectors, clamped to 1 against
    /// rounding in the normalized weights.
    pub fn tv(&self, other: &MeshMeasure) -> Result<f64> {
        if !same_mesh(&self.mesh, &other.mesh) {
            return Err(Error::MeshMismatch);
        }
        Ok((0.5 * self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum::<f64>()).min(1.0))
    }

    /// Law of `z·X`: same weights on the dilated mesh.
    pub fn dilate(&self, z: f64) -> Result<MeshMeasure> {
        let mesh = self.mesh.dilate(z)?;
        let mut weights = self.weights.clone();
        if z < 0.0 {
            weights.reverse();
        }
        Ok(MeshMeasure { mesh, weights })
    }
}

pub(crate) fn same_mesh(a: &Mesh, b: &Mesh) -> bool {
    a.n_cells == b.n_cells
        && (a.lo - b.lo).abs() <= 1e-12 * (1.0 + a.lo.abs())
        && (a.hi - b.hi).abs() <= 1e-12 * (1.0 + a.hi.abs())
}

/// Dense row-stochastic matrix acting on measures over a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshKernel {
    mesh: Mesh,
    rows: Vec<f64>,
}

impl MeshKernel {
    pub fn from_rows(mesh: Mesh, rows: Vec<f64>) -> Result<Self> {
        let n = mesh.n_cells();
        if rows.len() != n * n {
            return Err(Error::MeshMismatch);
        }
        for (i, row) in rows.chunks(n).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-10 || row.iter().any(|p| *p < 0.0) {
                return Err(Error::InvalidInput(alloc::format!("row {i} is not a probability vector (sum {s})")));
            }
        }
        Ok(MeshKernel { mesh, rows })
    }

    /// Gaussian transition from every cell center, tails folded into edge cells.
    pub fn gaussian(mesh: Mesh, tr: &GaussianTransition) -> Result<Self> {
        let n = mesh.n_cells();
        let mut rows = Vec::with_capacity(n * n);
        for x in mesh.centers() {
            let (m, sd) = tr.law_from(x);
            let row = MeshMeasure::gaussian(mesh, m, sd);
            rows.extend_from_slice(row.weights());
        }
        Self::from_rows(mesh, rows)
    }

    /// Discretized skeleton `Q_{0,γ}` of the auxiliary process.
    pub fn skeleton(spec: &OuSpec, mesh: Mesh) -> Result<Self> {
        Self::gaussian(mesh, &SkeletonMap::from_spec(spec)?.transition())
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.mesh.n_cells();
        &self.rows[i * n..(i + 1) * n]
    }

    /// `μK`.
    pub fn push(&self, mu: &MeshMeasure) -> Result<MeshMeasure> {
        if !same_mesh(&self.mesh, mu.mesh()) {
            return Err(Error::MeshMismatch);
        }
        let n = self.mesh.n_cells();
        let mut out = alloc::vec![0.0; n];
        for (w, row) in mu.weights().iter().zip(self.rows.chunks(n)) {
            if *w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(row) {
                *o += w * p;
            }
        }
        Ok(MeshMeasure { mesh: self.mesh, weights: out })
    }
}

/// Result of [`power_iteration_invariant`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerIteration {
    pub measure: MeshMeasure,
    pub iterations: usize,
    pub residual: f64,
}

/// Iterate `μ ← μK` from the uniform law until `‖μK − μ‖₁ ≤ tol`.
pub fn power_iteration_invariant(kernel: &MeshKernel, tol: f64, max_iter: usize) -> Result<PowerIteration> {
    let mut mu = MeshMeasure::uniform(*kernel.mesh());
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let next = kernel.push(&mu)?;
        residual = mu.weights().iter().zip(next.weights()).map(|(a, b)| (a - b).abs()).sum();
        // renormalize against rounding drift
        let total = next.total();
        mu = MeshMeasure { mesh: next.mesh, weights: next.weights.iter().map(|w| w / total).collect() };
        if residual <= tol {
            return Ok(PowerIteration { measure: mu, iterations: it, residual });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// Variance of the periodic stationary regime at the trapezoid nodes of
/// `[kγ, (k+1)γ]`, `k = origin_periods` (node `PERIOD_NODES` included).
fn stationary_variance_profile(spec: &OuSpec, origin_periods: u32) -> Result<Vec<f64>> {
    let inv = invariant_gaussian(spec)?;
    let h = spec.gamma / PERIOD_NODES as f64;
    let mut v = inv.variance;
    let skip = origin_periods as usize * PERIOD_NODES;
    let mut out = Vec::with_capacity(PERIOD_NODES + 1);
    for i in 0..skip + PERIOD_NODES {
        if i >= skip {
            out.push(v);
        }
        let tr = transition_params(&spec.g, i as f64 * h, (i + 1) as f64 * h)?;
        v = tr.m * tr.m * v + tr.variance();
    }
    out.push(v);
    Ok(out)
}

/// `(1/γ)∫_0^γ β_γ Q_{0,s} f ds` for the auxiliary OU process.
///
/// The integrand is γ-periodic in `s`, so the trapezoid rule over one
/// period converges geometrically; inner expectations use Gauss–Hermite.
pub fn limiting_value(spec: &OuSpec, f: &Observable) -> Result<f64> {
    limiting_value_from(spec, f, 0)
}

/// Same limit with the `s`-window shifted to `[kγ, (k+1)γ]`.
pub fn limiting_value_from(spec: &OuSpec, f: &Observable, origin_periods: u32) -> Result<f64> {
    let gh = GaussHermite::new(HERMITE_ORDER);
    let prof = stationary_variance_profile(spec, origin_periods)?;
    let n = PERIOD_NODES;
    let mut acc = 0.0;
    for (i, v) in prof.iter().enumerate() {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * gh.expect(0.0, libm::sqrt(*v), |x| f.eval(x));
    }
    Ok(acc / n as f64)
}
