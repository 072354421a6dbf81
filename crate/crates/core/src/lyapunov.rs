//! Drift and minorization certificates, ψ-distances and contraction-rate fits.
//!
//! Certificates are checked, not searched: the caller proposes constants and
//! the functions here evaluate residuals on a point mesh. Kernels are
//! Gaussian (`x ↦ Normal(mean, sd²)`), which covers the OU family in closed
//! form.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::ou::{transition_params, GaussianTransition};
use crate::periodic::{same_mesh, MeshKernel, MeshMeasure};
use crate::quad::integrate_fn;
use crate::rng::Stream;
use crate::special::{gaussian_density, gaussian_interval_mass, GaussHermite};
use crate::stats::linear_fit;
use crate::timefn::TimeFunction;
use crate::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
/// Relative slack allowed in density-domination checks.
pub const DOMINATION_RTOL: f64 = 1e-12;
/// ψ-distances below this are treated as round-off and dropped from fits.
pub const DISTANCE_FLOOR: f64 = 1e-13;

/// A Lyapunov weight `ψ ≥ 1`.
#[derive(Clone)]
pub enum Psi {
    /// `ψ ≡ 1`.
    Constant,
    /// `ψ(x) = 1 + x²`.
    Quadratic,
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Psi {
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(name: impl Into<String>, f: F) -> Self {
        Psi::Custom { name: name.into(), f: Arc::new(f) }
    }

    pub fn name(&self) -> &str {
        match self {
            Psi::Constant => "1",
            Psi::Quadratic => "1 + x^2",
            Psi::Custom { name, .. } => name,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Psi::Constant => 1.0,
            Psi::Quadratic => 1.0 + x * x,
            Psi::Custom { f, .. } => f(x),
        }
    }

    /// `E[ψ(Y)]` for `Y ~ Normal(mean, sd²)`.
    pub fn gaussian_expectation(&self, mean: f64, sd: f64) -> f64 {
        match self {
            Psi::Constant => 1.0,
            Psi::Quadratic => 1.0 + mean * mean + sd * sd,
            Psi::Custom { f, .. } => {
                if sd == 0.0 {
                    f(mean)
                } else {
                    GaussHermite::new(64).expect(mean, sd, |x| f(x))
                }
            }
        }
    }
}

/// A Gaussian transition kernel `P_{s,t}(x, ·) = Normal(mean, sd²)`.
pub trait GaussianKernel {
    fn law(&self, s: f64, t: f64, x: f64) -> Result<(f64, f64)>;

    /// `P_{s,t}ψ(x)`.
    fn apply_psi(&self, psi: &Psi, s: f64, t: f64, x: f64) -> Result<f64> {
        let (m, sd) = self.law(s, t, x)?;
        Ok(psi.gaussian_expectation(m, sd))
    }
}

/// The OU process with the given drift rate.
impl GaussianKernel for TimeFunction {
    fn law(&self, s: f64, t: f64, x: f64) -> Result<(f64, f64)> {
        Ok(transition_params(self, s, t)?.law_from(x))
    }
}

/// A time-independent one-step kernel (the `(s, t)` arguments are ignored).
impl GaussianKernel for GaussianTransition {
    fn law(&self, _s: f64, _t: f64, x: f64) -> Result<(f64, f64)> {
        Ok(self.law_from(x))
    }
}

/// Evenly spaced test points on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMesh {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl PointMesh {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if !(lo <= hi) || n_points < 2 || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(alloc::format!("bad point mesh [{lo}, {hi}] x {n_points}")));
        }
        Ok(PointMesh { lo, hi, n_points })
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.n_points - 1) as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }
}

impl Default for PointMesh {
    /// 2001 points on `[−8, 8]`.
    fn default() -> Self {
        PointMesh { lo: -8.0, hi: 8.0, n_points: 2001 }
    }
}

/// Witness for `P_{s,s+t1}ψ ≤ θψ + C·1_K` with `K = [−k_edge, k_edge]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCertificate {
    pub s: f64,
    pub t1: f64,
    pub theta: f64,
    pub c: f64,
    pub k_edge: f64,
    pub max_residual: f64,
    /// Mesh point where the residual is largest.
    pub argmax: f64,
    pub valid: bool,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(alloc::format!("theta must lie in (0, 1), got {theta}")));
    }
    Ok(())
}

/// Evaluate `max_x [Pψ(x) − θψ(x) − C·1_K(x)]` over the mesh.
#[allow(clippy::too_many_arguments)]
pub fn check_drift<K: GaussianKernel + ?Sized>(
    kernel: &K,
    psi: &Psi,
    s: f64,
    t1: f64,
    theta: f64,
    c: f64,
    k_edge: f64,
    mesh: &PointMesh,
) -> Result<DriftCertificate> {
    check_theta(theta)?;
    if !(t1 > 0.0) || !(c >= 0.0) || !(k_edge >= 0.0) {
        return Err(Error::InvalidInput("drift certificate needs t1 > 0, C >= 0, K nonempty".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut argmax = mesh.lo;
    for x in mesh.points() {
        let p = psi.eval(x);
        if !(p >= 1.0) {
            return Err(Error::InvalidInput(alloc::format!("psi({x}) = {p} < 1")));
        }
        let ind = if x.abs() <= k_edge { 1.0 } else { 0.0 };
        let r = kernel.apply_psi(psi, s, s + t1, x)? - theta * p - c * ind;
        if r > worst {
            worst = r;
            argmax = x;
        }
    }
    Ok(DriftCertificate { s, t1, theta, c, k_edge, max_residual: worst, argmax, valid: worst <= 0.0 })
}

/// `sup Pψ/ψ` over the mesh and the given lags.
pub fn check_growth<K: GaussianKernel + ?Sized>(
    kernel: &K,
    psi: &Psi,
    s: f64,
    t_values: &[f64],
    mesh: &PointMesh,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in t_values {
        for x in mesh.points() {
            worst = worst.max(kernel.apply_psi(psi, s, s + t, x)? / psi.eval(x));
        }
    }
    Ok(worst)
}

/// Smallest `K` and `C` making the quadratic OU drift residual nonpositive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSuggestion {
    pub k_edge: f64,
    pub c_min: f64,
}

/// For `ψ = 1 + x²`, `Pψ − θψ = (1 + σ² − θ) + (m² − θ)x²`; solve for its root.
pub fn suggest_k(tr: &GaussianTransition, theta: f64) -> Result<DriftSuggestion> {
    check_theta(theta)?;
    let m2 = tr.m * tr.m;
    if !(theta > m2) {
        return Err(Error::InvalidInput(alloc::format!("theta {theta} must exceed m^2 = {m2}")));
    }
    let c_min = (1.0 + tr.variance() - theta).max(0.0);
    Ok(DriftSuggestion { k_edge: libm::sqrt(c_min / (theta - m2)), c_min })
}

/// The minorizing measure of a certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum Nu {
    /// Normalized `min(e^{−(x−a)²/2b²}, e^{−(x+a)²/2b²})`; `mass` is its integral.
    GaussianClass {
        a: f64,
        b_minus: f64,
        mass: f64,
    },
    Mesh(MeshMeasure),
}

impl Nu {
    /// Unnormalized shape `f_ν`.
    fn shape(a: f64, b: f64, x: f64) -> f64 {
        let d = x.abs() + a;
        libm::exp(-d * d / (2.0 * b * b))
    }

    /// Density of a [`Nu::GaussianClass`] measure; `None` for mesh measures.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Nu::GaussianClass { a, b_minus, mass } => Some(Self::shape(*a, *b_minus, x) / mass),
            Nu::Mesh(_) => None,
        }
    }
}

/// Witness for `δ_x P_{s,s+n0·t1} ≥ c·ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorizationCertificate {
    pub c: f64,
    pub nu: Nu,
    pub n0: u32,
    pub t1: f64,
    /// Class members checked and domination failures among them.
    pub checked: usize,
    pub violations: usize,
    /// Smallest `density / (c·ν)` seen on the mesh (∞ when `c = 0`).
    pub min_ratio: f64,
}

impl MinorizationCertificate {
    pub fn with_window(mut self, n0: u32, t1: f64) -> Self {
        self.n0 = n0;
        self.t1 = t1;
        self
    }

    pub fn valid(&self) -> bool {
        self.violations == 0
    }
}

/// Number of class members sampled by [`gaussian_class_minorization`].
pub const CLASS_SAMPLES: usize = 1000;

/// Common minorization of `{Normal(m, σ²) : |m| ≤ a, b₋ ≤ σ ≤ b₊}`.
///
/// `ν ∝ f_ν = min(e^{−(x−a)²/2b₋²}, e^{−(x+a)²/2b₋²})` and
/// `c = ∫f_ν / (√(2π) b₊)`. The bound is verified at [`CLASS_SAMPLES`]
/// members (corners included) on a 2001-point mesh.
pub fn gaussian_class_minorization(a: f64, b_minus: f64, b_plus: f64) -> Result<MinorizationCertificate> {
    if !(a >= 0.0 && a.is_finite() && b_minus > 0.0 && b_minus <= b_plus && b_plus.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "need a >= 0 and 0 < b_minus <= b_plus, got a={a}, b_minus={b_minus}, b_plus={b_plus}"
        )));
    }
    // f_ν is even and equals the Gaussian centred at −a on [0, ∞).
    let half = integrate_fn(|x| Nu::shape(a, b_minus, x), 0.0, 40.0 * b_minus, 1e-13 * b_minus)?;
    let mass = 2.0 * half;
    let c = mass / (SQRT_2PI * b_plus);
    let nu = Nu::GaussianClass { a, b_minus, mass };

    let span = (a + 6.0 * b_plus).max(8.0);
    let mesh = PointMesh::new(-span, span, 2001)?;
    let mut rng = Stream::new(0x6a09_e667_f3bc_c908);
    let corners = [(-a, b_minus), (a, b_minus), (-a, b_plus), (a, b_plus)];
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for i in 0..CLASS_SAMPLES {
        let (m, sd) = if i < corners.len() {
            corners[i]
        } else {
            (a * (2.0 * rng.next_f64() - 1.0), b_minus + (b_plus - b_minus) * rng.next_f64())
        };
        let mut bad = false;
        for y in mesh.points() {
            let lower = c * nu.density(y).unwrap_or(0.0);
            let p = gaussian_density(y, m, sd);
            if lower > 0.0 {
                min_ratio = min_ratio.min(p / lower);
            }
            if p < lower * (1.0 - DOMINATION_RTOL) {
                bad = true;
            }
        }
        violations += bad as usize;
    }
    Ok(MinorizationCertificate { c, nu, n0: 1, t1: 0.0, checked: CLASS_SAMPLES, violations, min_ratio })
}

/// Outcome of [`doeblin_from_minorization`].
#[derive(Debug, Clone, PartialEq)]
pub struct DoeblinReport {
    pub valid: bool,
    /// `c = 0`: the bound holds vacuously.
    pub degenerate: bool,
    /// Smallest `kernel − c·ν` over all probes, times and mesh points/cells.
    pub worst_margin: f64,
    pub worst_s: f64,
    pub worst_x: f64,
}

/// Check `δ_x P_{s,s+n0·t1} ≥ c·ν` for every `s` and probe `x`.
///
/// Gaussian-class ν are compared as densities on `mesh`; mesh ν are compared
/// cell-wise as masses (the point mesh is then unused).
pub fn doeblin_from_minorization<K: GaussianKernel + ?Sized>(
    cert: &MinorizationCertificate,
    kernel: &K,
    s_values: &[f64],
    probes: &[f64],
    mesh: &PointMesh,
) -> Result<DoeblinReport> {
    let horizon = cert.n0 as f64 * cert.t1;
    if !(horizon > 0.0) {
        return Err(Error::InvalidInput("certificate window n0*t1 must be positive".into()));
    }
    let mut rep = DoeblinReport {
        valid: true,
        degenerate: cert.c == 0.0,
        worst_margin: f64::INFINITY,
        worst_s: 0.0,
        worst_x: 0.0,
    };
    if rep.degenerate {
        return Ok(rep);
    }
    for &s in s_values {
        for &x in probes {
            let (m, sd) = kernel.law(s, s + horizon, x)?;
            let margin = match &cert.nu {
                Nu::GaussianClass { .. } => mesh
                    .points()
                    .map(|y| {
                        let lower = cert.c * cert.nu.density(y).unwrap_or(0.0);
                        let p = if sd > 0.0 { gaussian_density(y, m, sd) } else { 0.0 };
                        let slack = DOMINATION_RTOL * lower;
                        p - lower + slack
                    })
                    .fold(f64::INFINITY, f64::min),
                Nu::Mesh(nu) => {
                    let g = nu.mesh();
                    (0..g.n_cells())
                        .map(|i| {
                            let lo = if i == 0 { f64::NEG_INFINITY } else { g.edge(i) };
                            let hi = if i + 1 == g.n_cells() { f64::INFINITY } else { g.edge(i + 1) };
                            let lower = cert.c * nu.weights()[i];
                            gaussian_interval_mass(lo, hi, m, sd) - lower + DOMINATION_RTOL * lower
                        })
                        .fold(f64::INFINITY, f64::min)
                }
            };
            if margin < rep.worst_margin {
                rep.worst_margin = margin;
                rep.worst_s = s;
                rep.worst_x = x;
            }
        }
    }
    rep.valid = rep.worst_margin >= 0.0;
    Ok(rep)
}

/// Gaussian-class certificate for the OU kernel on `K = [−k_edge, k_edge]`.
///
/// Over the sampled `s`, one-window laws from `x ∈ K` have mean in
/// `[−a, a]` with `a = k_edge·sup m` and sd in `[inf σ, sup σ]`.
pub fn ou_minorization(
    drift: &TimeFunction,
    s_values: &[f64],
    t1: f64,
    k_edge: f64,
) -> Result<MinorizationCertificate> {
    if s_values.is_empty() {
        return Err(Error::InvalidInput("need at least one s value".into()));
    }
    let (mut m_sup, mut lo, mut hi) = (0.0f64, f64::INFINITY, 0.0f64);
    for &s in s_values {
        let tr = transition_params(drift, s, s + t1)?;
        m_sup = m_sup.max(tr.m);
        lo = lo.min(tr.sigma);
        hi = hi.max(tr.sigma);
    }
    Ok(gaussian_class_minorization(k_edge * m_sup, lo, hi)?.with_window(1, t1))
}

/// `Σ_cells ψ(center)·|μ − ν|`.
pub fn psi_distance(mu: &MeshMeasure, nu: &MeshMeasure, psi: &Psi) -> Result<f64> {
    if !same_mesh(mu.mesh(), nu.mesh()) {
        return Err(Error::MeshMismatch);
    }
    Ok(mu
        .weights()
        .iter()
        .zip(nu.weights())
        .zip(mu.mesh().centers())
        .map(|((a, b), x)| psi.eval(x) * (a - b).abs())
        .sum())
}

/// Least-squares fit of `log d(t) ≈ log(C'(μ₁(ψ)+μ₂(ψ))) − κt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionFit {
    pub c_prime: f64,
    /// `+∞` when every distance is zero.
    pub kappa: f64,
    pub r_squared: f64,
    /// `(time, distance)` pairs used by the fit.
    pub points: Vec<(f64, f64)>,
    /// Horizons dropped because the distance fell below [`DISTANCE_FLOOR`].
    pub truncated: usize,
}

/// Push `mu1`, `mu2` through `kernel` and fit the decay of their ψ-distance.
/// Horizons count kernel steps; each step lasts `step_time`.
pub fn contraction_rate_fit(
    kernel: &MeshKernel,
    mu1: &MeshMeasure,
    mu2: &MeshMeasure,
    psi: &Psi,
    horizons: &[usize],
    step_time: f64,
) -> Result<ContractionFit> {
    if horizons.len() < 3 {
        return Err(Error::InvalidInput("contraction fit needs at least 3 horizons".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("horizons must be strictly increasing".into()));
    }
    let (mut a, mut b) = (mu1.clone(), mu2.clone());
    let mass = a.integrate(|x| psi.eval(x)) + b.integrate(|x| psi.eval(x));
    let mut step = 0usize;
    let mut raw = Vec::with_capacity(horizons.len());
    for &n in horizons {
        while step < n {
            a = kernel.push(&a)?;
            b = kernel.push(&b)?;
            step += 1;
        }
        raw.push((n as f64 * step_time, psi_distance(&a, &b, psi)?));
    }
    if raw.iter().all(|(_, d)| *d == 0.0) {
        return Ok(ContractionFit { c_prime: 0.0, kappa: f64::INFINITY, r_squared: 1.0, points: raw, truncated: 0 });
    }
    let points: Vec<(f64, f64)> = raw.iter().copied().filter(|(_, d)| *d > DISTANCE_FLOOR).collect();
    let truncated = raw.len() - points.len();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| libm::log(p.1)).collect();
    let fit = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::InvalidInput("fewer than 2 horizons above the distance floor".into()))?;
    Ok(ContractionFit {
        c_prime: libm::exp(fit.intercept) / mass,
        kappa: -fit.slope,
        r_squared: fit.r_squared,
        points,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou::OuSpec;
    use crate::periodic::Mesh;
    use crate::special::normal_cdf;

    fn ou_unit() -> GaussianTransition {
        transition_params(&TimeFunction::constant(1.0), 0.0, 1.0).unwrap()
    }

    #[test]
    fn drift_examples() {
        let k = TimeFunction::constant(1.0);
        let mesh = PointMesh::default();
        let cert = check_drift(&k, &Psi::Quadratic, 0.0, 1.0, 0.5, 0.94, 1.6, &mesh).unwrap();
        assert!(cert.valid, "{cert:?}");
        // Pψ(0) − θψ(0) = 0.9323...
        let p0 = k.apply_psi(&Psi::Quadratic, 0.0, 1.0, 0.0).unwrap();
        assert!((p0 - 1.432_332_358).abs() < 1e-8);
        let bad = check_drift(&k, &Psi::Quadratic, 0.0, 1.0, 0.1, 0.94, 1.6, &mesh).unwrap();
        assert!(!bad.valid && bad.argmax.abs() == 8.0);
        let flat = check_drift(&k, &Psi::Constant, 0.0, 1.0, 0.3, 1.0, 8.0, &mesh).unwrap();
        assert!(flat.valid);
        assert!(check_drift(&k, &Psi::Quadratic, 0.0, 1.0, 1.5, 0.94, 1.6, &mesh).is_err());
        let neg = Psi::custom("x", |x| x);
        assert!(check_drift(&k, &neg, 0.0, 1.0, 0.5, 1.0, 1.0, &mesh).is_err());
    }

    #[test]
    fn suggested_k_is_tight() {
        let tr = ou_unit();
        let sug = suggest_k(&tr, 0.5).unwrap();
        assert!((sug.k_edge - 1.599).abs() < 1e-3, "{sug:?}");
        assert!((sug.c_min - 0.932_332_358).abs() < 1e-8);
        let mesh = PointMesh::default();
        let k = TimeFunction::constant(1.0);
        let ok = check_drift(&k, &Psi::Quadratic, 0.0, 1.0, 0.5, sug.c_min + 1e-9, sug.k_edge + 1e-9, &mesh).unwrap();
        assert!(ok.valid);
        let tight = check_drift(&k, &Psi::Quadratic, 0.0, 1.0, 0.5, sug.c_min - 1e-3, sug.k_edge, &mesh).unwrap();
        assert!(!tight.valid);
        assert!(suggest_k(&tr, 0.1).is_err());
    }

    #[test]
    fn growth_examples() {
        let mesh = PointMesh::default();
        let bm = TimeFunction::constant(0.0);
        let r = check_growth(&bm, &Psi::Quadratic, 0.0, &[1.0], &mesh).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        assert!((check_growth(&bm, &Psi::Quadratic, 0.0, &[0.0], &mesh).unwrap() - 1.0).abs() < 1e-15);
        let spec = OuSpec::default_experiment();
        let ts: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        for s in [0.0, 0.3, 2.7] {
            let r = check_growth(&spec.lambda, &Psi::Quadratic, s, &ts, &mesh).unwrap();
            assert!(r <= 1.0 + 1.0 + 1e-12);
        }
    }

    #[test]
    fn drift_implies_uniform_growth_bound() {
        // Valid drift plus growth on [0, t1) bound P_{s,t}ψ/ψ by C(1 + C/(1−θ)) for all t.
        let spec = OuSpec::default_experiment();
        let mesh = PointMesh::new(-8.0, 8.0, 401).unwrap();
        let theta = 0.6;
        let lags: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let mut c: f64 = 0.0;
        let mut k_edge: f64 = 0.0;
        let s_grid: Vec<f64> = (0..8).map(|i| i as f64 * 0.25).collect();
        for &s in &s_grid {
            let sug = suggest_k(&transition_params(&spec.lambda, s, s + 1.0).unwrap(), theta).unwrap();
            c = c.max(sug.c_min);
            k_edge = k_edge.max(sug.k_edge);
            c = c.max(check_growth(&spec.lambda, &Psi::Quadratic, s, &lags, &mesh).unwrap());
        }
        for &s in &s_grid {
            let cert = check_drift(&spec.lambda, &Psi::Quadratic, s, 1.0, theta, c, k_edge, &mesh).unwrap();
            assert!(cert.valid, "{cert:?}");
        }
        let bound = c * (1.0 + c / (1.0 - theta));
        let long: Vec<f64> = (0..40).map(|i| i as f64 * 0.13).collect();
        for &s in &s_grid {
            assert!(check_growth(&spec.lambda, &Psi::Quadratic, s, &long, &mesh).unwrap() <= bound);
        }
    }

    #[test]
    fn class_minorization_examples() {
        let c = gaussian_class_minorization(0.0, 1.0, 2.0).unwrap();
        assert!((c.c - 0.5).abs() < 1e-9);
        assert!(c.valid());
        let one = gaussian_class_minorization(0.0, 1.3, 1.3).unwrap();
        assert!((one.c - 1.0).abs() < 1e-9);
        let c3 = gaussian_class_minorization(3.0, 1.0, 2.0).unwrap();
        // ∫f_ν = 2√(2π) b₋ Φ(−a/b₋)
        let closed = 2.0 * 1.0 * normal_cdf(-3.0) / 2.0;
        assert!((c3.c - closed).abs() < 1e-10 * closed.max(1e-3), "{} vs {closed}", c3.c);
        assert_eq!(c3.checked, 1000);
        assert_eq!(c3.violations, 0);
        assert!(c3.min_ratio >= 1.0 - 1e-12);
        assert!(gaussian_class_minorization(1.0, 2.0, 1.0).is_err());
        assert!(gaussian_class_minorization(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn class_minorization_monotone() {
        let mut prev = f64::INFINITY;
        for a in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let c = gaussian_class_minorization(a, 0.7, 1.1).unwrap().c;
            assert!(c <= prev);
            prev = c;
        }
        let mut prev = f64::INFINITY;
        for bp in [0.7, 0.9, 1.5, 3.0] {
            let c = gaussian_class_minorization(1.0, 0.7, bp).unwrap().c;
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn doeblin_examples() {
        let drift = TimeFunction::constant(1.0);
        let cert = ou_minorization(&drift, &[0.0], 1.0, 1.6).unwrap();
        let probes: Vec<f64> = (0..=32).map(|i| -1.6 + 0.1 * i as f64).collect();
        let rep = doeblin_from_minorization(&cert, &drift, &[0.0, 0.5], &probes, &PointMesh::default()).unwrap();
        assert!(rep.valid && !rep.degenerate, "{rep:?}");

        let zero = MinorizationCertificate { c: 0.0, ..cert.clone() };
        let rep = doeblin_from_minorization(&zero, &drift, &[0.0], &probes, &PointMesh::default()).unwrap();
        assert!(rep.valid && rep.degenerate);

        let mesh = Mesh::new(-60.0, 60.0, 120).unwrap();
        let far = MinorizationCertificate { c: 0.5, nu: Nu::Mesh(MeshMeasure::dirac(mesh, 50.0)), ..cert };
        let rep = doeblin_from_minorization(&far, &drift, &[0.0], &probes, &PointMesh::default()).unwrap();
        assert!(!rep.valid);
    }

    #[test]
    fn psi_distance_examples() {
        let mesh = Mesh::new(-8.0, 8.0, 1600).unwrap();
        let a = MeshMeasure::gaussian(mesh, 0.0, 1.0);
        let b = MeshMeasure::gaussian(mesh, 1.0, 1.0);
        assert_eq!(psi_distance(&a, &a, &Psi::Quadratic).unwrap(), 0.0);
        let d = psi_distance(&a, &b, &Psi::Constant).unwrap();
        let tv = 2.0 * normal_cdf(0.5) - 1.0;
        assert!((d - 2.0 * tv).abs() < 1e-3, "{d}");
        assert!((d - 2.0 * a.tv(&b).unwrap()).abs() < 1e-14);
        let p = MeshMeasure::dirac(mesh, -1.0);
        let q = MeshMeasure::dirac(mesh, 1.0);
        assert!((psi_distance(&p, &q, &Psi::Constant).unwrap() - 2.0).abs() < 1e-15);
        let other = MeshMeasure::uniform(Mesh::new(-8.0, 8.0, 10).unwrap());
        assert!(matches!(psi_distance(&a, &other, &Psi::Constant), Err(Error::MeshMismatch)));
    }

    #[test]
    fn contraction_fits() {
        let two = Mesh::new(0.0, 2.0, 2).unwrap();
        let k = MeshKernel::from_rows(two, alloc::vec![0.75, 0.25, 0.25, 0.75]).unwrap();
        let p = MeshMeasure::dirac(two, 0.5);
        let q = MeshMeasure::dirac(two, 1.5);
        let fit = contraction_rate_fit(&k, &p, &q, &Psi::Constant, &[1, 2, 3, 4, 5], 1.0).unwrap();
        assert!((fit.kappa - core::f64::consts::LN_2).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let same = contraction_rate_fit(&k, &p, &p, &Psi::Constant, &[1, 2, 3], 1.0).unwrap();
        assert!(same.kappa.is_infinite());
        assert!(contraction_rate_fit(&k, &p, &q, &Psi::Constant, &[1, 2], 1.0).is_err());
        // Eigenvalue 1e-6: the third distance falls below the floor.
        let e = 5e-7;
        let fast = MeshKernel::from_rows(two, alloc::vec![0.5 + e, 0.5 - e, 0.5 - e, 0.5 + e]).unwrap();
        let fit = contraction_rate_fit(&fast, &p, &q, &Psi::Constant, &[1, 2, 3], 1.0).unwrap();
        assert_eq!(fit.truncated, 1);
        assert!((fit.kappa - libm::log(1e6)).abs() < 1e-3, "{fit:?}");
        let r = contraction_rate_fit(&fast, &p, &q, &Psi::Constant, &[1, 3, 4], 1.0);
        assert!(r.is_err());
    }

    #[test]
    fn ou_contraction_rate() {
        let dt = 0.1;
        let tr = transition_params(&TimeFunction::constant(1.0), 0.0, dt).unwrap();
        let mesh = Mesh::new(-6.0, 6.0, 400).unwrap();
        let k = MeshKernel::gaussian(mesh, &tr).unwrap();
        let p = MeshMeasure::dirac(mesh, 0.0);
        let q = MeshMeasure::dirac(mesh, 1.0);
        let hs: Vec<usize> = (2..=10).map(|i| i * 5).collect();
        let fit = contraction_rate_fit(&k, &p, &q, &Psi::Constant, &hs, dt).unwrap();
        assert!((0.8..=1.2).contains(&fit.kappa), "{fit:?}");
    }
}
