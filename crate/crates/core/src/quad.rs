//! Adaptive Simpson quadrature and cumulative integrals on a time grid.

use alloc::vec::Vec;

use crate::timefn::{TimeFunction, TimeGrid};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_DEPTH: u32 = 50;
const MIN_DEPTH: u32 = 4;
const MAX_EVALS: usize = 20_000_000;

/// `∫_a^b f` by adaptive Simpson with Richardson correction.
pub fn integrate(f: &TimeFunction, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_fn(|t| f.eval(t), a, b, tol)
}

pub fn integrate_fn<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidInput(alloc::format!("integration bounds a={a} > b={b}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(alloc::format!("tolerance must be positive, got {tol}")));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3;
    let v = simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 0, &mut evals)?;
    if !v.is_finite() {
        return Err(Error::Quadrature { a, b, estimate: f64::NAN });
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH || *evals > MAX_EVALS || !delta.is_finite() {
        return Err(Error::Quadrature { a, b, estimate: delta.abs() / 15.0 });
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, evals)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, evals)?;
    Ok(l + r)
}

/// `F(t_k) = ∫_a^{t_k} f` on every grid point; the grid must start at `a`.
///
/// Each step is the classical RK4 update for `F' = f(t)`, which reduces to
/// Simpson's rule on the step (fourth order).
pub fn cumulative_integral(f: &TimeFunction, a: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    cumulative_integral_fn(|t| f.eval(t), a, grid)
}

pub fn cumulative_integral_fn<F: Fn(f64) -> f64>(f: F, a: f64, grid: &TimeGrid) -> Result<Vec<f64>> {
    if grid.t0() != a {
        return Err(Error::Grid(alloc::format!("grid starts at {} but integral starts at {a}", grid.t0())));
    }
    let dt = grid.dt();
    let mut out = Vec::with_capacity(grid.n_points());
    let mut acc = 0.0;
    out.push(acc);
    let mut f_left = f(a);
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let t1 = grid.time(k + 1);
        let f_mid = f(0.5 * (t + t1));
        let f_right = f(t1);
        acc += dt / 6.0 * (f_left + 4.0 * f_mid + f_right);
        if !acc.is_finite() {
            return Err(Error::InvalidInput(alloc::format!("integrand not finite near t={t}")));
        }
        out.push(acc);
        f_left = f_right;
    }
    Ok(out)
}
