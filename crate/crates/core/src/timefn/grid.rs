use alloc::format;

use crate::{Error, Result};

/// Uniform time grid `t0, t0 + dt, …, t0 + n_steps·dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::Grid(format!("t0 must be finite, got {t0}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Grid(format!("dt must be positive and finite, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::Grid("n_steps must be at least 1".into()));
        }
        Ok(TimeGrid { t0, dt, n_steps })
    }

    /// Smallest grid with step `dt` reaching `t_end` (the last step may overshoot
    /// by less than one part in 10⁹ of a step).
    pub fn covering(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end > t0) {
            return Err(Error::Grid(format!("t_end {t_end} must exceed t0 {t0}")));
        }
        let n = libm::ceil((t_end - t0) / dt - 1e-9);
        Self::new(t0, dt, n.max(1.0) as usize)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |k| self.time(k))
    }
}
