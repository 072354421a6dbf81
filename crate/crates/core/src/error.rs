use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Text of a time function could not be parsed.
    Parse { pos: usize, msg: String },
    /// Derivative requested through a node that has no closed form.
    UnsupportedDerivative { node: &'static str, order: u8 },
    /// Adaptive quadrature ran out of subdivisions.
    Quadrature { a: f64, b: f64, estimate: f64 },
    /// A caller-side precondition does not hold.
    InvalidInput(String),
    /// A time grid is malformed.
    Grid(String),
    /// A one-step sampler failed inside an ensemble run.
    Stepper { replica: u64, step: usize, msg: String },
    /// Iterative solver did not converge.
    NoConvergence { iterations: usize, residual: f64 },
    /// The periodic skeleton map is not a contraction.
    NotContracting { factor: f64 },
    /// Two measures live on different meshes.
    MeshMismatch,
    /// Path and clock arrays disagree.
    ClockMismatch { path: usize, clock: usize },
    /// Every particle was absorbed during a single step.
    Extinction { time: f64, dt: f64 },
    /// Too many empty histogram cells to estimate a minorization.
    SparseHistogram { empty: usize, cells: usize, suggested_cells: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { pos, msg } => write!(f, "parse error at byte {pos}: {msg}"),
            Error::UnsupportedDerivative { node, order } => {
                write!(f, "derivative of order {order} not supported through `{node}`")
            }
            Error::Quadrature { a, b, estimate } => {
                write!(f, "quadrature did not converge on [{a}, {b}] (last error estimate {estimate:e})")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Grid(msg) => write!(f, "invalid time grid: {msg}"),
            Error::Stepper { replica, step, msg } => {
                write!(f, "stepper failed at replica {replica}, step {step}: {msg}")
            }
            Error::NoConvergence { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            Error::NotContracting { factor } => {
                write!(f, "skeleton not contracting (factor {factor})")
            }
            Error::MeshMismatch => f.write_str("measures are defined on different meshes"),
            Error::ClockMismatch { path, clock } => {
                write!(f, "clock mismatch: path has {path} samples but clock has {clock}")
            }
            Error::Extinction { time, dt } => {
                write!(f, "all particles absorbed in one step at t={time}; reduce dt (currently {dt})")
            }
            Error::SparseHistogram { empty, cells, suggested_cells } => write!(
                f,
                "{empty} of {cells} cells are empty; coarsen the mesh to about {suggested_cells} cells or add paths"
            ),
        }
    }
}

impl core::error::Error for Error {}
