use thiserror::Error;

use crate::pde::EllipticOutcome;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate induced metric at node ({i}, {j}): EG - F^2 = {det:e}")]
    DegenerateMetric { i: usize, j: usize, det: f64 },

    #[error("patch is not in the timelike gauge at node ({i}, {j}): E = {e:e}, G = {g:e}")]
    NotTimelikeGauge { i: usize, j: usize, e: f64, g: f64 },

    #[error("normal frame is not orthonormal and normal to the surface (defect {defect:e})")]
    FrameNotNormal { defect: f64 },

    #[error("flat point: {0}")]
    FlatPoint(String),

    #[error("surface is not zero-mean-curvature at node ({i}, {j}): |sigma(x,x) - sigma(y,y)| = {gap:e}")]
    NotZmc { i: usize, j: usize, gap: f64 },

    #[error("parameters are not semi-canonical: {0}")]
    NotSemiCanonical(String),

    #[error("meridian reached a turning point (A - alpha^2 f^2 = {margin:e}) at u = {u}")]
    TurningPoint { u: f64, margin: f64 },

    #[error("grid {n_u}x{n_v} is too small (need at least {min} nodes per axis)")]
    GridTooSmall { n_u: usize, n_v: usize, min: usize },

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("non-finite value at node ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("modulus vanishes at node ({i}, {j})")]
    ZeroModulus { i: usize, j: usize },

    #[error("CFL condition violated: h_u = {h_u:e} > h_v = {h_v:e}")]
    CflViolation { h_u: f64, h_v: f64 },

    #[error("solution blew up at u-level {level}: max |X| = {max_abs:e} exceeds {bound:e}")]
    Blowup { level: usize, max_abs: f64, bound: f64 },

    #[error("relaxation did not converge: residual {:e} after {} sweeps", .0.report.final_residual, .0.report.iterations)]
    NoConvergence(Box<EllipticOutcome>),

    #[error("frame drift {defect:e} exceeds budget {budget:e} at node ({i}, {j})")]
    DriftExceeded { i: usize, j: usize, defect: f64, budget: f64 },

    #[error("operation not supported for {0}")]
    UnsupportedKind(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: line {line}: {msg}")]
    FileFormat { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line driver: 2 for input and
    /// validation problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParams(_)
            | Error::Config(_)
            | Error::FileFormat { .. }
            | Error::GridMismatch(_)
            | Error::GridTooSmall { .. }
            | Error::Io(_)
            | Error::UnsupportedKind(_) => 2,
            _ => 3,
        }
    }
}
