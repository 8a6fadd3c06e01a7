use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inadmissible exponents n = {n}, p = {p}: need p >= 1 and, for n >= 3, p < 2n/(n-2) = {critical}")]
    Inadmissible { n: usize, p: f64, critical: f64 },

    #[error("exponent p = {p} is outside the range 1 <= p <= 2 of the inequality (enable supercritical mode to override)")]
    Supercritical { p: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no zero found for the radial ODE before r = {max_radius} (n = {n}, p = {p})")]
    NoZeroFound { n: usize, p: f64, max_radius: f64 },

    #[error("ODE integrator failed at r = {r}: step size underflow")]
    StepUnderflow { r: f64 },

    #[error("domain unresolved at this h: {0}")]
    DomainUnresolved(String),

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e}; last residuals {tail:?})")]
    CgNotConverged { iterations: usize, residual: f64, tail: Vec<f64> },

    #[error("fixed-point iteration did not converge in {iterations} iterations; cp trajectory tail {tail:?}")]
    NotConverged { iterations: usize, tail: Vec<f64> },

    #[error("trivial function: zero L^p norm")]
    TrivialFunction,

    #[error("Faber-Krahn violated: comparison ball volume {ball_volume} exceeds domain volume {domain_volume}")]
    FaberKrahnViolated { ball_volume: f64, domain_volume: f64 },

    #[error("profile is not non-increasing at sample {index}")]
    NotDecreasing { index: usize },

    #[error("crossing analysis failed: {reason} ({crossings} sign changes)")]
    Crossing {
        reason: String,
        crossings: usize,
        /// `(s, phi_star(s) - u_star(s))` samples after band suppression.
        difference: Vec<(f64, f64)>,
    },

    #[error("normalization mismatch: ||u||_p^p = {domain}, ||phi||_p^p = {ball}")]
    NormalizationMismatch { domain: f64, ball: f64 },

    #[error("HLP precondition failed: cumulative q1-integral of f exceeds that of g at s = {s}")]
    HlpPrecondition { s: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
