use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate ({x}, {y})")]
    NonFinite { x: f64, y: f64 },

    #[error("curve has no samples")]
    EmptyCurve,

    #[error("curve does not close on the torus (winding residue {residue:.3} revolutions)")]
    NotClosed { residue: f64 },

    #[error("winding pair ({k}, {l}) is not coprime")]
    NotCoprime { k: i64, l: i64 },

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("slow flow vanishes on critical curve {curve} (min |g| = {min_abs_g:.3e})")]
    SlowFlowVanishes { curve: usize, min_abs_g: f64 },

    #[error("curve continuation failed: {0}")]
    Continuation(String),

    #[error("quadrature did not converge (estimated error {est_error:.3e})")]
    Quadrature { est_error: f64 },

    #[error("breakpoints are not ordered along the slow flow over one loop")]
    UnorderedBreakpoints,

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("time budget {max_time} exhausted before reaching t = {target}")]
    MaxTimeExceeded { max_time: f64, target: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no limit cycle found near curve {curve}: {reason}")]
    NoCycle { curve: usize, reason: String },

    #[error("flow is tangent to the transverse section near curve {curve}")]
    SectionDegenerate { curve: usize },

    #[error("mismatched curve indices: cycle {cycle} vs sdi {sdi}")]
    IndexMismatch { cycle: usize, sdi: usize },

    #[error("curves {a} and {b} intersect")]
    CurvesIntersect { a: usize, b: usize },

    #[error("model assumptions fail: {0}")]
    AssumptionsFailed(String),

    #[error("inconsistent cycle census: {0}")]
    Census(String),

    #[error("malformed model document: {0}")]
    Document(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
