use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid integration interval [{lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },

    #[error("quadrature did not converge on [{lower}, {upper}]: best value {value}, error estimate {error}")]
    QuadratureNonconvergence {
        lower: f64,
        upper: f64,
        value: f64,
        error: f64,
    },

    #[error("decay exponent {0} must exceed 1 for a finite tail bound")]
    SlowDecay(f64),

    #[error("sigmoid `{name}` is not non-decreasing: σ({x0}) = {y0} > σ({x1}) = {y1}")]
    NotMonotone {
        name: String,
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },

    #[error("`{name}` is not a sigmoidal function: {reason}")]
    NotSigmoidal { name: String, reason: String },

    #[error("kernel `{name}` is inadmissible: φ_σ(2) = {value_at_two} is not positive")]
    InadmissibleKernel { name: String, value_at_two: f64 },

    #[error("kernel `{0}` violates the structural assumptions; pass an explicit override to use it")]
    AssumptionsViolated(String),

    #[error("moment of order {beta} exceeds the decay exponent {alpha}; the supremum may be unbounded")]
    UnboundedMoment { beta: f64, alpha: f64 },

    #[error("operator undefined: empty index set for n = {n} on [{a}, {b}]")]
    EmptyIndexSet { n: u32, a: f64, b: f64 },

    #[error("point {x} lies outside [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },

    #[error("degenerate denominator {value:e} at x = {x}")]
    DegenerateDenominator { x: f64, value: f64 },

    #[error("Kantorovich mean on cell k = {k} failed: {source}")]
    CellQuadrature {
        k: i64,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
