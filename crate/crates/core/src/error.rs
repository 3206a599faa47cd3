use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("quadrature tail not converged: outermost ring at r = {radius} carries {ratio:.3e} of the accumulated mass")]
    TailNotConverged { radius: f64, ratio: f64 },

    #[error("coefficient series not converged: last term {tail:.3e} vs running sum {sum:.3e}")]
    SeriesNotConverged { tail: f64, sum: f64 },

    #[error("insufficient Taylor data: need {needed} reliable coefficients, have {available}")]
    InsufficientTaylorData { needed: usize, available: usize },

    #[error("{0} is not a point of the punctured lattice Z + iZ \\ {{0}}")]
    NotLatticePoint(String),

    #[error("evaluation point at distance {distance:.3e} from the contour (local node spacing {spacing:.3e})")]
    ContourTooClose { distance: f64, spacing: f64 },

    #[error("ray integrand did not decay below the truncation threshold within length {length}")]
    RayTailNotConverged { length: f64 },

    #[error("Taylor coefficient {index} is below the noise floor at radius {radius}")]
    RadiusTooSmall { index: usize, radius: f64 },

    #[error("point at distance {distance:.3e} from the lattice (minimum {minimum})")]
    NearLatticeZero { distance: f64, minimum: f64 },

    #[error("supplied point is not a zero: relative residual {residual:.3e}")]
    NotAZero { residual: f64 },

    #[error("F vanishes at the division point")]
    ZeroOfF,

    #[error("degree {degree} exceeds what the quadrature resolves (condition estimate {condition:.3e})")]
    DegreeTooHighForQuadrature { degree: usize, condition: f64 },

    #[error("exponential span is ill-conditioned: numerical rank {rank} of {requested}")]
    IllConditionedSpan { rank: usize, requested: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown function '{0}'")]
    UnknownFunction(String),
}

pub type Result<T> = std::result::Result<T, FockError>;
