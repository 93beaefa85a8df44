use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("profile has a pole inside the interval at phi = {0}")]
    PoleInInterval(f64),
    #[error("profile is not positive at interior point phi = {0}")]
    NonPositive(f64),
    #[error("F(t) has a pole at t = 1")]
    PoleAtOne,
    #[error("no root of Q found before the search-box edge {0}")]
    NoRoot(f64),
    #[error("Q(seed) is not positive (seed = {0})")]
    SeedNonPositive(f64),
    #[error("operation requires the {0} family")]
    WrongFamily(&'static str),
    #[error("inconsistent classification input: {0}")]
    Inconsistent(String),
    #[error("soliton range contains c = {0}")]
    RangeContainsC(f64),
    #[error("soliton solution hits Q = 0 at phi = {0}")]
    SolutionNonPositive(f64),
    #[error("Q is not positive at phi = {0}")]
    NonPositiveQ(f64),
    #[error("anchor phi = {0} is outside the open profile interval")]
    AnchorOutOfRange(f64),
    #[error("endpoint slope {0:e} is too small")]
    SingularEndpoint(f64),
    #[error("endpoint mismatch: {0}")]
    WrongEndpoint(String),
    #[error("finite-difference stencil leaves the chart domain near {0:?}")]
    StencilOutOfDomain(Vec<f64>),
    #[error("metric is singular at {0:?}")]
    SingularMetric(Vec<f64>),
    #[error("geodesic left the chart domain at s = {0}")]
    LeftDomain(f64),
    #[error("model specification violates an invariant: {0}")]
    SpecInvariantViolated(String),
    #[error("radius {0} is outside the reparametrization table")]
    TableRangeExceeded(f64),
    #[error("gradient of phi vanishes at {0:?}")]
    CriticalPoint(Vec<f64>),
    #[error("identity requires c, but the chart has epsilon = 0")]
    MissingC,
    #[error("phi is too close to zero at {0:?}")]
    PhiNearZero(Vec<f64>),
    #[error("chart metadata is missing {0}")]
    MissingMeta(&'static str),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("ODE integration failed: {0}")]
    Ode(String),
}
