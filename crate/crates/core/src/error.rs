use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Spec(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("λ = {0} lies on the support of the measure")]
    OnSupport(f64),
    #[error("boundary-limit hypotheses fail: {0}")]
    HypothesesFail(String),
    #[error("vector not in the domain of T*: {0}")]
    NotInDomain(String),
    #[error("divergent moment: {0}")]
    DivergentMoment(String),
    #[error("Γ₀ is not well posed for a measure of finite total mass")]
    NotWellPosed,
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("square-root branch ambiguity: {0}")]
    BranchAmbiguity(String),
    #[error("t = {0} is not interior to a band")]
    OutsideBand(f64),
    #[error("Weyl disk radius {radius:e} exceeds tolerance {tol:e} at X = {x}")]
    DiskTooLarge { radius: f64, tol: f64, x: f64 },
    #[error("region touches the essential spectrum near {0}")]
    RegionTouchesEssential(f64),
    #[error("ratio has no positive limit")]
    NoLimit,
    #[error("λ = {0} coincides with ξ of an open gap")]
    AtXi(f64),
    #[error("summability of the gap sequence is not certified: {0}")]
    SummabilityUncertified(String),
    #[error("inner integral diverges")]
    InnerDivergent,
    #[error("sigma(A)=C")]
    Degenerate,
}
