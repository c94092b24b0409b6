use thiserror::Error;

/// Crate-wide error type. Variants are named after the precondition they
/// report; operations that can legitimately answer "no" return a verdict
/// instead of an error.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("scalar is not real: {0}")]
    NonRealScalar(String),
    #[error("element is not invertible: {0}")]
    NotInvertible(String),
    #[error("mixed truncation orders: {0} vs {1}")]
    MixedTruncationOrders(String, String),
    #[error("input must be positive: {0}")]
    NonPositiveInput(String),
    #[error("truncation order must be at least 1")]
    InvalidOrder,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("series rank instability: classical rank differs from series rank ({0})")]
    SeriesRankInstability(String),
    #[error("algebra axiom violated: {0}")]
    InvalidAlgebra(String),
    #[error("unit law violated: {0}")]
    UnitNotPreserved(String),
    #[error("involution axiom violated: {0}")]
    InvalidInvolution(String),
    #[error("representation is not a faithful *-homomorphism: {0}")]
    InvalidRepresentation(String),
    #[error("family does not span the algebra: {0}")]
    NotSpanning(String),
    #[error("element does not lie in the module: {0}")]
    ElementNotInModule(String),
    #[error("generators do not generate the module: {0}")]
    NotGenerating(String),
    #[error("inner product axiom violated: {0}")]
    InvalidInnerProduct(String),
    #[error("module is degenerate: {0}")]
    DegenerateModule(String),
    #[error("first inner product is not strongly non-degenerate: {0}")]
    NotStronglyNondegenerate(String),
    #[error("action is incompatible with the inner product: {0}")]
    IncompatibleAction(String),
    #[error("operator is not adjointable: {0}")]
    NotAdjointable(String),
    #[error("map is not an automorphism: {0}")]
    NotAutomorphism(String),
    #[error("presentations are incompatible: {0}")]
    IncompatiblePresentations(String),
    #[error("1 + a*a is not invertible here, so the construction is unavailable: {0}")]
    PropertyIUnavailable(String),
    #[error("element is not positive: {0}")]
    NotPositive(String),
    #[error("element is not hermitian: {0}")]
    NotHermitian(String),
    #[error("supplied witness is invalid: {0}")]
    WitnessInvalid(String),
    #[error("residual at order {0} is not hermitian")]
    NonHermitianResidual(usize),
    #[error("classical part is not invertible: {0}")]
    ClassicalNotInvertible(String),
    #[error("classical part is not a *-map: {0}")]
    ClassicalNotStar(String),
    #[error("deformation axiom violated at order {order}: {detail}")]
    InvalidDeformation { order: usize, detail: String },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
