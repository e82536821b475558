use thiserror::Error;

/// Failures raised by the map algebra, order tests and simulations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("map is not completely positive (minimum Choi eigenvalue {min_eig:e})")]
    NotCp { min_eig: f64 },

    #[error("Kraus operators are linearly dependent (smallest singular value {0:e})")]
    DependentKraus(f64),

    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),

    #[error("I + t*map is singular at t = {t}")]
    SingularResolvent { t: f64 },

    #[error("map is singular (condition number {0:e})")]
    Singular(f64),

    #[error("t*map(I + t*map)^-1 diverges as t grows (norm ratio {ratio:.3})")]
    Diverges { ratio: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("map is not self-adjoint (defect {0:e})")]
    NotSelfAdjoint(f64),

    #[error("map is not unital (defect {0:e})")]
    NotUnital(f64),

    #[error("map does not have numerical rank one (rank {0})")]
    NotRankOne(usize),

    #[error("map is not q-positive: {0}")]
    NotQPositive(String),

    #[error("map is not conditionally negative")]
    NotConditionallyNegative,

    #[error("residual map is not completely positive (minimum Choi eigenvalue {min_eig:e})")]
    ResidualNotCp { min_eig: f64 },

    #[error("canonical form reconstruction error {0:e}")]
    ReconstructionFailed(f64),

    #[error("quadrature disagrees with direct inverse by {0:e}")]
    QuadratureMismatch(f64),

    #[error("eigenvalue parameters must sum to zero (sum {0:e})")]
    LambdaSumNonzero(f64),

    #[error("contraction norm {0} exceeds 1")]
    ContractionViolated(f64),

    #[error("corner is not a q-corner (first failure at t = {t})")]
    NotQCorner { t: f64 },

    #[error("diagonal maps are not q-pure: {0}")]
    DiagonalsNotQPure(String),

    #[error("matrix is not a density matrix: {0}")]
    NotDensity(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("operand support violates the shift constraint: {0}")]
    SupportViolation(String),

    #[error("contraction bound violated at t = {t}: {value}")]
    BoundViolated { t: f64, value: f64 },

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
