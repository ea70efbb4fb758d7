use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter vector has length {got}, model expects {expected}")]
    Arity { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("degenerate discriminant: {0}")]
    DegenerateDiscriminant(String),
    #[error("polynomial root isolation did not converge (degree {degree})")]
    RootFindingFailure { degree: usize },
    #[error("intersection matrix is singular: {0}")]
    BasisDegeneracy(String),
    #[error("quadrature refinement levels disagree by {delta:e} (tolerance {tol:e})")]
    QuadratureDivergence { delta: f64, tol: f64 },
    #[error("ill-conditioned matrix (condition estimate {cond:e})")]
    IllConditioned { cond: f64 },
    #[error("continuation step too large: lattice coordinates off integers by {offset}")]
    MonodromyStep { offset: f64 },
    #[error("integration path passes within {distance:e} of a branch point")]
    PathThroughBranchPoint { distance: f64 },
    #[error("numerical rank ambiguous between {low} and {high}")]
    RankAmbiguous { low: usize, high: usize },
    #[error("Newton iteration diverged after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("Newton Jacobian singular (condition {cond:e})")]
    JacobianSingular { cond: f64 },
    #[error("residue methods disagree: series {series:e}, contour {contour:e}")]
    ResidueDisagreement { series: f64, contour: f64 },
    #[error("odd-degree polynomial has a single point at infinity")]
    OddDegree,
    #[error("polynomial must be monic of even degree")]
    NotEvenDegree,
    #[error("polynomial is not squarefree")]
    NonSquarefree,
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("census violation: {0}")]
    CensusViolation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable code used in job outputs.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Arity { .. } => "Arity",
            Error::InvalidParam(_) => "InvalidParam",
            Error::DegenerateDiscriminant(_) => "DegenerateDiscriminant",
            Error::RootFindingFailure { .. } => "RootFindingFailure",
            Error::BasisDegeneracy(_) => "BasisDegeneracy",
            Error::QuadratureDivergence { .. } => "QuadratureDivergence",
            Error::IllConditioned { .. } => "IllConditioned",
            Error::MonodromyStep { .. } => "MonodromyStep",
            Error::PathThroughBranchPoint { .. } => "PathThroughBranchPoint",
            Error::RankAmbiguous { .. } => "RankAmbiguous",
            Error::NewtonDiverged { .. } => "NewtonDiverged",
            Error::JacobianSingular { .. } => "JacobianSingular",
            Error::ResidueDisagreement { .. } => "ResidueDisagreement",
            Error::OddDegree => "OddDegree",
            Error::NotEvenDegree => "NotEvenDegree",
            Error::NonSquarefree => "NonSquarefree",
            Error::Inconclusive(_) => "Inconclusive",
            Error::CensusViolation(_) => "CensusViolation",
            Error::Unsupported(_) => "Unsupported",
            Error::Parse(_) => "Parse",
        }
    }
}
