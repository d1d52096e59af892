use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("shape bounding box {lo:?}..{hi:?} exceeds the lattice box")]
    ShapeOutsideLattice { lo: [f64; 2], hi: [f64; 2] },
    #[error("polarizer is not compatible with the lattice: {0}")]
    IncompatiblePolarizer(String),
    #[error("reflected node escapes the lattice box")]
    ReflectionEscapesBox,
    #[error("masks live on different lattices")]
    LatticeMismatch,
    #[error("lattice too small: {0}")]
    LatticeTooSmall(String),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RearrangeError {
    #[error("lattice box is not symmetric under the polarizer reflection")]
    BoxNotSymmetric,
    #[error("grid function has a nonzero value outside its support mask at node {0}")]
    ValueOutsideSupport(usize),
    #[error("grid function has a negative value at node {0}")]
    NegativeValue(usize),
    #[error("grid function has {got} values, lattice has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("invalid operator parameters: {0}")]
    InvalidParams(String),
    #[error("support touches the lattice box boundary at node {0}")]
    SupportTouchesBoundary(usize),
    #[error("function is identically zero")]
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigsolveError {
    #[error("domain mask is empty")]
    EmptyMask,
    #[error("the p = 2 solver requires p = 2, got p = {0}")]
    NotQuadratic(f64),
    #[error("dense factorization failed")]
    Factorization,
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Umbrella error for callers that mix modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Rearrange(#[from] RearrangeError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Eigsolve(#[from] EigsolveError),
}
