use thiserror::Error;

use crate::scalar::FieldTag;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("field mismatch: expected {expected}, found {found}")]
    FieldMismatch { expected: FieldTag, found: FieldTag },

    #[error("matrix is not nilpotent")]
    NotNilpotent,

    #[error("matrix is not unipotent")]
    NotUnipotent,

    #[error("matrix is singular")]
    Singular,

    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),

    #[error("invalid grading: {0}")]
    InvalidGrading(String),

    #[error(
        "purity fails at p = {p}: dim F^p = {dim_fp}, dim conj(F^q) = {dim_conj}, dim of intersection = {dim_meet}"
    )]
    Purity {
        p: i32,
        dim_fp: usize,
        dim_conj: usize,
        dim_meet: usize,
    },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("not a mixed Hodge structure: {0}")]
    NotMixed(String),

    #[error("bigrading invariant failed: {0}")]
    Bigrading(String),

    #[error("dimension pattern of W ∩ F differs at (w = {w}, p = {p}): {left} vs {right}")]
    DimensionPattern { w: i32, p: i32, left: usize, right: usize },

    #[error("weight filtrations of the cone disagree for coefficients {0}")]
    ConeDisagreement(String),

    #[error("generators do not commute: [N{0}, N{1}] != 0")]
    NonCommuting(usize, usize),

    #[error("relative weight filtration does not exist: {0}")]
    NoRelativeFiltration(String),

    #[error("filtrations do not generate a distributive lattice: {0}")]
    NotDistributive(String),

    #[error("comparison map is not unipotent relative to the grading order: {0}")]
    NotGradingUnipotent(String),

    #[error("zero vector")]
    ZeroVector,

    #[error("degenerate metric")]
    DegenerateMetric,

    #[error("flag type mismatch: {0}")]
    FlagType(String),

    #[error("invalid orbit: {0}")]
    InvalidOrbit(String),

    #[error("series tail bound {bound:e} exceeds {limit:e}")]
    Truncation { bound: f64, limit: f64 },

    #[error("numerical underflow: {0}")]
    Underflow(String),

    #[error("nonpositive rescaling parameter {0}")]
    NonpositiveTau(f64),

    #[error("class is not normalized: {0}")]
    NotCentered(String),

    #[error("form is not positive definite on the (0,0) lattice")]
    NotPositive,

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("grid not in the staircase regime: {0}")]
    Regime(String),

    #[error("invalid sl(2) representation: {0}")]
    InvalidRep(String),

    #[error("parse error: {0}")]
    Parse(String),
}
