use serde::{Deserialize, Serialize};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("characteristic {0} is even; an odd prime is required")]
    EvenCharacteristic(u64),
    #[error("modulus {0} is too small (need q >= 3)")]
    ModulusTooSmall(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("element {value} is out of range for q = {q}")]
    ElementOutOfRange { value: u64, q: u32 },
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("grid shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("grid q^d = {q}^{d} exceeds the 2^21 point cap")]
    GridTooLarge { q: u32, d: usize },
    #[error("grid contains a non-finite value")]
    NonFinite,
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("j must be a nonzero field element")]
    ZeroJ,
    #[error("variety is empty")]
    EmptyVariety,
    #[error("k = {k} is outside 0..={d}")]
    BadK { k: usize, d: usize },
    #[error("unknown extremizer kind: {0}")]
    BadKind(String),
    #[error("input function is identically zero")]
    ZeroFunction,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    BoundViolation(Box<BoundViolation>),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// A numerical bound that failed to hold for a concrete instance.
///
/// Sweeps collect these instead of aborting; a violation is either a bug or a
/// genuine counterexample and is always reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{check} violated at q={q}, d={d}, j={j:?}: value {value} > bound {bound}")]
pub struct BoundViolation {
    pub check: String,
    pub q: u32,
    pub d: usize,
    pub j: Option<u32>,
    pub value: f64,
    pub bound: f64,
}

impl From<BoundViolation> for Error {
    fn from(v: BoundViolation) -> Self {
        Error::BoundViolation(Box::new(v))
    }
}
