//! Error type shared across the engine.

use thiserror::Error;

/// Everything that can go wrong in the engine.
///
/// Arithmetic preconditions fail loudly; nothing silently truncates or
/// coerces between coefficient rings.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient rings differ: {left} vs {right}")]
    RingMismatch { left: String, right: String },

    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(u64),

    #[error("leading coefficient {lead} is not a unit in {ring}")]
    NonUnitLeading { lead: String, ring: String },

    #[error("division by a series that is zero to its precision")]
    DivisionByZero,

    #[error("operation would produce negative valuation {0} (in 1/24 units)")]
    NegativeValuation(i64),

    #[error("coefficient at exponent {exp}/24 requested, but series is only known below {end}/24")]
    CoefficientOutOfWindow { exp: i64, end: i64 },

    #[error("series has a nonzero coefficient at non-integer exponent {exp}/24")]
    NonIntegralSupport { exp: i64 },

    #[error("insufficient precision: need window through {needed}/24, have {have}/24")]
    InsufficientPrecision { needed: i64, have: i64 },

    #[error("requested window is empty after valuation shift")]
    EmptyWindow,

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("congruence fails at index {n}: got residue {residue}")]
    CongruenceCounterexample { n: u64, residue: u64 },

    #[error("progression offset is not an integer: {0}")]
    NonIntegralOffset(String),

    #[error("primes used to assemble L are not pairwise distinct or collide with the modulus")]
    DuplicatePrimes,

    #[error("requested depth {requested} exceeds the configured ceiling {ceiling}")]
    DepthInfeasible { requested: u64, ceiling: u64 },

    #[error("certificate is malformed: {0}")]
    MalformedCertificate(String),

    #[error("unsupported certificate schema version {0}")]
    SchemaVersion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand used by binary operations on mismatched rings.
    pub(crate) fn ring_mismatch(left: impl ToString, right: impl ToString) -> Self {
        Error::RingMismatch {
            left: left.to_string(),
            right: right.to_string(),
        }
    }
}
