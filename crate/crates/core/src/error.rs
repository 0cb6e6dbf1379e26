use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("galois closure would exceed degree {limit} (reached {degree})")]
    ClosureTooLarge { degree: usize, limit: usize },
    #[error("ideals belong to different orders")]
    OrderMismatch,
    #[error("zero ideal")]
    ZeroIdeal,
    #[error("zero element")]
    ZeroElement,
    #[error("prime {0} divides the order index")]
    IndexDivisible(String),
    #[error("enumeration bound {bound} exceeds the budget {budget}")]
    EnumerationBoundExceeded { bound: String, budget: String },
    #[error("unit group data unavailable for this field")]
    UnitsUnavailable,
    #[error("modulus norm {0} exceeds the supported size")]
    ModulusTooLarge(String),
    #[error("field does not contain all conjugates of the CM field")]
    ConjugatesMissing,
    #[error("ideal is not an exact {0}-th power")]
    RootNotExact(usize),
    #[error("search exhausted at bound {0}")]
    SearchExhausted(u64),
    #[error("unit search inconclusive")]
    UnitSearchInconclusive,
    #[error("ideal is not integral")]
    NonIntegralIdeal,
    #[error("morphisms do not compose")]
    CompositionMismatch,
    #[error("lattice models have different CM types")]
    PairMismatch,
    #[error("morphisms have different sources")]
    SourceMismatch,
    #[error("prime {0} exceeds the point-count budget")]
    BudgetExceeded(u64),
    #[error("supersingular reduction at {0}")]
    Supersingular(u64),
    #[error("bad reduction at {0}")]
    BadReduction(u64),
    #[error("frobenius identification failed at {0}")]
    IdentificationFailed(u64),
    #[error("prime {0} ramifies")]
    RamifiedPrime(String),
    #[error("ideal is not coprime to the modulus")]
    NotCoprime,
    #[error("identity violated: {0}")]
    IdentityViolated(String),
    #[error("field is not CM")]
    NotCM,
}

pub type Result<T> = std::result::Result<T, Error>;
