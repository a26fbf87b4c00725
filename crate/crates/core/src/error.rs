use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("malformed allocation: {0}")]
    MalformedAllocation(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("oracle infeasible: {what} needs {needed} steps, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: f64,
        budget: u64,
    },
    #[error("malformed cycle: {0}")]
    MalformedCycle(String),
    #[error("shrinking parameter {0} outside the admissible interval")]
    TauOutOfRange(String),
    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),
    #[error("tight graph is not a forest")]
    NotAForest,
    #[error("perturbation not certified after {attempts} attempts (seed {seed}): {witness}")]
    PerturbationFailed {
        seed: u64,
        attempts: u32,
        witness: String,
    },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("certification failed: {0}")]
    CertificationFailed(String),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
