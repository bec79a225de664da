use thiserror::Error;

/// Errors raised by configuration handling, the income/threshold engines and
/// the flow-graph oracle.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("operation needs exactly 2 racks, config has {0}")]
    NotTwoRack(usize),
    #[error("block index {index} out of range: only racks 0..{limit} may contribute a remaining-node block")]
    Index { index: usize, limit: usize },
    #[error("candidate supplies only {terms} incomes for k = {k}")]
    ShortCandidate { terms: usize, k: usize },
    #[error("income sequence is empty")]
    EmptyIncome,
    #[error("coefficient list is empty")]
    EmptyCoeffList,
    #[error("invalid coefficient list: {0}")]
    InvalidCoeffList(String),
    #[error("beta_e = {beta} lies below the MBR point {mbr}")]
    BelowMbr { beta: String, mbr: String },
    #[error("invalid model parameters: {0}")]
    InvalidModelParams(String),
    #[error("closed form disagrees with the generic engine: {0}")]
    ClosedFormMismatch(String),
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("collector is not reachable from the source")]
    Disconnected,
    #[error("invalid sample spec: {0}")]
    InvalidSampleSpec(String),
    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
