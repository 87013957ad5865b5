use thiserror::Error;

use crate::network::FirmId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("firm identifiers must be non-empty")]
    EmptyFirmId,
    #[error("firm `{0}` declared twice")]
    DuplicateFirm(FirmId),
    #[error("negative amount {amount} for {context}")]
    NegativeAmount { context: String, amount: f64 },
    #[error("non-finite amount for {0}")]
    NonFiniteAmount(String),
    #[error("firm `{0}` lends to itself")]
    SelfLoan(FirmId),
    #[error("unknown firm `{0}`")]
    UnknownFirm(String),
    #[error("firm `{0}` has zero total debt")]
    ZeroDebtFirm(FirmId),
    #[error("no firm has a defined DebtStreamness")]
    EmptyNetwork,
    #[error("firm `{0}` has no creditor path to bank funding; prune the network first")]
    NotPruned(FirmId),
    #[error("linear system is singular or ill-posed (relative residual {residual:e})")]
    SingularSystem { residual: f64 },
    #[error("path series did not converge after {terms} terms (last term norm {term_norm:e})")]
    NoConvergence { terms: usize, term_norm: f64 },
    #[error("no firm carries sector data to aggregate")]
    EmptyAggregate,
    #[error("network has no reported inter-firm credit totals")]
    MissingTotals,
    #[error("firm `{0}` has residual credit but no empty creditor slot")]
    NoZeroSlots(FirmId),
    #[error("observed and reconstructed networks share no defined firm")]
    EmptyIntersection,
    #[error("no credit from `{lender}` to `{borrower}`")]
    NoSuchEdge { borrower: FirmId, lender: FirmId },
    #[error("degenerate scope: {0}")]
    DegenerateScope(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("sample {index} is not strictly positive ({value})")]
    NonPositiveSample { index: usize, value: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by content that parsed but violates the data model.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::EmptyFirmId
                | Error::DuplicateFirm(_)
                | Error::NegativeAmount { .. }
                | Error::NonFiniteAmount(_)
                | Error::SelfLoan(_)
                | Error::UnknownFirm(_)
        )
    }
}
