//! Small reference networks used by tests, examples and the CLI.

use indexmap::IndexMap;

use crate::io::parse_network;
use crate::network::{build_network, CreditNetwork, FirmId, Loan};

pub const OUTLIER_TOY_LOANS: &str = include_str!("../fixtures/outlier_toy/loans.csv");
pub const OUTLIER_TOY_FIRMS: &str = include_str!("../fixtures/outlier_toy/firms.csv");
pub const CHAIN_LOANS: &str = include_str!("../fixtures/chain/loans.csv");
pub const CHAIN_FIRMS: &str = include_str!("../fixtures/chain/firms.csv");
pub const TWO_CYCLE_LOANS: &str = include_str!("../fixtures/two_cycle/loans.csv");
pub const TWO_CYCLE_FIRMS: &str = include_str!("../fixtures/two_cycle/firms.csv");

/// Builds a network from `(borrower, lender, amount)` and `(firm, bank)`
/// literals. Panics on invalid input.
pub fn network(loans: &[(&str, &str, f64)], bank: &[(&str, f64)]) -> CreditNetwork {
    let loans: Vec<Loan> = loans
        .iter()
        .map(|&(b, l, amount)| Loan {
            borrower: FirmId::from(b),
            lender: FirmId::from(l),
            amount,
        })
        .collect();
    let bank: IndexMap<FirmId, f64> = bank.iter().map(|&(f, b)| (FirmId::from(f), b)).collect();
    build_network(&loans, &bank, None, None).expect("invalid fixture")
}

/// `firm1` is all-bank, `firm2` borrows everything from `firm1`, `firm3`
/// everything from `firm2`. DebtStreamness is (1, 2, 3).
pub fn chain() -> CreditNetwork {
    parse_network(CHAIN_LOANS, CHAIN_FIRMS).expect("chain fixture")
}

/// Two firms with total debt 100 each; the first owes a share `alpha` of its
/// debt to the second, the second a share `beta` to the first, the rest to
/// banks. DebtStreamness of the first firm is `(1 + alpha) / (1 - alpha beta)`.
pub fn two_cycle(alpha: f64, beta: f64) -> CreditNetwork {
    let la = 100.0 * alpha;
    let lb = 100.0 * beta;
    network(
        &[("firm2", "firm3", la), ("firm3", "firm2", lb)],
        &[("firm2", 100.0 - la), ("firm3", 100.0 - lb)],
    )
}

/// A component with two bank-less firms lending to each other, a borrower
/// downstream of them and a bank-funded periphery.
pub fn outlier_toy() -> CreditNetwork {
    parse_network(OUTLIER_TOY_LOANS, OUTLIER_TOY_FIRMS).expect("outlier toy fixture")
}
