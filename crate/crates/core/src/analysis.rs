//! What-if edge removal, loop detection and the bank-share correlation.

use std::collections::HashMap;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{components, CreditNetwork, FirmId};
use crate::stats::{self, HistogramBin};
use crate::streamness::{compute_streamness, StreamnessResult};

/// What happens to the removed credit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalMode {
    /// The debt disappears and the borrower's total debt shrinks.
    #[default]
    Drop,
    /// The borrower owes the same amount to banks instead.
    ReassignToBank,
}

pub fn remove_edge(net: &CreditNetwork, borrower: &str, lender: &str) -> Result<CreditNetwork> {
    remove_edge_with(net, borrower, lender, RemovalMode::Drop)
}

pub fn remove_edge_with(
    net: &CreditNetwork,
    borrower: &str,
    lender: &str,
    mode: RemovalMode,
) -> Result<CreditNetwork> {
    let b = net.require(borrower)?;
    let l = net.require(lender)?;
    let amount = net.credit().get(b, l);
    if amount <= 0.0 {
        return Err(Error::NoSuchEdge {
            borrower: net.firms()[b].clone(),
            lender: net.firms()[l].clone(),
        });
    }
    let credit = net.credit().map(|i, j, v| if i == b && j == l { 0.0 } else { v });
    // map keeps the pattern; rebuild to drop the explicit zero
    let credit = crate::sparse::CsrMatrix::from_triplets(net.len(), credit.triplets().collect());
    let out = net.with_credit(credit)?;
    match mode {
        RemovalMode::Drop => Ok(out),
        RemovalMode::ReassignToBank => {
            let mut bank = out.bank().to_vec();
            bank[b] += amount;
            out.with_bank(bank)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeRemovalReport {
    pub removed_edge: (FirmId, FirmId),
    pub mode: RemovalMode,
    pub ds_before: StreamnessResult,
    pub ds_after: StreamnessResult,
    /// Members of the borrower's component (before removal) defined in both results.
    pub affected_firms: Vec<FirmId>,
    pub mean_before: f64,
    pub mean_after: f64,
    pub newly_undefined: Vec<FirmId>,
}

impl EdgeRemovalReport {
    /// `mean_before / mean_after`.
    pub fn reduction_factor(&self) -> f64 {
        self.mean_before / self.mean_after
    }
}

pub fn what_if_remove(
    net: &CreditNetwork,
    borrower: &str,
    lender: &str,
    mode: RemovalMode,
) -> Result<EdgeRemovalReport> {
    let cut = remove_edge_with(net, borrower, lender, mode)?;
    let ds_before = compute_streamness(net)?;
    let ds_after = compute_streamness(&cut)?;
    let b = net.require(borrower)?;
    let l = net.require(lender)?;
    let comp = components(net)
        .into_iter()
        .find(|c| c.members.contains(&b))
        .expect("borrower belongs to a component");

    let before: HashMap<&FirmId, f64> = ds_before.iter().collect();
    let after: HashMap<&FirmId, f64> = ds_after.iter().collect();
    let mut affected_firms = Vec::new();
    let (mut sum_b, mut sum_a) = (0.0, 0.0);
    for &i in &comp.members {
        let f = &net.firms()[i];
        if let (Some(x), Some(y)) = (before.get(f), after.get(f)) {
            affected_firms.push(f.clone());
            sum_b += x;
            sum_a += y;
        }
    }
    let k = affected_firms.len() as f64;
    let newly_undefined = ds_before
        .firms
        .iter()
        .filter(|f| !after.contains_key(f))
        .cloned()
        .collect();
    Ok(EdgeRemovalReport {
        removed_edge: (net.firms()[b].clone(), net.firms()[l].clone()),
        mode,
        ds_before,
        ds_after,
        affected_firms,
        mean_before: sum_b / k,
        mean_after: sum_a / k,
        newly_undefined,
    })
}

/// Effect of removing a single credit link, as produced by [`scan_edge_removals`].
#[derive(Debug, Clone, Serialize)]
pub struct EdgeImpact {
    pub borrower: FirmId,
    pub lender: FirmId,
    pub mean_before: f64,
    pub mean_after: f64,
    pub newly_undefined: usize,
}

/// Runs [`what_if_remove`] for every credit link, in row-major order.
pub fn scan_edge_removals(net: &CreditNetwork, mode: RemovalMode) -> Result<Vec<EdgeImpact>> {
    let loans: Vec<_> = net.loans().collect();
    loans
        .par_iter()
        .map(|loan| {
            let r = what_if_remove(net, loan.borrower.as_str(), loan.lender.as_str(), mode)?;
            Ok(EdgeImpact {
                borrower: loan.borrower.clone(),
                lender: loan.lender.clone(),
                mean_before: r.mean_before,
                mean_after: r.mean_after,
                newly_undefined: r.newly_undefined.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoopReport {
    /// Strongly connected components with more than one firm, members in
    /// network order, ordered by their first member.
    pub sccs: Vec<Vec<FirmId>>,
    /// Pairs lending to each other, `(earlier, later)` in network order.
    pub two_cycles: Vec<(FirmId, FirmId)>,
}

pub fn detect_loops(net: &CreditNetwork) -> LoopReport {
    let sccs = strongly_connected(net)
        .into_iter()
        .filter(|c| c.len() > 1)
        .map(|c| c.into_iter().map(|i| net.firms()[i].clone()).collect())
        .collect();
    let credit = net.credit();
    let mut two_cycles = Vec::new();
    for (i, j, _) in credit.triplets() {
        if i < j && credit.get(j, i) > 0.0 {
            two_cycles.push((net.firms()[i].clone(), net.firms()[j].clone()));
        }
    }
    LoopReport { sccs, two_cycles }
}

/// Strongly connected components of the credit support, each sorted, and
/// the list sorted by first member.
pub fn strongly_connected(net: &CreditNetwork) -> Vec<Vec<usize>> {
    let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(net.len(), net.credit().nnz());
    for _ in 0..net.len() {
        graph.add_node(());
    }
    for (i, j, _) in net.credit().triplets() {
        graph.add_edge((i as u32).into(), (j as u32).into(), ());
    }
    let mut out: Vec<Vec<usize>> = kosaraju_scc(&graph)
        .into_iter()
        .map(|c| {
            let mut m: Vec<usize> = c.into_iter().map(|v| v.index()).collect();
            m.sort_unstable();
            m
        })
        .collect();
    out.sort_by_key(|c| c[0]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    All,
    /// Component id as reported in [`StreamnessResult::component`].
    Component(usize),
}

/// Pearson correlation between bank share and DebtStreamness over `scope`.
pub fn bankshare_ds_correlation(net: &CreditNetwork, scope: Scope) -> Result<f64> {
    let ds = compute_streamness(net)?;
    bankshare_correlation_of(&ds, scope)
}

pub fn bankshare_correlation_of(ds: &StreamnessResult, scope: Scope) -> Result<f64> {
    let picked: Vec<usize> = (0..ds.len())
        .filter(|&i| match scope {
            Scope::All => true,
            Scope::Component(c) => ds.component[i] == c,
        })
        .collect();
    if picked.len() < 3 {
        return Err(Error::DegenerateScope(format!(
            "{} firms in scope, need at least 3",
            picked.len()
        )));
    }
    let share: Vec<f64> = picked.iter().map(|&i| ds.bank_share[i]).collect();
    let value: Vec<f64> = picked.iter().map(|&i| ds.ds[i]).collect();
    stats::pearson(&share, &value).map_err(|e| Error::DegenerateScope(e.to_string()))
}

/// Histogram of DebtStreamness with left-closed bins starting at 1.
pub fn ds_histogram(ds: &StreamnessResult, bin_width: f64) -> Result<Vec<HistogramBin>> {
    stats::histogram(&ds.ds, 1.0, bin_width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::streamness::solve_streamness;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cutting_the_cycle() {
        let net = fixtures::two_cycle(0.9, 0.9);
        let rep = what_if_remove(&net, "firm2", "firm3", RemovalMode::Drop).unwrap();
        assert_abs_diff_eq!(rep.ds_after.get("firm2").unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.ds_after.get("firm3").unwrap(), 1.9, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.mean_before, 10.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.mean_after, 1.45, epsilon = 1e-12);
        assert!(rep.newly_undefined.is_empty());
    }

    #[test]
    fn chain_break_orphans_the_tail() {
        let net = fixtures::chain();
        let cut = remove_edge(&net, "firm2", "firm1").unwrap();
        assert_eq!(cut.total_debt(), vec![100.0, 0.0, 100.0]);
        let rep = what_if_remove(&net, "firm2", "firm1", RemovalMode::Drop).unwrap();
        assert_eq!(rep.newly_undefined, vec![FirmId::from("firm2"), FirmId::from("firm3")]);
    }

    #[test]
    fn removing_a_bank_parallel_edge_lowers_ds() {
        let net = fixtures::network(&[("m", "root", 50.0)], &[("m", 50.0), ("root", 30.0)]);
        let before = solve_streamness(&net).unwrap().get("m").unwrap();
        let cut = remove_edge(&net, "m", "root").unwrap();
        let after = solve_streamness(&cut).unwrap().get("m").unwrap();
        assert!(after < before);
        assert_eq!(after, 1.0);
    }

    #[test]
    fn reassign_keeps_total_debt() {
        let net = fixtures::two_cycle(0.9, 0.9);
        let cut = remove_edge_with(&net, "firm2", "firm3", RemovalMode::ReassignToBank).unwrap();
        assert_eq!(cut.total_debt(), net.total_debt());
        let r = solve_streamness(&cut).unwrap();
        assert_eq!(r.get("firm2"), Some(1.0));
    }

    #[test]
    fn missing_edge() {
        let net = fixtures::chain();
        assert!(matches!(remove_edge(&net, "firm1", "firm2"), Err(Error::NoSuchEdge { .. })));
        assert!(matches!(remove_edge(&net, "nobody", "firm2"), Err(Error::UnknownFirm(_))));
    }

    #[test]
    fn loop_examples() {
        let rep = detect_loops(&fixtures::chain());
        assert!(rep.sccs.is_empty() && rep.two_cycles.is_empty());

        let rep = detect_loops(&fixtures::two_cycle(0.5, 0.5));
        assert_eq!(rep.two_cycles, vec![(FirmId::from("firm2"), FirmId::from("firm3"))]);
        assert_eq!(rep.sccs.len(), 1);

        let tri = fixtures::network(&[("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)], &[("a", 1.0)]);
        let rep = detect_loops(&tri);
        assert_eq!(rep.sccs, vec![vec![FirmId::from("a"), FirmId::from("b"), FirmId::from("c")]]);
        assert!(rep.two_cycles.is_empty());
    }

    #[test]
    fn correlation_examples() {
        let all_bank = fixtures::network(&[], &[("a", 1.0), ("b", 2.0), ("c", 3.0)]);
        assert!(matches!(
            bankshare_ds_correlation(&all_bank, Scope::All),
            Err(Error::DegenerateScope(_))
        ));
        // shares (1, 0, 1), DS (1, 2, 1)
        let net = fixtures::network(&[("b", "a", 10.0)], &[("a", 5.0), ("c", 5.0)]);
        let r = bankshare_ds_correlation(&net, Scope::All).unwrap();
        assert_abs_diff_eq!(r, -1.0, epsilon = 1e-12);
        assert!(matches!(
            bankshare_ds_correlation(&net, Scope::Component(0)),
            Err(Error::DegenerateScope(_))
        ));
    }

    #[test]
    fn histogram_of_chain() {
        let r = solve_streamness(&fixtures::chain()).unwrap();
        let h = ds_histogram(&r, 1.0).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![1, 1, 1]);
        assert_eq!(h[2].lower, 3.0);
    }

    #[test]
    fn outlier_toy_shape() {
        let net = fixtures::outlier_toy();
        let rep = what_if_remove(&net, "loop_x", "loop_y", RemovalMode::Drop).unwrap();
        assert!(rep.reduction_factor() > 3.0);
        assert!(bankshare_ds_correlation(&net, Scope::Component(0)).unwrap() < -0.9);
    }
}
