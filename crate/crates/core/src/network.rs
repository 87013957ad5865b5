//! Credit-network data model: firms, the borrower-to-lender credit matrix,
//! bank borrowing, component structure and pruning of firms whose
//! DebtStreamness is undefined.
//!
//! Rows of the credit matrix are borrowers and columns are lenders, so
//! `credit().get(i, j)` is the amount firm `i` borrowed from firm `j`. The
//! banking sector is exogenous: it appears only through the bank-borrowing
//! vector, never as a row of the matrix. Total debt is always derived as
//! bank borrowing plus the row sum, so the accounting identity holds by
//! construction for every network this module hands out.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use indexmap::IndexMap;
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FirmId(String);

impl FirmId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::EmptyFirmId);
        }
        Ok(FirmId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FirmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for FirmId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for FirmId {
    /// Panics on an empty string; use [`FirmId::new`] for untrusted input.
    fn from(s: &str) -> Self {
        FirmId::new(s).expect("empty firm id")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SectorId(String);

impl SectorId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidArgument("empty sector name".into()));
        }
        Ok(SectorId(name))
    }

    pub fn others() -> Self {
        SectorId("Others".into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SectorId {
    fn from(s: &str) -> Self {
        SectorId::new(s).expect("empty sector name")
    }
}

/// Per-firm attributes as they appear in the firm table.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmRecord {
    pub id: FirmId,
    pub bank_borrowing: f64,
    pub total_interfirm_credit: Option<f64>,
    pub sector: Option<SectorId>,
    pub surveyed: Option<bool>,
}

impl FirmRecord {
    pub fn new(id: FirmId, bank_borrowing: f64) -> Self {
        FirmRecord {
            id,
            bank_borrowing,
            total_interfirm_credit: None,
            sector: None,
            surveyed: None,
        }
    }
}

/// One credit relationship: `borrower` owes `amount` to `lender`.
#[derive(Debug, Clone, PartialEq)]
pub struct Loan {
    pub borrower: FirmId,
    pub lender: FirmId,
    pub amount: f64,
}

fn check_amount(amount: f64, context: impl FnOnce() -> String) -> Result<()> {
    if !amount.is_finite() {
        return Err(Error::NonFiniteAmount(context()));
    }
    if amount < 0.0 {
        return Err(Error::NegativeAmount {
            context: context(),
            amount,
        });
    }
    Ok(())
}

/// Incremental, validating constructor for [`CreditNetwork`].
///
/// Firms keep the order in which they were first declared, either through
/// [`add_firm`](Self::add_firm) or as an endpoint of a loan.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    firms: IndexMap<FirmId, FirmRecord>,
    loans: Vec<(usize, usize, f64)>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_firm(&mut self, record: FirmRecord) -> Result<&mut Self> {
        check_amount(record.bank_borrowing, || format!("bank borrowing of `{}`", record.id))?;
        if let Some(f) = record.total_interfirm_credit {
            check_amount(f, || format!("reported credit total of `{}`", record.id))?;
        }
        if self.firms.contains_key(&record.id) {
            return Err(Error::DuplicateFirm(record.id));
        }
        self.firms.insert(record.id.clone(), record);
        Ok(self)
    }

    fn intern(&mut self, id: &FirmId) -> usize {
        match self.firms.get_index_of(id) {
            Some(i) => i,
            None => {
                self.firms
                    .insert(id.clone(), FirmRecord::new(id.clone(), 0.0));
                self.firms.len() - 1
            }
        }
    }

    pub fn add_loan(&mut self, borrower: &FirmId, lender: &FirmId, amount: f64) -> Result<&mut Self> {
        check_amount(amount, || format!("loan {lender} -> {borrower}"))?;
        if borrower == lender {
            return Err(Error::SelfLoan(borrower.clone()));
        }
        let b = self.intern(borrower);
        let l = self.intern(lender);
        self.loans.push((b, l, amount));
        Ok(self)
    }

    pub fn record_mut(&mut self, id: &FirmId) -> Option<&mut FirmRecord> {
        self.firms.get_mut(id)
    }

    pub fn contains(&self, id: &FirmId) -> bool {
        self.firms.contains_key(id)
    }

    pub fn build(self) -> CreditNetwork {
        let n = self.firms.len();
        let credit = CsrMatrix::from_triplets(n, self.loans);
        let mut firms = Vec::with_capacity(n);
        let mut bank = Vec::with_capacity(n);
        let mut reported = Vec::with_capacity(n);
        let mut sector = Vec::with_capacity(n);
        let mut surveyed = Vec::with_capacity(n);
        for (_, rec) in self.firms {
            firms.push(rec.id);
            bank.push(rec.bank_borrowing);
            reported.push(rec.total_interfirm_credit);
            sector.push(rec.sector);
            surveyed.push(rec.surveyed);
        }
        CreditNetwork::from_parts(firms, credit, bank, reported, sector, surveyed)
    }
}

/// Builds a network from a loan list and per-firm maps.
///
/// The firm set is the keys of `bank` followed by any further loan
/// endpoints; those get zero bank borrowing. `totals` and `sectors` may only
/// mention firms in that set.
pub fn build_network(
    loans: &[Loan],
    bank: &IndexMap<FirmId, f64>,
    totals: Option<&IndexMap<FirmId, f64>>,
    sectors: Option<&IndexMap<FirmId, SectorId>>,
) -> Result<CreditNetwork> {
    let mut builder = NetworkBuilder::new();
    for (id, &b) in bank {
        builder.add_firm(FirmRecord::new(id.clone(), b))?;
    }
    for loan in loans {
        builder.add_loan(&loan.borrower, &loan.lender, loan.amount)?;
    }
    if let Some(totals) = totals {
        for (id, &f) in totals {
            check_amount(f, || format!("reported credit total of `{id}`"))?;
            let rec = builder
                .record_mut(id)
                .ok_or_else(|| Error::UnknownFirm(id.to_string()))?;
            rec.total_interfirm_credit = Some(f);
        }
    }
    if let Some(sectors) = sectors {
        for (id, s) in sectors {
            let rec = builder
                .record_mut(id)
                .ok_or_else(|| Error::UnknownFirm(id.to_string()))?;
            rec.sector = Some(s.clone());
        }
    }
    Ok(builder.build())
}

/// Immutable inter-firm credit network.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditNetwork {
    firms: Vec<FirmId>,
    index: HashMap<FirmId, usize>,
    credit: CsrMatrix,
    bank: Vec<f64>,
    reported: Vec<Option<f64>>,
    sector: Vec<Option<SectorId>>,
    surveyed: Vec<Option<bool>>,
}

impl CreditNetwork {
    fn from_parts(
        firms: Vec<FirmId>,
        credit: CsrMatrix,
        bank: Vec<f64>,
        reported: Vec<Option<f64>>,
        sector: Vec<Option<SectorId>>,
        surveyed: Vec<Option<bool>>,
    ) -> Self {
        let n = firms.len();
        debug_assert_eq!(credit.dim(), n);
        debug_assert!(credit.triplets().all(|(i, j, v)| i != j && v > 0.0));
        let index = firms.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
        CreditNetwork {
            firms,
            index,
            credit,
            bank,
            reported,
            sector,
            surveyed,
        }
    }

    pub fn len(&self) -> usize {
        self.firms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firms.is_empty()
    }

    pub fn firms(&self) -> &[FirmId] {
        &self.firms
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownFirm(id.to_string()))
    }

    /// Credit matrix `L`; entry `(i, j)` is what firm `i` borrowed from firm `j`.
    pub fn credit(&self) -> &CsrMatrix {
        &self.credit
    }

    pub fn bank(&self) -> &[f64] {
        &self.bank
    }

    pub fn reported_totals(&self) -> &[Option<f64>] {
        &self.reported
    }

    pub fn sectors(&self) -> &[Option<SectorId>] {
        &self.sector
    }

    pub fn surveyed(&self) -> &[Option<bool>] {
        &self.surveyed
    }

    /// Inter-firm borrowing of firm `i`, the row sum of the credit matrix.
    pub fn interfirm_borrowing(&self, i: usize) -> f64 {
        self.credit.row_sum(i)
    }

    pub fn total_debt(&self) -> Vec<f64> {
        total_debt(self)
    }

    pub fn loans(&self) -> impl Iterator<Item = Loan> + '_ {
        self.credit.triplets().map(|(i, j, v)| Loan {
            borrower: self.firms[i].clone(),
            lender: self.firms[j].clone(),
            amount: v,
        })
    }

    pub fn record(&self, i: usize) -> FirmRecord {
        FirmRecord {
            id: self.firms[i].clone(),
            bank_borrowing: self.bank[i],
            total_interfirm_credit: self.reported[i],
            sector: self.sector[i].clone(),
            surveyed: self.surveyed[i],
        }
    }

    pub fn records(&self) -> impl Iterator<Item = FirmRecord> + '_ {
        (0..self.len()).map(|i| self.record(i))
    }

    /// Same firms and attributes with a replacement credit matrix. Total
    /// debt follows from the new matrix.
    pub fn with_credit(&self, credit: CsrMatrix) -> Result<Self> {
        if credit.dim() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "credit matrix has dimension {}, network has {} firms",
                credit.dim(),
                self.len()
            )));
        }
        for (i, j, v) in credit.triplets() {
            if i == j {
                return Err(Error::SelfLoan(self.firms[i].clone()));
            }
            check_amount(v, || format!("loan {} -> {}", self.firms[j], self.firms[i]))?;
        }
        let mut out = self.clone();
        out.credit = credit;
        Ok(out)
    }

    pub fn with_bank(&self, bank: Vec<f64>) -> Result<Self> {
        if bank.len() != self.len() {
            return Err(Error::InvalidArgument("bank vector length mismatch".into()));
        }
        for (i, &b) in bank.iter().enumerate() {
            check_amount(b, || format!("bank borrowing of `{}`", self.firms[i]))?;
        }
        let mut out = self.clone();
        out.bank = bank;
        Ok(out)
    }

    pub fn with_reported_totals(&self, reported: Vec<Option<f64>>) -> Result<Self> {
        if reported.len() != self.len() {
            return Err(Error::InvalidArgument("totals vector length mismatch".into()));
        }
        let mut out = self.clone();
        out.reported = reported;
        Ok(out)
    }

    /// Network induced by the firms at `keep`, in that order. Loans to or
    /// from dropped firms disappear and total debt is re-derived.
    pub fn subnetwork(&self, keep: &[usize]) -> CreditNetwork {
        let pick = |v: &[Option<f64>]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
        CreditNetwork::from_parts(
            keep.iter().map(|&i| self.firms[i].clone()).collect(),
            self.credit.submatrix(keep),
            keep.iter().map(|&i| self.bank[i]).collect(),
            pick(&self.reported),
            keep.iter().map(|&i| self.sector[i].clone()).collect(),
            keep.iter().map(|&i| self.surveyed[i]).collect(),
        )
    }
}

/// Total debt per firm: bank borrowing plus inter-firm borrowing.
pub fn total_debt(net: &CreditNetwork) -> Vec<f64> {
    (0..net.len())
        .map(|i| net.bank[i] + net.credit.row_sum(i))
        .collect()
}

/// Borrowing shares of a network with strictly positive total debt.
#[derive(Debug, Clone)]
pub struct ShareMatrix {
    /// `a[i][j] = L[i][j] / D[i]`, the share of firm i's debt owed to firm j.
    pub a: CsrMatrix,
    /// `ell[i][j] = L[i][j] / D[j]`, the fraction of firm j's debt that flows to firm i.
    pub ell: CsrMatrix,
    pub debt: Vec<f64>,
}

pub fn share_matrices(net: &CreditNetwork) -> Result<ShareMatrix> {
    let debt = total_debt(net);
    if let Some(i) = debt.iter().position(|&d| d <= 0.0) {
        return Err(Error::ZeroDebtFirm(net.firms[i].clone()));
    }
    let a = net.credit.map(|i, _, v| v / debt[i]);
    let ell = net.credit.map(|_, j, v| v / debt[j]);
    Ok(ShareMatrix { a, ell, debt })
}

/// Weakly connected component of the credit support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    /// Firm indices in network order.
    pub members: Vec<usize>,
    pub contains_bank_link: bool,
}

impl Component {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Weakly connected components, largest first; ties broken by the
/// lexicographically smallest member id.
pub fn components(net: &CreditNetwork) -> Vec<Component> {
    let n = net.len();
    let mut uf = UnionFind::<usize>::new(n);
    for (i, j, _) in net.credit.triplets() {
        uf.union(i, j);
    }
    let mut groups: IndexMap<usize, Vec<usize>> = IndexMap::new();
    for i in 0..n {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut out: Vec<(Component, &FirmId)> = groups
        .into_values()
        .map(|members| {
            let smallest = members.iter().map(|&i| &net.firms[i]).min().unwrap();
            let contains_bank_link = members.iter().any(|&i| net.bank[i] > 0.0);
            (
                Component {
                    members,
                    contains_bank_link,
                },
                smallest,
            )
        })
        .collect();
    out.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.1.cmp(b.1)));
    out.into_iter().map(|(c, _)| c).collect()
}

/// For each firm, whether following creditor links (borrower to lender)
/// reaches some firm that borrows from banks. Firms with bank borrowing
/// reach themselves.
pub fn bank_reachable(net: &CreditNetwork) -> Vec<bool> {
    let n = net.len();
    // lender -> borrowers adjacency
    let borrowers_of = net.credit.transpose();
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for i in 0..n {
        if net.bank[i] > 0.0 {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(j) = queue.pop_front() {
        for (i, _) in borrowers_of.row(j) {
            if !seen[i] {
                seen[i] = true;
                queue.push_back(i);
            }
        }
    }
    seen
}

/// Indices of firms whose DebtStreamness is undefined: zero total debt or no
/// creditor path to bank funding.
pub fn undefined_firms(net: &CreditNetwork) -> Vec<usize> {
    let reach = bank_reachable(net);
    let debt = total_debt(net);
    (0..net.len())
        .filter(|&i| !reach[i] || debt[i] <= 0.0)
        .collect()
}

/// Removes every firm whose DebtStreamness is undefined, repeating until
/// nothing changes. Returns the retained network and the removed ids in
/// network order.
pub fn prune_undefined(net: &CreditNetwork) -> Result<(CreditNetwork, Vec<FirmId>)> {
    let mut current = net.clone();
    let mut removed = Vec::new();
    loop {
        let bad = undefined_firms(&current);
        if bad.is_empty() {
            break;
        }
        let mut drop = vec![false; current.len()];
        for &i in &bad {
            drop[i] = true;
            removed.push(current.firms[i].clone());
        }
        let keep: Vec<usize> = (0..current.len()).filter(|&i| !drop[i]).collect();
        current = current.subnetwork(&keep);
    }
    if current.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let order: HashMap<&FirmId, usize> = net.index.iter().map(|(k, &v)| (k, v)).collect();
    removed.sort_by_key(|f| order[f]);
    Ok((current, removed))
}
