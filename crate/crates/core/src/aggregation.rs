//! Sector-level aggregation and the cross-tabulation of sector classes
//! against DebtStreamness ranges.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::leontief;
use crate::network::{CreditNetwork, FirmId, SectorId};
use crate::sparse::CsrMatrix;
use crate::streamness::StreamnessResult;

/// Credit network collapsed to sectors. Intra-sector credit stays on the
/// diagonal of `credit`.
#[derive(Debug, Clone)]
pub struct SectorNetwork {
    pub sectors: Vec<SectorId>,
    /// `credit[(k, t)]`: total borrowed by firms of sector k from firms of sector t.
    pub credit: DMatrix<f64>,
    pub bank: Vec<f64>,
    pub debt: Vec<f64>,
    /// `None` for sectors with no credit path to bank funding.
    pub ds: Vec<Option<f64>>,
    pub solver_residual: f64,
}

impl SectorNetwork {
    pub fn ds_of(&self, sector: &str) -> Option<f64> {
        self.sectors
            .iter()
            .position(|s| s.as_str() == sector)
            .and_then(|k| self.ds[k])
    }
}

/// Groups firms by sector label (unlabelled firms go to `Others`) and
/// solves the sector-level DebtStreamness.
pub fn aggregate_by_sector(net: &CreditNetwork) -> Result<SectorNetwork> {
    if net.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let mut index: IndexMap<SectorId, ()> = IndexMap::new();
    let firm_sector: Vec<usize> = net
        .sectors()
        .iter()
        .map(|s| {
            let id = s.clone().unwrap_or_else(SectorId::others);
            index.insert_full(id, ()).0
        })
        .collect();
    let sectors: Vec<SectorId> = index.into_keys().collect();
    let m = sectors.len();

    let mut credit = DMatrix::zeros(m, m);
    for (i, j, v) in net.credit().triplets() {
        credit[(firm_sector[i], firm_sector[j])] += v;
    }
    let mut bank = vec![0.0; m];
    for (i, &b) in net.bank().iter().enumerate() {
        bank[firm_sector[i]] += b;
    }
    let debt: Vec<f64> = (0..m).map(|k| bank[k] + credit.row(k).sum()).collect();

    let defined = defined_sectors(&credit, &bank);
    let keep: Vec<usize> = (0..m).filter(|&k| defined[k]).collect();
    let mut ds = vec![None; m];
    let mut solver_residual = 0.0;
    if !keep.is_empty() {
        // credit owed to undefined sectors is dropped, as with firm pruning
        let mut triplets = Vec::new();
        for (lk, &k) in keep.iter().enumerate() {
            let row_debt = bank[k] + keep.iter().map(|&t| credit[(k, t)]).sum::<f64>();
            for (lt, &t) in keep.iter().enumerate() {
                let v = credit[(k, t)];
                if v > 0.0 {
                    triplets.push((lk, lt, v / row_debt));
                }
            }
        }
        let a = CsrMatrix::from_triplets(keep.len(), triplets);
        let sol = leontief::solve_unit_demand(&a)?;
        solver_residual = sol.residual;
        for (lk, &k) in keep.iter().enumerate() {
            ds[k] = Some(sol.x[lk]);
        }
    }
    Ok(SectorNetwork {
        sectors,
        credit,
        bank,
        debt,
        ds,
        solver_residual,
    })
}

/// Sectors that reach a bank-funded sector through inter-sector credit.
fn defined_sectors(credit: &DMatrix<f64>, bank: &[f64]) -> Vec<bool> {
    let m = bank.len();
    let mut reach: Vec<bool> = bank.iter().map(|&b| b > 0.0).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for k in 0..m {
            if !reach[k] && (0..m).any(|t| reach[t] && credit[(k, t)] > 0.0) {
                reach[k] = true;
                changed = true;
            }
        }
    }
    reach
}

/// Production-linkage role of a sector, supplied as input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SectorClass {
    UpStream,
    KeySector,
    DownStream,
    Others,
}

impl SectorClass {
    pub const ALL: [SectorClass; 4] = [
        SectorClass::UpStream,
        SectorClass::KeySector,
        SectorClass::DownStream,
        SectorClass::Others,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SectorClass::UpStream => "upstream",
            SectorClass::KeySector => "key",
            SectorClass::DownStream => "downstream",
            SectorClass::Others => "others",
        }
    }
}

impl fmt::Display for SectorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SectorClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upstream" => Ok(SectorClass::UpStream),
            "key" | "key_sector" | "keysector" => Ok(SectorClass::KeySector),
            "downstream" => Ok(SectorClass::DownStream),
            "others" | "other" => Ok(SectorClass::Others),
            other => Err(Error::InvalidArgument(format!("unknown sector class `{other}`"))),
        }
    }
}

/// DebtStreamness ranges `DS < 1.5`, `1.5 <= DS <= 2.5`, `DS > 2.5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DsBin {
    Near,
    Middle,
    Far,
}

impl DsBin {
    pub const ALL: [DsBin; 3] = [DsBin::Near, DsBin::Middle, DsBin::Far];

    pub fn of(ds: f64) -> DsBin {
        if ds < 1.5 {
            DsBin::Near
        } else if ds <= 2.5 {
            DsBin::Middle
        } else {
            DsBin::Far
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DsBin::Near => "[1,1.5)",
            DsBin::Middle => "[1.5,2.5]",
            DsBin::Far => "(2.5,inf)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCrossTab {
    counts: [[usize; 3]; 4],
}

impl ClassCrossTab {
    pub fn count(&self, class: SectorClass, bin: DsBin) -> usize {
        self.counts[class as usize][bin as usize]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// `(class, bin, count)` rows in fixed class-major order.
    pub fn rows(&self) -> impl Iterator<Item = (SectorClass, DsBin, usize)> + '_ {
        SectorClass::ALL
            .into_iter()
            .flat_map(move |c| DsBin::ALL.into_iter().map(move |b| (c, b, self.count(c, b))))
    }
}

/// Counts defined firms per class and DebtStreamness range. Firms without
/// a class are counted once under `Others`.
pub fn classification_crosstab(
    ds: &StreamnessResult,
    classes: &HashMap<FirmId, SectorClass>,
) -> ClassCrossTab {
    let mut counts = [[0usize; 3]; 4];
    for (firm, value) in ds.iter() {
        let class = classes.get(firm).copied().unwrap_or(SectorClass::Others);
        counts[class as usize][DsBin::of(value) as usize] += 1;
    }
    ClassCrossTab { counts }
}

/// Resolves each firm's class through its sector. `sector_override` takes
/// precedence over the sector stored in the network.
pub fn firm_classes(
    net: &CreditNetwork,
    sector_override: Option<&IndexMap<FirmId, SectorId>>,
    sector_classes: &IndexMap<SectorId, SectorClass>,
) -> HashMap<FirmId, SectorClass> {
    net.firms()
        .iter()
        .zip(net.sectors())
        .filter_map(|(firm, own)| {
            let sector = sector_override
                .and_then(|m| m.get(firm))
                .or(own.as_ref())?;
            sector_classes.get(sector).map(|&c| (firm.clone(), c))
        })
        .collect()
}

/// Copy of `net` with sector labels replaced from `labels`; firms not in
/// `labels` keep their current sector.
pub fn relabel_sectors(net: &CreditNetwork, labels: &IndexMap<FirmId, SectorId>) -> Result<CreditNetwork> {
    let mut builder = crate::network::NetworkBuilder::new();
    for mut rec in net.records() {
        if let Some(s) = labels.get(&rec.id) {
            rec.sector = Some(s.clone());
        }
        builder.add_firm(rec)?;
    }
    for loan in net.loans() {
        builder.add_loan(&loan.borrower, &loan.lender, loan.amount)?;
    }
    for firm in labels.keys() {
        if !builder.contains(firm) {
            return Err(Error::UnknownFirm(firm.to_string()));
        }
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::streamness::solve_streamness;
    use approx::assert_abs_diff_eq;

    fn labelled(net: &CreditNetwork, pairs: &[(&str, &str)]) -> CreditNetwork {
        let labels: IndexMap<FirmId, SectorId> = pairs
            .iter()
            .map(|&(f, s)| (FirmId::from(f), SectorId::from(s)))
            .collect();
        relabel_sectors(net, &labels).unwrap()
    }

    #[test]
    fn all_bank_sector() {
        let net = labelled(&fixtures::network(&[], &[("a", 5.0), ("b", 7.0)]), &[("a", "S"), ("b", "S")]);
        let agg = aggregate_by_sector(&net).unwrap();
        assert_eq!(agg.ds, vec![Some(1.0)]);
    }

    #[test]
    fn sector_chain() {
        let net = fixtures::network(
            &[("c", "a", 10.0), ("d", "b", 30.0)],
            &[("a", 5.0), ("b", 7.0)],
        );
        let net = labelled(&net, &[("a", "S1"), ("b", "S1"), ("c", "S2"), ("d", "S2")]);
        let agg = aggregate_by_sector(&net).unwrap();
        assert_eq!(agg.ds, vec![Some(1.0), Some(2.0)]);
    }

    #[test]
    fn two_cycle_inside_one_sector() {
        let net = labelled(&fixtures::two_cycle(0.9, 0.9), &[("firm2", "S"), ("firm3", "S")]);
        let agg = aggregate_by_sector(&net).unwrap();
        assert_eq!(agg.bank, vec![20.0]);
        assert_eq!(agg.credit[(0, 0)], 180.0);
        assert_abs_diff_eq!(agg.ds[0].unwrap(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn unlabelled_firms_go_to_others() {
        let net = labelled(&fixtures::chain(), &[("firm1", "Banks")]);
        let agg = aggregate_by_sector(&net).unwrap();
        assert_eq!(agg.sectors, vec![SectorId::from("Banks"), SectorId::others()]);
        // Others holds firm2 (owes Banks) and firm3 (owes firm2, intra-sector)
        assert_abs_diff_eq!(agg.ds_of("Others").unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn one_firm_per_sector_reproduces_firm_level() {
        let net = fixtures::outlier_toy();
        let pairs: Vec<(String, String)> = net
            .firms()
            .iter()
            .map(|f| (f.to_string(), format!("sector_{f}")))
            .collect();
        let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let net = labelled(&net, &refs);
        let firm = solve_streamness(&net).unwrap();
        let agg = aggregate_by_sector(&net).unwrap();
        for (k, v) in agg.ds.iter().enumerate() {
            assert!((v.unwrap() - firm.ds[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn bin_edges_are_closed_in_the_middle() {
        assert_eq!(DsBin::of(1.0), DsBin::Near);
        assert_eq!(DsBin::of(1.4999), DsBin::Near);
        assert_eq!(DsBin::of(1.5), DsBin::Middle);
        assert_eq!(DsBin::of(2.5), DsBin::Middle);
        assert_eq!(DsBin::of(2.5000001), DsBin::Far);
    }

    #[test]
    fn crosstab_counts() {
        let net = fixtures::network(&[], &[("a", 1.0), ("b", 1.0)]);
        let r = solve_streamness(&net).unwrap();
        let classes: HashMap<FirmId, SectorClass> =
            [("a", SectorClass::UpStream), ("b", SectorClass::UpStream)]
                .into_iter()
                .map(|(f, c)| (FirmId::from(f), c))
                .collect();
        let tab = classification_crosstab(&r, &classes);
        assert_eq!(tab.count(SectorClass::UpStream, DsBin::Near), 2);
        assert_eq!(tab.total(), 2);

        // six firms: DS (1, 1.5, 2, 3, 1.2, 2.5), classes (U, U, K, K, -, U)
        let mut fake = r.clone();
        fake.firms = ["a", "b", "c", "d", "e", "f"].iter().map(|&s| FirmId::from(s)).collect();
        fake.ds = vec![1.0, 1.5, 2.0, 3.0, 1.2, 2.5];
        let classes: HashMap<FirmId, SectorClass> = [
            ("a", SectorClass::UpStream),
            ("b", SectorClass::UpStream),
            ("c", SectorClass::KeySector),
            ("d", SectorClass::KeySector),
            ("f", SectorClass::UpStream),
        ]
        .into_iter()
        .map(|(f, c)| (FirmId::from(f), c))
        .collect();
        let tab = classification_crosstab(&fake, &classes);
        assert_eq!(tab.count(SectorClass::UpStream, DsBin::Near), 1);
        assert_eq!(tab.count(SectorClass::UpStream, DsBin::Middle), 2);
        assert_eq!(tab.count(SectorClass::KeySector, DsBin::Middle), 1);
        assert_eq!(tab.count(SectorClass::KeySector, DsBin::Far), 1);
        assert_eq!(tab.count(SectorClass::Others, DsBin::Near), 1);
        assert_eq!(tab.total(), 6);
        assert_eq!(tab.rows().count(), 12);
    }
}
