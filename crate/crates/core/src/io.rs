//! CSV tables: loans, firms, DebtStreamness results and label files.
//!
//! Amounts are written with Rust's shortest round-trip float formatting, so
//! writing a network and reading it back is lossless.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};
use indexmap::IndexMap;

use crate::aggregation::SectorClass;
use crate::error::{Error, Result};
use crate::network::{CreditNetwork, FirmId, FirmRecord, NetworkBuilder, SectorId};
use crate::streamness::StreamnessResult;

pub const LOAN_HEADER: [&str; 3] = ["borrower", "lender", "amount"];
pub const FIRM_HEADER: [&str; 5] = [
    "firm",
    "bank_borrowing",
    "total_interfirm_credit",
    "sector",
    "surveyed",
];
pub const RESULT_HEADER: [&str; 4] = ["firm", "ds", "bank_share", "component_id"];
pub const SECTOR_LABEL_HEADER: [&str; 2] = ["firm", "sector"];
pub const CLASS_LABEL_HEADER: [&str; 2] = ["sector", "class"];

/// A loan row together with the line it was read from.
#[derive(Debug, Clone)]
pub struct LoanRow {
    pub borrower: FirmId,
    pub lender: FirmId,
    pub amount: f64,
    pub line: u64,
}

/// Formats an amount so that parsing it back yields the same `f64`.
pub fn fmt_amount(x: f64) -> String {
    format!("{x:?}")
}

struct Table<'a> {
    source: &'a str,
}

impl Table<'_> {
    fn err(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Parse {
            file: self.source.to_string(),
            line,
            message: message.into(),
        }
    }

    fn rows<R: Read>(&self, reader: R, header: &[&str]) -> Result<Vec<(u64, StringRecord)>> {
        let mut rdr = ReaderBuilder::new()
            .has_headers(true)
            .trim(Trim::All)
            .flexible(false)
            .from_reader(reader);
        let found = rdr.headers().map_err(|e| self.csv_err(e))?.clone();
        if found.iter().ne(header.iter().copied()) {
            return Err(self.err(
                1,
                format!(
                    "expected header `{}`, found `{}`",
                    header.join(","),
                    found.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| self.csv_err(e))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            out.push((line, rec));
        }
        Ok(out)
    }

    fn csv_err(&self, e: csv::Error) -> Error {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        self.err(line, e.to_string())
    }

    fn firm(&self, line: u64, raw: &str, column: &str) -> Result<FirmId> {
        FirmId::new(raw).map_err(|_| self.err(line, format!("empty `{column}`")))
    }

    fn amount(&self, line: u64, raw: &str, column: &str) -> Result<f64> {
        let v: f64 = raw
            .parse()
            .map_err(|_| self.err(line, format!("`{column}` is not a number: `{raw}`")))?;
        if !v.is_finite() {
            return Err(self.err(line, format!("`{column}` is not finite: `{raw}`")));
        }
        if v < 0.0 {
            return Err(self.err(line, format!("negative `{column}`: {raw}")));
        }
        Ok(v)
    }

    fn optional_amount(&self, line: u64, raw: &str, column: &str) -> Result<Option<f64>> {
        if raw.is_empty() {
            Ok(None)
        } else {
            self.amount(line, raw, column).map(Some)
        }
    }

    fn flag(&self, line: u64, raw: &str) -> Result<Option<bool>> {
        match raw.to_ascii_lowercase().as_str() {
            "" => Ok(None),
            "1" | "true" | "yes" | "y" => Ok(Some(true)),
            "0" | "false" | "no" | "n" => Ok(Some(false)),
            other => Err(self.err(line, format!("`surveyed` must be a boolean, found `{other}`"))),
        }
    }
}

pub fn read_loans<R: Read>(reader: R, source: &str) -> Result<Vec<LoanRow>> {
    let t = Table { source };
    t.rows(reader, &LOAN_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(LoanRow {
                borrower: t.firm(line, &rec[0], "borrower")?,
                lender: t.firm(line, &rec[1], "lender")?,
                amount: t.amount(line, &rec[2], "amount")?,
                line,
            })
        })
        .collect()
}

pub fn read_firms<R: Read>(reader: R, source: &str) -> Result<Vec<FirmRecord>> {
    let t = Table { source };
    t.rows(reader, &FIRM_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(FirmRecord {
                id: t.firm(line, &rec[0], "firm")?,
                bank_borrowing: t
                    .optional_amount(line, &rec[1], "bank_borrowing")?
                    .unwrap_or(0.0),
                total_interfirm_credit: t.optional_amount(line, &rec[2], "total_interfirm_credit")?,
                sector: if rec[3].is_empty() {
                    None
                } else {
                    Some(SectorId::new(&rec[3])?)
                },
                surveyed: t.flag(line, &rec[4])?,
            })
        })
        .collect()
}

/// Firm rows are declared first, in file order; loan endpoints missing from
/// the firm table follow with zero bank borrowing.
pub fn network_from_tables(firms: Vec<FirmRecord>, loans: &[LoanRow]) -> Result<CreditNetwork> {
    let mut builder = NetworkBuilder::new();
    for rec in firms {
        builder.add_firm(rec)?;
    }
    for row in loans {
        builder.add_loan(&row.borrower, &row.lender, row.amount)?;
    }
    Ok(builder.build())
}

pub fn load_network(loans: &Path, firms: Option<&Path>) -> Result<CreditNetwork> {
    let loan_rows = read_loans(File::open(loans)?, &loans.display().to_string())?;
    let firm_rows = match firms {
        Some(p) => read_firms(File::open(p)?, &p.display().to_string())?,
        None => Vec::new(),
    };
    network_from_tables(firm_rows, &loan_rows)
}

pub fn parse_network(loans_csv: &str, firms_csv: &str) -> Result<CreditNetwork> {
    let loans = read_loans(loans_csv.as_bytes(), "<loans>")?;
    let firms = read_firms(firms_csv.as_bytes(), "<firms>")?;
    network_from_tables(firms, &loans)
}

pub fn write_loans<W: Write>(net: &CreditNetwork, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(LOAN_HEADER).map_err(csv_io)?;
    for loan in net.loans() {
        wtr.write_record([
            loan.borrower.as_str(),
            loan.lender.as_str(),
            &fmt_amount(loan.amount),
        ])
        .map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_firms<W: Write>(net: &CreditNetwork, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(FIRM_HEADER).map_err(csv_io)?;
    for rec in net.records() {
        wtr.write_record([
            rec.id.as_str().to_string(),
            fmt_amount(rec.bank_borrowing),
            rec.total_interfirm_credit.map(fmt_amount).unwrap_or_default(),
            rec.sector.map(|s| s.as_str().to_string()).unwrap_or_default(),
            rec.surveyed.map(|b| b.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_streamness<W: Write>(result: &StreamnessResult, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RESULT_HEADER).map_err(csv_io)?;
    for i in 0..result.len() {
        wtr.write_record([
            result.firms[i].as_str().to_string(),
            fmt_amount(result.ds[i]),
            fmt_amount(result.bank_share[i]),
            result.component[i].to_string(),
        ])
        .map_err(csv_io)?;
    }
    wtr.flush()?;
    Ok(())
}

/// One row of a DebtStreamness result table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub firm: FirmId,
    pub ds: f64,
    pub bank_share: f64,
    pub component_id: usize,
}

pub fn read_streamness<R: Read>(reader: R, source: &str) -> Result<Vec<ResultRow>> {
    let t = Table { source };
    t.rows(reader, &RESULT_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(ResultRow {
                firm: t.firm(line, &rec[0], "firm")?,
                ds: t.amount(line, &rec[1], "ds")?,
                bank_share: t.amount(line, &rec[2], "bank_share")?,
                component_id: rec[3]
                    .parse()
                    .map_err(|_| t.err(line, format!("bad component_id `{}`", &rec[3])))?,
            })
        })
        .collect()
}

pub fn read_sector_labels<R: Read>(reader: R, source: &str) -> Result<IndexMap<FirmId, SectorId>> {
    let t = Table { source };
    let mut out = IndexMap::new();
    for (line, rec) in t.rows(reader, &SECTOR_LABEL_HEADER)? {
        let firm = t.firm(line, &rec[0], "firm")?;
        let sector = SectorId::new(&rec[1]).map_err(|_| t.err(line, "empty `sector`"))?;
        if out.insert(firm.clone(), sector).is_some() {
            return Err(t.err(line, format!("firm `{firm}` labelled twice")));
        }
    }
    Ok(out)
}

pub fn read_class_labels<R: Read>(reader: R, source: &str) -> Result<IndexMap<SectorId, SectorClass>> {
    let t = Table { source };
    let mut out = IndexMap::new();
    for (line, rec) in t.rows(reader, &CLASS_LABEL_HEADER)? {
        let sector = SectorId::new(&rec[0]).map_err(|_| t.err(line, "empty `sector`"))?;
        let class: SectorClass = rec[1]
            .parse()
            .map_err(|_| t.err(line, format!("unknown class `{}`", &rec[1])))?;
        out.insert(sector, class);
    }
    Ok(out)
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_amount_names_line() {
        let csv = "borrower,lender,amount\na,b,10\nb,c,-5\n";
        match read_loans(csv.as_bytes(), "edges.csv") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("negative"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_is_checked() {
        let csv = "from,to,amount\na,b,10\n";
        assert!(matches!(
            read_loans(csv.as_bytes(), "e"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn ragged_row_is_a_parse_error() {
        let csv = "borrower,lender,amount\na,b\n";
        assert!(matches!(read_loans(csv.as_bytes(), "e"), Err(Error::Parse { .. })));
    }

    #[test]
    fn firm_table_with_blanks() {
        let csv = "firm,bank_borrowing,total_interfirm_credit,sector,surveyed\n\
                   a,100,,Retail,true\n\
                   b,,250.5,,\n";
        let firms = read_firms(csv.as_bytes(), "f").unwrap();
        assert_eq!(firms[0].bank_borrowing, 100.0);
        assert_eq!(firms[0].sector.as_ref().unwrap().as_str(), "Retail");
        assert_eq!(firms[0].surveyed, Some(true));
        assert_eq!(firms[1].bank_borrowing, 0.0);
        assert_eq!(firms[1].total_interfirm_credit, Some(250.5));
        assert_eq!(firms[1].surveyed, None);
    }

    #[test]
    fn self_loan_is_a_validation_error() {
        let err = parse_network("borrower,lender,amount\na,a,1\n", &FIRM_HEADER.join(",")).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn round_trip_is_lossless() {
        let net = crate::synth::generate(&crate::synth::SynthConfig {
            n: 60,
            seed: 9,
            ..Default::default()
        })
        .unwrap();
        let net = net
            .with_reported_totals((0..net.len()).map(|i| (i % 3 == 0).then_some(i as f64 * 1.1)).collect())
            .unwrap();
        let mut loans = Vec::new();
        let mut firms = Vec::new();
        write_loans(&net, &mut loans).unwrap();
        write_firms(&net, &mut firms).unwrap();
        let back = parse_network(
            std::str::from_utf8(&loans).unwrap(),
            std::str::from_utf8(&firms).unwrap(),
        )
        .unwrap();
        assert_eq!(back, net);
    }
}
