use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::Path;

use anyhow::Result;
use clap::ValueEnum;
use serde::Serialize;

use debtstream_core::aggregation::{
    aggregate_by_sector, classification_crosstab, firm_classes, relabel_sectors,
};
use debtstream_core::analysis::{detect_loops, scan_edge_removals, what_if_remove, RemovalMode};
use debtstream_core::io::{self as dio, fmt_amount};
use debtstream_core::network::prune_undefined;
use debtstream_core::reconstruction::{
    compare_networks, reconstruct_full, reconstruct_sparse, truncate_top_k,
};
use debtstream_core::stats;
use debtstream_core::streamness::{compute_streamness, series_streamness, SERIES_TOLERANCE};
use debtstream_core::synth::{generate, SynthConfig};
use debtstream_core::{CreditNetwork, Error, FirmId, SectorId, StreamnessResult};

use crate::args::*;
use crate::run::{open, source, Run};

/// A seeded command was invoked without `--seed`.
#[derive(Debug)]
pub struct MissingSeed(pub &'static str);

impl fmt::Display for MissingSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} needs an explicit --seed", self.0)
    }
}

impl std::error::Error for MissingSeed {}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Compute(a) => compute(&a),
        Command::Sectors(a) => sectors(&a),
        Command::Truncate(a) => truncate(&a),
        Command::Reconstruct(a) => reconstruct(&a),
        Command::Whatif(a) => whatif(&a),
        Command::Loops(a) => loops(&a),
        Command::Stats(a) => match a.command {
            StatsCommand::Correlate { ds, component, out } => correlate(&ds, component, &out),
            StatsCommand::FitLognormal { edges, out } => fit_lognormal(&edges, &out),
            StatsCommand::Histogram { ds, bin_width, out } => histogram(&ds, bin_width, &out),
        },
        Command::Synth(a) => synth(&a),
    }
}

fn value_name<E: ValueEnum>(e: &E) -> String {
    e.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn load(run: &mut Run, input: &NetworkArgs) -> Result<CreditNetwork> {
    run.input("edges", &input.edges)?.input("firms", &input.firms)?;
    Ok(dio::load_network(&input.edges, Some(&input.firms))?)
}

fn write_table<I>(w: &mut dyn Write, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_network(run: &Run, net: &CreditNetwork) -> Result<()> {
    run.write("edges.csv", |w| Ok(dio::write_loans(net, w)?))?;
    run.write("firms.csv", |w| Ok(dio::write_firms(net, w)?))
}

#[derive(Serialize)]
struct ComponentSummary<'a> {
    id: usize,
    size: usize,
    mean_ds: f64,
    max_ds: f64,
    firms: Vec<&'a FirmId>,
}

#[derive(Serialize)]
struct ComponentsReport<'a> {
    method: String,
    firms: usize,
    excluded: usize,
    mean_ds: f64,
    max_ds: f64,
    solver_residual: f64,
    series_terms: Option<usize>,
    components: Vec<ComponentSummary<'a>>,
}

fn component_summaries(ds: &StreamnessResult) -> Vec<ComponentSummary<'_>> {
    let mut out: Vec<ComponentSummary> = ds
        .component_means
        .iter()
        .enumerate()
        .map(|(id, &mean_ds)| ComponentSummary {
            id,
            size: 0,
            mean_ds,
            max_ds: f64::NEG_INFINITY,
            firms: Vec::new(),
        })
        .collect();
    for (k, (firm, v)) in ds.iter().enumerate() {
        let c = &mut out[ds.component[k]];
        c.size += 1;
        c.max_ds = c.max_ds.max(v);
        c.firms.push(firm);
    }
    out
}

fn compute(args: &ComputeArgs) -> Result<()> {
    let mut run = Run::new("compute", &args.out)?;
    run.param("method", value_name(&args.method));
    if args.method == SolveMethod::Series {
        run.param("max_terms", args.max_terms);
    }
    let net = load(&mut run, &args.input)?;
    let ds = match args.method {
        SolveMethod::Solve => compute_streamness(&net)?,
        SolveMethod::Series => {
            let (pruned, excluded) = prune_undefined(&net)?;
            let mut ds = series_streamness(&pruned, args.max_terms, SERIES_TOLERANCE)?;
            ds.excluded = excluded;
            ds
        }
    };
    run.write("ds.csv", |w| Ok(dio::write_streamness(&ds, w)?))?;
    run.write("excluded.csv", |w| {
        write_table(w, &["firm"], ds.excluded.iter().map(|f| vec![f.to_string()]))
    })?;
    run.write_report(
        "components.json",
        &ComponentsReport {
            method: value_name(&args.method),
            firms: ds.len(),
            excluded: ds.excluded.len(),
            mean_ds: ds.mean(),
            max_ds: ds.max(),
            solver_residual: ds.solver_residual,
            series_terms: ds.series_terms,
            components: component_summaries(&ds),
        },
    )?;
    println!(
        "{} firms, {} excluded, mean DS {:.4}, max DS {:.4}",
        ds.len(),
        ds.excluded.len(),
        ds.mean(),
        ds.max()
    );
    run.finish()
}

#[derive(Serialize)]
struct SectorRow {
    sector: SectorId,
    firms: usize,
    ds: Option<f64>,
    bank_borrowing: f64,
    interfirm_credit: f64,
    total_debt: f64,
}

#[derive(Serialize)]
struct CrossTabRow {
    class: &'static str,
    bin: &'static str,
    count: usize,
}

#[derive(Serialize)]
struct SectorsReport {
    sectors: Vec<SectorRow>,
    solver_residual: f64,
    crosstab: Option<Vec<CrossTabRow>>,
}

fn sectors(args: &SectorsArgs) -> Result<()> {
    let mut run = Run::new("sectors", &args.out)?;
    let mut net = load(&mut run, &args.input)?;
    if let Some(path) = &args.sector_labels {
        run.input("sector_labels", path)?;
        let labels = dio::read_sector_labels(open(path)?, &source(path))?;
        net = relabel_sectors(&net, &labels)?;
    }
    let agg = aggregate_by_sector(&net)?;
    let mut sizes: HashMap<SectorId, usize> = HashMap::new();
    for s in net.sectors() {
        *sizes.entry(s.clone().unwrap_or_else(SectorId::others)).or_default() += 1;
    }
    let rows: Vec<SectorRow> = agg
        .sectors
        .iter()
        .enumerate()
        .map(|(k, s)| SectorRow {
            sector: s.clone(),
            firms: sizes[s],
            ds: agg.ds[k],
            bank_borrowing: agg.bank[k],
            interfirm_credit: agg.credit.row(k).sum(),
            total_debt: agg.debt[k],
        })
        .collect();
    run.write("sectors.csv", |w| {
        write_table(
            w,
            &["sector", "firms", "ds", "bank_borrowing", "interfirm_credit", "total_debt"],
            rows.iter().map(|r| {
                vec![
                    r.sector.to_string(),
                    r.firms.to_string(),
                    r.ds.map(fmt_amount).unwrap_or_default(),
                    fmt_amount(r.bank_borrowing),
                    fmt_amount(r.interfirm_credit),
                    fmt_amount(r.total_debt),
                ]
            }),
        )
    })?;

    let crosstab = match &args.classes {
        None => None,
        Some(path) => {
            run.input("classes", path)?;
            let classes = dio::read_class_labels(open(path)?, &source(path))?;
            let ds = compute_streamness(&net)?;
            let tab = classification_crosstab(&ds, &firm_classes(&net, None, &classes));
            let rows: Vec<CrossTabRow> = tab
                .rows()
                .map(|(c, b, count)| CrossTabRow {
                    class: c.label(),
                    bin: b.label(),
                    count,
                })
                .collect();
            run.write("crosstab.csv", |w| {
                write_table(
                    w,
                    &["class", "bin", "count"],
                    rows.iter()
                        .map(|r| vec![r.class.to_string(), r.bin.to_string(), r.count.to_string()]),
                )
            })?;
            Some(rows)
        }
    };
    let defined = rows.iter().filter(|r| r.ds.is_some()).count();
    run.write_report(
        "sectors.json",
        &SectorsReport {
            sectors: rows,
            solver_residual: agg.solver_residual,
            crosstab,
        },
    )?;
    println!("{} sectors, {defined} with defined DS", agg.sectors.len());
    run.finish()
}

#[derive(Serialize)]
struct TruncateReport {
    top: usize,
    loans_before: usize,
    loans_after: usize,
    credit_before: f64,
    credit_after: f64,
}

fn total_credit(net: &CreditNetwork) -> f64 {
    net.credit().triplets().map(|(_, _, v)| v).sum()
}

fn truncate(args: &TruncateArgs) -> Result<()> {
    let mut run = Run::new("truncate", &args.out)?;
    run.param("top", args.top);
    let net = load(&mut run, &args.input)?;
    let cut = truncate_top_k(&net, args.top)?;
    write_network(&run, &cut)?;
    let report = TruncateReport {
        top: args.top,
        loans_before: net.credit().nnz(),
        loans_after: cut.credit().nnz(),
        credit_before: total_credit(&net),
        credit_after: total_credit(&cut),
    };
    run.write_report("truncate.json", &report)?;
    println!(
        "kept {} of {} loans ({:.1}% of credit)",
        report.loans_after,
        report.loans_before,
        100.0 * report.credit_after / report.credit_before
    );
    run.finish()
}

#[derive(Serialize)]
struct Comparison<'a> {
    compared_with: &'static str,
    common_firms: usize,
    dropped: &'a [FirmId],
    mean_ds_reference: f64,
    mean_ds_reconstructed: f64,
    spearman: f64,
    kendall: f64,
    pearson: f64,
}

#[derive(Serialize)]
struct ReconstructionJson<'a> {
    method: debtstream_core::reconstruction::ReconstructionMethod,
    residual_total: f64,
    clamped_firms: &'a [FirmId],
    rows: &'a [debtstream_core::reconstruction::RowAllocation],
    comparison: Comparison<'a>,
}

fn reconstruct(args: &ReconstructArgs) -> Result<()> {
    let seed = match args.method {
        RebuildMethod::Sparse => Some(args.seed.ok_or(MissingSeed("reconstruct --method sparse"))?),
        RebuildMethod::Full => None,
    };
    let mut run = Run::new("reconstruct", &args.out)?;
    run.param("method", value_name(&args.method)).seed(seed);
    let net = load(&mut run, &args.input)?;
    let rec = match seed {
        Some(seed) => reconstruct_sparse(&net, seed)?,
        None => reconstruct_full(&net)?,
    };
    let (reference, compared_with) = match (&args.reference_edges, &args.reference_firms) {
        (Some(e), Some(f)) => {
            run.input("reference_edges", e)?.input("reference_firms", f)?;
            (dio::load_network(e, Some(f))?, "reference")
        }
        _ => (net, "input"),
    };
    let report = compare_networks(&reference, &rec.network, rec.method)?;
    write_network(&run, &rec.network)?;
    run.write("ds.csv", |w| Ok(dio::write_streamness(&report.ds_reconstructed, w)?))?;
    run.write_report(
        "reconstruction.json",
        &ReconstructionJson {
            method: rec.method,
            residual_total: rec.residual.r.iter().sum(),
            clamped_firms: &rec.residual.clamped_firms,
            rows: &rec.rows,
            comparison: Comparison {
                compared_with,
                common_firms: report.common_firms.len(),
                dropped: &report.dropped,
                mean_ds_reference: report.ds_observed.mean(),
                mean_ds_reconstructed: report.ds_reconstructed.mean(),
                spearman: report.spearman,
                kendall: report.kendall,
                pearson: report.pearson,
            },
        },
    )?;
    println!(
        "{} rows filled; against {compared_with}: spearman {:.4}, kendall {:.4}, pearson {:.4}",
        rec.rows.len(),
        report.spearman,
        report.kendall,
        report.pearson
    );
    run.finish()
}

#[derive(Serialize)]
struct FirmChange<'a> {
    firm: &'a FirmId,
    ds_before: f64,
    ds_after: Option<f64>,
}

#[derive(Serialize)]
struct WhatifReport<'a> {
    borrower: &'a FirmId,
    lender: &'a FirmId,
    mode: RemovalMode,
    affected_firms: usize,
    mean_before: f64,
    mean_after: f64,
    reduction_factor: f64,
    newly_undefined: &'a [FirmId],
    firms: Vec<FirmChange<'a>>,
}

fn parse_edge(spec: &str) -> Result<(&str, &str), Error> {
    match spec.split_once(',') {
        Some((b, l)) if !b.trim().is_empty() && !l.trim().is_empty() => Ok((b.trim(), l.trim())),
        _ => Err(Error::InvalidArgument(format!(
            "--remove expects BORROWER,LENDER, got `{spec}`"
        ))),
    }
}

fn whatif(args: &WhatifArgs) -> Result<()> {
    let mut run = Run::new("whatif", &args.out)?;
    let mode = if args.reassign_bank {
        RemovalMode::ReassignToBank
    } else {
        RemovalMode::Drop
    };
    run.param("reassign_bank", args.reassign_bank);
    if let Some(spec) = &args.remove {
        run.param("remove", spec);
    }
    run.param("scan", args.scan);
    let net = load(&mut run, &args.input)?;

    if let Some(spec) = &args.remove {
        let (borrower, lender) = parse_edge(spec)?;
        let r = what_if_remove(&net, borrower, lender, mode)?;
        let after: HashMap<&FirmId, f64> = r.ds_after.iter().collect();
        let firms = r
            .ds_before
            .iter()
            .map(|(firm, v)| FirmChange {
                firm,
                ds_before: v,
                ds_after: after.get(firm).copied(),
            })
            .collect();
        run.write_report(
            "whatif.json",
            &WhatifReport {
                borrower: &r.removed_edge.0,
                lender: &r.removed_edge.1,
                mode,
                affected_firms: r.affected_firms.len(),
                mean_before: r.mean_before,
                mean_after: r.mean_after,
                reduction_factor: r.reduction_factor(),
                newly_undefined: &r.newly_undefined,
                firms,
            },
        )?;
        println!(
            "component mean DS {:.4} -> {:.4} (factor {:.3})",
            r.mean_before,
            r.mean_after,
            r.reduction_factor()
        );
    }
    if args.scan {
        let impacts = scan_edge_removals(&net, mode)?;
        run.write("whatif_scan.csv", |w| {
            write_table(
                w,
                &["borrower", "lender", "mean_before", "mean_after", "reduction_factor", "newly_undefined"],
                impacts.iter().map(|e| {
                    vec![
                        e.borrower.to_string(),
                        e.lender.to_string(),
                        fmt_amount(e.mean_before),
                        fmt_amount(e.mean_after),
                        fmt_amount(e.mean_before / e.mean_after),
                        e.newly_undefined.to_string(),
                    ]
                }),
            )
        })?;
        if let Some(best) = impacts
            .iter()
            .max_by(|a, b| (a.mean_before / a.mean_after).total_cmp(&(b.mean_before / b.mean_after)))
        {
            println!(
                "{} links scanned; largest reduction removing {} <- {} ({:.4} -> {:.4})",
                impacts.len(),
                best.borrower,
                best.lender,
                best.mean_before,
                best.mean_after
            );
        }
    }
    run.finish()
}

#[derive(Serialize)]
struct LoopsReport<'a> {
    scc_count: usize,
    largest_scc: usize,
    firms_in_cycles: usize,
    two_cycle_count: usize,
    sccs: &'a [Vec<FirmId>],
    two_cycles: &'a [(FirmId, FirmId)],
}

fn loops(args: &LoopsArgs) -> Result<()> {
    let mut run = Run::new("loops", &args.out)?;
    let net = load(&mut run, &args.input)?;
    let rep = detect_loops(&net);
    let body = LoopsReport {
        scc_count: rep.sccs.len(),
        largest_scc: rep.sccs.iter().map(Vec::len).max().unwrap_or(0),
        firms_in_cycles: rep.sccs.iter().map(Vec::len).sum(),
        two_cycle_count: rep.two_cycles.len(),
        sccs: &rep.sccs,
        two_cycles: &rep.two_cycles,
    };
    run.write_report("loops.json", &body)?;
    println!(
        "{} cyclic components ({} firms, largest {}), {} mutual lending pairs",
        body.scc_count, body.firms_in_cycles, body.largest_scc, body.two_cycle_count
    );
    run.finish()
}

#[derive(Serialize)]
struct CorrelationReport {
    component: Option<usize>,
    firms: usize,
    pearson: f64,
    spearman: f64,
    kendall: f64,
}

fn correlate(ds_path: &Path, component: Option<usize>, out: &Path) -> Result<()> {
    let mut run = Run::new("stats correlate", out)?;
    run.input("ds", ds_path)?.param("component", component);
    let rows = dio::read_streamness(open(ds_path)?, &source(ds_path))?;
    let (share, ds): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| component.is_none_or(|c| r.component_id == c))
        .map(|r| (r.bank_share, r.ds))
        .unzip();
    let body = CorrelationReport {
        component,
        firms: ds.len(),
        pearson: stats::pearson(&share, &ds)?,
        spearman: stats::spearman(&share, &ds)?,
        kendall: stats::kendall(&share, &ds)?,
    };
    run.write_report("correlation.json", &body)?;
    println!(
        "bank share vs DS over {} firms: pearson {:.4}, spearman {:.4}, kendall {:.4}",
        body.firms, body.pearson, body.spearman, body.kendall
    );
    run.finish()
}

#[derive(Serialize)]
struct LognormalReport {
    n_samples: usize,
    skipped_zero: usize,
    mu: f64,
    sigma: f64,
}

fn fit_lognormal(edges: &Path, out: &Path) -> Result<()> {
    let mut run = Run::new("stats fit-lognormal", out)?;
    run.input("edges", edges)?;
    let loans = dio::read_loans(open(edges)?, &source(edges))?;
    let amounts: Vec<f64> = loans.iter().map(|l| l.amount).filter(|&a| a > 0.0).collect();
    let fit = stats::fit_lognormal(&amounts)?;
    let body = LognormalReport {
        n_samples: fit.n_samples,
        skipped_zero: loans.len() - amounts.len(),
        mu: fit.mu,
        sigma: fit.sigma,
    };
    run.write_report("lognormal.json", &body)?;
    println!("mu {:.4}, sigma {:.4} over {} loans", body.mu, body.sigma, body.n_samples);
    run.finish()
}

#[derive(Serialize)]
struct HistogramReport<'a> {
    bin_width: f64,
    firms: usize,
    bins: &'a [stats::HistogramBin],
}

fn histogram(ds_path: &Path, bin_width: f64, out: &Path) -> Result<()> {
    let mut run = Run::new("stats histogram", out)?;
    run.input("ds", ds_path)?.param("bin_width", bin_width);
    let rows = dio::read_streamness(open(ds_path)?, &source(ds_path))?;
    let values: Vec<f64> = rows.iter().map(|r| r.ds).collect();
    let bins = stats::histogram(&values, 1.0, bin_width)?;
    run.write("histogram.csv", |w| {
        write_table(
            w,
            &["lower", "upper", "count"],
            bins.iter()
                .map(|b| vec![fmt_amount(b.lower), fmt_amount(b.upper), b.count.to_string()]),
        )
    })?;
    run.write_report(
        "histogram.json",
        &HistogramReport {
            bin_width,
            firms: values.len(),
            bins: &bins,
        },
    )?;
    println!("{} non-empty bins over {} firms", bins.len(), values.len());
    run.finish()
}

fn synth(args: &SynthArgs) -> Result<()> {
    let seed = args.seed.ok_or(MissingSeed("synth"))?;
    let config = SynthConfig {
        n: args.n,
        mean_out_degree: args.mean_out_degree,
        weight_mu: args.mu,
        weight_sigma: args.sigma,
        high_bank_weight: args.high_bank_weight,
        loop_fraction: args
            .loop_fraction
            .unwrap_or(if args.acyclic { 0.0 } else { SynthConfig::default().loop_fraction }),
        acyclic: args.acyclic,
        seed,
        ..SynthConfig::default()
    };
    let mut run = Run::new("synth", &args.out)?;
    run.param("config", &config).seed(Some(seed));
    let net = generate(&config)?;
    write_network(&run, &net)?;
    println!("{} firms, {} loans", net.len(), net.credit().nnz());
    run.finish()
}
