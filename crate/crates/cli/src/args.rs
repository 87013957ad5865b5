use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "debtstream", version, about = "DebtStreamness analysis of inter-firm credit networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Firm-level DebtStreamness.
    Compute(ComputeArgs),
    /// Sector aggregation and class cross-tabulation.
    Sectors(SectorsArgs),
    /// Keep only each firm's largest creditors, recording reported totals.
    Truncate(TruncateArgs),
    /// Fill unobserved credit and compare DebtStreamness before and after.
    Reconstruct(ReconstructArgs),
    /// DebtStreamness after removing a credit link.
    Whatif(WhatifArgs),
    /// Strongly connected components and mutual lending pairs.
    Loops(LoopsArgs),
    /// Correlations, log-normal fits and histograms.
    Stats(StatsArgs),
    /// Seeded synthetic network.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Loan table `borrower,lender,amount`.
    #[arg(long)]
    pub edges: PathBuf,
    /// Firm table `firm,bank_borrowing,total_interfirm_credit,sector,surveyed`.
    #[arg(long)]
    pub firms: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveMethod {
    Solve,
    Series,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub input: NetworkArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = SolveMethod::Solve)]
    pub method: SolveMethod,
    /// Term limit for `--method series`.
    #[arg(long, default_value_t = 10_000_000)]
    pub max_terms: usize,
}

#[derive(Debug, Args)]
pub struct SectorsArgs {
    #[command(flatten)]
    pub input: NetworkArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// `firm,sector` table overriding the sectors in the firm table.
    #[arg(long)]
    pub sector_labels: Option<PathBuf>,
    /// `sector,class` table with classes upstream, key, downstream or others.
    #[arg(long)]
    pub classes: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TruncateArgs {
    #[command(flatten)]
    pub input: NetworkArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub top: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RebuildMethod {
    Full,
    Sparse,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub input: NetworkArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub method: RebuildMethod,
    /// Required for `--method sparse`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compare against this loan table instead of the input network.
    #[arg(long, requires = "reference_firms")]
    pub reference_edges: Option<PathBuf>,
    #[arg(long, requires = "reference_edges")]
    pub reference_firms: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["remove", "scan"])))]
pub struct WhatifArgs {
    #[command(flatten)]
    pub input: NetworkArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Link to remove, as `BORROWER,LENDER`.
    #[arg(long, value_name = "BORROWER,LENDER")]
    pub remove: Option<String>,
    /// Try every link in turn.
    #[arg(long)]
    pub scan: bool,
    /// Move the removed credit to bank borrowing instead of dropping it.
    #[arg(long)]
    pub reassign_bank: bool,
}

#[derive(Debug, Args)]
pub struct LoopsArgs {
    #[command(flatten)]
    pub input: NetworkArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(subcommand)]
    pub command: StatsCommand,
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Bank share against DebtStreamness from a result table.
    Correlate {
        /// Result table `firm,ds,bank_share,component_id`.
        #[arg(long)]
        ds: PathBuf,
        /// Restrict to one component id.
        #[arg(long)]
        component: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Log-normal maximum-likelihood fit of loan amounts.
    FitLognormal {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// DebtStreamness histogram with bins starting at 1.
    Histogram {
        #[arg(long)]
        ds: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        bin_width: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 2.5)]
    pub mean_out_degree: f64,
    /// Log-mean of loan amounts.
    #[arg(long, default_value_t = 11.0)]
    pub mu: f64,
    /// Log-standard deviation of loan amounts.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    /// Fraction of firms paired into mutual loans; defaults to 0.05, or 0 with `--acyclic`.
    #[arg(long)]
    pub loop_fraction: Option<f64>,
    #[arg(long, default_value_t = 0.55)]
    pub high_bank_weight: f64,
    #[arg(long)]
    pub acyclic: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}
