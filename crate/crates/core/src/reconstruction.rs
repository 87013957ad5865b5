//! Partial reconstruction of unobserved credit from reported totals.
//!
//! The observed network typically lists only each firm's largest creditors
//! while the firm table reports total inter-firm borrowing `F_i`. The gap
//! `R_i = F_i - sum_j L_ij` is spread over the empty creditor slots of row
//! `i` in one of two ways:
//!
//! * full: uniformly over every empty off-diagonal slot;
//! * sparse: over the fewest randomly chosen empty slots such that each new
//!   entry stays strictly below the row's smallest observed credit.
//!
//! Observed entries are never modified.

use std::collections::HashSet;

use log::warn;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, FirmId};
use crate::sparse::CsrMatrix;
use crate::stats;
use crate::streamness::{compute_streamness, StreamnessResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    /// Unobserved credit per firm, clamped at zero.
    pub r: Vec<f64>,
    /// Firms whose observed credit exceeds their reported total.
    pub clamped_firms: Vec<FirmId>,
}

pub fn residual(net: &CreditNetwork) -> Result<Residual> {
    if net.reported_totals().iter().all(Option::is_none) {
        return Err(Error::MissingTotals);
    }
    let mut r = vec![0.0; net.len()];
    let mut clamped_firms = Vec::new();
    for (i, total) in net.reported_totals().iter().enumerate() {
        if let Some(f) = total {
            let raw = f - net.interfirm_borrowing(i);
            if raw < 0.0 {
                clamped_firms.push(net.firms()[i].clone());
            } else {
                r[i] = raw;
            }
        }
    }
    Ok(Residual { r, clamped_firms })
}

/// Keeps each firm's `k` largest creditors (ties go to the earlier lender).
/// Firms without a reported total get one equal to their full inter-firm
/// borrowing before truncation.
pub fn truncate_top_k(net: &CreditNetwork, k: usize) -> Result<CreditNetwork> {
    let credit = net.credit();
    let mut triplets = Vec::new();
    let mut totals = net.reported_totals().to_vec();
    for i in 0..net.len() {
        let mut row: Vec<(usize, f64)> = credit.row(i).collect();
        if totals[i].is_none() {
            totals[i] = Some(row.iter().map(|&(_, v)| v).sum());
        }
        row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        triplets.extend(row.into_iter().take(k).map(|(j, v)| (i, j, v)));
    }
    net.with_credit(CsrMatrix::from_triplets(net.len(), triplets))?
        .with_reported_totals(totals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReconstructionMethod {
    Full,
    Sparse { seed: u64 },
}

/// How one row's residual was placed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowAllocation {
    pub firm: FirmId,
    pub residual: f64,
    /// Smallest positive observed credit in the row.
    pub min_observed: Option<f64>,
    /// Slots the rule asks for: all empty slots (full) or the minimal count (sparse).
    pub required_slots: usize,
    pub slots_used: usize,
    pub per_slot: f64,
    pub warning: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub method: ReconstructionMethod,
    pub network: CreditNetwork,
    pub residual: Residual,
    /// One entry per row that received credit.
    pub rows: Vec<RowAllocation>,
}

/// Smallest `n >= 1` with `residual / n < min_observed`.
pub fn required_slots(residual: f64, min_observed: f64) -> usize {
    assert!(residual > 0.0 && min_observed > 0.0);
    let mut n = ((residual / min_observed).floor() as usize).saturating_add(1).max(1);
    while residual / n as f64 >= min_observed {
        n += 1;
    }
    while n > 1 && residual / ((n - 1) as f64) < min_observed {
        n -= 1;
    }
    n
}

fn empty_slots(credit: &CsrMatrix, i: usize) -> Vec<usize> {
    let taken: HashSet<usize> = credit.row(i).map(|(j, _)| j).collect();
    (0..credit.dim()).filter(|&j| j != i && !taken.contains(&j)).collect()
}

fn min_observed(credit: &CsrMatrix, i: usize) -> Option<f64> {
    credit
        .row(i)
        .map(|(_, v)| v)
        .filter(|&v| v > 0.0)
        .min_by(f64::total_cmp)
}

/// Row index, chosen slots and bookkeeping for one filled row.
type PlacedRow = (usize, Vec<usize>, RowAllocation);

fn reconstruct(
    net: &CreditNetwork,
    method: ReconstructionMethod,
    place: impl Fn(usize, f64, Option<f64>, Vec<usize>) -> Result<(Vec<usize>, RowAllocation)> + Sync,
) -> Result<Reconstruction> {
    if net.len() < 2 {
        return Err(Error::InvalidArgument(
            "reconstruction needs at least two firms".into(),
        ));
    }
    let res = residual(net)?;
    let credit = net.credit();
    let placed: Vec<Result<Option<PlacedRow>>> = (0..net.len())
        .into_par_iter()
        .map(|i| {
            let r = res.r[i];
            if r <= 0.0 {
                return Ok(None);
            }
            let slots = empty_slots(credit, i);
            if slots.is_empty() {
                return Err(Error::NoZeroSlots(net.firms()[i].clone()));
            }
            let (chosen, alloc) = place(i, r, min_observed(credit, i), slots)?;
            Ok(Some((i, chosen, alloc)))
        })
        .collect();
    let mut triplets: Vec<(usize, usize, f64)> = credit.triplets().collect();
    let mut rows = Vec::new();
    for item in placed {
        if let Some((i, chosen, alloc)) = item? {
            if let Some(w) = &alloc.warning {
                warn!("{}: {w}", alloc.firm);
            }
            triplets.extend(chosen.into_iter().map(|j| (i, j, alloc.per_slot)));
            rows.push(alloc);
        }
    }
    Ok(Reconstruction {
        method,
        network: net.with_credit(CsrMatrix::from_triplets(net.len(), triplets))?,
        residual: res,
        rows,
    })
}

/// Spreads each residual uniformly over all empty slots of its row.
pub fn reconstruct_full(net: &CreditNetwork) -> Result<Reconstruction> {
    reconstruct(net, ReconstructionMethod::Full, |i, r, min_obs, slots| {
        let z = slots.len();
        let alloc = RowAllocation {
            firm: net.firms()[i].clone(),
            residual: r,
            min_observed: min_obs,
            required_slots: z,
            slots_used: z,
            per_slot: r / z as f64,
            warning: None,
        };
        Ok((slots, alloc))
    })
}

/// Spreads each residual over the minimal number of randomly chosen empty
/// slots. Row `i` draws from its own ChaCha stream `(seed, i)`, so the
/// result does not depend on scheduling.
pub fn reconstruct_sparse(net: &CreditNetwork, seed: u64) -> Result<Reconstruction> {
    reconstruct(net, ReconstructionMethod::Sparse { seed }, |i, r, min_obs, slots| {
        let firm = net.firms()[i].clone();
        let (required, warning) = match min_obs {
            Some(m) => (required_slots(r, m), None),
            None => (
                slots.len(),
                Some("no observed creditor; residual spread over all empty slots".to_string()),
            ),
        };
        let warning = match (warning, required > slots.len()) {
            (None, true) => Some(format!(
                "needs {required} slots but only {} are empty; using all",
                slots.len()
            )),
            (w, _) => w,
        };
        let take = required.min(slots.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut picked: Vec<usize> = index::sample(&mut rng, slots.len(), take)
            .into_iter()
            .map(|k| slots[k])
            .collect();
        picked.sort_unstable();
        let alloc = RowAllocation {
            firm,
            residual: r,
            min_observed: min_obs,
            required_slots: required,
            slots_used: take,
            per_slot: r / take as f64,
            warning,
        };
        Ok((picked, alloc))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    pub method: ReconstructionMethod,
    #[serde(skip)]
    pub network: CreditNetwork,
    pub ds_observed: StreamnessResult,
    pub ds_reconstructed: StreamnessResult,
    /// Firms defined in both networks, in observed order.
    pub common_firms: Vec<FirmId>,
    /// Firms defined in only one of the two networks.
    pub dropped: Vec<FirmId>,
    pub spearman: f64,
    pub kendall: f64,
    pub pearson: f64,
}

/// DebtStreamness on the observed and the reconstructed network, and their
/// rank and linear correlations over the firms defined in both.
pub fn compare_reconstructions(
    observed: &CreditNetwork,
    reconstruction: &Reconstruction,
) -> Result<ReconstructionReport> {
    compare_networks(observed, &reconstruction.network, reconstruction.method)
}

pub fn compare_networks(
    observed: &CreditNetwork,
    reconstructed: &CreditNetwork,
    method: ReconstructionMethod,
) -> Result<ReconstructionReport> {
    let ds_observed = compute_streamness(observed)?;
    let ds_reconstructed = compute_streamness(reconstructed)?;
    let rec_index: std::collections::HashMap<&FirmId, usize> = ds_reconstructed
        .firms
        .iter()
        .enumerate()
        .map(|(k, f)| (f, k))
        .collect();
    let mut common_firms = Vec::new();
    let mut dropped = Vec::new();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (k, f) in ds_observed.firms.iter().enumerate() {
        match rec_index.get(f) {
            Some(&r) => {
                common_firms.push(f.clone());
                x.push(ds_observed.ds[k]);
                y.push(ds_reconstructed.ds[r]);
            }
            None => dropped.push(f.clone()),
        }
    }
    let obs_set: HashSet<&FirmId> = ds_observed.firms.iter().collect();
    dropped.extend(
        ds_reconstructed
            .firms
            .iter()
            .filter(|f| !obs_set.contains(f))
            .cloned(),
    );
    if common_firms.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(ReconstructionReport {
        method,
        network: reconstructed.clone(),
        spearman: stats::spearman(&x, &y)?,
        kendall: stats::kendall(&x, &y)?,
        pearson: stats::pearson(&x, &y)?,
        ds_observed,
        ds_reconstructed,
        common_firms,
        dropped,
    })
}
