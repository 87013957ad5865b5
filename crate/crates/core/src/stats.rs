//! Correlation coefficients, histograms and log-normal fitting.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DegenerateInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 observations, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value".into()));
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = shared;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with mid-ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
        .map_err(|_| Error::DegenerateInput("all values tied".into()))
}

/// Pair counts behind Kendall's tau-b.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairCounts {
    pub concordant: i64,
    pub discordant: i64,
    /// Pairs tied in x but not in y.
    pub tied_x: i64,
    /// Pairs tied in y but not in x.
    pub tied_y: i64,
    pub tied_both: i64,
}

impl PairCounts {
    /// `(C - D) / sqrt((C + D + Ty) (C + D + Tx))`
    pub fn tau_b(&self) -> Result<f64> {
        let untied_x = self.concordant + self.discordant + self.tied_y;
        let untied_y = self.concordant + self.discordant + self.tied_x;
        if untied_x == 0 || untied_y == 0 {
            return Err(Error::DegenerateInput("all values tied".into()));
        }
        let num = (self.concordant - self.discordant) as f64;
        Ok((num / ((untied_x as f64) * (untied_y as f64)).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Counts concordant, discordant and tied pairs in O(n log n): sort by
/// (x, y), count ties, then count inversions of y with a merge sort.
pub fn pair_counts(x: &[f64], y: &[f64]) -> PairCounts {
    let n = x.len();
    let pairs_in = |run: i64| run * (run - 1) / 2;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let mut ties_x = 0i64; // includes joint ties
    let mut ties_xy = 0i64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[order[j]] == x[order[i]] {
            j += 1;
        }
        ties_x += pairs_in((j - i) as i64);
        let mut k = i;
        while k < j {
            let mut m = k + 1;
            while m < j && y[order[m]] == y[order[k]] {
                m += 1;
            }
            ties_xy += pairs_in((m - k) as i64);
            k = m;
        }
        i = j;
    }

    let mut ys: Vec<f64> = order.iter().map(|&k| y[k]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut ties_y = 0i64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        ties_y += pairs_in((j - i) as i64);
        i = j;
    }

    let total = pairs_in(n as i64);
    let untied = total - ties_x - ties_y + ties_xy;
    let discordant = swaps;
    PairCounts {
        concordant: untied - discordant,
        discordant,
        tied_x: ties_x - ties_xy,
        tied_y: ties_y - ties_xy,
        tied_both: ties_xy,
    }
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> i64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(left, bl) + merge_count(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf[k] = v[j];
            count += (mid - i) as i64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}

/// Kendall's tau-b.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pair_counts(x, y).tau_b()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Left-closed bins `[origin + k w, origin + (k+1) w)`; only non-empty bins
/// are returned, in increasing order. Values below `origin` land in the
/// first bin.
pub fn histogram(values: &[f64], origin: f64, width: f64) -> Result<Vec<HistogramBin>> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::InvalidArgument("bin width must be positive".into()));
    }
    let mut counts = std::collections::BTreeMap::<u64, usize>::new();
    for &v in values {
        if !v.is_finite() {
            return Err(Error::DegenerateInput("non-finite value".into()));
        }
        let k = ((v - origin) / width).floor().max(0.0) as u64;
        *counts.entry(k).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(k, count)| HistogramBin {
            lower: origin + k as f64 * width,
            upper: origin + (k + 1) as f64 * width,
            count,
        })
        .collect())
}

/// Maximum-likelihood log-normal parameters. `sigma` is the population
/// standard deviation of the logs (divisor n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogNormalFit {
    pub mu: f64,
    pub sigma: f64,
    pub n_samples: usize,
}

pub fn fit_lognormal(samples: &[f64]) -> Result<LogNormalFit> {
    if let Some((index, &value)) = samples
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
    {
        return Err(Error::NonPositiveSample { index, value });
    }
    if samples.len() < 2 {
        return Err(Error::DegenerateInput("need at least 2 samples".into()));
    }
    let n = samples.len() as f64;
    let logs: Vec<f64> = samples.iter().map(|v| v.ln()).collect();
    let mu = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if !(sigma > 0.0) {
        return Err(Error::DegenerateInput("all samples equal; sigma would be 0".into()));
    }
    Ok(LogNormalFit {
        mu,
        sigma,
        n_samples: samples.len(),
    })
}
