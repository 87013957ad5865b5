//! Seeded synthetic credit networks for desk-scale experiments.
//!
//! Creditors are drawn uniformly without replacement with a Poisson
//! out-degree, loan sizes are log-normal, and each firm's bank share comes
//! from a two-component Beta mixture (one mode near 0, one near 1). Bank
//! borrowing is then set so the firm's bank share matches its draw.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, LogNormal, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{CreditNetwork, FirmId, FirmRecord, NetworkBuilder};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub n: usize,
    pub mean_out_degree: f64,
    pub weight_mu: f64,
    pub weight_sigma: f64,
    /// Beta shapes of the low-bank-share component; the high component
    /// uses them swapped.
    pub bank_share_alpha: f64,
    pub bank_share_beta: f64,
    /// Probability of drawing from the high-bank-share component.
    pub high_bank_weight: f64,
    /// Fraction of firms paired into mutual lending relationships.
    pub loop_fraction: f64,
    /// Only lend from lower to higher indices, giving a DAG.
    pub acyclic: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 200,
            mean_out_degree: 2.5,
            weight_mu: 11.0,
            weight_sigma: 2.0,
            bank_share_alpha: 1.2,
            bank_share_beta: 6.0,
            high_bank_weight: 0.55,
            loop_fraction: 0.05,
            acyclic: false,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if !(self.mean_out_degree >= 0.0) || !self.mean_out_degree.is_finite() {
            return bad("mean_out_degree must be finite and non-negative");
        }
        if !(self.weight_sigma > 0.0) || !self.weight_mu.is_finite() || !self.weight_sigma.is_finite() {
            return bad("weight_sigma must be positive and weight_mu finite");
        }
        if !(self.bank_share_alpha > 0.0 && self.bank_share_beta > 0.0) {
            return bad("bank-share shape parameters must be positive");
        }
        if !(0.0..=1.0).contains(&self.high_bank_weight) {
            return bad("high_bank_weight must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.loop_fraction) {
            return bad("loop_fraction must lie in [0, 1]");
        }
        if self.acyclic && self.loop_fraction > 0.0 {
            return bad("acyclic wiring cannot host 2-cycles; set loop_fraction to 0");
        }
        Ok(())
    }
}

/// Firm identifiers `f000000`, `f000001`, ...
pub fn firm_name(i: usize, n: usize) -> String {
    let width = (n.max(2) - 1).to_string().len().max(6);
    format!("f{i:0width$}")
}

pub fn generate(config: &SynthConfig) -> Result<CreditNetwork> {
    config.validate()?;
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let weight = LogNormal::new(config.weight_mu, config.weight_sigma)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let degree = if config.mean_out_degree > 0.0 {
        Some(Poisson::new(config.mean_out_degree).map_err(|e| Error::InvalidConfig(e.to_string()))?)
    } else {
        None
    };
    let low = Beta::new(config.bank_share_alpha, config.bank_share_beta)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let high = Beta::new(config.bank_share_beta, config.bank_share_alpha)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    // creditors[i] holds (lender, amount), kept sorted by lender
    let mut creditors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in creditors.iter_mut().enumerate() {
        let pool = if config.acyclic { i } else { n - 1 };
        let k = match &degree {
            Some(d) => (d.sample(&mut rng) as usize).min(pool),
            None => 0,
        };
        let mut picked: Vec<usize> = index::sample(&mut rng, pool, k)
            .into_iter()
            // skip over i itself in the cyclic pool
            .map(|j| if !config.acyclic && j >= i { j + 1 } else { j })
            .collect();
        picked.sort_unstable();
        *row = picked.into_iter().map(|j| (j, weight.sample(&mut rng))).collect();
    }

    let pairs = ((config.loop_fraction * n as f64) / 2.0).floor() as usize;
    if pairs > 0 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for pair in order.chunks_exact(2).take(pairs) {
            let (a, b) = (pair[0], pair[1]);
            for (x, y) in [(a, b), (b, a)] {
                if let Err(pos) = creditors[x].binary_search_by_key(&y, |&(j, _)| j) {
                    let w = weight.sample(&mut rng);
                    creditors[x].insert(pos, (y, w));
                }
            }
        }
    }

    let mut builder = NetworkBuilder::new();
    for (i, row) in creditors.iter().enumerate() {
        let interfirm: f64 = row.iter().map(|&(_, v)| v).sum();
        let share = if rng.random::<f64>() < config.high_bank_weight {
            high.sample(&mut rng)
        } else {
            low.sample(&mut rng)
        };
        let bank = if row.is_empty() {
            weight.sample(&mut rng)
        } else {
            let s = share.clamp(0.0, 0.999);
            interfirm * s / (1.0 - s)
        };
        builder.add_firm(FirmRecord::new(FirmId::new(firm_name(i, n))?, bank))?;
    }
    let ids: Vec<FirmId> = (0..n).map(|i| FirmId::new(firm_name(i, n))).collect::<Result<_>>()?;
    for (i, row) in creditors.iter().enumerate() {
        for &(j, w) in row {
            builder.add_loan(&ids[i], &ids[j], w)?;
        }
    }
    Ok(builder.build())
}
