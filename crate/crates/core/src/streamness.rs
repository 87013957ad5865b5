//! DebtStreamness: a firm's average distance from the banking sector along
//! credit chains.
//!
//! Three routes are provided. [`solve_streamness`] solves
//! `DS = 1 + A DS` exactly per weakly connected component.
//! [`series_streamness`] sums the path expansion
//! `DS_i = sum_k k [ell^(k-1) B]_i / D_i` term by term. [`resummed_forms`]
//! evaluates the two resummed forms `[(I - ell)^-2 B]_i / D_i` and
//! `[(I - ell)^-1 D]_i / D_i` with dense LU. All three agree on pruned
//! networks and serve as cross-checks for each other.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::leontief;
use crate::network::{components, prune_undefined, share_matrices, undefined_firms, CreditNetwork, FirmId};

/// Default truncation tolerance for [`series_streamness`].
pub const SERIES_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct StreamnessResult {
    /// Firms with a defined DebtStreamness, in network order.
    pub firms: Vec<FirmId>,
    pub ds: Vec<f64>,
    /// `B_i / D_i` for each firm in `firms`.
    pub bank_share: Vec<f64>,
    /// Component id of each firm; ids index `component_means`.
    pub component: Vec<usize>,
    pub component_means: Vec<f64>,
    /// Firms dropped because their DebtStreamness is undefined.
    pub excluded: Vec<FirmId>,
    /// Worst relative residual of `(I - A) DS = 1` over all components.
    pub solver_residual: f64,
    /// Number of path-series terms summed, when computed by the series.
    pub series_terms: Option<usize>,
}

impl StreamnessResult {
    pub fn len(&self) -> usize {
        self.ds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ds.is_empty()
    }

    pub fn get(&self, firm: &str) -> Option<f64> {
        self.firms
            .iter()
            .position(|f| f.as_str() == firm)
            .map(|i| self.ds[i])
    }

    pub fn mean(&self) -> f64 {
        if self.ds.is_empty() {
            return f64::NAN;
        }
        self.ds.iter().sum::<f64>() / self.ds.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.ds.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FirmId, f64)> {
        self.firms.iter().zip(self.ds.iter().copied())
    }
}

fn ensure_pruned(net: &CreditNetwork) -> Result<()> {
    if net.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    if let Some(&i) = undefined_firms(net).first() {
        return Err(Error::NotPruned(net.firms()[i].clone()));
    }
    Ok(())
}

fn assemble(net: &CreditNetwork, ds: Vec<f64>, solver_residual: f64, series_terms: Option<usize>) -> StreamnessResult {
    let comps = components(net);
    let mut component = vec![0; net.len()];
    let mut component_means = Vec::with_capacity(comps.len());
    for (c, comp) in comps.iter().enumerate() {
        let mut sum = 0.0;
        for &i in &comp.members {
            component[i] = c;
            sum += ds[i];
        }
        component_means.push(sum / comp.len() as f64);
    }
    StreamnessResult {
        firms: net.firms().to_vec(),
        ds,
        bank_share: bank_share(net),
        component,
        component_means,
        excluded: Vec::new(),
        solver_residual,
        series_terms,
    }
}

/// Solves `(I - A) DS = 1` component by component on a pruned network.
pub fn solve_streamness(net: &CreditNetwork) -> Result<StreamnessResult> {
    ensure_pruned(net)?;
    let shares = share_matrices(net)?;
    let comps = components(net);
    let solved: Vec<Result<(Vec<usize>, leontief::Solution)>> = comps
        .par_iter()
        .map(|comp| {
            let local = shares.a.submatrix(&comp.members);
            leontief::solve_unit_demand(&local).map(|s| (comp.members.clone(), s))
        })
        .collect();
    let mut ds = vec![f64::NAN; net.len()];
    let mut residual = 0.0f64;
    for item in solved {
        let (members, sol) = item?;
        residual = residual.max(sol.residual);
        for (k, i) in members.into_iter().enumerate() {
            ds[i] = sol.x[k];
        }
    }
    Ok(assemble(net, ds, residual, None))
}

/// Prunes undefined firms, then solves. The removed firms are listed in
/// `excluded`.
pub fn compute_streamness(net: &CreditNetwork) -> Result<StreamnessResult> {
    let (pruned, excluded) = prune_undefined(net)?;
    let mut result = solve_streamness(&pruned)?;
    result.excluded = excluded;
    Ok(result)
}

/// Sums the path expansion until a term's max norm drops below `tol`, or
/// the walks die out on an acyclic network.
pub fn series_streamness(net: &CreditNetwork, max_terms: usize, tol: f64) -> Result<StreamnessResult> {
    if max_terms == 0 || !(tol > 0.0) {
        return Err(Error::InvalidArgument(
            "series needs max_terms >= 1 and tol > 0".into(),
        ));
    }
    ensure_pruned(net)?;
    let shares = share_matrices(net)?;
    let debt = &shares.debt;
    // v_k = ell^(k-1) B, in currency units
    let mut v = net.bank().to_vec();
    let mut ds = vec![0.0; net.len()];
    let mut last_norm = f64::INFINITY;
    for k in 1..=max_terms {
        let weight = k as f64;
        let mut norm = 0.0f64;
        for i in 0..ds.len() {
            let term = weight * v[i] / debt[i];
            ds[i] += term;
            norm = norm.max(term);
        }
        last_norm = norm;
        let done = norm < tol || {
            v = shares.ell.mul_vec(&v);
            v.iter().all(|&x| x == 0.0)
        };
        if done {
            let residual = leontief::relative_residual(&shares.a, &ds);
            return Ok(assemble(net, ds, residual, Some(k)));
        }
    }
    Err(Error::NoConvergence {
        terms: max_terms,
        term_norm: last_norm,
    })
}

/// The two resummed path-series forms, evaluated independently of
/// [`solve_streamness`].
#[derive(Debug, Clone)]
pub struct ResummedForms {
    /// `[(I - ell)^-2 B]_i / D_i`
    pub squared_inverse: Vec<f64>,
    /// `[(I - ell)^-1 D]_i / D_i`
    pub debt_inverse: Vec<f64>,
}

pub fn resummed_forms(net: &CreditNetwork) -> Result<ResummedForms> {
    ensure_pruned(net)?;
    let shares = share_matrices(net)?;
    let n = net.len();
    let mut squared_inverse = vec![f64::NAN; n];
    let mut debt_inverse = vec![f64::NAN; n];
    let singular = || Error::SingularSystem {
        residual: f64::INFINITY,
    };
    for comp in components(net) {
        let m = &comp.members;
        let ell = shares.ell.submatrix(m).to_dense();
        let k = m.len();
        let lu = (nalgebra::DMatrix::<f64>::identity(k, k) - ell).lu();
        let b = DVector::from_iterator(k, m.iter().map(|&i| net.bank()[i]));
        let d = DVector::from_iterator(k, m.iter().map(|&i| shares.debt[i]));
        let once = lu.solve(&b).ok_or_else(singular)?;
        let twice = lu.solve(&once).ok_or_else(singular)?;
        let via_debt = lu.solve(&d).ok_or_else(singular)?;
        for (local, &i) in m.iter().enumerate() {
            squared_inverse[i] = twice[local] / shares.debt[i];
            debt_inverse[i] = via_debt[local] / shares.debt[i];
        }
    }
    Ok(ResummedForms {
        squared_inverse,
        debt_inverse,
    })
}

/// Fraction of each firm's total debt borrowed directly from banks.
pub fn bank_share(net: &CreditNetwork) -> Vec<f64> {
    net.total_debt()
        .iter()
        .zip(net.bank())
        .map(|(&d, &b)| if d > 0.0 { b / d } else { 0.0 })
        .collect()
}
