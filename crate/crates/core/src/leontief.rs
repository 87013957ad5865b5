//! Solver for `(I - A) x = 1` with `A` non-negative and sub-stochastic.
//!
//! The system is split into strongly connected blocks and solved creditors
//! first, so each block only sees already-final values from the blocks it
//! points to. Small blocks get a dense LU; large ones are iterated in place
//! (`x_i <- (1 + sum_j A_ij x_j) / (1 - A_ii)`), which contracts whenever
//! the spectral radius of the block is below one.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Largest strongly connected block solved by dense LU.
pub const DENSE_BLOCK_LIMIT: usize = 256;

/// Acceptance threshold on the relative residual of a solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const MAX_SWEEPS: usize = 200_000;

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    /// `max_i |1 + (A x)_i - x_i| / max(1, max_i |x_i|)`
    pub residual: f64,
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let worst = ax
        .iter()
        .zip(x)
        .map(|(axi, xi)| (1.0 + axi - xi).abs())
        .fold(0.0f64, f64::max);
    if worst.is_nan() {
        f64::INFINITY
    } else {
        worst / scale
    }
}

/// Solves `(I - A) x = 1`.
pub fn solve_unit_demand(a: &CsrMatrix) -> Result<Solution> {
    let n = a.dim();
    if n == 0 {
        return Ok(Solution {
            x: Vec::new(),
            residual: 0.0,
        });
    }
    let mut graph: DiGraph<(), ()> = DiGraph::from_edges(
        a.triplets()
            .filter(|&(i, j, _)| i != j)
            .map(|(i, j, _)| (i as u32, j as u32)),
    );
    // from_edges sizes the graph by the largest index seen
    while graph.node_count() < n {
        graph.add_node(());
    }

    let mut x = vec![f64::NAN; n];
    let mut solved = vec![false; n];
    let mut local = vec![usize::MAX; n];
    // Blocks come in reverse topological order: every block comes
    // after the blocks it borrows from.
    for block in kosaraju_scc(&graph) {
        let members: Vec<usize> = block.iter().map(|v| v.index()).collect();
        for (k, &i) in members.iter().enumerate() {
            local[i] = k;
        }
        let mut rhs = vec![1.0; members.len()];
        for (k, &i) in members.iter().enumerate() {
            for (j, v) in a.row(i) {
                if local[j] == usize::MAX {
                    debug_assert!(solved[j], "block order violated");
                    rhs[k] += v * x[j];
                }
            }
        }
        let values = if members.len() == 1 {
            let i = members[0];
            let pivot = 1.0 - a.get(i, i);
            if pivot <= 0.0 {
                return Err(Error::SingularSystem {
                    residual: f64::INFINITY,
                });
            }
            vec![rhs[0] / pivot]
        } else if members.len() <= DENSE_BLOCK_LIMIT {
            dense_block(a, &members, &local, rhs)?
        } else {
            iterate_block(a, &members, &local, rhs)?
        };
        for (k, &i) in members.iter().enumerate() {
            x[i] = values[k];
            solved[i] = true;
        }
        for &i in &members {
            local[i] = usize::MAX;
        }
    }

    let residual = relative_residual(a, &x);
    if !(residual <= RESIDUAL_TOLERANCE) || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { residual });
    }
    Ok(Solution { x, residual })
}

fn dense_block(a: &CsrMatrix, members: &[usize], local: &[usize], rhs: Vec<f64>) -> Result<Vec<f64>> {
    let m = members.len();
    let mut mat = DMatrix::<f64>::identity(m, m);
    for (k, &i) in members.iter().enumerate() {
        for (j, v) in a.row(i) {
            let lj = local[j];
            if lj != usize::MAX {
                mat[(k, lj)] -= v;
            }
        }
    }
    mat.lu()
        .solve(&DVector::from_vec(rhs))
        .map(|v| v.as_slice().to_vec())
        .ok_or(Error::SingularSystem {
            residual: f64::INFINITY,
        })
}

fn iterate_block(a: &CsrMatrix, members: &[usize], local: &[usize], rhs: Vec<f64>) -> Result<Vec<f64>> {
    let mut x = rhs.clone();
    for _ in 0..MAX_SWEEPS {
        let mut change = 0.0f64;
        let mut scale = 0.0f64;
        for (k, &i) in members.iter().enumerate() {
            let mut acc = rhs[k];
            let mut diag = 0.0;
            for (j, v) in a.row(i) {
                let lj = local[j];
                if lj == k {
                    diag = v;
                } else if lj != usize::MAX {
                    acc += v * x[lj];
                }
            }
            let pivot = 1.0 - diag;
            if pivot <= 0.0 {
                return Err(Error::SingularSystem {
                    residual: f64::INFINITY,
                });
            }
            let next = acc / pivot;
            change = change.max((next - x[k]).abs());
            scale = scale.max(next.abs());
            x[k] = next;
        }
        if !scale.is_finite() {
            break;
        }
        if change <= 1e-15 * scale.max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::SingularSystem {
        residual: f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cycle_closed_form() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 1, 0.9), (1, 0, 0.9)]);
        let s = solve_unit_demand(&a).unwrap();
        assert!((s.x[0] - 10.0).abs() < 1e-12);
        assert!((s.x[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_entries_allowed() {
        let a = CsrMatrix::from_triplets(1, vec![(0, 0, 0.9)]);
        let s = solve_unit_demand(&a).unwrap();
        assert!((s.x[0] - 10.0).abs() < 1e-12);
        let closed = CsrMatrix::from_triplets(1, vec![(0, 0, 1.0)]);
        assert!(matches!(solve_unit_demand(&closed), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn closed_loop_is_singular() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 1, 1.0), (1, 0, 1.0)]);
        assert!(matches!(solve_unit_demand(&a), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn iterative_and_dense_paths_agree() {
        // ring of 600 nodes: each keeps 30% leakage, so x = 1 / 0.3 everywhere
        let n = 600;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, (i + 1) % n, 0.5));
            t.push((i, (i + 7) % n, 0.2));
        }
        let a = CsrMatrix::from_triplets(n, t);
        let s = solve_unit_demand(&a).unwrap();
        for v in &s.x {
            assert!((v - 1.0 / 0.3).abs() < 1e-9);
        }
        assert!(s.residual < 1e-12);
    }
}
