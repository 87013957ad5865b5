#![allow(dead_code)]

use debtstream_core::network::{CreditNetwork, FirmRecord, NetworkBuilder};
use debtstream_core::FirmId;
use proptest::prelude::*;

pub fn name(i: usize) -> FirmId {
    FirmId::new(format!("n{i}")).unwrap()
}

/// Network on firms `n0..n{size-1}`; self loans in `edges` are skipped.
pub fn build(size: usize, edges: &[(usize, usize, f64)], bank: &[f64]) -> CreditNetwork {
    let mut b = NetworkBuilder::new();
    for i in 0..size {
        b.add_firm(FirmRecord::new(name(i), bank[i])).unwrap();
    }
    for &(i, j, v) in edges {
        if i != j && v > 0.0 {
            b.add_loan(&name(i), &name(j), v).unwrap();
        }
    }
    b.build()
}

/// Small networks with a few bank-less firms and arbitrary wiring.
pub fn arb_network(max_n: usize) -> impl Strategy<Value = CreditNetwork> {
    (2..=max_n).prop_flat_map(|n| {
        let edges = prop::collection::vec((0..n, 0..n, 0.01f64..1e4), 0..=n * 3);
        let bank = prop::collection::vec(
            prop_oneof![2 => Just(0.0), 3 => 0.01f64..1e4],
            n,
        );
        (Just(n), edges, bank).prop_map(|(n, e, b)| build(n, &e, &b))
    })
}

pub fn max_rel_dev(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Transitive closure of the lending relation: `reach[i][j]` when `i`
/// borrows from `j` through a chain of at least one loan.
pub fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for &(i, j) in edges {
        reach[i][j] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach
}
