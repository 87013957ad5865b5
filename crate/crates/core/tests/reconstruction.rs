use debtstream_core::reconstruction::{
    compare_reconstructions, reconstruct_full, reconstruct_sparse, residual, truncate_top_k,
};
use debtstream_core::synth::{generate, SynthConfig};
use debtstream_core::CreditNetwork;

fn truncated(seed: u64) -> (CreditNetwork, CreditNetwork) {
    let net = generate(&SynthConfig {
        n: 150,
        mean_out_degree: 5.0,
        seed,
        ..Default::default()
    })
    .unwrap();
    let cut = truncate_top_k(&net, 3).unwrap();
    (net, cut)
}

fn assert_conserved(cut: &CreditNetwork, rebuilt: &CreditNetwork) {
    for i in 0..cut.len() {
        let f = cut.reported_totals()[i].unwrap();
        let got = rebuilt.interfirm_borrowing(i);
        assert!((got - f).abs() <= 1e-9 * f.max(1.0), "{}: {got} vs {f}", cut.firms()[i]);
    }
}

#[test]
fn both_methods_restore_reported_totals() {
    for seed in 1..=10 {
        let (_, cut) = truncated(seed);
        assert!(residual(&cut).unwrap().clamped_firms.is_empty());
        assert_conserved(&cut, &reconstruct_full(&cut).unwrap().network);
        assert_conserved(&cut, &reconstruct_sparse(&cut, seed).unwrap().network);
    }
}

#[test]
fn sparse_rows_use_the_minimal_slot_count() {
    for seed in 1..=10 {
        let (_, cut) = truncated(seed);
        let rec = reconstruct_sparse(&cut, 99).unwrap();
        for row in &rec.rows {
            let Some(m) = row.min_observed else { continue };
            let n = row.required_slots as f64;
            assert!(row.residual / n < m);
            if row.required_slots > 1 {
                assert!(m <= row.residual / (n - 1.0));
            }
            if row.warning.is_none() {
                assert_eq!(row.slots_used, row.required_slots);
            }
        }
    }
}

#[test]
fn observed_entries_survive_reconstruction() {
    let (_, cut) = truncated(3);
    for rec in [reconstruct_full(&cut).unwrap(), reconstruct_sparse(&cut, 1).unwrap()] {
        for (i, j, v) in cut.credit().triplets() {
            assert_eq!(rec.network.credit().get(i, j), v);
        }
    }
}

#[test]
fn sparse_is_reproducible_per_seed() {
    let (_, cut) = truncated(5);
    let a = reconstruct_sparse(&cut, 42).unwrap().network;
    let b = reconstruct_sparse(&cut, 42).unwrap().network;
    let c = reconstruct_sparse(&cut, 43).unwrap().network;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn reconstructions_track_the_complete_network() {
    let (full, cut) = truncated(8);
    let rec = reconstruct_sparse(&cut, 8).unwrap();
    let report = compare_reconstructions(&full, &rec).unwrap();
    assert!(report.common_firms.len() > 100);
    assert!(report.spearman > 0.5, "spearman {}", report.spearman);
    assert!(report.kendall > 0.3, "kendall {}", report.kendall);
}
