//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line.
//!
//! Criteria 7 and 8 encode the published table/figure claims verbatim. Two
//! of those claims are not reproducible under this pipeline (two table rows
//! are configuration twins, so their measured losses tie exactly); the tests
//! state the claims faithfully and are expected to stay red. See the README
//! section on known deviations.

use std::process::Command;

use beamsim::feedback::{
    expected_qe_closed, expected_qe_numeric, feedback_bits, ks_distance, qe_case_bound, qe_ccdf,
    sample_qe_isotropic, QeCase,
};
use beamsim::harness::{reproduce_table1, run, sweep_snr, RunConfig, Scheme, SweepSetting};
use beamsim::numerics::{dft_matrix, inner_product, vector_norm};
use beamsim::precoding::zf_precoder;
use beamsim::rng::Purpose;

fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {criterion} ({name}): {detail}");
    assert!(pass, "criterion {criterion} ({name}): {detail}");
}

#[test]
fn criterion_1_feedback_bit_reproduction() {
    let n1 = feedback_bits(12.0, 16, 2).unwrap();
    let n2 = feedback_bits(12.0, 16, 3).unwrap();
    let n3 = feedback_bits(12.0, 16, 1).unwrap();
    report(
        1,
        "feedback bits",
        (n1, n2, n3) == (7, 15, 0),
        &format!("bit rule gives N = {n1}/{n2}/{n3}, expected 7/15/0"),
    );
}

#[test]
fn criterion_2_qe_closed_form_vs_oracle() {
    let mut worst = 0.0f64;
    for l in [2usize, 3] {
        for n in 0..=15u32 {
            let gap = (expected_qe_closed(l, n).unwrap() - expected_qe_numeric(l, n).unwrap())
                .abs();
            worst = worst.max(gap);
        }
    }
    let mut worst_identity = 0.0f64;
    for n in 0..=15u32 {
        let gap =
            (expected_qe_closed(2, n).unwrap() - 1.0 / ((1u64 << n) as f64 + 1.0)).abs();
        worst_identity = worst_identity.max(gap);
    }
    report(
        2,
        "QE closed form vs oracle",
        worst <= 1e-9 && worst_identity <= 1e-12,
        &format!(
            "max |closed - numeric| = {worst:.3e} (tol 1e-9), max L=2 identity gap = \
             {worst_identity:.3e} (tol 1e-12)"
        ),
    );
}

#[test]
fn criterion_3_case_bound_inequalities() {
    let mut ok = true;
    for n in 1..=20u32 {
        ok &= expected_qe_closed(2, n).unwrap() < qe_case_bound(2, n, QeCase::I).unwrap();
        ok &= expected_qe_closed(3, n).unwrap() < qe_case_bound(3, n, QeCase::II).unwrap();
    }
    report(
        3,
        "bound inequalities",
        ok,
        "E[Z](2,N) < 2^-N and E[Z](3,N) < 2^-N/2 strict for N = 1..20",
    );
}

#[test]
fn criterion_4_empirical_qe_law() {
    let mut detail = String::new();
    let mut ok = true;
    for (l, n) in [(2usize, 4u32), (3, 6)] {
        let samples = sample_qe_isotropic(l, n, 10_000, 2024).unwrap();
        let d = ks_distance(&samples, |z| qe_ccdf(z, l, n).unwrap());
        ok &= d <= 0.02;
        detail.push_str(&format!("KS(L={l},N={n}) = {d:.4}; "));
    }
    report(4, "empirical QE law", ok, &format!("{detail}tol 0.02 at 1e4 samples"));
}

#[test]
fn criterion_5_zf_leakage() {
    use beamsim::beamspace::{build_hybrid_selector, equivalent_channel, to_beamspace};
    use beamsim::channel::{sample_channel_set, ArrayGeometry};

    let geometry = ArrayGeometry::default_60ghz(256).unwrap();
    let f = dft_matrix(256);
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let set = sample_channel_set(&geometry, 16, 3, 42, Purpose::Channel, trial).unwrap();
        let bs = to_beamspace(&set, &f).unwrap();
        let sel = build_hybrid_selector(&bs, 48, 32, 1.0).unwrap();
        let eq = equivalent_channel(&bs, &sel).unwrap();
        let w = zf_precoder(&eq.matrix).unwrap();
        for k in 0..16 {
            let h_k = eq.user_column(k);
            let scale = vector_norm(&h_k);
            for i in 0..16 {
                if i != k {
                    worst = worst.max(inner_product(&h_k, &w.column(i)).norm() / scale);
                }
            }
        }
    }
    report(
        5,
        "ZF leakage",
        worst <= 1e-9,
        &format!("max relative cross-user leakage {worst:.3e} over 100 trials (tol 1e-9)"),
    );
}

#[test]
fn criterion_6_rate_loss_bound_discipline() {
    let table = reproduce_table1(42, 100).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for rec in &table.records {
        if let Some(bound) = rec.bound {
            ok &= rec.rate_loss <= bound;
            detail.push_str(&format!(
                "{}: dR {:.3} <= bound {:.3}; ",
                rec.scheme, rec.rate_loss, bound
            ));
        }
    }
    report(6, "rate-loss bound discipline", ok, detail.trim_end());
}

#[test]
fn criterion_7_table1_rank_reproduction() {
    // Published ordering: row2 (0.73) > row1 (0.34) > row3 (0.12) >= row4
    // (0.10) >= row5 (0.09); the 0.12/0.10/0.09 block may tie within 2 SE,
    // the SBS-vs-HBS separations must be strict. Magnitudes: row1 within
    // 0.34 +/- 0.15, row3 within 0.12 +/- 0.10.
    let table = reproduce_table1(42, 200).unwrap();
    let r = &table.records;
    let (sbs, row2, row3, row4, row5) = (&r[0], &r[1], &r[2], &r[3], &r[4]);

    let strict_top = row2.rate_loss > sbs.rate_loss;
    let hbs_below_sbs = [row3, row4, row5]
        .iter()
        .all(|h| h.rate_loss < sbs.rate_loss);
    let tie_tol = |a: &beamsim::harness::RateRecord, b: &beamsim::harness::RateRecord| {
        2.0 * (a.rate_loss_se.powi(2) + b.rate_loss_se.powi(2)).sqrt()
    };
    let small_block_ordered = row3.rate_loss >= row4.rate_loss - tie_tol(row3, row4)
        && row4.rate_loss >= row5.rate_loss - tie_tol(row4, row5);
    let magnitudes = (sbs.rate_loss - 0.34).abs() <= 0.15
        && (row3.rate_loss - 0.12).abs() <= 0.10;

    let pass = strict_top && hbs_below_sbs && small_block_ordered && magnitudes;
    report(
        7,
        "table rank reproduction",
        pass,
        &format!(
            "measured dR = [{:.3}, {:.3}, {:.3}, {:.3}, {:.3}] vs published \
             [0.34, 0.73, 0.12, 0.10, 0.09]; row2-largest {}, HBS-below-SBS {}, \
             small-block order {}, magnitude windows {}",
            sbs.rate_loss,
            row2.rate_loss,
            row3.rate_loss,
            row4.rate_loss,
            row5.rate_loss,
            strict_top,
            hbs_below_sbs,
            small_block_ordered,
            magnitudes
        ),
    );
}

#[test]
fn criterion_8_figure_orderings_at_12db() {
    let rate = |rep: &beamsim::harness::SweepReport, scheme: &str| {
        rep.points
            .iter()
            .find(|p| p.scheme == scheme)
            .unwrap()
            .rate
    };
    let fig2 = sweep_snr(SweepSetting::Fig2, &[12.0], 300, 42, None).unwrap();
    let fig2_order = rate(&fig2, "hbs_case2") > rate(&fig2, "sbs")
        && rate(&fig2, "sbs") > rate(&fig2, "hbs_case1");
    let fig2_ideal = ["hbs_case1", "hbs_case2", "sbs"]
        .iter()
        .all(|s| rate(&fig2, s) < rate(&fig2, "ideal"));

    let fig3 = sweep_snr(SweepSetting::Fig3, &[12.0], 300, 42, None).unwrap();
    let fig3_order =
        rate(&fig3, "hbs_case1") > rate(&fig3, "sbs") && rate(&fig3, "hbs_case2") > rate(&fig3, "sbs");
    let fig3_ideal = ["hbs_case1", "hbs_case2", "sbs"]
        .iter()
        .all(|s| rate(&fig3, s) < rate(&fig3, "ideal"));

    let pass = fig2_order && fig2_ideal && fig3_order && fig3_ideal;
    report(
        8,
        "figure orderings at 12 dB",
        pass,
        &format!(
            "fig2 caseII {:.4} > sbs {:.4} > caseI {:.4}: {}; fig3 caseI {:.4} / caseII \
             {:.4} vs sbs {:.4} both above: {}; ideal dominates: {}",
            rate(&fig2, "hbs_case2"),
            rate(&fig2, "sbs"),
            rate(&fig2, "hbs_case1"),
            fig2_order,
            rate(&fig3, "hbs_case1"),
            rate(&fig3, "hbs_case2"),
            rate(&fig3, "sbs"),
            fig3_order,
            fig2_ideal && fig3_ideal
        ),
    );
}

#[test]
fn criterion_9_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_beamsim");
    let run_once = || {
        let out = Command::new(bin)
            .args(["table1", "--seed", "42", "--trials", "100"])
            .output()
            .expect("failed to launch beamsim");
        assert!(out.status.success(), "table1 run failed");
        out.stdout
    };
    let a = run_once();
    let b = run_once();
    report(
        9,
        "CLI determinism",
        a == b,
        &format!(
            "two `table1 --seed 42 --trials 100` runs: {} vs {} bytes, identical: {}",
            a.len(),
            b.len(),
            a == b
        ),
    );
}

/// Not a numbered criterion: library-level replay of criterion 9 plus a
/// cross-check that `run` on the SBS row matches the table row.
#[test]
fn library_determinism_cross_check() {
    let cfg = RunConfig {
        l: 3,
        scheme: Scheme::Sbs { n_rf: 48 },
        seed: 42,
        trials: 50,
        ..RunConfig::default()
    };
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a.records, b.records);
    let table = reproduce_table1(42, 50).unwrap();
    let sbs = &table.records[0];
    assert_eq!(a.records[0].rate_loss, sbs.rate_loss);
    assert_eq!(a.records[0].rate_perfect, sbs.rate_perfect);
}
