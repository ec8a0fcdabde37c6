//! Monte Carlo experiment runner.
//!
//! Every random quantity is drawn from a substream keyed by (seed, purpose,
//! trial, user), so trials run on the rayon pool in any order and are then
//! reduced in trial order; outputs are bitwise reproducible.

use std::time::Instant;

use rayon::prelude::*;

use crate::beamspace::{
    build_hybrid_selector, equivalent_channel, select_sbs, to_beamspace, EquivalentChannel,
    HybridSelector, SelectionGroup,
};
use crate::channel::{sample_channel_set, ArrayGeometry};
use crate::feedback::{expected_qe_closed, feedback_bits, quantize_support_stream, qe_case_bound,
    expected_qe_numeric, QeCase};
use crate::harness::config::{RunConfig, Scheme};
use crate::harness::report::{
    QeReport, QeRow, RateRecord, RateReport, ReportMeta, SweepPoint, SweepReport,
};
use crate::numerics::{dft_matrix, vector_norm, UnitaryDft};
use crate::precoding::{rate_loss, rate_loss_bound, rate_perfect, rate_quantized,
    received_snr_estimate};
use crate::rng::Purpose;
use crate::{Error, Result};

const CALIBRATION_TRIALS: u64 = 100;

fn with_trial_context<T>(r: Result<T>, cfg: &RunConfig, trial: u64) -> Result<T> {
    r.map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!(
            "trial {trial} of {}: {msg}",
            cfg.scheme.label()
        )),
        Error::Numerical(msg) => Error::Numerical(format!(
            "trial {trial} of {}: {msg}",
            cfg.scheme.label()
        )),
        other => other,
    })
}

/// Samples one trial's channels and builds the equivalent channel.
fn trial_equivalent(
    cfg: &RunConfig,
    geometry: &ArrayGeometry,
    f: &UnitaryDft,
    purpose: Purpose,
    trial: u64,
) -> Result<EquivalentChannel> {
    let set = sample_channel_set(geometry, cfg.k, cfg.l, cfg.seed, purpose, trial)?;
    let bs = to_beamspace(&set, f)?;
    let sel = match cfg.scheme {
        Scheme::Sbs { n_rf } => HybridSelector::single(select_sbs(&bs, n_rf)?),
        Scheme::Hbs { g1, g2, xi } => build_hybrid_selector(&bs, g1, g2, xi)?,
    };
    equivalent_channel(&bs, &sel)
}

/// Estimates E[||h_eq,k||^2] on a dedicated calibration stream and solves
/// (rho/K) E[||h_eq,k||^2] = gamma for rho, so the realized received SNR
/// matches the configured operating point.
fn calibrate_rho(
    cfg: &RunConfig,
    geometry: &ArrayGeometry,
    f: &UnitaryDft,
    gamma_lin: f64,
) -> Result<f64> {
    let energies: Vec<f64> = (0..CALIBRATION_TRIALS)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let eq = trial_equivalent(cfg, geometry, f, Purpose::Calibration, t)?;
            Ok((0..cfg.k)
                .map(|k| vector_norm(&eq.user_column(k)).powi(2))
                .sum::<f64>()
                / cfg.k as f64)
        })
        .collect::<Result<_>>()?;
    let mean = energies.iter().sum::<f64>() / energies.len() as f64;
    if mean <= 0.0 {
        return Err(Error::Numerical(
            "calibration produced zero equivalent-channel energy".into(),
        ));
    }
    Ok(gamma_lin * cfg.k as f64 / mean)
}

struct TrialOutcome {
    rate_perfect_mean: f64,
    rate_quantized_mean: f64,
    rate_loss_mean: f64,
    qe_mean: f64,
    energy_mean: f64,
}

fn run_trial(
    cfg: &RunConfig,
    geometry: &ArrayGeometry,
    f: &UnitaryDft,
    rho: f64,
    bits: u32,
    trial: u64,
) -> Result<TrialOutcome> {
    let eq = trial_equivalent(cfg, geometry, f, Purpose::Channel, trial)?;
    let width = eq.selector.width();
    let mut h_hat = eq.matrix.clone();
    let mut qe_sum = 0.0;
    let mut energy_sum = 0.0;
    for k in 0..cfg.k {
        let h_k = eq.user_column(k);
        energy_sum += vector_norm(&h_k).powi(2);
        let rows = eq.selector.active_rows_of(k);
        if rows.is_empty() {
            return Err(Error::Singular(format!(
                "user {k} owns no active beams in trial {trial}"
            )));
        }
        let q = quantize_support_stream(&h_k, &rows, width, bits, cfg.seed, trial, k)?;
        qe_sum += q.qe;
        for r in 0..width {
            h_hat[(r, k)] = q.quantized_channel[r];
        }
    }
    let perfect = rate_perfect(&eq, rho, cfg.k)?;
    let quantized = rate_quantized(&eq, &h_hat, rho, cfg.k)?;
    let (_, loss_mean) = rate_loss(&perfect, &quantized)?;
    let kf = cfg.k as f64;
    Ok(TrialOutcome {
        rate_perfect_mean: perfect.iter().sum::<f64>() / kf,
        rate_quantized_mean: quantized.iter().sum::<f64>() / kf,
        rate_loss_mean: loss_mean,
        qe_mean: qe_sum / kf,
        energy_mean: energy_sum / kf,
    })
}

/// Per-trial mean quantized rates at one SNR point, plus the aggregated
/// record. Exposed so sweeps can compute curve spreads.
fn run_point(
    cfg: &RunConfig,
    geometry: &ArrayGeometry,
    f: &UnitaryDft,
    snr_db: f64,
    reference: Option<f64>,
) -> Result<(RateRecord, Vec<f64>, Vec<f64>)> {
    let gamma_lin = 10f64.powf(snr_db / 10.0);
    let active_l = cfg.active_clusters();
    let (bits, overridden) = match cfg.bits_override {
        Some(b) => (b, true),
        None => (feedback_bits(snr_db, cfg.k, active_l)?, false),
    };
    let rho = calibrate_rho(cfg, geometry, f, gamma_lin)?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| with_trial_context(run_trial(cfg, geometry, f, rho, bits, t), cfg, t))
        .collect::<Result<_>>()?;

    let n = cfg.trials as f64;
    let mean = |sel: &dyn Fn(&TrialOutcome) -> f64| {
        outcomes.iter().map(|o| sel(o)).sum::<f64>() / n
    };
    let loss_mean = mean(&|o| o.rate_loss_mean);
    let loss_var = outcomes
        .iter()
        .map(|o| (o.rate_loss_mean - loss_mean).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    let loss_se = (loss_var / n).sqrt();

    let energies: Vec<f64> = outcomes.iter().map(|o| o.energy_mean).collect();
    let (gamma_hat_lin, gamma_hat_db) = received_snr_estimate(&energies, rho, cfg.k)?;

    let expected_qe = if active_l >= 2 {
        Some(expected_qe_closed(active_l, bits)?)
    } else {
        None
    };
    let bound = match expected_qe {
        Some(e) => Some(rate_loss_bound(gamma_hat_lin, cfg.k, e)?),
        None => None,
    };

    let record = RateRecord {
        scheme: cfg.scheme.label(),
        m: cfg.m,
        k: cfg.k,
        l: cfg.l,
        snr_db,
        n_bits: bits,
        bits_overridden: overridden,
        rate_perfect: mean(&|o| o.rate_perfect_mean),
        rate_quantized: mean(&|o| o.rate_quantized_mean),
        rate_loss: loss_mean,
        rate_loss_se: loss_se,
        measured_qe: mean(&|o| o.qe_mean),
        expected_qe,
        bound,
        gamma_lin: gamma_hat_lin,
        gamma_db: gamma_hat_db,
        reference,
    };
    let per_trial_quantized = outcomes.iter().map(|o| o.rate_quantized_mean).collect();
    let per_trial_perfect = outcomes.iter().map(|o| o.rate_perfect_mean).collect();
    Ok((record, per_trial_quantized, per_trial_perfect))
}

/// Runs one configuration across its SNR list.
pub fn run(cfg: &RunConfig) -> Result<RateReport> {
    cfg.validate()?;
    let start = Instant::now();
    let geometry = ArrayGeometry::default_60ghz(cfg.m)?;
    let f = dft_matrix(cfg.m);
    let mut records = Vec::with_capacity(cfg.snr_db.len());
    for &snr in &cfg.snr_db {
        let (record, _, _) = run_point(cfg, &geometry, &f, snr, None)?;
        records.push(record);
    }
    Ok(RateReport {
        records,
        meta: ReportMeta {
            seed: cfg.seed,
            trials: cfg.trials,
            wall_clock_ms: start.elapsed().as_millis() as u64,
        },
    })
}

/// The five published rate-loss configurations at 12 dB, with the printed
/// reference values alongside the measurements.
pub fn table1_configs(seed: u64, trials: usize) -> Vec<(RunConfig, f64)> {
    let base = RunConfig {
        seed,
        trials,
        ..RunConfig::default()
    };
    vec![
        (
            RunConfig {
                l: 3,
                scheme: Scheme::Sbs { n_rf: 48 },
                ..base.clone()
            },
            0.34,
        ),
        (
            RunConfig {
                l: 1,
                scheme: Scheme::Hbs {
                    g1: 32,
                    g2: 16,
                    xi: 0.0,
                },
                ..base.clone()
            },
            0.73,
        ),
        (
            RunConfig {
                l: 2,
                scheme: Scheme::Hbs {
                    g1: 32,
                    g2: 16,
                    xi: 1.0,
                },
                ..base.clone()
            },
            0.12,
        ),
        (
            RunConfig {
                l: 2,
                scheme: Scheme::Hbs {
                    g1: 48,
                    g2: 32,
                    xi: 0.0,
                },
                ..base.clone()
            },
            0.10,
        ),
        (
            RunConfig {
                l: 3,
                scheme: Scheme::Hbs {
                    g1: 48,
                    g2: 32,
                    xi: 1.0,
                },
                ..base
            },
            0.09,
        ),
    ]
}

/// Reproduces the five-row rate-loss table.
pub fn reproduce_table1(seed: u64, trials: usize) -> Result<RateReport> {
    let start = Instant::now();
    let geometry = ArrayGeometry::default_60ghz(256)?;
    let f = dft_matrix(256);
    let mut records = Vec::with_capacity(5);
    for (cfg, reference) in table1_configs(seed, trials) {
        cfg.validate()?;
        let (record, _, _) = run_point(&cfg, &geometry, &f, 12.0, Some(reference))?;
        records.push(record);
    }
    Ok(RateReport {
        records,
        meta: ReportMeta {
            seed,
            trials,
            wall_clock_ms: start.elapsed().as_millis() as u64,
        },
    })
}

/// Which published figure's group sizes the sweep uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepSetting {
    /// g1 = 32, g2 = 16.
    Fig2,
    /// g1 = 48, g2 = 32.
    Fig3,
}

impl SweepSetting {
    fn groups(self) -> (usize, usize) {
        match self {
            SweepSetting::Fig2 => (32, 16),
            SweepSetting::Fig3 => (48, 32),
        }
    }
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Rate-vs-SNR curves: both HBS cases, the SBS baseline, and the error-free
/// ideal (the SBS configuration's perfect-CSI rate). `rvq_full_m`, when
/// given, adds the indicative full-dimension RVQ baseline at that reduced
/// array size (at most 64 antennas).
pub fn sweep_snr(
    setting: SweepSetting,
    snr_db: &[f64],
    trials: usize,
    seed: u64,
    rvq_full_m: Option<usize>,
) -> Result<SweepReport> {
    if snr_db.is_empty() {
        return Err(Error::Config("sweep needs a nonempty SNR list".into()));
    }
    if let Some(m) = rvq_full_m {
        if m > 64 || m == 0 {
            return Err(Error::Config(format!(
                "rvq-full baseline is limited to 1..=64 antennas, got {m}"
            )));
        }
    }
    let start = Instant::now();
    let (g1, g2) = setting.groups();
    let base = RunConfig {
        seed,
        trials,
        snr_db: snr_db.to_vec(),
        ..RunConfig::default()
    };
    let case1 = RunConfig {
        l: (g2 / base.k).max(1),
        scheme: Scheme::Hbs { g1, g2, xi: 0.0 },
        ..base.clone()
    };
    let case2 = RunConfig {
        l: g1 / base.k,
        scheme: Scheme::Hbs { g1, g2, xi: 1.0 },
        ..base.clone()
    };
    let sbs = RunConfig {
        l: 3,
        scheme: Scheme::Sbs { n_rf: 48 },
        ..base.clone()
    };
    for cfg in [&case1, &case2, &sbs] {
        cfg.validate()?;
    }

    let geometry = ArrayGeometry::default_60ghz(base.m)?;
    let f = dft_matrix(base.m);
    let mut points = Vec::new();
    for &snr in snr_db {
        let (sbs_rec, sbs_trials, sbs_perfect) = run_point(&sbs, &geometry, &f, snr, None)?;
        let (c1_rec, c1_trials, _) = run_point(&case1, &geometry, &f, snr, None)?;
        let (c2_rec, c2_trials, _) = run_point(&case2, &geometry, &f, snr, None)?;
        points.push(SweepPoint {
            snr_db: snr,
            scheme: "hbs_case1".into(),
            rate: c1_rec.rate_quantized,
            rate_std: std_dev(&c1_trials),
        });
        points.push(SweepPoint {
            snr_db: snr,
            scheme: "hbs_case2".into(),
            rate: c2_rec.rate_quantized,
            rate_std: std_dev(&c2_trials),
        });
        points.push(SweepPoint {
            snr_db: snr,
            scheme: "sbs".into(),
            rate: sbs_rec.rate_quantized,
            rate_std: std_dev(&sbs_trials),
        });
        points.push(SweepPoint {
            snr_db: snr,
            scheme: "ideal".into(),
            rate: sbs_rec.rate_perfect,
            rate_std: std_dev(&sbs_perfect),
        });
        if let Some(m) = rvq_full_m {
            let (rate, rate_std) = rvq_full_point(m, &base, snr)?;
            points.push(SweepPoint {
                snr_db: snr,
                scheme: "rvq_full".into(),
                rate,
                rate_std,
            });
        }
    }
    Ok(SweepReport {
        points,
        meta: ReportMeta {
            seed,
            trials,
            wall_clock_ms: start.elapsed().as_millis() as u64,
        },
    })
}

/// Full-M-dimensional RVQ without beamspace reduction, at reduced M. The
/// published baseline's exact setup is unspecified; this uses the SBS bit
/// budget and is indicative only.
fn rvq_full_point(m: usize, base: &RunConfig, snr_db: f64) -> Result<(f64, f64)> {
    // Treat the untransformed antenna-domain channel as the "equivalent"
    // channel: identity selector over all M coordinates.
    let cfg = RunConfig {
        m,
        l: 3,
        scheme: Scheme::Sbs { n_rf: m }, // width only; selection is overridden below
        ..base.clone()
    };
    let geometry = ArrayGeometry::default_60ghz(m)?;
    let gamma_lin = 10f64.powf(snr_db / 10.0);
    let bits = feedback_bits(snr_db, cfg.k, 3)?.min(16);
    let identity_selector = || {
        HybridSelector::single(SelectionGroup {
            beam_indices: (0..m).collect(),
            owner_user: vec![0; m],
        })
    };
    let trial_channel = |purpose: Purpose, t: u64| -> Result<EquivalentChannel> {
        let set = sample_channel_set(&geometry, cfg.k, cfg.l, cfg.seed, purpose, t)?;
        Ok(EquivalentChannel {
            matrix: set.matrix,
            selector: identity_selector(),
        })
    };
    let cal: Vec<f64> = (0..CALIBRATION_TRIALS)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let eq = trial_channel(Purpose::Calibration, t)?;
            Ok((0..cfg.k)
                .map(|k| vector_norm(&eq.user_column(k)).powi(2))
                .sum::<f64>()
                / cfg.k as f64)
        })
        .collect::<Result<_>>()?;
    let rho = gamma_lin * cfg.k as f64 / (cal.iter().sum::<f64>() / cal.len() as f64);
    let rows: Vec<usize> = (0..m).collect();
    let rates: Vec<f64> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let eq = trial_channel(Purpose::Channel, t)?;
            let mut h_hat = eq.matrix.clone();
            for k in 0..cfg.k {
                let q = quantize_support_stream(
                    &eq.user_column(k),
                    &rows,
                    m,
                    bits,
                    cfg.seed,
                    t,
                    k,
                )?;
                for r in 0..m {
                    h_hat[(r, k)] = q.quantized_channel[r];
                }
            }
            let rates = rate_quantized(&eq, &h_hat, rho, cfg.k)?;
            Ok(rates.iter().sum::<f64>() / cfg.k as f64)
        })
        .collect::<Result<_>>()?;
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    Ok((mean, std_dev(&rates)))
}

/// Closed form vs oracle vs bounds on a (L, N) grid.
pub fn qe_table(l_values: &[usize], n_values: &[u32]) -> Result<QeReport> {
    let mut rows = Vec::with_capacity(l_values.len() * n_values.len());
    for &l in l_values {
        for &n in n_values {
            rows.push(QeRow {
                l,
                n,
                e_closed: expected_qe_closed(l, n)?,
                e_numeric: expected_qe_numeric(l, n)?,
                bound_case1: qe_case_bound(l, n, QeCase::I)?,
                bound_case2: qe_case_bound(l, n, QeCase::II)?,
            });
        }
    }
    Ok(QeReport { rows })
}
