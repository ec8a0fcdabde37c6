//! Zero-forcing precoding on the equivalent channel and rate metrics.
//!
//! The effective downlink matrix is G = H_eq^H (K x N_RF_g). ZF beams are
//! the normalized columns of the right pseudoinverse of G; Lambda keeps the
//! pre-normalization column norms. Symbols and noise are analytic: rates are
//! evaluated straight from the SINR expressions with unit noise variance.

use num_complex::Complex64;

use crate::beamspace::EquivalentChannel;
use crate::numerics::{inner_product, right_pseudoinverse, vector_norm, ComplexMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Precoder {
    /// W, N_RF_g x K, unit-norm columns.
    pub matrix: ComplexMatrix,
    /// Pre-normalization column norms (the diagonal Lambda).
    pub normalization: Vec<f64>,
}

impl Precoder {
    pub fn column(&self, k: usize) -> Vec<Complex64> {
        self.matrix.col(k)
    }
}

/// Per-trial rate measurements, bits/s/Hz per user.
#[derive(Debug, Clone)]
pub struct RateSample {
    pub per_user_perfect: Vec<f64>,
    pub per_user_quantized: Vec<f64>,
    pub snr_linear: f64,
    pub users: usize,
}

/// ZF precoder from an equivalent channel matrix (N_RF_g x K, columns are
/// users).
pub fn zf_precoder(h_eq: &ComplexMatrix) -> Result<Precoder> {
    let users = h_eq.cols();
    let g = h_eq.hermitian(); // K x N_RF_g
    let p = right_pseudoinverse(&g).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!(
            "equivalent channel is rank deficient (a user may have zero selected energy): {msg}"
        )),
        other => other,
    })?;
    let mut matrix = p.clone();
    let mut normalization = Vec::with_capacity(users);
    for k in 0..users {
        let norm = vector_norm(&p.col(k));
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::Singular(format!(
                "pseudoinverse column {k} has invalid norm {norm}"
            )));
        }
        normalization.push(norm);
        for r in 0..matrix.rows() {
            matrix[(r, k)] /= norm;
        }
    }
    Ok(Precoder {
        matrix,
        normalization,
    })
}

/// Per-user rate with perfect CSI (no interference term; nulling is exact up
/// to the pseudoinverse residual).
pub fn rate_perfect(h_eq: &EquivalentChannel, rho: f64, users: usize) -> Result<Vec<f64>> {
    if rho < 0.0 {
        return Err(Error::Domain(format!("negative transmit power {rho}")));
    }
    let w = zf_precoder(&h_eq.matrix)?;
    let share = rho / users as f64;
    Ok((0..users)
        .map(|k| {
            let gain = inner_product(&h_eq.user_column(k), &w.column(k)).norm_sqr();
            (1.0 + share * gain).log2()
        })
        .collect())
}

/// Per-user rate when the precoder is built from the quantized channels but
/// the signal propagates through the true ones: SINR with residual
/// interference in the denominator.
pub fn rate_quantized(
    h_eq: &EquivalentChannel,
    h_eq_hat: &ComplexMatrix,
    rho: f64,
    users: usize,
) -> Result<Vec<f64>> {
    if h_eq.matrix.rows() != h_eq_hat.rows() || h_eq.matrix.cols() != h_eq_hat.cols() {
        return Err(Error::Config(format!(
            "quantized channel {}x{} does not match true channel {}x{}",
            h_eq_hat.rows(),
            h_eq_hat.cols(),
            h_eq.matrix.rows(),
            h_eq.matrix.cols()
        )));
    }
    let w = zf_precoder(h_eq_hat)?;
    let share = rho / users as f64;
    Ok((0..users)
        .map(|k| {
            let h_k = h_eq.user_column(k);
            let signal = share * inner_product(&h_k, &w.column(k)).norm_sqr();
            let interference: f64 = (0..users)
                .filter(|&i| i != k)
                .map(|i| share * inner_product(&h_k, &w.column(i)).norm_sqr())
                .sum();
            (1.0 + signal / (1.0 + interference)).log2()
        })
        .collect())
}

/// Elementwise rate loss and its mean.
pub fn rate_loss(perfect: &[f64], quantized: &[f64]) -> Result<(Vec<f64>, f64)> {
    if perfect.len() != quantized.len() {
        return Err(Error::Config(format!(
            "rate vectors differ in length: {} vs {}",
            perfect.len(),
            quantized.len()
        )));
    }
    if perfect.is_empty() {
        return Err(Error::Config("empty rate vectors".into()));
    }
    let per_user: Vec<f64> = perfect
        .iter()
        .zip(quantized)
        .map(|(p, q)| p - q)
        .collect();
    let mean = per_user.iter().sum::<f64>() / per_user.len() as f64;
    Ok((per_user, mean))
}

/// Rate-loss upper bound log2{1 + gamma (K-1) E[Z]}. gamma is LINEAR here;
/// the feedback-bit rule is the dB consumer.
pub fn rate_loss_bound(gamma_linear: f64, users: usize, expected_qe: f64) -> Result<f64> {
    if gamma_linear < 0.0 || expected_qe < 0.0 {
        return Err(Error::Domain(
            "bound inputs must be nonnegative".into(),
        ));
    }
    Ok((1.0 + gamma_linear * (users as f64 - 1.0) * expected_qe).log2())
}

/// Received SNR gamma = (rho/K) E[||h_eq,k||^2] estimated over samples of
/// per-user equivalent-channel energies.
pub fn received_snr_estimate(energies: &[f64], rho: f64, users: usize) -> Result<(f64, f64)> {
    if energies.is_empty() {
        return Err(Error::Config("no energy samples for SNR estimate".into()));
    }
    let mean = energies.iter().sum::<f64>() / energies.len() as f64;
    let linear = rho / users as f64 * mean;
    Ok((linear, 10.0 * linear.log10()))
}
