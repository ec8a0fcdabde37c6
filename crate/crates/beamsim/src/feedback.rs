//! Limited feedback: RVQ codebooks, quantization error, and its theory.
//!
//! The quantization error (QE) of a channel direction against a codebook is
//! Z = 1 - cos^2 of the angle to the nearest codeword. For isotropic random
//! codebooks in dimension L the CCDF is Pr(Z >= z) = (1 - z^{L-1})^{2^N};
//! everything else in this module is built on that law.

use num_complex::Complex64;
use rand::Rng;

use crate::beamspace::HybridSelector;
use crate::channel::complex_gaussian;
use crate::numerics::{beta_fn, inner_product, vector_norm, UnitaryDft};
use crate::rng::{substream, Purpose};
use crate::{Error, Result};

/// Minimum feedback bits for clusters L at working SNR gamma (dB):
/// floor[(gamma/3)(L-1) + (L-1) log2(K-1)]. Note gamma enters in dB here,
/// unlike the rate-loss bound which takes linear SNR.
pub fn feedback_bits(gamma_db: f64, k: usize, l: usize) -> Result<u32> {
    if k < 2 {
        return Err(Error::Domain(format!(
            "feedback bit rule needs K >= 2 (log2(K-1)), got K={k}"
        )));
    }
    if l < 1 {
        return Err(Error::Domain("cluster count must be at least 1".into()));
    }
    if gamma_db < 0.0 {
        return Err(Error::Domain(format!("negative SNR {gamma_db} dB")));
    }
    let lm1 = (l - 1) as f64;
    let bits = (gamma_db / 3.0) * lm1 + lm1 * ((k - 1) as f64).log2();
    Ok(bits.floor() as u32)
}

/// A user's RVQ codebook: 2^bits unit-norm codewords in the equivalent
/// (selected-beam) domain. `support`, when set, lists the only rows with
/// nonzero entries, which lets `quantize` skip the rest of each codeword.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub entries: Vec<Vec<Complex64>>,
    pub bits: u32,
    pub seed: u64,
    pub user: usize,
    pub support: Option<Vec<usize>>,
}

/// Outcome of quantizing one channel direction.
#[derive(Debug, Clone)]
pub struct QuantizationResult {
    pub index: usize,
    pub qe: f64,
    pub quantized_channel: Vec<Complex64>,
}

const RESAMPLE_LIMIT: usize = 16;
const NORM_FLOOR: f64 = 1e-12;

/// Literal codebook construction: each codeword starts as c ~ CN(0, I_M) in
/// antenna space, is pushed through S_h^H F, and normalized. O(2^bits * M *
/// N_RF_g); use `support_codebook` for large configurations.
pub fn generate_codebook(
    sel: &HybridSelector,
    f: &UnitaryDft,
    bits: u32,
    user: usize,
    rng: &mut impl Rng,
) -> Result<Codebook> {
    let m = f.size();
    let width = sel.width();
    for r in 0..width {
        if sel.beam_of_row(r) >= m {
            return Err(Error::Config(format!(
                "selector beam {} outside DFT size {m}",
                sel.beam_of_row(r)
            )));
        }
    }
    let count = 1usize << bits;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let mut attempts = 0;
        let word = loop {
            let c: Vec<Complex64> = (0..m).map(|_| complex_gaussian(rng, 1.0)).collect();
            // Row r of S_h^H F is scale(r) times DFT row beam_of_row(r).
            let mut w: Vec<Complex64> = (0..width)
                .map(|r| {
                    let beam = sel.beam_of_row(r);
                    let dot: Complex64 = (0..m)
                        .map(|col| f.matrix()[(beam, col)].conj() * c[col])
                        .sum();
                    dot * sel.row_scale(r)
                })
                .collect();
            let norm = vector_norm(&w);
            if norm > NORM_FLOOR {
                for v in &mut w {
                    *v /= norm;
                }
                break w;
            }
            attempts += 1;
            if attempts >= RESAMPLE_LIMIT {
                return Err(Error::Numerical(
                    "codeword projection kept collapsing to zero norm".into(),
                ));
            }
        };
        entries.push(word);
    }
    Ok(Codebook {
        entries,
        bits,
        seed: 0,
        user,
        support: None,
    })
}

/// Equivalent construction to `generate_codebook` restricted to a known
/// support: since the projection of CN(0, I_M) through S_h^H F is isotropic
/// on any fixed coordinate set, drawing CN(0, I) directly on `rows` and
/// normalizing yields the same codeword distribution at a fraction of the
/// cost. `width` is N_RF_g.
pub fn support_codebook(
    rows: &[usize],
    width: usize,
    bits: u32,
    seed: u64,
    trial: u64,
    user: usize,
) -> Result<Codebook> {
    if rows.is_empty() {
        return Err(Error::Config("empty quantization support".into()));
    }
    if rows.iter().any(|&r| r >= width) {
        return Err(Error::Config(format!(
            "support row outside equivalent width {width}"
        )));
    }
    let mut rng = substream(seed, Purpose::Codebook, trial, user as u64);
    let count = 1usize << bits;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let mut attempts = 0;
        loop {
            let mut g: Vec<Complex64> = rows
                .iter()
                .map(|_| complex_gaussian(&mut rng, 1.0))
                .collect();
            let norm = vector_norm(&g);
            if norm > NORM_FLOOR {
                for v in &mut g {
                    *v /= norm;
                }
                let mut word = vec![Complex64::new(0.0, 0.0); width];
                for (i, &r) in rows.iter().enumerate() {
                    word[r] = g[i];
                }
                entries.push(word);
                break;
            }
            attempts += 1;
            if attempts >= RESAMPLE_LIMIT {
                return Err(Error::Numerical("degenerate codeword draws".into()));
            }
        }
    }
    Ok(Codebook {
        entries,
        bits,
        seed,
        user,
        support: Some(rows.to_vec()),
    })
}

/// Streaming equivalent of `quantize(h_eq, &support_codebook(...))`: walks
/// the same substream and keeps only the running argmin, so memory stays
/// O(|rows|) however large 2^bits gets. Arithmetic matches the materialized
/// path operation for operation, so the results are bit-identical.
pub fn quantize_support_stream(
    h_eq: &[Complex64],
    rows: &[usize],
    width: usize,
    bits: u32,
    seed: u64,
    trial: u64,
    user: usize,
) -> Result<QuantizationResult> {
    if rows.is_empty() {
        return Err(Error::Config("empty quantization support".into()));
    }
    if rows.iter().any(|&r| r >= width) || h_eq.len() != width {
        return Err(Error::Config(format!(
            "support/channel inconsistent with equivalent width {width}"
        )));
    }
    let norm = vector_norm(h_eq);
    if norm <= NORM_FLOOR {
        return Err(Error::Domain("cannot quantize a zero channel".into()));
    }
    let norm_sq = norm * norm;
    let mut rng = substream(seed, Purpose::Codebook, trial, user as u64);
    let count = 1usize << bits;
    let mut best_index = 0usize;
    let mut best_align = -1.0f64;
    let mut best_word = vec![Complex64::new(0.0, 0.0); rows.len()];
    let mut g = vec![Complex64::new(0.0, 0.0); rows.len()];
    for i in 0..count {
        let mut attempts = 0;
        loop {
            for v in g.iter_mut() {
                *v = complex_gaussian(&mut rng, 1.0);
            }
            let gnorm = vector_norm(&g);
            if gnorm > NORM_FLOOR {
                for v in g.iter_mut() {
                    *v /= gnorm;
                }
                break;
            }
            attempts += 1;
            if attempts >= RESAMPLE_LIMIT {
                return Err(Error::Numerical("degenerate codeword draws".into()));
            }
        }
        let dot: Complex64 = rows
            .iter()
            .enumerate()
            .map(|(j, &r)| g[j].conj() * h_eq[r])
            .sum();
        let align = dot.norm_sqr() / norm_sq;
        if align > best_align {
            best_align = align;
            best_index = i;
            best_word.copy_from_slice(&g);
        }
    }
    let qe = (1.0 - best_align).clamp(0.0, 1.0);
    let mut quantized_channel = vec![Complex64::new(0.0, 0.0); width];
    for (j, &r) in rows.iter().enumerate() {
        quantized_channel[r] = best_word[j] * norm;
    }
    Ok(QuantizationResult {
        index: best_index,
        qe,
        quantized_channel,
    })
}

/// Exhaustive argmin over the codebook; ties break to the lowest index.
pub fn quantize(h_eq: &[Complex64], cb: &Codebook) -> Result<QuantizationResult> {
    let norm = vector_norm(h_eq);
    if norm <= NORM_FLOOR {
        return Err(Error::Domain("cannot quantize a zero channel".into()));
    }
    let norm_sq = norm * norm;
    let mut best = 0usize;
    let mut best_align = -1.0f64;
    for (i, word) in cb.entries.iter().enumerate() {
        // Codewords are unit norm, so cos^2 = |<w, h>|^2 / ||h||^2. With a
        // known support the inner product only needs those rows.
        let dot = match &cb.support {
            Some(rows) => rows
                .iter()
                .map(|&r| word[r].conj() * h_eq[r])
                .sum::<Complex64>(),
            None => inner_product(word, h_eq),
        };
        let align = dot.norm_sqr() / norm_sq;
        if align > best_align {
            best_align = align;
            best = i;
        }
    }
    let qe = (1.0 - best_align).clamp(0.0, 1.0);
    let quantized_channel = cb.entries[best].iter().map(|v| v * norm).collect();
    Ok(QuantizationResult {
        index: best,
        qe,
        quantized_channel,
    })
}

/// RVQ CCDF: Pr(Z >= z) = (1 - z^{L-1})^{2^N}, evaluated in the log domain
/// so that exponents like 2^15 do not underflow prematurely.
pub fn qe_ccdf(z: f64, l: usize, bits: u32) -> Result<f64> {
    if l < 2 {
        return Err(Error::Domain(format!(
            "QE law needs L >= 2 clusters, got {l}"
        )));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("z={z} outside [0, 1]")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z == 1.0 {
        return Ok(0.0);
    }
    let inner = -z.powi(l as i32 - 1);
    Ok(((1u64 << bits) as f64 * inner.ln_1p()).exp())
}

/// Closed-form E[Z] = (1/(L-1)) * beta(2^N + 1, 1/(L-1)), via log-gamma.
pub fn expected_qe_closed(l: usize, bits: u32) -> Result<f64> {
    if l < 2 {
        return Err(Error::Domain(format!(
            "expected QE undefined for L={l}; direction dimension is L-1"
        )));
    }
    let lm1 = (l - 1) as f64;
    Ok(beta_fn((1u64 << bits) as f64 + 1.0, 1.0 / lm1)? / lm1)
}

const QUAD_TOL: f64 = 1e-12;
const QUAD_MAX_DEPTH: u32 = 60;

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "quadrature stalled on [{a}, {b}] with estimate {}",
            left + right
        )));
    }
    let half = 0.5 * tol;
    Ok(adaptive(f, a, fa, m, fm, left, lm, flm, half, depth - 1)?
        + adaptive(f, m, fm, b, fb, right, rm, frm, half, depth - 1)?)
}

/// Independent oracle for `expected_qe_closed`: adaptive Simpson quadrature
/// of the CCDF integral to 1e-12 absolute.
pub fn expected_qe_numeric(l: usize, bits: u32) -> Result<f64> {
    if l < 2 {
        return Err(Error::Domain(format!(
            "QE integral needs L >= 2, got {l}"
        )));
    }
    if bits > 20 {
        return Err(Error::Domain(format!(
            "oracle limited to N <= 20, got {bits}"
        )));
    }
    let exponent = (1u64 << bits) as f64;
    let lm1 = l as i32 - 1;
    let f = move |z: f64| -> f64 {
        if z <= 0.0 {
            1.0
        } else if z >= 1.0 {
            0.0
        } else {
            (exponent * (-z.powi(lm1)).ln_1p()).exp()
        }
    };
    let (a, b) = (0.0, 1.0);
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    adaptive(&f, a, fa, b, fb, whole, m, fm, QUAD_TOL, QUAD_MAX_DEPTH)
}

/// Which spherical-cap bound applies to E[Z].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QeCase {
    I,
    II,
}

/// Case I: E[Z] < 2^{-N}. Case II: E[Z] < 2^{-N/2}.
pub fn qe_case_bound(l: usize, bits: u32, case: QeCase) -> Result<f64> {
    if l < 2 {
        return Err(Error::Domain(format!("case bounds need L >= 2, got {l}")));
    }
    let n = bits as f64;
    Ok(match case {
        QeCase::I => (-n).exp2(),
        QeCase::II => (-n / 2.0).exp2(),
    })
}

/// Validation mode for the QE law: quantizes isotropic unit directions of
/// dimension L against isotropic codebooks of 2^bits words, one fresh
/// codebook per sample, and returns the measured Z values.
pub fn sample_qe_isotropic(l: usize, bits: u32, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if l < 1 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let rows: Vec<usize> = (0..l).collect();
    let mut out = Vec::with_capacity(samples);
    for s in 0..samples {
        let mut rng = substream(seed, Purpose::Channel, s as u64, 0);
        let h: Vec<Complex64> = (0..l).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let cb = support_codebook(&rows, l, bits, seed, s as u64, 0)?;
        out.push(quantize(&h, &cb)?.qe);
    }
    Ok(out)
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `samples` and the law whose CCDF is `ccdf`.
pub fn ks_distance(samples: &[f64], ccdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &z) in sorted.iter().enumerate() {
        let cdf = 1.0 - ccdf(z);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((cdf - lo).abs()).max((hi - cdf).abs());
    }
    d
}
