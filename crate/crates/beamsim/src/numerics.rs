//! Complex linear algebra and special functions shared by the other modules.
//!
//! Everything here is a pure function of its inputs. The pseudoinverse is
//! computed through Hermitian normal equations with an explicit condition
//! guard instead of a full SVD: the matrices involved are small (K <= 16
//! users, a few dozen selected beams) and the guard turns silent instability
//! into an error. Special functions run in the log domain throughout, since
//! the quantization-error closed forms involve Gamma(2^N) for N up to 15+.

use num_complex::Complex64;

use crate::{Error, Result};

/// Residual tolerance for `G * pinv(G) = I`. Part of the test semantics,
/// deliberately not user-configurable.
pub const PINV_RESIDUAL_TOL: f64 = 1e-9;

/// Condition-number limit above which the pseudoinverse refuses to proceed.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Domain(format!(
                "entry count {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite matrix entry".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::Config(format!(
                "matmul dimension mismatch: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let lhs = self.row(r);
            for k in 0..self.cols {
                let a = lhs[k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let rhs = other.row(k);
                let orow = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(rhs) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::Config(format!(
                "matvec dimension mismatch: {}x{} * {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
            })
            .collect())
    }

    pub fn scale(&self, s: f64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Unitary spatial DFT matrix for an M-element array. Row `m` is the
/// Hermitian transpose of the steering vector at spatial frequency `m/M`.
#[derive(Debug, Clone)]
pub struct UnitaryDft {
    size: usize,
    matrix: ComplexMatrix,
}

impl UnitaryDft {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Builds the M x M unitary spatial DFT with beam spacing 1/M.
pub fn dft_matrix(m: usize) -> UnitaryDft {
    assert!(m >= 1, "dft_matrix requires M >= 1");
    let scale = 1.0 / (m as f64).sqrt();
    let mut mat = ComplexMatrix::zeros(m, m);
    for row in 0..m {
        for col in 0..m {
            // conj of the steering element exp(-j 2 pi (row/M) col)
            let phase = 2.0 * std::f64::consts::PI * (row as f64) * (col as f64) / (m as f64);
            mat[(row, col)] = Complex64::from_polar(scale, phase);
        }
    }
    UnitaryDft { size: m, matrix: mat }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn vector_norm(v: &[Complex64]) -> f64 {
    norm_sqr(v).sqrt()
}

pub fn inner_product(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// `|u^H v|^2 / (||u||^2 ||v||^2)`, the squared cosine of the principal
/// angle between two complex vectors. Invariant to complex scaling of
/// either argument.
pub fn cos2_angle(u: &[Complex64], v: &[Complex64]) -> Result<f64> {
    let nu = norm_sqr(u);
    let nv = norm_sqr(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Domain("cos2_angle on zero-norm vector".into()));
    }
    let c = inner_product(u, v).norm_sqr() / (nu * nv);
    Ok(c.clamp(0.0, 1.0))
}

/// Cholesky factorization of a Hermitian positive-definite matrix, A = L L^H.
fn cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            if i == j {
                if s.re <= 0.0 || s.re.is_nan() {
                    return Err(Error::Singular(
                        "normal-equation matrix is not positive definite (rank-deficient input)"
                            .into(),
                    ));
                }
                l[(i, j)] = Complex64::new(s.re.sqrt(), 0.0);
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Inverse of a Hermitian positive-definite matrix via its Cholesky factor.
fn hpd_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    let l = cholesky(a)?;
    // Solve L y = e_k, then L^H x = y, for each unit vector.
    let mut inv = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = if i == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for j in 0..i {
                s -= l[(i, j)] * y[j];
            }
            y[i] = s / l[(i, i)];
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= l[(j, i)].conj() * x[j];
            }
            x[i] = s / l[(i, i)];
        }
        for i in 0..n {
            inv[(i, k)] = x[i];
        }
    }
    Ok(inv)
}

fn one_norm(a: &ComplexMatrix) -> f64 {
    (0..a.cols())
        .map(|c| (0..a.rows()).map(|r| a[(r, c)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Right Moore-Penrose pseudoinverse of a full-row-rank K x N matrix
/// (N >= K): `G^H (G G^H)^{-1}`, so that `G * result = I_K`.
///
/// Fails with a singularity error when the condition estimate of `G`
/// exceeds [`CONDITION_LIMIT`].
pub fn right_pseudoinverse(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    let k = g.rows();
    let n = g.cols();
    if n < k {
        return Err(Error::Config(format!(
            "right_pseudoinverse needs N >= K, got {}x{}",
            k, n
        )));
    }
    let gh = g.hermitian();
    let a = g.matmul(&gh)?;
    let a_inv = hpd_inverse(&a).map_err(|_| {
        Error::Singular(format!("rank-deficient {}x{} matrix in pseudoinverse", k, n))
    })?;
    // cond_1(A) ~ cond_2(G)^2 for A = G G^H.
    let cond_g = (one_norm(&a) * one_norm(&a_inv)).sqrt();
    if !cond_g.is_finite() || cond_g > CONDITION_LIMIT {
        return Err(Error::Singular(format!(
            "ill-conditioned {}x{} matrix in pseudoinverse (condition estimate {:.3e})",
            k, n, cond_g
        )));
    }
    gh.matmul(&a_inv)
}

// Stirling series coefficients: B_{2n} / (2n (2n-1)) for n = 1..8.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the Gamma function for x > 0.
///
/// Stirling's series for x >= 10 (truncation error below 1e-17 there),
/// shifted upward by the recurrence ln Gamma(x) = ln Gamma(x+n) - sum ln(x+i)
/// for smaller arguments.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    let mut shift = 0.0;
    let mut y = x;
    while y < 10.0 {
        shift += y.ln();
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut p = inv;
    for c in STIRLING {
        series += c * p;
        p *= inv2;
    }
    Ok((y - 0.5) * y.ln() - y + HALF_LN_TWO_PI + series - shift)
}

/// Beta function `B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y)`, evaluated in
/// the log domain so arguments like 2^15 stay finite.
pub fn beta_fn(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0) || !(y > 0.0) {
        return Err(Error::Domain(format!(
            "beta_fn requires positive arguments, got ({x}, {y})"
        )));
    }
    Ok((log_gamma(x)? + log_gamma(y)? - log_gamma(x + y)?).exp())
}
