//! Sparse multipath mmWave channel generation over a uniform linear array.
//!
//! Each of the K users gets L dominant paths (L <= 3 in sparse mmWave
//! channels). Angles of departure are uniform on [-pi/2, pi/2] and path
//! gains are CN(0, 1/L), so the expected squared channel norm per user is 1
//! regardless of L.

use std::io::{BufRead, BufReader, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::numerics::ComplexMatrix;
use crate::rng::{substream, Purpose};
use crate::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Uniform linear array geometry: M elements at spacing d, carrier f_c.
#[derive(Debug, Clone, Copy)]
pub struct ArrayGeometry {
    pub antennas: usize,
    pub carrier_hz: f64,
    pub wavelength_m: f64,
    pub spacing_m: f64,
}

impl ArrayGeometry {
    /// Half-wavelength spacing at the given carrier: d = c / (2 f_c).
    pub fn half_wavelength(antennas: usize, carrier_hz: f64) -> Result<Self> {
        if antennas == 0 {
            return Err(Error::Config("array needs at least one antenna".into()));
        }
        if !(carrier_hz > 0.0) {
            return Err(Error::Config(format!(
                "carrier frequency must be positive, got {carrier_hz}"
            )));
        }
        let wavelength_m = SPEED_OF_LIGHT / carrier_hz;
        Ok(Self {
            antennas,
            carrier_hz,
            wavelength_m,
            spacing_m: wavelength_m / 2.0,
        })
    }

    /// The 60 GHz array used throughout the experiments.
    pub fn default_60ghz(antennas: usize) -> Result<Self> {
        Self::half_wavelength(antennas, 60e9)
    }

    pub fn spacing_ratio(&self) -> f64 {
        self.spacing_m / self.wavelength_m
    }
}

/// One propagation path: complex gain, angle of departure, and the spatial
/// frequency (d/lambda) sin(theta) it maps to.
#[derive(Debug, Clone, Copy)]
pub struct PathComponent {
    pub gain: Complex64,
    pub aod_rad: f64,
    pub spatial_freq: f64,
}

/// K users' spatial-domain channels plus their path decompositions.
///
/// `users` is empty for channel sets imported from CSV, where only the
/// matrix is available; the path-sum invariant applies whenever paths are
/// present.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub geometry: ArrayGeometry,
    pub users: Vec<Vec<PathComponent>>,
    pub matrix: ComplexMatrix,
}

/// Unit-norm steering vector of length M at spatial frequency `phi`:
/// element m is (1/sqrt(M)) exp(-j 2 pi phi m).
pub fn steering_vector(phi: f64, m: usize) -> Vec<Complex64> {
    assert!(m >= 1);
    let scale = 1.0 / (m as f64).sqrt();
    (0..m)
        .map(|idx| Complex64::from_polar(scale, -2.0 * std::f64::consts::PI * phi * idx as f64))
        .collect()
}

/// Spatial frequency (d/lambda) sin(theta) for an angle of departure.
pub fn spatial_frequency(theta_rad: f64, geometry: &ArrayGeometry) -> Result<f64> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    if !(-half_pi..=half_pi).contains(&theta_rad) {
        return Err(Error::Domain(format!(
            "angle of departure {theta_rad} outside [-pi/2, pi/2]"
        )));
    }
    Ok(geometry.spacing_ratio() * theta_rad.sin())
}

pub(crate) fn complex_gaussian(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Draws one user's paths and spatial channel column.
fn sample_user(
    geometry: &ArrayGeometry,
    paths: usize,
    rng: &mut impl Rng,
) -> (Vec<PathComponent>, Vec<Complex64>) {
    let m = geometry.antennas;
    let mut components = Vec::with_capacity(paths);
    let mut column = vec![Complex64::new(0.0, 0.0); m];
    for _ in 0..paths {
        let aod = rng.gen_range(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2);
        let phi = geometry.spacing_ratio() * aod.sin();
        let gain = complex_gaussian(rng, 1.0 / paths as f64);
        let a = steering_vector(phi, m);
        for (c, s) in column.iter_mut().zip(&a) {
            *c += gain * s;
        }
        components.push(PathComponent {
            gain,
            aod_rad: aod,
            spatial_freq: phi,
        });
    }
    (components, column)
}

/// Samples K users' channels, L paths each. Per-user substreams are derived
/// from the user index, so the result does not depend on evaluation order.
pub fn sample_channel_set(
    geometry: &ArrayGeometry,
    users: usize,
    paths_per_user: usize,
    seed: u64,
    purpose: Purpose,
    trial: u64,
) -> Result<ChannelSet> {
    if users == 0 {
        return Err(Error::Config("need at least one user".into()));
    }
    if !(1..=3).contains(&paths_per_user) {
        return Err(Error::Config(format!(
            "paths per user must be in 1..=3 (multipath sparsity), got {paths_per_user}"
        )));
    }
    let m = geometry.antennas;
    let mut matrix = ComplexMatrix::zeros(m, users);
    let mut all = Vec::with_capacity(users);
    for k in 0..users {
        let mut rng = substream(seed, purpose, trial, k as u64);
        let (components, column) = sample_user(geometry, paths_per_user, &mut rng);
        for (r, v) in column.into_iter().enumerate() {
            matrix[(r, k)] = v;
        }
        all.push(components);
    }
    Ok(ChannelSet {
        geometry: *geometry,
        users: all,
        matrix,
    })
}

impl ChannelSet {
    pub fn antennas(&self) -> usize {
        self.matrix.rows()
    }

    pub fn user_count(&self) -> usize {
        self.matrix.cols()
    }

    /// Writes the channel matrix as CSV: a metadata header row (M, K, L,
    /// seed) followed by M rows of interleaved real/imag entry pairs.
    pub fn write_csv<W: Write>(&self, mut w: W, paths: usize, seed: u64) -> std::io::Result<()> {
        writeln!(w, "M,K,L,seed")?;
        writeln!(
            w,
            "{},{},{},{}",
            self.antennas(),
            self.user_count(),
            paths,
            seed
        )?;
        let header: Vec<String> = (0..self.user_count())
            .flat_map(|k| [format!("h{k}_re"), format!("h{k}_im")])
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for r in 0..self.antennas() {
            let row: Vec<String> = (0..self.user_count())
                .flat_map(|k| {
                    let z = self.matrix[(r, k)];
                    [format!("{:.17e}", z.re), format!("{:.17e}", z.im)]
                })
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads a channel matrix written by [`ChannelSet::write_csv`]. Returns
    /// the set together with the recorded (L, seed) metadata. The imported
    /// set carries no path decomposition.
    pub fn read_csv<R: std::io::Read>(r: R, geometry: ArrayGeometry) -> Result<(Self, usize, u64)> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of channel CSV".into()))?
                .map_err(|e| Error::Parse(format!("channel CSV read failed: {e}")))
        };
        let head = next_line()?;
        if head.trim() != "M,K,L,seed" {
            return Err(Error::Parse(format!(
                "bad channel CSV header: {head:?}"
            )));
        }
        let meta = next_line()?;
        let vals: Vec<&str> = meta.trim().split(',').collect();
        if vals.len() != 4 {
            return Err(Error::Parse("channel CSV metadata needs 4 fields".into()));
        }
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad integer {s:?} in channel CSV")))
        };
        let m = parse_usize(vals[0])?;
        let k = parse_usize(vals[1])?;
        let paths = parse_usize(vals[2])?;
        let seed = vals[3]
            .parse::<u64>()
            .map_err(|_| Error::Parse(format!("bad seed {:?} in channel CSV", vals[3])))?;
        if m != geometry.antennas {
            return Err(Error::Config(format!(
                "channel CSV is for M={m}, geometry has M={}",
                geometry.antennas
            )));
        }
        let _column_header = next_line()?;
        let mut matrix = ComplexMatrix::zeros(m, k);
        for r in 0..m {
            let line = next_line()?;
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 2 * k {
                return Err(Error::Parse(format!(
                    "channel CSV row {r} has {} fields, expected {}",
                    fields.len(),
                    2 * k
                )));
            }
            for c in 0..k {
                let re = fields[2 * c]
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad float in channel CSV row {r}")))?;
                let im = fields[2 * c + 1]
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad float in channel CSV row {r}")))?;
                matrix[(r, c)] = Complex64::new(re, im);
            }
        }
        Ok((
            ChannelSet {
                geometry,
                users: Vec::new(),
                matrix,
            },
            paths,
            seed,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cos2_angle, vector_norm};

    fn geometry(m: usize) -> ArrayGeometry {
        ArrayGeometry::default_60ghz(m).unwrap()
    }

    #[test]
    fn geometry_is_half_wavelength() {
        let g = geometry(256);
        assert!((g.wavelength_m - 0.005).abs() < 1e-5); // c/60GHz = 4.9965 mm
        assert!((g.spacing_ratio() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn steering_examples() {
        let a = steering_vector(0.0, 4);
        for z in &a {
            assert!((z - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        let b = steering_vector(0.5, 2);
        let s = 1.0 / 2f64.sqrt();
        assert!((b[0] - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((b[1] - Complex64::new(-s, 0.0)).norm() < 1e-12);
        for phi in [-0.41, 0.0, 0.123, 0.5] {
            assert!((vector_norm(&steering_vector(phi, 33)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spatial_frequency_examples() {
        let g = geometry(8);
        assert!(spatial_frequency(0.0, &g).unwrap().abs() < 1e-15);
        let end = spatial_frequency(std::f64::consts::FRAC_PI_2, &g).unwrap();
        assert!((end - 0.5).abs() < 1e-9);
        let third = spatial_frequency(std::f64::consts::FRAC_PI_6, &g).unwrap();
        assert!((third - 0.25).abs() < 1e-9);
        assert!(spatial_frequency(2.0, &g).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = geometry(64);
        let a = sample_channel_set(&g, 8, 3, 7, Purpose::Channel, 0).unwrap();
        let b = sample_channel_set(&g, 8, 3, 7, Purpose::Channel, 0).unwrap();
        assert_eq!(a.matrix, b.matrix);
        let c = sample_channel_set(&g, 8, 3, 8, Purpose::Channel, 0).unwrap();
        assert_ne!(a.matrix, c.matrix);
    }

    #[test]
    fn column_matches_path_sum() {
        let g = geometry(32);
        let set = sample_channel_set(&g, 4, 3, 11, Purpose::Channel, 2).unwrap();
        for k in 0..4 {
            let mut rebuilt = vec![Complex64::new(0.0, 0.0); 32];
            for p in &set.users[k] {
                let a = steering_vector(p.spatial_freq, 32);
                for (r, s) in rebuilt.iter_mut().zip(&a) {
                    *r += p.gain * s;
                }
            }
            let col = set.matrix.col(k);
            for (a, b) in col.iter().zip(&rebuilt) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_energy_is_unit() {
        let g = geometry(64);
        let mut sum = 0.0;
        let mut n = 0usize;
        for trial in 0..1250u64 {
            let set = sample_channel_set(&g, 8, 2, 3, Purpose::Channel, trial).unwrap();
            for k in 0..8 {
                sum += vector_norm(&set.matrix.col(k)).powi(2);
                n += 1;
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean energy {mean}");
    }

    #[test]
    fn single_path_is_collinear_with_steering() {
        let g = geometry(256);
        let set = sample_channel_set(&g, 16, 1, 5, Purpose::Channel, 0).unwrap();
        for k in 0..16 {
            let a = steering_vector(set.users[k][0].spatial_freq, 256);
            let c = cos2_angle(&set.matrix.col(k), &a).unwrap();
            assert!((c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn aod_is_uniform_ks() {
        let mut aods = Vec::with_capacity(100_000);
        let g = geometry(4);
        let mut trial = 0u64;
        while aods.len() < 100_000 {
            let set = sample_channel_set(&g, 20, 1, 99, Purpose::Channel, trial).unwrap();
            for u in &set.users {
                aods.push(u[0].aod_rad);
            }
            trial += 1;
        }
        aods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = aods.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &x) in aods.iter().enumerate() {
            let cdf = (x + std::f64::consts::FRAC_PI_2) / std::f64::consts::PI;
            ks = ks
                .max((cdf - i as f64 / n).abs())
                .max(((i + 1) as f64 / n - cdf).abs());
        }
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn rejects_bad_path_counts() {
        let g = geometry(16);
        assert!(sample_channel_set(&g, 4, 0, 1, Purpose::Channel, 0).is_err());
        assert!(sample_channel_set(&g, 4, 4, 1, Purpose::Channel, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = geometry(16);
        let set = sample_channel_set(&g, 3, 2, 21, Purpose::Channel, 4).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf, 2, 21).unwrap();
        let (back, paths, seed) = ChannelSet::read_csv(&buf[..], g).unwrap();
        assert_eq!(paths, 2);
        assert_eq!(seed, 21);
        assert!(back.matrix.max_abs_diff(&set.matrix) < 1e-15);
    }
}
