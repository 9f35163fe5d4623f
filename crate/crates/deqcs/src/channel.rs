//! Ground-truth channel generators and dataset persistence.
//!
//! Three families: plain synthetic `2k`-sparse vectors, far-field channels
//! that are sparse under the unitary DFT, and near-field spherical-wave
//! channels that are sparse in a polar (angle × distance) dictionary. All
//! generators normalize the channel to unit norm so noise level alone
//! controls the SNR.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::cplx::{cnorm, CMat, Cplx};
use crate::model::{embed_vec, ChannelInstance, Source};
use crate::{Error, Result};

/// How synthetic nonzero amplitudes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmpDist {
    /// Standard normal amplitudes.
    Gaussian,
    /// Unit magnitude with random sign.
    Unit,
}

/// Exactly `2k`-sparse vector in `R^{2N}` with unit norm (zero vector for
/// `k = 0`). Support positions are uniform without replacement.
pub fn gen_sparse(
    n2: usize,
    k: usize,
    amp_dist: AmpDist,
    rng: &mut impl Rng,
) -> Result<ChannelInstance> {
    if 2 * k > n2 {
        return Err(Error::Validation(format!(
            "sparsity 2k = {} exceeds dimension 2N = {n2}",
            2 * k
        )));
    }
    let mut h = vec![0.0; n2];
    if k > 0 {
        let support = sample(rng, n2, 2 * k);
        for idx in support {
            h[idx] = loop {
                let v = match amp_dist {
                    AmpDist::Gaussian => rng.sample::<f64, _>(StandardNormal),
                    AmpDist::Unit => {
                        if rng.gen::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                if v != 0.0 {
                    break v;
                }
            };
        }
        let norm = crate::linalg::nrm2(&h);
        for v in h.iter_mut() {
            *v /= norm;
        }
    }
    Ok(ChannelInstance {
        h,
        k,
        source: Source::Synthetic,
        seed: 0,
    })
}

/// Geometry of a near-field uniform linear array and its polar grid.
#[derive(Debug, Clone, Copy)]
pub struct NearFieldParams {
    /// Antenna count `N`.
    pub n_ant: usize,
    /// Path count `L`.
    pub n_paths: usize,
    /// Carrier wavelength (meters).
    pub lambda_c: f64,
    /// Element spacing (meters), conventionally `λ_c / 2`.
    pub d: f64,
    /// Distance samples per angle (`R`).
    pub r_samples: usize,
    /// Closest admissible source distance (meters).
    pub r_min: f64,
    /// Farthest grid distance (meters).
    pub r_max: f64,
}

impl NearFieldParams {
    /// Half-wavelength-spaced array for a carrier frequency in Hz.
    pub fn for_carrier(
        n_ant: usize,
        n_paths: usize,
        f_c_hz: f64,
        r_samples: usize,
        r_min: f64,
        r_max: f64,
    ) -> Self {
        let lambda_c = 299_792_458.0 / f_c_hz;
        NearFieldParams {
            n_ant,
            n_paths,
            lambda_c,
            d: lambda_c / 2.0,
            r_samples,
            r_min,
            r_max,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_ant == 0 || self.r_samples == 0 {
            return Err(Error::Validation("need N ≥ 1 and R ≥ 1".into()));
        }
        if !(self.lambda_c > 0.0) || !(self.d > 0.0) {
            return Err(Error::Validation(
                "wavelength and spacing must be positive".into(),
            ));
        }
        if !(self.r_min > 0.0) || self.r_max < self.r_min {
            return Err(Error::Validation(
                "need 0 < r_min ≤ r_max for the distance grid".into(),
            ));
        }
        Ok(())
    }

    /// Midpoint-uniform cosine grid over `[−1, 1]`; avoids the exact endfire
    /// cosines `±1`, where every distance ring degenerates to the same
    /// steering vector.
    pub fn cosine_grid(&self) -> Vec<f64> {
        let n = self.n_ant as f64;
        (0..self.n_ant)
            .map(|i| (2 * i + 1) as f64 / n - 1.0)
            .collect()
    }

    /// Reciprocal-rule distance grid `r_s = N²d²/(2 λ_c s)`, `s = 1..R`,
    /// clipped to `[r_min, r_max]`.
    pub fn distance_grid(&self) -> Vec<f64> {
        let base = (self.n_ant as f64).powi(2) * self.d * self.d / (2.0 * self.lambda_c);
        (1..=self.r_samples)
            .map(|s| (base / s as f64).clamp(self.r_min, self.r_max))
            .collect()
    }
}

/// Spherical-wave array response for a source at angle `theta` (radians)
/// and distance `r` (meters) from the first element.
///
/// Entry `n` is `(1/√N)·exp(−j·(2π/λ_c)·(r^{(n)} − r))` where `r^{(n)}` is
/// the exact distance from element `n`:
/// `r^{(n)} = √(r² + ((n−1)d)² − 2r(n−1)d·cos θ)`.
///
/// The difference `r^{(n)} − r` is evaluated in a cancellation-free form so
/// the far-field limit (`r → ∞`) keeps full phase accuracy.
pub fn nearfield_steering(theta: f64, r: f64, p: &NearFieldParams) -> Result<Vec<Cplx>> {
    p.validate()?;
    if r < p.r_min {
        return Err(Error::Validation(format!(
            "source distance {r} below r_min = {}",
            p.r_min
        )));
    }
    let scale = 1.0 / (p.n_ant as f64).sqrt();
    let cos_t = theta.cos();
    let out = (0..p.n_ant)
        .map(|n| {
            let offset = n as f64 * p.d;
            let delta = offset * offset - 2.0 * r * offset * cos_t;
            let rn = (r * r + delta).max(0.0).sqrt();
            let path_diff = delta / (rn + r);
            Cplx::expi(-2.0 * std::f64::consts::PI / p.lambda_c * path_diff).scale(scale)
        })
        .collect();
    Ok(out)
}

/// Planar-wave (far-field) array response at a given direction cosine:
/// entry `n` is `(1/√N)·exp(+j·(2π/λ_c)·(n−1)d·cos θ)` — the `r → ∞`
/// limit of [`nearfield_steering`].
pub fn farfield_steering(cos_theta: f64, p: &NearFieldParams) -> Vec<Cplx> {
    let scale = 1.0 / (p.n_ant as f64).sqrt();
    (0..p.n_ant)
        .map(|n| {
            Cplx::expi(2.0 * std::f64::consts::PI / p.lambda_c * n as f64 * p.d * cos_theta)
                .scale(scale)
        })
        .collect()
}

/// Polar sparsifying dictionary: `N × (N·R)` with column `i·R + s` the
/// steering vector at cosine-grid angle `i` and distance-ring `s`. Every
/// column has unit norm.
pub fn build_polar_dictionary(p: &NearFieldParams) -> Result<CMat> {
    p.validate()?;
    let cosines = p.cosine_grid();
    let dists = p.distance_grid();
    let mut dict = CMat::zeros(p.n_ant, p.n_ant * p.r_samples);
    for (i, &c) in cosines.iter().enumerate() {
        let theta = c.acos();
        for (s, &r) in dists.iter().enumerate() {
            let b = nearfield_steering(theta, r, p)?;
            let col = i * p.r_samples + s;
            for (row, v) in b.into_iter().enumerate() {
                dict.set(row, col, v);
            }
        }
    }
    Ok(dict)
}

/// Draw an on-grid near-field channel: `L` distinct polar-grid columns with
/// complex-Gaussian gains, normalized so the spatial channel has unit norm.
///
/// Returns `(h_complex, h_polar_sparse)` with `h_complex = A_nf · h_polar`
/// exact to dictionary-synthesis precision.
pub fn gen_nearfield_channel(
    p: &NearFieldParams,
    rng: &mut impl Rng,
) -> Result<(Vec<Cplx>, Vec<Cplx>)> {
    p.validate()?;
    let grid = p.n_ant * p.r_samples;
    if p.n_paths == 0 || p.n_paths > grid {
        return Err(Error::Validation(format!(
            "path count {} outside 1..={grid}",
            p.n_paths
        )));
    }
    let dict = build_polar_dictionary(p)?;
    loop {
        let cols = sample(rng, grid, p.n_paths);
        let mut h_polar = vec![Cplx::ZERO; grid];
        for col in cols {
            h_polar[col] = Cplx::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        let h = dict.matvec(&h_polar);
        let norm = cnorm(&h);
        if norm > 1e-12 {
            let inv = 1.0 / norm;
            let h = h.into_iter().map(|v| v.scale(inv)).collect();
            let h_polar = h_polar.into_iter().map(|v| v.scale(inv)).collect();
            return Ok((h, h_polar));
        }
        // Gain cancellation made the channel numerically zero; redraw.
    }
}

/// Unitary DFT matrix `F[n, i] = (1/√N)·exp(−j·2πni/N)`.
pub fn dft_matrix(n: usize) -> CMat {
    let mut f = CMat::zeros(n, n);
    let scale = 1.0 / (n as f64).sqrt();
    for r in 0..n {
        for c in 0..n {
            let phi = -2.0 * std::f64::consts::PI * (r * c % n) as f64 / n as f64;
            f.set(r, c, Cplx::expi(phi).scale(scale));
        }
    }
    f
}

/// Draw a far-field channel sparse on the DFT grid: `h = F s` with `s`
/// `L`-sparse, complex-Gaussian gains, normalized to `‖s‖ = ‖h‖ = 1`.
///
/// Returns `(h_complex, s_angular_sparse)`.
pub fn gen_farfield_channel(
    n: usize,
    l: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<Cplx>, Vec<Cplx>)> {
    if l == 0 || l > n {
        return Err(Error::Validation(format!(
            "path count {l} outside 1..={n}"
        )));
    }
    let f = dft_matrix(n);
    loop {
        let cols = sample(rng, n, l);
        let mut s = vec![Cplx::ZERO; n];
        for col in cols {
            s[col] = Cplx::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        let norm = cnorm(&s);
        if norm > 1e-12 {
            let inv = 1.0 / norm;
            for v in s.iter_mut() {
                *v = v.scale(inv);
            }
            let h = f.matvec(&s);
            return Ok((h, s));
        }
    }
}

/// Far-field channel as a real-embedded sparse estimand (the DFT-domain
/// vector `s`), ready for the standard problem.
pub fn farfield_instance(n: usize, l: usize, rng: &mut impl Rng) -> Result<ChannelInstance> {
    let (_, s) = gen_farfield_channel(n, l, rng)?;
    Ok(ChannelInstance {
        h: embed_vec(&s),
        k: l,
        source: Source::FarField,
        seed: 0,
    })
}

/// Near-field channel as a real-embedded sparse estimand (the polar-domain
/// vector), dimension `2·N·R`.
pub fn nearfield_instance(p: &NearFieldParams, rng: &mut impl Rng) -> Result<ChannelInstance> {
    let (_, h_polar) = gen_nearfield_channel(p, rng)?;
    Ok(ChannelInstance {
        h: embed_vec(&h_polar),
        k: p.n_paths,
        source: Source::NearField,
        seed: 0,
    })
}

/// An in-memory channel dataset; all samples share the ambient dimension.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub n2: usize,
    pub samples: Vec<ChannelInstance>,
}

const DATASET_MAGIC: &[u8; 4] = b"GUDL";
const DATASET_VERSION: u32 = 1;
/// Refuse to allocate for corrupt headers claiming more than this many
/// f64 values (8 GiB).
const MAX_DATASET_VALUES: u64 = 1 << 30;

/// Write a dataset: magic, version, count, dimension, all channel vectors
/// as little-endian f64, then per-sample half-sparsity as u32.
pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    for s in &ds.samples {
        if s.h.len() != ds.n2 {
            return Err(Error::Dim {
                what: "dataset sample",
                expected: ds.n2,
                got: s.h.len(),
            });
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DATASET_MAGIC)?;
    w.write_all(&DATASET_VERSION.to_le_bytes())?;
    w.write_all(&(ds.samples.len() as u64).to_le_bytes())?;
    w.write_all(&(ds.n2 as u64).to_le_bytes())?;
    for s in &ds.samples {
        for v in &s.h {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for s in &ds.samples {
        w.write_all(&(s.k as u32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_exact_or_truncated(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated dataset file".into())
        } else {
            Error::Io(e)
        }
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_truncated(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or_truncated(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Read a dataset written by [`save_dataset`]. Loaded samples carry
/// `Source::File` and seed 0.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    read_exact_or_truncated(&mut r, &mut magic)?;
    if &magic != DATASET_MAGIC {
        return Err(Error::Format(format!(
            "bad dataset magic {magic:?}, expected {DATASET_MAGIC:?}"
        )));
    }
    let version = read_u32(&mut r)?;
    if version != DATASET_VERSION {
        return Err(Error::Format(format!(
            "unsupported dataset version {version}"
        )));
    }
    let count = read_u64(&mut r)?;
    let n2 = read_u64(&mut r)?;
    let total = count
        .checked_mul(n2)
        .filter(|&t| t <= MAX_DATASET_VALUES)
        .ok_or_else(|| Error::Format("dataset header claims an implausible size".into()))?;
    let mut values = vec![0.0f64; total as usize];
    let mut b = [0u8; 8];
    for v in values.iter_mut() {
        read_exact_or_truncated(&mut r, &mut b)?;
        *v = f64::from_le_bytes(b);
    }
    let mut ks = Vec::with_capacity(count as usize);
    for _ in 0..count {
        ks.push(read_u32(&mut r)?);
    }
    let n2 = n2 as usize;
    let samples = values
        .chunks_exact(n2)
        .zip(ks)
        .map(|(chunk, k)| ChannelInstance {
            h: chunk.to_vec(),
            k: k as usize,
            source: Source::File,
            seed: 0,
        })
        .collect();
    Ok(Dataset { n2, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{nrm1, nrm2};
    use crate::util::root_rng;

    fn phase_gap(a: Cplx, b: Cplx) -> f64 {
        let z = a * b.conj();
        z.im.atan2(z.re).abs()
    }

    #[test]
    fn sparse_generator_counts_and_norm() {
        let mut rng = root_rng(1);
        let zero = gen_sparse(16, 0, AmpDist::Gaussian, &mut rng).unwrap();
        assert!(zero.h.iter().all(|&v| v == 0.0));

        let inst = gen_sparse(512, 3, AmpDist::Gaussian, &mut rng).unwrap();
        assert_eq!(inst.nnz(), 6);
        assert!((nrm2(&inst.h) - 1.0).abs() < 1e-12);
        inst.validate().unwrap();

        // Dense case still bounded by Cauchy–Schwarz.
        let dense = gen_sparse(32, 16, AmpDist::Unit, &mut rng).unwrap();
        assert_eq!(dense.nnz(), 32);
        assert!(nrm1(&dense.h) / nrm2(&dense.h) <= 32f64.sqrt() + 1e-12);

        assert!(gen_sparse(8, 5, AmpDist::Gaussian, &mut rng).is_err());
    }

    #[test]
    fn sparse_generator_is_deterministic() {
        let a = gen_sparse(64, 4, AmpDist::Gaussian, &mut root_rng(9)).unwrap();
        let b = gen_sparse(64, 4, AmpDist::Gaussian, &mut root_rng(9)).unwrap();
        assert_eq!(a.h, b.h);
    }

    fn test_params(n_ant: usize, r_samples: usize) -> NearFieldParams {
        NearFieldParams::for_carrier(n_ant, 3, 28e9, r_samples, 0.1, 100.0)
    }

    #[test]
    fn steering_basics() {
        // Single element: trivially [1].
        let p1 = test_params(1, 1);
        let b = nearfield_steering(0.7, 5.0, &p1).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0].re - 1.0).abs() < 1e-15 && b[0].im.abs() < 1e-15);

        // First entry is always 1/√N; whole vector unit norm.
        let p = test_params(16, 4);
        let b = nearfield_steering(1.1, 2.0, &p).unwrap();
        assert!((b[0].re - 0.25).abs() < 1e-15 && b[0].im.abs() < 1e-15);
        assert!((cnorm(&b) - 1.0).abs() < 1e-12);

        // Below r_min is rejected.
        assert!(nearfield_steering(1.1, 0.01, &p).is_err());
    }

    #[test]
    fn steering_approaches_planar_wave() {
        let mut p = test_params(16, 1);
        p.r_max = 2e6;
        for &cos_t in &[-0.9f64, -0.3, 0.2, 0.77] {
            let theta = cos_t.acos();
            let near = nearfield_steering(theta, 1e6, &p).unwrap();
            let far = farfield_steering(cos_t, &p);
            let worst = near
                .iter()
                .zip(&far)
                .map(|(a, b)| phase_gap(*a, *b))
                .fold(0.0, f64::max);
            assert!(worst < 1e-3, "max phase error {worst} at cosθ = {cos_t}");
        }
    }

    #[test]
    fn polar_dictionary_shape_and_column_norms() {
        let p = test_params(4, 2);
        let dict = build_polar_dictionary(&p).unwrap();
        assert_eq!((dict.rows, dict.cols), (4, 8));
        for c in 0..dict.cols {
            let norm: f64 = (0..dict.rows)
                .map(|r| dict.get(r, c).abs_sq())
                .sum::<f64>()
                .sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn polar_dictionary_far_limit_matches_planar_grid() {
        // One distance ring pinned at a huge radius → far-field dictionary.
        let mut p = test_params(16, 1);
        p.r_min = 1e6;
        p.r_max = 1e6;
        let dict = build_polar_dictionary(&p).unwrap();
        for (i, &cos_t) in p.cosine_grid().iter().enumerate() {
            let far = farfield_steering(cos_t, &p);
            let worst = (0..p.n_ant)
                .map(|r| phase_gap(dict.get(r, i), far[r]))
                .fold(0.0, f64::max);
            assert!(worst < 1e-3, "angle {i}: phase error {worst}");
        }
    }

    #[test]
    fn polar_dictionary_coherence_below_one() {
        let p = test_params(16, 4);
        let dict = build_polar_dictionary(&p).unwrap();
        let mut worst = 0.0f64;
        for a in 0..dict.cols {
            for b in (a + 1)..dict.cols {
                let mut acc = Cplx::ZERO;
                for r in 0..dict.rows {
                    acc = acc + dict.get(r, a).conj() * dict.get(r, b);
                }
                worst = worst.max(acc.abs());
            }
        }
        assert!(worst < 1.0 - 1e-6, "worst off-diagonal coherence {worst}");
    }

    #[test]
    fn nearfield_channel_synthesis_identity() {
        let p = test_params(16, 4);
        let (h, h_polar) = gen_nearfield_channel(&p, &mut root_rng(5)).unwrap();
        assert_eq!(h.len(), 16);
        assert_eq!(h_polar.len(), 64);
        assert_eq!(h_polar.iter().filter(|v| v.abs() > 0.0).count(), 3);
        assert!((cnorm(&h) - 1.0).abs() < 1e-12);
        let dict = build_polar_dictionary(&p).unwrap();
        let recon = dict.matvec(&h_polar);
        let err: f64 = recon
            .iter()
            .zip(&h)
            .map(|(a, b)| (*a - *b).abs_sq())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10);
    }

    #[test]
    fn single_path_nearfield_is_one_column() {
        let mut p = test_params(8, 2);
        p.n_paths = 1;
        let (h, h_polar) = gen_nearfield_channel(&p, &mut root_rng(3)).unwrap();
        let col = h_polar.iter().position(|v| v.abs() > 0.0).unwrap();
        let dict = build_polar_dictionary(&p).unwrap();
        // h is the dictionary column scaled by the (normalized) gain.
        let gain = h_polar[col];
        for r in 0..8 {
            let want = dict.get(r, col) * gain;
            assert!((h[r] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn farfield_channel_dft_identities() {
        let n = 32;
        let (h, s) = gen_farfield_channel(n, 1, &mut root_rng(2)).unwrap();
        // Single path: flat magnitude 1/√N.
        for v in &h {
            assert!((v.abs() - 1.0 / (n as f64).sqrt()).abs() < 1e-12);
        }
        // Round trip Fᴴ h = s.
        let f = dft_matrix(n);
        let back = f.matvec_h(&h);
        for (a, b) in back.iter().zip(&s) {
            assert!((*a - *b).abs() < 1e-12);
        }
        // Norm preservation.
        let (h3, s3) = gen_farfield_channel(n, 3, &mut root_rng(4)).unwrap();
        assert!((cnorm(&h3) - cnorm(&s3)).abs() < 1e-12);
        assert!((cnorm(&s3) - 1.0).abs() < 1e-12);
        assert!(gen_farfield_channel(4, 5, &mut root_rng(1)).is_err());
    }

    #[test]
    fn embedded_instances_have_declared_sparsity() {
        let ff = farfield_instance(32, 3, &mut root_rng(6)).unwrap();
        assert_eq!(ff.h.len(), 64);
        ff.validate().unwrap();
        assert!(ff.nnz() <= 6);

        let p = test_params(8, 2);
        let nf = nearfield_instance(&p, &mut root_rng(7)).unwrap();
        assert_eq!(nf.h.len(), 32);
        nf.validate().unwrap();
    }

    #[test]
    fn dataset_round_trip_is_bit_exact() {
        let mut rng = root_rng(11);
        let samples: Vec<ChannelInstance> = (0..5)
            .map(|_| gen_sparse(24, 2, AmpDist::Gaussian, &mut rng).unwrap())
            .collect();
        let ds = Dataset { n2: 24, samples };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("channels.bin");
        save_dataset(&path, &ds).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back.n2, 24);
        assert_eq!(back.samples.len(), 5);
        for (a, b) in back.samples.iter().zip(&ds.samples) {
            assert_eq!(a.h, b.h); // bit-exact f64 round trip
            assert_eq!(a.k, b.k);
            assert_eq!(a.source, Source::File);
        }
    }

    #[test]
    fn dataset_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Format(_))));

        // Valid magic but truncated body.
        let ds = Dataset {
            n2: 8,
            samples: vec![gen_sparse(8, 1, AmpDist::Unit, &mut root_rng(0)).unwrap()],
        };
        let full = dir.path().join("full.bin");
        save_dataset(&full, &ds).unwrap();
        let bytes = std::fs::read(&full).unwrap();
        let cut = dir.path().join("cut.bin");
        std::fs::write(&cut, &bytes[..bytes.len() - 6]).unwrap();
        assert!(matches!(load_dataset(&cut), Err(Error::Format(_))));

        // Dimension mismatch on save.
        let bad = Dataset {
            n2: 16,
            samples: ds.samples.clone(),
        };
        assert!(save_dataset(&dir.path().join("x.bin"), &bad).is_err());
    }
}
