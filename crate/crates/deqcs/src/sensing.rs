//! Partial-orthogonal measurement operators and the noisy forward model.
//!
//! All generators return wide matrices with exactly orthonormal rows
//! (`A Aᵀ = I`), so the projector `P = AᵀA` and the sufficient statistic
//! `u = AᵀC⁻¹y` inherit clean algebraic identities downstream.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, Mat};
use crate::model::StandardProblem;
use crate::{Error, Result};

/// Which partial-orthogonal family to draw the measurement matrix from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// Random row subset of an orthonormal DCT-II with random column signs.
    /// Low-coherence: `√(2N)·max|A_ij| ≤ √2`.
    SubsampledDct,
    /// Rows of a Haar-like random orthonormal basis (Gaussian + Gram–Schmidt).
    RowSubsampledOrthonormal,
}

/// Shape and family of a measurement operator.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementConfig {
    /// Half the ambient dimension (`N`); the matrix has `2N` columns.
    pub n_half: usize,
    /// Half the measurement count (`M`); the matrix has `2M` rows.
    pub m_half: usize,
    pub kind: MatrixKind,
}

/// Orthonormal DCT-II entry: rows are exactly orthonormal.
fn dct2_entry(p: usize, c: usize, n: usize) -> f64 {
    let scale = if p == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    };
    scale * (std::f64::consts::PI * (2 * c + 1) as f64 * p as f64 / (2 * n) as f64).cos()
}

/// Draw a `2M × 2N` partial-orthogonal measurement matrix.
///
/// `SubsampledDct` composes a sorted random row subset of the orthonormal
/// DCT-II with a random `±1` column sign flip, so `A Aᵀ = I` holds to
/// machine precision and the coherence stays within `√2`.
pub fn build_measurement(cfg: &MeasurementConfig, rng: &mut impl Rng) -> Result<Mat> {
    if cfg.m_half == 0 || cfg.n_half == 0 {
        return Err(Error::Validation("dimensions must be positive".into()));
    }
    if cfg.m_half >= cfg.n_half {
        return Err(Error::Validation(format!(
            "need undersampling (M < N), got M={}, N={}",
            cfg.m_half, cfg.n_half
        )));
    }
    let n2 = 2 * cfg.n_half;
    let m2 = 2 * cfg.m_half;
    match cfg.kind {
        MatrixKind::SubsampledDct => {
            let mut rows: Vec<usize> = sample(rng, n2, m2).into_vec();
            rows.sort_unstable();
            let signs: Vec<f64> = (0..n2)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            Ok(Mat::from_fn(m2, n2, |r, c| {
                dct2_entry(rows[r], c, n2) * signs[c]
            }))
        }
        MatrixKind::RowSubsampledOrthonormal => {
            // Orthonormalize 2M Gaussian columns in R^{2N}, then transpose.
            loop {
                let mut cols = Mat::from_fn(n2, m2, |_, _| rng.sample::<f64, _>(StandardNormal));
                if linalg::orthonormalize_columns(&mut cols) {
                    return Ok(cols.transpose());
                }
                // Rank collapse has probability zero; redraw if it happens.
            }
        }
    }
}

/// Coherence proxy `√(2N) · max_ij |A_ij|` of a measurement matrix.
pub fn coherence(a: &Mat) -> f64 {
    (a.cols as f64).sqrt() * a.max_abs()
}

/// Sample `y = A h + n` with `n ~ N(0, (σ²/2)·C)`, `C = diag(c_diag)`.
pub fn measure(
    a: &Mat,
    c_diag: &[f64],
    sigma2: f64,
    h: &[f64],
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if h.len() != a.cols {
        return Err(Error::Dim {
            what: "channel h",
            expected: a.cols,
            got: h.len(),
        });
    }
    if c_diag.len() != a.rows {
        return Err(Error::Dim {
            what: "noise diagonal C",
            expected: a.rows,
            got: c_diag.len(),
        });
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::Validation(format!(
            "noise variance must be nonnegative, got {sigma2}"
        )));
    }
    let mut y = a.matvec(h);
    for (yi, ci) in y.iter_mut().zip(c_diag) {
        let z: f64 = rng.sample(StandardNormal);
        *yi += (0.5 * sigma2 * ci).sqrt() * z;
    }
    Ok(y)
}

/// Sufficient statistic `u = AᵀC⁻¹y`.
pub fn sufficient_statistic(a: &Mat, c_diag: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != a.rows || c_diag.len() != a.rows {
        return Err(Error::Dim {
            what: "measurement y / noise diagonal",
            expected: a.rows,
            got: y.len().max(c_diag.len()),
        });
    }
    let scaled: Vec<f64> = y.iter().zip(c_diag).map(|(yi, ci)| yi / ci).collect();
    Ok(a.matvec_t(&scaled))
}

/// Per-instance noise scale for a target SNR (dB), with
/// `SNR = ‖Ah‖² / E‖n‖²` and `E‖n‖² = (σ²/2)·Tr(C)`.
pub fn sigma2_for_snr(a: &Mat, c_diag: &[f64], h: &[f64], snr_db: f64) -> Result<f64> {
    let signal = linalg::nrm2_sq(&a.matvec(h));
    if signal <= 0.0 {
        return Err(Error::Numeric(
            "cannot calibrate noise to a zero-energy signal".into(),
        ));
    }
    let trace_c: f64 = c_diag.iter().sum();
    let snr_lin = 10f64.powf(snr_db / 10.0);
    Ok(2.0 * signal / (snr_lin * trace_c))
}

/// Convenience: calibrate `σ²` to `snr_db` for this channel, sample a noisy
/// measurement, and assemble the full problem. The matrix is trusted to be
/// partial orthogonal (it comes from [`build_measurement`]).
pub fn noisy_problem(
    a: &Mat,
    c_diag: &[f64],
    h: &[f64],
    snr_db: f64,
    rng: &mut impl Rng,
) -> Result<StandardProblem> {
    let sigma2 = sigma2_for_snr(a, c_diag, h, snr_db)?;
    let y = measure(a, c_diag, sigma2, h, rng)?;
    StandardProblem::new_unchecked(a.clone(), c_diag.to_vec(), sigma2, y)
}
