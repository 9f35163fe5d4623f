//! The real-valued standard estimation problem and its shared metrics.
//!
//! Everything downstream works on the real form `y = A h + n` with a wide
//! partial-orthogonal `A` (rows orthonormal, `A Aᵀ = I`), diagonal noise
//! covariance `(σ²/2)·C`, and the sufficient statistic `u = AᵀC⁻¹y`. Complex
//! systems enter through the block real embedding, which preserves norms and
//! partial orthogonality.

use crate::cplx::{CMat, Cplx};
use crate::linalg::{self, Mat};
use crate::{tol, Error, Result};

/// One fully-specified sensing problem in real form.
///
/// Immutable after construction; cheap to share by reference across solvers.
#[derive(Debug, Clone)]
pub struct StandardProblem {
    /// Measurement matrix, shape `2M × 2N`, with orthonormal rows.
    pub a: Mat,
    /// Diagonal of the noise-shape matrix `C` (length `2M`, all positive).
    /// The noise covariance is `(σ²/2)·C`.
    pub c_diag: Vec<f64>,
    /// Noise variance scale `σ²`.
    pub sigma2: f64,
    /// Measurement vector, length `2M`.
    pub y: Vec<f64>,
    /// Sufficient statistic `u = AᵀC⁻¹y`, length `2N`.
    pub u: Vec<f64>,
    /// Half the measurement count (`M`).
    pub m_half: usize,
    /// Half the ambient dimension (`N`).
    pub n_half: usize,
}

impl StandardProblem {
    /// Build a problem and verify its invariants: `A Aᵀ = I` within 1e-10,
    /// strictly positive diagonal `C`, `σ² ≥ 0`, and `2M < 2N`.
    pub fn new(a: Mat, c_diag: Vec<f64>, sigma2: f64, y: Vec<f64>) -> Result<Self> {
        validate_partial_orthogonal(&a, tol::ORTHO)?;
        Self::new_unchecked(a, c_diag, sigma2, y)
    }

    /// Build a problem without re-verifying `A Aᵀ = I`.
    ///
    /// For hot loops that stamp many problems from one already-validated
    /// matrix (the per-sample checks — dimensions, positive `C`, `σ²` — still
    /// run). The caller owns the partial-orthogonality guarantee.
    pub fn new_unchecked(a: Mat, c_diag: Vec<f64>, sigma2: f64, y: Vec<f64>) -> Result<Self> {
        let m2 = a.rows;
        let n2 = a.cols;
        if m2 >= n2 {
            return Err(Error::Validation(format!(
                "need an undersampled system (2M < 2N), got 2M={m2}, 2N={n2}"
            )));
        }
        if m2 % 2 != 0 || n2 % 2 != 0 {
            return Err(Error::Validation(format!(
                "real embedding dimensions must be even, got 2M={m2}, 2N={n2}"
            )));
        }
        if c_diag.len() != m2 {
            return Err(Error::Dim {
                what: "noise diagonal C",
                expected: m2,
                got: c_diag.len(),
            });
        }
        if c_diag.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Validation(
                "noise diagonal C must be strictly positive".into(),
            ));
        }
        if !(sigma2 >= 0.0) {
            return Err(Error::Validation(format!(
                "noise variance must be nonnegative, got {sigma2}"
            )));
        }
        if y.len() != m2 {
            return Err(Error::Dim {
                what: "measurement y",
                expected: m2,
                got: y.len(),
            });
        }
        let u = sufficient_statistic_raw(&a, &c_diag, &y);
        Ok(StandardProblem {
            a,
            c_diag,
            sigma2,
            y,
            u,
            m_half: m2 / 2,
            n_half: n2 / 2,
        })
    }

    /// Ambient (embedded) dimension `2N`.
    pub fn n2(&self) -> usize {
        2 * self.n_half
    }

    /// Measurement (embedded) dimension `2M`.
    pub fn m2(&self) -> usize {
        2 * self.m_half
    }

    /// Apply the orthogonal projector `P = AᵀA` onto the row space of `A`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.a.matvec_t(&self.a.matvec(v))
    }

    /// `Tr(C)` of the noise-shape diagonal.
    pub fn trace_c(&self) -> f64 {
        self.c_diag.iter().sum()
    }

    /// `AᵀCA u`, the data-fidelity anchor of the unsupervised loss. Since
    /// `u = AᵀC⁻¹y` and `AAᵀ = I`, this equals `Aᵀy`.
    pub fn atcau(&self) -> Vec<f64> {
        self.a.matvec_t(&self.y)
    }
}

/// Check `A Aᵀ = I` elementwise within `tolerance`.
pub fn validate_partial_orthogonal(a: &Mat, tolerance: f64) -> Result<()> {
    let m2 = a.rows;
    for r in 0..m2 {
        for s in r..m2 {
            let d = linalg::dot(a.row(r), a.row(s));
            let expect = if r == s { 1.0 } else { 0.0 };
            if (d - expect).abs() > tolerance {
                return Err(Error::Validation(format!(
                    "rows are not orthonormal: <row{r}, row{s}> = {d:.3e}"
                )));
            }
        }
    }
    Ok(())
}

fn sufficient_statistic_raw(a: &Mat, c_diag: &[f64], y: &[f64]) -> Vec<f64> {
    let scaled: Vec<f64> = y.iter().zip(c_diag).map(|(yi, ci)| yi / ci).collect();
    a.matvec_t(&scaled)
}

/// Apply the projector of `problem` to a vector with a dimension check.
pub fn project(problem: &StandardProblem, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != problem.n2() {
        return Err(Error::Dim {
            what: "projector input",
            expected: problem.n2(),
            got: v.len(),
        });
    }
    Ok(problem.project(v))
}

/// Where a ground-truth channel came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Synthetic,
    FarField,
    NearField,
    File,
}

/// A ground-truth channel in the real embedding, with sparsity metadata.
#[derive(Debug, Clone)]
pub struct ChannelInstance {
    /// Real-embedded channel vector, length `2N`.
    pub h: Vec<f64>,
    /// Half-sparsity: `h` has at most `2k` nonzero entries.
    pub k: usize,
    /// Generator provenance.
    pub source: Source,
    /// Seed the generator was called with (0 for file-loaded samples).
    pub seed: u64,
}

impl ChannelInstance {
    /// Number of exactly-nonzero entries.
    pub fn nnz(&self) -> usize {
        self.h.iter().filter(|&&v| v != 0.0).count()
    }

    /// Verify the declared sparsity bound `‖h‖₀ ≤ 2k`.
    pub fn validate(&self) -> Result<()> {
        let nnz = self.nnz();
        if nnz > 2 * self.k {
            return Err(Error::Validation(format!(
                "channel declares 2k = {} but has {} nonzeros",
                2 * self.k,
                nnz
            )));
        }
        Ok(())
    }
}

/// A complex sensing system prior to real embedding.
#[derive(Debug, Clone)]
pub struct ComplexSystem {
    /// Complex measurement matrix, shape `M × N`, partial unitary.
    pub a_c: CMat,
    /// Complex measurement vector, length `M`.
    pub y_c: Vec<Cplx>,
    /// Noise variance scale `σ²`.
    pub sigma2: f64,
}

/// Real embedding of a complex vector: `[Re(x); Im(x)]`.
pub fn embed_vec(x: &[Cplx]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * x.len());
    out.extend(x.iter().map(|v| v.re));
    out.extend(x.iter().map(|v| v.im));
    out
}

/// Block real embedding of a complex matrix:
/// `[[Re(A), −Im(A)], [Im(A), Re(A)]]`.
pub fn embed_mat(a_c: &CMat) -> Mat {
    let (m, n) = (a_c.rows, a_c.cols);
    Mat::from_fn(2 * m, 2 * n, |r, c| {
        let v = a_c.get(r % m, c % n);
        match (r < m, c < n) {
            (true, true) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
            (false, false) => v.re,
        }
    })
}

/// Embed a complex system into the equivalent real [`StandardProblem`]
/// with `C = I`.
///
/// The embedding preserves inner products, so a partial-unitary `A_c`
/// (`A_c A_cᴴ = I`) becomes a partial-orthogonal real matrix, and
/// `‖y‖₂ = ‖y_c‖₂`.
///
/// # Errors
/// Returns a validation error when `‖A_c A_cᴴ − I‖∞ > 1e-8`.
pub fn embed_complex(sys: &ComplexSystem) -> Result<StandardProblem> {
    let (m, n) = (sys.a_c.rows, sys.a_c.cols);
    if sys.y_c.len() != m {
        return Err(Error::Dim {
            what: "complex measurement y_c",
            expected: m,
            got: sys.y_c.len(),
        });
    }
    // Partial-unitarity check on the complex form.
    for r in 0..m {
        for s in r..m {
            let mut acc = Cplx::ZERO;
            for c in 0..n {
                acc = acc + sys.a_c.get(r, c) * sys.a_c.get(s, c).conj();
            }
            let expect = if r == s { Cplx::ONE } else { Cplx::ZERO };
            if (acc - expect).abs() > 1e-8 {
                return Err(Error::Validation(format!(
                    "complex matrix is not partial unitary: |(A Aᴴ − I)[{r},{s}]| = {:.3e}",
                    (acc - expect).abs()
                )));
            }
        }
    }
    let a = embed_mat(&sys.a_c);
    let y = embed_vec(&sys.y_c);
    let c_diag = vec![1.0; 2 * m];
    StandardProblem::new(a, c_diag, sys.sigma2, y)
}

/// Squared error `‖ĥ − h‖₂²`.
pub fn mse(h_hat: &[f64], h: &[f64]) -> Result<f64> {
    if h_hat.len() != h.len() {
        return Err(Error::Dim {
            what: "mse operands",
            expected: h.len(),
            got: h_hat.len(),
        });
    }
    Ok(h_hat.iter().zip(h).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Projected squared error `‖P(ĥ − h)‖₂²` — the part of the error visible
/// through the measurements.
pub fn pmse(h_hat: &[f64], h: &[f64], problem: &StandardProblem) -> Result<f64> {
    if h_hat.len() != h.len() || h.len() != problem.n2() {
        return Err(Error::Dim {
            what: "pmse operands",
            expected: problem.n2(),
            got: h_hat.len(),
        });
    }
    let diff = linalg::sub(h_hat, h);
    Ok(linalg::nrm2_sq(&problem.project(&diff)))
}

/// Normalized squared error `‖ĥ − h‖₂² / ‖h‖₂²`.
///
/// # Errors
/// Fails when the ground truth has zero norm.
pub fn nmse(h_hat: &[f64], h: &[f64]) -> Result<f64> {
    let denom = linalg::nrm2_sq(h);
    if denom <= 0.0 {
        return Err(Error::Numeric(
            "nmse undefined for a zero-norm ground truth".into(),
        ));
    }
    Ok(mse(h_hat, h)? / denom)
}

/// Batch NMSE as a ratio of expectations: `Σ‖ĥᵢ−hᵢ‖² / Σ‖hᵢ‖²`.
pub fn nmse_batch(pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (h_hat, h) in pairs {
        num += mse(h_hat, h)?;
        den += linalg::nrm2_sq(h);
    }
    if den <= 0.0 {
        return Err(Error::Numeric(
            "nmse undefined for zero-energy ground-truth batch".into(),
        ));
    }
    Ok(num / den)
}

/// Convert a linear power ratio to decibels.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
