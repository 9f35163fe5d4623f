//! Classical sparse-recovery baselines: OMP, ISTA, and AMP.
//!
//! Reference methods the learned equilibrium estimator is compared against
//! in the NMSE sweeps. All three are deterministic given their inputs and
//! operate on the same [`StandardProblem`] as the rest of the crate.

use crate::linalg::{self, Mat};
use crate::model::StandardProblem;
use crate::{Error, Result};

/// Which baseline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineAlgorithm {
    Omp,
    Ista,
    Amp,
}

impl BaselineAlgorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            BaselineAlgorithm::Omp => "omp",
            BaselineAlgorithm::Ista => "ista",
            BaselineAlgorithm::Amp => "amp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "omp" => Ok(BaselineAlgorithm::Omp),
            "ista" => Ok(BaselineAlgorithm::Ista),
            "amp" => Ok(BaselineAlgorithm::Amp),
            other => Err(Error::Validation(format!(
                "unknown baseline algorithm '{other}' (expected omp | ista | amp)"
            ))),
        }
    }
}

/// Hyperparameters for the classical baselines.
#[derive(Debug, Clone, Copy)]
pub struct BaselineConfig {
    pub algorithm: BaselineAlgorithm,
    /// Iteration cap for ISTA and AMP.
    pub max_iter: usize,
    /// Stopping tolerance: residual norm for OMP, iterate change for
    /// ISTA/AMP.
    pub tol: f64,
    /// Number of support atoms OMP may select.
    pub k_target: usize,
    /// ℓ₁ weight for ISTA.
    pub lambda: f64,
    /// Update damping for AMP in (0, 1]; 1 = undamped.
    pub damping: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            algorithm: BaselineAlgorithm::Omp,
            max_iter: 200,
            tol: 1e-8,
            k_target: 6,
            lambda: 1e-2,
            damping: 0.7,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Validation("iteration cap must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Validation(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Validation(format!(
                "l1 weight must be nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Validation(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }

    /// Dispatch on the algorithm tag; returns the estimate only.
    pub fn run(&self, problem: &StandardProblem) -> Result<Vec<f64>> {
        self.validate()?;
        match self.algorithm {
            BaselineAlgorithm::Omp => Ok(omp(problem, self.k_target, self.tol)?.h),
            BaselineAlgorithm::Ista => {
                Ok(ista(problem, self.lambda, self.max_iter, self.tol)?.h)
            }
            BaselineAlgorithm::Amp => {
                Ok(amp(problem, self.max_iter, self.damping, self.tol)?.h)
            }
        }
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Orthogonal matching pursuit
// ---------------------------------------------------------------------------

/// OMP output: estimate, selected support (in selection order), and the
/// residual norm after each refit (index 0 is ‖y‖ before any selection).
#[derive(Debug, Clone)]
pub struct OmpResult {
    pub h: Vec<f64>,
    pub support: Vec<usize>,
    pub residual_norms: Vec<f64>,
}

/// Orthogonal matching pursuit: greedily select the column most correlated
/// with the residual (`max |Aᵀr|`, ties → lowest index), refit by least
/// squares on the selected support, and stop after `k_target` atoms or once
/// the residual norm drops below `tol`.
pub fn omp(problem: &StandardProblem, k_target: usize, tol: f64) -> Result<OmpResult> {
    let m2 = problem.m2();
    let n2 = problem.n2();
    if k_target > m2 {
        return Err(Error::Validation(format!(
            "cannot least-squares refit {k_target} atoms with only {m2} measurements"
        )));
    }
    let mut r = problem.y.clone();
    let mut support: Vec<usize> = Vec::with_capacity(k_target);
    let mut selected = vec![false; n2];
    let mut h = vec![0.0; n2];
    let mut residual_norms = vec![linalg::nrm2(&r)];

    for _ in 0..k_target {
        if residual_norms.last().copied().unwrap_or(0.0) < tol {
            break;
        }
        let corr = problem.a.matvec_t(&r);
        // Strict > keeps the lowest index among ties; re-selection is
        // excluded (the refit makes on-support correlations zero only up to
        // roundoff).
        let mut best = usize::MAX;
        let mut best_val = -1.0;
        for (i, &c) in corr.iter().enumerate() {
            if !selected[i] && c.abs() > best_val {
                best_val = c.abs();
                best = i;
            }
        }
        if best == usize::MAX {
            break;
        }
        selected[best] = true;
        support.push(best);

        // Least-squares refit on the support via normal equations.
        let s = support.len();
        let cols: Vec<Vec<f64>> = support
            .iter()
            .map(|&j| (0..m2).map(|i| problem.a.get(i, j)).collect())
            .collect();
        let mut gram = Mat::zeros(s, s);
        for i in 0..s {
            for j in i..s {
                let d = linalg::dot(&cols[i], &cols[j]);
                gram.set(i, j, d);
                gram.set(j, i, d);
            }
        }
        let rhs: Vec<f64> = cols.iter().map(|c| linalg::dot(c, &problem.y)).collect();
        let coef = linalg::cholesky_solve(&gram, &rhs).ok_or_else(|| {
            Error::Numeric(
                "OMP refit hit a rank-deficient support (collinear columns)".into(),
            )
        })?;
        for v in h.iter_mut() {
            *v = 0.0;
        }
        for (&j, &x) in support.iter().zip(&coef) {
            h[j] = x;
        }
        r = linalg::sub(&problem.y, &problem.a.matvec(&h));
        residual_norms.push(linalg::nrm2(&r));
    }
    Ok(OmpResult {
        h,
        support,
        residual_norms,
    })
}

// ---------------------------------------------------------------------------
// ISTA
// ---------------------------------------------------------------------------

/// ISTA output: estimate, iterations used, convergence flag, and the
/// penalized objective after each iteration (index 0 is the start value).
#[derive(Debug, Clone)]
pub struct IstaResult {
    pub h: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub objectives: Vec<f64>,
}

/// The ℓ₁-penalized weighted least-squares objective
/// `½·(y−Ah)ᵀC⁻¹(y−Ah) + λ‖h‖₁`.
pub fn lasso_objective(problem: &StandardProblem, h: &[f64], lambda: f64) -> f64 {
    let r = linalg::sub(&problem.y, &problem.a.matvec(h));
    let quad: f64 = r
        .iter()
        .zip(&problem.c_diag)
        .map(|(ri, ci)| ri * ri / ci)
        .sum();
    0.5 * quad + lambda * linalg::nrm1(h)
}

/// Iterative soft-thresholding:
/// `h ← soft(h + η·AᵀC⁻¹(y−Ah); ηλ)` from `h = 0`, stopping when the
/// iterate moves less than `tol` or after `max_iter` iterations.
///
/// The step size is `η = min(1, min_i C_ii)`: 1 for white noise (where the
/// partial-orthogonal `A` makes the quadratic's curvature exactly 1), and
/// shrunk just enough to keep the descent guarantee when the noise
/// covariance has entries below 1.
pub fn ista(
    problem: &StandardProblem,
    lambda: f64,
    max_iter: usize,
    tol: f64,
) -> Result<IstaResult> {
    if !(lambda >= 0.0) {
        return Err(Error::Validation(format!(
            "l1 weight must be nonnegative, got {lambda}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::Validation("iteration cap must be positive".into()));
    }
    let n2 = problem.n2();
    let c_min = problem
        .c_diag
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let eta = c_min.min(1.0);
    let mut h = vec![0.0; n2];
    let mut objectives = vec![lasso_objective(problem, &h, lambda)];
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..max_iter {
        iterations += 1;
        let r = linalg::sub(&problem.y, &problem.a.matvec(&h));
        let wr: Vec<f64> = r
            .iter()
            .zip(&problem.c_diag)
            .map(|(ri, ci)| ri / ci)
            .collect();
        let grad_step = problem.a.matvec_t(&wr);
        let mut h_new = h.clone();
        for i in 0..n2 {
            h_new[i] = soft_threshold(h[i] + eta * grad_step[i], eta * lambda);
        }
        let delta = linalg::nrm2(&linalg::sub(&h_new, &h));
        h = h_new;
        objectives.push(lasso_objective(problem, &h, lambda));
        if delta < tol {
            converged = true;
            break;
        }
    }
    Ok(IstaResult {
        h,
        iterations,
        converged,
        objectives,
    })
}

// ---------------------------------------------------------------------------
// AMP
// ---------------------------------------------------------------------------

/// AMP output: estimate, iterations used, final noise-level estimate, and
/// whether the iteration blew past the divergence cap.
#[derive(Debug, Clone)]
pub struct AmpResult {
    pub h: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when an iterate norm exceeded [`AMP_DIVERGENCE_CAP`]; the result
    /// is returned as-is rather than raising, so sweeps can report it.
    pub diverged: bool,
    /// Last residual-based noise-level estimate `‖r‖/√(2M)`.
    pub tau: f64,
}

/// Iterate-norm cap beyond which AMP is declared divergent.
pub const AMP_DIVERGENCE_CAP: f64 = 1e6;

/// Soft-threshold level in units of the noise-level estimate τ.
///
/// Thresholding at τ itself keeps too many noise coordinates alive: at a
/// sampling ratio of ½ the surviving fraction drives the Onsager
/// coefficient `‖x‖₀/2M` toward 1 and the residual recursion stops
/// contracting. A 2σ rule keeps the iterate sparse enough to be stable
/// across the sampling ratios used here while still vanishing with the
/// residual (so no asymptotic bias on noiseless instances).
pub const AMP_THRESHOLD_MULT: f64 = 2.0;

/// Soft-threshold AMP with the Onsager correction.
///
/// Internally runs in the unit-column convention (`Ã = √(N/M)·A`, whose
/// columns have unit energy in expectation — the normalization the Onsager
/// coefficient `‖x‖₀/(2M)` and the noise-level estimate `τ = ‖r‖/√(2M)`
/// are calibrated for) and maps the estimate back to the original
/// coordinates:
///
/// ```text
/// x ← (1−d)·x + d·soft(x + Ãᵀr; AMP_THRESHOLD_MULT·τ),
/// r ← y − Ãx + (‖x‖₀/2M)·r_prev
/// ```
///
/// `damping = 1` is the undamped textbook update. Divergence (iterate norm
/// above [`AMP_DIVERGENCE_CAP`]) sets a flag instead of erroring.
pub fn amp(
    problem: &StandardProblem,
    max_iter: usize,
    damping: f64,
    tol: f64,
) -> Result<AmpResult> {
    if max_iter == 0 {
        return Err(Error::Validation("iteration cap must be positive".into()));
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::Validation(format!(
            "damping must lie in (0, 1], got {damping}"
        )));
    }
    let m2 = problem.m2();
    let n2 = problem.n2();
    let scale = (n2 as f64 / m2 as f64).sqrt();
    let sqrt_m2 = (m2 as f64).sqrt();
    // x estimates the solution of y = Ã x̃; the original h = scale · x̃.
    let mut x = vec![0.0; n2];
    let mut r = problem.y.clone();
    let mut tau = linalg::nrm2(&r) / sqrt_m2;
    let mut iterations = 0;
    let mut converged = false;
    let mut diverged = false;
    for _ in 0..max_iter {
        iterations += 1;
        tau = linalg::nrm2(&r) / sqrt_m2;
        // Ãᵀr = scale·Aᵀr.
        let corr = problem.a.matvec_t(&r);
        let mut x_new = vec![0.0; n2];
        let mut delta_sq = 0.0;
        for i in 0..n2 {
            let prop = soft_threshold(x[i] + scale * corr[i], AMP_THRESHOLD_MULT * tau);
            let xi = (1.0 - damping) * x[i] + damping * prop;
            delta_sq += (xi - x[i]) * (xi - x[i]);
            x_new[i] = xi;
        }
        let nnz = x_new.iter().filter(|v| **v != 0.0).count();
        let onsager = nnz as f64 / m2 as f64;
        // y − Ãx = y − scale·Ax.
        let ax = problem.a.matvec(&x_new);
        let mut r_new = vec![0.0; m2];
        for i in 0..m2 {
            r_new[i] = problem.y[i] - scale * ax[i] + onsager * r[i];
        }
        x = x_new;
        r = r_new;
        if linalg::nrm2(&x) > AMP_DIVERGENCE_CAP {
            diverged = true;
            break;
        }
        if delta_sq.sqrt() < tol {
            converged = true;
            break;
        }
    }
    let h: Vec<f64> = x.iter().map(|v| scale * v).collect();
    Ok(AmpResult {
        h,
        iterations,
        converged,
        diverged,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_sparse, AmpDist};
    use crate::model::nmse;
    use crate::sensing::{build_measurement, noisy_problem, MatrixKind, MeasurementConfig};
    use crate::util::root_rng;

    fn matrix(n_half: usize, m_half: usize, seed: u64) -> Mat {
        build_measurement(
            &MeasurementConfig {
                n_half,
                m_half,
                kind: MatrixKind::SubsampledDct,
            },
            &mut root_rng(seed),
        )
        .unwrap()
    }

    fn noiseless_problem(a: &Mat, h: &[f64]) -> StandardProblem {
        let y = a.matvec(h);
        StandardProblem::new_unchecked(a.clone(), vec![1.0; a.rows], 1e-12, y).unwrap()
    }

    #[test]
    fn omp_exactly_recovers_noiseless_sparse() {
        let a = matrix(64, 32, 41);
        let mut rng = root_rng(42);
        for _ in 0..5 {
            let inst = gen_sparse(128, 2, AmpDist::Gaussian, &mut rng).unwrap();
            let prob = noiseless_problem(&a, &inst.h);
            let out = omp(&prob, 4, 1e-12).unwrap();
            let err: f64 = out
                .h
                .iter()
                .zip(&inst.h)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "max entry error {err}");
            // Residual strictly decreases until the stop.
            for w in out.residual_norms.windows(2) {
                assert!(w[1] < w[0], "residual did not strictly decrease: {w:?}");
            }
        }
    }

    #[test]
    fn omp_trivial_cases_and_guards() {
        let a = matrix(8, 4, 7);
        let zero_prob =
            StandardProblem::new_unchecked(a.clone(), vec![1.0; 8], 1e-12, vec![0.0; 8])
                .unwrap();
        let out = omp(&zero_prob, 3, 1e-10).unwrap();
        assert!(out.h.iter().all(|v| *v == 0.0));
        assert!(out.support.is_empty());

        let mut rng = root_rng(8);
        let inst = gen_sparse(16, 2, AmpDist::Gaussian, &mut rng).unwrap();
        let prob = noisy_problem(&a, &vec![1.0; 8], &inst.h, 20.0, &mut rng).unwrap();
        let out = omp(&prob, 0, 1e-10).unwrap();
        assert!(out.h.iter().all(|v| *v == 0.0));
        assert!(omp(&prob, 9, 1e-10).is_err()); // more atoms than measurements
    }

    #[test]
    fn ista_unregularized_limit_projects() {
        let a = matrix(16, 8, 13);
        let mut rng = root_rng(14);
        let inst = gen_sparse(32, 3, AmpDist::Gaussian, &mut rng).unwrap();
        let prob = noisy_problem(&a, &vec![1.0; 16], &inst.h, 25.0, &mut rng).unwrap();
        let out = ista(&prob, 0.0, 500, 1e-10).unwrap();
        assert!(out.converged);
        let res = linalg::sub(&prob.y, &prob.a.matvec(&out.h));
        assert!(
            linalg::nrm2(&res) < 1e-6,
            "unpenalized ISTA should satisfy the measurements, residual {}",
            linalg::nrm2(&res)
        );
    }

    #[test]
    fn ista_shutdown_threshold_gives_zero() {
        let a = matrix(16, 8, 17);
        let mut rng = root_rng(18);
        let inst = gen_sparse(32, 3, AmpDist::Gaussian, &mut rng).unwrap();
        let prob = noisy_problem(&a, &vec![1.0; 16], &inst.h, 20.0, &mut rng).unwrap();
        let lambda = linalg::nrm_inf(&prob.a.matvec_t(&prob.y)) * (1.0 + 1e-12);
        let out = ista(&prob, lambda, 100, 1e-12).unwrap();
        assert!(out.h.iter().all(|v| *v == 0.0), "shutdown λ must zero out");
        assert!(out.converged);
    }

    #[test]
    fn ista_objective_monotone_and_fixed_point() {
        let mut rng = root_rng(21);
        for seed in 0..4u64 {
            let a = matrix(16, 8, 100 + seed);
            let inst = gen_sparse(32, 2, AmpDist::Gaussian, &mut rng).unwrap();
            // Exercise a non-identity covariance too.
            let c: Vec<f64> = (0..16).map(|i| 0.5 + 0.1 * (i % 7) as f64).collect();
            let prob = noisy_problem(&a, &c, &inst.h, 15.0, &mut rng).unwrap();
            let lambda = 0.05;
            let out = ista(&prob, lambda, 400, 1e-10).unwrap();
            for w in out.objectives.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0),
                    "objective rose: {} -> {}",
                    w[0],
                    w[1]
                );
            }
            // Fixed-point characterization at convergence.
            assert!(out.converged);
            let eta = prob.c_diag.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
            let r = linalg::sub(&prob.y, &prob.a.matvec(&out.h));
            let wr: Vec<f64> = r.iter().zip(&prob.c_diag).map(|(ri, ci)| ri / ci).collect();
            let step = prob.a.matvec_t(&wr);
            let mut moved = 0.0f64;
            for i in 0..out.h.len() {
                let next = soft_threshold(out.h[i] + eta * step[i], eta * lambda);
                moved += (next - out.h[i]).powi(2);
            }
            assert!(
                moved.sqrt() < 1e-8,
                "converged iterate is not a fixed point: moves {}",
                moved.sqrt()
            );
        }
    }

    #[test]
    fn amp_recovers_noiseless_sparse_quickly() {
        let a = matrix(64, 32, 51);
        let mut rng = root_rng(52);
        for _ in 0..3 {
            let inst = gen_sparse(128, 2, AmpDist::Gaussian, &mut rng).unwrap();
            let prob = noiseless_problem(&a, &inst.h);
            let out = amp(&prob, 30, 0.7, 1e-12).unwrap();
            assert!(!out.diverged);
            let nmse_db = 10.0 * nmse(&out.h, &inst.h).unwrap().log10();
            assert!(nmse_db < -40.0, "AMP NMSE {nmse_db:.1} dB after 30 iters");
        }
    }

    #[test]
    fn amp_trivial_cases() {
        let a = matrix(8, 4, 61);
        let zero_prob =
            StandardProblem::new_unchecked(a.clone(), vec![1.0; 8], 1e-12, vec![0.0; 8])
                .unwrap();
        let out = amp(&zero_prob, 10, 0.7, 1e-12).unwrap();
        assert!(out.h.iter().all(|v| *v == 0.0));

        // damping = 1 reproduces the undamped update, computed by hand for
        // one iteration from zero.
        let mut rng = root_rng(62);
        let inst = gen_sparse(16, 2, AmpDist::Gaussian, &mut rng).unwrap();
        let prob = noisy_problem(&a, &vec![1.0; 8], &inst.h, 20.0, &mut rng).unwrap();
        let out = amp(&prob, 1, 1.0, 1e-15).unwrap();
        let scale = (16f64 / 8.0).sqrt();
        let tau = linalg::nrm2(&prob.y) / 8f64.sqrt();
        let corr = prob.a.matvec_t(&prob.y);
        let manual: Vec<f64> = corr
            .iter()
            .map(|c| scale * soft_threshold(scale * c, AMP_THRESHOLD_MULT * tau))
            .collect();
        for (got, want) in out.h.iter().zip(&manual) {
            assert_eq!(got, want, "undamped first iterate mismatch");
        }
    }

    #[test]
    fn amp_divergence_is_flagged_not_raised() {
        let a = matrix(8, 4, 71);
        // Absurdly scaled measurements push the first iterates past the cap.
        let y: Vec<f64> = (0..8).map(|i| 1e9 * (i as f64 + 1.0)).collect();
        let prob = StandardProblem::new_unchecked(a, vec![1.0; 8], 1.0, y).unwrap();
        let out = amp(&prob, 50, 1.0, 1e-12).unwrap();
        assert!(out.diverged);
        assert!(!out.converged);
    }

    #[test]
    fn baselines_are_deterministic_and_config_validates() {
        let a = matrix(16, 8, 81);
        let mut rng = root_rng(82);
        let inst = gen_sparse(32, 2, AmpDist::Gaussian, &mut rng).unwrap();
        let prob = noisy_problem(&a, &vec![1.0; 16], &inst.h, 15.0, &mut rng).unwrap();
        for algorithm in [
            BaselineAlgorithm::Omp,
            BaselineAlgorithm::Ista,
            BaselineAlgorithm::Amp,
        ] {
            let cfg = BaselineConfig {
                algorithm,
                k_target: 4,
                ..BaselineConfig::default()
            };
            let first = cfg.run(&prob).unwrap();
            let second = cfg.run(&prob).unwrap();
            assert_eq!(first, second, "{} not deterministic", algorithm.as_str());
        }
        let bad = BaselineConfig {
            damping: 0.0,
            ..BaselineConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = BaselineConfig {
            lambda: -1.0,
            ..BaselineConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(BaselineAlgorithm::parse("ISTA").is_ok());
        assert!(BaselineAlgorithm::parse("oamp").is_err());
    }
}
