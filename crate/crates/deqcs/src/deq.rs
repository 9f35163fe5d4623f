//! Deep-equilibrium solver: the linear-estimator step, the Picard forward
//! pass with convergence diagnostics, the Jacobian-free backward pass, and
//! the a-priori output-norm certificate.
//!
//! The iterated map is `h ↦ R_Θ(LE(h))` with
//! `LE(h) = h + η·(u − AᵀC⁻¹A h)`. With `C = I` and `η = 1` the linear step
//! is `(I−P)h + u` — exactly 1-Lipschitz — so the composition contracts at
//! rate `L = L₁·L₂ = lip_target < 1` and has a unique fixed point.

use crate::linalg::{self};
use crate::model::StandardProblem;
use crate::nn::{self, NleParams};
use crate::{tol, Error, Result};

/// Solver configuration; `gamma()` is the norm-certificate factor
/// `ηL/(1−L)` with `L = L₁L₂` and `L₁ = 1` by construction.
#[derive(Debug, Clone, Copy)]
pub struct DeqConfig {
    /// Gradient-step size of the linear estimator (η).
    pub eta: f64,
    /// Relative fixed-point tolerance on `‖h⁽ᵏ⁾−h⁽ᵏ⁻¹⁾‖/‖h⁽ᵏ⁾‖`.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Lipschitz budget of the nonlinear estimator (L₂).
    pub lip_target: f64,
}

impl Default for DeqConfig {
    fn default() -> Self {
        DeqConfig {
            eta: 1.0,
            tol: tol::FIXED_POINT,
            max_iter: 100,
            lip_target: 0.9,
        }
    }
}

impl DeqConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::Validation(format!("step size must be positive, got {}", self.eta)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Validation(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Validation("need at least one iteration".into()));
        }
        if !(self.lip_target > 0.0 && self.lip_target < 1.0) {
            return Err(Error::Validation(format!(
                "contraction requires L₂ ∈ (0,1), got {}",
                self.lip_target
            )));
        }
        Ok(())
    }

    /// Composite contraction factor `L = L₁·L₂` with `L₁ = 1`.
    pub fn lipschitz(&self) -> f64 {
        self.lip_target
    }

    /// Output-norm certificate factor `γ = ηL/(1−L)`.
    pub fn gamma(&self) -> f64 {
        self.eta * self.lipschitz() / (1.0 - self.lipschitz())
    }
}

/// Outcome of a Picard solve.
#[derive(Debug, Clone)]
pub struct FixedPointResult {
    pub h_star: Vec<f64>,
    /// Number of map applications performed.
    pub iterations: usize,
    /// Last relative step `‖h⁽ᵏ⁾−h⁽ᵏ⁻¹⁾‖/‖h⁽ᵏ⁾‖`.
    pub final_residual: f64,
    /// True iff `final_residual ≤ tol`.
    pub converged: bool,
    /// Absolute step norms `‖h⁽ᵏ⁾−h⁽ᵏ⁻¹⁾‖` per iteration (diagnostics for
    /// linear-rate checks).
    pub residuals: Vec<f64>,
}

/// One gradient step on the data term:
/// `h + η·(u − AᵀC⁻¹A h)`; with `C = I`, `η = 1` this is `(I−P)h + u`.
pub fn le_step(problem: &StandardProblem, cfg: &DeqConfig, h: &[f64]) -> Vec<f64> {
    le_step_with_u(problem, cfg, &problem.u, h)
}

/// [`le_step`] with the sufficient statistic overridden (used by the
/// divergence estimator, which perturbs `u` while keeping `A`, `C`).
pub fn le_step_with_u(
    problem: &StandardProblem,
    cfg: &DeqConfig,
    u: &[f64],
    h: &[f64],
) -> Vec<f64> {
    let mut ah = problem.a.matvec(h);
    for (v, c) in ah.iter_mut().zip(&problem.c_diag) {
        *v /= c;
    }
    let corr = problem.a.matvec_t(&ah);
    h.iter()
        .zip(u.iter().zip(&corr))
        .map(|(hi, (ui, ci))| hi + cfg.eta * (ui - ci))
        .collect()
}

/// Picard iteration of `h ↦ R_Θ(LE(h))` from `h0` (zeros when `None`).
///
/// Non-convergence within `max_iter` is reported, not raised: the caller
/// decides whether to proceed with the last iterate.
pub fn forward_fixed_point(
    model: &NleParams,
    problem: &StandardProblem,
    cfg: &DeqConfig,
    h0: Option<&[f64]>,
) -> Result<FixedPointResult> {
    forward_fixed_point_with_u(model, problem, cfg, &problem.u, h0)
}

/// [`forward_fixed_point`] with the sufficient statistic overridden.
pub fn forward_fixed_point_with_u(
    model: &NleParams,
    problem: &StandardProblem,
    cfg: &DeqConfig,
    u: &[f64],
    h0: Option<&[f64]>,
) -> Result<FixedPointResult> {
    cfg.validate()?;
    let n2 = problem.n2();
    let mut h = match h0 {
        Some(v) => {
            if v.len() != n2 {
                return Err(Error::Dim {
                    what: "initial iterate",
                    expected: n2,
                    got: v.len(),
                });
            }
            v.to_vec()
        }
        None => vec![0.0; n2],
    };
    if u.len() != n2 {
        return Err(Error::Dim {
            what: "sufficient statistic",
            expected: n2,
            got: u.len(),
        });
    }
    let mut residuals = Vec::new();
    let mut final_residual = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let next = nn::nle_forward(model, &le_step_with_u(problem, cfg, u, &h))?;
        let diff = linalg::nrm2(&linalg::sub(&next, &h));
        let scale = linalg::nrm2(&next);
        residuals.push(diff);
        final_residual = if scale > 0.0 {
            diff / scale
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        h = next;
        if final_residual <= cfg.tol {
            return Ok(FixedPointResult {
                h_star: h,
                iterations: it,
                final_residual,
                converged: true,
                residuals,
            });
        }
    }
    Ok(FixedPointResult {
        h_star: h,
        iterations: cfg.max_iter,
        final_residual,
        converged: false,
        residuals,
    })
}

/// Jacobian-free backward pass: the parameter gradient is the VJP of a
/// single estimator application at the equilibrium,
/// `(∂R_Θ(LE(h*))/∂Θ)ᵀ · cotangent` — no solver differentiation, no
/// matrix inversion.
pub fn jfb_gradient(
    model: &NleParams,
    problem: &StandardProblem,
    cfg: &DeqConfig,
    h_star: &[f64],
    loss_cotangent: &[f64],
) -> Result<Vec<f64>> {
    jfb_gradient_with_u(model, problem, cfg, &problem.u, h_star, loss_cotangent)
}

/// [`jfb_gradient`] at an overridden sufficient statistic (pairs with
/// [`forward_fixed_point_with_u`]).
pub fn jfb_gradient_with_u(
    model: &NleParams,
    problem: &StandardProblem,
    cfg: &DeqConfig,
    u: &[f64],
    h_star: &[f64],
    loss_cotangent: &[f64],
) -> Result<Vec<f64>> {
    let z = le_step_with_u(problem, cfg, u, h_star);
    let (grad_params, _) = nn::nle_vjp(model, &z, loss_cotangent)?;
    Ok(grad_params)
}

/// A-priori output-norm certificate: solves from zero and returns
/// `(γ·‖u‖₂, ‖h*‖₂)`. For a zero-bias estimator inside the contraction
/// budget, `actual ≤ bound` up to solver tolerance.
pub fn output_norm_certificate(
    model: &NleParams,
    problem: &StandardProblem,
    cfg: &DeqConfig,
) -> Result<(f64, f64)> {
    let result = forward_fixed_point(model, problem, cfg, None)?;
    let bound = cfg.gamma() * linalg::nrm2(&problem.u);
    Ok((bound, linalg::nrm2(&result.h_star)))
}
