//! Slow, independent reference implementations used to validate fast paths.
//!
//! Nothing here is used by production code. These routines exist so the test
//! suites can check the hand-written gradients, the Jacobian-free backward
//! pass, and the trace estimators against straightforward dense computations
//! at small sizes (dimension ≤ 16 or so, where O(n²)–O(n³) finite-difference
//! sweeps are affordable).

use crate::linalg::{gauss_solve, Mat};

/// Central-difference gradient of a scalar function.
///
/// `grad[i] ≈ (f(x + eps e_i) − f(x − eps e_i)) / (2 eps)`.
pub fn fd_gradient(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], eps: f64) -> Vec<f64> {
    let mut g = vec![0.0; x0.len()];
    let mut x = x0.to_vec();
    for i in 0..x0.len() {
        x[i] = x0[i] + eps;
        let fp = f(&x);
        x[i] = x0[i] - eps;
        let fm = f(&x);
        x[i] = x0[i];
        g[i] = (fp - fm) / (2.0 * eps);
    }
    g
}

/// Central-difference Jacobian of a vector function, one column per input
/// coordinate: `J[r][c] = ∂f_r/∂x_c`.
pub fn fd_jacobian(mut f: impl FnMut(&[f64]) -> Vec<f64>, x0: &[f64], eps: f64) -> Mat {
    let n = x0.len();
    let probe = f(x0);
    let m = probe.len();
    let mut jac = Mat::zeros(m, n);
    let mut x = x0.to_vec();
    for c in 0..n {
        x[c] = x0[c] + eps;
        let fp = f(&x);
        x[c] = x0[c] - eps;
        let fm = f(&x);
        x[c] = x0[c];
        for r in 0..m {
            jac.set(r, c, (fp[r] - fm[r]) / (2.0 * eps));
        }
    }
    jac
}

/// Exact adjoint weight vector of an implicit function theorem gradient.
///
/// For a fixed-point map `h = f(h)` with solution `h_star` and a loss
/// cotangent `cot = ∂L/∂h_star`, the exact parameter gradient is
/// `(∂f/∂Θ)ᵀ (I − ∂f/∂h)⁻ᵀ cot`. This routine returns the dense solve
/// `w = (I − J)⁻ᵀ cot` with `J = ∂f/∂h` built by central differences, so a
/// caller can finish with its own exact parameter VJP at cotangent `w`.
///
/// Only intended for small dimensions; the Jacobian build is `2n` function
/// evaluations and the solve is dense.
pub fn implicit_adjoint_weights(
    f: impl FnMut(&[f64]) -> Vec<f64>,
    h_star: &[f64],
    cot: &[f64],
    eps: f64,
) -> Option<Vec<f64>> {
    let n = h_star.len();
    assert_eq!(cot.len(), n);
    let jac = fd_jacobian(f, h_star, eps);
    assert_eq!(jac.rows, n);
    // (I − J)ᵀ w = cot
    let it_minus_jt = Mat::from_fn(n, n, |r, c| {
        let delta = if r == c { 1.0 } else { 0.0 };
        delta - jac.get(c, r)
    });
    gauss_solve(&it_minus_jt, cot)
}

/// Exact `Tr(P ∂g/∂u)` for a differentiable map `g` and projector apply
/// `project`, by building the full Jacobian with central differences.
///
/// For linear `g` this is exact up to floating-point rounding, which makes it
/// the reference for the Monte-Carlo divergence estimator.
pub fn trace_projected_jacobian(
    g: impl FnMut(&[f64]) -> Vec<f64>,
    mut project: impl FnMut(&[f64]) -> Vec<f64>,
    u: &[f64],
    eps: f64,
) -> f64 {
    let jac = fd_jacobian(g, u, eps);
    let n = u.len();
    // Tr(P J) = Σ_i (P J)_{ii} = Σ_i <e_i, P J e_i>; compute P column-wise.
    let mut trace = 0.0;
    let mut col = vec![0.0; n];
    for c in 0..n {
        for r in 0..n {
            col[r] = jac.get(r, c);
        }
        let pcol = project(&col);
        trace += pcol[c];
    }
    trace
}
