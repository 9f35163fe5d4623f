//! Sparsity analysis toolbox.
//!
//! Everything here quantifies one question: *how much recovery error can the
//! unsupervised-trained equilibrium estimator add over its supervised
//! counterpart?* The answer is assembled from
//!
//! * the ℓ₁/ℓ₂ sparsity measure and best-κ-term residual ratios;
//! * the **sparse growth function** (SGF): the worst-case fraction of energy
//!   outside the κ largest entries over all vectors with ℓ₁/ℓ₂ ≤ √κ —
//!   computed three independent ways (numeric sup, closed form via a
//!   depressed cubic, and a brute-force search over the extremal family);
//! * brute-force restricted-isometry (RIP) constants of the scaled
//!   measurement matrix √(N/M)·A on small instances;
//! * sparsity-level bounds for the equilibrium outputs, estimators for the
//!   operating constants (β, ω, ξ), the resulting gap bound between
//!   unsupervised and supervised NMSE, and a per-instance sandwich check
//!   relating full MSE to projected MSE plus a sparse-tail term.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, Mat};
use crate::model::StandardProblem;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Sparsity measures
// ---------------------------------------------------------------------------

/// ℓ₁/ℓ₂ sparsity measure `‖α‖₁/‖α‖₂`.
///
/// Ranges over `[1, √len]`: 1 for a 1-sparse vector, `√len` for a flat one.
/// Smaller means more concentrated energy.
pub fn l_half(alpha: &[f64]) -> Result<f64> {
    let n2 = linalg::nrm2(alpha);
    if !(n2 > 0.0) {
        return Err(Error::Validation(
            "sparsity measure undefined for the zero vector".into(),
        ));
    }
    Ok(linalg::nrm1(alpha) / n2)
}

/// Indices of the `count` largest-magnitude entries (ties → lowest index).
fn top_indices(alpha: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..alpha.len()).collect();
    // Stable sort by descending magnitude keeps the lowest index first
    // among equal magnitudes.
    idx.sort_by(|&a, &b| {
        alpha[b]
            .abs()
            .partial_cmp(&alpha[a].abs())
            .expect("finite entries")
    });
    idx.truncate(count);
    idx
}

/// Fraction of energy outside the best κ-term approximation:
/// `‖α − α_κ‖² / ‖α‖²` where `α_κ` keeps the κ largest magnitudes
/// (ties broken toward the lowest index).
pub fn sparse_residual_ratio(alpha: &[f64], kappa: usize) -> Result<f64> {
    let total = linalg::nrm2_sq(alpha);
    if !(total > 0.0) {
        return Err(Error::Validation(
            "residual ratio undefined for the zero vector".into(),
        ));
    }
    if kappa >= alpha.len() {
        return Ok(0.0);
    }
    let kept: f64 = top_indices(alpha, kappa)
        .iter()
        .map(|&i| alpha[i] * alpha[i])
        .sum();
    Ok(((total - kept) / total).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Sparse growth function: numeric bound
// ---------------------------------------------------------------------------

/// Inner rate function `ρ̃(κ, x) = (√(xκ/(x+κ−1)) − 1)/(x − 1)`.
///
/// The singularity at `x = 1` is removable (numerator and denominator vanish
/// together); evaluation there is nudged by ±1e-9, which matches the
/// continuous extension to ~1e-9 accuracy.
fn rho_tilde(kappa: f64, x: f64) -> f64 {
    let x = if (x - 1.0).abs() < 1e-9 {
        if x >= 1.0 {
            1.0 + 1e-9
        } else {
            1.0 - 1e-9
        }
    } else {
        x
    };
    ((x * kappa / (x + kappa - 1.0)).sqrt() - 1.0) / (x - 1.0)
}

/// The objective whose supremum over `x ∈ (0, 2N−κ)` is the SGF bound:
/// `x·ρ̃² / (1 + (x+κ−1)·ρ̃²)`.
fn sgf_objective(kappa: f64, x: f64) -> f64 {
    let r = rho_tilde(kappa, x);
    let r2 = r * r;
    x * r2 / (1.0 + (x + kappa - 1.0) * r2)
}

/// Golden-section maximization of a unimodal-enough `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-13 * b.abs().max(1.0) {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn validate_kappa(kappa: usize, n2: usize) -> Result<()> {
    if kappa == 0 || kappa > n2 {
        return Err(Error::Validation(format!(
            "sparsity level {kappa} outside [1, {n2}]"
        )));
    }
    Ok(())
}

/// Numeric SGF bound: maximizer location and value.
fn sgf_numeric_opt(kappa: usize, n2: usize) -> Result<(f64, f64)> {
    validate_kappa(kappa, n2)?;
    if kappa == 1 || kappa == n2 {
        // κ = 1: the rate function is identically zero. κ = 2N: the search
        // domain (0, 2N−κ) is empty — a fully dense allowance leaves no
        // residual constraint to violate.
        return Ok((0.0, 0.0));
    }
    let kf = kappa as f64;
    let x_hi = (n2 - kappa) as f64 * (1.0 - 1e-12);
    let x_lo = 1e-6;
    let n_grid = 10_000usize;
    let log_ratio = (x_hi / x_lo).ln();
    let grid_x = |i: usize| x_lo * (log_ratio * i as f64 / (n_grid - 1) as f64).exp();
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..n_grid {
        let v = sgf_objective(kf, grid_x(i));
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = if best_i == 0 { x_lo } else { grid_x(best_i - 1) };
    let hi = if best_i + 1 >= n_grid {
        x_hi
    } else {
        grid_x(best_i + 1)
    };
    let (x_opt, v_opt) = golden_max(|x| sgf_objective(kf, x), lo, hi);
    if v_opt >= best_v {
        Ok((x_opt, v_opt))
    } else {
        Ok((grid_x(best_i), best_v))
    }
}

/// Upper bound on the sparse growth function, by direct maximization:
/// `g(κ) = sup_{x ∈ (0, 2N−κ)} x·ρ̃²(κ,x) / (1 + (x+κ−1)·ρ̃²(κ,x))`.
///
/// Evaluated on a 10⁴-point log grid with golden-section refinement around
/// the best grid point. Always in `[0, 1]`.
pub fn sgf_bound_numeric(kappa: usize, n2: usize) -> Result<f64> {
    Ok(sgf_numeric_opt(kappa, n2)?.1)
}

// ---------------------------------------------------------------------------
// Sparse growth function: closed form
// ---------------------------------------------------------------------------

/// Interior stationary point of the reparametrized objective
/// `c(κ,t) = (κ−1)·t²(1−t²)/(t+√κ)²`, via the trigonometric root of its
/// depressed stationarity cubic `t³ + 2√κ·t² − √κ = 0`.
pub fn sgf_trig_root(kappa: usize) -> f64 {
    let kf = kappa as f64;
    let arg = 3.0 * 6f64.sqrt() / (8.0 * kf.sqrt());
    6f64.sqrt() / (4.0 * (arg.acos() / 3.0).cos())
}

/// Residual of the stationarity cubic `t³ + 2√κ·t² − √κ` at `t`.
/// Near zero when `t` is the unclipped interior root.
pub fn sgf_cubic_residual(kappa: usize, t: f64) -> f64 {
    let sk = (kappa as f64).sqrt();
    (t * t * t + 2.0 * sk * t * t - sk).abs()
}

/// The reparametrized objective value `c(κ, t)`.
fn sgf_c_of_t(kappa: f64, t: f64) -> f64 {
    (kappa - 1.0) * t * t * (1.0 - t * t) / ((t + kappa.sqrt()) * (t + kappa.sqrt()))
}

/// Closed-form SGF bound.
///
/// The substitution `t = √(x/(x+κ−1))` maps the numeric bound's domain
/// bijectively onto `t ∈ (0, √((2N−κ)/(2N−1)))` and turns the objective into
/// `c(κ,t) = (κ−1)t²(1−t²)/(t+√κ)²`, whose unique interior maximum is the
/// trigonometric cubic root; the value at
/// `t(κ) = min{root, √((2N−κ)/(2N−1))}` therefore equals the supremum.
pub fn sgf_closed_form(kappa: usize, n2: usize) -> Result<f64> {
    validate_kappa(kappa, n2)?;
    if kappa == 1 {
        return Ok(0.0);
    }
    let kf = kappa as f64;
    let t_boundary = (((n2 - kappa) as f64) / ((n2 - 1) as f64)).sqrt();
    let t = sgf_trig_root(kappa).min(t_boundary);
    Ok(sgf_c_of_t(kf, t))
}

/// One κ fully characterized: numeric optimizer, closed-form root, both
/// bound values.
#[derive(Debug, Clone)]
pub struct SgfEvaluation {
    pub kappa: usize,
    pub n2: usize,
    /// Maximizer of the numeric objective (0 when the domain is degenerate).
    pub x_opt: f64,
    /// Inner rate at the maximizer.
    pub rho_tilde: f64,
    /// Clipped closed-form root `t(κ)`.
    pub t_kappa: f64,
    pub g_numeric: f64,
    pub g_closed: f64,
}

/// Evaluate both SGF bounds and their internals at one `(κ, 2N)`.
pub fn sgf_evaluate(kappa: usize, n2: usize) -> Result<SgfEvaluation> {
    let (x_opt, g_numeric) = sgf_numeric_opt(kappa, n2)?;
    let g_closed = sgf_closed_form(kappa, n2)?;
    let t_kappa = if kappa == 1 {
        0.0
    } else {
        sgf_trig_root(kappa).min((((n2 - kappa) as f64) / ((n2 - 1) as f64)).sqrt())
    };
    let rt = if kappa == 1 || kappa == n2 {
        0.0
    } else {
        rho_tilde(kappa as f64, x_opt)
    };
    Ok(SgfEvaluation {
        kappa,
        n2,
        x_opt,
        rho_tilde: rt,
        t_kappa,
        g_numeric,
        g_closed,
    })
}

// ---------------------------------------------------------------------------
// Sparse growth function: brute force over the extremal family
// ---------------------------------------------------------------------------

/// Grid resolution for the brute-force SGF search.
#[derive(Debug, Clone, Copy)]
pub struct SgfBruteGrid {
    /// Log-spaced decay-rate points over (0, 1].
    pub rho_points: usize,
    /// Linear tail-weight points over [0, 1].
    pub lambda_points: usize,
}

impl Default for SgfBruteGrid {
    fn default() -> Self {
        SgfBruteGrid {
            rho_points: 512,
            lambda_points: 64,
        }
    }
}

/// Brute-force SGF over the extremal family
/// `α = C·(1, ρ, …, ρ | ρ, …, ρ (p copies), λρ, 0, …)`:
/// the head holds the κ kept entries, the tail `p` geometric copies plus one
/// λ-weighted entry. For each integer `p ∈ [0, 2N−κ−1]` and grid point
/// `(ρ, λ)`, keeps the point only when `‖α‖₁/‖α‖₂ ≤ √κ` and maximizes the
/// tail-energy fraction `(p+λ²)ρ² / (1+(p+κ+λ²−1)ρ²)`.
///
/// Every candidate is a genuinely feasible vector, so the result is a lower
/// bound on the true SGF — the test oracle for both analytic bounds.
pub fn sgf_brute_force(kappa: usize, n2: usize, grid: &SgfBruteGrid) -> Result<f64> {
    validate_kappa(kappa, n2)?;
    if grid.rho_points < 2 || grid.lambda_points < 2 {
        return Err(Error::Validation("brute-force grid too coarse".into()));
    }
    if kappa == 1 || kappa == n2 {
        return Ok(0.0);
    }
    let kf = kappa as f64;
    let sk = kf.sqrt();
    let rho_lo = 1e-4f64;
    let mut best = 0.0f64;
    for p in 0..=(n2 - kappa - 1) {
        let pf = p as f64;
        for ir in 0..grid.rho_points {
            let rho = rho_lo
                * (1.0 / rho_lo).powf(ir as f64 / (grid.rho_points - 1) as f64);
            for il in 0..grid.lambda_points {
                let lam = il as f64 / (grid.lambda_points - 1) as f64;
                let l1 = 1.0 + (pf + kf + lam - 1.0) * rho;
                let l2_sq = 1.0 + (pf + kf + lam * lam - 1.0) * rho * rho;
                if l1 <= sk * l2_sq.sqrt() * (1.0 + 1e-12) {
                    let obj = (pf + lam * lam) * rho * rho / l2_sq;
                    if obj > best {
                        best = obj;
                    }
                }
            }
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Brute-force RIP constants
// ---------------------------------------------------------------------------

/// Binomial coefficient with saturation (good enough for feasibility gates).
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if acc > u128::MAX / 2 {
            return u128::MAX;
        }
    }
    acc
}

/// Visit every k-subset of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance: find the rightmost index that can still move up.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Maximum number of supports the exhaustive RIP search will visit.
pub const RIP_MAX_SUPPORTS: u128 = 1_000_000;

/// Exact order-k restricted-isometry constant of a (pre-scaled) matrix by
/// exhaustive search: `δ_k = max_{|S|=k} ‖A_Sᵀ A_S − I‖₂`.
///
/// Pass the matrix already scaled (for the standard model, `√(N/M)·A`).
/// Errors when `C(cols, k)` exceeds [`RIP_MAX_SUPPORTS`] — then the constant
/// must be supplied from outside rather than brute-forced.
pub fn rip_constant_bruteforce(a_scaled: &Mat, k: usize) -> Result<f64> {
    let n = a_scaled.cols;
    if k == 0 || k > n {
        return Err(Error::Validation(format!(
            "RIP order {k} outside [1, {n}]"
        )));
    }
    let combos = binomial(n, k);
    if combos > RIP_MAX_SUPPORTS {
        return Err(Error::Numeric(format!(
            "{combos} supports of size {k} exceed the exhaustive-search cap \
             ({RIP_MAX_SUPPORTS}); supply the isometry constant externally"
        )));
    }
    // Column-major copy for cheap inner products.
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|c| (0..a_scaled.rows).map(|r| a_scaled.get(r, c)).collect())
        .collect();
    let mut delta = 0.0f64;
    let mut gram = Mat::zeros(k, k);
    for_each_combination(n, k, |support| {
        for (i, &ci) in support.iter().enumerate() {
            for (j, &cj) in support.iter().enumerate().skip(i) {
                let mut d = linalg::dot(&cols[ci], &cols[cj]);
                if i == j {
                    d -= 1.0;
                }
                gram.set(i, j, d);
                gram.set(j, i, d);
            }
        }
        let s = linalg::sym_spectral_norm(&gram);
        if s > delta {
            delta = s;
        }
    });
    Ok(delta)
}

// ---------------------------------------------------------------------------
// Sparsity-level bounds for the equilibrium outputs
// ---------------------------------------------------------------------------

/// Everything the sparsity-level bounds need.
///
/// `k` is the half-sparsity of the ground truth (≤ 2k nonzero reals in
/// dimension `n2 = 2N`). `delta_2k`/`delta_2` are isometry constants of the
/// scaled measurement matrix at orders 2k and 2; `delta` is the
/// single-constant stand-in used by the simplified variant.
#[derive(Debug, Clone, Copy)]
pub struct SparsityInputs {
    pub k: usize,
    pub n2: usize,
    /// Relative projected error of the unsupervised estimate.
    pub beta: f64,
    /// Relative error of the supervised (oracle) estimate.
    pub omega: f64,
    /// High-probability bound on ‖n‖/‖Ah‖ (inverse worst-case SNR).
    pub xi: f64,
    /// Output-gain constant of the contractive equilibrium (ηL/(1−L)).
    pub gamma: f64,
    /// Spectral norm of C⁻¹.
    pub c_inv_norm: f64,
    pub delta_2k: f64,
    pub delta_2: f64,
    pub delta: f64,
}

/// Sparsity levels implied by the operating constants.
#[derive(Debug, Clone)]
pub struct SparsityBounds {
    /// Bound on ℓ₁/ℓ₂ of the unsupervised equilibrium output
    /// (two-constant form; the derivation's own shape).
    pub s_g: f64,
    /// Same bound with both isometry constants collapsed to `delta`.
    pub s_g_simplified: f64,
    /// Bound on ℓ₁/ℓ₂ of the supervised equilibrium output.
    pub s_ora: f64,
    /// Working sparsity level `max(⌈s_g⌉, ⌈s_ora⌉)`, clipped to `n2`.
    pub s: usize,
    /// Total support budget `s + 2k`, clipped to `n2`.
    pub t_total: usize,
    /// True when any piece left its meaningful regime (negative square-root
    /// argument, or levels exceeding the ambient dimension).
    pub vacuous: bool,
    pub notes: Vec<String>,
}

fn check_unit_interval(name: &str, v: f64, allow_one: bool) -> Result<()> {
    let ok = v >= 0.0 && if allow_one { v <= 1.0 } else { v < 1.0 };
    if !ok {
        return Err(Error::Validation(format!(
            "{name} = {v} outside the unit interval"
        )));
    }
    Ok(())
}

/// Sparsity-level bounds for both equilibrium outputs.
///
/// Unsupervised:
/// `s_g = (1 + √(2k)·δ₂ₖ + 4k(N−k)·δ₂)/((1−β)(1−δ₂ₖ))·√(2k)
///        + √(2N)·(β/(1−β) + √(1 − (1−β)²/(γ²‖C⁻¹‖²(β+ξ)²)))`.
/// Supervised:
/// `s_ora = √(2k)/(1−ω) + √(2N−2k)·ω/(1−ω)`.
///
/// A negative square-root argument means the constants cannot certify any
/// concentration — the bound is flagged vacuous (with the root clamped to 0)
/// rather than raising, so sweeps keep running.
pub fn sparsity_bounds(inp: &SparsityInputs) -> Result<SparsityBounds> {
    if inp.k == 0 || 2 * inp.k > inp.n2 {
        return Err(Error::Validation(format!(
            "half-sparsity {} outside [1, {}]",
            inp.k,
            inp.n2 / 2
        )));
    }
    check_unit_interval("beta", inp.beta, false)?;
    check_unit_interval("omega", inp.omega, false)?;
    check_unit_interval("delta_2k", inp.delta_2k, false)?;
    check_unit_interval("delta_2", inp.delta_2, true)?;
    check_unit_interval("delta", inp.delta, true)?;
    if !(inp.xi >= 0.0) || !(inp.gamma > 0.0) || !(inp.c_inv_norm > 0.0) {
        return Err(Error::Validation(
            "xi must be nonnegative; gamma and the noise-whitening norm positive".into(),
        ));
    }
    let mut notes = Vec::new();
    let mut vacuous = false;
    let n2f = inp.n2 as f64;
    let n_half = n2f / 2.0;
    let kf = inp.k as f64;
    let sqrt_2k = (2.0 * kf).sqrt();
    let pair_terms = 4.0 * kf * (n_half - kf);
    let denom = (1.0 - inp.beta) * (1.0 - inp.delta_2k);

    let arg = 1.0
        - (1.0 - inp.beta).powi(2)
            / (inp.gamma * inp.gamma
                * inp.c_inv_norm
                * inp.c_inv_norm
                * (inp.beta + inp.xi).powi(2));
    let root = if arg < 0.0 {
        vacuous = true;
        notes.push(format!(
            "square-root argument {arg:.3e} negative: gain/SNR constants too \
             favorable for this bound's regime; clamped to 0"
        ));
        0.0
    } else {
        arg.sqrt()
    };
    let second = n2f.sqrt() * (inp.beta / (1.0 - inp.beta) + root);

    let bracket = 1.0 + sqrt_2k * inp.delta_2k + pair_terms * inp.delta_2;
    let s_g = bracket / denom * sqrt_2k + second;

    let bracket_simplified = 1.0 + (sqrt_2k + pair_terms) * inp.delta;
    let s_g_simplified = bracket_simplified / denom * sqrt_2k + second;

    let s_ora =
        sqrt_2k / (1.0 - inp.omega) + (n2f - 2.0 * kf).sqrt() * inp.omega / (1.0 - inp.omega);

    let s_raw = s_g.ceil().max(s_ora.ceil());
    let s = if s_raw > n2f {
        vacuous = true;
        notes.push(format!(
            "sparsity level {s_raw:.1} exceeds the ambient dimension {}; clipped",
            inp.n2
        ));
        inp.n2
    } else {
        s_raw as usize
    };
    let t_raw = s + 2 * inp.k;
    let t_total = if t_raw > inp.n2 {
        vacuous = true;
        notes.push(format!(
            "support budget {t_raw} exceeds the ambient dimension {}; clipped",
            inp.n2
        ));
        inp.n2
    } else {
        t_raw
    };
    Ok(SparsityBounds {
        s_g,
        s_g_simplified,
        s_ora,
        s,
        t_total,
        vacuous,
        notes,
    })
}

// ---------------------------------------------------------------------------
// Gap bound between unsupervised and supervised NMSE
// ---------------------------------------------------------------------------

/// The assembled gap bound and its pieces.
#[derive(Debug, Clone, Copy)]
pub struct GapBound {
    pub epsilon_1: f64,
    pub epsilon_2: f64,
    /// `ε₁·β²·δ(1+δ)` — contribution of the projected-error constant.
    pub term_beta: f64,
    /// `ε₂·γ²·g(s)·δ(1+δ)` — contribution of the sparse-tail energy.
    pub term_sgf: f64,
    pub bound: f64,
    /// Set when `(1+1/√ρ)·δ ≥ 1`, where the scaling constants blow up;
    /// then `bound` is +∞ and says nothing.
    pub vacuous: bool,
}

/// Upper bound on `|NMSE_unsupervised − NMSE_supervised|`:
/// `(ε₁β² + ε₂γ²g(s))·δ(1+δ)` with
/// `ε₁ = 2(1+1/√ρ) / (1−(1+1/√ρ)²δ²)` and
/// `ε₂ = 4·η·(1−ρ)/ρ · (1+ξ²) / (1−(1+1/√ρ)²δ²)`,
/// where `ρ = T/(2N)` is the support fraction and `η = M/N` the sampling
/// ratio. Out-of-regime inputs flag the result instead of raising.
pub fn oracle_gap_bound(
    beta: f64,
    gamma: f64,
    xi: f64,
    delta: f64,
    g_s: f64,
    rho: f64,
    eta_samp: f64,
) -> Result<GapBound> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Validation(format!(
            "support fraction {rho} outside (0, 1]"
        )));
    }
    if !(eta_samp > 0.0 && eta_samp <= 1.0) {
        return Err(Error::Validation(format!(
            "sampling ratio {eta_samp} outside (0, 1]"
        )));
    }
    check_unit_interval("delta", delta, true)?;
    if !(beta >= 0.0 && gamma >= 0.0 && xi >= 0.0 && g_s >= 0.0) {
        return Err(Error::Validation(
            "beta, gamma, xi, and the growth value must be nonnegative".into(),
        ));
    }
    let c = 1.0 + 1.0 / rho.sqrt();
    let denom = 1.0 - c * c * delta * delta;
    if denom <= 0.0 {
        return Ok(GapBound {
            epsilon_1: f64::INFINITY,
            epsilon_2: f64::INFINITY,
            term_beta: f64::INFINITY,
            term_sgf: f64::INFINITY,
            bound: f64::INFINITY,
            vacuous: true,
        });
    }
    let epsilon_1 = 2.0 * c / denom;
    let epsilon_2 = 4.0 * eta_samp * (1.0 - rho) / rho * (1.0 + xi * xi) / denom;
    let scale = delta * (1.0 + delta);
    let term_beta = epsilon_1 * beta * beta * scale;
    let term_sgf = epsilon_2 * gamma * gamma * g_s * scale;
    Ok(GapBound {
        epsilon_1,
        epsilon_2,
        term_beta,
        term_sgf,
        bound: term_beta + term_sgf,
        vacuous: false,
    })
}

// ---------------------------------------------------------------------------
// Full report
// ---------------------------------------------------------------------------

/// Inputs to the end-to-end theory evaluation.
#[derive(Debug, Clone, Copy)]
pub struct TheoryInputs {
    pub k: usize,
    pub n2: usize,
    pub m2: usize,
    pub beta: f64,
    pub omega: f64,
    pub xi: f64,
    /// Flatness constant of the measurement matrix: `√(2N)·max|A_ij|`.
    pub zeta: f64,
    pub gamma: f64,
    pub c_inv_norm: f64,
    pub delta: f64,
    pub delta_2k: f64,
    pub delta_2: f64,
}

/// Every derived constant of the gap analysis in one record.
#[derive(Debug, Clone)]
pub struct TheoryReport {
    pub inputs: TheoryInputs,
    pub s_g: f64,
    pub s_g_simplified: f64,
    pub s_ora: f64,
    pub s: usize,
    pub t_total: usize,
    /// Support fraction `T/(2N)`.
    pub rho: f64,
    /// Sampling ratio `M/N`.
    pub eta_samp: f64,
    /// Growth value `g(s)` (closed form).
    pub g_s: f64,
    /// Sandwich slack `δ·(1 + 1/√ρ)`.
    pub epsilon: f64,
    pub epsilon_1: f64,
    pub epsilon_2: f64,
    pub gap_bound: f64,
    pub term_beta: f64,
    pub term_sgf: f64,
    pub vacuous: bool,
    pub notes: Vec<String>,
}

impl TheoryReport {
    /// Flat `key=value` lines, one per scalar — the CLI's report format.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let i = &self.inputs;
        let mut kv: Vec<(String, String)> = vec![
            ("k".into(), i.k.to_string()),
            ("n2".into(), i.n2.to_string()),
            ("m2".into(), i.m2.to_string()),
            ("beta".into(), format!("{:.12e}", i.beta)),
            ("omega".into(), format!("{:.12e}", i.omega)),
            ("xi".into(), format!("{:.12e}", i.xi)),
            ("zeta".into(), format!("{:.12e}", i.zeta)),
            ("gamma".into(), format!("{:.12e}", i.gamma)),
            ("c_inv_norm".into(), format!("{:.12e}", i.c_inv_norm)),
            ("delta".into(), format!("{:.12e}", i.delta)),
            ("delta_2k".into(), format!("{:.12e}", i.delta_2k)),
            ("delta_2".into(), format!("{:.12e}", i.delta_2)),
            ("s_g".into(), format!("{:.12e}", self.s_g)),
            (
                "s_g_simplified".into(),
                format!("{:.12e}", self.s_g_simplified),
            ),
            ("s_ora".into(), format!("{:.12e}", self.s_ora)),
            ("s".into(), self.s.to_string()),
            ("t_total".into(), self.t_total.to_string()),
            ("rho".into(), format!("{:.12e}", self.rho)),
            ("eta_samp".into(), format!("{:.12e}", self.eta_samp)),
            ("g_s".into(), format!("{:.12e}", self.g_s)),
            ("epsilon".into(), format!("{:.12e}", self.epsilon)),
            ("epsilon_1".into(), format!("{:.12e}", self.epsilon_1)),
            ("epsilon_2".into(), format!("{:.12e}", self.epsilon_2)),
            ("gap_bound".into(), format!("{:.12e}", self.gap_bound)),
            ("term_beta".into(), format!("{:.12e}", self.term_beta)),
            ("term_sgf".into(), format!("{:.12e}", self.term_sgf)),
            ("vacuous".into(), self.vacuous.to_string()),
        ];
        for (j, note) in self.notes.iter().enumerate() {
            kv.push((format!("note_{j}"), note.clone()));
        }
        kv
    }
}

/// Run the whole pipeline: sparsity levels → growth value → gap bound.
pub fn theory_report(inp: &TheoryInputs) -> Result<TheoryReport> {
    if inp.m2 == 0 || inp.m2 >= inp.n2 || inp.m2 % 2 != 0 || inp.n2 % 2 != 0 {
        return Err(Error::Validation(format!(
            "need even 0 < m2 < n2, got m2 = {}, n2 = {}",
            inp.m2, inp.n2
        )));
    }
    let sb = sparsity_bounds(&SparsityInputs {
        k: inp.k,
        n2: inp.n2,
        beta: inp.beta,
        omega: inp.omega,
        xi: inp.xi,
        gamma: inp.gamma,
        c_inv_norm: inp.c_inv_norm,
        delta_2k: inp.delta_2k,
        delta_2: inp.delta_2,
        delta: inp.delta,
    })?;
    let rho = sb.t_total as f64 / inp.n2 as f64;
    let eta_samp = inp.m2 as f64 / inp.n2 as f64;
    let g_s = if sb.s == 0 {
        0.0
    } else {
        sgf_closed_form(sb.s.min(inp.n2), inp.n2)?
    };
    let gap = oracle_gap_bound(inp.beta, inp.gamma, inp.xi, inp.delta, g_s, rho, eta_samp)?;
    let mut vacuous = sb.vacuous || gap.vacuous;
    let mut notes = sb.notes.clone();
    if gap.vacuous {
        notes.push("scaling constants blow up: (1 + 1/sqrt(rho))*delta >= 1".into());
        vacuous = true;
    }
    let epsilon = inp.delta * (1.0 + 1.0 / rho.sqrt());
    Ok(TheoryReport {
        inputs: *inp,
        s_g: sb.s_g,
        s_g_simplified: sb.s_g_simplified,
        s_ora: sb.s_ora,
        s: sb.s,
        t_total: sb.t_total,
        rho,
        eta_samp,
        g_s,
        epsilon,
        epsilon_1: gap.epsilon_1,
        epsilon_2: gap.epsilon_2,
        gap_bound: gap.bound,
        term_beta: gap.term_beta,
        term_sgf: gap.term_sgf,
        vacuous,
        notes,
    })
}

// ---------------------------------------------------------------------------
// Operating-constant estimators
// ---------------------------------------------------------------------------

/// Measured stand-ins for the analysis constants.
#[derive(Debug, Clone, Copy)]
pub struct AssumptionEstimates {
    pub beta: f64,
    pub omega: f64,
    pub xi: f64,
}

/// Relative projected error `‖P(h*−h)‖ / ‖Ph‖` of an estimate.
pub fn estimate_beta(h_star_g: &[f64], h: &[f64], problem: &StandardProblem) -> Result<f64> {
    if h_star_g.len() != problem.n2() || h.len() != problem.n2() {
        return Err(Error::Dim {
            what: "estimate/truth",
            expected: problem.n2(),
            got: h_star_g.len().min(h.len()),
        });
    }
    let ph = problem.project(h);
    let denom = linalg::nrm2(&ph);
    if !(denom > 0.0) {
        return Err(Error::Validation(
            "projected truth has zero norm; the ratio is undefined".into(),
        ));
    }
    let diff = linalg::sub(&problem.project(h_star_g), &ph);
    Ok(linalg::nrm2(&diff) / denom)
}

/// Relative error `‖h*−h‖ / ‖h‖` of an estimate.
pub fn estimate_omega(h_star_ora: &[f64], h: &[f64]) -> Result<f64> {
    if h_star_ora.len() != h.len() {
        return Err(Error::Dim {
            what: "estimate",
            expected: h.len(),
            got: h_star_ora.len(),
        });
    }
    let denom = linalg::nrm2(h);
    if !(denom > 0.0) {
        return Err(Error::Validation(
            "ground truth has zero norm; the ratio is undefined".into(),
        ));
    }
    Ok(linalg::nrm2(&linalg::sub(h_star_ora, h)) / denom)
}

/// 99th percentile (nearest-rank) of fresh draws of `‖n‖ / ‖Ah‖`, with
/// `n ~ N(0, (σ²/2)·C)` taken from the problem's noise model.
pub fn estimate_xi(
    problem: &StandardProblem,
    h: &[f64],
    draws: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if h.len() != problem.n2() {
        return Err(Error::Dim {
            what: "channel h",
            expected: problem.n2(),
            got: h.len(),
        });
    }
    if draws == 0 {
        return Err(Error::Validation("need at least one noise draw".into()));
    }
    let signal = linalg::nrm2(&problem.a.matvec(h));
    if !(signal > 0.0) {
        return Err(Error::Validation(
            "measured signal has zero norm; the SNR ratio is undefined".into(),
        ));
    }
    let mut ratios = Vec::with_capacity(draws);
    for _ in 0..draws {
        let mut nsq = 0.0;
        for &ci in &problem.c_diag {
            let z: f64 = rng.sample(StandardNormal);
            let ni = (0.5 * problem.sigma2 * ci).sqrt() * z;
            nsq += ni * ni;
        }
        ratios.push(nsq.sqrt() / signal);
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let rank = ((0.99 * draws as f64).ceil() as usize).clamp(1, draws);
    Ok(ratios[rank - 1])
}

/// All three operating constants for one instance:
/// β̂ from the unsupervised estimate, ω̂ from the supervised one, ξ̂ from
/// `draws` fresh noise realizations.
pub fn estimate_assumption_constants(
    h_star_g: &[f64],
    h_star_ora: &[f64],
    h: &[f64],
    problem: &StandardProblem,
    draws: usize,
    rng: &mut impl Rng,
) -> Result<AssumptionEstimates> {
    Ok(AssumptionEstimates {
        beta: estimate_beta(h_star_g, h, problem)?,
        omega: estimate_omega(h_star_ora, h)?,
        xi: estimate_xi(problem, h, draws, rng)?,
    })
}

// ---------------------------------------------------------------------------
// Per-instance error sandwich
// ---------------------------------------------------------------------------

/// One evaluated sandwich inequality.
#[derive(Debug, Clone, Copy)]
pub struct SandwichCheck {
    /// `(1−ε)·‖h*−h‖²`.
    pub lhs: f64,
    /// `(N/M)·‖P(h*−h)‖² + δ·(2N−T)/T·‖tail‖²`.
    pub rhs: f64,
    /// `δ·(1 + √(2N/T))`.
    pub epsilon: f64,
    /// `|support kept|` (≤ T by construction).
    pub kept_support: usize,
    pub holds: bool,
}

/// Check the error sandwich
/// `(1−ε)·‖h*−h‖² ≤ (N/M)·‖P(h*−h)‖² + δ·(2N−T)/T·‖h*_{𝒯ᶜ}‖²`
/// for one instance, where 𝒯 unions the ground-truth support with the
/// `T − ‖h‖₀` largest remaining entries of the estimate, and δ is an
/// order-2T isometry constant of `√(N/M)·A` (exact when brute-forced).
pub fn mse_sandwich_check(
    h_star: &[f64],
    h: &[f64],
    problem: &StandardProblem,
    delta: f64,
    t_cap: usize,
) -> Result<SandwichCheck> {
    let n2 = problem.n2();
    if h_star.len() != n2 || h.len() != n2 {
        return Err(Error::Dim {
            what: "estimate/truth",
            expected: n2,
            got: h_star.len().min(h.len()),
        });
    }
    if t_cap == 0 || t_cap > n2 {
        return Err(Error::Validation(format!(
            "support budget {t_cap} outside [1, {n2}]"
        )));
    }
    if !(delta >= 0.0) {
        return Err(Error::Validation(format!(
            "isometry constant must be nonnegative, got {delta}"
        )));
    }
    let nnz_h = h.iter().filter(|v| **v != 0.0).count();
    if nnz_h > t_cap {
        return Err(Error::Validation(format!(
            "ground truth has {nnz_h} nonzeros, more than the support budget {t_cap}"
        )));
    }
    let s_keep = t_cap - nnz_h;
    // 𝒯 = best-s indices of the estimate ∪ supp(truth).
    let mut in_t = vec![false; n2];
    for &i in top_indices(h_star, s_keep).iter() {
        in_t[i] = true;
    }
    for (i, &v) in h.iter().enumerate() {
        if v != 0.0 {
            in_t[i] = true;
        }
    }
    let kept_support = in_t.iter().filter(|b| **b).count();
    let tail_sq: f64 = h_star
        .iter()
        .zip(&in_t)
        .filter(|(_, keep)| !**keep)
        .map(|(v, _)| v * v)
        .sum();
    let diff = linalg::sub(h_star, h);
    let mse_val = linalg::nrm2_sq(&diff);
    let pmse_val = linalg::nrm2_sq(&problem.project(&diff));
    let epsilon = delta * (1.0 + (n2 as f64 / t_cap as f64).sqrt());
    let lhs = (1.0 - epsilon) * mse_val;
    let rhs = (n2 as f64 / problem.m2() as f64) * pmse_val
        + delta * ((n2 - t_cap) as f64 / t_cap as f64) * tail_sq;
    let holds = lhs <= rhs + 1e-12 * (1.0 + rhs.abs());
    Ok(SandwichCheck {
        lhs,
        rhs,
        epsilon,
        kept_support,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::{build_measurement, MatrixKind, MeasurementConfig};
    use crate::util::root_rng;

    // ---- sparsity measures ----

    #[test]
    fn l_half_reference_points() {
        let mut e = vec![0.0; 8];
        e[3] = -2.5;
        assert!((l_half(&e).unwrap() - 1.0).abs() < 1e-14);
        let ones = vec![1.0; 9];
        assert!((l_half(&ones).unwrap() - 3.0).abs() < 1e-14);
        // Equal-magnitude κ-sparse: exactly √κ.
        let mut v = vec![0.0; 16];
        for i in 0..4 {
            v[i * 3] = if i % 2 == 0 { 0.7 } else { -0.7 };
        }
        assert!((l_half(&v).unwrap() - 2.0).abs() < 1e-12);
        assert!(l_half(&vec![0.0; 4]).is_err());
    }

    #[test]
    fn residual_ratio_reference_points() {
        let v = vec![0.0, 3.0, 0.0, -1.0];
        assert_eq!(sparse_residual_ratio(&v, 2).unwrap(), 0.0);
        assert_eq!(sparse_residual_ratio(&v, 4).unwrap(), 0.0);
        assert!((sparse_residual_ratio(&v, 0).unwrap() - 1.0).abs() < 1e-15);
        // Hand computation: keep the 2, residual (1,1,0) over total 6.
        let w = vec![2.0, 1.0, 1.0, 0.0];
        assert!((sparse_residual_ratio(&w, 1).unwrap() - 2.0 / 6.0).abs() < 1e-14);
        // Tie at magnitude 1: lowest index kept.
        assert!((sparse_residual_ratio(&w, 2).unwrap() - 1.0 / 6.0).abs() < 1e-14);
        assert!(sparse_residual_ratio(&[0.0, 0.0], 1).is_err());
    }

    // ---- SGF ----

    #[test]
    fn rate_function_is_continuous_at_one() {
        // Algebraic oracle: ρ̃ = (κ−1)/(√(x+κ−1)·(√(xκ)+√(x+κ−1))) — the
        // same expression with the difference of square roots rationalized,
        // which has no singularity at x = 1.
        let oracle = |kappa: f64, x: f64| {
            (kappa - 1.0)
                / ((x + kappa - 1.0).sqrt() * ((x * kappa).sqrt() + (x + kappa - 1.0).sqrt()))
        };
        for &kappa in &[2.0, 4.0, 17.0] {
            for &x in &[0.5, 0.999_999_999, 1.0, 1.000_000_001, 1.5, 40.0] {
                let got = rho_tilde(kappa, x);
                let want = oracle(kappa, x);
                assert!(
                    (got - want).abs() < 1e-7 * want.abs().max(1.0),
                    "κ={kappa} x={x}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn sgf_numeric_degenerate_and_range() {
        assert_eq!(sgf_bound_numeric(1, 64).unwrap(), 0.0);
        assert_eq!(sgf_bound_numeric(64, 64).unwrap(), 0.0);
        assert!(sgf_bound_numeric(0, 64).is_err());
        assert!(sgf_bound_numeric(65, 64).is_err());
        for kappa in [2usize, 5, 16, 40, 63] {
            let g = sgf_bound_numeric(kappa, 64).unwrap();
            assert!((0.0..=1.0).contains(&g), "g({kappa}) = {g}");
        }
    }

    #[test]
    fn closed_form_matches_numeric() {
        for &(kappa, n2) in &[(16usize, 512usize), (64, 512), (2, 64), (32, 64), (63, 64)] {
            let g_num = sgf_bound_numeric(kappa, n2).unwrap();
            let g_closed = sgf_closed_form(kappa, n2).unwrap();
            assert!(
                (g_num - g_closed).abs() < 1e-6,
                "κ={kappa} 2N={n2}: numeric {g_num} vs closed {g_closed}"
            );
            assert!(g_closed > 0.0 && g_closed < 1.0);
        }
        assert_eq!(sgf_closed_form(1, 64).unwrap(), 0.0);
    }

    #[test]
    fn trig_root_solves_cubic_and_maximizes() {
        for kappa in [2usize, 3, 4, 8, 64, 1000] {
            let t = sgf_trig_root(kappa);
            assert!(
                sgf_cubic_residual(kappa, t) < 1e-10,
                "κ={kappa}: residual {}",
                sgf_cubic_residual(kappa, t)
            );
            // Local-maximum oracle on the reparametrized objective.
            let kf = kappa as f64;
            let c0 = sgf_c_of_t(kf, t);
            assert!(c0 > sgf_c_of_t(kf, t - 0.01));
            assert!(c0 > sgf_c_of_t(kf, t + 0.01));
        }
    }

    #[test]
    fn brute_force_sandwiches_the_bounds() {
        assert_eq!(
            sgf_brute_force(1, 32, &SgfBruteGrid::default()).unwrap(),
            0.0
        );
        let grid = SgfBruteGrid {
            rho_points: 200,
            lambda_points: 200,
        };
        let brute = sgf_brute_force(4, 32, &grid).unwrap();
        let numeric = sgf_bound_numeric(4, 32).unwrap();
        assert!(
            brute <= numeric + 1e-12,
            "brute {brute} exceeds numeric {numeric}"
        );
        assert!(
            numeric <= brute + 0.02,
            "bound {numeric} loose vs brute {brute}"
        );
        // Nested feasible sets: brute is monotone in κ.
        let b8 = sgf_brute_force(8, 32, &grid).unwrap();
        assert!(brute <= b8 + 1e-12);
    }

    #[test]
    fn feasible_vectors_respect_the_bound() {
        let mut rng = root_rng(0x5F5);
        for _ in 0..200 {
            let n2 = 32;
            let mut v: Vec<f64> = (0..n2)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z
                })
                .collect();
            // Sparsify at random so small κ values occur too.
            let keep = 1 + (rng.gen::<u64>() % 20) as usize;
            for i in top_indices(&v, n2).into_iter().skip(keep) {
                v[i] *= rng.gen::<f64>() * 0.2;
            }
            let m = l_half(&v).unwrap();
            let kappa = (m * m).ceil() as usize;
            if kappa >= n2 {
                continue;
            }
            let ratio = sparse_residual_ratio(&v, kappa).unwrap();
            let g = sgf_bound_numeric(kappa, n2).unwrap();
            assert!(
                ratio <= g + 1e-9,
                "feasible vector beats the bound: ratio {ratio}, g({kappa}) = {g}"
            );
        }
    }

    // ---- RIP ----

    fn random_partial_orthogonal(n_half: usize, m_half: usize, seed: u64) -> Mat {
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

    #[test]
    fn rip_of_orthogonal_square_is_zero() {
        // A square orthonormal matrix: every column subset is orthonormal.
        let mut a = Mat::from_fn(8, 8, |r, c| {
            let mut rng = root_rng((r * 8 + c) as u64 + 7);
            rng.sample::<f64, _>(StandardNormal)
        });
        assert!(linalg::orthonormalize_columns(&mut a));
        for k in [1usize, 2, 3, 8] {
            let d = rip_constant_bruteforce(&a, k).unwrap();
            assert!(d < 1e-10, "δ_{k} = {d}");
        }
    }

    #[test]
    fn rip_monotone_and_first_order_formula() {
        for seed in 0..4u64 {
            let a = random_partial_orthogonal(8, 5, seed);
            let scale = (a.cols as f64 / a.rows as f64).sqrt();
            let scaled = Mat::from_fn(a.rows, a.cols, |r, c| scale * a.get(r, c));
            // δ₁ = max |‖column‖² − 1|.
            let d1 = rip_constant_bruteforce(&scaled, 1).unwrap();
            let mut expect = 0.0f64;
            for c in 0..scaled.cols {
                let nsq: f64 = (0..scaled.rows).map(|r| scaled.get(r, c).powi(2)).sum();
                expect = expect.max((nsq - 1.0).abs());
            }
            assert!((d1 - expect).abs() < 1e-12);
            let mut prev = 0.0;
            for k in 1..=4usize {
                let d = rip_constant_bruteforce(&scaled, k).unwrap();
                assert!(
                    d >= prev - 1e-12,
                    "δ_{k} = {d} dropped below δ_{} = {prev}",
                    k - 1
                );
                prev = d;
            }
        }
    }

    #[test]
    fn rip_guards_combinatorial_blowup() {
        let a = Mat::zeros(10, 40);
        assert!(rip_constant_bruteforce(&a, 20).is_err());
        assert!(rip_constant_bruteforce(&a, 0).is_err());
        assert!(rip_constant_bruteforce(&a, 41).is_err());
        assert_eq!(binomial(40, 20), 137_846_528_820);
        assert_eq!(binomial(5, 2), 10);
    }

    // ---- sparsity bounds ----

    fn base_inputs() -> SparsityInputs {
        SparsityInputs {
            k: 3,
            n2: 512,
            beta: 0.0,
            omega: 0.0,
            xi: 1.0,
            gamma: 1.0,
            c_inv_norm: 1.0,
            delta_2k: 0.0,
            delta_2: 0.0,
            delta: 0.0,
        }
    }

    #[test]
    fn sparsity_bound_limits() {
        // ω = 0: the supervised bound collapses to √(2k).
        let sb = sparsity_bounds(&base_inputs()).unwrap();
        assert!((sb.s_ora - 6f64.sqrt()).abs() < 1e-12);
        // β = 0, all isometry constants 0, γ·ξ·‖C⁻¹‖ = 1: the square root
        // argument is exactly 0 and the unsupervised bound is also √(2k).
        assert!((sb.s_g - 6f64.sqrt()).abs() < 1e-7);
        assert_eq!(sb.s, 3); // ⌈√6⌉
        assert_eq!(sb.t_total, 9);
        assert!(!sb.vacuous);

        // An infeasible constant combination flags rather than raising.
        let mut inp = base_inputs();
        inp.gamma = 0.5; // (1−β)² = 1 > γ²ξ² = 0.25
        let sb = sparsity_bounds(&inp).unwrap();
        assert!(sb.vacuous);
        assert!(!sb.notes.is_empty());
    }

    #[test]
    fn sparsity_bound_regression_pin() {
        let inp = SparsityInputs {
            k: 3,
            n2: 512,
            beta: 0.05,
            omega: 0.03,
            xi: 0.1,
            gamma: 9.0,
            c_inv_norm: 1.0,
            delta_2k: 0.1,
            delta_2: 0.1,
            delta: 0.1,
        };
        let sb = sparsity_bounds(&inp).unwrap();
        // Evaluation snapshot; guards drift in the formula wiring.
        assert!(
            (sb.s_g - 890.617_931_597_425_2).abs() < 1e-9,
            "s_g = {:.12}",
            sb.s_g
        );
        assert!(
            (sb.s_ora - 3.220_951_603_644_637).abs() < 1e-9,
            "s_ora = {:.12}",
            sb.s_ora
        );
        assert_eq!(sb.s, 512); // clipped: the pair-count term dominates
        assert_eq!(sb.t_total, 512);
        assert!(sb.vacuous);
    }

    // ---- gap bound ----

    #[test]
    fn gap_bound_limits_and_monotonicity() {
        // δ = 0: the two training objectives provably coincide.
        let g0 = oracle_gap_bound(0.3, 9.0, 0.5, 0.0, 0.2, 0.25, 0.5).unwrap();
        assert_eq!(g0.bound, 0.0);
        assert!(!g0.vacuous);
        // β = 0 and g(s) = 0: nothing leaks, any δ.
        let g1 = oracle_gap_bound(0.0, 9.0, 0.5, 0.2, 0.0, 0.25, 0.5).unwrap();
        assert_eq!(g1.bound, 0.0);
        // Monotone in δ until the regime boundary, and in g(s).
        let mut prev = -1.0;
        for i in 0..16 {
            let delta = i as f64 * 0.02;
            let g = oracle_gap_bound(0.1, 2.0, 0.5, delta, 0.2, 0.25, 0.5).unwrap();
            if g.vacuous {
                assert!(delta * 3.0 >= 1.0); // c = 1+1/√0.25 = 3
                break;
            }
            assert!(g.bound >= prev);
            prev = g.bound;
        }
        let lo = oracle_gap_bound(0.1, 2.0, 0.5, 0.1, 0.1, 0.25, 0.5).unwrap();
        let hi = oracle_gap_bound(0.1, 2.0, 0.5, 0.1, 0.3, 0.25, 0.5).unwrap();
        assert!(hi.bound > lo.bound);
        // Vacuous regime: flagged, not raised.
        let v = oracle_gap_bound(0.1, 2.0, 0.5, 0.5, 0.2, 0.25, 0.5).unwrap();
        assert!(v.vacuous && v.bound.is_infinite());
    }

    #[test]
    fn full_report_assembles() {
        let inp = TheoryInputs {
            k: 3,
            n2: 64,
            m2: 32,
            beta: 0.1,
            omega: 0.05,
            xi: 0.2,
            zeta: 1.4,
            gamma: 9.0,
            c_inv_norm: 1.0,
            delta: 0.05,
            delta_2k: 0.05,
            delta_2: 0.01,
        };
        let rep = theory_report(&inp).unwrap();
        assert_eq!(rep.eta_samp, 0.5);
        assert!(rep.rho > 0.0 && rep.rho <= 1.0);
        assert!(rep.g_s >= 0.0 && rep.g_s <= 1.0);
        assert!(rep.epsilon > 0.0);
        let kv = rep.key_values();
        assert!(kv.iter().any(|(k, _)| k == "gap_bound"));
        assert!(kv.iter().any(|(k, v)| k == "s" && v == &rep.s.to_string()));
        assert!(theory_report(&TheoryInputs { m2: 64, ..inp }).is_err());
    }

    // ---- operating-constant estimators ----

    #[test]
    fn constant_estimators_reference_points() {
        let a = random_partial_orthogonal(8, 4, 11);
        let mut rng = root_rng(12);
        let inst = crate::channel::gen_sparse(16, 2, crate::channel::AmpDist::Gaussian, &mut rng)
            .unwrap();
        let prob =
            crate::sensing::noisy_problem(&a, &vec![1.0; 8], &inst.h, 20.0, &mut rng).unwrap();
        // Perfect estimates.
        assert!(estimate_beta(&inst.h, &inst.h, &prob).unwrap() < 1e-15);
        assert_eq!(estimate_omega(&inst.h, &inst.h).unwrap(), 0.0);
        // Zero estimate: both ratios are exactly 1.
        let zero = vec![0.0; 16];
        assert!((estimate_beta(&zero, &inst.h, &prob).unwrap() - 1.0).abs() < 1e-12);
        assert!((estimate_omega(&zero, &inst.h).unwrap() - 1.0).abs() < 1e-12);
        // ξ̂ at 20 dB: mean noise-to-signal amplitude ratio is 0.1; the 99th
        // percentile sits above it but far below 1.
        let xi = estimate_xi(&prob, &inst.h, 4000, &mut rng).unwrap();
        assert!(xi > 0.05 && xi < 0.4, "xi = {xi}");
        let all = estimate_assumption_constants(&inst.h, &zero, &inst.h, &prob, 100, &mut rng)
            .unwrap();
        assert!(all.beta < 1e-12 && (all.omega - 1.0).abs() < 1e-12);
    }

    // ---- sandwich ----

    #[test]
    fn sandwich_reference_cases() {
        let a = random_partial_orthogonal(8, 4, 21);
        let mut rng = root_rng(22);
        let inst = crate::channel::gen_sparse(16, 2, crate::channel::AmpDist::Gaussian, &mut rng)
            .unwrap();
        let prob =
            crate::sensing::noisy_problem(&a, &vec![1.0; 8], &inst.h, 10.0, &mut rng).unwrap();
        // Perfect estimate: both sides zero, holds.
        let c = mse_sandwich_check(&inst.h, &inst.h, &prob, 0.3, 6).unwrap();
        assert!(c.holds && c.lhs == 0.0 && c.rhs == 0.0);
        // δ = 1 is vacuous (negative left side) but still holds.
        let mut est = inst.h.clone();
        for v in est.iter_mut() {
            *v += 0.1;
        }
        let c = mse_sandwich_check(&est, &inst.h, &prob, 1.0, 6).unwrap();
        assert!(c.epsilon > 1.0 && c.holds);
        // Budget smaller than the truth's support is rejected.
        assert!(mse_sandwich_check(&est, &inst.h, &prob, 0.3, 3).is_err());
    }

    #[test]
    fn sandwich_holds_with_exact_constants() {
        // With the exact brute-forced order-2T constant, the inequality is a
        // deterministic consequence of restricted isometry: check it across
        // random instances and arbitrary (even adversarial-ish) estimates.
        let n_half = 6;
        let m_half = 4;
        let t_cap = 4;
        let mut rng = root_rng(31);
        for trial in 0..60u64 {
            let a = random_partial_orthogonal(n_half, m_half, 100 + trial);
            let scale = (a.cols as f64 / a.rows as f64).sqrt();
            let scaled = Mat::from_fn(a.rows, a.cols, |r, c| scale * a.get(r, c));
            let delta = rip_constant_bruteforce(&scaled, 2 * t_cap).unwrap();
            let inst =
                crate::channel::gen_sparse(2 * n_half, 1, crate::channel::AmpDist::Gaussian, &mut rng)
                    .unwrap();
            let prob = crate::sensing::noisy_problem(
                &a,
                &vec![1.0; 2 * m_half],
                &inst.h,
                15.0,
                &mut rng,
            )
            .unwrap();
            // Arbitrary estimates: truth + dense perturbations of several sizes.
            for &amp in &[0.01, 0.3, 2.0] {
                let est: Vec<f64> = inst
                    .h
                    .iter()
                    .map(|v| v + amp * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let c = mse_sandwich_check(&est, &inst.h, &prob, delta, t_cap).unwrap();
                assert!(
                    c.holds,
                    "trial {trial} amp {amp}: lhs {} rhs {} δ {delta}",
                    c.lhs, c.rhs
                );
            }
        }
    }
}
