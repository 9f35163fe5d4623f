//! Losses, divergence estimation, optimizer, and the training loop.
//!
//! Two families of losses drive the same equilibrium model and
//! Jacobian-free backward pass:
//!
//! * **Unsupervised risk estimate** — measures only the projected error
//!   visible through the sensing operator, replacing the unknown ground
//!   truth with the measurement anchor `Aᵀy` plus a divergence correction:
//!   `‖P·g(u) − Aᵀy‖² + σ²·Tr(P·∂g/∂u) − (σ²/2)·Tr(C)`.
//!   With noise `n ~ N(0, (σ²/2)C)` this is an exactly unbiased estimate of
//!   the projected MSE (the cross term contributes `−σ²·Tr(P∂g/∂u)` and
//!   `E‖Aᵀn‖² = (σ²/2)Tr(C)`).
//! * **Supervised references** — plain MSE, projected MSE, or batch NMSE
//!   against known channels.
//!
//! The divergence trace is estimated with Rademacher probes through the
//! fixed point itself: re-solve at `u + εz` warm-started from `h*`, then
//! take the directional difference. Probe directions are treated as
//! constants when differentiating with respect to parameters.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::channel::{AmpDist, Dataset};
use crate::deq::{self, DeqConfig};
use crate::linalg::{self, Mat};
use crate::model::{validate_partial_orthogonal, StandardProblem};
use crate::nn::{self, NleParams};
use crate::sensing;
use crate::util::stream_rng;
use crate::{tol, Error, Result};

/// Configuration of the unsupervised-risk divergence estimator.
#[derive(Debug, Clone, Copy)]
pub struct GsureConfig {
    /// Rademacher probes per sample (1 during training, ~64 at evaluation).
    pub probes: usize,
    /// Relative finite-difference step for the directional re-solve.
    pub fd_step_rel: f64,
    /// Include the `−(σ²/2)·Tr(C)` constant so the estimate is exactly
    /// unbiased rather than unbiased-up-to-a-constant.
    pub include_constant: bool,
}

impl Default for GsureConfig {
    fn default() -> Self {
        GsureConfig {
            probes: 1,
            fd_step_rel: 1e-3,
            include_constant: true,
        }
    }
}

impl GsureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.probes == 0 {
            return Err(Error::Validation("need at least one probe".into()));
        }
        if !(self.fd_step_rel > 1e-6 && self.fd_step_rel < 1e-1) {
            return Err(Error::Validation(format!(
                "finite-difference step {} outside (1e-6, 1e-1)",
                self.fd_step_rel
            )));
        }
        Ok(())
    }
}

/// Which objective drives training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// Unsupervised projected-risk estimate (no ground truth used).
    Gsure,
    /// Batch NMSE `Σ‖ĥ−h‖² / Σ‖h‖²`.
    Nmse,
    /// Mean projected squared error.
    Pmse,
    /// Mean squared error.
    Mse,
}

impl LossMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossMode::Gsure => "gsure",
            LossMode::Nmse => "nmse",
            LossMode::Pmse => "pmse",
            LossMode::Mse => "mse",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gsure" => Ok(LossMode::Gsure),
            "nmse" => Ok(LossMode::Nmse),
            "pmse" => Ok(LossMode::Pmse),
            "mse" => Ok(LossMode::Mse),
            _ => Err(Error::Validation(format!(
                "unknown loss mode '{s}' (expected gsure|nmse|pmse|mse)"
            ))),
        }
    }
}

/// Training-loop hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Initial learning rate.
    pub lr: f64,
    /// `(factor, every_n_epochs)`: lr is multiplied by `factor` after every
    /// `every_n_epochs` completed epochs.
    pub lr_decay: (f64, usize),
    pub loss_mode: LossMode,
    pub seed: u64,
    /// Write a checkpoint every this many epochs (and always at the end)
    /// when `checkpoint_dir` is set.
    pub checkpoint_every: usize,
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 128,
            lr: 1e-3,
            lr_decay: (0.5, 30),
            loss_mode: LossMode::Gsure,
            seed: 0,
            checkpoint_every: 10,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Validation("need at least one epoch".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Validation("batch size must be positive".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Validation(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        let (factor, every) = self.lr_decay;
        if !(factor > 0.0 && factor <= 1.0) || every == 0 {
            return Err(Error::Validation(
                "lr decay needs factor in (0,1] and a positive period".into(),
            ));
        }
        Ok(())
    }

    /// Learning rate in force during a (0-based) epoch.
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        let (factor, every) = self.lr_decay;
        self.lr * factor.powi((epoch / every) as i32)
    }
}

/// A fixed measurement context shared by a stream of samples: the matrix is
/// validated once, then problems are stamped per channel draw.
#[derive(Debug, Clone)]
pub struct ProblemSetup {
    pub a: Mat,
    pub c_diag: Vec<f64>,
    /// Per-instance SNR target; σ² is solved per channel.
    pub snr_db: f64,
}

impl ProblemSetup {
    pub fn new(a: Mat, c_diag: Vec<f64>, snr_db: f64) -> Result<Self> {
        validate_partial_orthogonal(&a, tol::ORTHO)?;
        if c_diag.len() != a.rows {
            return Err(Error::Dim {
                what: "noise diagonal C",
                expected: a.rows,
                got: c_diag.len(),
            });
        }
        if c_diag.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Validation(
                "noise diagonal C must be strictly positive".into(),
            ));
        }
        Ok(ProblemSetup { a, c_diag, snr_db })
    }

    /// Measure one channel at the configured SNR.
    pub fn stamp(&self, h: &[f64], rng: &mut impl Rng) -> Result<StandardProblem> {
        sensing::noisy_problem(&self.a, &self.c_diag, h, self.snr_db, rng)
    }
}

/// Where training samples come from.
#[derive(Debug, Clone)]
pub enum DataSource {
    /// A finite set of channels; noise is redrawn every time a channel is
    /// visited, so epochs differ in measurements but not in channels.
    Dataset { data: Dataset, setup: ProblemSetup },
    /// Unlimited synthetic sparse channels drawn on the fly.
    Stream {
        setup: ProblemSetup,
        /// Half-sparsity of the generated channels.
        k: usize,
        amp: AmpDist,
        steps_per_epoch: usize,
    },
}

impl DataSource {
    fn setup(&self) -> &ProblemSetup {
        match self {
            DataSource::Dataset { setup, .. } | DataSource::Stream { setup, .. } => setup,
        }
    }

    fn steps_per_epoch(&self, batch_size: usize) -> usize {
        match self {
            DataSource::Dataset { data, .. } => data.samples.len().div_ceil(batch_size),
            DataSource::Stream { steps_per_epoch, .. } => *steps_per_epoch,
        }
    }
}

/// One problem with (optionally) its ground-truth channel.
#[derive(Debug, Clone)]
pub struct Sample {
    pub problem: StandardProblem,
    pub truth: Option<Vec<f64>>,
}

/// Convergence/effort diagnostics accumulated over a batch.
#[derive(Debug, Clone, Copy, Default)]
pub struct BatchStats {
    pub unconverged: usize,
    pub total_iterations: usize,
    pub samples: usize,
    /// Σ‖ĥ−h‖² over samples with truth.
    pub err_sq: f64,
    /// Σ‖h‖² over samples with truth.
    pub truth_sq: f64,
}

impl BatchStats {
    pub fn mean_iters(&self) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        self.total_iterations as f64 / self.samples as f64
    }

    /// Batch NMSE (ratio of sums); NaN when no truth was seen.
    pub fn nmse(&self) -> f64 {
        self.err_sq / self.truth_sq
    }
}

/// Unsupervised risk value for one estimate:
/// `‖P·estimate − Aᵀy‖² + σ²·divergence_trace − (σ²/2)·Tr(C)`
/// (`AᵀCAu = Aᵀy` exactly for partial-orthogonal `A`). The constant term is
/// dropped when `include_constant` is false.
pub fn gsure_value(
    estimate: &[f64],
    divergence_trace: f64,
    problem: &StandardProblem,
    include_constant: bool,
) -> Result<f64> {
    if estimate.len() != problem.n2() {
        return Err(Error::Dim {
            what: "estimate",
            expected: problem.n2(),
            got: estimate.len(),
        });
    }
    let anchor = problem.atcau();
    let diff = linalg::sub(&problem.project(estimate), &anchor);
    let mut value = linalg::nrm2_sq(&diff) + problem.sigma2 * divergence_trace;
    if include_constant {
        value -= 0.5 * problem.sigma2 * problem.trace_c();
    }
    Ok(value)
}

/// Monte-Carlo estimate of `Tr(P·∂g/∂u)` for a black-box estimator:
/// mean over Rademacher probes `z` of `⟨Pz, g(u+εz) − g(u)⟩/ε` with
/// `ε = fd_step_rel·‖u‖/√(2N)` (absolute step when `‖u‖ = 0`).
pub fn hutchinson_divergence<G>(
    mut g: G,
    problem: &StandardProblem,
    cfg: &GsureConfig,
    rng: &mut impl Rng,
) -> Result<f64>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let u = &problem.u;
    let n2 = u.len();
    let unorm = linalg::nrm2(u);
    let eps = if unorm > 0.0 {
        cfg.fd_step_rel * unorm / (n2 as f64).sqrt()
    } else {
        cfg.fd_step_rel
    };
    let base = g(u)?;
    if base.len() != n2 {
        return Err(Error::Dim {
            what: "estimator output",
            expected: n2,
            got: base.len(),
        });
    }
    let mut acc = 0.0;
    let mut u_pert = vec![0.0; n2];
    for _ in 0..cfg.probes {
        let z: Vec<f64> = (0..n2)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        for ((up, ui), zi) in u_pert.iter_mut().zip(u).zip(&z) {
            *up = ui + eps * zi;
        }
        let shifted = g(&u_pert)?;
        let pz = problem.project(&z);
        let mut dir = 0.0;
        for ((s, b), p) in shifted.iter().zip(&base).zip(&pz) {
            dir += (s - b) * p;
        }
        acc += dir / eps;
    }
    Ok(acc / cfg.probes as f64)
}

/// Per-sample pieces shared by loss evaluation and gradient assembly.
struct SolvedSample {
    h_star: Vec<f64>,
    converged: bool,
    iterations: usize,
}

fn solve_sample(
    model: &NleParams,
    problem: &StandardProblem,
    deq_cfg: &DeqConfig,
) -> Result<SolvedSample> {
    let res = deq::forward_fixed_point(model, problem, deq_cfg, None)?;
    Ok(SolvedSample {
        h_star: res.h_star,
        converged: res.converged,
        iterations: res.iterations,
    })
}

/// Unsupervised loss and (optionally) its parameter gradient over a batch.
///
/// Per sample: solve the equilibrium, estimate the divergence by probe
/// re-solves warm-started from `h*` and differenced against an
/// equal-iteration continuation of the unperturbed map, assemble the risk
/// value, then backpropagate the quadratic term through one Jacobian-free
/// VJP and the divergence term through the same probe differences (probe
/// directions held constant). Loss is the batch mean; gradients accumulate
/// in sample order, then divide by the batch size.
///
/// Errors when every sample fails to converge; partial non-convergence is
/// reported in the stats and those samples still contribute.
pub fn gsure_loss_and_grad(
    model: &NleParams,
    samples: &[Sample],
    gsure_cfg: &GsureConfig,
    deq_cfg: &DeqConfig,
    rng: &mut impl Rng,
    want_grad: bool,
) -> Result<(f64, Vec<f64>, BatchStats)> {
    gsure_cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Validation("empty batch".into()));
    }
    let mut loss_acc = 0.0;
    let mut grad = vec![0.0; model.param_len()];
    let mut stats = BatchStats::default();
    for sample in samples {
        let problem = &sample.problem;
        let n2 = problem.n2();
        let solved = solve_sample(model, problem, deq_cfg)?;
        stats.samples += 1;
        stats.total_iterations += solved.iterations;
        if !solved.converged {
            stats.unconverged += 1;
        }
        if let Some(truth) = &sample.truth {
            stats.err_sq += crate::model::mse(&solved.h_star, truth)?;
            stats.truth_sq += linalg::nrm2_sq(truth);
        }
        let h_star = &solved.h_star;

        // Divergence probes through the equilibrium map.
        let unorm = linalg::nrm2(&problem.u);
        let eps = if unorm > 0.0 {
            gsure_cfg.fd_step_rel * unorm / (n2 as f64).sqrt()
        } else {
            gsure_cfg.fd_step_rel
        };
        let mut divergence = 0.0;
        let mut div_grad = vec![0.0; if want_grad { grad.len() } else { 0 }];
        for _ in 0..gsure_cfg.probes {
            let z: Vec<f64> = (0..n2)
                .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let u_pert: Vec<f64> = problem
                .u
                .iter()
                .zip(&z)
                .map(|(ui, zi)| ui + eps * zi)
                .collect();
            let pert = deq::forward_fixed_point_with_u(
                model,
                problem,
                deq_cfg,
                &u_pert,
                Some(h_star),
            )?;
            // Continue the unperturbed iteration for the same number of
            // steps. When the base solve stopped short of the fixed point,
            // both trajectories carry the same residual convergence, which
            // cancels out of the difference instead of being divided by ε;
            // the quotient then measures the response of the iterate
            // actually computed. At a converged base point the continuation
            // stays within solver tolerance of h*.
            let mut base_cont = h_star.clone();
            for _ in 0..pert.iterations {
                base_cont = nn::nle_forward(model, &deq::le_step(problem, deq_cfg, &base_cont))?;
            }
            let pz = problem.project(&z);
            let mut dir = 0.0;
            for ((s, b), p) in pert.h_star.iter().zip(&base_cont).zip(&pz) {
                dir += (s - b) * p;
            }
            divergence += dir / eps;
            if want_grad {
                // d/dΘ ⟨Pz, h⁺(u+εz) − h⁺(u)⟩/ε via two one-step VJPs at
                // the matched iterates.
                let g_pert = deq::jfb_gradient_with_u(
                    model,
                    problem,
                    deq_cfg,
                    &u_pert,
                    &pert.h_star,
                    &pz,
                )?;
                let g_base = deq::jfb_gradient(model, problem, deq_cfg, &base_cont, &pz)?;
                for ((d, gp), gb) in div_grad.iter_mut().zip(&g_pert).zip(&g_base) {
                    *d += (gp - gb) / eps;
                }
            }
        }
        divergence /= gsure_cfg.probes as f64;

        loss_acc += gsure_value(h_star, divergence, problem, gsure_cfg.include_constant)?;

        if want_grad {
            // Quadratic term: ∂‖P h − Aᵀy‖²/∂h = 2(P h* − Aᵀy).
            let anchor = problem.atcau();
            let cot: Vec<f64> = problem
                .project(h_star)
                .iter()
                .zip(&anchor)
                .map(|(p, a)| 2.0 * (p - a))
                .collect();
            let g_quad = deq::jfb_gradient(model, problem, deq_cfg, h_star, &cot)?;
            let probe_scale = problem.sigma2 / gsure_cfg.probes as f64;
            for ((g, q), d) in grad.iter_mut().zip(&g_quad).zip(&div_grad) {
                *g += q + probe_scale * d;
            }
        }
    }
    if stats.unconverged == stats.samples {
        return Err(Error::Numeric(
            "no sample converged within the iteration cap".into(),
        ));
    }
    let b = samples.len() as f64;
    for g in grad.iter_mut() {
        *g /= b;
    }
    Ok((loss_acc / b, grad, stats))
}

/// Supervised loss and gradient over a batch with known channels.
///
/// `Mse`/`Pmse` are per-sample means; `Nmse` is the batch ratio
/// `Σ‖ĥ−h‖²/Σ‖h‖²` with the matching cotangent normalization.
pub fn supervised_loss_and_grad(
    model: &NleParams,
    samples: &[Sample],
    mode: LossMode,
    deq_cfg: &DeqConfig,
    want_grad: bool,
) -> Result<(f64, Vec<f64>, BatchStats)> {
    if samples.is_empty() {
        return Err(Error::Validation("empty batch".into()));
    }
    if mode == LossMode::Gsure {
        return Err(Error::Validation(
            "supervised path cannot optimize the unsupervised objective".into(),
        ));
    }
    let mut stats = BatchStats::default();
    let mut solves = Vec::with_capacity(samples.len());
    let mut truth_sq_total = 0.0;
    for sample in samples {
        let truth = sample.truth.as_ref().ok_or_else(|| {
            Error::Validation("supervised training requires ground-truth channels".into())
        })?;
        let solved = solve_sample(model, &sample.problem, deq_cfg)?;
        stats.samples += 1;
        stats.total_iterations += solved.iterations;
        if !solved.converged {
            stats.unconverged += 1;
        }
        stats.err_sq += crate::model::mse(&solved.h_star, truth)?;
        stats.truth_sq += linalg::nrm2_sq(truth);
        truth_sq_total += linalg::nrm2_sq(truth);
        solves.push(solved);
    }
    if stats.unconverged == stats.samples {
        return Err(Error::Numeric(
            "no sample converged within the iteration cap".into(),
        ));
    }
    let b = samples.len() as f64;
    if mode == LossMode::Nmse && truth_sq_total <= 0.0 {
        return Err(Error::Numeric(
            "batch NMSE undefined for zero-energy ground truth".into(),
        ));
    }

    let mut loss = 0.0;
    let mut grad = vec![0.0; model.param_len()];
    for (sample, solved) in samples.iter().zip(&solves) {
        let truth = sample.truth.as_ref().expect("checked above");
        let problem = &sample.problem;
        let diff = linalg::sub(&solved.h_star, truth);
        let (value, cot): (f64, Vec<f64>) = match mode {
            LossMode::Mse => {
                let v = linalg::nrm2_sq(&diff);
                (v / b, diff.iter().map(|d| 2.0 * d / b).collect())
            }
            LossMode::Pmse => {
                let pdiff = problem.project(&diff);
                let v = linalg::nrm2_sq(&pdiff);
                (v / b, pdiff.iter().map(|d| 2.0 * d / b).collect())
            }
            LossMode::Nmse => {
                let v = linalg::nrm2_sq(&diff);
                (
                    v / truth_sq_total,
                    diff.iter().map(|d| 2.0 * d / truth_sq_total).collect(),
                )
            }
            LossMode::Gsure => unreachable!(),
        };
        loss += value;
        if want_grad {
            let g = deq::jfb_gradient(model, problem, deq_cfg, &solved.h_star, &cot)?;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
    }
    Ok((loss, grad, stats))
}

/// Adam optimizer state (β₁ = 0.9, β₂ = 0.999, ε = 1e-8, bias-corrected).
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        AdamState {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// One Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(Error::Dim {
            what: "optimizer buffers",
            expected: state.m.len(),
            got: params.len().min(grads.len()),
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - ADAM_BETA1.powi(t);
    let bc2 = 1.0 - ADAM_BETA2.powi(t);
    for i in 0..params.len() {
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * grads[i];
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
    Ok(())
}

/// One epoch row of the metrics history.
#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub epoch: usize,
    pub loss_mode: LossMode,
    pub loss: f64,
    pub nmse_db: f64,
    pub mean_iters: f64,
    pub lr: f64,
    pub seed: u64,
}

/// Write the metrics history as CSV
/// (`epoch,loss_mode,loss,nmse_db,mean_iters,lr,seed`).
pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "epoch,loss_mode,loss,nmse_db,mean_iters,lr,seed")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.6e},{:.6e},{:.6e},{:.6e},{}",
            r.epoch,
            r.loss_mode.as_str(),
            r.loss,
            r.nmse_db,
            r.mean_iters,
            r.lr,
            r.seed
        )?;
    }
    w.flush()?;
    Ok(())
}

const CKPT_OPT_PRESENT: u8 = 1;
const CKPT_OPT_ABSENT: u8 = 0;

/// Write a checkpoint: the model in its own format, then a flag byte and —
/// when present — the optimizer state (t, then first/second moments).
pub fn save_checkpoint(path: &Path, model: &NleParams, opt: Option<&AdamState>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    nn::write_model(&mut w, model)?;
    match opt {
        Some(state) => {
            w.write_all(&[CKPT_OPT_PRESENT])?;
            w.write_all(&state.t.to_le_bytes())?;
            w.write_all(&(state.m.len() as u64).to_le_bytes())?;
            for v in state.m.iter().chain(state.v.iter()) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        None => w.write_all(&[CKPT_OPT_ABSENT])?,
    }
    w.flush()?;
    Ok(())
}

/// Read a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<(NleParams, Option<AdamState>)> {
    let mut r = BufReader::new(File::open(path)?);
    let model = nn::read_model(&mut r)?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)
        .map_err(|_| Error::Format("checkpoint missing optimizer flag".into()))?;
    let opt = match flag[0] {
        CKPT_OPT_ABSENT => None,
        CKPT_OPT_PRESENT => {
            let mut b8 = [0u8; 8];
            r.read_exact(&mut b8)
                .map_err(|_| Error::Format("truncated checkpoint".into()))?;
            let t = u64::from_le_bytes(b8);
            r.read_exact(&mut b8)
                .map_err(|_| Error::Format("truncated checkpoint".into()))?;
            let dim = u64::from_le_bytes(b8);
            if dim != model.param_len() as u64 {
                return Err(Error::Format(format!(
                    "optimizer state dimension {dim} does not match model ({})",
                    model.param_len()
                )));
            }
            let mut read_vec = |n: usize| -> Result<Vec<f64>> {
                let mut out = Vec::with_capacity(n);
                for _ in 0..n {
                    let mut b = [0u8; 8];
                    r.read_exact(&mut b)
                        .map_err(|_| Error::Format("truncated checkpoint".into()))?;
                    out.push(f64::from_le_bytes(b));
                }
                Ok(out)
            };
            let m = read_vec(dim as usize)?;
            let v = read_vec(dim as usize)?;
            Some(AdamState { m, v, t })
        }
        other => {
            return Err(Error::Format(format!(
                "unknown optimizer flag {other} in checkpoint"
            )))
        }
    };
    Ok((model, opt))
}

/// Assemble one batch of samples for a training step.
fn draw_batch(
    source: &DataSource,
    order: &[usize],
    step: usize,
    batch_size: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Sample>> {
    let setup = source.setup();
    match source {
        DataSource::Dataset { data, .. } => {
            let start = step * batch_size;
            let idx = &order[start.min(order.len())..(start + batch_size).min(order.len())];
            idx.iter()
                .map(|&i| {
                    let inst = &data.samples[i];
                    Ok(Sample {
                        problem: setup.stamp(&inst.h, rng)?,
                        truth: Some(inst.h.clone()),
                    })
                })
                .collect()
        }
        DataSource::Stream { k, amp, .. } => (0..batch_size)
            .map(|_| {
                let inst = crate::channel::gen_sparse(setup.a.cols, *k, *amp, rng)?;
                Ok(Sample {
                    problem: setup.stamp(&inst.h, rng)?,
                    truth: Some(inst.h),
                })
            })
            .collect(),
    }
}

/// Fisher–Yates shuffle driven by the training RNG (kept local so the
/// sample order is part of the deterministic trajectory).
fn shuffled_indices(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Full training loop. Deterministic given `(seed, configs)`: all noise,
/// channel draws, probe directions, and shuffles derive from per-epoch
/// streams of the seed. Returns the trained model and one metrics row per
/// epoch. Aborts with a numeric error if the loss turns non-finite.
pub fn train(
    mut model: NleParams,
    source: &DataSource,
    train_cfg: &TrainConfig,
    deq_cfg: &DeqConfig,
    gsure_cfg: &GsureConfig,
) -> Result<(NleParams, Vec<MetricsRow>)> {
    train_cfg.validate()?;
    deq_cfg.validate()?;
    gsure_cfg.validate()?;
    let setup = source.setup();
    let n2 = setup.a.cols;
    let mut opt = AdamState::new(model.param_len());
    let mut history = Vec::with_capacity(train_cfg.epochs);

    for epoch in 0..train_cfg.epochs {
        let mut rng = stream_rng(train_cfg.seed, epoch as u64 + 1);
        let lr = train_cfg.lr_at_epoch(epoch);
        let steps = source.steps_per_epoch(train_cfg.batch_size).max(1);
        let order = match source {
            DataSource::Dataset { data, .. } => {
                shuffled_indices(data.samples.len(), &mut rng)
            }
            DataSource::Stream { .. } => Vec::new(),
        };
        let mut loss_acc = 0.0;
        let mut epoch_stats = BatchStats::default();
        for step in 0..steps {
            let batch = draw_batch(source, &order, step, train_cfg.batch_size, &mut rng)?;
            if batch.is_empty() {
                continue;
            }
            let (loss, grad, stats) = match train_cfg.loss_mode {
                LossMode::Gsure => {
                    gsure_loss_and_grad(&model, &batch, gsure_cfg, deq_cfg, &mut rng, true)?
                }
                mode => supervised_loss_and_grad(&model, &batch, mode, deq_cfg, true)?,
            };
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss {loss} at epoch {epoch}, step {step}; \
                     check the Lipschitz budget and learning rate"
                )));
            }
            loss_acc += loss;
            epoch_stats.unconverged += stats.unconverged;
            epoch_stats.total_iterations += stats.total_iterations;
            epoch_stats.samples += stats.samples;
            epoch_stats.err_sq += stats.err_sq;
            epoch_stats.truth_sq += stats.truth_sq;

            let mut params = model.get_params();
            adam_step(&mut opt, &mut params, &grad, lr)?;
            model.set_params(&params)?;
            model.clamp_thresholds();
            nn::spectral_normalize(&mut model, n2, 1)?;
        }
        let nmse_db = crate::model::to_db(epoch_stats.nmse());
        history.push(MetricsRow {
            epoch,
            loss_mode: train_cfg.loss_mode,
            loss: loss_acc / steps as f64,
            nmse_db,
            mean_iters: epoch_stats.mean_iters(),
            lr,
            seed: train_cfg.seed,
        });
        if let Some(dir) = &train_cfg.checkpoint_dir {
            let last = epoch + 1 == train_cfg.epochs;
            if last || (epoch + 1) % train_cfg.checkpoint_every == 0 {
                std::fs::create_dir_all(dir)?;
                let name = if last {
                    "checkpoint_final.bin".to_string()
                } else {
                    format!("checkpoint_epoch{:04}.bin", epoch + 1)
                };
                save_checkpoint(&dir.join(name), &model, Some(&opt))?;
            }
        }
    }
    // Tight renormalization before handing the model back for evaluation.
    nn::spectral_normalize(&mut model, n2, 50)?;
    Ok((model, history))
}

/// Evaluate NMSE (and solver effort) of a model over samples with truth.
pub fn evaluate_nmse(
    model: &NleParams,
    samples: &[Sample],
    deq_cfg: &DeqConfig,
) -> Result<BatchStats> {
    let mut stats = BatchStats::default();
    for sample in samples {
        let truth = sample
            .truth
            .as_ref()
            .ok_or_else(|| Error::Validation("evaluation requires ground truth".into()))?;
        let solved = solve_sample(model, &sample.problem, deq_cfg)?;
        stats.samples += 1;
        stats.total_iterations += solved.iterations;
        if !solved.converged {
            stats.unconverged += 1;
        }
        stats.err_sq += crate::model::mse(&solved.h_star, truth)?;
        stats.truth_sq += linalg::nrm2_sq(truth);
    }
    Ok(stats)
}

/// Mean unsupervised risk over samples (no gradients; heavier probe counts
/// are affordable here).
pub fn evaluate_gsure(
    model: &NleParams,
    samples: &[Sample],
    gsure_cfg: &GsureConfig,
    deq_cfg: &DeqConfig,
    rng: &mut impl Rng,
) -> Result<f64> {
    let (loss, _, _) = gsure_loss_and_grad(model, samples, gsure_cfg, deq_cfg, rng, false)?;
    Ok(loss)
}
