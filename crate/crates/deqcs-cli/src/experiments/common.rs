//! Shared experiment plumbing: problem construction, RNG stream layout,
//! estimation-method dispatch, and config-section readers.
//!
//! # RNG stream layout
//!
//! Every experiment derives all randomness from the master seed through
//! fixed, documented stream ids, which is what makes reruns bit-identical:
//!
//! * stream 0 — measurement matrix
//! * stream 1 — model initialization (training)
//! * stream 2 — noise-ratio percentile estimation
//! * stream 3 — fixed estimator construction (unbiasedness study)
//! * stream 2²⁰ + t — channel instance of trial `t` (shared across the SNR
//!   grid, so per-trial comparisons across SNR are paired)
//! * stream 2²¹ + snr_index·trials + t — measurement noise of trial `t` at
//!   one SNR point
//!
//! Training internally uses per-epoch streams of the same master seed.

use std::path::{Path, PathBuf};

use deqcs::baselines::{amp, ista, omp};
use deqcs::channel::{gen_sparse, AmpDist};
use deqcs::deq::{forward_fixed_point, DeqConfig};
use deqcs::linalg::Mat;
use deqcs::model::{ChannelInstance, StandardProblem};
use deqcs::nn::NleParams;
use deqcs::sensing::{build_measurement, MatrixKind, MeasurementConfig};
use deqcs::train::{load_checkpoint, ProblemSetup};
use deqcs::util::stream_rng;

use crate::config::ConfigMap;
use crate::error::{cfg_err, Result};
use crate::manifest::Manifest;

pub const STREAM_MATRIX: u64 = 0;
pub const STREAM_MODEL_INIT: u64 = 1;
pub const STREAM_XI: u64 = 2;
pub const STREAM_ESTIMATOR: u64 = 3;
pub const STREAM_INSTANCE_BASE: u64 = 1 << 20;
pub const STREAM_NOISE_BASE: u64 = 1 << 21;

/// CLI-flag overrides that take precedence over config values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub snr_db: Option<Vec<f64>>,
}

/// Resolve the master seed: `--seed` flag, else `[experiment] seed`,
/// else 0. Writes the effective value back so the manifest records it.
pub fn resolve_seed(cfg: &mut ConfigMap, ov: &Overrides) -> Result<u64> {
    let seed = match ov.seed {
        Some(s) => s,
        None => cfg.get_or("experiment", "seed", 0u64)?,
    };
    cfg.set("experiment", "seed", seed);
    Ok(seed)
}

/// Resolve an SNR grid: `--snr-db` flag, else the config key, else the
/// default. Writes the effective grid back for the manifest.
pub fn resolve_snr_grid(
    cfg: &mut ConfigMap,
    ov: &Overrides,
    section: &str,
    key: &str,
    default: &[f64],
) -> Result<Vec<f64>> {
    // Read (and thereby consume) the config key even when the flag wins, so
    // an overridden key is not misreported as unknown.
    let from_cfg = cfg.get_list_or(section, key, default)?;
    let grid = match &ov.snr_db {
        Some(list) => list.clone(),
        None => from_cfg,
    };
    if grid.is_empty() {
        return Err(cfg_err(format!("[{section}] {key}: empty SNR grid")));
    }
    let joined: Vec<String> = grid.iter().map(|v| v.to_string()).collect();
    cfg.set(section, key, joined.join(","));
    Ok(grid)
}

/// Check the optional `[experiment] kind` tag against what the subcommand
/// is about to run; a mismatch is a config error.
pub fn check_kind(cfg: &mut ConfigMap, expected: &[&str]) -> Result<String> {
    match cfg.get_str("experiment", "kind") {
        None => Ok(expected[0].to_string()),
        Some(kind) => {
            if expected.contains(&kind.as_str()) {
                Ok(kind)
            } else {
                Err(cfg_err(format!(
                    "[experiment] kind = '{kind}' does not match this subcommand \
                     (expected {})",
                    expected.join(" | ")
                )))
            }
        }
    }
}

/// The synthetic problem family: dimensions, sparsity, and matrix kind.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub n2: usize,
    pub m2: usize,
    pub k: usize,
    pub amp: AmpDist,
    pub kind: MatrixKind,
}

impl ProblemSpec {
    /// Read `[problem]` with desk-scale defaults (2N = 128, 2M = 2N/2,
    /// k = 3, Gaussian amplitudes, subsampled-DCT measurements).
    pub fn from_config(cfg: &mut ConfigMap) -> Result<Self> {
        let n2: usize = cfg.get_or("problem", "n2", 128)?;
        let m2: usize = cfg.get_or("problem", "m2", n2 / 2)?;
        let k: usize = cfg.get_or("problem", "k", 3)?;
        let amp = match cfg
            .get_str("problem", "amp_dist")
            .unwrap_or_else(|| "gaussian".into())
            .as_str()
        {
            "gaussian" => AmpDist::Gaussian,
            "unit" => AmpDist::Unit,
            other => {
                return Err(cfg_err(format!(
                    "[problem] amp_dist = '{other}' (expected gaussian | unit)"
                )))
            }
        };
        let kind = match cfg
            .get_str("problem", "matrix")
            .unwrap_or_else(|| "subsampled_dct".into())
            .as_str()
        {
            "subsampled_dct" => MatrixKind::SubsampledDct,
            "row_orthonormal" => MatrixKind::RowSubsampledOrthonormal,
            other => {
                return Err(cfg_err(format!(
                    "[problem] matrix = '{other}' (expected subsampled_dct | row_orthonormal)"
                )))
            }
        };
        if n2 == 0 || m2 == 0 || n2 % 2 != 0 || m2 % 2 != 0 || m2 >= n2 {
            return Err(cfg_err(format!(
                "[problem] needs even 0 < m2 < n2, got n2 = {n2}, m2 = {m2}"
            )));
        }
        if 2 * k > n2 {
            return Err(cfg_err(format!(
                "[problem] sparsity 2k = {} exceeds n2 = {n2}",
                2 * k
            )));
        }
        Ok(ProblemSpec {
            n2,
            m2,
            k,
            amp,
            kind,
        })
    }

    /// Build the (seeded) measurement matrix for this run.
    pub fn build_matrix(&self, seed: u64) -> Result<Mat> {
        Ok(build_measurement(
            &MeasurementConfig {
                n_half: self.n2 / 2,
                m_half: self.m2 / 2,
                kind: self.kind,
            },
            &mut stream_rng(seed, STREAM_MATRIX),
        )?)
    }

    /// White-noise problem setup at one SNR.
    pub fn setup(&self, a: Mat, snr_db: f64) -> Result<ProblemSetup> {
        Ok(ProblemSetup::new(a, vec![1.0; self.m2], snr_db)?)
    }

    /// Channel instance of trial `t` — independent of the SNR point.
    pub fn instance(&self, seed: u64, trial: u64) -> Result<ChannelInstance> {
        Ok(gen_sparse(
            self.n2,
            self.k,
            self.amp,
            &mut stream_rng(seed, STREAM_INSTANCE_BASE + trial),
        )?)
    }

    /// Measurement of trial `t` at SNR point `snr_idx`: fresh noise stream.
    pub fn stamp(
        &self,
        setup: &ProblemSetup,
        h: &[f64],
        seed: u64,
        snr_idx: usize,
        trials: usize,
        trial: usize,
    ) -> Result<StandardProblem> {
        let stream = STREAM_NOISE_BASE + (snr_idx * trials + trial) as u64;
        Ok(setup.stamp(h, &mut stream_rng(seed, stream))?)
    }
}

/// Read `[deq]` into the fixed-point solver configuration.
pub fn deq_from_config(cfg: &mut ConfigMap) -> Result<DeqConfig> {
    let dc = DeqConfig {
        eta: cfg.get_or("deq", "eta", 1.0)?,
        tol: cfg.get_or("deq", "tol", 1e-4)?,
        max_iter: cfg.get_or("deq", "max_iter", 100)?,
        lip_target: cfg.get_or("deq", "lip_target", 0.9)?,
    };
    dc.validate()?;
    Ok(dc)
}

/// Classical-baseline hyperparameters from `[baselines]`.
#[derive(Debug, Clone, Copy)]
pub struct BaselineSettings {
    pub omp_k_target: usize,
    pub ista_lambda: f64,
    pub ista_max_iter: usize,
    pub amp_damping: f64,
    pub amp_max_iter: usize,
    pub tol: f64,
}

impl BaselineSettings {
    /// Defaults: OMP gets the true support size `2k`; ISTA λ = 0.01 with
    /// 300 iterations; AMP damping 0.7 with 60 iterations.
    pub fn from_config(cfg: &mut ConfigMap, spec: &ProblemSpec) -> Result<Self> {
        Ok(BaselineSettings {
            omp_k_target: cfg.get_or("baselines", "omp_k_target", 2 * spec.k)?,
            ista_lambda: cfg.get_or("baselines", "ista_lambda", 0.01)?,
            ista_max_iter: cfg.get_or("baselines", "ista_max_iter", 300)?,
            amp_damping: cfg.get_or("baselines", "amp_damping", 0.7)?,
            amp_max_iter: cfg.get_or("baselines", "amp_max_iter", 60)?,
            tol: cfg.get_or("baselines", "tol", 1e-8)?,
        })
    }
}

/// An estimation method in a sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    DeqGsure,
    DeqNmse,
    Omp,
    Ista,
    Amp,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::DeqGsure => "deq_gsure",
            Method::DeqNmse => "deq_nmse",
            Method::Omp => "omp",
            Method::Ista => "ista",
            Method::Amp => "amp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "deq_gsure" => Ok(Method::DeqGsure),
            "deq_nmse" => Ok(Method::DeqNmse),
            "omp" => Ok(Method::Omp),
            "ista" => Ok(Method::Ista),
            "amp" => Ok(Method::Amp),
            other => Err(cfg_err(format!(
                "unknown method '{other}' \
                 (expected deq_gsure | deq_nmse | omp | ista | amp)"
            ))),
        }
    }
}

/// Parse a method list key (comma-separated).
pub fn methods_from_config(
    cfg: &mut ConfigMap,
    section: &str,
    default: &str,
) -> Result<Vec<Method>> {
    let raw = cfg
        .get_str(section, "methods")
        .unwrap_or_else(|| default.to_string());
    let mut out = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let m = Method::parse(part)?;
        if out.contains(&m) {
            return Err(cfg_err(format!(
                "[{section}] methods lists '{part}' twice"
            )));
        }
        out.push(m);
    }
    if out.is_empty() {
        return Err(cfg_err(format!("[{section}] methods is empty")));
    }
    Ok(out)
}

/// Checkpoint-backed equilibrium models, loaded on demand.
#[derive(Debug, Default)]
pub struct Models {
    pub gsure: Option<NleParams>,
    pub nmse: Option<NleParams>,
}

/// Load the checkpoints the requested methods need from
/// `[<section>] checkpoint_gsure` / `checkpoint_nmse`. A requested
/// equilibrium method without its checkpoint key is a config error, as is
/// an unreadable file. Loaded files are fingerprinted into the manifest.
pub fn load_models_for(
    cfg: &mut ConfigMap,
    section: &str,
    methods: &[Method],
    manifest: &mut Manifest,
) -> Result<Models> {
    let mut models = Models::default();
    for (method, key, slot) in [
        (Method::DeqGsure, "checkpoint_gsure", 0usize),
        (Method::DeqNmse, "checkpoint_nmse", 1),
    ] {
        let path = cfg.get_str(section, key);
        if !methods.contains(&method) {
            continue;
        }
        let path = PathBuf::from(path.ok_or_else(|| {
            cfg_err(format!(
                "method {} requires [{section}] {key} = <checkpoint path>",
                method.as_str()
            ))
        })?);
        let (model, _) = load_checkpoint(&path)
            .map_err(|e| cfg_err(format!("cannot load {}: {e}", path.display())))?;
        manifest.add_input(&path)?;
        if slot == 0 {
            models.gsure = Some(model);
        } else {
            models.nmse = Some(model);
        }
    }
    Ok(models)
}

/// Run one method on one problem; returns the estimate and whether the
/// solver converged (classical baselines report their own notion; OMP is
/// always "converged" because it runs a fixed number of greedy steps).
pub fn run_method(
    method: Method,
    models: &Models,
    bl: &BaselineSettings,
    deq: &DeqConfig,
    problem: &StandardProblem,
) -> Result<(Vec<f64>, bool)> {
    match method {
        Method::DeqGsure | Method::DeqNmse => {
            let model = match method {
                Method::DeqGsure => models.gsure.as_ref(),
                _ => models.nmse.as_ref(),
            }
            .expect("checkpoint presence validated at load time");
            let fp = forward_fixed_point(model, problem, deq, None)?;
            Ok((fp.h_star, fp.converged))
        }
        Method::Omp => {
            let r = omp(problem, bl.omp_k_target, bl.tol)?;
            Ok((r.h, true))
        }
        Method::Ista => {
            let r = ista(problem, bl.ista_lambda, bl.ista_max_iter, bl.tol)?;
            Ok((r.h, r.converged))
        }
        Method::Amp => {
            let r = amp(problem, bl.amp_max_iter, bl.amp_damping, bl.tol)?;
            Ok((r.h, r.converged && !r.diverged))
        }
    }
}

/// Decibel conversion with a floor so exact-zero errors stay finite.
pub fn ratio_to_db(ratio: f64) -> f64 {
    10.0 * ratio.max(1e-30).log10()
}

/// Resolve a config path relative to the process working directory.
pub fn existing_path(p: &str) -> Result<PathBuf> {
    let path = Path::new(p);
    if !path.exists() {
        return Err(cfg_err(format!("path does not exist: {p}")));
    }
    Ok(path.to_path_buf())
}
