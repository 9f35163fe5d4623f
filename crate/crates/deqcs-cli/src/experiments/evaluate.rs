//! Evaluation runs.
//!
//! Two kinds, selected by `[experiment] kind`:
//!
//! * `nmse_eval` (default) — mean NMSE of the configured methods at the
//!   configured SNR points, written as `evaluate.csv`. The single-point
//!   version of the sweep, for checking one checkpoint quickly.
//! * `gsure_unbiasedness` — Monte-Carlo check that the unsupervised risk
//!   value is an unbiased estimate of the projected MSE: a fixed linear
//!   estimator with its divergence computed exactly is averaged over many
//!   noise draws and compared against the analytic expectation, written as
//!   `gsure_unbiasedness.csv`.

use std::path::Path;

use deqcs::linalg::{self, Mat};
use deqcs::model::StandardProblem;
use deqcs::sensing::{build_measurement, sigma2_for_snr, MeasurementConfig};
use deqcs::train::gsure_value;
use deqcs::util::{standard_normal, stream_rng};

use crate::config::ConfigMap;
use crate::csvout::{fmt_e, fmt_plain, Csv};
use crate::error::{cfg_err, Result};
use crate::manifest::Manifest;

use super::common::{
    check_kind, deq_from_config, load_models_for, methods_from_config, resolve_seed,
    resolve_snr_grid, BaselineSettings, Overrides, ProblemSpec, STREAM_ESTIMATOR,
    STREAM_MATRIX, STREAM_NOISE_BASE,
};
use super::sweep::{rows_to_csv, run_grid};

pub fn run(cfg: &mut ConfigMap, ov: &Overrides, out_dir: &Path) -> Result<()> {
    let kind = check_kind(cfg, &["nmse_eval", "gsure_unbiasedness"])?;
    match kind.as_str() {
        "gsure_unbiasedness" => run_unbiasedness(cfg, ov, out_dir),
        _ => run_nmse_eval(cfg, ov, out_dir),
    }
}

fn run_nmse_eval(cfg: &mut ConfigMap, ov: &Overrides, out_dir: &Path) -> Result<()> {
    let seed = resolve_seed(cfg, ov)?;
    let snr_grid = resolve_snr_grid(cfg, ov, "evaluate", "snr_db", &[20.0])?;
    let trials: usize = cfg.get_or("evaluate", "trials", 200)?;
    let methods = methods_from_config(cfg, "evaluate", "omp,ista,amp")?;
    let spec = ProblemSpec::from_config(cfg)?;
    let bl = BaselineSettings::from_config(cfg, &spec)?;
    let deq = deq_from_config(cfg)?;
    let mut manifest = Manifest::new("evaluate", seed, String::new());
    let models = load_models_for(cfg, "evaluate", &methods, &mut manifest)?;
    manifest.config_text = cfg.canonical_text();
    cfg.finish()?;
    if trials == 0 {
        return Err(cfg_err("[evaluate] trials must be positive"));
    }

    let rows = run_grid(&spec, seed, &snr_grid, trials, &methods, &models, &bl, &deq)?;
    let csv_path = out_dir.join("evaluate.csv");
    rows_to_csv(&rows).write(&csv_path)?;
    manifest.add_output(&csv_path)?;
    manifest.write(out_dir)
}

/// The fixed linear estimator used by the unbiasedness study: a seeded,
/// well-conditioned map `W = w_diag·I + w_noise·G/√(2N)`.
pub fn fixed_linear_estimator(n2: usize, w_diag: f64, w_noise: f64, seed: u64) -> Mat {
    let mut rng = stream_rng(seed, STREAM_ESTIMATOR);
    let scale = w_noise / (n2 as f64).sqrt();
    let mut w = Mat::from_fn(n2, n2, |_, _| {
        scale * standard_normal(&mut rng)
    });
    for i in 0..n2 {
        let v = w.get(i, i) + w_diag;
        w.set(i, i, v);
    }
    w
}

/// Exact `Tr(P·W)` by summing basis-vector quadratic forms.
pub fn trace_projected(w: &Mat, a: &Mat) -> f64 {
    let n2 = a.cols;
    let mut tr = 0.0;
    for i in 0..n2 {
        let mut e = vec![0.0; n2];
        e[i] = 1.0;
        let we = w.matvec(&e);
        let pwe = a.matvec_t(&a.matvec(&we));
        tr += pwe[i];
    }
    tr
}

/// Analytic expected projected error of the linear estimator `g(u) = Wu`:
/// mean term `‖P·W·ū − P·h‖²` plus noise term `(σ²/2)·Σᵢⱼ Mᵢⱼ²·cⱼ` with
/// `M = P·W·AᵀC⁻¹` and `ū = AᵀC⁻¹·A·h`.
pub fn analytic_projected_error(
    a: &Mat,
    c_diag: &[f64],
    sigma2: f64,
    h: &[f64],
    w: &Mat,
) -> f64 {
    let n2 = a.cols;
    let m2 = a.rows;
    let at = a.transpose();
    let p = at.matmul(a);
    let pw = p.matmul(w);
    // ū = AᵀC⁻¹Ah.
    let ah = a.matvec(h);
    let wah: Vec<f64> = ah.iter().zip(c_diag).map(|(v, c)| v / c).collect();
    let u_bar = a.matvec_t(&wah);
    let mean_diff = linalg::sub(&pw.matvec(&u_bar), &p.matvec(h));
    let mean_term = linalg::nrm2_sq(&mean_diff);
    // M = P·W·AᵀC⁻¹ (n2 × m2).
    let pwat = pw.matmul(&at);
    let mut noise_term = 0.0;
    for i in 0..n2 {
        for j in 0..m2 {
            let mij = pwat.get(i, j) / c_diag[j];
            noise_term += mij * mij * c_diag[j];
        }
    }
    mean_term + 0.5 * sigma2 * noise_term
}

fn run_unbiasedness(cfg: &mut ConfigMap, ov: &Overrides, out_dir: &Path) -> Result<()> {
    let seed = resolve_seed(cfg, ov)?;
    let snr = resolve_snr_grid(cfg, ov, "evaluate", "snr_db", &[10.0])?;
    if snr.len() != 1 {
        return Err(cfg_err("the unbiasedness study uses a single SNR point"));
    }
    let spec = ProblemSpec::from_config(cfg)?;
    let draws: usize = cfg.get_or("evaluate", "draws", 100_000)?;
    let w_diag: f64 = cfg.get_or("evaluate", "w_diag", 0.5)?;
    let w_noise: f64 = cfg.get_or("evaluate", "w_noise", 0.1)?;
    let mut manifest = Manifest::new("evaluate", seed, cfg.canonical_text());
    cfg.finish()?;
    if draws == 0 {
        return Err(cfg_err("[evaluate] draws must be positive"));
    }

    let a = build_measurement(
        &MeasurementConfig {
            n_half: spec.n2 / 2,
            m_half: spec.m2 / 2,
            kind: spec.kind,
        },
        &mut stream_rng(seed, STREAM_MATRIX),
    )?;
    let inst = spec.instance(seed, 0)?;
    let c_diag = vec![1.0; spec.m2];
    let sigma2 = sigma2_for_snr(&a, &c_diag, &inst.h, snr[0])?;
    let w = fixed_linear_estimator(spec.n2, w_diag, w_noise, seed);
    let exact_trace = trace_projected(&w, &a);
    let analytic = analytic_projected_error(&a, &c_diag, sigma2, &inst.h, &w);

    let ah = a.matvec(&inst.h);
    let mut rng = stream_rng(seed, STREAM_NOISE_BASE);
    let mut acc = 0.0;
    for _ in 0..draws {
        let mut y = ah.clone();
        for (yi, ci) in y.iter_mut().zip(&c_diag) {
            let z = standard_normal(&mut rng);
            *yi += (0.5 * sigma2 * ci).sqrt() * z;
        }
        let problem = StandardProblem::new_unchecked(a.clone(), c_diag.clone(), sigma2, y)?;
        let u = deqcs::sensing::sufficient_statistic(&problem.a, &problem.c_diag, &problem.y)?;
        let estimate = w.matvec(&u);
        acc += gsure_value(&estimate, exact_trace, &problem, true)?;
    }
    let mc_mean = acc / draws as f64;
    let rel_err = (mc_mean - analytic).abs() / analytic;

    let mut csv = Csv::new(&[
        "snr_db",
        "draws",
        "mc_mean",
        "analytic_pmse",
        "rel_err",
    ]);
    csv.row(&[
        fmt_plain(snr[0]),
        draws.to_string(),
        fmt_e(mc_mean),
        fmt_e(analytic),
        fmt_e(rel_err),
    ]);
    let csv_path = out_dir.join("gsure_unbiasedness.csv");
    csv.write(&csv_path)?;
    manifest.add_output(&csv_path)?;
    manifest.write(out_dir)
}
