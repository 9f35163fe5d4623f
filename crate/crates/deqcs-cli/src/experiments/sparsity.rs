//! Output-sparsity trend study.
//!
//! Per SNR point: the mean ℓ₁/ℓ₂ sparsity measure of the unsupervised
//! equilibrium output, the supervised one, and the ground truth (whose row
//! is constant across SNR because channel instances are shared across the
//! grid). Output: `sparsity_check.csv` (+ `sparsity_check.svg`).

use std::path::Path;

use deqcs::deq::forward_fixed_point;
use deqcs::theory::l_half;

use crate::config::ConfigMap;
use crate::csvout::{fmt_e, fmt_plain, Csv};
use crate::error::{cfg_err, Result};
use crate::manifest::Manifest;
use crate::svg::{write_chart, Series};

use super::common::{
    check_kind, deq_from_config, load_models_for, resolve_seed, resolve_snr_grid, Method,
    Overrides, ProblemSpec,
};

pub fn run(cfg: &mut ConfigMap, ov: &Overrides, out_dir: &Path) -> Result<()> {
    check_kind(cfg, &["sparsity_check"])?;
    let seed = resolve_seed(cfg, ov)?;
    let snr_grid = resolve_snr_grid(
        cfg,
        ov,
        "sparsity",
        "snr_grid_db",
        &[0.0, 10.0, 20.0, 30.0],
    )?;
    let trials: usize = cfg.get_or("sparsity", "trials", 200)?;
    let spec = ProblemSpec::from_config(cfg)?;
    let deq = deq_from_config(cfg)?;
    let mut manifest = Manifest::new("sparsity", seed, String::new());
    let models = load_models_for(
        cfg,
        "sparsity",
        &[Method::DeqGsure, Method::DeqNmse],
        &mut manifest,
    )?;
    manifest.config_text = cfg.canonical_text();
    cfg.finish()?;
    if trials == 0 {
        return Err(cfg_err("[sparsity] trials must be positive"));
    }
    let g_model = models.gsure.expect("required by load_models_for");
    let o_model = models.nmse.expect("required by load_models_for");

    let a = spec.build_matrix(seed)?;
    let mut csv = Csv::new(&[
        "snr_db",
        "lhalf_gsure",
        "lhalf_ora",
        "lhalf_truth",
        "trials",
    ]);
    let mut g_pts = Vec::new();
    let mut o_pts = Vec::new();
    let mut t_pts = Vec::new();

    for (snr_idx, &snr_db) in snr_grid.iter().enumerate() {
        let setup = spec.setup(a.clone(), snr_db)?;
        let mut g_sum = 0.0;
        let mut o_sum = 0.0;
        let mut t_sum = 0.0;
        for trial in 0..trials {
            let inst = spec.instance(seed, trial as u64)?;
            let problem = spec.stamp(&setup, &inst.h, seed, snr_idx, trials, trial)?;
            let h_g = forward_fixed_point(&g_model, &problem, &deq, None)?.h_star;
            let h_o = forward_fixed_point(&o_model, &problem, &deq, None)?.h_star;
            // A collapsed (all-zero) output has no defined measure; count it
            // at the flat-vector ceiling rather than erroring the sweep.
            let ceil = (spec.n2 as f64).sqrt();
            g_sum += l_half(&h_g).unwrap_or(ceil);
            o_sum += l_half(&h_o).unwrap_or(ceil);
            t_sum += l_half(&inst.h)?;
        }
        let g_mean = g_sum / trials as f64;
        let o_mean = o_sum / trials as f64;
        let t_mean = t_sum / trials as f64;
        csv.row(&[
            fmt_plain(snr_db),
            fmt_e(g_mean),
            fmt_e(o_mean),
            fmt_e(t_mean),
            trials.to_string(),
        ]);
        g_pts.push((snr_db, g_mean));
        o_pts.push((snr_db, o_mean));
        t_pts.push((snr_db, t_mean));
    }

    let csv_path = out_dir.join("sparsity_check.csv");
    csv.write(&csv_path)?;
    manifest.add_output(&csv_path)?;
    let svg_path = out_dir.join("sparsity_check.svg");
    write_chart(
        &svg_path,
        "Output sparsity vs SNR",
        "SNR (dB)",
        "mean l1/l2",
        &[
            Series {
                name: "unsupervised equilibrium".into(),
                points: g_pts,
            },
            Series {
                name: "supervised equilibrium".into(),
                points: o_pts,
            },
            Series {
                name: "ground truth".into(),
                points: t_pts,
            },
        ],
    )?;
    manifest.add_output(&svg_path)?;
    manifest.write(out_dir)
}
