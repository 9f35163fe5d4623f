//! Operating-constant study.
//!
//! Per SNR point: the mean relative projected error of the unsupervised
//! model (β̂), the mean relative error of the supervised model (ω̂), and
//! the 99th-percentile noise-to-signal ratio (ξ̂). When a pair of
//! bias-ablation checkpoints is configured, also reports their NMSE delta.
//! Output: `assumptions.csv` (+ `assumptions.svg`).

use std::path::{Path, PathBuf};

use deqcs::deq::forward_fixed_point;
use deqcs::model::nmse;
use deqcs::nn::NleParams;
use deqcs::theory::{estimate_beta, estimate_omega, estimate_xi};
use deqcs::train::load_checkpoint;
use deqcs::util::stream_rng;

use crate::config::ConfigMap;
use crate::csvout::{fmt_e, fmt_plain, Csv};
use crate::error::{cfg_err, Result};
use crate::manifest::Manifest;
use crate::svg::{write_chart, Series};

use super::common::{
    check_kind, deq_from_config, load_models_for, ratio_to_db, resolve_seed, resolve_snr_grid,
    Method, Overrides, ProblemSpec, STREAM_XI,
};

fn load_optional_model(
    cfg: &mut ConfigMap,
    key: &str,
    manifest: &mut Manifest,
) -> Result<Option<NleParams>> {
    match cfg.get_str("assumptions", key) {
        None => Ok(None),
        Some(p) => {
            let path = PathBuf::from(p);
            let (model, _) = load_checkpoint(&path)
                .map_err(|e| cfg_err(format!("cannot load {}: {e}", path.display())))?;
            manifest.add_input(&path)?;
            Ok(Some(model))
        }
    }
}

pub fn run(cfg: &mut ConfigMap, ov: &Overrides, out_dir: &Path) -> Result<()> {
    check_kind(cfg, &["assumptions"])?;
    let seed = resolve_seed(cfg, ov)?;
    let snr_grid = resolve_snr_grid(
        cfg,
        ov,
        "assumptions",
        "snr_grid_db",
        &[0.0, 10.0, 20.0, 30.0],
    )?;
    let trials: usize = cfg.get_or("assumptions", "trials", 200)?;
    let xi_draws: usize = cfg.get_or("assumptions", "xi_draws", 1000)?;
    let spec = ProblemSpec::from_config(cfg)?;
    let deq = deq_from_config(cfg)?;
    let mut manifest = Manifest::new("assumptions", seed, String::new());
    let models = load_models_for(
        cfg,
        "assumptions",
        &[Method::DeqGsure, Method::DeqNmse],
        &mut manifest,
    )?;
    let bias_on = load_optional_model(cfg, "checkpoint_bias_on", &mut manifest)?;
    let bias_off = load_optional_model(cfg, "checkpoint_bias_off", &mut manifest)?;
    if bias_on.is_some() != bias_off.is_some() {
        return Err(cfg_err(
            "bias ablation needs both [assumptions] checkpoint_bias_on and checkpoint_bias_off",
        ));
    }
    manifest.config_text = cfg.canonical_text();
    cfg.finish()?;
    if trials == 0 || xi_draws == 0 {
        return Err(cfg_err("[assumptions] trials and xi_draws must be positive"));
    }
    let g_model = models.gsure.expect("required by load_models_for");
    let o_model = models.nmse.expect("required by load_models_for");

    let a = spec.build_matrix(seed)?;
    let with_bias = bias_on.is_some();
    let mut header = vec!["snr_db", "beta_mean", "omega_mean", "xi_p99", "trials"];
    if with_bias {
        header.extend_from_slice(&["bias_on_nmse_db", "bias_off_nmse_db", "bias_delta_db"]);
    }
    let mut csv = Csv::new(&header);
    let mut beta_pts = Vec::new();
    let mut omega_pts = Vec::new();

    for (snr_idx, &snr_db) in snr_grid.iter().enumerate() {
        let setup = spec.setup(a.clone(), snr_db)?;
        let mut beta_sum = 0.0;
        let mut omega_sum = 0.0;
        let mut xi_hat = 0.0;
        let mut on_sum = 0.0;
        let mut off_sum = 0.0;
        for trial in 0..trials {
            let inst = spec.instance(seed, trial as u64)?;
            let problem = spec.stamp(&setup, &inst.h, seed, snr_idx, trials, trial)?;
            let h_g = forward_fixed_point(&g_model, &problem, &deq, None)?.h_star;
            let h_o = forward_fixed_point(&o_model, &problem, &deq, None)?.h_star;
            beta_sum += estimate_beta(&h_g, &inst.h, &problem)?;
            omega_sum += estimate_omega(&h_o, &inst.h)?;
            if trial == 0 {
                xi_hat = estimate_xi(
                    &problem,
                    &inst.h,
                    xi_draws,
                    &mut stream_rng(seed, STREAM_XI),
                )?;
            }
            if let (Some(on), Some(off)) = (&bias_on, &bias_off) {
                let h_on = forward_fixed_point(on, &problem, &deq, None)?.h_star;
                let h_off = forward_fixed_point(off, &problem, &deq, None)?.h_star;
                on_sum += nmse(&h_on, &inst.h)?;
                off_sum += nmse(&h_off, &inst.h)?;
            }
        }
        let beta_mean = beta_sum / trials as f64;
        let omega_mean = omega_sum / trials as f64;
        let mut row = vec![
            fmt_plain(snr_db),
            fmt_e(beta_mean),
            fmt_e(omega_mean),
            fmt_e(xi_hat),
            trials.to_string(),
        ];
        if with_bias {
            let on_db = ratio_to_db(on_sum / trials as f64);
            let off_db = ratio_to_db(off_sum / trials as f64);
            row.push(fmt_e(on_db));
            row.push(fmt_e(off_db));
            row.push(fmt_e(off_db - on_db));
        }
        csv.row(&row);
        beta_pts.push((snr_db, beta_mean));
        omega_pts.push((snr_db, omega_mean));
    }

    let csv_path = out_dir.join("assumptions.csv");
    csv.write(&csv_path)?;
    manifest.add_output(&csv_path)?;
    let svg_path = out_dir.join("assumptions.svg");
    write_chart(
        &svg_path,
        "Operating constants vs SNR",
        "SNR (dB)",
        "mean relative error",
        &[
            Series {
                name: "beta (projected, unsupervised)".into(),
                points: beta_pts,
            },
            Series {
                name: "omega (supervised)".into(),
                points: omega_pts,
            },
        ],
    )?;
    manifest.add_output(&svg_path)?;
    manifest.write(out_dir)
}
