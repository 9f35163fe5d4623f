//! NMSE-versus-SNR sweep over estimation methods.
//!
//! For every SNR point and method, runs `trials` paired problem instances
//! (same channels across SNR points, fresh noise per point) and reports the
//! mean NMSE in dB. Output: `nmse_sweep.csv` (+ `nmse_sweep.svg`), one row
//! per (snr, method).

use std::path::Path;

use deqcs::model::nmse;

use crate::config::ConfigMap;
use crate::csvout::{fmt_e, fmt_plain, Csv};
use crate::error::Result;
use crate::manifest::Manifest;
use crate::svg::{write_chart, Series};

use super::common::{
    check_kind, deq_from_config, load_models_for, methods_from_config, ratio_to_db, resolve_seed,
    resolve_snr_grid, run_method, BaselineSettings, Method, Models, ProblemSpec,
};
use super::common::Overrides;

/// One (snr, method) table cell.
pub struct SweepRow {
    pub snr_db: f64,
    pub method: Method,
    pub nmse_db: f64,
    pub trials: usize,
    pub unconverged: usize,
}

/// Core sweep loop, shared with `evaluate`.
pub fn run_grid(
    spec: &ProblemSpec,
    seed: u64,
    snr_grid: &[f64],
    trials: usize,
    methods: &[Method],
    models: &Models,
    bl: &BaselineSettings,
    deq: &deqcs::deq::DeqConfig,
) -> Result<Vec<SweepRow>> {
    let a = spec.build_matrix(seed)?;
    let mut rows = Vec::new();
    for (snr_idx, &snr_db) in snr_grid.iter().enumerate() {
        let setup = spec.setup(a.clone(), snr_db)?;
        let mut sums = vec![0.0f64; methods.len()];
        let mut unconverged = vec![0usize; methods.len()];
        for trial in 0..trials {
            let inst = spec.instance(seed, trial as u64)?;
            let problem = spec.stamp(&setup, &inst.h, seed, snr_idx, trials, trial)?;
            for (mi, &method) in methods.iter().enumerate() {
                let (h_hat, converged) = run_method(method, models, bl, deq, &problem)?;
                sums[mi] += nmse(&h_hat, &inst.h)?;
                if !converged {
                    unconverged[mi] += 1;
                }
            }
        }
        for (mi, &method) in methods.iter().enumerate() {
            rows.push(SweepRow {
                snr_db,
                method,
                nmse_db: ratio_to_db(sums[mi] / trials as f64),
                trials,
                unconverged: unconverged[mi],
            });
        }
    }
    Ok(rows)
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Csv {
    let mut csv = Csv::new(&["snr_db", "method", "nmse_db", "trials", "unconverged"]);
    for r in rows {
        csv.row(&[
            fmt_plain(r.snr_db),
            r.method.as_str().to_string(),
            fmt_e(r.nmse_db),
            r.trials.to_string(),
            r.unconverged.to_string(),
        ]);
    }
    csv
}

pub fn rows_to_series(rows: &[SweepRow], methods: &[Method]) -> Vec<Series> {
    methods
        .iter()
        .map(|&m| Series {
            name: m.as_str().to_string(),
            points: rows
                .iter()
                .filter(|r| r.method == m)
                .map(|r| (r.snr_db, r.nmse_db))
                .collect(),
        })
        .collect()
}

pub fn run(cfg: &mut ConfigMap, ov: &Overrides, out_dir: &Path) -> Result<()> {
    check_kind(cfg, &["nmse_sweep"])?;
    let seed = resolve_seed(cfg, ov)?;
    let snr_grid = resolve_snr_grid(
        cfg,
        ov,
        "sweep",
        "snr_grid_db",
        &[0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
    )?;
    let trials: usize = cfg.get_or("sweep", "trials", 200)?;
    let methods = methods_from_config(cfg, "sweep", "omp,ista,amp")?;
    let spec = ProblemSpec::from_config(cfg)?;
    let bl = BaselineSettings::from_config(cfg, &spec)?;
    let deq = deq_from_config(cfg)?;
    let mut manifest = Manifest::new("sweep", seed, String::new());
    let models = load_models_for(cfg, "sweep", &methods, &mut manifest)?;
    manifest.config_text = cfg.canonical_text();
    cfg.finish()?;
    if trials == 0 {
        return Err(crate::error::cfg_err("[sweep] trials must be positive"));
    }

    let rows = run_grid(&spec, seed, &snr_grid, trials, &methods, &models, &bl, &deq)?;

    let csv_path = out_dir.join("nmse_sweep.csv");
    rows_to_csv(&rows).write(&csv_path)?;
    manifest.add_output(&csv_path)?;

    let svg_path = out_dir.join("nmse_sweep.svg");
    write_chart(
        &svg_path,
        "Mean NMSE vs SNR",
        "SNR (dB)",
        "NMSE (dB)",
        &rows_to_series(&rows, &methods),
    )?;
    manifest.add_output(&svg_path)?;
    manifest.write(out_dir)
}
