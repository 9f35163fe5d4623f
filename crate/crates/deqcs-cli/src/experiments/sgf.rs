//! Sparse-growth-function curve tables.
//!
//! For each κ on the grid: the brute-force lower bound over the extremal
//! family, the numeric supremum, and the closed form. Rows are sorted by κ.

use std::path::Path;

use deqcs::theory::{sgf_bound_numeric, sgf_brute_force, sgf_closed_form, SgfBruteGrid};

use crate::config::ConfigMap;
use crate::csvout::{fmt_e, Csv};
use crate::error::{cfg_err, Result};
use crate::manifest::Manifest;
use crate::svg::{write_chart, Series};

use super::common::{check_kind, resolve_seed, Overrides};

pub fn run(cfg: &mut ConfigMap, ov: &Overrides, out_dir: &Path) -> Result<()> {
    check_kind(cfg, &["sgf_curves"])?;
    let seed = resolve_seed(cfg, ov)?;
    let n2: usize = cfg.get_or("sgf", "n2", 64)?;
    let mut kappas: Vec<usize> =
        cfg.get_list_or("sgf", "kappa_grid", &[1, 2, 4, 8, 16, 32])?;
    let grid = SgfBruteGrid {
        rho_points: cfg.get_or("sgf", "brute_rho_points", 512)?,
        lambda_points: cfg.get_or("sgf", "brute_lambda_points", 64)?,
    };
    let manifest_cfg = cfg.canonical_text();
    cfg.finish()?;
    kappas.sort_unstable();
    kappas.dedup();
    for &k in &kappas {
        if k == 0 || k > n2 {
            return Err(cfg_err(format!(
                "[sgf] kappa_grid entry {k} outside [1, {n2}]"
            )));
        }
    }

    let mut csv = Csv::new(&["kappa", "brute", "g_numeric", "g_closed"]);
    let mut brute_pts = Vec::new();
    let mut num_pts = Vec::new();
    let mut closed_pts = Vec::new();
    for &kappa in &kappas {
        let brute = sgf_brute_force(kappa, n2, &grid)?;
        let g_num = sgf_bound_numeric(kappa, n2)?;
        let g_closed = sgf_closed_form(kappa, n2)?;
        csv.row(&[
            kappa.to_string(),
            fmt_e(brute),
            fmt_e(g_num),
            fmt_e(g_closed),
        ]);
        brute_pts.push((kappa as f64, brute));
        num_pts.push((kappa as f64, g_num));
        closed_pts.push((kappa as f64, g_closed));
    }

    let csv_path = out_dir.join("sgf_curves.csv");
    csv.write(&csv_path)?;
    let svg_path = out_dir.join("sgf_curves.svg");
    write_chart(
        &svg_path,
        "Sparse growth function",
        "kappa",
        "worst-case tail energy fraction",
        &[
            Series {
                name: "brute force".into(),
                points: brute_pts,
            },
            Series {
                name: "numeric bound".into(),
                points: num_pts,
            },
            Series {
                name: "closed form".into(),
                points: closed_pts,
            },
        ],
    )?;

    let mut manifest = Manifest::new("sgf", seed, manifest_cfg);
    manifest.add_output(&csv_path)?;
    manifest.add_output(&svg_path)?;
    manifest.write(out_dir)
}
