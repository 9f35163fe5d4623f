//! End-to-end theory report: sparsity-level bounds, growth value, and the
//! unsupervised-vs-supervised gap bound, from configured (or brute-forced)
//! constants. Output: `theory_report.txt` as flat `key=value` lines.

use std::path::Path;

use deqcs::linalg::Mat;
use deqcs::sensing::coherence;
use deqcs::theory::{rip_constant_bruteforce, theory_report, TheoryInputs};
use deqcs::deq::DeqConfig;

use crate::config::ConfigMap;
use crate::error::{cfg_err, Result};
use crate::manifest::Manifest;

use super::common::{check_kind, deq_from_config, resolve_seed, Overrides, ProblemSpec};

pub fn run(cfg: &mut ConfigMap, ov: &Overrides, out_dir: &Path) -> Result<()> {
    check_kind(cfg, &["theory"])?;
    let seed = resolve_seed(cfg, ov)?;
    let spec = ProblemSpec::from_config(cfg)?;
    let deq: DeqConfig = deq_from_config(cfg)?;

    let beta: f64 = cfg.get_or("theory", "beta", 0.1)?;
    let omega: f64 = cfg.get_or("theory", "omega", 0.05)?;
    let xi: f64 = cfg.get_or("theory", "xi", 0.1)?;
    // Output gain of the contractive equilibrium, unless overridden.
    let gamma: f64 = cfg.get_or("theory", "gamma", deq.gamma())?;
    let c_inv_norm: f64 = cfg.get_or("theory", "c_inv_norm", 1.0)?;
    let brute = cfg.get_bool_or("theory", "brute_force_rip", false)?;
    let mut delta_2k: f64 = cfg.get_or("theory", "delta_2k", 0.1)?;
    let mut delta_2: f64 = cfg.get_or("theory", "delta_2", 0.1)?;
    let delta_explicit: Option<f64> = cfg.get("theory", "delta")?;
    let manifest_cfg = cfg.canonical_text();
    cfg.finish()?;

    let a = spec.build_matrix(seed)?;
    let zeta = coherence(&a);
    if brute {
        // Exhaustive isometry constants of the scaled measurement matrix;
        // only feasible at small dimensions.
        let scale = (spec.n2 as f64 / spec.m2 as f64).sqrt();
        let scaled = Mat::from_fn(a.rows, a.cols, |r, c| scale * a.get(r, c));
        delta_2 = rip_constant_bruteforce(&scaled, 2)?;
        delta_2k = rip_constant_bruteforce(&scaled, 2 * spec.k)?;
    }
    let delta = delta_explicit.unwrap_or(delta_2k);

    let inputs = TheoryInputs {
        k: spec.k,
        n2: spec.n2,
        m2: spec.m2,
        beta,
        omega,
        xi,
        zeta,
        gamma,
        c_inv_norm,
        delta,
        delta_2k,
        delta_2,
    };
    let report = theory_report(&inputs)?;

    let mut text = String::new();
    for (k, v) in report.key_values() {
        text.push_str(&format!("{k}={v}\n"));
    }
    let path = out_dir.join("theory_report.txt");
    std::fs::write(&path, &text)
        .map_err(|e| cfg_err(format!("cannot write {}: {e}", path.display())))?;
    print!("{text}");

    let mut manifest = Manifest::new("theory", seed, manifest_cfg);
    manifest.add_output(&path)?;
    manifest.write(out_dir)
}
