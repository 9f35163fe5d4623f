//! Model training runs.
//!
//! Trains the equilibrium network on streamed synthetic channels (or a
//! generated dataset file) with the configured loss, writing checkpoints,
//! a per-epoch `metrics.csv`, and the manifest.

use std::path::Path;

use deqcs::channel::load_dataset;
use deqcs::nn::init_default;
use deqcs::train::{train, DataSource, GsureConfig, LossMode, TrainConfig};
use deqcs::util::stream_rng;

use crate::config::ConfigMap;
use crate::error::{cfg_err, Result};
use crate::manifest::Manifest;

use super::common::{
    check_kind, deq_from_config, resolve_seed, resolve_snr_grid, Overrides, ProblemSpec,
    STREAM_MODEL_INIT,
};

pub fn run(cfg: &mut ConfigMap, ov: &Overrides, out_dir: &Path) -> Result<()> {
    check_kind(cfg, &["train"])?;
    let seed = resolve_seed(cfg, ov)?;
    let snr = resolve_snr_grid(cfg, ov, "problem", "snr_db", &[20.0])?;
    if snr.len() != 1 {
        return Err(cfg_err(
            "training uses a single SNR point; pass one value to --snr-db",
        ));
    }
    let spec = ProblemSpec::from_config(cfg)?;
    let deq = deq_from_config(cfg)?;

    let loss_mode = LossMode::parse(
        &cfg.get_str("train", "loss")
            .unwrap_or_else(|| "gsure".into()),
    )?;
    let train_cfg = TrainConfig {
        epochs: cfg.get_or("train", "epochs", 200)?,
        batch_size: cfg.get_or("train", "batch_size", 32)?,
        lr: cfg.get_or("train", "lr", 1e-3)?,
        lr_decay: (
            cfg.get_or("train", "lr_decay_factor", 0.5)?,
            cfg.get_or("train", "lr_decay_every", 60)?,
        ),
        loss_mode,
        seed,
        checkpoint_every: cfg.get_or("train", "checkpoint_every", 50)?,
        checkpoint_dir: Some(out_dir.to_path_buf()),
    };
    let gsure_cfg = GsureConfig {
        probes: cfg.get_or("train", "probes", 1)?,
        fd_step_rel: cfg.get_or("train", "fd_step_rel", 1e-3)?,
        include_constant: cfg.get_bool_or("train", "include_constant", true)?,
    };
    let steps_per_epoch: usize = cfg.get_or("train", "steps_per_epoch", 10)?;
    let dataset_path = cfg.get_str("train", "dataset");

    let mut manifest = Manifest::new("train", seed, String::new());
    let a = spec.build_matrix(seed)?;
    let setup = spec.setup(a, snr[0])?;
    let source = match &dataset_path {
        Some(p) => {
            let path = super::common::existing_path(p)?;
            let data = load_dataset(&path)
                .map_err(|e| cfg_err(format!("cannot load {}: {e}", path.display())))?;
            if data.n2 != spec.n2 {
                return Err(cfg_err(format!(
                    "dataset dimension {} != [problem] n2 = {}",
                    data.n2, spec.n2
                )));
            }
            manifest.add_input(&path)?;
            DataSource::Dataset { data, setup }
        }
        None => DataSource::Stream {
            setup,
            k: spec.k,
            amp: spec.amp,
            steps_per_epoch,
        },
    };
    manifest.config_text = cfg.canonical_text();
    cfg.finish()?;

    let model = init_default(
        spec.n2,
        deq.lip_target,
        &mut stream_rng(seed, STREAM_MODEL_INIT),
    )?;
    let (_, history) = train(model, &source, &train_cfg, &deq, &gsure_cfg)?;

    let metrics_path = out_dir.join("metrics.csv");
    deqcs::train::write_metrics_csv(&metrics_path, &history)?;
    manifest.add_output(&metrics_path)?;

    // Fingerprint every checkpoint the run produced.
    let mut names: Vec<String> = std::fs::read_dir(out_dir)
        .map_err(|e| cfg_err(format!("cannot list {}: {e}", out_dir.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("checkpoint_") && n.ends_with(".bin"))
        .collect();
    names.sort();
    for name in names {
        manifest.add_output(&out_dir.join(name))?;
    }
    manifest.write(out_dir)
}
