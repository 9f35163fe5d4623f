//! Dataset generation: a file of synthetic sparse channels.

use std::path::Path;

use deqcs::channel::{save_dataset, Dataset};

use crate::config::ConfigMap;
use crate::error::{cfg_err, Result};
use crate::manifest::Manifest;

use super::common::{check_kind, resolve_seed, Overrides, ProblemSpec};

pub fn run(cfg: &mut ConfigMap, ov: &Overrides, out_dir: &Path) -> Result<()> {
    check_kind(cfg, &["generate"])?;
    let seed = resolve_seed(cfg, ov)?;
    let spec = ProblemSpec::from_config(cfg)?;
    let count: usize = cfg.get_or("generate", "count", 1000)?;
    let name = cfg
        .get_str("generate", "out_name")
        .unwrap_or_else(|| "dataset.bin".into());
    if count == 0 {
        return Err(cfg_err("[generate] count must be positive"));
    }
    if name.contains('/') || name.contains('\\') {
        return Err(cfg_err("[generate] out_name must be a bare file name"));
    }
    let mut manifest = Manifest::new("generate", seed, cfg.canonical_text());
    cfg.finish()?;

    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let mut inst = spec.instance(seed, i as u64)?;
        inst.seed = seed;
        samples.push(inst);
    }
    let ds = Dataset {
        n2: spec.n2,
        samples,
    };
    let path = out_dir.join(&name);
    save_dataset(&path, &ds)?;
    manifest.add_output(&path)?;
    manifest.write(out_dir)
}
