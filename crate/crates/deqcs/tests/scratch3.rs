//! THROWAWAY diagnostic: gradient quality of the unsupervised loss at scale.
use deqcs::deq::DeqConfig;
use deqcs::train::ProblemSetup;
use deqcs::nn::{self, NleParams};
use deqcs::sensing::{build_measurement, MatrixKind, MeasurementConfig};
use deqcs::channel::{gen_sparse, AmpDist};
use deqcs::train::{gsure_loss_and_grad, GsureConfig, Sample};
use deqcs::util::stream_rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
fn nrm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn build_batch(n2: usize, m2: usize, k: usize, snr_db: f64, nb: usize, seed: u64) -> Vec<Sample> {
    let mut rng = stream_rng(seed, 0);
    let a = build_measurement(
        &MeasurementConfig {
            n_half: n2 / 2,
            m_half: m2 / 2,
            kind: MatrixKind::SubsampledDct,
        },
        &mut rng,
    )
    .unwrap();
    let setup = ProblemSetup::new(a, vec![1.0; m2], snr_db).unwrap();
    let mut out = Vec::new();
    for t in 0..nb {
        let mut crng = stream_rng(seed, 100 + t as u64);
        let inst = gen_sparse(n2, k, AmpDist::Gaussian, &mut crng).unwrap();
        let mut nrng = stream_rng(seed, 10_000 + t as u64);
        let problem = setup.stamp(&inst.h, &mut nrng).unwrap();
        out.push(Sample {
            problem,
            truth: Some(inst.h.clone()),
        });
    }
    out
}

#[test]
#[ignore]
fn probe_gsure_gradient_quality() {
    let n2 = 128usize;
    let m2 = 64usize;
    let snr_db = 20.0;
    let batch = build_batch(n2, m2, 3, snr_db, 8, 42);
    let deq_cfg = DeqConfig::default();
    let gsure_cfg = GsureConfig::default();

    let mut model = match std::env::var("CKPT") {
        Ok(path) => deqcs::train::load_checkpoint(std::path::Path::new(&path)).unwrap().0,
        Err(_) => {
            let mut init_rng = stream_rng(9, 1);
            nn::init_default(n2, deq_cfg.lip_target, &mut init_rng).unwrap()
        }
    };
    nn::spectral_normalize(&mut model, n2, 50).unwrap();
    let theta0 = model.get_params();
    let np = theta0.len();

    let probe_seed = 777u64;
    let loss_at = |theta: &[f64], sigma2_zero: bool| -> f64 {
        let mut m = model.clone();
        m.set_params(theta).unwrap();
        let samples: Vec<Sample> = if sigma2_zero {
            batch
                .iter()
                .map(|s| {
                    let mut p = s.problem.clone();
                    p.sigma2 = 0.0;
                    Sample {
                        problem: p,
                        truth: s.truth.clone(),
                    }
                })
                .collect()
        } else {
            batch.clone()
        };
        let mut rng = ChaCha12Rng::seed_from_u64(probe_seed);
        let (loss, _, _) =
            gsure_loss_and_grad(&m, &samples, &gsure_cfg, &deq_cfg, &mut rng, false).unwrap();
        loss
    };

    // Full gradient and quad-only gradient (σ² = 0 kills the divergence term).
    let mut rng = ChaCha12Rng::seed_from_u64(probe_seed);
    let (loss_full, g_full, _) =
        gsure_loss_and_grad(&model, &batch, &gsure_cfg, &deq_cfg, &mut rng, true).unwrap();
    let batch0: Vec<Sample> = batch
        .iter()
        .map(|s| {
            let mut p = s.problem.clone();
            p.sigma2 = 0.0;
            Sample {
                problem: p,
                truth: s.truth.clone(),
            }
        })
        .collect();
    let mut rng = ChaCha12Rng::seed_from_u64(probe_seed);
    let (_, g_quad, _) =
        gsure_loss_and_grad(&model, &batch0, &gsure_cfg, &deq_cfg, &mut rng, true).unwrap();
    let g_div: Vec<f64> = g_full.iter().zip(&g_quad).map(|(f, q)| f - q).collect();
    println!(
        "loss {:.6}  |g_full| {:.4e}  |g_quad| {:.4e}  |g_div(sigma2-scaled)| {:.4e}",
        loss_full,
        nrm(&g_full),
        nrm(&g_quad),
        nrm(&g_div)
    );

    // Directional finite differences of the frozen-probe loss.
    let mut dir_rng = ChaCha12Rng::seed_from_u64(5);
    for trial in 0..6 {
        let mut d: Vec<f64> = (0..np)
            .map(|_| deqcs::util::standard_normal(&mut dir_rng))
            .collect();
        let dn = nrm(&d);
        for x in d.iter_mut() {
            *x /= dn;
        }
        let pred_full = dot(&g_full, &d);
        let pred_quad = dot(&g_quad, &d);
        for eps in [1e-4f64, 1e-5] {
            let tp: Vec<f64> = theta0.iter().zip(&d).map(|(t, x)| t + eps * x).collect();
            let tm: Vec<f64> = theta0.iter().zip(&d).map(|(t, x)| t - eps * x).collect();
            let fd_full = (loss_at(&tp, false) - loss_at(&tm, false)) / (2.0 * eps);
            let fd_quad = (loss_at(&tp, true) - loss_at(&tm, true)) / (2.0 * eps);
            println!(
                "dir {trial} eps {eps:.0e}:  full pred {pred_full:+.5e} fd {fd_full:+.5e}   quad pred {pred_quad:+.5e} fd {fd_quad:+.5e}"
            );
        }
    }

    // Step-to-step spike census for the divergence part across 20 probe seeds.
    let mut div_norms = Vec::new();
    for s in 0..20u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(1000 + s);
        let (_, gf, _) =
            gsure_loss_and_grad(&model, &batch, &gsure_cfg, &deq_cfg, &mut rng, true).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1000 + s);
        let (_, gq, _) =
            gsure_loss_and_grad(&model, &batch0, &gsure_cfg, &deq_cfg, &mut rng, true).unwrap();
        let gd: Vec<f64> = gf.iter().zip(&gq).map(|(f, q)| f - q).collect();
        div_norms.push(nrm(&gd));
    }
    div_norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!(
        "div-part |g| over 20 probe seeds: min {:.3e} med {:.3e} max {:.3e}",
        div_norms[0], div_norms[10], div_norms[19]
    );
}
