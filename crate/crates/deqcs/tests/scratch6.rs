//! THROWAWAY diagnostic: does the exact-norm renormalization block descent
//! at the unsupervised-training plateau?
use deqcs::channel::{gen_sparse, AmpDist};
use deqcs::deq::DeqConfig;
use deqcs::nn;
use deqcs::sensing::{build_measurement, MatrixKind, MeasurementConfig};
use deqcs::train::{gsure_loss_and_grad, GsureConfig, ProblemSetup, Sample};
use deqcs::util::stream_rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn nrm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
#[ignore]
fn probe_projection_blocking() {
    let n2 = 128usize;
    let m2 = 64;
    let a = build_measurement(
        &MeasurementConfig {
            n_half: n2 / 2,
            m_half: m2 / 2,
            kind: MatrixKind::SubsampledDct,
        },
        &mut stream_rng(42, 0),
    )
    .unwrap();
    let setup = ProblemSetup::new(a, vec![1.0; m2], 20.0).unwrap();
    let mut batch = Vec::new();
    for t in 0..32u64 {
        let inst = gen_sparse(n2, 3, AmpDist::Gaussian, &mut stream_rng(7, 2000 + t)).unwrap();
        let problem = setup.stamp(&inst.h, &mut stream_rng(8, 2000 + t)).unwrap();
        batch.push(Sample {
            problem,
            truth: Some(inst.h),
        });
    }
    let deq = DeqConfig::default();
    let gc = GsureConfig::default();
    let (model, _) = deqcs::train::load_checkpoint(std::path::Path::new(
        "/tmp/smoke/E7_out/checkpoint_final.bin",
    ))
    .unwrap();
    let theta0 = model.get_params();

    let loss_of = |theta: &[f64], renormalize: bool| -> f64 {
        let mut m = model.clone();
        m.set_params(theta).unwrap();
        if renormalize {
            nn::spectral_normalize(&mut m, n2, 50).unwrap();
            m.clamp_thresholds();
        }
        let mut rng = ChaCha12Rng::seed_from_u64(4242);
        gsure_loss_and_grad(&m, &batch, &gc, &deq, &mut rng, false)
            .unwrap()
            .0
    };

    let mut rng = ChaCha12Rng::seed_from_u64(4242);
    let (l0, g, _) = gsure_loss_and_grad(&model, &batch, &gc, &deq, &mut rng, true).unwrap();
    let gn = nrm(&g);
    println!("plateau loss {l0:.5}, |g| {gn:.4}");
    // Which way does the raw step push each conv block's weight norm?
    // Param layout: conv(1,16,3)=48, shrink 16, conv(16,16,3)=768, shrink 16, conv(16,1,3)=48.
    let blocks = [(0usize, 48usize, "conv0"), (64, 768, "conv1"), (848, 48, "conv2")];
    for alpha in [1e-2f64] {
        let theta: Vec<f64> = theta0
            .iter()
            .zip(&g)
            .map(|(t, gi)| t - alpha * gi / gn)
            .collect();
        for (off, len, name) in blocks {
            let before = nrm(&theta0[off..off + len]);
            let after = nrm(&theta[off..off + len]);
            println!("  {name}: ‖w‖ {before:.5} -> {after:.5} ({:+.5})", after - before);
        }
    }
    for alpha in [1e-3, 3e-3, 1e-2, 3e-2, 1e-1] {
        let theta: Vec<f64> = theta0
            .iter()
            .zip(&g)
            .map(|(t, gi)| t - alpha * gi / gn)
            .collect();
        let raw = loss_of(&theta, false);
        let proj = loss_of(&theta, true);
        println!(
            "step {alpha:.0e}: raw {raw:.5} ({:+.5})  projected {proj:.5} ({:+.5})",
            raw - l0,
            proj - l0
        );
    }
}
