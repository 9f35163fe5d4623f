use deqcs::channel::{gen_sparse, AmpDist};
use deqcs::deq::DeqConfig;
use deqcs::sensing::{build_measurement, MatrixKind, MeasurementConfig};
use deqcs::train::{
    evaluate_gsure, evaluate_nmse, load_checkpoint, GsureConfig, ProblemSetup, Sample,
};
use deqcs::util::stream_rng;

#[test]
#[ignore]
fn probe_checkpoint_quality() {
    let n2 = 128;
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
    let mut samples = Vec::new();
    for t in 0..100u64 {
        let inst = gen_sparse(n2, 3, AmpDist::Gaussian, &mut stream_rng(7, 1000 + t)).unwrap();
        let problem = setup.stamp(&inst.h, &mut stream_rng(8, 1000 + t)).unwrap();
        samples.push(Sample {
            problem,
            truth: Some(inst.h),
        });
    }
    let deq = DeqConfig::default();
    let gc = GsureConfig {
        probes: 16,
        ..GsureConfig::default()
    };
    for (name, path) in [
        ("supervised(E4)", "/tmp/smoke/E4_out/checkpoint_final.bin"),
        ("gsure(E5)", "/tmp/smoke/E5_out/checkpoint_final.bin"),
    ] {
        let (model, _) = load_checkpoint(std::path::Path::new(path)).unwrap();
        let stats = evaluate_nmse(&model, &samples, &deq).unwrap();
        let mut rng = stream_rng(9, 5);
        let g = evaluate_gsure(&model, &samples, &gc, &deq, &mut rng).unwrap();
        println!(
            "{name}: NMSE {:.2} dB, gsure loss {:.6}, unconverged {}",
            10.0 * stats.nmse().log10(),
            g,
            stats.unconverged
        );
    }
}
