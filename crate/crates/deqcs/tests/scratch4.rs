//! THROWAWAY diagnostic: sweep saved checkpoints, compare NMSE and the
//! unsupervised risk at two solver budgets to expose cap-induced bias.
use deqcs::channel::{gen_sparse, AmpDist};
use deqcs::deq::DeqConfig;
use deqcs::sensing::{build_measurement, MatrixKind, MeasurementConfig};
use deqcs::train::{
    evaluate_gsure, evaluate_nmse, load_checkpoint, GsureConfig, ProblemSetup, Sample,
};
use deqcs::util::stream_rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[test]
#[ignore]
fn probe_checkpoint_sweep() {
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
    for t in 0..64u64 {
        let inst = gen_sparse(n2, 3, AmpDist::Gaussian, &mut stream_rng(7, 1000 + t)).unwrap();
        let problem = setup.stamp(&inst.h, &mut stream_rng(8, 1000 + t)).unwrap();
        samples.push(Sample {
            problem,
            truth: Some(inst.h),
        });
    }
    let deq100 = DeqConfig::default();
    let deq2000 = DeqConfig {
        max_iter: 2000,
        ..DeqConfig::default()
    };
    let gc = GsureConfig {
        probes: 64,
        ..GsureConfig::default()
    };
    let dir = std::path::Path::new("/tmp/smoke/E6_out");
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let n = e.unwrap().file_name().into_string().unwrap();
            (n.starts_with("checkpoint_") && n.ends_with(".bin")).then_some(n)
        })
        .collect();
    names.sort_by_key(|n| {
        n.trim_start_matches("checkpoint_epoch_")
            .trim_end_matches(".bin")
            .parse::<usize>()
            .unwrap_or(usize::MAX)
    });
    println!("name  nmse_db  mean_iters  gsure(cap100)  gsure(cap2000)");
    for n in names {
        let (model, _) = load_checkpoint(&dir.join(&n)).unwrap();
        let stats = evaluate_nmse(&model, &samples, &deq100).unwrap();
        let mut r1 = ChaCha12Rng::seed_from_u64(9001);
        let g100 = evaluate_gsure(&model, &samples, &gc, &deq100, &mut r1).unwrap();
        let mut r2 = ChaCha12Rng::seed_from_u64(9001);
        let g2000 = evaluate_gsure(&model, &samples, &gc, &deq2000, &mut r2).unwrap();
        println!(
            "{n}  {:+.2} dB  {:.1}  {:.5}  {:.5}",
            10.0 * stats.nmse().log10(),
            stats.mean_iters(),
            g100,
            g2000
        );
    }
}
