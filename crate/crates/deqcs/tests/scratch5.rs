//! THROWAWAY diagnostic: per-sample divergence-probe noise anatomy.
use deqcs::channel::{gen_sparse, AmpDist};
use deqcs::deq::{self, DeqConfig};
use deqcs::linalg;
use deqcs::sensing::{build_measurement, MatrixKind, MeasurementConfig};
use deqcs::train::{load_checkpoint, ProblemSetup};
use deqcs::util::stream_rng;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[test]
#[ignore]
fn probe_divergence_noise() {
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
    let deq = DeqConfig::default();
    let fd_step_rel = 1e-3;

    for (name, path) in [
        ("supervised(E4)", "/tmp/smoke/E4_out/checkpoint_final.bin"),
        ("gsure(E5)", "/tmp/smoke/E5_out/checkpoint_final.bin"),
    ] {
        let (model, _) = load_checkpoint(std::path::Path::new(path)).unwrap();
        println!("--- {name} ---");
        for t in 0..5u64 {
            let inst = gen_sparse(n2, 3, AmpDist::Gaussian, &mut stream_rng(7, 500 + t)).unwrap();
            let problem = setup.stamp(&inst.h, &mut stream_rng(8, 500 + t)).unwrap();
            let base = deq::forward_fixed_point(&model, &problem, &deq, None).unwrap();
            let h_star = &base.h_star;
            let unorm = linalg::nrm2(&problem.u);
            let eps = fd_step_rel * unorm / (n2 as f64).sqrt();
            let mut zrng = ChaCha12Rng::seed_from_u64(31337 + t);
            let mut divs = Vec::new();
            let mut probe_iters = Vec::new();
            let mut diff_norms = Vec::new();
            for _ in 0..20 {
                let z: Vec<f64> = (0..n2)
                    .map(|_| if zrng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                let u_pert: Vec<f64> = problem
                    .u
                    .iter()
                    .zip(&z)
                    .map(|(ui, zi)| ui + eps * zi)
                    .collect();
                let pert =
                    deq::forward_fixed_point_with_u(&model, &problem, &deq, &u_pert, Some(h_star))
                        .unwrap();
                let pz = problem.project(&z);
                let mut dir = 0.0;
                for ((s, b), p) in pert.h_star.iter().zip(h_star).zip(&pz) {
                    dir += (s - b) * p;
                }
                divs.push(dir / eps);
                probe_iters.push(pert.iterations);
                diff_norms.push(linalg::nrm2(&linalg::sub(&pert.h_star, h_star)));
            }
            let mean = divs.iter().sum::<f64>() / divs.len() as f64;
            let sd = (divs.iter().map(|d| (d - mean).powi(2)).sum::<f64>()
                / (divs.len() - 1) as f64)
                .sqrt();
            let diff_med = {
                let mut d = diff_norms.clone();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                d[d.len() / 2]
            };
            println!(
                "sample {t}: base iters {} conv {} | div mean {:+.3} sd {:.3} | probe iters med {} | ‖diff‖ med {:.3e} (eps·√n2 = {:.3e}) | sigma2 {:.3e}",
                base.iterations,
                base.converged,
                mean,
                sd,
                {
                    let mut p = probe_iters.clone();
                    p.sort_unstable();
                    p[p.len() / 2]
                },
                diff_med,
                eps * (n2 as f64).sqrt(),
                problem.sigma2
            );
        }
    }
}
