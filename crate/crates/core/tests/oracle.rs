use fermitraj::fock::*;
use fermitraj::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_state(l: usize, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = DMatrix::from_fn(l, l / 2, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    state::orthonormalize(u).unwrap()
}

#[test]
fn gaussian_and_exact_observables_agree() {
    for l in [4, 6, 8] {
        for seed in 0..4 {
            let g = random_state(l, 10 * l as u64 + seed);
            let f = fock_from_gaussian(&g).unwrap();
            let d = g.correlation_matrix();
            assert!(correlation_mismatch(&d, &f) < 1e-8);
            for start in 0..l {
                for len in 1..l {
                    let region = Region::contiguous(start, len, l).unwrap();
                    let a = entanglement_entropy(&d, &region).unwrap();
                    assert!((a - fock_entropy(&f, &region).unwrap()).abs() < 1e-8);
                }
            }
            let a = Region::prefix(l / 2, l).unwrap();
            for r in l / 2..l {
                let mi = mutual_information(&d, &a, r).unwrap().value;
                assert!((mi - fock_mutual_information(&f, &a, r).unwrap()).abs() < 1e-8);
                assert!(mi >= -1e-9);
            }
        }
    }
}

#[test]
fn born_probabilities_match_occupations() {
    for seed in 0..20 {
        let g = random_state(8, 500 + seed);
        let f = fock_from_gaussian(&g).unwrap();
        for (site, n) in g.occupations().into_iter().enumerate() {
            let (_, p) = fock_measure(&f, site, Outcome::Occupied).unwrap();
            assert!((p - n).abs() < 1e-10);
        }
    }
}

#[test]
fn lockstep_trajectories_agree() {
    let run = OracleRun::new(6, 1.0, 200);
    let reports = [
        oracle_check_qj(&run, &mut ChaCha8Rng::seed_from_u64(1)).unwrap(),
        oracle_check_pm(&run, &mut ChaCha8Rng::seed_from_u64(2)).unwrap(),
        oracle_check_qsd(&run, 0.05, Propagator::Exact, &mut ChaCha8Rng::seed_from_u64(3)).unwrap(),
    ];
    for r in reports {
        assert_eq!(r.events, 200);
        assert!(r.passed(1e-8), "{r:?}");
    }
    // RK4 with frozen generator carries its own truncation error, amplified by the
    // noise term; it stays well below the scale of any reported statistic
    let rk4 = oracle_check_qsd(&run, 0.05, Propagator::Rk4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert!(rk4.max_correlation_diff < 1e-3 && rk4.max_entropy_diff < 1e-3, "{rk4:?}");
    let mut slow = run;
    slow.restoration = Restoration::Correlation;
    assert!(oracle_check_pm(&slow, &mut ChaCha8Rng::seed_from_u64(4)).unwrap().passed(1e-8));
}

#[test]
fn oracle_rejects_large_lattices() {
    let run = OracleRun::new(12, 1.0, 1);
    assert!(matches!(
        oracle_check_qj(&run, &mut ChaCha8Rng::seed_from_u64(0)),
        Err(Error::OracleTooLarge(12))
    ));
}
