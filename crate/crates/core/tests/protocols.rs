use fermitraj::fock::{fock_correlation, fock_from_gaussian, fock_measure};
use fermitraj::linalg::max_abs;
use fermitraj::protocol::pm::{pm_outcome, pm_sample_site, pm_waiting_time};
use fermitraj::protocol::qj::{jump_probabilities, qj_waiting_time, select_site};
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

fn ring(l: usize) -> Ham {
    hopping_matrix(HamiltonianSpec::unit(l).unwrap()).unwrap()
}

/// `z`-score of an observed binomial count.
fn binomial_z(hits: usize, trials: usize, p: f64) -> f64 {
    let mean = trials as f64 * p;
    let sd = (trials as f64 * p * (1.0 - p)).sqrt();
    (hits as f64 - mean) / sd
}

#[test]
fn waiting_time_examples() {
    assert_eq!(qj_waiting_time(1.0, 1.0, 2).unwrap(), 0.0);
    assert!((qj_waiting_time((-1.0f64).exp(), 1.0, 2).unwrap() - 0.5).abs() < 1e-15);
    assert!(qj_waiting_time(0.0, 1.0, 2).is_err());
    assert_eq!(pm_waiting_time(1.0, 1.0, 4).unwrap(), 0.0);
    assert!((pm_waiting_time((-2.0f64).exp(), 1.0, 4).unwrap() - 0.5).abs() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 1_000_000;
    let mean: f64 = (0..n)
        .map(|_| qj_waiting_time(1.0 - rng.random::<f64>(), 1.0, 2).unwrap())
        .sum::<f64>()
        / n as f64;
    assert!((mean - 0.5).abs() < 0.5 * 0.003, "{mean}");
    let mean: f64 = (0..n)
        .map(|_| pm_waiting_time(1.0 - rng.random::<f64>(), 1.0, 4).unwrap())
        .sum::<f64>()
        / n as f64;
    assert!((mean - 0.25).abs() < 0.25 * 0.003, "{mean}");
}

#[test]
fn jump_site_frequencies_follow_probabilities() {
    let p = jump_probabilities(&[0.9, 0.1, 0.6, 0.4], 2).unwrap();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1_000_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[select_site(&p, rng.random::<f64>())] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        assert!(binomial_z(c, n, p[k]).abs() < 3.0, "site {k}: {c}");
    }
}

#[test]
fn projective_sampling_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 1_000_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[pm_sample_site(4, &mut rng)] += 1;
    }
    assert!(counts.iter().all(|&c| binomial_z(c, n, 0.25).abs() < 3.0));
    let ones = (0..n)
        .filter(|_| pm_outcome(0.5, rng.random::<f64>()) == Outcome::Occupied)
        .count();
    assert!(binomial_z(ones, n, 0.5).abs() < 3.0);
    assert!((0..1000).all(|_| pm_outcome(1.0, rng.random::<f64>()) == Outcome::Occupied));
    assert!((0..1000).all(|_| pm_outcome(0.0, 1e-300 + rng.random::<f64>()) == Outcome::Empty));
}

#[test]
fn measurement_updates_match_exact_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..1000u64 {
        let g = random_state(6, 1000 + case);
        let f = fock_from_gaussian(&g).unwrap();
        let site = rng.random_range(0..6);
        let outcome = if rng.random::<bool>() { Outcome::Occupied } else { Outcome::Empty };
        let (fm, p) = fock_measure(&f, site, outcome).unwrap();
        let d = g.correlation_matrix();
        let born = match outcome {
            Outcome::Occupied => d.occupation(site),
            Outcome::Empty => 1.0 - d.occupation(site),
        };
        assert!((p - born).abs() < 1e-10);
        let updated = apply_projection(&d, site, outcome).unwrap();
        assert!(max_abs(&(updated.matrix() - fock_correlation(&fm))) < 1e-8, "case {case}");
        assert!((updated.trace() - 3.0).abs() < 1e-8);
        assert!(updated.projector_defect() < 1e-8);
        let expected = if outcome == Outcome::Occupied { 1.0 } else { 0.0 };
        assert_eq!(updated.occupation(site), expected);
    }
}

#[test]
fn jump_and_projection_examples() {
    let neel = neel_state::<f64>(4).unwrap().correlation_matrix();
    assert_eq!(apply_jump(&neel, 0).unwrap(), neel);
    assert_eq!(apply_projection(&neel, 1, Outcome::Empty).unwrap(), neel);
    assert!(apply_jump(&neel, 1).is_err());
    assert!(apply_projection(&neel, 0, Outcome::Empty).is_err());
    let pair = CorrelationMatrix::from_matrix(DMatrix::from_element(2, 2, Complex64::new(0.5, 0.0))).unwrap();
    let one = apply_jump(&pair, 0).unwrap();
    let zero = apply_projection(&pair, 0, Outcome::Empty).unwrap();
    let diag = |a: f64, b: f64| DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::new(a, 0.0),
        Complex64::new(b, 0.0),
    ]));
    assert!(max_abs(&(one.matrix() - diag(1.0, 0.0))) < 1e-15);
    assert!(max_abs(&(zero.matrix() - diag(0.0, 1.0))) < 1e-15);
}

fn qj_params(l: usize, gamma: f64) -> Params {
    let mut p = Params::new(l, gamma);
    p.t_final = 4.0;
    p.window = (1.0, 4.0);
    p
}

#[test]
fn fixed_seed_gives_identical_streams() {
    let h = ring(16);
    let p = qj_params(16, 1.0);
    let a = run_qj_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let b = run_qj_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(a.events, b.events);
    assert_eq!(a.ee, b.ee);
    let a = run_pm_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let b = run_pm_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(a.events, b.events);
    let a = run_qsd_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let b = run_qsd_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(a.steps, b.steps);
    assert_eq!(a.ee, b.ee);
}

#[test]
fn every_update_keeps_the_invariants() {
    let h = ring(16);
    let mut p = qj_params(16, 2.0);
    p.full_audit = true;
    let qj = run_qj_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let pm = run_pm_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let qsd = run_qsd_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    for audit in [qj.audit, pm.audit, qsd.audit] {
        assert!(audit.updates > 20);
        assert_eq!(audit.violations, 0, "{audit:?}");
        assert!(audit.max_orthonormality <= 1e-10);
        assert!(audit.max_projector <= 1e-8);
        assert!(audit.max_trace <= 1e-8);
    }
    for e in &qj.events {
        assert!(e.tau >= 0.0);
        assert!((-1e-9..=1.0 + 1e-9).contains(&e.n_before));
    }
}

#[test]
fn projective_entropy_bookkeeping_telescopes() {
    let h = ring(12);
    let mut p = qj_params(12, 1.0);
    p.record_all = true;
    let out = run_pm_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
    let total: f64 = out
        .events
        .iter()
        .map(|e| e.ds_meas.unwrap() + e.ds_unitary.unwrap())
        .sum();
    let s0 = neel_state::<f64>(12).unwrap().entropy(&p.region()).unwrap();
    let s1 = out.state.entropy(&p.region()).unwrap();
    assert!((total - (s1 - s0)).abs() < 1e-9);
}

#[test]
fn qsd_noise_has_the_stated_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (gamma, dt) = (0.7, 0.05);
    let mut sum = 0.0;
    let mut sq = 0.0;
    let mut count = 0usize;
    for _ in 0..10_000 {
        let step = QsdStepParams::sample(gamma, dt, 16, &mut rng).unwrap();
        for w in step.noise {
            sum += w;
            sq += w * w;
            count += 1;
        }
    }
    let mean = sum / count as f64;
    let var = sq / count as f64 - mean * mean;
    assert!((var / (gamma * dt) - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn qsd_rates_telescope_with_monitoring() {
    let h = ring(12);
    let mut p = qj_params(12, 1.0);
    p.window = (0.0, 4.0);
    let out = run_qsd_trajectory(&p, &h, &mut ChaCha8Rng::seed_from_u64(13)).unwrap();
    let (s_start, s_end) = out.window_entropy[0].unwrap();
    let total: f64 = out.steps.iter().map(|r| r.ds_rate * p.dt).sum();
    assert!((total - (s_end - s_start)).abs() < 1e-9);
    assert!(out.steps.iter().all(|r| r.ds_rate.is_finite()));
    assert!(s_start.abs() < 1e-9);
}
