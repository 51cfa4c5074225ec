//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so every line is printed under a plain
//! `cargo test`. A substring argument (e.g. `c04`) runs matching criteria only.

use std::time::Instant;

use fermitraj::protocol::qsd::QsdStepParams;
use fermitraj::{hopping_matrix, neel_state, qsd_step, HamiltonianSpec, Propagator, Region};
use fermitraj_cli::commands::{merge, oracle_suite, run};
use fermitraj_cli::output::summary_json;
use fermitraj_cli::{Protocol, RunConfig, RunOptions, Summary};
use fermitraj_stats::{default_edges, fit_decay, fit_distribution, ks_statistic, DecayModel, DistributionModel, Histogram};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn config(protocol: Protocol, size: usize, gamma: f64, trajectories: u64, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(protocol, size, gamma).expect("valid config");
    c.trajectories = trajectories;
    c.seed = seed;
    c
}

fn execute(c: &RunConfig) -> Summary {
    let (summary, _) = run(c, &RunOptions::default()).expect("run succeeds");
    assert!(summary.valid, "too many failed trajectories");
    summary
}

/// Window `dS_rate` samples of a QSD run.
fn qsd_rates(c: &RunConfig) -> (Summary, Vec<f64>) {
    let (summary, outputs) = run(c, &RunOptions::default()).expect("run succeeds");
    let rates = outputs
        .iter()
        .flat_map(|o| o.events.iter())
        .filter(|e| e.in_window)
        .filter_map(|e| e.ds_rate)
        .collect();
    (summary, rates)
}

fn c01_oracle() -> Verdict {
    let start = Instant::now();
    let rows = oracle_suite(6, 1.0, 200, 0.05, 11, 1e-8).expect("oracle runs");
    let secs = start.elapsed().as_secs_f64();
    let worst_d = rows.iter().map(|r| r.report.max_correlation_diff).fold(0.0, f64::max);
    let worst_s = rows.iter().map(|r| r.report.max_entropy_diff).fold(0.0, f64::max);
    let events: usize = rows.iter().map(|r| r.report.events).sum();
    verdict(
        rows.iter().all(|r| r.passed && r.report.events >= 200) && secs < 30.0,
        format!("L=6, {events} events over qj/pm/qsd: max|dD|={worst_d:.2e}, max|dS|={worst_s:.2e}, {secs:.1} s"),
    )
}

fn c02_soak() -> Verdict {
    let start = Instant::now();
    let mut c = config(Protocol::Qsd, 64, 1.0, 1, 21);
    c.t_final = 500.0;
    c.window = [499.0, 500.0];
    c.ee_stride = 0;
    c.full_audit = true;
    let s = execute(&c);
    let a = s.counters.audit;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        a.updates >= 10_000
            && a.max_orthonormality <= 1e-10
            && a.max_projector <= 1e-8
            && a.max_trace <= 1e-8
            && a.violations == 0
            && secs < 120.0,
        format!(
            "{} steps: orthonormality {:.1e}, projector {:.1e}, trace {:.1e}, {} violations, {secs:.1} s",
            a.updates, a.max_orthonormality, a.max_projector, a.max_trace, a.violations
        ),
    )
}

fn c03_unitarity() -> Verdict {
    let start = Instant::now();
    let l = 64;
    let h = hopping_matrix(HamiltonianSpec::<f64>::unit(l).unwrap()).unwrap();
    let step = QsdStepParams::new(0.0, 0.05, vec![0.0; l]).unwrap();
    let mut state = neel_state::<f64>(l).unwrap();
    let e0 = state.energy(&h);
    let mut drift: f64 = 0.0;
    let mut asym: f64 = 0.0;
    for k in 1..=10_000 {
        state = qsd_step(&state, &h, &step, Propagator::Rk4).unwrap();
        drift = drift.max((state.energy(&h) - e0).abs());
        if k % 100 == 0 {
            for ell in [1, l / 4, l / 2] {
                let a = state.entropy(&Region::prefix(ell, l).unwrap()).unwrap();
                let b = state.entropy(&Region::prefix(l - ell, l).unwrap()).unwrap();
                asym = asym.max((a - b).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        drift < 1e-8 && asym < 1e-8 && secs < 60.0,
        format!("L=64, 10^4 RK4 steps: energy drift {drift:.2e}, max|S(l)-S(L-l)| {asym:.2e}, {secs:.1} s"),
    )
}

fn gaussianity_run() -> (Summary, Vec<f64>, f64) {
    let start = Instant::now();
    let mut c = config(Protocol::Qsd, 64, 0.1, 100, 41);
    c.qsd_cuts = 8;
    let (s, rates) = qsd_rates(&c);
    (s, rates, start.elapsed().as_secs_f64())
}

fn c04_gaussianity(s: &Summary, secs: f64) -> Verdict {
    let Some(g) = s.gaussianity else {
        return verdict(false, format!("no gaussianity block: {:?}", s.unavailable));
    };
    verdict(
        g.samples >= 100_000
            && g.skewness.abs() < 0.1
            && g.excess_kurtosis.abs() < 0.5
            && g.gaussian_adequate
            && secs < 600.0,
        format!(
            "{} samples: skewness {:.3}, excess kurtosis {:.3}, residual gaussian {:.4} vs interp {:.4} (improvement {:.1}% < {:.0}%), {secs:.1} s",
            g.samples,
            g.skewness,
            g.excess_kurtosis,
            g.gaussian_residual,
            g.gauss_exp_interp_residual,
            100.0 * g.relative_improvement,
            100.0 * g.threshold
        ),
    )
}

fn c05_size_independence(small: &[f64]) -> Verdict {
    let start = Instant::now();
    let mut c = config(Protocol::Qsd, 128, 0.1, 25, 51);
    c.qsd_cuts = 16;
    let (_, large) = qsd_rates(&c);
    let d = ks_statistic(small, &large);
    verdict(
        small.len() >= 100_000 && large.len() >= 100_000 && d < 0.02,
        format!(
            "KS(L=64: {}, L=128: {}) = {d:.4}, {:.1} s",
            small.len(),
            large.len(),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn c06_zeno() -> Verdict {
    let s = execute(&config(Protocol::Qj, 64, 3.0, 20, 61));
    let m = s.measurements.as_ref().expect("measurement block");
    let bulk = m.groups.last().expect("bulk group");
    verdict(
        m.samples >= 10_000 && bulk.small_fraction > 0.99,
        format!(
            "{} window events, {} at sites {:?} (0-based): |dS|<1e-6 fraction {:.4}",
            m.samples, bulk.samples, bulk.sites, bulk.small_fraction
        ),
    )
}

fn c07_envelope(s: &Summary) -> Verdict {
    let m = s.measurements.as_ref().expect("measurement block");
    let e = m.envelope.expect("qj envelope");
    verdict(
        e.samples >= 10_000 && e.fraction < 0.005,
        format!("{} events, {} below envelope: fraction {:.2e}", e.samples, e.violations, e.fraction),
    )
}

fn c08_balance(runs: &[(&str, f64, &Summary)]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, gamma, s) in runs {
        match &s.balance {
            Some(b) => {
                let r = b.balance.residual.value;
                let se = b.balance.combined_std_error;
                ok &= r.abs() <= 3.0 * se && s.trajectories.completed >= 200;
                parts.push(format!(
                    "{name} g={gamma}: {:.4} + {:.4} = {r:.4} ({:.2} se)",
                    b.balance.mean_between_rate.value, b.balance.meas_rate.value, b.z
                ));
            }
            None => {
                ok = false;
                parts.push(format!("{name} g={gamma}: no balance"));
            }
        }
    }
    verdict(ok, parts.join("; "))
}

fn c09_mutual_information() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (gamma, expected) in [(3.0, "exponential"), (0.1, "power_law")] {
        let mut c = config(Protocol::Qj, 128, gamma, 8, 91);
        c.snapshot_stride = 20;
        c.ee_stride = 0;
        let s = execute(&c);
        let mi = s.mutual_information.as_ref().expect("mutual information block");
        let res = |k: &str| mi.fits.get(k).and_then(|f| f.ok()).map_or(f64::NAN, |f| f.residual);
        let (p, e) = (res("power_law"), res("exponential"));
        let good = mi.snapshots >= 100 && mi.preferred.as_deref() == Some(expected);
        ok &= good;
        parts.push(format!(
            "g={gamma}: {} snapshots, residual power {p:.3} vs exp {e:.3} -> {}",
            mi.snapshots,
            mi.preferred.as_deref().unwrap_or("none")
        ));
    }
    verdict(ok, parts.join("; "))
}

fn c10_saturation() -> Verdict {
    let mut c = config(Protocol::Qsd, 64, 1.5, 40, 101);
    c.ee_stride = 2;
    let s = execute(&c);
    let e = s.entropy.as_ref().expect("entropy block");
    let Some(slope) = e.window_slope else {
        return verdict(false, format!("no slope: {:?}", s.unavailable));
    };
    verdict(
        slope.value.abs() <= 2.0 * slope.std_error,
        format!(
            "{} trajectories, slope {:.2e} +- {:.2e} per unit time ({:.2} sigma), window mean S {:.3}",
            e.trajectories,
            slope.value,
            slope.std_error,
            slope.value / slope.std_error,
            e.window_mean
        ),
    )
}

fn c11_positive_events() -> Verdict {
    let s = execute(&config(Protocol::Qj, 64, 0.1, 20, 111));
    let m = s.measurements.as_ref().expect("measurement block");
    let p0 = m.exceedance.iter().find(|x| x.level == 0.0).expect("level 0");
    let p3 = m.exceedance.iter().find(|x| x.level == 1e-3).expect("level 1e-3");
    verdict(
        m.positive > 0 && m.negative > 0,
        format!(
            "{} events: {} positive, {} negative; P(dS>0) = {:.4}, P(dS>1e-3) = {:.4}, max {:.3}",
            m.samples, m.positive, m.negative, p0.probability, p3.probability, m.max
        ),
    )
}

fn c12_determinism() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut ok = true;
    let mut parts = Vec::new();
    for protocol in [Protocol::Qsd, Protocol::Qj, Protocol::Pm] {
        let mut c = config(protocol, 16, 1.0, 12, 121);
        c.snapshot_stride = 10;
        let one = |c: &RunConfig, threads, name: &str| {
            let out = dir.path().join(format!("{}-{name}", protocol.name()));
            let opts = RunOptions {
                out: Some(out.clone()),
                threads: Some(threads),
            };
            let (s, _) = run(c, &opts).expect("run succeeds");
            (summary_json(&s), out, s)
        };
        let (a, _, whole) = one(&c, 1, "a");
        let (b, _, _) = one(&c, 3, "b");
        let mut first = c.clone();
        first.trajectories = 5;
        let mut second = c.clone();
        second.first_trajectory = 5;
        second.trajectories = 7;
        let (_, d1, _) = one(&first, 1, "p1");
        let (_, d2, _) = one(&second, 2, "p2");
        let merged = merge(&[d1, d2], Some(&dir.path().join(format!("{}-m", protocol.name())))).expect("merge");
        let counts_equal = whole.histograms.len() == merged.histograms.len()
            && whole.histograms.iter().all(|(k, h)| {
                merged
                    .histograms
                    .get(k)
                    .is_some_and(|m| m.histogram.counts() == h.histogram.counts() && m.samples == h.samples)
            });
        let identical = summary_json(&merged) == a;
        ok &= a == b && counts_equal && identical;
        parts.push(format!(
            "{}: rerun identical {}, split/merge counts equal {} ({} histograms), merged summary identical {}",
            protocol.name(),
            a == b,
            counts_equal,
            whole.histograms.len(),
            identical
        ));
    }
    verdict(ok, parts.join("; "))
}

fn c13_fit_recovery() -> Verdict {
    let (mu, sigma) = (0.3, 1.7);
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(131);
    let normal = Normal::new(mu, sigma).unwrap();
    let samples: Vec<f64> = (0..1_000_000).map(|_| normal.sample(&mut rng)).collect();
    let mut h = Histogram::new(default_edges(&samples, false).unwrap()).unwrap();
    h.extend(samples.iter().copied());
    let g = fit_distribution(&h, DistributionModel::Gaussian).unwrap();
    let mu_err = (g.param("mu") - mu).abs() / sigma;
    let sigma_err = (g.param("sigma") - sigma).abs() / sigma;
    let d: Vec<f64> = (1..=30).map(f64::from).collect();
    let pl: Vec<(f64, f64)> = d.iter().map(|&x| (x, 2.5 * x.powf(-1.7))).collect();
    let ex: Vec<(f64, f64)> = d.iter().map(|&x| (x, 0.8 * (-x / 3.2).exp())).collect();
    let p = fit_decay(&pl, DecayModel::PowerLaw).unwrap();
    let e = fit_decay(&ex, DecayModel::Exponential).unwrap();
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let decay_err = rel(p.param("exponent"), -1.7)
        .max(rel(p.param("amplitude"), 2.5))
        .max(rel(e.param("length"), 3.2))
        .max(rel(e.param("amplitude"), 0.8));
    verdict(
        mu_err < 0.01 && sigma_err < 0.01 && decay_err < 1e-6,
        format!("gaussian: mu error {mu_err:.1e} sigma, sigma error {sigma_err:.1e}; decays: max relative error {decay_err:.1e}"),
    )
}

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let wanted = |id: &str| filter.as_deref().is_none_or(|f| id.contains(f));
    let mut results: Vec<(&str, Verdict, f64)> = Vec::new();
    let mut check = |id: &'static str, f: &mut dyn FnMut() -> Verdict| {
        if wanted(id) {
            let start = Instant::now();
            let v = f();
            let secs = start.elapsed().as_secs_f64();
            println!(
                "{} {id} ({secs:.1} s): {}",
                if v.passed { "PASS" } else { "FAIL" },
                v.detail
            );
            results.push((id, v, secs));
        }
    };
    println!("acceptance criteria");
    check("c01-oracle", &mut c01_oracle);
    check("c02-invariant-soak", &mut c02_soak);
    check("c03-unitarity", &mut c03_unitarity);
    if wanted("c04-gaussianity") || wanted("c05-size-independence") {
        let (s, rates, secs) = gaussianity_run();
        check("c04-gaussianity", &mut || c04_gaussianity(&s, secs));
        check("c05-size-independence", &mut || c05_size_independence(&rates));
    }
    check("c06-zeno", &mut c06_zeno);
    if wanted("c07-envelope") || wanted("c08-balance") {
        let qj05 = execute(&config(Protocol::Qj, 64, 0.5, 200, 81));
        let qj15 = execute(&config(Protocol::Qj, 64, 1.5, 200, 82));
        let pm05 = execute(&config(Protocol::Pm, 64, 0.5, 200, 83));
        let pm15 = execute(&config(Protocol::Pm, 64, 1.5, 200, 84));
        check("c07-envelope", &mut || c07_envelope(&qj15));
        check("c08-balance", &mut || {
            c08_balance(&[("qj", 0.5, &qj05), ("qj", 1.5, &qj15), ("pm", 0.5, &pm05), ("pm", 1.5, &pm15)])
        });
    }
    check("c09-mutual-information", &mut c09_mutual_information);
    check("c10-saturation", &mut c10_saturation);
    check("c11-positive-events", &mut c11_positive_events);
    check("c12-determinism", &mut c12_determinism);
    check("c13-fit-recovery", &mut c13_fit_recovery);
    let failed: Vec<&str> = results.iter().filter(|r| !r.1.passed).map(|r| r.0).collect();
    println!(
        "{} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
