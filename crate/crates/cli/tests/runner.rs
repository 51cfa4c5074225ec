use fermitraj::{hopping_matrix, HamiltonianSpec};
use fermitraj_cli::output::summary_json;
use fermitraj_cli::{build_summary, run_ensemble, run_trajectory, Protocol, RunConfig};

fn config(protocol: Protocol, size: usize, gamma: f64, trajectories: u64) -> RunConfig {
    let mut c = RunConfig::new(protocol, size, gamma).unwrap();
    c.trajectories = trajectories;
    c.seed = 5;
    c
}

#[test]
fn any_trajectory_replays_alone() {
    for protocol in [Protocol::Qsd, Protocol::Qj, Protocol::Pm] {
        let c = config(protocol, 12, 0.8, 4);
        let ensemble = run_ensemble(&c, Some(2)).unwrap();
        let ham = hopping_matrix(HamiltonianSpec::new(12, 1.0).unwrap()).unwrap();
        let alone = run_trajectory(&c, &c.params(), &ham, 2);
        assert_eq!(alone, ensemble.outputs[2]);
        assert_eq!(ensemble.outputs[2].record.traj, 2);
    }
}

#[test]
fn single_trajectory_parallel_equals_serial() {
    let c = config(Protocol::Qj, 16, 1.0, 1);
    let a = run_ensemble(&c, Some(1)).unwrap();
    let b = run_ensemble(&c, Some(4)).unwrap();
    assert_eq!(
        summary_json(&build_summary(&c, &a.outputs)),
        summary_json(&build_summary(&c, &b.outputs))
    );
}

#[test]
fn summary_order_does_not_matter() {
    let c = config(Protocol::Pm, 12, 1.0, 6);
    let mut outputs = run_ensemble(&c, None).unwrap().outputs;
    let forward = summary_json(&build_summary(&c, &outputs));
    outputs.reverse();
    assert_eq!(forward, summary_json(&build_summary(&c, &outputs)));
}

#[test]
fn statistics_name_their_sample_counts() {
    let mut c = config(Protocol::Qj, 16, 1.0, 12);
    c.snapshot_stride = 10;
    let s = build_summary(&c, &run_ensemble(&c, None).unwrap().outputs);
    let v = serde_json::to_value(&s).unwrap();
    for (name, h) in v["histograms"].as_object().unwrap() {
        assert!(h["samples"].is_u64(), "{name}");
        assert!(h["moments"]["samples"].is_u64(), "{name}");
    }
    for (name, m) in v["density_maps"].as_object().unwrap() {
        assert!(m["samples"].is_u64(), "{name}");
    }
    assert!(v["balance"]["events"].is_u64());
    assert!(v["measurements"]["samples"].is_u64());
    assert!(v["mutual_information"]["snapshots"].is_u64());
    assert!(v["entropy"]["window_samples"].is_u64());
    for p in v["mutual_information"]["profile"].as_array().unwrap() {
        assert!(p["samples"].is_u64());
    }
}

#[test]
fn qj_counters_and_groups() {
    let c = config(Protocol::Qj, 64, 1.0, 3);
    let s = build_summary(&c, &run_ensemble(&c, None).unwrap().outputs);
    assert!(s.valid);
    assert_eq!(s.trajectories.failed, 0);
    assert_eq!(s.counters.audit.violations, 0);
    let m = s.measurements.as_ref().unwrap();
    assert_eq!(m.groups.len(), 4);
    assert_eq!(m.groups[3].sites, vec![15, 47]);
    assert_eq!(m.samples as usize, s.histograms["dS_meas"].samples as usize);
    assert_eq!(m.positive + m.negative + m.zero, m.samples);
    let group_total: u64 = ["group1", "group2", "group3"]
        .iter()
        .map(|g| s.histograms[&format!("dS_meas/{g}")].samples)
        .sum();
    assert!(group_total <= m.samples);
}

#[test]
fn qsd_smoke_run_has_clean_invariants() {
    let c = config(Protocol::Qsd, 64, 0.1, 100);
    let s = build_summary(&c, &run_ensemble(&c, None).unwrap().outputs);
    assert!(s.valid);
    assert_eq!(s.trajectories.completed, 100);
    assert_eq!(s.counters.audit.violations, 0);
    assert_eq!(s.counters.short_segments, 0);
    assert!(s.counters.audit.max_trace < 1e-8);
    assert!(s.histograms.contains_key("dS_rate"));
    assert!(s.entropy.as_ref().unwrap().saturation.is_some());
}
