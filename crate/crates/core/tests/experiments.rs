use dbs_uplink::experiments::*;
use dbs_uplink::scenario::ScenarioConfig;
use dbs_uplink::solver::Algorithm;

fn quick_ensemble() -> Ensemble {
    Ensemble::from_config(&ScenarioConfig {
        grid_sites: 9,
        ..Default::default()
    })
    .unwrap()
}

fn read_rows(path: &std::path::Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER.to_vec());
    r.records().map(Result::unwrap).collect()
}

#[test]
fn empty_series_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    let series = ExperimentSeries {
        sweep_var: SweepVar::UeCount,
        points: vec![],
        seeds: vec![],
    };
    emit_csv(&series, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().trim(), CSV_HEADER.join(","));
}

#[test]
fn workload_sweep_rows_round_trip() {
    let e = quick_ensemble();
    let counts: Vec<usize> = (100..=170).step_by(10).collect();
    let algos = [Algorithm::AaBud, Algorithm::HdDbs, Algorithm::SMbs];
    let series = workload_sweep(&e, &counts, 160.0, &algos, &[0, 1]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    emit_csv(&series, &path).unwrap();
    let rows = read_rows(&path);
    assert_eq!(rows.len(), 24);
    let mut k = 0;
    for p in &series.points {
        for s in &p.stats {
            let r = &rows[k];
            assert_eq!(&r[0], "ue_count");
            assert_eq!(r[1].parse::<f64>().unwrap(), p.x);
            assert_eq!(&r[2], s.algorithm.name());
            assert_eq!(r[3].parse::<f64>().unwrap().to_bits(), s.mean_throughput_bps.to_bits());
            assert_eq!(r[4].parse::<f64>().unwrap().to_bits(), s.std_throughput_bps.to_bits());
            assert_eq!(r[5].parse::<f64>().unwrap().to_bits(), s.mean_block_ratio.to_bits());
            assert_eq!(r[6].parse::<usize>().unwrap(), 2);
            k += 1;
        }
    }
}

#[test]
fn demand_is_conserved_and_ratios_bounded() {
    let e = quick_ensemble();
    let series = workload_sweep(&e, &[100, 170], 160.0, &[Algorithm::AaBud, Algorithm::SMbs], &[3, 4, 5]).unwrap();
    for p in &series.points {
        for s in &p.stats {
            assert_eq!(s.n_seeds, 3);
            assert!((0.0..=1.0).contains(&s.mean_block_ratio));
            let sum = s.mean_served_demand_bps + s.mean_blocked_demand_bps;
            assert!((sum - s.mean_total_demand_bps).abs() <= 1e-6 * s.mean_total_demand_bps);
            assert_eq!(s.mean_served_demand_bps, s.mean_throughput_bps);
        }
    }
}

#[test]
fn nested_workloads_share_ues() {
    let e = quick_ensemble();
    let small = e.scenario(7, 100).unwrap();
    let large = e.scenario(7, 170).unwrap();
    assert_eq!(small.ues[..], large.ues[..100]);
}

#[test]
fn single_point_series() {
    let e = quick_ensemble();
    let s = altitude_sweep(&e, &[160.0], &[Algorithm::AaBud], &[0]).unwrap();
    assert_eq!(s.points.len(), 1);
    assert_eq!(s.points[0].stats.len(), 1);
    assert_eq!(s.points[0].stats[0].std_throughput_bps, 0.0);
}

#[test]
fn output_is_identical_for_any_worker_count() {
    let run = |threads: usize| {
        let e = quick_ensemble();
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| altitude_sweep(&e, &[100.0, 200.0, 300.0], &[Algorithm::AaBud, Algorithm::HdDbs], &[0, 1, 2]).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    emit_csv(&a, dir.path().join("a.csv")).unwrap();
    emit_csv(&b, dir.path().join("b.csv")).unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("a.csv")).unwrap(),
        std::fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn run_experiments_creates_directory_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/out");
    let config = ExperimentConfig {
        base: ScenarioConfig {
            grid_sites: 4,
            ..Default::default()
        },
        seeds: SeedRange { start: 0, count: 1 },
        altitude_sweep: Some(AltitudeSweepConfig::default()),
        workload_sweep: Some(WorkloadSweepConfig::default()),
        ..Default::default()
    };
    let written = run_experiments(&config, &out).unwrap();
    assert_eq!(written, vec![out.join("altitude_sweep.csv"), out.join("workload_sweep.csv")]);
    assert_eq!(read_rows(&written[0]).len(), 11 * 2);
    assert_eq!(read_rows(&written[1]).len(), 8 * 3);
    assert!(run_experiments(&ExperimentConfig::default(), &out).is_err());
}

#[test]
fn config_file_with_scenario_reference() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = ScenarioConfig {
        grid_sites: 4,
        ..Default::default()
    }
    .build(0)
    .unwrap();
    dbs_uplink::save_scenario(&scenario, dir.path().join("world.json")).unwrap();
    std::fs::write(
        dir.path().join("exp.json"),
        r#"{"scenario": "world.json", "seeds": {"start": 3, "count": 1}, "workload_sweep": {"ue_counts": [100]}}"#,
    )
    .unwrap();
    let config = ExperimentConfig::load(dir.path().join("exp.json")).unwrap();
    assert_eq!(config.scenario.as_deref(), Some(dir.path().join("world.json").as_path()));
    let e = config.ensemble().unwrap();
    assert_eq!(e.template.grid, scenario.grid);
    let written = run_experiments(&config, dir.path()).unwrap();
    assert_eq!(read_rows(&written[0]).len(), 3);

    std::fs::write(dir.path().join("typo.json"), r#"{"seeds": {"start": "x", "count": 1}}"#).unwrap();
    let err = ExperimentConfig::load(dir.path().join("typo.json")).unwrap_err().to_string();
    assert!(err.contains("seeds.start"), "{err}");
}
