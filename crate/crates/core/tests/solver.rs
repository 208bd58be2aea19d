use dbs_uplink::allocation::min_bandwidth;
use dbs_uplink::channel::{Duplex, Point3};
use dbs_uplink::oracle::{exact_bud, micro_scenario, MicroConfig};
use dbs_uplink::scenario::{CandidateGrid, ScenarioConfig, UserEquipment};
use dbs_uplink::solver::*;
use dbs_uplink::{validate_assignment, SearchOptions};

fn small(seed: u64) -> dbs_uplink::Scenario {
    ScenarioConfig {
        ue_count: 120,
        grid_sites: 16,
        altitudes_m: vec![120.0, 160.0, 200.0],
        ..Default::default()
    }
    .build(seed)
    .unwrap()
}

#[test]
fn empty_fleet_reduces_to_macro_only() {
    for seed in 0..5 {
        let s = ScenarioConfig {
            drone_count: 0,
            ..Default::default()
        }
        .build(seed)
        .unwrap();
        let bud = aa_bud(&s).unwrap();
        let mbs = s_mbs(&s).unwrap();
        assert_eq!(bud.assignment, mbs);
        assert_eq!(bud.throughput_bps, mbs.total_throughput_bps);
        assert!(bud.positions.is_empty());
    }
}

#[test]
fn repeated_runs_are_identical() {
    let s = small(1);
    let a = aa_bud(&s).unwrap();
    let b = aa_bud(&s).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.throughput_bps.to_bits(), b.throughput_bps.to_bits());
    assert_eq!(hd_dbs(&s).unwrap(), hd_dbs(&s).unwrap());
}

#[test]
fn macro_only_serves_through_the_macro_and_blocks_out_of_reach_ues() {
    let mut s = small(2);
    let far = UserEquipment {
        id: s.ues.len() as u32,
        position: Point3::new(60_000.0, 60_000.0, 0.0),
        rate_demand_bps: 2e6,
    };
    s.ues.push(far);
    let a = s_mbs(&s).unwrap();
    assert!(a.links.iter().flatten().all(|l| l.station == 0));
    assert!(a.links.last().unwrap().is_none());
    validate_assignment(&s.without_drones(), &[], &a).unwrap();
}

#[test]
fn every_solver_output_validates() {
    for seed in 0..4 {
        let s = small(seed);
        let bud = aa_bud(&s).unwrap();
        validate_assignment(&s, &bud.positions, &bud.assignment).unwrap();
        let hd = hd_dbs(&s).unwrap();
        validate_assignment(&s.with_drone_duplex(Duplex::Half), &hd.positions, &hd.assignment).unwrap();
        validate_assignment(&s.without_drones(), &[], &s_mbs(&s).unwrap()).unwrap();
    }
}

#[test]
fn two_site_micro_instances_reach_half_the_optimum() {
    let config = MicroConfig {
        max_ues: 4,
        max_altitudes: 1,
        max_drones: 1,
        ..Default::default()
    };
    for seed in 0..100 {
        let mut s = micro_scenario(&config, seed);
        s.grid = CandidateGrid {
            horizontal: vec![(100.0, 100.0), (300.0, 300.0)],
            vertical: vec![s.grid.vertical[0]],
        };
        let approx = aa_bud(&s).unwrap();
        let exact = exact_bud(&s).unwrap();
        assert!(approx.throughput_bps >= 0.5 * exact.throughput_bps, "seed {seed}");
        assert!(exact.throughput_bps >= approx.throughput_bps);
    }
}

#[test]
fn half_duplex_costs_more_under_the_drone_far_from_the_macro() {
    let s = ScenarioConfig::default().build(0).unwrap();
    let mut s = s.with_ues(vec![UserEquipment {
        id: 0,
        position: Point3::new(80.0, 80.0, 0.0),
        rate_demand_bps: 1e6,
    }]);
    s.grid = CandidateGrid {
        horizontal: vec![(80.0, 80.0)],
        vertical: vec![160.0],
    };
    let pos = s.grid.position(0, 0);
    let fd = min_bandwidth(&s, 0, 1, &pos).unwrap().unwrap();
    let hd = min_bandwidth(&s.with_drone_duplex(Duplex::Half), 0, 1, &pos).unwrap().unwrap();
    assert_eq!((fd.access, fd.backhaul), (fd.budget, fd.budget));
    assert!(hd.backhaul >= 1);
    assert_eq!(hd.budget, hd.access + hd.backhaul);
    assert!(hd.budget > fd.budget, "{hd:?} vs {fd:?}");
}

/// Self-interference can make a full-duplex relay the more expensive one:
/// with 10 W spread over 300 subcarriers the residual after 130 dB of
/// cancellation is about 55 times the thermal noise per subcarrier.
#[test]
fn full_duplex_can_cost_more_than_half_duplex() {
    let s = ScenarioConfig::default().build(1).unwrap();
    let pos = s.grid.position(0, 0);
    let fd = min_bandwidth(&s, 0, 1, &pos).unwrap().unwrap();
    let hd = min_bandwidth(&s.with_drone_duplex(Duplex::Half), 0, 1, &pos).unwrap().unwrap();
    assert_eq!(fd.budget, 47);
    assert_eq!((hd.access, hd.backhaul), (13, 11));
}

#[test]
fn idle_drones_use_no_backhaul() {
    let s = small(3);
    let hd = hd_dbs(&s).unwrap();
    for (k, station) in s.drone_indices().enumerate() {
        let serving: Vec<_> = hd.assignment.links.iter().flatten().filter(|l| l.station == station).collect();
        let backhaul: u32 = serving.iter().map(|l| l.backhaul_subcarriers).sum();
        if serving.is_empty() {
            assert_eq!(backhaul, 0, "drone {k}");
        } else {
            assert!(serving.iter().all(|l| l.backhaul_subcarriers >= 1));
        }
    }
}

#[test]
fn solve_dispatch() {
    let s = small(4);
    for algo in [Algorithm::AaBud, Algorithm::HdDbs, Algorithm::SMbs] {
        let r = solve(&s, algo, SearchOptions::default()).unwrap();
        assert_eq!(r.solution.throughput_bps, r.solution.assignment.total_throughput_bps);
    }
    assert!(matches!(
        solve(&s, Algorithm::ExactBud, SearchOptions::default()),
        Err(dbs_uplink::SolveError::CapsExceeded(_))
    ));
}
