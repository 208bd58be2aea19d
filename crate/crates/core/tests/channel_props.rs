use dbs_uplink::channel::*;
use proptest::prelude::*;

/// Mixture form: LoS and NLoS losses weighted by the LoS probability.
fn mixture_path_loss_db(geom: &LinkGeometry, p: &ChannelParams) -> f64 {
    let psi = los_probability(geom, p);
    let fspl = free_space_path_loss_db(geom.dist_3d_m, p);
    psi * (fspl + p.excess_los_db) + (1.0 - psi) * (fspl + p.excess_nlos_db)
}

#[test]
fn compact_and_mixture_path_loss_agree_on_1000_geometries() {
    use rand::{Rng, SeedableRng};
    let p = ChannelParams::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let g = LinkGeometry::new(rng.random_range(0.0..3000.0), rng.random_range(1.0..600.0)).unwrap();
        let diff = (a2g_path_loss_db(&g, &p) - mixture_path_loss_db(&g, &p)).abs();
        assert!(diff <= 1e-9, "{g:?}: {diff}");
    }
}

proptest! {
    #[test]
    fn db_round_trips(db in -200.0f64..200.0) {
        prop_assert!((linear_to_db(db_to_linear(db)) - db).abs() <= 1e-12 * db.abs().max(1.0));
        prop_assert!((watts_to_dbm(dbm_to_watts(db)) - db).abs() <= 1e-12 * db.abs().max(1.0));
    }

    #[test]
    fn linear_round_trips(exp in -20.0f64..20.0) {
        let lin = 10f64.powf(exp);
        prop_assert!((db_to_linear(linear_to_db(lin)) - lin).abs() <= 1e-12 * lin);
    }

    #[test]
    fn los_probability_is_a_probability_and_rises_with_altitude(
        h in 0.0f64..5000.0, alt in 1.0f64..1000.0, dalt in 0.0f64..100.0,
    ) {
        let p = ChannelParams::default();
        let lo = los_probability(&LinkGeometry::new(h, alt).unwrap(), &p);
        let hi = los_probability(&LinkGeometry::new(h, alt + dalt).unwrap(), &p);
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!(hi >= lo);
    }

    /// Rate in the subcarrier count: increasing, concave, below the ceiling.
    #[test]
    fn access_rate_monotone_concave_saturating(
        gain_db in -140.0f64..-75.0, full in any::<bool>(), psd_w in 1e-3f64..0.1,
    ) {
        let p = ChannelParams::default();
        let link = AccessLink::ToDbs(if full { Duplex::Full } else { Duplex::Half });
        let g = db_to_linear(gain_db);
        let rate = |b: u32| link_rate_bps(b, access_sinr(link, g, b, &p, psd_w).unwrap(), None, &p);
        let ceiling = access_rate_ceiling_bps(link, g, &p, psd_w);
        let mut prev = 0.0;
        let mut prev_step = f64::INFINITY;
        for b in 1..=300u32 {
            let r = rate(b);
            let step = r - prev;
            prop_assert!(step > 0.0, "not increasing at {b}");
            prop_assert!(step <= prev_step * (1.0 + 1e-9) + 1e-9, "not concave at {b}");
            prop_assert!(r < ceiling, "above ceiling at {b}");
            prev = r;
            prev_step = step;
        }
        // at SINR 0.1 the rate is ln(1.1)/0.1 = 95.3% of the ceiling
        let per_sc = p.ue_tx_power_w() * g * std::f64::consts::LN_2 * p.sc_bandwidth_hz / ceiling;
        let b = (10.0 * p.ue_tx_power_w() * g / per_sc).ceil();
        prop_assert!(b < f64::from(u32::MAX));
        prop_assert!(rate(b as u32) > 0.95 * ceiling);
    }
}

#[test]
fn relay_rate_is_weaker_hop() {
    let p = ChannelParams::default();
    let r = link_rate_bps(4, 3.0, Some(1.0), &p);
    assert_eq!(r, 4.0 * 15e3);
    assert_eq!(link_rate_bps(4, 1.0, Some(3.0), &p), r);
    assert_eq!(link_rate_bps(4, 1.0, None, &p), r);
}
