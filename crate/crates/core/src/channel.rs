//! Propagation and link-rate model.
//!
//! UE to DBS (and DBS to MBS) links use the probabilistic LoS/NLoS
//! air-to-ground model; UE to MBS links use the log-distance macro model
//! with a fixed fading margin. SINRs are per allocation: a UE spreads its
//! full transmit power over all of its subcarriers, so noise (and DBS
//! backhaul power, hence self-interference) scales with the subcarrier count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[inline]
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Cartesian position in meters. Ground terminals have `z == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        self.horizontal_distance(other).hypot(self.z - other.z)
    }
}

/// Whether a DBS relays on the same spectrum it receives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Duplex {
    Half,
    Full,
}

/// How the UE to MBS small-scale fading enters the gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MbsFading {
    /// Constant margin of `mbs_rayleigh_db`.
    #[default]
    Mean,
    /// Exponentially distributed power gain with mean `mbs_rayleigh_db`,
    /// drawn per UE from ChaCha8 seeded with `seed`, stream = UE id.
    Rayleigh { seed: u64 },
}

/// Propagation and radio constants shared by every link in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub env_a: f64,
    pub env_b: f64,
    pub excess_los_db: f64,
    pub excess_nlos_db: f64,
    pub carrier_hz: f64,
    pub light_speed: f64,
    pub noise_psd_dbm_hz: f64,
    pub sc_bandwidth_hz: f64,
    pub si_cancellation_db: f64,
    pub ue_tx_power_dbm: f64,
    /// Default DBS power budget used when building drone stations.
    pub dbs_power_budget_w: f64,
    pub mbs_pl_intercept_db: f64,
    /// dB per decade of distance in km.
    pub mbs_pl_slope: f64,
    /// Mean fading gain on UE to MBS links (negative = loss).
    pub mbs_rayleigh_db: f64,
    #[serde(default)]
    pub mbs_fading: MbsFading,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            env_a: 4.88,
            env_b: 0.43,
            excess_los_db: 0.1,
            excess_nlos_db: 21.0,
            carrier_hz: 2e9,
            light_speed: SPEED_OF_LIGHT,
            noise_psd_dbm_hz: -174.0,
            sc_bandwidth_hz: 15e3,
            si_cancellation_db: 130.0,
            ue_tx_power_dbm: 23.0,
            dbs_power_budget_w: 10.0,
            mbs_pl_intercept_db: 136.8,
            mbs_pl_slope: 39.1,
            mbs_rayleigh_db: -8.0,
            mbs_fading: MbsFading::Mean,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("env_a", self.env_a),
            ("env_b", self.env_b),
            ("carrier_hz", self.carrier_hz),
            ("light_speed", self.light_speed),
            ("sc_bandwidth_hz", self.sc_bandwidth_hz),
            ("si_cancellation_db", self.si_cancellation_db),
            ("dbs_power_budget_w", self.dbs_power_budget_w),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        let finite = [
            ("excess_los_db", self.excess_los_db),
            ("excess_nlos_db", self.excess_nlos_db),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("ue_tx_power_dbm", self.ue_tx_power_dbm),
            ("mbs_pl_intercept_db", self.mbs_pl_intercept_db),
            ("mbs_pl_slope", self.mbs_pl_slope),
            ("mbs_rayleigh_db", self.mbs_rayleigh_db),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(ModelError::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        Ok(())
    }

    pub fn ue_tx_power_w(&self) -> f64 {
        dbm_to_watts(self.ue_tx_power_dbm)
    }

    pub fn noise_psd_w_hz(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_hz)
    }

    /// Thermal noise over `sc_count` subcarriers, in watts.
    pub fn noise_power_w(&self, sc_count: u32) -> f64 {
        self.sc_bandwidth_hz * f64::from(sc_count) * self.noise_psd_w_hz()
    }

    pub fn si_cancellation_linear(&self) -> f64 {
        db_to_linear(self.si_cancellation_db)
    }
}

/// Ground-to-air link geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub horizontal_dist_m: f64,
    /// Height of the aerial end above the ground end.
    pub altitude_m: f64,
    pub dist_3d_m: f64,
}

impl LinkGeometry {
    pub fn new(horizontal_dist_m: f64, altitude_m: f64) -> Result<Self, ModelError> {
        let dist_3d_m = horizontal_dist_m.hypot(altitude_m);
        if !(horizontal_dist_m >= 0.0 && altitude_m >= 0.0 && dist_3d_m > 0.0) || !dist_3d_m.is_finite()
        {
            return Err(ModelError::InvalidGeometry {
                horizontal_dist_m,
                altitude_m,
            });
        }
        Ok(Self {
            horizontal_dist_m,
            altitude_m,
            dist_3d_m,
        })
    }

    /// Geometry between a ground terminal and an aerial one (order does not matter).
    pub fn between(a: &Point3, b: &Point3) -> Result<Self, ModelError> {
        Self::new(a.horizontal_distance(b), (a.z - b.z).abs())
    }

    /// Elevation angle in degrees, measured against the horizontal distance.
    pub fn elevation_deg(&self) -> f64 {
        self.altitude_m.atan2(self.horizontal_dist_m).to_degrees()
    }
}

/// Probability that the link has line of sight.
pub fn los_probability(geom: &LinkGeometry, params: &ChannelParams) -> f64 {
    let theta = geom.elevation_deg();
    1.0 / (1.0 + params.env_a * (-params.env_b * (theta - params.env_a)).exp())
}

pub fn free_space_path_loss_db(dist_3d_m: f64, params: &ChannelParams) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * params.carrier_hz * dist_3d_m / params.light_speed).log10()
}

/// Mean air-to-ground path loss in dB.
pub fn a2g_path_loss_db(geom: &LinkGeometry, params: &ChannelParams) -> f64 {
    let p_los = los_probability(geom, params);
    p_los * (params.excess_los_db - params.excess_nlos_db)
        + free_space_path_loss_db(geom.dist_3d_m, params)
        + params.excess_nlos_db
}

pub fn a2g_gain_linear(geom: &LinkGeometry, params: &ChannelParams) -> f64 {
    db_to_linear(-a2g_path_loss_db(geom, params))
}

/// Macro-cell path loss (without fading) at a 3-D distance in meters.
pub fn mbs_path_loss_db(dist_3d_m: f64, params: &ChannelParams) -> f64 {
    params.mbs_pl_intercept_db + params.mbs_pl_slope * (dist_3d_m / 1000.0).log10()
}

/// UE to MBS power gain including the mean fading margin.
pub fn mbs_path_gain_linear(dist_3d_m: f64, params: &ChannelParams) -> f64 {
    db_to_linear(params.mbs_rayleigh_db - mbs_path_loss_db(dist_3d_m, params))
}

/// Multiplicative fading factor for one UE's MBS link (1.0 in `Mean` mode).
pub fn mbs_fading_factor(params: &ChannelParams, ue_id: u32) -> f64 {
    match params.mbs_fading {
        MbsFading::Mean => 1.0,
        MbsFading::Rayleigh { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::from(ue_id));
            Exp1.sample(&mut rng)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessLink {
    ToMbs,
    ToDbs(Duplex),
}

/// Access-link SINR for a UE using `sc_count` subcarriers.
///
/// `dbs_psd_w_per_sc` is the relaying DBS's backhaul power per subcarrier;
/// with full duplex its residual after cancellation is self-interference.
pub fn access_sinr(
    link: AccessLink,
    gain_linear: f64,
    sc_count: u32,
    params: &ChannelParams,
    dbs_psd_w_per_sc: f64,
) -> Result<f64, ModelError> {
    if sc_count == 0 {
        return Err(ModelError::ZeroSubcarriers);
    }
    let signal = params.ue_tx_power_w() * gain_linear;
    let noise = params.noise_power_w(sc_count);
    let si = match link {
        AccessLink::ToMbs | AccessLink::ToDbs(Duplex::Half) => 0.0,
        AccessLink::ToDbs(Duplex::Full) => {
            f64::from(sc_count) * dbs_psd_w_per_sc / params.si_cancellation_linear()
        }
    };
    Ok(signal / (si + noise))
}

/// Backhaul (DBS to MBS) SINR when relaying one UE over `sc_count` subcarriers.
///
/// `mbs_gain_of_ue` is the relayed UE's own gain toward the MBS; it
/// interferes because the backhaul reuses the access spectrum. Pass 0 for
/// orthogonal backhaul spectrum.
pub fn backhaul_sinr(
    dbs_psd_w_per_sc: f64,
    sc_count: u32,
    mbs_gain_of_ue: f64,
    dbs_to_mbs_gain: f64,
    params: &ChannelParams,
) -> Result<f64, ModelError> {
    if sc_count == 0 {
        return Err(ModelError::ZeroSubcarriers);
    }
    let power = f64::from(sc_count) * dbs_psd_w_per_sc;
    let interference = params.ue_tx_power_w() * mbs_gain_of_ue;
    Ok(power * dbs_to_mbs_gain / (interference + params.noise_power_w(sc_count)))
}

/// Shannon rate over `sc_count` subcarriers; a relayed link is limited by
/// the weaker of its two hops.
pub fn link_rate_bps(
    sc_count: u32,
    sinr_access: f64,
    sinr_backhaul: Option<f64>,
    params: &ChannelParams,
) -> f64 {
    let rate = |sinr: f64| params.sc_bandwidth_hz * f64::from(sc_count) * (1.0 + sinr).log2();
    let access = rate(sinr_access);
    match sinr_backhaul {
        Some(s) => access.min(rate(s)),
        None => access,
    }
}

/// Upper limit of the access rate as the subcarrier count grows without bound.
///
/// With signal `C` and per-subcarrier impairment `D`, `τ₀·b·log₂(1 + C/(b·D))`
/// increases toward `τ₀·C/(D·ln 2)`.
pub fn access_rate_ceiling_bps(
    link: AccessLink,
    gain_linear: f64,
    params: &ChannelParams,
    dbs_psd_w_per_sc: f64,
) -> f64 {
    let c = params.ue_tx_power_w() * gain_linear;
    let mut d = params.sc_bandwidth_hz * params.noise_psd_w_hz();
    if link == AccessLink::ToDbs(Duplex::Full) {
        d += dbs_psd_w_per_sc / params.si_cancellation_linear();
    }
    params.sc_bandwidth_hz * c / (d * std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    #[test]
    fn los_probability_limits() {
        let p = ChannelParams::default();
        let overhead = LinkGeometry::new(0.0, 100.0).unwrap();
        assert!((los_probability(&overhead, &p) - 1.0).abs() < 1e-10);

        // θ = 0: 1 / (1 + a·e^{a·b})
        let grazing = LinkGeometry::new(100.0, 0.0).unwrap();
        let expected = 1.0 / (1.0 + 4.88 * (0.43f64 * 4.88).exp());
        assert!((los_probability(&grazing, &p) - expected).abs() < 1e-15);
        assert!((los_probability(&grazing, &p) - 0.0245).abs() < 5e-5);
    }

    #[test]
    fn equal_excess_losses_cancel_los_probability() {
        let p = ChannelParams {
            excess_los_db: 7.0,
            excess_nlos_db: 7.0,
            ..Default::default()
        };
        for (h, a) in [(10.0, 100.0), (300.0, 120.0), (900.0, 5.0)] {
            let g = LinkGeometry::new(h, a).unwrap();
            let want = 7.0 + free_space_path_loss_db(g.dist_3d_m, &p);
            assert!((a2g_path_loss_db(&g, &p) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_a2g_loss_at_100m_100m() {
        // Evaluated independently: θ = 45°, ψᴸ = 1/(1 + 4.88·e^{-0.43·40.12}),
        // FSPL = 20·log10(4π·2e9·141.421356/c).
        let p = ChannelParams::default();
        let g = LinkGeometry::new(100.0, 100.0).unwrap();
        assert!(close(g.dist_3d_m, 141.421_356_237_309_5, 1e-12));
        let loss = a2g_path_loss_db(&g, &p);
        assert!((loss - 81.578_686_374_957_58).abs() < 1e-9, "{loss}");
    }

    #[test]
    fn doubling_distance_adds_6db_of_free_space_loss() {
        let p = ChannelParams::default();
        let d = free_space_path_loss_db(2.0 * 321.0, &p) - free_space_path_loss_db(321.0, &p);
        assert!((d - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((d - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn macro_path_loss_reference_points() {
        let p = ChannelParams::default();
        assert!((mbs_path_loss_db(1000.0, &p) - 136.8).abs() < 1e-12);
        assert!((mbs_path_loss_db(10_000.0, &p) - 175.9).abs() < 1e-9);
        assert!(close(mbs_path_gain_linear(1000.0, &p), 10f64.powf(-14.48), 1e-12));
        assert!(mbs_path_gain_linear(900.0, &p) > mbs_path_gain_linear(901.0, &p));
    }

    #[test]
    fn sinr_limits_and_scaling() {
        let p = ChannelParams::default();
        assert!(close(p.ue_tx_power_w(), 0.199_526_231, 1e-8));
        let g = 1e-12;
        let one = access_sinr(AccessLink::ToMbs, g, 4, &p, 0.0).unwrap();
        let two = access_sinr(AccessLink::ToMbs, g, 8, &p, 0.0).unwrap();
        assert!(close(one, 2.0 * two, 1e-14));

        let no_si = ChannelParams {
            si_cancellation_db: 1e6,
            ..Default::default()
        };
        let fd = access_sinr(AccessLink::ToDbs(Duplex::Full), g, 5, &no_si, 0.05).unwrap();
        let hd = access_sinr(AccessLink::ToDbs(Duplex::Half), g, 5, &no_si, 0.05).unwrap();
        assert!(close(fd, hd, 1e-12));

        assert!(matches!(
            access_sinr(AccessLink::ToMbs, g, 0, &p, 0.0),
            Err(ModelError::ZeroSubcarriers)
        ));
        assert!(backhaul_sinr(0.1, 0, 1e-12, 1e-9, &p).is_err());
    }

    #[test]
    fn backhaul_sinr_cases() {
        let p = ChannelParams::default();
        let psd = 1.0 / 30.0;
        let free = backhaul_sinr(psd, 6, 0.0, 1e-10, &p).unwrap();
        assert!(close(free, 6.0 * psd * 1e-10 / p.noise_power_w(6), 1e-14));
        assert_eq!(backhaul_sinr(0.0, 6, 1e-12, 1e-10, &p).unwrap(), 0.0);
    }

    #[test]
    fn rate_cases() {
        let p = ChannelParams::default();
        assert_eq!(link_rate_bps(0, 10.0, None, &p), 0.0);
        assert!((link_rate_bps(1, 1.0, None, &p) - 15_000.0).abs() < 1e-9);
        let direct = link_rate_bps(3, 40.0, None, &p);
        let relayed = link_rate_bps(3, 40.0, Some(12.0), &p);
        assert!(relayed <= direct);
        assert_eq!(relayed, link_rate_bps(3, 12.0, None, &p));
    }

    #[test]
    fn db_round_trip() {
        for v in [-174.0, -30.0, 0.0, 23.0, 40.0, 130.0] {
            assert!(close(linear_to_db(db_to_linear(v)), v, 1e-12) || v == 0.0);
            assert!((watts_to_dbm(dbm_to_watts(v)) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
        assert!((dbm_to_watts(40.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_fading_is_seeded_per_ue() {
        let p = ChannelParams {
            mbs_fading: MbsFading::Rayleigh { seed: 9 },
            ..Default::default()
        };
        let a = mbs_fading_factor(&p, 3);
        assert_eq!(a, mbs_fading_factor(&p, 3));
        assert_ne!(a, mbs_fading_factor(&p, 4));
        assert_eq!(mbs_fading_factor(&ChannelParams::default(), 3), 1.0);
    }
}
