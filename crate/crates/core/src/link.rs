//! Per-(UE, station) link budgets and minimum subcarrier requirements.

use crate::channel::{
    a2g_gain_linear, access_rate_ceiling_bps, access_sinr, backhaul_sinr, link_rate_bps,
    mbs_fading_factor, mbs_path_gain_linear, AccessLink, ChannelParams, Duplex, LinkGeometry,
    Point3,
};
use crate::error::ModelError;
use crate::scenario::{BaseStation, StationKind, UserEquipment};

/// Position-resolved gains for one UE toward one station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkBudget {
    Direct {
        gain: f64,
    },
    Relay {
        duplex: Duplex,
        access_gain: f64,
        backhaul_gain: f64,
        /// Gain of the relayed UE toward the MBS, interfering with the backhaul.
        /// Zero for half-duplex relays, whose backhaul has its own spectrum.
        interferer_gain: f64,
        psd_w_per_sc: f64,
    },
}

/// Subcarriers a UE needs from its serving station.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScRequirement {
    pub access: u32,
    /// Subcarriers carrying the relayed traffic to the MBS (0 for direct links).
    pub backhaul: u32,
    /// Subcarriers charged to the station budget. Full-duplex relays reuse
    /// the access subcarriers for backhaul, half-duplex relays need both.
    pub budget: u32,
}

impl LinkBudget {
    /// `station_pos` overrides the station's stored position (drones being placed).
    pub fn resolve(
        params: &ChannelParams,
        ue: &UserEquipment,
        mbs: &BaseStation,
        station: &BaseStation,
        station_pos: &Point3,
    ) -> Result<Self, ModelError> {
        let mbs_gain =
            mbs_path_gain_linear(ue.position.distance(&mbs.position), params) * mbs_fading_factor(params, ue.id);
        Ok(match station.kind {
            StationKind::Macro => LinkBudget::Direct { gain: mbs_gain },
            StationKind::Drone => {
                let access = LinkGeometry::between(&ue.position, station_pos)?;
                let backhaul = LinkGeometry::between(&mbs.position, station_pos)?;
                LinkBudget::Relay {
                    duplex: station.duplex,
                    access_gain: a2g_gain_linear(&access, params),
                    backhaul_gain: a2g_gain_linear(&backhaul, params),
                    interferer_gain: match station.duplex {
                        Duplex::Full => mbs_gain,
                        Duplex::Half => 0.0,
                    },
                    psd_w_per_sc: station.psd_w_per_sc(),
                }
            }
        })
    }

    fn access_link(&self) -> (AccessLink, f64, f64) {
        match *self {
            LinkBudget::Direct { gain } => (AccessLink::ToMbs, gain, 0.0),
            LinkBudget::Relay {
                duplex,
                access_gain,
                psd_w_per_sc,
                ..
            } => (AccessLink::ToDbs(duplex), access_gain, psd_w_per_sc),
        }
    }

    pub fn access_rate_bps(&self, sc_count: u32, params: &ChannelParams) -> f64 {
        if sc_count == 0 {
            return 0.0;
        }
        let (link, gain, psd) = self.access_link();
        let sinr = access_sinr(link, gain, sc_count, params, psd).expect("sc_count >= 1");
        link_rate_bps(sc_count, sinr, None, params)
    }

    /// Backhaul rate over `sc_count` subcarriers; infinite for direct links.
    pub fn backhaul_rate_bps(&self, sc_count: u32, params: &ChannelParams) -> f64 {
        match *self {
            LinkBudget::Direct { .. } => f64::INFINITY,
            LinkBudget::Relay { .. } if sc_count == 0 => 0.0,
            LinkBudget::Relay {
                backhaul_gain,
                interferer_gain,
                psd_w_per_sc,
                ..
            } => {
                let sinr = backhaul_sinr(psd_w_per_sc, sc_count, interferer_gain, backhaul_gain, params)
                    .expect("sc_count >= 1");
                link_rate_bps(sc_count, sinr, None, params)
            }
        }
    }

    /// End-to-end rate on `sc_count` shared subcarriers (direct or full-duplex relay).
    pub fn shared_rate_bps(&self, sc_count: u32, params: &ChannelParams) -> f64 {
        self.access_rate_bps(sc_count, params)
            .min(self.backhaul_rate_bps(sc_count, params))
    }

    /// End-to-end rate achieved under a requirement returned by [`Self::min_subcarriers`].
    pub fn achieved_rate_bps(&self, req: &ScRequirement, params: &ChannelParams) -> f64 {
        match *self {
            LinkBudget::Direct { .. } => self.access_rate_bps(req.access, params),
            LinkBudget::Relay { .. } => self
                .access_rate_bps(req.access, params)
                .min(self.backhaul_rate_bps(req.backhaul, params)),
        }
    }

    pub fn access_ceiling_bps(&self, params: &ChannelParams) -> f64 {
        let (link, gain, psd) = self.access_link();
        access_rate_ceiling_bps(link, gain, params, psd)
    }

    /// Fewest subcarriers meeting `demand_bps` within a budget of `cap`, or
    /// `None` when the demand is unreachable.
    pub fn min_subcarriers(&self, demand_bps: f64, cap: u32, params: &ChannelParams) -> Option<ScRequirement> {
        if self.access_ceiling_bps(params) < demand_bps {
            return None;
        }
        match *self {
            LinkBudget::Direct { .. } => {
                let b = min_count(|b| self.access_rate_bps(b, params), demand_bps, cap)?;
                Some(ScRequirement { access: b, backhaul: 0, budget: b })
            }
            LinkBudget::Relay { duplex: Duplex::Full, .. } => {
                let b = min_count(|b| self.shared_rate_bps(b, params), demand_bps, cap)?;
                Some(ScRequirement { access: b, backhaul: b, budget: b })
            }
            LinkBudget::Relay { duplex: Duplex::Half, .. } => {
                let access = min_count(|b| self.access_rate_bps(b, params), demand_bps, cap)?;
                let backhaul = min_count(|b| self.backhaul_rate_bps(b, params), demand_bps, cap)?;
                let budget = access + backhaul;
                (budget <= cap).then_some(ScRequirement { access, backhaul, budget })
            }
        }
    }
}

/// Smallest `b` in `1..=cap` with `rate(b) >= demand`, for `rate`
/// non-decreasing in `b`. Doubles until the demand is met, then bisects.
pub fn min_count(rate: impl Fn(u32) -> f64, demand: f64, cap: u32) -> Option<u32> {
    if cap == 0 {
        return None;
    }
    if rate(1) >= demand {
        return Some(1);
    }
    let (mut lo, mut hi) = (1u32, 1u32);
    loop {
        hi = hi.saturating_mul(2).min(cap);
        if rate(hi) >= demand {
            break;
        }
        if hi == cap {
            return None;
        }
        lo = hi;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if rate(mid) >= demand {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}
