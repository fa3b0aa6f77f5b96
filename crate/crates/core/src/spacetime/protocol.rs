use serde::{Deserialize, Serialize};

use super::order::light_coordinate_time;
use super::{
    proper_time_rate, Attainable, Branch, Constants, EventSpec, MassConfiguration, MetricMode,
    Result, SpacetimeError, SpacetimeParams,
};

/// Relative tolerance for matching an arrival with a trigger proper time.
pub const COINCIDENCE_REL_TOL: f64 = 1e-6;

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(SpacetimeError::InvalidParameter { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearHorizonRatio {
    /// `√((R_S/ε)(1 + 2Φ(R_S + l)/c²))`
    pub approximate: f64,
    /// `√(g00(R_S + l)/g00(R_S + ε))`
    pub exact: f64,
}

impl NearHorizonRatio {
    pub fn relative_error(&self) -> f64 {
        (self.approximate - self.exact).abs() / self.exact
    }
}

/// Ticking-rate ratio between clocks at `R_S + l` and `R_S + ε`.
pub fn near_horizon_rate_ratio(p: &SpacetimeParams, epsilon_m: f64, l_m: f64) -> Result<NearHorizonRatio> {
    if p.metric_mode != MetricMode::ExactSchwarzschild {
        return Err(SpacetimeError::WrongMetricMode(MetricMode::ExactSchwarzschild));
    }
    let eps = positive("epsilon_m", epsilon_m)?;
    let l = positive("l_m", l_m)?;
    if l < eps {
        return Err(SpacetimeError::InvalidParameter {
            name: "l_m (must be at least epsilon_m)",
            value: l,
        });
    }
    let rs = p.schwarzschild_radius();
    let far = l / (rs + l);
    Ok(NearHorizonRatio {
        approximate: (rs / eps * far).sqrt(),
        exact: (far * (rs + eps) / eps).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BounceArrival {
    pub agent_id: String,
    /// 0 for the first time the photon reaches this agent, 1 for the second.
    pub bounce_index: usize,
    pub coordinate_time_s: f64,
    pub local_time_s: f64,
    pub coincides_with_trigger: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonSchedule {
    pub branch: Branch,
    pub light_time_s: f64,
    pub arrivals: Vec<BounceArrival>,
}

impl PhotonSchedule {
    /// Bounce index at which the agent's operation is applied, if any.
    pub fn operation_bounce(&self, agent_id: &str) -> Option<usize> {
        self.arrivals
            .iter()
            .find(|a| a.agent_id == agent_id && a.coincides_with_trigger)
            .map(|a| a.bounce_index)
    }
}

/// Arrival times of a photon bouncing `a → b → a → b`.
///
/// `r_a`, `r_b` are the radii the photon travels between (after any
/// relocation of the mass); clock rates come from the radii in `config`. The
/// photon first reaches `event_a.agent_id` at `emission_coordinate_time`.
pub fn photon_schedule(
    p: &SpacetimeParams,
    config: &MassConfiguration,
    r_a: f64,
    r_b: f64,
    emission_coordinate_time: f64,
    event_a: &EventSpec,
    event_b: &EventSpec,
) -> Result<PhotonSchedule> {
    if !emission_coordinate_time.is_finite() {
        return Err(SpacetimeError::InvalidParameter {
            name: "emission_coordinate_time",
            value: emission_coordinate_time,
        });
    }
    config.validate(p)?;
    let light = light_coordinate_time(p, r_a, r_b)?;
    let rate_a = proper_time_rate(p, config.radius(&event_a.agent_id)?)?;
    let rate_b = proper_time_rate(p, config.radius(&event_b.agent_id)?)?;
    let arrivals = (0..4)
        .map(|k| {
            let (event, rate) = if k % 2 == 0 { (event_a, rate_a) } else { (event_b, rate_b) };
            let t = emission_coordinate_time + k as f64 * light;
            let local = rate * t;
            let tau = event.trigger_proper_time_s;
            BounceArrival {
                agent_id: event.agent_id.clone(),
                bounce_index: k / 2,
                coordinate_time_s: t,
                local_time_s: local,
                coincides_with_trigger: (local - tau).abs() <= COINCIDENCE_REL_TOL * tau,
            }
        })
        .collect();
    Ok(PhotonSchedule {
        branch: config.branch,
        light_time_s: light,
        arrivals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BounceDesign {
    /// Radius of `b` in both configurations.
    pub r_b_m: f64,
    pub tau_star_s: f64,
    pub emission_coordinate_time_s: f64,
    pub light_time_s: f64,
    pub k_ab: MassConfiguration,
    pub k_ba: MassConfiguration,
}

/// Chooses `r_b`, `τ*` and the emission time so that with `a` at `r_a_far`
/// its operation meets the first photon arrival, with `a` at `r_a_near` the
/// second one, and `b` always acts at its first arrival.
///
/// Light travels between `prop_r_a` and `prop_r_b` in both configurations.
pub fn design_bounce_protocol(
    p: &SpacetimeParams,
    r_a_near: f64,
    r_a_far: f64,
    prop_r_a: f64,
    prop_r_b: f64,
) -> Result<Attainable<BounceDesign>> {
    if !(r_a_far > r_a_near) {
        return Err(SpacetimeError::InvalidParameter {
            name: "r_a_far (must exceed r_a_near)",
            value: r_a_far,
        });
    }
    p.check_radius(r_a_near)?;
    p.check_radius(r_a_far)?;
    let light = light_coordinate_time(p, prop_r_a, prop_r_b)?;
    let rs = p.schwarzschild_radius();
    if rs == 0.0 {
        return Ok(Attainable::Unattainable);
    }
    // 1/rate − 1
    let lag = |r: f64| (-0.5 * (-rs / r).ln_1p()).exp_m1();
    let (u_near, u_far) = (lag(r_a_near), lag(r_a_far));
    let w = 0.5 * (u_near + u_far);
    if !(w > u_far) {
        return Ok(Attainable::Unattainable);
    }
    let r_b = rs * (1.0 + w) * (1.0 + w) / (w * (2.0 + w));
    p.check_radius(r_b)?;
    let tau_star = light / (w - u_far);
    let emission = tau_star * (1.0 + u_far);
    Ok(Attainable::Reached(BounceDesign {
        r_b_m: r_b,
        tau_star_s: tau_star,
        emission_coordinate_time_s: emission,
        light_time_s: light,
        k_ab: MassConfiguration::new(Branch::AbeforeB, [("a", r_a_far), ("b", r_b)]),
        k_ba: MassConfiguration::new(Branch::BbeforeA, [("a", r_a_near), ("b", r_b)]),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixCTimes {
    /// Proper time of `a₁`'s operation.
    pub tau_a: f64,
    /// Proper time of `b₁`'s operation.
    pub tau_b: f64,
    /// Coordinate time corresponding to `tau_a`.
    pub t_a: f64,
    /// Coordinate time needed to apply the operations.
    pub t_o: f64,
    /// Coordinate duration of the whole protocol.
    pub t_p: f64,
}

/// Timescales of the one-dimensional clock-disentangling protocol with the
/// mass at `r` or `r + L` from `a₁` and `b₁` a further `h` out.
pub fn appendix_c_times(p: &SpacetimeParams, r_m: f64, l_m: f64, h_m: f64) -> Result<Attainable<AppendixCTimes>> {
    let r = positive("r_m", r_m)?;
    let l = positive("L_m", l_m)?;
    let h = positive("h_m", h_m)?;
    for x in [r, r + h, r + l, r + l + h, r + 0.5 * l] {
        p.check_radius(x)?;
    }
    let c = p.constants.c;
    let tc = |x: f64| light_coordinate_time(p, x, x + h);
    let shift = (0.5 * (p.ln_lapse_squared(r + l + h) - p.ln_lapse_squared(r + h))).exp();
    let numerator = tc(r)? + tc(r + l)? * shift;
    let gap = p.dilation_gap(&[r, r + l + h], &[r + h, r + l]);
    if !(gap > 0.0) {
        return Ok(Attainable::Unattainable);
    }
    let rate_r = proper_time_rate(p, r)?;
    let tau_a = rate_r * numerator / gap;
    let t_a = tau_a / rate_r;
    let tau_b = proper_time_rate(p, r + l + h)? * (tau_a / proper_time_rate(p, r + l)? + tc(r + l)?);
    let t_o = 2.0 * tc(r + 0.5 * l)?;
    let t_p = 2.0 * t_a + 2.0 * l / c;
    Ok(Attainable::Reached(AppendixCTimes {
        tau_a,
        tau_b,
        t_a,
        t_o,
        t_p,
    }))
}

/// `2δ³ℏ / (G (mL)²)`.
pub fn diosi_penrose_time(delta_m: f64, mass_kg: f64, l_m: f64, constants: &Constants) -> Result<f64> {
    let delta = positive("delta_m", delta_m)?;
    let m = positive("mass_kg", mass_kg)?;
    let l = positive("L_m", l_m)?;
    let ml = m * l;
    Ok(2.0 * delta.powi(3) * constants.hbar / (constants.g * ml * ml))
}
