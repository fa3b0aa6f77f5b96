use serde::{Deserialize, Serialize};

use super::quadrature::adaptive_simpson;
use super::{
    proper_time_rate, Attainable, EventSpec, MassConfiguration, Result, SpacetimeError,
    SpacetimeParams, QUADRATURE_MAX_SUBINTERVALS, QUADRATURE_REL_TOL,
};

/// Coordinate time for a radial photon between two radii (either order).
///
/// The integrand `√(−grr/g00)/c` is split into the flat part `1/c`, integrated
/// exactly, and the gravitational excess, integrated adaptively in `ln r`.
pub fn light_coordinate_time(p: &SpacetimeParams, r_from: f64, r_to: f64) -> Result<f64> {
    p.check_radius(r_from)?;
    p.check_radius(r_to)?;
    let (lo, hi) = if r_from <= r_to { (r_from, r_to) } else { (r_to, r_from) };
    let c = p.constants.c;
    let rs = p.schwarzschild_radius();
    if rs == 0.0 || lo == hi {
        return Ok((hi - lo) / c);
    }
    // (√(−grr/g00) − 1)·r as a function of u = ln r
    let excess = |u: f64| {
        let x = rs * (-u).exp();
        rs / (1.0 - x)
    };
    let q = adaptive_simpson(
        excess,
        lo.ln(),
        hi.ln(),
        QUADRATURE_REL_TOL,
        QUADRATURE_MAX_SUBINTERVALS,
    )?;
    Ok(((hi - lo) + q.value) / c)
}

/// Local time of `b` when a photon emitted by `a` at proper time `τ*` arrives,
/// with both clocks synchronised to coordinate time 0.
pub fn arrival_local_time(p: &SpacetimeParams, r_a: f64, r_b: f64, tau_star: f64) -> Result<f64> {
    let t_c = light_coordinate_time(p, r_a, r_b)?;
    let rate_a = proper_time_rate(p, r_a)?;
    let rate_b = proper_time_rate(p, r_b)?;
    Ok(rate_b * (tau_star / rate_a + t_c))
}

/// Smallest trigger proper time for which a signal from the far clock `a`
/// reaches the near clock `b` before `b` reads the same time.
pub fn tau_star_threshold(p: &SpacetimeParams, r_a: f64, r_b: f64) -> Result<Attainable<f64>> {
    if !(r_a > r_b) {
        return Err(SpacetimeError::InvalidParameter {
            name: "r_a (must exceed r_b)",
            value: r_a,
        });
    }
    let t_c = light_coordinate_time(p, r_a, r_b)?;
    let gap = p.dilation_gap(&[r_b], &[r_a]);
    if gap <= 0.0 {
        return Ok(Attainable::Unattainable);
    }
    Ok(Attainable::Reached(t_c * proper_time_rate(p, r_b)? / gap))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRelation {
    ABeforeB,
    BBeforeA,
    Spacelike,
}

impl OrderRelation {
    pub fn mirrored(self) -> Self {
        match self {
            OrderRelation::ABeforeB => OrderRelation::BBeforeA,
            OrderRelation::BBeforeA => OrderRelation::ABeforeB,
            OrderRelation::Spacelike => OrderRelation::Spacelike,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderOutcome {
    pub relation: OrderRelation,
    /// Coordinate-time margin: non-negative for causal relations, negative
    /// (distance to the nearest light cone) for space-like separation.
    pub slack_s: f64,
    pub event_a_coordinate_s: f64,
    pub event_b_coordinate_s: f64,
    pub light_time_s: f64,
}

/// Causal relation between two clock-defined events in one mass configuration.
pub fn classify_order(
    p: &SpacetimeParams,
    config: &MassConfiguration,
    event_a: &EventSpec,
    event_b: &EventSpec,
) -> Result<OrderOutcome> {
    config.validate(p)?;
    let r_a = config.radius(&event_a.agent_id)?;
    let r_b = config.radius(&event_b.agent_id)?;
    let t_a = event_a.trigger_proper_time_s / proper_time_rate(p, r_a)?;
    let t_b = event_b.trigger_proper_time_s / proper_time_rate(p, r_b)?;
    let light = light_coordinate_time(p, r_a, r_b)?;
    let ab = t_b - t_a - light;
    let ba = t_a - t_b - light;
    let (relation, slack_s) = if ab >= 0.0 {
        (OrderRelation::ABeforeB, ab)
    } else if ba >= 0.0 {
        (OrderRelation::BBeforeA, ba)
    } else {
        (OrderRelation::Spacelike, ab.max(ba))
    };
    Ok(OrderOutcome {
        relation,
        slack_s,
        event_a_coordinate_s: t_a,
        event_b_coordinate_s: t_b,
        light_time_s: light,
    })
}
