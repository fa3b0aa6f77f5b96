//! Static, radial light propagation and clock rates around a point mass.
//!
//! Two metric modes are supported. The weak-field mode uses the first-order
//! post-Newtonian components `g00 = −(1 + 2Φ/c²)`, `grr = (1 + 2Φ/c²)⁻¹` with
//! `Φ = −GM/r` and refuses radii where `|Φ|/c² ≥ 0.1`. The exact mode uses the
//! Schwarzschild components and accepts any radius outside the horizon.
//!
//! `Φ/c²` is always evaluated as `−R_S/(2r)`, so an explicit Schwarzschild
//! radius override rescales every gravitational effect consistently.

mod order;
mod protocol;
pub mod quadrature;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use order::{
    arrival_local_time, classify_order, light_coordinate_time, tau_star_threshold, OrderOutcome,
    OrderRelation,
};
pub use protocol::{
    appendix_c_times, design_bounce_protocol, diosi_penrose_time, near_horizon_rate_ratio,
    photon_schedule, AppendixCTimes, BounceArrival, BounceDesign, NearHorizonRatio,
    PhotonSchedule, COINCIDENCE_REL_TOL,
};

/// Largest `|Φ|/c²` accepted in post-Newtonian mode.
pub const POST_NEWTONIAN_LIMIT: f64 = 0.1;
/// Relative tolerance of light-time quadrature.
pub const QUADRATURE_REL_TOL: f64 = 1e-12;
/// Hard cap on quadrature subintervals.
pub const QUADRATURE_MAX_SUBINTERVALS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpacetimeError {
    #[error("invalid parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("radius {radius_m} m is outside the validity region: {reason}")]
    OutsideValidity { radius_m: f64, reason: &'static str },
    #[error("operation requires the {0:?} metric mode")]
    WrongMetricMode(MetricMode),
    #[error("agent `{0}` is not part of the mass configuration")]
    UnknownAgent(String),
    #[error(
        "quadrature did not converge on [{a}, {b}] after {subintervals} subintervals \
         (estimate {estimate:e}, error estimate {error_estimate:e})"
    )]
    Quadrature {
        a: f64,
        b: f64,
        subintervals: usize,
        estimate: f64,
        error_estimate: f64,
    },
}

pub type Result<T> = std::result::Result<T, SpacetimeError>;

/// Physical constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub g: f64,
    pub c: f64,
    pub hbar: f64,
}

impl Constants {
    pub const SI: Constants = Constants {
        g: 6.67430e-11,
        c: 299_792_458.0,
        hbar: 1.054_571_817e-34,
    };
}

impl Default for Constants {
    fn default() -> Self {
        Constants::SI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    #[serde(rename = "post_newtonian_1")]
    PostNewtonian1,
    ExactSchwarzschild,
}

/// A value that exists only when gravitational time dilation is present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Attainable<T> {
    Reached(T),
    /// No dilation (e.g. zero mass), so the requested order cannot be produced.
    Unattainable,
}

impl<T> Attainable<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Attainable::Reached(v) => Some(v),
            Attainable::Unattainable => None,
        }
    }

    pub fn is_reached(&self) -> bool {
        matches!(self, Attainable::Reached(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeParams {
    pub mass_kg: f64,
    pub metric_mode: MetricMode,
    pub constants: Constants,
    pub schwarzschild_radius_override_m: Option<f64>,
}

impl SpacetimeParams {
    pub fn new(mass_kg: f64, metric_mode: MetricMode) -> Result<Self> {
        let p = Self {
            mass_kg,
            metric_mode,
            constants: Constants::SI,
            schwarzschild_radius_override_m: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_schwarzschild_radius(mut self, radius_m: f64) -> Result<Self> {
        self.schwarzschild_radius_override_m = Some(radius_m);
        self.validate()?;
        Ok(self)
    }

    pub fn with_constants(mut self, constants: Constants) -> Result<Self> {
        self.constants = constants;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let Constants { g, c, hbar } = self.constants;
        for (name, v) in [("G", g), ("c", c), ("hbar", hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpacetimeError::InvalidParameter { name, value: v });
            }
        }
        if !(self.mass_kg.is_finite() && self.mass_kg >= 0.0) {
            return Err(SpacetimeError::InvalidParameter {
                name: "mass_kg",
                value: self.mass_kg,
            });
        }
        if let Some(rs) = self.schwarzschild_radius_override_m {
            if !(rs.is_finite() && rs > 0.0) {
                return Err(SpacetimeError::InvalidParameter {
                    name: "schwarzschild_radius_override_m",
                    value: rs,
                });
            }
        }
        Ok(())
    }

    /// `2GM/c²` from the constants, ignoring any override.
    pub fn formula_schwarzschild_radius(&self) -> f64 {
        2.0 * self.constants.g * self.mass_kg / (self.constants.c * self.constants.c)
    }

    /// The Schwarzschild radius in effect (override if present).
    pub fn schwarzschild_radius(&self) -> f64 {
        self.schwarzschild_radius_override_m
            .unwrap_or_else(|| self.formula_schwarzschild_radius())
    }

    /// `Φ(r)/c²`.
    pub fn potential_over_c2(&self, r: f64) -> f64 {
        -0.5 * self.schwarzschild_radius() / r
    }

    /// Smallest radius accepted by the current metric mode (exclusive).
    pub fn min_radius(&self) -> f64 {
        let rs = self.schwarzschild_radius();
        match self.metric_mode {
            MetricMode::PostNewtonian1 => rs / (2.0 * POST_NEWTONIAN_LIMIT),
            MetricMode::ExactSchwarzschild => rs,
        }
    }

    pub fn check_radius(&self, r: f64) -> Result<()> {
        if !(r.is_finite() && r > 0.0) {
            return Err(SpacetimeError::InvalidParameter {
                name: "radius_m",
                value: r,
            });
        }
        if r <= self.min_radius() {
            let reason = match self.metric_mode {
                MetricMode::PostNewtonian1 => "|Phi|/c^2 must stay below 0.1 in post-Newtonian mode",
                MetricMode::ExactSchwarzschild => "radius must lie outside the Schwarzschild radius",
            };
            return Err(SpacetimeError::OutsideValidity { radius_m: r, reason });
        }
        Ok(())
    }

    /// `−g00(r) = 1 + 2Φ/c²`, assuming `r` already validated.
    #[cfg(test)]
    pub(crate) fn lapse_squared(&self, r: f64) -> f64 {
        1.0 - self.schwarzschild_radius() / r
    }

    /// `ln(−g00(r))` with full relative precision in the weak field.
    pub(crate) fn ln_lapse_squared(&self, r: f64) -> f64 {
        (-self.schwarzschild_radius() / r).ln_1p()
    }

    /// `1 − √(Π −g00(num) / Π −g00(den))`, evaluated without cancellation.
    pub(crate) fn dilation_gap(&self, num: &[f64], den: &[f64]) -> f64 {
        let ln_q: f64 = num.iter().map(|&r| self.ln_lapse_squared(r)).sum::<f64>()
            - den.iter().map(|&r| self.ln_lapse_squared(r)).sum::<f64>();
        -(0.5 * ln_q).exp_m1()
    }
}

/// `(g00, grr)` at radius `r`.
pub fn metric_components(p: &SpacetimeParams, r: f64) -> Result<(f64, f64)> {
    p.check_radius(r)?;
    let two_phi = 2.0 * p.potential_over_c2(r);
    let (g00, grr) = match p.metric_mode {
        MetricMode::PostNewtonian1 => (-(1.0 + two_phi), 1.0 / (1.0 + two_phi)),
        MetricMode::ExactSchwarzschild => {
            let f = 1.0 - p.schwarzschild_radius() / r;
            (-f, 1.0 / f)
        }
    };
    Ok((g00, grr))
}

/// `dτ/dt = √(−g00(r))` for a static clock.
pub fn proper_time_rate(p: &SpacetimeParams, r: f64) -> Result<f64> {
    let (g00, _) = metric_components(p, r)?;
    Ok((-g00).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "K_AB")]
    AbeforeB,
    #[serde(rename = "K_BA")]
    BbeforeA,
}

/// One classical mass placement: radial coordinates of the agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassConfiguration {
    pub branch: Branch,
    pub agent_radii_m: BTreeMap<String, f64>,
}

impl MassConfiguration {
    pub fn new<I, S>(branch: Branch, radii: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self {
            branch,
            agent_radii_m: radii.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn radius(&self, agent: &str) -> Result<f64> {
        self.agent_radii_m
            .get(agent)
            .copied()
            .ok_or_else(|| SpacetimeError::UnknownAgent(agent.to_string()))
    }

    pub fn validate(&self, p: &SpacetimeParams) -> Result<()> {
        self.agent_radii_m.values().try_for_each(|&r| p.check_radius(r))
    }
}

/// An event defined by an agent's clock reading a given proper time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub agent_id: String,
    pub trigger_proper_time_s: f64,
}

impl EventSpec {
    pub fn new(agent_id: impl Into<String>, trigger_proper_time_s: f64) -> Result<Self> {
        if !(trigger_proper_time_s.is_finite() && trigger_proper_time_s > 0.0) {
            return Err(SpacetimeError::InvalidParameter {
                name: "trigger_proper_time_s",
                value: trigger_proper_time_s,
            });
        }
        Ok(Self {
            agent_id: agent_id.into(),
            trigger_proper_time_s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pn(mass: f64) -> SpacetimeParams {
        SpacetimeParams::new(mass, MetricMode::PostNewtonian1).unwrap()
    }

    #[test]
    fn asymptotically_flat() {
        let p = pn(5.97e24);
        let (g00, grr) = metric_components(&p, 1e30).unwrap();
        assert!((g00 + 1.0).abs() < 1e-20);
        assert!((grr - 1.0).abs() < 1e-20);
    }

    #[test]
    fn weak_field_substitution() {
        // Φ/c² = −0.01 ⇔ R_S/r = 0.02
        let p = pn(1.0).with_schwarzschild_radius(2.0).unwrap();
        let (g00, _) = metric_components(&p, 100.0).unwrap();
        assert!((g00 + 0.98).abs() < 1e-15);
        // −g00 = 0.81 ⇔ R_S/r = 0.19, still inside the weak-field guard at r > 5 R_S
        let p = SpacetimeParams::new(1.0, MetricMode::ExactSchwarzschild)
            .unwrap()
            .with_schwarzschild_radius(19.0)
            .unwrap();
        assert!((proper_time_rate(&p, 100.0).unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn exact_mode_at_twice_the_horizon() {
        let p = SpacetimeParams::new(1.0, MetricMode::ExactSchwarzschild)
            .unwrap()
            .with_schwarzschild_radius(3.0)
            .unwrap();
        let (g00, grr) = metric_components(&p, 6.0).unwrap();
        assert!((g00 + 0.5).abs() < 1e-15);
        assert!((grr - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_mass_rate_is_one() {
        assert_eq!(proper_time_rate(&pn(0.0), 1.0).unwrap(), 1.0);
    }

    #[test]
    fn validity_guards() {
        let p = pn(1.0).with_schwarzschild_radius(1.0).unwrap();
        assert!(matches!(
            metric_components(&p, 4.0),
            Err(SpacetimeError::OutsideValidity { .. })
        ));
        assert!(metric_components(&p, 5.0 + 1e-9).is_ok());
        let exact = SpacetimeParams {
            metric_mode: MetricMode::ExactSchwarzschild,
            ..p
        };
        assert!(metric_components(&exact, 1.5).is_ok());
        assert!(metric_components(&exact, 1.0).is_err());
        assert!(matches!(
            metric_components(&p, -1.0),
            Err(SpacetimeError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SpacetimeParams::new(-1.0, MetricMode::PostNewtonian1).is_err());
        assert!(pn(1.0).with_schwarzschild_radius(0.0).is_err());
        let bad_c = Constants { c: 0.0, ..Constants::SI };
        assert!(pn(1.0).with_constants(bad_c).is_err());
    }

    #[test]
    fn dilation_gap_matches_direct_formula_in_strong_field() {
        let p = SpacetimeParams::new(1.0, MetricMode::ExactSchwarzschild)
            .unwrap()
            .with_schwarzschild_radius(1.0)
            .unwrap();
        let direct = 1.0 - (p.lapse_squared(2.0) / p.lapse_squared(7.0)).sqrt();
        assert!((p.dilation_gap(&[2.0], &[7.0]) - direct).abs() < 1e-15);
    }

    #[test]
    fn formula_radius_of_one_milligram() {
        let rs = pn(1e-6).formula_schwarzschild_radius();
        assert!((rs / 1.485_232e-33 - 1.0).abs() < 1e-6);
    }
}
