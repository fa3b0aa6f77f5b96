//! Built-in scenarios.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use qorder_core::spacetime::MetricMode;

use crate::config::*;

pub const NAMES: [&str; 5] = [
    "appendix_b",
    "appendix_c_set1",
    "appendix_c_set2",
    "fig1_ordering",
    "fig5_photon_bounce",
];

fn named(s: &str) -> OperatorSpec {
    OperatorSpec::Named(s.into())
}

fn state(s: &str) -> StateSpec {
    StateSpec::Named(s.into())
}

fn bloch(v: [f64; 3]) -> OperatorSpec {
    OperatorSpec::Bloch(BlochVector { bloch: v })
}

fn timing(params: TimingParams, name: &str) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        preset: Some(name.into()),
        parameters: Parameters::SpacetimeTiming(params),
    }
}

fn pn(mass_kg: f64, override_m: Option<f64>) -> SpacetimeSpec {
    SpacetimeSpec {
        mass_kg,
        metric_mode: MetricMode::PostNewtonian1,
        schwarzschild_radius_override_m: override_m,
    }
}

/// Two-wing switch with `|z+⟩` inputs, `U_A = (I + iσ_x)/√2`, `U_B = σ_z`
/// and settings `C₁ = (σ_y ∓ σ_z)/√2`, `C₂ ∈ {σ_y, σ_z}`.
fn appendix_b() -> ScenarioConfig {
    let h = FRAC_1_SQRT_2;
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        preset: Some("appendix_b".into()),
        parameters: Parameters::BellProtocol(BellParams {
            initial: [state("z+"), state("z+")],
            u_a: named("sqrt_x_phase"),
            u_b: named("sigma_z"),
            settings: SettingsSpec {
                c1: [bloch([0.0, h, -h]), bloch([0.0, h, h])],
                c2: [named("sigma_y"), named("sigma_z")],
            },
            control: ControlSpec::default(),
            reference_chsh: Some([-2.0 * SQRT_2, 2.0 * SQRT_2]),
        }),
    }
}

/// 1 mg, `r = 10¹⁰ R_S`, `L = 5r`, `h = r` with `R_S` taken as 1e-30 m.
fn appendix_c_set1() -> ScenarioConfig {
    timing(
        TimingParams {
            spacetime: pn(1e-6, Some(1e-30)),
            ordering: None,
            appendix_c: Some(AppendixCSpec {
                r_m: 1e-20,
                l_m: 5e-20,
                h_m: 1e-20,
                reference_t_p_s: Some(7e-18),
                compare_formula_rs: true,
            }),
            diosi_penrose: vec![DiosiPenroseSpec {
                delta_m: 1e-7,
                mass_kg: None,
                l_m: None,
                reference_s: Some(0.5),
            }],
            photon_bounce: None,
            near_horizon: None,
        },
        "appendix_c_set1",
    )
}

/// 0.1 µg, `r = 10⁷ R_S`, `L = 5·10⁵ r`, `h = 10⁵ r`. `R_S` is scaled from
/// the formula value by the same factor as in the first set (1e-34 m).
fn appendix_c_set2() -> ScenarioConfig {
    timing(
        TimingParams {
            spacetime: pn(1e-10, Some(1e-34)),
            ordering: None,
            appendix_c: Some(AppendixCSpec {
                r_m: 1e-27,
                l_m: 5e-22,
                h_m: 1e-22,
                reference_t_p_s: Some(1e-23),
                compare_formula_rs: true,
            }),
            diosi_penrose: vec![DiosiPenroseSpec {
                delta_m: 1e-15,
                mass_kg: None,
                l_m: None,
                reference_s: Some(1e-13),
            }],
            photon_bounce: None,
            near_horizon: None,
        },
        "appendix_c_set2",
    )
}

/// Earth-mass body, clocks 1 km apart near its surface, `τ*` about twice the
/// ordering threshold.
fn fig1_ordering() -> ScenarioConfig {
    timing(
        TimingParams {
            spacetime: pn(5.972e24, None),
            ordering: Some(OrderingSpec {
                r_a_m: 6.372e6,
                r_b_m: 6.371e6,
                trigger_proper_time_s: Some(6.0e7),
            }),
            appendix_c: None,
            diosi_penrose: Vec::new(),
            photon_bounce: None,
            near_horizon: None,
        },
        "fig1_ordering",
    )
}

/// Solar-mass body in the exact metric: `a` at about `R_S + 10⁻³R_S` or
/// `10 R_S`, photon path 1 km long far from the mass.
fn fig5_photon_bounce() -> ScenarioConfig {
    timing(
        TimingParams {
            spacetime: SpacetimeSpec {
                mass_kg: 1.989e30,
                metric_mode: MetricMode::ExactSchwarzschild,
                schwarzschild_radius_override_m: None,
            },
            ordering: None,
            appendix_c: None,
            diosi_penrose: Vec::new(),
            photon_bounce: Some(BounceSpec {
                r_a_near_m: 2957.0,
                r_a_far_m: 29540.0,
                propagation_r_a_m: 1.001e6,
                propagation_r_b_m: 1.0e6,
            }),
            near_horizon: Some(NearHorizonSpec {
                epsilon_m: 2.9,
                l_m: 3.0e4,
            }),
        },
        "fig5_photon_bounce",
    )
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    Some(match name {
        "appendix_b" => appendix_b(),
        "appendix_c_set1" => appendix_c_set1(),
        "appendix_c_set2" => appendix_c_set2(),
        "fig1_ordering" => fig1_ordering(),
        "fig5_photon_bounce" => fig5_photon_bounce(),
        _ => return None,
    })
}
