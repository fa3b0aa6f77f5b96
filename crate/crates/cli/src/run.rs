//! Scenario execution.

use std::f64::consts::SQRT_2;

use qorder_core::bell::{
    chsh_value, classical_chsh_sweep, correlators, exhaustive_deterministic_bound, optimal_chsh,
    MeasurementSettings, SweepOptions, CLASSICAL_BOUND_TOL,
};
use qorder_core::procmat::{
    entangled_order_process, fixed_order_process, nonseparability_certificate, signalling_strength,
    switch_process, ProcessError, ProcessMatrix, PROBABILITY_TOL, SIGNALLING_THRESHOLD,
};
use qorder_core::qcore::{
    entanglement_entropy, partial_trace, trace_distance, QError, StateVector, CONDITIONING_TOL,
    STRUCTURAL_TOL,
};
use qorder_core::spacetime::{
    appendix_c_times, arrival_local_time, classify_order, design_bounce_protocol, diosi_penrose_time,
    light_coordinate_time, near_horizon_rate_ratio, photon_schedule, tau_star_threshold, Branch,
    Constants, EventSpec, MassConfiguration, SpacetimeParams, COINCIDENCE_REL_TOL, POST_NEWTONIAN_LIMIT,
    QUADRATURE_REL_TOL,
};
use qorder_core::switch::{
    condition_on_mass, order_orthogonality, reduced_target, MassOutcome, OrderSource, SwitchError,
    SwitchScenario, Wing, CONTROL,
};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::*;
use crate::error::{domain, CliError, Result};
use crate::oracle;
use crate::resolve;

pub const GENERATOR: &str = "qorder";

/// A finished run: the echoed configuration, its hash, the per-kind result
/// block and the constants and tolerances used.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub kind: Kind,
    pub config: Value,
    pub config_sha256: String,
    pub result: Value,
}

impl ScenarioReport {
    pub fn to_value(&self) -> Value {
        json!({
            "kind": self.kind.name(),
            "config": self.config,
            "config_sha256": self.config_sha256,
            "result": self.result,
            "provenance": provenance(),
        })
    }
}

pub fn provenance() -> Value {
    let c = Constants::SI;
    json!({
        "constants": {"g_m3_per_kg_s2": c.g, "c_m_per_s": c.c, "hbar_j_s": c.hbar},
        "tolerances": {
            "structural": STRUCTURAL_TOL,
            "conditioning": CONDITIONING_TOL,
            "quadrature_relative": QUADRATURE_REL_TOL,
            "post_newtonian_max_potential": POST_NEWTONIAN_LIMIT,
            "coincidence_relative": COINCIDENCE_REL_TOL,
            "classical_bound": CLASSICAL_BOUND_TOL,
            "signalling_threshold": SIGNALLING_THRESHOLD,
            "probability": PROBABILITY_TOL,
        },
        "generator": {"name": GENERATOR, "version": env!("CARGO_PKG_VERSION")},
    })
}

/// Hex SHA-256 of the compact canonical JSON of `v`.
pub fn sha256_hex(v: &Value) -> String {
    let text = serde_json::to_string(v).expect("values serialise");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report records serialise")
}

fn state_json(s: &StateVector) -> Value {
    let amps: Vec<[f64; 2]> = s.amplitudes().iter().map(|z| [z.re, z.im]).collect();
    json!({"labels": s.labels(), "amplitudes": amps})
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let result = match &cfg.parameters {
        Parameters::Switch(p) => run_switch(p)?,
        Parameters::BellProtocol(p) => run_bell(p)?,
        Parameters::ClassicalBound(p) => run_classical(p)?,
        Parameters::SpacetimeTiming(p) => run_timing(p)?,
        Parameters::ProcessCheck(p) => run_process(p)?,
    };
    let config = cfg.to_value();
    Ok(ScenarioReport {
        kind: cfg.kind(),
        config_sha256: sha256_hex(&config),
        config,
        result,
    })
}

/// `Some((p, state))`, or `None` with the probability when the outcome is null.
fn condition(sc: &SwitchScenario, sign: MassOutcome) -> Result<(f64, Option<StateVector>)> {
    match condition_on_mass(sc, sign) {
        Ok((p, s)) => Ok((p, Some(s))),
        Err(SwitchError::Quantum(QError::ZeroProbability(p))) => Ok((p, None)),
        Err(e) => Err(domain(e)),
    }
}

fn relation_name(r: qorder_core::spacetime::OrderRelation) -> Value {
    to_json(&r)
}

fn run_switch(p: &SwitchParams) -> Result<Value> {
    if p.wings.is_empty() {
        return Err(CliError::config("/parameters/wings", "at least one wing is required"));
    }
    let mut wings = Vec::new();
    for (i, w) in p.wings.iter().enumerate() {
        let ptr = format!("/parameters/wings/{i}");
        if w.label == CONTROL {
            return Err(CliError::config(format!("{ptr}/label"), format!("label `{CONTROL}` is reserved for the control")));
        }
        let s = resolve::state(&w.initial, &w.label, &format!("{ptr}/initial"))?;
        let ua = resolve::operator(&w.u_a, &w.label, &format!("{ptr}/u_a"))?;
        let ub = resolve::operator(&w.u_b, &w.label, &format!("{ptr}/u_b"))?;
        wings.push(Wing::new(s, ua, ub).map_err(domain)?);
    }
    let control = resolve::control(&p.control, "/parameters/control")?;
    let overlaps: Vec<f64> = wings
        .iter()
        .map(|w| order_orthogonality(&w.u_a, &w.u_b, &w.initial))
        .collect::<std::result::Result<_, _>>()
        .map_err(domain)?;

    let mut classification = Value::Null;
    let source = match &p.order_source {
        OrderSourceSpec::Explicit => OrderSource::Explicit,
        OrderSourceSpec::FromSpacetime {
            spacetime,
            k_ab_radii_m,
            k_ba_radii_m,
            events,
        } => {
            let params = resolve::spacetime(spacetime)?;
            let k_ab = MassConfiguration::new(Branch::AbeforeB, k_ab_radii_m.clone());
            let k_ba = MassConfiguration::new(Branch::BbeforeA, k_ba_radii_m.clone());
            let mut pairs = Vec::new();
            let mut records = Vec::new();
            for [a, b] in events {
                let ea = EventSpec::new(a.agent_id.clone(), a.trigger_proper_time_s).map_err(domain)?;
                let eb = EventSpec::new(b.agent_id.clone(), b.trigger_proper_time_s).map_err(domain)?;
                let oab = classify_order(&params, &k_ab, &ea, &eb).map_err(domain)?;
                let oba = classify_order(&params, &k_ba, &ea, &eb).map_err(domain)?;
                records.push(json!({"k_ab": to_json(&oab), "k_ba": to_json(&oba)}));
                pairs.push((ea, eb));
            }
            classification = Value::Array(records);
            OrderSource::FromSpacetime {
                params,
                k_ab,
                k_ba,
                events: pairs,
            }
        }
    };
    let sc = SwitchScenario::new(wings, control, source).map_err(domain)?;
    let n = sc.wings().len();
    let orders = |b: Branch| -> Vec<Value> { (0..n).map(|j| relation_name(sc.order(b, j))).collect() };

    let joint = sc.joint_state().map_err(domain)?;
    let traced = partial_trace(&joint.to_density(), &[CONTROL]).map_err(domain)?;
    let mixture = reduced_target(&sc).map_err(domain)?;
    let labels: Vec<String> = p.wings.iter().map(|w| w.label.clone()).collect();

    let mut outcomes = Vec::new();
    for sign in MassOutcome::BOTH {
        let (prob, state) = condition(&sc, sign)?;
        let mut rec = json!({"z": sign.symbol(), "probability": prob});
        if let Some(s) = state {
            rec["state"] = state_json(&s);
            if n >= 2 {
                rec["first_wing_entropy_bits"] =
                    json!(entanglement_entropy(&s, &[&labels[0]]).map_err(domain)?);
            }
        } else {
            rec["state"] = Value::Null;
        }
        outcomes.push(rec);
    }
    Ok(json!({
        "wings": n,
        "orders": {"k_ab": orders(Branch::AbeforeB), "k_ba": orders(Branch::BbeforeA)},
        "order_overlap": overlaps,
        "spacetime_classification": classification,
        "joint_state": state_json(&joint),
        "control_entropy_bits": entanglement_entropy(&joint, &[CONTROL]).map_err(domain)?,
        "reduced_vs_mixture_trace_distance": trace_distance(&traced, &mixture).map_err(domain)?,
        "outcomes": outcomes,
    }))
}

fn run_bell(p: &BellParams) -> Result<Value> {
    let labels = ["S1", "S2"];
    let mut wings = Vec::new();
    for (k, label) in labels.iter().enumerate() {
        let s = resolve::state(&p.initial[k], label, &format!("/parameters/initial/{k}"))?;
        let ua = resolve::operator(&p.u_a, label, "/parameters/u_a")?;
        let ub = resolve::operator(&p.u_b, label, "/parameters/u_b")?;
        wings.push(Wing::new(s, ua, ub).map_err(domain)?);
    }
    let control = resolve::control(&p.control, "/parameters/control")?;
    let sc = SwitchScenario::new(wings, control, OrderSource::Explicit).map_err(domain)?;
    let m = |spec: &OperatorSpec, name: &str, i: usize| {
        resolve::matrix(spec, &format!("/parameters/settings/{name}/{i}"))
    };
    let s = &p.settings;
    let settings = MeasurementSettings::new([
        [m(&s.c1[0], "c1", 0)?, m(&s.c1[1], "c1", 1)?],
        [m(&s.c2[0], "c2", 0)?, m(&s.c2[1], "c2", 1)?],
    ])
    .map_err(|e| CliError::config("/parameters/settings", e.to_string()))?;

    let mut outcomes = Vec::new();
    let mut chsh = [Value::Null, Value::Null];
    for (k, sign) in MassOutcome::BOTH.into_iter().enumerate() {
        let (prob, state) = condition(&sc, sign)?;
        let mut rec = json!({"z": sign.symbol(), "probability": prob});
        match state {
            Some(st) => {
                let rho = st.to_density();
                let value = chsh_value(&rho, &settings).map_err(domain)?;
                let opt = optimal_chsh(&rho).map_err(domain)?;
                rec["chsh"] = json!(value);
                rec["correlators"] = json!(correlators(&rho, &settings).map_err(domain)?);
                rec["optimal_chsh"] = json!(opt.value);
                rec["optimal_bloch_vectors"] = json!(opt.bloch_vectors);
                rec["entanglement_entropy_bits"] = json!(entanglement_entropy(&st, &["S1"]).map_err(domain)?);
                rec["state"] = state_json(&st);
                chsh[k] = json!(value);
            }
            None => {
                rec["chsh"] = Value::Null;
                rec["state"] = Value::Null;
            }
        }
        outcomes.push(rec);
    }
    let rho = reduced_target(&sc).map_err(domain)?;
    let [plus, minus] = chsh;
    let mut out = json!({
        "outcomes": outcomes,
        "chsh_plus": plus,
        "chsh_minus": minus,
        "unconditioned_chsh": chsh_value(&rho, &settings).map_err(domain)?,
        "unconditioned_optimal_chsh": optimal_chsh(&rho).map_err(domain)?.value,
        "classical_bound": 2.0,
        "tsirelson_bound": 2.0 * SQRT_2,
    });
    if let Some([rp, rm]) = p.reference_chsh {
        let diff = |v: &Value, r: f64| v.as_f64().map(|x| (x - r).abs());
        out["reference_values"] = json!({
            "chsh_plus": rp,
            "chsh_minus": rm,
            "chsh_plus_abs_difference": diff(&out["chsh_plus"], rp),
            "chsh_minus_abs_difference": diff(&out["chsh_minus"], rm),
        });
    }
    Ok(out)
}

fn run_classical(p: &ClassicalBoundParams) -> Result<Value> {
    let opts = SweepOptions {
        max_support: p.max_support,
        extremal_fraction: p.extremal_fraction,
        joint_order: p.joint_order,
        z_mode: p.z_mode,
    };
    let sweep = classical_chsh_sweep(p.models, p.seed, &opts).map_err(domain)?;
    let bound = exhaustive_deterministic_bound();
    Ok(json!({
        "exhaustive_deterministic_bound": bound,
        "sweep": to_json(&sweep),
        "tolerance": CLASSICAL_BOUND_TOL,
        "within_bound": sweep.max_abs_chsh <= 2.0 + CLASSICAL_BOUND_TOL,
    }))
}

fn ratio(x: f64, reference: Option<f64>) -> Value {
    match reference {
        Some(r) => json!(x / r),
        None => Value::Null,
    }
}

fn ordering_block(p: &SpacetimeParams, o: &OrderingSpec) -> Result<Value> {
    let (ra, rb) = (o.r_a_m, o.r_b_m);
    let light = light_coordinate_time(p, ra, rb).map_err(domain)?;
    let threshold = tau_star_threshold(p, ra, rb).map_err(domain)?;
    let gm = 0.5 * p.schwarzschild_radius() * p.constants.c * p.constants.c;
    let leading = ra * ra * p.constants.c / gm;
    let mut out = json!({
        "r_a_m": ra,
        "r_b_m": rb,
        "light_time_s": light,
        "threshold_attainable": threshold.is_reached(),
        "tau_star_threshold_s": threshold.value(),
        "weak_field_leading_s": leading,
        "weak_field_reference_s": 2.0 * leading,
    });
    if let Some(t) = threshold.value() {
        let arrival = arrival_local_time(p, ra, rb, t).map_err(domain)?;
        out["threshold_arrival_relative_error"] = json!((arrival / t - 1.0).abs());
        out["leading_over_threshold"] = json!(leading / t);
    }
    if let Some(tau) = o.trigger_proper_time_s {
        let ea = EventSpec::new("a", tau).map_err(domain)?;
        let eb = EventSpec::new("b", tau).map_err(domain)?;
        let k_ab = MassConfiguration::new(Branch::AbeforeB, [("a", ra), ("b", rb)]);
        let k_ba = MassConfiguration::new(Branch::BbeforeA, [("a", rb), ("b", ra)]);
        out["trigger_proper_time_s"] = json!(tau);
        out["k_ab"] = to_json(&classify_order(p, &k_ab, &ea, &eb).map_err(domain)?);
        out["k_ba"] = to_json(&classify_order(p, &k_ba, &ea, &eb).map_err(domain)?);
    }
    Ok(out)
}

fn appendix_c_block(p: &SpacetimeParams, spec: &SpacetimeSpec, c: &AppendixCSpec) -> Result<Value> {
    let times = appendix_c_times(p, c.r_m, c.l_m, c.h_m).map_err(domain)?;
    let mut out = json!({
        "r_m": c.r_m,
        "l_m": c.l_m,
        "h_m": c.h_m,
        "attainable": times.is_reached(),
        "times_s": times.value().map(|t| to_json(&t)),
        "reference_t_p_s": c.reference_t_p_s,
        "t_p_over_reference": times.value().map(|t| ratio(t.t_p, c.reference_t_p_s)),
    });
    if c.compare_formula_rs && spec.schwarzschild_radius_override_m.is_some() {
        let formula = SpacetimeParams::new(spec.mass_kg, spec.metric_mode).map_err(domain)?;
        let k = formula.schwarzschild_radius() / p.schwarzschild_radius();
        let (r, l, h) = (c.r_m * k, c.l_m * k, c.h_m * k);
        let t = appendix_c_times(&formula, r, l, h).map_err(domain)?;
        out["formula_rs"] = json!({
            "scale_factor": k,
            "r_m": r,
            "l_m": l,
            "h_m": h,
            "attainable": t.is_reached(),
            "times_s": t.value().map(|t| to_json(&t)),
            "t_p_over_reference": t.value().map(|t| ratio(t.t_p, c.reference_t_p_s)),
        });
    }
    Ok(out)
}

fn bounce_block(p: &SpacetimeParams, b: &BounceSpec) -> Result<Value> {
    let design = design_bounce_protocol(p, b.r_a_near_m, b.r_a_far_m, b.propagation_r_a_m, b.propagation_r_b_m)
        .map_err(domain)?;
    let Some(d) = design.value() else {
        return Ok(json!({"attainable": false}));
    };
    let ea = EventSpec::new("a", d.tau_star_s).map_err(domain)?;
    let eb = EventSpec::new("b", d.tau_star_s).map_err(domain)?;
    let t0 = d.emission_coordinate_time_s;
    let (pa, pb) = (b.propagation_r_a_m, b.propagation_r_b_m);
    let ab = photon_schedule(p, &d.k_ab, pa, pb, t0, &ea, &eb).map_err(domain)?;
    let ba = photon_schedule(p, &d.k_ba, pa, pb, t0, &ea, &eb).map_err(domain)?;
    let spread = ab
        .arrivals
        .iter()
        .zip(&ba.arrivals)
        .map(|(x, y)| (x.coordinate_time_s - y.coordinate_time_s).abs() / x.coordinate_time_s)
        .fold(0.0f64, f64::max);
    Ok(json!({
        "attainable": true,
        "design": to_json(&d),
        "k_ab": to_json(&ab),
        "k_ba": to_json(&ba),
        "operation_bounce": {
            "k_ab": {"a": ab.operation_bounce("a"), "b": ab.operation_bounce("b")},
            "k_ba": {"a": ba.operation_bounce("a"), "b": ba.operation_bounce("b")},
        },
        "arrival_time_relative_spread": spread,
    }))
}

fn run_timing(t: &TimingParams) -> Result<Value> {
    let p = resolve::spacetime(&t.spacetime)?;
    let mut out = json!({
        "schwarzschild_radius_m": p.schwarzschild_radius(),
        "formula_schwarzschild_radius_m": p.formula_schwarzschild_radius(),
        "schwarzschild_radius_override_m": t.spacetime.schwarzschild_radius_override_m,
    });
    if let Some(o) = &t.ordering {
        out["ordering"] = ordering_block(&p, o)?;
    }
    if let Some(c) = &t.appendix_c {
        out["appendix_c"] = appendix_c_block(&p, &t.spacetime, c)?;
    }
    if !t.diosi_penrose.is_empty() {
        let mut records = Vec::new();
        for (i, d) in t.diosi_penrose.iter().enumerate() {
            let mass = d.mass_kg.unwrap_or(t.spacetime.mass_kg);
            let l = d.l_m.or(t.appendix_c.as_ref().map(|c| c.l_m)).ok_or_else(|| {
                CliError::config(
                    format!("/parameters/diosi_penrose/{i}/l_m"),
                    "l_m is required when there is no appendix_c block",
                )
            })?;
            let time = diosi_penrose_time(d.delta_m, mass, l, &p.constants).map_err(domain)?;
            records.push(json!({
                "delta_m": d.delta_m,
                "mass_kg": mass,
                "l_m": l,
                "t_dp_s": time,
                "reference_s": d.reference_s,
                "over_reference": ratio(time, d.reference_s),
            }));
        }
        out["diosi_penrose"] = Value::Array(records);
    }
    if let Some(b) = &t.photon_bounce {
        out["photon_bounce"] = bounce_block(&p, b)?;
    }
    if let Some(n) = &t.near_horizon {
        let r = near_horizon_rate_ratio(&p, n.epsilon_m, n.l_m).map_err(domain)?;
        out["near_horizon"] = json!({
            "epsilon_m": n.epsilon_m,
            "l_m": n.l_m,
            "approximate": r.approximate,
            "exact": r.exact,
            "relative_error": r.relative_error(),
        });
    }
    Ok(out)
}

fn build_process(p: &ProcessParams) -> Result<ProcessMatrix> {
    let psi = resolve::state(&p.initial, "q", "/parameters/initial")?;
    let control = resolve::control(&p.control, "/parameters/control")?;
    let w = match p.process {
        ProcessKind::Switch => switch_process(&psi, control),
        ProcessKind::EntangledOrder => {
            let psi2 = resolve::state(&p.initial_2, "q", "/parameters/initial_2")?;
            entangled_order_process(&psi, &psi2, control)
        }
        ProcessKind::FixedOrder => {
            let order = p.order.as_deref().unwrap_or("A<B<C");
            return fixed_order_process(&psi.to_density(), order).map_err(|e| match e {
                ProcessError::BadOrder(_) => CliError::config("/parameters/order", e.to_string()),
                e => domain(e),
            });
        }
        ProcessKind::FixedOrderMixture => {
            let w = p.mixture_weight;
            if !(0.0..=1.0).contains(&w) {
                return Err(CliError::config("/parameters/mixture_weight", format!("{w} is not in [0, 1]")));
            }
            let rho = psi.to_density();
            let ab = fixed_order_process(&rho, "A<B<C").map_err(domain)?;
            let ba = fixed_order_process(&rho, "B<A<C").map_err(domain)?;
            ProcessMatrix::mixture(&[(w, &ab), (1.0 - w, &ba)])
        }
    };
    w.map_err(domain)
}

fn run_process(p: &ProcessParams) -> Result<Value> {
    let w = build_process(p)?;
    let cert = nonseparability_certificate(&w).map_err(domain)?;
    let parties: Vec<String> = w
        .parties()
        .into_iter()
        .filter(|x| w.has_slot(&format!("{x}_I")) && w.has_slot(&format!("{x}_O")))
        .collect();
    let mut signalling = Vec::new();
    for from in &parties {
        for to in parties.iter().filter(|t| *t != from) {
            let s = signalling_strength(&w, from, to).map_err(domain)?;
            signalling.push(json!({"from": from, "to": to, "strength": s}));
        }
    }
    let spectrum: Vec<f64> = w.spectrum().into_iter().filter(|&x| x > STRUCTURAL_TOL).collect();

    let mut worst = 0.0f64;
    if p.random_instances > 0 {
        let psi = resolve::state(&p.initial, "q", "/parameters/initial")?;
        let control = resolve::control(&p.control, "/parameters/control")?;
        let psi2 = resolve::state(&p.initial_2, "q", "/parameters/initial_2")?;
        let rho = psi.to_density();
        let order = p.order.as_deref().unwrap_or("A<B<C");
        for i in 0..p.random_instances {
            let mut rng = oracle::instance_rng(p.seed, i);
            let d = match p.process {
                ProcessKind::Switch => oracle::switch_deviation(&w, &psi, control, &mut rng)?,
                ProcessKind::EntangledOrder => oracle::entangled_deviation(&w, [&psi, &psi2], control, &mut rng)?,
                ProcessKind::FixedOrder => oracle::fixed_order_deviation(&w, &rho, order, &mut rng)?,
                ProcessKind::FixedOrderMixture => oracle::mixture_deviation(&w, &rho, p.mixture_weight, &mut rng)?,
            };
            worst = worst.max(d);
        }
    }
    Ok(json!({
        "slots": w.slots(),
        "dim": w.dim(),
        "trace": w.trace(),
        "rank": w.rank(),
        "spectrum": spectrum,
        "certificate": to_json(&cert),
        "signalling": signalling,
        "oracle": {
            "instances": p.random_instances,
            "seed": p.seed,
            "max_abs_deviation": worst,
        },
    }))
}
