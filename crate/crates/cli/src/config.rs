//! Scenario configuration: strict JSON parsing, unit-suffix checks and preset
//! expansion.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::presets;
use qorder_core::spacetime::MetricMode;

pub const SCHEMA_VERSION: u32 = 1;

/// Suffixes accepted on fields holding a physical quantity.
pub const UNIT_SUFFIXES: [&str; 3] = ["_m", "_kg", "_s"];

/// Field names (or trailing name segments) that denote a dimensionful
/// quantity and therefore need a unit suffix.
const PHYSICAL_STEMS: [&str; 20] = [
    "radius", "radii", "mass", "distance", "length", "height", "separation", "time", "duration",
    "period", "tau", "delta", "epsilon", "r", "h", "l", "r_a", "r_b", "t", "rs",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Switch,
    BellProtocol,
    ClassicalBound,
    SpacetimeTiming,
    ProcessCheck,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Switch => "switch",
            Kind::BellProtocol => "bell_protocol",
            Kind::ClassicalBound => "classical_bound",
            Kind::SpacetimeTiming => "spacetime_timing",
            Kind::ProcessCheck => "process_check",
        }
    }
}

/// Complex number written as `[re, im]`.
pub type ComplexSpec = [f64; 2];

/// A single-qubit state: a name (`z+`, `x-`, `y+`, …, `0`, `1`) or explicit
/// amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Explicit(ExplicitState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitState {
    pub amplitudes: Vec<ComplexSpec>,
}

/// A single-qubit operator: a gate name, an explicit matrix (rows of
/// `[re, im]`), or `n·σ` from a Bloch vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Named(String),
    Matrix(ExplicitMatrix),
    Bloch(BlochVector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitMatrix {
    pub matrix: Vec<Vec<ComplexSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochVector {
    pub bloch: [f64; 3],
}

/// Amplitudes of `|K_AB⟩` and `|K_BA⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub alpha: ComplexSpec,
    pub beta: ComplexSpec,
}

impl Default for ControlSpec {
    fn default() -> Self {
        Self {
            alpha: [FRAC_1_SQRT_2, 0.0],
            beta: [FRAC_1_SQRT_2, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacetimeSpec {
    pub mass_kg: f64,
    pub metric_mode: MetricMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schwarzschild_radius_override_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WingSpec {
    pub label: String,
    pub initial: StateSpec,
    pub u_a: OperatorSpec,
    pub u_b: OperatorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub agent_id: String,
    pub trigger_proper_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrderSourceSpec {
    #[default]
    Explicit,
    FromSpacetime {
        spacetime: SpacetimeSpec,
        k_ab_radii_m: BTreeMap<String, f64>,
        k_ba_radii_m: BTreeMap<String, f64>,
        /// One `[A_j, B_j]` pair per wing.
        events: Vec<[EventConfig; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchParams {
    pub wings: Vec<WingSpec>,
    #[serde(default)]
    pub control: ControlSpec,
    #[serde(default)]
    pub order_source: OrderSourceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsSpec {
    /// `[C₁⁰, C₁¹]`
    pub c1: [OperatorSpec; 2],
    /// `[C₂⁰, C₂¹]`
    pub c2: [OperatorSpec; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellParams {
    pub initial: [StateSpec; 2],
    pub u_a: OperatorSpec,
    pub u_b: OperatorSpec,
    pub settings: SettingsSpec,
    #[serde(default)]
    pub control: ControlSpec,
    /// Expected `[CHSH₊, CHSH₋]` reported next to the computed values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_chsh: Option<[f64; 2]>,
}

fn default_max_support() -> usize {
    qorder_core::bell::MAX_SUPPORT
}

fn default_extremal_fraction() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalBoundParams {
    pub models: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_support")]
    pub max_support: usize,
    #[serde(default = "default_extremal_fraction")]
    pub extremal_fraction: f64,
    #[serde(default)]
    pub joint_order: bool,
    #[serde(default = "default_z_mode")]
    pub z_mode: qorder_core::bell::ZMode,
}

fn default_z_mode() -> qorder_core::bell::ZMode {
    qorder_core::bell::ZMode::Correlated
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderingSpec {
    /// Emitter `a`, farther from the mass in `K_AB`.
    pub r_a_m: f64,
    pub r_b_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_proper_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixCSpec {
    pub r_m: f64,
    pub l_m: f64,
    pub h_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_t_p_s: Option<f64>,
    /// Also evaluate the geometry rescaled to the formula `R_S` without the
    /// override.
    #[serde(default)]
    pub compare_formula_rs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiosiPenroseSpec {
    pub delta_m: f64,
    /// Defaults to the scenario mass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    /// Defaults to `appendix_c.l_m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BounceSpec {
    pub r_a_near_m: f64,
    pub r_a_far_m: f64,
    pub propagation_r_a_m: f64,
    pub propagation_r_b_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearHorizonSpec {
    pub epsilon_m: f64,
    pub l_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingParams {
    pub spacetime: SpacetimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<OrderingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appendix_c: Option<AppendixCSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diosi_penrose: Vec<DiosiPenroseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_bounce: Option<BounceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub near_horizon: Option<NearHorizonSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Switch,
    EntangledOrder,
    FixedOrder,
    /// Convex mixture of `A<B<C` and `B<A<C`.
    FixedOrderMixture,
}

fn z_plus() -> StateSpec {
    StateSpec::Named("z+".into())
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessParams {
    pub process: ProcessKind,
    #[serde(default = "z_plus")]
    pub initial: StateSpec,
    /// Second wing input for `entangled_order`.
    #[serde(default = "z_plus")]
    pub initial_2: StateSpec,
    /// Order string such as `A<B<C` for `fixed_order`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
    #[serde(default)]
    pub control: ControlSpec,
    /// Weight of `A<B<C` in `fixed_order_mixture`.
    #[serde(default = "half")]
    pub mixture_weight: f64,
    /// Random local operations to compare against an independent simulation.
    #[serde(default)]
    pub random_instances: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parameters {
    Switch(SwitchParams),
    BellProtocol(BellParams),
    ClassicalBound(ClassicalBoundParams),
    SpacetimeTiming(TimingParams),
    ProcessCheck(ProcessParams),
}

impl Parameters {
    pub fn kind(&self) -> Kind {
        match self {
            Parameters::Switch(_) => Kind::Switch,
            Parameters::BellProtocol(_) => Kind::BellProtocol,
            Parameters::ClassicalBound(_) => Kind::ClassicalBound,
            Parameters::SpacetimeTiming(_) => Kind::SpacetimeTiming,
            Parameters::ProcessCheck(_) => Kind::ProcessCheck,
        }
    }

    fn to_value(&self) -> Value {
        let v = match self {
            Parameters::Switch(p) => serde_json::to_value(p),
            Parameters::BellProtocol(p) => serde_json::to_value(p),
            Parameters::ClassicalBound(p) => serde_json::to_value(p),
            Parameters::SpacetimeTiming(p) => serde_json::to_value(p),
            Parameters::ProcessCheck(p) => serde_json::to_value(p),
        };
        v.expect("parameter records serialise")
    }

    fn from_value(kind: Kind, v: Value) -> Result<Self> {
        Ok(match kind {
            Kind::Switch => Parameters::Switch(typed(v, "/parameters")?),
            Kind::BellProtocol => Parameters::BellProtocol(typed(v, "/parameters")?),
            Kind::ClassicalBound => Parameters::ClassicalBound(typed(v, "/parameters")?),
            Kind::SpacetimeTiming => Parameters::SpacetimeTiming(typed(v, "/parameters")?),
            Kind::ProcessCheck => Parameters::ProcessCheck(typed(v, "/parameters")?),
        })
    }
}

/// A validated scenario. `preset` records where the parameters came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub preset: Option<String>,
    pub parameters: Parameters,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    kind: Kind,
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    parameters: Option<Value>,
}

impl ScenarioConfig {
    pub fn kind(&self) -> Kind {
        self.parameters.kind()
    }

    /// Canonical JSON form; keys are sorted.
    pub fn to_value(&self) -> Value {
        let mut m = serde_json::Map::new();
        m.insert("schema_version".into(), Value::from(self.schema_version));
        m.insert("kind".into(), Value::from(self.kind().name()));
        if let Some(p) = &self.preset {
            m.insert("preset".into(), Value::from(p.clone()));
        }
        m.insert("parameters".into(), self.parameters.to_value());
        Value::Object(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("values serialise")
    }

    /// Replaces the seed of stochastic scenarios.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self.parameters {
            Parameters::ClassicalBound(p) => p.seed = seed,
            Parameters::ProcessCheck(p) => p.seed = seed,
            _ => {}
        }
        self
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

fn typed<T: DeserializeOwned>(v: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let pointer = format!("{prefix}{}", pointer_of(e.path()));
        CliError::config(pointer, e.into_inner().to_string())
    })
}

fn is_physical(key: &str) -> bool {
    let k = key.to_ascii_lowercase();
    if UNIT_SUFFIXES.iter().any(|s| k.ends_with(s)) {
        return false;
    }
    PHYSICAL_STEMS
        .iter()
        .any(|s| k == *s || k.ends_with(&format!("_{s}")))
}

fn is_numeric(v: &Value) -> bool {
    match v {
        Value::Number(_) => true,
        Value::Array(a) => !a.is_empty() && a.iter().all(is_numeric),
        _ => false,
    }
}

/// Rejects numeric keys that name a physical quantity without a unit suffix.
fn check_units(v: &Value, pointer: &str) -> Result<()> {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                let p = format!("{pointer}/{}", k.replace('~', "~0").replace('/', "~1"));
                if is_physical(k) && is_numeric(child) {
                    return Err(CliError::config(
                        p,
                        format!("field `{k}` is a physical quantity without a unit suffix (expected one of _m, _kg, _s)"),
                    ));
                }
                // map keys of radii tables are agent ids, not field names
                if !k.ends_with("_radii_m") {
                    check_units(child, &p)?;
                }
            }
            Ok(())
        }
        Value::Array(a) => a
            .iter()
            .enumerate()
            .try_for_each(|(i, x)| check_units(x, &format!("{pointer}/{i}"))),
        _ => Ok(()),
    }
}

/// Parses and validates a scenario. A `preset` without `parameters` is
/// expanded; explicit `parameters` always win.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::config("/", format!("invalid JSON: {e}")))?;
    parse_value(value)
}

pub fn parse_value(value: Value) -> Result<ScenarioConfig> {
    if let Some(v) = value.get("schema_version") {
        if v.as_u64() != Some(SCHEMA_VERSION as u64) {
            return Err(CliError::config(
                "/schema_version",
                format!("unsupported schema_version {v}; this build reads version {SCHEMA_VERSION}"),
            ));
        }
    }
    check_units(&value, "")?;
    let raw: RawConfig = typed(value, "")?;
    let params = match (raw.parameters, &raw.preset) {
        (Some(p), _) => p,
        (None, Some(name)) => {
            let preset = presets::preset(name)
                .ok_or_else(|| CliError::config("/preset", format!("unknown preset `{name}`")))?;
            if preset.kind() != raw.kind {
                return Err(CliError::config(
                    "/kind",
                    format!("preset `{name}` has kind {}, config says {}", preset.kind().name(), raw.kind.name()),
                ));
            }
            preset.parameters.to_value()
        }
        (None, None) => return Err(CliError::config("/parameters", "missing field `parameters`")),
    };
    Ok(ScenarioConfig {
        schema_version: raw.schema_version,
        preset: raw.preset,
        parameters: Parameters::from_value(raw.kind, params)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_config_is_expanded() {
        let c = parse_scenario(r#"{"schema_version": 1, "kind": "bell_protocol", "preset": "appendix_b"}"#).unwrap();
        assert_eq!(c.kind(), Kind::BellProtocol);
        assert_eq!(c.preset.as_deref(), Some("appendix_b"));
        assert!(c.to_value()["parameters"]["settings"].is_object());
    }

    #[test]
    fn field_without_unit_is_rejected() {
        let text = r#"{"schema_version": 1, "kind": "spacetime_timing", "parameters": {
            "spacetime": {"mass_kg": 1.0, "metric_mode": "post_newtonian_1"},
            "ordering": {"radius": 10.0, "r_b_m": 5.0}}}"#;
        match parse_scenario(text) {
            Err(CliError::Config { pointer, message }) => {
                assert_eq!(pointer, "/parameters/ordering/radius");
                assert!(message.contains("radius"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_and_bad_enum_carry_pointers() {
        let text = r#"{"schema_version": 1, "kind": "classical_bound", "parameters": {"models": 3, "colour": 1}}"#;
        let Err(CliError::Config { message, .. }) = parse_scenario(text) else { panic!() };
        assert!(message.contains("colour"));
        let text = r#"{"schema_version": 1, "kind": "classical_bound", "parameters": {"models": 3, "z_mode": "sideways"}}"#;
        let Err(CliError::Config { pointer, .. }) = parse_scenario(text) else { panic!() };
        assert_eq!(pointer, "/parameters/z_mode");
        let text = r#"{"schema_version": 1, "kind": "teleport", "parameters": {}}"#;
        let Err(CliError::Config { pointer, .. }) = parse_scenario(text) else { panic!() };
        assert_eq!(pointer, "/kind");
    }

    #[test]
    fn schema_version_is_checked() {
        let text = r#"{"schema_version": 7, "kind": "classical_bound", "parameters": {"models": 3}}"#;
        let Err(CliError::Config { pointer, .. }) = parse_scenario(text) else { panic!() };
        assert_eq!(pointer, "/schema_version");
    }

    #[test]
    fn round_trip_is_identity() {
        for name in presets::NAMES {
            let c = presets::preset(name).unwrap();
            let again = parse_scenario(&c.to_json()).unwrap();
            assert_eq!(c, again);
            assert_eq!(c.to_json(), again.to_json());
        }
    }

    #[test]
    fn unit_stems() {
        assert!(is_physical("radius"));
        assert!(is_physical("r_a"));
        assert!(is_physical("trigger_time"));
        assert!(!is_physical("r_a_m"));
        assert!(!is_physical("models"));
        assert!(!is_physical("mixture_weight"));
        let v: Value = serde_json::json!({"compare_formula_rs": true, "tau": [1.0, 2.0]});
        let Err(CliError::Config { pointer, .. }) = check_units(&v, "") else { panic!() };
        assert_eq!(pointer, "/tau");
    }
}
