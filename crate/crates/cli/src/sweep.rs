//! One-parameter sweeps over a scenario.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{parse_value, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::run::{provenance, run_scenario, sha256_hex};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// JSON pointer into the configuration.
    pub pointer: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log: bool,
}

/// Accepts a JSON pointer (`/parameters/ordering/r_a_m`) or a dotted path
/// relative to `parameters` (`ordering.r_a_m`).
pub fn param_pointer(param: &str) -> String {
    if param.starts_with('/') {
        return param.to_string();
    }
    let rest = param.strip_prefix("parameters.").unwrap_or(param);
    format!("/parameters/{}", rest.replace('.', "/"))
}

/// Parses `start:stop:n`.
pub fn parse_range(s: &str) -> Result<(f64, f64, usize)> {
    let bad = |m: &str| CliError::config("--range", format!("`{s}`: {m} (expected start:stop:n)"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("wrong number of fields"));
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad("bad start"))?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad("bad stop"))?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad("bad point count"))?;
    if n == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad("need finite bounds and at least one point"));
    }
    Ok((start, stop, n))
}

impl SweepSpec {
    pub fn new(param: &str, range: &str, log: bool) -> Result<Self> {
        let (start, stop, points) = parse_range(range)?;
        if log && !(start > 0.0 && stop > 0.0) {
            return Err(CliError::config("--range", "logarithmic sweeps need positive bounds"));
        }
        Ok(Self {
            pointer: param_pointer(param),
            start,
            stop,
            points,
            log,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                let t = i as f64 / (n - 1) as f64;
                if i == n - 1 {
                    self.stop
                } else if self.log {
                    (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + t * (self.stop - self.start)
                }
            })
            .collect()
    }
}

/// Runs every point (in parallel) and assembles the report in point order.
pub fn run_sweep(cfg: &ScenarioConfig, spec: &SweepSpec) -> Result<Value> {
    let base = cfg.to_value();
    match base.pointer(&spec.pointer) {
        Some(v) if v.is_number() => {}
        Some(_) => return Err(CliError::config(spec.pointer.clone(), "sweep target is not a number")),
        None => return Err(CliError::config(spec.pointer.clone(), "sweep target does not exist in the configuration")),
    }
    let values = spec.values();
    let points = values
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut v = base.clone();
            *v.pointer_mut(&spec.pointer).expect("checked above") = json!(x);
            let report = run_scenario(&parse_value(v)?)?;
            Ok(json!({"index": i, "value": x, "result": report.result}))
        })
        .collect::<Result<Vec<Value>>>()?;
    Ok(json!({
        "kind": "sweep",
        "config": base,
        "config_sha256": sha256_hex(&base),
        "sweep": {
            "param": spec.pointer,
            "start": spec.start,
            "stop": spec.stop,
            "points": spec.points,
            "log": spec.log,
        },
        "points": points,
        "provenance": provenance(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointers_and_ranges() {
        assert_eq!(param_pointer("ordering.r_a_m"), "/parameters/ordering/r_a_m");
        assert_eq!(param_pointer("parameters.ordering.r_a_m"), "/parameters/ordering/r_a_m");
        assert_eq!(param_pointer("/parameters/x"), "/parameters/x");
        assert_eq!(parse_range("1:2:3").unwrap(), (1.0, 2.0, 3));
        assert!(parse_range("1:2").is_err());
        let s = SweepSpec::new("x", "1:100:3", true).unwrap();
        let v = s.values();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert_eq!(v[2], 100.0);
    }
}
