//! Turns configuration records into core objects.

use nalgebra::DMatrix;
use qorder_core::qcore::{gates, Operator, PauliEigenstate, StateVector, C64};
use qorder_core::spacetime::SpacetimeParams;
use qorder_core::switch::ControlAmplitudes;

use crate::config::{ComplexSpec, ControlSpec, OperatorSpec, SpacetimeSpec, StateSpec};
use crate::error::{domain, CliError, Result};

/// Largest deviation of `|n|` from 1 accepted for Bloch-vector observables.
const BLOCH_NORM_TOL: f64 = 1e-9;

fn c(z: ComplexSpec) -> C64 {
    C64::new(z[0], z[1])
}

pub fn state(spec: &StateSpec, label: &str, pointer: &str) -> Result<StateVector> {
    match spec {
        StateSpec::Named(name) => {
            let e = match name.as_str() {
                "z+" | "0" => PauliEigenstate::ZPlus,
                "z-" | "1" => PauliEigenstate::ZMinus,
                "x+" => PauliEigenstate::XPlus,
                "x-" => PauliEigenstate::XMinus,
                "y+" => PauliEigenstate::YPlus,
                "y-" => PauliEigenstate::YMinus,
                _ => {
                    return Err(CliError::config(
                        pointer,
                        format!("unknown state `{name}` (expected z+, z-, x+, x-, y+, y-, 0 or 1)"),
                    ))
                }
            };
            Ok(e.ket(label))
        }
        StateSpec::Explicit(e) => {
            let pointer = format!("{pointer}/amplitudes");
            if e.amplitudes.len() != 2 {
                return Err(CliError::config(
                    pointer,
                    format!("expected 2 amplitudes, found {}", e.amplitudes.len()),
                ));
            }
            let amps: Vec<C64> = e.amplitudes.iter().copied().map(c).collect();
            StateVector::from_slice(&[label], &amps).map_err(|err| CliError::config(pointer, err.to_string()))
        }
    }
}

pub fn matrix(spec: &OperatorSpec, pointer: &str) -> Result<DMatrix<C64>> {
    match spec {
        OperatorSpec::Named(name) => gates::by_name(name).ok_or_else(|| {
            CliError::config(
                pointer,
                format!("unknown operator `{name}` (expected I, X, Y, Z, H, sigma_x, sigma_y, sigma_z, hadamard, identity or sqrt_x_phase)"),
            )
        }),
        OperatorSpec::Matrix(m) => {
            let pointer = format!("{pointer}/matrix");
            if m.matrix.len() != 2 || m.matrix.iter().any(|row| row.len() != 2) {
                return Err(CliError::config(pointer, "expected a 2x2 matrix of [re, im] entries"));
            }
            Ok(DMatrix::from_fn(2, 2, |i, j| c(m.matrix[i][j])))
        }
        OperatorSpec::Bloch(b) => {
            let n = b.bloch;
            let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > BLOCH_NORM_TOL {
                return Err(CliError::config(
                    format!("{pointer}/bloch"),
                    format!("Bloch vector has norm {norm}, expected 1"),
                ));
            }
            Ok(gates::bloch_observable(n))
        }
    }
}

pub fn operator(spec: &OperatorSpec, label: &str, pointer: &str) -> Result<Operator> {
    Operator::new(&[label], matrix(spec, pointer)?).map_err(domain)
}

pub fn control(spec: &ControlSpec, pointer: &str) -> Result<ControlAmplitudes> {
    ControlAmplitudes::new(c(spec.alpha), c(spec.beta)).map_err(|e| CliError::config(pointer, e.to_string()))
}

pub fn spacetime(spec: &SpacetimeSpec) -> Result<SpacetimeParams> {
    let p = SpacetimeParams::new(spec.mass_kg, spec.metric_mode).map_err(domain)?;
    match spec.schwarzschild_radius_override_m {
        Some(rs) => p.with_schwarzschild_radius(rs).map_err(domain),
        None => Ok(p),
    }
}
