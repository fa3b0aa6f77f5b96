//! CHSH evaluation for two-qubit states and classical hidden-order models.
//!
//! Outcome and setting indices follow one convention throughout: outcome
//! index 0 is `+1` and 1 is `−1`; order index 0 is `A_j ≺ B_j` and 1 is
//! `B_j ≺ A_j`; `z` index 0 is `+` and 1 is `−`.

mod hidden;

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{gates, hermitian_eigenvalues, hermiticity_defect, DensityMatrix, Operator, PauliEigenstate, QError, StateVector, C64, STRUCTURAL_TOL};
use crate::switch::{ControlAmplitudes, OrderSource, SwitchError, SwitchScenario, Wing};

pub use hidden::{
    chsh_from_table, classical_chsh, classical_chsh_sweep, classical_joint_probability,
    condition_on_outcome_z, deterministic_strategy_models, exhaustive_deterministic_bound,
    sample_model, HiddenOrderModel, JointTable, OrderRule, SweepOptions, SweepResult, ZMode,
    MAX_SUPPORT, MODEL_TOL,
};

/// Slack allowed above 2 before a classical CHSH value counts as a violation.
pub const CLASSICAL_BOUND_TOL: f64 = 1e-9;
/// Eigenvalues of an observable must be ±1 within this tolerance.
pub const SPECTRUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BellError {
    #[error(transparent)]
    Quantum(#[from] QError),
    #[error(transparent)]
    Switch(#[from] SwitchError),
    #[error("observable {which} is not a ±1-valued qubit observable: {reason}")]
    NotObservable { which: String, reason: String },
    #[error("CHSH needs a two-qubit state, got {0} qubit(s)")]
    NotTwoQubit(usize),
    #[error("invalid hidden-order model: {0}")]
    InvalidModel(String),
    #[error("outcome z={z} has probability {probability:e}")]
    ZeroProbability { z: char, probability: f64 },
    #[error("sweep needs at least one model")]
    EmptySweep,
}

pub type Result<T> = std::result::Result<T, BellError>;

/// Two ±1-valued observables per wing: `wings[j][i]` is `C_{j+1}^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSettings {
    wings: [[DMatrix<C64>; 2]; 2],
}

impl MeasurementSettings {
    pub fn new(wings: [[DMatrix<C64>; 2]; 2]) -> Result<Self> {
        for (j, pair) in wings.iter().enumerate() {
            for (i, c) in pair.iter().enumerate() {
                check_observable(c).map_err(|reason| BellError::NotObservable {
                    which: format!("C{}^{}", j + 1, i),
                    reason,
                })?;
            }
        }
        Ok(Self { wings })
    }

    /// Settings `n·σ` from unit Bloch vectors, `[wing][setting]`.
    pub fn from_bloch(vectors: [[[f64; 3]; 2]; 2]) -> Result<Self> {
        let obs = |v: [f64; 3]| gates::bloch_observable(v);
        Self::new([
            [obs(vectors[0][0]), obs(vectors[0][1])],
            [obs(vectors[1][0]), obs(vectors[1][1])],
        ])
    }

    pub fn observable(&self, wing: usize, setting: usize) -> &DMatrix<C64> {
        &self.wings[wing][setting]
    }

    /// Probability that wing `wing` with setting `setting` reads `+1`.
    pub fn plus_probability(&self, rho: &DensityMatrix, wing: usize, setting: usize) -> Result<f64> {
        let c = &self.wings[wing][setting];
        let proj = (DMatrix::identity(2, 2) + c) * C64::new(0.5, 0.0);
        let full = if wing == 0 {
            proj.kronecker(&DMatrix::identity(2, 2))
        } else {
            DMatrix::identity(2, 2).kronecker(&proj)
        };
        Ok(rho.expectation(&full)?)
    }
}

fn check_observable(c: &DMatrix<C64>) -> std::result::Result<(), String> {
    if c.nrows() != 2 || c.ncols() != 2 {
        return Err(format!("shape {}x{}", c.nrows(), c.ncols()));
    }
    let h = hermiticity_defect(c);
    if h > STRUCTURAL_TOL {
        return Err(format!("Hermiticity defect {h:e}"));
    }
    let ev = hermitian_eigenvalues(c);
    if (ev[0] + 1.0).abs() > SPECTRUM_TOL || (ev[1] - 1.0).abs() > SPECTRUM_TOL {
        return Err(format!("eigenvalues {ev:?}"));
    }
    Ok(())
}

fn two_qubit(rho: &DensityMatrix) -> Result<()> {
    let n = rho.labels().len();
    if n != 2 {
        return Err(BellError::NotTwoQubit(n));
    }
    Ok(())
}

/// `⟨C₁^i ⊗ C₂^k⟩` for all four setting pairs, `[i][k]`.
pub fn correlators(rho: &DensityMatrix, settings: &MeasurementSettings) -> Result<[[f64; 2]; 2]> {
    two_qubit(rho)?;
    let mut e = [[0.0; 2]; 2];
    for (i, row) in e.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            let op = settings.wings[0][i].kronecker(&settings.wings[1][k]);
            *v = rho.expectation(&op)?;
        }
    }
    Ok(e)
}

/// `E₀₀ + E₀₁ + E₁₀ − E₁₁`.
pub fn chsh_from_correlators(e: &[[f64; 2]; 2]) -> f64 {
    e[0][0] + e[0][1] + e[1][0] - e[1][1]
}

pub fn chsh_value(rho: &DensityMatrix, settings: &MeasurementSettings) -> Result<f64> {
    Ok(chsh_from_correlators(&correlators(rho, settings)?))
}

pub fn chsh_value_pure(state: &StateVector, settings: &MeasurementSettings) -> Result<f64> {
    chsh_value(&state.to_density(), settings)
}

/// Fixed initial states, operations and measurements of the two-wing protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixB {
    /// `|z+⟩` on `S1` and on `S2`.
    pub initial: [StateVector; 2],
    /// `(I + iσ_x)/√2`.
    pub u_a: DMatrix<C64>,
    /// `σ_z`.
    pub u_b: DMatrix<C64>,
    /// `C₁⁰ = (σ_y − σ_z)/√2`, `C₁¹ = (σ_y + σ_z)/√2`, `C₂⁰ = σ_y`, `C₂¹ = σ_z`.
    pub settings: MeasurementSettings,
    /// `(|K_AB⟩ + |K_BA⟩)/√2` and `(|K_AB⟩ − |K_BA⟩)/√2`.
    pub control_basis: [StateVector; 2],
}

pub fn appendix_b_protocol() -> AppendixB {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let (y, z) = (gates::sigma_y(), gates::sigma_z());
    let settings = MeasurementSettings::new([
        [(&y - &z) * h, (&y + &z) * h],
        [y.clone(), z.clone()],
    ])
    .expect("fixed observables are valid");
    let control = |s: f64| StateVector::from_slice(&["M"], &[h, h * s]).expect("normalised");
    AppendixB {
        initial: [PauliEigenstate::ZPlus.ket("S1"), PauliEigenstate::ZPlus.ket("S2")],
        u_a: gates::sqrt_x_phase(),
        u_b: z,
        settings,
        control_basis: [control(1.0), control(-1.0)],
    }
}

impl AppendixB {
    /// The balanced two-wing switch built from this bundle.
    pub fn scenario(&self) -> Result<SwitchScenario> {
        let wing = |s: &StateVector| -> Result<Wing> {
            let l = s.labels();
            Ok(Wing::new(
                s.clone(),
                Operator::new(l, self.u_a.clone())?,
                Operator::new(l, self.u_b.clone())?,
            )?)
        };
        Ok(SwitchScenario::new(
            vec![wing(&self.initial[0])?, wing(&self.initial[1])?],
            ControlAmplitudes::balanced(),
            OrderSource::Explicit,
        )?)
    }
}

/// Best CHSH value over all local ±1 qubit observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalChsh {
    pub value: f64,
    /// Bloch vectors realising `value`, `[wing][setting]`.
    pub bloch_vectors: [[[f64; 3]; 2]; 2],
    /// Singular values of the correlation matrix, descending.
    pub singular_values: [f64; 3],
}

impl OptimalChsh {
    pub fn settings(&self) -> Result<MeasurementSettings> {
        MeasurementSettings::from_bloch(self.bloch_vectors)
    }
}

/// `T_mn = Tr(ρ σ_m ⊗ σ_n)`.
pub fn correlation_matrix(rho: &DensityMatrix) -> Result<Matrix3<f64>> {
    two_qubit(rho)?;
    let p = gates::paulis();
    let mut t = Matrix3::zeros();
    for m in 0..3 {
        for n in 0..3 {
            t[(m, n)] = rho.expectation(&p[m].kronecker(&p[n]))?;
        }
    }
    Ok(t)
}

/// `2√(s₁² + s₂²)` from the two largest singular values of the correlation
/// matrix, with settings that attain it.
pub fn optimal_chsh(rho: &DensityMatrix) -> Result<OptimalChsh> {
    let t = correlation_matrix(rho)?;
    let svd = t.svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = idx.map(|i| svd.singular_values[i]);
    let col = |m: &Matrix3<f64>, i: usize| -> Vector3<f64> { m.column(i).into_owned() };
    let (u1, u2) = (col(&u, idx[0]), col(&u, idx[1]));
    let (v1, v2) = (
        v_t.row(idx[0]).transpose().into_owned(),
        v_t.row(idx[1]).transpose().into_owned(),
    );
    let norm = s[0].hypot(s[1]);
    let (cos, sin) = if norm > 0.0 { (s[0] / norm, s[1] / norm) } else { (1.0, 0.0) };
    let b0 = v1 * cos + v2 * sin;
    let b1 = v1 * cos - v2 * sin;
    let arr = |v: Vector3<f64>| -> [f64; 3] {
        let v = v.normalize();
        [v[0], v[1], v[2]]
    };
    Ok(OptimalChsh {
        value: 2.0 * norm,
        bloch_vectors: [[arr(u1), arr(u2)], [arr(b0), arr(b1)]],
        singular_values: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::Tensor;
    use crate::switch::{condition_on_mass, MassOutcome};

    fn bell_state(sign: f64) -> StateVector {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        StateVector::from_slice(&["S1", "S2"], &[h, z, z, h * sign]).unwrap()
    }

    #[test]
    fn appendix_b_products() {
        let b = appendix_b_protocol();
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let ab = &b.u_a * &b.u_b;
        let expected = (gates::sigma_z() + gates::sigma_y()) * h;
        assert!((ab - expected).norm() < 1e-12);
        for j in 0..2 {
            for i in 0..2 {
                let c = b.settings.observable(j, i);
                assert!((c * c - DMatrix::<C64>::identity(2, 2)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn chsh_of_conditional_states() {
        let b = appendix_b_protocol();
        let sc = b.scenario().unwrap();
        let (_, minus) = condition_on_mass(&sc, MassOutcome::Minus).unwrap();
        let (_, plus) = condition_on_mass(&sc, MassOutcome::Plus).unwrap();
        let r2 = 2.0 * std::f64::consts::SQRT_2;
        assert!((chsh_value_pure(&minus, &b.settings).unwrap() - r2).abs() < 1e-12);
        assert!(chsh_value_pure(&plus, &b.settings).unwrap().abs() < 1e-12);
        assert!((chsh_value_pure(&bell_state(1.0), &b.settings).unwrap() + r2).abs() < 1e-12);
    }

    #[test]
    fn optimal_values() {
        let r2 = 2.0 * std::f64::consts::SQRT_2;
        for sign in [1.0, -1.0] {
            let rho = bell_state(sign).to_density();
            let opt = optimal_chsh(&rho).unwrap();
            assert!((opt.value - r2).abs() < 1e-12);
            let realised = chsh_value(&rho, &opt.settings().unwrap()).unwrap();
            assert!((realised - opt.value).abs() < 1e-12);
        }
        let prod = PauliEigenstate::XPlus
            .ket("S1")
            .tensor(&PauliEigenstate::YMinus.ket("S2"))
            .unwrap()
            .to_density();
        assert!((optimal_chsh(&prod).unwrap().value - 2.0).abs() < 1e-12);
        let mm = DensityMatrix::maximally_mixed(&["S1", "S2"]).unwrap();
        assert!(optimal_chsh(&mm).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_observables_and_states() {
        let bad = gates::sigma_x() * C64::new(2.0, 0.0);
        let r = MeasurementSettings::new([
            [bad, gates::sigma_z()],
            [gates::sigma_x(), gates::sigma_z()],
        ]);
        assert!(matches!(r, Err(BellError::NotObservable { .. })));
        let one = PauliEigenstate::ZPlus.ket("S").to_density();
        let s = appendix_b_protocol().settings;
        assert!(matches!(chsh_value(&one, &s), Err(BellError::NotTwoQubit(1))));
    }
}
