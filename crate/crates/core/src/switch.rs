//! The gravitational quantum switch and its two-wing, entangled-order variant.
//!
//! A control qubit `M` records the mass configuration, `|0⟩ = |K_AB⟩` and
//! `|1⟩ = |K_BA⟩`. In branch `K_AB` the operation of `A` acts first, so the
//! target picks up `U_B·U_A`; in branch `K_BA` it picks up `U_A·U_B`. Free
//! evolution between the events is ignored.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{
    apply, project_and_condition, DensityMatrix, Operator, QError, StateVector, Tensor, C64,
    STRUCTURAL_TOL,
};
use crate::spacetime::{
    classify_order, Branch, EventSpec, MassConfiguration, OrderRelation, SpacetimeError,
    SpacetimeParams,
};

/// Register label of the control (mass configuration) qubit.
pub const CONTROL: &str = "M";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwitchError {
    #[error(transparent)]
    Quantum(#[from] QError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error("control amplitudes have norm² {0}, expected 1")]
    BadControl(f64),
    #[error("operation needs {expected} target wing(s), scenario has {found}")]
    WingCount { expected: usize, found: usize },
    #[error("wing {wing}: branch {branch:?} yields {found:?}, which does not match the branch label")]
    OrderMismatch {
        wing: usize,
        branch: Branch,
        found: OrderRelation,
    },
    #[error("configuration for {0:?} is missing or mislabelled")]
    BadConfiguration(Branch),
    #[error("{found} event pairs given for {wings} wing(s)")]
    EventCount { found: usize, wings: usize },
    #[error("register label `{0}` is reserved for the control")]
    ReservedLabel(String),
}

pub type Result<T> = std::result::Result<T, SwitchError>;

/// One target system with the two local operations acting on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Wing {
    pub initial: StateVector,
    pub u_a: Operator,
    pub u_b: Operator,
}

impl Wing {
    pub fn new(initial: StateVector, u_a: Operator, u_b: Operator) -> Result<Self> {
        for u in [&u_a, &u_b] {
            if u.labels() != initial.labels() {
                return Err(QError::LabelMismatch {
                    left: u.labels().to_vec(),
                    right: initial.labels().to_vec(),
                }
                .into());
            }
            let defect = u.unitarity_defect();
            if defect > STRUCTURAL_TOL {
                return Err(QError::NotUnitary(defect).into());
            }
        }
        if initial.labels().iter().any(|l| l == CONTROL) {
            return Err(SwitchError::ReservedLabel(CONTROL.into()));
        }
        Ok(Self { initial, u_a, u_b })
    }

    /// Target state after both operations in the given order.
    pub fn evolve(&self, order: OrderRelation) -> Result<StateVector> {
        let (first, second) = match order {
            OrderRelation::ABeforeB => (&self.u_a, &self.u_b),
            OrderRelation::BBeforeA => (&self.u_b, &self.u_a),
            OrderRelation::Spacelike => {
                return Err(SwitchError::OrderMismatch {
                    wing: 0,
                    branch: Branch::AbeforeB,
                    found: order,
                })
            }
        };
        Ok(apply(second, &apply(first, &self.initial)?)?)
    }
}

/// Amplitudes `(α, β)` of `|K_AB⟩` and `|K_BA⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlAmplitudes {
    pub alpha: C64,
    pub beta: C64,
}

impl ControlAmplitudes {
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let n2 = alpha.norm_sqr() + beta.norm_sqr();
        if !((n2 - 1.0).abs() <= STRUCTURAL_TOL) {
            return Err(SwitchError::BadControl(n2));
        }
        Ok(Self { alpha, beta })
    }

    /// `|K₊⟩ = (|K_AB⟩ + |K_BA⟩)/√2`.
    pub fn balanced() -> Self {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        Self { alpha: h, beta: h }
    }
}

/// Where the per-branch order of the operations comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderSource {
    /// `K_AB` ⇒ `A` first, `K_BA` ⇒ `B` first.
    Explicit,
    /// Orders derived from clock events in two mass configurations, one pair
    /// of events `(A_j, B_j)` per wing.
    FromSpacetime {
        params: SpacetimeParams,
        k_ab: MassConfiguration,
        k_ba: MassConfiguration,
        events: Vec<(EventSpec, EventSpec)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchScenario {
    wings: Vec<Wing>,
    control: ControlAmplitudes,
    /// `orders[branch][wing]`
    orders: [Vec<OrderRelation>; 2],
}

impl SwitchScenario {
    pub fn new(wings: Vec<Wing>, control: ControlAmplitudes, source: OrderSource) -> Result<Self> {
        if wings.is_empty() || wings.len() > 2 {
            return Err(SwitchError::WingCount {
                expected: if wings.is_empty() { 1 } else { 2 },
                found: wings.len(),
            });
        }
        ControlAmplitudes::new(control.alpha, control.beta)?;
        // registers of different wings must be disjoint
        let mut joined = wings[0].initial.clone();
        for w in &wings[1..] {
            joined = joined.tensor(&w.initial)?;
        }
        let orders = match source {
            OrderSource::Explicit => [
                vec![OrderRelation::ABeforeB; wings.len()],
                vec![OrderRelation::BBeforeA; wings.len()],
            ],
            OrderSource::FromSpacetime {
                params,
                k_ab,
                k_ba,
                events,
            } => {
                if k_ab.branch != Branch::AbeforeB {
                    return Err(SwitchError::BadConfiguration(Branch::AbeforeB));
                }
                if k_ba.branch != Branch::BbeforeA {
                    return Err(SwitchError::BadConfiguration(Branch::BbeforeA));
                }
                if events.len() != wings.len() {
                    return Err(SwitchError::EventCount {
                        found: events.len(),
                        wings: wings.len(),
                    });
                }
                let mut orders = [Vec::new(), Vec::new()];
                for (k, (config, expected)) in [
                    (&k_ab, OrderRelation::ABeforeB),
                    (&k_ba, OrderRelation::BBeforeA),
                ]
                .into_iter()
                .enumerate()
                {
                    for (wing, (ea, eb)) in events.iter().enumerate() {
                        let found = classify_order(&params, config, ea, eb)?.relation;
                        if found != expected {
                            return Err(SwitchError::OrderMismatch {
                                wing,
                                branch: config.branch,
                                found,
                            });
                        }
                        orders[k].push(found);
                    }
                }
                orders
            }
        };
        Ok(Self {
            wings,
            control,
            orders,
        })
    }

    /// Single-wing scenario with explicit orders.
    pub fn single(initial: StateVector, u_a: Operator, u_b: Operator, control: ControlAmplitudes) -> Result<Self> {
        Self::new(vec![Wing::new(initial, u_a, u_b)?], control, OrderSource::Explicit)
    }

    pub fn wings(&self) -> &[Wing] {
        &self.wings
    }

    pub fn control(&self) -> ControlAmplitudes {
        self.control
    }

    /// Order applied in `branch` on wing `wing`.
    pub fn order(&self, branch: Branch, wing: usize) -> OrderRelation {
        self.orders[branch_index(branch)][wing]
    }

    /// Joint target state in each branch: `[K_AB, K_BA]`.
    pub fn branch_targets(&self) -> Result<[StateVector; 2]> {
        let branch = |k: usize| -> Result<StateVector> {
            let mut out: Option<StateVector> = None;
            for (j, w) in self.wings.iter().enumerate() {
                let s = w.evolve(self.orders[k][j])?;
                out = Some(match out {
                    None => s,
                    Some(acc) => acc.tensor(&s)?,
                });
            }
            Ok(out.expect("at least one wing"))
        };
        Ok([branch(0)?, branch(1)?])
    }

    fn target_labels(&self) -> Vec<String> {
        self.wings
            .iter()
            .flat_map(|w| w.initial.labels().iter().cloned())
            .collect()
    }

    /// `α|K_AB⟩⊗ψ̃₁ + β|K_BA⟩⊗ψ̃₂` for any number of wings.
    pub fn joint_state(&self) -> Result<StateVector> {
        let [t1, t2] = self.branch_targets()?;
        let d = t1.dim();
        let mut amps = DVector::zeros(2 * d);
        amps.rows_mut(0, d).copy_from(&(t1.amplitudes() * self.control.alpha));
        amps.rows_mut(d, d).copy_from(&(t2.amplitudes() * self.control.beta));
        let mut labels = vec![CONTROL.to_string()];
        labels.extend(self.target_labels());
        Ok(StateVector::new(&labels, amps)?)
    }
}

fn branch_index(b: Branch) -> usize {
    match b {
        Branch::AbeforeB => 0,
        Branch::BbeforeA => 1,
    }
}

fn require_wings(sc: &SwitchScenario, n: usize) -> Result<()> {
    if sc.wings.len() != n {
        return Err(SwitchError::WingCount {
            expected: n,
            found: sc.wings.len(),
        });
    }
    Ok(())
}

/// Final state of the control and a single target.
pub fn switch_state(sc: &SwitchScenario) -> Result<StateVector> {
    require_wings(sc, 1)?;
    sc.joint_state()
}

/// Final state of the control and both targets.
pub fn bipartite_switch_state(sc: &SwitchScenario) -> Result<StateVector> {
    require_wings(sc, 2)?;
    sc.joint_state()
}

/// The targets' state as the explicit mixture `|α|²ψ̃₁ψ̃₁† + |β|²ψ̃₂ψ̃₂†`.
pub fn reduced_target(sc: &SwitchScenario) -> Result<DensityMatrix> {
    let [t1, t2] = sc.branch_targets()?;
    let (d1, d2) = (t1.to_density(), t2.to_density());
    Ok(DensityMatrix::mixture(&[
        (sc.control.alpha.norm_sqr(), &d1),
        (sc.control.beta.norm_sqr(), &d2),
    ])?)
}

/// Outcome of measuring the control in the `(|K_AB⟩ ± |K_BA⟩)/√2` basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassOutcome {
    Plus,
    Minus,
}

impl MassOutcome {
    pub const BOTH: [MassOutcome; 2] = [MassOutcome::Plus, MassOutcome::Minus];

    pub fn ket(self) -> StateVector {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let s = match self {
            MassOutcome::Plus => h,
            MassOutcome::Minus => -h,
        };
        StateVector::from_slice(&[CONTROL], &[h, s]).expect("normalised")
    }

    pub fn symbol(self) -> &'static str {
        match self {
            MassOutcome::Plus => "+",
            MassOutcome::Minus => "-",
        }
    }
}

/// Probability of `sign` and the renormalised state of the targets.
pub fn condition_on_mass(sc: &SwitchScenario, sign: MassOutcome) -> Result<(f64, StateVector)> {
    let joint = sc.joint_state()?;
    Ok(project_and_condition(&joint, CONTROL, &sign.ket())?)
}

/// `|⟨U_B U_A ψ | U_A U_B ψ⟩|`, zero when the two orders are perfectly
/// distinguishable.
pub fn order_orthogonality(u_a: &Operator, u_b: &Operator, psi: &StateVector) -> Result<f64> {
    let w = Wing::new(psi.clone(), u_a.clone(), u_b.clone())?;
    let ab = w.evolve(OrderRelation::ABeforeB)?;
    let ba = w.evolve(OrderRelation::BBeforeA)?;
    Ok(ab.inner(&ba)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{entanglement_entropy, gates, partial_trace, trace_distance, PauliEigenstate};
    use crate::spacetime::{tau_star_threshold, MetricMode};

    fn op(label: &str, m: nalgebra::DMatrix<C64>) -> Operator {
        Operator::new(&[label], m).unwrap()
    }

    fn wing(label: &str) -> Wing {
        Wing::new(
            PauliEigenstate::ZPlus.ket(label),
            op(label, gates::sqrt_x_phase()),
            op(label, gates::sigma_z()),
        )
        .unwrap()
    }

    fn single() -> SwitchScenario {
        SwitchScenario::new(vec![wing("S")], ControlAmplitudes::balanced(), OrderSource::Explicit).unwrap()
    }

    fn bipartite() -> SwitchScenario {
        SwitchScenario::new(
            vec![wing("S1"), wing("S2")],
            ControlAmplitudes::balanced(),
            OrderSource::Explicit,
        )
        .unwrap()
    }

    #[test]
    fn branch_targets_are_y_eigenstates() {
        let [t1, t2] = single().branch_targets().unwrap();
        assert!(t1.equal_up_to_phase(&PauliEigenstate::YMinus.ket("S"), 1e-12));
        assert!(t2.equal_up_to_phase(&PauliEigenstate::YPlus.ket("S"), 1e-12));
    }

    #[test]
    fn identity_operations_give_product_state() {
        let sc = SwitchScenario::single(
            PauliEigenstate::XPlus.ket("S"),
            op("S", gates::identity()),
            op("S", gates::identity()),
            ControlAmplitudes::balanced(),
        )
        .unwrap();
        let s = switch_state(&sc).unwrap();
        assert!(entanglement_entropy(&s, &["S"]).unwrap() < 1e-9);
        let (p, _) = condition_on_mass(&sc, MassOutcome::Plus).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!(matches!(
            condition_on_mass(&sc, MassOutcome::Minus),
            Err(SwitchError::Quantum(QError::ZeroProbability(_)))
        ));
    }

    #[test]
    fn reduced_target_is_maximally_mixed() {
        let sc = single();
        let rho = reduced_target(&sc).unwrap();
        let mm = DensityMatrix::maximally_mixed(&["S"]).unwrap();
        assert!(trace_distance(&rho, &mm).unwrap() < 1e-12);
        let traced = partial_trace(&switch_state(&sc).unwrap().to_density(), &[CONTROL]).unwrap();
        assert!(trace_distance(&rho, &traced).unwrap() < 1e-12);
    }

    #[test]
    fn single_branch_is_pure() {
        let sc = SwitchScenario::single(
            PauliEigenstate::ZPlus.ket("S"),
            op("S", gates::sqrt_x_phase()),
            op("S", gates::sigma_z()),
            ControlAmplitudes::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0)).unwrap(),
        )
        .unwrap();
        let rho = reduced_target(&sc).unwrap();
        let pure = PauliEigenstate::YMinus.ket("S").to_density();
        assert!(trace_distance(&rho, &pure).unwrap() < 1e-12);
    }

    #[test]
    fn conditional_states_of_the_entangled_protocol() {
        let sc = bipartite();
        assert_eq!(bipartite_switch_state(&sc).unwrap().dim(), 8);
        let h = FRAC_1_SQRT_2;
        let (pm, minus) = condition_on_mass(&sc, MassOutcome::Minus).unwrap();
        let expected = StateVector::from_slice(
            &["S1", "S2"],
            &[C64::new(0.0, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap();
        assert!((pm - 0.5).abs() < 1e-12);
        assert!(minus.equal_up_to_phase(&expected, 1e-12));
        let (pp, plus) = condition_on_mass(&sc, MassOutcome::Plus).unwrap();
        let expected = StateVector::from_slice(
            &["S1", "S2"],
            &[C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-h, 0.0)],
        )
        .unwrap();
        assert!((pp - 0.5).abs() < 1e-12);
        assert!(plus.equal_up_to_phase(&expected, 1e-12));
        assert!(plus.inner(&minus).unwrap().norm() < 1e-12);
    }

    #[test]
    fn wing_count_is_enforced() {
        assert!(matches!(
            switch_state(&bipartite()),
            Err(SwitchError::WingCount { expected: 1, found: 2 })
        ));
        assert!(bipartite_switch_state(&single()).is_err());
    }

    #[test]
    fn orthogonality_examples() {
        let psi = PauliEigenstate::ZPlus.ket("S");
        let ua = op("S", gates::sqrt_x_phase());
        let ub = op("S", gates::sigma_z());
        assert!(order_orthogonality(&ua, &ub, &psi).unwrap() < 1e-12);
        assert!((order_orthogonality(&ua, &ua, &psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_control_and_labels() {
        let h = C64::new(0.5, 0.0);
        assert!(matches!(ControlAmplitudes::new(h, h), Err(SwitchError::BadControl(_))));
        assert!(SwitchScenario::new(
            vec![wing("S"), wing("S")],
            ControlAmplitudes::balanced(),
            OrderSource::Explicit
        )
        .is_err());
        assert!(Wing::new(
            PauliEigenstate::ZPlus.ket("M"),
            op("M", gates::identity()),
            op("M", gates::identity())
        )
        .is_err());
    }

    fn spacetime_source(trigger_factor: f64) -> OrderSource {
        let params = SpacetimeParams::new(1.0, MetricMode::PostNewtonian1)
            .unwrap()
            .with_schwarzschild_radius(1.0)
            .unwrap();
        let (far, near) = (1e3, 9e2);
        let tau = tau_star_threshold(&params, far, near).unwrap().value().unwrap();
        let t = trigger_factor * tau;
        OrderSource::FromSpacetime {
            params,
            k_ab: MassConfiguration::new(Branch::AbeforeB, [("a", far), ("b", near)]),
            k_ba: MassConfiguration::new(Branch::BbeforeA, [("a", near), ("b", far)]),
            events: vec![(EventSpec::new("a", t).unwrap(), EventSpec::new("b", t).unwrap())],
        }
    }

    #[test]
    fn orders_from_spacetime() {
        let sc = SwitchScenario::new(vec![wing("S")], ControlAmplitudes::balanced(), spacetime_source(2.0)).unwrap();
        assert_eq!(sc.order(Branch::AbeforeB, 0), OrderRelation::ABeforeB);
        assert_eq!(sc.order(Branch::BbeforeA, 0), OrderRelation::BBeforeA);
        assert_eq!(switch_state(&sc).unwrap(), switch_state(&single()).unwrap());

        let err = SwitchScenario::new(vec![wing("S")], ControlAmplitudes::balanced(), spacetime_source(0.1));
        assert!(matches!(
            err,
            Err(SwitchError::OrderMismatch {
                found: OrderRelation::Spacelike,
                ..
            })
        ));
    }
}
