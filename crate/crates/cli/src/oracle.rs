//! Random-instance comparisons between the process-matrix Born rule and
//! direct simulation of the corresponding circuit.

use nalgebra::DMatrix;
use qorder_core::procmat::{born_rule, LocalOperationCJ, ProcessMatrix};
use qorder_core::qcore::random::{random_state, random_unitary_matrix};
use qorder_core::qcore::{DensityMatrix, Operator, QError, StateVector, Tensor, C64};
use qorder_core::switch::{
    condition_on_mass, ControlAmplitudes, MassOutcome, OrderSource, SwitchError, SwitchScenario, Wing,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};

type M = DMatrix<C64>;

/// Generator for instance `index`; independent of how many instances run.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_effect(rng: &mut ChaCha8Rng) -> Result<M> {
    Ok(random_state(&["q"], rng).map_err(domain)?.projector())
}

/// Unitaries for every party of `order` except terminal `C…` parties, which
/// get a random rank-one effect. Returns `|Born rule − circuit|`.
pub fn fixed_order_deviation(
    w: &ProcessMatrix,
    rho: &DensityMatrix,
    order: &str,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut state = rho.matrix().clone();
    let mut ops = Vec::new();
    for party in order.split('<') {
        if party.starts_with('C') {
            let e = random_effect(rng)?;
            state = M::from_element(1, 1, (&e * &state).trace());
            ops.push(LocalOperationCJ::effect(party, &e).map_err(domain)?);
        } else {
            let u = random_unitary_matrix(1, rng);
            state = &u * state * u.adjoint();
            ops.push(LocalOperationCJ::unitary(party, &u).map_err(domain)?);
        }
    }
    let refs: Vec<&LocalOperationCJ> = ops.iter().collect();
    let p = born_rule(w, &refs).map_err(domain)?;
    Ok((p - state.trace().re).abs())
}

/// `p(z)·|⟨φ|ψ_z⟩|²` from the switch module, zero for a null outcome.
fn switch_oracle(sc: &SwitchScenario, sign: MassOutcome, phi: &StateVector) -> Result<f64> {
    match condition_on_mass(sc, sign) {
        Ok((p, target)) => Ok(p * phi.inner(&target).map_err(domain)?.norm_sqr()),
        Err(SwitchError::Quantum(QError::ZeroProbability(_))) => Ok(0.0),
        Err(e) => Err(domain(e)),
    }
}

/// Random `U_A`, `U_B` and final effect on the single-wing switch with input
/// `psi`; largest deviation over both control outcomes.
pub fn switch_deviation(
    w: &ProcessMatrix,
    psi: &StateVector,
    control: ControlAmplitudes,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let (ua, ub) = (random_unitary_matrix(1, rng), random_unitary_matrix(1, rng));
    let phi = random_state(&["q"], rng).map_err(domain)?;
    let psi = psi.relabel(&["q"]).map_err(domain)?;
    let sc = SwitchScenario::single(
        psi,
        Operator::new(&["q"], ua.clone()).map_err(domain)?,
        Operator::new(&["q"], ub.clone()).map_err(domain)?,
        control,
    )
    .map_err(domain)?;
    let a = LocalOperationCJ::unitary("A", &ua).map_err(domain)?;
    let b = LocalOperationCJ::unitary("B", &ub).map_err(domain)?;
    let c = LocalOperationCJ::effect("C", &phi.projector()).map_err(domain)?;
    let mut worst = 0.0f64;
    for sign in MassOutcome::BOTH {
        let m = LocalOperationCJ::effect("M", &sign.ket().projector()).map_err(domain)?;
        let p = born_rule(w, &[&m, &a, &b, &c]).map_err(domain)?;
        worst = worst.max((p - switch_oracle(&sc, sign, &phi)?).abs());
    }
    Ok(worst)
}

/// Same comparison for the entangled-order process against the two-wing
/// switch.
pub fn entangled_deviation(
    w: &ProcessMatrix,
    psi: [&StateVector; 2],
    control: ControlAmplitudes,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let u: Vec<M> = (0..4).map(|_| random_unitary_matrix(1, rng)).collect();
    let labels = ["S1", "S2"];
    let mut wings = Vec::new();
    let mut effects = Vec::new();
    for (k, label) in labels.iter().enumerate() {
        let s = psi[k].relabel(&[*label]).map_err(domain)?;
        let op = |m: &M| Operator::new(&[*label], m.clone()).map_err(domain);
        wings.push(Wing::new(s, op(&u[2 * k])?, op(&u[2 * k + 1])?).map_err(domain)?);
        effects.push(random_state(&[*label], rng).map_err(domain)?);
    }
    let sc = SwitchScenario::new(wings, control, OrderSource::Explicit).map_err(domain)?;
    let mut ops = Vec::new();
    for k in 0..2 {
        let n = k + 1;
        ops.push(LocalOperationCJ::unitary(&format!("A{n}"), &u[2 * k]).map_err(domain)?);
        ops.push(LocalOperationCJ::unitary(&format!("B{n}"), &u[2 * k + 1]).map_err(domain)?);
        ops.push(LocalOperationCJ::effect(&format!("C{n}"), &effects[k].projector()).map_err(domain)?);
    }
    let phi = effects[0].tensor(&effects[1]).map_err(domain)?;
    let mut worst = 0.0f64;
    for sign in MassOutcome::BOTH {
        let m = LocalOperationCJ::effect("M", &sign.ket().projector()).map_err(domain)?;
        let mut refs: Vec<&LocalOperationCJ> = vec![&m];
        refs.extend(ops.iter());
        let p = born_rule(w, &refs).map_err(domain)?;
        worst = worst.max((p - switch_oracle(&sc, sign, &phi)?).abs());
    }
    Ok(worst)
}

/// Random `U_A`, `U_B`, effect on `C` for a weighted mixture of `A<B<C` and
/// `B<A<C`.
pub fn mixture_deviation(
    w: &ProcessMatrix,
    rho: &DensityMatrix,
    weight: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let (ua, ub) = (random_unitary_matrix(1, rng), random_unitary_matrix(1, rng));
    let e = random_effect(rng)?;
    let a = LocalOperationCJ::unitary("A", &ua).map_err(domain)?;
    let b = LocalOperationCJ::unitary("B", &ub).map_err(domain)?;
    let c = LocalOperationCJ::effect("C", &e).map_err(domain)?;
    let p = born_rule(w, &[&a, &b, &c]).map_err(domain)?;
    let run = |first: &M, second: &M| {
        let u = second * first;
        (&e * &u * rho.matrix() * u.adjoint()).trace().re
    };
    let oracle = weight * run(&ua, &ub) + (1.0 - weight) * run(&ub, &ua);
    Ok((p - oracle).abs())
}
