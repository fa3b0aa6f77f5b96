use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::DMatrix;
use proptest::prelude::*;
use qorder_core::bell::{
    appendix_b_protocol, chsh_value, chsh_value_pure, classical_chsh, classical_chsh_sweep,
    classical_joint_probability, condition_on_outcome_z, correlators, exhaustive_deterministic_bound,
    optimal_chsh, sample_model, HiddenOrderModel, MeasurementSettings, OrderRule, SweepOptions,
    ZMode,
};
use qorder_core::qcore::random::{random_density, random_state};
use qorder_core::qcore::{DensityMatrix, StateVector, C64};
use qorder_core::spacetime::OrderRelation;
use qorder_core::switch::{condition_on_mass, reduced_target, MassOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn two_qubit(amps: [f64; 4]) -> StateVector {
    StateVector::from_slice(&["S1", "S2"], &amps.map(c)).unwrap()
}

/// `Σ ±Tr(ρ C₁ⁱ⊗C₂ᵏ)` with every Kronecker product written out by hand.
fn chsh_by_hand(rho: &DMatrix<C64>, obs: [[DMatrix<C64>; 2]; 2]) -> f64 {
    let e = |a: &DMatrix<C64>, b: &DMatrix<C64>| {
        let mut k = DMatrix::zeros(4, 4);
        for r in 0..4 {
            for s in 0..4 {
                k[(r, s)] = a[(r >> 1, s >> 1)] * b[(r & 1, s & 1)];
            }
        }
        (rho * k).trace().re
    };
    e(&obs[0][0], &obs[1][0]) + e(&obs[0][0], &obs[1][1]) + e(&obs[0][1], &obs[1][0])
        - e(&obs[0][1], &obs[1][1])
}

fn random_bloch(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

#[test]
fn conditional_states_of_the_two_wing_protocol() {
    let b = appendix_b_protocol();
    let sc = b.scenario().unwrap();
    let (pm, minus) = condition_on_mass(&sc, MassOutcome::Minus).unwrap();
    let (pp, plus) = condition_on_mass(&sc, MassOutcome::Plus).unwrap();
    assert!((pm - 0.5).abs() < 1e-12 && (pp - 0.5).abs() < 1e-12);
    let h = FRAC_1_SQRT_2;
    assert!(minus.equal_up_to_phase(&two_qubit([0.0, h, h, 0.0]), 1e-12));
    assert!(plus.equal_up_to_phase(&two_qubit([h, 0.0, 0.0, -h]), 1e-12));

    let obs = [
        [b.settings.observable(0, 0).clone(), b.settings.observable(0, 1).clone()],
        [b.settings.observable(1, 0).clone(), b.settings.observable(1, 1).clone()],
    ];
    let v_minus = chsh_value_pure(&minus, &b.settings).unwrap();
    assert!((v_minus - chsh_by_hand(&minus.projector(), obs.clone())).abs() < 1e-12);
    assert!((v_minus - 2.0 * SQRT_2).abs() < 1e-12);
    let v_plus = chsh_value_pure(&plus, &b.settings).unwrap();
    assert!((v_plus - chsh_by_hand(&plus.projector(), obs)).abs() < 1e-12);
    assert!(v_plus.abs() < 1e-12);
}

#[test]
fn tsirelson_bound_for_bell_state() {
    let phi = two_qubit([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]);
    let o = optimal_chsh(&phi.to_density()).unwrap();
    assert!((o.value - 2.0 * SQRT_2).abs() < 1e-12);
    let achieved = chsh_value(&phi.to_density(), &o.settings().unwrap()).unwrap();
    assert!((achieved - o.value).abs() < 1e-12);
}

#[test]
fn werner_states_follow_the_closed_form() {
    let phi = two_qubit([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).to_density();
    let mixed = DensityMatrix::maximally_mixed(&["S1", "S2"]).unwrap();
    for p in [0.0, 0.3, 1.0 / SQRT_2, 0.9, 1.0] {
        let w = DensityMatrix::mixture(&[(p, &phi), (1.0 - p, &mixed)]).unwrap();
        let o = optimal_chsh(&w).unwrap();
        assert!((o.value - 2.0 * SQRT_2 * p).abs() < 1e-10, "p={p}: {}", o.value);
    }
}

#[test]
fn deterministic_strategies_reach_two() {
    assert_eq!(exhaustive_deterministic_bound(), 2.0);
}

/// Orders fixed by `λ ∈ {AB, BA}` with equal weight, local responses from
/// the quantum marginals of each branch, `z` a fair coin.
fn unconditioned_switch_model() -> HiddenOrderModel {
    let b = appendix_b_protocol();
    let sc = b.scenario().unwrap();
    let mut response = [vec![[[0.0; 2]; 2]], vec![[[0.0; 2]; 2]]];
    for (j, wing) in sc.wings().iter().enumerate() {
        for (s, order) in [OrderRelation::ABeforeB, OrderRelation::BBeforeA].into_iter().enumerate() {
            let state = wing.evolve(order).unwrap().to_density();
            for i in 0..2 {
                response[j][0][s][i] = state.expectation(&((DMatrix::identity(2, 2) + b.settings.observable(j, i)) * c(0.5))).unwrap();
            }
        }
    }
    HiddenOrderModel {
        p_lambda_f: vec![vec![0.5], vec![0.5]],
        order_rule: OrderRule::Product(vec![[1.0, 1.0], [0.0, 0.0]]),
        response,
        d_outcome: vec![vec![[[0.5; 2]; 2]]; 2],
    }
}

#[test]
fn classical_model_reproduces_unconditioned_statistics() {
    let b = appendix_b_protocol();
    let rho = reduced_target(&b.scenario().unwrap()).unwrap();
    let m = unconditioned_switch_model();
    for i1 in 0..2 {
        for i2 in 0..2 {
            let t = classical_joint_probability(&m, i1, i2).unwrap();
            let p1 = (DMatrix::identity(2, 2) + b.settings.observable(0, i1)) * c(0.5);
            let p2 = (DMatrix::identity(2, 2) + b.settings.observable(1, i2)) * c(0.5);
            let id = DMatrix::<C64>::identity(2, 2);
            for o1 in 0..2 {
                for o2 in 0..2 {
                    let a = if o1 == 0 { p1.clone() } else { &id - &p1 };
                    let bb = if o2 == 0 { p2.clone() } else { &id - &p2 };
                    let q = rho.expectation(&a.kronecker(&bb)).unwrap();
                    let classical = t[o1][o2][0] + t[o1][o2][1];
                    assert!((q - classical).abs() < 1e-12);
                }
            }
        }
    }
    // the unconditioned statistics are local
    let e = correlators(&rho, &b.settings).unwrap();
    assert!(qorder_core::bell::chsh_from_correlators(&e).abs() <= 2.0 + 1e-12);
    for v in classical_chsh(&m).unwrap().into_iter().flatten() {
        assert!(v.abs() <= 2.0 + 1e-12);
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let opts = SweepOptions::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| classical_chsh_sweep(3000, 11, &opts).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert!(one.max_abs_chsh <= 2.0 + 1e-9);
    assert_eq!(one.worst_model, sample_model(11, one.worst_index, &opts));
}

#[test]
fn sweep_variants_respect_the_bound() {
    for (joint_order, z_mode) in [(true, ZMode::Correlated), (false, ZMode::Independent), (true, ZMode::Independent)] {
        let opts = SweepOptions {
            joint_order,
            z_mode,
            ..SweepOptions::default()
        };
        let r = classical_chsh_sweep(2000, 5, &opts).unwrap();
        assert!(r.max_abs_chsh <= 2.0 + 1e-9);
        assert!(r.max_abs_chsh > 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimum_dominates_sampled_settings(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = if seed % 2 == 0 {
            random_state(&["S1", "S2"], &mut rng).unwrap().to_density()
        } else {
            random_density(&["S1", "S2"], &mut rng).unwrap()
        };
        let o = optimal_chsh(&rho).unwrap();
        prop_assert!(o.value <= 2.0 * SQRT_2 + 1e-12);
        prop_assert!((chsh_value(&rho, &o.settings().unwrap()).unwrap() - o.value).abs() < 1e-10);
        for _ in 0..8 {
            let v = [[random_bloch(&mut rng), random_bloch(&mut rng)], [random_bloch(&mut rng), random_bloch(&mut rng)]];
            let s = MeasurementSettings::from_bloch(v).unwrap();
            prop_assert!(chsh_value(&rho, &s).unwrap().abs() <= o.value + 1e-10);
        }
    }

    #[test]
    fn chsh_is_linear_in_the_state(seed in any::<u64>(), p in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(&["S1", "S2"], &mut rng).unwrap();
        let b = random_density(&["S1", "S2"], &mut rng).unwrap();
        let s = MeasurementSettings::from_bloch([[random_bloch(&mut rng), random_bloch(&mut rng)], [random_bloch(&mut rng), random_bloch(&mut rng)]]).unwrap();
        let mix = DensityMatrix::mixture(&[(p, &a), (1.0 - p, &b)]).unwrap();
        let lhs = chsh_value(&mix, &s).unwrap();
        let rhs = p * chsh_value(&a, &s).unwrap() + (1.0 - p) * chsh_value(&b, &s).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn sampled_models_obey_the_classical_bound(seed in any::<u64>(), index in any::<u64>(), joint in any::<bool>()) {
        let opts = SweepOptions { joint_order: joint, ..SweepOptions::default() };
        let m = sample_model(seed, index, &opts);
        m.validate().unwrap();
        for v in classical_chsh(&m).unwrap().into_iter().flatten() {
            prop_assert!(v.abs() <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn settings_do_not_move_the_latent_variables(seed in any::<u64>(), index in 0u64..1000) {
        let m = sample_model(seed, index, &SweepOptions::default());
        let tables: Vec<_> = [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(i1, i2)| classical_joint_probability(&m, i1, i2).unwrap())
            .collect();
        let pz = |t: &[[[f64; 2]; 2]; 2]| t.iter().flatten().map(|p| p[0]).sum::<f64>();
        let marg1 = |t: &[[[f64; 2]; 2]; 2]| t[0].iter().flatten().sum::<f64>();
        let marg2 = |t: &[[[f64; 2]; 2]; 2]| t[0][0][0] + t[0][0][1] + t[1][0][0] + t[1][0][1];
        for t in &tables {
            prop_assert!((pz(t) - pz(&tables[0])).abs() < 1e-12);
            let total: f64 = t.iter().flatten().flatten().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        // no signalling between the wings
        prop_assert!((marg1(&tables[0]) - marg1(&tables[1])).abs() < 1e-12);
        prop_assert!((marg1(&tables[2]) - marg1(&tables[3])).abs() < 1e-12);
        prop_assert!((marg2(&tables[0]) - marg2(&tables[2])).abs() < 1e-12);
        prop_assert!((marg2(&tables[1]) - marg2(&tables[3])).abs() < 1e-12);
    }

    #[test]
    fn bayes_rule_recovers_the_joint_table(seed in any::<u64>(), index in 0u64..1000, i1 in 0usize..2, i2 in 0usize..2) {
        let m = sample_model(seed, index, &SweepOptions::default());
        let t = classical_joint_probability(&m, i1, i2).unwrap();
        for (zi, z) in MassOutcome::BOTH.into_iter().enumerate() {
            let pz: f64 = t.iter().flatten().map(|p| p[zi]).sum();
            match condition_on_outcome_z(&t, z) {
                Ok(cond) => {
                    for o1 in 0..2 {
                        for o2 in 0..2 {
                            prop_assert!((cond[o1][o2] * pz - t[o1][o2][zi]).abs() < 1e-14);
                        }
                    }
                }
                Err(_) => prop_assert!(pz < 1e-12),
            }
        }
    }
}
