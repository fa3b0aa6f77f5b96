//! Finite hidden-order models: a latent variable `λ` fixes (stochastically)
//! the order on each wing, a separable state variable `f` fixes the local
//! states, each wing answers its setting locally, and an extra outcome `z`
//! may depend on everything except the settings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BellError, Result};
use crate::qcore::CONDITIONING_TOL;
use crate::switch::MassOutcome;

/// Normalisation tolerance for every distribution in a model.
pub const MODEL_TOL: f64 = 1e-12;
/// Default largest support of `λ` and of `f` when sampling.
pub const MAX_SUPPORT: usize = 16;

/// `P(o₁, o₂, z)` indexed `[o₁][o₂][z]`.
pub type JointTable = [[[f64; 2]; 2]; 2];

/// `P(σ₁, σ₂ | λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRule {
    /// Per `λ`: `[P(σ₁ = A₁≺B₁ | λ), P(σ₂ = A₂≺B₂ | λ)]`, combined as a product.
    Product(Vec<[f64; 2]>),
    /// Per `λ`: `P(σ₁, σ₂ | λ)` indexed `2σ₁ + σ₂`.
    Joint(Vec<[f64; 4]>),
}

impl OrderRule {
    fn len(&self) -> usize {
        match self {
            OrderRule::Product(v) => v.len(),
            OrderRule::Joint(v) => v.len(),
        }
    }

    fn weights(&self, lambda: usize) -> [[f64; 2]; 2] {
        match self {
            OrderRule::Product(v) => {
                let [p1, p2] = v[lambda];
                let w1 = [p1, 1.0 - p1];
                let w2 = [p2, 1.0 - p2];
                [[w1[0] * w2[0], w1[0] * w2[1]], [w1[1] * w2[0], w1[1] * w2[1]]]
            }
            OrderRule::Joint(v) => {
                let p = v[lambda];
                [[p[0], p[1]], [p[2], p[3]]]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenOrderModel {
    /// `P(λ, f)` indexed `[λ][f]`.
    pub p_lambda_f: Vec<Vec<f64>>,
    pub order_rule: OrderRule,
    /// `P(o_j = +1 | i_j, T^{σ_j}(ω_j^f))` indexed `[j][f][σ_j][i_j]`.
    pub response: [Vec<[[f64; 2]; 2]>; 2],
    /// `P(z = + | λ, f, σ₁, σ₂)` indexed `[λ][f][σ₁][σ₂]`.
    pub d_outcome: Vec<Vec<[[f64; 2]; 2]>>,
}

fn probability(name: &str, p: f64) -> Result<()> {
    if p.is_finite() && (-MODEL_TOL..=1.0 + MODEL_TOL).contains(&p) {
        Ok(())
    } else {
        Err(BellError::InvalidModel(format!("{name} = {p} is not a probability")))
    }
}

fn normalised(name: &str, total: f64) -> Result<()> {
    if (total - 1.0).abs() <= MODEL_TOL {
        Ok(())
    } else {
        Err(BellError::InvalidModel(format!("{name} sums to {total}")))
    }
}

impl HiddenOrderModel {
    pub fn n_lambda(&self) -> usize {
        self.p_lambda_f.len()
    }

    pub fn n_f(&self) -> usize {
        self.p_lambda_f.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let (nl, nf) = (self.n_lambda(), self.n_f());
        if nl == 0 || nf == 0 {
            return Err(BellError::InvalidModel("empty support".into()));
        }
        let mut total = 0.0;
        for row in &self.p_lambda_f {
            if row.len() != nf {
                return Err(BellError::InvalidModel("ragged P(lambda, f)".into()));
            }
            for &p in row {
                probability("P(lambda, f)", p)?;
                total += p;
            }
        }
        normalised("P(lambda, f)", total)?;
        if self.order_rule.len() != nl {
            return Err(BellError::InvalidModel(format!(
                "order rule covers {} values of lambda, expected {nl}",
                self.order_rule.len()
            )));
        }
        match &self.order_rule {
            OrderRule::Product(v) => {
                for p in v.iter().flatten() {
                    probability("P(sigma_j | lambda)", *p)?;
                }
            }
            OrderRule::Joint(v) => {
                for row in v {
                    row.iter().try_for_each(|&p| probability("P(sigma | lambda)", p))?;
                    normalised("P(sigma | lambda)", row.iter().sum())?;
                }
            }
        }
        for (j, r) in self.response.iter().enumerate() {
            if r.len() != nf {
                return Err(BellError::InvalidModel(format!(
                    "wing {} response covers {} values of f, expected {nf}",
                    j + 1,
                    r.len()
                )));
            }
            for p in r.iter().flatten().flatten() {
                probability("response", *p)?;
            }
        }
        if self.d_outcome.len() != nl || self.d_outcome.iter().any(|row| row.len() != nf) {
            return Err(BellError::InvalidModel("d_outcome shape".into()));
        }
        for p in self.d_outcome.iter().flatten().flatten().flatten() {
            probability("P(z | lambda, f, sigma)", *p)?;
        }
        Ok(())
    }

    /// `P(λ, f)·P(σ₁, σ₂ | λ)` over the flattened `(λ, f)` index. Settings
    /// play no part in this table.
    pub fn latent_weights(&self) -> Vec<[[f64; 2]; 2]> {
        let mut out = Vec::with_capacity(self.n_lambda() * self.n_f());
        for (l, row) in self.p_lambda_f.iter().enumerate() {
            let order = self.order_rule.weights(l);
            for &p in row {
                out.push(order.map(|r| r.map(|w| w * p)));
            }
        }
        out
    }

    fn joint_with(&self, latent: &[[[f64; 2]; 2]], i1: usize, i2: usize) -> JointTable {
        let nf = self.n_f();
        let mut t = [[[0.0; 2]; 2]; 2];
        for (k, w) in latent.iter().enumerate() {
            let (l, f) = (k / nf, k % nf);
            for s1 in 0..2 {
                for s2 in 0..2 {
                    let weight = w[s1][s2];
                    if weight == 0.0 {
                        continue;
                    }
                    let p1 = self.response[0][f][s1][i1];
                    let p2 = self.response[1][f][s2][i2];
                    let pz = self.d_outcome[l][f][s1][s2];
                    let o1 = [p1, 1.0 - p1];
                    let o2 = [p2, 1.0 - p2];
                    let z = [pz, 1.0 - pz];
                    for a in 0..2 {
                        for b in 0..2 {
                            for c in 0..2 {
                                t[a][b][c] += weight * o1[a] * o2[b] * z[c];
                            }
                        }
                    }
                }
            }
        }
        t
    }
}

/// Exact `P(o₁, o₂, z | i₁, i₂)` by summation over the latent variables.
pub fn classical_joint_probability(m: &HiddenOrderModel, i1: usize, i2: usize) -> Result<JointTable> {
    m.validate()?;
    if i1 > 1 || i2 > 1 {
        return Err(BellError::InvalidModel(format!("settings ({i1}, {i2}) out of range")));
    }
    Ok(m.joint_with(&m.latent_weights(), i1, i2))
}

fn z_index(z: MassOutcome) -> usize {
    match z {
        MassOutcome::Plus => 0,
        MassOutcome::Minus => 1,
    }
}

/// `P(o₁, o₂ | z)` by Bayes' rule.
pub fn condition_on_outcome_z(table: &JointTable, z: MassOutcome) -> Result<[[f64; 2]; 2]> {
    let c = z_index(z);
    let pz: f64 = table.iter().flatten().map(|p| p[c]).sum();
    if pz < CONDITIONING_TOL {
        return Err(BellError::ZeroProbability {
            z: if c == 0 { '+' } else { '-' },
            probability: pz,
        });
    }
    Ok([
        [table[0][0][c] / pz, table[0][1][c] / pz],
        [table[1][0][c] / pz, table[1][1][c] / pz],
    ])
}

/// CHSH combination of conditional tables indexed `[i₁][i₂][o₁][o₂]`.
pub fn chsh_from_table(tables: &[[[[f64; 2]; 2]; 2]; 2]) -> f64 {
    let e = |t: &[[f64; 2]; 2]| t[0][0] - t[0][1] - t[1][0] + t[1][1];
    e(&tables[0][0]) + e(&tables[0][1]) + e(&tables[1][0]) - e(&tables[1][1])
}

fn chsh_per_z(m: &HiddenOrderModel) -> [Option<f64>; 2] {
    let latent = m.latent_weights();
    let tables: [[JointTable; 2]; 2] = [
        [m.joint_with(&latent, 0, 0), m.joint_with(&latent, 0, 1)],
        [m.joint_with(&latent, 1, 0), m.joint_with(&latent, 1, 1)],
    ];
    MassOutcome::BOTH.map(|z| {
        let mut cond = [[[[0.0; 2]; 2]; 2]; 2];
        for i1 in 0..2 {
            for i2 in 0..2 {
                cond[i1][i2] = condition_on_outcome_z(&tables[i1][i2], z).ok()?;
            }
        }
        Some(chsh_from_table(&cond))
    })
}

/// z-conditioned CHSH values `[z = +, z = −]`; `None` where `P(z) = 0`.
pub fn classical_chsh(m: &HiddenOrderModel) -> Result<[Option<f64>; 2]> {
    m.validate()?;
    Ok(chsh_per_z(m))
}

/// The 16 deterministic response strategies with both orders fixed to
/// `order = [σ₁, σ₂]` and `z = +` always.
pub fn deterministic_strategy_models(order: [usize; 2]) -> Vec<HiddenOrderModel> {
    let bit = |s: usize, i: usize| ((s >> i) & 1) as f64;
    let ab = |s: usize| if s == 0 { 1.0 } else { 0.0 };
    let mut out = Vec::with_capacity(16);
    for s1 in 0..4 {
        for s2 in 0..4 {
            let table = |s: usize| {
                let r = [bit(s, 0), bit(s, 1)];
                vec![[r, r]]
            };
            out.push(HiddenOrderModel {
                p_lambda_f: vec![vec![1.0]],
                order_rule: OrderRule::Product(vec![[ab(order[0]), ab(order[1])]]),
                response: [table(s1), table(s2)],
                d_outcome: vec![vec![[[1.0; 2]; 2]]],
            });
        }
    }
    out
}

/// Largest `|CHSH|` over every deterministic strategy and fixed order pair.
pub fn exhaustive_deterministic_bound() -> f64 {
    let mut best = 0.0f64;
    for order in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        for m in deterministic_strategy_models(order) {
            if let Some(v) = chsh_per_z(&m)[0] {
                best = best.max(v.abs());
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZMode {
    /// `P(z | λ, f, σ₁, σ₂)` drawn independently for every argument.
    Correlated,
    /// One `P(z = +)` for the whole model.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOptions {
    pub max_support: usize,
    /// Probability that a sampled table is deterministic rather than uniform.
    pub extremal_fraction: f64,
    /// Sample `P(σ₁, σ₂ | λ)` jointly instead of as a product.
    pub joint_order: bool,
    pub z_mode: ZMode,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            max_support: MAX_SUPPORT,
            extremal_fraction: 0.25,
            joint_order: false,
            z_mode: ZMode::Correlated,
        }
    }
}

fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let x: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = x.iter().sum();
    if total > 0.0 {
        x.into_iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    }
}

fn entry(rng: &mut ChaCha8Rng, extremal: bool) -> f64 {
    if extremal {
        if rng.random_bool(0.5) {
            1.0
        } else {
            0.0
        }
    } else {
        rng.random::<f64>()
    }
}

/// Model `index` of the sweep seeded by `seed`; independent of how many other
/// models are drawn or in which order.
pub fn sample_model(seed: u64, index: u64, opts: &SweepOptions) -> HiddenOrderModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let max = opts.max_support.max(1);
    let nl = rng.random_range(1..=max);
    let nf = rng.random_range(1..=max);
    let flat = dirichlet(&mut rng, nl * nf);
    let p_lambda_f = flat.chunks(nf).map(<[f64]>::to_vec).collect();

    let frac = opts.extremal_fraction.clamp(0.0, 1.0);
    let extremal_order = rng.random_bool(frac);
    let order_rule = if opts.joint_order {
        OrderRule::Joint(
            (0..nl)
                .map(|_| {
                    if extremal_order {
                        let mut p = [0.0; 4];
                        p[rng.random_range(0..4)] = 1.0;
                        p
                    } else {
                        let d = dirichlet(&mut rng, 4);
                        [d[0], d[1], d[2], d[3]]
                    }
                })
                .collect(),
        )
    } else {
        OrderRule::Product(
            (0..nl)
                .map(|_| [entry(&mut rng, extremal_order), entry(&mut rng, extremal_order)])
                .collect(),
        )
    };

    let extremal_response = rng.random_bool(frac);
    let table = |rng: &mut ChaCha8Rng| -> Vec<[[f64; 2]; 2]> {
        (0..nf)
            .map(|_| {
                let mut r = [[0.0; 2]; 2];
                for v in r.iter_mut().flatten() {
                    *v = entry(rng, extremal_response);
                }
                r
            })
            .collect()
    };
    let response = [table(&mut rng), table(&mut rng)];

    let extremal_z = rng.random_bool(frac);
    let d_outcome = match opts.z_mode {
        ZMode::Correlated => (0..nl)
            .map(|_| {
                (0..nf)
                    .map(|_| {
                        let mut z = [[0.0; 2]; 2];
                        for v in z.iter_mut().flatten() {
                            *v = entry(&mut rng, extremal_z);
                        }
                        z
                    })
                    .collect()
            })
            .collect(),
        ZMode::Independent => {
            let p = entry(&mut rng, extremal_z);
            vec![vec![[[p; 2]; 2]; nf]; nl]
        }
    };
    HiddenOrderModel {
        p_lambda_f,
        order_rule,
        response,
        d_outcome,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub models: u64,
    pub seed: u64,
    pub options: SweepOptions,
    pub max_abs_chsh: f64,
    pub worst_index: u64,
    pub worst_z: MassOutcome,
    pub worst_model: HiddenOrderModel,
}

/// Largest z-conditioned `|CHSH|` over `n_models` sampled models. Ties go to
/// the lowest index, so the result does not depend on the thread count.
pub fn classical_chsh_sweep(n_models: u64, seed: u64, opts: &SweepOptions) -> Result<SweepResult> {
    if n_models == 0 {
        return Err(BellError::EmptySweep);
    }
    let pick = |a: (f64, u64, usize), b: (f64, u64, usize)| {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    let (value, index, z) = (0..n_models)
        .into_par_iter()
        .map(|k| {
            let m = sample_model(seed, k, opts);
            let mut best = (f64::NEG_INFINITY, k, 0);
            for (zi, v) in chsh_per_z(&m).iter().enumerate() {
                if let Some(v) = v {
                    best = pick(best, (v.abs(), k, zi));
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, u64::MAX, 0), pick);
    Ok(SweepResult {
        models: n_models,
        seed,
        options: *opts,
        max_abs_chsh: value,
        worst_index: index,
        worst_z: MassOutcome::BOTH[z],
        worst_model: sample_model(seed, index, opts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_strategies_reach_exactly_two() {
        assert_eq!(exhaustive_deterministic_bound(), 2.0);
    }

    #[test]
    fn singleton_model_is_a_product() {
        let m = &deterministic_strategy_models([0, 1])[6];
        let t = classical_joint_probability(m, 0, 1).unwrap();
        let total: f64 = t.iter().flatten().flatten().sum();
        assert_eq!(total, 1.0);
        assert_eq!(t.iter().flatten().flatten().filter(|&&p| p == 1.0).count(), 1);
    }

    #[test]
    fn independent_z_conditioning_is_a_no_op() {
        let opts = SweepOptions {
            z_mode: ZMode::Independent,
            extremal_fraction: 0.0,
            ..SweepOptions::default()
        };
        let m = sample_model(3, 0, &opts);
        let t = classical_joint_probability(&m, 1, 0).unwrap();
        let a = condition_on_outcome_z(&t, MassOutcome::Plus).unwrap();
        let b = condition_on_outcome_z(&t, MassOutcome::Minus).unwrap();
        for o1 in 0..2 {
            for o2 in 0..2 {
                let marginal = t[o1][o2][0] + t[o1][o2][1];
                assert!((a[o1][o2] - marginal).abs() < 1e-12);
                assert!((b[o1][o2] - marginal).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampled_models_are_valid_and_reproducible() {
        for joint in [false, true] {
            let opts = SweepOptions {
                joint_order: joint,
                ..SweepOptions::default()
            };
            for k in 0..20 {
                let m = sample_model(11, k, &opts);
                m.validate().unwrap();
                assert_eq!(m, sample_model(11, k, &opts));
            }
        }
        assert_ne!(
            sample_model(11, 0, &SweepOptions::default()),
            sample_model(11, 1, &SweepOptions::default())
        );
    }

    #[test]
    fn validation_catches_bad_tables() {
        let mut m = deterministic_strategy_models([0, 0]).remove(0);
        m.p_lambda_f[0][0] = 0.9;
        assert!(m.validate().is_err());
        let mut m = deterministic_strategy_models([0, 0]).remove(0);
        m.response[1][0][0][0] = 1.5;
        assert!(m.validate().is_err());
        let mut m = deterministic_strategy_models([0, 0]).remove(0);
        m.order_rule = OrderRule::Joint(vec![[0.5, 0.5, 0.5, 0.0]]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn zero_probability_z_is_reported() {
        let m = &deterministic_strategy_models([0, 0])[0];
        let t = classical_joint_probability(m, 0, 0).unwrap();
        assert!(matches!(
            condition_on_outcome_z(&t, MassOutcome::Minus),
            Err(BellError::ZeroProbability { z: '-', .. })
        ));
        assert_eq!(classical_chsh(m).unwrap()[1], None);
    }

    #[test]
    fn small_sweep_respects_bound() {
        let r = classical_chsh_sweep(200, 5, &SweepOptions::default()).unwrap();
        assert!(r.max_abs_chsh <= 2.0 + 1e-9);
        assert!(r.worst_index < 200);
    }
}
