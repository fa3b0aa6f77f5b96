//! Seeded random states and unitaries for randomized checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DensityMatrix, Operator, Result, StateVector, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Uniformly (Haar) distributed pure state.
pub fn random_state<R: Rng + ?Sized, S: AsRef<str>>(labels: &[S], rng: &mut R) -> Result<StateVector> {
    let d = 1usize << labels.len();
    let v = DVector::from_fn(d, |_, _| gaussian(rng));
    StateVector::normalized(labels, v)
}

/// Haar-random unitary matrix of dimension `2^k`, via QR with phase fix.
pub fn random_unitary_matrix<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DMatrix<C64> {
    let d = 1usize << k;
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| {
        let x = r[(i, i)];
        if x.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x / x.norm()
        }
    }));
    q * phases
}

pub fn random_unitary<R: Rng + ?Sized, S: AsRef<str>>(labels: &[S], rng: &mut R) -> Result<Operator> {
    Operator::new(labels, random_unitary_matrix(labels.len(), rng))
}

/// Full-rank random density matrix (`G G† / Tr`).
pub fn random_density<R: Rng + ?Sized, S: AsRef<str>>(labels: &[S], rng: &mut R) -> Result<DensityMatrix> {
    let d = 1usize << labels.len();
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let mut m = m.unscale(tr);
    // symmetrise away rounding
    m = (&m + m.adjoint()).unscale(2.0);
    DensityMatrix::new(labels, m)
}
