//! Process matrices over qubit slots and the generalised Born rule.
//!
//! A process is stored as a list of vectors `v_k` with `W = Σ_k |v_k⟩⟨v_k|`.
//! Every process built here has rank at most a few, so this keeps the
//! 11-slot entangled-order process at a few kilobytes instead of a dense
//! 2048×2048 matrix, and positivity holds by construction.
//!
//! Slots are labelled `X_I` / `X_O` for the input and output of party `X`.
//! Local operations use the Choi–Jamiołkowski convention
//! `M = [Σ_ij |i⟩⟨j| ⊗ ℳ(|i⟩⟨j|)]ᵀ`, so a unitary `U` becomes
//! `|U*⟩⟩⟨⟨U*|` with `|𝟙⟩⟩ = Σ_j |j⟩|j⟩`, a measure-and-prepare map with effect
//! `E` and output `σ` becomes `E ⊗ σᵀ`, and a final effect `E` on an input
//! slot enters as `E` itself. States inside `W` appear untransposed, and
//! `P = Tr[(M_A ⊗ M_B ⊗ …) W]`.

mod build;
mod certify;
mod ops;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::qcore::{
    apply_on_positions, hermitian_eigen, hermiticity_defect, positions_of, QError, C64,
    MAX_QUBITS, STRUCTURAL_TOL,
};

pub use build::{
    chain_process, entangled_order_process, fixed_order_process, switch_process, ChainBranch,
};
pub use certify::{
    nonseparability_certificate, signalling_strength, signalling_test, Certificate, SIGNALLING_THRESHOLD,
};
pub use ops::{LocalOperationCJ, OperationKind};

/// Born-rule values may leave `[0, 1]` by at most this much before clamping.
pub const PROBABILITY_TOL: f64 = 1e-9;
/// Largest slot count for which a dense matrix is materialised.
pub const MAX_DENSE_SLOTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error(transparent)]
    Quantum(#[from] QError),
    #[error("slot label `{0}` must end in `_I` or `_O`")]
    BadSlotLabel(String),
    #[error("slot `{0}` is not part of the process")]
    UnknownSlot(String),
    #[error("no operation acts on slot `{0}`")]
    SlotNotCovered(String),
    #[error("slot `{0}` is used more than once")]
    SlotCoveredTwice(String),
    #[error("processes live on different slots: {left:?} vs {right:?}")]
    SlotMismatch { left: Vec<String>, right: Vec<String> },
    #[error("invalid order `{0}`")]
    BadOrder(String),
    #[error("Born rule gave a complex value (imaginary part {0:e})")]
    ComplexProbability(f64),
    #[error("Born rule gave {0}, outside [0, 1]")]
    OutOfRange(f64),
    #[error("{0} slots is too many for a dense matrix")]
    TooLarge(usize),
    #[error("invalid local operation: {0}")]
    BadOperation(String),
    #[error("branches disagree on their open slots")]
    InconsistentBranches,
}

pub type Result<T> = std::result::Result<T, ProcessError>;

/// Party name and direction of a slot label.
pub fn split_slot(label: &str) -> Result<(&str, bool)> {
    if let Some(p) = label.strip_suffix("_I") {
        if !p.is_empty() {
            return Ok((p, true));
        }
    }
    if let Some(p) = label.strip_suffix("_O") {
        if !p.is_empty() {
            return Ok((p, false));
        }
    }
    Err(ProcessError::BadSlotLabel(label.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    slots: Vec<String>,
    terms: Vec<DVector<C64>>,
}

impl ProcessMatrix {
    /// `W = Σ_k |v_k⟩⟨v_k|` on the given qubit slots.
    pub fn from_terms<S: AsRef<str>>(slots: &[S], terms: Vec<DVector<C64>>) -> Result<Self> {
        let slots: Vec<String> = slots.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, s) in slots.iter().enumerate() {
            split_slot(s)?;
            if slots[..i].contains(s) {
                return Err(QError::DuplicateLabel(s.clone()).into());
            }
        }
        if slots.len() > MAX_QUBITS {
            return Err(QError::TooManyQubits(slots.len()).into());
        }
        let d = 1usize << slots.len();
        if let Some(v) = terms.iter().find(|v| v.len() != d) {
            return Err(QError::DimensionMismatch {
                expected: d,
                found: v.len(),
            }
            .into());
        }
        let terms = terms.into_iter().filter(|v| v.norm() > 0.0).collect();
        Ok(Self { slots, terms })
    }

    /// Factorises a dense Hermitian, positive semidefinite matrix.
    pub fn from_dense<S: AsRef<str>>(slots: &[S], w: &DMatrix<C64>) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(QError::NotSquare {
                rows: w.nrows(),
                cols: w.ncols(),
            }
            .into());
        }
        let defect = hermiticity_defect(w);
        if defect > STRUCTURAL_TOL {
            return Err(QError::NotHermitian(defect).into());
        }
        let (vals, vecs) = hermitian_eigen(w);
        if vals[0] < -STRUCTURAL_TOL {
            return Err(QError::NotPositive(vals[0]).into());
        }
        let terms = vals
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > STRUCTURAL_TOL)
            .map(|(i, &l)| vecs.column(i) * C64::new(l.sqrt(), 0.0))
            .collect();
        Self::from_terms(slots, terms)
    }

    /// Convex combination of processes on the same slots.
    pub fn mixture(parts: &[(f64, &ProcessMatrix)]) -> Result<Self> {
        let total: f64 = parts.iter().map(|(p, _)| p).sum();
        if parts.is_empty() || parts.iter().any(|(p, _)| !(*p >= 0.0)) || (total - 1.0).abs() > STRUCTURAL_TOL {
            return Err(QError::BadWeights(total).into());
        }
        let slots = parts[0].1.slots.clone();
        let mut terms = Vec::new();
        for (p, w) in parts {
            if w.slots != slots {
                return Err(ProcessError::SlotMismatch {
                    left: slots,
                    right: w.slots.clone(),
                });
            }
            let s = C64::new(p.sqrt(), 0.0);
            terms.extend(w.terms.iter().map(|v| v * s));
        }
        Self::from_terms(&slots, terms)
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    /// Every slot is a qubit.
    pub fn slot_dims(&self) -> Vec<usize> {
        vec![2; self.slots.len()]
    }

    pub fn dim(&self) -> usize {
        1 << self.slots.len()
    }

    pub fn terms(&self) -> &[DVector<C64>] {
        &self.terms
    }

    /// Parties in slot order, each listed once.
    pub fn parties(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.slots {
            let (p, _) = split_slot(s).expect("validated");
            if !out.iter().any(|q| q == p) {
                out.push(p.to_string());
            }
        }
        out
    }

    pub fn has_slot(&self, label: &str) -> bool {
        self.slots.iter().any(|s| s == label)
    }

    pub fn trace(&self) -> f64 {
        self.terms.iter().map(|v| v.norm_squared()).sum()
    }

    /// Non-zero eigenvalues of `W`, descending, from the Gram matrix of the terms.
    pub fn spectrum(&self) -> Vec<f64> {
        let k = self.terms.len();
        if k == 0 {
            return Vec::new();
        }
        let gram = DMatrix::from_fn(k, k, |i, j| self.terms[i].dotc(&self.terms[j]));
        let (mut vals, _) = hermitian_eigen(&gram);
        vals.reverse();
        vals
    }

    /// Number of eigenvalues above `1e-10` times the largest.
    pub fn rank(&self) -> usize {
        let spec = self.spectrum();
        let top = spec.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        spec.iter().filter(|&&l| l > STRUCTURAL_TOL * top).count()
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        if self.slots.len() > MAX_DENSE_SLOTS {
            return Err(ProcessError::TooLarge(self.slots.len()));
        }
        let d = self.dim();
        let mut w = DMatrix::zeros(d, d);
        for v in &self.terms {
            w += v * v.adjoint();
        }
        Ok(w)
    }

    /// `⟨b|W|b⟩` for a single-qubit ket `b` on `slot`: the (unnormalised)
    /// process on the remaining slots once that slot is fixed.
    pub fn contract_slot(&self, slot: &str, ket: [C64; 2]) -> Result<ProcessMatrix> {
        let pos = self
            .slots
            .iter()
            .position(|s| s == slot)
            .ok_or_else(|| ProcessError::UnknownSlot(slot.to_string()))?;
        let n = self.slots.len();
        let bit = 1usize << (n - 1 - pos);
        let low = bit - 1;
        let terms = self
            .terms
            .iter()
            .map(|v| {
                DVector::from_fn(1 << (n - 1), |r, _| {
                    let base = ((r & !low) << 1) | (r & low);
                    ket[0].conj() * v[base] + ket[1].conj() * v[base | bit]
                })
            })
            .collect();
        let slots: Vec<String> = self.slots.iter().filter(|s| *s != slot).cloned().collect();
        Self::from_terms(&slots, terms)
    }
}

/// `Tr[(⊗ ops) W]` before any range check.
pub(crate) fn born_raw(w: &ProcessMatrix, ops: &[&LocalOperationCJ]) -> Result<C64> {
    let n = w.slots.len();
    let mut covered = vec![false; n];
    let mut placed = Vec::with_capacity(ops.len());
    for op in ops {
        let pos = positions_of(&w.slots, op.slots()).map_err(|e| match e {
            QError::UnknownLabel(l) => ProcessError::UnknownSlot(l),
            other => other.into(),
        })?;
        for &p in &pos {
            if covered[p] {
                return Err(ProcessError::SlotCoveredTwice(w.slots[p].clone()));
            }
            covered[p] = true;
        }
        placed.push((op.matrix(), pos));
    }
    if let Some(p) = covered.iter().position(|c| !c) {
        return Err(ProcessError::SlotNotCovered(w.slots[p].clone()));
    }
    let mut total = C64::new(0.0, 0.0);
    for v in &w.terms {
        let mut u = v.clone();
        for (m, pos) in &placed {
            u = apply_on_positions(m, pos, n, &u);
        }
        total += v.dotc(&u);
    }
    Ok(total)
}

/// Generalised Born rule. `ops` must cover every slot of `w` exactly once.
pub fn born_rule(w: &ProcessMatrix, ops: &[&LocalOperationCJ]) -> Result<f64> {
    let p = born_raw(w, ops)?;
    if p.im.abs() > STRUCTURAL_TOL {
        return Err(ProcessError::ComplexProbability(p.im));
    }
    if p.re < -PROBABILITY_TOL || p.re > 1.0 + PROBABILITY_TOL {
        return Err(ProcessError::OutOfRange(p.re));
    }
    Ok(p.re.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_labels() {
        assert_eq!(split_slot("A_I").unwrap(), ("A", true));
        assert_eq!(split_slot("B2_O").unwrap(), ("B2", false));
        assert!(split_slot("A").is_err());
        assert!(split_slot("_I").is_err());
    }

    #[test]
    fn dense_round_trip() {
        let v = DVector::from_fn(4, |i, _| C64::new(i as f64, 1.0));
        let w = ProcessMatrix::from_terms(&["A_I", "A_O"], vec![v.clone()]).unwrap();
        let dense = w.to_dense().unwrap();
        let back = ProcessMatrix::from_dense(&["A_I", "A_O"], &dense).unwrap();
        assert!((back.to_dense().unwrap() - &dense).norm() < 1e-12);
        assert_eq!(back.rank(), 1);
        assert!((w.trace() - v.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_dense() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-0.5, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]));
        assert!(matches!(
            ProcessMatrix::from_dense(&["A_I", "A_O"], &m),
            Err(ProcessError::Quantum(QError::NotPositive(_)))
        ));
    }

    #[test]
    fn contraction_picks_the_slot_value() {
        // |0⟩_A_I |1⟩_B_I
        let mut v = DVector::zeros(4);
        v[1] = C64::new(1.0, 0.0);
        let w = ProcessMatrix::from_terms(&["A_I", "B_I"], vec![v]).unwrap();
        let one = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let c = w.contract_slot("A_I", zero).unwrap();
        assert_eq!(c.slots(), ["B_I"]);
        assert!((c.terms()[0][1].re - 1.0).abs() < 1e-15);
        assert_eq!(w.contract_slot("A_I", one).unwrap().terms().len(), 0);
    }
}
