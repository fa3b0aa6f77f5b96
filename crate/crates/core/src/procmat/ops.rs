use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ProcessError, Result};
use crate::qcore::{
    gates, hermitian_eigenvalues, hermiticity_defect, Operator, QError, C64, STRUCTURAL_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationKind {
    UnitaryChannel,
    /// One outcome of a measurement, with or without re-preparation.
    ProjectiveOutcome,
    /// Discard the input and prepare a fixed state.
    StatePreparation,
    IdentityChannel,
    /// Discard a final input.
    TraceOut,
    /// Any other completely positive map given by Kraus operators.
    KrausChannel,
}

/// CJ operator of a local operation on `X_I` (and `X_O` if present).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperationCJ {
    slots: Vec<String>,
    matrix: DMatrix<C64>,
    kind: OperationKind,
}

fn io(party: &str) -> Vec<String> {
    vec![format!("{party}_I"), format!("{party}_O")]
}

fn check_qubit(name: &str, m: &DMatrix<C64>) -> Result<()> {
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(ProcessError::BadOperation(format!(
            "{name} must be 2x2, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `|K*⟩⟩` with component `(i, o)` equal to `conj(K[o, i])`.
fn conj_vec(k: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_fn(4, |r, _| k[(r & 1, r >> 1)].conj())
}

impl LocalOperationCJ {
    /// Validates shape, Hermiticity and positivity.
    pub fn new<S: AsRef<str>>(slots: &[S], matrix: DMatrix<C64>, kind: OperationKind) -> Result<Self> {
        let slots: Vec<String> = slots.iter().map(|s| s.as_ref().to_string()).collect();
        let d = 1usize << slots.len();
        if slots.is_empty() || slots.len() > 2 || matrix.nrows() != d || matrix.ncols() != d {
            return Err(ProcessError::BadOperation(format!(
                "{}x{} matrix on slots {slots:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let h = hermiticity_defect(&matrix);
        if h > STRUCTURAL_TOL {
            return Err(QError::NotHermitian(h).into());
        }
        let min = hermitian_eigenvalues(&matrix)[0];
        if min < -STRUCTURAL_TOL {
            return Err(QError::NotPositive(min).into());
        }
        Ok(Self { slots, matrix, kind })
    }

    /// `Σ_k |K_k*⟩⟩⟨⟨K_k*|` on `party_I ⊗ party_O`.
    pub fn from_kraus(party: &str, kraus: &[DMatrix<C64>], kind: OperationKind) -> Result<Self> {
        let mut m = DMatrix::zeros(4, 4);
        for k in kraus {
            check_qubit("Kraus operator", k)?;
            let v = conj_vec(k);
            m += &v * v.adjoint();
        }
        Self::new(&io(party), m, kind)
    }

    pub fn unitary(party: &str, u: &DMatrix<C64>) -> Result<Self> {
        check_qubit("unitary", u)?;
        let defect = Operator::new(&["q"], u.clone())?.unitarity_defect();
        if defect > STRUCTURAL_TOL {
            return Err(QError::NotUnitary(defect).into());
        }
        Self::from_kraus(party, std::slice::from_ref(u), OperationKind::UnitaryChannel)
    }

    pub fn identity(party: &str) -> Self {
        Self::from_kraus(party, &[gates::identity()], OperationKind::IdentityChannel).expect("valid")
    }

    /// Outcome with effect `E` on the input, followed by preparing `σ`: `E ⊗ σᵀ`.
    pub fn measure_prepare(party: &str, effect: &DMatrix<C64>, prepared: &DMatrix<C64>) -> Result<Self> {
        check_qubit("effect", effect)?;
        check_qubit("prepared state", prepared)?;
        Self::new(&io(party), effect.kronecker(&prepared.transpose()), OperationKind::ProjectiveOutcome)
    }

    /// Discard the input and prepare `σ`: `𝟙 ⊗ σᵀ`.
    pub fn prepare(party: &str, prepared: &DMatrix<C64>) -> Result<Self> {
        check_qubit("prepared state", prepared)?;
        Self::new(
            &io(party),
            gates::identity().kronecker(&prepared.transpose()),
            OperationKind::StatePreparation,
        )
    }

    /// Final measurement outcome with effect `E` on `party_I` only.
    pub fn effect(party: &str, effect: &DMatrix<C64>) -> Result<Self> {
        check_qubit("effect", effect)?;
        Self::new(&[format!("{party}_I")], effect.clone(), OperationKind::ProjectiveOutcome)
    }

    /// Discards `party_I`.
    pub fn trace_out(party: &str) -> Self {
        Self::new(&[format!("{party}_I")], gates::identity(), OperationKind::TraceOut).expect("valid")
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn kind(&self) -> OperationKind {
        self.kind
    }

    /// `max |Tr_O M − 𝟙_I|`; zero for trace-preserving operations.
    pub fn completeness_defect(&self) -> f64 {
        let reduced = if self.slots.len() == 2 {
            DMatrix::from_fn(2, 2, |r, c| self.matrix[(2 * r, 2 * c)] + self.matrix[(2 * r + 1, 2 * c + 1)])
        } else {
            self.matrix.clone()
        };
        (reduced - gates::identity()).iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_the_unnormalised_bell_projector() {
        let m = LocalOperationCJ::identity("A");
        let one = C64::new(1.0, 0.0);
        let v = DVector::from_vec(vec![one, C64::new(0.0, 0.0), C64::new(0.0, 0.0), one]);
        assert!((m.matrix() - &v * v.adjoint()).norm() < 1e-15);
        assert_eq!(m.slots(), ["A_I", "A_O"]);
        assert!(m.completeness_defect() < 1e-15);
    }

    #[test]
    fn unitary_channels_are_complete() {
        for u in [gates::sqrt_x_phase(), gates::sigma_y(), gates::hadamard()] {
            let m = LocalOperationCJ::unitary("B", &u).unwrap();
            assert!(m.completeness_defect() < 1e-12);
        }
        assert!(LocalOperationCJ::unitary("B", &(gates::sigma_x() * C64::new(2.0, 0.0))).is_err());
    }

    #[test]
    fn unitary_choi_components() {
        let u = gates::sqrt_x_phase();
        let m = LocalOperationCJ::unitary("A", &u).unwrap();
        // entry ((i,o),(i',o')) = conj(U[o,i]) U[o',i']
        for r in 0..4 {
            for c in 0..4 {
                let expected = u[(r & 1, r >> 1)].conj() * u[(c & 1, c >> 1)];
                assert!((m.matrix()[(r, c)] - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn preparation_and_effects() {
        let p0 = crate::qcore::PauliEigenstate::ZPlus.projector();
        let prep = LocalOperationCJ::prepare("A", &p0).unwrap();
        assert!(prep.completeness_defect() < 1e-15);
        let sel = LocalOperationCJ::measure_prepare("A", &p0, &p0).unwrap();
        assert!(sel.completeness_defect() > 0.5);
        assert!(LocalOperationCJ::trace_out("C").completeness_defect() < 1e-15);
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]));
        assert!(LocalOperationCJ::effect("C", &bad).is_err());
    }
}
