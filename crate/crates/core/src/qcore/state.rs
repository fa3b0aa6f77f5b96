use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};

use super::{
    check_labels, joined_labels, positions_of, qubit_count, to_labels, DensityMatrix, QError,
    Result, Tensor, C64, STRUCTURAL_TOL,
};

/// Normalised pure state of a labelled qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
    labels: Vec<String>,
}

impl StateVector {
    /// Builds a state, rejecting vectors whose norm is not 1 within tolerance.
    pub fn new<S: AsRef<str>>(labels: &[S], amps: DVector<C64>) -> Result<Self> {
        let s = Self::unchecked(to_labels(labels), amps)?;
        let norm = s.norm();
        if (norm - 1.0).abs() > STRUCTURAL_TOL {
            return Err(QError::NotNormalized(norm));
        }
        Ok(s)
    }

    /// Builds a state from arbitrary non-zero amplitudes, rescaling to unit norm.
    pub fn normalized<S: AsRef<str>>(labels: &[S], amps: DVector<C64>) -> Result<Self> {
        let s = Self::unchecked(to_labels(labels), amps)?;
        let norm = s.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QError::ZeroVector);
        }
        Ok(Self {
            amps: s.amps.unscale(norm),
            labels: s.labels,
        })
    }

    pub fn from_slice<S: AsRef<str>>(labels: &[S], amps: &[C64]) -> Result<Self> {
        Self::new(labels, DVector::from_column_slice(amps))
    }

    /// Computational basis state `|index⟩`.
    pub fn basis<S: AsRef<str>>(labels: &[S], index: usize) -> Result<Self> {
        let dim = 1usize << labels.len();
        if index >= dim {
            return Err(QError::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amps = DVector::zeros(dim);
        amps[index] = C64::new(1.0, 0.0);
        Self::new(labels, amps)
    }

    fn unchecked(labels: Vec<String>, amps: DVector<C64>) -> Result<Self> {
        check_labels(&labels)?;
        let expected = 1usize << labels.len();
        if amps.len() != expected || qubit_count(amps.len()).is_none() {
            return Err(QError::DimensionMismatch {
                expected,
                found: amps.len(),
            });
        }
        Ok(Self { amps, labels })
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<String>, amps: DVector<C64>) -> Self {
        Self { amps, labels }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `⟨self|other⟩`; both states must carry the same labels in the same order.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.labels != other.labels {
            return Err(QError::LabelMismatch {
                left: self.labels.clone(),
                right: other.labels.clone(),
            });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// Same amplitudes under new register names.
    pub fn relabel<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        Self::new(labels, self.amps.clone())
    }

    pub fn projector(&self) -> DMatrix<C64> {
        &self.amps * self.amps.adjoint()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_parts_unchecked(self.labels.clone(), self.projector())
    }

    /// Reduced density matrix on `keep` (labels in this state's order).
    pub fn reduced<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityMatrix> {
        let keep = to_labels(keep);
        let mut kept = positions_of(&self.labels, &keep)?;
        kept.sort_unstable();
        let n = self.num_qubits();
        let discard = super::complement(&kept, n);
        let ko = super::local_offsets(&kept, n);
        let dof = super::local_offsets(&discard, n);
        let d = ko.len();
        let mut rho = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for t in &dof {
                    acc += self.amps[ko[i] | t] * self.amps[ko[j] | t].conj();
                }
                rho[(i, j)] = acc;
            }
        }
        let labels = kept.iter().map(|&p| self.labels[p].clone()).collect();
        Ok(DensityMatrix::from_parts_unchecked(labels, rho))
    }

    /// Equal up to a global phase, within `tol` on the overlap.
    pub fn equal_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        match self.inner(other) {
            Ok(ov) => (ov.norm() - 1.0).abs() <= tol,
            Err(_) => false,
        }
    }
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let labels = joined_labels(&self.labels, &other.labels)?;
        check_labels(&labels)?;
        Ok(Self {
            amps: self.amps.kronecker(&other.amps),
            labels,
        })
    }
}

/// The six single-qubit Pauli eigenstates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliEigenstate {
    ZPlus,
    ZMinus,
    XPlus,
    XMinus,
    YPlus,
    YMinus,
}

impl PauliEigenstate {
    pub const ALL: [PauliEigenstate; 6] = [
        PauliEigenstate::ZPlus,
        PauliEigenstate::ZMinus,
        PauliEigenstate::XPlus,
        PauliEigenstate::XMinus,
        PauliEigenstate::YPlus,
        PauliEigenstate::YMinus,
    ];

    pub fn amplitudes(self) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        match self {
            PauliEigenstate::ZPlus => [one, zero],
            PauliEigenstate::ZMinus => [zero, one],
            PauliEigenstate::XPlus => [C64::new(h, 0.0), C64::new(h, 0.0)],
            PauliEigenstate::XMinus => [C64::new(h, 0.0), C64::new(-h, 0.0)],
            PauliEigenstate::YPlus => [C64::new(h, 0.0), C64::new(0.0, h)],
            PauliEigenstate::YMinus => [C64::new(h, 0.0), C64::new(0.0, -h)],
        }
    }

    pub fn ket(self, label: &str) -> StateVector {
        StateVector::from_parts_unchecked(
            vec![label.to_string()],
            DVector::from_column_slice(&self.amplitudes()),
        )
    }

    pub fn projector(self) -> DMatrix<C64> {
        self.ket("q").projector()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn tensor_of_zeros_is_zero_zero() {
        let a = PauliEigenstate::ZPlus.ket("a");
        let b = PauliEigenstate::ZPlus.ket("b");
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.labels(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ab.amplitudes().as_slice(), &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
    }

    #[test]
    fn tensor_of_y_plus_states() {
        // (|0⟩+i|1⟩)(|0⟩+i|1⟩)/2 = (1, i, i, -1)/2
        let a = PauliEigenstate::YPlus.ket("a");
        let b = PauliEigenstate::YPlus.ket("b");
        let ab = a.tensor(&b).unwrap();
        let expected = [c(0.5, 0.), c(0., 0.5), c(0., 0.5), c(-0.5, 0.)];
        for (x, y) in ab.amplitudes().iter().zip(expected) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn tensor_rejects_label_collision() {
        let a = PauliEigenstate::ZPlus.ket("s");
        assert_eq!(a.tensor(&a), Err(QError::LabelCollision("s".into())));
    }

    #[test]
    fn rejects_unnormalised_and_bad_dimension() {
        let v = DVector::from_column_slice(&[c(1., 0.), c(1., 0.)]);
        assert!(matches!(StateVector::new(&["q"], v.clone()), Err(QError::NotNormalized(_))));
        assert!(StateVector::normalized(&["q"], v).is_ok());
        let v3 = DVector::from_column_slice(&[c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(matches!(
            StateVector::new(&["q"], v3),
            Err(QError::DimensionMismatch { .. })
        ));
        assert_eq!(
            StateVector::normalized(&["q"], DVector::zeros(2)),
            Err(QError::ZeroVector)
        );
    }

    #[test]
    fn reduced_state_of_bell_pair_is_maximally_mixed() {
        let h = FRAC_1_SQRT_2;
        let bell = StateVector::from_slice(&["a", "b"], &[c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)])
            .unwrap();
        for keep in ["a", "b"] {
            let r = bell.reduced(&[keep]).unwrap();
            let m = r.matrix();
            assert!((m[(0, 0)].re - 0.5).abs() < 1e-15);
            assert!((m[(1, 1)].re - 0.5).abs() < 1e-15);
            assert!(m[(0, 1)].norm() < 1e-15);
        }
    }
}
