use nalgebra::DMatrix;

use super::{
    apply_on_positions, check_labels, joined_labels, positions_of, to_labels, QError, Result,
    StateVector, Tensor, C64, STRUCTURAL_TOL,
};

/// Square matrix acting on the named registers.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: DMatrix<C64>,
    labels: Vec<String>,
}

impl Operator {
    pub fn new<S: AsRef<str>>(labels: &[S], matrix: DMatrix<C64>) -> Result<Self> {
        let labels = to_labels(labels);
        check_labels(&labels)?;
        if !matrix.is_square() {
            return Err(QError::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let expected = 1usize << labels.len();
        if matrix.nrows() != expected {
            return Err(QError::DimensionMismatch {
                expected,
                found: matrix.nrows(),
            });
        }
        Ok(Self { matrix, labels })
    }

    pub fn identity<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let d = 1usize << labels.len();
        Self::new(labels, DMatrix::identity(d, d))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Same matrix on other registers.
    pub fn relabel<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        Self::new(labels, self.matrix.clone())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            labels: self.labels.clone(),
        }
    }

    /// Operator product `self · rhs` (rhs acts first).
    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        if self.labels != rhs.labels {
            return Err(QError::LabelMismatch {
                left: self.labels.clone(),
                right: rhs.labels.clone(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &rhs.matrix,
            labels: self.labels.clone(),
        })
    }

    /// max |U†U − I| over entries.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.matrix.nrows();
        let prod = self.matrix.adjoint() * &self.matrix;
        (prod - DMatrix::<C64>::identity(d, d))
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= STRUCTURAL_TOL
    }

    pub fn commutes_with(&self, other: &Operator, tol: f64) -> bool {
        if self.labels != other.labels {
            return false;
        }
        let c = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        c.iter().all(|z| z.norm() <= tol)
    }

    /// Embeds this operator into the full register `labels`.
    pub fn embed<S: AsRef<str>>(&self, labels: &[S]) -> Result<DMatrix<C64>> {
        let all = to_labels(labels);
        let pos = positions_of(&all, &self.labels)?;
        let n = all.len();
        let d = 1usize << n;
        let mut out = DMatrix::zeros(d, d);
        for col in 0..d {
            let mut e = nalgebra::DVector::zeros(d);
            e[col] = C64::new(1.0, 0.0);
            out.set_column(col, &apply_on_positions(&self.matrix, &pos, n, &e));
        }
        Ok(out)
    }
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let labels = joined_labels(&self.labels, &other.labels)?;
        check_labels(&labels)?;
        Ok(Self {
            matrix: self.matrix.kronecker(&other.matrix),
            labels,
        })
    }
}

/// Applies a unitary to the registers it names, identity elsewhere.
pub fn apply(u: &Operator, s: &StateVector) -> Result<StateVector> {
    let defect = u.unitarity_defect();
    if defect > STRUCTURAL_TOL {
        return Err(QError::NotUnitary(defect));
    }
    let pos = positions_of(s.labels(), u.labels())?;
    let amps = apply_on_positions(u.matrix(), &pos, s.num_qubits(), s.amplitudes());
    Ok(StateVector::from_parts_unchecked(s.labels().to_vec(), amps))
}

/// Single-qubit matrices.
pub mod gates {
    use std::f64::consts::FRAC_1_SQRT_2;

    use nalgebra::DMatrix;

    use super::C64;

    fn m2(a: C64, b: C64, c: C64, d: C64) -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    const O: C64 = C64::new(0.0, 0.0);
    const I1: C64 = C64::new(1.0, 0.0);
    const IM: C64 = C64::new(0.0, 1.0);

    pub fn identity() -> DMatrix<C64> {
        m2(I1, O, O, I1)
    }

    pub fn sigma_x() -> DMatrix<C64> {
        m2(O, I1, I1, O)
    }

    pub fn sigma_y() -> DMatrix<C64> {
        m2(O, -IM, IM, O)
    }

    pub fn sigma_z() -> DMatrix<C64> {
        m2(I1, O, O, -I1)
    }

    /// σ_x, σ_y, σ_z in that order.
    pub fn paulis() -> [DMatrix<C64>; 3] {
        [sigma_x(), sigma_y(), sigma_z()]
    }

    /// `(I + iσ_x)/√2`.
    pub fn sqrt_x_phase() -> DMatrix<C64> {
        (identity() + sigma_x() * IM) * C64::new(FRAC_1_SQRT_2, 0.0)
    }

    pub fn hadamard() -> DMatrix<C64> {
        (sigma_x() + sigma_z()) * C64::new(FRAC_1_SQRT_2, 0.0)
    }

    /// `n·σ` for a real 3-vector `n`.
    pub fn bloch_observable(n: [f64; 3]) -> DMatrix<C64> {
        let [x, y, z] = paulis();
        x * C64::new(n[0], 0.0) + y * C64::new(n[1], 0.0) + z * C64::new(n[2], 0.0)
    }

    /// Looks up a single-qubit gate by name.
    pub fn by_name(name: &str) -> Option<DMatrix<C64>> {
        Some(match name {
            "I" | "identity" => identity(),
            "X" | "sigma_x" => sigma_x(),
            "Y" | "sigma_y" => sigma_y(),
            "Z" | "sigma_z" => sigma_z(),
            "H" | "hadamard" => hadamard(),
            "sqrt_x_phase" => sqrt_x_phase(),
            _ => return None,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use super::*;
    use crate::qcore::PauliEigenstate;

    fn single(m: DMatrix<C64>) -> Operator {
        Operator::new(&["s"], m).unwrap()
    }

    #[test]
    fn identity_tensor_identity() {
        let a = Operator::identity(&["a"]).unwrap();
        let b = Operator::identity(&["b"]).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert_eq!(ab.matrix(), &DMatrix::<C64>::identity(4, 4));
    }

    #[test]
    fn sigma_z_fixes_z_plus() {
        let z = PauliEigenstate::ZPlus.ket("s");
        let out = apply(&single(gates::sigma_z()), &z).unwrap();
        assert_eq!(out, z);
    }

    #[test]
    fn sqrt_x_phase_on_z_plus() {
        let out = apply(&single(gates::sqrt_x_phase()), &PauliEigenstate::ZPlus.ket("s")).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!((out.amplitudes()[0] - C64::new(h, 0.0)).norm() < 1e-15);
        assert!((out.amplitudes()[1] - C64::new(0.0, h)).norm() < 1e-15);
    }

    #[test]
    fn composed_order_on_z_plus() {
        // U_B U_A = (σ_z − σ_y)/√2, and (U_B U_A)|0⟩ = (|0⟩ − i|1⟩)/√2
        let ua = single(gates::sqrt_x_phase());
        let ub = single(gates::sigma_z());
        let uba = ub.compose(&ua).unwrap();
        let expected = (gates::sigma_z() - gates::sigma_y()) * C64::new(FRAC_1_SQRT_2, 0.0);
        assert!((uba.matrix() - expected).norm() < 1e-15);
        let out = apply(&uba, &PauliEigenstate::ZPlus.ket("s")).unwrap();
        assert!(out.equal_up_to_phase(&PauliEigenstate::YMinus.ket("s"), 1e-14));
        assert!((out.amplitudes()[1] - C64::new(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn apply_rejects_non_unitary() {
        let m = gates::identity() * C64::new(2.0, 0.0);
        let r = apply(&single(m), &PauliEigenstate::ZPlus.ket("s"));
        assert!(matches!(r, Err(QError::NotUnitary(_))));
    }

    #[test]
    fn apply_on_second_register_of_pair() {
        let s = PauliEigenstate::ZPlus
            .ket("a")
            .tensor(&PauliEigenstate::ZPlus.ket("b"))
            .unwrap();
        let x_on_b = Operator::new(&["b"], gates::sigma_x()).unwrap();
        let out = apply(&x_on_b, &s).unwrap();
        assert_eq!(out, StateVector::basis(&["a", "b"], 1).unwrap());
    }

    #[test]
    fn embed_matches_kronecker() {
        let x = Operator::new(&["b"], gates::sigma_x()).unwrap();
        let full = x.embed(&["a", "b"]).unwrap();
        assert_eq!(full, gates::identity().kronecker(&gates::sigma_x()));
        let full_rev = x.embed(&["b", "a"]).unwrap();
        assert_eq!(full_rev, gates::sigma_x().kronecker(&gates::identity()));
    }
}
