use nalgebra::DMatrix;

use super::{
    check_labels, complement, hermitian_eigenvalues, hermiticity_defect, joined_labels,
    local_offsets, positions_of, to_labels, QError, Result, StateVector, Tensor, C64,
    STRUCTURAL_TOL,
};

/// Mixed state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    labels: Vec<String>,
}

impl DensityMatrix {
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
        let herm = hermiticity_defect(&matrix);
        if herm > STRUCTURAL_TOL {
            return Err(QError::NotHermitian(herm));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STRUCTURAL_TOL || tr.im.abs() > STRUCTURAL_TOL {
            return Err(QError::BadTrace(tr.re));
        }
        let min = hermitian_eigenvalues(&matrix)[0];
        if min < -STRUCTURAL_TOL {
            return Err(QError::NotPositive(min));
        }
        Ok(Self { matrix, labels })
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<String>, matrix: DMatrix<C64>) -> Self {
        Self { matrix, labels }
    }

    pub fn from_pure(s: &StateVector) -> Self {
        s.to_density()
    }

    pub fn maximally_mixed<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let d = 1usize << labels.len();
        Self::new(labels, DMatrix::identity(d, d).unscale(d as f64))
    }

    /// Convex combination; all parts must share labels and weights must sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or(QError::BadWeights(0.0))?.1;
        let sum: f64 = parts.iter().map(|(p, _)| p).sum();
        if parts.iter().any(|(p, _)| *p < 0.0) || (sum - 1.0).abs() > STRUCTURAL_TOL {
            return Err(QError::BadWeights(sum));
        }
        let mut acc = DMatrix::zeros(first.dim(), first.dim());
        for (p, rho) in parts {
            if rho.labels != first.labels {
                return Err(QError::LabelMismatch {
                    left: first.labels.clone(),
                    right: rho.labels.clone(),
                });
            }
            acc += rho.matrix.scale(*p);
        }
        Ok(Self::from_parts_unchecked(first.labels.clone(), acc))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn relabel<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let labels = to_labels(labels);
        check_labels(&labels)?;
        if labels.len() != self.labels.len() {
            return Err(QError::DimensionMismatch {
                expected: self.labels.len(),
                found: labels.len(),
            });
        }
        Ok(Self::from_parts_unchecked(labels, self.matrix.clone()))
    }

    /// `Tr(ρ O)` for an operator on the full register, real part.
    pub fn expectation(&self, op: &DMatrix<C64>) -> Result<f64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(QError::DimensionMismatch {
                expected: self.dim(),
                found: op.nrows(),
            });
        }
        Ok((&self.matrix * op).trace().re)
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let labels = joined_labels(&self.labels, &other.labels)?;
        check_labels(&labels)?;
        Ok(Self {
            matrix: self.matrix.kronecker(&other.matrix),
            labels,
        })
    }
}

/// Traces out the registers in `discard`; kept registers retain their order.
pub fn partial_trace<S: AsRef<str>>(rho: &DensityMatrix, discard: &[S]) -> Result<DensityMatrix> {
    let discard = to_labels(discard);
    let n = rho.labels.len();
    let mut gone = positions_of(&rho.labels, &discard)?;
    gone.sort_unstable();
    let kept = complement(&gone, n);
    let ko = local_offsets(&kept, n);
    let go = local_offsets(&gone, n);
    let d = ko.len();
    let out = DMatrix::from_fn(d, d, |i, j| {
        go.iter()
            .map(|t| rho.matrix[(ko[i] | t, ko[j] | t)])
            .sum::<C64>()
    });
    let labels = kept.iter().map(|&p| rho.labels[p].clone()).collect();
    Ok(DensityMatrix::from_parts_unchecked(labels, out))
}

/// `½ Σ|λ_i(a − b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if a.labels != b.labels {
        return Err(QError::LabelMismatch {
            left: a.labels.clone(),
            right: b.labels.clone(),
        });
    }
    let diff = &a.matrix - &b.matrix;
    let d: f64 = hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum();
    Ok((0.5 * d).min(1.0))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use super::*;
    use crate::qcore::PauliEigenstate;

    #[test]
    fn trace_distance_examples() {
        let zero = PauliEigenstate::ZPlus.ket("q").to_density();
        let one = PauliEigenstate::ZMinus.ket("q").to_density();
        let mixed = DensityMatrix::maximally_mixed(&["q"]).unwrap();
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-15);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-14);
        assert!((trace_distance(&zero, &mixed).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn trace_distance_rejects_dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(&["q"]).unwrap();
        let b = DensityMatrix::maximally_mixed(&["q", "r"]).unwrap();
        assert!(matches!(trace_distance(&a, &b), Err(QError::DimensionMismatch { .. })));
    }

    #[test]
    fn partial_trace_of_bell_pair() {
        let h = FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let bell = StateVector::from_slice(&["a", "b"], &[C64::new(h, 0.), z, z, C64::new(h, 0.)])
            .unwrap()
            .to_density();
        let half = DensityMatrix::maximally_mixed(&["a"]).unwrap();
        let ra = partial_trace(&bell, &["b"]).unwrap();
        assert!(trace_distance(&ra, &half).unwrap() < 1e-15);
        let rb = partial_trace(&bell, &["a"]).unwrap();
        assert_eq!(rb.labels(), &["b".to_string()]);
        assert!((rb.matrix() - half.matrix()).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let ra = PauliEigenstate::YPlus.ket("a").to_density();
        let rb = DensityMatrix::maximally_mixed(&["b"]).unwrap();
        let ab = ra.tensor(&rb).unwrap();
        let back = partial_trace(&ab, &["b"]).unwrap();
        assert!(trace_distance(&back, &ra).unwrap() < 1e-15);
        assert!(matches!(partial_trace(&ab, &["c"]), Err(QError::UnknownLabel(_))));
    }

    #[test]
    fn validation_rejects_non_states() {
        let m = DMatrix::from_row_slice(2, 2, &[C64::new(1., 0.), C64::new(1., 0.), C64::new(0., 0.), C64::new(0., 0.)]);
        assert!(matches!(DensityMatrix::new(&["q"], m), Err(QError::NotHermitian(_))));
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[C64::new(1.5, 0.), C64::new(-0.5, 0.)]));
        assert!(matches!(DensityMatrix::new(&["q"], m), Err(QError::NotPositive(_))));
        let m = DMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(&["q"], m), Err(QError::BadTrace(_))));
    }
}
