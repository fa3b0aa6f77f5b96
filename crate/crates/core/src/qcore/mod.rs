//! Dense complex linear algebra for labelled multi-qubit registers.
//!
//! Every object carries an ordered list of register labels. Basis indices are
//! big-endian: the first label is the most significant bit. All objects are
//! immutable values; operations return new values.

mod density;
mod measure;
mod operator;
pub mod random;
mod state;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub use density::{partial_trace, trace_distance, DensityMatrix};
pub use measure::{entanglement_entropy, project_and_condition, von_neumann_entropy_bits};
pub use operator::{apply, gates, Operator};
pub use state::{PauliEigenstate, StateVector};

pub type C64 = Complex64;

/// Tolerance for unitarity, Hermiticity, normalisation and trace checks.
pub const STRUCTURAL_TOL: f64 = 1e-10;
/// Outcome probabilities below this are treated as impossible.
pub const CONDITIONING_TOL: f64 = 1e-12;
/// Largest register handled by the dense representation.
pub const MAX_QUBITS: usize = 13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QError {
    #[error("register label `{0}` appears on both sides of a tensor product")]
    LabelCollision(String),
    #[error("register label `{0}` is repeated")]
    DuplicateLabel(String),
    #[error("unknown register label `{0}`")]
    UnknownLabel(String),
    #[error("label sets differ: {left:?} vs {right:?}")]
    LabelMismatch { left: Vec<String>, right: Vec<String> },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("{0} qubits exceeds the dense limit of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("state is not normalised (norm {0})")]
    NotNormalized(f64),
    #[error("cannot normalise the zero vector")]
    ZeroVector,
    #[error("operator is not unitary (max |U^dag U - I| = {0:e})")]
    NotUnitary(f64),
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("mixture weights must be non-negative and sum to 1 (sum {0})")]
    BadWeights(f64),
    #[error("outcome has probability {0:e}; refusing to renormalise a null vector")]
    ZeroProbability(f64),
}

pub type Result<T> = std::result::Result<T, QError>;

/// Values that can be combined with `⊗`. The left operand occupies the most
/// significant registers.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

pub fn tensor_product<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

pub(crate) fn check_labels(labels: &[String]) -> Result<()> {
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(QError::DuplicateLabel(l.clone()));
        }
    }
    if labels.len() > MAX_QUBITS {
        return Err(QError::TooManyQubits(labels.len()));
    }
    Ok(())
}

pub(crate) fn joined_labels(a: &[String], b: &[String]) -> Result<Vec<String>> {
    if let Some(l) = b.iter().find(|l| a.contains(l)) {
        return Err(QError::LabelCollision(l.clone()));
    }
    Ok(a.iter().chain(b).cloned().collect())
}

pub(crate) fn positions_of(labels: &[String], wanted: &[String]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(wanted.len());
    for w in wanted {
        let p = labels
            .iter()
            .position(|l| l == w)
            .ok_or_else(|| QError::UnknownLabel(w.clone()))?;
        if out.contains(&p) {
            return Err(QError::DuplicateLabel(w.clone()));
        }
        out.push(p);
    }
    Ok(out)
}

pub(crate) fn to_labels<S: AsRef<str>>(labels: &[S]) -> Vec<String> {
    labels.iter().map(|s| s.as_ref().to_string()).collect()
}

/// Basis-index offsets contributed by the bits of a sub-register.
///
/// `offsets[j]` is the full-register index bit pattern obtained by writing the
/// `k`-bit local index `j` (big-endian over `positions`) into an `n`-qubit index.
pub(crate) fn local_offsets(positions: &[usize], n: usize) -> Vec<usize> {
    let k = positions.len();
    (0..1usize << k)
        .map(|j| {
            positions.iter().enumerate().fold(0usize, |acc, (t, &p)| {
                if (j >> (k - 1 - t)) & 1 == 1 {
                    acc | (1 << (n - 1 - p))
                } else {
                    acc
                }
            })
        })
        .collect()
}

pub(crate) fn complement(positions: &[usize], n: usize) -> Vec<usize> {
    (0..n).filter(|p| !positions.contains(p)).collect()
}

/// Applies `matrix` to the qubits at `positions` of an `n`-qubit amplitude
/// vector, with identity on the remaining qubits. No unitarity check.
pub(crate) fn apply_on_positions(
    matrix: &DMatrix<C64>,
    positions: &[usize],
    n: usize,
    amps: &DVector<C64>,
) -> DVector<C64> {
    let local = local_offsets(positions, n);
    let rest = local_offsets(&complement(positions, n), n);
    let k = local.len();
    let mut out = DVector::zeros(amps.len());
    let mut buf = vec![C64::new(0.0, 0.0); k];
    for &base in &rest {
        for (j, off) in local.iter().enumerate() {
            buf[j] = amps[base | off];
        }
        for (r, off) in local.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (c, v) in buf.iter().enumerate() {
                acc += matrix[(r, c)] * v;
            }
            out[base | off] = acc;
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub(crate) fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn qubit_count(dim: usize) -> Option<usize> {
    if dim.is_power_of_two() {
        Some(dim.trailing_zeros() as usize)
    } else {
        None
    }
}
