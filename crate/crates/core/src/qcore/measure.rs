use nalgebra::DVector;

use super::{
    complement, local_offsets, positions_of, DensityMatrix, QError, Result, StateVector, C64,
    CONDITIONING_TOL, STRUCTURAL_TOL,
};

/// Projects `register` onto the single-qubit state `onto` and returns the
/// outcome probability together with the renormalised state of the other
/// registers.
pub fn project_and_condition(
    s: &StateVector,
    register: &str,
    onto: &StateVector,
) -> Result<(f64, StateVector)> {
    if onto.num_qubits() != 1 {
        return Err(QError::DimensionMismatch {
            expected: 2,
            found: onto.dim(),
        });
    }
    let onorm = onto.norm();
    if (onorm - 1.0).abs() > STRUCTURAL_TOL {
        return Err(QError::NotNormalized(onorm));
    }
    let n = s.num_qubits();
    let pos = positions_of(s.labels(), &[register.to_string()])?;
    let rest = complement(&pos, n);
    let ro = local_offsets(&rest, n);
    let po = local_offsets(&pos, n);
    let bra = onto.amplitudes();
    let mut out: DVector<C64> = DVector::zeros(ro.len());
    for (i, r) in ro.iter().enumerate() {
        out[i] = bra[0].conj() * s.amplitudes()[r | po[0]] + bra[1].conj() * s.amplitudes()[r | po[1]];
    }
    let p = out.norm_squared();
    if p < CONDITIONING_TOL {
        return Err(QError::ZeroProbability(p));
    }
    let labels = rest.iter().map(|&q| s.labels()[q].clone()).collect();
    Ok((p, StateVector::from_parts_unchecked(labels, out.unscale(p.sqrt()))))
}

/// von Neumann entropy in bits; eigenvalues within −1e-10 of zero are clamped.
pub fn von_neumann_entropy_bits(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues()
        .into_iter()
        .map(|l| if l < STRUCTURAL_TOL { 0.0 } else { l })
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Entropy of the reduced state on `cut` of a pure state, in bits.
pub fn entanglement_entropy<S: AsRef<str>>(s: &StateVector, cut: &[S]) -> Result<f64> {
    let norm = s.norm();
    if (norm - 1.0).abs() > STRUCTURAL_TOL {
        return Err(QError::NotNormalized(norm));
    }
    let rho = s.reduced(cut)?;
    Ok(von_neumann_entropy_bits(&rho))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use super::*;
    use crate::qcore::{PauliEigenstate, Tensor};

    fn bell() -> StateVector {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        StateVector::from_slice(&["a", "b"], &[h, z, z, h]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let prod = PauliEigenstate::XPlus
            .ket("a")
            .tensor(&PauliEigenstate::YMinus.ket("b"))
            .unwrap();
        assert!(entanglement_entropy(&prod, &["a"]).unwrap().abs() < 1e-12);
        assert!((entanglement_entropy(&bell(), &["a"]).unwrap() - 1.0).abs() < 1e-12);
        assert!((entanglement_entropy(&bell(), &["b"]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditioning_uncorrelated_control() {
        let psi = PauliEigenstate::YPlus.ket("s");
        let joint = PauliEigenstate::XPlus.ket("m").tensor(&psi).unwrap();
        let (p, post) = project_and_condition(&joint, "m", &PauliEigenstate::XPlus.ket("m")).unwrap();
        assert!((p - 1.0).abs() < 1e-14);
        assert!(post.equal_up_to_phase(&psi, 1e-14));
    }

    #[test]
    fn conditioning_on_orthogonal_state_fails() {
        let s = PauliEigenstate::ZPlus.ket("m");
        let r = project_and_condition(&s, "m", &PauliEigenstate::ZMinus.ket("m"));
        assert!(matches!(r, Err(QError::ZeroProbability(_))));
    }

    #[test]
    fn conditioning_bell_pair() {
        let (p, post) = project_and_condition(&bell(), "a", &PauliEigenstate::ZMinus.ket("a")).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
        assert_eq!(post.labels(), &["b".to_string()]);
        assert!(post.equal_up_to_phase(&PauliEigenstate::ZMinus.ket("b"), 1e-14));
    }
}
