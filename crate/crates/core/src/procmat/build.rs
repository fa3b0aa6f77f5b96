use nalgebra::DVector;

use super::{ProcessError, ProcessMatrix, Result};
use crate::qcore::{hermitian_eigen, DensityMatrix, StateVector, C64, STRUCTURAL_TOL};
use crate::switch::ControlAmplitudes;

/// One coherent branch of a pure chain process: single-qubit inputs, identity
/// wires `|𝟙⟩⟩` from an output slot to an input slot, and slots fixed to a
/// basis value. Slots mentioned nowhere are left open (identity factor).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainBranch {
    pub amplitude: C64,
    pub inputs: Vec<(String, StateVector)>,
    pub wires: Vec<(String, String)>,
    pub pinned: Vec<(String, usize)>,
}

impl ChainBranch {
    pub fn new(amplitude: C64) -> Self {
        Self {
            amplitude,
            ..Self::default()
        }
    }

    pub fn input(mut self, slot: &str, state: &StateVector) -> Self {
        self.inputs.push((slot.to_string(), state.clone()));
        self
    }

    pub fn wire(mut self, from: &str, to: &str) -> Self {
        self.wires.push((from.to_string(), to.to_string()));
        self
    }

    pub fn pin(mut self, slot: &str, value: usize) -> Self {
        self.pinned.push((slot.to_string(), value));
        self
    }

    /// Slots fixed by this branch, or an error on double use.
    fn covered(&self, slots: &[String]) -> Result<Vec<bool>> {
        let mut covered = vec![false; slots.len()];
        let mut mark = |s: &str| -> Result<()> {
            let p = slots
                .iter()
                .position(|x| x == s)
                .ok_or_else(|| ProcessError::UnknownSlot(s.to_string()))?;
            if covered[p] {
                return Err(ProcessError::SlotCoveredTwice(s.to_string()));
            }
            covered[p] = true;
            Ok(())
        };
        for (s, psi) in &self.inputs {
            if psi.num_qubits() != 1 {
                return Err(ProcessError::BadOperation(format!("input on {s} must be one qubit")));
            }
            mark(s)?;
        }
        for (a, b) in &self.wires {
            mark(a)?;
            mark(b)?;
        }
        for (s, v) in &self.pinned {
            if *v > 1 {
                return Err(ProcessError::BadOperation(format!("slot {s} pinned to {v}")));
            }
            mark(s)?;
        }
        Ok(covered)
    }

    fn amplitude_at(&self, slots: &[String], index: usize, extra: &[(usize, usize)]) -> C64 {
        let n = slots.len();
        let bit = |s: &str| {
            let p = slots.iter().position(|x| x == s).expect("checked");
            (index >> (n - 1 - p)) & 1
        };
        let mut a = self.amplitude;
        for (s, psi) in &self.inputs {
            a *= psi.amplitudes()[bit(s)];
        }
        for (x, y) in &self.wires {
            if bit(x) != bit(y) {
                return C64::new(0.0, 0.0);
            }
        }
        for (s, v) in &self.pinned {
            if bit(s) != *v {
                return C64::new(0.0, 0.0);
            }
        }
        for &(p, v) in extra {
            if (index >> (n - 1 - p)) & 1 != v {
                return C64::new(0.0, 0.0);
            }
        }
        a
    }
}

/// `Σ_j |ω_j⟩⟨ω_j|` with `|ω_j⟩ = Σ_b branch_b` and `j` running over the
/// values of the open slots (which all branches must share).
pub fn chain_process<S: AsRef<str>>(slots: &[S], branches: &[ChainBranch]) -> Result<ProcessMatrix> {
    let slots: Vec<String> = slots.iter().map(|s| s.as_ref().to_string()).collect();
    if branches.is_empty() {
        return Err(ProcessError::InconsistentBranches);
    }
    let mut open: Option<Vec<usize>> = None;
    for b in branches {
        let cov = b.covered(&slots)?;
        let o: Vec<usize> = (0..slots.len()).filter(|&i| !cov[i]).collect();
        match &open {
            None => open = Some(o),
            Some(prev) if *prev != o => return Err(ProcessError::InconsistentBranches),
            _ => {}
        }
    }
    let open = open.expect("non-empty");
    let n = slots.len();
    let d = 1usize << n;
    let terms = (0..1usize << open.len())
        .map(|j| {
            let extra: Vec<(usize, usize)> = open
                .iter()
                .enumerate()
                .map(|(t, &p)| (p, (j >> (open.len() - 1 - t)) & 1))
                .collect();
            DVector::from_fn(d, |i, _| {
                branches
                    .iter()
                    .map(|b| b.amplitude_at(&slots, i, &extra))
                    .sum::<C64>()
            })
        })
        .collect();
    ProcessMatrix::from_terms(&slots, terms)
}

fn parse_order(order: &str) -> Result<Vec<String>> {
    let parties: Vec<String> = order.split('<').map(|s| s.trim().to_string()).collect();
    let bad = || ProcessError::BadOrder(order.to_string());
    if parties.len() < 2 {
        return Err(bad());
    }
    for (i, p) in parties.iter().enumerate() {
        let valid = p.chars().next().is_some_and(|c| c.is_ascii_uppercase())
            && p.chars().all(|c| c.is_ascii_alphanumeric());
        if !valid || parties[..i].contains(p) {
            return Err(bad());
        }
        if is_terminal(p) && i + 1 != parties.len() {
            return Err(bad());
        }
    }
    Ok(parties)
}

/// Parties named `C`, `C1`, `C2`, … only receive a system.
fn is_terminal(party: &str) -> bool {
    party.strip_prefix('C').is_some_and(|r| r.chars().all(|c| c.is_ascii_digit()))
}

fn slots_for(parties: &[String]) -> Vec<String> {
    let mut sorted = parties.to_vec();
    sorted.sort();
    let mut slots = Vec::new();
    for p in sorted {
        slots.push(format!("{p}_I"));
        if !is_terminal(&p) {
            slots.push(format!("{p}_O"));
        }
    }
    slots
}

/// `ρ` enters the first party, each output is wired to the next input, and
/// a non-terminal last party's output is left open. `order` is written like
/// `"A<B"` or `"B<A<C"`; slots are ordered alphabetically by party.
pub fn fixed_order_process(rho: &DensityMatrix, order: &str) -> Result<ProcessMatrix> {
    let parties = parse_order(order)?;
    if rho.labels().len() != 1 {
        return Err(ProcessError::BadOperation("input state must be one qubit".into()));
    }
    let slots = slots_for(&parties);
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let mut terms = Vec::new();
    for (i, &l) in vals.iter().enumerate() {
        if l <= STRUCTURAL_TOL {
            continue;
        }
        let psi = StateVector::normalized(&["q"], vecs.column(i).into_owned())?;
        let mut b = ChainBranch::new(C64::new(l.sqrt(), 0.0)).input(&format!("{}_I", parties[0]), &psi);
        for w in parties.windows(2) {
            b = b.wire(&format!("{}_O", w[0]), &format!("{}_I", w[1]));
        }
        terms.extend(chain_process(&slots, &[b])?.terms().iter().cloned());
    }
    ProcessMatrix::from_terms(&slots, terms)
}

fn wing_slots(suffix: &str) -> Vec<String> {
    ["A_I", "A_O", "B_I", "B_O", "C_I"]
        .iter()
        .map(|s| {
            let (p, d) = s.split_at(1);
            format!("{p}{suffix}{d}")
        })
        .collect()
}

fn wing_branch(b: ChainBranch, suffix: &str, psi: &StateVector, a_first: bool) -> ChainBranch {
    let (x, y) = if a_first { ("A", "B") } else { ("B", "A") };
    b.input(&format!("{x}{suffix}_I"), psi)
        .wire(&format!("{x}{suffix}_O"), &format!("{y}{suffix}_I"))
        .wire(&format!("{y}{suffix}_O"), &format!("C{suffix}_I"))
}

/// `|ω⟩ = α|0⟩^{M_I}|ABC⟩ + β|1⟩^{M_I}|BAC⟩` on
/// `(M_I, A_I, A_O, B_I, B_O, C_I)`.
pub fn switch_process(psi: &StateVector, control: ControlAmplitudes) -> Result<ProcessMatrix> {
    let mut slots = vec!["M_I".to_string()];
    slots.extend(wing_slots(""));
    let ab = wing_branch(ChainBranch::new(control.alpha).pin("M_I", 0), "", psi, true);
    let ba = wing_branch(ChainBranch::new(control.beta).pin("M_I", 1), "", psi, false);
    chain_process(&slots, &[ab, ba])
}

/// Two wings whose orders are both `A_j ≺ B_j` on `|0⟩^{M_I}` and both
/// `B_j ≺ A_j` on `|1⟩^{M_I}`; slots `M_I` then wing 1 then wing 2.
pub fn entangled_order_process(
    psi1: &StateVector,
    psi2: &StateVector,
    control: ControlAmplitudes,
) -> Result<ProcessMatrix> {
    let mut slots = vec!["M_I".to_string()];
    slots.extend(wing_slots("1"));
    slots.extend(wing_slots("2"));
    let branch = |amp: C64, m: usize, a_first: bool| {
        let b = ChainBranch::new(amp).pin("M_I", m);
        let b = wing_branch(b, "1", psi1, a_first);
        wing_branch(b, "2", psi2, a_first)
    };
    chain_process(
        &slots,
        &[branch(control.alpha, 0, true), branch(control.beta, 1, false)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::PauliEigenstate;

    #[test]
    fn order_tokens() {
        assert_eq!(parse_order("A<B<C").unwrap(), ["A", "B", "C"]);
        assert!(parse_order("A").is_err());
        assert!(parse_order("A<A").is_err());
        assert!(parse_order("C<A").is_err());
        assert!(parse_order("A<b").is_err());
        assert_eq!(slots_for(&["B".into(), "A".into(), "C".into()]), ["A_I", "A_O", "B_I", "B_O", "C_I"]);
    }

    #[test]
    fn fixed_order_structure() {
        let rho = PauliEigenstate::XPlus.ket("q").to_density();
        let w = fixed_order_process(&rho, "A<B").unwrap();
        assert_eq!(w.slots(), ["A_I", "A_O", "B_I", "B_O"]);
        assert_eq!(w.slot_dims(), [2, 2, 2, 2]);
        // Tr W = d(A_O) d(B_O)
        assert!((w.trace() - 4.0).abs() < 1e-12);
        let w = fixed_order_process(&rho, "B<A<C").unwrap();
        assert!((w.trace() - 4.0).abs() < 1e-12);
        assert_eq!(w.rank(), 1);
    }

    #[test]
    fn mixed_input_gives_higher_rank() {
        let rho = DensityMatrix::maximally_mixed(&["q"]).unwrap();
        let w = fixed_order_process(&rho, "A<B<C").unwrap();
        assert_eq!(w.rank(), 2);
        assert!((w.trace() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn switch_and_entangled_dimensions() {
        let z = PauliEigenstate::ZPlus.ket("q");
        let w = switch_process(&z, ControlAmplitudes::balanced()).unwrap();
        assert_eq!(w.dim(), 64);
        assert_eq!(w.rank(), 1);
        assert!((w.trace() - 4.0).abs() < 1e-12);
        let e = entangled_order_process(&z, &z, ControlAmplitudes::balanced()).unwrap();
        assert_eq!(e.dim(), 2048);
        assert_eq!(e.rank(), 1);
        assert!((e.trace() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn branches_must_share_open_slots() {
        let z = PauliEigenstate::ZPlus.ket("q");
        let a = ChainBranch::new(C64::new(1.0, 0.0)).input("A_I", &z);
        let b = ChainBranch::new(C64::new(1.0, 0.0)).input("A_O", &z);
        assert_eq!(
            chain_process(&["A_I", "A_O"], &[a, b]),
            Err(ProcessError::InconsistentBranches)
        );
    }
}
