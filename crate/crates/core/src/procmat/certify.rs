use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{born_raw, split_slot, LocalOperationCJ, OperationKind, ProcessError, ProcessMatrix, Result};
use crate::qcore::{PauliEigenstate, C64};

/// Smallest change in a marginal probability that counts as signalling.
pub const SIGNALLING_THRESHOLD: f64 = 1e-9;

const BASES: [(PauliEigenstate, PauliEigenstate); 3] = [
    (PauliEigenstate::XPlus, PauliEigenstate::XMinus),
    (PauliEigenstate::YPlus, PauliEigenstate::YMinus),
    (PauliEigenstate::ZPlus, PauliEigenstate::ZMinus),
];

struct Party {
    name: String,
    input: bool,
    output: bool,
}

fn parties(w: &ProcessMatrix) -> Vec<Party> {
    w.parties()
        .into_iter()
        .map(|name| Party {
            input: w.has_slot(&format!("{name}_I")),
            output: w.has_slot(&format!("{name}_O")),
            name,
        })
        .collect()
}

fn party_name(label: &str) -> &str {
    split_slot(label).map(|(p, _)| p).unwrap_or(label)
}

/// Trace-preserving operation that passes the system on unchanged.
fn neutral(p: &Party) -> Result<LocalOperationCJ> {
    match (p.input, p.output) {
        (true, true) => Ok(LocalOperationCJ::identity(&p.name)),
        (true, false) => Ok(LocalOperationCJ::trace_out(&p.name)),
        _ => LocalOperationCJ::new(
            &[format!("{}_O", p.name)],
            PauliEigenstate::ZPlus.projector(),
            OperationKind::StatePreparation,
        ),
    }
}

/// Six preparations and three non-selective Pauli measurements.
fn sender_probes(party: &str) -> Result<Vec<LocalOperationCJ>> {
    let mut out = Vec::with_capacity(9);
    for e in PauliEigenstate::ALL {
        out.push(LocalOperationCJ::prepare(party, &e.projector())?);
    }
    for (plus, minus) in BASES {
        out.push(LocalOperationCJ::from_kraus(
            party,
            &[plus.projector(), minus.projector()],
            OperationKind::KrausChannel,
        )?);
    }
    Ok(out)
}

/// One outcome per Pauli basis and sign, re-preparing the observed state
/// when the party has an output.
fn receiver_outcomes(p: &Party) -> Result<Vec<LocalOperationCJ>> {
    let mut out = Vec::with_capacity(6);
    for (plus, minus) in BASES {
        for e in [plus, minus] {
            let proj: DMatrix<C64> = e.projector();
            out.push(if p.output {
                LocalOperationCJ::measure_prepare(&p.name, &proj, &proj)?
            } else {
                LocalOperationCJ::effect(&p.name, &proj)?
            });
        }
    }
    Ok(out)
}

/// Largest change of the receiver's outcome probabilities over the sender's
/// probe operations, everyone else acting trivially.
pub fn signalling_strength(w: &ProcessMatrix, from: &str, to: &str) -> Result<f64> {
    let all = parties(w);
    let find = |name: &str| {
        all.iter()
            .position(|p| p.name == name)
            .ok_or_else(|| ProcessError::UnknownSlot(name.to_string()))
    };
    let (fi, ti) = (find(party_name(from))?, find(party_name(to))?);
    if fi == ti || !all[fi].output || !all[ti].input {
        return Ok(0.0);
    }
    let others: Vec<LocalOperationCJ> = all
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != fi && *i != ti)
        .map(|(_, p)| neutral(p))
        .collect::<Result<_>>()?;
    let outcomes = receiver_outcomes(&all[ti])?;
    let mut lo = vec![f64::INFINITY; outcomes.len()];
    let mut hi = vec![f64::NEG_INFINITY; outcomes.len()];
    for probe in sender_probes(&all[fi].name)? {
        for (k, o) in outcomes.iter().enumerate() {
            let mut ops: Vec<&LocalOperationCJ> = others.iter().collect();
            ops.push(&probe);
            ops.push(o);
            let p = born_raw(w, &ops)?.re;
            lo[k] = lo[k].min(p);
            hi[k] = hi[k].max(p);
        }
    }
    Ok(lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max))
}

/// Whether operations of `from` change the statistics seen by `to`. Slot
/// labels (`A_O`) and party names (`A`) are both accepted.
pub fn signalling_test(w: &ProcessMatrix, from: &str, to: &str) -> Result<bool> {
    Ok(signalling_strength(w, from, to)? > SIGNALLING_THRESHOLD)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub rank: usize,
    pub is_rank_one: bool,
    /// Ordered `(from, to)` party pairs with signalling.
    pub signalling_pairs: Vec<(String, String)>,
    pub two_way_signalling: bool,
    /// Rank one together with two-way signalling: no convex decomposition into
    /// fixed orders exists.
    pub certified: bool,
}

pub fn nonseparability_certificate(w: &ProcessMatrix) -> Result<Certificate> {
    let rank = w.rank();
    let all = parties(w);
    let mut pairs = Vec::new();
    for x in all.iter().filter(|p| p.input && p.output) {
        for y in all.iter().filter(|p| p.input && p.output) {
            if x.name != y.name && signalling_test(w, &x.name, &y.name)? {
                pairs.push((x.name.clone(), y.name.clone()));
            }
        }
    }
    let two_way = pairs
        .iter()
        .any(|(a, b)| pairs.iter().any(|(c, d)| c == b && d == a));
    Ok(Certificate {
        rank,
        is_rank_one: rank == 1,
        signalling_pairs: pairs,
        two_way_signalling: two_way,
        certified: rank == 1 && two_way,
    })
}
