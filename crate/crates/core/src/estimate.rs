//! Empirical fidelity matrices from counts, and extraction of subsystem
//! matrices by marginalization or from spectator runs.

use nalgebra::DMatrix;

use crate::counts::CountsRecord;
use crate::error::{MfmError, Result};
use crate::layout::{restriction_table, QubitLayout};
use crate::matrix::FidelityMatrix;

pub use crate::layout::SubsystemSelection;

/// Shared shot count of `records`; heterogeneous counts are rejected.
pub fn common_shots(records: &[CountsRecord]) -> Result<u64> {
    let first = records.first().ok_or_else(|| MfmError::InvalidArgument("no records".into()))?.shots();
    match records.iter().find(|r| r.shots() != first) {
        Some(r) => Err(MfmError::ShotsMismatch { first, other: r.shots() }),
        None => Ok(first),
    }
}

/// Orders records by prepared state, requiring exactly one per basis state of
/// a `width`-qubit space.
fn index_records(records: &[CountsRecord], width: usize) -> Result<Vec<&CountsRecord>> {
    let dim = 1usize << width;
    let mut slots: Vec<Option<&CountsRecord>> = vec![None; dim];
    for r in records {
        let i = r.prepared().index_of(width)?;
        if slots[i].replace(r).is_some() {
            return Err(MfmError::DuplicatePreparedState(r.prepared().to_string()));
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| {
                MfmError::MissingPreparedState(crate::layout::BitString::new(i as u64, width).unwrap().to_string())
            })
        })
        .collect()
}

/// Direct construction: row `i` is the observed outcome frequency for
/// prepared state `x_i`.
pub fn build_mfm(records: &[CountsRecord], layout: &QubitLayout) -> Result<FidelityMatrix> {
    let width = layout.width();
    let dim = layout.dim();
    let rows = index_records(records, width)?;
    let shots = common_shots(records)?;
    let mut entries = DMatrix::zeros(dim, dim);
    for (i, r) in rows.iter().enumerate() {
        if r.outcome_width() != width {
            return Err(MfmError::WidthMismatch { expected: width, found: r.outcome_width() });
        }
        for (outcome, &c) in r.counts() {
            entries[(i, outcome.value() as usize)] = c as f64 / shots as f64;
        }
    }
    FidelityMatrix::new(layout.clone(), entries)
}

/// Sub-matrix on `sel`, summing traced outcome bits and averaging uniformly
/// over traced preparation bits.
pub fn marginalize(k: &FidelityMatrix, sel: &SubsystemSelection) -> Result<FidelityMatrix> {
    if sel.parent() != k.layout() {
        return Err(MfmError::LayoutMismatch {
            expected: k.layout().qubits().to_vec(),
            found: sel.parent().qubits().to_vec(),
        });
    }
    if sel.is_full() && sel.positions().iter().enumerate().all(|(a, &b)| a == b) {
        return Ok(k.clone());
    }
    let width = k.width();
    let sub_dim = 1usize << sel.width();
    let table = restriction_table(width, sel.positions());
    let mut out = DMatrix::zeros(sub_dim, sub_dim);
    let entries = k.entries();
    for i in 0..k.dim() {
        let u = table[i];
        for j in 0..k.dim() {
            out[(u, table[j])] += entries[(i, j)];
        }
    }
    out /= (1usize << (width - sel.width())) as f64;
    let m = FidelityMatrix::raw(sel.layout(), out)?;
    if k.is_raw() {
        Ok(m)
    } else {
        Ok(m.with_flags(Default::default()))
    }
}

/// Target-subsystem matrix from spectator runs.
///
/// Each record holds one preparation of the target (width `sel.width()`) and
/// counts over the full parent layout; spectator outcome bits are summed out.
pub fn extract_with_spectators(records: &[CountsRecord], target: &SubsystemSelection) -> Result<FidelityMatrix> {
    let k = target.width();
    let parent_width = target.parent().width();
    let rows = index_records(records, k)?;
    let shots = common_shots(records)?;
    let table = restriction_table(parent_width, target.positions());
    let sub_dim = 1usize << k;
    let mut entries = DMatrix::zeros(sub_dim, sub_dim);
    for (u, r) in rows.iter().enumerate() {
        if r.outcome_width() != parent_width {
            return Err(MfmError::WidthMismatch { expected: parent_width, found: r.outcome_width() });
        }
        for (outcome, &c) in r.counts() {
            entries[(u, table[outcome.value() as usize])] += c as f64;
        }
    }
    entries /= shots as f64;
    FidelityMatrix::new(target.layout(), entries)
}

/// Finite-shot bias factor `(1 − 1/n_s)^{-1}` for cumulants whose factor
/// matrices were extracted from the same samples as the joint matrix.
pub fn bias_correction_factor(shots: u64) -> Result<f64> {
    if shots < 2 {
        return Err(MfmError::TooFewShots { min: 2, found: shots });
    }
    Ok(1.0 / (1.0 - 1.0 / shots as f64))
}
