use nalgebra::DMatrix;

use crate::error::{MfmError, Result};
use crate::layout::{restriction_table, QubitLayout, SubsystemSelection};
use crate::matrix::{FidelityMatrix, MatrixFlags};

/// Kronecker product; the first factor occupies the most significant bits and
/// the output layout is the concatenation of factor layouts.
pub fn tensor_product(factors: &[FidelityMatrix]) -> Result<FidelityMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| MfmError::InvalidArgument("tensor product of no factors".into()))?;
    let mut layout = first.layout().clone();
    let mut entries = first.entries().clone();
    let mut raw = first.is_raw();
    for f in rest {
        layout = layout.concat(f.layout())?;
        entries = entries.kronecker(f.entries());
        raw |= f.is_raw();
    }
    let m = FidelityMatrix::raw(layout, entries)?;
    Ok(m.with_flags(MatrixFlags { raw, ..Default::default() }))
}

/// Reorders qubits: position `p` of the output layout holds input position
/// `perm[p]`, and `K'[σ(i), σ(j)] = K[i, j]` with `σ` the matching bit shuffle.
pub fn permute_qubits(k: &FidelityMatrix, perm: &[usize]) -> Result<FidelityMatrix> {
    let width = k.width();
    let mut seen = vec![false; width];
    if perm.len() != width || perm.iter().any(|&p| p >= width || std::mem::replace(&mut seen[p], true)) {
        return Err(MfmError::InvalidPermutation(perm.to_vec()));
    }
    let layout = QubitLayout::new(perm.iter().map(|&p| k.layout().qubits()[p]).collect())?;
    let sigma = restriction_table(width, perm);
    let src = k.entries();
    let mut entries = DMatrix::zeros(k.dim(), k.dim());
    for i in 0..k.dim() {
        for j in 0..k.dim() {
            entries[(sigma[i], sigma[j])] = src[(i, j)];
        }
    }
    Ok(FidelityMatrix::raw(layout, entries)?.with_flags(k.flags()))
}

/// Tensor product of cluster matrices, reordered to match `target` exactly.
///
/// Each cluster's selection must refer to `target` and describe the same qubits
/// (in the same order) as its matrix; together the selections must partition
/// `target`.
pub fn cluster_product(clusters: &[(FidelityMatrix, SubsystemSelection)], target: &QubitLayout) -> Result<FidelityMatrix> {
    let mut covered = vec![false; target.width()];
    for (m, sel) in clusters {
        if sel.parent() != target {
            return Err(MfmError::NotAPartition(format!("selection refers to {} rather than {target}", sel.parent())));
        }
        if &sel.layout() != m.layout() {
            return Err(MfmError::LayoutMismatch {
                expected: sel.layout().qubits().to_vec(),
                found: m.layout().qubits().to_vec(),
            });
        }
        for &p in sel.positions() {
            if std::mem::replace(&mut covered[p], true) {
                return Err(MfmError::NotAPartition(format!("qubit {} appears in two clusters", target.qubits()[p])));
            }
        }
    }
    if let Some(p) = covered.iter().position(|c| !c) {
        return Err(MfmError::NotAPartition(format!("qubit {} is not covered", target.qubits()[p])));
    }
    let factors: Vec<FidelityMatrix> = clusters.iter().map(|(m, _)| m.clone()).collect();
    let product = tensor_product(&factors)?;
    let perm = product.layout().positions_of(target)?;
    if perm.iter().enumerate().all(|(a, &b)| a == b) {
        return Ok(product);
    }
    permute_qubits(&product, &perm)
}
