use nalgebra::DMatrix;

use super::partition::set_partitions;
use super::{CumulantTensor, FactorView};
use crate::error::{MfmError, Result};
use crate::layout::QubitLayout;
use crate::matrix::{FidelityMatrix, MatrixFlags};

/// Cumulant tensors keyed by their qubit set (order-insensitive).
#[derive(Debug, Clone, Default)]
pub struct CumulantSet {
    tensors: Vec<CumulantTensor>,
}

impl CumulantSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a tensor, replacing any existing tensor over the same qubit set.
    pub fn insert(&mut self, t: CumulantTensor) {
        let key = sorted(t.qubits().qubits());
        self.tensors.retain(|x| sorted(x.qubits().qubits()) != key);
        self.tensors.push(t);
    }

    pub fn get(&self, qubits: &[u32]) -> Option<&CumulantTensor> {
        let key = sorted(qubits);
        self.tensors.iter().find(|t| sorted(t.qubits().qubits()) == key)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CumulantTensor> {
        self.tensors.iter()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }
}

impl FromIterator<CumulantTensor> for CumulantSet {
    fn from_iter<I: IntoIterator<Item = CumulantTensor>>(iter: I) -> Self {
        let mut s = CumulantSet::new();
        for t in iter {
            s.insert(t);
        }
        s
    }
}

fn sorted(q: &[u32]) -> Vec<u32> {
    let mut v = q.to_vec();
    v.sort_unstable();
    v
}

/// Truncated cumulant expansion of the matrix over `layout`.
///
/// Every entry is the sum, over set partitions of the layout into blocks of
/// at most `order` qubits, of the product of block cumulants evaluated at the
/// restricted bits. All cumulants of order above `order` are taken to be zero.
/// With `order = 2` and three qubits this is
/// `λ_a λ_bc + λ_b λ_ca + λ_c λ_ab + λ_a λ_b λ_c`.
///
/// The result is flagged raw: entries are not clipped and rows are not
/// renormalized.
pub fn reconstruct(set: &CumulantSet, layout: &QubitLayout, order: usize) -> Result<FidelityMatrix> {
    if !(1..=3).contains(&order) {
        return Err(MfmError::InvalidArgument(format!("expansion order {order} not supported")));
    }
    let n = layout.width();
    let partitions = set_partitions(n, order);

    // one evaluator per distinct block, shared by every partition using it
    let mut block_keys: Vec<Vec<usize>> = Vec::new();
    let mut views: Vec<FactorView<'_>> = Vec::new();
    let mut bias_corrected = false;
    let mut plan: Vec<Vec<usize>> = Vec::with_capacity(partitions.len());
    for p in &partitions {
        let mut ids = Vec::with_capacity(p.len());
        for block in p {
            let id = match block_keys.iter().position(|b| b == block) {
                Some(id) => id,
                None => {
                    let qubits: Vec<u32> = block.iter().map(|&pos| layout.qubits()[pos]).collect();
                    let t = set.get(&qubits).ok_or_else(|| MfmError::MissingTensor(qubits.clone()))?;
                    bias_corrected |= t.bias_corrected();
                    views.push(FactorView::new(layout, t.qubits(), t.values())?);
                    block_keys.push(block.clone());
                    block_keys.len() - 1
                }
            };
            ids.push(id);
        }
        plan.push(ids);
    }

    let dim = layout.dim();
    let mut entries = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            entries[(i, j)] = plan
                .iter()
                .map(|ids| ids.iter().map(|&b| views[b].at(i, j)).product::<f64>())
                .sum();
        }
    }
    let m = FidelityMatrix::raw(layout.clone(), entries)?;
    Ok(m.with_flags(MatrixFlags { raw: true, bias_corrected, projected: false }))
}

/// Second-order reconstruction from one tensor per qubit and one per pair.
pub fn reconstruct_order2(singles: &[CumulantTensor], pairs: &[CumulantTensor], layout: &QubitLayout) -> Result<FidelityMatrix> {
    let set = checked_set(singles, pairs, &[])?;
    reconstruct(&set, layout, 2)
}

/// Third-order reconstruction; additionally needs one tensor per qubit triple.
pub fn reconstruct_order3(
    singles: &[CumulantTensor],
    pairs: &[CumulantTensor],
    triples: &[CumulantTensor],
    layout: &QubitLayout,
) -> Result<FidelityMatrix> {
    let set = checked_set(singles, pairs, triples)?;
    reconstruct(&set, layout, 3)
}

fn checked_set(singles: &[CumulantTensor], pairs: &[CumulantTensor], triples: &[CumulantTensor]) -> Result<CumulantSet> {
    for (group, order) in [(singles, 1), (pairs, 2), (triples, 3)] {
        if let Some(t) = group.iter().find(|t| t.order() != order) {
            return Err(MfmError::WidthMismatch { expected: order, found: t.order() });
        }
    }
    Ok(singles.iter().chain(pairs).chain(triples).cloned().collect())
}
