//! Cumulants of fidelity matrices, reconstruction of many-qubit matrices from
//! low-order cumulants or cluster products, and the scalar correlation factor.
//!
//! A cumulant tensor over a qubit subset `Q` of size `k` is a `2^k × 2^k`
//! array indexed `(prepared, observed)` like a fidelity matrix. Order one is
//! the one-qubit matrix itself; order two is the part of a joint pair matrix
//! not explained by the product of its one-qubit factors; order three removes
//! every pair-times-single and triple-single combination from the joint
//! three-qubit matrix.

mod partition;
mod product;
mod reconstruct;

use nalgebra::DMatrix;

pub use partition::set_partitions;
pub use product::{cluster_product, permute_qubits, tensor_product};
pub use reconstruct::{reconstruct, reconstruct_order2, reconstruct_order3, CumulantSet};

use crate::error::{MfmError, Result};
use crate::estimate::bias_correction_factor;
use crate::layout::{restriction_table, BitString, QubitLayout};
use crate::matrix::FidelityMatrix;

const VALUE_SLACK: f64 = 1e-12;

/// Cumulant values for one qubit subset, with optional per-entry uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantTensor {
    qubits: QubitLayout,
    values: DMatrix<f64>,
    sigma: Option<DMatrix<f64>>,
    bias_corrected: bool,
}

impl CumulantTensor {
    pub fn new(qubits: QubitLayout, values: DMatrix<f64>) -> Result<Self> {
        let dim = qubits.dim();
        if values.nrows() != dim || values.ncols() != dim {
            return Err(MfmError::DimensionMismatch { expected: dim, found: values.nrows() });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && v.abs() <= 1.0 + VALUE_SLACK)) {
            return Err(MfmError::OutOfRange { name: "cumulant value", value: *v });
        }
        Ok(Self { qubits, values, sigma: None, bias_corrected: false })
    }

    /// Qubits of the subset, in index order.
    pub fn qubits(&self) -> &QubitLayout {
        &self.qubits
    }

    pub fn order(&self) -> usize {
        self.qubits.width()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn sigma(&self) -> Option<&DMatrix<f64>> {
        self.sigma.as_ref()
    }

    pub fn bias_corrected(&self) -> bool {
        self.bias_corrected
    }

    /// `λ(observed | prepared)`.
    pub fn value(&self, prepared: usize, observed: usize) -> f64 {
        self.values[(prepared, observed)]
    }

    pub fn with_sigma(mut self, sigma: DMatrix<f64>) -> Result<Self> {
        if sigma.shape() != self.values.shape() {
            return Err(MfmError::DimensionMismatch { expected: self.values.nrows(), found: sigma.nrows() });
        }
        if let Some(v) = sigma.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(MfmError::OutOfRange { name: "cumulant sigma", value: *v });
        }
        self.sigma = Some(sigma);
        Ok(self)
    }

    /// Rescales every entry by `(1 − 1/n_s)^{-1}`.
    ///
    /// Only meaningful for order ≥ 2, and only when the factor matrices were
    /// extracted from the same samples as the joint matrix. Idempotent.
    pub fn bias_corrected_with(mut self, shots: u64) -> Result<Self> {
        if self.order() < 2 {
            return Err(MfmError::InvalidArgument("bias correction applies to cumulants of order 2 or more".into()));
        }
        if !self.bias_corrected {
            self.values *= bias_correction_factor(shots)?;
            self.bias_corrected = true;
        }
        Ok(self)
    }

    /// Frobenius norm over all `(prepared, observed)` entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.norm()
    }
}

/// Evaluates a factor matrix defined on a subset of `parent` at parent indices.
pub(crate) struct FactorView<'a> {
    values: &'a DMatrix<f64>,
    table: Vec<usize>,
}

impl<'a> FactorView<'a> {
    pub(crate) fn new(parent: &QubitLayout, sub: &QubitLayout, values: &'a DMatrix<f64>) -> Result<Self> {
        let positions = parent.positions_of(sub)?;
        Ok(Self { values, table: restriction_table(parent.width(), &positions) })
    }

    #[inline]
    pub(crate) fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(self.table[i], self.table[j])]
    }
}

fn require_width(k: &FidelityMatrix, width: usize) -> Result<()> {
    if k.width() != width {
        return Err(MfmError::WidthMismatch { expected: width, found: k.width() });
    }
    Ok(())
}

fn require_subset(parent: &QubitLayout, k: &FidelityMatrix) -> Result<()> {
    if let Some(q) = k.layout().qubits().iter().find(|q| !parent.contains(**q)) {
        return Err(MfmError::InvalidArgument(format!("qubit {q} of a factor matrix is not in {parent}")));
    }
    Ok(())
}

fn find_factor<'a>(layout: &QubitLayout, set: &[u32], pool: &'a [FidelityMatrix]) -> Result<FactorView<'a>> {
    let m = pool
        .iter()
        .find(|m| m.width() == set.len() && set.iter().all(|x| m.layout().contains(*x)))
        .ok_or_else(|| MfmError::MissingTensor(set.to_vec()))?;
    FactorView::new(layout, m.layout(), m.entries())
}

/// One-qubit cumulant: the one-qubit matrix itself.
pub fn cumulant1(k_a: &FidelityMatrix) -> Result<CumulantTensor> {
    require_width(k_a, 1)?;
    CumulantTensor::new(k_a.layout().clone(), k_a.entries().clone())
}

/// Two-body cumulant of a joint matrix over `A ∪ B` (layout `A` then `B`):
/// `λ(j|i) = p_AB(j|i) − p_A(j_A|i_A) · p_B(j_B|i_B)`.
///
/// `A` and `B` may be clusters of any size.
pub fn two_body_cumulant(k_ab: &FidelityMatrix, k_a: &FidelityMatrix, k_b: &FidelityMatrix) -> Result<CumulantTensor> {
    let joint = k_a.layout().concat(k_b.layout())?;
    if &joint != k_ab.layout() {
        return Err(MfmError::LayoutMismatch { expected: joint.qubits().to_vec(), found: k_ab.layout().qubits().to_vec() });
    }
    let wb = k_b.width();
    let mask = (1usize << wb) - 1;
    let (a, b, ab) = (k_a.entries(), k_b.entries(), k_ab.entries());
    let dim = k_ab.dim();
    let values = DMatrix::from_fn(dim, dim, |i, j| ab[(i, j)] - a[(i >> wb, j >> wb)] * b[(i & mask, j & mask)]);
    CumulantTensor::new(joint, values)
}

/// Pair cumulant from a two-qubit matrix and its one-qubit factors.
pub fn cumulant2(k_ab: &FidelityMatrix, k_a: &FidelityMatrix, k_b: &FidelityMatrix) -> Result<CumulantTensor> {
    require_width(k_ab, 2)?;
    require_width(k_a, 1)?;
    require_width(k_b, 1)?;
    two_body_cumulant(k_ab, k_a, k_b)
}

/// Third-order cumulant of a three-qubit matrix:
///
/// `λ_abc = p_abc − (p_a p_bc + p_c p_ab + p_b p_ca) + 2 p_a p_b p_c`,
/// every factor evaluated at the restricted bits of `(i, j)`.
///
/// `singles` and `pairs` may be given in any order and with any internal qubit
/// order; they are matched to `k_abc`'s qubits by id.
pub fn cumulant3<'a>(k_abc: &FidelityMatrix, singles: &'a [FidelityMatrix], pairs: &'a [FidelityMatrix]) -> Result<CumulantTensor> {
    require_width(k_abc, 3)?;
    let layout = k_abc.layout();
    let q = layout.qubits();
    let find = |set: &[u32], pool: &'a [FidelityMatrix]| find_factor(layout, set, pool);
    for m in singles.iter().chain(pairs) {
        require_subset(layout, m)?;
    }
    let (pa, pb, pc) = (find(&q[0..1], singles)?, find(&q[1..2], singles)?, find(&q[2..3], singles)?);
    let (pbc, pab, pca) = (find(&[q[1], q[2]], pairs)?, find(&[q[0], q[1]], pairs)?, find(&[q[2], q[0]], pairs)?);
    let abc = k_abc.entries();
    let values = DMatrix::from_fn(8, 8, |i, j| {
        let (a, b, c) = (pa.at(i, j), pb.at(i, j), pc.at(i, j));
        abc[(i, j)] - (a * pbc.at(i, j) + c * pab.at(i, j) + b * pca.at(i, j)) + 2.0 * a * b * c
    });
    CumulantTensor::new(layout.clone(), values)
}

/// Scalar correlation factor between two disjoint subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct Scf {
    pub lambda: CumulantTensor,
    pub value: f64,
}

/// Two-body cumulant of `(A, B)` and its Frobenius norm `Λ_AB`.
///
/// `k_ab` must be ordered `A` then `B`; permute first if the measured layout
/// interleaves them. With `bias_shots`, cumulants are rescaled by the
/// finite-shot bias factor before the norm is taken.
pub fn scf(k_ab: &FidelityMatrix, k_a: &FidelityMatrix, k_b: &FidelityMatrix, bias_shots: Option<u64>) -> Result<Scf> {
    let mut lambda = two_body_cumulant(k_ab, k_a, k_b)?;
    if let Some(shots) = bias_shots {
        lambda = lambda.bias_corrected_with(shots)?;
    }
    let value = lambda.frobenius_norm();
    Ok(Scf { lambda, value })
}

/// `Λ(x_i)`: Frobenius norm of the cumulant slice for each prepared state.
pub fn scf_by_target_state(lambda: &CumulantTensor) -> Vec<(BitString, f64)> {
    let width = lambda.order();
    lambda
        .values
        .row_iter()
        .enumerate()
        .map(|(i, row)| (BitString::new(i as u64, width).unwrap(), row.norm()))
        .collect()
}
