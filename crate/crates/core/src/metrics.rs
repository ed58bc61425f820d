//! Scalar diagnostics for fidelity matrices and the uncertainty bounds used to
//! decide whether a measured correlation is statistically significant.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cumulant::{scf, CumulantTensor};
use crate::error::{MfmError, Result};
use crate::layout::QubitLayout;
use crate::matrix::FidelityMatrix;

/// Distances of a (possibly reconstructed) matrix from the identity and from a
/// reference matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// `‖K̃ − 1‖_F`
    pub dist_identity: f64,
    /// `‖K̃ − K‖_F`
    pub dist_reference: Option<f64>,
    /// RMSE of diagonal differences against the reference
    pub delta_f: Option<f64>,
    pub n_qubits: usize,
    /// `√(2^n − 1)`, the white-noise value of `dist_identity`
    pub white_noise_bound: f64,
}

impl MetricReport {
    pub fn new(k: &FidelityMatrix, reference: Option<&FidelityMatrix>) -> Result<Self> {
        let (dist_reference, delta_f) = match reference {
            Some(r) => (Some(dist_between(k, r)?), Some(delta_f(k, r)?)),
            None => (None, None),
        };
        Ok(Self {
            dist_identity: dist_from_identity(k),
            dist_reference,
            delta_f,
            n_qubits: k.width(),
            white_noise_bound: white_noise_bound(k.width())?,
        })
    }
}

/// Propagated uncertainty of a pair (or cluster) correlation factor.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyReport {
    pub sigma_lambda: DMatrix<f64>,
    pub sigma_scf: f64,
    pub scf: f64,
    pub significant: bool,
}

pub fn dist_from_identity(k: &FidelityMatrix) -> f64 {
    let d = k.entries();
    let mut s = 0.0;
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            let v = if i == j { d[(i, j)] - 1.0 } else { d[(i, j)] };
            s += v * v;
        }
    }
    s.sqrt()
}

fn same_shape(a: &FidelityMatrix, b: &FidelityMatrix) -> Result<()> {
    if a.layout() != b.layout() {
        if a.dim() != b.dim() {
            return Err(MfmError::DimensionMismatch { expected: a.dim(), found: b.dim() });
        }
        return Err(MfmError::LayoutMismatch { expected: a.layout().qubits().to_vec(), found: b.layout().qubits().to_vec() });
    }
    Ok(())
}

/// `‖K1 − K2‖_F`; layouts must agree (permute first if needed).
pub fn dist_between(k1: &FidelityMatrix, k2: &FidelityMatrix) -> Result<f64> {
    same_shape(k1, k2)?;
    Ok((k1.entries() - k2.entries()).norm())
}

/// Root-mean-square difference of the diagonal fidelities.
pub fn delta_f(k1: &FidelityMatrix, k2: &FidelityMatrix) -> Result<f64> {
    if k1.dim() != k2.dim() {
        return Err(MfmError::DimensionMismatch { expected: k1.dim(), found: k2.dim() });
    }
    let n = k1.dim() as f64;
    let s: f64 = k1.entries().diagonal().iter().zip(k2.entries().diagonal().iter()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((s / n).sqrt())
}

/// `√(2^n − 1)`: distance from the identity of the `n`-qubit white-noise kernel.
pub fn white_noise_bound(n: usize) -> Result<f64> {
    if n < 1 {
        return Err(MfmError::InvalidArgument("white-noise bound needs at least one qubit".into()));
    }
    Ok(((1u64 << n) as f64 - 1.0).sqrt())
}

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(MfmError::OutOfRange { name, value: p });
    }
    Ok(())
}

fn check_shots(shots: u64) -> Result<()> {
    if shots < 1 {
        return Err(MfmError::TooFewShots { min: 1, found: shots });
    }
    Ok(())
}

/// Sampling uncertainty of an estimated conditional probability, `p(1 − p)/n_s`.
///
/// This is the binomial variance of the estimate (not its square root).
pub fn sigma_p(p: f64, shots: u64) -> Result<f64> {
    check_prob("p", p)?;
    check_shots(shots)?;
    Ok(p * (1.0 - p) / shots as f64)
}

/// Upper bound on the uncertainty of one pair-cumulant entry,
/// `√((p_ab + p_a + p_b)/n_s)`.
pub fn sigma_lambda_bound(p_ab: f64, p_a: f64, p_b: f64, shots: u64) -> Result<f64> {
    check_prob("p_ab", p_ab)?;
    check_prob("p_a", p_a)?;
    check_prob("p_b", p_b)?;
    check_shots(shots)?;
    Ok(((p_ab + p_a + p_b) / shots as f64).sqrt())
}

/// Per-entry bounds for a two-body cumulant of `k_ab` against `k_a ⊗ k_b`.
///
/// Entries of the factor matrices are clamped into `[0, 1]` first so that raw
/// inputs do not abort the computation.
pub fn sigma_lambda_matrix(k_ab: &FidelityMatrix, k_a: &FidelityMatrix, k_b: &FidelityMatrix, shots: u64) -> Result<DMatrix<f64>> {
    let joint = k_a.layout().concat(k_b.layout())?;
    if &joint != k_ab.layout() {
        return Err(MfmError::LayoutMismatch { expected: joint.qubits().to_vec(), found: k_ab.layout().qubits().to_vec() });
    }
    let wb = k_b.width();
    let mask = (1usize << wb) - 1;
    let dim = k_ab.dim();
    let c = |v: f64| v.clamp(0.0, 1.0);
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            out[(i, j)] = sigma_lambda_bound(
                c(k_ab.get(i, j)),
                c(k_a.get(i >> wb, j >> wb)),
                c(k_b.get(i & mask, j & mask)),
                shots,
            )?;
        }
    }
    Ok(out)
}

/// Weighted bound on `σ(Λ)`:
/// `(Σ λ(j|i)² σ(λ(j|i))² / Λ²)^{1/2}`.
///
/// When `Λ = 0` the bound is undefined; the RMS of the per-entry sigmas is
/// returned instead.
pub fn sigma_scf_bound(lambda: &CumulantTensor) -> Result<f64> {
    let sigma = lambda.sigma().ok_or(MfmError::MissingSigma)?;
    Ok(weighted_bound(lambda.values().iter().copied().zip(sigma.iter().copied())))
}

/// The same bound restricted to one prepared state (row) of the tensor.
pub fn sigma_scf_bound_row(lambda: &CumulantTensor, row: usize) -> Result<f64> {
    let sigma = lambda.sigma().ok_or(MfmError::MissingSigma)?;
    if row >= sigma.nrows() {
        return Err(MfmError::PositionOutOfRange { position: row, width: sigma.nrows() });
    }
    Ok(weighted_bound(lambda.values().row(row).iter().copied().zip(sigma.row(row).iter().copied())))
}

fn weighted_bound(entries: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let norm2: f64 = entries.clone().map(|(l, _)| l * l).sum();
    if norm2 == 0.0 {
        let (n, s2) = entries.fold((0usize, 0.0), |(n, s), (_, sg)| (n + 1, s + sg * sg));
        return if n == 0 { 0.0 } else { (s2 / n as f64).sqrt() };
    }
    let num: f64 = entries.map(|(l, s)| l * l * s * s).sum();
    (num / norm2).sqrt()
}

/// Strict rule `Λ > σ(Λ)`.
pub fn significance(scf: f64, sigma_scf: f64) -> bool {
    scf > sigma_scf
}

/// Cumulant, Eq.-8 entry bounds, weighted SCF bound and significance for a pair
/// or cluster pair `(A, B)`.
///
/// `bias_corrected` applies the finite-shot factor to the cumulant and should
/// be set only when `k_a`, `k_b` were extracted from the same samples as `k_ab`.
pub fn uncertainty(
    k_ab: &FidelityMatrix,
    k_a: &FidelityMatrix,
    k_b: &FidelityMatrix,
    shots: u64,
    bias_corrected: bool,
) -> Result<(CumulantTensor, UncertaintyReport)> {
    let s = scf(k_ab, k_a, k_b, bias_corrected.then_some(shots))?;
    let sigma_lambda = sigma_lambda_matrix(k_ab, k_a, k_b, shots)?;
    let lambda = s.lambda.with_sigma(sigma_lambda.clone())?;
    let sigma_scf = sigma_scf_bound(&lambda)?;
    let report = UncertaintyReport { sigma_lambda, sigma_scf, scf: s.value, significant: significance(s.value, sigma_scf) };
    Ok((lambda, report))
}

/// How pair results become heatmap cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeatmapMode {
    /// `max(Λ − σΛ, 0)`: insignificant pairs are 0.
    #[default]
    Clamped,
    /// `|Λ − σΛ|`.
    Absolute,
}

/// Symmetric `n × n` matrix of significant correlation per qubit pair, indexed
/// by layout position, with a zero diagonal.
pub fn correlation_heatmap(
    layout: &QubitLayout,
    pair_results: &BTreeMap<(u32, u32), (f64, f64)>,
    mode: HeatmapMode,
) -> Result<DMatrix<f64>> {
    let n = layout.width();
    let q = layout.qubits();
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a + 1..n {
            let (l, s) = pair_results
                .get(&(q[a], q[b]))
                .or_else(|| pair_results.get(&(q[b], q[a])))
                .copied()
                .ok_or_else(|| MfmError::MissingTensor(vec![q[a], q[b]]))?;
            let v = match mode {
                HeatmapMode::Clamped => (l - s).max(0.0),
                HeatmapMode::Absolute => (l - s).abs(),
            };
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(out)
}
