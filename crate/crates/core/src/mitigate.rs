//! Inverse-kernel readout mitigation.
//!
//! Row `i` of a kernel holds `p(observed | prepared = i)`, so an observed
//! column vector is `Kᵀ q_ideal`. Mitigation solves that transposed system.

use serde::{Deserialize, Serialize};

use crate::error::{MfmError, Result};
use crate::matrix::{Distribution, FidelityMatrix};

/// Condition numbers above this are reported as ill-conditioned.
pub const CONDITION_WARNING: f64 = 1e4;

/// Condition numbers above this are treated as singular.
pub const CONDITION_SINGULAR: f64 = 1e14;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MitigationMethod {
    /// Plain linear solve; the result may have negative entries.
    #[default]
    Solve,
    /// Solve, then clip negatives to zero and renormalize.
    ProjectSolve,
}

impl std::str::FromStr for MitigationMethod {
    type Err = MfmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(Self::Solve),
            "project-solve" => Ok(Self::ProjectSolve),
            _ => Err(MfmError::InvalidArgument(format!("unknown mitigation method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mitigated {
    /// Estimated ideal distribution. Entries may be negative under `Solve`.
    pub probs: Vec<f64>,
    pub condition: f64,
    pub ill_conditioned: bool,
}

impl Mitigated {
    /// The estimate as a validated distribution (fails on negative entries).
    pub fn to_distribution(&self, k: &FidelityMatrix) -> Result<Distribution> {
        Distribution::new(k.layout().clone(), self.probs.clone())
    }
}

/// 2-norm condition number from singular values; infinite if singular.
pub fn condition_number(k: &FidelityMatrix) -> f64 {
    let sv = k.entries().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Recover the ideal distribution from observed probabilities.
pub fn mitigate(k: &FidelityMatrix, observed: &[f64], method: MitigationMethod) -> Result<Mitigated> {
    if observed.len() != k.dim() {
        return Err(MfmError::DimensionMismatch { expected: k.dim(), found: observed.len() });
    }
    let condition = condition_number(k);
    if !(condition < CONDITION_SINGULAR) {
        return Err(MfmError::SingularKernel { condition });
    }
    let q = nalgebra::DVector::from_column_slice(observed);
    let x = k
        .entries()
        .transpose()
        .lu()
        .solve(&q)
        .ok_or(MfmError::SingularKernel { condition })?;
    let mut probs: Vec<f64> = x.iter().copied().collect();
    if method == MitigationMethod::ProjectSolve {
        probs.iter_mut().for_each(|p| *p = p.max(0.0));
        let s: f64 = probs.iter().sum();
        if s > 0.0 {
            probs.iter_mut().for_each(|p| *p /= s);
        } else {
            let u = 1.0 / probs.len() as f64;
            probs.iter_mut().for_each(|p| *p = u);
        }
    }
    Ok(Mitigated { probs, condition, ill_conditioned: condition > CONDITION_WARNING })
}

/// Mitigate a distribution whose layout matches the kernel.
pub fn mitigate_distribution(k: &FidelityMatrix, observed: &Distribution, method: MitigationMethod) -> Result<Mitigated> {
    if observed.layout() != k.layout() {
        return Err(MfmError::LayoutMismatch {
            expected: k.layout().qubits().to_vec(),
            found: observed.layout().qubits().to_vec(),
        });
    }
    mitigate(k, observed.probs(), method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::QubitLayout;
    use nalgebra::DMatrix;

    fn l(n: usize) -> QubitLayout {
        QubitLayout::contiguous(n).unwrap()
    }

    #[test]
    fn identity_is_noop() {
        let k = FidelityMatrix::identity(l(2));
        let q = [0.1, 0.2, 0.3, 0.4];
        let m = mitigate(&k, &q, MitigationMethod::Solve).unwrap();
        assert_eq!(m.probs, q);
        assert!((m.condition - 1.0).abs() < 1e-12);
        assert!(!m.ill_conditioned);
    }

    #[test]
    fn forward_then_invert() {
        let k = FidelityMatrix::new(l(1), DMatrix::from_row_slice(2, 2, &[0.98, 0.02, 0.05, 0.95])).unwrap();
        // ideal "1" → observed (0.05, 0.95)
        let m = mitigate(&k, &[0.05, 0.95], MitigationMethod::Solve).unwrap();
        assert!(m.probs[0].abs() < 1e-15 && (m.probs[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_and_mismatched() {
        let u = FidelityMatrix::uniform(l(2));
        assert!(matches!(mitigate(&u, &[0.25; 4], MitigationMethod::Solve), Err(MfmError::SingularKernel { .. })));
        assert!(matches!(mitigate(&u, &[0.5; 2], MitigationMethod::Solve), Err(MfmError::DimensionMismatch { .. })));
    }

    #[test]
    fn near_white_noise_projects_to_distribution() {
        let eps = 1e-5;
        let e = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.25 + 3.0 * eps } else { 0.25 - eps });
        let k = FidelityMatrix::new(l(2), e).unwrap();
        let m = mitigate(&k, &[0.3, 0.2, 0.25, 0.25], MitigationMethod::ProjectSolve).unwrap();
        assert!(m.ill_conditioned);
        assert!(m.probs.iter().all(|p| *p >= 0.0));
        assert!((m.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        m.to_distribution(&k).unwrap();
    }
}
