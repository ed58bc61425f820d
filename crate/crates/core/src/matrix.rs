//! Row-stochastic measurement fidelity matrices and probability distributions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MfmError, Result};
use crate::layout::{BitString, QubitLayout};

/// Row-sum slack accepted for matrices produced by stochastic constructors.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// Provenance flags carried by a matrix and written to matrix files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixFlags {
    /// Entries may lie outside `[0, 1]` and rows need not sum to one.
    pub raw: bool,
    /// Built from cumulants rescaled by the finite-shot bias factor.
    pub bias_corrected: bool,
    /// Clipped and row-renormalized after reconstruction.
    pub projected: bool,
}

/// Matrix of conditional probabilities `K[i, j] = p(x_j | x_i)` over a layout.
///
/// Row `i` is the outcome distribution observed when basis state `i` is
/// prepared. Matrices from stochastic constructors are validated on creation;
/// reconstructions are created with [`FidelityMatrix::raw`] and keep whatever
/// negative or super-unity entries the expansion produced.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityMatrix {
    layout: QubitLayout,
    entries: DMatrix<f64>,
    flags: MatrixFlags,
}

impl FidelityMatrix {
    /// Validated row-stochastic matrix.
    pub fn new(layout: QubitLayout, entries: DMatrix<f64>) -> Result<Self> {
        let m = Self::raw(layout, entries)?;
        m.check_stochastic(ROW_TOLERANCE)?;
        Ok(Self { flags: MatrixFlags::default(), ..m })
    }

    /// Unvalidated (raw) matrix; only the shape is checked.
    pub fn raw(layout: QubitLayout, entries: DMatrix<f64>) -> Result<Self> {
        let dim = layout.dim();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(MfmError::DimensionMismatch { expected: dim, found: entries.nrows().max(entries.ncols()) });
        }
        if let Some(v) = entries.iter().find(|v| !v.is_finite()) {
            return Err(MfmError::OutOfRange { name: "matrix entry", value: *v });
        }
        Ok(Self { layout, entries, flags: MatrixFlags { raw: true, ..Default::default() } })
    }

    /// Builds from nested rows, validating stochasticity unless `flags.raw`.
    pub fn from_rows(layout: QubitLayout, rows: &[Vec<f64>], flags: MatrixFlags) -> Result<Self> {
        let dim = layout.dim();
        if rows.len() != dim {
            return Err(MfmError::DimensionMismatch { expected: dim, found: rows.len() });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(MfmError::DimensionMismatch { expected: dim, found: r.len() });
        }
        let entries = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
        let mut m = if flags.raw { Self::raw(layout, entries)? } else { Self::new(layout, entries)? };
        m.flags = flags;
        Ok(m)
    }

    pub fn identity(layout: QubitLayout) -> Self {
        let dim = layout.dim();
        Self { layout, entries: DMatrix::identity(dim, dim), flags: MatrixFlags::default() }
    }

    /// White-noise kernel: every row uniform over all outcomes.
    pub fn uniform(layout: QubitLayout) -> Self {
        let dim = layout.dim();
        Self {
            layout,
            entries: DMatrix::from_element(dim, dim, 1.0 / dim as f64),
            flags: MatrixFlags::default(),
        }
    }

    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn width(&self) -> usize {
        self.layout.width()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    /// `p(observed | prepared)`.
    pub fn prob(&self, observed: &BitString, prepared: &BitString) -> Result<f64> {
        let w = self.width();
        Ok(self.entries[(prepared.index_of(w)?, observed.index_of(w)?)])
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn flags(&self) -> MatrixFlags {
        self.flags
    }

    pub fn is_raw(&self) -> bool {
        self.flags.raw
    }

    pub fn with_flags(mut self, flags: MatrixFlags) -> Self {
        self.flags = flags;
        self
    }

    /// Diagonal entries `f_i = p(x_i | x_i)`.
    pub fn fidelities(&self) -> Vec<f64> {
        self.entries.diagonal().iter().copied().collect()
    }

    /// Checks entries lie in `[0, 1]` and every row sums to one within `tol`.
    pub fn check_stochastic(&self, tol: f64) -> Result<()> {
        for (i, row) in self.entries.row_iter().enumerate() {
            if let Some(v) = row.iter().find(|v| !(-tol..=1.0 + tol).contains(*v)) {
                return Err(MfmError::NotStochastic { row: i, reason: format!("entry {v} outside [0, 1]") });
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(MfmError::NotStochastic { row: i, reason: format!("row sums to {s}") });
            }
        }
        Ok(())
    }

    /// Clips entries to `[0, 1]` and renormalizes each row.
    ///
    /// A row that clips to all zeros is replaced by the uniform distribution.
    pub fn project_stochastic(&self) -> FidelityMatrix {
        let dim = self.dim();
        let mut entries = self.entries.map(|v| v.clamp(0.0, 1.0));
        for i in 0..dim {
            let s: f64 = entries.row(i).sum();
            if s > 0.0 {
                entries.row_mut(i).scale_mut(1.0 / s);
            } else {
                entries.row_mut(i).fill(1.0 / dim as f64);
            }
        }
        FidelityMatrix {
            layout: self.layout.clone(),
            entries,
            flags: MatrixFlags { raw: false, projected: true, ..self.flags },
        }
    }
}

/// Probability distribution over the basis states of a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    layout: QubitLayout,
    probs: DVector<f64>,
}

impl Distribution {
    pub fn new(layout: QubitLayout, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != layout.dim() {
            return Err(MfmError::DimensionMismatch { expected: layout.dim(), found: probs.len() });
        }
        if let Some(v) = probs.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(MfmError::OutOfRange { name: "probability", value: *v });
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > ROW_TOLERANCE {
            return Err(MfmError::OutOfRange { name: "probability total", value: s });
        }
        Ok(Self { layout, probs: DVector::from_vec(probs) })
    }

    pub fn point_mass(layout: QubitLayout, state: &BitString) -> Result<Self> {
        let mut probs = vec![0.0; layout.dim()];
        probs[state.index_of(layout.width())?] = 1.0;
        Ok(Self { layout, probs: DVector::from_vec(probs) })
    }

    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    pub fn probs(&self) -> &[f64] {
        self.probs.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.probs
    }

    /// Total-variation distance `½ Σ |p − q|`.
    pub fn total_variation(&self, other: &Distribution) -> Result<f64> {
        if self.layout != other.layout {
            return Err(MfmError::LayoutMismatch {
                expected: self.layout.qubits().to_vec(),
                found: other.layout.qubits().to_vec(),
            });
        }
        Ok(0.5 * (&self.probs - &other.probs).abs().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(n: usize) -> QubitLayout {
        QubitLayout::contiguous(n).unwrap()
    }

    #[test]
    fn validation_rejects_bad_rows() {
        let e = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.0, 1.0]);
        assert!(matches!(FidelityMatrix::new(l(1), e.clone()), Err(MfmError::NotStochastic { row: 0, .. })));
        assert!(FidelityMatrix::raw(l(1), e).unwrap().is_raw());
        let e = DMatrix::from_row_slice(2, 2, &[1.1, -0.1, 0.0, 1.0]);
        assert!(FidelityMatrix::new(l(1), e).is_err());
        assert!(matches!(
            FidelityMatrix::new(l(2), DMatrix::identity(2, 2)),
            Err(MfmError::DimensionMismatch { expected: 4, .. })
        ));
    }

    #[test]
    fn projection_clips_and_normalizes() {
        let e = DMatrix::from_row_slice(2, 2, &[1.1, -0.1, 0.3, 0.3]);
        let p = FidelityMatrix::raw(l(1), e).unwrap().project_stochastic();
        assert!(p.flags().projected && !p.is_raw());
        p.check_stochastic(1e-12).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        assert!((p.get(1, 0) - 0.5).abs() < 1e-15);
        let z = FidelityMatrix::raw(l(1), DMatrix::from_element(2, 2, -0.5)).unwrap().project_stochastic();
        assert_eq!(z.get(0, 1), 0.5);
    }

    #[test]
    fn constructors_are_stochastic() {
        for n in 1..6 {
            FidelityMatrix::identity(l(n)).check_stochastic(1e-12).unwrap();
            FidelityMatrix::uniform(l(n)).check_stochastic(1e-12).unwrap();
        }
    }

    #[test]
    fn distributions() {
        assert!(Distribution::new(l(1), vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(l(1), vec![1.5, -0.5]).is_err());
        let a = Distribution::point_mass(l(2), &"10".parse().unwrap()).unwrap();
        assert_eq!(a.probs(), &[0.0, 0.0, 1.0, 0.0]);
        let b = Distribution::new(l(2), vec![0.25; 4]).unwrap();
        assert!((a.total_variation(&b).unwrap() - 0.75).abs() < 1e-15);
    }
}
