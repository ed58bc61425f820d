//! Correlated-readout device simulator.
//!
//! A [`NoiseModel`] partitions a layout into clusters, each with its own joint
//! confusion matrix; clusters are statistically independent of each other.
//! The simulator supplies exact matrices for any subsystem, seeded counts for
//! direct and spectator experiments, and the circuit-cost calculator.
//!
//! Randomness: every sampled record draws from a ChaCha stream selected by
//! `(seed, stream)`, where the stream is derived from the prepared state and
//! experiment kind. Results are independent of call order.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _};
use serde::{Deserialize, Serialize};

use crate::counts::CountsRecord;
use crate::cumulant::cluster_product;
use crate::error::{MfmError, Result};
use crate::estimate::marginalize;
use crate::layout::{restriction_table, BitString, QubitLayout, SubsystemSelection};
use crate::matrix::{Distribution, FidelityMatrix};

/// How qubits outside the measured target are prepared in spectator runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectatorMixing {
    /// Perfect Hadamard: uniform over spectator preparations.
    #[default]
    IdealUniform,
    /// Spectators left in the ground state.
    None,
}

/// Ground-truth readout model.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    layout: QubitLayout,
    clusters: Vec<(SubsystemSelection, FidelityMatrix)>,
    spectator_mixing: SpectatorMixing,
}

impl NoiseModel {
    /// Model from cluster matrices whose layouts partition `layout`.
    pub fn new(layout: QubitLayout, clusters: Vec<FidelityMatrix>, spectator_mixing: SpectatorMixing) -> Result<Self> {
        let mut covered = vec![false; layout.width()];
        let mut out = Vec::with_capacity(clusters.len());
        for m in clusters {
            if m.is_raw() {
                m.check_stochastic(crate::matrix::ROW_TOLERANCE)?;
            }
            let sel = SubsystemSelection::of_qubits(&layout, m.layout().qubits())?;
            for &p in sel.positions() {
                if std::mem::replace(&mut covered[p], true) {
                    return Err(MfmError::NotAPartition(format!("qubit {} is in two clusters", layout.qubits()[p])));
                }
            }
            out.push((sel, m));
        }
        if let Some(p) = covered.iter().position(|c| !c) {
            return Err(MfmError::NotAPartition(format!("qubit {} is in no cluster", layout.qubits()[p])));
        }
        Ok(Self { layout, clusters: out, spectator_mixing })
    }

    /// Independent qubits, one 2×2 matrix each (in layout order).
    pub fn independent(layout: QubitLayout, per_qubit: &[[f64; 4]]) -> Result<Self> {
        if per_qubit.len() != layout.width() {
            return Err(MfmError::DimensionMismatch { expected: layout.width(), found: per_qubit.len() });
        }
        let clusters = layout
            .qubits()
            .iter()
            .zip(per_qubit)
            .map(|(&q, e)| FidelityMatrix::new(QubitLayout::new(vec![q])?, DMatrix::from_row_slice(2, 2, e)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layout, clusters, SpectatorMixing::IdealUniform)
    }

    /// Identical independent qubits with `p(0|0) = p00` and `p(1|1) = p11`.
    pub fn quasi_ideal(layout: QubitLayout, p00: f64, p11: f64) -> Result<Self> {
        let e = [p00, 1.0 - p00, 1.0 - p11, p11];
        let n = layout.width();
        Self::independent(layout, &vec![e; n])
    }

    pub fn noiseless(layout: QubitLayout) -> Self {
        let clusters = layout
            .qubits()
            .iter()
            .map(|&q| FidelityMatrix::identity(QubitLayout::new(vec![q]).unwrap()))
            .collect();
        Self::new(layout, clusters, SpectatorMixing::IdealUniform).unwrap()
    }

    pub fn with_spectator_mixing(mut self, mixing: SpectatorMixing) -> Self {
        self.spectator_mixing = mixing;
        self
    }

    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    pub fn clusters(&self) -> &[(SubsystemSelection, FidelityMatrix)] {
        &self.clusters
    }

    pub fn spectator_mixing(&self) -> SpectatorMixing {
        self.spectator_mixing
    }

    /// Full-layout index → cluster-local index, per cluster.
    fn cluster_tables(&self) -> Vec<Vec<usize>> {
        self.clusters.iter().map(|(s, _)| restriction_table(self.layout.width(), s.positions())).collect()
    }

    /// Exact outcome distribution for a full-layout preparation.
    pub fn true_row(&self, prepared: &BitString) -> Result<Vec<f64>> {
        let i = prepared.index_of(self.layout.width())?;
        let tables = self.cluster_tables();
        let rows: Vec<Vec<f64>> = self
            .clusters
            .iter()
            .zip(&tables)
            .map(|((_, m), t)| m.entries().row(t[i]).iter().copied().collect())
            .collect();
        Ok(product_row(&rows, &tables, self.layout.dim()))
    }

    /// Exact outcome distribution over the full layout when the target is
    /// prepared in `prepared_target` and the remaining qubits follow the
    /// model's spectator mixing.
    pub fn spectator_row(&self, target: &SubsystemSelection, prepared_target: &BitString) -> Result<Vec<f64>> {
        self.check_selection(target)?;
        let k = target.width();
        prepared_target.index_of(k)?;
        let tables = self.cluster_tables();
        let mut rows = Vec::with_capacity(self.clusters.len());
        for (sel, m) in &self.clusters {
            // cluster-local positions of target bits and the matching target bits
            let mut fixed: Vec<(usize, bool)> = vec![];
            for (local, p) in sel.positions().iter().enumerate() {
                if let Some(t) = target.positions().iter().position(|x| x == p) {
                    fixed.push((local, prepared_target.bit(t)));
                }
            }
            let w = sel.width();
            let matches = |u: usize| fixed.iter().all(|&(local, b)| ((u >> (w - 1 - local)) & 1 == 1) == b);
            let prepared: Vec<usize> = match self.spectator_mixing {
                SpectatorMixing::IdealUniform => (0..m.dim()).filter(|&u| matches(u)).collect(),
                SpectatorMixing::None => {
                    let u = fixed.iter().fold(0usize, |acc, &(local, b)| acc | ((b as usize) << (w - 1 - local)));
                    vec![u]
                }
            };
            let mut row = vec![0.0; m.dim()];
            for &u in &prepared {
                for (v, x) in row.iter_mut().enumerate() {
                    *x += m.get(u, v);
                }
            }
            row.iter_mut().for_each(|x| *x /= prepared.len() as f64);
            rows.push(row);
        }
        Ok(product_row(&rows, &tables, self.layout.dim()))
    }

    fn check_selection(&self, sel: &SubsystemSelection) -> Result<()> {
        if sel.parent() != &self.layout {
            return Err(MfmError::LayoutMismatch {
                expected: self.layout.qubits().to_vec(),
                found: sel.parent().qubits().to_vec(),
            });
        }
        Ok(())
    }
}

fn product_row(rows: &[Vec<f64>], tables: &[Vec<usize>], dim: usize) -> Vec<f64> {
    (0..dim).map(|j| rows.iter().zip(tables).map(|(r, t)| r[t[j]]).product()).collect()
}

/// Exact matrix of a subsystem: each cluster is marginalized onto its overlap
/// with `sel` (uniform weighting over traced preparations) and the pieces are
/// multiplied in `sel`'s qubit order.
pub fn true_mfm(model: &NoiseModel, sel: &SubsystemSelection) -> Result<FidelityMatrix> {
    model.check_selection(sel)?;
    let target = sel.layout();
    let mut pieces = Vec::new();
    for (_, m) in &model.clusters {
        let local: Vec<usize> = (0..m.width()).filter(|&p| target.contains(m.layout().qubits()[p])).collect();
        if local.is_empty() {
            continue;
        }
        let piece = marginalize(m, &SubsystemSelection::new(m.layout().clone(), local)?)?;
        let piece_sel = SubsystemSelection::of_qubits(&target, piece.layout().qubits())?;
        pieces.push((piece, piece_sel));
    }
    cluster_product(&pieces, &target)
}

/// Exact matrix over the model's full layout.
pub fn full_true_mfm(model: &NoiseModel) -> Result<FidelityMatrix> {
    let all = SubsystemSelection::new(model.layout.clone(), (0..model.layout.width()).collect())?;
    true_mfm(model, &all)
}

/// Observed distribution `q(j) = Σ_i K[i, j] p(i)` for an ideal distribution.
pub fn observe(model: &NoiseModel, ideal: &Distribution) -> Result<Distribution> {
    if ideal.layout() != &model.layout {
        return Err(MfmError::LayoutMismatch {
            expected: model.layout.qubits().to_vec(),
            found: ideal.layout().qubits().to_vec(),
        });
    }
    let k = full_true_mfm(model)?;
    let q = k.entries().transpose() * ideal.as_vector();
    let s = q.sum();
    Distribution::new(model.layout.clone(), q.iter().map(|v| v / s).collect())
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Multinomial draw via sequential conditional binomials.
fn multinomial(probs: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == probs.len() - 1 || mass <= 0.0 {
            out[k] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let c = if q >= 1.0 { remaining } else { Binomial::new(remaining, q).unwrap().sample(rng) };
        out[k] = c;
        remaining -= c;
        mass -= p;
    }
    out
}

fn check_shots(shots: u64) -> Result<()> {
    if shots < 1 {
        return Err(MfmError::TooFewShots { min: 1, found: shots });
    }
    Ok(())
}

const SPECTATOR_STREAM: u64 = 1 << 62;
const SUBSYSTEM_STREAM: u64 = 1 << 61;

/// `shots` independent readouts of a full-layout preparation.
pub fn sample_counts(model: &NoiseModel, prepared: &BitString, shots: u64, seed: u64) -> Result<CountsRecord> {
    check_shots(shots)?;
    let row = model.true_row(prepared)?;
    let mut rng = rng_for(seed, prepared.value());
    CountsRecord::from_histogram(*prepared, model.layout.width(), &multinomial(&row, shots, &mut rng))
}

/// One spectator run: target prepared in `prepared_target`, spectators mixed
/// per the model, all qubits read out.
pub fn spectator_run(
    model: &NoiseModel,
    target: &SubsystemSelection,
    prepared_target: &BitString,
    shots: u64,
    seed: u64,
) -> Result<CountsRecord> {
    check_shots(shots)?;
    let row = model.spectator_row(target, prepared_target)?;
    let stream = SPECTATOR_STREAM | (position_mask(target) << 20) | prepared_target.value();
    let mut rng = rng_for(seed, stream);
    CountsRecord::from_histogram(*prepared_target, model.layout.width(), &multinomial(&row, shots, &mut rng))
}

fn position_mask(sel: &SubsystemSelection) -> u64 {
    // order-sensitive so that (a, b) and (b, a) get different streams
    sel.positions().iter().fold(0u64, |acc, &p| acc.wrapping_mul(31).wrapping_add(p as u64 + 1)) & ((1 << 40) - 1)
}

/// All spectator runs for a target subsystem, one per target preparation.
pub fn spectator_experiment(model: &NoiseModel, target: &SubsystemSelection, shots: u64, seed: u64) -> Result<Vec<CountsRecord>> {
    target
        .layout()
        .states()
        .map(|s| spectator_run(model, target, &s, shots, seed))
        .collect()
}

/// Direct measurement of the matrix on `layout`: one record per basis state.
///
/// For the model's own layout every record is `sample_counts` of that state.
/// For a sub-layout the other qubits stay in the ground state and are not read
/// out, so outcomes span `layout` only.
pub fn full_mfm_experiment(model: &NoiseModel, layout: &QubitLayout, shots: u64, seed: u64) -> Result<Vec<CountsRecord>> {
    check_shots(shots)?;
    if layout.width() > crate::MAX_QUBITS {
        return Err(MfmError::TooManyQubits(layout.width()));
    }
    if layout == &model.layout {
        return layout.states().map(|s| sample_counts(model, &s, shots, seed)).collect();
    }
    let sel = SubsystemSelection::of_qubits(&model.layout, layout.qubits())?;
    let n = model.layout.width();
    let table = restriction_table(n, sel.positions());
    let mask = position_mask(&sel);
    layout
        .states()
        .map(|s| {
            let full = sel
                .positions()
                .iter()
                .enumerate()
                .fold(0u64, |acc, (t, &p)| acc | ((s.bit(t) as u64) << (n - 1 - p)));
            let row = model.true_row(&BitString::new(full, n)?)?;
            let mut sub = vec![0.0; layout.dim()];
            for (j, p) in row.iter().enumerate() {
                sub[table[j]] += p;
            }
            let mut rng = rng_for(seed, SUBSYSTEM_STREAM | (mask << 20) | s.value());
            CountsRecord::from_histogram(s, layout.width(), &multinomial(&sub, shots, &mut rng))
        })
        .collect()
}

/// Strategy for building an `n`-qubit matrix, priced in circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostStrategy {
    Full,
    Singles,
    Pairs,
    Triples,
    /// Two regions of `k` and `n − k` qubits.
    Split(usize),
}

impl FromStr for CostStrategy {
    type Err = MfmError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "full" => Ok(Self::Full),
            "singles" => Ok(Self::Singles),
            "pairs" => Ok(Self::Pairs),
            "triples" => Ok(Self::Triples),
            _ => {
                let k = s
                    .strip_prefix("split:")
                    .or_else(|| s.strip_prefix("split(").and_then(|r| r.strip_suffix(')')))
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| MfmError::InvalidArgument(format!("unknown strategy {s:?}")))?;
                Ok(Self::Split(k))
            }
        }
    }
}

impl fmt::Display for CostStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => f.write_str("full"),
            Self::Singles => f.write_str("singles"),
            Self::Pairs => f.write_str("pairs"),
            Self::Triples => f.write_str("triples"),
            Self::Split(k) => write!(f, "split:{k}"),
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of distinct preparation circuits required by `strategy`.
pub fn circuit_cost(n: usize, strategy: CostStrategy) -> Result<u64> {
    if n < 1 || n > 62 {
        return Err(MfmError::InvalidArgument(format!("qubit count {n} out of range")));
    }
    let n64 = n as u64;
    Ok(match strategy {
        CostStrategy::Full => 1u64 << n,
        CostStrategy::Singles => 2 * n64,
        CostStrategy::Pairs => 4 * binomial(n64, 2),
        CostStrategy::Triples => 8 * binomial(n64, 3),
        CostStrategy::Split(k) => {
            if k < 1 || k >= n {
                return Err(MfmError::InvalidArgument(format!("split size {k} must be in 1..{n}")));
            }
            (1u64 << k) + (1u64 << (n - k))
        }
    })
}

/// Joint matrix over `a ∪ b` equal to `a ⊗ b` plus a zero-marginal correlation
/// term of Frobenius norm `strength`.
///
/// Each row gains `±strength / 4` on outcomes with equal bits and loses it on
/// outcomes with unequal bits. The sign is chosen per row to keep entries
/// non-negative where possible.
pub fn correlated_pair(a: &FidelityMatrix, b: &FidelityMatrix, strength: f64) -> Result<FidelityMatrix> {
    if a.width() != 1 || b.width() != 1 {
        return Err(MfmError::InvalidArgument("correlated_pair takes one-qubit factors".into()));
    }
    let prod = crate::cumulant::tensor_product(&[a.clone(), b.clone()])?;
    let c = strength / 4.0;
    let signs: Vec<f64> = (0..4)
        .map(|i| {
            let equal = prod.get(i, 0).min(prod.get(i, 3));
            let unequal = prod.get(i, 1).min(prod.get(i, 2));
            if unequal >= equal {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    let e = DMatrix::from_fn(4, 4, |i, j| prod.get(i, j) + signs[i] * if (j >> 1) == (j & 1) { c } else { -c });
    FidelityMatrix::new(prod.layout().clone(), e)
}

/// Cluster matrix whose rows come from `excited` when the prepared cluster
/// state has at least `min_ones` set bits and from `quiet` otherwise.
///
/// Emulates preparation-dependent (gate-induced) correlation within a purely
/// readout-style model.
pub fn excitation_dependent(quiet: &FidelityMatrix, excited: &FidelityMatrix, min_ones: u32) -> Result<FidelityMatrix> {
    if quiet.layout() != excited.layout() {
        return Err(MfmError::LayoutMismatch {
            expected: quiet.layout().qubits().to_vec(),
            found: excited.layout().qubits().to_vec(),
        });
    }
    let dim = quiet.dim();
    let e = DMatrix::from_fn(dim, dim, |i, j| {
        if (i as u64).count_ones() >= min_ones {
            excited.get(i, j)
        } else {
            quiet.get(i, j)
        }
    });
    FidelityMatrix::new(quiet.layout().clone(), e)
}
