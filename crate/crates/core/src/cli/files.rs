//! JSON and CSV file formats.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::counts::CountsRecord;
use crate::error::MfmError;
use crate::layout::{BitString, QubitLayout, SubsystemSelection};
use crate::matrix::{Distribution, FidelityMatrix, MatrixFlags};
use crate::simdevice::{NoiseModel, SpectatorMixing};

pub const SCHEMA_VERSION: &str = "1";

fn schema_version() -> String {
    SCHEMA_VERSION.to_string()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.display().to_string(), message: e.to_string() })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn check_version(path: &Path, v: &str) -> Result<(), CliError> {
    if v != SCHEMA_VERSION {
        return Err(CliError::Parse {
            path: path.display().to_string(),
            message: format!("schema_version {v:?} is not supported (expected {SCHEMA_VERSION:?})"),
        });
    }
    Ok(())
}

/// Counts for a set of prepared states over one layout.
///
/// With `spectator_positions`, prepared strings cover only the remaining
/// (target) positions while outcome strings always cover the full layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsFile {
    #[serde(default = "schema_version")]
    pub schema_version: String,
    pub layout: QubitLayout,
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectator_positions: Option<Vec<usize>>,
    pub records: Vec<RecordEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordEntry {
    pub prepared: String,
    pub counts: BTreeMap<String, u64>,
}

impl CountsFile {
    pub fn from_records(layout: QubitLayout, spectator_positions: Option<Vec<usize>>, records: &[CountsRecord]) -> Self {
        let shots = records.first().map_or(0, |r| r.shots());
        let records = records
            .iter()
            .map(|r| RecordEntry {
                prepared: r.prepared().to_string(),
                counts: r.counts().iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            })
            .collect();
        Self { schema_version: schema_version(), layout, shots, spectator_positions, records }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let f: Self = read_json(path)?;
        check_version(path, &f.schema_version)?;
        Ok(f)
    }

    /// Target subsystem for spectator data.
    pub fn target(&self) -> Result<Option<SubsystemSelection>, MfmError> {
        let Some(spect) = &self.spectator_positions else { return Ok(None) };
        crate::layout::check_positions(spect, self.layout.width())?;
        let target: Vec<usize> = (0..self.layout.width()).filter(|p| !spect.contains(p)).collect();
        SubsystemSelection::new(self.layout.clone(), target).map(Some)
    }

    /// Validated records; errors name the offending record and field.
    pub fn records(&self) -> Result<Vec<CountsRecord>, CliError> {
        let ctx = |i: usize, field: &str| format!("record {i} field {field}");
        let target = self.target().map_err(|e| CliError::mfm("spectator_positions", e))?;
        let prep_width = target.as_ref().map_or(self.layout.width(), |t| t.width());
        let mut out = Vec::with_capacity(self.records.len());
        for (i, r) in self.records.iter().enumerate() {
            let prepared: BitString = r.prepared.parse().map_err(|e| CliError::mfm(ctx(i, "prepared"), e))?;
            if prepared.width() != prep_width {
                return Err(CliError::mfm(ctx(i, "prepared"), MfmError::WidthMismatch { expected: prep_width, found: prepared.width() }));
            }
            let mut counts = BTreeMap::new();
            for (k, v) in &r.counts {
                let key: BitString = k.parse().map_err(|e| CliError::mfm(ctx(i, "counts"), e))?;
                if key.width() != self.layout.width() {
                    return Err(CliError::mfm(
                        ctx(i, "counts"),
                        MfmError::WidthMismatch { expected: self.layout.width(), found: key.width() },
                    ));
                }
                counts.insert(key, *v);
            }
            let rec = CountsRecord::new(prepared, counts, self.shots).map_err(|e| CliError::mfm(ctx(i, "counts"), e))?;
            out.push(rec);
        }
        Ok(out)
    }

    /// The matrix these counts describe: the full layout for direct runs, the
    /// target subsystem for spectator runs.
    pub fn matrix(&self) -> Result<FidelityMatrix, CliError> {
        let records = self.records()?;
        match self.target().map_err(|e| CliError::mfm("spectator_positions", e))? {
            Some(t) => crate::estimate::extract_with_spectators(&records, &t),
            None => crate::estimate::build_mfm(&records, &self.layout),
        }
        .map_err(|e| CliError::mfm("records", e))
    }
}

/// A fidelity matrix with its layout and flags; `entries` is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    #[serde(default = "schema_version")]
    pub schema_version: String,
    pub layout: QubitLayout,
    #[serde(default)]
    pub flags: MatrixFlags,
    pub entries: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(k: &FidelityMatrix) -> Self {
        Self { schema_version: schema_version(), layout: k.layout().clone(), flags: k.flags(), entries: k.rows() }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let f: Self = read_json(path)?;
        check_version(path, &f.schema_version)?;
        Ok(f)
    }

    pub fn matrix(&self) -> Result<FidelityMatrix, CliError> {
        FidelityMatrix::from_rows(self.layout.clone(), &self.entries, self.flags).map_err(|e| CliError::mfm("entries", e))
    }
}

/// Probabilities in basis-index order. Mitigation output may carry negative
/// entries (method `solve`) and records the kernel's condition number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    #[serde(default = "schema_version")]
    pub schema_version: String,
    pub layout: QubitLayout,
    pub probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_number: Option<f64>,
}

impl DistributionFile {
    pub fn from_distribution(d: &Distribution) -> Self {
        Self { schema_version: schema_version(), layout: d.layout().clone(), probs: d.probs().to_vec(), method: None, condition_number: None }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let f: Self = read_json(path)?;
        check_version(path, &f.schema_version)?;
        Ok(f)
    }

    pub fn distribution(&self) -> Result<Distribution, CliError> {
        Distribution::new(self.layout.clone(), self.probs.clone()).map_err(|e| CliError::mfm("probs", e))
    }
}

/// Per-qubit readout error rates as published by a device vendor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    #[serde(default = "schema_version")]
    pub schema_version: String,
    pub entries: Vec<CalibrationEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationEntry {
    pub qubit: u32,
    /// p(measure 1 | prepared 0)
    pub p10: f64,
    /// p(measure 0 | prepared 1)
    pub p01: f64,
}

impl CalibrationFile {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let f: Self = read_json(path)?;
        check_version(path, &f.schema_version)?;
        for (i, e) in f.entries.iter().enumerate() {
            for (name, v) in [("p10", e.p10), ("p01", e.p01)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(CliError::mfm(format!("entry {i} field {name}"), MfmError::OutOfRange { name: "probability", value: v }));
                }
            }
        }
        Ok(f)
    }
}

/// Simulator noise model: one joint matrix per cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default = "schema_version")]
    pub schema_version: String,
    pub layout: QubitLayout,
    #[serde(default)]
    pub spectator_mixing: SpectatorMixing,
    pub clusters: Vec<ClusterEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterEntry {
    pub qubits: QubitLayout,
    pub entries: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn from_model(m: &NoiseModel) -> Self {
        Self {
            schema_version: schema_version(),
            layout: m.layout().clone(),
            spectator_mixing: m.spectator_mixing(),
            clusters: m.clusters().iter().map(|(_, k)| ClusterEntry { qubits: k.layout().clone(), entries: k.rows() }).collect(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let f: Self = read_json(path)?;
        check_version(path, &f.schema_version)?;
        Ok(f)
    }

    pub fn model(&self) -> Result<NoiseModel, CliError> {
        let clusters = self
            .clusters
            .iter()
            .enumerate()
            .map(|(i, c)| {
                FidelityMatrix::from_rows(c.qubits.clone(), &c.entries, MatrixFlags::default())
                    .map_err(|e| CliError::mfm(format!("cluster {i}"), e))
            })
            .collect::<Result<Vec<_>, _>>()?;
        NoiseModel::new(self.layout.clone(), clusters, self.spectator_mixing).map_err(|e| CliError::mfm("clusters", e))
    }
}

/// CSV with a header row of labels followed by one row per label.
pub fn square_csv(labels: &[String], m: &DMatrix<f64>) -> String {
    let mut s = labels.join(",");
    s.push('\n');
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}
