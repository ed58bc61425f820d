use std::path::{Path, PathBuf};

use super::files::{CountsFile, MatrixFile};
use super::CliError;
use crate::estimate::marginalize;
use crate::layout::{QubitLayout, SubsystemSelection};
use crate::matrix::FidelityMatrix;

/// One loaded input: a measured or previously built matrix.
#[derive(Debug, Clone)]
pub struct Source {
    pub path: PathBuf,
    pub matrix: FidelityMatrix,
    /// Known only for counts inputs.
    pub shots: Option<u64>,
}

/// Supplies subsystem matrices from a set of input files.
///
/// A request for some qubits is served by the narrowest input covering them
/// (earlier files win ties), marginalized down as needed. The source index is
/// returned so callers can tell whether two matrices share samples.
#[derive(Debug, Clone, Default)]
pub struct MatrixPool {
    sources: Vec<Source>,
}

impl MatrixPool {
    pub fn load(paths: &[PathBuf]) -> Result<Self, CliError> {
        let mut sources = Vec::with_capacity(paths.len());
        for p in paths {
            sources.push(load_source(p)?);
        }
        if sources.is_empty() {
            return Err(CliError::Usage("no input files".into()));
        }
        Ok(Self { sources })
    }

    pub fn from_sources(sources: Vec<Source>) -> Self {
        Self { sources }
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    /// All input qubits in first-seen order.
    pub fn qubits(&self) -> Vec<u32> {
        let mut out: Vec<u32> = vec![];
        for s in &self.sources {
            for &q in s.matrix.layout().qubits() {
                if !out.contains(&q) {
                    out.push(q);
                }
            }
        }
        out
    }

    /// Matrix over exactly `qubits` (in that order) and its source index.
    pub fn lookup(&self, qubits: &[u32]) -> Result<(FidelityMatrix, usize), CliError> {
        let idx = self
            .sources
            .iter()
            .enumerate()
            .filter(|(_, s)| qubits.iter().all(|q| s.matrix.layout().contains(*q)))
            .min_by_key(|(i, s)| (s.matrix.width(), *i))
            .map(|(i, _)| i)
            .ok_or_else(|| CliError::Usage(format!("no input covers qubits {qubits:?}")))?;
        let src = &self.sources[idx].matrix;
        let ctx = || format!("marginalizing {} onto {qubits:?}", self.sources[idx].path.display());
        let sel = SubsystemSelection::of_qubits(src.layout(), qubits).map_err(|e| CliError::mfm(ctx(), e))?;
        let m = marginalize(src, &sel).map_err(|e| CliError::mfm(ctx(), e))?;
        Ok((m, idx))
    }

    /// Shot count of a source, required for uncertainty and bias correction.
    pub fn shots(&self, idx: usize) -> Result<u64, CliError> {
        self.sources[idx]
            .shots
            .ok_or_else(|| CliError::Usage(format!("{} is a matrix file; shot count unknown", self.sources[idx].path.display())))
    }
}

/// Marginal of `k` on the given qubits.
pub fn marginal(k: &FidelityMatrix, qubits: &[u32]) -> Result<FidelityMatrix, CliError> {
    let sel = SubsystemSelection::of_qubits(k.layout(), qubits).map_err(|e| CliError::mfm("selection", e))?;
    marginalize(k, &sel).map_err(|e| CliError::mfm("marginalize", e))
}

fn load_source(path: &Path) -> Result<Source, CliError> {
    let value: serde_json::Value = super::files::read_json(path)?;
    if value.get("records").is_some() {
        let f = CountsFile::read(path)?;
        let matrix = f.matrix().map_err(|e| e.in_file(path))?;
        Ok(Source { path: path.to_path_buf(), matrix, shots: Some(f.shots) })
    } else if value.get("entries").is_some() {
        let matrix = MatrixFile::read(path)?.matrix().map_err(|e| e.in_file(path))?;
        Ok(Source { path: path.to_path_buf(), matrix, shots: None })
    } else {
        Err(CliError::Parse { path: path.display().to_string(), message: "neither a counts file nor a matrix file".into() })
    }
}

pub fn parse_layout(s: &str) -> Result<QubitLayout, CliError> {
    let qubits = parse_ids(s)?;
    QubitLayout::new(qubits).map_err(|e| CliError::mfm("--layout", e))
}

fn parse_ids(s: &str) -> Result<Vec<u32>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|_| CliError::Usage(format!("bad qubit id {x:?}"))))
        .collect()
}

/// `"0,1,2;3,4"` → clusters.
pub fn parse_clusters(s: &str) -> Result<Vec<QubitLayout>, CliError> {
    s.split(';')
        .filter(|c| !c.trim().is_empty())
        .map(|c| QubitLayout::new(parse_ids(c)?).map_err(|e| CliError::mfm("--clusters", e)))
        .collect()
}
