use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::files::{self, square_csv, write_json, write_text, CalibrationFile, CountsFile, DistributionFile, MatrixFile, ModelFile};
use super::pool::{marginal, parse_clusters, parse_layout, MatrixPool};
use super::{CliError, Experiment, ReconstructMode};
use crate::cumulant::{
    cluster_product, cumulant1, cumulant2, cumulant3, reconstruct, scf_by_target_state, tensor_product, CumulantSet, CumulantTensor,
};
use crate::layout::{QubitLayout, SubsystemSelection};
use crate::matrix::FidelityMatrix;
use crate::metrics::{correlation_heatmap, sigma_scf_bound_row, uncertainty, HeatmapMode, MetricReport};
use crate::mitigate::{mitigate_distribution, MitigationMethod, CONDITION_WARNING};
use crate::simdevice::{circuit_cost, full_mfm_experiment, spectator_experiment, CostStrategy};

fn emit_json<T: Serialize>(value: &T, dest: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match dest {
        Some(p) => write_json(p, value),
        None => {
            let text = serde_json::to_string_pretty(value).expect("serializable");
            writeln!(out, "{text}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn say(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

pub fn cmd_build_full(counts: &Path, dest: &Path, report: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let k = CountsFile::read(counts)?.matrix().map_err(|e| e.in_file(counts))?;
    write_json(dest, &MatrixFile::from_matrix(&k))?;
    let metrics = MetricReport::new(&k, None).map_err(|e| CliError::mfm("metrics", e))?;
    emit_json(&metrics, report, out)
}

/// Per-qubit kernel `[[1 − p10, p10], [p01, 1 − p01]]`.
pub fn vendor_kernel(cal: &CalibrationFile, layout: Option<&QubitLayout>) -> Result<FidelityMatrix, CliError> {
    let qubits: Vec<u32> = match layout {
        Some(l) => l.qubits().to_vec(),
        None => cal.entries.iter().map(|e| e.qubit).collect(),
    };
    let factors = qubits
        .iter()
        .map(|&q| {
            let e = cal
                .entries
                .iter()
                .find(|e| e.qubit == q)
                .ok_or_else(|| CliError::Usage(format!("calibration has no entry for qubit {q}")))?;
            let l = QubitLayout::new(vec![q]).map_err(|err| CliError::mfm("layout", err))?;
            FidelityMatrix::new(l, DMatrix::from_row_slice(2, 2, &[1.0 - e.p10, e.p10, e.p01, 1.0 - e.p01]))
                .map_err(|err| CliError::mfm(format!("qubit {q}"), err))
        })
        .collect::<Result<Vec<_>, _>>()?;
    tensor_product(&factors).map_err(|e| CliError::mfm("tensor product", e))
}

pub fn cmd_vendor_kernel(calibration: &Path, layout: Option<&str>, dest: &Path) -> Result<(), CliError> {
    let cal = CalibrationFile::read(calibration)?;
    let layout = layout.map(parse_layout).transpose()?;
    let k = vendor_kernel(&cal, layout.as_ref())?;
    write_json(dest, &MatrixFile::from_matrix(&k))
}

#[derive(Debug, Clone)]
pub struct ReconstructOptions {
    pub mode: ReconstructMode,
    pub layout: String,
    pub clusters: Option<String>,
    pub bias_correct: bool,
    pub project: bool,
    pub reference: Option<PathBuf>,
    pub emit_fidelities: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructReport {
    pub mode: String,
    pub bias_corrected: bool,
    pub raw: MetricReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projected: Option<MetricReport>,
}

fn pair_cumulant(pool: &MatrixPool, a: u32, b: u32, bias: bool) -> Result<CumulantTensor, CliError> {
    let (k_ab, src) = pool.lookup(&[a, b])?;
    let (k_a, k_b) = (marginal(&k_ab, &[a])?, marginal(&k_ab, &[b])?);
    let t = cumulant2(&k_ab, &k_a, &k_b).map_err(|e| CliError::mfm(format!("pair {a},{b}"), e))?;
    maybe_bias(pool, t, src, bias)
}

fn triple_cumulant(pool: &MatrixPool, q: [u32; 3], bias: bool) -> Result<CumulantTensor, CliError> {
    let (k, src) = pool.lookup(&q)?;
    let singles = q.iter().map(|&x| marginal(&k, &[x])).collect::<Result<Vec<_>, _>>()?;
    let pairs = [[q[0], q[1]], [q[1], q[2]], [q[0], q[2]]]
        .iter()
        .map(|p| marginal(&k, p))
        .collect::<Result<Vec<_>, _>>()?;
    let t = cumulant3(&k, &singles, &pairs).map_err(|e| CliError::mfm(format!("triple {q:?}"), e))?;
    maybe_bias(pool, t, src, bias)
}

fn maybe_bias(pool: &MatrixPool, t: CumulantTensor, src: usize, bias: bool) -> Result<CumulantTensor, CliError> {
    if !bias {
        return Ok(t);
    }
    t.bias_corrected_with(pool.shots(src)?).map_err(|e| CliError::mfm("bias correction", e))
}

/// Reconstruction over `layout` from the inputs in `pool`.
///
/// Cumulant modes take each pair (and triple) cumulant from a single input,
/// together with the marginals of that same input, so bias correction is
/// always applicable when requested.
pub fn reconstruct_from_pool(
    pool: &MatrixPool,
    layout: &QubitLayout,
    mode: ReconstructMode,
    clusters: Option<&[QubitLayout]>,
    bias: bool,
) -> Result<FidelityMatrix, CliError> {
    let q = layout.qubits();
    let n = q.len();
    match mode {
        ReconstructMode::Cumulant2 | ReconstructMode::Cumulant3 => {
            let mut set = CumulantSet::new();
            for &a in q {
                let (k, _) = pool.lookup(&[a])?;
                set.insert(cumulant1(&k).map_err(|e| CliError::mfm(format!("qubit {a}"), e))?);
            }
            for x in 0..n {
                for y in x + 1..n {
                    set.insert(pair_cumulant(pool, q[x], q[y], bias)?);
                }
            }
            let order = if mode == ReconstructMode::Cumulant3 {
                for x in 0..n {
                    for y in x + 1..n {
                        for z in y + 1..n {
                            set.insert(triple_cumulant(pool, [q[x], q[y], q[z]], bias)?);
                        }
                    }
                }
                3
            } else {
                2
            };
            reconstruct(&set, layout, order).map_err(|e| CliError::mfm("reconstruct", e))
        }
        ReconstructMode::Cluster => {
            let clusters = clusters.ok_or_else(|| CliError::Usage("cluster mode needs --clusters".into()))?;
            let pieces = clusters
                .iter()
                .map(|c| {
                    let (m, _) = pool.lookup(c.qubits())?;
                    let sel = SubsystemSelection::of_qubits(layout, c.qubits()).map_err(|e| CliError::mfm("--clusters", e))?;
                    Ok((m, sel))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            cluster_product(&pieces, layout).map_err(|e| CliError::mfm("cluster product", e))
        }
    }
}

fn load_matrix(path: &Path) -> Result<FidelityMatrix, CliError> {
    let pool = MatrixPool::load(&[path.to_path_buf()])?;
    Ok(pool.sources()[0].matrix.clone())
}

pub fn cmd_reconstruct(inputs: &[PathBuf], opts: &ReconstructOptions, dest: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let pool = MatrixPool::load(inputs)?;
    let layout = parse_layout(&opts.layout)?;
    let clusters = opts.clusters.as_deref().map(parse_clusters).transpose()?;
    let raw = reconstruct_from_pool(&pool, &layout, opts.mode, clusters.as_deref(), opts.bias_correct)?;
    let reference = match &opts.reference {
        Some(p) => {
            let r = load_matrix(p)?;
            let perm = r.layout().positions_of(&layout).map_err(|e| CliError::mfm("--reference layout", e))?;
            Some(crate::cumulant::permute_qubits(&r, &perm).map_err(|e| CliError::mfm("--reference", e))?)
        }
        None => None,
    };
    let metric = |k: &FidelityMatrix| MetricReport::new(k, reference.as_ref()).map_err(|e| CliError::mfm("metrics", e));
    let raw_report = metric(&raw)?;
    let projected = opts.project.then(|| raw.project_stochastic());
    let projected_report = projected.as_ref().map(metric).transpose()?;
    let result = projected.as_ref().unwrap_or(&raw);
    write_json(dest, &MatrixFile::from_matrix(result))?;
    if let Some(p) = &opts.emit_fidelities {
        write_text(p, &fidelity_csv(result, reference.as_ref()))?;
    }
    let report = ReconstructReport {
        mode: format!("{:?}", opts.mode).to_lowercase(),
        bias_corrected: raw.flags().bias_corrected,
        raw: raw_report,
        projected: projected_report,
    };
    emit_json(&report, opts.report.as_deref(), out)
}

fn fidelity_csv(k: &FidelityMatrix, reference: Option<&FidelityMatrix>) -> String {
    let mut s = String::from(if reference.is_some() { "state,f_reference,f_reconstructed\n" } else { "state,f_reconstructed\n" });
    let f = k.fidelities();
    let fr = reference.map(|r| r.fidelities());
    for (i, state) in k.layout().states().enumerate() {
        match &fr {
            Some(fr) => s.push_str(&format!("{state},{},{}\n", fr[i], f[i])),
            None => s.push_str(&format!("{state},{}\n", f[i])),
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct ScfOptions {
    pub layout: Option<String>,
    pub clusters: Option<String>,
    pub per_state: bool,
    pub absolute: bool,
    pub bias_correct: bool,
    pub heatmap: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateScf {
    pub state: String,
    pub scf: f64,
    pub sigma_scf: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScfEntry {
    /// Qubits of the two subsystems.
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub scf: f64,
    pub sigma_scf: f64,
    pub significant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_state: Option<Vec<StateScf>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScfReport {
    pub labels: Vec<String>,
    pub bias_corrected: bool,
    pub heatmap_mode: HeatmapMode,
    pub entries: Vec<ScfEntry>,
    /// Row-major heatmap over `labels`.
    pub heatmap: Vec<Vec<f64>>,
    /// Pair mode with per-state output: heatmap per prepared pair state.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_state_heatmaps: BTreeMap<String, Vec<Vec<f64>>>,
}

impl ScfReport {
    pub fn significant_pairs(&self) -> Vec<(Vec<u32>, Vec<u32>)> {
        self.entries.iter().filter(|e| e.significant).map(|e| (e.a.clone(), e.b.clone())).collect()
    }
}

fn scf_entry(pool: &MatrixPool, a: &[u32], b: &[u32], per_state: bool, bias: bool) -> Result<ScfEntry, CliError> {
    let joint: Vec<u32> = a.iter().chain(b).copied().collect();
    let (k_ab, src) = pool.lookup(&joint)?;
    let shots = pool.shots(src)?;
    let (k_a, k_b) = (marginal(&k_ab, a)?, marginal(&k_ab, b)?);
    let ctx = || format!("correlation of {a:?} and {b:?}");
    let (lambda, rep) = uncertainty(&k_ab, &k_a, &k_b, shots, bias).map_err(|e| CliError::mfm(ctx(), e))?;
    let per_state = if per_state {
        let rows = scf_by_target_state(&lambda)
            .into_iter()
            .enumerate()
            .map(|(i, (state, scf))| {
                let sigma = sigma_scf_bound_row(&lambda, i).map_err(|e| CliError::mfm(ctx(), e))?;
                Ok(StateScf { state: state.to_string(), scf, sigma_scf: sigma, significant: scf > sigma })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Some(rows)
    } else {
        None
    };
    Ok(ScfEntry { a: a.to_vec(), b: b.to_vec(), scf: rep.scf, sigma_scf: rep.sigma_scf, significant: rep.significant, per_state })
}

fn heat(l: f64, s: f64, mode: HeatmapMode) -> f64 {
    match mode {
        HeatmapMode::Clamped => (l - s).max(0.0),
        HeatmapMode::Absolute => (l - s).abs(),
    }
}

/// Correlation factors for every pair of qubits (or of clusters).
pub fn scf_from_pool(pool: &MatrixPool, opts: &ScfOptions) -> Result<ScfReport, CliError> {
    let mode = if opts.absolute { HeatmapMode::Absolute } else { HeatmapMode::Clamped };
    let groups: Vec<Vec<u32>> = match &opts.clusters {
        Some(c) => parse_clusters(c)?.into_iter().map(|l| l.qubits().to_vec()).collect(),
        None => {
            let q = match &opts.layout {
                Some(l) => parse_layout(l)?.qubits().to_vec(),
                None => pool.qubits(),
            };
            q.into_iter().map(|x| vec![x]).collect()
        }
    };
    let labels: Vec<String> = groups
        .iter()
        .map(|g| g.iter().map(|q| q.to_string()).collect::<Vec<_>>().join("-"))
        .collect();
    let n = groups.len();
    let mut entries = vec![];
    let mut cells = DMatrix::zeros(n, n);
    let mut per_state_cells: BTreeMap<String, DMatrix<f64>> = BTreeMap::new();
    let mut pair_results = BTreeMap::new();
    for x in 0..n {
        for y in x + 1..n {
            let e = scf_entry(pool, &groups[x], &groups[y], opts.per_state, opts.bias_correct)?;
            let v = heat(e.scf, e.sigma_scf, mode);
            cells[(x, y)] = v;
            cells[(y, x)] = v;
            if opts.clusters.is_none() {
                pair_results.insert((groups[x][0], groups[y][0]), (e.scf, e.sigma_scf));
                for s in e.per_state.iter().flatten() {
                    let m = per_state_cells.entry(s.state.clone()).or_insert_with(|| DMatrix::zeros(n, n));
                    let v = heat(s.scf, s.sigma_scf, mode);
                    m[(x, y)] = v;
                    m[(y, x)] = v;
                }
            }
            entries.push(e);
        }
    }
    if opts.clusters.is_none() {
        let layout = QubitLayout::new(groups.iter().map(|g| g[0]).collect()).map_err(|e| CliError::mfm("layout", e))?;
        cells = correlation_heatmap(&layout, &pair_results, mode).map_err(|e| CliError::mfm("heatmap", e))?;
    }
    let rows = |m: &DMatrix<f64>| m.row_iter().map(|r| r.iter().copied().collect()).collect::<Vec<Vec<f64>>>();
    Ok(ScfReport {
        labels,
        bias_corrected: opts.bias_correct,
        heatmap_mode: mode,
        entries,
        heatmap: rows(&cells),
        per_state_heatmaps: per_state_cells.iter().map(|(k, m)| (k.clone(), rows(m))).collect(),
    })
}

pub fn cmd_scf(inputs: &[PathBuf], opts: &ScfOptions, dest: &Path) -> Result<(), CliError> {
    let pool = MatrixPool::load(inputs)?;
    let report = scf_from_pool(&pool, opts)?;
    write_json(dest, &report)?;
    if let Some(h) = &opts.heatmap {
        let to_m = |rows: &Vec<Vec<f64>>| DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j]);
        write_text(h, &square_csv(&report.labels, &to_m(&report.heatmap)))?;
        for (state, rows) in &report.per_state_heatmaps {
            write_text(&suffixed(h, state), &square_csv(&report.labels, &to_m(rows)))?;
        }
    }
    Ok(())
}

/// `dir/heat.csv` + `"11"` → `dir/heat_11.csv`.
pub fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}{ext}"))
}

pub fn cmd_mitigate(distribution: &Path, matrix: &Path, method: &str, dest: &Path) -> Result<(), CliError> {
    let method: MitigationMethod = method.parse().map_err(|e| CliError::mfm("--method", e))?;
    let q = DistributionFile::read(distribution)?.distribution().map_err(|e| e.in_file(distribution))?;
    let k = MatrixFile::read(matrix)?.matrix().map_err(|e| e.in_file(matrix))?;
    let m = mitigate_distribution(&k, &q, method).map_err(|e| CliError::mfm("mitigate", e))?;
    if m.ill_conditioned {
        eprintln!("warning: kernel condition number {:.3e} exceeds {CONDITION_WARNING:e}", m.condition);
    }
    let f = DistributionFile {
        schema_version: files::SCHEMA_VERSION.into(),
        layout: k.layout().clone(),
        probs: m.probs,
        method: Some(if method == MitigationMethod::Solve { "solve" } else { "project-solve" }.into()),
        condition_number: Some(m.condition),
    };
    write_json(dest, &f)
}

fn file_label(qubits: &[u32]) -> String {
    qubits.iter().map(|q| q.to_string()).collect::<Vec<_>>().join("_")
}

pub fn cmd_simulate(
    model: &Path,
    experiment: Experiment,
    shots: u64,
    seed: u64,
    clusters: Option<&str>,
    out_dir: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let model = ModelFile::read(model)?.model().map_err(|e| e.in_file(model))?;
    let layout = model.layout().clone();
    let sim = |e| CliError::mfm("simulate", e);
    let direct = |sub: &QubitLayout, name: String| -> Result<(PathBuf, CountsFile), CliError> {
        let records = full_mfm_experiment(&model, sub, shots, seed).map_err(sim)?;
        Ok((out_dir.join(name), CountsFile::from_records(sub.clone(), None, &records)))
    };
    let mut written = vec![];
    match experiment {
        Experiment::Full => written.push(direct(&layout, "full.json".into())?),
        Experiment::Singles => {
            for &q in layout.qubits() {
                let l = QubitLayout::new(vec![q]).map_err(sim)?;
                written.push(direct(&l, format!("single_{q}.json"))?);
            }
        }
        Experiment::Clusters => {
            let groups = match clusters {
                Some(c) => parse_clusters(c)?,
                None => model.clusters().iter().map(|(_, m)| m.layout().clone()).collect(),
            };
            for g in groups {
                written.push(direct(&g, format!("cluster_{}.json", file_label(g.qubits())))?);
            }
        }
        Experiment::PairsWithSpectators => {
            let n = layout.width();
            for a in 0..n {
                for b in a + 1..n {
                    let target = SubsystemSelection::new(layout.clone(), vec![a, b]).map_err(sim)?;
                    let records = spectator_experiment(&model, &target, shots, seed).map_err(sim)?;
                    let f = CountsFile::from_records(layout.clone(), Some(target.complement()), &records);
                    let name = format!("pair_{}.json", file_label(&[layout.qubits()[a], layout.qubits()[b]]));
                    written.push((out_dir.join(name), f));
                }
            }
        }
    }
    for (path, f) in &written {
        write_json(path, f)?;
        say(out, path.display())?;
    }
    Ok(())
}

pub const COST_TABLE_MAX: usize = 20;

/// CSV of circuit counts for n = 1..=20; `split` uses the even split `n / 2`.
pub fn cost_table() -> String {
    let mut s = String::from("n,full,singles,pairs,triples,split_half\n");
    for n in 1..=COST_TABLE_MAX {
        let c = |st| circuit_cost(n, st).unwrap();
        let split = if n >= 2 { c(CostStrategy::Split(n / 2)).to_string() } else { String::new() };
        s.push_str(&format!(
            "{n},{},{},{},{},{split}\n",
            c(CostStrategy::Full),
            c(CostStrategy::Singles),
            c(CostStrategy::Pairs),
            c(CostStrategy::Triples)
        ));
    }
    s
}

pub fn cmd_cost(n: Option<usize>, strategy: Option<&str>, table: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(t) = table {
        write_text(t, &cost_table())?;
    }
    match (n, strategy) {
        (Some(n), Some(s)) => {
            let s: CostStrategy = s.parse().map_err(|e| CliError::mfm("strategy", e))?;
            let c = circuit_cost(n, s).map_err(|e| CliError::mfm("cost", e))?;
            say(out, c)
        }
        (None, None) if table.is_some() => Ok(()),
        _ => Err(CliError::Usage("cost needs both N and STRATEGY, or --table".into())),
    }
}
