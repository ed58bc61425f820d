use std::path::{Path, PathBuf};
use std::process::Command;

use mfm::cli::files::{read_json, write_json, CalibrationFile, CountsFile, DistributionFile, MatrixFile, ModelFile};
use mfm::cli::ScfReport;
use mfm::cumulant::tensor_product;
use mfm::simdevice::{correlated_pair, full_mfm_experiment, full_true_mfm, observe};
use mfm::{Distribution, FidelityMatrix, NoiseModel, QubitLayout, SpectatorMixing};
use nalgebra::DMatrix;

fn mfm(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mfm")).args(args).env_remove("MFM_SEED").output().expect("run mfm");
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn layout(qs: &[u32]) -> QubitLayout {
    QubitLayout::new(qs.to_vec()).unwrap()
}

fn one(q: u32, e: [f64; 4]) -> FidelityMatrix {
    FidelityMatrix::new(layout(&[q]), DMatrix::from_row_slice(2, 2, &e)).unwrap()
}

fn write_model(dir: &Path, model: &NoiseModel) -> PathBuf {
    let path = dir.join("model.json");
    write_json(&path, &ModelFile::from_model(model)).unwrap();
    path
}

fn five_qubit_model() -> NoiseModel {
    let e = [[0.97, 0.03, 0.04, 0.96], [0.96, 0.04, 0.05, 0.95], [0.98, 0.02, 0.03, 0.97], [0.95, 0.05, 0.04, 0.96], [0.97, 0.03, 0.02, 0.98]];
    let pair = correlated_pair(&one(1, e[1]), &one(3, e[3]), 0.05).unwrap();
    NoiseModel::new(layout(&[0, 1, 2, 3, 4]), vec![one(0, e[0]), pair, one(2, e[2]), one(4, e[4])], SpectatorMixing::IdealUniform).unwrap()
}

#[test]
fn noiseless_single_qubit_builds_identity() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("c.json");
    std::fs::write(
        &counts,
        r#"{"schema_version":"1","layout":[0],"shots":100,"records":[
            {"prepared":"0","counts":{"0":100}},{"prepared":"1","counts":{"1":100}}]}"#,
    )
    .unwrap();
    let out = dir.path().join("k.json");
    let (code, stdout, _) = mfm(&["build-full", p(&counts), "--out", p(&out)]);
    assert_eq!(code, 0);
    let k = MatrixFile::read(&out).unwrap().matrix().unwrap();
    assert_eq!(k, FidelityMatrix::identity(layout(&[0])));
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["dist_identity"], 0.0);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("c.json");
    std::fs::write(&counts, r#"{"layout":[0,1],"shots":10,"records":[{"prepared":"00","counts":{"00":10}}]}"#).unwrap();
    let (code, _, err) = mfm(&["build-full", p(&counts), "--out", p(&dir.path().join("k.json"))]);
    assert_eq!(code, 2);
    assert!(err.contains("missing prepared state"), "{err}");

    std::fs::write(&counts, r#"{"layout":[0],"shots":10,"records":[{"prepared":"0","counts":{"0":9}},{"prepared":"1","counts":{"1":10}}]}"#).unwrap();
    let (code, _, err) = mfm(&["build-full", p(&counts), "--out", p(&dir.path().join("k.json"))]);
    assert_eq!(code, 2);
    assert!(err.contains("record 0 field counts"), "{err}");

    std::fs::write(&counts, "{\n  \"layout\": [0],\n  \"shots\": \"many\"\n}").unwrap();
    let (code, _, err) = mfm(&["build-full", p(&counts), "--out", p(&dir.path().join("k.json"))]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3"), "{err}");

    let (code, _, _) = mfm(&["cost", "5", "split:5"]);
    assert_eq!(code, 2);
    let (code, _, _) = mfm(&["no-such-command"]);
    assert_eq!(code, 2);
}

#[test]
fn missing_file_exits_4() {
    let (code, _, _) = mfm(&["build-full", "/nonexistent/counts.json", "--out", "/tmp/x.json"]);
    assert_eq!(code, 4);
}

#[test]
fn cost_subcommand() {
    assert_eq!(mfm(&["cost", "5", "full"]).1.trim(), "32");
    assert_eq!(mfm(&["cost", "5", "split:2"]).1.trim(), "12");
    assert_eq!(mfm(&["cost", "8", "pairs"]).1.trim(), "112");
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("cost.csv");
    assert_eq!(mfm(&["cost", "--table", p(&table)]).0, 0);
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert_eq!(text.lines().nth(20).unwrap(), "20,1048576,40,760,9120,2048");
}

#[test]
fn vendor_kernel_matches_tensor_product() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal.json");
    std::fs::write(&cal, r#"{"schema_version":"1","entries":[{"qubit":3,"p10":0.02,"p01":0.05},{"qubit":1,"p10":0.01,"p01":0.07}]}"#).unwrap();
    let out = dir.path().join("k.json");
    assert_eq!(mfm(&["vendor-kernel", p(&cal), "--layout", "3", "--out", p(&out)]).0, 0);
    let k = MatrixFile::read(&out).unwrap().matrix().unwrap();
    assert_eq!(k.rows(), vec![vec![0.98, 0.02], vec![0.05, 0.95]]);
    assert_eq!(mfm(&["vendor-kernel", p(&cal), "--out", p(&out)]).0, 0);
    let k = MatrixFile::read(&out).unwrap().matrix().unwrap();
    let t = tensor_product(&[one(3, [0.98, 0.02, 0.05, 0.95]), one(1, [0.99, 0.01, 0.07, 0.93])]).unwrap();
    assert_eq!(k.layout(), t.layout());
    assert!(mfm::metrics::dist_between(&k, &t).unwrap() < 1e-15);

    std::fs::write(&cal, r#"{"entries":[{"qubit":0,"p10":0.0,"p01":0.0},{"qubit":1,"p10":0.0,"p01":0.0}]}"#).unwrap();
    assert_eq!(mfm(&["vendor-kernel", p(&cal), "--out", p(&out)]).0, 0);
    assert_eq!(MatrixFile::read(&out).unwrap().matrix().unwrap(), FidelityMatrix::identity(layout(&[0, 1])));

    std::fs::write(&cal, r#"{"entries":[{"qubit":0,"p10":1.5,"p01":0.0}]}"#).unwrap();
    assert_eq!(mfm(&["vendor-kernel", p(&cal), "--out", p(&out)]).0, 2);
}

#[test]
fn simulate_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), &five_qubit_model());
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let (code, stdout, _) = mfm(&["simulate", p(&model), "--experiment", "pairs-with-spectators", "--seed", "7", "--out-dir", p(&out)]);
        assert_eq!(code, 0);
        stdout.lines().map(PathBuf::from).collect::<Vec<_>>()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a.len(), 10);
    let mut records = 0;
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        let f = CountsFile::read(x).unwrap();
        records += f.records().unwrap().len();
        assert_eq!(f.spectator_positions.as_ref().unwrap().len(), 3);
    }
    assert_eq!(records, 40);

    // the environment seed is the default
    let out = dir.path().join("env");
    let status = Command::new(env!("CARGO_BIN_EXE_mfm"))
        .args(["simulate", p(&model), "--experiment", "full", "--out-dir", p(&out)])
        .env("MFM_SEED", "7")
        .status()
        .unwrap();
    assert!(status.success());
    let explicit = dir.path().join("explicit");
    assert_eq!(mfm(&["simulate", p(&model), "--experiment", "full", "--seed", "7", "--out-dir", p(&explicit)]).0, 0);
    assert_eq!(std::fs::read(out.join("full.json")).unwrap(), std::fs::read(explicit.join("full.json")).unwrap());
}

#[test]
fn noiseless_full_simulation_is_concentrated() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), &NoiseModel::noiseless(layout(&[0, 1])));
    assert_eq!(mfm(&["simulate", p(&model), "--experiment", "full", "--shots", "50", "--out-dir", p(dir.path())]).0, 0);
    let f = CountsFile::read(&dir.path().join("full.json")).unwrap();
    assert_eq!(f.records.len(), 4);
    for r in &f.records {
        assert_eq!(r.counts.len(), 1);
        assert_eq!(r.counts[&r.prepared], 50);
    }
}

#[test]
fn end_to_end_build_on_simulated_data() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), &five_qubit_model());
    assert_eq!(mfm(&["simulate", p(&model), "--experiment", "full", "--out-dir", p(dir.path())]).0, 0);
    let out = dir.path().join("k.json");
    let (code, stdout, _) = mfm(&["build-full", p(&dir.path().join("full.json")), "--out", p(&out)]);
    assert_eq!(code, 0);
    let k = MatrixFile::read(&out).unwrap().matrix().unwrap();
    k.check_stochastic(1e-12).unwrap();
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(report["dist_identity"].as_f64().unwrap().is_finite());
}

#[test]
fn cumulant2_on_product_data_equals_tensor_product() {
    let dir = tempfile::tempdir().unwrap();
    let qs = [[0.97, 0.03, 0.04, 0.96], [0.9, 0.1, 0.2, 0.8], [0.95, 0.05, 0.1, 0.9]];
    let ks: Vec<FidelityMatrix> = qs.iter().enumerate().map(|(q, e)| one(q as u32, *e)).collect();
    let mut inputs = vec![];
    for (a, b) in [(0u32, 1u32), (0, 2), (1, 2)] {
        let pair = tensor_product(&[ks[a as usize].clone(), ks[b as usize].clone()]).unwrap();
        let path = dir.path().join(format!("pair{a}{b}.json"));
        write_json(&path, &MatrixFile::from_matrix(&pair)).unwrap();
        inputs.push(path);
    }
    let out = dir.path().join("k.json");
    let mut args = vec!["reconstruct", "--mode", "cumulant2", "--layout", "0,1,2", "--out", p(&out)];
    args.extend(inputs.iter().map(|x| p(x)));
    assert_eq!(mfm(&args).0, 0);
    let rec = MatrixFile::read(&out).unwrap().matrix().unwrap();
    assert!(rec.flags().raw);
    let t = tensor_product(&ks).unwrap();
    assert!(mfm::metrics::dist_between(&rec, &t).unwrap() <= 1e-12);

    // bias correction needs shot counts, which matrix files lack
    args.push("--bias-correct");
    assert_eq!(mfm(&args).0, 2);
}

#[test]
fn cluster_mode_orders_to_layout_and_reports_reference_triple() {
    let dir = tempfile::tempdir().unwrap();
    let model = five_qubit_model();
    let mp = write_model(dir.path(), &model);
    let sim = dir.path().join("sim");
    assert_eq!(mfm(&["simulate", p(&mp), "--experiment", "clusters", "--clusters", "3,1;4;0,2", "--out-dir", p(&sim)]).0, 0);
    let full = dir.path().join("full.json");
    write_json(&full, &MatrixFile::from_matrix(&full_true_mfm(&model).unwrap())).unwrap();
    let out = dir.path().join("k.json");
    let fid = dir.path().join("fid.csv");
    let (code, stdout, err) = mfm(&[
        "reconstruct",
        "--mode",
        "cluster",
        "--layout",
        "0,1,2,3,4",
        "--clusters",
        "3,1;4;0,2",
        "--reference",
        p(&full),
        "--emit-fidelities",
        p(&fid),
        "--project",
        "--out",
        p(&out),
        p(&sim.join("cluster_3_1.json")),
        p(&sim.join("cluster_4.json")),
        p(&sim.join("cluster_0_2.json")),
    ]);
    assert_eq!(code, 0, "{err}");
    let rec = MatrixFile::read(&out).unwrap().matrix().unwrap();
    assert_eq!(rec.layout(), &layout(&[0, 1, 2, 3, 4]));

    // entrywise product over explicit bits, in layout order
    let load = |name: &str| CountsFile::read(&sim.join(name)).unwrap().matrix().unwrap();
    let (k31, k4, k02) = (load("cluster_3_1.json"), load("cluster_4.json"), load("cluster_0_2.json"));
    let bit = |x: usize, q: usize| (x >> (4 - q)) & 1;
    for i in 0..32 {
        for j in 0..32 {
            let v = k31.get(2 * bit(i, 3) + bit(i, 1), 2 * bit(j, 3) + bit(j, 1))
                * k4.get(bit(i, 4), bit(j, 4))
                * k02.get(2 * bit(i, 0) + bit(i, 2), 2 * bit(j, 0) + bit(j, 2));
            assert!((rec.get(i, j) - v).abs() < 1e-12);
        }
    }

    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    for key in ["dist_identity", "dist_reference", "delta_f"] {
        assert!(report["raw"][key].as_f64().unwrap() >= 0.0);
        assert!(report["projected"][key].as_f64().unwrap() >= 0.0);
    }
    let csv = std::fs::read_to_string(&fid).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "state,f_reference,f_reconstructed");
    assert_eq!(csv.lines().count(), 33);
}

#[test]
fn scf_flags_injected_pair_and_writes_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let mp = write_model(dir.path(), &five_qubit_model());
    let (code, stdout, _) = mfm(&["simulate", p(&mp), "--experiment", "pairs-with-spectators", "--seed", "3", "--out-dir", p(dir.path())]);
    assert_eq!(code, 0);
    let inputs: Vec<String> = stdout.lines().map(String::from).collect();
    let report = dir.path().join("scf.json");
    let heat = dir.path().join("heat.csv");
    let mut args = vec!["scf", "--per-state", "--bias-correct", "--out", p(&report), "--heatmap", p(&heat)];
    args.extend(inputs.iter().map(String::as_str));
    assert_eq!(mfm(&args).0, 0);
    let r: ScfReport = read_json(&report).unwrap();
    assert_eq!(r.significant_pairs(), vec![(vec![1], vec![3])]);
    let csv = std::fs::read_to_string(&heat).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "0,1,2,3,4");
    assert_eq!(csv.lines().count(), 6);
    for s in ["00", "01", "10", "11"] {
        assert!(dir.path().join(format!("heat_{s}.csv")).exists());
    }

    // cluster mode
    let mut args = vec!["scf", "--clusters", "1,3;0", "--out", p(&report)];
    args.extend(inputs.iter().map(String::as_str));
    // no input covers {0, 1, 3}
    assert_eq!(mfm(&args).0, 2);
}

#[test]
fn scf_on_product_data_gives_zero_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let model = NoiseModel::quasi_ideal(layout(&[0, 1, 2]), 0.97, 0.96).unwrap();
    let counts = dir.path().join("full.json");
    let recs = full_mfm_experiment(&model, model.layout(), 8192, 1).unwrap();
    write_json(&counts, &CountsFile::from_records(model.layout().clone(), None, &recs)).unwrap();
    let report = dir.path().join("scf.json");
    assert_eq!(mfm(&["scf", p(&counts), "--out", p(&report)]).0, 0);
    let r: ScfReport = read_json(&report).unwrap();
    assert!(r.heatmap.iter().flatten().all(|v| *v == 0.0));
    assert_eq!(r.entries.len(), 3);
}

#[test]
fn mitigation_round_trip_and_singular_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let model = five_qubit_model();
    let k = full_true_mfm(&model).unwrap();
    let kp = dir.path().join("k.json");
    write_json(&kp, &MatrixFile::from_matrix(&k)).unwrap();
    let ideal = Distribution::point_mass(model.layout().clone(), &"10110".parse().unwrap()).unwrap();
    let q = observe(&model, &ideal).unwrap();
    let qp = dir.path().join("q.json");
    write_json(&qp, &DistributionFile::from_distribution(&q)).unwrap();
    let out = dir.path().join("m.json");
    assert_eq!(mfm(&["mitigate", p(&qp), p(&kp), "--out", p(&out)]).0, 0);
    let m = DistributionFile::read(&out).unwrap();
    for (a, b) in m.probs.iter().zip(ideal.probs()) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(m.condition_number.unwrap() >= 1.0);

    let u = dir.path().join("u.json");
    write_json(&u, &MatrixFile::from_matrix(&FidelityMatrix::uniform(model.layout().clone()))).unwrap();
    assert_eq!(mfm(&["mitigate", p(&qp), p(&u), "--out", p(&out)]).0, 3);

    // near-white-noise kernel: warning, still a valid distribution
    let eps = 1e-6;
    let e = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.25 + 3.0 * eps } else { 0.25 - eps });
    let nw = dir.path().join("nw.json");
    write_json(&nw, &MatrixFile::from_matrix(&FidelityMatrix::new(layout(&[0, 1]), e).unwrap())).unwrap();
    let q2 = dir.path().join("q2.json");
    write_json(&q2, &DistributionFile::from_distribution(&Distribution::new(layout(&[0, 1]), vec![0.4, 0.2, 0.2, 0.2]).unwrap())).unwrap();
    let (code, _, err) = mfm(&["mitigate", p(&q2), p(&nw), "--method", "project-solve", "--out", p(&out)]);
    assert_eq!(code, 0);
    assert!(err.contains("condition number"), "{err}");
    DistributionFile::read(&out).unwrap().distribution().unwrap();

    // dimension mismatch
    assert_eq!(mfm(&["mitigate", p(&q2), p(&kp), "--out", p(&out)]).0, 2);
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = five_qubit_model();
    let mf = ModelFile::from_model(&model);
    let path = dir.path().join("m.json");
    write_json(&path, &mf).unwrap();
    let back = ModelFile::read(&path).unwrap();
    assert_eq!(back, mf);
    assert_eq!(back.model().unwrap(), model);

    let k = full_true_mfm(&model).unwrap().project_stochastic();
    let f = MatrixFile::from_matrix(&k);
    write_json(&path, &f).unwrap();
    assert_eq!(MatrixFile::read(&path).unwrap(), f);
    assert_eq!(MatrixFile::read(&path).unwrap().matrix().unwrap(), k);

    let recs = full_mfm_experiment(&model, model.layout(), 64, 2).unwrap();
    let c = CountsFile::from_records(model.layout().clone(), None, &recs);
    write_json(&path, &c).unwrap();
    assert_eq!(CountsFile::read(&path).unwrap(), c);
    assert_eq!(CountsFile::read(&path).unwrap().records().unwrap(), recs);

    let cal = CalibrationFile { schema_version: "1".into(), entries: vec![] };
    write_json(&path, &cal).unwrap();
    assert_eq!(CalibrationFile::read(&path).unwrap(), cal);

    std::fs::write(&path, r#"{"schema_version":"9","layout":[0],"entries":[[1,0],[0,1]]}"#).unwrap();
    assert!(MatrixFile::read(&path).is_err());
}
