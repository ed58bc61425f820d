//! Pairwise correlation heatmap from spectator runs, written as CSV through
//! the same code path as `mfm scf`.

use mfm::cli::files::{write_json, CountsFile};
use mfm::cli::{cmd_scf, ScfOptions, ScfReport};
use mfm::simdevice::{correlated_pair, spectator_experiment};
use mfm::{FidelityMatrix, NoiseModel, QubitLayout, SpectatorMixing, SubsystemSelection};
use nalgebra::DMatrix;

fn one(q: u32, e: [f64; 4]) -> FidelityMatrix {
    FidelityMatrix::new(QubitLayout::new(vec![q]).unwrap(), DMatrix::from_row_slice(2, 2, &e)).unwrap()
}

fn main() {
    let layout = QubitLayout::contiguous(5).unwrap();
    let e = [0.97, 0.03, 0.04, 0.96];
    let pair = correlated_pair(&one(0, e), &one(3, e), 0.05).unwrap();
    let model = NoiseModel::new(layout.clone(), vec![pair, one(1, e), one(2, e), one(4, e)], SpectatorMixing::IdealUniform).unwrap();

    let dir = std::env::temp_dir().join("mfm-scf-heatmap");
    let mut inputs = vec![];
    for a in 0..5 {
        for b in a + 1..5 {
            let target = SubsystemSelection::new(layout.clone(), vec![a, b]).unwrap();
            let records = spectator_experiment(&model, &target, 8192, 11).unwrap();
            let path = dir.join(format!("pair_{a}_{b}.json"));
            write_json(&path, &CountsFile::from_records(layout.clone(), Some(target.complement()), &records)).unwrap();
            inputs.push(path);
        }
    }
    let opts = ScfOptions { layout: None, clusters: None, per_state: false, absolute: false, bias_correct: true, heatmap: Some(dir.join("heatmap.csv")) };
    cmd_scf(&inputs, &opts, &dir.join("scf.json")).unwrap();
    let report: ScfReport = mfm::cli::files::read_json(&dir.join("scf.json")).unwrap();

    for e in &report.entries {
        println!("{:?}-{:?}: Λ = {:.4}, σ = {:.4}{}", e.a, e.b, e.scf, e.sigma_scf, if e.significant { "  significant" } else { "" });
    }
    println!("\n{}", std::fs::read_to_string(dir.join("heatmap.csv")).unwrap());
}
