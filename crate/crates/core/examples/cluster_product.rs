//! Cluster-product reconstruction when clusters are listed out of layout order.

use mfm::cumulant::{cluster_product, tensor_product};
use mfm::estimate::build_mfm;
use mfm::metrics::{delta_f, dist_between, dist_from_identity};
use mfm::simdevice::{correlated_pair, excitation_dependent, full_mfm_experiment, full_true_mfm};
use mfm::{FidelityMatrix, NoiseModel, QubitLayout, SpectatorMixing, SubsystemSelection};
use nalgebra::DMatrix;

fn one(q: u32, e: [f64; 4]) -> mfm::Result<FidelityMatrix> {
    FidelityMatrix::new(QubitLayout::new(vec![q])?, DMatrix::from_row_slice(2, 2, &e))
}

fn main() -> mfm::Result<()> {
    // a correlated block {4, 1} and independent qubits 0, 2, 3
    let layout = QubitLayout::contiguous(5)?;
    let q4 = one(4, [0.95, 0.05, 0.08, 0.92])?;
    let q1 = one(1, [0.96, 0.04, 0.07, 0.93])?;
    let block = excitation_dependent(&tensor_product(&[q4.clone(), q1.clone()])?, &correlated_pair(&q4, &q1, 0.08)?, 1)?;
    let model = NoiseModel::new(
        layout.clone(),
        vec![block, one(0, [0.97, 0.03, 0.05, 0.95])?, one(2, [0.98, 0.02, 0.03, 0.97])?, one(3, [0.96, 0.04, 0.05, 0.95])?],
        SpectatorMixing::IdealUniform,
    )?;
    let truth = full_true_mfm(&model)?;

    let measure = |qs: &[u32], seed| -> mfm::Result<FidelityMatrix> {
        let l = QubitLayout::new(qs.to_vec())?;
        build_mfm(&full_mfm_experiment(&model, &l, 8192, seed)?, &l)
    };
    let groupings: [&[&[u32]]; 3] = [&[&[4, 1], &[0], &[2], &[3]], &[&[0, 1], &[2, 3], &[4]], &[&[0], &[1], &[2], &[3], &[4]]];
    for (g, clusters) in groupings.iter().enumerate() {
        let pieces = clusters
            .iter()
            .map(|qs| Ok((measure(qs, g as u64)?, SubsystemSelection::of_qubits(&layout, qs)?)))
            .collect::<mfm::Result<Vec<_>>>()?;
        let k = cluster_product(&pieces, &layout)?;
        let circuits: usize = clusters.iter().map(|c| 1 << c.len()).sum();
        println!(
            "{clusters:?}: {circuits} circuits, ‖K̃ − 1‖ = {:.4}, ‖K̃ − K‖ = {:.4}, Δf = {:.4}",
            dist_from_identity(&k),
            dist_between(&k, &truth)?,
            delta_f(&k, &truth)?
        );
    }
    Ok(())
}
