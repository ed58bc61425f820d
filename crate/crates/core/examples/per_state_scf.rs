//! Correlation that appears only when both qubits are prepared in 1.

use mfm::cumulant::{scf, scf_by_target_state, tensor_product};
use mfm::estimate::{extract_with_spectators, marginalize};
use mfm::metrics::{sigma_scf_bound_row, uncertainty};
use mfm::simdevice::{correlated_pair, excitation_dependent, spectator_experiment};
use mfm::{FidelityMatrix, NoiseModel, QubitLayout, SpectatorMixing, SubsystemSelection};
use nalgebra::DMatrix;

fn one(q: u32, e: [f64; 4]) -> FidelityMatrix {
    FidelityMatrix::new(QubitLayout::new(vec![q]).unwrap(), DMatrix::from_row_slice(2, 2, &e)).unwrap()
}

fn main() {
    let (a, b) = (one(0, [0.96, 0.04, 0.07, 0.93]), one(1, [0.95, 0.05, 0.06, 0.94]));
    let quiet = tensor_product(&[a.clone(), b.clone()]).unwrap();
    let joint = excitation_dependent(&quiet, &correlated_pair(&a, &b, 0.08).unwrap(), 2).unwrap();
    println!("exact Λ = {:.4}", scf(&joint, &a, &b, None).unwrap().value);

    let layout = QubitLayout::contiguous(3).unwrap();
    let model = NoiseModel::new(layout.clone(), vec![joint, one(2, [0.97, 0.03, 0.03, 0.97])], SpectatorMixing::IdealUniform).unwrap();
    let target = SubsystemSelection::new(layout, vec![0, 1]).unwrap();
    let k = extract_with_spectators(&spectator_experiment(&model, &target, 8192, 4).unwrap(), &target).unwrap();
    let m = |p| marginalize(&k, &SubsystemSelection::new(k.layout().clone(), vec![p]).unwrap()).unwrap();
    let (lambda, rep) = uncertainty(&k, &m(0), &m(1), 8192, true).unwrap();
    println!("sampled Λ = {:.4} ± {:.4}", rep.scf, rep.sigma_scf);
    for (i, (state, v)) in scf_by_target_state(&lambda).into_iter().enumerate() {
        let s = sigma_scf_bound_row(&lambda, i).unwrap();
        println!("  Λ({state}) = {v:.4}  σ = {s:.4}  Λ − σ = {:+.4}", v - s);
    }
}
