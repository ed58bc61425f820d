//! Error of measured versus single-qubit-product matrices on identical
//! independent qubits, at fixed shots, as the qubit count grows.

use mfm::cumulant::tensor_product;
use mfm::estimate::build_mfm;
use mfm::metrics::dist_between;
use mfm::simdevice::{full_mfm_experiment, full_true_mfm};
use mfm::{NoiseModel, QubitLayout};

fn main() -> mfm::Result<()> {
    let shots = 8192;
    println!("{:>2} {:>10} {:>10}", "n", "singles", "measured");
    for n in 2..=8 {
        let layout = QubitLayout::contiguous(n)?;
        let model = NoiseModel::quasi_ideal(layout.clone(), 0.94, 0.94)?;
        let ideal = full_true_mfm(&model)?;
        let (mut s, mut m) = (0.0, 0.0);
        let seeds = 5;
        for seed in 0..seeds {
            let ones = layout
                .qubits()
                .iter()
                .map(|&q| {
                    let l = QubitLayout::new(vec![q])?;
                    build_mfm(&full_mfm_experiment(&model, &l, shots, seed)?, &l)
                })
                .collect::<mfm::Result<Vec<_>>>()?;
            s += dist_between(&tensor_product(&ones)?, &ideal)?;
            m += dist_between(&build_mfm(&full_mfm_experiment(&model, &layout, shots, seed)?, &layout)?, &ideal)?;
        }
        println!("{n:>2} {:>10.4} {:>10.4}", s / seeds as f64, m / seeds as f64);
    }
    Ok(())
}
