//! Build a 3-qubit matrix from simulated counts and compare it with the truth.

use mfm::estimate::build_mfm;
use mfm::metrics::{dist_between, dist_from_identity, white_noise_bound};
use mfm::simdevice::{full_mfm_experiment, full_true_mfm};
use mfm::{NoiseModel, QubitLayout};

fn main() -> mfm::Result<()> {
    let layout = QubitLayout::new(vec![0, 1, 2])?;
    let model = NoiseModel::independent(layout.clone(), &[[0.98, 0.02, 0.05, 0.95], [0.96, 0.04, 0.08, 0.92], [0.97, 0.03, 0.06, 0.94]])?;

    let records = full_mfm_experiment(&model, &layout, 8192, 1)?;
    let k = build_mfm(&records, &layout)?;
    let truth = full_true_mfm(&model)?;

    println!("{} circuits, {} shots each", records.len(), records[0].shots());
    for (state, f) in layout.states().zip(k.fidelities()) {
        println!("  f({state}) = {f:.4}");
    }
    println!("‖K − 1‖_F      = {:.4} (white noise: {:.4})", dist_from_identity(&k), white_noise_bound(3)?);
    println!("‖K − K_true‖_F = {:.4}", dist_between(&k, &truth)?);
    Ok(())
}
