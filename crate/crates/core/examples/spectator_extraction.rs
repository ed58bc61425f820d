//! Pair matrices extracted from spectator runs versus direct pair measurement,
//! on a device where one target qubit shares a cluster with a spectator.

use mfm::estimate::{build_mfm, extract_with_spectators};
use mfm::metrics::dist_between;
use mfm::simdevice::{full_mfm_experiment, spectator_experiment, true_mfm};
use mfm::{FidelityMatrix, NoiseModel, QubitLayout, SpectatorMixing, SubsystemSelection};
use nalgebra::DMatrix;

fn main() -> mfm::Result<()> {
    // qubit 1's readout degrades when qubit 2 is excited
    let mut e = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.94 } else { 0.02 });
    e[(1, 1)] = 0.86;
    e[(1, 3)] = 0.10;
    e[(3, 3)] = 0.84;
    e[(3, 1)] = 0.12;
    let cluster = FidelityMatrix::new(QubitLayout::new(vec![1, 2])?, e)?;
    let layout = QubitLayout::contiguous(3)?;
    let q0 = FidelityMatrix::new(QubitLayout::new(vec![0])?, DMatrix::from_row_slice(2, 2, &[0.97, 0.03, 0.05, 0.95]))?;
    let model = NoiseModel::new(layout.clone(), vec![q0, cluster], SpectatorMixing::IdealUniform)?;

    let target = SubsystemSelection::of_qubits(&layout, &[0, 1])?;
    let averaged = true_mfm(&model, &target)?;
    let spect = extract_with_spectators(&spectator_experiment(&model, &target, 8192, 5)?, &target)?;
    let direct = build_mfm(&full_mfm_experiment(&model, &target.layout(), 8192, 5)?, &target.layout())?;

    println!("pair (0, 1), qubit 2 as spectator");
    println!("  spectator-extracted vs averaged truth: {:.4}", dist_between(&spect, &averaged)?);
    println!("  direct (spectator idle) vs averaged:   {:.4}", dist_between(&direct, &averaged)?);
    Ok(())
}
