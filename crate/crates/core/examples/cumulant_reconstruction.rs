//! Second- and third-order cumulant reconstruction of a 4-qubit matrix with a
//! correlated pair, against direct measurement.

use mfm::cumulant::{cumulant1, cumulant2, cumulant3, reconstruct_order2, reconstruct_order3};
use mfm::estimate::{build_mfm, marginalize};
use mfm::metrics::{dist_between, MetricReport};
use mfm::simdevice::{correlated_pair, full_mfm_experiment, full_true_mfm, true_mfm};
use mfm::{FidelityMatrix, NoiseModel, QubitLayout, SpectatorMixing, SubsystemSelection};
use nalgebra::DMatrix;

fn one(q: u32, e: [f64; 4]) -> mfm::Result<FidelityMatrix> {
    FidelityMatrix::new(QubitLayout::new(vec![q])?, DMatrix::from_row_slice(2, 2, &e))
}

fn main() -> mfm::Result<()> {
    let layout = QubitLayout::contiguous(4)?;
    let pair = correlated_pair(&one(1, [0.95, 0.05, 0.07, 0.93])?, &one(2, [0.96, 0.04, 0.06, 0.94])?, 0.06)?;
    let model = NoiseModel::new(
        layout.clone(),
        vec![one(0, [0.97, 0.03, 0.05, 0.95])?, pair, one(3, [0.98, 0.02, 0.04, 0.96])?],
        SpectatorMixing::IdealUniform,
    )?;
    let truth = full_true_mfm(&model)?;

    // every subsystem matrix is taken from one simulated 4-qubit dataset
    let measured = build_mfm(&full_mfm_experiment(&model, &layout, 8192, 2)?, &layout)?;
    let sub = |qs: &[u32]| marginalize(&measured, &SubsystemSelection::of_qubits(&layout, qs)?);

    let singles_k: Vec<_> = (0..4).map(|q| sub(&[q])).collect::<mfm::Result<_>>()?;
    let singles: Vec<_> = singles_k.iter().map(cumulant1).collect::<mfm::Result<_>>()?;
    let mut pairs = vec![];
    let mut pair_k = vec![];
    let mut triples = vec![];
    for a in 0..4u32 {
        for b in a + 1..4 {
            let k = sub(&[a, b])?;
            pairs.push(cumulant2(&k, &singles_k[a as usize], &singles_k[b as usize])?.bias_corrected_with(8192)?);
            pair_k.push(k);
        }
    }
    for a in 0..4u32 {
        for b in a + 1..4 {
            for c in b + 1..4 {
                let ks = [&singles_k[a as usize], &singles_k[b as usize], &singles_k[c as usize]].map(|k| k.clone());
                let ps: Vec<_> = pair_k.iter().filter(|k| k.layout().qubits().iter().all(|q| [a, b, c].contains(q))).cloned().collect();
                triples.push(cumulant3(&sub(&[a, b, c])?, &ks, &ps)?.bias_corrected_with(8192)?);
            }
        }
    }

    let r2 = reconstruct_order2(&singles, &pairs, &layout)?;
    let r3 = reconstruct_order3(&singles, &pairs, &triples, &layout)?;
    let product = mfm::cumulant::tensor_product(&singles_k)?;

    println!("distance to the true matrix:");
    println!("  singles only  {:.5}", dist_between(&product, &truth)?);
    println!("  order 2       {:.5}", dist_between(&r2, &truth)?);
    println!("  order 3       {:.5}", dist_between(&r3, &truth)?);
    println!("  measured      {:.5}", dist_between(&measured, &truth)?);

    let report = MetricReport::new(&r2.project_stochastic(), Some(&true_mfm(&model, &SubsystemSelection::new(layout.clone(), vec![0, 1, 2, 3])?)?))?;
    println!("projected order-2 report: {}", serde_json::to_string(&report).unwrap());
    Ok(())
}
