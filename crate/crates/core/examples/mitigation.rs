//! Inverse-kernel mitigation of a GHZ-like distribution with exact and
//! sampled kernels.

use mfm::estimate::build_mfm;
use mfm::mitigate::{mitigate_distribution, MitigationMethod};
use mfm::simdevice::{full_mfm_experiment, full_true_mfm, observe};
use mfm::{Distribution, NoiseModel, QubitLayout};

fn main() -> mfm::Result<()> {
    let layout = QubitLayout::contiguous(4)?;
    let model = NoiseModel::quasi_ideal(layout.clone(), 0.97, 0.94)?;
    let mut ideal = vec![0.0; 16];
    ideal[0] = 0.5;
    ideal[15] = 0.5;
    let ideal = Distribution::new(layout.clone(), ideal)?;
    let observed = observe(&model, &ideal)?;
    println!("observed TV from ideal: {:.4}", observed.total_variation(&ideal)?);

    let exact = full_true_mfm(&model)?;
    let sampled = build_mfm(&full_mfm_experiment(&model, &layout, 100_000, 3)?, &layout)?;
    for (name, k) in [("exact", &exact), ("sampled", &sampled)] {
        for method in [MitigationMethod::Solve, MitigationMethod::ProjectSolve] {
            let m = mitigate_distribution(k, &observed, method)?;
            let tv: f64 = 0.5 * m.probs.iter().zip(ideal.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>();
            println!("{name:>7} {method:?}: TV {tv:.2e}, condition {:.3}", m.condition);
        }
    }
    Ok(())
}
