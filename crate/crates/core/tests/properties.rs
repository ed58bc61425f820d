use std::collections::BTreeMap;

use mfm::cumulant::{cumulant1, cumulant2, permute_qubits, reconstruct_order2, scf, scf_by_target_state, tensor_product, CumulantTensor};
use mfm::estimate::{build_mfm, marginalize};
use mfm::metrics::{correlation_heatmap, dist_from_identity, HeatmapMode};
use mfm::simdevice::{full_mfm_experiment, sample_counts, true_mfm};
use mfm::{BitString, FidelityMatrix, NoiseModel, QubitLayout, SpectatorMixing, SubsystemSelection};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn stochastic(layout: QubitLayout, raw: &[f64]) -> FidelityMatrix {
    let dim = layout.dim();
    let mut e = DMatrix::from_fn(dim, dim, |i, j| raw[(i * dim + j) % raw.len()] + 1e-3);
    for mut row in e.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    FidelityMatrix::new(layout, e).unwrap()
}

fn arb_raw() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..1.0, 17..80)
}

/// Random partition of `0..n` into clusters of at most three qubits.
fn arb_model() -> impl Strategy<Value = NoiseModel> {
    (2usize..6, proptest::collection::vec(1usize..4, 6), arb_raw(), any::<u64>()).prop_map(|(n, sizes, raw, shuffle)| {
        let mut ids: Vec<u32> = (0..n as u32).collect();
        let mut s = shuffle;
        for i in (1..ids.len()).rev() {
            ids.swap(i, (s % (i as u64 + 1)) as usize);
            s /= i as u64 + 1;
        }
        let mut clusters = vec![];
        let mut start = 0;
        for (c, &size) in sizes.iter().enumerate() {
            if start >= n {
                break;
            }
            let end = (start + size).min(n);
            let raw_c: Vec<f64> = raw.iter().skip(c).copied().collect();
            clusters.push(stochastic(QubitLayout::new(ids[start..end].to_vec()).unwrap(), &raw_c));
            start = end;
        }
        NoiseModel::new(QubitLayout::contiguous(n).unwrap(), clusters, SpectatorMixing::IdealUniform).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn true_mfm_is_stochastic(model in arb_model(), pick in proptest::collection::vec(any::<bool>(), 6)) {
        let n = model.layout().width();
        let mut positions: Vec<usize> = (0..n).filter(|&p| pick[p]).collect();
        if positions.is_empty() { positions.push(0); }
        positions.reverse();
        let sel = SubsystemSelection::new(model.layout().clone(), positions).unwrap();
        true_mfm(&model, &sel).unwrap().check_stochastic(1e-12).unwrap();
    }

    #[test]
    fn build_mfm_rows_sum_to_one(model in arb_model(), seed in any::<u64>(), shots in 1u64..5000) {
        let k = build_mfm(&full_mfm_experiment(&model, model.layout(), shots, seed).unwrap(), model.layout()).unwrap();
        for row in k.entries().row_iter() {
            prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn marginalize_commutes_with_subselection(raw in arb_raw(), n in 3usize..6) {
        let k = stochastic(QubitLayout::contiguous(n).unwrap(), &raw);
        let s1 = SubsystemSelection::new(k.layout().clone(), vec![n - 1, 0, 1]).unwrap();
        let k1 = marginalize(&k, &s1).unwrap();
        k1.check_stochastic(1e-12).unwrap();
        let s2 = SubsystemSelection::new(k1.layout().clone(), vec![2, 0]).unwrap();
        let twice = marginalize(&k1, &s2).unwrap();
        let once = marginalize(&k, &SubsystemSelection::new(k.layout().clone(), vec![1, n - 1]).unwrap()).unwrap();
        prop_assert_eq!(twice.layout(), once.layout());
        prop_assert!((twice.entries() - once.entries()).amax() <= 1e-12);
    }

    #[test]
    fn marginal_of_product_is_factor(ra in arb_raw(), rb in arb_raw()) {
        let a = stochastic(QubitLayout::new(vec![5, 2]).unwrap(), &ra);
        let b = stochastic(QubitLayout::new(vec![7]).unwrap(), &rb);
        let ab = tensor_product(&[a.clone(), b.clone()]).unwrap();
        let ma = marginalize(&ab, &SubsystemSelection::new(ab.layout().clone(), vec![0, 1]).unwrap()).unwrap();
        let mb = marginalize(&ab, &SubsystemSelection::new(ab.layout().clone(), vec![2]).unwrap()).unwrap();
        prop_assert!((ma.entries() - a.entries()).amax() <= 1e-12);
        prop_assert!((mb.entries() - b.entries()).amax() <= 1e-12);
    }

    #[test]
    fn product_has_zero_cumulant(ra in arb_raw(), rb in arb_raw()) {
        let a = stochastic(QubitLayout::new(vec![0]).unwrap(), &ra);
        let b = stochastic(QubitLayout::new(vec![1]).unwrap(), &rb);
        let ab = tensor_product(&[a.clone(), b.clone()]).unwrap();
        prop_assert!(cumulant2(&ab, &a, &b).unwrap().values().amax() <= 1e-15);
        prop_assert!(scf(&ab, &a, &b, Some(8192)).unwrap().value <= 1e-12);
    }

    #[test]
    fn per_state_norms_add_up(raw in arb_raw(), ra in arb_raw(), rb in arb_raw()) {
        let ab = stochastic(QubitLayout::new(vec![0, 1]).unwrap(), &raw);
        let a = stochastic(QubitLayout::new(vec![0]).unwrap(), &ra);
        let b = stochastic(QubitLayout::new(vec![1]).unwrap(), &rb);
        let s = scf(&ab, &a, &b, None).unwrap();
        let total: f64 = scf_by_target_state(&s.lambda).iter().map(|(_, v)| v * v).sum();
        prop_assert!((total - s.value * s.value).abs() <= 1e-12);
    }

    #[test]
    fn permutation_preserves_distance(raw in arb_raw(), n in 2usize..5, rot in 0usize..4) {
        let k = stochastic(QubitLayout::contiguous(n).unwrap(), &raw);
        let perm: Vec<usize> = (0..n).map(|p| (p + rot) % n).collect();
        let p = permute_qubits(&k, &perm).unwrap();
        p.check_stochastic(1e-12).unwrap();
        prop_assert!((dist_from_identity(&p) - dist_from_identity(&k)).abs() <= 1e-12);
    }

    #[test]
    fn exact_cumulants_reconstruct_stochastic_rows(raws in proptest::collection::vec(arb_raw(), 4), cs in proptest::collection::vec(-0.01f64..0.01, 24)) {
        let n = 4;
        let layout = QubitLayout::contiguous(n).unwrap();
        let singles: Vec<CumulantTensor> = (0..n)
            .map(|q| cumulant1(&stochastic(QubitLayout::new(vec![q as u32]).unwrap(), &raws[q])).unwrap())
            .collect();
        let mut pairs = vec![];
        let mut c = cs.iter();
        for a in 0..n as u32 {
            for b in a + 1..n as u32 {
                let rows: Vec<f64> = (0..4).map(|_| *c.next().unwrap()).collect();
                let v = DMatrix::from_fn(4, 4, |i, j| rows[i] * if (j >> 1) == (j & 1) { 1.0 } else { -1.0 });
                pairs.push(CumulantTensor::new(QubitLayout::new(vec![a, b]).unwrap(), v).unwrap());
            }
        }
        let r = reconstruct_order2(&singles, &pairs, &layout).unwrap();
        prop_assert!(r.is_raw());
        for row in r.entries().row_iter() {
            prop_assert!((row.sum() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn heatmap_symmetric_zero_diagonal(vals in proptest::collection::vec((0.0f64..0.1, 0.0f64..0.1), 10)) {
        let layout = QubitLayout::new(vec![4, 0, 3, 1, 2]).unwrap();
        let q = layout.qubits();
        let mut m = BTreeMap::new();
        let mut k = 0;
        for a in 0..5 {
            for b in a + 1..5 {
                m.insert((q[b], q[a]), vals[k]);
                k += 1;
            }
        }
        for mode in [HeatmapMode::Clamped, HeatmapMode::Absolute] {
            let h = correlation_heatmap(&layout, &m, mode).unwrap();
            prop_assert_eq!(&h, &h.transpose());
            prop_assert!(h.diagonal().iter().all(|v| *v == 0.0));
            prop_assert!(h.iter().all(|v| *v >= 0.0));
        }
    }
}

#[test]
fn sampling_converges_in_total_variation() {
    let model = NoiseModel::quasi_ideal(QubitLayout::contiguous(3).unwrap(), 0.95, 0.92).unwrap();
    let prepared: BitString = "101".parse().unwrap();
    let row = model.true_row(&prepared).unwrap();
    let tv = |shots: u64| -> f64 {
        (0..20)
            .map(|seed| {
                let h = sample_counts(&model, &prepared, shots, seed).unwrap().histogram();
                0.5 * h.iter().zip(&row).map(|(c, p)| (*c as f64 / shots as f64 - p).abs()).sum::<f64>()
            })
            .sum::<f64>()
            / 20.0
    };
    let (coarse, fine) = (tv(10_000), tv(1_000_000));
    assert!(5.0 * fine < coarse, "TV {coarse} at 1e4 vs {fine} at 1e6");
}

#[test]
fn full_experiment_converges_entrywise() {
    let layout = QubitLayout::contiguous(3).unwrap();
    let model = NoiseModel::independent(layout.clone(), &[[0.97, 0.03, 0.05, 0.95], [0.9, 0.1, 0.15, 0.85], [0.93, 0.07, 0.04, 0.96]]).unwrap();
    let exact = mfm::simdevice::full_true_mfm(&model).unwrap();
    let (mut within, mut total) = (0, 0);
    for seed in 0..100 {
        let k = build_mfm(&full_mfm_experiment(&model, &layout, 8192, seed).unwrap(), &layout).unwrap();
        for (x, p) in k.entries().iter().zip(exact.entries().iter()) {
            within += ((x - p).abs() <= 3.0 * (p * (1.0 - p) / 8192.0).sqrt()) as usize;
            total += 1;
        }
    }
    assert!(within as f64 >= 0.99 * total as f64, "{within}/{total}");
}
