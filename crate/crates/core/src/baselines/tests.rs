use proptest::prelude::*;

use super::*;
use crate::numerics::Rng;

fn rec(sequences: Vec<Vec<u32>>, numeric: Vec<f64>, targets: Vec<usize>) -> EncodedRecord {
    EncodedRecord { sequences, numeric, targets }
}

fn random_data(n: usize, sizes: &[usize], p: usize, seed: u64) -> Vec<EncodedRecord> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| {
            let seqs = sizes
                .iter()
                .map(|&s| {
                    let len = rng.below(8) as usize;
                    (0..len).map(|_| rng.below(s as u64) as u32).collect()
                })
                .collect();
            let numeric = (0..p).map(|_| rng.normal()).collect();
            rec(seqs, numeric, vec![rng.below(2) as usize])
        })
        .collect()
}

#[test]
fn distribution_examples() {
    assert_eq!(sequence_to_distribution(&[1, 1, 2], 4), vec![0.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]);
    assert_eq!(sequence_to_distribution(&[], 4), vec![0.0; 4]);
    assert_eq!(sequence_to_distribution(&[0], 2), vec![1.0, 0.0]);
}

proptest! {
    #[test]
    fn distribution_invariances(seq in prop::collection::vec(0u32..12, 1..30), k in 1usize..5, seed in any::<u64>()) {
        let d = sequence_to_distribution(&seq, 12);
        prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut shuffled = seq.clone();
        Rng::new(seed).shuffle(&mut shuffled);
        prop_assert_eq!(&sequence_to_distribution(&shuffled, 12), &d);
        let repeated: Vec<u32> = seq.iter().flat_map(|&t| std::iter::repeat_n(t, k)).collect();
        prop_assert_eq!(&sequence_to_distribution(&repeated, 12), &d);
    }
}

#[test]
fn majority_accuracy_is_modal_share() {
    let mut data = Vec::new();
    for i in 0..10_000 {
        data.push(rec(vec![], vec![], vec![usize::from(i >= 6801)]));
    }
    let m = fit_majority(&data, &[2]).unwrap();
    assert_eq!(m.predict(), &[0]);
    let hits = data.iter().filter(|r| r.targets[0] == m.predict()[0]).count();
    assert_eq!(hits as f64 / data.len() as f64, 0.6801);
}

#[test]
fn majority_on_uniform_and_ties() {
    let uniform: Vec<_> = (0..400).map(|i| rec(vec![], vec![], vec![i % 4])).collect();
    let m = fit_majority(&uniform, &[4]).unwrap();
    assert_eq!(m.predict(), &[0]);
    let hits = uniform.iter().filter(|r| r.targets[0] == 0).count();
    assert_eq!(hits as f64 / 400.0, 0.25);
    let tie: Vec<_> = [0, 1, 1, 2, 2].iter().map(|&y| rec(vec![], vec![], vec![y])).collect();
    assert_eq!(fit_majority(&tie, &[3]).unwrap().predict(), &[1]);
    assert!(fit_majority(&[], &[2]).is_err());
    assert!(fit_majority(&tie, &[2]).is_err());
}

#[test]
fn stacking_layout() {
    let train = random_data(20, &[4, 6], 3, 1);
    let p = FeaturePipeline::fit_stacking(&train, &[4, 6], 3).unwrap();
    assert_eq!(p.width(), 13);
    assert_eq!(p.block_widths(), vec![4, 6, 3]);
    assert_eq!(p.pca_dims(), None);

    let empty = rec(vec![vec![], vec![]], vec![1.0, 2.0, 3.0], vec![0]);
    let f = p.features(&empty).unwrap();
    assert!(f[..10].iter().all(|&v| v == 0.0));
    let FeaturePipeline::Stacking { normalizer, .. } = &p else { unreachable!() };
    assert_eq!(&f[10..], normalizer.apply(&[1.0, 2.0, 3.0]).as_slice());

    let r = rec(vec![vec![1, 1], vec![5]], vec![0.0; 3], vec![0]);
    let f = p.features(&r).unwrap();
    assert_eq!(&f[..4], &[0.0, 1.0, 0.0, 0.0]);
    assert_eq!(&f[4..10], &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);

    // Swapping the spaces swaps the blocks.
    let swapped_train: Vec<_> = train
        .iter()
        .map(|r| rec(vec![r.sequences[1].clone(), r.sequences[0].clone()], r.numeric.clone(), r.targets.clone()))
        .collect();
    let q = FeaturePipeline::fit_stacking(&swapped_train, &[6, 4], 3).unwrap();
    let g = q.features(&rec(vec![vec![5], vec![1, 1]], vec![0.0; 3], vec![0])).unwrap();
    assert_eq!(&g[..6], &f[4..10]);
    assert_eq!(&g[6..10], &f[..4]);
    assert_eq!(&g[10..], &f[10..]);

    assert!(p.features(&rec(vec![vec![4], vec![]], vec![0.0; 3], vec![0])).is_err());
    assert!(p.features(&rec(vec![vec![]], vec![0.0; 3], vec![0])).is_err());
}

#[test]
fn pca_clamps_and_centres() {
    let train = random_data(30, &[5, 80], 2, 2);
    let p = FeaturePipeline::fit_pca(&train, &[5, 80], 2, PCA_COMPONENTS).unwrap();
    assert_eq!(p.pca_dims(), Some(vec![5, 29]));
    assert_eq!(p.width(), 5 + 29 + 2);

    let FeaturePipeline::Pca { pcas, .. } = &p else { unreachable!() };
    let mut z = vec![0.0; pcas[1].n_components()];
    pcas[1].project_row(&pcas[1].mean, &mut z);
    assert!(z.iter().all(|&v| v == 0.0));
}

#[test]
fn pca_features_capture_top_variance() {
    let train = random_data(100, &[30], 0, 3);
    let d = distribution_matrix(&train, 0, 30).unwrap();
    let k = 6;
    let p = FeaturePipeline::fit_pca(&train, &[30], 0, k).unwrap();
    let FeaturePipeline::Pca { pcas, .. } = &p else { unreachable!() };
    let z = p.matrix(&train).unwrap();
    let recon = pcas[0].reconstruct(&z).unwrap();

    let mean = &pcas[0].mean;
    let (mut total, mut residual) = (0.0, 0.0);
    for r in 0..d.rows() {
        for (c, mu) in mean.iter().enumerate() {
            total += (d.get(r, c) - mu).powi(2);
            residual += (d.get(r, c) - recon.get(r, c)).powi(2);
        }
    }
    let captured = 1.0 - residual / total;
    let ev = &pcas[0].explained_variance;
    let top: f64 = ev.iter().sum::<f64>() * (d.rows() - 1) as f64 / total;
    assert!(captured >= top - 1e-9, "{captured} < {top}");
    assert!((captured - top).abs() < 1e-9);
}

#[test]
fn pipelines_are_deterministic() {
    let train = random_data(40, &[6, 9], 2, 4);
    let a = FeaturePipeline::fit_pca(&train, &[6, 9], 2, 3).unwrap();
    let b = FeaturePipeline::fit_pca(&train, &[6, 9], 2, 3).unwrap();
    assert_eq!(a, b);
    let cfg = LogRegConfig { max_epochs: 20, ..LogRegConfig::default() };
    let m1 = LogRegModel::fit(a, &train, &train[..10], &[2], &cfg).unwrap();
    let m2 = LogRegModel::fit(b, &train, &train[..10], &[2], &cfg).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(m1.predict(&train[0]).unwrap().len(), 1);
}

#[test]
fn logreg_model_learns_token_signal() {
    // Target is whether token 1 dominates the first space.
    let mut rng = Rng::new(8);
    let data: Vec<_> = (0..400)
        .map(|_| {
            let y = rng.below(2) as usize;
            let hot = if y == 1 { 1 } else { 2 };
            let seq: Vec<u32> = (0..6).map(|_| if rng.next_f64() < 0.7 { hot } else { 3 }).collect();
            rec(vec![seq], vec![rng.normal()], vec![y])
        })
        .collect();
    let p = FeaturePipeline::fit_stacking(&data[..300], &[4], 1).unwrap();
    let m = LogRegModel::fit(p, &data[..300], &data[300..350], &[2], &LogRegConfig::default()).unwrap();
    let hits = data[350..].iter().filter(|r| m.predict(r).unwrap()[0] == r.targets[0]).count();
    assert!(hits >= 48, "{hits}/50");
}
