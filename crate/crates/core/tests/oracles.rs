mod common;

use std::collections::VecDeque;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use reconfig::classifiers::{
    skip_low_evidence, style_classify, Averaging, DiagonalGaussian, SequentialCompoundClassifier,
    SlidingWindowEstimator, StyleComponent, StyleMode, StyleModel, TreeRouting,
};
use reconfig::pathway::{MultiplexedPathway, Nonlinearity};

fn random_inputs(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

#[test]
fn decision_list_matches_loop_oracle_on_200_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let path = MultiplexedPathway::random(5, &[4, 6, 3], &[Nonlinearity::Rectifier, Nonlinearity::LogisticSigmoid], 1.5, &mut rng).unwrap();
    let order = vec![3, 0, 4, 1, 2];
    let clf = SequentialCompoundClassifier::decision_list(path.clone(), order.clone(), 1).unwrap();
    let mut counts = [0usize; 6];
    for x in random_inputs(&mut rng, 200, 4) {
        let got = clf.classify_decision_list(&x).unwrap();
        let want = decision_list_oracle(&path, &order, &x);
        assert_eq!((got.class, got.configurations_tried), want);
        counts[want.1] += 1;
    }
    // the fixture exercises several list positions, not just the first
    assert!(counts.iter().filter(|c| **c > 0).count() >= 3, "{counts:?}");
}

#[test]
fn random_seven_node_tree_matches_recursive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let path = MultiplexedPathway::random(7, &[3, 5, 2], &[Nonlinearity::Rectifier, Nonlinearity::Identity], 1.0, &mut rng).unwrap();
    let (root, node_map) = random_tree(7, 2, &mut rng);
    let clf = SequentialCompoundClassifier::decision_tree(path.clone(), TreeRouting::new(root, node_map.clone()).unwrap()).unwrap();
    for x in random_inputs(&mut rng, 100, 3) {
        let got = clf.classify_decision_tree(&x).unwrap();
        let (class, trail) = tree_oracle(&path, &node_map, root, &x);
        assert_eq!((got.class, got.path), (class, trail));
    }
}

#[test]
fn uniform_ensemble_matches_mean_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let path = MultiplexedPathway::random(4, &[3, 4, 3], &[Nonlinearity::Rectifier, Nonlinearity::LogisticSigmoid], 1.0, &mut rng).unwrap();
    let clf = SequentialCompoundClassifier::ensemble(path.clone(), vec![0, 1, 2, 3]).unwrap();
    for x in random_inputs(&mut rng, 50, 3) {
        let got = clf.classify_ensemble(&x, Averaging::Uniform).unwrap();
        for (g, w) in got.iter().zip(mean_oracle(&path, &x)) {
            assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0), "{g} vs {w}");
        }
    }
}

const STREAM_MEANS: [[[f64; 2]; 2]; 2] = [[[0.0, 0.0], [2.0, 0.0]], [[0.0, 3.0], [2.0, 3.0]]];
const STREAM_PRIOR: [f64; 2] = [0.4, 0.6];

fn stream_model() -> StyleModel {
    let components = STREAM_MEANS
        .iter()
        .map(|classes| StyleComponent::Gaussian {
            class_prior: STREAM_PRIOR.to_vec(),
            classes: classes
                .iter()
                .map(|m| DiagonalGaussian::new(m.to_vec(), vec![1.0, 1.0]).unwrap())
                .collect(),
        })
        .collect();
    StyleModel::with_uniform_prior(components, StyleMode::Bayesian).unwrap()
}

/// 20 samples from component 1's density.
fn stream() -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 1.0).unwrap();
    (0..20)
        .map(|_| {
            let c = usize::from(rng.random_bool(STREAM_PRIOR[1]));
            STREAM_MEANS[1][c].iter().map(|m| m + noise.sample(&mut rng)).collect()
        })
        .collect()
}

/// Mixture weights from the last `window` log-densities and the resulting
/// class posterior, all computed directly from the Gaussian formulas.
fn monolithic(samples: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
    let mut buffer: VecDeque<[f64; 2]> = VecDeque::new();
    samples
        .iter()
        .map(|x| {
            let joint: Vec<[f64; 2]> = STREAM_MEANS
                .iter()
                .map(|classes| {
                    [
                        STREAM_PRIOR[0] * gaussian_density(&classes[0], &[1.0, 1.0], x),
                        STREAM_PRIOR[1] * gaussian_density(&classes[1], &[1.0, 1.0], x),
                    ]
                })
                .collect();
            let density: Vec<f64> = joint.iter().map(|j| j[0] + j[1]).collect();
            buffer.push_back([density[0].ln(), density[1].ln()]);
            if buffer.len() > window {
                buffer.pop_front();
            }
            let sums = [buffer.iter().map(|b| b[0]).sum::<f64>(), buffer.iter().map(|b| b[1]).sum::<f64>()];
            let top = sums[0].max(sums[1]);
            let w = [(sums[0] - top).exp(), (sums[1] - top).exp()];
            let lambda = [w[0] / (w[0] + w[1]), w[1] / (w[0] + w[1])];
            (0..2)
                .map(|c| (0..2).map(|i| lambda[i] * joint[i][c] / density[i]).sum())
                .collect()
        })
        .collect()
}

#[test]
fn style_stream_matches_monolithic_oracle() {
    let model = stream_model();
    let samples = stream();
    let want = monolithic(&samples, 10);
    let mut est = SlidingWindowEstimator::new(10, 2).unwrap();
    for (x, w) in samples.iter().zip(&want) {
        let got = style_classify(&model, &mut est, x).unwrap();
        for (g, o) in got.iter().zip(w) {
            assert!(relative_error(*g, *o) < 1e-9, "{got:?} vs {w:?}");
        }
        assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn skipping_with_margin_20_barely_moves_the_final_posterior() {
    let model = stream_model();
    let samples = stream();
    let mut plain = SlidingWindowEstimator::new(10, 2).unwrap();
    let mut skipping = SlidingWindowEstimator::new(10, 2).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for x in &samples {
        a = style_classify(&model, &mut plain, x).unwrap();
        b = style_classify(&model, &mut skipping, x).unwrap();
        skip_low_evidence(&mut skipping, 20.0);
    }
    // the margin must actually have skipped something for this to mean anything
    assert_eq!(skipping.active_components().len(), 1);
    let tv = 0.5 * a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum::<f64>();
    assert!(tv < 1e-6, "total variation {tv}");
}
