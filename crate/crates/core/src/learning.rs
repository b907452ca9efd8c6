//! Per-configuration training. Under a one-hot gate a multiplexed pathway is
//! just its selected bank, so training configuration `r` runs backpropagation
//! on bank `r` alone and leaves every other bank untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathway::{FeedForwardNetwork, Matrix, MultiplexedPathway, Nonlinearity};

/// Halvings tried before an epoch is skipped under the descent guard.
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    /// `0.5 * ||y - t||^2`, averaged over the batch.
    SquaredError,
    /// Binary cross-entropy on a logistic-sigmoid output layer, computed from
    /// the pre-activations; averaged over the batch.
    CrossEntropyWithSigmoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
}

impl TrainingBatch {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::InvalidTraining(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.is_empty() {
            return Err(Error::InvalidTraining("empty batch".into()));
        }
        if inputs.iter().chain(&targets).flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training data".into()));
        }
        Ok(TrainingBatch { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    fn check(&self, net: &FeedForwardNetwork, loss: Loss) -> Result<()> {
        for (x, t) in self.inputs.iter().zip(&self.targets) {
            if x.len() != net.input_dim() {
                return Err(Error::Shape {
                    layer: 0,
                    expected: net.input_dim(),
                    found: x.len(),
                });
            }
            if t.len() != net.output_dim() {
                return Err(Error::InvalidTraining(format!(
                    "target has {} entries, network produces {}",
                    t.len(),
                    net.output_dim()
                )));
            }
        }
        if loss == Loss::CrossEntropyWithSigmoid {
            if net.sigma().last() != Some(&Nonlinearity::LogisticSigmoid) {
                return Err(Error::InvalidTraining(
                    "cross-entropy-with-sigmoid needs a logistic-sigmoid output layer".into(),
                ));
            }
            if self.targets.iter().flatten().any(|t| !(0.0..=1.0).contains(t)) {
                return Err(Error::InvalidTraining("cross-entropy targets must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub learning_rate: f64,
    pub epochs: usize,
    pub loss: Loss,
    /// Undo and retry with half the learning rate whenever an epoch would
    /// increase the loss.
    #[serde(default)]
    pub halve_on_increase: bool,
}

impl TrainSpec {
    pub fn new(learning_rate: f64, epochs: usize, loss: Loss) -> Self {
        TrainSpec {
            learning_rate,
            epochs,
            loss,
            halve_on_increase: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::InvalidTraining(format!(
                "learning rate {} must be a nonnegative number",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_loss: f64,
    /// Loss after each epoch's update.
    pub epoch_losses: Vec<f64>,
    pub final_learning_rate: f64,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(self.initial_loss)
    }

    /// `(epoch, loss)` rows with epoch 0 holding the initial loss.
    pub fn curve(&self) -> Vec<(usize, f64)> {
        std::iter::once(self.initial_loss)
            .chain(self.epoch_losses.iter().copied())
            .enumerate()
            .collect()
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sample_loss(pre: &[f64], out: &[f64], target: &[f64], loss: Loss) -> f64 {
    match loss {
        Loss::SquaredError => 0.5 * out.iter().zip(target).map(|(y, t)| (y - t) * (y - t)).sum::<f64>(),
        Loss::CrossEntropyWithSigmoid => pre.iter().zip(target).map(|(z, t)| softplus(*z) - t * z).sum(),
    }
}

/// Mean loss of `net` over the batch.
pub fn batch_loss(net: &FeedForwardNetwork, batch: &TrainingBatch, loss: Loss) -> Result<f64> {
    batch.check(net, loss)?;
    let mut total = 0.0;
    for (x, t) in batch.inputs.iter().zip(&batch.targets) {
        let trace = net.forward_trace(x)?;
        let last = trace.pre.len() - 1;
        total += sample_loss(&trace.pre[last], &trace.post[last], t, loss);
    }
    Ok(total / batch.len() as f64)
}

/// Mean loss and its gradient with respect to every weight, by backpropagation.
pub fn loss_and_gradient(
    net: &FeedForwardNetwork,
    batch: &TrainingBatch,
    loss: Loss,
) -> Result<(f64, Vec<Matrix>)> {
    batch.check(net, loss)?;
    let layers = net.layers();
    let sigma = net.sigma();
    let mut grads: Vec<Matrix> = layers.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
    let mut total = 0.0;
    for (x, t) in batch.inputs.iter().zip(&batch.targets) {
        let trace = net.forward_trace(x)?;
        let last = layers.len() - 1;
        total += sample_loss(&trace.pre[last], &trace.post[last], t, loss);

        let mut delta: Vec<f64> = match loss {
            Loss::SquaredError => {
                let dy: Vec<f64> = trace.post[last].iter().zip(t).map(|(y, t)| y - t).collect();
                sigma[last].backward(&trace.pre[last], &trace.post[last], &dy)
            }
            Loss::CrossEntropyWithSigmoid => trace.post[last].iter().zip(t).map(|(y, t)| y - t).collect(),
        };
        for k in (0..layers.len()).rev() {
            let input = if k == 0 { &trace.input } else { &trace.post[k - 1] };
            let g = grads[k].as_mut_slice();
            let cols = input.len();
            for (i, d) in delta.iter().enumerate() {
                for (j, v) in input.iter().enumerate() {
                    g[i * cols + j] += d * v;
                }
            }
            if k > 0 {
                let upstream = layers[k].mul_vec_transposed(&delta);
                delta = sigma[k - 1].backward(&trace.pre[k - 1], &trace.post[k - 1], &upstream);
            }
        }
    }
    let n = batch.len() as f64;
    for g in &mut grads {
        g.as_mut_slice().iter_mut().for_each(|v| *v /= n);
    }
    Ok((total / n, grads))
}

fn apply_step(net: &mut FeedForwardNetwork, grads: &[Matrix], rate: f64) {
    for (m, g) in net.layers_mut().iter_mut().zip(grads) {
        for (w, d) in m.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *w -= rate * d;
        }
    }
}

/// Full-batch gradient descent on configuration `r` alone. The pathway is
/// only modified when training completes; on divergence it is left as it was.
pub fn train_configuration(
    path: &mut MultiplexedPathway,
    r: usize,
    batch: &TrainingBatch,
    spec: &TrainSpec,
) -> Result<TrainReport> {
    spec.validate()?;
    let mut net = path.bank(r)?.clone();
    let mut loss = batch_loss(&net, batch, spec.loss)?;
    if !loss.is_finite() {
        return Err(Error::Divergence { epoch: 0, loss });
    }
    let initial_loss = loss;
    let mut rate = spec.learning_rate;
    let mut epoch_losses = Vec::with_capacity(spec.epochs);
    for epoch in 1..=spec.epochs {
        let (_, grads) = loss_and_gradient(&net, batch, spec.loss)?;
        let mut candidate = net.clone();
        apply_step(&mut candidate, &grads, rate);
        let mut next = batch_loss(&candidate, batch, spec.loss)?;
        if spec.halve_on_increase {
            let mut halvings = 0;
            while !(next <= loss) && halvings < MAX_HALVINGS {
                rate /= 2.0;
                halvings += 1;
                candidate = net.clone();
                apply_step(&mut candidate, &grads, rate);
                next = batch_loss(&candidate, batch, spec.loss)?;
            }
            if !(next <= loss) {
                candidate = net.clone();
                next = loss;
            }
        }
        if !next.is_finite() {
            return Err(Error::Divergence { epoch, loss: next });
        }
        net = candidate;
        loss = next;
        epoch_losses.push(loss);
    }
    *path.bank_mut(r)? = net;
    Ok(TrainReport {
        initial_loss,
        epoch_losses,
        final_learning_rate: rate,
    })
}

/// Largest relative disagreement between the backpropagated gradient and
/// central differences with step `h`, over all weights:
/// `|g_a - g_n| / max(|g_a|, |g_n|, 1e-8)`.
pub fn gradient_check(net: &FeedForwardNetwork, batch: &TrainingBatch, loss: Loss, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidTraining(format!("finite-difference step {h} must be positive")));
    }
    let (_, analytic) = loss_and_gradient(net, batch, loss)?;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (k, g) in analytic.iter().enumerate() {
        for idx in 0..g.as_slice().len() {
            let original = probe.layers()[k].as_slice()[idx];
            probe.layers_mut()[k].as_mut_slice()[idx] = original + h;
            let plus = batch_loss(&probe, batch, loss)?;
            probe.layers_mut()[k].as_mut_slice()[idx] = original - h;
            let minus = batch_loss(&probe, batch, loss)?;
            probe.layers_mut()[k].as_mut_slice()[idx] = original;
            let numeric = (plus - minus) / (2.0 * h);
            let exact = g.as_slice()[idx];
            let err = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_batch(rng: &mut ChaCha8Rng, n: usize, din: usize, dout: usize) -> TrainingBatch {
        let inputs = (0..n).map(|_| (0..din).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let targets = (0..n).map(|_| (0..dout).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        TrainingBatch::new(inputs, targets).unwrap()
    }

    #[test]
    fn one_linear_step_matches_closed_form() {
        let m = Matrix::from_rows(&[vec![0.5, -0.25], vec![1.0, 2.0]]).unwrap();
        let net = FeedForwardNetwork::new(vec![m.clone()], vec![Nonlinearity::Identity]).unwrap();
        let mut path = MultiplexedPathway::new(vec![net]).unwrap();
        let x = vec![0.3, -0.8];
        let t = vec![1.0, -1.0];
        let batch = TrainingBatch::new(vec![x.clone()], vec![t.clone()]).unwrap();
        let lr = 0.1;
        train_configuration(&mut path, 0, &batch, &TrainSpec::new(lr, 1, Loss::SquaredError)).unwrap();

        let y = m.mul_vec(&x);
        let trained = &path.bank(0).unwrap().layers()[0];
        for i in 0..2 {
            for j in 0..2 {
                let expected = m.get(i, j) - lr * (y[i] - t[i]) * x[j];
                assert!((trained.get(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_learning_rate_leaves_weights_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut path =
            MultiplexedPathway::random(2, &[3, 2], &[Nonlinearity::LogisticSigmoid], 1.0, &mut rng).unwrap();
        let before = path.clone();
        let batch = random_batch(&mut rng, 5, 3, 2);
        let report = train_configuration(&mut path, 1, &batch, &TrainSpec::new(0.0, 4, Loss::SquaredError)).unwrap();
        assert_eq!(path, before);
        assert!(report.epoch_losses.iter().all(|l| *l == report.initial_loss));
    }

    #[test]
    fn analytic_gradient_matches_finite_differences_on_two_layer_sigmoid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = FeedForwardNetwork::random(&[3, 4, 2], &[Nonlinearity::LogisticSigmoid; 2], 1.0, &mut rng).unwrap();
        let batch = random_batch(&mut rng, 6, 3, 2);
        for loss in [Loss::SquaredError, Loss::CrossEntropyWithSigmoid] {
            assert!(gradient_check(&net, &batch, loss, 1e-5).unwrap() < 1e-5);
        }
    }

    #[test]
    fn linear_squared_error_gradient_is_nearly_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = FeedForwardNetwork::random(&[4, 3], &[Nonlinearity::Identity], 1.0, &mut rng).unwrap();
        let batch = random_batch(&mut rng, 5, 4, 3);
        assert!(gradient_check(&net, &batch, Loss::SquaredError, 1e-5).unwrap() < 1e-9);
    }

    #[test]
    fn zero_weight_sigmoid_net_checks_cleanly() {
        let net = FeedForwardNetwork::new(
            vec![Matrix::zeros(3, 2), Matrix::zeros(2, 3)],
            vec![Nonlinearity::LogisticSigmoid; 2],
        )
        .unwrap();
        let batch = TrainingBatch::new(vec![vec![0.5, -1.0]], vec![vec![1.0, 0.0]]).unwrap();
        let err = gradient_check(&net, &batch, Loss::SquaredError, 1e-5).unwrap();
        assert!(err.is_finite() && err < 1e-5);
    }

    #[test]
    fn random_three_layer_net_with_normalize_and_rectifier() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sigma = [Nonlinearity::Rectifier, Nonlinearity::EuclideanNormalize, Nonlinearity::LogisticSigmoid];
        let net = FeedForwardNetwork::random(&[4, 5, 4, 3], &sigma, 1.0, &mut rng).unwrap();
        let batch = random_batch(&mut rng, 4, 4, 3);
        assert!(gradient_check(&net, &batch, Loss::SquaredError, 1e-5).unwrap() < 1e-5);
    }

    #[test]
    fn training_touches_only_the_selected_bank() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut path =
            MultiplexedPathway::random(3, &[2, 3, 1], &[Nonlinearity::LogisticSigmoid; 2], 1.0, &mut rng).unwrap();
        let before: Vec<String> = (0..3).map(|r| path.bank_to_json(r).unwrap()).collect();
        let batch = random_batch(&mut rng, 4, 2, 1);
        train_configuration(&mut path, 1, &batch, &TrainSpec::new(0.5, 20, Loss::CrossEntropyWithSigmoid)).unwrap();
        assert_eq!(path.bank_to_json(0).unwrap(), before[0]);
        assert_ne!(path.bank_to_json(1).unwrap(), before[1]);
        assert_eq!(path.bank_to_json(2).unwrap(), before[2]);
    }

    #[test]
    fn halving_guard_makes_loss_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut path =
            MultiplexedPathway::random(1, &[3, 6, 2], &[Nonlinearity::Rectifier, Nonlinearity::Identity], 1.0, &mut rng)
                .unwrap();
        let batch = random_batch(&mut rng, 8, 3, 2);
        let spec = TrainSpec {
            halve_on_increase: true,
            ..TrainSpec::new(5.0, 50, Loss::SquaredError)
        };
        let report = train_configuration(&mut path, 0, &batch, &spec).unwrap();
        let curve = report.curve();
        assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(report.final_learning_rate < 5.0);
    }

    #[test]
    fn divergence_names_the_epoch_and_keeps_weights() {
        let m = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let mut path =
            MultiplexedPathway::new(vec![FeedForwardNetwork::new(vec![m], vec![Nonlinearity::Identity]).unwrap()])
                .unwrap();
        let before = path.clone();
        let batch = TrainingBatch::new(vec![vec![10.0]], vec![vec![0.0]]).unwrap();
        let err = train_configuration(&mut path, 0, &batch, &TrainSpec::new(1e3, 500, Loss::SquaredError)).unwrap_err();
        assert!(matches!(err, Error::Divergence { epoch, .. } if epoch > 1));
        assert_eq!(path, before);
    }

    #[test]
    fn cross_entropy_requires_sigmoid_output() {
        let net = FeedForwardNetwork::new(vec![Matrix::zeros(1, 1)], vec![Nonlinearity::Identity]).unwrap();
        let batch = TrainingBatch::new(vec![vec![1.0]], vec![vec![1.0]]).unwrap();
        assert!(batch_loss(&net, &batch, Loss::CrossEntropyWithSigmoid).is_err());
    }

    #[test]
    fn mismatched_batch_is_rejected() {
        assert!(TrainingBatch::new(vec![vec![1.0]], vec![]).is_err());
        let net = FeedForwardNetwork::new(vec![Matrix::zeros(1, 2)], vec![Nonlinearity::Identity]).unwrap();
        let batch = TrainingBatch::new(vec![vec![1.0]], vec![vec![1.0]]).unwrap();
        assert!(matches!(batch_loss(&net, &batch, Loss::SquaredError), Err(Error::Shape { .. })));
    }
}
