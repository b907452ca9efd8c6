//! Dense feed-forward evaluation, for standalone networks and for a
//! multiplexed pathway whose effective weights are a gate-weighted blend of
//! per-configuration weight banks.
//!
//! A pathway with `R` configurations holds `R` banks of identical
//! architecture. Layer `k` of the pathway computes
//!
//! ```text
//! x[k+1] = sigma_k( (sum_r lambda_r * M[k, r]) x[k] )
//! ```
//!
//! so under a one-hot gate `e_r` it computes exactly what bank `r` computes on
//! its own. There are no bias terms; append a constant `1.0` input unit to
//! emulate one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for the gate simplex constraint.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    Identity,
    LogisticSigmoid,
    Rectifier,
    /// `x / ||x||_2`, and the zero vector for a zero input.
    EuclideanNormalize,
}

impl Nonlinearity {
    pub fn name(self) -> &'static str {
        match self {
            Nonlinearity::Identity => "identity",
            Nonlinearity::LogisticSigmoid => "logistic-sigmoid",
            Nonlinearity::Rectifier => "rectifier",
            Nonlinearity::EuclideanNormalize => "euclidean-normalize",
        }
    }

    pub fn apply(self, pre: &[f64]) -> Vec<f64> {
        match self {
            Nonlinearity::Identity => pre.to_vec(),
            Nonlinearity::LogisticSigmoid => pre.iter().map(|&z| sigmoid(z)).collect(),
            Nonlinearity::Rectifier => pre.iter().map(|&z| if z > 0.0 { z } else { 0.0 }).collect(),
            Nonlinearity::EuclideanNormalize => {
                let norm = l2_norm(pre);
                if norm == 0.0 {
                    vec![0.0; pre.len()]
                } else {
                    pre.iter().map(|&z| z / norm).collect()
                }
            }
        }
    }

    /// Pulls an upstream gradient `grad_out` (with respect to the output) back
    /// through the nonlinearity, given the pre-activation and the output it
    /// produced. The rectifier's subgradient at zero is zero.
    pub fn backward(self, pre: &[f64], out: &[f64], grad_out: &[f64]) -> Vec<f64> {
        match self {
            Nonlinearity::Identity => grad_out.to_vec(),
            Nonlinearity::LogisticSigmoid => out
                .iter()
                .zip(grad_out)
                .map(|(&y, &g)| g * y * (1.0 - y))
                .collect(),
            Nonlinearity::Rectifier => pre
                .iter()
                .zip(grad_out)
                .map(|(&z, &g)| if z > 0.0 { g } else { 0.0 })
                .collect(),
            Nonlinearity::EuclideanNormalize => {
                let norm = l2_norm(pre);
                if norm == 0.0 {
                    return vec![0.0; pre.len()];
                }
                let proj: f64 = out.iter().zip(grad_out).map(|(y, g)| y * g).sum();
                out.iter()
                    .zip(grad_out)
                    .map(|(&y, &g)| (g - y * proj) / norm)
                    .collect()
            }
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dense row-major matrix; rows are output units, columns input units.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidNetwork(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {pos} is {}", data[pos])));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidNetwork("ragged matrix rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-scale..=scale))
            .collect();
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// `M x`, accumulating each row left to right from `0.0`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(0.0, |acc, (m, v)| acc + m * v)
            })
            .collect()
    }

    /// `M^T g`.
    pub fn mul_vec_transposed(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &gi) in g.iter().enumerate() {
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += m * gi;
            }
        }
        out
    }
}

/// Plain feed-forward network: `x <- sigma_k(M_k x)` for each layer in order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNetwork {
    layers: Vec<Matrix>,
    sigma: Vec<Nonlinearity>,
}

/// Activations recorded during a forward pass. `pre[k]` and `post[k]` are the
/// pre- and post-nonlinearity values of layer `k`; `input` is the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.post.last().map_or(&self.input, Vec::as_slice)
    }
}

impl FeedForwardNetwork {
    pub fn new(layers: Vec<Matrix>, sigma: Vec<Nonlinearity>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("a network needs at least one layer".into()));
        }
        if layers.len() != sigma.len() {
            return Err(Error::InvalidNetwork(format!(
                "{} layers but {} nonlinearities",
                layers.len(),
                sigma.len()
            )));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].rows != pair[1].cols {
                return Err(Error::Shape {
                    layer: k + 1,
                    expected: pair[0].rows,
                    found: pair[1].cols,
                });
            }
        }
        for m in &layers {
            if m.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("weight matrix entry".into()));
            }
        }
        Ok(FeedForwardNetwork { layers, sigma })
    }

    /// Random weights uniform in `[-scale, scale]`. `sizes` lists unit counts
    /// from the input layer to the output layer.
    pub fn random<R: Rng + ?Sized>(
        sizes: &[usize],
        sigma: &[Nonlinearity],
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidNetwork("need at least input and output sizes".into()));
        }
        let layers = sizes
            .windows(2)
            .map(|w| Matrix::random(w[1], w[0], scale, rng))
            .collect();
        Self::new(layers, sigma.to_vec())
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Matrix] {
        &mut self.layers
    }

    pub fn sigma(&self) -> &[Nonlinearity] {
        &self.sigma
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows
    }

    /// `(rows, cols)` per layer.
    pub fn shape(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|m| (m.rows, m.cols)).collect()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_input(input, self.input_dim())?;
        let mut x = input.to_vec();
        for (m, s) in self.layers.iter().zip(&self.sigma) {
            x = s.apply(&m.mul_vec(&x));
        }
        Ok(x)
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace> {
        check_input(input, self.input_dim())?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (m, s) in self.layers.iter().zip(&self.sigma) {
            let z = m.mul_vec(post.last().map_or(input, Vec::as_slice));
            post.push(s.apply(&z));
            pre.push(z);
        }
        Ok(ForwardTrace {
            input: input.to_vec(),
            pre,
            post,
        })
    }
}

fn check_input(input: &[f64], expected: usize) -> Result<()> {
    if input.len() != expected {
        return Err(Error::Shape {
            layer: 0,
            expected,
            found: input.len(),
        });
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input activation".into()));
    }
    Ok(())
}

pub fn forward_standalone(net: &FeedForwardNetwork, input: &[f64]) -> Result<Vec<f64>> {
    net.forward(input)
}

/// Weights `lambda` over the `R` configurations of a pathway: nonnegative and
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GateVector {
    lambda: Vec<f64>,
}

impl GateVector {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidGate("empty gate".into()));
        }
        if let Some(v) = lambda.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidGate(format!("entry {v} is negative or not finite")));
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidGate(format!("entries sum to {sum}, not 1")));
        }
        Ok(GateVector { lambda })
    }

    /// Like [`GateVector::new`] but additionally requires every entry to be 0 or 1.
    pub fn new_one_hot(lambda: Vec<f64>) -> Result<Self> {
        if lambda.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidGate(format!("{lambda:?} is not one-hot")));
        }
        Self::new(lambda)
    }

    pub fn one_hot(index: usize, count: usize) -> Result<Self> {
        if index >= count {
            return Err(Error::ConfigurationOutOfRange { index, count });
        }
        let mut lambda = vec![0.0; count];
        lambda[index] = 1.0;
        Ok(GateVector { lambda })
    }

    pub fn uniform(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidGate("empty gate".into()));
        }
        Ok(GateVector {
            lambda: vec![1.0 / count as f64; count],
        })
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    /// The selected configuration when the gate is one-hot.
    pub fn active(&self) -> Option<usize> {
        let mut ones = self.lambda.iter().enumerate().filter(|(_, &v)| v != 0.0);
        match (ones.next(), ones.next()) {
            (Some((i, &v)), None) if v == 1.0 => Some(i),
            _ => None,
        }
    }

    pub fn is_one_hot(&self) -> bool {
        self.active().is_some()
    }
}

pub fn make_one_hot(index: usize, count: usize) -> Result<GateVector> {
    GateVector::one_hot(index, count)
}

/// `R` weight banks of identical architecture sharing one pathway.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplexedPathway {
    banks: Vec<FeedForwardNetwork>,
}

impl MultiplexedPathway {
    pub fn new(banks: Vec<FeedForwardNetwork>) -> Result<Self> {
        let Some(first) = banks.first() else {
            return Err(Error::InvalidNetwork("a pathway needs at least one configuration".into()));
        };
        for (r, bank) in banks.iter().enumerate().skip(1) {
            if bank.shape() != first.shape() || bank.sigma != first.sigma {
                return Err(Error::InvalidNetwork(format!(
                    "bank {r} architecture differs from bank 0"
                )));
            }
        }
        Ok(MultiplexedPathway { banks })
    }

    pub fn random<R: Rng + ?Sized>(
        count: usize,
        sizes: &[usize],
        sigma: &[Nonlinearity],
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let banks = (0..count)
            .map(|_| FeedForwardNetwork::random(sizes, sigma, scale, rng))
            .collect::<Result<Vec<_>>>()?;
        Self::new(banks)
    }

    pub fn configuration_count(&self) -> usize {
        self.banks.len()
    }

    pub fn banks(&self) -> &[FeedForwardNetwork] {
        &self.banks
    }

    pub fn bank(&self, r: usize) -> Result<&FeedForwardNetwork> {
        self.banks.get(r).ok_or(Error::ConfigurationOutOfRange {
            index: r,
            count: self.banks.len(),
        })
    }

    pub fn bank_mut(&mut self, r: usize) -> Result<&mut FeedForwardNetwork> {
        let count = self.banks.len();
        self.banks
            .get_mut(r)
            .ok_or(Error::ConfigurationOutOfRange { index: r, count })
    }

    pub fn input_dim(&self) -> usize {
        self.banks[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.banks[0].output_dim()
    }

    pub fn shape(&self) -> Vec<(usize, usize)> {
        self.banks[0].shape()
    }

    pub fn sigma(&self) -> &[Nonlinearity] {
        self.banks[0].sigma()
    }

    /// Total number of non-input units (hidden plus output).
    pub fn unit_count(&self) -> usize {
        self.shape().iter().map(|(rows, _)| rows).sum()
    }

    fn check_gate(&self, gate: &GateVector) -> Result<()> {
        if gate.len() != self.banks.len() {
            return Err(Error::GateLength {
                expected: self.banks.len(),
                found: gate.len(),
            });
        }
        Ok(())
    }

    /// `sum_r lambda_r M[k, r]`. Terms with `lambda_r == 0` are skipped, so a
    /// one-hot gate reproduces the selected bank's matrix exactly.
    pub fn blended_layer(&self, layer: usize, gate: &GateVector) -> Result<Matrix> {
        self.check_gate(gate)?;
        let template = self.banks[0].layers.get(layer).ok_or_else(|| {
            Error::InvalidNetwork(format!("layer {layer} does not exist"))
        })?;
        let mut blended: Option<Matrix> = None;
        for (bank, &weight) in self.banks.iter().zip(gate.as_slice()) {
            if weight == 0.0 {
                continue;
            }
            let m = &bank.layers[layer];
            match blended.as_mut() {
                None => {
                    blended = Some(Matrix {
                        rows: m.rows,
                        cols: m.cols,
                        data: m.data.iter().map(|v| weight * v).collect(),
                    })
                }
                Some(acc) => {
                    for (a, v) in acc.data.iter_mut().zip(&m.data) {
                        *a += weight * v;
                    }
                }
            }
        }
        Ok(blended.unwrap_or_else(|| Matrix::zeros(template.rows, template.cols)))
    }

    pub fn forward(&self, gate: &GateVector, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(gate, input)?.post.pop().unwrap_or_default())
    }

    pub fn forward_trace(&self, gate: &GateVector, input: &[f64]) -> Result<ForwardTrace> {
        self.check_gate(gate)?;
        check_input(input, self.input_dim())?;
        let sigma = self.sigma();
        let mut pre = Vec::with_capacity(sigma.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(sigma.len());
        for (k, s) in sigma.iter().enumerate() {
            let m = self.blended_layer(k, gate)?;
            let z = m.mul_vec(post.last().map_or(input, Vec::as_slice));
            post.push(s.apply(&z));
            pre.push(z);
        }
        Ok(ForwardTrace {
            input: input.to_vec(),
            pre,
            post,
        })
    }

    /// Serialized form of a single bank, as a one-configuration pathway.
    pub fn bank_to_json(&self, r: usize) -> Result<String> {
        let bank = self.bank(r)?.clone();
        MultiplexedPathway { banks: vec![bank] }.to_json()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PathwayFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PathwayFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

pub fn forward_multiplexed(
    path: &MultiplexedPathway,
    gate: &GateVector,
    input: &[f64],
) -> Result<Vec<f64>> {
    path.forward(gate, input)
}

/// On-disk weight format. Each bank is a list of layers; each layer is its
/// matrix flattened row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathwayFile {
    #[serde(rename = "R")]
    pub configurations: usize,
    pub layers: Vec<[usize; 2]>,
    pub sigma: Vec<Nonlinearity>,
    pub banks: Vec<Vec<Vec<f64>>>,
}

impl From<&MultiplexedPathway> for PathwayFile {
    fn from(path: &MultiplexedPathway) -> Self {
        PathwayFile {
            configurations: path.configuration_count(),
            layers: path.shape().into_iter().map(|(r, c)| [r, c]).collect(),
            sigma: path.sigma().to_vec(),
            banks: path
                .banks
                .iter()
                .map(|b| b.layers.iter().map(|m| m.data.clone()).collect())
                .collect(),
        }
    }
}

impl TryFrom<PathwayFile> for MultiplexedPathway {
    type Error = Error;

    fn try_from(file: PathwayFile) -> Result<Self> {
        if file.banks.len() != file.configurations {
            return Err(Error::InvalidNetwork(format!(
                "R = {} but {} banks present",
                file.configurations,
                file.banks.len()
            )));
        }
        let banks = file
            .banks
            .into_iter()
            .enumerate()
            .map(|(r, layers)| {
                if layers.len() != file.layers.len() {
                    return Err(Error::InvalidNetwork(format!(
                        "bank {r} has {} layers, expected {}",
                        layers.len(),
                        file.layers.len()
                    )));
                }
                let mats = layers
                    .into_iter()
                    .zip(&file.layers)
                    .map(|(data, &[rows, cols])| Matrix::from_row_major(rows, cols, data))
                    .collect::<Result<Vec<_>>>()?;
                FeedForwardNetwork::new(mats, file.sigma.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        MultiplexedPathway::new(banks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Element-by-element reference: explicit loops, no shared helpers.
    fn oracle_forward(layers: &[Vec<Vec<f64>>], sigma: &[Nonlinearity], x: &[f64]) -> Vec<f64> {
        let mut x = x.to_vec();
        for (m, s) in layers.iter().zip(sigma) {
            let mut z = vec![0.0; m.len()];
            for i in 0..m.len() {
                let mut acc = 0.0;
                for j in 0..x.len() {
                    acc += m[i][j] * x[j];
                }
                z[i] = acc;
            }
            x = match s {
                Nonlinearity::LogisticSigmoid => z.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
                Nonlinearity::Identity => z,
                Nonlinearity::Rectifier => z.iter().map(|v| v.max(0.0)).collect(),
                Nonlinearity::EuclideanNormalize => {
                    let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                    z.iter().map(|v| if n == 0.0 { 0.0 } else { v / n }).collect()
                }
            };
        }
        x
    }

    fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
        (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = FeedForwardNetwork::new(
            vec![Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()],
            vec![Nonlinearity::Identity],
        )
        .unwrap();
        assert_eq!(forward_standalone(&net, &[0.3, -0.7]).unwrap(), vec![0.3, -0.7]);
    }

    #[test]
    fn zero_weights_under_sigmoid_give_one_half() {
        let net = FeedForwardNetwork::new(vec![Matrix::zeros(2, 2)], vec![Nonlinearity::LogisticSigmoid])
            .unwrap();
        assert_eq!(net.forward(&[4.0, -9.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn random_two_layer_sigmoid_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sigma = [Nonlinearity::LogisticSigmoid; 2];
        let net = FeedForwardNetwork::random(&[3, 4, 2], &sigma, 1.0, &mut rng).unwrap();
        let x = [0.25, -1.5, 0.8];
        let layers: Vec<_> = net.layers().iter().map(to_rows).collect();
        let expected = oracle_forward(&layers, &sigma, &x);
        assert!(close(&net.forward(&x).unwrap(), &expected, 1e-12));
    }

    #[test]
    fn shape_error_names_the_layer() {
        let err = FeedForwardNetwork::new(
            vec![Matrix::zeros(4, 3), Matrix::zeros(2, 5)],
            vec![Nonlinearity::Identity; 2],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Shape { layer: 1, expected: 4, found: 5 }));

        let net = FeedForwardNetwork::new(vec![Matrix::zeros(2, 3)], vec![Nonlinearity::Identity]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape { layer: 0, .. })));
    }

    #[test]
    fn one_hot_constructor() {
        assert_eq!(make_one_hot(0, 1).unwrap().as_slice(), &[1.0]);
        assert_eq!(make_one_hot(2, 4).unwrap().as_slice(), &[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            make_one_hot(4, 4),
            Err(Error::ConfigurationOutOfRange { index: 4, count: 4 })
        ));
    }

    #[test]
    fn gate_rejects_off_simplex_vectors() {
        assert!(GateVector::new(vec![0.5, 0.6]).is_err());
        assert!(GateVector::new(vec![1.5, -0.5]).is_err());
        assert!(GateVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(GateVector::new(vec![0.25, 0.75]).is_ok());
        assert!(GateVector::new_one_hot(vec![0.25, 0.75]).is_err());
        assert!(GateVector::new_one_hot(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn one_hot_selects_bank_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sigma = [Nonlinearity::Rectifier, Nonlinearity::LogisticSigmoid];
        let path = MultiplexedPathway::random(3, &[5, 6, 3], &sigma, 1.0, &mut rng).unwrap();
        let x = [0.1, -0.2, 0.3, 0.9, -1.1];
        for r in 0..3 {
            let gate = make_one_hot(r, 3).unwrap();
            let multiplexed = forward_multiplexed(&path, &gate, &x).unwrap();
            let standalone = forward_standalone(path.bank(r).unwrap(), &x).unwrap();
            assert_eq!(
                multiplexed.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                standalone.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn half_half_gate_is_average_under_identity() {
        let m0 = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let m1 = Matrix::from_rows(&[vec![-1.0, 0.5], vec![0.0, 2.0]]).unwrap();
        let path = MultiplexedPathway::new(vec![
            FeedForwardNetwork::new(vec![m0.clone()], vec![Nonlinearity::Identity]).unwrap(),
            FeedForwardNetwork::new(vec![m1.clone()], vec![Nonlinearity::Identity]).unwrap(),
        ])
        .unwrap();
        let x = [0.7, -0.3];
        let got = path.forward(&GateVector::new(vec![0.5, 0.5]).unwrap(), &x).unwrap();
        let a = m0.mul_vec(&x);
        let b = m1.mul_vec(&x);
        let expected: Vec<f64> = a.iter().zip(&b).map(|(p, q)| 0.5 * p + 0.5 * q).collect();
        assert!(close(&got, &expected, 1e-12));
    }

    #[test]
    fn blended_gate_matches_blended_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sigma = [Nonlinearity::LogisticSigmoid, Nonlinearity::EuclideanNormalize];
        let path = MultiplexedPathway::random(4, &[3, 5, 2], &sigma, 1.0, &mut rng).unwrap();
        let lambda = [0.1, 0.2, 0.3, 0.4];
        let gate = GateVector::new(lambda.to_vec()).unwrap();
        let x = [0.4, -0.6, 1.2];

        let blended: Vec<Vec<Vec<f64>>> = (0..2)
            .map(|k| {
                let (rows, cols) = path.shape()[k];
                let mut out = vec![vec![0.0; cols]; rows];
                for (r, l) in lambda.iter().enumerate() {
                    let m = &path.bank(r).unwrap().layers()[k];
                    for i in 0..rows {
                        for j in 0..cols {
                            out[i][j] += l * m.get(i, j);
                        }
                    }
                }
                out
            })
            .collect();
        let expected = oracle_forward(&blended, &sigma, &x);
        assert!(close(&path.forward(&gate, &x).unwrap(), &expected, 1e-12));
    }

    #[test]
    fn gate_length_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let path = MultiplexedPathway::random(3, &[2, 2], &[Nonlinearity::Identity], 1.0, &mut rng).unwrap();
        let err = path.forward(&make_one_hot(0, 2).unwrap(), &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::GateLength { expected: 3, found: 2 }));
    }

    #[test]
    fn mismatched_bank_architectures_are_rejected() {
        let a = FeedForwardNetwork::new(vec![Matrix::zeros(2, 2)], vec![Nonlinearity::Identity]).unwrap();
        let b = FeedForwardNetwork::new(vec![Matrix::zeros(2, 2)], vec![Nonlinearity::Rectifier]).unwrap();
        assert!(MultiplexedPathway::new(vec![a, b]).is_err());
    }

    #[test]
    fn normalize_maps_zero_to_zero() {
        assert_eq!(Nonlinearity::EuclideanNormalize.apply(&[0.0, 0.0]), vec![0.0, 0.0]);
        let y = Nonlinearity::EuclideanNormalize.apply(&[3.0, 4.0]);
        assert_eq!(y, vec![0.6, 0.8]);
    }

    #[test]
    fn sigma_names_round_trip_through_json() {
        for s in [
            Nonlinearity::Identity,
            Nonlinearity::LogisticSigmoid,
            Nonlinearity::Rectifier,
            Nonlinearity::EuclideanNormalize,
        ] {
            let text = serde_json::to_string(&s).unwrap();
            assert_eq!(text, format!("\"{}\"", s.name()));
        }
    }

    fn arb_pathway() -> impl Strategy<Value = (MultiplexedPathway, Vec<f64>)> {
        (1usize..5, prop::collection::vec(1usize..6, 2..5), any::<u64>()).prop_map(|(r, sizes, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = vec![Nonlinearity::LogisticSigmoid; sizes.len() - 1];
            let path = MultiplexedPathway::random(r, &sizes, &sigma, 3.0, &mut rng).unwrap();
            let x = (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
            (path, x)
        })
    }

    proptest! {
        #[test]
        fn weight_json_round_trip_is_bit_exact((path, _) in arb_pathway()) {
            let text = path.to_json().unwrap();
            let back = MultiplexedPathway::from_json(&text).unwrap();
            for (a, b) in path.banks().iter().zip(back.banks()) {
                for (ma, mb) in a.layers().iter().zip(b.layers()) {
                    let ba: Vec<u64> = ma.as_slice().iter().map(|v| v.to_bits()).collect();
                    let bb: Vec<u64> = mb.as_slice().iter().map(|v| v.to_bits()).collect();
                    prop_assert_eq!(ba, bb);
                }
            }
            prop_assert_eq!(back.to_json().unwrap(), text);
        }

        #[test]
        fn sigmoid_outputs_stay_in_open_unit_interval(z in prop::collection::vec(-30.0f64..30.0, 1..8)) {
            for y in Nonlinearity::LogisticSigmoid.apply(&z) {
                prop_assert!(y > 0.0 && y < 1.0);
            }
        }

        #[test]
        fn normalize_output_has_unit_norm(z in prop::collection::vec(-5.0f64..5.0, 1..8)) {
            prop_assume!(z.iter().any(|v| *v != 0.0));
            let y = Nonlinearity::EuclideanNormalize.apply(&z);
            let n: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((n - 1.0).abs() < 1e-12);
        }

        #[test]
        fn forward_is_linear_in_gate_under_identity(
            seed in any::<u64>(),
            raw in prop::collection::vec(0.0f64..1.0, 3),
        ) {
            prop_assume!(raw.iter().sum::<f64>() > 1e-3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let path = MultiplexedPathway::random(3, &[4, 3], &[Nonlinearity::Identity], 1.0, &mut rng).unwrap();
            let total: f64 = raw.iter().sum();
            let mut lambda: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let drift: f64 = 1.0 - lambda.iter().sum::<f64>();
            lambda[0] += drift;
            let gate = GateVector::new(lambda.clone()).unwrap();
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = path.forward(&gate, &x).unwrap();
            let mut expected = vec![0.0; 3];
            for (r, l) in lambda.iter().enumerate() {
                let y = path.bank(r).unwrap().forward(&x).unwrap();
                for (e, v) in expected.iter_mut().zip(y) {
                    *e += l * v;
                }
            }
            prop_assert!(close(&got, &expected, 1e-12));
        }

        #[test]
        fn forward_is_deterministic((path, x) in arb_pathway()) {
            let gate = GateVector::uniform(path.configuration_count()).unwrap();
            let a = path.forward(&gate, &x).unwrap();
            let b = path.forward(&gate, &x).unwrap();
            prop_assert_eq!(
                a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }
}
