//! Plain reference implementations used as oracles. None of these touch the
//! gate, controller or classifier machinery.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use reconfig::pathway::{FeedForwardNetwork, MultiplexedPathway, Nonlinearity};

pub fn nonlinearity(s: Nonlinearity, z: &[f64]) -> Vec<f64> {
    match s {
        Nonlinearity::Identity => z.to_vec(),
        Nonlinearity::LogisticSigmoid => z.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
        Nonlinearity::Rectifier => z.iter().map(|v| v.max(0.0)).collect(),
        Nonlinearity::EuclideanNormalize => {
            let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n == 0.0 {
                vec![0.0; z.len()]
            } else {
                z.iter().map(|v| v / n).collect()
            }
        }
    }
}

/// Triple loop over layers, rows and columns.
pub fn loop_forward(net: &FeedForwardNetwork, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for (m, s) in net.layers().iter().zip(net.sigma()) {
        let mut z = vec![0.0; m.rows()];
        for (i, zi) in z.iter_mut().enumerate() {
            for (j, aj) in a.iter().enumerate() {
                *zi += m.get(i, j) * aj;
            }
        }
        a = nonlinearity(*s, &z);
    }
    a
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Decision list over standalone networks: output 0 is the reject flag.
pub fn decision_list_oracle(path: &MultiplexedPathway, order: &[usize], x: &[f64]) -> (Option<usize>, usize) {
    for (k, &r) in order.iter().enumerate() {
        let out = loop_forward(&path.banks()[r], x);
        if out[0].clamp(0.0, 1.0) < 0.5 {
            return (Some(argmax(&out[1..])), k + 1);
        }
    }
    (None, order.len())
}

pub fn tree_oracle(path: &MultiplexedPathway, node_map: &BTreeMap<usize, Vec<usize>>, node: usize, x: &[f64]) -> (usize, Vec<usize>) {
    let class = argmax(&loop_forward(&path.banks()[node], x));
    match node_map.get(&node) {
        Some(children) => {
            let (c, mut rest) = tree_oracle(path, node_map, children[class], x);
            rest.insert(0, node);
            (c, rest)
        }
        None => (class, vec![node]),
    }
}

pub fn mean_oracle(path: &MultiplexedPathway, x: &[f64]) -> Vec<f64> {
    let outs: Vec<Vec<f64>> = path.banks().iter().map(|b| loop_forward(b, x)).collect();
    (0..outs[0].len())
        .map(|k| outs.iter().map(|o| o[k]).sum::<f64>() / outs.len() as f64)
        .collect()
}

/// Random tree over `count` configurations where every interior node has
/// `classes` children: start from a lone root and repeatedly expand a random
/// leaf. `count - 1` must be a multiple of `classes`.
pub fn random_tree<R: Rng>(count: usize, classes: usize, rng: &mut R) -> (usize, BTreeMap<usize, Vec<usize>>) {
    assert_eq!((count - 1) % classes, 0);
    let mut ids: Vec<usize> = (0..count).collect();
    ids.shuffle(rng);
    let root = ids[0];
    let mut next = 1;
    let mut leaves = vec![root];
    let mut map = BTreeMap::new();
    while next < count {
        let leaf = leaves.swap_remove(rng.random_range(0..leaves.len()));
        let children: Vec<usize> = ids[next..next + classes].to_vec();
        next += classes;
        leaves.extend(&children);
        map.insert(leaf, children);
    }
    (root, map)
}

pub fn gaussian_density(mean: &[f64], var: &[f64], x: &[f64]) -> f64 {
    mean.iter()
        .zip(var)
        .zip(x)
        .map(|((m, v), xi)| (-(xi - m) * (xi - m) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt())
        .product()
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn crate_dir() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}
