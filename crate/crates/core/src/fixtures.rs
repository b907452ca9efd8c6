//! Generators for the data files shipped under `configs/`. Everything is
//! derived from fixed seeds, so the shipped files can be rebuilt (and checked
//! for drift) at any time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::classifiers::{DiagonalGaussian, SampleGroup, StyleComponent, StyleMode, StyleModel};
use crate::data;
use crate::error::Result;
use crate::experiments::fixtures::{shipped_pathway, shipped_task};
use crate::learning::TrainingBatch;
use crate::pathway::{MultiplexedPathway, Nonlinearity};

pub const XOR_SEED: u64 = 3;
pub const STYLE_SEED: u64 = 5;
pub const STYLE_COUNT: usize = 3;
const STYLE_VAR: f64 = 0.5;

/// `[x_1, x_2, 1]` with target `x_1 xor x_2`.
pub fn xor_batch() -> Result<TrainingBatch> {
    let corners = [(0.0, 0.0, 0.0), (0.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, 0.0)];
    TrainingBatch::new(
        corners.iter().map(|&(a, b, _)| vec![a, b, 1.0]).collect(),
        corners.iter().map(|&(_, _, t)| vec![t]).collect(),
    )
}

/// Two configurations, 3 inputs, 8 rectifier units, one sigmoid output.
pub fn xor_pathway() -> Result<MultiplexedPathway> {
    let mut rng = ChaCha8Rng::seed_from_u64(XOR_SEED);
    MultiplexedPathway::random(
        2,
        &[3, 8, 1],
        &[Nonlinearity::Rectifier, Nonlinearity::LogisticSigmoid],
        1.0,
        &mut rng,
    )
}

/// Mean of class `c` under style `s`: styles shift along the first axis and
/// odd styles swap which class sits high on the second axis.
pub fn style_mean(s: usize, c: usize) -> [f64; 2] {
    let high = (c + s) % 2 == 1;
    [1.5 * s as f64, if high { 2.0 } else { 0.0 }]
}

pub fn style_model() -> Result<StyleModel> {
    let components = (0..STYLE_COUNT)
        .map(|s| {
            let classes = (0..2)
                .map(|c| DiagonalGaussian::new(style_mean(s, c).to_vec(), vec![STYLE_VAR; 2]))
                .collect::<Result<Vec<_>>>()?;
            Ok(StyleComponent::Gaussian {
                class_prior: vec![0.5, 0.5],
                classes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    StyleModel::with_uniform_prior(components, StyleMode::Bayesian)
}

/// Groups of samples that share one style drawn at random; classes vary
/// within a group.
pub fn style_groups(seed: u64, groups: usize, per_group: usize) -> Result<Vec<SampleGroup>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, STYLE_VAR.sqrt()).expect("positive variance");
    (0..groups)
        .map(|g| {
            let s = rng.random_range(0..STYLE_COUNT);
            let mut labels = Vec::with_capacity(per_group);
            let samples = (0..per_group)
                .map(|_| {
                    let c = rng.random_range(0..2);
                    labels.push(c);
                    style_mean(s, c).iter().map(|m| m + noise.sample(&mut rng)).collect()
                })
                .collect();
            let mut group = SampleGroup::new(format!("g{g}-style{s}"), samples)?;
            group.labels = labels;
            Ok(group)
        })
        .collect()
}

fn csv(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// File name and contents of every generated file under `configs/`.
pub fn shipped_files() -> Result<Vec<(&'static str, Vec<u8>)>> {
    let task = shipped_task()?;
    let labeled: Vec<Vec<String>> = task
        .stimuli()
        .iter()
        .map(|s| {
            let mut row: Vec<String> = s.input.iter().map(f64::to_string).collect();
            row.push(s.true_class.to_string());
            row
        })
        .collect();
    let dim = task.stimuli()[0].input.len();
    let header: Vec<String> = (1..=dim).map(|k| format!("feature_{k}")).chain(["label".to_string()]).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    Ok(vec![
        ("priming_pathway.json", shipped_pathway()?.to_json()?.into_bytes()),
        ("priming_task.csv", csv(|b| data::write_task(b, task.stimuli()))?),
        ("priming_labeled.csv", csv(|b| data::write_rows(b, &header, &labeled))?),
        ("xor_pathway.json", xor_pathway()?.to_json()?.into_bytes()),
        ("xor_train.csv", csv(|b| data::write_training(b, &xor_batch()?))?),
        ("style_model.json", style_model()?.to_json()?.into_bytes()),
        ("style_groups.csv", csv(|b| data::write_groups(b, &style_groups(STYLE_SEED, 12, 10)?))?),
    ])
}
