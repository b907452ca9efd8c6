//! Synthetic priming setup: three stimulus categories, one configuration
//! specialised to each, plus a distractor configuration that always rejects.
//!
//! Input is three category features and a constant 1. The hidden layer
//! passes the input through and adds bank-specific random rectifier units, so
//! different configurations light up different hidden units. The output is
//! `[reject, score_0, score_1, score_2]` through a logistic sigmoid.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PrimingSchedule, Stimulus, Task};
use crate::control::ControlPolicy;
use crate::error::Result;
use crate::pathway::{FeedForwardNetwork, Matrix, MultiplexedPathway, Nonlinearity};

pub const CATEGORIES: [&str; 3] = ["scene", "letter", "face"];
pub const CONFIGURATIONS: usize = 4;
pub const DISTRACTOR: usize = 3;
const FEATURES: usize = 3;
const INPUT: usize = FEATURES + 1;
const RANDOM_UNITS: usize = 12;
const GAIN: f64 = 20.0;

/// Seed the shipped pathway fixture is generated from.
pub const PATHWAY_SEED: u64 = 2;
/// Seed the shipped task fixture is generated from.
pub const TASK_SEED: u64 = 21;
pub const STIMULI_PER_CATEGORY: usize = 20;
pub const INCONGRUENT_FRACTION: f64 = 0.2;

pub fn priming_pathway(seed: u64) -> Result<MultiplexedPathway> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = INPUT + RANDOM_UNITS;
    let banks = (0..CONFIGURATIONS)
        .map(|r| {
            let mut first = Matrix::zeros(hidden, INPUT);
            for i in 0..INPUT {
                first.as_mut_slice()[i * INPUT + i] = 1.0;
            }
            for v in &mut first.as_mut_slice()[INPUT * INPUT..] {
                *v = rng.random_range(-1.0..1.0);
            }

            let constant = INPUT - 1;
            let mut second = Matrix::zeros(1 + FEATURES, hidden);
            let w = second.as_mut_slice();
            if r == DISTRACTOR {
                w[constant] = GAIN;
            } else {
                // reject unless feature r is above 0.5; score class r by the same margin
                w[r] = -GAIN;
                w[constant] = 0.5 * GAIN;
                w[(1 + r) * hidden + r] = GAIN;
                w[(1 + r) * hidden + constant] = -0.5 * GAIN;
            }
            FeedForwardNetwork::new(
                vec![first, second],
                vec![Nonlinearity::Rectifier, Nonlinearity::LogisticSigmoid],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    MultiplexedPathway::new(banks)
}

/// `per_category` stimuli of each category. A stimulus of category `c` has
/// feature `c` in U(0.7, 1) and the others in U(0, 0.3). With probability
/// `incongruent`, its context tag names a different category.
pub fn priming_task(seed: u64, per_category: usize, incongruent: f64) -> Result<Task> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stimuli = Vec::with_capacity(per_category * FEATURES);
    for i in 0..per_category * FEATURES {
        let class = i % FEATURES;
        let mut input: Vec<f64> = (0..FEATURES)
            .map(|f| {
                if f == class {
                    rng.random_range(0.7..1.0)
                } else {
                    rng.random_range(0.0..0.3)
                }
            })
            .collect();
        input.push(1.0);
        let tag = if rng.random_bool(incongruent) {
            (class + rng.random_range(1..FEATURES)) % FEATURES
        } else {
            class
        };
        stimuli.push(Stimulus {
            input,
            true_class: class,
            category: CATEGORIES[tag].to_string(),
        });
    }
    Task::new(stimuli)
}

/// Unprimed order tries configurations in index order.
pub fn priming_policy() -> Result<ControlPolicy> {
    ControlPolicy::trial((0..CONFIGURATIONS).collect(), 1)
}

/// Each category's own configuration first, the rest in index order.
pub fn priming_schedule() -> Result<PrimingSchedule> {
    let affinity: BTreeMap<String, Vec<usize>> = CATEGORIES
        .iter()
        .enumerate()
        .map(|(c, tag)| {
            let mut order = vec![c];
            order.extend((0..CONFIGURATIONS).filter(|&r| r != c));
            (tag.to_string(), order)
        })
        .collect();
    PrimingSchedule::new(affinity, CONFIGURATIONS)
}

pub fn shipped_pathway() -> Result<MultiplexedPathway> {
    priming_pathway(PATHWAY_SEED)
}

pub fn shipped_task() -> Result<Task> {
    priming_task(TASK_SEED, STIMULI_PER_CATEGORY, INCONGRUENT_FRACTION)
}
