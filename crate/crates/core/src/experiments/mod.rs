//! Desk-scale psychophysics simulation on trial-until-accept control.
//!
//! Time is measured in configurations tried per stimulus. Priming reorders
//! the configurations a stimulus is tried against; a deadline truncates the
//! trial. Each configuration run leaves an activation mask over the pathway's
//! units, which is what the activation-fraction report aggregates.

pub mod fixtures;

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{check_permutation, trial_start, trial_step, ControlPolicy, PolicyKind, Readout, TrialStatus};
use crate::error::{Error, Result};
use crate::pathway::{GateVector, MultiplexedPathway, Nonlinearity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub input: Vec<f64>,
    pub true_class: usize,
    /// Context tag the priming schedule keys on.
    pub category: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    stimuli: Vec<Stimulus>,
    deadline: Option<usize>,
}

impl Task {
    pub fn new(stimuli: Vec<Stimulus>) -> Result<Self> {
        if stimuli.is_empty() {
            return Err(Error::InvalidTask("a task needs at least one stimulus".into()));
        }
        Ok(Task {
            stimuli,
            deadline: None,
        })
    }

    /// Caps the number of configurations tried per stimulus.
    pub fn with_deadline(mut self, deadline: Option<usize>) -> Self {
        self.deadline = deadline;
        self
    }

    pub fn stimuli(&self) -> &[Stimulus] {
        &self.stimuli
    }

    pub fn deadline(&self) -> Option<usize> {
        self.deadline
    }

    pub fn len(&self) -> usize {
        self.stimuli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stimuli.is_empty()
    }
}

/// Per-category configuration orders: a primed stimulus tries the
/// configurations related to its category first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrimingSchedule {
    affinity: BTreeMap<String, Vec<usize>>,
}

impl PrimingSchedule {
    pub fn new(affinity: BTreeMap<String, Vec<usize>>, count: usize) -> Result<Self> {
        let schedule = PrimingSchedule { affinity };
        schedule.validate(count)?;
        Ok(schedule)
    }

    pub fn validate(&self, count: usize) -> Result<()> {
        for (tag, order) in &self.affinity {
            check_permutation(order, count)
                .map_err(|e| Error::InvalidTask(format!("priming order for {tag:?}: {e}")))?;
        }
        Ok(())
    }

    pub fn order_for(&self, category: &str) -> Option<&[usize]> {
        self.affinity.get(category).map(Vec::as_slice)
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.affinity.keys().map(String::as_str)
    }
}

/// Which units of one configuration run counted as active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationMask(pub Vec<bool>);

impl ActivationMask {
    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A unit is active when its post-nonlinearity value exceeds the threshold of
/// its layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationThreshold(pub Vec<f64>);

impl ActivationThreshold {
    /// 0.5 for logistic-sigmoid layers and 0 otherwise.
    pub fn for_layers(sigma: &[Nonlinearity]) -> Self {
        ActivationThreshold(
            sigma
                .iter()
                .map(|s| match s {
                    Nonlinearity::LogisticSigmoid => 0.5,
                    _ => 0.0,
                })
                .collect(),
        )
    }

    pub fn uniform(value: f64, layers: usize) -> Self {
        ActivationThreshold(vec![value; layers])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Standard deviation of Gaussian noise added to every input.
    pub input_noise: f64,
    /// `None` picks [`ActivationThreshold::for_layers`].
    pub activation_threshold: Option<ActivationThreshold>,
    pub readout: Readout,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            input_noise: 0.0,
            activation_threshold: None,
            readout: Readout::RejectThenScores,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub stimulus_index: usize,
    pub true_class: usize,
    pub response: Option<usize>,
    /// Configuration that accepted the stimulus, if any.
    pub accepted_by: Option<usize>,
    pub configurations_tried: usize,
    /// One mask per configuration tried, in order.
    pub masks: Vec<ActivationMask>,
}

impl TrialRecord {
    pub fn is_correct(&self) -> bool {
        self.response == Some(self.true_class)
    }

    /// Fraction of units active in at least one of the first `k` configurations.
    pub fn prefix_union_fraction(&self, k: usize) -> f64 {
        union_fraction(self.masks.iter().take(k))
    }

    pub fn union_fraction(&self) -> f64 {
        union_fraction(self.masks.iter())
    }
}

fn union_fraction<'a>(masks: impl Iterator<Item = &'a ActivationMask>) -> f64 {
    let mut union: Vec<bool> = Vec::new();
    for m in masks {
        if union.is_empty() {
            union = vec![false; m.len()];
        }
        for (u, b) in union.iter_mut().zip(&m.0) {
            *u |= *b;
        }
    }
    if union.is_empty() {
        0.0
    } else {
        union.iter().filter(|b| **b).count() as f64 / union.len() as f64
    }
}

/// SplitMix64 mix of a master seed and a stream index.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_order<'a>(
    policy: &'a ControlPolicy,
    priming: Option<&'a PrimingSchedule>,
    category: &str,
) -> Result<&'a [usize]> {
    if let Some(order) = priming.and_then(|p| p.order_for(category)) {
        return Ok(order);
    }
    policy
        .order()
        .ok_or_else(|| Error::InvalidPolicy("experiments need a trial policy".into()))
}

fn run_one(
    pathway: &MultiplexedPathway,
    policy: &ControlPolicy,
    stimulus_index: usize,
    stimulus: &Stimulus,
    input: &[f64],
    deadline: Option<usize>,
    threshold: &ActivationThreshold,
    readout: Readout,
) -> Result<TrialRecord> {
    let count = pathway.configuration_count();
    let mut record = TrialRecord {
        stimulus_index,
        true_class: stimulus.true_class,
        response: None,
        accepted_by: None,
        configurations_tried: 0,
        masks: Vec::new(),
    };
    if deadline == Some(0) {
        return Ok(record);
    }
    let mut state = trial_start(policy)?;
    loop {
        let gate = GateVector::one_hot(state.active(), count)?;
        let trace = pathway.forward_trace(&gate, input)?;
        record.masks.push(ActivationMask(
            trace
                .post
                .iter()
                .zip(&threshold.0)
                .flat_map(|(layer, t)| layer.iter().map(move |v| v > t))
                .collect(),
        ));
        let out = readout.read(trace.output())?;
        let step = trial_step(&mut state, &out, policy)?;
        record.configurations_tried = record.masks.len();
        match step.status {
            TrialStatus::Accepted { configuration, .. } => {
                record.accepted_by = Some(configuration);
                record.response = out.best_class();
                return Ok(record);
            }
            TrialStatus::NoAnswer { .. } => return Ok(record),
            TrialStatus::Continue if Some(record.configurations_tried) == deadline => return Ok(record),
            TrialStatus::Continue => {}
        }
    }
}

/// Runs every stimulus of the task through trial-until-accept control. With a
/// priming schedule, a stimulus whose category has an entry uses that order
/// instead of the policy's. Noise (if any) is drawn from a per-stimulus seed
/// derived from `seed`, so results do not depend on execution order.
pub fn run_task(
    pathway: &MultiplexedPathway,
    policy: &ControlPolicy,
    task: &Task,
    priming: Option<&PrimingSchedule>,
    seed: u64,
    options: &RunOptions,
) -> Result<Vec<TrialRecord>> {
    if !matches!(policy.kind(), PolicyKind::Trial { .. }) {
        return Err(Error::InvalidPolicy(format!(
            "experiments need a trial policy, got {}",
            policy.kind().name()
        )));
    }
    if policy.configuration_count() != pathway.configuration_count() {
        return Err(Error::GateLength {
            expected: pathway.configuration_count(),
            found: policy.configuration_count(),
        });
    }
    if let Some(p) = priming {
        p.validate(pathway.configuration_count())?;
    }
    if !(options.input_noise.is_finite() && options.input_noise >= 0.0) {
        return Err(Error::InvalidTask(format!("input noise {} is invalid", options.input_noise)));
    }
    let threshold = options
        .activation_threshold
        .clone()
        .unwrap_or_else(|| ActivationThreshold::for_layers(pathway.sigma()));
    if threshold.0.len() != pathway.sigma().len() {
        return Err(Error::InvalidTask(format!(
            "{} activation thresholds for {} layers",
            threshold.0.len(),
            pathway.sigma().len()
        )));
    }

    task.stimuli
        .par_iter()
        .enumerate()
        .map(|(i, stimulus)| {
            let order = trial_order(policy, priming, &stimulus.category)?;
            let local = policy.with_order(order.to_vec())?;
            let input = if options.input_noise > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
                let noise = Normal::new(0.0, options.input_noise)
                    .map_err(|e| Error::InvalidTask(e.to_string()))?;
                stimulus.input.iter().map(|v| v + noise.sample(&mut rng)).collect()
            } else {
                stimulus.input.clone()
            };
            run_one(pathway, &local, i, stimulus, &input, task.deadline, &threshold, options.readout)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivationReport {
    /// Units active at least once anywhere in the task.
    pub union_fraction: f64,
    /// Entry `k - 1`: units active in the first `k` configurations tried of
    /// any trial. Non-decreasing by construction.
    pub cumulative_curve: Vec<f64>,
    /// Mean per-trial union fraction, grouped by configurations tried.
    pub per_count: BTreeMap<usize, f64>,
    /// Mean fraction active within a single configuration run.
    pub mean_single_fraction: f64,
}

pub fn measure_activation_fraction(records: &[TrialRecord]) -> ActivationReport {
    let max_tried = records.iter().map(|r| r.masks.len()).max().unwrap_or(0);
    let cumulative_curve = (1..=max_tried)
        .map(|k| union_fraction(records.iter().flat_map(|r| r.masks.iter().take(k))))
        .collect();

    let mut groups: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.masks.is_empty()) {
        let entry = groups.entry(r.configurations_tried).or_default();
        entry.0 += r.union_fraction();
        entry.1 += 1;
    }
    let per_count = groups.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect();

    let singles: Vec<f64> = records
        .iter()
        .flat_map(|r| &r.masks)
        .filter(|m| !m.is_empty())
        .map(|m| m.active_count() as f64 / m.len() as f64)
        .collect();
    let mean_single_fraction = if singles.is_empty() {
        0.0
    } else {
        singles.iter().sum::<f64>() / singles.len() as f64
    };

    ActivationReport {
        union_fraction: union_fraction(records.iter().flat_map(|r| &r.masks)),
        cumulative_curve,
        per_count,
        mean_single_fraction,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub trials: usize,
    pub accuracy: f64,
    pub mean_configurations_tried: f64,
}

pub fn summarize(records: &[TrialRecord]) -> ConditionSummary {
    let n = records.len().max(1) as f64;
    ConditionSummary {
        trials: records.len(),
        accuracy: records.iter().filter(|r| r.is_correct()).count() as f64 / n,
        mean_configurations_tried: records.iter().map(|r| r.configurations_tried as f64).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeadlinePoint {
    pub deadline: usize,
    pub accuracy: f64,
    pub mean_configurations_tried: f64,
}

/// Accuracy and mean configurations tried with each deadline applied in turn,
/// using the policy's own order.
pub fn deadline_sweep(
    pathway: &MultiplexedPathway,
    policy: &ControlPolicy,
    task: &Task,
    deadlines: &[usize],
    seed: u64,
    options: &RunOptions,
) -> Result<Vec<DeadlinePoint>> {
    if deadlines.contains(&0) {
        return Err(Error::InvalidTask("deadlines must be positive".into()));
    }
    deadlines
        .iter()
        .map(|&deadline| {
            let capped = task.clone().with_deadline(Some(deadline));
            let summary = summarize(&run_task(pathway, policy, &capped, None, seed, options)?);
            Ok(DeadlinePoint {
                deadline,
                accuracy: summary.accuracy,
                mean_configurations_tried: summary.mean_configurations_tried,
            })
        })
        .collect()
}

/// Stimuli whose accepting configuration sits strictly earlier (or no later)
/// in the primed order than in the unprimed one, split by that relation.
/// Used to check priming predictions stimulus by stimulus.
pub fn priming_shift(
    unprimed: &[TrialRecord],
    primed: &[TrialRecord],
    policy: &ControlPolicy,
    priming: &PrimingSchedule,
    task: &Task,
) -> Result<(BTreeSet<usize>, BTreeSet<usize>)> {
    let base = policy
        .order()
        .ok_or_else(|| Error::InvalidPolicy("priming needs a trial policy".into()))?;
    let mut earlier = BTreeSet::new();
    let mut not_later = BTreeSet::new();
    for (u, p) in unprimed.iter().zip(primed) {
        let Some(acc) = u.accepted_by else { continue };
        if p.accepted_by != Some(acc) {
            continue;
        }
        let order = priming.order_for(&task.stimuli[u.stimulus_index].category).unwrap_or(base);
        let pos = |o: &[usize]| o.iter().position(|&r| r == acc).expect("permutation");
        let (before, after) = (pos(base), pos(order));
        if after < before {
            earlier.insert(u.stimulus_index);
        }
        if after <= before {
            not_later.insert(u.stimulus_index);
        }
    }
    Ok((earlier, not_later))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathway::{FeedForwardNetwork, Matrix};

    // Config r accepts iff input[r] > 0.5; scores are (input[0], input[1]).
    fn threshold_pathway() -> MultiplexedPathway {
        let bank = |r: usize| {
            let mut y0 = vec![0.0; 3];
            y0[r] = -40.0;
            y0[2] = 20.0;
            FeedForwardNetwork::new(
                vec![Matrix::from_rows(&[y0, vec![10.0, 0.0, -5.0], vec![0.0, 10.0, -5.0]]).unwrap()],
                vec![Nonlinearity::LogisticSigmoid],
            )
            .unwrap()
        };
        MultiplexedPathway::new(vec![bank(0), bank(1)]).unwrap()
    }

    fn stim(a: f64, b: f64, class: usize, cat: &str) -> Stimulus {
        Stimulus {
            input: vec![a, b, 1.0],
            true_class: class,
            category: cat.into(),
        }
    }

    #[test]
    fn accept_position_sets_the_count() {
        let path = threshold_pathway();
        let policy = ControlPolicy::trial(vec![0, 1], 1).unwrap();
        let task = Task::new(vec![stim(1.0, 0.0, 0, "a"), stim(0.0, 1.0, 1, "b")]).unwrap();
        let recs = run_task(&path, &policy, &task, None, 0, &RunOptions::default()).unwrap();
        assert_eq!(recs[0].configurations_tried, 1);
        assert_eq!(recs[1].configurations_tried, 2);
        assert!(recs.iter().all(TrialRecord::is_correct));
    }

    #[test]
    fn priming_moves_the_accepting_configuration_first() {
        let path = threshold_pathway();
        let policy = ControlPolicy::trial(vec![0, 1], 1).unwrap();
        let priming = PrimingSchedule::new([("b".to_string(), vec![1, 0])].into_iter().collect(), 2).unwrap();
        let task = Task::new(vec![stim(0.0, 1.0, 1, "b"), stim(0.0, 1.0, 1, "b")]).unwrap();
        let recs = run_task(&path, &policy, &task, Some(&priming), 0, &RunOptions::default()).unwrap();
        assert!(recs.iter().all(|r| r.configurations_tried == 1));
    }

    #[test]
    fn priming_orders_must_be_permutations() {
        let bad = PrimingSchedule::new([("x".to_string(), vec![0, 0])].into_iter().collect(), 2);
        assert!(bad.is_err());
    }

    #[test]
    fn deadline_truncates_to_no_answer() {
        let path = threshold_pathway();
        let policy = ControlPolicy::trial(vec![0, 1], 1).unwrap();
        let task = Task::new(vec![stim(1.0, 0.0, 0, "a"), stim(0.0, 1.0, 1, "b")]).unwrap();
        let sweep = deadline_sweep(&path, &policy, &task, &[1, 2, 5], 0, &RunOptions::default()).unwrap();
        assert_eq!(sweep[0].accuracy, 0.5);
        assert_eq!(sweep[1].accuracy, 1.0);
        assert_eq!(sweep[2], DeadlinePoint { deadline: 5, ..sweep[1].clone() });
        assert!(deadline_sweep(&path, &policy, &task, &[0], 0, &RunOptions::default()).is_err());

        let zero = task.clone().with_deadline(Some(0));
        let recs = run_task(&path, &policy, &zero, None, 0, &RunOptions::default()).unwrap();
        assert!(recs.iter().all(|r| r.configurations_tried == 0 && r.response.is_none()));
    }

    #[test]
    fn single_configuration_union_is_its_own_fraction() {
        let rec = TrialRecord {
            stimulus_index: 0,
            true_class: 0,
            response: Some(0),
            accepted_by: Some(0),
            configurations_tried: 1,
            masks: vec![ActivationMask(vec![true, false, false, true])],
        };
        let report = measure_activation_fraction(std::slice::from_ref(&rec));
        assert_eq!(report.union_fraction, 0.5);
        assert_eq!(report.per_count[&1], 0.5);
    }

    #[test]
    fn disjoint_masks_add_up() {
        let rec = TrialRecord {
            stimulus_index: 0,
            true_class: 0,
            response: None,
            accepted_by: None,
            configurations_tried: 2,
            masks: vec![
                ActivationMask(vec![true, false, false, false]),
                ActivationMask(vec![false, true, true, false]),
            ],
        };
        assert_eq!(rec.union_fraction(), 0.25 + 0.5);
        assert_eq!(measure_activation_fraction(&[rec]).cumulative_curve, vec![0.25, 0.75]);
    }

    #[test]
    fn empty_records_give_an_empty_report() {
        let report = measure_activation_fraction(&[]);
        assert!(report.cumulative_curve.is_empty() && report.per_count.is_empty());
        assert_eq!(report.union_fraction, 0.0);
    }

    #[test]
    fn noisy_runs_are_seed_deterministic() {
        let path = threshold_pathway();
        let policy = ControlPolicy::trial(vec![0, 1], 2).unwrap();
        let task = Task::new((0..30).map(|i| stim(0.5, 0.5, i % 2, "a")).collect()).unwrap();
        let opts = RunOptions {
            input_noise: 0.2,
            ..RunOptions::default()
        };
        let a = run_task(&path, &policy, &task, None, 99, &opts).unwrap();
        let b = run_task(&path, &policy, &task, None, 99, &opts).unwrap();
        let c = run_task(&path, &policy, &task, None, 100, &opts).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn non_trial_policy_is_rejected() {
        let path = threshold_pathway();
        let task = Task::new(vec![stim(1.0, 0.0, 0, "a")]).unwrap();
        let policy = ControlPolicy::cycle(vec![0, 1]).unwrap();
        assert!(run_task(&path, &policy, &task, None, 0, &RunOptions::default()).is_err());
    }
}
