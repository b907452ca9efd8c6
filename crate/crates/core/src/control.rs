//! Control automata that decide which configuration a pathway runs next.
//!
//! Five policy kinds are supported:
//!
//! * `Fixed` picks one configuration for the whole task.
//! * `Hierarchical` runs a separate selector network on the input and gates
//!   the pathway with the argmax of its output.
//! * `Cycle` steps through a fixed order of configurations.
//! * `Trial` tries configurations in order until one accepts the input, then
//!   starts over; `max_sweeps` bounds the number of passes.
//! * `LambdaRecurrent` feeds only the gate vector back: the next gate is a pure
//!   function of the previous gate and the current configuration's output.
//!
//! The unary state labels `l_j` live in [`ControlState`] rather than in the
//! pathway outputs.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::pathway::{FeedForwardNetwork, GateVector};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// A configuration's output: reject flag `y_0` (0 = answered, 1 = could not
/// classify), class scores `y_1..y_n` and an optional log-density `log p_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentOutput {
    reject: f64,
    scores: Vec<f64>,
    log_density: Option<f64>,
}

impl ComponentOutput {
    pub fn new(reject: f64, scores: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&reject) {
            return Err(Error::InvalidOutput(format!("reject flag {reject} outside [0, 1]")));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidOutput("non-finite class score".into()));
        }
        Ok(ComponentOutput {
            reject,
            scores,
            log_density: None,
        })
    }

    pub fn accepted(scores: Vec<f64>) -> Result<Self> {
        Self::new(0.0, scores)
    }

    pub fn rejected(scores: Vec<f64>) -> Result<Self> {
        Self::new(1.0, scores)
    }

    /// `log_density` may be `-inf` (zero density) but not NaN or `+inf`.
    pub fn with_log_density(mut self, log_density: f64) -> Result<Self> {
        if log_density.is_nan() || log_density == f64::INFINITY {
            return Err(Error::InvalidOutput(format!("log-density {log_density}")));
        }
        self.log_density = Some(log_density);
        Ok(self)
    }

    pub fn reject(&self) -> f64 {
        self.reject
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn log_density(&self) -> Option<f64> {
        self.log_density
    }

    pub fn is_accepted(&self) -> bool {
        self.reject < DEFAULT_THRESHOLD
    }

    /// Index of the best class score; ties go to the lowest index.
    pub fn best_class(&self) -> Option<usize> {
        argmax(&self.scores)
    }
}

/// How a raw pathway output vector maps onto a [`ComponentOutput`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    /// `out[0]` is the reject flag, the rest are class scores.
    RejectThenScores,
    /// Every output is a class score; the configuration never rejects.
    ScoresOnly,
    /// `out[0]` is `log p_i(x)`, the rest are nonnegative class scores that
    /// get normalized into a posterior.
    DensityThenPosterior,
}

impl Readout {
    pub fn read(self, out: &[f64]) -> Result<ComponentOutput> {
        match self {
            Readout::ScoresOnly => ComponentOutput::accepted(out.to_vec()),
            Readout::RejectThenScores => {
                let (&y0, scores) = out
                    .split_first()
                    .ok_or_else(|| Error::InvalidOutput("empty pathway output".into()))?;
                ComponentOutput::new(y0.clamp(0.0, 1.0), scores.to_vec())
            }
            Readout::DensityThenPosterior => {
                let (&log_density, scores) = out
                    .split_first()
                    .ok_or_else(|| Error::InvalidOutput("empty pathway output".into()))?;
                if scores.iter().any(|&s| s < 0.0) {
                    return Err(Error::InvalidOutput("negative class score".into()));
                }
                let total: f64 = scores.iter().sum();
                let posterior = if total > 0.0 {
                    scores.iter().map(|s| s / total).collect()
                } else {
                    vec![1.0 / scores.len() as f64; scores.len()]
                };
                ComponentOutput::accepted(posterior)?.with_log_density(log_density)
            }
        }
    }
}

/// Lowest index of the maximum; `None` for an empty slice.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Unary label `l` of the active configuration plus a step counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlState {
    active: usize,
    count: usize,
    step_count: usize,
}

impl ControlState {
    pub fn new(active: usize, count: usize) -> Result<Self> {
        if active >= count {
            return Err(Error::ConfigurationOutOfRange { index: active, count });
        }
        Ok(ControlState {
            active,
            count,
            step_count: 0,
        })
    }

    /// Builds a state from a unary label vector; exactly one entry must be 1.
    pub fn from_labels(labels: &[f64]) -> Result<Self> {
        let gate = GateVector::new_one_hot(labels.to_vec())?;
        Self::new(gate.active().expect("one-hot gate"), labels.len())
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn configuration_count(&self) -> usize {
        self.count
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// `l_j = delta(active, j)`.
    pub fn labels(&self) -> Vec<f64> {
        (0..self.count)
            .map(|j| if j == self.active { 1.0 } else { 0.0 })
            .collect()
    }

    fn check_count(&self, count: usize) -> Result<()> {
        if count != self.count {
            return Err(Error::GateLength {
                expected: count,
                found: self.count,
            });
        }
        Ok(())
    }
}

/// Next gate of a plain cycle: `lambda_k = sum_j l_j delta(k, (j+1) mod R)`.
pub fn cycle_next(state: &ControlState, count: usize) -> Result<GateVector> {
    state.check_count(count)?;
    let labels = state.labels();
    let lambda = (0..count)
        .map(|k| {
            labels
                .iter()
                .enumerate()
                .map(|(j, l)| l * delta(k, (j + 1) % count))
                .sum()
        })
        .collect();
    GateVector::new_one_hot(lambda)
}

/// Decision-list control with a stopping input:
///
/// ```text
/// lambda_k = (1 - y_0) sum_j l_j delta(k, (j+1) mod R) + y_0 delta(k, 0)
/// ```
///
/// Here `y_0` is the stop input: `0` advances the cycle and `1` resets to
/// configuration 0. With `threshold = Some(t)` each `lambda_k` goes through a
/// unit step (`1` iff `lambda_k > t`) and the result must be one-hot, otherwise
/// [`Error::ControlAmbiguity`] is returned.
pub fn decision_list_next(
    state: &ControlState,
    out: &ComponentOutput,
    count: usize,
    threshold: Option<f64>,
) -> Result<GateVector> {
    state.check_count(count)?;
    let stop = out.reject();
    let labels = state.labels();
    let lambda: Vec<f64> = (0..count)
        .map(|k| {
            let advance: f64 = labels
                .iter()
                .enumerate()
                .map(|(j, l)| l * delta(k, (j + 1) % count))
                .sum();
            (1.0 - stop) * advance + stop * delta(k, 0)
        })
        .collect();
    match threshold {
        None => GateVector::new(lambda),
        Some(t) => {
            let stepped: Vec<f64> = lambda.iter().map(|&v| if v > t { 1.0 } else { 0.0 }).collect();
            if stepped.iter().sum::<f64>() != 1.0 {
                return Err(Error::ControlAmbiguity { lambda });
            }
            GateVector::new_one_hot(stepped)
        }
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Runs the selector and gates the configuration at the argmax of its output.
pub fn hierarchical_gate(selector: &FeedForwardNetwork, input: &[f64]) -> Result<GateVector> {
    let out = selector.forward(input)?;
    let best = argmax(&out).ok_or_else(|| Error::InvalidPolicy("selector has no outputs".into()))?;
    GateVector::one_hot(best, out.len())
}

pub type GateRule = dyn Fn(&GateVector, &ComponentOutput) -> Result<GateVector> + Send + Sync;

/// Update rule of a lambda-recurrent policy.
#[derive(Clone)]
pub enum LambdaRule {
    /// The decision-list formula with the stop input `y_0 = 1 - reject`:
    /// rejection advances to the next configuration, acceptance returns to
    /// configuration 0.
    DecisionList,
    Custom(Arc<GateRule>),
}

impl fmt::Debug for LambdaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaRule::DecisionList => f.write_str("DecisionList"),
            LambdaRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl LambdaRule {
    pub fn apply(
        &self,
        previous: &GateVector,
        out: &ComponentOutput,
        threshold: Option<f64>,
    ) -> Result<GateVector> {
        match self {
            LambdaRule::DecisionList => {
                let state = ControlState::from_labels(previous.as_slice())?;
                let stop = ComponentOutput::new(1.0 - out.reject(), out.scores().to_vec())?;
                decision_list_next(&state, &stop, previous.len(), threshold)
            }
            LambdaRule::Custom(rule) => {
                let next = rule(previous, out)?;
                if next.len() != previous.len() {
                    return Err(Error::GateLength {
                        expected: previous.len(),
                        found: next.len(),
                    });
                }
                Ok(next)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum PolicyKind {
    Fixed { configuration: usize },
    Hierarchical { selector: FeedForwardNetwork },
    Cycle { order: Vec<usize> },
    Trial { order: Vec<usize>, max_sweeps: usize },
    LambdaRecurrent { rule: LambdaRule, initial: GateVector },
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Fixed { .. } => "fixed",
            PolicyKind::Hierarchical { .. } => "hierarchical",
            PolicyKind::Cycle { .. } => "cycle",
            PolicyKind::Trial { .. } => "trial",
            PolicyKind::LambdaRecurrent { .. } => "lambda_recurrent",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControlPolicy {
    kind: PolicyKind,
    count: usize,
    threshold_enabled: bool,
    threshold: f64,
}

impl ControlPolicy {
    pub fn new(kind: PolicyKind, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidPolicy("at least one configuration is required".into()));
        }
        match &kind {
            PolicyKind::Fixed { configuration } => {
                if *configuration >= count {
                    return Err(Error::ConfigurationOutOfRange {
                        index: *configuration,
                        count,
                    });
                }
            }
            PolicyKind::Hierarchical { selector } => {
                if selector.output_dim() != count {
                    return Err(Error::InvalidPolicy(format!(
                        "selector has {} outputs for {count} configurations",
                        selector.output_dim()
                    )));
                }
            }
            PolicyKind::Cycle { order } => check_permutation(order, count)?,
            PolicyKind::Trial { order, max_sweeps } => {
                check_permutation(order, count)?;
                if *max_sweeps == 0 {
                    return Err(Error::InvalidPolicy("max_sweeps must be at least 1".into()));
                }
            }
            PolicyKind::LambdaRecurrent { initial, .. } => {
                if initial.len() != count {
                    return Err(Error::GateLength {
                        expected: count,
                        found: initial.len(),
                    });
                }
            }
        }
        Ok(ControlPolicy {
            kind,
            count,
            threshold_enabled: false,
            threshold: DEFAULT_THRESHOLD,
        })
    }

    pub fn fixed(configuration: usize, count: usize) -> Result<Self> {
        Self::new(PolicyKind::Fixed { configuration }, count)
    }

    pub fn cycle(order: Vec<usize>) -> Result<Self> {
        let count = order.len();
        Self::new(PolicyKind::Cycle { order }, count)
    }

    pub fn trial(order: Vec<usize>, max_sweeps: usize) -> Result<Self> {
        let count = order.len();
        Self::new(PolicyKind::Trial { order, max_sweeps }, count)
    }

    pub fn hierarchical(selector: FeedForwardNetwork) -> Result<Self> {
        let count = selector.output_dim();
        Self::new(PolicyKind::Hierarchical { selector }, count)
    }

    pub fn lambda_recurrent(rule: LambdaRule, initial: GateVector) -> Result<Self> {
        let count = initial.len();
        Self::new(PolicyKind::LambdaRecurrent { rule, initial }, count)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidPolicy(format!("threshold {threshold} outside (0, 1)")));
        }
        self.threshold_enabled = true;
        self.threshold = threshold;
        Ok(self)
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn configuration_count(&self) -> usize {
        self.count
    }

    pub fn threshold_enabled(&self) -> bool {
        self.threshold_enabled
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn active_threshold(&self) -> Option<f64> {
        self.threshold_enabled.then_some(self.threshold)
    }

    /// The configuration order for cycle and trial policies.
    pub fn order(&self) -> Option<&[usize]> {
        match &self.kind {
            PolicyKind::Cycle { order } | PolicyKind::Trial { order, .. } => Some(order),
            _ => None,
        }
    }

    /// The same policy with a different configuration order. Only cycle and
    /// trial policies have an order.
    pub fn with_order(&self, new_order: Vec<usize>) -> Result<Self> {
        check_permutation(&new_order, self.count)?;
        let kind = match &self.kind {
            PolicyKind::Cycle { .. } => PolicyKind::Cycle { order: new_order },
            PolicyKind::Trial { max_sweeps, .. } => PolicyKind::Trial {
                order: new_order,
                max_sweeps: *max_sweeps,
            },
            other => {
                return Err(Error::InvalidPolicy(format!(
                    "{} policies have no configuration order",
                    other.name()
                )))
            }
        };
        Ok(ControlPolicy { kind, ..self.clone() })
    }
}

pub fn check_permutation(order: &[usize], count: usize) -> Result<()> {
    let mut seen = vec![false; count];
    if order.len() != count {
        return Err(Error::InvalidPolicy(format!(
            "order {order:?} has {} entries for {count} configurations",
            order.len()
        )));
    }
    for &r in order {
        if r >= count || std::mem::replace(&mut seen[r], true) {
            return Err(Error::InvalidPolicy(format!("order {order:?} is not a permutation")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    /// Keep going with the returned gate.
    Continue,
    /// `configuration` accepted the input after `tried` steps.
    Accepted { configuration: usize, tried: usize },
    /// Every sweep ended without an acceptance.
    NoAnswer { tried: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialStep {
    pub gate: GateVector,
    pub status: TrialStatus,
}

impl TrialStep {
    pub fn done(&self) -> bool {
        self.status != TrialStatus::Continue
    }
}

/// First state of a trial policy: the first configuration of its order.
pub fn trial_start(policy: &ControlPolicy) -> Result<ControlState> {
    match policy.kind() {
        PolicyKind::Trial { order, .. } => ControlState::new(order[0], policy.count),
        other => Err(Error::InvalidPolicy(format!(
            "trial_start needs a trial policy, got {}",
            other.name()
        ))),
    }
}

/// One step of trial-until-accept control, after the active configuration
/// produced `out`. An output with `reject < 0.5` finishes the task and the
/// gate returns to the first configuration of the order; otherwise the next
/// configuration in order is tried, until `max_sweeps` full passes are spent.
pub fn trial_step(
    state: &mut ControlState,
    out: &ComponentOutput,
    policy: &ControlPolicy,
) -> Result<TrialStep> {
    let PolicyKind::Trial { order, max_sweeps } = policy.kind() else {
        return Err(Error::InvalidPolicy(format!(
            "trial_step needs a trial policy, got {}",
            policy.kind().name()
        )));
    };
    state.check_count(policy.count)?;
    let tried = state.step_count + 1;
    let status = if out.is_accepted() {
        TrialStatus::Accepted {
            configuration: state.active,
            tried,
        }
    } else if tried >= order.len() * max_sweeps {
        TrialStatus::NoAnswer { tried }
    } else {
        TrialStatus::Continue
    };
    if status == TrialStatus::Continue {
        state.step_count = tried;
        state.active = order[tried % order.len()];
    } else {
        state.step_count = 0;
        state.active = order[0];
    }
    Ok(TrialStep {
        gate: GateVector::one_hot(state.active, policy.count)?,
        status,
    })
}

/// Drives any policy kind step by step. Call [`Controller::gate`] for the
/// configuration to run, evaluate it, then hand its output to
/// [`Controller::observe`].
#[derive(Debug, Clone)]
pub struct Controller<'p> {
    policy: &'p ControlPolicy,
    state: ControlState,
    gate: GateVector,
    position: usize,
}

impl<'p> Controller<'p> {
    /// `input` is only consulted by hierarchical policies.
    pub fn start(policy: &'p ControlPolicy, input: &[f64]) -> Result<Self> {
        let count = policy.count;
        let gate = match policy.kind() {
            PolicyKind::Fixed { configuration } => GateVector::one_hot(*configuration, count)?,
            PolicyKind::Hierarchical { selector } => hierarchical_gate(selector, input)?,
            PolicyKind::Cycle { order } | PolicyKind::Trial { order, .. } => {
                GateVector::one_hot(order[0], count)?
            }
            PolicyKind::LambdaRecurrent { initial, .. } => initial.clone(),
        };
        let state = ControlState::new(gate.active().unwrap_or(0), count)?;
        Ok(Controller {
            policy,
            state,
            gate,
            position: 0,
        })
    }

    pub fn gate(&self) -> &GateVector {
        &self.gate
    }

    pub fn state(&self) -> &ControlState {
        &self.state
    }

    pub fn observe(&mut self, out: &ComponentOutput) -> Result<TrialStep> {
        let count = self.policy.count;
        let status = match self.policy.kind() {
            PolicyKind::Fixed { .. } | PolicyKind::Hierarchical { .. } => TrialStatus::Continue,
            PolicyKind::Cycle { order } => {
                self.position = (self.position + 1) % order.len();
                self.state.active = order[self.position];
                self.gate = GateVector::one_hot(self.state.active, count)?;
                TrialStatus::Continue
            }
            PolicyKind::Trial { .. } => {
                let step = trial_step(&mut self.state, out, self.policy)?;
                self.gate = step.gate;
                step.status
            }
            PolicyKind::LambdaRecurrent { rule, .. } => {
                self.gate = rule.apply(&self.gate, out, self.policy.active_threshold())?;
                if let Some(active) = self.gate.active() {
                    self.state.active = active;
                }
                TrialStatus::Continue
            }
        };
        if !matches!(self.policy.kind(), PolicyKind::Trial { .. }) {
            self.state.step_count += 1;
        }
        Ok(TrialStep {
            gate: self.gate.clone(),
            status,
        })
    }
}
