//! Experiment configuration: one JSON file drives validation, experiment runs
//! and training. Relative paths inside the file resolve against the file's
//! own directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{Averaging, Combiner, SampleGroup, SequentialCompoundClassifier, StyleMode, StyleModel, TreeRouting};
use crate::control::{ControlPolicy, LambdaRule, PolicyKind, Readout};
use crate::data;
use crate::experiments::{ActivationThreshold, PrimingSchedule, RunOptions, Task};
use crate::learning::{Loss, TrainSpec, TrainingBatch};
use crate::pathway::{GateVector, MultiplexedPathway, Nonlinearity};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub pathway: Option<PathwaySpec>,
    #[serde(default)]
    pub policy: Option<PolicySpec>,
    #[serde(default)]
    pub readout: Option<ReadoutSpec>,
    #[serde(default)]
    pub experiment: Option<ExperimentSpec>,
    #[serde(default)]
    pub classifier: Option<ClassifierSpec>,
    #[serde(default)]
    pub style: Option<StyleSpec>,
    #[serde(default)]
    pub training: Option<TrainingSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Either a weight file or a random architecture drawn from the master seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwaySpec {
    #[serde(default)]
    pub weights: Option<PathBuf>,
    #[serde(default)]
    pub random: Option<RandomPathway>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomPathway {
    pub configurations: usize,
    /// Unit counts from input to output.
    pub sizes: Vec<usize>,
    pub sigma: Vec<Nonlinearity>,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    Fixed,
    Hierarchical,
    Cycle,
    Trial,
    LambdaRecurrent,
}

/// `{"kind": ..., ...}` with the fields the kind uses:
/// `fixed` takes `configuration`; `hierarchical` takes `selector`, a
/// single-configuration pathway file with one output per configuration;
/// `cycle` takes `order`; `trial` takes `order` and `max_sweeps` (default 1);
/// `lambda_recurrent` takes the initial `gate` and an optional `threshold`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub kind: PolicyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configuration: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadoutSpec {
    RejectThenScores,
    ScoresOnly,
    DensityThenPosterior,
}

impl From<ReadoutSpec> for Readout {
    fn from(r: ReadoutSpec) -> Self {
        match r {
            ReadoutSpec::RejectThenScores => Readout::RejectThenScores,
            ReadoutSpec::ScoresOnly => Readout::ScoresOnly,
            ReadoutSpec::DensityThenPosterior => Readout::DensityThenPosterior,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Task CSV: `category, true_class, feature_1, ...`.
    pub task: PathBuf,
    #[serde(default)]
    pub priming: Option<BTreeMap<String, Vec<usize>>>,
    #[serde(default)]
    pub deadlines: Vec<usize>,
    #[serde(default)]
    pub input_noise: f64,
    /// One threshold per layer; defaults by nonlinearity.
    #[serde(default)]
    pub activation_threshold: Option<Vec<f64>>,
    #[serde(default = "default_latency")]
    pub latency_ms_per_configuration: f64,
}

fn default_latency() -> f64 {
    50.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    pub combiner: CombinerSpec,
    /// Labeled CSV: `feature_1, ..., label`.
    pub data: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CombinerSpec {
    DecisionList,
    DecisionTree {
        root: usize,
        node_map: BTreeMap<usize, Vec<usize>>,
    },
    Ensemble {
        /// Exponential decay; uniform averaging when absent.
        #[serde(default)]
        decay: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleSpec {
    pub model: PathBuf,
    /// Grouped CSV: `group_id, feature_1, ..., label`.
    pub groups: PathBuf,
    pub window: usize,
    #[serde(default)]
    pub skip_margin: Option<f64>,
    #[serde(default)]
    pub mode: Option<StyleMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSpec {
    /// Training CSV: `x_1, ..., t_1, ...`.
    pub data: PathBuf,
    pub jobs: Vec<TrainJob>,
    #[serde(default = "default_trained_name")]
    pub output: PathBuf,
}

fn default_trained_name() -> PathBuf {
    PathBuf::from("trained_pathway.json")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainJob {
    pub configuration: usize,
    #[serde(flatten)]
    pub spec: TrainSpec,
}

/// One problem found in a config, tied to the field it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn diag(field: impl Into<String>, message: impl fmt::Display) -> Diagnostic {
    Diagnostic {
        field: field.into(),
        message: message.to_string(),
    }
}

pub struct ResolvedExperiment {
    pub task: Task,
    pub priming: Option<PrimingSchedule>,
    pub deadlines: Vec<usize>,
    pub options: RunOptions,
    pub latency_ms: f64,
}

pub struct ResolvedClassifier {
    pub classifier: SequentialCompoundClassifier,
    pub averaging: Averaging,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

pub struct ResolvedStyle {
    pub model: StyleModel,
    pub groups: Vec<SampleGroup>,
    pub window: usize,
    pub skip_margin: Option<f64>,
}

pub struct ResolvedTraining {
    pub batch: TrainingBatch,
    pub jobs: Vec<TrainJob>,
    pub output: PathBuf,
}

/// A config with every referenced file loaded and every cross-section
/// invariant checked.
pub struct Resolved {
    pub seed: u64,
    pub pathway: Option<MultiplexedPathway>,
    pub policy: Option<ControlPolicy>,
    pub experiment: Option<ResolvedExperiment>,
    pub classifier: Option<ResolvedClassifier>,
    pub style: Option<ResolvedStyle>,
    pub training: Option<ResolvedTraining>,
    pub output_dir: PathBuf,
    pub config: ExperimentConfig,
}

/// Parses a config file. Syntax and schema errors carry the line, column and
/// field path.
pub fn parse(text: &str) -> Result<ExperimentConfig, Diagnostic> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        diag(
            if path == "." { "<root>".to_string() } else { path },
            format!("line {} column {}: {inner}", inner.line(), inner.column()),
        )
    })
}

pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Resolved, Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![diag("<file>", format!("{}: {e}", path.display()))])?;
    let config = parse(&text).map_err(|d| vec![d])?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    resolve(config, &base, seed_override)
}

fn read_file(base: &Path, rel: &Path, field: &str, diags: &mut Vec<Diagnostic>) -> Option<(PathBuf, String)> {
    let full = base.join(rel);
    match std::fs::read_to_string(&full) {
        Ok(text) => Some((full, text)),
        Err(e) => {
            diags.push(diag(field, format!("cannot read {}: {e}", full.display())));
            None
        }
    }
}

fn open_csv(base: &Path, rel: &Path, field: &str, diags: &mut Vec<Diagnostic>) -> Option<std::fs::File> {
    match data::open(&base.join(rel)) {
        Ok(f) => Some(f),
        Err(e) => {
            diags.push(diag(field, e));
            None
        }
    }
}

fn resolve_pathway(spec: &PathwaySpec, base: &Path, seed: u64, diags: &mut Vec<Diagnostic>) -> Option<MultiplexedPathway> {
    match (&spec.weights, &spec.random) {
        (Some(_), Some(_)) | (None, None) => {
            diags.push(diag("pathway", "give exactly one of `weights` or `random`"));
            None
        }
        (Some(weights), None) => {
            let (full, text) = read_file(base, weights, "pathway.weights", diags)?;
            MultiplexedPathway::from_json(&text)
                .map_err(|e| diags.push(diag("pathway.weights", format!("{}: {e}", full.display()))))
                .ok()
        }
        (None, Some(r)) => {
            if r.configurations == 0 {
                diags.push(diag("pathway.random.configurations", "need at least one configuration"));
                return None;
            }
            if r.sizes.len() < 2 || r.sizes.contains(&0) {
                diags.push(diag("pathway.random.sizes", "need at least two positive sizes"));
                return None;
            }
            if r.sigma.len() + 1 != r.sizes.len() {
                diags.push(diag(
                    "pathway.random.sigma",
                    format!("{} nonlinearities for {} layers", r.sigma.len(), r.sizes.len() - 1),
                ));
                return None;
            }
            if !(r.scale.is_finite() && r.scale > 0.0) {
                diags.push(diag("pathway.random.scale", "must be positive"));
                return None;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            MultiplexedPathway::random(r.configurations, &r.sizes, &r.sigma, r.scale, &mut rng)
                .map_err(|e| diags.push(diag("pathway.random", e)))
                .ok()
        }
    }
}

fn resolve_policy(
    spec: &PolicySpec,
    pathway: &MultiplexedPathway,
    base: &Path,
    diags: &mut Vec<Diagnostic>,
) -> Option<ControlPolicy> {
    let count = pathway.configuration_count();
    let start = diags.len();
    let used: &[&str] = match spec.kind {
        PolicyName::Fixed => &["configuration"],
        PolicyName::Hierarchical => &["selector"],
        PolicyName::Cycle => &["order"],
        PolicyName::Trial => &["order", "max_sweeps"],
        PolicyName::LambdaRecurrent => &["gate", "threshold"],
    };
    let present = [
        ("configuration", spec.configuration.is_some()),
        ("selector", spec.selector.is_some()),
        ("order", spec.order.is_some()),
        ("max_sweeps", spec.max_sweeps.is_some()),
        ("gate", spec.gate.is_some()),
        ("threshold", spec.threshold.is_some()),
    ];
    for (name, _) in present.iter().filter(|(n, p)| *p && !used.contains(n)) {
        diags.push(diag(format!("policy.{name}"), format!("not used by a {:?} policy", spec.kind)));
    }
    let required = |name: &str, diags: &mut Vec<Diagnostic>| {
        diags.push(diag(format!("policy.{name}"), format!("required by a {:?} policy", spec.kind)));
    };
    let order = |diags: &mut Vec<Diagnostic>| -> Option<Vec<usize>> {
        let Some(order) = &spec.order else {
            required("order", diags);
            return None;
        };
        if order.len() != count {
            diags.push(diag("policy.order", format!("length {} but R = {count}", order.len())));
            return None;
        }
        if let Err(e) = crate::control::check_permutation(order, count) {
            diags.push(diag("policy.order", e));
            return None;
        }
        Some(order.clone())
    };

    let built = match spec.kind {
        PolicyName::Fixed => {
            let Some(configuration) = spec.configuration else {
                required("configuration", diags);
                return None;
            };
            if configuration >= count {
                diags.push(diag(
                    "policy.configuration",
                    format!("index {configuration} out of range for R = {count}"),
                ));
                return None;
            }
            ControlPolicy::fixed(configuration, count)
        }
        PolicyName::Hierarchical => {
            let Some(selector) = &spec.selector else {
                required("selector", diags);
                return None;
            };
            let (full, text) = read_file(base, selector, "policy.selector", diags)?;
            let sel = match MultiplexedPathway::from_json(&text) {
                Ok(p) if p.configuration_count() == 1 => p.banks()[0].clone(),
                Ok(p) => {
                    diags.push(diag(
                        "policy.selector",
                        format!("selector file has {} configurations, expected 1", p.configuration_count()),
                    ));
                    return None;
                }
                Err(e) => {
                    diags.push(diag("policy.selector", format!("{}: {e}", full.display())));
                    return None;
                }
            };
            if sel.output_dim() != count {
                diags.push(diag(
                    "policy.selector",
                    format!("selector has {} outputs but R = {count}", sel.output_dim()),
                ));
                return None;
            }
            if sel.input_dim() != pathway.input_dim() {
                diags.push(diag(
                    "policy.selector",
                    format!("selector reads {} inputs, pathway reads {}", sel.input_dim(), pathway.input_dim()),
                ));
                return None;
            }
            ControlPolicy::hierarchical(sel)
        }
        PolicyName::Cycle => ControlPolicy::cycle(order(diags)?),
        PolicyName::Trial => {
            let max_sweeps = spec.max_sweeps.unwrap_or(1);
            if max_sweeps == 0 {
                diags.push(diag("policy.max_sweeps", "must be at least 1"));
            }
            let order = order(diags)?;
            if max_sweeps == 0 {
                return None;
            }
            ControlPolicy::trial(order, max_sweeps)
        }
        PolicyName::LambdaRecurrent => {
            let Some(gate) = &spec.gate else {
                required("gate", diags);
                return None;
            };
            if gate.len() != count {
                diags.push(diag("policy.gate", format!("length {} but R = {count}", gate.len())));
                return None;
            }
            let initial = match GateVector::new(gate.clone()) {
                Ok(g) => g,
                Err(e) => {
                    diags.push(diag("policy.gate", e));
                    return None;
                }
            };
            match ControlPolicy::lambda_recurrent(LambdaRule::DecisionList, initial) {
                Ok(p) => match spec.threshold {
                    Some(t) => match p.with_threshold(t) {
                        Ok(p) => Ok(p),
                        Err(e) => {
                            diags.push(diag("policy.threshold", e));
                            return None;
                        }
                    },
                    None => Ok(p),
                },
                Err(e) => Err(e),
            }
        }
    };
    if diags.len() > start {
        return None;
    }
    built.map_err(|e| diags.push(diag("policy", e))).ok()
}

fn check_inputs(field: &str, inputs: &[Vec<f64>], dim: usize, diags: &mut Vec<Diagnostic>) -> bool {
    if let Some((i, x)) = inputs.iter().enumerate().find(|(_, x)| x.len() != dim) {
        diags.push(diag(field, format!("row {i} has {} features, expected {dim}", x.len())));
        return false;
    }
    true
}

fn resolve_experiment(
    spec: &ExperimentSpec,
    pathway: &MultiplexedPathway,
    policy: Option<&ControlPolicy>,
    readout: Readout,
    base: &Path,
    diags: &mut Vec<Diagnostic>,
) -> Option<ResolvedExperiment> {
    let start = diags.len();
    if !matches!(policy.map(ControlPolicy::kind), Some(PolicyKind::Trial { .. })) {
        diags.push(diag("policy.kind", "experiments need a `trial` policy"));
    }
    let count = pathway.configuration_count();
    let priming = spec.priming.as_ref().and_then(|table| {
        for (tag, order) in table {
            if let Err(e) = crate::control::check_permutation(order, count) {
                diags.push(diag(format!("experiment.priming.{tag}"), e));
            }
        }
        PrimingSchedule::new(table.clone(), count).ok()
    });
    if spec.deadlines.contains(&0) {
        diags.push(diag("experiment.deadlines", "deadlines must be positive"));
    }
    if !(spec.input_noise.is_finite() && spec.input_noise >= 0.0) {
        diags.push(diag("experiment.input_noise", "must be a nonnegative number"));
    }
    if !(spec.latency_ms_per_configuration.is_finite() && spec.latency_ms_per_configuration >= 0.0) {
        diags.push(diag("experiment.latency_ms_per_configuration", "must be a nonnegative number"));
    }
    if let Some(t) = &spec.activation_threshold {
        if t.len() != pathway.sigma().len() || t.iter().any(|v| !v.is_finite()) {
            diags.push(diag(
                "experiment.activation_threshold",
                format!("need {} finite thresholds, one per layer", pathway.sigma().len()),
            ));
        }
    }
    let task = open_csv(base, &spec.task, "experiment.task", diags).and_then(|f| match data::read_task(f) {
        Ok(stimuli) => {
            let inputs: Vec<Vec<f64>> = stimuli.iter().map(|s| s.input.clone()).collect();
            if !check_inputs("experiment.task", &inputs, pathway.input_dim(), diags) {
                return None;
            }
            Task::new(stimuli).map_err(|e| diags.push(diag("experiment.task", e))).ok()
        }
        Err(e) => {
            diags.push(diag("experiment.task", e));
            None
        }
    });
    if diags.len() > start {
        return None;
    }
    Some(ResolvedExperiment {
        task: task?,
        priming,
        deadlines: spec.deadlines.clone(),
        options: RunOptions {
            input_noise: spec.input_noise,
            activation_threshold: spec.activation_threshold.clone().map(ActivationThreshold),
            readout,
        },
        latency_ms: spec.latency_ms_per_configuration,
    })
}

fn resolve_classifier(
    spec: &ClassifierSpec,
    pathway: &MultiplexedPathway,
    policy: Option<&ControlPolicy>,
    readout: Option<Readout>,
    base: &Path,
    diags: &mut Vec<Diagnostic>,
) -> Option<ResolvedClassifier> {
    let Some(policy) = policy else {
        diags.push(diag("policy", "the classifier section needs a policy"));
        return None;
    };
    let (combiner, averaging) = match &spec.combiner {
        CombinerSpec::DecisionList => (Combiner::FirstAccept, Averaging::Uniform),
        CombinerSpec::DecisionTree { root, node_map } => match TreeRouting::new(*root, node_map.clone()) {
            Ok(t) => (Combiner::TreeRoute(t), Averaging::Uniform),
            Err(e) => {
                diags.push(diag("classifier.combiner.node_map", e));
                return None;
            }
        },
        CombinerSpec::Ensemble { decay } => match decay {
            None => (Combiner::TemporalAverage, Averaging::Uniform),
            Some(d) if *d > 0.0 && *d <= 1.0 => (Combiner::TemporalAverage, Averaging::Exponential { decay: *d }),
            Some(_) => {
                diags.push(diag("classifier.combiner.decay", "must lie in (0, 1]"));
                return None;
            }
        },
    };
    let classifier = match SequentialCompoundClassifier::new(pathway.clone(), policy.clone(), combiner) {
        Ok(c) => match readout {
            Some(r) => c.with_readout(r),
            None => c,
        },
        Err(e) => {
            diags.push(diag("classifier.combiner", e));
            return None;
        }
    };
    let f = open_csv(base, &spec.data, "classifier.data", diags)?;
    let (inputs, labels) = data::read_labeled(f).map_err(|e| diags.push(diag("classifier.data", e))).ok()?;
    if !check_inputs("classifier.data", &inputs, pathway.input_dim(), diags) {
        return None;
    }
    Some(ResolvedClassifier {
        classifier,
        averaging,
        inputs,
        labels,
    })
}

fn resolve_style(spec: &StyleSpec, base: &Path, diags: &mut Vec<Diagnostic>) -> Option<ResolvedStyle> {
    if spec.window == 0 {
        diags.push(diag("style.window", "must be at least 1"));
    }
    if let Some(m) = spec.skip_margin {
        if !(m.is_finite() && m > 0.0) {
            diags.push(diag("style.skip_margin", "must be positive"));
        }
    }
    let (full, text) = read_file(base, &spec.model, "style.model", diags)?;
    let mut model = StyleModel::from_json(&text)
        .map_err(|e| diags.push(diag("style.model", format!("{}: {e}", full.display()))))
        .ok()?;
    if let Some(mode) = spec.mode {
        model = model.with_mode(mode);
    }
    let f = open_csv(base, &spec.groups, "style.groups", diags)?;
    let groups = data::read_groups(f).map_err(|e| diags.push(diag("style.groups", e))).ok()?;
    let inputs: Vec<Vec<f64>> = groups.iter().flat_map(|g| g.samples.clone()).collect();
    if !check_inputs("style.groups", &inputs, model.dim(), diags) {
        return None;
    }
    if let Some(g) = groups.iter().find(|g| g.labels.iter().any(|&y| y >= model.class_count())) {
        diags.push(diag(
            "style.groups",
            format!("group {} has a label outside the model's {} classes", g.id, model.class_count()),
        ));
        return None;
    }
    (spec.window > 0).then_some(ResolvedStyle {
        model,
        groups,
        window: spec.window,
        skip_margin: spec.skip_margin,
    })
}

fn resolve_training(
    spec: &TrainingSpec,
    pathway: &MultiplexedPathway,
    base: &Path,
    diags: &mut Vec<Diagnostic>,
) -> Option<ResolvedTraining> {
    let start = diags.len();
    if spec.jobs.is_empty() {
        diags.push(diag("training.jobs", "no training jobs"));
    }
    for (i, job) in spec.jobs.iter().enumerate() {
        if job.configuration >= pathway.configuration_count() {
            diags.push(diag(
                format!("training.jobs[{i}].configuration"),
                format!("index {} out of range for R = {}", job.configuration, pathway.configuration_count()),
            ));
        }
        if let Err(e) = job.spec.validate() {
            diags.push(diag(format!("training.jobs[{i}].learning_rate"), e));
        }
        if job.spec.loss == Loss::CrossEntropyWithSigmoid && pathway.sigma().last() != Some(&Nonlinearity::LogisticSigmoid) {
            diags.push(diag(
                format!("training.jobs[{i}].loss"),
                "cross-entropy-with-sigmoid needs a logistic-sigmoid output layer",
            ));
        }
    }
    let batch = open_csv(base, &spec.data, "training.data", diags)
        .and_then(|f| data::read_training(f).map_err(|e| diags.push(diag("training.data", e))).ok());
    if let Some(b) = &batch {
        check_inputs("training.data", b.inputs(), pathway.input_dim(), diags);
        if b.targets()[0].len() != pathway.output_dim() {
            diags.push(diag(
                "training.data",
                format!("{} targets per row, pathway has {} outputs", b.targets()[0].len(), pathway.output_dim()),
            ));
        }
    }
    if diags.len() > start {
        return None;
    }
    Some(ResolvedTraining {
        batch: batch?,
        jobs: spec.jobs.clone(),
        output: spec.output.clone(),
    })
}

/// Loads every referenced file and checks the whole config, collecting all
/// problems instead of stopping at the first.
pub fn resolve(config: ExperimentConfig, base: &Path, seed_override: Option<u64>) -> Result<Resolved, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let seed = seed_override.unwrap_or(config.seed);

    let pathway = config.pathway.as_ref().and_then(|p| resolve_pathway(p, base, seed, &mut diags));
    let needs_pathway = config.policy.is_some()
        || config.experiment.is_some()
        || config.classifier.is_some()
        || config.training.is_some();
    if config.pathway.is_none() && needs_pathway {
        diags.push(diag("pathway", "required by the policy, experiment, classifier and training sections"));
    }

    let policy = match (&config.policy, &pathway) {
        (Some(spec), Some(p)) => resolve_policy(spec, p, base, &mut diags),
        _ => None,
    };
    let readout = config.readout.map(Readout::from);

    let mut experiment = None;
    let mut classifier = None;
    let mut training = None;
    if let Some(p) = &pathway {
        if let Some(spec) = &config.experiment {
            if config.policy.is_none() {
                diags.push(diag("policy", "the experiment section needs a `trial` policy"));
            } else if policy.is_some() {
                experiment = resolve_experiment(
                    spec,
                    p,
                    policy.as_ref(),
                    readout.unwrap_or(Readout::RejectThenScores),
                    base,
                    &mut diags,
                );
            }
        }
        if let Some(spec) = &config.classifier {
            if config.policy.is_none() || policy.is_some() {
                classifier = resolve_classifier(spec, p, policy.as_ref(), readout, base, &mut diags);
            }
        }
        if let Some(spec) = &config.training {
            training = resolve_training(spec, p, base, &mut diags);
        }
    }
    let style = config.style.as_ref().and_then(|s| resolve_style(s, base, &mut diags));

    if config.experiment.is_none()
        && config.classifier.is_none()
        && config.style.is_none()
        && config.training.is_none()
    {
        diags.push(diag("<root>", "nothing to do: add an experiment, classifier, style or training section"));
    }

    if !diags.is_empty() {
        return Err(diags);
    }
    let output_dir = base.join(config.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")));
    Ok(Resolved {
        seed,
        pathway,
        policy,
        experiment,
        classifier,
        style,
        training,
        output_dir,
        config,
    })
}
