//! Sequential compound classifiers: component classifiers live in the
//! configurations of one pathway and a control policy decides the order in
//! which they run and how their outputs combine.

mod density;
mod style;
mod tree;

pub use density::{DiagonalGaussian, Histogram};
pub use style::{
    log_sum_exp, mix_posteriors, skip_low_evidence, style_classify, style_group_posterior,
    style_window_update, weights_from_log_evidence, ComponentEval, SampleGroup,
    SlidingWindowEstimator, StyleComponent, StyleMode, StyleModel,
};
pub use tree::TreeRouting;

use crate::control::{trial_start, trial_step, ComponentOutput, ControlPolicy, PolicyKind, Readout, TrialStatus};
use crate::error::{Error, Result};
use crate::pathway::{GateVector, MultiplexedPathway};

/// How configuration outputs become the classifier's answer.
#[derive(Debug, Clone)]
pub enum Combiner {
    /// Decision list: the first accepting configuration answers.
    FirstAccept,
    /// Decision tree: interior configurations route, leaves answer.
    TreeRoute(TreeRouting),
    /// Multi-classifier ensemble over one cycle of configurations.
    TemporalAverage,
    /// Mixture of configuration posteriors weighted by windowed evidence.
    StyleWeighted(StyleMode),
}

impl Combiner {
    fn name(&self) -> &'static str {
        match self {
            Combiner::FirstAccept => "first-accept",
            Combiner::TreeRoute(_) => "tree-route",
            Combiner::TemporalAverage => "temporal-average",
            Combiner::StyleWeighted(_) => "style-weighted",
        }
    }

    fn default_readout(&self) -> Readout {
        match self {
            Combiner::FirstAccept => Readout::RejectThenScores,
            Combiner::TreeRoute(_) | Combiner::TemporalAverage => Readout::ScoresOnly,
            Combiner::StyleWeighted(_) => Readout::DensityThenPosterior,
        }
    }
}

/// Temporal averaging of ensemble scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Averaging {
    /// `a <- (1 - 1/t) a + (1/t) s_t`: the arithmetic mean.
    Uniform,
    /// `a <- (1 - decay) a + decay s_t` with `decay` in `(0, 1]`, from `a = 0`.
    Exponential { decay: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionListOutcome {
    /// `None` when every configuration rejected.
    pub class: Option<usize>,
    pub configurations_tried: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeOutcome {
    pub class: usize,
    pub path: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SequentialCompoundClassifier {
    pathway: MultiplexedPathway,
    policy: ControlPolicy,
    combiner: Combiner,
    readout: Readout,
}

impl SequentialCompoundClassifier {
    pub fn new(pathway: MultiplexedPathway, policy: ControlPolicy, combiner: Combiner) -> Result<Self> {
        let count = pathway.configuration_count();
        if policy.configuration_count() != count {
            return Err(Error::GateLength {
                expected: count,
                found: policy.configuration_count(),
            });
        }
        let compatible = match (&combiner, policy.kind()) {
            (Combiner::FirstAccept, PolicyKind::Trial { .. }) => true,
            (Combiner::TreeRoute(routing), PolicyKind::Fixed { configuration }) => {
                *configuration == routing.root()
            }
            (Combiner::TemporalAverage | Combiner::StyleWeighted(_), PolicyKind::Cycle { .. }) => true,
            _ => false,
        };
        if !compatible {
            return Err(Error::IncompatibleCombiner(format!(
                "{} combiner with {} policy",
                combiner.name(),
                policy.kind().name()
            )));
        }
        if let Combiner::TreeRoute(routing) = &combiner {
            routing.check_against(count, pathway.output_dim())?;
        }
        let readout = combiner.default_readout();
        Ok(SequentialCompoundClassifier {
            pathway,
            policy,
            combiner,
            readout,
        })
    }

    pub fn decision_list(pathway: MultiplexedPathway, order: Vec<usize>, max_sweeps: usize) -> Result<Self> {
        Self::new(pathway, ControlPolicy::trial(order, max_sweeps)?, Combiner::FirstAccept)
    }

    pub fn decision_tree(pathway: MultiplexedPathway, routing: TreeRouting) -> Result<Self> {
        let policy = ControlPolicy::fixed(routing.root(), pathway.configuration_count())?;
        Self::new(pathway, policy, Combiner::TreeRoute(routing))
    }

    pub fn ensemble(pathway: MultiplexedPathway, order: Vec<usize>) -> Result<Self> {
        Self::new(pathway, ControlPolicy::cycle(order)?, Combiner::TemporalAverage)
    }

    pub fn style(pathway: MultiplexedPathway, order: Vec<usize>, mode: StyleMode) -> Result<Self> {
        Self::new(pathway, ControlPolicy::cycle(order)?, Combiner::StyleWeighted(mode))
    }

    pub fn with_readout(mut self, readout: Readout) -> Self {
        self.readout = readout;
        self
    }

    pub fn pathway(&self) -> &MultiplexedPathway {
        &self.pathway
    }

    pub fn policy(&self) -> &ControlPolicy {
        &self.policy
    }

    pub fn combiner(&self) -> &Combiner {
        &self.combiner
    }

    /// Runs configuration `r` alone and reads its output.
    pub fn evaluate(&self, r: usize, x: &[f64]) -> Result<ComponentOutput> {
        let gate = GateVector::one_hot(r, self.pathway.configuration_count())?;
        self.readout.read(&self.pathway.forward(&gate, x)?)
    }

    fn mismatch(&self, want: &str) -> Error {
        Error::IncompatibleCombiner(format!(
            "{want} classification on a {} classifier",
            self.combiner.name()
        ))
    }

    fn expect(&self, want: &str) -> Result<()> {
        if self.combiner.name() != want {
            return Err(self.mismatch(want));
        }
        Ok(())
    }

    /// Tries configurations in policy order; the first one that accepts
    /// answers with the argmax of its scores.
    pub fn classify_decision_list(&self, x: &[f64]) -> Result<DecisionListOutcome> {
        self.expect("first-accept")?;
        let mut state = trial_start(&self.policy)?;
        loop {
            let out = self.evaluate(state.active(), x)?;
            let step = trial_step(&mut state, &out, &self.policy)?;
            match step.status {
                TrialStatus::Continue => {}
                TrialStatus::Accepted { tried, .. } => {
                    return Ok(DecisionListOutcome {
                        class: out.best_class(),
                        configurations_tried: tried,
                    })
                }
                TrialStatus::NoAnswer { tried } => {
                    return Ok(DecisionListOutcome {
                        class: None,
                        configurations_tried: tried,
                    })
                }
            }
        }
    }

    /// Descends from the root: each interior configuration's argmax class is
    /// looked up in the routing table to pick the next configuration.
    pub fn classify_decision_tree(&self, x: &[f64]) -> Result<TreeOutcome> {
        let Combiner::TreeRoute(routing) = &self.combiner else {
            return Err(self.mismatch("tree-route"));
        };
        let mut node = routing.root();
        let mut path = Vec::new();
        loop {
            path.push(node);
            let class = self
                .evaluate(node, x)?
                .best_class()
                .ok_or_else(|| Error::InvalidOutput("configuration has no outputs".into()))?;
            match routing.next(node, class) {
                Some(child) => node = child,
                None => return Ok(TreeOutcome { class, path }),
            }
        }
    }

    /// One pass through the cycle order, averaging class scores over time.
    pub fn classify_ensemble(&self, x: &[f64], averaging: Averaging) -> Result<Vec<f64>> {
        self.expect("temporal-average")?;
        if let Averaging::Exponential { decay } = averaging {
            if !(decay > 0.0 && decay <= 1.0) {
                return Err(Error::InvalidPolicy(format!("decay {decay} outside (0, 1]")));
            }
        }
        let order = self.policy.order().expect("cycle policy has an order");
        let mut avg: Vec<f64> = Vec::new();
        for (t, &r) in order.iter().enumerate() {
            let scores = self.evaluate(r, x)?.scores().to_vec();
            if avg.is_empty() {
                avg = vec![0.0; scores.len()];
            }
            let rate = match averaging {
                Averaging::Uniform => 1.0 / (t + 1) as f64,
                Averaging::Exponential { decay } => decay,
            };
            for (a, s) in avg.iter_mut().zip(&scores) {
                *a = (1.0 - rate) * *a + rate * s;
            }
        }
        Ok(avg)
    }

    /// Style-model classification where each configuration reports its own
    /// log-density and class posterior. Components skipped by
    /// [`skip_low_evidence`] are not evaluated.
    pub fn classify_style(&self, est: &mut SlidingWindowEstimator, x: &[f64]) -> Result<Vec<f64>> {
        let Combiner::StyleWeighted(mode) = self.combiner else {
            return Err(self.mismatch("style-weighted"));
        };
        let count = self.pathway.configuration_count();
        let mut evals = vec![None; count];
        for &r in self.policy.order().expect("cycle policy has an order") {
            if est.is_active(r) {
                let out = self.evaluate(r, x)?;
                evals[r] = Some(ComponentEval {
                    log_density: out.log_density().unwrap_or(f64::NEG_INFINITY),
                    posterior: out.scores().to_vec(),
                });
            }
        }
        style::integrate(est, &evals, &vec![1.0 / count as f64; count], mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathway::{FeedForwardNetwork, Matrix, Nonlinearity};

    // Single identity layer ignoring the input: always emits `out`.
    fn constant(out: &[f64]) -> FeedForwardNetwork {
        let rows: Vec<Vec<f64>> = out.iter().map(|&v| vec![v]).collect();
        FeedForwardNetwork::new(vec![Matrix::from_rows(&rows).unwrap()], vec![Nonlinearity::Identity]).unwrap()
    }

    #[test]
    fn decision_list_with_two_leading_rejects() {
        let path = MultiplexedPathway::new(vec![
            constant(&[1.0, 0.9, 0.1]),
            constant(&[1.0, 0.9, 0.1]),
            constant(&[0.0, 0.2, 0.8]),
        ])
        .unwrap();
        let clf = SequentialCompoundClassifier::decision_list(path, vec![0, 1, 2], 1).unwrap();
        let got = clf.classify_decision_list(&[1.0]).unwrap();
        assert_eq!(got, DecisionListOutcome { class: Some(1), configurations_tried: 3 });
    }

    #[test]
    fn decision_list_immediate_accept_and_no_answer() {
        let path = MultiplexedPathway::new(vec![constant(&[0.0, 0.3, 0.7]), constant(&[1.0, 1.0, 0.0])]).unwrap();
        let clf = SequentialCompoundClassifier::decision_list(path.clone(), vec![0, 1], 1).unwrap();
        assert_eq!(clf.classify_decision_list(&[1.0]).unwrap().configurations_tried, 1);

        let path = MultiplexedPathway::new(vec![constant(&[1.0, 0.3, 0.7]), constant(&[1.0, 1.0, 0.0])]).unwrap();
        let clf = SequentialCompoundClassifier::decision_list(path, vec![1, 0], 2).unwrap();
        assert_eq!(
            clf.classify_decision_list(&[1.0]).unwrap(),
            DecisionListOutcome { class: None, configurations_tried: 4 }
        );
    }

    #[test]
    fn ensemble_uniform_mean() {
        let path = MultiplexedPathway::new(vec![constant(&[1.0, 0.0]), constant(&[0.0, 1.0])]).unwrap();
        let clf = SequentialCompoundClassifier::ensemble(path, vec![0, 1]).unwrap();
        assert_eq!(clf.classify_ensemble(&[1.0], Averaging::Uniform).unwrap(), vec![0.5, 0.5]);
        let got = clf.classify_ensemble(&[1.0], Averaging::Exponential { decay: 0.5 }).unwrap();
        assert_eq!(got, vec![0.25, 0.5]);
        assert!(clf.classify_ensemble(&[1.0], Averaging::Exponential { decay: 0.0 }).is_err());
    }

    #[test]
    fn ensemble_of_one_is_identity() {
        let path = MultiplexedPathway::new(vec![constant(&[0.3, 0.6, 0.1])]).unwrap();
        let clf = SequentialCompoundClassifier::ensemble(path, vec![0]).unwrap();
        assert_eq!(clf.classify_ensemble(&[1.0], Averaging::Uniform).unwrap(), vec![0.3, 0.6, 0.1]);
    }

    #[test]
    fn combiner_policy_compatibility_is_enforced() {
        let path = MultiplexedPathway::new(vec![constant(&[1.0, 0.0]), constant(&[0.0, 1.0])]).unwrap();
        let err = SequentialCompoundClassifier::new(
            path.clone(),
            ControlPolicy::cycle(vec![0, 1]).unwrap(),
            Combiner::FirstAccept,
        )
        .unwrap_err();
        assert!(matches!(err, Error::IncompatibleCombiner(_)));
        let clf = SequentialCompoundClassifier::ensemble(path, vec![0, 1]).unwrap();
        assert!(clf.classify_decision_list(&[1.0]).is_err());
        assert!(clf.classify_decision_tree(&[1.0]).is_err());
    }

    #[test]
    fn single_leaf_tree_is_the_standalone_network() {
        let path = MultiplexedPathway::new(vec![constant(&[0.2, 0.7, 0.1])]).unwrap();
        let routing = TreeRouting::new(0, Default::default()).unwrap();
        let clf = SequentialCompoundClassifier::decision_tree(path, routing).unwrap();
        assert_eq!(clf.classify_decision_tree(&[1.0]).unwrap(), TreeOutcome { class: 1, path: vec![0] });
    }

    #[test]
    fn depth_two_tree_routes_on_sign_of_first_input() {
        // Root outputs (-x1, x1): class 0 (go left) exactly when x1 < 0.
        let root = FeedForwardNetwork::new(
            vec![Matrix::from_rows(&[vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap()],
            vec![Nonlinearity::Identity],
        )
        .unwrap();
        let left = FeedForwardNetwork::new(
            vec![Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 2.0]]).unwrap()],
            vec![Nonlinearity::Identity],
        )
        .unwrap();
        let right = FeedForwardNetwork::new(
            vec![Matrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 1.0]]).unwrap()],
            vec![Nonlinearity::Identity],
        )
        .unwrap();
        let path = MultiplexedPathway::new(vec![root, left, right]).unwrap();
        let routing = TreeRouting::new(0, [(0, vec![1, 2])].into_iter().collect()).unwrap();
        let clf = SequentialCompoundClassifier::decision_tree(path, routing).unwrap();
        assert_eq!(clf.classify_decision_tree(&[-1.0, 1.0]).unwrap(), TreeOutcome { class: 1, path: vec![0, 1] });
        assert_eq!(clf.classify_decision_tree(&[1.0, 1.0]).unwrap(), TreeOutcome { class: 0, path: vec![0, 2] });
    }

    #[test]
    fn tree_routing_must_cover_every_output_class() {
        let path = MultiplexedPathway::new(vec![constant(&[0.0, 1.0, 0.0]), constant(&[1.0, 0.0, 0.0])]).unwrap();
        let routing = TreeRouting::new(0, [(0, vec![1, 1])].into_iter().collect()).unwrap();
        assert!(matches!(
            SequentialCompoundClassifier::decision_tree(path, routing),
            Err(Error::InvalidRouting(_))
        ));
    }

    #[test]
    fn style_weighted_pathway_mixes_configuration_posteriors() {
        // Config 0: log p = -1, posterior (1, 0). Config 1: log p = -3, posterior (0, 1).
        let path = MultiplexedPathway::new(vec![constant(&[-1.0, 1.0, 0.0]), constant(&[-3.0, 0.0, 2.0])]).unwrap();
        let clf = SequentialCompoundClassifier::style(path, vec![0, 1], StyleMode::Bayesian).unwrap();
        let mut est = SlidingWindowEstimator::new(4, 2).unwrap();
        let post = clf.classify_style(&mut est, &[1.0]).unwrap();
        let w0 = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((post[0] - w0).abs() < 1e-12);
        assert!((post[0] + post[1] - 1.0).abs() < 1e-12);
    }
}
