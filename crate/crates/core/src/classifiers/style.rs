//! Style models: a hierarchical Bayesian classifier whose group-level
//! parameter takes one of finitely many values, which turns it into a finite
//! mixture. Each component `i` supplies a class posterior `p_i(c|x)` and a
//! marginal density `p_i(x)`; the final posterior is `sum_i lambda_i p_i(c|x)`
//! with `lambda` estimated from how well each component explains the group.
//!
//! All likelihood arithmetic is in log space.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::density::{DiagonalGaussian, Histogram};
use crate::control::argmax;
use crate::error::{Error, Result};

const POSTERIOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StyleMode {
    /// One-hot weights at the most likely component.
    MaximumLikelihood,
    /// Weights proportional to the component posterior.
    #[default]
    Bayesian,
}

/// One mixture component: class priors and class-conditional densities
/// `p_i(x|c)`, all from one density family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StyleComponent {
    Gaussian {
        class_prior: Vec<f64>,
        classes: Vec<DiagonalGaussian>,
    },
    Histogram {
        class_prior: Vec<f64>,
        classes: Vec<Histogram>,
    },
}

/// `log p_i(x)` together with `p_i(c|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentEval {
    pub log_density: f64,
    pub posterior: Vec<f64>,
}

impl StyleComponent {
    pub fn class_prior(&self) -> &[f64] {
        match self {
            StyleComponent::Gaussian { class_prior, .. } | StyleComponent::Histogram { class_prior, .. } => {
                class_prior
            }
        }
    }

    pub fn class_count(&self) -> usize {
        self.class_prior().len()
    }

    fn dims(&self) -> Vec<usize> {
        match self {
            StyleComponent::Gaussian { classes, .. } => classes.iter().map(DiagonalGaussian::dim).collect(),
            StyleComponent::Histogram { classes, .. } => classes.iter().map(Histogram::dim).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let prior = self.class_prior();
        check_simplex(prior, "class prior")?;
        let dims = self.dims();
        if dims.len() != prior.len() {
            return Err(Error::InvalidModel(format!(
                "{} class priors but {} class densities",
                prior.len(),
                dims.len()
            )));
        }
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidModel("class densities differ in dimension".into()));
        }
        match self {
            StyleComponent::Gaussian { classes, .. } => classes.iter().try_for_each(DiagonalGaussian::validate),
            StyleComponent::Histogram { classes, .. } => classes.iter().try_for_each(Histogram::validate),
        }
    }

    pub fn dim(&self) -> usize {
        self.dims()[0]
    }

    /// `log p(x|c)` for every class.
    pub fn class_log_densities(&self, x: &[f64]) -> Vec<f64> {
        match self {
            StyleComponent::Gaussian { classes, .. } => classes.iter().map(|g| g.log_density(x)).collect(),
            StyleComponent::Histogram { classes, .. } => classes.iter().map(|h| h.log_density(x)).collect(),
        }
    }

    /// Marginal and posterior by Bayes' rule. Where `p_i(x) = 0` the
    /// posterior falls back to the class prior.
    pub fn evaluate(&self, x: &[f64]) -> ComponentEval {
        let joint: Vec<f64> = self
            .class_log_densities(x)
            .iter()
            .zip(self.class_prior())
            .map(|(lp, pi)| lp + pi.ln())
            .collect();
        let log_density = log_sum_exp(&joint);
        let posterior = if log_density == f64::NEG_INFINITY {
            self.class_prior().to_vec()
        } else {
            joint.iter().map(|j| (j - log_density).exp()).collect()
        };
        ComponentEval {
            log_density,
            posterior,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StyleModelFile {
    prior: Vec<f64>,
    components: Vec<StyleComponent>,
    #[serde(default)]
    mode: StyleMode,
}

/// Finite mixture of style components with prior `Lambda` over components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StyleModelFile", into = "StyleModelFile")]
pub struct StyleModel {
    components: Vec<StyleComponent>,
    prior: Vec<f64>,
    mode: StyleMode,
}

impl TryFrom<StyleModelFile> for StyleModel {
    type Error = Error;

    fn try_from(f: StyleModelFile) -> Result<Self> {
        StyleModel::new(f.components, f.prior, f.mode)
    }
}

impl From<StyleModel> for StyleModelFile {
    fn from(m: StyleModel) -> Self {
        StyleModelFile {
            prior: m.prior,
            components: m.components,
            mode: m.mode,
        }
    }
}

impl StyleModel {
    pub fn new(components: Vec<StyleComponent>, prior: Vec<f64>, mode: StyleMode) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidModel("no components".into()));
        }
        if prior.len() != components.len() {
            return Err(Error::InvalidModel(format!(
                "{} prior weights for {} components",
                prior.len(),
                components.len()
            )));
        }
        check_simplex(&prior, "component prior")?;
        for c in &components {
            c.validate()?;
        }
        let (classes, dim) = (components[0].class_count(), components[0].dim());
        if components.iter().any(|c| c.class_count() != classes || c.dim() != dim) {
            return Err(Error::InvalidModel("components disagree on classes or dimension".into()));
        }
        Ok(StyleModel {
            components,
            prior,
            mode,
        })
    }

    pub fn with_uniform_prior(components: Vec<StyleComponent>, mode: StyleMode) -> Result<Self> {
        let n = components.len().max(1);
        Self::new(components, vec![1.0 / n as f64; n], mode)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn components(&self) -> &[StyleComponent] {
        &self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn class_count(&self) -> usize {
        self.components[0].class_count()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn mode(&self) -> StyleMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: StyleMode) -> Self {
        self.mode = mode;
        self
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Shape {
                layer: 0,
                expected: self.dim(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("style model input".into()));
        }
        Ok(())
    }
}

fn check_simplex(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() || v.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidModel(format!("{what} has negative or non-finite entries")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > POSTERIOR_TOLERANCE {
        return Err(Error::InvalidModel(format!("{what} sums to {total}")));
    }
    Ok(())
}

/// A group of related samples believed to share one style.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGroup {
    pub id: String,
    pub samples: Vec<Vec<f64>>,
    /// True class per sample when known.
    pub labels: Vec<usize>,
}

impl SampleGroup {
    pub fn new(id: impl Into<String>, samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("empty sample group".into()));
        }
        Ok(SampleGroup {
            id: id.into(),
            samples,
            labels: Vec::new(),
        })
    }
}

/// `log(sum_i exp(v_i))`; `-inf` when every entry is `-inf` or the slice is empty.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalizes log-evidence into component weights: one-hot at the argmax
/// (lowest index on ties) or the softmax.
pub fn weights_from_log_evidence(log_evidence: &[f64], mode: StyleMode) -> Result<Vec<f64>> {
    if log_evidence.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::NonFinite("log-evidence".into()));
    }
    let max = log_evidence.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateEvidence);
    }
    Ok(match mode {
        StyleMode::Bayesian => {
            let scaled: Vec<f64> = log_evidence.iter().map(|v| (v - max).exp()).collect();
            let total: f64 = scaled.iter().sum();
            scaled.into_iter().map(|s| s / total).collect()
        }
        StyleMode::MaximumLikelihood => {
            let best = argmax(log_evidence).expect("nonempty");
            (0..log_evidence.len()).map(|i| if i == best { 1.0 } else { 0.0 }).collect()
        }
    })
}

/// `p(m_g = i | G) ∝ P(m_g = i) prod_j p_i(x_{g,j})`, in log space.
pub fn style_group_posterior(model: &StyleModel, group: &SampleGroup) -> Result<Vec<f64>> {
    if group.samples.is_empty() {
        return Err(Error::Data("empty sample group".into()));
    }
    let mut log_evidence: Vec<f64> = model.prior.iter().map(|p| p.ln()).collect();
    for x in &group.samples {
        model.check_input(x)?;
        for (acc, c) in log_evidence.iter_mut().zip(&model.components) {
            *acc += c.evaluate(x).log_density;
        }
    }
    weights_from_log_evidence(&log_evidence, model.mode)
}

/// `sum_i lambda_i p_i(c|x)`.
pub fn mix_posteriors(weights: &[f64], posteriors: &[Vec<f64>]) -> Vec<f64> {
    let classes = posteriors.first().map_or(0, Vec::len);
    let mut out = vec![0.0; classes];
    for (w, p) in weights.iter().zip(posteriors) {
        if *w == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(p) {
            *o += w * v;
        }
    }
    out
}

/// Per-component log-densities of the last `window` samples. Components
/// dropped by [`skip_low_evidence`] stop accumulating and keep the windowed
/// value they had when they were dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingWindowEstimator {
    window: usize,
    count: usize,
    buffer: VecDeque<Vec<f64>>,
    active: Vec<bool>,
    frozen: Vec<f64>,
}

impl SlidingWindowEstimator {
    pub fn new(window: usize, count: usize) -> Result<Self> {
        if window == 0 || count == 0 {
            return Err(Error::InvalidModel("window and component count must be positive".into()));
        }
        Ok(SlidingWindowEstimator {
            window,
            count,
            buffer: VecDeque::with_capacity(window),
            active: vec![true; count],
            frozen: vec![0.0; count],
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.count
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active.get(i).copied().unwrap_or(false)
    }

    pub fn active_components(&self) -> BTreeSet<usize> {
        (0..self.count).filter(|&i| self.active[i]).collect()
    }

    pub fn reset(&mut self) {
        self.buffer.clear();
        self.active.fill(true);
        self.frozen.fill(0.0);
    }

    /// Pushes one sample's log-densities (entries for inactive components are
    /// ignored), evicts beyond the window and returns the windowed sums.
    pub fn update(&mut self, log_densities: &[f64]) -> Result<Vec<f64>> {
        if log_densities.len() != self.count {
            return Err(Error::Shape {
                layer: 0,
                expected: self.count,
                found: log_densities.len(),
            });
        }
        for (i, v) in log_densities.iter().enumerate() {
            if self.active[i] && (v.is_nan() || *v == f64::INFINITY) {
                return Err(Error::NonFinite(format!("log-density of component {i}")));
            }
        }
        if self.buffer.len() == self.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(log_densities.to_vec());
        Ok(self.windowed())
    }

    /// `sum_{j in window} log p_i(x_j)` per component.
    pub fn windowed(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| {
                if self.active[i] {
                    self.buffer.iter().map(|row| row[i]).sum()
                } else {
                    self.frozen[i]
                }
            })
            .collect()
    }

    /// Component weights from the window and a prior, over active components
    /// only. An empty window yields the prior itself (renormalized).
    pub fn weights(&self, prior: &[f64], mode: StyleMode) -> Result<Vec<f64>> {
        let windowed = self.windowed();
        let log_evidence: Vec<f64> = (0..self.count)
            .map(|i| {
                if self.active[i] {
                    prior[i].ln() + windowed[i]
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        weights_from_log_evidence(&log_evidence, mode)
    }
}

pub fn style_window_update(est: &mut SlidingWindowEstimator, log_densities: &[f64]) -> Result<Vec<f64>> {
    est.update(log_densities)
}

/// Deactivates every active component whose windowed log-likelihood is below
/// the best active one by more than `margin`; returns the components still
/// active.
pub fn skip_low_evidence(est: &mut SlidingWindowEstimator, margin: f64) -> BTreeSet<usize> {
    let windowed = est.windowed();
    let best = (0..est.count)
        .filter(|&i| est.active[i])
        .map(|i| windowed[i])
        .fold(f64::NEG_INFINITY, f64::max);
    if !est.buffer.is_empty() && best > f64::NEG_INFINITY {
        for i in 0..est.count {
            if est.active[i] && windowed[i] < best - margin {
                est.active[i] = false;
                est.frozen[i] = windowed[i];
            }
        }
    }
    est.active_components()
}

/// Pushes the evaluated components into the window and mixes their posteriors.
/// `evals[i]` is `None` for components that were not run.
pub(crate) fn integrate(
    est: &mut SlidingWindowEstimator,
    evals: &[Option<ComponentEval>],
    prior: &[f64],
    mode: StyleMode,
) -> Result<Vec<f64>> {
    let log_densities: Vec<f64> = evals
        .iter()
        .map(|e| e.as_ref().map_or(f64::NEG_INFINITY, |e| e.log_density))
        .collect();
    est.update(&log_densities)?;
    let weights = est.weights(prior, mode)?;
    let classes = evals.iter().flatten().map(|e| e.posterior.len()).next().unwrap_or(0);
    let posteriors: Vec<Vec<f64>> = evals
        .iter()
        .map(|e| e.as_ref().map_or_else(|| vec![0.0; classes], |e| e.posterior.clone()))
        .collect();
    Ok(mix_posteriors(&weights, &posteriors))
}

/// Streaming style classification of one sample: evaluates every active
/// component, updates the window and returns the weighted class posterior.
pub fn style_classify(model: &StyleModel, est: &mut SlidingWindowEstimator, x: &[f64]) -> Result<Vec<f64>> {
    model.check_input(x)?;
    if est.component_count() != model.component_count() {
        return Err(Error::InvalidModel(format!(
            "estimator tracks {} components, model has {}",
            est.component_count(),
            model.component_count()
        )));
    }
    let evals: Vec<Option<ComponentEval>> = model
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| est.is_active(i).then(|| c.evaluate(x)))
        .collect();
    integrate(est, &evals, &model.prior, model.mode)
}
