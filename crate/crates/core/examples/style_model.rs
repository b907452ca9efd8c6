//! Style-model classification on the shipped grouped samples. Each group was
//! drawn from one of three styles; the sliding window of log-densities learns
//! which style, and the class posterior is the style-weighted mixture.

use reconfig::classifiers::{skip_low_evidence, style_classify, style_group_posterior, SlidingWindowEstimator};
use reconfig::control::argmax;
use reconfig::fixtures::{style_groups, style_model, STYLE_SEED};

fn main() -> reconfig::Result<()> {
    let model = style_model()?;
    let groups = style_groups(STYLE_SEED, 4, 10)?;
    for g in &groups {
        let mut est = SlidingWindowEstimator::new(g.samples.len(), model.component_count())?;
        let mut correct = 0;
        for (x, &label) in g.samples.iter().zip(&g.labels) {
            let posterior = style_classify(&model, &mut est, x)?;
            correct += usize::from(argmax(&posterior) == Some(label));
            skip_low_evidence(&mut est, 20.0);
        }
        let weights = est.weights(model.prior(), model.mode())?;
        let exact = style_group_posterior(&model, g)?;
        println!("{:<12} correct {correct}/{}  window weights {weights:.3?}", g.id, g.samples.len());
        println!("{:<12} group posterior {exact:.3?}  still active {:?}", "", est.active_components());
    }
    Ok(())
}
