//! A depth-two decision tree over three configurations. The root splits on
//! the sign of the first feature and routes to a leaf that splits on the sign
//! of the second.

use std::collections::BTreeMap;

use reconfig::classifiers::{SequentialCompoundClassifier, TreeRouting};
use reconfig::pathway::{FeedForwardNetwork, Matrix, MultiplexedPathway, Nonlinearity};

fn sign_of(feature: usize) -> reconfig::Result<FeedForwardNetwork> {
    let mut neg = vec![0.0; 2];
    let mut pos = vec![0.0; 2];
    neg[feature] = -1.0;
    pos[feature] = 1.0;
    FeedForwardNetwork::new(vec![Matrix::from_rows(&[neg, pos])?], vec![Nonlinearity::Identity])
}

fn main() -> reconfig::Result<()> {
    let pathway = MultiplexedPathway::new(vec![sign_of(0)?, sign_of(1)?, sign_of(1)?])?;
    let routing = TreeRouting::new(0, BTreeMap::from([(0, vec![1, 2])]))?;
    let clf = SequentialCompoundClassifier::decision_tree(pathway, routing)?;
    for x in [[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]] {
        let out = clf.classify_decision_tree(&x)?;
        println!("x = {x:?}  path {:?}  class {}", out.path, out.class);
    }
    Ok(())
}
