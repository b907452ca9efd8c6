//! A cycling ensemble: every configuration runs once and class scores are
//! averaged over time, uniformly or with an exponential decay.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reconfig::classifiers::{Averaging, SequentialCompoundClassifier};
use reconfig::pathway::{MultiplexedPathway, Nonlinearity};

fn main() -> reconfig::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pathway = MultiplexedPathway::random(4, &[3, 5, 3], &[Nonlinearity::Rectifier, Nonlinearity::LogisticSigmoid], 1.0, &mut rng)?;
    let x = [0.2, -0.4, 1.0];
    for r in 0..4 {
        println!("configuration {r}: {:?}", pathway.forward(&reconfig::pathway::GateVector::one_hot(r, 4)?, &x)?);
    }
    let clf = SequentialCompoundClassifier::ensemble(pathway, vec![0, 1, 2, 3])?;
    println!("uniform average:      {:?}", clf.classify_ensemble(&x, Averaging::Uniform)?);
    println!("exponential (0.5):    {:?}", clf.classify_ensemble(&x, Averaging::Exponential { decay: 0.5 })?);
    Ok(())
}
