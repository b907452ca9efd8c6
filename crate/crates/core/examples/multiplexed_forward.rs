//! One pathway, three weight banks. A one-hot gate runs a single bank exactly
//! as if it were a standalone network; a mixed gate blends the banks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reconfig::pathway::{forward_multiplexed, forward_standalone, GateVector, MultiplexedPathway, Nonlinearity};

fn main() -> reconfig::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let pathway = MultiplexedPathway::random(
        3,
        &[4, 6, 2],
        &[Nonlinearity::Rectifier, Nonlinearity::LogisticSigmoid],
        1.0,
        &mut rng,
    )?;
    let x = [0.3, -0.7, 0.5, 1.0];

    for r in 0..pathway.configuration_count() {
        let gated = forward_multiplexed(&pathway, &GateVector::one_hot(r, 3)?, &x)?;
        let alone = forward_standalone(pathway.bank(r)?, &x)?;
        println!("configuration {r}: gated {gated:?}  standalone {alone:?}  equal {}", gated == alone);
    }

    let mixed = GateVector::new(vec![0.5, 0.25, 0.25])?;
    println!("blend (0.5, 0.25, 0.25): {:?}", pathway.forward(&mixed, &x)?);
    println!("units per configuration run: {}", pathway.unit_count());
    Ok(())
}
