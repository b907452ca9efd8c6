//! Training one configuration leaves the others untouched: XOR is learned in
//! configuration 0 while configuration 1 keeps its weights byte for byte.

use reconfig::fixtures::{xor_batch, xor_pathway};
use reconfig::learning::{train_configuration, Loss, TrainSpec};
use reconfig::pathway::GateVector;

fn main() -> reconfig::Result<()> {
    let mut pathway = xor_pathway()?;
    let batch = xor_batch()?;
    let before = pathway.bank_to_json(1)?;

    let report = train_configuration(&mut pathway, 0, &batch, &TrainSpec::new(0.5, 500, Loss::CrossEntropyWithSigmoid))?;
    for (epoch, loss) in report.curve().into_iter().step_by(100) {
        println!("epoch {epoch:>3}  loss {loss:.6}");
    }
    println!("final loss {:.6}", report.final_loss());

    let gate = GateVector::one_hot(0, 2)?;
    for (x, t) in batch.inputs().iter().zip(batch.targets()) {
        println!("{:?} -> {:.3} (target {})", &x[..2], pathway.forward(&gate, x)?[0], t[0]);
    }
    println!("configuration 1 unchanged: {}", pathway.bank_to_json(1)? == before);
    Ok(())
}
