//! The five control types driving the same four-configuration pathway.
//! Configuration `r` accepts iff input feature `r` is high.

use reconfig::control::{ControlPolicy, Controller, LambdaRule, Readout, TrialStatus};
use reconfig::pathway::{FeedForwardNetwork, GateVector, Matrix, MultiplexedPathway, Nonlinearity};

fn pathway() -> reconfig::Result<MultiplexedPathway> {
    let banks = (0..4)
        .map(|r| {
            let mut reject = vec![0.0; 5];
            reject[r] = -20.0;
            reject[4] = 10.0;
            let mut score = vec![0.0; 5];
            score[r] = 1.0;
            FeedForwardNetwork::new(
                vec![Matrix::from_rows(&[reject, score])?],
                vec![Nonlinearity::LogisticSigmoid],
            )
        })
        .collect::<reconfig::Result<Vec<_>>>()?;
    MultiplexedPathway::new(banks)
}

fn drive(name: &str, policy: &ControlPolicy, path: &MultiplexedPathway, x: &[f64], steps: usize) -> reconfig::Result<()> {
    let mut ctl = Controller::start(policy, x)?;
    let mut visited = Vec::new();
    for _ in 0..steps {
        let gate = ctl.gate().clone();
        visited.push(gate.active().map_or_else(|| format!("{:?}", gate.as_slice()), |r| r.to_string()));
        let out = Readout::RejectThenScores.read(&path.forward(&gate, x)?)?;
        if !matches!(ctl.observe(&out)?.status, TrialStatus::Continue) {
            break;
        }
    }
    println!("{name:<18} {}", visited.join(" -> "));
    Ok(())
}

fn main() -> reconfig::Result<()> {
    let path = pathway()?;
    let x = [0.0, 0.0, 1.0, 0.0, 1.0];
    println!("input accepted only by configuration 2\n");

    drive("fixed(1)", &ControlPolicy::fixed(1, 4)?, &path, &x, 3)?;

    // selector picks the configuration whose feature is largest
    let selector = FeedForwardNetwork::new(
        vec![Matrix::from_rows(&(0..4).map(|r| (0..5).map(|c| f64::from(u8::from(c == r))).collect()).collect::<Vec<_>>())?],
        vec![Nonlinearity::Identity],
    )?;
    drive("hierarchical", &ControlPolicy::hierarchical(selector)?, &path, &x, 2)?;
    drive("cycle(3,1,0,2)", &ControlPolicy::cycle(vec![3, 1, 0, 2])?, &path, &x, 6)?;
    drive("trial(0,1,2,3)", &ControlPolicy::trial(vec![0, 1, 2, 3], 1)?, &path, &x, 10)?;
    drive(
        "lambda recurrent",
        &ControlPolicy::lambda_recurrent(LambdaRule::DecisionList, GateVector::one_hot(0, 4)?)?.with_threshold(0.5)?,
        &path,
        &x,
        6,
    )?;
    Ok(())
}
