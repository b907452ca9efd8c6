//! A decision list on the shipped priming pathway: configurations are tried
//! in order until one accepts, and the number tried is the response time.

use reconfig::classifiers::SequentialCompoundClassifier;
use reconfig::experiments::fixtures::{shipped_pathway, shipped_task};

fn main() -> reconfig::Result<()> {
    let clf = SequentialCompoundClassifier::decision_list(shipped_pathway()?, vec![0, 1, 2, 3], 1)?;
    let task = shipped_task()?;
    let mut histogram = [0usize; 5];
    for s in task.stimuli().iter().take(6) {
        let out = clf.classify_decision_list(&s.input)?;
        println!(
            "true class {}  answer {:?}  configurations tried {}",
            s.true_class, out.class, out.configurations_tried
        );
    }
    for s in task.stimuli() {
        histogram[clf.classify_decision_list(&s.input)?.configurations_tried] += 1;
    }
    println!("\nconfigurations tried over {} stimuli: {:?}", task.len(), &histogram[1..]);

    // moving a configuration earlier in the list makes its stimuli faster
    let reordered = SequentialCompoundClassifier::decision_list(shipped_pathway()?, vec![2, 0, 1, 3], 1)?;
    let x = &task.stimuli().iter().find(|s| s.true_class == 2).expect("class 2 stimulus").input;
    println!(
        "class-2 stimulus: {} tries in order (0,1,2,3), {} in order (2,0,1,3)",
        clf.classify_decision_list(x)?.configurations_tried,
        reordered.classify_decision_list(x)?.configurations_tried
    );
    Ok(())
}
