//! Priming as reordering: stimuli tagged with a category try that category's
//! configuration first. Congruent primes save time, incongruent ones cost
//! time, and a deadline trades accuracy for speed.

use reconfig::experiments::fixtures::{priming_policy, priming_schedule, shipped_pathway, shipped_task};
use reconfig::experiments::{deadline_sweep, measure_activation_fraction, run_task, summarize, RunOptions};

fn main() -> reconfig::Result<()> {
    let (pathway, task, policy) = (shipped_pathway()?, shipped_task()?, priming_policy()?);
    let opts = RunOptions::default();

    let unprimed = run_task(&pathway, &policy, &task, None, 21, &opts)?;
    let primed = run_task(&pathway, &policy, &task, Some(&priming_schedule()?), 21, &opts)?;
    for (name, recs) in [("unprimed", &unprimed), ("primed", &primed)] {
        let s = summarize(recs);
        let act = measure_activation_fraction(recs);
        println!(
            "{name:<9} mean configurations tried {:.3}  accuracy {:.3}  activation by count {:?}",
            s.mean_configurations_tried, s.accuracy, act.per_count
        );
    }

    for p in deadline_sweep(&pathway, &policy, &task, &[1, 2, 3, 4], 21, &opts)? {
        println!("deadline {}  accuracy {:.3}  mean tried {:.3}", p.deadline, p.accuracy, p.mean_configurations_tried);
    }
    Ok(())
}
