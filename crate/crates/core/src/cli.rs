//! `reconfig validate|run|train --config <file>`.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on an invalid config.
//! Outputs are computed in memory first and written afterwards; if anything
//! fails, files written so far are removed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use serde::Serialize;

use crate::classifiers::{skip_low_evidence, style_classify, Combiner, SlidingWindowEstimator};
use crate::config::{self, Diagnostic, Resolved};
use crate::control::argmax;
use crate::data;
use crate::error::{Error, Result};
use crate::experiments::{
    deadline_sweep, measure_activation_fraction, run_task, summarize, ActivationReport, DeadlinePoint, TrialRecord,
};
use crate::learning::train_configuration;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "reconfig", version, about = "Multiplexed feed-forward networks and sequential compound classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a config file and everything it references.
    Validate(CommonArgs),
    /// Run the experiment, classifier and style sections of a config.
    Run(CommonArgs),
    /// Train the configurations listed in the training section.
    Train(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("RECONFIG_LOG", "error");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Validate(args) => cmd_validate(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Train(args) => cmd_train(&args),
    }
}

fn report_invalid(path: &Path, diags: &[Diagnostic]) -> i32 {
    for d in diags {
        eprintln!("{}: {d}", path.display());
    }
    EXIT_INVALID
}

fn load(args: &CommonArgs) -> std::result::Result<Resolved, i32> {
    let mut resolved = config::load(&args.config, args.seed).map_err(|d| report_invalid(&args.config, &d))?;
    if let Some(dir) = &args.out_dir {
        resolved.output_dir = dir.clone();
    }
    Ok(resolved)
}

pub fn cmd_validate(args: &CommonArgs) -> i32 {
    match load(args) {
        Ok(r) => {
            let sections: Vec<&str> = [
                ("experiment", r.experiment.is_some()),
                ("classifier", r.classifier.is_some()),
                ("style", r.style.is_some()),
                ("training", r.training.is_some()),
            ]
            .into_iter()
            .filter_map(|(name, on)| on.then_some(name))
            .collect();
            println!("{}: ok ({})", args.config.display(), sections.join(", "));
            EXIT_OK
        }
        Err(code) => code,
    }
}

/// Files to write, in order, relative to the output directory.
type Outputs = Vec<(PathBuf, Vec<u8>)>;

fn write_all(dir: &Path, outputs: &Outputs) -> Result<()> {
    let created_dir = !dir.exists();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, bytes) in outputs {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
            return Err(e.into());
        }
        debug!("wrote {}", path.display());
        written.push(path);
    }
    Ok(())
}

fn finish(dir: &Path, outputs: Result<Outputs>) -> i32 {
    match outputs.and_then(|o| write_all(dir, &o)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

#[derive(Debug, Serialize)]
struct ConditionReport {
    trials: usize,
    accuracy: f64,
    no_answer: usize,
    mean_configurations_tried: f64,
    mean_pseudo_latency_ms: f64,
    activation: ActivationReport,
}

fn condition(records: &[TrialRecord], latency_ms: f64) -> ConditionReport {
    let s = summarize(records);
    ConditionReport {
        trials: s.trials,
        accuracy: s.accuracy,
        no_answer: records.iter().filter(|r| r.response.is_none()).count(),
        mean_configurations_tried: s.mean_configurations_tried,
        mean_pseudo_latency_ms: s.mean_configurations_tried * latency_ms,
        activation: measure_activation_fraction(records),
    }
}

#[derive(Debug, Serialize)]
struct Metadata {
    seed: u64,
    config: String,
    version: &'static str,
}

#[derive(Debug, Serialize)]
struct ClassifierReport {
    combiner: &'static str,
    samples: usize,
    accuracy: f64,
    mean_configurations_used: f64,
}

#[derive(Debug, Serialize)]
struct StyleReport {
    groups: usize,
    samples: usize,
    accuracy: f64,
    mean_active_components: f64,
}

#[derive(Debug, Serialize)]
struct Summary {
    metadata: Metadata,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    conditions: BTreeMap<String, ConditionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    deadlines: Vec<DeadlinePoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    classifier: Option<ClassifierReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    style: Option<StyleReport>,
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn run_outputs(r: &Resolved, config_name: String) -> Result<Outputs> {
    let mut outputs = Outputs::new();
    let mut summary = Summary {
        metadata: Metadata {
            seed: r.seed,
            config: config_name,
            version: env!("CARGO_PKG_VERSION"),
        },
        conditions: BTreeMap::new(),
        deadlines: Vec::new(),
        classifier: None,
        style: None,
    };

    if let (Some(exp), Some(pathway), Some(policy)) = (&r.experiment, &r.pathway, &r.policy) {
        let mut conditions = vec![("unprimed", None)];
        if let Some(p) = &exp.priming {
            conditions.push(("primed", Some(p)));
        }
        for (name, priming) in conditions {
            let records = run_task(pathway, policy, &exp.task, priming, r.seed, &exp.options)?;
            let report = condition(&records, exp.latency_ms);
            info!(
                "{name}: mean configurations tried {}, accuracy {}",
                report.mean_configurations_tried, report.accuracy
            );
            outputs.push((
                PathBuf::from(format!("results_{name}.csv")),
                csv_bytes(|b| data::write_results(b, &records, exp.latency_ms))?,
            ));
            summary.conditions.insert(name.to_string(), report);
        }
        if !exp.deadlines.is_empty() {
            summary.deadlines = deadline_sweep(pathway, policy, &exp.task, &exp.deadlines, r.seed, &exp.options)?;
            let rows: Vec<Vec<String>> = summary
                .deadlines
                .iter()
                .map(|d| vec![d.deadline.to_string(), d.accuracy.to_string(), d.mean_configurations_tried.to_string()])
                .collect();
            outputs.push((
                PathBuf::from("deadlines.csv"),
                csv_bytes(|b| data::write_rows(b, &["deadline", "accuracy", "mean_configurations_tried"], &rows))?,
            ));
        }
    }

    if let Some(c) = &r.classifier {
        let clf = &c.classifier;
        let mut rows = Vec::new();
        let (mut correct, mut used) = (0usize, 0usize);
        let combiner = match clf.combiner() {
            Combiner::FirstAccept => "decision_list",
            Combiner::TreeRoute(_) => "decision_tree",
            _ => "ensemble",
        };
        for (i, (x, &label)) in c.inputs.iter().zip(&c.labels).enumerate() {
            let (prediction, count, detail) = match clf.combiner() {
                Combiner::FirstAccept => {
                    let o = clf.classify_decision_list(x)?;
                    (o.class, o.configurations_tried, String::new())
                }
                Combiner::TreeRoute(_) => {
                    let o = clf.classify_decision_tree(x)?;
                    let path: Vec<String> = o.path.iter().map(usize::to_string).collect();
                    (Some(o.class), o.path.len(), path.join(" "))
                }
                _ => {
                    let scores = clf.classify_ensemble(x, c.averaging)?;
                    let detail: Vec<String> = scores.iter().map(f64::to_string).collect();
                    (argmax(&scores), clf.pathway().configuration_count(), detail.join(" "))
                }
            };
            correct += usize::from(prediction == Some(label));
            used += count;
            rows.push(vec![
                i.to_string(),
                label.to_string(),
                prediction.map_or_else(String::new, |p| p.to_string()),
                count.to_string(),
                detail,
            ]);
        }
        let n = c.inputs.len().max(1) as f64;
        summary.classifier = Some(ClassifierReport {
            combiner,
            samples: c.inputs.len(),
            accuracy: correct as f64 / n,
            mean_configurations_used: used as f64 / n,
        });
        outputs.push((
            PathBuf::from("classifier_results.csv"),
            csv_bytes(|b| {
                data::write_rows(
                    b,
                    &["sample_index", "label", "prediction", "configurations_used", "detail"],
                    &rows,
                )
            })?,
        ));
    }

    if let Some(s) = &r.style {
        let mut rows = Vec::new();
        let (mut correct, mut active, mut samples) = (0usize, 0usize, 0usize);
        for g in &s.groups {
            let mut est = SlidingWindowEstimator::new(s.window, s.model.component_count())?;
            for (k, (x, &label)) in g.samples.iter().zip(&g.labels).enumerate() {
                let live = est.active_components().len();
                let posterior = style_classify(&s.model, &mut est, x)?;
                if let Some(margin) = s.skip_margin {
                    skip_low_evidence(&mut est, margin);
                }
                let prediction = argmax(&posterior).ok_or(Error::DegenerateEvidence)?;
                correct += usize::from(prediction == label);
                active += live;
                samples += 1;
                let mut row = vec![g.id.clone(), k.to_string(), label.to_string(), prediction.to_string(), live.to_string()];
                row.extend(posterior.iter().map(f64::to_string));
                rows.push(row);
            }
        }
        let mut header = vec!["group_id", "sample_index", "label", "prediction", "active_components"];
        let names: Vec<String> = (0..s.model.class_count()).map(|c| format!("posterior_{c}")).collect();
        header.extend(names.iter().map(String::as_str));
        summary.style = Some(StyleReport {
            groups: s.groups.len(),
            samples,
            accuracy: correct as f64 / samples.max(1) as f64,
            mean_active_components: active as f64 / samples.max(1) as f64,
        });
        outputs.push((PathBuf::from("style_results.csv"), csv_bytes(|b| data::write_rows(b, &header, &rows))?));
    }

    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    outputs.push((PathBuf::from("summary.json"), json.into_bytes()));
    Ok(outputs)
}

fn config_name(path: &Path) -> String {
    path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
}

pub fn cmd_run(args: &CommonArgs) -> i32 {
    let r = match load(args) {
        Ok(r) => r,
        Err(code) => return code,
    };
    if r.experiment.is_none() && r.classifier.is_none() && r.style.is_none() {
        return report_invalid(
            &args.config,
            &[Diagnostic {
                field: "<root>".into(),
                message: "`run` needs an experiment, classifier or style section".into(),
            }],
        );
    }
    info!("running {} with seed {}", args.config.display(), r.seed);
    finish(&r.output_dir, run_outputs(&r, config_name(&args.config)))
}

fn train_outputs(r: &Resolved) -> Result<Outputs> {
    let training = r.training.as_ref().expect("checked by caller");
    let mut pathway = r.pathway.clone().expect("training requires a pathway");
    let mut outputs = Outputs::new();
    for (i, job) in training.jobs.iter().enumerate() {
        let report = train_configuration(&mut pathway, job.configuration, &training.batch, &job.spec)?;
        println!(
            "job {i}: configuration {} loss {} -> {}",
            job.configuration,
            report.initial_loss,
            report.final_loss()
        );
        outputs.push((
            PathBuf::from(format!("loss_job{i}_config{}.csv", job.configuration)),
            csv_bytes(|b| data::write_loss_curve(b, &report.curve()))?,
        ));
    }
    outputs.insert(0, (training.output.clone(), pathway.to_json()?.into_bytes()));
    Ok(outputs)
}

pub fn cmd_train(args: &CommonArgs) -> i32 {
    let r = match load(args) {
        Ok(r) => r,
        Err(code) => return code,
    };
    if r.training.is_none() {
        return report_invalid(
            &args.config,
            &[Diagnostic {
                field: "training".into(),
                message: "`train` needs a training section".into(),
            }],
        );
    }
    finish(&r.output_dir, train_outputs(&r))
}
