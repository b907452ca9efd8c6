//! CSV readers and writers. Every file has a header row; floats are written
//! in Rust's shortest round-trip form.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::classifiers::SampleGroup;
use crate::error::{Error, Result};
use crate::experiments::{Stimulus, TrialRecord};
use crate::learning::TrainingBatch;

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input)
}

fn writer<W: Write>(output: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(output)
}

fn headers<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>> {
    Ok(rdr.headers()?.iter().map(str::to_string).collect())
}

fn column(headers: &[String], name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Data(format!("missing column {name:?}")))
}

/// Indices of `prefix1`, `prefix2`, ... in numeric order; at least one.
fn numbered(headers: &[String], prefix: &str) -> Result<Vec<usize>> {
    let mut found: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix(prefix)?.parse::<usize>().ok().map(|n| (n, i)))
        .collect();
    found.sort_unstable();
    if found.is_empty() {
        return Err(Error::Data(format!("no {prefix}N columns")));
    }
    for (expected, (n, _)) in (1..).zip(&found) {
        if *n != expected {
            return Err(Error::Data(format!("column {prefix}{expected} is missing")));
        }
    }
    Ok(found.into_iter().map(|(_, i)| i).collect())
}

fn float(record: &csv::StringRecord, index: usize, line: u64) -> Result<f64> {
    let field = &record[index];
    let v: f64 = field
        .parse()
        .map_err(|_| Error::Data(format!("line {line}: {field:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Data(format!("line {line}: non-finite value {field:?}")));
    }
    Ok(v)
}

fn index(record: &csv::StringRecord, index: usize, line: u64) -> Result<usize> {
    let field = &record[index];
    field
        .parse()
        .map_err(|_| Error::Data(format!("line {line}: {field:?} is not a class index")))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Task stimuli: `category, true_class, feature_1, ..., feature_d`.
pub fn read_task<R: Read>(input: R) -> Result<Vec<Stimulus>> {
    let mut rdr = reader(input);
    let h = headers(&mut rdr)?;
    let (cat, class, features) = (column(&h, "category")?, column(&h, "true_class")?, numbered(&h, "feature_")?);
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let line = line_of(&rec);
            Ok(Stimulus {
                input: features.iter().map(|&i| float(&rec, i, line)).collect::<Result<_>>()?,
                true_class: index(&rec, class, line)?,
                category: rec[cat].to_string(),
            })
        })
        .collect()
}

pub fn write_task<W: Write>(output: W, stimuli: &[Stimulus]) -> Result<()> {
    let mut w = writer(output);
    let d = stimuli.first().map_or(0, |s| s.input.len());
    let mut header = vec!["category".to_string(), "true_class".to_string()];
    header.extend((1..=d).map(|k| format!("feature_{k}")));
    w.write_record(&header)?;
    for s in stimuli {
        let mut row = vec![s.category.clone(), s.true_class.to_string()];
        row.extend(s.input.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Training pairs: `x_1, ..., x_n, t_1, ..., t_m`.
pub fn read_training<R: Read>(input: R) -> Result<TrainingBatch> {
    let mut rdr = reader(input);
    let h = headers(&mut rdr)?;
    let (xs, ts) = (numbered(&h, "x_")?, numbered(&h, "t_")?);
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        inputs.push(xs.iter().map(|&i| float(&rec, i, line)).collect::<Result<Vec<_>>>()?);
        targets.push(ts.iter().map(|&i| float(&rec, i, line)).collect::<Result<Vec<_>>>()?);
    }
    TrainingBatch::new(inputs, targets)
}

/// Labeled samples: `feature_1, ..., feature_d, label`.
pub fn read_labeled<R: Read>(input: R) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut rdr = reader(input);
    let h = headers(&mut rdr)?;
    let (features, label) = (numbered(&h, "feature_")?, column(&h, "label")?);
    let mut xs = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        xs.push(features.iter().map(|&i| float(&rec, i, line)).collect::<Result<Vec<_>>>()?);
        labels.push(index(&rec, label, line)?);
    }
    Ok((xs, labels))
}

/// Grouped samples: `group_id, feature_1, ..., feature_d, label`. Groups come
/// back in order of first appearance.
pub fn read_groups<R: Read>(input: R) -> Result<Vec<SampleGroup>> {
    let mut rdr = reader(input);
    let h = headers(&mut rdr)?;
    let (gid, features, label) = (column(&h, "group_id")?, numbered(&h, "feature_")?, column(&h, "label")?);
    let mut groups: Vec<SampleGroup> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let x: Vec<f64> = features.iter().map(|&i| float(&rec, i, line)).collect::<Result<_>>()?;
        let y = index(&rec, label, line)?;
        let id = rec[gid].to_string();
        let k = *slot.entry(id.clone()).or_insert_with(|| {
            groups.push(SampleGroup {
                id,
                samples: Vec::new(),
                labels: Vec::new(),
            });
            groups.len() - 1
        });
        groups[k].samples.push(x);
        groups[k].labels.push(y);
    }
    Ok(groups)
}

pub fn write_groups<W: Write>(output: W, groups: &[SampleGroup]) -> Result<()> {
    let mut w = writer(output);
    let d = groups.first().and_then(|g| g.samples.first()).map_or(0, Vec::len);
    let mut header = vec!["group_id".to_string()];
    header.extend((1..=d).map(|k| format!("feature_{k}")));
    header.push("label".into());
    w.write_record(&header)?;
    for g in groups {
        for (x, y) in g.samples.iter().zip(&g.labels) {
            let mut row = vec![g.id.clone()];
            row.extend(x.iter().map(f64::to_string));
            row.push(y.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_training<W: Write>(output: W, batch: &TrainingBatch) -> Result<()> {
    let mut w = writer(output);
    let (n, m) = (batch.inputs()[0].len(), batch.targets()[0].len());
    let header: Vec<String> = (1..=n)
        .map(|k| format!("x_{k}"))
        .chain((1..=m).map(|k| format!("t_{k}")))
        .collect();
    w.write_record(&header)?;
    for (x, t) in batch.inputs().iter().zip(batch.targets()) {
        w.write_record(x.iter().chain(t).map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// `epoch, loss` rows.
pub fn write_loss_curve<W: Write>(output: W, curve: &[(usize, f64)]) -> Result<()> {
    let mut w = writer(output);
    w.write_record(["epoch", "loss"])?;
    for (epoch, loss) in curve {
        w.write_record([epoch.to_string(), loss.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per trial. An unanswered trial has an empty `response`.
pub fn write_results<W: Write>(output: W, records: &[TrialRecord], latency_ms: f64) -> Result<()> {
    let mut w = writer(output);
    w.write_record([
        "stimulus_index",
        "true_class",
        "response",
        "configurations_tried",
        "pseudo_latency_ms",
        "union_activation_fraction",
    ])?;
    for r in records {
        w.write_record([
            r.stimulus_index.to_string(),
            r.true_class.to_string(),
            r.response.map_or_else(String::new, |c| c.to_string()),
            r.configurations_tried.to_string(),
            (r.configurations_tried as f64 * latency_ms).to_string(),
            r.union_fraction().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of already formatted fields under `header`.
pub fn write_rows<W: Write>(output: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(output);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ActivationMask;

    #[test]
    fn task_round_trip() {
        let stimuli = vec![
            Stimulus {
                input: vec![0.1, 0.30000000000000004, 1.0],
                true_class: 2,
                category: "face".into(),
            },
            Stimulus {
                input: vec![-1e-300, 7.0, 1.0],
                true_class: 0,
                category: "scene".into(),
            },
        ];
        let mut buf = Vec::new();
        write_task(&mut buf, &stimuli).unwrap();
        assert_eq!(read_task(buf.as_slice()).unwrap(), stimuli);
    }

    #[test]
    fn groups_keep_first_appearance_order() {
        let text = "group_id,feature_1,feature_2,label\nb,1,2,0\na,3,4,1\nb,5,6,1\n";
        let groups = read_groups(text.as_bytes()).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].id, "b");
        assert_eq!(groups[0].samples, vec![vec![1.0, 2.0], vec![5.0, 6.0]]);
        assert_eq!(groups[0].labels, vec![0, 1]);
        let mut buf = Vec::new();
        write_groups(&mut buf, &groups).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "group_id,feature_1,feature_2,label\nb,1,2,0\nb,5,6,1\na,3,4,1\n");
    }

    #[test]
    fn training_columns_are_ordered_numerically() {
        let text = "t_1,x_2,x_1\n1,20,10\n";
        let batch = read_training(text.as_bytes()).unwrap();
        assert_eq!(batch.inputs(), &[vec![10.0, 20.0]]);
        assert_eq!(batch.targets(), &[vec![1.0]]);
    }

    #[test]
    fn bad_cells_name_the_line() {
        let err = read_labeled("feature_1,label\n1,0\nx,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(read_labeled("feature_2,label\n1,0\n".as_bytes()).is_err());
        assert!(read_labeled("feature_1,label\nNaN,0\n".as_bytes()).is_err());
    }

    #[test]
    fn results_rows() {
        let rec = TrialRecord {
            stimulus_index: 4,
            true_class: 1,
            response: None,
            accepted_by: None,
            configurations_tried: 2,
            masks: vec![ActivationMask(vec![true, false]), ActivationMask(vec![false, false])],
        };
        let mut buf = Vec::new();
        write_results(&mut buf, &[rec], 12.5).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "stimulus_index,true_class,response,configurations_tried,pseudo_latency_ms,union_activation_fraction\n4,1,,2,25,0.5\n"
        );
    }
}
