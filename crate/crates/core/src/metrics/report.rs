//! Metric tables per model and their on-disk form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::write_json;
use crate::metrics::{
    ars_overall, ars_task, group_ars, ifp, ifs, ifs_pooled, mean_defined, task_weights, IfsValue, Perspective,
};
use crate::scoring::ScoreRecord;
use crate::task::{Capability, TaskId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub group: String,
    pub records: usize,
    pub ars: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub records: usize,
    pub weight: f64,
    pub ars: f64,
    pub ifs: BTreeMap<Perspective, IfsValue>,
    pub groups: BTreeMap<Perspective, Vec<GroupScore>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub records: usize,
    /// Responses that failed at the transport level (scored as empty).
    pub response_errors: usize,
    pub tasks: BTreeMap<TaskId, TaskMetrics>,
    pub overall_ars: Option<f64>,
    pub ifp: BTreeMap<Capability, Option<f64>>,
    /// Mean of the per-task values for each perspective.
    pub ifs: BTreeMap<Perspective, Option<f64>>,
    pub ifs_avg: Option<f64>,
    pub ifs_pooled: BTreeMap<Perspective, IfsValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dataset_hashes: Vec<String>,
    pub models: Vec<ModelReport>,
}

pub fn model_report(model: &str, records: &[&ScoreRecord]) -> ModelReport {
    let mut by_task: BTreeMap<TaskId, Vec<&ScoreRecord>> = BTreeMap::new();
    for r in records {
        by_task.entry(r.task_id).or_default().push(r);
    }
    let weights = task_weights(records);
    let mut tasks = BTreeMap::new();
    for (task, recs) in &by_task {
        let mut task_ifs = BTreeMap::new();
        let mut groups = BTreeMap::new();
        for p in Perspective::ALL {
            let g = group_ars(recs, p);
            task_ifs.insert(p, ifs(&g.iter().map(|(_, _, a)| *a).collect::<Vec<_>>()));
            groups.insert(
                p,
                g.into_iter()
                    .map(|(k, n, ars)| GroupScore {
                        group: k.label,
                        records: n,
                        ars,
                    })
                    .collect(),
            );
        }
        tasks.insert(
            *task,
            TaskMetrics {
                records: recs.len(),
                weight: weights[task],
                ars: ars_task(recs).expect("task has records"),
                ifs: task_ifs,
                groups,
            },
        );
    }
    let per_task: BTreeMap<TaskId, f64> = tasks.iter().map(|(t, m)| (*t, m.ars)).collect();
    let ifs_by_p: BTreeMap<Perspective, Option<f64>> = Perspective::ALL
        .into_iter()
        .map(|p| (p, mean_defined(tasks.values().map(|m| m.ifs[&p].value))))
        .collect();
    // the average needs all three perspectives
    let ifs_avg = if ifs_by_p.values().all(Option::is_some) {
        mean_defined(ifs_by_p.values().copied())
    } else {
        None
    };
    ModelReport {
        model: model.to_string(),
        records: records.len(),
        response_errors: records.iter().filter(|r| r.response_error).count(),
        overall_ars: ars_overall(&per_task, &weights),
        ifp: Capability::ALL.into_iter().map(|c| (c, ifp(records, c))).collect(),
        ifs: ifs_by_p,
        ifs_avg,
        ifs_pooled: Perspective::ALL.into_iter().map(|p| (p, ifs_pooled(records, p))).collect(),
        tasks,
    }
}

/// Builds one report row per model. Scores computed against different
/// datasets are refused unless `force` is set.
pub fn build_report(records: &[ScoreRecord], force: bool) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::config("no score records to report on"));
    }
    let hashes: BTreeSet<&str> = records.iter().map(|r| r.dataset_hash.as_str()).collect();
    if hashes.len() > 1 && !force {
        return Err(Error::config(format!(
            "scores come from {} different datasets ({}); pass --force to combine them",
            hashes.len(),
            hashes.iter().cloned().collect::<Vec<_>>().join(", ")
        )));
    }
    let mut by_model: BTreeMap<&str, Vec<&ScoreRecord>> = BTreeMap::new();
    for r in records {
        by_model.entry(&r.model).or_default().push(r);
    }
    Ok(MetricsReport {
        dataset_hashes: hashes.into_iter().map(str::to_string).collect(),
        models: by_model.into_iter().map(|(m, recs)| model_report(m, &recs)).collect(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<std::fs::File>> {
    let path = dir.join(name);
    csv::Writer::from_path(&path).map_err(|e| Error::io(&path, std::io::Error::other(e)))
}

fn csv_err(dir: &Path, name: &str) -> impl Fn(csv::Error) -> Error {
    let path = dir.join(name);
    move |e| Error::io(&path, std::io::Error::other(e))
}

/// Writes `report.json`, one CSV per metric family and `summary.md`.
pub fn write_report(report: &MetricsReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("report.json"), report)?;

    let mut w = csv_writer(dir, "ars.csv")?;
    let e = csv_err(dir, "ars.csv");
    w.write_record(["model", "task", "records", "weight", "ars"]).map_err(&e)?;
    for m in &report.models {
        for (t, tm) in &m.tasks {
            w.write_record([&m.model, t.as_str(), &tm.records.to_string(), &tm.weight.to_string(), &format!("{:.6}", tm.ars)])
                .map_err(&e)?;
        }
        w.write_record([&m.model, "overall", &m.records.to_string(), "", &fmt_opt(m.overall_ars)])
            .map_err(&e)?;
    }
    w.flush().map_err(|err| Error::io(dir.join("ars.csv"), err))?;

    let mut w = csv_writer(dir, "ifp.csv")?;
    let e = csv_err(dir, "ifp.csv");
    w.write_record(["model", "capability", "ifp"]).map_err(&e)?;
    for m in &report.models {
        for (c, v) in &m.ifp {
            w.write_record([m.model.as_str(), c.as_str(), &fmt_opt(*v)]).map_err(&e)?;
        }
    }
    w.flush().map_err(|err| Error::io(dir.join("ifp.csv"), err))?;

    let mut w = csv_writer(dir, "ifs.csv")?;
    let e = csv_err(dir, "ifs.csv");
    w.write_record(["model", "task", "perspective", "groups", "ifs", "flag"]).map_err(&e)?;
    for m in &report.models {
        for (t, tm) in &m.tasks {
            for (p, v) in &tm.ifs {
                w.write_record([
                    m.model.as_str(),
                    t.as_str(),
                    p.as_str(),
                    &v.groups.to_string(),
                    &fmt_opt(v.value),
                    v.flag.as_deref().unwrap_or(""),
                ])
                .map_err(&e)?;
            }
        }
    }
    w.flush().map_err(|err| Error::io(dir.join("ifs.csv"), err))?;

    let mut w = csv_writer(dir, "ifs_summary.csv")?;
    let e = csv_err(dir, "ifs_summary.csv");
    w.write_record(["model", "perspective", "ifs_task_mean", "ifs_pooled", "pooled_flag"]).map_err(&e)?;
    for m in &report.models {
        for p in Perspective::ALL {
            let pooled = &m.ifs_pooled[&p];
            w.write_record([
                m.model.as_str(),
                p.as_str(),
                &fmt_opt(m.ifs[&p]),
                &fmt_opt(pooled.value),
                pooled.flag.as_deref().unwrap_or(""),
            ])
            .map_err(&e)?;
        }
        w.write_record([m.model.as_str(), "avg", &fmt_opt(m.ifs_avg), "", ""]).map_err(&e)?;
    }
    w.flush().map_err(|err| Error::io(dir.join("ifs_summary.csv"), err))?;

    let mut w = csv_writer(dir, "groups.csv")?;
    let e = csv_err(dir, "groups.csv");
    w.write_record(["model", "task", "perspective", "group", "records", "ars"]).map_err(&e)?;
    for m in &report.models {
        for (t, tm) in &m.tasks {
            for (p, groups) in &tm.groups {
                for g in groups {
                    w.write_record([
                        m.model.as_str(),
                        t.as_str(),
                        p.as_str(),
                        &g.group,
                        &g.records.to_string(),
                        &format!("{:.6}", g.ars),
                    ])
                    .map_err(&e)?;
                }
            }
        }
    }
    w.flush().map_err(|err| Error::io(dir.join("groups.csv"), err))?;

    let summary = dir.join("summary.md");
    std::fs::write(&summary, summary_markdown(report)).map_err(|e| Error::io(&summary, e))
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into())
}

pub fn summary_markdown(report: &MetricsReport) -> String {
    let tasks: BTreeSet<TaskId> = report.models.iter().flat_map(|m| m.tasks.keys().copied()).collect();
    let mut out = String::from("# Benchmark summary\n\n");
    let _ = writeln!(out, "Dataset: {}\n", report.dataset_hashes.join(", "));

    out.push_str("## Rubric scores\n\n| Model |");
    for t in &tasks {
        let _ = write!(out, " {t} |");
    }
    out.push_str(" Overall |\n|---|");
    out.push_str(&"---|".repeat(tasks.len() + 1));
    out.push('\n');
    for m in &report.models {
        let _ = write!(out, "| {} |", m.model);
        for t in &tasks {
            let _ = write!(out, " {} |", cell(m.tasks.get(t).map(|x| x.ars)));
        }
        let _ = writeln!(out, " {} |", cell(m.overall_ars));
    }

    out.push_str("\n## Capability performance\n\n| Model |");
    for c in Capability::ALL {
        let _ = write!(out, " {c} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(Capability::ALL.len()));
    out.push('\n');
    for m in &report.models {
        let _ = write!(out, "| {} |", m.model);
        for c in Capability::ALL {
            let _ = write!(out, " {} |", cell(m.ifp[&c]));
        }
        out.push('\n');
    }

    out.push_str("\n## Stability (lower is steadier)\n\n| Model | Length | Expression | Variable | Average |\n|---|---|---|---|---|\n");
    for m in &report.models {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            m.model,
            cell(m.ifs[&Perspective::Length]),
            cell(m.ifs[&Perspective::Expression]),
            cell(m.ifs[&Perspective::Variable]),
            cell(m.ifs_avg)
        );
    }
    let errors: usize = report.models.iter().map(|m| m.response_errors).sum();
    if errors > 0 {
        let _ = writeln!(out, "\n{errors} responses failed and were scored as empty.");
    }
    out
}
