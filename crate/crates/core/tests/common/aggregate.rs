//! Recomputes a report's aggregates straight from the files in an output
//! directory, sharing no code with the harness: pegs are counted in the
//! goal XML text and completion from the `peg_inserted` lines of each trace.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct Recomputed {
    /// goal id -> (mean final completion %, mean total time s)
    pub goals: BTreeMap<String, (f64, f64)>,
    pub mean_success_pct: f64,
    pub mean_time_s: f64,
}

fn required_pegs(xml: &str) -> usize {
    xml.matches("requires_peg=\"true\"").count()
}

pub fn recompute(dir: &Path) -> Recomputed {
    let mut trials: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut names: Vec<_> = std::fs::read_dir(dir.join("traces")).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    for path in names {
        let stem = path.file_stem().unwrap().to_str().unwrap();
        let (goal, _) = stem.rsplit_once("-r").unwrap();
        let xml = std::fs::read_to_string(dir.join("goals").join(format!("{goal}.xml"))).unwrap();
        let pegs = required_pegs(&xml);
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        let inserted = lines.iter().filter(|v| v["kind"] == "peg_inserted").count();
        let pct = if pegs == 0 { 100.0 } else { inserted as f64 / pegs as f64 * 100.0 };
        let end = lines.last().unwrap()["t_s"].as_f64().unwrap();
        trials.entry(goal.to_owned()).or_default().push((pct, end));
    }
    let goals: BTreeMap<String, (f64, f64)> = trials
        .into_iter()
        .map(|(g, ts)| {
            let n = ts.len() as f64;
            (g, (ts.iter().map(|t| t.0).sum::<f64>() / n, ts.iter().map(|t| t.1).sum::<f64>() / n))
        })
        .collect();
    let n = goals.len() as f64;
    Recomputed {
        mean_success_pct: goals.values().map(|g| g.0).sum::<f64>() / n,
        mean_time_s: goals.values().map(|g| g.1).sum::<f64>() / n,
        goals,
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Compares the recomputation with `report.json` and `summary.csv`.
pub fn check_against_report(dir: &Path) -> Result<Recomputed, String> {
    let r = recompute(dir);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let num = |v: &Value| v.as_f64().unwrap();
    if !close(num(&report["summary"]["mean_success_pct"]), r.mean_success_pct)
        || !close(num(&report["summary"]["mean_time_s"]), r.mean_time_s)
    {
        return Err(format!("report summary {} differs from recomputed {r:?}", report["summary"]));
    }
    for g in report["goals"].as_array().unwrap() {
        let id = g["goal_id"].as_str().unwrap();
        let &(s, t) = r.goals.get(id).ok_or(format!("no traces for {id}"))?;
        if !close(num(&g["mean_success_pct"]), s) || !close(num(&g["mean_time_s"]), t) {
            return Err(format!("goal {id}: report ({}, {}) vs recomputed ({s}, {t})", g["mean_success_pct"], g["mean_time_s"]));
        }
    }
    let csv = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    if rows.len() != r.goals.len() + 1 {
        return Err(format!("summary.csv has {} rows for {} goals", rows.len(), r.goals.len()));
    }
    for row in &rows {
        let (s, t) = if row[0] == "all" { (r.mean_success_pct, r.mean_time_s) } else { r.goals[row[0]] };
        let (cs, ct): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
        if !close(cs, s) || !close(ct, t) {
            return Err(format!("summary.csv row {} is ({cs}, {ct}), recomputed ({s}, {t})", row[0]));
        }
    }
    Ok(r)
}
