//! Verification reports: JSON, CSV bundles, timing sidecars and validation.

use std::path::{Path, PathBuf};

use ricci_lab_core::check::{CheckResult, ContextValue, SeriesRow};
use serde_json::{json, Map, Value};

use crate::config::{ReportFormat, ScenarioConfig};
use crate::error::{io_error, json_error, AppError, Result};
use crate::json::{float, fmt_f64, to_string, value_f64};
use crate::parallel;
use crate::scenario::{CheckOutcome, ScenarioRun};
use crate::spacefile::{write_text, SCHEMA};

pub const SERIES_COLUMNS: [&str; 5] = ["t", "w2", "entropy", "fisher", "slack"];

/// Fingerprint of the build that produced a report. Only fields that are
/// fixed for a given binary appear, so reruns stay byte-identical.
pub fn environment() -> Value {
    json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "os": std::env::consts::OS,
        "arch": std::env::consts::ARCH,
        "family": std::env::consts::FAMILY,
        "pointer_width": usize::BITS,
        "float_format": "{:.16e}",
    })
}

fn context_value(v: &ContextValue) -> Value {
    match v {
        ContextValue::Number(x) => float(*x),
        ContextValue::Integer(i) => json!(i),
        ContextValue::Text(s) => json!(s),
        ContextValue::Flag(b) => json!(b),
    }
}

fn series_value(series: &[SeriesRow]) -> Value {
    let rows: Vec<Value> = series
        .iter()
        .map(|r| Value::Array([r.t, r.w2, r.entropy, r.fisher, r.slack].iter().map(|&x| float(x)).collect()))
        .collect();
    json!({"columns": SERIES_COLUMNS, "rows": rows})
}

pub fn result_value(r: &CheckResult) -> Value {
    let context: Map<String, Value> = r.context.iter().map(|(k, v)| (k.clone(), context_value(v))).collect();
    json!({
        "name": r.name,
        "anchor": r.anchor,
        "measured_slack": float(r.measured_slack),
        "tolerance": float(r.tolerance),
        "pass": r.pass,
        "context": context,
        "series": series_value(&r.series),
    })
}

fn outcome_value(o: &CheckOutcome) -> Value {
    let mut v = match &o.result {
        Ok(r) => result_value(r),
        Err(e) => json!({"error": e}),
    };
    v["index"] = json!(o.index);
    v["check"] = json!(o.spec.check.name());
    v["status"] = json!(o.status());
    v["seed"] = json!(o.seed);
    v["spec"] = serde_json::to_value(&o.spec).expect("check specs serialize");
    v
}

pub fn summary(run: &ScenarioRun) -> Value {
    let count = |s: &str| run.outcomes.iter().filter(|o| o.status() == s).count();
    let code = run.exit_code();
    json!({
        "checks": run.outcomes.len(),
        "passed": count("pass"),
        "failed": count("fail"),
        "errors": count("error"),
        "warnings": count("warn"),
        "status": (["pass", "fail", "error"][code as usize]),
        "exit_code": code,
    })
}

pub fn report_value(run: &ScenarioRun) -> Value {
    json!({
        "schema": SCHEMA,
        "config": serde_json::to_value(&run.config).expect("configs serialize"),
        "environment": environment(),
        "summary": summary(run),
        "checks": run.outcomes.iter().map(outcome_value).collect::<Vec<_>>(),
    })
}

pub fn report_string(run: &ScenarioRun) -> String {
    to_string(&report_value(run))
}

pub fn timings_value(run: &ScenarioRun) -> Value {
    let checks: Vec<Value> = run
        .outcomes
        .iter()
        .map(|o| json!({"index": o.index, "check": o.spec.check.name(), "seconds": float(o.elapsed.as_secs_f64())}))
        .collect();
    let total: f64 = run.outcomes.iter().map(|o| o.elapsed.as_secs_f64()).sum();
    json!({"pool_threads": parallel::pool_size(), "check_seconds_total": float(total), "checks": checks})
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn checks_csv(run: &ScenarioRun) -> String {
    let mut out = String::from("index,check,name,status,measured_slack,tolerance,seed,anchor,error\n");
    for o in &run.outcomes {
        let (name, slack, tol, anchor, err) = match &o.result {
            Ok(r) => (r.name.clone(), fmt_f64(r.measured_slack), fmt_f64(r.tolerance), r.anchor.clone(), String::new()),
            Err(e) => (o.spec.check.name().to_string(), String::new(), String::new(), String::new(), e.clone()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            o.index,
            o.spec.check.name(),
            csv_field(&name),
            o.status(),
            slack,
            tol,
            o.seed,
            csv_field(&anchor),
            csv_field(&err)
        ));
    }
    out
}

pub fn series_csv(series: &[SeriesRow]) -> String {
    let mut out = SERIES_COLUMNS.join(",");
    out.push('\n');
    for r in series {
        let cells: Vec<String> = [r.t, r.w2, r.entropy, r.fisher, r.slack].iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Files written for one report, timing sidecar included.
#[derive(Clone, Debug, PartialEq)]
pub struct Emitted {
    pub files: Vec<PathBuf>,
    pub timings: PathBuf,
}

/// Writes the report. `json` writes `path` plus `path.timings.json`; a
/// `csv-bundle` writes a directory holding `manifest.json`, `report.json`,
/// `checks.csv`, one series CSV per check with trajectories, and `timings.json`.
pub fn emit_report(run: &ScenarioRun, format: ReportFormat, path: &Path) -> Result<Emitted> {
    let timings_text = to_string(&timings_value(run));
    match format {
        ReportFormat::Json => {
            write_text(path, &report_string(run))?;
            let mut sidecar = path.as_os_str().to_owned();
            sidecar.push(".timings.json");
            let timings = PathBuf::from(sidecar);
            write_text(&timings, &timings_text)?;
            Ok(Emitted { files: vec![path.to_path_buf()], timings })
        }
        ReportFormat::CsvBundle => {
            std::fs::create_dir_all(path).map_err(io_error(path))?;
            let mut files = Vec::new();
            let mut series_entries = Vec::new();
            for o in &run.outcomes {
                if let Ok(r) = &o.result {
                    if !r.series.is_empty() {
                        let rel = format!("series/{:03}_{}.csv", o.index, o.spec.check.name());
                        let file = path.join(&rel);
                        write_text(&file, &series_csv(&r.series))?;
                        files.push(file);
                        series_entries.push(json!({"index": o.index, "check": o.spec.check.name(), "file": rel}));
                    }
                }
            }
            let report = path.join("report.json");
            write_text(&report, &report_string(run))?;
            let checks = path.join("checks.csv");
            write_text(&checks, &checks_csv(run))?;
            let manifest = json!({
                "schema": SCHEMA,
                "report": "report.json",
                "checks": "checks.csv",
                "series": series_entries,
                "summary": summary(run),
            });
            let manifest_path = path.join("manifest.json");
            write_text(&manifest_path, &to_string(&manifest))?;
            files.extend([report, checks, manifest_path]);
            let timings = path.join("timings.json");
            write_text(&timings, &timings_text)?;
            files.sort();
            Ok(Emitted { files, timings })
        }
    }
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    serde_json::from_str(&text).map_err(json_error(path.display().to_string()))
}

/// Structural validation of a JSON report. Returns every problem found.
pub fn validate_report(v: &Value) -> Vec<String> {
    let mut problems = Vec::new();
    let mut bad = |msg: String| problems.push(msg);
    if v.get("schema").and_then(Value::as_str) != Some(SCHEMA) {
        bad(format!("schema must be \"{SCHEMA}\""));
    }
    match v.get("config") {
        None => bad("missing config echo".into()),
        Some(c) => {
            if let Err(e) = serde_json::from_value::<ScenarioConfig>(c.clone()) {
                bad(format!("config echo does not parse: {e}"));
            }
        }
    }
    if !v.get("environment").is_some_and(Value::is_object) {
        bad("missing environment fingerprint".into());
    }
    let Some(checks) = v.get("checks").and_then(Value::as_array) else {
        bad("missing check list".into());
        return problems;
    };
    let mut counts = [0usize; 4];
    for (i, c) in checks.iter().enumerate() {
        let status = c.get("status").and_then(Value::as_str).unwrap_or("");
        if c.get("index").and_then(Value::as_u64) != Some(i as u64) {
            bad(format!("check {i}: index out of order"));
        }
        if c.get("check").and_then(Value::as_str).is_none() || c.get("spec").is_none() {
            bad(format!("check {i}: missing kind or spec"));
        }
        match status {
            "pass" | "fail" | "warn" => {
                counts[match status {
                    "pass" => 0,
                    "fail" => 1,
                    _ => 3,
                }] += 1;
                if !c.get("anchor").and_then(Value::as_str).is_some_and(|a| !a.is_empty()) {
                    bad(format!("check {i}: missing anchor"));
                }
                let slack = c.get("measured_slack").and_then(value_f64);
                let tol = c.get("tolerance").and_then(value_f64);
                let pass = c.get("pass").and_then(Value::as_bool);
                match (slack, tol, pass) {
                    (Some(s), Some(t), Some(p)) => {
                        let diagnostic = c.get("context").and_then(|x| x.get("diagnostic")) == Some(&Value::Bool(true));
                        if p != (s <= t) || p != (status == "pass") || (status == "warn" && !diagnostic) {
                            bad(format!("check {i}: pass flag inconsistent with slack and tolerance"));
                        }
                    }
                    _ => bad(format!("check {i}: missing slack, tolerance or pass flag")),
                }
                if !c.get("context").is_some_and(Value::is_object) {
                    bad(format!("check {i}: missing context"));
                }
                let rows_ok =
                    c.get("series").and_then(|s| s.get("rows")).and_then(Value::as_array).is_some_and(|rows| {
                        rows.iter().all(|r| r.as_array().is_some_and(|r| r.len() == SERIES_COLUMNS.len()))
                    });
                if !rows_ok {
                    bad(format!("check {i}: malformed series"));
                }
            }
            "error" => {
                counts[2] += 1;
                if c.get("error").and_then(Value::as_str).is_none() {
                    bad(format!("check {i}: error entry without message"));
                }
            }
            other => bad(format!("check {i}: unknown status `{other}`")),
        }
    }
    let s = v.get("summary");
    let get = |k: &str| s.and_then(|s| s.get(k)).and_then(Value::as_u64).map(|x| x as usize);
    if get("checks") != Some(checks.len())
        || get("passed") != Some(counts[0])
        || get("failed") != Some(counts[1])
        || get("errors") != Some(counts[2])
        || get("warnings") != Some(counts[3])
    {
        bad("summary disagrees with the check list".into());
    }
    problems
}

/// Reads `report.json` or a bundle directory and validates it; bundles also
/// need every file named by the manifest.
pub fn validate_path(path: &Path) -> Result<Vec<String>> {
    if path.is_dir() {
        let manifest = read_json(&path.join("manifest.json"))?;
        let mut problems = Vec::new();
        for key in ["report", "checks"] {
            match manifest.get(key).and_then(Value::as_str) {
                Some(f) if path.join(f).is_file() => {}
                _ => problems.push(format!("manifest entry `{key}` missing or not a file")),
            }
        }
        for entry in manifest.get("series").and_then(Value::as_array).into_iter().flatten() {
            match entry.get("file").and_then(Value::as_str) {
                Some(f) if path.join(f).is_file() => {}
                _ => problems.push(format!("series file missing for {entry}")),
            }
        }
        let report = manifest
            .get("report")
            .and_then(Value::as_str)
            .ok_or_else(|| AppError::Format("manifest names no report".into()))?;
        problems.extend(validate_report(&read_json(&path.join(report))?));
        Ok(problems)
    } else {
        Ok(validate_report(&read_json(path)?))
    }
}

/// Re-runs a report from its configuration echo.
pub fn config_of_report(v: &Value) -> Result<ScenarioConfig> {
    let c = v.get("config").ok_or_else(|| AppError::Format("report has no config echo".into()))?;
    serde_json::from_value(c.clone()).map_err(json_error("config echo"))
}
