//! Parameter ladders over one or two config keys.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use wickns_core::ensemble::run_indexed;

use crate::commands::{run, Command, Context, Outcome};
use crate::config::{ExperimentConfig, SweepBlock};
use crate::error::CliError;
use crate::output::{write_run, RunInfo};

pub struct Cell {
    pub values: Vec<toml::Value>,
    pub config: ExperimentConfig,
}

fn show(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Cells in canonical order: the first axis varies slowest.
pub fn cells(cfg: &ExperimentConfig, sweep: &SweepBlock) -> Result<Vec<Cell>, CliError> {
    if sweep.values.is_empty() {
        return Err(CliError::Config("sweep.values is empty".into()));
    }
    let mut base = cfg.clone();
    base.sweep = None;
    base.command = Some(sweep.command.clone());
    let second: Vec<Option<&toml::Value>> = match (&sweep.axis2, &sweep.values2) {
        (Some(_), Some(v)) if !v.is_empty() => v.iter().map(Some).collect(),
        (None, None) => vec![None],
        _ => return Err(CliError::Config("sweep.axis2 and sweep.values2 go together".into())),
    };
    let mut out = Vec::new();
    for v in &sweep.values {
        let first = base.with_value(&sweep.axis, v)?;
        for w in &second {
            let (config, values) = match (w, &sweep.axis2) {
                (Some(w), Some(axis2)) => (first.with_value(axis2, w)?, vec![v.clone(), (*w).clone()]),
                _ => (first.clone(), vec![v.clone()]),
            };
            out.push(Cell { values, config });
        }
    }
    Ok(out)
}

/// Runs every cell, writes each into `cells/cell_<i>` and the aggregate
/// table `sweep.csv`. Returns whether every check in every cell passed.
pub fn run_sweep(cfg: &ExperimentConfig, ctx: &Context, dir: &Path) -> Result<bool, CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    let command = Command::from_name(&sweep.command)?;
    if matches!(command, Command::Sweep | Command::Rerun) {
        return Err(CliError::Config(format!("cannot sweep over {}", sweep.command)));
    }
    let cells = cells(cfg, sweep)?;
    let results: Vec<(Result<Outcome, CliError>, f64)> = run_indexed(cells.len(), ctx.workers, |i| {
        let start = Instant::now();
        let r = run(command, &cells[i].config, ctx);
        (r, start.elapsed().as_secs_f64())
    });
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(crate::output::CONFIG_FILE), cfg.to_toml())?;
    let mut metric_keys = BTreeSet::new();
    let mut check_keys = BTreeSet::new();
    for (r, _) in &results {
        if let Ok(o) = r {
            metric_keys.extend(o.metrics.keys().cloned());
            check_keys.extend(o.checks.keys().cloned());
        }
    }
    let mut header = vec!["cell".to_string(), sweep.axis.clone()];
    if let Some(a) = &sweep.axis2 {
        header.push(a.clone());
    }
    header.push("status".into());
    header.push("error".into());
    header.extend(metric_keys.iter().cloned());
    header.extend(check_keys.iter().map(|k| format!("check_{k}")));
    let mut csv = header.join(",") + "\n";
    let mut all_ok = true;
    for (i, ((r, wall), cell)) in results.iter().zip(&cells).enumerate() {
        let cell_dir = dir.join("cells").join(format!("cell_{i:03}"));
        let info = RunInfo {
            command,
            config: &cell.config,
            wall_time_seconds: *wall,
        };
        write_run(&cell_dir, &info, r.as_ref())?;
        let mut row: Vec<String> = vec![i.to_string()];
        row.extend(cell.values.iter().map(show));
        match r {
            Ok(o) => {
                let ok = o.failure.is_none() && o.checks.values().all(|&c| c);
                all_ok &= ok;
                row.push(if o.failure.is_some() { "failed" } else if ok { "ok" } else { "checks_failed" }.into());
                row.push(o.failure.clone().unwrap_or_default().replace(',', ";"));
                row.extend(metric_keys.iter().map(|k| o.metrics.get(k).map(|v| v.to_string()).unwrap_or_default()));
                row.extend(check_keys.iter().map(|k| o.checks.get(k).map(|v| v.to_string()).unwrap_or_default()));
            }
            Err(e) => {
                all_ok = false;
                row.push("failed".into());
                row.push(e.to_string().replace(',', ";").replace('\n', " "));
                row.extend(std::iter::repeat_n(String::new(), metric_keys.len() + check_keys.len()));
            }
        }
        let _ = writeln!(csv, "{}", row.join(","));
    }
    std::fs::write(dir.join("sweep.csv"), csv)?;
    Ok(all_ok)
}
