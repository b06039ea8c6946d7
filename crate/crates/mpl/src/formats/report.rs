//! Fit reports: `key value` lines, one `restart` line per restart, the
//! objective trace, then a `[parameters]` section in parameter-file format.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use mpl_core::estimate::{FitReport, FitStatus, FittedModel};

use super::params::{read_params, write_params};
use super::{content_lines, fmt_f64};
use crate::error::{Error, Result};

const PARAMS_MARKER: &str = "[parameters]";

/// `objective` names what was maximized, e.g. `native` or `scheme pairwise`.
pub fn write_report(r: &FitReport, objective: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "family {}", r.family.name());
    let _ = writeln!(out, "objective {objective}");
    let _ = writeln!(out, "status {}", r.status);
    let _ = writeln!(out, "n {}", r.n);
    let _ = writeln!(out, "value {}", fmt_f64(r.objective));
    let _ = writeln!(out, "grad_norm {}", fmt_f64(r.grad_norm));
    let _ = writeln!(out, "iterations {}", r.iterations);
    let _ = writeln!(out, "best_restart {}", r.best_restart);
    let _ = writeln!(out, "near_tie {}", r.near_tie);
    let _ = writeln!(out, "restarts {}", r.restarts.len());
    out.push_str("# restart index status value grad_norm iterations\n");
    for (i, x) in r.restarts.iter().enumerate() {
        let _ = writeln!(
            out,
            "restart {i} {} {} {} {}",
            x.status,
            fmt_f64(x.objective),
            fmt_f64(x.grad_norm),
            x.iterations
        );
    }
    let trace: Vec<String> = r.trace.iter().map(|&v| fmt_f64(v)).collect();
    let _ = writeln!(out, "trace {}\n{}", trace.len(), trace.join(" "));
    out.push_str(PARAMS_MARKER);
    out.push('\n');
    out.push_str(&write_params(&r.model));
    out
}

/// The parts of a report needed to reuse a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub fields: BTreeMap<String, String>,
    pub status: FitStatus,
    pub value: f64,
    pub model: FittedModel,
}

pub fn read_report(origin: &str, text: &str) -> Result<ReportSummary> {
    let Some(split) = text.find(PARAMS_MARKER) else {
        return Err(Error::Invalid(format!("{origin}: missing {PARAMS_MARKER} section")));
    };
    let (head, params) = text.split_at(split);
    let mut fields = BTreeMap::new();
    let mut lines = content_lines(head);
    while let Some((line, body)) = lines.next() {
        let (key, value) = body.split_once(' ').unwrap_or((body, ""));
        match key {
            "restart" => continue,
            "trace" => {
                lines.next();
                continue;
            }
            _ => {}
        }
        if fields.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::parse(origin, line, format!("duplicate key `{key}`")));
        }
    }
    let get = |k: &str| {
        fields
            .get(k)
            .ok_or_else(|| Error::Invalid(format!("{origin}: missing `{k}`")))
    };
    let status = FitStatus::parse(get("status")?).ok_or_else(|| Error::Invalid(format!("{origin}: unknown status")))?;
    let value = get("value")?
        .parse()
        .map_err(|e| Error::Invalid(format!("{origin}: value: {e}")))?;
    // Line numbers in the parameter section count from the marker.
    let model = read_params(origin, &params[PARAMS_MARKER.len()..])?;
    Ok(ReportSummary {
        fields,
        status,
        value,
        model,
    })
}
