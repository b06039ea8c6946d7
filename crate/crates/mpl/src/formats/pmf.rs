//! PMF tables as CSV: header `x1,...,xq,probability`, one row per state in
//! state-index order.

use mpl_core::{SupportSpec, TabularPmf};

use super::fmt_f64;
use crate::error::{Error, Result};

pub fn write_pmf_csv(f: &TabularPmf) -> Result<String> {
    let spec = f.spec();
    let mut out = String::new();
    for k in 1..=spec.q() {
        out.push_str(&format!("x{k},"));
    }
    out.push_str("probability\n");
    for (i, &p) in f.probs().iter().enumerate() {
        for v in spec.state_at(i as u64)? {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&fmt_f64(p));
        out.push('\n');
    }
    Ok(out)
}

/// Reads a table written by [`write_pmf_csv`]. Each coordinate's value list
/// is taken in order of first appearance, and rows must then be exactly the
/// states in index order.
pub fn read_pmf_csv(origin: &str, text: &str) -> Result<TabularPmf> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::parse(origin, 1, "empty file"));
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let q = cols.len().saturating_sub(1);
    let expected: Vec<String> = (1..=q)
        .map(|k| format!("x{k}"))
        .chain(["probability".to_string()])
        .collect();
    if q == 0 || cols != expected {
        return Err(Error::parse(origin, 1, "header must be x1,...,xq,probability"));
    }
    let mut rows = Vec::new();
    let mut values: Vec<Vec<i64>> = vec![Vec::new(); q];
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != q + 1 {
            return Err(Error::parse(origin, i + 1, format!("expected {} fields", q + 1)));
        }
        let mut state = Vec::with_capacity(q);
        for (k, f) in fields[..q].iter().enumerate() {
            let v: i64 = f
                .parse()
                .map_err(|e| Error::parse(origin, i + 1, format!("x{}: {e}", k + 1)))?;
            if !values[k].contains(&v) {
                values[k].push(v);
            }
            state.push(v);
        }
        let p: f64 = fields[q]
            .parse()
            .map_err(|e| Error::parse(origin, i + 1, format!("probability: {e}")))?;
        rows.push((i + 1, state, p));
    }
    let spec = SupportSpec::new(values).map_err(|e| Error::parse(origin, 1, e.to_string()))?;
    if rows.len() as u64 != spec.num_states() {
        return Err(Error::Invalid(format!(
            "{origin}: {} rows for {} states",
            rows.len(),
            spec.num_states()
        )));
    }
    let mut probs = Vec::with_capacity(rows.len());
    for (i, (line, state, p)) in rows.into_iter().enumerate() {
        if spec.state_index(&state)? != i as u64 {
            return Err(Error::parse(origin, line, "rows are not in state order"));
        }
        probs.push(p);
    }
    Ok(TabularPmf::new(spec, probs)?)
}
