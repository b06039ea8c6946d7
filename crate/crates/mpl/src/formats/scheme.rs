//! Weight scheme files: one `c <subset> <weight>` or `d <partition> <weight>`
//! entry per line, e.g. `c {1,3} 1.0` and `d {1}|{2,3} 0.5`.

use std::fmt::Write as _;

use mpl_core::{PartitionId, SubsetId, SupportSpec, WeightScheme};

use super::{content_lines, fmt_f64};
use crate::error::{Error, Result};

pub fn write_scheme(w: &WeightScheme) -> String {
    let mut out = String::new();
    for (s, c) in w.marginals() {
        let _ = writeln!(out, "c {s} {}", fmt_f64(c));
    }
    for (t, d) in w.conditionals() {
        let _ = writeln!(out, "d {t} {}", fmt_f64(d));
    }
    out
}

/// Parses a scheme over `q` coordinates. Ids naming coordinates beyond `q`,
/// malformed ids and repeated ids are errors carrying the line number.
pub fn read_scheme(origin: &str, text: &str, q: usize) -> Result<WeightScheme> {
    let spec = SupportSpec::binary(q)?;
    let mut w = WeightScheme::new();
    let mut seen = std::collections::BTreeSet::new();
    for (line, body) in content_lines(text) {
        let err = |m: String| Error::parse(origin, line, m);
        let tok: Vec<&str> = body.split_whitespace().collect();
        if tok.len() != 3 {
            return Err(err("expected `c <subset> <weight>` or `d <partition> <weight>`".into()));
        }
        let weight: f64 = tok[2].parse().map_err(|e| err(format!("weight: {e}")))?;
        if !seen.insert((tok[0].to_string(), tok[1].to_string())) {
            return Err(err(format!("repeated id {}", tok[1])));
        }
        let outside = |mask: u64| spec.full_mask() & mask != mask;
        match tok[0] {
            "c" => {
                let s: SubsetId = tok[1].parse().map_err(|e: mpl_core::Error| err(e.to_string()))?;
                if outside(s.mask()) {
                    return Err(err(format!("unknown id {s} for q = {q}")));
                }
                w.set_marginal(s, weight).map_err(|e| err(e.to_string()))?;
            }
            "d" => {
                let t: PartitionId = tok[1].parse().map_err(|e: mpl_core::Error| err(e.to_string()))?;
                if outside(t.union()) {
                    return Err(err(format!("unknown id {t} for q = {q}")));
                }
                w.set_conditional(t, weight).map_err(|e| err(e.to_string()))?;
            }
            other => return Err(err(format!("unknown entry kind `{other}`"))),
        }
    }
    Ok(w)
}
