//! Aggregation of records over replicates.
//!
//! Quartiles use linear interpolation between order statistics, so the
//! median of an even count is the mean of the middle two values.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::formats::fmt_f64;
use crate::harness::RECORD_COLUMNS;

pub const SUMMARY_COLUMNS: [&str; 13] = [
    "family",
    "scheme_id",
    "term_kind",
    "term_id",
    "n",
    "count",
    "median",
    "q1",
    "q3",
    "iqr",
    "non_converged",
    "param_error_median",
    "monotone",
];

/// A row of the records CSV as read back.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub family: String,
    pub scheme_id: String,
    pub n: usize,
    pub replicate: usize,
    pub term_kind: String,
    pub term_id: String,
    pub sup_error: f64,
    pub param_error: Option<f64>,
    pub fit_status: String,
}

pub fn read_records(origin: &str, text: &str) -> Result<Vec<RecordRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != RECORD_COLUMNS {
        return Err(Error::parse(
            origin,
            1,
            format!("header must be {}", RECORD_COLUMNS.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str, e: &dyn std::fmt::Display| Error::parse(origin, line, format!("{what}: {e}"));
        let param_error = match &rec[7] {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|e| bad("param_error", &e))?),
        };
        rows.push(RecordRow {
            family: rec[0].to_string(),
            scheme_id: rec[1].to_string(),
            n: rec[2].parse().map_err(|e| bad("n", &e))?,
            replicate: rec[3].parse().map_err(|e| bad("replicate", &e))?,
            term_kind: rec[4].to_string(),
            term_id: rec[5].to_string(),
            sup_error: rec[6].parse().map_err(|e| bad("sup_error", &e))?,
            param_error,
            fit_status: rec[8].to_string(),
        });
    }
    Ok(rows)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub non_converged: usize,
    pub param_error_median: Option<f64>,
}

/// All sample sizes of one term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSummary {
    pub family: String,
    pub scheme_id: String,
    pub term_kind: String,
    pub term_id: String,
    /// Ascending in `n`.
    pub rows: Vec<SummaryRow>,
    /// Medians strictly decrease along the whole grid.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Summary {
    /// The records file held no rows.
    Empty,
    Terms(Vec<TermSummary>),
}

impl Summary {
    pub fn terms(&self) -> &[TermSummary] {
        match self {
            Summary::Empty => &[],
            Summary::Terms(t) => t,
        }
    }

    /// Every term is monotone; false when empty.
    pub fn all_monotone(&self) -> bool {
        matches!(self, Summary::Terms(t) if t.iter().all(|s| s.monotone))
    }
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Groups by term in order of first appearance, then by `n`.
pub fn summarize(records: &[RecordRow]) -> Summary {
    if records.is_empty() {
        return Summary::Empty;
    }
    type Key = (String, String, String, String);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: BTreeMap<Key, BTreeMap<usize, Vec<&RecordRow>>> = BTreeMap::new();
    for r in records {
        let key = (
            r.family.clone(),
            r.scheme_id.clone(),
            r.term_kind.clone(),
            r.term_id.clone(),
        );
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            BTreeMap::new()
        });
        entry.entry(r.n).or_default().push(r);
    }
    let terms = order
        .into_iter()
        .map(|key| {
            let by_n = &groups[&key];
            let rows: Vec<SummaryRow> = by_n
                .iter()
                .map(|(&n, rs)| {
                    let mut errs: Vec<f64> = rs.iter().map(|r| r.sup_error).collect();
                    errs.sort_by(f64::total_cmp);
                    let perr: Vec<f64> = rs.iter().filter_map(|r| r.param_error).collect();
                    SummaryRow {
                        n,
                        count: errs.len(),
                        median: quantile(&errs, 0.5),
                        q1: quantile(&errs, 0.25),
                        q3: quantile(&errs, 0.75),
                        non_converged: rs.iter().filter(|r| r.fit_status != "converged").count(),
                        param_error_median: (!perr.is_empty()).then(|| median_of(perr)),
                    }
                })
                .collect();
            let monotone = rows.windows(2).all(|w| w[1].median < w[0].median);
            let (family, scheme_id, term_kind, term_id) = key;
            TermSummary {
                family,
                scheme_id,
                term_kind,
                term_id,
                rows,
                monotone,
            }
        })
        .collect();
    Summary::Terms(terms)
}

pub fn summary_csv(summary: &Summary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS)?;
    for t in summary.terms() {
        for r in &t.rows {
            w.write_record([
                t.family.clone(),
                t.scheme_id.clone(),
                t.term_kind.clone(),
                t.term_id.clone(),
                r.n.to_string(),
                r.count.to_string(),
                fmt_f64(r.median),
                fmt_f64(r.q1),
                fmt_f64(r.q3),
                fmt_f64(r.q3 - r.q1),
                r.non_converged.to_string(),
                r.param_error_median.map(fmt_f64).unwrap_or_default(),
                t.monotone.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

/// Whitespace-separated blocks (`n median q1 q3`), one per term, separated
/// by blank lines and headed by a `# kind term` comment.
pub fn plot_data(summary: &Summary) -> String {
    let mut out = String::new();
    for (i, t) in summary.terms().iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# {} {}", t.term_kind, t.term_id);
        for r in &t.rows {
            let _ = writeln!(out, "{} {} {} {}", r.n, fmt_f64(r.median), fmt_f64(r.q1), fmt_f64(r.q3));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, rep: usize, err: f64) -> RecordRow {
        RecordRow {
            family: "fvbm".into(),
            scheme_id: "pairwise".into(),
            n,
            replicate: rep,
            term_kind: "marginal".into(),
            term_id: "{1,2}".into(),
            sup_error: err,
            param_error: None,
            fit_status: "converged".into(),
        }
    }

    #[test]
    fn single_record_and_pair() {
        let s = summarize(&[row(10, 0, 0.3)]);
        assert_eq!(s.terms()[0].rows[0].median, 0.3);
        let s = summarize(&[row(10, 0, 0.1), row(10, 1, 0.3)]);
        assert!((s.terms()[0].rows[0].median - 0.2).abs() < 1e-15);
    }

    #[test]
    fn monotone_flag() {
        let s = summarize(&[row(10, 0, 0.3), row(100, 0, 0.2), row(1000, 0, 0.1)]);
        assert!(s.all_monotone());
        let s = summarize(&[row(10, 0, 0.3), row(100, 0, 0.2), row(1000, 0, 0.25)]);
        assert!(!s.all_monotone());
    }

    #[test]
    fn empty_input() {
        let text = format!("{}\n", RECORD_COLUMNS.join(","));
        let rows = read_records("r", &text).unwrap();
        assert_eq!(summarize(&rows), Summary::Empty);
        assert!(!Summary::Empty.all_monotone());
    }

    #[test]
    fn quartiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
    }
}
