//! Sample CSV files (header `x1,...,xq`) and their metadata sidecars.

use std::fmt::Write as _;

use mpl_core::sample::{SeedSpec, GENERATOR_ID};
use mpl_core::Sample;

use crate::config::KeyValues;
use crate::error::{Error, Result};

pub fn write_sample_csv(s: &Sample) -> String {
    let q = s.q();
    let header: Vec<String> = (1..=q).map(|k| format!("x{k}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for row in s.rows() {
        let cells: Vec<String> = row.iter().map(i64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn read_sample_csv(origin: &str, text: &str) -> Result<Sample> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(Error::parse(origin, 1, "empty file"));
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let q = cols.len();
    if cols.iter().enumerate().any(|(k, c)| *c != format!("x{}", k + 1)) {
        return Err(Error::parse(origin, 1, "header must be x1,...,xq"));
    }
    let mut values = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != q {
            return Err(Error::parse(origin, i + 1, format!("expected {q} fields")));
        }
        for f in fields {
            values.push(f.parse().map_err(|e| Error::parse(origin, i + 1, format!("{e}")))?);
        }
    }
    Ok(Sample::new(q, values)?)
}

/// Provenance of a sample file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMeta {
    pub family: String,
    pub params_sha256: String,
    pub seed: SeedSpec,
    pub generator: String,
    pub method: String,
    pub n: usize,
    pub q: usize,
}

impl SampleMeta {
    pub fn new(family: &str, params_sha256: String, seed: SeedSpec, method: &str, s: &Sample) -> Self {
        Self {
            family: family.to_string(),
            params_sha256,
            seed,
            generator: GENERATOR_ID.to_string(),
            method: method.to_string(),
            n: s.len(),
            q: s.q(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "family = {}", self.family);
        let _ = writeln!(out, "params_sha256 = {}", self.params_sha256);
        let _ = writeln!(out, "seed_master = {}", self.seed.master);
        let _ = writeln!(out, "seed_replicate = {}", self.seed.replicate);
        let _ = writeln!(out, "generator = {}", self.generator);
        let _ = writeln!(out, "method = {}", self.method);
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "q = {}", self.q);
        out
    }

    pub fn parse(kv: &KeyValues) -> Result<Self> {
        Ok(Self {
            family: kv.require("family")?.to_string(),
            params_sha256: kv.require("params_sha256")?.to_string(),
            seed: SeedSpec::new(kv.required("seed_master")?, kv.required("seed_replicate")?),
            generator: kv.require("generator")?.to_string(),
            method: kv.require("method")?.to_string(),
            n: kv.required("n")?,
            q: kv.required("q")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn csv_round_trip() {
        let s = Sample::from_rows(3, &[[0, 1, 1], [-2, 0, 7]]).unwrap();
        let text = write_sample_csv(&s);
        assert_eq!(text, "x1,x2,x3\n0,1,1\n-2,0,7\n");
        assert_eq!(read_sample_csv("t", &text).unwrap(), s);
        assert!(read_sample_csv("t", "x1,x2\n0\n")
            .unwrap_err()
            .to_string()
            .starts_with("t:2:"));
    }

    #[test]
    fn sidecar_round_trip() {
        let s = Sample::from_rows(2, &[[0, 1]]).unwrap();
        let meta = SampleMeta::new("fvbm", "ab".into(), SeedSpec::new(9, 3), "exact", &s);
        let kv = KeyValues::parse("m", Path::new("."), &meta.to_text()).unwrap();
        assert_eq!(SampleMeta::parse(&kv).unwrap(), meta);
    }
}
