//! Parameter files.
//!
//! A header of `key value` lines followed by shaped blocks. A block line
//! `name rows cols` is followed by `rows` lines of `cols` numbers; a vector
//! block `name len` is followed by one line of `len` numbers. Numbers are
//! written with 17 significant digits.
//!
//! ```text
//! family rbm        family fvbm       family categorical   family tabular
//! q 3               q 2               q 3                  q 2
//! r 2               M 2 2             pi 3                 values 1 0 1 2
//! M 3 2             0 0.5             0.2 0.3 0.5          values 2 -1 1
//! ... 3 rows        0.5 0                                  p 6
//! a 3               b 2                                    ... 6 numbers
//! ...               0.1 -0.2
//! b 2
//! ...
//! ```

use std::fmt::Write as _;

use mpl_core::estimate::FittedModel;
use mpl_core::models::{CategoricalParams, FvbmParams, RbmParams};
use mpl_core::{SupportSpec, TabularPmf};

use super::{content_lines, fmt_f64};
use crate::error::{Error, Result};

fn row(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" ")
}

pub fn family_name(m: &FittedModel) -> &'static str {
    match m {
        FittedModel::Categorical(_) => "categorical",
        FittedModel::Fvbm(_) => "fvbm",
        FittedModel::Rbm(_) => "rbm",
        FittedModel::Tabular(_) => "tabular",
    }
}

pub fn write_params(m: &FittedModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "family {}", family_name(m));
    match m {
        FittedModel::Categorical(p) => {
            let _ = writeln!(out, "q {}", p.q());
            let _ = writeln!(out, "pi {}\n{}", p.q(), row(p.pi()));
        }
        FittedModel::Fvbm(p) => {
            let q = p.q();
            let _ = writeln!(out, "q {q}\nM {q} {q}");
            for r in p.matrix().chunks(q) {
                let _ = writeln!(out, "{}", row(r));
            }
            let _ = writeln!(out, "b {q}\n{}", row(p.bias()));
        }
        FittedModel::Rbm(p) => {
            let (q, r) = (p.q(), p.r());
            let _ = writeln!(out, "q {q}\nr {r}\nM {q} {r}");
            for w in p.weights().chunks(r) {
                let _ = writeln!(out, "{}", row(w));
            }
            let _ = writeln!(out, "a {q}\n{}", row(p.visible_bias()));
            let _ = writeln!(out, "b {r}\n{}", row(p.hidden_bias()));
        }
        FittedModel::Tabular(f) => {
            let spec = f.spec();
            let _ = writeln!(out, "q {}", spec.q());
            for k in 0..spec.q() {
                let vals: Vec<String> = spec.values(k).iter().map(i64::to_string).collect();
                let _ = writeln!(out, "values {} {}", k + 1, vals.join(" "));
            }
            let _ = writeln!(out, "p {}\n{}", f.probs().len(), row(f.probs()));
        }
    }
    out
}

struct Reader<'a> {
    origin: &'a str,
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.origin, line, msg)
    }

    fn last_line(&self) -> usize {
        self.lines.last().map_or(1, |l| l.0)
    }

    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        let (line, body) = *self
            .lines
            .get(self.pos)
            .ok_or_else(|| self.err(self.last_line(), "unexpected end of file"))?;
        self.pos += 1;
        Ok((line, body.split_whitespace().collect()))
    }

    /// `key value`.
    fn scalar(&mut self, key: &str) -> Result<usize> {
        let (line, tok) = self.next()?;
        if tok.len() != 2 || tok[0] != key {
            return Err(self.err(line, format!("expected `{key} <integer>`")));
        }
        tok[1].parse().map_err(|e| self.err(line, format!("{key}: {e}")))
    }

    fn numbers(&mut self, count: usize) -> Result<Vec<f64>> {
        let (line, tok) = self.next()?;
        if tok.len() != count {
            return Err(self.err(line, format!("expected {count} numbers, found {}", tok.len())));
        }
        tok.iter()
            .map(|t| t.parse::<f64>().map_err(|e| self.err(line, format!("`{t}`: {e}"))))
            .collect()
    }

    /// `name rows cols` then the rows, or `name len` then one line.
    fn block(&mut self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let (line, tok) = self.next()?;
        let dims: Vec<usize> = tok[1..].iter().filter_map(|t| t.parse().ok()).collect();
        if tok.first() != Some(&name) || dims != shape {
            let want: Vec<String> = shape.iter().map(usize::to_string).collect();
            return Err(self.err(line, format!("expected block `{name} {}`", want.join(" "))));
        }
        match *shape {
            [len] => self.numbers(len),
            [rows, cols] => {
                let mut out = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    out.extend(self.numbers(cols)?);
                }
                Ok(out)
            }
            _ => unreachable!(),
        }
    }
}

pub fn read_params(origin: &str, text: &str) -> Result<FittedModel> {
    let mut rd = Reader {
        origin,
        lines: content_lines(text).collect(),
        pos: 0,
    };
    let (line, tok) = rd.next()?;
    if tok.len() != 2 || tok[0] != "family" {
        return Err(rd.err(line, "expected `family <name>`"));
    }
    let wrap = |line: usize, e: mpl_core::Error| Error::parse(origin, line, e.to_string());
    let model = match tok[1] {
        "categorical" => {
            let q = rd.scalar("q")?;
            let pi = rd.block("pi", &[q])?;
            FittedModel::Categorical(CategoricalParams::new(pi).map_err(|e| wrap(line, e))?)
        }
        "fvbm" => {
            let q = rd.scalar("q")?;
            let m = rd.block("M", &[q, q])?;
            let b = rd.block("b", &[q])?;
            FittedModel::Fvbm(FvbmParams::new(m, b).map_err(|e| wrap(line, e))?)
        }
        "rbm" => {
            let q = rd.scalar("q")?;
            let r = rd.scalar("r")?;
            let m = rd.block("M", &[q, r])?;
            let a = rd.block("a", &[q])?;
            let b = rd.block("b", &[r])?;
            FittedModel::Rbm(RbmParams::new(q, r, m, a, b).map_err(|e| wrap(line, e))?)
        }
        "tabular" => {
            let q = rd.scalar("q")?;
            let mut values = Vec::with_capacity(q);
            for k in 1..=q {
                let (line, tok) = rd.next()?;
                if tok.len() < 3 || tok[0] != "values" || tok[1] != k.to_string() {
                    return Err(rd.err(line, format!("expected `values {k} <v1> <v2> ...`")));
                }
                let vals = tok[2..]
                    .iter()
                    .map(|t| t.parse::<i64>().map_err(|e| rd.err(line, format!("`{t}`: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                values.push(vals);
            }
            let spec = SupportSpec::new(values).map_err(|e| wrap(line, e))?;
            let len = spec.table_len()?;
            let p = rd.block("p", &[len])?;
            FittedModel::Tabular(TabularPmf::new(spec, p).map_err(|e| wrap(line, e))?)
        }
        other => return Err(rd.err(line, format!("unknown family `{other}`"))),
    };
    if let Some(&(line, _)) = rd.lines.get(rd.pos) {
        return Err(rd.err(line, "trailing content"));
    }
    Ok(model)
}
