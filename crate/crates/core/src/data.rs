use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::support::SupportSpec;

/// A data set of `len()` states with `q` coordinates each, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sample {
    q: usize,
    values: Vec<i64>,
}

impl Sample {
    pub fn new(q: usize, values: Vec<i64>) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidSupport("q must be at least 1".into()));
        }
        if !values.len().is_multiple_of(q) {
            return Err(Error::Dimension {
                expected: q,
                got: values.len() % q,
            });
        }
        Ok(Self { q, values })
    }

    pub fn from_rows<R: AsRef<[i64]>>(q: usize, rows: &[R]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * q);
        for r in rows {
            let r = r.as_ref();
            if r.len() != q {
                return Err(Error::Dimension {
                    expected: q,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(q, values)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.q
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.values[i * self.q..(i + 1) * self.q]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[i64]> + '_ {
        self.values.chunks_exact(self.q)
    }

    pub fn push(&mut self, row: &[i64]) -> Result<()> {
        if row.len() != self.q {
            return Err(Error::Dimension {
                expected: self.q,
                got: row.len(),
            });
        }
        self.values.extend_from_slice(row);
        Ok(())
    }

    pub fn as_flat(&self) -> &[i64] {
        &self.values
    }

    /// First `n` rows.
    pub fn prefix(&self, n: usize) -> Sample {
        Sample {
            q: self.q,
            values: self.values[..n.min(self.len()) * self.q].to_vec(),
        }
    }

    /// Dense state index of every row; the error names the offending row.
    pub fn state_indices(&self, spec: &SupportSpec) -> Result<Vec<u64>> {
        if spec.q() != self.q {
            return Err(Error::Dimension {
                expected: spec.q(),
                got: self.q,
            });
        }
        self.rows()
            .enumerate()
            .map(|(row, x)| {
                spec.state_index(x).map_err(|e| match e {
                    Error::OutOfSupport { coordinate, value } => Error::DatumOutOfSupport { row, coordinate, value },
                    other => other,
                })
            })
            .collect()
    }

    /// Rows as `{0,1}` booleans; fails on the first non-binary entry.
    pub fn to_binary(&self) -> Result<Vec<bool>> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| match v {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::DatumOutOfSupport {
                    row: i / self.q,
                    coordinate: i % self.q + 1,
                    value: v,
                }),
            })
            .collect()
    }
}

/// Binary data with duplicate rows merged, in ascending state order.
///
/// Row `i` occupies `x[i*q..(i+1)*q]` as `0.0`/`1.0` and appears `weight[i]`
/// times in the original sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBinary {
    pub q: usize,
    pub x: Vec<f64>,
    pub weight: Vec<f64>,
    pub total: f64,
}

impl WeightedBinary {
    pub fn from_sample(sample: &Sample) -> Result<Self> {
        let bits = sample.to_binary()?;
        let q = sample.q();
        let mut counts: BTreeMap<&[bool], u64> = BTreeMap::new();
        for row in bits.chunks_exact(q) {
            *counts.entry(row).or_default() += 1;
        }
        let mut x = Vec::with_capacity(counts.len() * q);
        let mut weight = Vec::with_capacity(counts.len());
        for (row, c) in counts {
            x.extend(row.iter().map(|&b| if b { 1.0 } else { 0.0 }));
            weight.push(c as f64);
        }
        Ok(Self {
            q,
            x,
            weight,
            total: sample.len() as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.x.chunks_exact(self.q).zip(self.weight.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rows_and_indices() {
        let s = Sample::from_rows(2, &[[0, 1], [1, 1]]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.row(1), &[1, 1]);
        let spec = SupportSpec::binary(2).unwrap();
        assert_eq!(s.state_indices(&spec).unwrap(), vec![1, 3]);
    }

    #[test]
    fn out_of_support_names_row() {
        let s = Sample::from_rows(2, &[[0, 1], [1, 3]]).unwrap();
        let spec = SupportSpec::binary(2).unwrap();
        assert_eq!(
            s.state_indices(&spec),
            Err(Error::DatumOutOfSupport {
                row: 1,
                coordinate: 2,
                value: 3
            })
        );
        assert!(s.to_binary().is_err());
    }

    #[test]
    fn weighted_binary_merges_duplicates() {
        let s = Sample::from_rows(2, &[[1, 0], [0, 1], [1, 0], [1, 0]]).unwrap();
        let w = WeightedBinary::from_sample(&s).unwrap();
        assert_eq!(w.x, vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(w.weight, vec![1.0, 3.0]);
        assert_eq!(w.total, 4.0);
    }

    #[test]
    fn ragged_input_rejected() {
        assert!(Sample::new(3, vec![0, 1]).is_err());
        assert!(Sample::from_rows(2, &[vec![0, 1], vec![1]]).is_err());
    }
}
