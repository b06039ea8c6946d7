//! Finite product supports and the index families of the pseudolikelihood.
//!
//! A [`SupportSpec`] is a product of per-coordinate integer value sets. States
//! are numbered in mixed radix with coordinate 1 most significant, so on
//! `{0,1}^3` the state `(1,1,1)` has index 7.
//!
//! Marginal terms are indexed by [`SubsetId`] (a non-empty coordinate bitmask)
//! and conditional terms by [`PartitionId`] (an ordered pair of disjoint,
//! non-empty bitmasks). Both have a canonical text form: `{1,3}` and
//! `{1}|{2,3}`, using 1-based coordinates.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Largest number of coordinates a bitmask id can address.
pub const MAX_COORDINATES: usize = 64;

/// Largest number of states any dense table may hold.
pub const MAX_TABLE_STATES: u64 = 1 << 20;

/// Enumeration budgets for the subset and partition families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationCaps {
    pub max_subset_q: usize,
    pub max_partition_q: usize,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        Self {
            max_subset_q: 20,
            max_partition_q: 12,
        }
    }
}

/// A finite product domain `X ⊂ Z^q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SupportSpec {
    values: Vec<Vec<i64>>,
    num_states: u64,
}

impl SupportSpec {
    /// Builds a support from per-coordinate value lists.
    pub fn new(values: Vec<Vec<i64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSupport("q must be at least 1".into()));
        }
        if values.len() > MAX_COORDINATES {
            return Err(Error::InvalidSupport(format!(
                "q = {} exceeds the {MAX_COORDINATES}-coordinate limit",
                values.len()
            )));
        }
        let mut num_states: u64 = 1;
        for (k, set) in values.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::InvalidSupport(format!(
                    "coordinate {} has an empty value set",
                    k + 1
                )));
            }
            for (i, v) in set.iter().enumerate() {
                if set[..i].contains(v) {
                    return Err(Error::InvalidSupport(format!(
                        "coordinate {} lists value {v} twice",
                        k + 1
                    )));
                }
            }
            num_states = num_states
                .checked_mul(set.len() as u64)
                .ok_or_else(|| Error::InvalidSupport("total state count does not fit in 64 bits".into()))?;
        }
        Ok(Self { values, num_states })
    }

    /// `{0,1}^q`.
    pub fn binary(q: usize) -> Result<Self> {
        Self::new(alloc::vec![alloc::vec![0, 1]; q])
    }

    pub fn q(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self, coordinate: usize) -> &[i64] {
        &self.values[coordinate]
    }

    pub fn radix(&self, coordinate: usize) -> usize {
        self.values[coordinate].len()
    }

    pub fn num_states(&self) -> u64 {
        self.num_states
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|v| v.as_slice() == [0, 1])
    }

    /// Bitmask with every coordinate set.
    pub fn full_mask(&self) -> u64 {
        full_mask(self.q())
    }

    /// State count as a `usize`, refusing anything above [`MAX_TABLE_STATES`].
    pub fn table_len(&self) -> Result<usize> {
        if self.num_states > MAX_TABLE_STATES {
            return Err(Error::Capacity {
                what: "dense table",
                requested: self.num_states,
                limit: MAX_TABLE_STATES,
            });
        }
        Ok(self.num_states as usize)
    }

    /// Position of `value` within the value set of `coordinate`.
    pub fn value_position(&self, coordinate: usize, value: i64) -> Result<usize> {
        self.values[coordinate]
            .iter()
            .position(|&v| v == value)
            .ok_or(Error::OutOfSupport {
                coordinate: coordinate + 1,
                value,
            })
    }

    /// Dense mixed-radix index of a state.
    pub fn state_index(&self, x: &[i64]) -> Result<u64> {
        if x.len() != self.q() {
            return Err(Error::Dimension {
                expected: self.q(),
                got: x.len(),
            });
        }
        let mut index = 0u64;
        for (k, &v) in x.iter().enumerate() {
            let pos = self.value_position(k, v)? as u64;
            index = index * self.radix(k) as u64 + pos;
        }
        Ok(index)
    }

    /// Inverse of [`state_index`](Self::state_index).
    pub fn state_at(&self, index: u64) -> Result<Vec<i64>> {
        if index >= self.num_states {
            return Err(Error::Capacity {
                what: "state index",
                requested: index,
                limit: self.num_states,
            });
        }
        let mut out = alloc::vec![0i64; self.q()];
        self.write_state(index, &mut out);
        Ok(out)
    }

    /// Writes the state with `index` into `out` (which must have length q).
    pub(crate) fn write_state(&self, mut index: u64, out: &mut [i64]) {
        for k in (0..self.q()).rev() {
            let radix = self.radix(k) as u64;
            out[k] = self.values[k][(index % radix) as usize];
            index /= radix;
        }
    }

    /// Support over the coordinates of `mask`, in ascending coordinate order.
    pub fn restrict(&self, mask: u64) -> Result<Self> {
        self.check_mask(mask)?;
        let values = (0..self.q())
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| self.values[k].clone())
            .collect();
        Self::new(values)
    }

    /// For every full state (ascending index), the index of its restriction
    /// to `mask`.
    pub fn projection(&self, mask: u64) -> Result<Vec<usize>> {
        self.check_mask(mask)?;
        let n = self.table_len()?;
        let q = self.q();
        // Stride of each selected coordinate within the restricted index.
        let mut strides = alloc::vec![0usize; q];
        let mut stride = 1usize;
        for k in (0..q).rev() {
            if mask >> k & 1 == 1 {
                strides[k] = stride;
                stride *= self.radix(k);
            }
        }
        let mut digits = alloc::vec![0usize; q];
        let mut out = Vec::with_capacity(n);
        let mut restricted = 0usize;
        for _ in 0..n {
            out.push(restricted);
            // Increment the mixed-radix counter, updating the restricted index.
            for k in (0..q).rev() {
                digits[k] += 1;
                restricted += strides[k];
                if digits[k] < self.radix(k) {
                    break;
                }
                restricted -= strides[k] * digits[k];
                digits[k] = 0;
            }
        }
        Ok(out)
    }

    pub(crate) fn check_mask(&self, mask: u64) -> Result<()> {
        if mask == 0 {
            return Err(Error::InvalidId("empty coordinate set".into()));
        }
        if mask & !self.full_mask() != 0 {
            return Err(Error::InvalidId(format!(
                "{} refers to coordinates beyond q = {}",
                SubsetId(mask),
                self.q()
            )));
        }
        Ok(())
    }
}

fn full_mask(q: usize) -> u64 {
    if q >= 64 {
        u64::MAX
    } else {
        (1u64 << q) - 1
    }
}

/// A non-empty coordinate subset `S`, stored as a bitmask (bit 0 is
/// coordinate 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubsetId(u64);

impl SubsetId {
    pub fn new(mask: u64) -> Result<Self> {
        if mask == 0 {
            return Err(Error::InvalidId("subset must be non-empty".into()));
        }
        Ok(Self(mask))
    }

    /// Subset from 1-based coordinates.
    pub fn from_coords(coords: &[usize]) -> Result<Self> {
        Self::new(mask_from_coords(coords)?)
    }

    pub fn singleton(coordinate: usize) -> Self {
        Self(1 << (coordinate - 1))
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// 1-based coordinates, ascending.
    pub fn coords(self) -> Vec<usize> {
        coords_of(self.0)
    }
}

impl fmt::Display for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_mask(f, self.0)
    }
}

impl FromStr for SubsetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_mask(s.trim())?)
    }
}

/// An ordered split `left | right` of a coordinate subset into two disjoint,
/// non-empty blocks. The conditional term is `f(x^left | x^right)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartitionId {
    left: u64,
    right: u64,
}

impl PartitionId {
    pub fn new(left: u64, right: u64) -> Result<Self> {
        if left == 0 || right == 0 {
            return Err(Error::InvalidId("partition blocks must be non-empty".into()));
        }
        if left & right != 0 {
            return Err(Error::InvalidId("partition blocks must be disjoint".into()));
        }
        Ok(Self { left, right })
    }

    /// Single coordinate `k` (1-based) given all the others.
    pub fn full_conditional(q: usize, k: usize) -> Result<Self> {
        let left = 1u64 << (k - 1);
        Self::new(left, full_mask(q) & !left)
    }

    pub fn left(self) -> u64 {
        self.left
    }

    pub fn right(self) -> u64 {
        self.right
    }

    pub fn union(self) -> u64 {
        self.left | self.right
    }
}

impl fmt::Display for PartitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_mask(f, self.left)?;
        f.write_str("|")?;
        write_mask(f, self.right)
    }
}

impl FromStr for PartitionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (l, r) = s
            .trim()
            .split_once('|')
            .ok_or_else(|| Error::InvalidId(format!("`{s}` is not of the form {{..}}|{{..}}")))?;
        Self::new(parse_mask(l.trim())?, parse_mask(r.trim())?)
    }
}

/// A single pseudolikelihood term: a marginal or a conditional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermId {
    Marginal(SubsetId),
    Conditional(PartitionId),
}

impl TermId {
    pub fn kind(self) -> &'static str {
        match self {
            TermId::Marginal(_) => "marginal",
            TermId::Conditional(_) => "conditional",
        }
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermId::Marginal(s) => s.fmt(f),
            TermId::Conditional(t) => t.fmt(f),
        }
    }
}

impl From<SubsetId> for TermId {
    fn from(s: SubsetId) -> Self {
        TermId::Marginal(s)
    }
}

impl From<PartitionId> for TermId {
    fn from(t: PartitionId) -> Self {
        TermId::Conditional(t)
    }
}

/// All `2^q - 1` non-empty subsets in ascending bitmask order.
pub fn enumerate_subsets(spec: &SupportSpec) -> Result<Vec<SubsetId>> {
    enumerate_subsets_with(spec, EnumerationCaps::default())
}

pub fn enumerate_subsets_with(spec: &SupportSpec, caps: EnumerationCaps) -> Result<Vec<SubsetId>> {
    let q = spec.q();
    if q > caps.max_subset_q {
        return Err(Error::Capacity {
            what: "subset enumeration (q)",
            requested: q as u64,
            limit: caps.max_subset_q as u64,
        });
    }
    Ok((1..=full_mask(q)).map(SubsetId).collect())
}

/// All ordered pairs of disjoint non-empty subsets, ordered by `(left, right)`.
/// There are `3^q - 2^(q+1) + 1` of them.
pub fn enumerate_partitions(spec: &SupportSpec) -> Result<Vec<PartitionId>> {
    enumerate_partitions_with(spec, EnumerationCaps::default())
}

pub fn enumerate_partitions_with(spec: &SupportSpec, caps: EnumerationCaps) -> Result<Vec<PartitionId>> {
    let q = spec.q();
    if q > caps.max_partition_q {
        return Err(Error::Capacity {
            what: "partition enumeration (q)",
            requested: q as u64,
            limit: caps.max_partition_q as u64,
        });
    }
    let full = full_mask(q);
    let mut out = Vec::new();
    for left in 1..=full {
        let rest = full & !left;
        // Submasks of `rest` in ascending order.
        let mut right = 0u64;
        loop {
            right = right.wrapping_sub(rest) & rest;
            if right == 0 {
                break;
            }
            out.push(PartitionId { left, right });
        }
    }
    Ok(out)
}

/// `3^q - 2^(q+1) + 1`.
pub fn partition_count(q: u32) -> u64 {
    3u64.pow(q) + 1 - 2u64.pow(q + 1)
}

fn coords_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|k| mask >> k & 1 == 1).map(|k| k + 1).collect()
}

fn mask_from_coords(coords: &[usize]) -> Result<u64> {
    let mut mask = 0u64;
    for &c in coords {
        if c == 0 || c > MAX_COORDINATES {
            return Err(Error::InvalidId(format!("coordinate {c} out of range")));
        }
        let bit = 1u64 << (c - 1);
        if mask & bit != 0 {
            return Err(Error::InvalidId(format!("coordinate {c} repeated")));
        }
        mask |= bit;
    }
    Ok(mask)
}

fn write_mask(f: &mut fmt::Formatter<'_>, mask: u64) -> fmt::Result {
    f.write_str("{")?;
    let mut first = true;
    for c in coords_of(mask) {
        if !first {
            f.write_str(",")?;
        }
        write!(f, "{c}")?;
        first = false;
    }
    f.write_str("}")
}

fn parse_mask(s: &str) -> Result<u64> {
    let inner = s
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::InvalidId(format!("`{s}` is not a braced coordinate list")))?;
    let coords = inner
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidId(format!("bad coordinate `{}` in `{s}`", t.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    let mask = mask_from_coords(&coords)?;
    if mask == 0 {
        return Err(Error::InvalidId(String::from("empty coordinate set")));
    }
    Ok(mask)
}
