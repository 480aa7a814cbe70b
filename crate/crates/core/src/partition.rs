//! Domain decomposition of the index set and the splitting operator `T^t`.
//!
//! A [`Partition`] assigns each index `0..n` to one of `t` nonempty, pairwise
//! disjoint subdomains. [`Partition::project`] realizes `[T^t(v)]`: column `j`
//! is `v` restricted to subdomain `j` and zero elsewhere, so the columns sum
//! back to `v` exactly. [`Partition::halve`] merges subdomains `2i` and `2i+1`,
//! which is the coarsening used by the flexible `t -> t/2` switch.
//!
//! # File format
//!
//! ```text
//! # comment lines start with '#'
//! n t
//! id_1
//! ...
//! id_n
//! ```
//!
//! Subdomain ids are 1-based in files and 0-based in memory.

use std::io::{BufRead, Write};
use std::ops::Range;

use crate::error::{check_dim, Error, Result};
use crate::linalg::DenseBlock;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Partition {
    /// Consecutive ranges; the first `n mod t` subdomains get one extra index.
    pub fn contiguous(n: usize, t: usize) -> Result<Self> {
        let ranges = contiguous_ranges(n, t)?;
        let mut assignment = vec![0; n];
        for (j, r) in ranges.iter().enumerate() {
            assignment[r.clone()].iter_mut().for_each(|a| *a = j);
        }
        Partition::from_assignment(t, assignment)
    }

    /// Builds from a 0-based subdomain id per index and validates coverage.
    pub fn from_assignment(t: usize, assignment: Vec<usize>) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidPartition("t must be at least 1".into()));
        }
        let mut members = vec![Vec::new(); t];
        for (i, &s) in assignment.iter().enumerate() {
            if s >= t {
                return Err(Error::InvalidPartition(format!(
                    "index {i} assigned to subdomain {s}, but t = {t}"
                )));
            }
            members[s].push(i);
        }
        if let Some(empty) = members.iter().position(|m| m.is_empty()) {
            return Err(Error::InvalidPartition(format!("subdomain {empty} is empty")));
        }
        Ok(Partition {
            assignment,
            members,
        })
    }

    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    pub fn t(&self) -> usize {
        self.members.len()
    }

    /// Indices of subdomain `j`, increasing.
    pub fn subdomain(&self, j: usize) -> &[usize] {
        &self.members[j]
    }

    pub fn subdomain_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// `[T^t(v)]` as an `n x t` block.
    pub fn project(&self, v: &[f64]) -> Result<DenseBlock> {
        check_dim("Partition::project", self.n(), v.len())?;
        let n = self.n();
        let mut out = DenseBlock::zeros(n, self.t());
        let data = out.as_mut_slice();
        for (i, (&s, &vi)) in self.assignment.iter().zip(v).enumerate() {
            data[s * n + i] = vi;
        }
        Ok(out)
    }

    /// Merges subdomains `2i` and `2i+1` into subdomain `i`.
    pub fn halve(&self) -> Result<Self> {
        let t = self.t();
        if t < 2 || !t.is_multiple_of(2) {
            return Err(Error::InvalidPartition(format!(
                "halving needs an even subdomain count, got t = {t}"
            )));
        }
        self.coarsen(2)
    }

    /// Merges each run of `factor` consecutive subdomains; `t` must be divisible by `factor`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let t = self.t();
        if factor == 0 || !t.is_multiple_of(factor) {
            return Err(Error::InvalidPartition(format!(
                "cannot merge {factor} consecutive subdomains out of t = {t}"
            )));
        }
        let assignment = self.assignment.iter().map(|&s| s / factor).collect();
        Partition::from_assignment(t / factor, assignment)
    }

    /// True when every listed range lies inside a single subdomain.
    pub fn refined_by(&self, ranges: &[Range<usize>]) -> bool {
        ranges.iter().all(|r| {
            let mut ids = self.assignment[r.clone()].iter();
            match ids.next() {
                Some(first) => ids.all(|s| s == first),
                None => true,
            }
        })
    }

    /// Reads the ASCII partition format.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut ids = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidPartition(format!("read error: {e}")))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::InvalidPartition(format!("line {}: {what}", lineno + 1));
            match header {
                None => {
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    if fields.len() != 2 {
                        return Err(bad("expected header \"n t\""));
                    }
                    let n = fields[0].parse().map_err(|_| bad("bad n"))?;
                    let t = fields[1].parse().map_err(|_| bad("bad t"))?;
                    header = Some((n, t));
                }
                Some((_, t)) => {
                    let id: usize = line.parse().map_err(|_| bad("bad subdomain id"))?;
                    if id == 0 || id > t {
                        return Err(bad(&format!("subdomain id {id} outside 1..={t}")));
                    }
                    ids.push(id - 1);
                }
            }
        }
        let (n, t) = header.ok_or_else(|| Error::InvalidPartition("missing header".into()))?;
        if ids.len() != n {
            return Err(Error::InvalidPartition(format!(
                "expected {n} subdomain ids, found {}",
                ids.len()
            )));
        }
        Partition::from_assignment(t, ids)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidPartition(format!("write error: {e}"));
        writeln!(writer, "{} {}", self.n(), self.t()).map_err(io)?;
        for &s in &self.assignment {
            writeln!(writer, "{}", s + 1).map_err(io)?;
        }
        Ok(())
    }
}

/// Consecutive index ranges of size `n / t` or `n / t + 1`, larger ones first.
pub fn contiguous_ranges(n: usize, t: usize) -> Result<Vec<Range<usize>>> {
    if t == 0 || t > n {
        return Err(Error::InvalidPartition(format!(
            "need 1 <= t <= n, got t = {t}, n = {n}"
        )));
    }
    let base = n / t;
    let extra = n % t;
    let mut start = 0;
    Ok((0..t)
        .map(|j| {
            let len = base + usize::from(j < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}
