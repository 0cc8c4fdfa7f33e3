//! Symmetric tensors stored once per multiset of indices.
//!
//! An order-`ℓ` symmetric tensor over `ℝᵈ` has `C(d+ℓ−1, ℓ)` distinct entries,
//! one per non-decreasing multi-index. Entries are kept in lexicographic order
//! of those canonical multi-indices. Reading any permutation of an index tuple
//! returns the same stored value; norms and contractions expand each stored
//! entry by its multinomial multiplicity `ℓ!/∏ n_j!`.

use crate::error::{Error, Result};
use crate::linalg::binomial;
use serde::{Deserialize, Serialize};

/// Largest number of stored entries a tensor may allocate.
pub const MAX_ENTRIES: u64 = 20_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    order: usize,
    dim: usize,
    values: Vec<f64>,
}

pub fn entry_count(order: usize, dim: usize) -> u64 {
    if dim == 0 {
        return u64::from(order == 0);
    }
    binomial((dim + order - 1) as u64, order as u64)
}

/// Iterates canonical (non-decreasing) multi-indices in storage order.
#[derive(Clone, Debug)]
pub struct CanonicalIndices {
    dim: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for CanonicalIndices {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let mut next = out.clone();
        match (0..next.len()).rev().find(|&p| next[p] + 1 < self.dim) {
            Some(p) => {
                let v = next[p] + 1;
                for slot in next.iter_mut().skip(p) {
                    *slot = v;
                }
                self.current = Some(next);
            }
            None => self.current = None,
        }
        Some(out)
    }
}

pub fn canonical_indices(order: usize, dim: usize) -> CanonicalIndices {
    CanonicalIndices { dim, current: if dim == 0 && order > 0 { None } else { Some(vec![0; order]) } }
}

/// Occurrence counts `(coordinate, count)` of a multi-index, coordinates ascending.
pub fn occurrences(index: &[usize]) -> Vec<(usize, usize)> {
    let mut sorted = index.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for j in sorted {
        match out.last_mut() {
            Some((c, n)) if *c == j => *n += 1,
            _ => out.push((j, 1)),
        }
    }
    out
}

/// Number of distinct orderings of a multi-index, `ℓ!/∏ n_j!`.
pub fn multiplicity(index: &[usize]) -> f64 {
    let mut m = crate::linalg::factorial(index.len());
    for (_, n) in occurrences(index) {
        m /= crate::linalg::factorial(n);
    }
    m
}

impl SymTensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        let n = entry_count(order, dim);
        if n > MAX_ENTRIES {
            return Err(Error::Capacity { what: format!("order-{order} tensor in dimension {dim}"), needed: n, limit: MAX_ENTRIES });
        }
        Ok(Self { order, dim, values: vec![0.0; n as usize] })
    }

    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        for (slot, idx) in t.values.iter_mut().zip(canonical_indices(order, dim)) {
            *slot = f(&idx);
        }
        Ok(t)
    }

    /// Wraps a vector as an order-1 tensor.
    pub fn from_vector(v: Vec<f64>) -> Self {
        Self { order: 1, dim: v.len(), values: v }
    }

    pub fn from_values(order: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        let n = entry_count(order, dim) as usize;
        if values.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: values.len() });
        }
        Ok(Self { order, dim, values })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn indices(&self) -> CanonicalIndices {
        canonical_indices(self.order, self.dim)
    }

    /// Storage slot of a multi-index given in any order.
    pub fn slot(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order {
            return Err(Error::DimensionMismatch { expected: self.order, got: index.len() });
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= self.dim) {
            return Err(Error::InvalidInput(format!("coordinate {bad} out of range for dimension {}", self.dim)));
        }
        let mut a = index.to_vec();
        a.sort_unstable();
        let (d, l) = (self.dim as u64, self.order as u64);
        let mut rank = 0u64;
        let mut prev = 0usize;
        for (j, &aj) in a.iter().enumerate() {
            for x in prev..aj {
                let rem = l - j as u64 - 1;
                rank += binomial(d - x as u64 + rem - 1, rem);
            }
            prev = aj;
        }
        Ok(rank as usize)
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.values[self.slot(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let s = self.slot(index)?;
        self.values[s] = value;
        Ok(())
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.order != other.order || self.dim != other.dim {
            return Err(Error::InvalidInput(format!(
                "shape mismatch: ({}, {}) vs ({}, {})",
                self.order, self.dim, other.order, other.dim
            )));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { order: self.order, dim: self.dim, values })
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Frobenius norm of the full `d^ℓ` array.
    pub fn frobenius_norm(&self) -> f64 {
        self.indices().zip(&self.values).map(|(idx, v)| multiplicity(&idx) * v * v).sum::<f64>().sqrt()
    }

    /// `⟨T, z^{⊗ℓ}⟩`.
    pub fn full_contraction(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        Ok(self
            .indices()
            .zip(&self.values)
            .map(|(idx, v)| multiplicity(&idx) * v * idx.iter().map(|&i| z[i]).product::<f64>())
            .sum())
    }

    /// Writes the text dump: header `ℓ d`, then one `i_1 … i_ℓ value` line per stored entry.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.order, self.dim);
        for (idx, v) in self.indices().zip(&self.values) {
            for i in idx {
                out.push_str(&i.to_string());
                out.push(' ');
            }
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (n0, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse { line: n0 + 1, msg: format!("bad header token {t:?}") }))
            .collect::<Result<_>>()?;
        if head.len() != 2 {
            return Err(Error::Parse { line: n0 + 1, msg: "header must be `order dim`".into() });
        }
        let mut t = Self::zeros(head[0], head[1])?;
        let mut seen = vec![false; t.values.len()];
        for (n, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != t.order + 1 {
                return Err(Error::Parse { line: n + 1, msg: format!("expected {} fields", t.order + 1) });
            }
            let idx: Vec<usize> = toks[..t.order]
                .iter()
                .map(|s| s.parse().map_err(|_| Error::Parse { line: n + 1, msg: format!("bad index {s:?}") }))
                .collect::<Result<_>>()?;
            let v: f64 = toks[t.order].parse().map_err(|_| Error::Parse { line: n + 1, msg: "bad value".into() })?;
            let s = t.slot(&idx).map_err(|e| Error::Parse { line: n + 1, msg: e.to_string() })?;
            t.values[s] = v;
            seen[s] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Parse { line: 0, msg: format!("entry {missing} missing from dump") });
        }
        Ok(t)
    }
}
