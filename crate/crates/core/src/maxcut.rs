//! Max-Cut instances and their Boltzmann-machine energy form.
//!
//! For weights `w_ij` and a 0/1 partition vector `x`, the cut is
//! `M(x) = Σ_{i<j} w_ij [(1−x_i)x_j + (1−x_j)x_i]` and the energy
//! `E(x) = bᵀx − ½ xᵀ W_B x` with `b_i = −Σ_j w_ij`, `W_B = −2w`, so that
//! `E = −M`. The local field `u_i = Σ_j W_B,ij x_j − b_i` is the energy drop
//! from setting unit `i` to 1.
//!
//! Weights are integers, so every quantity here is exact.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: i64,
}

/// Undirected weighted graph, one entry per unordered pair, 0-indexed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxCutInstance {
    pub name: String,
    pub n: usize,
    pub edges: Vec<Edge>,
    pub best_known: Option<i64>,
}

impl MaxCutInstance {
    /// Validates and normalises edges to `i < j`.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, i64)>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (line, (a, b, w)) in edges.into_iter().enumerate() {
            if a == b {
                return Err(Error::SelfLoop {
                    line: line + 1,
                    node: a,
                });
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, n });
            }
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateEdge { line: line + 1, i, j });
            }
            out.push(Edge { i, j, w });
        }
        Ok(MaxCutInstance {
            name: name.into(),
            n,
            edges: out,
            best_known: None,
        })
    }

    pub fn with_best_known(mut self, cut: i64) -> Self {
        self.best_known = Some(cut);
        self
    }

    /// Complete graph with unit weights.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1)));
        Self::new(format!("K{n}"), n, edges).expect("complete graph is valid")
    }

    pub fn total_weight(&self) -> i64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Sum of weights over edges whose endpoints lie in different partitions.
    pub fn cut_value(&self, x: &Configuration) -> Result<i64> {
        x.check_len(self.n)?;
        Ok(self.edges.iter().filter(|e| x.0[e.i] != x.0[e.j]).map(|e| e.w).sum())
    }
}

/// Partition vector: `x_i ∈ {0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration(pub Vec<u8>);

impl Configuration {
    pub fn zeros(n: usize) -> Self {
        Configuration(vec![0; n])
    }

    /// Bits of `mask` as a configuration, node 0 in the lowest bit.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Configuration((0..n).map(|i| ((mask >> i) & 1) as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn complement(&self) -> Self {
        Configuration(self.0.iter().map(|&b| 1 - b).collect())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.0.len(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// `b` and sparse symmetric `W_B` of the Boltzmann energy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoltzmannForm {
    pub b: Vec<i64>,
    /// Row `i` lists `(j, W_B,ij)` for every neighbour `j`.
    pub w_b: Vec<Vec<(usize, i64)>>,
}

impl BoltzmannForm {
    pub fn build(inst: &MaxCutInstance) -> Self {
        let mut b = vec![0i64; inst.n];
        let mut w_b = vec![Vec::new(); inst.n];
        for e in &inst.edges {
            b[e.i] -= e.w;
            b[e.j] -= e.w;
            w_b[e.i].push((e.j, -2 * e.w));
            w_b[e.j].push((e.i, -2 * e.w));
        }
        BoltzmannForm { b, w_b }
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// Dense lookup of `W_B,ij`; O(deg).
    pub fn weight(&self, i: usize, j: usize) -> i64 {
        self.w_b[i].iter().find(|&&(k, _)| k == j).map_or(0, |&(_, w)| w)
    }

    /// `E(x) = bᵀx − ½ xᵀ W_B x`.
    pub fn energy(&self, x: &Configuration) -> Result<i64> {
        x.check_len(self.n())?;
        let mut linear = 0i64;
        let mut quad = 0i64;
        for (i, &xi) in x.0.iter().enumerate() {
            if xi == 0 {
                continue;
            }
            linear += self.b[i];
            quad += self.w_b[i]
                .iter()
                .filter(|&&(j, _)| x.0[j] == 1)
                .map(|&(_, w)| w)
                .sum::<i64>();
        }
        // quad counts each pair twice, matching xᵀ W_B x
        Ok(linear - quad / 2)
    }

    /// `u_i = Σ_j W_B,ij x_j − b_i`.
    pub fn local_field(&self, x: &Configuration, i: usize) -> Result<i64> {
        x.check_len(self.n())?;
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(self.field_unchecked(&x.0, i))
    }

    #[inline]
    fn field_unchecked(&self, x: &[u8], i: usize) -> i64 {
        self.w_b[i].iter().map(|&(j, w)| w * x[j] as i64).sum::<i64>() - self.b[i]
    }

    /// All local fields from scratch.
    pub fn fields(&self, x: &Configuration) -> Result<Vec<i64>> {
        x.check_len(self.n())?;
        Ok((0..self.n()).map(|i| self.field_unchecked(&x.0, i)).collect())
    }

    /// Assigns `x_i ← new_xi` and updates neighbour fields in O(deg).
    /// Returns the energy change.
    pub fn update_fields_after_assign(&self, u: &mut [i64], x: &mut Configuration, i: usize, new_xi: u8) -> i64 {
        let old = x.0[i];
        if old == new_xi {
            return 0;
        }
        let delta = new_xi as i64 - old as i64;
        for &(j, w) in &self.w_b[i] {
            u[j] += w * delta;
        }
        x.0[i] = new_xi;
        -u[i] * delta
    }
}
