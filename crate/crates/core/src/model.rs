//! Core probability and graph types.
//!
//! Vertices and labels are stored 0-based. Text formats and the CLI use
//! 1-based indices. The first graph's labeling is always the identity, so a
//! [`GraphPair`] only carries the hidden labeling of the second graph.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge attribute in `[0, ell)`.
pub type Attr = u8;

const INPUT_SUM_TOL: f64 = 1e-6;

/// Joint law `P_{X,Y}` of the attribute pair on aligned vertex pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDistribution {
    ell: usize,
    joint: Vec<f64>,
    marginal_x: Vec<f64>,
    marginal_y: Vec<f64>,
    support: Vec<bool>,
}

impl EdgeDistribution {
    /// Validates a raw `ell x ell` matrix (row = x, column = y) and
    /// renormalizes it exactly.
    pub fn new(raw: &[Vec<f64>]) -> Result<Self> {
        let ell = raw.len();
        for (row, r) in raw.iter().enumerate() {
            if r.len() != ell {
                return Err(Error::NonSquare { rows: ell, row, len: r.len() });
            }
        }
        if !(2..=256).contains(&ell) {
            return Err(Error::AlphabetSize(ell));
        }
        let mut joint = Vec::with_capacity(ell * ell);
        for (x, r) in raw.iter().enumerate() {
            for (y, &v) in r.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NegativeEntry { x, y, value: v });
                }
                joint.push(v);
            }
        }
        let total: f64 = joint.iter().sum();
        if (total - 1.0).abs() > INPUT_SUM_TOL {
            return Err(Error::NotNormalized(total));
        }
        for v in &mut joint {
            *v /= total;
        }
        Ok(Self::from_normalized(ell, joint))
    }

    fn from_normalized(ell: usize, joint: Vec<f64>) -> Self {
        let mut marginal_x = vec![0.0; ell];
        let mut marginal_y = vec![0.0; ell];
        for x in 0..ell {
            for y in 0..ell {
                marginal_x[x] += joint[x * ell + y];
                marginal_y[y] += joint[x * ell + y];
            }
        }
        let support = joint.iter().map(|&v| v > 0.0).collect();
        Self { ell, joint, marginal_x, marginal_y, support }
    }

    /// Product law `P_X(x) P_Y(y)`.
    pub fn product(px: &[f64], py: &[f64]) -> Result<Self> {
        if px.len() != py.len() {
            return Err(Error::NonSquare { rows: px.len(), row: 0, len: py.len() });
        }
        let raw: Vec<Vec<f64>> = px.iter().map(|&a| py.iter().map(|&b| a * b).collect()).collect();
        Self::new(&raw)
    }

    /// Doubly-symmetric binary law: `P(X = Y) = 1 - flip`, uniform marginals.
    pub fn binary_symmetric(flip: f64) -> Result<Self> {
        let same = (1.0 - flip) / 2.0;
        let diff = flip / 2.0;
        Self::new(&[vec![same, diff], vec![diff, same]])
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn joint(&self, x: usize, y: usize) -> f64 {
        self.joint[x * self.ell + y]
    }

    /// Row-major `ell * ell` joint probabilities.
    pub fn joint_flat(&self) -> &[f64] {
        &self.joint
    }

    pub fn marginal_x(&self) -> &[f64] {
        &self.marginal_x
    }

    pub fn marginal_y(&self) -> &[f64] {
        &self.marginal_y
    }

    pub fn is_supported(&self, x: usize, y: usize) -> bool {
        self.support[x * self.ell + y]
    }

    /// `P_{Y|X}(. | x)`, defined only where `P_X(x) > 0`.
    pub fn conditional_y_given_x(&self, x: usize) -> Option<Vec<f64>> {
        let px = self.marginal_x[x];
        if px <= 0.0 {
            return None;
        }
        Some((0..self.ell).map(|y| self.joint(x, y) / px).collect())
    }

    /// Smallest nonzero joint probability.
    pub fn min_nonzero(&self) -> f64 {
        self.joint.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.joint.chunks(self.ell).map(|r| r.to_vec()).collect()
    }

    /// Parses the plain-text format: first line `ell`, then `ell` rows of
    /// `ell` whitespace-separated decimals. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty distribution file".into()))?;
        let ell: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("bad alphabet size line {header:?}")))?;
        let mut rows = Vec::with_capacity(ell);
        for line in lines {
            let row = line
                .split_whitespace()
                .map(|tok| tok.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {tok:?}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.len() != ell {
            return Err(Error::Parse(format!("expected {ell} rows, found {}", rows.len())));
        }
        Self::new(&rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.ell);
        for row in self.joint.chunks(self.ell) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }
}

/// A bijection on `[0, n)`: `perm[s]` is the label of vertex `s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Labeling {
    perm: Vec<usize>,
}

impl Labeling {
    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect() }
    }

    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidLabeling(format!("{perm:?}")));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub(crate) fn from_vec_unchecked(perm: Vec<usize>) -> Self {
        debug_assert!(Self::new(perm.clone()).is_ok());
        Self { perm }
    }

    /// Builds from 1-based labels.
    pub fn from_one_based(labels: &[usize]) -> Result<Self> {
        let perm = labels
            .iter()
            .map(|&l| l.checked_sub(1).ok_or_else(|| Error::InvalidLabeling(format!("{labels:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(perm)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn get(&self, s: usize) -> usize {
        self.perm[s]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (s, &p) in self.perm.iter().enumerate() {
            inv[p] = s;
        }
        Self { perm: inv }
    }

    /// `(self ∘ other)(s) = self(other(s))`.
    pub fn compose(&self, other: &Labeling) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        Ok(Self { perm: other.perm.iter().map(|&s| self.perm[s]).collect() })
    }

    /// Number of positions where the two labelings disagree.
    pub fn hamming_distance(&self, other: &Labeling) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        Ok(self.perm.iter().zip(&other.perm).filter(|(a, b)| a != b).count())
    }

    pub fn fixed_points(&self) -> usize {
        self.perm.iter().enumerate().filter(|(s, &p)| *s == p).count()
    }
}

/// Symmetric `n x n` attribute matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrMatrix {
    n: usize,
    data: Vec<Attr>,
}

impl AttrMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0; n * n] }
    }

    /// Checks symmetry and the zero diagonal.
    pub fn from_rows(rows: &[Vec<Attr>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        let m = Self { n, data };
        for i in 0..n {
            if m.get(i, i) != 0 {
                return Err(Error::AsymmetricInput(i, i));
            }
            for j in i + 1..n {
                if m.get(i, j) != m.get(j, i) {
                    return Err(Error::AsymmetricInput(i, j));
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Attr {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set_pair(&mut self, i: usize, j: usize, v: Attr) {
        debug_assert!(i != j);
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn max_attr(&self) -> Attr {
        self.data.iter().copied().max().unwrap_or(0)
    }

    pub fn rows(&self) -> Vec<Vec<Attr>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).take(self.n).collect()
    }
}

/// Index of the unordered pair `{i, j}` (0-based, `i != j`) in row-major
/// upper-triangle order.
#[inline]
pub fn ut_index(i: usize, j: usize, n: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    debug_assert!(b < n && a != b);
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

pub fn ut_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Inverse of [`ut_index`].
pub fn ut_pair(index: usize, n: usize) -> (usize, usize) {
    let mut a = 0;
    let mut start = 0;
    loop {
        let row = n - a - 1;
        if index < start + row {
            return (a, a + 1 + index - start);
        }
        start += row;
        a += 1;
    }
}

/// Upper-triangle attribute vector of length `n(n-1)/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtVector {
    n: usize,
    data: Vec<Attr>,
}

impl UtVector {
    pub fn new(n: usize, data: Vec<Attr>) -> Result<Self> {
        if data.len() != ut_len(n) {
            return Err(Error::LengthMismatch(ut_len(n), data.len()));
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Attr] {
        &self.data
    }

    /// `out[perm[k]] = self[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.data.len() {
            return Err(Error::LengthMismatch(self.data.len(), perm.len()));
        }
        let mut data = vec![0; self.data.len()];
        for (k, &v) in self.data.iter().enumerate() {
            data[perm[k]] = v;
        }
        Ok(Self { n: self.n, data })
    }
}

pub fn ut_of(adj: &AttrMatrix) -> UtVector {
    let n = adj.n();
    let mut data = Vec::with_capacity(ut_len(n));
    for i in 0..n {
        for j in i + 1..n {
            data.push(adj.get(i, j));
        }
    }
    UtVector { n, data }
}

/// The permutation of unordered pairs induced by a vertex permutation:
/// pair `{i, j}` goes to `{sigma(i), sigma(j)}`.
pub fn induced_ut_permutation(sigma: &Labeling) -> Vec<usize> {
    let n = sigma.len();
    let mut out = Vec::with_capacity(ut_len(n));
    for i in 0..n {
        for j in i + 1..n {
            out.push(ut_index(sigma.get(i), sigma.get(j), n));
        }
    }
    out
}

/// A correlated pair of graphs. `adj1` is indexed by label (the first
/// graph's labeling is the identity); `adj2` is indexed by the second
/// graph's vertices, whose hidden labels are `truth`.
#[derive(Debug, Clone)]
pub struct GraphPair {
    pub adj1: AttrMatrix,
    pub adj2: AttrMatrix,
    pub truth: Labeling,
    pub dist: EdgeDistribution,
}

impl GraphPair {
    pub fn new(adj1: AttrMatrix, adj2: AttrMatrix, truth: Labeling, dist: EdgeDistribution) -> Result<Self> {
        let n = adj1.n();
        for m in [adj2.n(), truth.len()] {
            if m != n {
                return Err(Error::DimensionMismatch { expected: n, got: m });
            }
        }
        let ell = dist.ell();
        for a in [adj1.max_attr(), adj2.max_attr()] {
            if a as usize >= ell {
                return Err(Error::OutOfRange(format!("attribute {a} >= alphabet size {ell}")));
            }
        }
        Ok(Self { adj1, adj2, truth, dist })
    }

    pub fn n(&self) -> usize {
        self.adj1.n()
    }
}
