//! The typicality matching strategy.
//!
//! Candidates are the labelings consistent with the ambiguity sets whose
//! relabeled second graph is jointly typical with the first. They are
//! enumerated by backtracking over vertices (most constrained first) with
//! forward checking on label availability. When a typicality test is
//! attached, partial assignments are cut as soon as some cell of the
//! joint type over the already-decided vertex pairs can no longer land
//! within `eps` of `P_{X,Y}`. Counts only grow as vertices are added, so
//! the cut never discards a completable typical labeling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ambiguity::AmbiguityMatrix;
use crate::error::{Error, Result};
use crate::model::{ut_len, AttrMatrix, EdgeDistribution, GraphPair, Labeling};
use crate::typicality::{cell_ok, cell_reachable, TypicalityParams};

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;
pub const DEFAULT_CANDIDATE_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOptions {
    /// Maximum number of search nodes (tentative vertex assignments).
    pub node_budget: u64,
    /// Maximum number of candidate labelings kept in [`CandidateSet`].
    pub candidate_cap: usize,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self { node_budget: DEFAULT_NODE_BUDGET, candidate_cap: DEFAULT_CANDIDATE_CAP }
    }
}

/// Joint type of the decided vertex pairs plus bounds on what the
/// undecided pairs can still add.
///
/// Undecided pairs fall into blocks whose attribute multisets are already
/// fixed on both sides: for each assigned vertex `t` with label `j`, the
/// pairs `(t, u)` with `u` unassigned carry second-graph values
/// `adj2[t][u]` and first-graph values `adj1[j][m]` over unused labels
/// `m`; the pairs among unassigned vertices do the same with the unused
/// labels. Whatever the completion, each block couples its two multisets,
/// so its contribution to cell `(x, y)` lies within the Frechet bounds
/// `[max(0, X[x] + Y[y] - size), min(X[x], Y[y])]`.
struct TypeTracker<'a> {
    adj1: &'a AttrMatrix,
    adj2: &'a AttrMatrix,
    dist: &'a EdgeDistribution,
    eps: f64,
    n: usize,
    ell: usize,
    total: u64,
    counts: Vec<u64>,
    vertex_free: Vec<bool>,
    label_free: Vec<bool>,
    /// Per assigned vertex: first-graph counts over unused labels.
    row_x: Vec<u64>,
    /// Per assigned vertex: second-graph counts over unassigned vertices.
    row_y: Vec<u64>,
    block_x: Vec<u64>,
    block_y: Vec<u64>,
}

impl<'a> TypeTracker<'a> {
    fn new(pair: &'a GraphPair, eps: f64) -> Self {
        let n = pair.n();
        let ell = pair.dist.ell();
        let mut block_x = vec![0; ell];
        let mut block_y = vec![0; ell];
        for i in 0..n {
            for j in i + 1..n {
                block_x[pair.adj1.get(i, j) as usize] += 1;
                block_y[pair.adj2.get(i, j) as usize] += 1;
            }
        }
        Self {
            adj1: &pair.adj1,
            adj2: &pair.adj2,
            dist: &pair.dist,
            eps,
            n,
            ell,
            total: ut_len(n) as u64,
            counts: vec![0; ell * ell],
            vertex_free: vec![true; n],
            label_free: vec![true; n],
            row_x: vec![0; n * ell],
            row_y: vec![0; n * ell],
            block_x,
            block_y,
        }
    }

    /// True when no joint type of the full length can fail the test.
    fn is_vacuous(&self) -> bool {
        self.dist.joint_flat().iter().all(|&p| p > 0.0 && p + self.eps >= 1.0 && p - self.eps <= 0.0)
    }

    /// Whether some complete labeling extending the current state could
    /// still be typical, judged cell by cell.
    fn feasible(&self, earlier: &[(usize, usize)], newest: Option<usize>) -> bool {
        let ell = self.ell;
        let free = (self.n - earlier.len() - usize::from(newest.is_some())) as u64;
        let block_pairs = free * free.saturating_sub(1) / 2;
        let joint = self.dist.joint_flat();
        for x in 0..ell {
            for y in 0..ell {
                let mut lo = (self.block_x[x] + self.block_y[y]).saturating_sub(block_pairs);
                let mut hi = self.block_x[x].min(self.block_y[y]);
                for t in earlier.iter().map(|&(t, _)| t).chain(newest) {
                    let (rx, ry) = (self.row_x[t * ell + x], self.row_y[t * ell + y]);
                    lo += (rx + ry).saturating_sub(free);
                    hi += rx.min(ry);
                }
                let c = self.counts[x * ell + y];
                if !cell_reachable(c + lo, c + hi, self.total, joint[x * ell + y], self.eps) {
                    return false;
                }
            }
        }
        true
    }

    /// Assigns `label` to `vertex`; `earlier` holds the previous
    /// assignments. Returns false when typicality is out of reach.
    fn push(&mut self, vertex: usize, label: usize, earlier: &[(usize, usize)]) -> bool {
        let ell = self.ell;
        for &(t, j) in earlier {
            let y = self.adj2.get(vertex, t) as usize;
            let x = self.adj1.get(label, j) as usize;
            self.counts[x * ell + y] += 1;
            self.row_y[t * ell + y] -= 1;
            self.row_x[t * ell + x] -= 1;
        }
        self.vertex_free[vertex] = false;
        self.label_free[label] = false;
        let (rx, ry) = (vertex * ell, vertex * ell);
        self.row_x[rx..rx + ell].fill(0);
        self.row_y[ry..ry + ell].fill(0);
        for u in 0..self.n {
            if self.vertex_free[u] {
                self.row_y[ry + self.adj2.get(vertex, u) as usize] += 1;
            }
            if self.label_free[u] {
                self.row_x[rx + self.adj1.get(label, u) as usize] += 1;
            }
        }
        for k in 0..ell {
            self.block_x[k] -= self.row_x[rx + k];
            self.block_y[k] -= self.row_y[ry + k];
        }
        self.feasible(earlier, Some(vertex))
    }

    fn pop(&mut self, vertex: usize, label: usize, earlier: &[(usize, usize)]) {
        let ell = self.ell;
        let r = vertex * ell;
        for k in 0..ell {
            self.block_x[k] += self.row_x[r + k];
            self.block_y[k] += self.row_y[r + k];
        }
        self.vertex_free[vertex] = true;
        self.label_free[label] = true;
        for &(t, j) in earlier {
            let y = self.adj2.get(vertex, t) as usize;
            let x = self.adj1.get(label, j) as usize;
            self.counts[x * ell + y] -= 1;
            self.row_y[t * ell + y] += 1;
            self.row_x[t * ell + x] += 1;
        }
    }

    fn complete_is_typical(&self) -> bool {
        self.counts
            .iter()
            .zip(self.dist.joint_flat())
            .all(|(&c, &p)| cell_ok(c, self.total, p, self.eps))
    }
}

struct Backtracker<'a> {
    n: usize,
    order: Vec<usize>,
    options: Vec<Vec<usize>>,
    col_rows: Vec<Vec<usize>>,
    avail: Vec<usize>,
    label_of: Vec<usize>,
    is_assigned: Vec<bool>,
    used: Vec<bool>,
    cursor: Vec<usize>,
    // (vertex, label) per depth
    stack: Vec<(usize, usize)>,
    depth: usize,
    nodes: u64,
    budget: u64,
    truncated: bool,
    done: bool,
    tracker: Option<TypeTracker<'a>>,
}

const UNASSIGNED: usize = usize::MAX;

impl<'a> Backtracker<'a> {
    fn new(b: &AmbiguityMatrix, budget: u64, tracker: Option<TypeTracker<'a>>) -> Self {
        let n = b.n();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&s| b.row_size(s));
        let options = order.iter().map(|&s| (0..n).filter(|&i| b.get(s, i)).collect()).collect();
        let col_rows = (0..n).map(|i| (0..n).filter(|&s| b.get(s, i)).collect()).collect();
        let avail: Vec<usize> = (0..n).map(|s| b.row_size(s)).collect();
        let done = n == 0 || avail.iter().any(|&a| a == 0) || tracker.as_ref().is_some_and(|t| !t.feasible(&[], None));
        Self {
            n,
            order,
            options,
            col_rows,
            avail,
            label_of: vec![UNASSIGNED; n],
            is_assigned: vec![false; n],
            used: vec![false; n],
            cursor: vec![0; n],
            stack: Vec::with_capacity(n),
            depth: 0,
            nodes: 0,
            budget,
            truncated: false,
            done,
            tracker,
        }
    }

    /// Tentatively gives `label` to the vertex at the current depth.
    /// On failure the state is left unchanged.
    fn assign(&mut self, label: usize) -> bool {
        let v = self.order[self.depth];
        self.is_assigned[v] = true;
        self.label_of[v] = label;
        self.used[label] = true;
        let mut ok = true;
        for &s in &self.col_rows[label] {
            if !self.is_assigned[s] {
                self.avail[s] -= 1;
                ok &= self.avail[s] > 0;
            }
        }
        if ok {
            if let Some(tr) = self.tracker.as_mut() {
                if !tr.push(v, label, &self.stack) {
                    tr.pop(v, label, &self.stack);
                    ok = false;
                }
            }
        }
        if ok {
            self.stack.push((v, label));
        } else {
            self.release(v, label);
        }
        ok
    }

    fn release(&mut self, v: usize, label: usize) {
        for &s in &self.col_rows[label] {
            if !self.is_assigned[s] {
                self.avail[s] += 1;
            }
        }
        self.used[label] = false;
        self.is_assigned[v] = false;
        self.label_of[v] = UNASSIGNED;
    }

    fn unassign_top(&mut self) {
        let (v, label) = self.stack.pop().expect("non-empty stack");
        if let Some(tr) = self.tracker.as_mut() {
            tr.pop(v, label, &self.stack);
        }
        self.release(v, label);
    }

    /// Advances to the next accepted complete assignment.
    fn next_leaf(&mut self) -> Option<&[usize]> {
        loop {
            if self.done {
                return None;
            }
            if self.depth == self.n {
                self.depth -= 1;
                self.unassign_top();
            }
            let d = self.depth;
            let mut advanced = false;
            while self.cursor[d] < self.options[d].len() {
                let label = self.options[d][self.cursor[d]];
                self.cursor[d] += 1;
                if self.used[label] {
                    continue;
                }
                if self.nodes >= self.budget {
                    self.truncated = true;
                    self.done = true;
                    return None;
                }
                self.nodes += 1;
                if self.assign(label) {
                    advanced = true;
                    break;
                }
            }
            if advanced {
                self.depth += 1;
                if self.depth < self.n {
                    self.cursor[self.depth] = 0;
                    continue;
                }
                let accept = self.tracker.as_ref().is_none_or(|t| t.complete_is_typical());
                if accept {
                    return Some(&self.label_of);
                }
                continue;
            }
            if d == 0 {
                self.done = true;
                return None;
            }
            self.depth -= 1;
            self.unassign_top();
        }
    }
}

/// Lazily enumerates the labelings consistent with an ambiguity matrix,
/// i.e. the perfect matchings of the vertex/label bipartite graph.
pub struct ConsistentLabelings<'a> {
    bt: Backtracker<'a>,
}

impl ConsistentLabelings<'_> {
    /// Whether the node budget ran out before the search finished.
    pub fn truncated(&self) -> bool {
        self.bt.truncated
    }

    pub fn nodes_explored(&self) -> u64 {
        self.bt.nodes
    }
}

impl Iterator for ConsistentLabelings<'_> {
    type Item = Labeling;

    fn next(&mut self) -> Option<Labeling> {
        self.bt.next_leaf().map(|l| Labeling::from_vec_unchecked(l.to_vec()))
    }
}

pub fn enumerate_consistent(b: &AmbiguityMatrix, node_budget: u64) -> ConsistentLabelings<'static> {
    ConsistentLabelings { bt: Backtracker::new(b, node_budget, None) }
}

/// The candidate set, possibly truncated by the node budget. `labelings`
/// holds at most `candidate_cap` members in enumeration order; `count`
/// is the full number found.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub labelings: Vec<Labeling>,
    pub count: u64,
    /// Members equal to the true labeling (0 or 1).
    pub exact_count: u64,
    pub truncated: bool,
    pub nodes_explored: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// `None` when no consistent labeling is typical.
    pub chosen: Option<Labeling>,
    pub candidate_count: u64,
    pub accuracy: Option<f64>,
    pub truncated: bool,
    pub candidates: CandidateSet,
}

impl MatchResult {
    pub fn is_failure(&self) -> bool {
        self.chosen.is_none()
    }

    pub fn exact_match(&self) -> bool {
        self.accuracy == Some(1.0)
    }

    /// Whether some candidate other than the truth passed the test.
    pub fn has_wrong_candidate(&self) -> bool {
        self.candidates.count > self.candidates.exact_count
    }
}

fn check_dims(pair: &GraphPair, b: &AmbiguityMatrix) -> Result<()> {
    if pair.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: pair.n(), got: b.n() });
    }
    if pair.n() == 0 {
        return Err(Error::InvalidN(0));
    }
    Ok(())
}

/// Walks every consistent, jointly typical labeling, calling `visit` with
/// the vertex-to-label map. Returns `(nodes_explored, truncated)`.
pub fn for_each_candidate<F: FnMut(&[usize])>(
    pair: &GraphPair,
    b: &AmbiguityMatrix,
    params: &TypicalityParams,
    node_budget: u64,
    mut visit: F,
) -> Result<(u64, bool)> {
    check_dims(pair, b)?;
    let tracker = TypeTracker::new(pair, params.epsilon());
    let tracker = if tracker.is_vacuous() { None } else { Some(tracker) };
    let mut bt = Backtracker::new(b, node_budget, tracker);
    while let Some(l) = bt.next_leaf() {
        visit(l);
    }
    Ok((bt.nodes, bt.truncated))
}

/// Builds the candidate set and picks one member uniformly at random
/// (reservoir sampling, so the pick is uniform over all members even
/// beyond the storage cap).
pub fn tm_match<R: Rng + ?Sized>(
    pair: &GraphPair,
    b: &AmbiguityMatrix,
    params: &TypicalityParams,
    rng: &mut R,
    opts: &MatchOptions,
) -> Result<MatchResult> {
    let truth = pair.truth.as_slice();
    let mut labelings = Vec::new();
    let mut count = 0u64;
    let mut exact_count = 0u64;
    let mut chosen: Option<Vec<usize>> = None;
    let (nodes, truncated) = for_each_candidate(pair, b, params, opts.node_budget, |l| {
        count += 1;
        if l == truth {
            exact_count += 1;
        }
        if labelings.len() < opts.candidate_cap {
            labelings.push(Labeling::from_vec_unchecked(l.to_vec()));
        }
        if rng.random_range(0..count) == 0 {
            match chosen.as_mut() {
                Some(c) => c.copy_from_slice(l),
                None => chosen = Some(l.to_vec()),
            }
        }
    })?;
    let chosen = chosen.map(Labeling::from_vec_unchecked);
    let accuracy = match &chosen {
        Some(c) => Some(accuracy(c, &pair.truth)?),
        None => None,
    };
    Ok(MatchResult {
        chosen,
        candidate_count: count,
        accuracy,
        truncated,
        candidates: CandidateSet { labelings, count, exact_count, truncated, nodes_explored: nodes },
    })
}

/// Fraction of vertices whose label agrees with the truth.
pub fn accuracy(chosen: &Labeling, truth: &Labeling) -> Result<f64> {
    let n = truth.len();
    if n == 0 {
        return Ok(1.0);
    }
    let wrong = chosen.hamming_distance(truth)?;
    Ok((n - wrong) as f64 / n as f64)
}
