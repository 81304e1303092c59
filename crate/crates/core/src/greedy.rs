//! Exact greedy spanners.
//!
//! [`path_greedy`] is the textbook formulation: scan all pairs by increasing
//! distance and add `{u, v}` whenever the current graph has no t-path between
//! them. [`fg_greedy`] produces the same edge set but caches, in a dense
//! matrix, upper bounds on path lengths obtained from earlier single-source
//! searches, so most pairs are rejected without any search at all.

use crate::error::{Error, Result};
use crate::geometry::{pair_sort_key, unpack_pair_key, Graph, PointSet};
use crate::paths::{within_stretch, HeapEntry, SearchScratch, STRETCH_SLACK};

/// One candidate pair `u < v` with its Euclidean length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub u: u32,
    pub v: u32,
    pub length: f64,
}

/// All unordered pairs of a pointset, sorted by length with `(u, v)` as the
/// tie-break.
#[derive(Clone, Debug)]
pub struct CandidateList(Vec<Candidate>);

impl CandidateList {
    pub fn all_pairs(points: &PointSet) -> Self {
        let n = points.len();
        let mut keys = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                keys.push(pair_sort_key(points.dist(u, v), u as u32, v as u32));
            }
        }
        keys.sort_unstable();
        let pairs = keys
            .into_iter()
            .map(|k| {
                let (length, u, v) = unpack_pair_key(k);
                Candidate { u, v, length }
            })
            .collect();
        Self(pairs)
    }

    pub fn as_slice(&self) -> &[Candidate] {
        &self.0
    }
}

/// Result of a targeted shortest-path query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reach {
    Distance(f64),
    ExceedsBudget,
    Unreachable,
}

/// Single-source shortest-path distances from `source` (`+inf` when unreachable).
pub fn dijkstra_sssp(g: &Graph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.vertex_count()];
    let mut scratch = SearchScratch::new(g.vertex_count());
    dijkstra_into(g, source, &mut scratch, |v, d| dist[v] = d);
    dist
}

/// Runs a full Dijkstra from `source`, reporting each settled vertex.
pub(crate) fn dijkstra_into(
    g: &Graph,
    source: usize,
    scratch: &mut SearchScratch,
    mut settle: impl FnMut(usize, f64),
) {
    scratch.begin(g.vertex_count());
    scratch.relax(source, 0.0, source);
    scratch.heap.push(HeapEntry {
        key: 0.0,
        g: 0.0,
        v: source,
    });
    while let Some(HeapEntry { g: d, v: x, .. }) = scratch.heap.pop() {
        if d > scratch.dist[x] {
            continue;
        }
        scratch.explored += 1;
        settle(x, d);
        for &(y, w) in g.neighbors(x) {
            let nd = d + w;
            if nd < scratch.tentative(y) {
                scratch.relax(y, nd, x);
                scratch.heap.push(HeapEntry { key: nd, g: nd, v: y });
            }
        }
    }
}

/// Dijkstra from `source` that stops once `target` is settled, or once the
/// frontier minimum exceeds `budget`.
pub fn shortest_distance(
    g: &Graph,
    source: usize,
    target: usize,
    budget: Option<f64>,
    scratch: &mut SearchScratch,
) -> Reach {
    let limit = budget.unwrap_or(f64::INFINITY);
    scratch.begin(g.vertex_count());
    scratch.relax(source, 0.0, source);
    scratch.heap.push(HeapEntry {
        key: 0.0,
        g: 0.0,
        v: source,
    });
    while let Some(HeapEntry { g: d, v: x, .. }) = scratch.heap.pop() {
        if d > scratch.dist[x] {
            continue;
        }
        if d > limit {
            return Reach::ExceedsBudget;
        }
        if x == target {
            return Reach::Distance(d);
        }
        for &(y, w) in g.neighbors(x) {
            let nd = d + w;
            if nd < scratch.tentative(y) {
                scratch.relax(y, nd, x);
                scratch.heap.push(HeapEntry { key: nd, g: nd, v: y });
            }
        }
    }
    Reach::Unreachable
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 1.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must exceed 1 (got {t})")));
    }
    Ok(())
}

/// Path-Greedy: one bounded shortest-path query per candidate pair.
/// Quadratic memory and cubic-ish time; meant as a reference on small inputs.
pub fn path_greedy(points: &PointSet, t: f64) -> Result<Graph> {
    check_t(t)?;
    let mut g = Graph::new(points);
    let mut scratch = SearchScratch::new(points.len());
    for c in CandidateList::all_pairs(points).as_slice() {
        let (u, v) = (c.u as usize, c.v as usize);
        let budget = t * c.length + STRETCH_SLACK * c.length;
        let reach = shortest_distance(&g, u, v, Some(budget), &mut scratch);
        let has_t_path = matches!(reach, Reach::Distance(d) if within_stretch(d, c.length, t));
        if !has_t_path {
            g.add_edge(u, v)?;
        }
    }
    Ok(g)
}

/// Dense symmetric matrix of path-length upper bounds, initialised to `+inf`
/// off the diagonal.
#[derive(Clone, Debug)]
pub struct WeightMatrix {
    n: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(n: usize) -> Self {
        let mut w = vec![f64::INFINITY; n * n];
        for i in 0..n {
            w[i * n + i] = 0.0;
        }
        Self { n, w }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    #[inline]
    fn set_sym(&mut self, i: usize, j: usize, d: f64) {
        self.w[i * self.n + j] = d;
        self.w[j * self.n + i] = d;
    }
}

/// FG-Greedy. Produces the same graph as [`path_greedy`]; the weight matrix
/// is sized to `points`, so callers keep `points` small (a quad-tree leaf).
pub fn fg_greedy(points: &PointSet, t: f64) -> Result<Graph> {
    check_t(t)?;
    let n = points.len();
    let mut g = Graph::new(points);
    let mut weight = WeightMatrix::new(n);
    let mut scratch = SearchScratch::new(n);
    let mut settled = Vec::with_capacity(n);
    for c in CandidateList::all_pairs(points).as_slice() {
        let (u, v) = (c.u as usize, c.v as usize);
        if within_stretch(weight.get(u, v), c.length, t) {
            continue;
        }
        settled.clear();
        dijkstra_into(&g, u, &mut scratch, |q, d| settled.push((q, d)));
        for &(q, d) in &settled {
            weight.set_sym(u, q, d);
        }
        if !within_stretch(weight.get(u, v), c.length, t) {
            g.add_edge(u, v)?;
        }
    }
    Ok(g)
}
