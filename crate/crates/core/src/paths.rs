//! t-path finders: the neighbor-walking greedy path and budgeted A*.
//!
//! Both searches borrow a [`SearchScratch`] whose per-vertex arrays are
//! stamped with a generation counter, so starting a search costs O(1) instead
//! of clearing O(n) state.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::{Graph, PointSet};

/// Relative slack applied to every `length <= t * |uv|` comparison.
pub const STRETCH_SLACK: f64 = 1e-12;

/// `length <= t * euclid`, inclusive, with [`STRETCH_SLACK`] relative slack.
#[inline]
pub fn within_stretch(length: f64, euclid: f64, t: f64) -> bool {
    length <= t * euclid + STRETCH_SLACK * euclid
}

/// Outcome of a path search between two vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct PathResult {
    pub vertices: Vec<usize>,
    pub length: f64,
    pub found: bool,
}

impl PathResult {
    fn not_found() -> Self {
        Self {
            vertices: Vec::new(),
            length: f64::INFINITY,
            found: false,
        }
    }
}

/// Whether `path` (between `u` and `v`) is a t-path: `length <= t * |uv|`.
pub fn is_t_path(points: &PointSet, path: &PathResult, u: usize, v: usize, t: f64) -> bool {
    path.found && within_stretch(path.length, points.dist(u, v), t)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct HeapEntry {
    pub key: f64,
    pub g: f64,
    pub v: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // min-heap on key, then on vertex id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.v.cmp(&self.v))
    }
}

/// Reusable per-thread search state.
#[derive(Debug, Default)]
pub struct SearchScratch {
    stamp: u32,
    seen: Vec<u32>,
    pub(crate) dist: Vec<f64>,
    parent: Vec<usize>,
    pub(crate) heap: BinaryHeap<HeapEntry>,
    /// Vertices touched by the most recent search (A*/Dijkstra settled count).
    pub explored: usize,
}

impl SearchScratch {
    pub fn new(n: usize) -> Self {
        let mut s = Self::default();
        s.ensure(n);
        s
    }

    fn ensure(&mut self, n: usize) {
        if self.seen.len() < n {
            self.seen.resize(n, 0);
            self.dist.resize(n, f64::INFINITY);
            self.parent.resize(n, usize::MAX);
        }
    }

    /// Starts a new generation; every vertex reads as unseen afterwards.
    pub(crate) fn begin(&mut self, n: usize) {
        self.ensure(n);
        self.heap.clear();
        self.explored = 0;
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.stamp = 1;
        }
    }

    #[inline]
    pub(crate) fn is_seen(&self, v: usize) -> bool {
        self.seen[v] == self.stamp
    }

    #[inline]
    pub(crate) fn mark(&mut self, v: usize) {
        self.seen[v] = self.stamp;
    }

    #[inline]
    pub(crate) fn tentative(&self, v: usize) -> f64 {
        if self.is_seen(v) {
            self.dist[v]
        } else {
            f64::INFINITY
        }
    }

    #[inline]
    pub(crate) fn relax(&mut self, v: usize, d: f64, from: usize) {
        self.seen[v] = self.stamp;
        self.dist[v] = d;
        self.parent[v] = from;
    }

    fn trace(&self, u: usize, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut x = v;
        while x != u {
            x = self.parent[x];
            path.push(x);
        }
        path.reverse();
        path
    }
}

/// Greedy-Path: walk from `u`, always stepping to the unvisited neighbor `x`
/// minimizing `|yx| + |xv|` (lowest id on ties), until `v` is reached or the
/// walk is stuck.
pub fn greedy_path(g: &Graph, u: usize, v: usize) -> PathResult {
    greedy_path_with(g, u, v, None, &mut SearchScratch::new(g.vertex_count()))
}

/// [`greedy_path`] with reusable scratch. With a `budget`, the walk gives up
/// (reporting `found = false`) as soon as its length exceeds the budget.
pub fn greedy_path_with(
    g: &Graph,
    u: usize,
    v: usize,
    budget: Option<f64>,
    scratch: &mut SearchScratch,
) -> PathResult {
    let pts = g.points();
    let target = pts[v];
    let limit = budget.unwrap_or(f64::INFINITY);
    scratch.begin(g.vertex_count());
    scratch.mark(u);
    let mut path = vec![u];
    let mut length = 0.0;
    let mut y = u;
    while y != v {
        let mut best: Option<(f64, usize, f64)> = None;
        for &(x, w) in g.neighbors(y) {
            if scratch.is_seen(x) {
                continue;
            }
            let score = w + pts[x].dist(&target);
            let better = match best {
                None => true,
                Some((s, bx, _)) => score < s || (score == s && x < bx),
            };
            if better {
                best = Some((score, x, w));
            }
        }
        let Some((_, x, w)) = best else {
            return PathResult::not_found();
        };
        scratch.mark(x);
        path.push(x);
        length += w;
        if length > limit {
            return PathResult::not_found();
        }
        y = x;
    }
    scratch.explored = path.len();
    PathResult {
        vertices: path,
        length,
        found: true,
    }
}

/// Exact shortest path by A* with the straight-line heuristic.
pub fn astar(g: &Graph, u: usize, v: usize) -> PathResult {
    astar_with(g, u, v, None, &mut SearchScratch::new(g.vertex_count()))
}

/// [`astar`] with reusable scratch and an optional length budget: the search
/// is abandoned (`found = false`) once the smallest frontier f-value exceeds
/// `budget`, i.e. once no path within the budget can exist.
pub fn astar_with(
    g: &Graph,
    u: usize,
    v: usize,
    budget: Option<f64>,
    scratch: &mut SearchScratch,
) -> PathResult {
    let pts = g.points();
    let target = pts[v];
    let limit = budget.unwrap_or(f64::INFINITY);
    scratch.begin(g.vertex_count());
    scratch.relax(u, 0.0, u);
    scratch.heap.push(HeapEntry {
        key: pts[u].dist(&target),
        g: 0.0,
        v: u,
    });
    while let Some(HeapEntry { key, g: gx, v: x }) = scratch.heap.pop() {
        if gx > scratch.dist[x] {
            continue;
        }
        if key > limit {
            break;
        }
        scratch.explored += 1;
        if x == v {
            return PathResult {
                vertices: scratch.trace(u, v),
                length: gx,
                found: true,
            };
        }
        for &(y, w) in g.neighbors(x) {
            let ng = gx + w;
            if ng < scratch.tentative(y) {
                scratch.relax(y, ng, x);
                scratch.heap.push(HeapEntry {
                    key: ng + pts[y].dist(&target),
                    g: ng,
                    v: y,
                });
            }
        }
    }
    PathResult::not_found()
}
