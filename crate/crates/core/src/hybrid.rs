//! The hybrid construction: local greedy spanners inside quad-tree leaves,
//! a WSPD spanner on the leaf leaders, then merging of leaf pairs that are up
//! to `h` hops apart in the dual graph.
//!
//! Merging two leaves guarantees a t-path for every cross pair `(u, v)`. Each
//! merge keeps a cache of *bridges*, paths `x ~> y` already known between the
//! two leaves. Since each leaf carries an exact greedy t-spanner, `t * |ux|`
//! bounds the path length from `u` to `x` inside the leaf, and a pair is
//! settled without any search whenever
//! `t|ux| + |x~>y| + t|yv| <= t|uv|` for some cached bridge.

use std::fmt;

use parking_lot::RwLock;
use rayon::prelude::*;
use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::geometry::{edge_key, pair_sort_key, unpack_pair_key, Graph, PointSet};
use crate::greedy::fg_greedy;
use crate::paths::{astar_with, greedy_path_with, within_stretch, SearchScratch, STRETCH_SLACK};
use crate::quadtree::{DualGraph, QuadTree};
use crate::wspd::wspd_spanner;

/// Leaf capacity used by [`default_params`].
pub const DEFAULT_LEAF_CAPACITY: usize = 2500;

/// Tuned hop radius per stretch factor.
pub const HOP_TABLE: [(f64, usize); 4] = [(1.05, 6), (1.1, 5), (1.25, 3), (2.0, 1)];

/// Construction parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    /// Target stretch factor, `> 1`.
    pub t: f64,
    /// Stretch of the WSPD spanner on the leaders, `>= t`.
    pub t_prime: f64,
    /// Leaf capacity of the quad-tree.
    pub k: usize,
    /// Hop radius for merging in the dual graph.
    pub h: usize,
}

impl Params {
    pub fn new(t: f64, t_prime: f64, k: usize, h: usize) -> Result<Self> {
        let p = Self { t, t_prime, k, h };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.t > 1.0) || !self.t.is_finite() {
            return bad(format!("t must exceed 1 (got {})", self.t));
        }
        if !(self.t_prime >= self.t) || !self.t_prime.is_finite() {
            return bad(format!(
                "t' must be at least t (got t'={}, t={})",
                self.t_prime, self.t
            ));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.h == 0 {
            return bad("h must be at least 1".into());
        }
        Ok(())
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} t'={} k={} h={}", self.t, self.t_prime, self.k, self.h)
    }
}

/// Tuned defaults: `k = 2500`; `t' = 1.25` for `1.1 <= t <= 1.25`, else
/// `t' = t`; `h` from [`HOP_TABLE`], using the entry of the largest tabulated
/// stretch not above `t` (6 below 1.05).
pub fn default_params(t: f64) -> Result<Params> {
    if !(t > 1.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must exceed 1 (got {t})")));
    }
    let t_prime = if (1.1..=1.25).contains(&t) { 1.25 } else { t };
    let h = HOP_TABLE
        .iter()
        .rev()
        .find(|&&(tt, _)| t >= tt)
        .map_or(HOP_TABLE[0].1, |&(_, h)| h);
    Params::new(t, t_prime, DEFAULT_LEAF_CAPACITY, h)
}

/// A cached path between `x` (in the first leaf) and `y` (in the second).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bridge {
    pub x: usize,
    pub y: usize,
    pub length: f64,
}

/// Counters collected while merging or measuring.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub pairs_examined: u64,
    pub pruned_pairs: u64,
    pub bridge_hits: u64,
    pub greedy_path_calls: u64,
    pub greedy_path_successes: u64,
    pub astar_calls: u64,
    pub astar_successes: u64,
}

impl SearchStats {
    pub fn absorb(&mut self, o: &SearchStats) {
        self.pairs_examined += o.pairs_examined;
        self.pruned_pairs += o.pruned_pairs;
        self.bridge_hits += o.bridge_hits;
        self.greedy_path_calls += o.greedy_path_calls;
        self.greedy_path_successes += o.greedy_path_successes;
        self.astar_calls += o.astar_calls;
        self.astar_successes += o.astar_successes;
    }

    /// Fraction of greedy-path attempts that produced a t-path.
    pub fn greedy_path_success_rate(&self) -> f64 {
        if self.greedy_path_calls == 0 {
            return 0.0;
        }
        self.greedy_path_successes as f64 / self.greedy_path_calls as f64
    }
}

/// Unordered leaf pairs that went through a merge, in merge order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MergedPairs {
    set: FxHashSet<u64>,
    order: Vec<(usize, usize)>,
}

impl MergedPairs {
    pub fn insert(&mut self, a: usize, b: usize) -> bool {
        let fresh = self.set.insert(edge_key(a, b));
        if fresh {
            self.order.push((a.min(b), a.max(b)));
        }
        fresh
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.set.contains(&edge_key(a, b))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Pairs as `(min, max)`, in insertion order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.order
    }
}

/// Edges contributed by each phase of the construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepEdges {
    pub leaf_greedy: usize,
    pub leader_wspd: usize,
    pub neighbor_merge: usize,
    pub hop_merge: usize,
}

impl StepEdges {
    pub fn total(&self) -> usize {
        self.leaf_greedy + self.leader_wspd + self.neighbor_merge + self.hop_merge
    }
}

/// Everything needed to measure the stretch factor of a constructed graph
/// later on without rerunning the construction.
#[derive(Clone, Debug)]
pub struct ConstructionRecord {
    pub points: PointSet,
    pub graph: Graph,
    pub tree: QuadTree,
    pub merged: MergedPairs,
    pub params: Params,
    pub step_edges: StepEdges,
    pub stats: SearchStats,
    /// Edge count and fingerprint of `graph` when the construction finished.
    pub sealed_edges: usize,
    pub sealed_fingerprint: u64,
}

impl ConstructionRecord {
    /// Ids of the non-empty leaves.
    pub fn non_empty_leaves(&self) -> Vec<usize> {
        self.tree.non_empty_leaves().collect()
    }

    /// Checks that `graph` is the graph the record was sealed with and that
    /// the leaves partition the points.
    pub fn validate(&self) -> Result<()> {
        let mismatch = |m: String| Err(Error::RecordMismatch(m));
        let n = self.points.len();
        if self.graph.vertex_count() != n {
            return mismatch(format!(
                "graph has {} vertices, record has {n} points",
                self.graph.vertex_count()
            ));
        }
        if self.graph.edge_count() != self.sealed_edges {
            return mismatch(format!(
                "graph has {} edges, record was sealed with {}",
                self.graph.edge_count(),
                self.sealed_edges
            ));
        }
        if self.graph.fingerprint() != self.sealed_fingerprint {
            return mismatch("edge set differs from the sealed edge set".into());
        }
        let mut owner = vec![usize::MAX; n];
        for leaf in self.tree.leaves() {
            for &p in &leaf.points {
                if p >= n || owner[p] != usize::MAX {
                    return mismatch(format!("point {p} is not in exactly one leaf"));
                }
                owner[p] = leaf.id;
            }
            if leaf.leader.is_some() != !leaf.points.is_empty()
                || leaf.leader.is_some_and(|l| !leaf.points.contains(&l))
            {
                return mismatch(format!("leaf {} has an inconsistent leader", leaf.id));
            }
        }
        if owner.contains(&usize::MAX) {
            return mismatch("leaf partition does not cover every point".into());
        }
        for &(a, b) in self.merged.pairs() {
            let nl = self.tree.leaves().len();
            if a >= nl || b >= nl || self.tree.leaf(a).is_empty() || self.tree.leaf(b).is_empty() {
                return mismatch(format!("merged pair ({a}, {b}) is not a pair of non-empty leaves"));
            }
        }
        Ok(())
    }
}

/// Graph handle used by the merge loops, implemented for exclusive access
/// and for a lock shared between worker threads.
pub(crate) trait GraphAccess {
    fn read<R>(&self, f: impl FnOnce(&Graph) -> R) -> R;
    fn insert(&mut self, u: usize, v: usize) -> bool;
}

impl GraphAccess for Graph {
    fn read<R>(&self, f: impl FnOnce(&Graph) -> R) -> R {
        f(self)
    }

    fn insert(&mut self, u: usize, v: usize) -> bool {
        self.add_edge(u, v).expect("merge edges join distinct valid ids")
    }
}

pub(crate) struct Shared<'a>(pub &'a RwLock<Graph>);

impl GraphAccess for Shared<'_> {
    fn read<R>(&self, f: impl FnOnce(&Graph) -> R) -> R {
        f(&self.0.read())
    }

    fn insert(&mut self, u: usize, v: usize) -> bool {
        self.0
            .write()
            .add_edge(u, v)
            .expect("merge edges join distinct valid ids")
    }
}

/// Verdict on one cross pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum PairStatus {
    /// Settled through a cached bridge.
    Bridged,
    /// A t-path of this length was found by search.
    Found(f64),
    /// No t-path; carries the exact distance when it was requested
    /// (`+inf` if unreachable).
    Missing(Option<f64>),
}

/// Budget for a t-path between points at distance `d`.
#[inline]
fn budget(t: f64, d: f64) -> f64 {
    t * d + STRETCH_SLACK * d
}

const NO_HINT: u32 = u32::MAX;

/// Recent covering bridges remembered per vertex.
const HINTS: usize = 8;

/// Bridges of one leaf pair. Vertices are addressed by their position in
/// the two leaves; each remembers the last few bridges that covered one of
/// its pairs, and those are tried before a full scan.
pub(crate) struct BridgeCache {
    bridges: Vec<Bridge>,
    hint_i: Vec<[u32; HINTS]>,
    hint_j: Vec<[u32; HINTS]>,
}

fn remember(slot: &mut [u32; HINTS], k: u32) {
    if slot[0] != k {
        slot.copy_within(0..HINTS - 1, 1);
        slot[0] = k;
    }
}

impl BridgeCache {
    pub(crate) fn new(ni: usize, nj: usize) -> Self {
        Self {
            bridges: Vec::new(),
            hint_i: vec![[NO_HINT; HINTS]; ni],
            hint_j: vec![[NO_HINT; HINTS]; nj],
        }
    }

    pub(crate) fn push(&mut self, b: Bridge) {
        self.bridges.push(b);
    }

    /// Whether some bridge certifies a t-path for `(u, v)`.
    #[allow(clippy::too_many_arguments)]
    fn covering(&mut self, points: &PointSet, u: usize, iu: usize, v: usize, iv: usize, d: f64, t: f64) -> Option<Bridge> {
        let limit = budget(t, d);
        let (pu, pv) = (points[u], points[v]);
        let covers = |b: &Bridge| {
            // Cheap rejection first: |ux| alone must fit in what is left.
            let r = (limit - b.length) / t;
            let px = points[b.x];
            let (dx, dy) = (pu.x - px.x, pu.y - px.y);
            r >= 0.0
                && dx * dx + dy * dy <= r * r * (1.0 + 1e-9)
                && t * pu.dist(&px) + b.length + t * points[b.y].dist(&pv) <= limit
        };
        let n = self.bridges.len();
        let hinted = self.hint_i[iu]
            .into_iter()
            .chain(self.hint_j[iv])
            .chain([n.wrapping_sub(1) as u32])
            .find(|&k| (k as usize) < n && covers(&self.bridges[k as usize]));
        let hit = hinted.or_else(|| {
            self.bridges.iter().rposition(covers).map(|k| k as u32)
        })?;
        remember(&mut self.hint_i[iu], hit);
        remember(&mut self.hint_j[iv], hit);
        Some(self.bridges[hit as usize])
    }
}

/// Bridge check, then greedy path, then budgeted A*. `iu` and `iv` are the
/// positions of `u` and `v` in their leaves.
#[allow(clippy::too_many_arguments)]
pub(crate) fn check_pair(
    g: &Graph,
    (u, iu): (usize, usize),
    (v, iv): (usize, usize),
    t: f64,
    cache: &mut BridgeCache,
    scratch: &mut SearchScratch,
    stats: &mut SearchStats,
    exact_on_miss: bool,
) -> PairStatus {
    let points = g.points();
    let d = points.dist(u, v);
    stats.pairs_examined += 1;
    if let Some(_b) = cache.covering(points, u, iu, v, iv, d, t) {
        stats.bridge_hits += 1;
        #[cfg(debug_assertions)]
        if stats.bridge_hits % 65_536 == 1 {
            debug_check_surrogate(g, u, _b.x, t, scratch);
            debug_check_surrogate(g, _b.y, v, t, scratch);
        }
        return PairStatus::Bridged;
    }
    let limit = budget(t, d);
    stats.greedy_path_calls += 1;
    let gp = greedy_path_with(g, u, v, Some(limit), scratch);
    if gp.found && within_stretch(gp.length, d, t) {
        stats.greedy_path_successes += 1;
        return PairStatus::Found(gp.length);
    }
    stats.astar_calls += 1;
    let a = astar_with(g, u, v, Some(limit), scratch);
    if a.found && within_stretch(a.length, d, t) {
        stats.astar_successes += 1;
        return PairStatus::Found(a.length);
    }
    if !exact_on_miss {
        return PairStatus::Missing(None);
    }
    let exact = astar_with(g, u, v, None, scratch);
    PairStatus::Missing(Some(if exact.found { exact.length } else { f64::INFINITY }))
}

/// The bridge surrogate `t|ux|` must bound the true in-leaf distance.
#[cfg(debug_assertions)]
fn debug_check_surrogate(g: &Graph, a: usize, b: usize, t: f64, scratch: &mut SearchScratch) {
    use crate::greedy::{shortest_distance, Reach};
    if a == b {
        return;
    }
    let d = g.points().dist(a, b);
    let reach = shortest_distance(g, a, b, Some(budget(t, d) * (1.0 + 1e-9)), scratch);
    debug_assert!(
        matches!(reach, Reach::Distance(_)),
        "in-leaf pair ({a}, {b}) has no t-path: surrogate unsound"
    );
}

/// Sort keys of the cross pairs for the full merge, built from the
/// positions of `u` in `pi` and `v` in `pj`. Pairs certified through the
/// leader edge are dropped first.
fn merge_candidates(
    points: &PointSet,
    pi: &[usize],
    pj: &[usize],
    leader_edge: Option<(usize, usize)>,
    t: f64,
    stats: &mut SearchStats,
) -> Vec<u128> {
    let mut list = Vec::with_capacity(pi.len() * pj.len());
    let lead = leader_edge.map(|(li, lj)| (points[li], points.dist(li, lj), points[lj]));
    for (iu, &u) in pi.iter().enumerate() {
        let pu = points[u];
        let via_u = lead.map(|(a, l, _)| t * pu.dist(&a) + l);
        for (iv, &v) in pj.iter().enumerate() {
            let d = pu.dist(&points[v]);
            if let (Some(head), Some((_, _, b))) = (via_u, lead) {
                if head + t * b.dist(&points[v]) <= budget(t, d) {
                    stats.pruned_pairs += 1;
                    continue;
                }
            }
            list.push(pair_sort_key(d, iu as u32, iv as u32));
        }
    }
    // Leaf ids are ascending, so position order is id order.
    list.sort_unstable();
    list
}

fn leaf_points_and_leader(tree: &QuadTree, leaf: usize) -> Result<(&[usize], usize)> {
    let l = tree
        .leaves()
        .get(leaf)
        .ok_or_else(|| Error::InvalidParameter(format!("no leaf {leaf}")))?;
    match l.leader {
        Some(leader) => Ok((&l.points, leader)),
        None => Err(Error::InvalidParameter(format!("leaf {leaf} is empty"))),
    }
}

/// Full merge of two leaves; returns the number of edges added.
pub(crate) fn merge_pair<G: GraphAccess>(
    g: &mut G,
    tree: &QuadTree,
    si: usize,
    sj: usize,
    t: f64,
    scratch: &mut SearchScratch,
    stats: &mut SearchStats,
) -> usize {
    let (pi, li) = leaf_points_and_leader(tree, si).expect("non-empty leaf");
    let (pj, lj) = leaf_points_and_leader(tree, sj).expect("non-empty leaf");
    let candidates = g.read(|graph| {
        let leader_edge = graph.has_edge(li, lj).then_some((li, lj));
        merge_candidates(graph.points(), pi, pj, leader_edge, t, stats)
    });
    let mut cache = BridgeCache::new(pi.len(), pj.len());
    let mut added = 0;
    for key in candidates {
        let (d, iu, iv) = unpack_pair_key(key);
        let (iu, iv) = (iu as usize, iv as usize);
        added += settle_pair(g, (pi[iu], iu), (pj[iv], iv), d, t, &mut cache, scratch, stats);
    }
    added
}

/// Light merge: each side sorted by distance to the other side's leader,
/// bridge cache seeded with the leader edge when present.
pub(crate) fn merge_pair_light<G: GraphAccess>(
    g: &mut G,
    tree: &QuadTree,
    si: usize,
    sj: usize,
    t: f64,
    scratch: &mut SearchScratch,
    stats: &mut SearchStats,
) -> usize {
    let (pi, li) = leaf_points_and_leader(tree, si).expect("non-empty leaf");
    let (pj, lj) = leaf_points_and_leader(tree, sj).expect("non-empty leaf");
    let (order_i, order_j, mut cache) = g.read(|graph| light_setup(graph, pi, li, pj, lj));
    let points = tree_points(g);
    let mut added = 0;
    for &u in &order_i {
        for &v in &order_j {
            let d = points.dist(u.0, v.0);
            added += settle_pair(g, u, v, d, t, &mut cache, scratch, stats);
        }
    }
    added
}

fn tree_points<G: GraphAccess>(g: &G) -> PointSet {
    g.read(|graph| graph.points().clone())
}

/// Sort orders (ids with leaf positions) and seeded bridge cache shared by
/// the light merge and the stretch measurement.
pub(crate) fn light_setup(
    graph: &Graph,
    pi: &[usize],
    li: usize,
    pj: &[usize],
    lj: usize,
) -> (Vec<(usize, usize)>, Vec<(usize, usize)>, BridgeCache) {
    let points = graph.points();
    let by_distance_to = |ids: &[usize], anchor: usize| {
        let mut keyed: Vec<(f64, usize, usize)> =
            ids.iter().enumerate().map(|(i, &p)| (points.dist(p, anchor), p, i)).collect();
        keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, p, i)| (p, i)).collect::<Vec<_>>()
    };
    let mut cache = BridgeCache::new(pi.len(), pj.len());
    if graph.has_edge(li, lj) {
        cache.push(Bridge {
            x: li,
            y: lj,
            length: points.dist(li, lj),
        });
    }
    (by_distance_to(pi, lj), by_distance_to(pj, li), cache)
}

/// Ensures a t-path for `(u, v)`, adding the edge when none exists.
#[allow(clippy::too_many_arguments)]
fn settle_pair<G: GraphAccess>(
    g: &mut G,
    u: (usize, usize),
    v: (usize, usize),
    d: f64,
    t: f64,
    cache: &mut BridgeCache,
    scratch: &mut SearchScratch,
    stats: &mut SearchStats,
) -> usize {
    let status = g.read(|graph| check_pair(graph, u, v, t, cache, scratch, stats, false));
    let (x, y) = (u.0, v.0);
    match status {
        PairStatus::Bridged => 0,
        PairStatus::Found(length) => {
            cache.push(Bridge { x, y, length });
            0
        }
        PairStatus::Missing(_) => {
            let fresh = g.insert(x, y);
            cache.push(Bridge { x, y, length: d });
            usize::from(fresh)
        }
    }
}

/// Outcome of a standalone merge call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MergeOutcome {
    pub edges_added: usize,
    pub stats: SearchStats,
}

fn check_merge_args(tree: &QuadTree, si: usize, sj: usize, merged: &MergedPairs) -> Result<()> {
    leaf_points_and_leader(tree, si)?;
    leaf_points_and_leader(tree, sj)?;
    if si == sj {
        return Err(Error::InvalidParameter("cannot merge a leaf with itself".into()));
    }
    if merged.contains(si, sj) {
        return Err(Error::InvalidParameter(format!("leaves {si} and {sj} are already merged")));
    }
    Ok(())
}

/// Merges leaves `si` and `sj` of `tree` in `graph` (full pair sort), and
/// records the pair in `merged`.
pub fn greedy_merge(
    graph: &mut Graph,
    tree: &QuadTree,
    si: usize,
    sj: usize,
    t: f64,
    merged: &mut MergedPairs,
) -> Result<MergeOutcome> {
    check_merge_args(tree, si, sj, merged)?;
    let mut out = MergeOutcome::default();
    let mut scratch = SearchScratch::new(graph.vertex_count());
    out.edges_added = merge_pair(graph, tree, si, sj, t, &mut scratch, &mut out.stats);
    merged.insert(si, sj);
    Ok(out)
}

/// Light variant of [`greedy_merge`].
pub fn greedy_merge_light(
    graph: &mut Graph,
    tree: &QuadTree,
    si: usize,
    sj: usize,
    t: f64,
    merged: &mut MergedPairs,
) -> Result<MergeOutcome> {
    check_merge_args(tree, si, sj, merged)?;
    let mut out = MergeOutcome::default();
    let mut scratch = SearchScratch::new(graph.vertex_count());
    out.edges_added = merge_pair_light(graph, tree, si, sj, t, &mut scratch, &mut out.stats);
    merged.insert(si, sj);
    Ok(out)
}

/// Runs the construction single-threaded.
pub fn fast_sparse_spanner(points: &PointSet, params: &Params) -> Result<ConstructionRecord> {
    fast_sparse_spanner_with(points, params, 1)
}

/// Runs the construction with `threads` workers. With one worker the result
/// is deterministic; with more, merges of one phase run concurrently and the
/// edge set may vary between runs while every guarantee still holds.
pub fn fast_sparse_spanner_with(points: &PointSet, params: &Params, threads: usize) -> Result<ConstructionRecord> {
    params.validate()?;
    let threads = threads.max(1);
    let pool = if threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let t = params.t;
    let n = points.len();
    let mut graph = Graph::new(points);
    let mut steps = StepEdges::default();
    let mut stats = SearchStats::default();

    // Step 1: partition.
    let tree = QuadTree::build(points, params.k)?;
    let non_empty: Vec<usize> = tree.non_empty_leaves().collect();

    // Step 2: exact greedy spanner inside every non-empty leaf.
    let local = |leaf: usize| -> Result<(usize, Graph)> {
        let ids = &tree.leaf(leaf).points;
        Ok((leaf, fg_greedy(&points.subset(ids)?, t)?))
    };
    let locals: Vec<(usize, Graph)> = match &pool {
        Some(pool) => pool.install(|| non_empty.par_iter().map(|&l| local(l)).collect::<Result<_>>())?,
        None => non_empty.iter().map(|&l| local(l)).collect::<Result<_>>()?,
    };
    for (leaf, g) in &locals {
        steps.leaf_greedy += graph.absorb(g, &tree.leaf(*leaf).points);
    }
    drop(locals);

    // Step 3: WSPD spanner with stretch t' on the leaders.
    let leaders: Vec<usize> = non_empty
        .iter()
        .map(|&l| tree.leaf(l).leader.expect("non-empty leaf has a leader"))
        .collect();
    if leaders.len() >= 2 {
        let w = wspd_spanner(&points.subset(&leaders)?, params.t_prime)?;
        steps.leader_wspd += graph.absorb(&w, &leaders);
    }

    // Steps 4 and 5: merge leaf pairs level by level in the dual graph.
    let dual = DualGraph::build(&tree);
    let levels: Vec<Vec<Vec<usize>>> = non_empty
        .iter()
        .map(|&l| dual.hop_levels(l, params.h))
        .collect();
    let mut merged = MergedPairs::default();
    for hop in 1..=params.h {
        let mut batch = Vec::new();
        for (idx, &si) in non_empty.iter().enumerate() {
            for &sj in &levels[idx][hop] {
                if merged.insert(si, sj) {
                    batch.push((si, sj));
                }
            }
        }
        let light = hop > 1;
        let added = match &pool {
            None => {
                let mut scratch = SearchScratch::new(n);
                batch
                    .iter()
                    .map(|&(si, sj)| {
                        if light {
                            merge_pair_light(&mut graph, &tree, si, sj, t, &mut scratch, &mut stats)
                        } else {
                            merge_pair(&mut graph, &tree, si, sj, t, &mut scratch, &mut stats)
                        }
                    })
                    .sum::<usize>()
            }
            Some(pool) => {
                let lock = RwLock::new(std::mem::replace(&mut graph, Graph::new(&PointSet::from_xy(&[(0.0, 0.0)])?)));
                let (added, level_stats) = pool.install(|| {
                    batch
                        .par_iter()
                        .map_init(
                            || (SearchScratch::new(n), SearchStats::default()),
                            |(scratch, st), &(si, sj)| {
                                let mut access = Shared(&lock);
                                let mut local = SearchStats::default();
                                let a = if light {
                                    merge_pair_light(&mut access, &tree, si, sj, t, scratch, &mut local)
                                } else {
                                    merge_pair(&mut access, &tree, si, sj, t, scratch, &mut local)
                                };
                                st.absorb(&local);
                                (a, local)
                            },
                        )
                        .reduce(
                            || (0, SearchStats::default()),
                            |(a, mut s), (b, o)| {
                                s.absorb(&o);
                                (a + b, s)
                            },
                        )
                });
                graph = lock.into_inner();
                stats.absorb(&level_stats);
                added
            }
        };
        if light {
            steps.hop_merge += added;
        } else {
            steps.neighbor_merge += added;
        }
    }

    let sealed_edges = graph.edge_count();
    let sealed_fingerprint = graph.fingerprint();
    Ok(ConstructionRecord {
        points: points.clone(),
        graph,
        tree,
        merged,
        params: *params,
        step_edges: steps,
        stats,
        sealed_edges,
        sealed_fingerprint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointgen::{generate, Distribution, DistributionSpec};
    use crate::stretch::exact_stretch;

    #[test]
    fn default_params_table() {
        let p = default_params(1.1).unwrap();
        assert_eq!((p.t_prime, p.k, p.h), (1.25, 2500, 5));
        let p = default_params(2.0).unwrap();
        assert_eq!((p.t_prime, p.k, p.h), (2.0, 2500, 1));
        let p = default_params(1.05).unwrap();
        assert_eq!((p.t_prime, p.k, p.h), (1.05, 2500, 6));
        let p = default_params(1.25).unwrap();
        assert_eq!((p.t_prime, p.h), (1.25, 3));
        assert_eq!(default_params(1.2).unwrap().t_prime, 1.25);
        assert_eq!(default_params(1.5).unwrap().t_prime, 1.5);
        assert_eq!(default_params(1.01).unwrap().h, 6);
        assert_eq!(default_params(1.07).unwrap().h, 6);
        assert_eq!(default_params(1.5).unwrap().h, 3);
        assert_eq!(default_params(5.0).unwrap().h, 1);
        assert!(default_params(1.0).is_err());
        assert!(default_params(0.9).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(1.1, 1.05, 10, 1).is_err());
        assert!(Params::new(1.1, 1.1, 0, 1).is_err());
        assert!(Params::new(1.1, 1.1, 10, 0).is_err());
        assert!(Params::new(1.1, 1.1, 10, 1).is_ok());
    }

    #[test]
    fn single_point_has_no_edges() {
        let p = PointSet::from_xy(&[(1.0, 1.0)]).unwrap();
        let rec = fast_sparse_spanner(&p, &default_params(1.1).unwrap()).unwrap();
        assert_eq!(rec.graph.edge_count(), 0);
        assert!(rec.merged.is_empty());
    }

    #[test]
    fn single_leaf_degenerates_to_greedy() {
        let p = generate(&DistributionSpec::new(Distribution::UniSquare, 300, 1)).unwrap();
        let rec = fast_sparse_spanner(&p, &default_params(1.1).unwrap()).unwrap();
        assert_eq!(rec.tree.leaves().len(), 1);
        assert_eq!(rec.graph.edges(), fg_greedy(&p, 1.1).unwrap().edges());
        assert_eq!(rec.step_edges.total(), rec.graph.edge_count());
    }

    #[test]
    fn two_thousand_uniform_points() {
        let p = generate(&DistributionSpec::new(Distribution::UniSquare, 2000, 3)).unwrap();
        let params = Params { k: 200, ..default_params(1.1).unwrap() };
        let rec = fast_sparse_spanner(&p, &params).unwrap();
        let s = exact_stretch(&rec.graph, 1);
        assert!(s.stretch <= 1.1 + 1e-9, "{}", s.stretch);
        assert!(rec.graph.average_degree() <= 9.7, "{}", rec.graph.average_degree());
        assert_eq!(rec.step_edges.total(), rec.graph.edge_count());
        rec.validate().unwrap();
    }

    #[test]
    fn deterministic_single_threaded() {
        let p = generate(&DistributionSpec::new(Distribution::Galaxy, 1500, 9)).unwrap();
        let params = Params { k: 100, ..default_params(1.25).unwrap() };
        let a = fast_sparse_spanner(&p, &params).unwrap();
        let b = fast_sparse_spanner(&p, &params).unwrap();
        assert_eq!(a.graph.edges(), b.graph.edges());
        assert_eq!(a.merged, b.merged);
    }

    #[test]
    fn leader_edge_prunes_everything_for_distant_singletons() {
        // Two far-apart singleton leaves joined by their leader edge.
        let p = PointSet::from_xy(&[(0.0, 0.0), (100.0, 0.0)]).unwrap();
        let tree = QuadTree::build(&p, 1).unwrap();
        let (a, b) = (tree.leaf_of_points(2)[0], tree.leaf_of_points(2)[1]);
        let mut g = Graph::new(&p);
        g.add_edge(0, 1).unwrap();
        let mut m = MergedPairs::default();
        let out = greedy_merge(&mut g, &tree, a, b, 1.1, &mut m).unwrap();
        assert_eq!(out.edges_added, 0);
        assert_eq!(out.stats.pruned_pairs, 1);
        assert_eq!(out.stats.greedy_path_calls + out.stats.astar_calls, 0);
        assert!(m.contains(b, a));
        assert!(greedy_merge(&mut g, &tree, a, b, 1.1, &mut m).is_err());
    }

    #[test]
    fn singleton_leaves_without_path_get_one_edge() {
        let p = PointSet::from_xy(&[(0.0, 0.0), (100.0, 0.0)]).unwrap();
        let tree = QuadTree::build(&p, 1).unwrap();
        let owner = tree.leaf_of_points(2);
        for light in [false, true] {
            let mut g = Graph::new(&p);
            let mut m = MergedPairs::default();
            let out = if light {
                greedy_merge_light(&mut g, &tree, owner[0], owner[1], 1.1, &mut m)
            } else {
                greedy_merge(&mut g, &tree, owner[0], owner[1], 1.1, &mut m)
            }
            .unwrap();
            assert_eq!(out.edges_added, 1);
            assert_eq!(g.edges(), vec![(0, 1)]);
        }
    }

    /// Two 30-point clusters, each with its own greedy spanner, nothing
    /// between them yet.
    fn two_clusters() -> (PointSet, QuadTree, Graph, usize, usize) {
        let a = generate(&DistributionSpec::new(Distribution::UniSquare, 30, 1)).unwrap();
        let b = generate(&DistributionSpec::new(Distribution::UniSquare, 30, 2)).unwrap();
        let mut coords: Vec<(f64, f64)> = a.iter().map(|p| (p.x * 0.01, p.y * 0.01)).collect();
        coords.extend(b.iter().map(|p| (p.x * 0.01 + 240.0, p.y * 0.01 + 240.0)));
        let p = PointSet::from_xy(&coords).unwrap();
        let tree = QuadTree::build(&p, 30).unwrap();
        let owner = tree.leaf_of_points(60);
        let (sa, sb) = (owner[0], owner[30]);
        assert!(owner[..30].iter().all(|&l| l == sa) && owner[30..].iter().all(|&l| l == sb));
        let mut g = Graph::new(&p);
        for leaf in [sa, sb] {
            let ids = &tree.leaf(leaf).points;
            g.absorb(&fg_greedy(&p.subset(ids).unwrap(), 1.1).unwrap(), ids);
        }
        (p, tree, g, sa, sb)
    }

    fn cross_pairs_ok(g: &Graph, a: std::ops::Range<usize>, b: std::ops::Range<usize>, t: f64) {
        for u in a {
            let d = crate::greedy::dijkstra_sssp(g, u);
            for v in b.clone() {
                assert!(d[v] <= t * g.points().dist(u, v) * (1.0 + 1e-9), "({u},{v})");
            }
        }
    }

    #[test]
    fn merges_give_every_cross_pair_a_t_path() {
        for light in [false, true] {
            let (_, tree, mut g, sa, sb) = two_clusters();
            let mut m = MergedPairs::default();
            let out = if light {
                greedy_merge_light(&mut g, &tree, sa, sb, 1.1, &mut m)
            } else {
                greedy_merge(&mut g, &tree, sa, sb, 1.1, &mut m)
            }
            .unwrap();
            assert!(out.edges_added >= 1);
            cross_pairs_ok(&g, 0..30, 30..60, 1.1);
        }
    }

    #[test]
    fn parallel_mode_keeps_the_guarantee() {
        let p = generate(&DistributionSpec::new(Distribution::NormalClustered, 1500, 4)).unwrap();
        let params = Params { k: 60, ..default_params(1.1).unwrap() };
        let rec = fast_sparse_spanner_with(&p, &params, 4).unwrap();
        let s = exact_stretch(&rec.graph, 1);
        assert!(s.stretch <= 1.1 + 1e-9, "{}", s.stretch);
        assert_eq!(rec.step_edges.total(), rec.graph.edge_count());
        rec.validate().unwrap();
    }

    #[test]
    fn merged_pairs_are_unordered() {
        let mut m = MergedPairs::default();
        assert!(m.insert(3, 1));
        assert!(!m.insert(1, 3));
        assert!(m.contains(1, 3) && m.contains(3, 1));
        assert_eq!(m.pairs(), &[(1, 3)]);
    }
}
