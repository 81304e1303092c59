//! Stretch-factor measurement: the all-pairs Dijkstra oracle, and the fast
//! leaf-pair method that only searches pairs no merge has vouched for.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Graph;
use crate::greedy::dijkstra_into;
use crate::hybrid::{check_pair, light_setup, Bridge, ConstructionRecord, PairStatus, SearchStats};
use crate::paths::SearchScratch;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StretchReport {
    /// Measured stretch factor `t_H`; `inf` for a disconnected graph.
    pub stretch: f64,
    /// A pair attaining `stretch`, when one was singled out.
    pub worst_pair: Option<(usize, usize)>,
    pub pairs_examined: u64,
    pub greedy_path_successes: u64,
    pub astar_calls: u64,
}

impl fmt::Display for StretchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stretch {}", self.stretch)?;
        if let Some((u, v)) = self.worst_pair {
            write!(f, " (worst pair {u} {v})")?;
        }
        Ok(())
    }
}

/// Running maximum with a deterministic tie-break: larger ratio wins, then
/// the lexicographically smaller pair.
#[derive(Clone, Copy, Debug)]
struct Worst {
    ratio: f64,
    pair: Option<(usize, usize)>,
}

impl Worst {
    fn offer(&mut self, ratio: f64, u: usize, v: usize) {
        let pair = (u.min(v), u.max(v));
        let better = ratio > self.ratio
            || (ratio == self.ratio && self.pair.is_some_and(|p| pair < p));
        if better {
            self.ratio = ratio;
            self.pair = Some(pair);
        }
    }

    fn join(mut self, o: Worst) -> Worst {
        if let Some((u, v)) = o.pair {
            self.offer(o.ratio, u, v);
        }
        self
    }
}

fn pool(threads: usize) -> Result<Option<rayon::ThreadPool>> {
    if threads <= 1 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map(Some)
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Exact stretch factor: Dijkstra from every vertex. Fewer than two vertices
/// give 1.
pub fn exact_stretch(g: &Graph, threads: usize) -> StretchReport {
    let n = g.vertex_count();
    let points = g.points();
    let from = |u: usize, scratch: &mut SearchScratch| {
        let mut worst = Worst { ratio: 1.0, pair: None };
        let mut settled = vec![false; n];
        dijkstra_into(g, u, scratch, |v, d| {
            settled[v] = true;
            if v > u {
                worst.offer(d / points.dist(u, v), u, v);
            }
        });
        if let Some(v) = (u + 1..n).find(|&v| !settled[v]) {
            worst.offer(f64::INFINITY, u, v);
        }
        worst
    };
    let start = Worst { ratio: 1.0, pair: None };
    let worst = match pool(threads).expect("thread pool") {
        None => {
            let mut scratch = SearchScratch::new(n);
            (0..n).fold(start, |w, u| w.join(from(u, &mut scratch)))
        }
        Some(pool) => pool.install(|| {
            (0..n)
                .into_par_iter()
                .map_init(|| SearchScratch::new(n), |s, u| from(u, s))
                .reduce(|| start, Worst::join)
        }),
    };
    let pairs = (n as u64) * (n as u64).saturating_sub(1) / 2;
    StretchReport {
        stretch: worst.ratio,
        worst_pair: worst.pair.filter(|_| worst.ratio > 1.0),
        pairs_examined: pairs,
        greedy_path_successes: 0,
        astar_calls: 0,
    }
}

/// Measures one unmerged leaf pair without touching the graph.
fn measure_leaf_pair(
    rec: &ConstructionRecord,
    si: usize,
    sj: usize,
    scratch: &mut SearchScratch,
) -> (Worst, SearchStats) {
    let t = rec.params.t;
    let g = &rec.graph;
    let (a, b) = (rec.tree.leaf(si), rec.tree.leaf(sj));
    let (li, lj) = (a.leader.expect("non-empty"), b.leader.expect("non-empty"));
    let (order_i, order_j, mut cache) = light_setup(g, &a.points, li, &b.points, lj);
    let mut worst = Worst { ratio: t, pair: None };
    let mut stats = SearchStats::default();
    for &u in &order_i {
        for &v in &order_j {
            match check_pair(g, u, v, t, &mut cache, scratch, &mut stats, true) {
                PairStatus::Bridged => {}
                PairStatus::Found(length) => cache.push(Bridge { x: u.0, y: v.0, length }),
                PairStatus::Missing(exact) => {
                    let exact = exact.expect("exact distance requested");
                    worst.offer(exact / g.points().dist(u.0, v.0), u.0, v.0);
                }
            }
        }
    }
    (worst, stats)
}

/// Fast stretch factor of a construction record. Returns `max(t, stretch)`:
/// pairs inside one leaf and pairs of merged leaves are known to have
/// t-paths, so only the remaining leaf pairs are searched.
pub fn fast_stretch_factor(rec: &ConstructionRecord, threads: usize) -> Result<StretchReport> {
    rec.validate()?;
    let leaves = rec.non_empty_leaves();
    let mut work = Vec::new();
    for (x, &si) in leaves.iter().enumerate() {
        for &sj in &leaves[x + 1..] {
            if !rec.merged.contains(si, sj) {
                work.push((si, sj));
            }
        }
    }
    let n = rec.points.len();
    let start = (Worst { ratio: rec.params.t, pair: None }, SearchStats::default());
    let join = |(w, mut s): (Worst, SearchStats), (w2, s2): (Worst, SearchStats)| {
        s.absorb(&s2);
        (w.join(w2), s)
    };
    let (worst, stats) = match pool(threads)? {
        None => {
            let mut scratch = SearchScratch::new(n);
            work.iter()
                .map(|&(si, sj)| measure_leaf_pair(rec, si, sj, &mut scratch))
                .fold(start, join)
        }
        Some(pool) => pool.install(|| {
            work.par_iter()
                .map_init(|| SearchScratch::new(n), |s, &(si, sj)| measure_leaf_pair(rec, si, sj, s))
                .reduce(|| start, join)
        }),
    };
    Ok(StretchReport {
        stretch: worst.ratio,
        worst_pair: worst.pair,
        pairs_examined: stats.pairs_examined,
        greedy_path_successes: stats.greedy_path_successes,
        astar_calls: stats.astar_calls,
    })
}
