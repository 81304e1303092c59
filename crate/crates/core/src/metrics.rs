//! Graph metrics: degrees, hop diameter and total edge weight.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::Graph;

/// Largest vertex count for which the hop diameter is computed exactly by
/// default.
pub const EXACT_DIAMETER_LIMIT: usize = 20_000;
/// BFS sources used above the limit.
pub const DIAMETER_SAMPLES: usize = 512;
const SAMPLE_SEED: u64 = 0x5eed;

/// Hop diameter, exact or a sampled lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HopDiameter {
    /// `None` when the graph is disconnected.
    pub hops: Option<usize>,
    pub exact: bool,
    /// Two vertices in different components, for a disconnected graph.
    pub witness: Option<(usize, usize)>,
}

impl fmt::Display for HopDiameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hops {
            Some(h) if self.exact => write!(f, "{h}"),
            Some(h) => write!(f, ">={h}"),
            None => write!(f, "inf"),
        }
    }
}

/// Eccentricity of `s` in hops, or a vertex it cannot reach.
fn eccentricity(g: &Graph, s: usize) -> Result<usize, usize> {
    let n = g.vertex_count();
    let mut dist = vec![usize::MAX; n];
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    let mut far = 0;
    while let Some(x) = queue.pop_front() {
        far = dist[x];
        for &(y, _) in g.neighbors(x) {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
        }
    }
    match dist.iter().position(|&d| d == usize::MAX) {
        Some(v) => Err(v),
        None => Ok(far),
    }
}

/// Hop diameter from the given BFS sources.
fn from_sources(g: &Graph, sources: &[usize], exact: bool) -> HopDiameter {
    let ecc: Vec<(usize, Result<usize, usize>)> = sources
        .par_iter()
        .map(|&s| (s, eccentricity(g, s)))
        .collect();
    let mut best = 0;
    for (s, e) in ecc {
        match e {
            Ok(h) => best = best.max(h),
            Err(v) => {
                return HopDiameter {
                    hops: None,
                    exact: true,
                    witness: Some((s.min(v), s.max(v))),
                }
            }
        }
    }
    HopDiameter {
        hops: Some(best),
        exact,
        witness: None,
    }
}

/// Hop diameter: exact up to [`EXACT_DIAMETER_LIMIT`] vertices, a sampled
/// lower bound above.
pub fn hop_diameter(g: &Graph) -> HopDiameter {
    hop_diameter_with(g, EXACT_DIAMETER_LIMIT, DIAMETER_SAMPLES)
}

/// [`hop_diameter`] with an explicit exactness limit and sample size.
pub fn hop_diameter_with(g: &Graph, exact_limit: usize, samples: usize) -> HopDiameter {
    let n = g.vertex_count();
    if n <= exact_limit || samples >= n {
        let all: Vec<usize> = (0..n).collect();
        return from_sources(g, &all, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut sources = sample(&mut rng, n, samples.max(1)).into_vec();
    sources.sort_unstable();
    from_sources(g, &sources, false)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    pub average_degree: f64,
    pub max_degree: usize,
    pub diameter: HopDiameter,
    pub total_weight: f64,
}

impl GraphStats {
    pub const CSV_HEADER: &'static str = "n,m,avg_degree,max_degree,diameter,diameter_exact,total_weight";

    pub fn csv_row(&self) -> String {
        let d = self
            .diameter
            .hops
            .map_or_else(|| "inf".to_string(), |h| h.to_string());
        format!(
            "{},{},{},{},{},{},{}",
            self.n, self.m, self.average_degree, self.max_degree, d, self.diameter.exact, self.total_weight
        )
    }
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vertices, {} edges, average degree {:.4}, max degree {}, hop diameter {}, total weight {:.6}",
            self.n, self.m, self.average_degree, self.max_degree, self.diameter, self.total_weight
        )?;
        if let Some((u, v)) = self.diameter.witness {
            write!(f, " (disconnected: {u} and {v})")?;
        }
        Ok(())
    }
}

/// Collects all metrics. `exact_diameter` forces an exact diameter at any
/// size.
pub fn stats(g: &Graph, exact_diameter: bool) -> GraphStats {
    let diameter = if exact_diameter {
        hop_diameter_with(g, usize::MAX, DIAMETER_SAMPLES)
    } else {
        hop_diameter(g)
    };
    GraphStats {
        n: g.vertex_count(),
        m: g.edge_count(),
        average_degree: g.average_degree(),
        max_degree: (0..g.vertex_count()).map(|u| g.degree(u)).max().unwrap_or(0),
        diameter,
        total_weight: g.total_weight(),
    }
}
