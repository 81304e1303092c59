//! Sparse geometric t-spanners on planar point sets.
//!
//! The main entry point is [`fast_sparse_spanner`]: a quad-tree splits the
//! points into leaves of at most `k` points, each leaf gets an exact greedy
//! spanner, the leaf leaders are joined by a WSPD spanner, and leaf pairs
//! within `h` hops of each other are merged. [`fast_stretch_factor`] then
//! measures the result using what the construction already proved.
//!
//! ```
//! use geospanner::{default_params, fast_sparse_spanner, fast_stretch_factor, generate};
//! use geospanner::{Distribution, DistributionSpec};
//!
//! let points = generate(&DistributionSpec::new(Distribution::UniSquare, 500, 7)).unwrap();
//! let params = geospanner::Params { k: 100, ..default_params(1.25).unwrap() };
//! let rec = fast_sparse_spanner(&points, &params).unwrap();
//! let report = fast_stretch_factor(&rec, 1).unwrap();
//! assert!(report.stretch <= 1.25);
//! ```

pub mod bench;
pub mod error;
pub mod geometry;
pub mod greedy;
pub mod hybrid;
pub mod metrics;
pub mod paths;
pub mod pointgen;
pub mod quadtree;
pub mod record;
pub mod stretch;
pub mod wspd;

pub use error::{Error, Result};
pub use geometry::{distance, BoundingBox, Graph, Point, PointSet};
pub use greedy::{dijkstra_sssp, fg_greedy, path_greedy};
pub use hybrid::{
    default_params, fast_sparse_spanner, fast_sparse_spanner_with, greedy_merge, greedy_merge_light,
    ConstructionRecord, MergedPairs, Params, SearchStats, StepEdges,
};
pub use metrics::{hop_diameter, stats, GraphStats, HopDiameter};
pub use paths::{astar, greedy_path, PathResult};
pub use pointgen::{generate, load_pointset, Distribution, DistributionSpec, PointFormat};
pub use quadtree::{DualGraph, QuadTree};
pub use stretch::{exact_stretch, fast_stretch_factor, StretchReport};
pub use wspd::{build_wspd, separation_for_stretch, wspd_spanner, Wspd};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/points.md")]
    mod points {}
    #[doc = include_str!("../../../book/src/greedy.md")]
    mod greedy {}
    #[doc = include_str!("../../../book/src/partitioning.md")]
    mod partitioning {}
    #[doc = include_str!("../../../book/src/construction.md")]
    mod construction {}
    #[doc = include_str!("../../../book/src/measuring.md")]
    mod measuring {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
}
