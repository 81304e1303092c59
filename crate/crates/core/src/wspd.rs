//! Well-separated pair decomposition over a fair split tree, and the spanner
//! obtained by joining one representative per side of every pair.

use crate::error::{Error, Result};
use crate::geometry::{distance, BoundingBox, Graph, Point, PointSet};

/// Separation ratio that makes the WSPD spanner a `t`-spanner.
pub fn separation_for_stretch(t: f64) -> f64 {
    4.0 * (t + 1.0) / (t - 1.0)
}

#[derive(Clone, Debug)]
pub struct SplitNode {
    /// Tight box of the node's points.
    pub bbox: BoundingBox,
    /// Lowest point id below this node.
    pub representative: usize,
    pub children: Option<(usize, usize)>,
    range: (usize, usize),
}

impl SplitNode {
    pub fn center(&self) -> Point {
        self.bbox.center()
    }

    /// Radius of the disk around the box center enclosing the box.
    pub fn radius(&self) -> f64 {
        0.5 * self.bbox.diagonal()
    }
}

/// Fair split tree: every internal node halves its point box along the longer
/// side.
#[derive(Clone, Debug)]
pub struct SplitTree {
    nodes: Vec<SplitNode>,
    order: Vec<usize>,
}

impl SplitTree {
    pub fn build(points: &PointSet) -> Self {
        let n = points.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::with_capacity(2 * n);
        nodes.push(Self::make_node(points, &order, (0, n)));
        let mut work = vec![0usize];
        while let Some(i) = work.pop() {
            let (lo, hi) = nodes[i].range;
            if hi - lo < 2 {
                continue;
            }
            let mid = Self::partition(points, &mut order[lo..hi], &nodes[i].bbox) + lo;
            let left = nodes.len();
            nodes.push(Self::make_node(points, &order, (lo, mid)));
            nodes.push(Self::make_node(points, &order, (mid, hi)));
            nodes[i].children = Some((left, left + 1));
            work.push(left);
            work.push(left + 1);
        }
        Self { nodes, order }
    }

    fn make_node(points: &PointSet, order: &[usize], range: (usize, usize)) -> SplitNode {
        let ids = &order[range.0..range.1];
        SplitNode {
            bbox: BoundingBox::of_points(ids.iter().map(|&i| &points[i])).expect("non-empty node"),
            representative: *ids.iter().min().expect("non-empty node"),
            children: None,
            range,
        }
    }

    /// Splits `ids` at the midpoint of the longer side of `bbox`; returns the
    /// size of the lower half.
    fn partition(points: &PointSet, ids: &mut [usize], bbox: &BoundingBox) -> usize {
        let along_x = bbox.width() >= bbox.height();
        let coord = |i: usize| if along_x { points[i].x } else { points[i].y };
        let cut = if along_x {
            0.5 * (bbox.min.x + bbox.max.x)
        } else {
            0.5 * (bbox.min.y + bbox.max.y)
        };
        let mut k = 0;
        for j in 0..ids.len() {
            if coord(ids[j]) < cut {
                ids.swap(j, k);
                k += 1;
            }
        }
        if k == 0 || k == ids.len() {
            // The midpoint is not representable between the extremes; fall
            // back to a median split so both halves are non-empty.
            ids.sort_unstable_by(|&a, &b| coord(a).total_cmp(&coord(b)).then(a.cmp(&b)));
            k = ids.len() / 2;
        }
        k
    }

    pub fn nodes(&self) -> &[SplitNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &SplitNode {
        &self.nodes[i]
    }

    /// Point ids stored below node `i`.
    pub fn points_of(&self, i: usize) -> &[usize] {
        let (lo, hi) = self.nodes[i].range;
        &self.order[lo..hi]
    }
}

/// Disk-based separation test: with `r` the larger of the two enclosing
/// radii, the congruent radius-`r` disks around both box centers are at
/// distance at least `s * r`.
pub fn well_separated(a: &SplitNode, b: &SplitNode, s: f64) -> bool {
    let r = a.radius().max(b.radius());
    distance(&a.center(), &b.center()) >= (s + 2.0) * r
}

/// A well-separated pair of split-tree nodes with representatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WspdPair {
    pub a: usize,
    pub b: usize,
    pub rep_a: usize,
    pub rep_b: usize,
}

#[derive(Clone, Debug)]
pub struct Wspd {
    pub tree: SplitTree,
    pub pairs: Vec<WspdPair>,
    pub separation: f64,
}

impl Wspd {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Builds a WSPD with separation ratio `s`. Fewer than two points give an
/// empty decomposition.
pub fn build_wspd(points: &PointSet, s: f64) -> Result<Wspd> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "separation ratio must be positive (got {s})"
        )));
    }
    let tree = SplitTree::build(points);
    let mut pairs = Vec::new();
    let mut stack: Vec<(usize, usize)> = tree
        .nodes()
        .iter()
        .filter_map(|n| n.children)
        .collect();
    while let Some((a, b)) = stack.pop() {
        let (na, nb) = (tree.node(a), tree.node(b));
        if well_separated(na, nb, s) {
            pairs.push(WspdPair {
                a,
                b,
                rep_a: na.representative,
                rep_b: nb.representative,
            });
            continue;
        }
        // Refine the side with the larger enclosing disk.
        let split_a = match (na.children, nb.children) {
            (None, _) => false,
            (_, None) => true,
            _ => na.radius() >= nb.radius(),
        };
        if split_a {
            let (l, r) = na.children.expect("internal");
            stack.push((l, b));
            stack.push((r, b));
        } else {
            let (l, r) = nb.children.expect("internal");
            stack.push((a, l));
            stack.push((a, r));
        }
    }
    Ok(Wspd {
        tree,
        pairs,
        separation: s,
    })
}

/// WSPD `t`-spanner: one edge between the representatives of every pair of a
/// WSPD with separation `4(t+1)/(t-1)`.
pub fn wspd_spanner(points: &PointSet, t: f64) -> Result<Graph> {
    if !(t > 1.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must exceed 1 (got {t})")));
    }
    let wspd = build_wspd(points, separation_for_stretch(t))?;
    let mut g = Graph::new(points);
    for p in &wspd.pairs {
        g.add_edge(p.rep_a, p.rep_b)?;
    }
    Ok(g)
}
