//! Region quad-tree with leaf capacity `k`, leaf neighbor search and the dual
//! graph on leaves.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Point, PointSet};

/// Relative dilation used for neighbor search, as a fraction of the root
/// diagonal.
pub const NEIGHBOR_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    /// Children in NW, NE, SW, SE order.
    Internal([usize; 4]),
    Leaf(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub bbox: BoundingBox,
    pub depth: usize,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Leaf {
    pub id: usize,
    pub bbox: BoundingBox,
    pub depth: usize,
    /// Point ids in ascending order.
    pub points: Vec<usize>,
    /// The point closest to the center of the bounding box of `points`.
    pub leader: Option<usize>,
}

impl Leaf {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadTree {
    nodes: Vec<Node>,
    leaves: Vec<Leaf>,
    capacity: usize,
    depth: usize,
}

/// Leader of a non-empty id list: closest to the center of the tight box of
/// those points, lowest id on ties.
pub fn leader_of(points: &PointSet, ids: &[usize]) -> Option<usize> {
    let center = BoundingBox::of_points(ids.iter().map(|&i| &points[i]))?.center();
    ids.iter()
        .map(|&i| (points[i].dist(&center), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
}

impl QuadTree {
    /// Builds the tree on a square root box around `points`, splitting every
    /// node that holds more than `capacity` points.
    pub fn build(points: &PointSet, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter("leaf capacity k must be >= 1".into()));
        }
        let mut tree = Self {
            nodes: Vec::new(),
            leaves: Vec::new(),
            capacity,
            depth: 0,
        };
        let tight = points.bounding_box();
        let sq = tight.to_square();
        // Rounding in the square can cut off an extreme point by an ulp.
        let root = BoundingBox::new(
            Point::new(sq.min.x.min(tight.min.x), sq.min.y.min(tight.min.y)),
            Point::new(sq.max.x.max(tight.max.x), sq.max.y.max(tight.max.y)),
        );
        tree.grow(points, root, 0, (0..points.len()).collect());
        Ok(tree)
    }

    fn grow(&mut self, points: &PointSet, bbox: BoundingBox, depth: usize, ids: Vec<usize>) -> usize {
        let node = self.nodes.len();
        let mid = bbox.center();
        // Stop when the box can no longer be halved in floating point.
        let splittable = mid.x > bbox.min.x
            && mid.x < bbox.max.x
            && mid.y > bbox.min.y
            && mid.y < bbox.max.y;
        if ids.len() <= self.capacity || !splittable {
            let id = self.leaves.len();
            self.nodes.push(Node {
                bbox,
                depth,
                kind: NodeKind::Leaf(id),
            });
            self.leaves.push(Leaf {
                id,
                bbox,
                depth,
                leader: leader_of(points, &ids),
                points: ids,
            });
            self.depth = self.depth.max(depth);
            return node;
        }
        self.nodes.push(Node {
            bbox,
            depth,
            kind: NodeKind::Internal([0; 4]),
        });
        let mut parts: [Vec<usize>; 4] = Default::default();
        for i in ids {
            let p = points[i];
            let east = p.x >= mid.x;
            let north = p.y >= mid.y;
            let q = match (north, east) {
                (true, false) => 0,
                (true, true) => 1,
                (false, false) => 2,
                (false, true) => 3,
            };
            parts[q].push(i);
        }
        let (lo, hi) = (bbox.min, bbox.max);
        let quadrants = [
            BoundingBox::new(Point::new(lo.x, mid.y), Point::new(mid.x, hi.y)),
            BoundingBox::new(mid, hi),
            BoundingBox::new(lo, mid),
            BoundingBox::new(Point::new(mid.x, lo.y), Point::new(hi.x, mid.y)),
        ];
        let mut children = [0; 4];
        for (q, part) in parts.into_iter().enumerate() {
            children[q] = self.grow(points, quadrants[q], depth + 1, part);
        }
        self.nodes[node].kind = NodeKind::Internal(children);
        node
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Depth of the deepest leaf (the root has depth 0).
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn leaf(&self, id: usize) -> &Leaf {
        &self.leaves[id]
    }

    pub fn root_box(&self) -> BoundingBox {
        self.nodes[0].bbox
    }

    /// Ids of the non-empty leaves, ascending.
    pub fn non_empty_leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.leaves.iter().filter(|l| !l.is_empty()).map(|l| l.id)
    }

    /// Leaf id of every point.
    pub fn leaf_of_points(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for leaf in &self.leaves {
            for &p in &leaf.points {
                out[p] = leaf.id;
            }
        }
        out
    }

    /// Leaves whose boxes meet the slightly dilated box of `leaf`, excluding
    /// `leaf` itself. Corner contact counts. Ascending ids.
    pub fn leaf_neighbors(&self, leaf: usize) -> Vec<usize> {
        let eps = NEIGHBOR_EPS * self.root_box().diagonal();
        let probe = self.leaves[leaf].bbox.dilate(eps);
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !node.bbox.intersects(&probe) {
                continue;
            }
            match node.kind {
                NodeKind::Internal(children) => stack.extend(children),
                NodeKind::Leaf(id) if id != leaf => out.push(id),
                NodeKind::Leaf(_) => {}
            }
        }
        out.sort_unstable();
        out
    }

    /// Rebuilds a tree from its parts (used when loading a saved record).
    pub(crate) fn from_parts(nodes: Vec<Node>, leaves: Vec<Leaf>, capacity: usize) -> Self {
        let depth = leaves.iter().map(|l| l.depth).max().unwrap_or(0);
        Self {
            nodes,
            leaves,
            capacity,
            depth,
        }
    }

    /// Debug dump: `leaf,min_x,min_y,max_x,max_y,points,leader`.
    pub fn write_leaves_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "leaf,min_x,min_y,max_x,max_y,points,leader")?;
        for l in &self.leaves {
            let leader = l.leader.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                l.id,
                l.bbox.min.x,
                l.bbox.min.y,
                l.bbox.max.x,
                l.bbox.max.y,
                l.points.len(),
                leader
            )?;
        }
        w.flush()
    }
}

/// Leaf-adjacency graph `G_T`; empty leaves are vertices too.
#[derive(Clone, Debug)]
pub struct DualGraph {
    adj: Vec<Vec<usize>>,
    non_empty: Vec<bool>,
}

impl DualGraph {
    pub fn build(tree: &QuadTree) -> Self {
        let n = tree.leaves().len();
        let mut adj = vec![Vec::new(); n];
        for leaf in 0..n {
            for nb in tree.leaf_neighbors(leaf) {
                adj[leaf].push(nb);
                adj[nb].push(leaf);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Self {
            adj,
            non_empty: tree.leaves().iter().map(|l| !l.is_empty()).collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, leaf: usize) -> &[usize] {
        &self.adj[leaf]
    }

    pub fn is_non_empty(&self, leaf: usize) -> bool {
        self.non_empty[leaf]
    }

    /// BFS hop distances from `source` (`usize::MAX` when unreachable),
    /// optionally stopping after `max_hops`.
    pub fn hop_distances(&self, source: usize, max_hops: Option<usize>) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.adj.len()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            if max_hops.is_some_and(|h| dist[x] >= h) {
                continue;
            }
            for &y in &self.adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Non-empty leaves at BFS distance exactly `1..=h` from `source`, bucketed
    /// by distance (`levels[i]` holds hop `i`; `levels[0]` is empty).
    pub fn hop_levels(&self, source: usize, h: usize) -> Vec<Vec<usize>> {
        let mut levels = vec![Vec::new(); h + 1];
        for (leaf, d) in self.hop_distances(source, Some(h)).into_iter().enumerate() {
            if d >= 1 && d <= h && self.non_empty[leaf] {
                levels[d].push(leaf);
            }
        }
        levels
    }

    /// Non-empty leaves exactly `hops` BFS steps from `source`; the search
    /// passes through empty leaves.
    pub fn leaves_within_hops(&self, source: usize, hops: usize) -> Vec<usize> {
        self.hop_levels(source, hops).swap_remove(hops)
    }

    pub fn is_connected(&self) -> bool {
        self.adj.is_empty() || self.hop_distances(0, None).iter().all(|&d| d != usize::MAX)
    }

    /// Largest BFS distance between two leaves.
    pub fn diameter(&self) -> usize {
        (0..self.adj.len())
            .map(|s| {
                self.hop_distances(s, None)
                    .into_iter()
                    .filter(|&d| d != usize::MAX)
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }
}
