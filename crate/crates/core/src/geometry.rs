//! Planar points, bounding boxes and the undirected Euclidean graph shared by
//! every construction in the crate.

use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Index;
use std::path::Path;
use std::sync::Arc;

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};

/// A point in the Euclidean plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        distance(self, other)
    }

    /// Bit pattern used for exact-equality deduplication; `-0.0` folds onto `0.0`.
    fn key(&self) -> (u64, u64) {
        ((self.x + 0.0).to_bits(), (self.y + 0.0).to_bits())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.x, self.y)
    }
}

/// Euclidean distance `|ab|`.
#[inline]
pub fn distance(a: &Point, b: &Point) -> f64 {
    let (dx, dy) = (a.x - b.x, a.y - b.y);
    (dx * dx + dy * dy).sqrt()
}

/// Axis-parallel box given by its min and max corners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn new(min: Point, max: Point) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y);
        Self { min, max }
    }

    /// Tight box around `points`; `None` for an empty iterator.
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = Self::new(first, first);
        for p in it {
            bb.min.x = bb.min.x.min(p.x);
            bb.min.y = bb.min.y.min(p.y);
            bb.max.x = bb.max.x.max(p.x);
            bb.max.y = bb.max.y.max(p.y);
        }
        Some(bb)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
        )
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// Smallest square with the same center that contains this box.
    pub fn to_square(&self) -> Self {
        let half = 0.5 * self.width().max(self.height());
        let c = self.center();
        Self::new(
            Point::new(c.x - half, c.y - half),
            Point::new(c.x + half, c.y + half),
        )
    }

    pub fn dilate(&self, eps: f64) -> Self {
        Self::new(
            Point::new(self.min.x - eps, self.min.y - eps),
            Point::new(self.max.x + eps, self.max.y + eps),
        )
    }

    /// Closed-box intersection test.
    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.min.x <= p.x && p.x <= self.max.x && self.min.y <= p.y && p.y <= self.max.y
    }
}

/// The universe of points. Ids are positions `0..n`; no two points coincide.
///
/// Cloning is cheap: the coordinates live behind an `Arc`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Arc<[Point]>,
}

impl PointSet {
    /// Validates and deduplicates `points`, keeping first occurrences in order.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index });
        }
        let mut seen = FxHashSet::default();
        let unique: Vec<Point> = points
            .into_iter()
            .filter(|p| seen.insert(p.key()))
            .map(|p| Point::new(p.x + 0.0, p.y + 0.0))
            .collect();
        Ok(Self {
            points: unique.into(),
        })
    }

    pub fn from_xy(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn as_slice(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    #[inline]
    pub fn dist(&self, u: usize, v: usize) -> f64 {
        distance(&self.points[u], &self.points[v])
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::of_points(self.points.iter()).expect("pointset is non-empty")
    }

    /// Sub-pointset on the given ids (local id `i` is `ids[i]`).
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        Self::new(ids.iter().map(|&i| self.points[i]).collect())
    }

    /// Writes one `x y` line per point.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in self.iter() {
            writeln!(w, "{p}")?;
        }
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_text(std::io::BufWriter::new(f))?;
        Ok(())
    }
}

impl Index<usize> for PointSet {
    type Output = Point;

    fn index(&self, i: usize) -> &Point {
        &self.points[i]
    }
}

/// Sort key for a pair at distance `d >= 0`: orders by `d`, then `a`, then `b`.
#[inline]
pub(crate) fn pair_sort_key(d: f64, a: u32, b: u32) -> u128 {
    (u128::from(d.to_bits()) << 64) | (u128::from(a) << 32) | u128::from(b)
}

/// Inverse of [`pair_sort_key`].
#[inline]
pub(crate) fn unpack_pair_key(k: u128) -> (f64, u32, u32) {
    (f64::from_bits((k >> 64) as u64), (k >> 32) as u32, k as u32)
}

/// Canonical 64-bit key of the unordered pair `{u, v}`.
#[inline]
pub(crate) fn edge_key(u: usize, v: usize) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    ((a as u64) << 32) | b as u64
}

/// Undirected geometric graph over the ids of a [`PointSet`], with Euclidean
/// edge lengths cached in the adjacency lists.
#[derive(Clone, Debug)]
pub struct Graph {
    points: PointSet,
    adj: Vec<Vec<(usize, f64)>>,
    edges: FxHashSet<u64>,
}

impl Graph {
    /// Edgeless graph on `points`.
    pub fn new(points: &PointSet) -> Self {
        assert!(
            points.len() <= u32::MAX as usize,
            "graph ids must fit in 32 bits"
        );
        Self {
            points: points.clone(),
            adj: vec![Vec::new(); points.len()],
            edges: FxHashSet::default(),
        }
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn check(&self, id: usize) -> Result<()> {
        if id >= self.adj.len() {
            return Err(Error::VertexOutOfRange {
                id,
                n: self.adj.len(),
            });
        }
        Ok(())
    }

    /// Inserts `{u, v}`. Returns `Ok(false)` when the edge was already present.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        if !self.edges.insert(edge_key(u, v)) {
            return Ok(false);
        }
        let len = self.points.dist(u, v);
        self.adj[u].push((v, len));
        self.adj[v].push((u, len));
        Ok(true)
    }

    /// Removes `{u, v}` if present.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if u >= self.adj.len() || v >= self.adj.len() || !self.edges.remove(&edge_key(u, v)) {
            return false;
        }
        self.adj[u].retain(|&(w, _)| w != v);
        self.adj[v].retain(|&(w, _)| w != u);
        true
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.edges.contains(&edge_key(u, v))
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    /// `2|E| / |V|`.
    pub fn average_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.vertex_count() as f64
    }

    /// Edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&k| ((k >> 32) as usize, (k & 0xffff_ffff) as usize))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&(v, _)| u < v))
            .fold(0.0, |acc, &(_, w)| acc + w)
    }

    /// Order-independent digest of the edge set.
    pub fn fingerprint(&self) -> u64 {
        self.edges
            .iter()
            .map(|&k| {
                // splitmix64 finalizer
                let mut z = k.wrapping_add(0x9e37_79b9_7f4a_7c15);
                z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
                z ^ (z >> 31)
            })
            .fold(0u64, u64::wrapping_add)
    }

    /// Writes `n m` followed by one `u v` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.vertex_count(), self.edge_count())?;
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_edge_list(std::io::BufWriter::new(f))?;
        Ok(())
    }

    /// Parses the edge-list format written by [`Graph::write_edge_list`].
    pub fn read_edge_list<R: BufRead>(reader: R, points: &PointSet, origin: &Path) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let (hline, header) = lines.next().ok_or_else(|| perr(1, "empty graph file".into()))?;
        let header = header?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(hline, format!("bad header: {e}")))?;
        let [n, m] = nums[..] else {
            return Err(perr(hline, "header must be `n m`".into()));
        };
        if n != points.len() {
            return Err(perr(
                hline,
                format!("graph has {n} vertices but pointset has {}", points.len()),
            ));
        }
        let mut g = Graph::new(points);
        for (ln, line) in lines {
            let line = line?;
            let mut it = line.split_whitespace().map(|s| s.parse::<usize>());
            let (Some(Ok(u)), Some(Ok(v)), None) = (it.next(), it.next(), it.next()) else {
                return Err(perr(ln, format!("expected `u v`, got {line:?}")));
            };
            g.add_edge(u, v).map_err(|e| perr(ln, e.to_string()))?;
        }
        if g.edge_count() != m {
            return Err(perr(
                hline,
                format!("header declares {m} edges, found {}", g.edge_count()),
            ));
        }
        Ok(g)
    }

    pub fn load(path: impl AsRef<Path>, points: &PointSet) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path)?;
        Self::read_edge_list(std::io::BufReader::new(f), points, path)
    }

    /// Maps local edges of a subgraph back to global ids and inserts them.
    /// Returns the number of new edges.
    pub(crate) fn absorb(&mut self, local: &Graph, ids: &[usize]) -> usize {
        local
            .edges()
            .into_iter()
            .filter(|&(a, b)| self.add_edge(ids[a], ids[b]).expect("valid ids"))
            .count()
    }
}
