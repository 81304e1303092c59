//! Binary save/load of a [`ConstructionRecord`].
//!
//! Layout, all integers little-endian `u64` unless noted, floats `f64` bits:
//!
//! ```text
//! "FSSREC" version:u8
//! t t' k h
//! n  (x y)*n
//! m  (u v)*m  sealed_edges sealed_fingerprint
//! capacity
//! nodes  (min_x min_y max_x max_y depth tag:u8 payload)*
//!        tag 0: four child node ids; tag 1: leaf id
//! leaves (min_x min_y max_x max_y depth count ids* leader)*
//!        leader u64::MAX for an empty leaf
//! merged (a b)*
//! step edges x4, search counters x7
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Graph, Point, PointSet};
use crate::hybrid::{ConstructionRecord, MergedPairs, Params, SearchStats, StepEdges};
use crate::quadtree::{Leaf, Node, NodeKind, QuadTree};

pub const MAGIC: &[u8; 6] = b"FSSREC";
pub const FORMAT_VERSION: u8 = 1;
const NONE: u64 = u64::MAX;

struct Out<W: Write>(W);

impl<W: Write> Out<W> {
    fn u(&mut self, x: u64) -> std::io::Result<()> {
        self.0.write_all(&x.to_le_bytes())
    }

    fn f(&mut self, x: f64) -> std::io::Result<()> {
        self.0.write_all(&x.to_le_bytes())
    }

    fn bbox(&mut self, b: &BoundingBox) -> std::io::Result<()> {
        for x in [b.min.x, b.min.y, b.max.x, b.max.y] {
            self.f(x)?;
        }
        Ok(())
    }
}

struct In<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl In<'_> {
    fn take(&mut self, len: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::RecordFormat("file is truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// Reads a count and checks it against a sanity bound.
    fn len(&mut self, max: u64, what: &str) -> Result<usize> {
        let x = self.u()?;
        if x > max {
            return Err(Error::RecordFormat(format!("{what} count {x} out of range")));
        }
        Ok(x as usize)
    }

    /// Reads an index below `bound`.
    fn id(&mut self, bound: usize, what: &str) -> Result<usize> {
        let x = self.u()?;
        if x >= bound as u64 {
            return Err(Error::RecordFormat(format!("{what} {x} out of range")));
        }
        Ok(x as usize)
    }

    fn bbox(&mut self) -> Result<BoundingBox> {
        let (a, b, c, d) = (self.f()?, self.f()?, self.f()?, self.f()?);
        Ok(BoundingBox::new(Point::new(a, b), Point::new(c, d)))
    }
}

/// Serializes `rec` into `w`.
pub fn write_record<W: Write>(rec: &ConstructionRecord, w: W) -> Result<()> {
    let mut o = Out(w);
    o.0.write_all(MAGIC)?;
    o.0.write_all(&[FORMAT_VERSION])?;
    let p = &rec.params;
    o.f(p.t)?;
    o.f(p.t_prime)?;
    o.u(p.k as u64)?;
    o.u(p.h as u64)?;
    o.u(rec.points.len() as u64)?;
    for q in rec.points.iter() {
        o.f(q.x)?;
        o.f(q.y)?;
    }
    let edges = rec.graph.edges();
    o.u(edges.len() as u64)?;
    for (u, v) in edges {
        o.u(u as u64)?;
        o.u(v as u64)?;
    }
    o.u(rec.sealed_edges as u64)?;
    o.u(rec.sealed_fingerprint)?;
    o.u(rec.tree.capacity() as u64)?;
    o.u(rec.tree.nodes().len() as u64)?;
    for node in rec.tree.nodes() {
        o.bbox(&node.bbox)?;
        o.u(node.depth as u64)?;
        match &node.kind {
            NodeKind::Internal(c) => {
                o.0.write_all(&[0])?;
                for &x in c {
                    o.u(x as u64)?;
                }
            }
            NodeKind::Leaf(l) => {
                o.0.write_all(&[1])?;
                o.u(*l as u64)?;
            }
        }
    }
    o.u(rec.tree.leaves().len() as u64)?;
    for leaf in rec.tree.leaves() {
        o.bbox(&leaf.bbox)?;
        o.u(leaf.depth as u64)?;
        o.u(leaf.points.len() as u64)?;
        for &x in &leaf.points {
            o.u(x as u64)?;
        }
        o.u(leaf.leader.map_or(NONE, |x| x as u64))?;
    }
    o.u(rec.merged.len() as u64)?;
    for &(a, b) in rec.merged.pairs() {
        o.u(a as u64)?;
        o.u(b as u64)?;
    }
    let s = &rec.step_edges;
    for x in [s.leaf_greedy, s.leader_wspd, s.neighbor_merge, s.hop_merge] {
        o.u(x as u64)?;
    }
    let c = &rec.stats;
    for x in [
        c.pairs_examined,
        c.pruned_pairs,
        c.bridge_hits,
        c.greedy_path_calls,
        c.greedy_path_successes,
        c.astar_calls,
        c.astar_successes,
    ] {
        o.u(x)?;
    }
    o.0.flush()?;
    Ok(())
}

/// Parses a record. Structural problems give [`Error::RecordFormat`]; a
/// graph that disagrees with its seal or a broken leaf partition gives
/// [`Error::RecordMismatch`].
pub fn read_record<R: Read>(mut r: R) -> Result<ConstructionRecord> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut i = In { buf: &buf, pos: 0 };
    if i.take(MAGIC.len()).ok() != Some(&MAGIC[..]) {
        return Err(Error::RecordFormat("not a construction record".into()));
    }
    let version = i.take(1)?[0];
    if version != FORMAT_VERSION {
        return Err(Error::RecordFormat(format!(
            "unsupported record version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let (t, t_prime) = (i.f()?, i.f()?);
    let (k, h) = (i.u()? as usize, i.u()? as usize);
    let params = Params::new(t, t_prime, k, h)?;
    let cap = (buf.len() / 8) as u64;
    let n = i.len(cap, "point")?;
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        pts.push(Point::new(i.f()?, i.f()?));
    }
    let points = PointSet::new(pts)?;
    if points.len() != n {
        return Err(Error::RecordFormat("duplicate points".into()));
    }
    let mut graph = Graph::new(&points);
    let m = i.len(cap, "edge")?;
    for _ in 0..m {
        let (u, v) = (i.id(n, "vertex")?, i.id(n, "vertex")?);
        graph.add_edge(u, v).map_err(|e| Error::RecordFormat(e.to_string()))?;
    }
    let sealed_edges = i.u()? as usize;
    let sealed_fingerprint = i.u()?;
    let capacity = i.u()? as usize;
    let node_count = i.len(cap, "node")?;
    let mut nodes = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let bbox = i.bbox()?;
        let depth = i.u()? as usize;
        let kind = match i.take(1)?[0] {
            0 => NodeKind::Internal([
                i.id(node_count, "node")?,
                i.id(node_count, "node")?,
                i.id(node_count, "node")?,
                i.id(node_count, "node")?,
            ]),
            1 => NodeKind::Leaf(i.u()? as usize),
            tag => return Err(Error::RecordFormat(format!("bad node tag {tag}"))),
        };
        nodes.push(Node { bbox, depth, kind });
    }
    let leaf_count = i.len(cap, "leaf")?;
    if nodes.iter().any(|nd| matches!(nd.kind, NodeKind::Leaf(l) if l >= leaf_count)) {
        return Err(Error::RecordFormat("node refers to a missing leaf".into()));
    }
    let mut leaves = Vec::with_capacity(leaf_count);
    for id in 0..leaf_count {
        let bbox = i.bbox()?;
        let depth = i.u()? as usize;
        let count = i.len(n as u64, "leaf point")?;
        let mut ids = Vec::with_capacity(count);
        for _ in 0..count {
            ids.push(i.id(n, "point")?);
        }
        let leader = match i.u()? {
            NONE => None,
            x if x < n as u64 => Some(x as usize),
            x => return Err(Error::RecordFormat(format!("leader {x} out of range"))),
        };
        leaves.push(Leaf {
            id,
            bbox,
            depth,
            points: ids,
            leader,
        });
    }
    let tree = QuadTree::from_parts(nodes, leaves, capacity);
    let pair_count = i.len(cap, "merged pair")?;
    let mut merged = MergedPairs::default();
    for _ in 0..pair_count {
        let (a, b) = (i.id(leaf_count, "leaf")?, i.id(leaf_count, "leaf")?);
        merged.insert(a, b);
    }
    let mut s = [0usize; 4];
    for x in &mut s {
        *x = i.u()? as usize;
    }
    let mut c = [0u64; 7];
    for x in &mut c {
        *x = i.u()?;
    }
    if i.pos != buf.len() {
        return Err(Error::RecordFormat("trailing bytes after record".into()));
    }
    let rec = ConstructionRecord {
        points,
        graph,
        tree,
        merged,
        params,
        step_edges: StepEdges {
            leaf_greedy: s[0],
            leader_wspd: s[1],
            neighbor_merge: s[2],
            hop_merge: s[3],
        },
        stats: SearchStats {
            pairs_examined: c[0],
            pruned_pairs: c[1],
            bridge_hits: c[2],
            greedy_path_calls: c[3],
            greedy_path_successes: c[4],
            astar_calls: c[5],
            astar_successes: c[6],
        },
        sealed_edges,
        sealed_fingerprint,
    };
    rec.validate()?;
    Ok(rec)
}

impl ConstructionRecord {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_record(self, BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_record(BufReader::new(File::open(path)?))
    }

    /// Swaps in an externally stored graph (same points), keeping the seal;
    /// the result is only usable if it passes [`ConstructionRecord::validate`].
    pub fn with_graph(mut self, graph: Graph) -> Result<Self> {
        if graph.points().as_slice() != self.points.as_slice() {
            return Err(Error::RecordMismatch("graph is over a different point set".into()));
        }
        self.graph = graph;
        self.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::{default_params, fast_sparse_spanner};
    use crate::pointgen::{generate, Distribution, DistributionSpec};

    fn sample() -> ConstructionRecord {
        let p = generate(&DistributionSpec::new(Distribution::NormalClustered, 400, 3)).unwrap();
        fast_sparse_spanner(&p, &Params { k: 40, ..default_params(1.25).unwrap() }).unwrap()
    }

    fn bytes(rec: &ConstructionRecord) -> Vec<u8> {
        let mut v = Vec::new();
        write_record(rec, &mut v).unwrap();
        v
    }

    #[test]
    fn round_trip() {
        let rec = sample();
        let back = read_record(&bytes(&rec)[..]).unwrap();
        assert_eq!(back.graph.edges(), rec.graph.edges());
        assert_eq!(back.tree, rec.tree);
        assert_eq!(back.merged, rec.merged);
        assert_eq!(back.params, rec.params);
        assert_eq!(back.step_edges, rec.step_edges);
        assert_eq!(back.stats, rec.stats);
        assert_eq!(bytes(&back), bytes(&rec));
    }

    #[test]
    fn rejects_wrong_version_and_magic() {
        let mut b = bytes(&sample());
        b[6] = 2;
        let e = read_record(&b[..]).unwrap_err().to_string();
        assert!(e.contains("unsupported record version 2"), "{e}");
        b[0] = b'X';
        assert!(matches!(read_record(&b[..]), Err(Error::RecordFormat(_))));
    }

    #[test]
    fn rejects_truncation_and_trailing_bytes() {
        let b = bytes(&sample());
        for cut in [3, 7, 40, b.len() / 2, b.len() - 1] {
            assert!(read_record(&b[..cut]).is_err(), "cut {cut}");
        }
        let mut longer = b.clone();
        longer.push(0);
        assert!(read_record(&longer[..]).is_err());
    }

    #[test]
    fn substituted_graph_must_match_the_seal() {
        let rec = sample();
        let mut g = rec.graph.clone();
        let (u, v) = g.edges()[3];
        g.remove_edge(u, v);
        assert!(matches!(rec.clone().with_graph(g), Err(Error::RecordMismatch(_))));
        let same = rec.graph.clone();
        assert!(rec.with_graph(same).is_ok());
    }
}
