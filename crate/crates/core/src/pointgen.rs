//! Synthetic pointset distributions and pointset file ingestion.
//!
//! Generation is driven by a ChaCha8 stream seeded from the caller's 64-bit
//! seed, so a `(distribution, n, seed)` triple names the same pointset on
//! every platform.

use std::f64::consts::TAU;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointSet};

/// Side of the `uni-square` square.
pub const SQUARE_SIDE: f64 = 1000.0;
pub const ANNULUS_OUTER: f64 = 500.0;
pub const ANNULUS_INNER: f64 = 400.0;
/// Mean and standard deviation of the per-cluster normal offsets.
pub const CLUSTER_MEAN: f64 = 2.0;
pub const CLUSTER_SIGMA: f64 = 2.0;

const GALAXY_ARMS: usize = 5;
const GALAXY_CORE: f64 = 10.0;
const GALAXY_GROWTH: f64 = 3.0;
const GALAXY_PITCH: f64 = 0.3;
const GALAXY_ANGLE_SIGMA: f64 = 0.25;
const GALAXY_RADIAL_SIGMA: f64 = 0.05;
const CONVEX_RADIUS: f64 = 1000.0;
const SPOKES: usize = 5;
const SPOKE_LENGTH: f64 = 1000.0;
const SPOKE_JITTER: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    UniSquare,
    NormalClustered,
    GridRandom,
    Annulus,
    Galaxy,
    Convex,
    Spokes,
}

impl Distribution {
    pub const ALL: [Distribution; 7] = [
        Distribution::UniSquare,
        Distribution::NormalClustered,
        Distribution::GridRandom,
        Distribution::Annulus,
        Distribution::Galaxy,
        Distribution::Convex,
        Distribution::Spokes,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::UniSquare => "uni-square",
            Distribution::NormalClustered => "normal-clustered",
            Distribution::GridRandom => "grid-random",
            Distribution::Annulus => "annulus",
            Distribution::Galaxy => "galaxy",
            Distribution::Convex => "convex",
            Distribution::Spokes => "spokes",
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Distribution::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Distribution::ALL.iter().map(|d| d.name()).collect();
                Error::InvalidParameter(format!(
                    "unknown distribution {s:?} (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DistributionSpec {
    pub distribution: Distribution,
    pub n: usize,
    pub seed: u64,
}

impl DistributionSpec {
    pub fn new(distribution: Distribution, n: usize, seed: u64) -> Self {
        Self {
            distribution,
            n,
            seed,
        }
    }
}

/// Collects distinct points from `sample` until `n` are gathered.
fn distinct(n: usize, mut sample: impl FnMut() -> Point) -> Vec<Point> {
    let mut seen = FxHashSet::default();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = sample();
        let p = Point::new(p.x + 0.0, p.y + 0.0);
        if seen.insert((p.x.to_bits(), p.y.to_bits())) {
            out.push(p);
        }
    }
    out
}

fn normal(mean: f64, sigma: f64) -> Normal<f64> {
    Normal::new(mean, sigma).expect("finite positive sigma")
}

/// Draws the pointset described by `spec`: exactly `n` distinct points.
pub fn generate(spec: &DistributionSpec) -> Result<PointSet> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let points = match spec.distribution {
        Distribution::UniSquare => distinct(n, || {
            Point::new(
                rng.random_range(0.0..SQUARE_SIDE),
                rng.random_range(0.0..SQUARE_SIDE),
            )
        }),
        Distribution::NormalClustered => {
            let per = (n as f64).sqrt().ceil() as usize;
            let side = 100.0 * (n as f64).sqrt() * CLUSTER_SIGMA;
            let offset = normal(CLUSTER_MEAN, CLUSTER_SIGMA);
            let mut center = Point::default();
            let mut k = 0usize;
            distinct(n, || {
                if k % per == 0 {
                    center = Point::new(rng.random_range(0.0..side), rng.random_range(0.0..side));
                }
                k += 1;
                Point::new(
                    center.x + offset.sample(&mut rng),
                    center.y + offset.sample(&mut rng),
                )
            })
        }
        Distribution::GridRandom => {
            let side = (0.7 * n as f64).ceil() as u64;
            if (side as u128) * (side as u128) < n as u128 {
                return Err(Error::InvalidParameter(format!(
                    "grid-random: {n} points do not fit a {side}x{side} grid"
                )));
            }
            distinct(n, || {
                Point::new(
                    rng.random_range(0..side) as f64,
                    rng.random_range(0..side) as f64,
                )
            })
        }
        Distribution::Annulus => distinct(n, || loop {
            let x = rng.random_range(-ANNULUS_OUTER..=ANNULUS_OUTER);
            let y = rng.random_range(-ANNULUS_OUTER..=ANNULUS_OUTER);
            let r = x.hypot(y);
            if (ANNULUS_INNER..=ANNULUS_OUTER).contains(&r) {
                return Point::new(x, y);
            }
        }),
        Distribution::Galaxy => {
            let angle_jitter = normal(0.0, GALAXY_ANGLE_SIGMA);
            let radial_jitter = normal(0.0, GALAXY_RADIAL_SIGMA);
            distinct(n, || {
                // logarithmic spiral r = a * exp(b * theta) per arm
                let arm = rng.random_range(0..GALAXY_ARMS);
                let u: f64 = rng.random();
                let r = GALAXY_CORE * (GALAXY_GROWTH * u).exp();
                let theta = TAU * arm as f64 / GALAXY_ARMS as f64
                    + (r / GALAXY_CORE).ln() / GALAXY_PITCH
                    + angle_jitter.sample(&mut rng);
                let r = r * (1.0 + radial_jitter.sample(&mut rng));
                Point::new(r * theta.cos(), r * theta.sin())
            })
        }
        Distribution::Convex => distinct(n, || {
            let a = rng.random_range(0.0..TAU);
            Point::new(CONVEX_RADIUS * a.cos(), CONVEX_RADIUS * a.sin())
        }),
        Distribution::Spokes => {
            let jitter = normal(0.0, SPOKE_JITTER * SPOKE_LENGTH);
            distinct(n, || {
                let spoke = rng.random_range(0..SPOKES);
                let a = TAU * spoke as f64 / SPOKES as f64;
                let along = rng.random_range(0.0..SPOKE_LENGTH);
                let across = jitter.sample(&mut rng);
                Point::new(
                    along * a.cos() - across * a.sin(),
                    along * a.sin() + across * a.cos(),
                )
            })
        }
    };
    PointSet::new(points)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PointFormat {
    /// TSPLIB when the extension is `.tsp` or the text has a
    /// `NODE_COORD_SECTION`, plain otherwise.
    #[default]
    Auto,
    Plain,
    Tsplib,
}

impl FromStr for PointFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "plain" => Ok(Self::Plain),
            "tsplib" => Ok(Self::Tsplib),
            _ => Err(Error::InvalidParameter(format!(
                "unknown point format {s:?} (expected auto, plain or tsplib)"
            ))),
        }
    }
}

/// Reads a pointset file, dropping exact duplicates (first occurrence wins).
pub fn load_pointset(path: impl AsRef<Path>, format: PointFormat) -> Result<PointSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let format = match format {
        PointFormat::Auto => {
            let tsp_ext = path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("tsp"));
            if tsp_ext || text.contains("NODE_COORD_SECTION") {
                PointFormat::Tsplib
            } else {
                PointFormat::Plain
            }
        }
        f => f,
    };
    let points = match format {
        PointFormat::Tsplib => parse_tsplib(text.as_bytes(), path)?,
        _ => parse_plain(text.as_bytes(), path)?,
    };
    if points.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "no points found".into(),
        });
    }
    PointSet::new(points)
}

fn parse_coord(tok: Option<&str>, what: &str) -> std::result::Result<f64, String> {
    let tok = tok.ok_or_else(|| format!("missing {what} coordinate"))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| format!("cannot parse {what} coordinate {tok:?}"))?;
    if !v.is_finite() {
        return Err(format!("non-finite {what} coordinate {tok:?}"));
    }
    Ok(v)
}

/// `x y` per line; blank lines and `#` comments are skipped.
pub fn parse_plain<R: BufRead>(reader: R, origin: &Path) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut toks = body.split_whitespace();
        let parsed = parse_coord(toks.next(), "x").and_then(|x| {
            let y = parse_coord(toks.next(), "y")?;
            match toks.next() {
                Some(extra) => Err(format!("unexpected trailing token {extra:?}")),
                None => Ok(Point::new(x, y)),
            }
        });
        out.push(parsed.map_err(|message| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        })?);
    }
    Ok(out)
}

/// `NODE_COORD_SECTION` of a TSPLIB file: `id x y` lines until `EOF`.
pub fn parse_tsplib<R: BufRead>(reader: R, origin: &Path) -> Result<Vec<Point>> {
    let perr = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    let mut in_section = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let body = line.trim();
        if !in_section {
            if body.starts_with("NODE_COORD_SECTION") {
                in_section = true;
            }
            continue;
        }
        if body.is_empty() {
            continue;
        }
        if body == "EOF" || body.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            break;
        }
        let mut toks = body.split_whitespace();
        toks.next();
        let p = parse_coord(toks.next(), "x")
            .and_then(|x| Ok(Point::new(x, parse_coord(toks.next(), "y")?)))
            .map_err(|m| perr(i + 1, m))?;
        out.push(p);
    }
    if !in_section {
        return Err(perr(0, "no NODE_COORD_SECTION found".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn spec(d: Distribution, n: usize) -> DistributionSpec {
        DistributionSpec::new(d, n, 42)
    }

    #[test]
    fn names_round_trip() {
        for d in Distribution::ALL {
            assert_eq!(d.name().parse::<Distribution>().unwrap(), d);
        }
        assert!("bogus".parse::<Distribution>().is_err());
    }

    #[test]
    fn uni_square_is_in_range_and_reproducible() {
        let a = generate(&spec(Distribution::UniSquare, 1000)).unwrap();
        assert_eq!(a.len(), 1000);
        assert!(a
            .iter()
            .all(|p| (0.0..SQUARE_SIDE).contains(&p.x) && (0.0..SQUARE_SIDE).contains(&p.y)));
        assert_eq!(a, generate(&spec(Distribution::UniSquare, 1000)).unwrap());
        assert_ne!(
            a,
            generate(&DistributionSpec::new(Distribution::UniSquare, 1000, 43)).unwrap()
        );
    }

    #[test]
    fn annulus_radii() {
        let a = generate(&spec(Distribution::Annulus, 1000)).unwrap();
        for p in a.iter() {
            let r = p.x.hypot(p.y);
            assert!((400.0..=500.0).contains(&r), "{r}");
        }
    }

    #[test]
    fn grid_random_uses_integer_grid() {
        let a = generate(&spec(Distribution::GridRandom, 500)).unwrap();
        let side = 350.0;
        assert!(a
            .iter()
            .all(|p| p.x.fract() == 0.0 && p.y.fract() == 0.0 && p.x < side && p.y < side));
        // Tiny instances still fit their grid.
        for n in 1..6 {
            assert_eq!(generate(&spec(Distribution::GridRandom, n)).unwrap().len(), n);
        }
    }

    #[test]
    fn every_distribution_yields_exact_count() {
        for d in Distribution::ALL {
            for n in [1, 2, 17, 700] {
                let p = generate(&DistributionSpec::new(d, n, 5)).unwrap();
                assert_eq!(p.len(), n, "{d}");
            }
        }
        assert!(generate(&spec(Distribution::UniSquare, 0)).is_err());
    }

    /// Andrew's monotone chain, strict turns only.
    fn hull_size(points: &PointSet) -> usize {
        let mut p: Vec<Point> = points.iter().copied().collect();
        p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
        let mut hull: Vec<Point> = Vec::new();
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
                Box::new(p.iter())
            } else {
                Box::new(p.iter().rev())
            };
            for &q in iter {
                while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                    hull.pop();
                }
                hull.push(q);
            }
            hull.pop();
        }
        hull.len()
    }

    #[test]
    fn convex_points_are_all_on_the_hull() {
        let p = generate(&spec(Distribution::Convex, 500)).unwrap();
        assert_eq!(hull_size(&p), 500);
    }

    #[test]
    fn clustered_points_form_sqrt_n_groups() {
        let p = generate(&spec(Distribution::NormalClustered, 400)).unwrap();
        // consecutive blocks of 20 share a center; spread stays near sigma
        for block in p.as_slice().chunks(20) {
            let cx = block.iter().map(|q| q.x).sum::<f64>() / 20.0;
            assert!(block.iter().all(|q| (q.x - cx).abs() < 12.0 * CLUSTER_SIGMA));
        }
    }

    fn write_tmp(contents: &str, suffix: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn plain_file_with_duplicate() {
        let f = write_tmp("# header\n1 2\n\n3.5 -4\n1 2\n", ".txt");
        let p = load_pointset(f.path(), PointFormat::Auto).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1], Point::new(3.5, -4.0));
    }

    #[test]
    fn plain_file_errors_carry_line_numbers() {
        let f = write_tmp("1 2\nnan 0\n", ".txt");
        match load_pointset(f.path(), PointFormat::Plain) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let f = write_tmp("1 2\n3\n", ".txt");
        assert!(matches!(
            load_pointset(f.path(), PointFormat::Plain),
            Err(Error::Parse { line: 2, .. })
        ));
        let f = write_tmp("# nothing\n", ".txt");
        assert!(load_pointset(f.path(), PointFormat::Plain).is_err());
    }

    #[test]
    fn tsplib_node_coord_section() {
        let f = write_tmp(
            "NAME : tiny\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 16.47 96.10\n2 16.47 94.44\n3 20.09 92.54\nEOF\n",
            ".tsp",
        );
        let p = load_pointset(f.path(), PointFormat::Auto).unwrap();
        assert_eq!(
            p.as_slice(),
            &[
                Point::new(16.47, 96.10),
                Point::new(16.47, 94.44),
                Point::new(20.09, 92.54)
            ]
        );
        let f = write_tmp("NAME : x\n1 2 3\n", ".tsp");
        assert!(load_pointset(f.path(), PointFormat::Tsplib).is_err());
    }
}
