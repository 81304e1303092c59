//! Benchmark sweeps: one construction per (distribution, n, t, seed,
//! threads) cell, written as CSV, with optional SVG line charts.
//!
//! Config files are TOML:
//!
//! ```toml
//! distributions = ["uni-square", "galaxy"]
//! sizes = [1000, 2000]
//! stretch = [1.1, 2.0]
//! seeds = [1]
//! threads = [1]
//! # optional
//! k = 200
//! measure = "fast"      # fast | exact | none
//! diameter = false
//! parallel_cells = false
//! ```

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::hybrid::{default_params, fast_sparse_spanner_with, ConstructionRecord, Params};
use crate::metrics::hop_diameter;
use crate::pointgen::{generate, Distribution, DistributionSpec};
use crate::stretch::{exact_stretch, fast_stretch_factor};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    #[default]
    Fast,
    Exact,
    None,
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Self::Fast),
            "exact" => Ok(Self::Exact),
            "none" => Ok(Self::None),
            _ => Err(Error::InvalidParameter(format!(
                "unknown measure mode {s:?} (expected fast, exact or none)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(deserialize_with = "distribution_names")]
    pub distributions: Vec<Distribution>,
    pub sizes: Vec<usize>,
    pub stretch: Vec<f64>,
    #[serde(default = "one_seed")]
    pub seeds: Vec<u64>,
    #[serde(default = "one_thread")]
    pub threads: Vec<usize>,
    /// Overrides of the tuned defaults.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub h: Option<usize>,
    #[serde(default)]
    pub t_prime: Option<f64>,
    #[serde(default)]
    pub measure: Measure,
    #[serde(default)]
    pub diameter: bool,
    /// Run cells concurrently; timings are then not comparable.
    #[serde(default)]
    pub parallel_cells: bool,
}

fn one_seed() -> Vec<u64> {
    vec![1]
}

fn one_thread() -> Vec<usize> {
    vec![1]
}

fn distribution_names<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Distribution>, D::Error> {
    let names = Vec::<String>::deserialize(d)?;
    names
        .iter()
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .collect()
}

impl BenchConfig {
    pub fn new(distributions: Vec<Distribution>, sizes: Vec<usize>, stretch: Vec<f64>) -> Self {
        Self {
            distributions,
            sizes,
            stretch,
            seeds: one_seed(),
            threads: one_thread(),
            k: None,
            h: None,
            t_prime: None,
            measure: Measure::Fast,
            diameter: false,
            parallel_cells: false,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("bench config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("distributions", self.distributions.is_empty()),
            ("sizes", self.sizes.is_empty()),
            ("stretch", self.stretch.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("threads", self.threads.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|e| e.1) {
            return Err(Error::InvalidParameter(format!("bench config: {name} is empty")));
        }
        if self.sizes.contains(&0) || self.threads.contains(&0) {
            return Err(Error::InvalidParameter("bench config: sizes and threads must be positive".into()));
        }
        Ok(())
    }

    /// All cells in sweep order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &distribution in &self.distributions {
            for &n in &self.sizes {
                for &t in &self.stretch {
                    for &seed in &self.seeds {
                        for &threads in &self.threads {
                            out.push(Cell {
                                distribution,
                                n,
                                t,
                                seed,
                                threads,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn params(&self, t: f64) -> Result<Params> {
        let d = default_params(t)?;
        Params::new(
            t,
            self.t_prime.unwrap_or(d.t_prime).max(t),
            self.k.unwrap_or(d.k),
            self.h.unwrap_or(d.h),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub distribution: Distribution,
    pub n: usize,
    pub t: f64,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub cell: Cell,
    pub params: Option<Params>,
    pub build_ms: f64,
    pub t_h: Option<f64>,
    pub average_degree: f64,
    pub diameter: Option<usize>,
    pub edges: usize,
    /// Edges added by leaf greedy, leader WSPD, neighbor merge, hop merge.
    pub step_edges: [usize; 4],
    pub greedy_path_success_rate: f64,
    pub astar_calls: u64,
    pub error: Option<String>,
}

pub const CSV_HEADER: &str = "distribution,n,seed,t,k,h,t_prime,threads,build_ms,t_h,avg_degree,diameter,edges,\
edges_step2,edges_step3,edges_step4,edges_step5,greedy_path_success_rate,astar_calls,error";

impl BenchRow {
    /// True when a measured stretch exceeds the target.
    pub fn missed_target(&self) -> bool {
        self.t_h.is_some_and(|s| s > self.cell.t + 1e-9)
    }

    pub fn csv(&self) -> String {
        let c = &self.cell;
        let opt = |x: Option<String>| x.unwrap_or_default();
        let (k, h, tp) = match &self.params {
            Some(p) => (p.k.to_string(), p.h.to_string(), p.t_prime.to_string()),
            None => Default::default(),
        };
        let err = self
            .error
            .as_deref()
            .map(|e| format!("\"{}\"", e.replace('"', "'")))
            .unwrap_or_default();
        let s = self.step_edges;
        format!(
            "{},{},{},{},{k},{h},{tp},{},{:.3},{},{},{},{},{},{},{},{},{},{},{err}",
            c.distribution,
            c.n,
            c.seed,
            c.t,
            c.threads,
            self.build_ms,
            opt(self.t_h.map(|x| x.to_string())),
            self.average_degree,
            opt(self.diameter.map(|x| x.to_string())),
            self.edges,
            s[0],
            s[1],
            s[2],
            s[3],
            self.greedy_path_success_rate,
            self.astar_calls,
        )
    }

    fn failed(cell: Cell, params: Option<Params>, e: Error) -> Self {
        Self {
            cell,
            params,
            build_ms: 0.0,
            t_h: None,
            average_degree: 0.0,
            diameter: None,
            edges: 0,
            step_edges: [0; 4],
            greedy_path_success_rate: 0.0,
            astar_calls: 0,
            error: Some(e.to_string()),
        }
    }
}

fn run_cell(config: &BenchConfig, cell: Cell) -> BenchRow {
    let params = match config.params(cell.t) {
        Ok(p) => p,
        Err(e) => return BenchRow::failed(cell, None, e),
    };
    let points = match generate(&DistributionSpec::new(cell.distribution, cell.n, cell.seed)) {
        Ok(p) => p,
        Err(e) => return BenchRow::failed(cell, Some(params), e),
    };
    let start = Instant::now();
    let rec: ConstructionRecord = match fast_sparse_spanner_with(&points, &params, cell.threads) {
        Ok(r) => r,
        Err(e) => return BenchRow::failed(cell, Some(params), e),
    };
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    let t_h = match config.measure {
        Measure::Fast => match fast_stretch_factor(&rec, cell.threads) {
            Ok(r) => Some(r.stretch),
            Err(e) => return BenchRow::failed(cell, Some(params), e),
        },
        Measure::Exact => Some(exact_stretch(&rec.graph, cell.threads).stretch.max(cell.t)),
        Measure::None => None,
    };
    let s = rec.step_edges;
    BenchRow {
        cell,
        params: Some(params),
        build_ms,
        t_h,
        average_degree: rec.graph.average_degree(),
        diameter: if config.diameter { hop_diameter(&rec.graph).hops } else { None },
        edges: rec.graph.edge_count(),
        step_edges: [s.leaf_greedy, s.leader_wspd, s.neighbor_merge, s.hop_merge],
        greedy_path_success_rate: rec.stats.greedy_path_success_rate(),
        astar_calls: rec.stats.astar_calls,
        error: None,
    }
}

/// Runs every cell of the sweep. Failed cells become rows with `error` set.
/// `progress` sees each row as it completes.
pub fn run_sweep(config: &BenchConfig, progress: impl Fn(&BenchRow) + Sync) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let cells = config.cells();
    let run = |c: &Cell| {
        let row = run_cell(config, *c);
        progress(&row);
        row
    };
    Ok(if config.parallel_cells {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    })
}

pub fn write_csv<W: Write>(rows: &[BenchRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `time_vs_n.svg` and `degree_vs_n.svg` into `dir`, one line per
/// (distribution, t, threads).
pub fn write_plots(rows: &[BenchRow], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("time_vs_n.svg"), svg_chart(rows, "build time (ms)", |r| r.build_ms))?;
    std::fs::write(dir.join("degree_vs_n.svg"), svg_chart(rows, "average degree", |r| r.average_degree))?;
    Ok(())
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn svg_chart(rows: &[BenchRow], ylabel: &str, y: impl Fn(&BenchRow) -> f64) -> String {
    let ok: Vec<&BenchRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in &ok {
        let c = &r.cell;
        let name = format!("{} t={} threads={}", c.distribution, c.t, c.threads);
        let idx = match series.iter().position(|s| s.0 == name) {
            Some(i) => i,
            None => {
                series.push((name, Vec::new()));
                series.len() - 1
            }
        };
        series[idx].1.push((c.n as f64, y(r)));
    }
    let (w, h, pad) = (720.0, 440.0, 60.0);
    let xmax = ok.iter().map(|r| r.cell.n as f64).fold(1.0, f64::max);
    let ymax = ok.iter().map(|r| y(r)).fold(1e-9, f64::max);
    let sx = |x: f64| pad + x / xmax * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - v / ymax * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {top} V{bottom} H{right}" stroke="black" fill="none"/>"#,
        top = pad,
        bottom = h - pad,
        right = w - pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">n (max {xmax})</text>"#, w / 2.0, h - 20.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {0})" text-anchor="middle">{ylabel} (max {ymax:.3})</text>"#, h / 2.0);
    for (i, (name, pts)) in series.iter_mut().enumerate() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = PALETTE[i % PALETTE.len()];
        let line: Vec<String> = pts.iter().map(|&(x, v)| format!("{:.1},{:.1}", sx(x), sy(v))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="2"/>"#, line.join(" "));
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#, pad + 10.0, pad + 16.0 * i as f64);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cell_one_row() {
        let c = BenchConfig {
            k: Some(100),
            ..BenchConfig::new(vec![Distribution::UniSquare], vec![600], vec![1.25])
        };
        let rows = run_sweep(&c, |_| {}).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert!(r.error.is_none());
        assert_eq!(r.step_edges.iter().sum::<usize>(), r.edges);
        assert!(!r.missed_target());
        assert_eq!(r.t_h, Some(1.25));
        assert_eq!(r.csv().split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn parses_config_files() {
        let c = BenchConfig::parse(
            "distributions = [\"galaxy\", \"spokes\"]\nsizes = [100, 200]\nstretch = [2.0]\nseeds = [1, 2]\nmeasure = \"none\"\n",
        )
        .unwrap();
        assert_eq!(c.cells().len(), 8);
        assert_eq!(c.measure, Measure::None);
        assert_eq!(c.threads, vec![1]);
        assert!(BenchConfig::parse("distributions = [\"moon\"]\nsizes=[1]\nstretch=[2.0]").is_err());
        assert!(BenchConfig::parse("distributions = []\nsizes=[1]\nstretch=[2.0]").is_err());
        assert!(BenchConfig::parse("distributions = [\"galaxy\"]\nsizes=[1]\nstretch=[2.0]\nbogus=1").is_err());
    }

    #[test]
    fn failures_become_rows() {
        let c = BenchConfig::new(vec![Distribution::Convex], vec![50], vec![0.5, 2.0]);
        let rows = run_sweep(&c, |_| {}).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.as_deref().unwrap().contains("t must exceed 1"));
        assert!(rows[1].error.is_none());
        let mut out = Vec::new();
        write_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with(CSV_HEADER));
    }

    #[test]
    fn plots_are_written() {
        let c = BenchConfig {
            measure: Measure::None,
            ..BenchConfig::new(vec![Distribution::UniSquare], vec![100, 200], vec![2.0])
        };
        let rows = run_sweep(&c, |_| {}).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_plots(&rows, dir.path()).unwrap();
        let svg = std::fs::read_to_string(dir.path().join("degree_vs_n.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    }
}
