//! `geospanner` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use geospanner::bench::{self, BenchConfig, Measure};
use geospanner::{
    default_params, exact_stretch, fast_sparse_spanner_with, fast_stretch_factor, generate, load_pointset, stats,
    ConstructionRecord, Distribution, DistributionSpec, Error, Graph, Params, PointFormat, PointSet,
};

#[derive(Parser)]
#[command(name = "geospanner", version, about = "Sparse geometric t-spanners on planar point sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic point set.
    Gen(GenArgs),
    /// Build a spanner.
    Build(BuildArgs),
    /// Measure the stretch factor of a graph.
    Measure(MeasureArgs),
    /// Print graph metrics.
    Stats(StatsArgs),
    /// Run a benchmark sweep.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// uni-square, normal-clustered, grid-random, annulus, galaxy, convex or spokes.
    #[arg(long)]
    dist: Distribution,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file, one "x y" per line.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Point file (plain "x y" lines or TSPLIB).
    #[arg(long, conflicts_with_all = ["dist", "n"], required_unless_present = "dist")]
    input: Option<PathBuf>,
    /// Input format: auto, plain or tsplib.
    #[arg(long, default_value = "auto")]
    format: PointFormat,
    /// Generate the points instead of reading them.
    #[arg(long, requires = "n")]
    dist: Option<Distribution>,
    #[arg(long, requires = "dist")]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Target stretch factor, > 1.
    #[arg(long, allow_negative_numbers = true)]
    t: f64,
    /// Leaf capacity (default 2500).
    #[arg(long)]
    k: Option<usize>,
    /// Hop radius (default from t).
    #[arg(long)]
    h: Option<usize>,
    /// Stretch of the leader spanner (default from t).
    #[arg(long)]
    tprime: Option<f64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Edge list output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Construction record for `measure --record`.
    #[arg(long)]
    record: Option<PathBuf>,
    /// Also write the (deduplicated) points.
    #[arg(long)]
    points_out: Option<PathBuf>,
}

#[derive(Args)]
struct MeasureArgs {
    /// Construction record: fast measurement.
    #[arg(long, required_unless_present = "points")]
    record: Option<PathBuf>,
    /// Edge list. With --points: exact all-pairs measurement. With --record:
    /// checked against the record and measured fast.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, requires = "graph", conflicts_with = "record")]
    points: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    points: PathBuf,
    /// Exact hop diameter even above 20000 vertices.
    #[arg(long)]
    exact_diameter: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML sweep config; inline flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated distribution names.
    #[arg(long, value_delimiter = ',')]
    dists: Vec<Distribution>,
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long = "t", value_delimiter = ',', allow_negative_numbers = true)]
    stretch: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    threads: Vec<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    h: Option<usize>,
    #[arg(long)]
    tprime: Option<f64>,
    /// fast, exact or none.
    #[arg(long)]
    measure: Option<String>,
    /// Add the hop diameter column.
    #[arg(long)]
    diameter: bool,
    /// Run cells concurrently (timings not comparable).
    #[arg(long)]
    parallel_cells: bool,
    /// CSV output (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for SVG charts.
    #[arg(long)]
    plots: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) => Failure::Usage(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Build(a) => build(a),
        Command::Measure(a) => measure(a),
        Command::Stats(a) => run_stats(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn gen(a: GenArgs) -> Outcome {
    let points = generate(&DistributionSpec::new(a.dist, a.n, a.seed))?;
    points.save(&a.output)?;
    println!("wrote {} points to {}", points.len(), a.output.display());
    Ok(())
}

fn params_from(t: f64, k: Option<usize>, h: Option<usize>, tprime: Option<f64>) -> Result<Params, Failure> {
    let d = default_params(t)?;
    Ok(Params::new(
        t,
        tprime.unwrap_or(d.t_prime.max(t)),
        k.unwrap_or(d.k),
        h.unwrap_or(d.h),
    )?)
}

fn build(a: BuildArgs) -> Outcome {
    let params = params_from(a.t, a.k, a.h, a.tprime)?;
    if a.threads == 0 {
        return Err(Failure::Usage("threads must be at least 1".into()));
    }
    let points = match (&a.input, a.dist, a.n) {
        (Some(path), _, _) => load_pointset(path, a.format)?,
        (None, Some(dist), Some(n)) => generate(&DistributionSpec::new(dist, n, a.seed))?,
        _ => return Err(Failure::Usage("give --input FILE or --dist NAME --n N".into())),
    };
    let start = Instant::now();
    let rec = fast_sparse_spanner_with(&points, &params, a.threads)?;
    let secs = start.elapsed().as_secs_f64();
    let g = &rec.graph;
    let s = rec.step_edges;
    println!("params: {params}");
    println!(
        "n {} m {} average degree {:.4} built in {secs:.3} s",
        g.vertex_count(),
        g.edge_count(),
        g.average_degree()
    );
    println!(
        "edges per step: leaf greedy {} leader wspd {} neighbor merge {} hop merge {}",
        s.leaf_greedy, s.leader_wspd, s.neighbor_merge, s.hop_merge
    );
    println!(
        "greedy path success rate {:.4} ({} of {}), astar calls {}",
        rec.stats.greedy_path_success_rate(),
        rec.stats.greedy_path_successes,
        rec.stats.greedy_path_calls,
        rec.stats.astar_calls
    );
    if let Some(path) = &a.output {
        g.save(path)?;
    }
    if let Some(path) = &a.points_out {
        points.save(path)?;
    }
    if let Some(path) = &a.record {
        rec.save(path)?;
    }
    Ok(())
}

fn load_graph(graph: &Path, points: &PointSet) -> Result<Graph, Failure> {
    Ok(Graph::load(graph, points)?)
}

fn measure(a: MeasureArgs) -> Outcome {
    let start = Instant::now();
    let (report, label) = match (&a.record, &a.graph, &a.points) {
        (Some(r), graph, _) => {
            let mut rec = ConstructionRecord::load(r)?;
            if let Some(path) = graph {
                let g = load_graph(path, &rec.points)?;
                rec = rec.with_graph(g)?;
            }
            (fast_stretch_factor(&rec, a.threads.max(1))?, "fast")
        }
        (None, Some(graph), Some(points)) => {
            let p = load_pointset(points, PointFormat::Auto)?;
            let g = load_graph(graph, &p)?;
            (exact_stretch(&g, a.threads.max(1)), "exact")
        }
        _ => return Err(Failure::Usage("give --record FILE or --graph FILE --points FILE".into())),
    };
    println!("t_H {}", report.stretch);
    match report.worst_pair {
        Some((u, v)) => println!("worst pair {u} {v}"),
        None => println!("worst pair none"),
    }
    println!(
        "method {label}, pairs examined {}, greedy path successes {}, astar calls {}, {:.3} s",
        report.pairs_examined,
        report.greedy_path_successes,
        report.astar_calls,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn run_stats(a: StatsArgs) -> Outcome {
    let p = load_pointset(&a.points, PointFormat::Auto)?;
    let g = load_graph(&a.graph, &p)?;
    let s = stats(&g, a.exact_diameter);
    println!("{}", geospanner::GraphStats::CSV_HEADER);
    println!("{}", s.csv_row());
    println!("{s}");
    Ok(())
}

fn run_bench(a: BenchArgs) -> Outcome {
    let mut config = match &a.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::new(Vec::new(), Vec::new(), Vec::new()),
    };
    if !a.dists.is_empty() {
        config.distributions = a.dists;
    }
    if !a.sizes.is_empty() {
        config.sizes = a.sizes;
    }
    if !a.stretch.is_empty() {
        config.stretch = a.stretch;
    }
    if !a.seeds.is_empty() {
        config.seeds = a.seeds;
    }
    if !a.threads.is_empty() {
        config.threads = a.threads;
    }
    config.k = a.k.or(config.k);
    config.h = a.h.or(config.h);
    config.t_prime = a.tprime.or(config.t_prime);
    if let Some(m) = &a.measure {
        config.measure = m.parse::<Measure>()?;
    }
    config.diameter |= a.diameter;
    config.parallel_cells |= a.parallel_cells;
    config.validate()?;
    let rows = bench::run_sweep(&config, |row| {
        let c = &row.cell;
        match (&row.error, row.missed_target()) {
            (Some(e), _) => eprintln!("{} n={} t={} seed={}: FAILED: {e}", c.distribution, c.n, c.t, c.seed),
            (None, true) => eprintln!(
                "{} n={} t={} seed={}: MISSED TARGET STRETCH: measured {}",
                c.distribution,
                c.n,
                c.t,
                c.seed,
                row.t_h.unwrap_or(f64::NAN)
            ),
            (None, false) => eprintln!(
                "{} n={} t={} seed={} threads={}: {:.1} ms, avg degree {:.4}, greedy path success {:.4}",
                c.distribution, c.n, c.t, c.seed, c.threads, row.build_ms, row.average_degree, row.greedy_path_success_rate
            ),
        }
    })?;
    match &a.out {
        Some(path) => bench::write_csv(&rows, std::fs::File::create(path).map_err(Error::from)?)?,
        None => bench::write_csv(&rows, std::io::stdout().lock())?,
    }
    if let Some(dir) = &a.plots {
        bench::write_plots(&rows, dir)?;
    }
    let missed = rows.iter().filter(|r| r.missed_target()).count();
    if missed > 0 {
        eprintln!("WARNING: {missed} run(s) missed the target stretch factor");
    }
    Ok(())
}
