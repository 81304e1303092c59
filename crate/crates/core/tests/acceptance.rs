//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers to run a subset:
//! `cargo test --test acceptance -- 3 7`.

use std::process::ExitCode;
use std::time::Instant;

use geospanner::bench::{run_sweep, BenchConfig, Measure};
use geospanner::greedy::dijkstra_sssp;
use geospanner::wspd::{build_wspd, well_separated};
use geospanner::{
    default_params, exact_stretch, fast_sparse_spanner, fast_sparse_spanner_with, fast_stretch_factor, fg_greedy,
    generate, path_greedy, DualGraph, Distribution, DistributionSpec, Graph, Params, PointSet, QuadTree,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

const STRETCHES: [f64; 4] = [1.05, 1.1, 1.25, 2.0];
const TOL: f64 = 1e-9;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Criteria 1, 2 and 9 share the same 252 runs.
fn stretch_runs() -> [Verdict; 3] {
    let sizes = [500, 1000, 2000];
    let (mut runs, mut c1_bad, mut c2_bad) = (0, Vec::new(), Vec::new());
    let (mut c9_workers, mut c9_parallel) = (Vec::new(), Vec::new());
    let mut worst_exact: f64 = 0.0;
    for dist in Distribution::ALL {
        for n in sizes {
            for t in STRETCHES {
                for seed in 1..=3u64 {
                    runs += 1;
                    let tag = format!("{dist} n={n} t={t} seed={seed}");
                    let points = generate(&DistributionSpec::new(dist, n, seed)).unwrap();
                    let params = Params {
                        k: 200,
                        ..default_params(t).unwrap()
                    };
                    let rec = fast_sparse_spanner(&points, &params).unwrap();
                    let exact = exact_stretch(&rec.graph, 1).stretch;
                    worst_exact = worst_exact.max(exact / t);
                    if exact > t + TOL {
                        c1_bad.push(format!("{tag}: exact {exact}"));
                    }
                    let fast1 = fast_stretch_factor(&rec, 1).unwrap().stretch;
                    if (fast1 - exact.max(t)).abs() > TOL {
                        c2_bad.push(format!("{tag}: fast {fast1} vs exact {exact}"));
                    }
                    let fast4 = fast_stretch_factor(&rec, 4).unwrap().stretch;
                    if fast4 != fast1 {
                        c9_workers.push(format!("{tag}: 1 worker {fast1}, 4 workers {fast4}"));
                    }
                    let par = fast_sparse_spanner_with(&points, &params, 4).unwrap();
                    let par_exact = exact_stretch(&par.graph, 1).stretch;
                    if par_exact > t + TOL {
                        c9_parallel.push(format!("{tag}: parallel build stretch {par_exact}"));
                    }
                }
            }
        }
    }
    let summarize = |bad: &Vec<String>, ok: String| {
        if bad.is_empty() {
            ok
        } else {
            format!("{} of {runs} failing: {}", bad.len(), bad.join("; "))
        }
    };
    let c9 = format!(
        "t_H for 1 vs 4 workers: {}; parallel builds within t: {}",
        summarize(&c9_workers, format!("identical on {runs} runs")),
        summarize(&c9_parallel, format!("all {runs} runs"))
    );
    [
        verdict(
            c1_bad.is_empty(),
            summarize(&c1_bad, format!("{runs} runs, max exact/t = {worst_exact:.6}")),
        ),
        verdict(
            c2_bad.is_empty(),
            summarize(&c2_bad, format!("{runs} runs, fast == max(t, exact) within {TOL:e}")),
        ),
        verdict(c9_workers.is_empty() && c9_parallel.is_empty(), c9),
    ]
}

fn random_instance(rng: &mut ChaCha8Rng, i: usize) -> PointSet {
    let dist = Distribution::ALL[i % Distribution::ALL.len()];
    let n = rng.random_range(20..=300);
    generate(&DistributionSpec::new(dist, n, rng.random())).unwrap()
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = Vec::new();
    let mut edges = 0;
    for i in 0..50 {
        let p = random_instance(&mut rng, i);
        for t in STRETCHES {
            let a = fg_greedy(&p, t).unwrap().edges();
            let b = path_greedy(&p, t).unwrap().edges();
            edges += a.len();
            if a != b {
                bad.push(format!("instance {i} (n={}) t={t}", p.len()));
            }
        }
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("50 point sets x 4 t: identical edge sets ({edges} edges in total)")
        } else {
            format!("{} mismatches, first: {}", bad.len(), bad[0])
        },
    )
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = Vec::new();
    let mut checked = 0;
    for i in 0..20 {
        let p = random_instance(&mut rng, i);
        for t in STRETCHES {
            let g = path_greedy(&p, t).unwrap();
            let s = exact_stretch(&g, 1).stretch;
            if s > t + TOL {
                bad.push(format!("instance {i} t={t}: stretch {s}"));
            }
            let all = g.edges();
            for &(u, v) in all.choose_multiple(&mut rng, 20) {
                let mut h: Graph = g.clone();
                h.remove_edge(u, v);
                let d = dijkstra_sssp(&h, u)[v];
                checked += 1;
                if d <= t * p.dist(u, v) {
                    bad.push(format!("instance {i} t={t}: edge ({u},{v}) removable, {d}"));
                }
            }
        }
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("80 spanners within t; {checked} removed edges all break their t-path")
        } else {
            format!("{} violations, first: {}", bad.len(), bad[0])
        },
    )
}

fn criterion_5() -> Verdict {
    let bounds = [14.2, 9.7, 6.0, 3.75];
    let mut worst = Vec::new();
    let mut pass = true;
    for (t, bound) in STRETCHES.into_iter().zip(bounds) {
        let mut max_deg: f64 = 0.0;
        for seed in 1..=3 {
            let p = generate(&DistributionSpec::new(Distribution::UniSquare, 16_384, seed)).unwrap();
            let rec = fast_sparse_spanner(&p, &default_params(t).unwrap()).unwrap();
            max_deg = max_deg.max(rec.graph.average_degree());
        }
        pass &= max_deg <= bound;
        worst.push(format!("t={t}: {max_deg:.3} <= {bound}"));
    }
    verdict(pass, format!("max average degree over 3 seeds: {}", worst.join(", ")))
}

fn criterion_6() -> Verdict {
    let mut ratios = Vec::new();
    for n in [1000, 2000, 4000, 8000, 16_000] {
        let p = generate(&DistributionSpec::new(Distribution::UniSquare, n, 1)).unwrap();
        let rec = fast_sparse_spanner(&p, &default_params(1.1).unwrap()).unwrap();
        ratios.push(rec.graph.edge_count() as f64 / n as f64);
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    verdict(
        spread < 0.2,
        format!("edges/n = [{}], spread {:.1}%", shown.join(", "), spread * 100.0),
    )
}

fn criterion_7() -> Verdict {
    let mut bad = Vec::new();
    let mut pairs_total = 0;
    for (i, dist) in Distribution::ALL.into_iter().enumerate() {
        for s in [2.0, 4.0, 36.0] {
            let p = generate(&DistributionSpec::new(dist, 200, 70 + i as u64)).unwrap();
            let n = p.len();
            let w = build_wspd(&p, s).unwrap();
            pairs_total += w.len();
            let mut hits = vec![0u32; n * n];
            for pair in &w.pairs {
                if !well_separated(w.tree.node(pair.a), w.tree.node(pair.b), s) {
                    bad.push(format!("{dist} s={s}: pair not separated"));
                }
                for &x in w.tree.points_of(pair.a) {
                    for &y in w.tree.points_of(pair.b) {
                        hits[x.min(y) * n + x.max(y)] += 1;
                    }
                }
            }
            for u in 0..n {
                for v in u + 1..n {
                    if hits[u * n + v] != 1 {
                        bad.push(format!("{dist} s={s}: pair ({u},{v}) covered {} times", hits[u * n + v]));
                    }
                }
            }
        }
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("7 sets of 200 points x s in {{2,4,36}}: {pairs_total} pairs, exact cover, all separated")
        } else {
            format!("{} violations, first: {}", bad.len(), bad[0])
        },
    )
}

/// Three tight clusters at the corners of a large triangle, separated by
/// long stretches of empty leaves.
fn three_clusters(n: usize, seed: u64) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let centers = [(0.0, 0.0), (1000.0, 0.0), (500.0, 866.0)];
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let (cx, cy) = centers[i % 3];
            (cx + noise.sample(&mut rng), cy + noise.sample(&mut rng))
        })
        .collect();
    PointSet::from_xy(&coords).unwrap()
}

fn criterion_8() -> Verdict {
    let p = three_clusters(600, 8);
    let k = 20;
    let tree = QuadTree::build(&p, k).unwrap();
    let diameter = DualGraph::build(&tree).diameter();
    let mut parts = Vec::new();
    let mut pass = true;
    for t in STRETCHES {
        let d = default_params(t).unwrap();
        let params = Params::new(t, d.t_prime, k, diameter).unwrap();
        let rec = fast_sparse_spanner(&p, &params).unwrap();
        let s = exact_stretch(&rec.graph, 1).stretch;
        pass &= s <= t + TOL;
        parts.push(format!("t={t}: {s:.6}"));
    }
    verdict(
        pass,
        format!("n=600, k={k}, h=diameter(G_T)={diameter}, exact stretch {}", parts.join(", ")),
    )
}

fn criterion_10() -> Verdict {
    let config = BenchConfig {
        measure: Measure::None,
        ..BenchConfig::new(vec![Distribution::UniSquare], vec![50_000], vec![1.1])
    };
    let rows = run_sweep(&config, |_| {}).unwrap();
    let r = &rows[0];
    if let Some(e) = &r.error {
        return verdict(false, format!("build failed: {e}"));
    }
    let secs = r.build_ms / 1e3;
    verdict(
        secs < 300.0 && r.greedy_path_success_rate > 0.5,
        format!(
            "n=50000 t=1.1: {secs:.1} s (limit 300), greedy path success rate {:.1}% (need > 50%), average degree {:.3}",
            r.greedy_path_success_rate * 100.0,
            r.average_degree
        ),
    )
}

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |c: u32| wanted.is_empty() || wanted.contains(&c);
    let names = [
        (1, "stretch guarantee"),
        (2, "fast stretch soundness"),
        (3, "greedy equivalence"),
        (4, "greedy correctness"),
        (5, "average-degree bounds"),
        (6, "sparsity scaling"),
        (7, "WSPD correctness"),
        (8, "full-radius merging"),
        (9, "parallel consistency"),
        (10, "50K smoke benchmark"),
    ];
    let mut results: Vec<(u32, Verdict, f64)> = Vec::new();
    let timed = |f: &dyn Fn() -> Verdict| {
        let s = Instant::now();
        let v = f();
        (v, s.elapsed().as_secs_f64())
    };
    if want(1) || want(2) || want(9) {
        let s = Instant::now();
        let [v1, v2, v9] = stretch_runs();
        let secs = s.elapsed().as_secs_f64();
        for (c, v) in [(1, v1), (2, v2), (9, v9)] {
            if want(c) {
                results.push((c, v, secs));
            }
        }
    }
    let single: [(u32, fn() -> Verdict); 7] = [
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (10, criterion_10),
    ];
    for (c, f) in single {
        if want(c) {
            let (v, secs) = timed(&f);
            results.push((c, v, secs));
        }
    }
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (c, v, secs) in &results {
        let name = names.iter().find(|n| n.0 == *c).map_or("", |n| n.1);
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {c:>2} [{status}] {name}: {} ({secs:.1} s)", v.detail);
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all {} criteria passed", results.len());
        ExitCode::SUCCESS
    }
}
