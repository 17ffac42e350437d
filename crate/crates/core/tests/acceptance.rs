//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Criteria run one after another so timing-sensitive
//! ones do not compete for cores.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use minigl::bench;
use minigl::compute::{self, TileConfig};
use minigl::fused_map;
use minigl::graph::{self, Graph, GraphGenSpec, GraphModel, NodeId};
use minigl::memsim::{self, CachePolicy, CostParams, IoSimOptions, IoStep};
use minigl::rng;
use minigl::sampler::{self, Fanouts, SubgraphBatch};
use minigl::scheduler::{self, ScheduleOptions};
use minigl::synthetic;
use minigl::trainer::{self, ModelConfig, PipelineFlags};
use minigl::{Error, FeatureMatrix};
use rand::Rng as _;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn power_law_graph() -> Graph {
    let spec = GraphGenSpec {
        model: GraphModel::PowerLaw { avg_degree: 16.0, exponent: 2.5 },
        num_nodes: 100_000,
        seed: 42,
    };
    graph::generate(&spec).expect("generator")
}

fn c1_fused_map_correctness() -> Check {
    let start = Instant::now();
    let mut r = rng::seeded(1);
    let dup_ratios = [0.0, 0.5, 0.9];
    let workers = [1, 2, 4, 8];
    let mut largest = 0;
    for case in 0..200 {
        // Log-uniform sizes, with every twentieth case at the maximum.
        let n = if case % 20 == 0 { 1_000_000 } else { 10f64.powf(r.random_range(1.0..6.0)) as usize };
        largest = largest.max(n);
        let dup = dup_ratios[case % 3];
        let w = workers[(case / 3) % 4];
        let ids = bench::id_stream(n, dup, case as u64).map_err(|e| e.to_string())?;
        let table = fused_map::build(&ids, w).map_err(|e| e.to_string())?;
        let base = fused_map::build_locked_baseline(&ids, w).map_err(|e| e.to_string())?;

        let mut keys: Vec<NodeId> = table.entries().map(|e| e.0).collect();
        let n_unique = keys.len();
        let mut hit = vec![false; n_unique];
        for (_, v) in table.entries() {
            let v = v as usize;
            ensure(v < n_unique && !hit[v], || format!("case {case}: local id {v} reused or out of range"))?;
            hit[v] = true;
        }
        for &id in &ids {
            table.lookup(id).map_err(|e| format!("case {case}: {e}"))?;
        }
        let mut base_keys: Vec<NodeId> = base.entries().map(|e| e.0).collect();
        keys.sort_unstable();
        base_keys.sort_unstable();
        ensure(keys == base_keys, || format!("case {case}: key sets differ from the locked baseline"))?;
    }
    let elapsed = start.elapsed();
    within(elapsed, 60.0)?;
    Ok(format!("200 cases up to {largest} ids, bijective and equal to baseline in {:.1}s", elapsed.as_secs_f64()))
}

fn c2_concurrency_benefit() -> Check {
    let ids = bench::id_stream(1_000_000, 0.5, 7).map_err(|e| e.to_string())?;
    let report = bench::bench_map(&ids, 8, 9).map_err(|e| e.to_string())?;
    ensure(report.speedup > 1.0, || {
        format!("fused {} ns vs locked {} ns (speedup {:.2})", report.fused_ns, report.locked_ns, report.speedup)
    })?;
    Ok(format!(
        "8 workers: fused {:.1} ms vs locked {:.1} ms, speedup {:.2}x (available cores: {})",
        report.fused_ns as f64 / 1e6,
        report.locked_ns as f64 / 1e6,
        report.speedup,
        std::thread::available_parallelism().map_or(1, |n| n.get())
    ))
}

fn all_nodes(g: &Graph) -> Vec<NodeId> {
    (0..g.num_nodes() as NodeId).collect()
}

fn c3_match_statistics(g: &Graph) -> Check {
    let start = Instant::now();
    let f: Fanouts = "5,10,15".parse().map_err(|e: Error| e.to_string())?;
    let windows = sampler::sample_windows(g, &all_nodes(g), &f, 2000, 8, 1, 3).map_err(|e| e.to_string())?;
    let matrices = windows
        .iter()
        .map(|w| scheduler::build_match_matrix(w))
        .collect::<minigl::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let stats = scheduler::match_stats(&matrices).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(stats.avg_match_degree > 0.2, || format!("avg match degree {:.3}", stats.avg_match_degree))?;
    ensure(stats.delta_match > 0.0, || "match degrees do not vary".into())?;
    within(elapsed, 30.0)?;
    Ok(format!(
        "avg {:.3}, delta {:.3} over {} pairs in {:.1}s",
        stats.avg_match_degree,
        stats.delta_match,
        stats.num_pairs,
        elapsed.as_secs_f64()
    ))
}

fn c4_reorder_benefit(windows: &[Vec<SubgraphBatch>]) -> Check {
    let mut with = 0u64;
    let mut without = 0u64;
    for (w, win) in windows.iter().enumerate() {
        let on = scheduler::schedule_window(win, &ScheduleOptions::new(true, true, 128)).map_err(|e| e.to_string())?;
        let off = scheduler::schedule_window(win, &ScheduleOptions::new(false, true, 128)).map_err(|e| e.to_string())?;
        with += on.window_traffic_bytes;
        without += off.window_traffic_bytes;
        let m = scheduler::build_match_matrix(win).map_err(|e| e.to_string())?;
        let rows: Vec<Vec<f64>> = (0..m.n()).map(|i| (0..m.n()).map(|j| m.get(i, j)).collect()).collect();
        let reference = common::reference_greedy(&rows);
        ensure(on.order == reference, || format!("window {w}: {:?} vs reference {reference:?}", on.order))?;
    }
    let n = windows.len() as f64;
    let (mean_on, mean_off) = (with as f64 / n, without as f64 / n);
    ensure(mean_on <= mean_off, || format!("reordered mean {mean_on:.0} B exceeds default {mean_off:.0} B"))?;
    Ok(format!(
        "{} windows: mean traffic {:.1} MB reordered vs {:.1} MB default ({:.2}% saved), traces match reference",
        windows.len(),
        mean_on / 1e6,
        mean_off / 1e6,
        100.0 * (1.0 - mean_on / mean_off)
    ))
}

fn c5_walkthrough() -> Check {
    let sets = common::walkthrough_sets();
    let refs: Vec<&[NodeId]> = sets.iter().map(Vec::as_slice).collect();
    let default = scheduler::schedule_sets(&refs, &ScheduleOptions::new(false, true, 1)).map_err(|e| e.to_string())?;
    let reordered = scheduler::schedule_sets(&refs, &ScheduleOptions::new(true, true, 1)).map_err(|e| e.to_string())?;
    ensure(reordered.order == vec![0, 2, 1], || format!("order {:?}", reordered.order))?;
    let first = &default.transitions[0].load_ids;
    ensure(first == &vec![10, 12], || format!("first load set {first:?}"))?;
    Ok(format!(
        "order [SubG1, SubG3, SubG2]; first default load {{10, 12}}; nodes loaded {} -> {}",
        default.load_sizes().iter().sum::<usize>(),
        reordered.load_sizes().iter().sum::<usize>()
    ))
}

fn c6_cost_model() -> Check {
    let mut r = rng::seeded(6);
    let mut ties = 0;
    for i in 0..10_000 {
        let f = r.random_range(1..=64usize);
        let d = r.random_range(1..=1024usize);
        let global_bw = 10f64.powf(r.random_range(9.0..13.0));
        let shared_bw = global_bw * 10f64.powf(r.random_range(0.0001..3.0));
        let p = CostParams { shared_bw, global_bw, ..CostParams::default() };
        let m = memsim::t_memory_aware(f, d, &p).map_err(|e| e.to_string())?;
        let n = memsim::t_naive(f, d, &p).map_err(|e| e.to_string())?;
        if (f, d) == (1, 1) {
            ties += 1;
        }
        ensure(m < n, || format!("draw {i}: f={f} d={d} B_s={shared_bw:e} B_g={global_bw:e}: {m:e} >= {n:e}"))?;
    }
    let p = CostParams::default();
    let (f, d) = (10.0f64, 256.0f64);
    let want_n = (4.0 * (f - 1.0) * d + 4.0 * f * d + 4.0 * f * d) / 938e9;
    let want_m = (4.0 * (f - 1.0) * d + 4.0 * f * (d - 1.0)) / 12e12 + (4.0 * f * d + 4.0 * f) / 938e9;
    let n = memsim::t_naive(10, 256, &p).map_err(|e| e.to_string())?;
    let m = memsim::t_memory_aware(10, 256, &p).map_err(|e| e.to_string())?;
    ensure(common::rel_close(n, want_n, 1e-12), || format!("t_naive {n:e} vs {want_n:e}"))?;
    ensure(common::rel_close(m, want_m, 1e-12), || format!("t_memory_aware {m:e} vs {want_m:e}"))?;
    Ok(format!("10^4 draws strict ({ties} draws at fanout=d=1); t_naive {n:.4e} s, t_memory_aware {m:.4e} s"))
}

/// Largest element error scaled by the absolute-value sum of its terms.
fn scaled_error(csr: &compute::LocalCsr, x: &FeatureMatrix, got: &FeatureMatrix) -> f64 {
    let abs_x = FeatureMatrix::new(x.num_nodes(), x.dim(), x.data().iter().map(|v| v.abs()).collect()).unwrap();
    let abs_edges: Vec<(u32, u32, f32)> = csr.edges().map(|(t, s, w)| (t, s, w.abs())).collect();
    let abs_csr = compute::LocalCsr::from_edges(csr.num_targets(), csr.num_sources(), &abs_edges).unwrap();
    let want = common::dense_product(csr, x);
    let scale = common::dense_product(&abs_csr, &abs_x);
    got.data()
        .iter()
        .zip(want.iter().zip(&scale))
        .map(|(&g, (&w, &s))| if s == 0.0 { (f64::from(g) - w).abs() } else { (f64::from(g) - w).abs() / s })
        .fold(0.0, f64::max)
}

fn c7_aggregation() -> Check {
    let cfg = TileConfig::default();
    let mut r = rng::seeded(7);
    let mut worst_fwd = 0f64;
    for case in 0..100u64 {
        let csr = common::random_local_csr(case, 200, 20);
        let d = r.random_range(1..=128);
        let x = FeatureMatrix::random(csr.num_sources(), d, case + 1000);
        let out = compute::aggregate_forward(&csr, &x, &cfg).map_err(|e| e.to_string())?;
        let err = scaled_error(&csr, &x, &out);
        worst_fwd = worst_fwd.max(err);
        ensure(err <= 1e-5, || format!("graph {case}: forward error {err:e}"))?;
    }

    let mut worst_fd = 0f64;
    for case in 0..20u64 {
        let csr = common::random_local_csr(500 + case, 30, 6);
        let d = 4;
        let x = FeatureMatrix::random(csr.num_sources(), d, case);
        let g = FeatureMatrix::random(csr.num_targets(), d, case + 1);
        let grad = compute::aggregate_backward(&csr.transpose(), &g, &cfg).map_err(|e| e.to_string())?;
        let loss = |x: &FeatureMatrix| -> f64 {
            common::dense_product(&csr, x).iter().zip(g.data()).map(|(a, b)| a * f64::from(*b)).sum()
        };
        for i in 0..x.data().len() {
            let mut p = x.clone();
            p.data_mut()[i] += 1e-3;
            let mut m = x.clone();
            m.data_mut()[i] -= 1e-3;
            let h = f64::from(p.data()[i]) - f64::from(m.data()[i]);
            let fd = (loss(&p) - loss(&m)) / h;
            let an = f64::from(grad.data()[i]);
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-3);
            worst_fd = worst_fd.max(rel);
            ensure(rel <= 1e-4, || format!("graph {case} entry {i}: fd {fd} vs analytic {an}"))?;
        }
    }

    let mut worst_adj = 0f64;
    for case in 0..20u64 {
        let csr = common::random_local_csr(900 + case, 200, 20);
        let d = 32;
        let x = FeatureMatrix::random(csr.num_sources(), d, case + 3);
        let g = FeatureMatrix::random(csr.num_targets(), d, case + 4);
        let ax = compute::aggregate_forward(&csr, &x, &cfg).map_err(|e| e.to_string())?;
        let atg = compute::aggregate_backward(&csr.transpose(), &g, &cfg).map_err(|e| e.to_string())?;
        let dot = |a: &[f32], b: &[f32]| -> (f64, f64) {
            a.iter().zip(b).fold((0.0, 0.0), |(s, t), (p, q)| {
                let v = f64::from(*p) * f64::from(*q);
                (s + v, t + v.abs())
            })
        };
        let (lhs, lscale) = dot(ax.data(), g.data());
        let (rhs, rscale) = dot(x.data(), atg.data());
        let rel = (lhs - rhs).abs() / lscale.max(rscale);
        worst_adj = worst_adj.max(rel);
        ensure(rel <= 1e-5, || format!("graph {case}: <Ax,g> {lhs} vs <x,A^T g> {rhs}"))?;
    }

    let csr = common::random_local_csr(4242, 200, 20);
    let x = FeatureMatrix::random(csr.num_sources(), 100, 5);
    let reference = compute::aggregate_forward(&csr, &x, &TileConfig::default()).map_err(|e| e.to_string())?;
    for (tx, ty) in [(8, 32), (4, 16), (1, 1)] {
        let c = TileConfig::new(tx, ty, cfg.scratch_limit_bytes).map_err(|e| e.to_string())?;
        let out = compute::aggregate_forward(&csr, &x, &c).map_err(|e| e.to_string())?;
        ensure(out.data() == reference.data(), || format!("tiling ({tx},{ty}) changed the result"))?;
    }
    ensure(matches!(TileConfig::new(16, 64, cfg.scratch_limit_bytes), Err(Error::Config(_))), || {
        "(16,64) was accepted".into()
    })?;
    Ok(format!(
        "forward err {worst_fwd:.1e}, finite-diff err {worst_fd:.1e}, adjoint err {worst_adj:.1e}; \
         (8,32),(4,16),(1,1) identical; (16,64) rejected"
    ))
}

fn c8_budget() -> Check {
    for (x, y) in [(16, 64), (32, 33), (1, 1025)] {
        ensure(matches!(TileConfig::new(x, y, 1 << 30), Err(Error::Config(_))), || format!("({x},{y}) accepted"))?;
    }
    let cfg = TileConfig::new(8, 32, 4000).map_err(|e| e.to_string())?;
    let bytes = cfg.scratch_bytes(15);
    ensure(bytes == 1504, || format!("scratch for fanout 15 is {bytes}"))?;
    let ok = compute::plan_tiles(64, 256, &[15; 64], &cfg).map_err(|e| e.to_string())?;
    ensure(ok.max_scratch_bytes() == 1504, || "plan reports wrong scratch size".into())?;
    let tight = TileConfig::new(8, 32, 1503).map_err(|e| e.to_string())?;
    ensure(matches!(compute::plan_tiles(64, 256, &[15; 64], &tight), Err(Error::Config(_))), || {
        "1504-byte tile accepted under a 1503-byte limit".into()
    })?;
    let mut fan = vec![3; 64];
    fan[40] = 200;
    let err = compute::plan_tiles(64, 256, &fan, &cfg);
    ensure(matches!(err, Err(Error::Config(_))), || "high-fanout tile accepted".into())?;
    Ok("X*Y >= 1024 and over-budget tiles rejected; (8,32) with fanout 15 needs 1504 bytes and is accepted".into())
}

fn c9_training() -> Check {
    let start = Instant::now();
    let mut converged = 0;
    let mut worst_gap = 0f64;
    let mut ratios = Vec::new();
    for seed in 0..10u64 {
        let ds = synthetic::two_cluster(200, 16, seed).map_err(|e| e.to_string())?;
        let mut cfg = ModelConfig::gcn(16, 2, Fanouts::new(vec![10, 10]).map_err(|e| e.to_string())?);
        cfg.seed = seed;
        cfg.epochs = 20;
        let base = trainer::train(&ds, &cfg, PipelineFlags::ALL_OFF).map_err(|e| e.to_string())?.losses();
        let flags = PipelineFlags { matching: true, reorder: false, memory_aware: true };
        let opt = trainer::train(&ds, &cfg, flags).map_err(|e| e.to_string())?.losses();
        worst_gap = base.iter().zip(&opt).map(|(a, b)| (a - b).abs()).fold(worst_gap, f64::max);
        let ratio = base[19] / base[0];
        ratios.push(ratio);
        converged += usize::from(ratio <= 0.5);
    }
    let elapsed = start.elapsed();
    ensure(converged >= 9, || format!("only {converged}/10 seeds halved their loss (ratios {ratios:.3?})"))?;
    ensure(worst_gap <= 1e-4, || format!("flags moved the loss by {worst_gap:e}"))?;
    within(elapsed, 120.0)?;
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    Ok(format!(
        "{converged}/10 seeds converged (worst final/initial {worst:.3}); flag gap {worst_gap:.1e}; {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn c10_io_monotonicity(g: &Graph, windows: &[Vec<SubgraphBatch>]) -> Check {
    let mut steps = Vec::new();
    for (w, win) in windows.iter().enumerate() {
        let order = scheduler::schedule_window(win, &ScheduleOptions::new(true, true, 128))
            .map_err(|e| e.to_string())?
            .order;
        steps.extend(order.into_iter().map(|b| IoStep { window: w, batch: b, nodes: &win[b].unique_nodes }));
    }
    let p = CostParams::default();
    let run = |ratio: f64, policy, matching| -> Result<u64, String> {
        let o = IoSimOptions { cache_ratio: ratio, policy, matching, feature_dim: 128 };
        memsim::simulate_epoch_io(g, &steps, &o, &p).map(|r| r.bytes_host_to_device).map_err(|e| e.to_string())
    };
    let none = run(0.0, CachePolicy::None, false)?;
    let mut prev = u64::MAX;
    let mut curve = Vec::new();
    for k in 0..=10 {
        let ratio = k as f64 / 10.0;
        let cache = run(ratio, CachePolicy::Degree, false)?;
        let both = run(ratio, CachePolicy::Degree, true)?;
        ensure(cache <= prev, || format!("cache-only traffic rose at ratio {ratio}"))?;
        ensure(both <= cache && cache <= none, || {
            format!("ratio {ratio}: match+cache {both}, cache {cache}, none {none}")
        })?;
        prev = cache;
        curve.push(both as f64 / none as f64);
    }
    let seen: HashSet<usize> = steps.iter().map(|s| s.window).collect();
    Ok(format!(
        "{} windows; match+cache traffic relative to none: {:.3?}",
        seen.len(),
        curve
    ))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, result: Check| {
        match result {
            Ok(detail) => println!("[PASS] C{id} {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] C{id} {name}: {detail}");
            }
        }
    };

    report(1, "fused-map correctness", c1_fused_map_correctness());
    report(2, "fused-map concurrency benefit", c2_concurrency_benefit());
    let g = power_law_graph();
    report(3, "match-degree statistics", c3_match_statistics(&g));
    let f = Fanouts::new(vec![5, 10, 15]).expect("fanouts");
    let windows = sampler::sample_windows(&g, &all_nodes(&g), &f, 2000, 8, 20, 4).map_err(|e| e.to_string());
    report(4, "reorder benefit", windows.clone().and_then(|w| c4_reorder_benefit(&w)));
    report(5, "walkthrough instance", c5_walkthrough());
    report(6, "cost model", c6_cost_model());
    report(7, "aggregation correctness", c7_aggregation());
    report(8, "budget enforcement", c8_budget());
    report(9, "training convergence", c9_training());
    report(10, "io-simulation monotonicity", windows.and_then(|w| c10_io_monotonicity(&g, &w)));
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
