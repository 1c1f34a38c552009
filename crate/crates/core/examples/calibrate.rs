//! Development harness: run the kNN sweep and the learned-graph experiment
//! on the synthetic dataset and print the report, optionally over a small
//! (beta, sigma) grid.
//!
//! Usage: calibrate [--grid] [--noise X] [--seed N]

use graphrec_core::evalbench::{
    emit_report, evaluate_graph, run_knn_sweep, run_learned, ReportFormat,
};
use graphrec_core::graph::objective;
use graphrec_core::ingest::{split_train_test, to_matrix};
use graphrec_core::learn::{
    knn_graph, score_candidates, spectral_embedding, FeatureRows, LearnConfig, Metric,
};
use graphrec_core::synth::{generate, SynthConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let grid = args.iter().any(|a| a == "--grid");
    let defaults = SynthConfig::default();
    let synth_cfg = SynthConfig {
        noise: arg_value(&args, "--noise").unwrap_or(defaults.noise),
        user_bias: arg_value(&args, "--user-bias").unwrap_or(defaults.user_bias),
        item_bias: arg_value(&args, "--item-bias").unwrap_or(defaults.item_bias),
        taste_sharpness: arg_value(&args, "--taste").unwrap_or(defaults.taste_sharpness),
        popularity_skew: arg_value(&args, "--pop-skew").unwrap_or(defaults.popularity_skew),
        n_item_clusters: arg_value(&args, "--item-clusters")
            .map(|v| v as usize)
            .unwrap_or(defaults.n_item_clusters),
        n_user_clusters: arg_value(&args, "--user-clusters")
            .map(|v| v as usize)
            .unwrap_or(defaults.n_user_clusters),
        dense_clusters: arg_value(&args, "--dense-clusters")
            .map(|v| v as usize)
            .unwrap_or(defaults.dense_clusters),
        dense_noise: arg_value(&args, "--dense-noise").unwrap_or(defaults.dense_noise),
        dense_taste_sharpness: arg_value(&args, "--dense-taste")
            .unwrap_or(defaults.dense_taste_sharpness),
        seed: arg_value(&args, "--seed").map(|v| v as u64).unwrap_or(defaults.seed),
        ..SynthConfig::default()
    };
    println!("synth: {synth_cfg:?}");
    let t0 = std::time::Instant::now();
    let ds = generate(&synth_cfg).expect("synthetic dataset");
    println!(
        "dataset: {} users, {} items, {} ratings ({:?})",
        ds.meta.n_users(),
        ds.meta.n_items(),
        ds.len(),
        t0.elapsed()
    );

    let (train, test) = split_train_test(&ds, 0.2, 42).expect("split");
    println!("train {} / test {}", train.len(), test.len());

    let ks: Vec<usize> = (2..=10).collect();
    let t0 = std::time::Instant::now();
    let sweep = run_knn_sweep(&train, &test, &ks, Metric::CosineDistance).expect("sweep");
    println!("sweep in {:?}", t0.elapsed());
    print!("{}", emit_report(&sweep, ReportFormat::PlainTable));

    if args.iter().any(|a| a == "--trace") {
        let clusters = graphrec_core::synth::user_clusters(&synth_cfg);
        // Dense user index == external id - 1 when every user appears.
        trace_refine(&train, &test, &clusters, &args);
        return;
    }

    let betas: Vec<f64> = if grid {
        vec![1e-4, 1e-3, 1e-2, 1e-1]
    } else {
        vec![LearnConfig::default().beta]
    };
    let sigmas: Vec<f64> = if grid {
        vec![0.5, 1.0, 2.0]
    } else {
        vec![LearnConfig::default().sigma]
    };

    let ratio = arg_value(&args, "--ratio").unwrap_or(LearnConfig::default().edge_budget_ratio);
    let k_pool = arg_value(&args, "--k-pool")
        .map(|v| v as usize)
        .unwrap_or(LearnConfig::default().k_pool);
    let embed_dim = arg_value(&args, "--embed-dim")
        .map(|v| v as usize)
        .unwrap_or(LearnConfig::default().embed_dim);

    for &beta in &betas {
        for &sigma in &sigmas {
            let cfg = LearnConfig {
                beta,
                sigma,
                edge_budget_ratio: ratio,
                k_pool,
                embed_dim,
                ..LearnConfig::default()
            };
            let t0 = std::time::Instant::now();
            match run_learned(&train, &test, &cfg) {
                Ok(report) => {
                    let row = &report.rows[0];
                    let fallbacks: usize = row
                        .fallback_counts
                        .iter()
                        .filter(|(s, _)| {
                            **s != graphrec_core::predict::PredictionSource::GraphNeighbors
                        })
                        .map(|(_, c)| c)
                        .sum();
                    println!(
                        "beta={beta:<8} sigma={sigma:<4} -> mae={:.4} rmse={:.4} edges={} fallbacks={} ({:?})",
                        row.mae,
                        row.rmse,
                        row.graph_complexity,
                        fallbacks,
                        t0.elapsed()
                    );
                }
                Err(e) => println!("beta={beta} sigma={sigma} -> error: {e}"),
            }
        }
    }
}

fn arg_value(args: &[String], name: &str) -> Option<f64> {
    args.iter()
        .position(|a| a == name)
        .and_then(|p| args.get(p + 1))
        .and_then(|v| v.parse().ok())
}

/// Replay the refinement loop step by step and report what each batch does
/// to the objective and to test MAE.
fn trace_refine(
    train: &graphrec_core::ingest::RatingsDataset,
    test: &graphrec_core::ingest::RatingsDataset,
    clusters: &[usize],
    args: &[String],
) {
    let cfg = LearnConfig {
        beta: arg_value(args, "--beta").unwrap_or(LearnConfig::default().beta),
        sigma: arg_value(args, "--sigma").unwrap_or(LearnConfig::default().sigma),
        edge_budget_ratio: arg_value(args, "--ratio")
            .unwrap_or(LearnConfig::default().edge_budget_ratio),
        k_pool: arg_value(args, "--k-pool")
            .map(|v| v as usize)
            .unwrap_or(LearnConfig::default().k_pool),
        embed_dim: arg_value(args, "--embed-dim")
            .map(|v| v as usize)
            .unwrap_or(LearnConfig::default().embed_dim),
        ..LearnConfig::default()
    };
    let params = cfg.objective_params().unwrap();
    let m = to_matrix(train).unwrap();
    let feat = FeatureRows::from_user_rows(&m);
    let mut g = knn_graph(&feat, cfg.k_base, cfg.metric).unwrap();
    let mut obj = objective(&g, feat.signals(), &params).unwrap();
    let max_edges = (cfg.edge_budget_ratio * g.edge_count() as f64).floor() as usize;
    println!(
        "base: edges={} objective={obj:.4} budget={max_edges} beta={} sigma={} r={}",
        g.edge_count(),
        cfg.beta,
        cfg.sigma,
        cfg.embed_dim
    );
    let same = g
        .edges()
        .iter()
        .filter(|e| clusters[e.i] == clusters[e.j])
        .count();
    println!(
        "base same-cluster edges: {same}/{} ({:.1}%)",
        g.edge_count(),
        100.0 * same as f64 / g.edge_count() as f64
    );
    let row = evaluate_graph(&g, &m, test, "base-kernel").unwrap();
    println!("base kernel-weight mae={:.4}", row.mae);

    let sigma2 = bandwidth(&feat, &cfg);
    println!("kernel bandwidth sigma_k^2 = {sigma2:.5}");

    let mut batch = cfg.batch_size;
    for iter in 0..cfg.max_iters {
        if batch == 0 || g.edge_count() >= max_edges {
            break;
        }
        let emb = spectral_embedding(&g, &params, cfg.embed_dim.min(g.node_count())).unwrap();
        let scored = score_candidates(&feat, &emb, &g, &cfg).unwrap();
        let positive: Vec<_> = scored.iter().take_while(|c| c.gain > 0.0).collect();
        println!(
            "iter {iter}: candidates={} positive={} top gains: {:?}",
            scored.len(),
            positive.len(),
            positive
                .iter()
                .take(3)
                .map(|c| (c.i, c.j, c.gain, c.embed_dist2, c.data_dist2))
                .collect::<Vec<_>>()
        );
        if positive.is_empty() {
            break;
        }
        let mut accepted = false;
        while batch > 0 {
            let take = batch.min(positive.len()).min(max_edges - g.edge_count());
            if take == 0 {
                break;
            }
            let adds: Vec<(usize, usize, f64)> = positive[..take]
                .iter()
                .map(|c| {
                    let d = feat.metric_distance(c.i, c.j, cfg.metric);
                    (c.i, c.j, (-(d * d) / sigma2).exp().max(1e-12))
                })
                .collect();
            let trial = g.with_added_edges(&adds).unwrap();
            let trial_obj = objective(&trial, feat.signals(), &params).unwrap();
            let same = adds
                .iter()
                .filter(|(i, j, _)| clusters[*i] == clusters[*j])
                .count();
            let overlap = |i: usize, j: usize| -> usize {
                let (a, _) = m.user_row(i);
                let (b, _) = m.user_row(j);
                let bset: std::collections::BTreeSet<u32> = b.iter().copied().collect();
                a.iter().filter(|x| bset.contains(x)).count()
            };
            let mean_overlap: f64 = adds
                .iter()
                .map(|(i, j, _)| overlap(*i, *j) as f64)
                .sum::<f64>()
                / adds.len() as f64;
            let mean_min_act: f64 = adds
                .iter()
                .map(|(i, j, _)| m.user_row(*i).0.len().min(m.user_row(*j).0.len()) as f64)
                .sum::<f64>()
                / adds.len() as f64;
            let mean_max_act: f64 = adds
                .iter()
                .map(|(i, j, _)| m.user_row(*i).0.len().max(m.user_row(*j).0.len()) as f64)
                .sum::<f64>()
                / adds.len() as f64;
            println!(
                "  try batch={take}: obj {obj:.4} -> {trial_obj:.4} ({}) same-cluster {}/{} overlap {:.1} act {:.0}/{:.0}",
                if trial_obj > obj { "accept" } else { "reject" },
                same,
                adds.len(),
                mean_overlap,
                mean_min_act,
                mean_max_act
            );
            if trial_obj > obj {
                g = trial;
                obj = trial_obj;
                accepted = true;
                break;
            }
            batch /= 2;
        }
        if !accepted {
            break;
        }
    }
    let row = evaluate_graph(&g, &m, test, "refined").unwrap();
    println!("refined: edges={} mae={:.4}", g.edge_count(), row.mae);
}

/// Mean squared distance to the k_base-th neighbor (brute force).
fn bandwidth(feat: &FeatureRows, cfg: &LearnConfig) -> f64 {
    let n = feat.n_nodes();
    let mut total = 0.0;
    for i in 0..n {
        let mut dists: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| feat.metric_distance(i, j, cfg.metric))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = dists[cfg.k_base - 1];
        total += d * d;
    }
    (total / n as f64).max(1e-30)
}
