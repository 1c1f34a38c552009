//! Error metrics, the kNN k-sweep baseline, the learned-graph experiment,
//! and report emission.
//!
//! Baseline kNN graphs are evaluated with cosine-similarity edge weights;
//! learned graphs keep their kernel weights. Both report the same fields:
//! MAE, RMSE, edge count ("graph complexity"), per-source fallback counts,
//! and wall time. Reports round-trip through a comma-separated form.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::ingest::{to_matrix, InteractionMatrix, RatingsDataset};
use crate::learn::{knn_graph, FeatureRows, LearnConfig, Metric};
use crate::predict::{predict_user_based, PredictionQuery, PredictionSource};

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let sum: f64 = pred.iter().zip(truth).map(|(p, y)| (p - y).abs()).sum();
    Ok(sum / pred.len() as f64)
}

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let sum: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, y)| (p - y) * (p - y))
        .sum();
    Ok((sum / pred.len() as f64).sqrt())
}

fn check_lengths(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// One experiment row.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub label: String,
    pub mae: f64,
    pub rmse: f64,
    /// Number of edges in the evaluated graph.
    pub graph_complexity: usize,
    pub fallback_counts: BTreeMap<PredictionSource, usize>,
    pub wall_time_secs: f64,
}

/// A sequence of experiment rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

/// Output form of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    PlainTable,
    Csv,
}

const CSV_HEADER: &str = "label,mae,rmse,graph_complexity,fallbacks,wall_time_secs";

/// Evaluate every test pair user-based against a fixed graph.
pub fn evaluate_graph(
    g: &WeightedGraph,
    train_matrix: &InteractionMatrix,
    test: &RatingsDataset,
    label: &str,
) -> Result<EvalRow> {
    if test.is_empty() {
        return Err(Error::EmptyInput);
    }
    let start = Instant::now();
    let queries: Vec<(PredictionQuery, f64)> = test
        .records
        .iter()
        .map(|r| {
            let user = test.meta.user_dense(r.user_id).ok_or(Error::IndexMissing {
                kind: "user",
                id: r.user_id,
            })?;
            let item = test.meta.item_dense(r.item_id).ok_or(Error::IndexMissing {
                kind: "item",
                id: r.item_id,
            })?;
            Ok((PredictionQuery { user, item }, r.rating))
        })
        .collect::<Result<_>>()?;

    let predictions: Vec<_> = queries
        .par_iter()
        .map(|(q, _)| predict_user_based(g, train_matrix, q))
        .collect::<Result<_>>()?;

    let pred_values: Vec<f64> = predictions.iter().map(|p| p.value).collect();
    let truth: Vec<f64> = queries.iter().map(|(_, y)| *y).collect();
    let mae = mae(&pred_values, &truth)?;
    let rmse = rmse(&pred_values, &truth)?;
    debug_assert!(rmse >= mae - 1e-12);

    let mut fallback_counts = BTreeMap::new();
    for p in &predictions {
        *fallback_counts.entry(p.source).or_insert(0usize) += 1;
    }

    Ok(EvalRow {
        label: label.to_string(),
        mae,
        rmse,
        graph_complexity: g.edge_count(),
        fallback_counts,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// kNN baseline sweep: one row per k.
///
/// The graph for each k selects neighbors under `metric` and carries
/// cosine-similarity edge weights, matching the classic neighborhood
/// recommender.
pub fn run_knn_sweep(
    train: &RatingsDataset,
    test: &RatingsDataset,
    k_values: &[usize],
    metric: Metric,
) -> Result<EvalReport> {
    check_split_pair(train, test)?;
    let train_matrix = to_matrix(train)?;
    let feat = FeatureRows::from_user_rows(&train_matrix);

    let mut report = EvalReport::default();
    for &k in k_values {
        let g = knn_graph(&feat, k, metric)?;
        let g = cosine_weighted(&g, &feat)?;
        let label = format!("{k}NN");
        report
            .rows
            .push(evaluate_graph(&g, &train_matrix, test, &label)?);
    }
    Ok(report)
}

/// Learned-graph experiment: a single row labeled `learned`.
pub fn run_learned(
    train: &RatingsDataset,
    test: &RatingsDataset,
    cfg: &LearnConfig,
) -> Result<EvalReport> {
    check_split_pair(train, test)?;
    let train_matrix = to_matrix(train)?;
    let g = crate::learn::learn_user_graph(&train_matrix, cfg)?;
    let row = evaluate_graph(&g, &train_matrix, test, "learned")?;
    Ok(EvalReport { rows: vec![row] })
}

fn check_split_pair(train: &RatingsDataset, test: &RatingsDataset) -> Result<()> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::EmptyInput);
    }
    if train.meta != test.meta {
        return Err(Error::InvalidConfig(
            "train and test splits do not share dataset meta".into(),
        ));
    }
    Ok(())
}

/// Same edge set, cosine-similarity weights (floored to stay positive).
pub fn cosine_weighted(g: &WeightedGraph, feat: &FeatureRows) -> Result<WeightedGraph> {
    let edges: Vec<(usize, usize, f64)> = g
        .edges()
        .iter()
        .map(|e| (e.i, e.j, feat.cosine_similarity_floored(e.i, e.j)))
        .collect();
    WeightedGraph::new(g.node_count(), edges)
}

/// Render a report; the comma-separated form round-trips through
/// [`parse_report`].
pub fn emit_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for row in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    row.label,
                    row.mae,
                    row.rmse,
                    row.graph_complexity,
                    encode_fallbacks(&row.fallback_counts),
                    row.wall_time_secs,
                ));
            }
            out
        }
        ReportFormat::PlainTable => {
            let mut out = String::new();
            out.push_str(&format!(
                "{:<10} {:>8} {:>8} {:>12} {:>32} {:>12}\n",
                "label", "mae", "rmse", "complexity", "fallbacks", "time_s"
            ));
            for row in &report.rows {
                out.push_str(&format!(
                    "{:<10} {:>8.4} {:>8.4} {:>12} {:>32} {:>12.3}\n",
                    row.label,
                    row.mae,
                    row.rmse,
                    row.graph_complexity,
                    encode_fallbacks(&row.fallback_counts),
                    row.wall_time_secs,
                ));
            }
            out
        }
    }
}

/// Parse the comma-separated form written by [`emit_report`].
pub fn parse_report(text: &str) -> Result<EvalReport> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidFormat("empty report".into()))?;
    if header != CSV_HEADER {
        return Err(Error::InvalidFormat(format!(
            "unexpected report header: {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::InvalidFormat(format!(
                "expected 6 fields, got {}: {line:?}",
                fields.len()
            )));
        }
        let parse_f64 = |name: &str, v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidFormat(format!("bad {name}: {v:?}")))
        };
        rows.push(EvalRow {
            label: fields[0].to_string(),
            mae: parse_f64("mae", fields[1])?,
            rmse: parse_f64("rmse", fields[2])?,
            graph_complexity: fields[3]
                .parse()
                .map_err(|_| Error::InvalidFormat(format!("bad complexity: {:?}", fields[3])))?,
            fallback_counts: decode_fallbacks(fields[4])?,
            wall_time_secs: parse_f64("wall_time", fields[5])?,
        });
    }
    Ok(EvalReport { rows })
}

fn encode_fallbacks(counts: &BTreeMap<PredictionSource, usize>) -> String {
    counts
        .iter()
        .map(|(s, c)| format!("{}:{}", s.as_str(), c))
        .collect::<Vec<_>>()
        .join("|")
}

fn decode_fallbacks(text: &str) -> Result<BTreeMap<PredictionSource, usize>> {
    let mut counts = BTreeMap::new();
    if text.is_empty() {
        return Ok(counts);
    }
    for part in text.split('|') {
        let (name, count) = part
            .split_once(':')
            .ok_or_else(|| Error::InvalidFormat(format!("bad fallback entry: {part:?}")))?;
        let source = PredictionSource::parse(name)?;
        let count: usize = count
            .parse()
            .map_err(|_| Error::InvalidFormat(format!("bad fallback count: {count:?}")))?;
        counts.insert(source, count);
    }
    Ok(counts)
}
