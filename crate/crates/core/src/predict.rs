//! Rating prediction over a user (or per-query item) graph, with an
//! explicit fallback chain so every query yields a value.
//!
//! Graph neighbors predict by the similarity-weighted rating average. When
//! the active user has no graph-adjacent rater of the target item, the
//! user's training mean steps in, then the global training mean. The
//! source of each prediction is carried along for fallback accounting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::ingest::InteractionMatrix;
use crate::learn::{knn_graph_with_bandwidth, refine_graph, FeatureRows, LearnConfig};

/// Where a prediction's value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionSource {
    GraphNeighbors,
    UserMean,
    ItemMean,
    GlobalMean,
}

impl PredictionSource {
    pub const ALL: [PredictionSource; 4] = [
        PredictionSource::GraphNeighbors,
        PredictionSource::UserMean,
        PredictionSource::ItemMean,
        PredictionSource::GlobalMean,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PredictionSource::GraphNeighbors => "graph-neighbors",
            PredictionSource::UserMean => "user-mean",
            PredictionSource::ItemMean => "item-mean",
            PredictionSource::GlobalMean => "global-mean",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|s| s.as_str() == text)
            .ok_or_else(|| Error::InvalidFormat(format!("unknown prediction source {text:?}")))
    }
}

impl std::fmt::Display for PredictionSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A rating query for (active user, target item), dense indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionQuery {
    pub user: usize,
    pub item: usize,
}

/// A predicted rating, clamped to the dataset's rating scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub source: PredictionSource,
    pub contributing_neighbors: usize,
}

/// Similarity-weighted rating average: `Σ s_i r_i / Σ s_i`.
///
/// Invariant under uniform scaling of the weights; the result lies in the
/// convex hull of the ratings.
pub fn weighted_sum(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    debug_assert!(pairs.iter().all(|(s, _)| *s > 0.0));
    let mut num = 0.0;
    let mut den = 0.0;
    for &(s, r) in pairs {
        num += s * r;
        den += s;
    }
    Ok(num / den)
}

/// Predict a rating from the active user's graph neighbors that rated the
/// target item; fall back to the user's training mean, then the global
/// training mean.
pub fn predict_user_based(
    g: &WeightedGraph,
    m: &InteractionMatrix,
    q: &PredictionQuery,
) -> Result<Prediction> {
    if g.node_count() != m.n_users() {
        return Err(Error::DimensionMismatch {
            expected: m.n_users(),
            got: g.node_count(),
            context: "user graph nodes vs matrix users",
        });
    }
    if q.user >= m.n_users() {
        return Err(Error::IndexOutOfRange {
            index: q.user,
            size: m.n_users(),
            context: "query user",
        });
    }
    if q.item >= m.n_items() {
        return Err(Error::IndexOutOfRange {
            index: q.item,
            size: m.n_items(),
            context: "query item",
        });
    }

    let raters: Vec<(f64, f64)> = g
        .neighbors(q.user)
        .filter_map(|(v, s)| m.get(v, q.item).map(|r| (s, r)))
        .collect();
    if !raters.is_empty() {
        let value = weighted_sum(&raters)?;
        return Ok(Prediction {
            value: clamp_to_scale(value, m),
            source: PredictionSource::GraphNeighbors,
            contributing_neighbors: raters.len(),
        });
    }
    Ok(mean_fallback(m, m.user_mean(q.user)))
}

/// Predict a rating from a per-query item graph over the target item and
/// the items the active user has rated.
///
/// When the user rated fewer items than the base neighborhood size the
/// graph cannot be built; the user-mean path answers instead (global mean
/// when the user rated nothing).
pub fn predict_item_based(
    m: &InteractionMatrix,
    q: &PredictionQuery,
    cfg: &LearnConfig,
) -> Result<Prediction> {
    if q.user >= m.n_users() {
        return Err(Error::IndexOutOfRange {
            index: q.user,
            size: m.n_users(),
            context: "query user",
        });
    }
    if q.item >= m.n_items() {
        return Err(Error::IndexOutOfRange {
            index: q.item,
            size: m.n_items(),
            context: "query item",
        });
    }
    cfg.validate()?;

    // Node set: the target item plus everything the user rated.
    let (rated, _) = m.user_row(q.user);
    let mut items: Vec<usize> = rated.iter().map(|&i| i as usize).collect();
    match items.binary_search(&q.item) {
        Ok(_) => {}
        Err(pos) => items.insert(pos, q.item),
    }

    if rated.is_empty() {
        return Ok(mean_fallback(m, None));
    }
    if cfg.k_base >= items.len() {
        // Too few rated items to build the base graph.
        return Ok(mean_fallback(m, m.user_mean(q.user)));
    }

    let feat = FeatureRows::from_item_columns(m, &items);
    let base = knn_graph_with_bandwidth(&feat, cfg.k_base, cfg.metric, cfg.kernel_bandwidth)?;
    let g = refine_graph(&base, &feat, cfg)?;

    let target = items.binary_search(&q.item).expect("target is in the node set");
    let pairs: Vec<(f64, f64)> = g
        .neighbors(target)
        .filter_map(|(t, s)| m.get(q.user, items[t]).map(|r| (s, r)))
        .collect();
    if !pairs.is_empty() {
        let value = weighted_sum(&pairs)?;
        return Ok(Prediction {
            value: clamp_to_scale(value, m),
            source: PredictionSource::GraphNeighbors,
            contributing_neighbors: pairs.len(),
        });
    }
    match m.item_mean(q.item) {
        Some(mean) => Ok(Prediction {
            value: clamp_to_scale(mean, m),
            source: PredictionSource::ItemMean,
            contributing_neighbors: 0,
        }),
        None => Ok(mean_fallback(m, None)),
    }
}

fn mean_fallback(m: &InteractionMatrix, user_mean: Option<f64>) -> Prediction {
    match user_mean {
        Some(mean) => Prediction {
            value: clamp_to_scale(mean, m),
            source: PredictionSource::UserMean,
            contributing_neighbors: 0,
        },
        None => Prediction {
            value: clamp_to_scale(m.global_mean(), m),
            source: PredictionSource::GlobalMean,
            contributing_neighbors: 0,
        },
    }
}

fn clamp_to_scale(value: f64, m: &InteractionMatrix) -> f64 {
    value.clamp(m.scale_min(), m.scale_max())
}
