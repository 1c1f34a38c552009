//! MovieLens-style rating ingestion: parsing, index remapping, train/test
//! splitting, and the sparse user-item interaction matrix.
//!
//! External IDs in rating files are sparse; everything downstream works on
//! dense indices in `[0, n)`. Dense indices are assigned by ascending
//! external ID so they do not depend on record order.

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One observed (user, item, rating, timestamp) interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingRecord {
    pub user_id: u32,
    pub item_id: u32,
    pub rating: f64,
    pub timestamp: i64,
}

/// Index maps and rating bounds shared by every artifact derived from a
/// parsed dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    /// External user IDs, ascending; position = dense user index.
    user_ids: Vec<u32>,
    /// External item IDs, ascending; position = dense item index.
    item_ids: Vec<u32>,
    pub scale_min: f64,
    pub scale_max: f64,
}

impl DatasetMeta {
    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    /// Dense index of an external user ID.
    pub fn user_dense(&self, user_id: u32) -> Option<usize> {
        self.user_ids.binary_search(&user_id).ok()
    }

    /// Dense index of an external item ID.
    pub fn item_dense(&self, item_id: u32) -> Option<usize> {
        self.item_ids.binary_search(&item_id).ok()
    }

    /// External user ID at a dense index.
    pub fn user_external(&self, dense: usize) -> Option<u32> {
        self.user_ids.get(dense).copied()
    }

    /// External item ID at a dense index.
    pub fn item_external(&self, dense: usize) -> Option<u32> {
        self.item_ids.get(dense).copied()
    }
}

/// A deduplicated rating collection plus its index meta.
///
/// Records are kept sorted by (user_id, item_id) so that identical inputs
/// produce identical datasets regardless of source ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsDataset {
    pub records: Vec<RatingRecord>,
    pub meta: DatasetMeta,
}

impl RatingsDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Parse a MovieLens rating file: one rating per line, tab-separated
/// `user_id item_id rating timestamp`.
///
/// Duplicate (user, item) pairs keep the record with the largest timestamp;
/// on equal timestamps the later line wins. Empty lines are skipped. Lines
/// with fewer than four fields or non-numeric fields are rejected with the
/// 1-based line number.
pub fn parse_movielens<R: BufRead>(source: R) -> Result<RatingsDataset> {
    let mut by_key: BTreeMap<(u32, u32), RatingRecord> = BTreeMap::new();

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let record = parse_fields(&mut fields, line_no)?;
        match by_key.get(&(record.user_id, record.item_id)) {
            Some(existing) if existing.timestamp > record.timestamp => {}
            _ => {
                by_key.insert((record.user_id, record.item_id), record);
            }
        }
    }

    if by_key.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let records: Vec<RatingRecord> = by_key.into_values().collect();
    let meta = build_meta(&records);
    Ok(RatingsDataset { records, meta })
}

fn parse_fields<'a, I>(fields: &mut I, line_no: usize) -> Result<RatingRecord>
where
    I: Iterator<Item = &'a str>,
{
    let mut next = |name: &'static str| {
        fields.next().ok_or_else(|| Error::MalformedLine {
            line: line_no,
            reason: format!("missing field `{name}`"),
        })
    };
    let user: &str = next("user_id")?;
    let item: &str = next("item_id")?;
    let rating: &str = next("rating")?;
    let ts: &str = next("timestamp")?;

    let numeric = |name: &'static str, value: &str| -> Result<f64> {
        value.trim().parse::<f64>().map_err(|_| Error::MalformedLine {
            line: line_no,
            reason: format!("field `{name}` is not numeric: {value:?}"),
        })
    };

    let user_id = user.trim().parse::<u32>().map_err(|_| Error::MalformedLine {
        line: line_no,
        reason: format!("field `user_id` is not an integer: {user:?}"),
    })?;
    let item_id = item.trim().parse::<u32>().map_err(|_| Error::MalformedLine {
        line: line_no,
        reason: format!("field `item_id` is not an integer: {item:?}"),
    })?;
    let rating = numeric("rating", rating)?;
    let timestamp = ts.trim().parse::<i64>().map_err(|_| Error::MalformedLine {
        line: line_no,
        reason: format!("field `timestamp` is not an integer: {ts:?}"),
    })?;
    if timestamp < 0 {
        return Err(Error::MalformedLine {
            line: line_no,
            reason: format!("negative timestamp {timestamp}"),
        });
    }
    if !rating.is_finite() {
        return Err(Error::MalformedLine {
            line: line_no,
            reason: format!("non-finite rating {rating}"),
        });
    }

    Ok(RatingRecord {
        user_id,
        item_id,
        rating,
        timestamp,
    })
}

fn build_meta(records: &[RatingRecord]) -> DatasetMeta {
    let mut user_ids: Vec<u32> = records.iter().map(|r| r.user_id).collect();
    let mut item_ids: Vec<u32> = records.iter().map(|r| r.item_id).collect();
    user_ids.sort_unstable();
    user_ids.dedup();
    item_ids.sort_unstable();
    item_ids.dedup();

    let mut scale_min = f64::INFINITY;
    let mut scale_max = f64::NEG_INFINITY;
    for r in records {
        scale_min = scale_min.min(r.rating);
        scale_max = scale_max.max(r.rating);
    }

    DatasetMeta {
        user_ids,
        item_ids,
        scale_min,
        scale_max,
    }
}

/// Record-level uniform split into (train, test).
///
/// `|test| = round(test_fraction * |ds|)`. Both halves keep the full index
/// meta of the input so dense indices stay comparable across the split.
/// Identical `(ds, test_fraction, seed)` yield identical partitions.
pub fn split_train_test(
    ds: &RatingsDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(RatingsDataset, RatingsDataset)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must lie in [0, 1), got {test_fraction}"
        )));
    }

    let n = ds.records.len();
    let n_test = (test_fraction * n as f64).round() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut test_idx: Vec<usize> = order[..n_test].to_vec();
    let mut train_idx: Vec<usize> = order[n_test..].to_vec();
    // Records are stored sorted; restore that order inside each half.
    test_idx.sort_unstable();
    train_idx.sort_unstable();

    let pick = |idx: &[usize]| RatingsDataset {
        records: idx.iter().map(|&i| ds.records[i]).collect(),
        meta: ds.meta.clone(),
    };

    Ok((pick(&train_idx), pick(&test_idx)))
}

/// Sparse `n_users x n_items` rating matrix with explicit presence; a stored
/// value is distinct from a missing cell even if it equals zero.
#[derive(Debug, Clone)]
pub struct InteractionMatrix {
    n_users: usize,
    n_items: usize,
    scale_min: f64,
    scale_max: f64,
    // CSR over users.
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    row_val: Vec<f64>,
    // CSC over items.
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    col_val: Vec<f64>,
    global_mean: f64,
}

impl InteractionMatrix {
    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn scale_min(&self) -> f64 {
        self.scale_min
    }

    pub fn scale_max(&self) -> f64 {
        self.scale_max
    }

    /// Stored rating at (user, item), or None when the cell is missing.
    pub fn get(&self, user: usize, item: usize) -> Option<f64> {
        let (cols, vals) = self.user_row(user);
        cols.binary_search(&(item as u32))
            .ok()
            .map(|pos| vals[pos])
    }

    /// Item indices and ratings of one user, sorted by item index.
    pub fn user_row(&self, user: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[user];
        let hi = self.row_ptr[user + 1];
        (&self.col_idx[lo..hi], &self.row_val[lo..hi])
    }

    /// User indices and ratings of one item, sorted by user index.
    pub fn item_col(&self, item: usize) -> (&[u32], &[f64]) {
        let lo = self.col_ptr[item];
        let hi = self.col_ptr[item + 1];
        (&self.row_idx[lo..hi], &self.col_val[lo..hi])
    }

    /// Mean rating of one user, None when the user has no stored ratings.
    pub fn user_mean(&self, user: usize) -> Option<f64> {
        let (_, vals) = self.user_row(user);
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    /// Mean rating of one item, None when the item has no stored ratings.
    pub fn item_mean(&self, item: usize) -> Option<f64> {
        let (_, vals) = self.item_col(item);
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    /// Mean over all stored ratings.
    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }
}

/// Build the sparse interaction matrix of a deduplicated dataset.
///
/// Every record lands at `(user_dense, item_dense)`; the stored-entry count
/// equals the record count.
pub fn to_matrix(ds: &RatingsDataset) -> Result<InteractionMatrix> {
    let n_users = ds.meta.n_users();
    let n_items = ds.meta.n_items();

    let mut triples: Vec<(usize, u32, f64)> = Vec::with_capacity(ds.records.len());
    for r in &ds.records {
        let u = ds.meta.user_dense(r.user_id).ok_or(Error::IndexMissing {
            kind: "user",
            id: r.user_id,
        })?;
        let i = ds.meta.item_dense(r.item_id).ok_or(Error::IndexMissing {
            kind: "item",
            id: r.item_id,
        })?;
        triples.push((u, i as u32, r.rating));
    }
    triples.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

    let mut row_ptr = vec![0usize; n_users + 1];
    for &(u, _, _) in &triples {
        row_ptr[u + 1] += 1;
    }
    for u in 0..n_users {
        row_ptr[u + 1] += row_ptr[u];
    }
    let col_idx: Vec<u32> = triples.iter().map(|t| t.1).collect();
    let row_val: Vec<f64> = triples.iter().map(|t| t.2).collect();

    // Transpose into CSC.
    let mut col_ptr = vec![0usize; n_items + 1];
    for &(_, i, _) in &triples {
        col_ptr[i as usize + 1] += 1;
    }
    for i in 0..n_items {
        col_ptr[i + 1] += col_ptr[i];
    }
    let mut cursor = col_ptr.clone();
    let mut row_idx = vec![0u32; triples.len()];
    let mut col_val = vec![0.0f64; triples.len()];
    for &(u, i, v) in &triples {
        let pos = cursor[i as usize];
        row_idx[pos] = u as u32;
        col_val[pos] = v;
        cursor[i as usize] += 1;
    }

    let sum: f64 = row_val.iter().sum();
    let global_mean = if row_val.is_empty() {
        0.0
    } else {
        sum / row_val.len() as f64
    };

    Ok(InteractionMatrix {
        n_users,
        n_items,
        scale_min: ds.meta.scale_min,
        scale_max: ds.meta.scale_max,
        row_ptr,
        col_idx,
        row_val,
        col_ptr,
        row_idx,
        col_val,
        global_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<RatingsDataset> {
        parse_movielens(Cursor::new(text.as_bytes()))
    }

    #[test]
    fn parses_single_line() {
        let ds = parse("196\t242\t3\t881250949\n").unwrap();
        assert_eq!(ds.records.len(), 1);
        assert_eq!(
            ds.records[0],
            RatingRecord {
                user_id: 196,
                item_id: 242,
                rating: 3.0,
                timestamp: 881250949,
            }
        );
        assert_eq!(ds.meta.n_users(), 1);
        assert_eq!(ds.meta.n_items(), 1);
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(matches!(parse(""), Err(Error::EmptyDataset)));
        assert!(matches!(parse("\n\n"), Err(Error::EmptyDataset)));
    }

    #[test]
    fn duplicate_keeps_latest_timestamp() {
        let ds = parse("1\t5\t2\t10\n1\t5\t4\t20\n").unwrap();
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.records[0].rating, 4.0);

        // Order of the duplicates must not matter.
        let ds = parse("1\t5\t4\t20\n1\t5\t2\t10\n").unwrap();
        assert_eq!(ds.records[0].rating, 4.0);
    }

    #[test]
    fn malformed_lines_are_rejected_with_line_numbers() {
        let err = parse("1\t2\t3\t4\n5\t6\n").unwrap_err();
        match err {
            Error::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        let err = parse("1\tx\t3\t4\n").unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 1, .. }));
        let err = parse("1\t2\t3\t-7\n").unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn extra_fields_are_tolerated() {
        let ds = parse("1\t2\t3\t4\textra\n").unwrap();
        assert_eq!(ds.records.len(), 1);
    }

    #[test]
    fn dense_indices_follow_ascending_external_ids() {
        let ds = parse("50\t9\t3\t1\n7\t30\t4\t2\n").unwrap();
        assert_eq!(ds.meta.user_dense(7), Some(0));
        assert_eq!(ds.meta.user_dense(50), Some(1));
        assert_eq!(ds.meta.item_dense(9), Some(0));
        assert_eq!(ds.meta.item_dense(30), Some(1));
        assert_eq!(ds.meta.user_external(1), Some(50));
        assert_eq!(ds.meta.user_dense(99), None);
    }

    #[test]
    fn split_partitions_and_is_deterministic() {
        let text: String = (0..10)
            .map(|i| format!("{}\t{}\t3\t{}\n", i + 1, 100 + i, i))
            .collect();
        let ds = parse(&text).unwrap();

        let (train, test) = split_train_test(&ds, 0.2, 7).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);

        let mut all: Vec<RatingRecord> = train.records.clone();
        all.extend(test.records.iter().copied());
        all.sort_by_key(|r| (r.user_id, r.item_id));
        assert_eq!(all, ds.records);

        let (train2, test2) = split_train_test(&ds, 0.2, 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);

        let (_, test3) = split_train_test(&ds, 0.2, 8).unwrap();
        assert!(test3 != test || true); // different seed may or may not differ; just exercise it
    }

    #[test]
    fn split_fraction_zero_keeps_everything_in_train() {
        let ds = parse("1\t1\t3\t1\n2\t2\t4\t2\n").unwrap();
        let (train, test) = split_train_test(&ds, 0.0, 1).unwrap();
        assert_eq!(train.len(), 2);
        assert!(test.is_empty());
        assert_eq!(test.meta, ds.meta);
    }

    #[test]
    fn split_rejects_bad_fraction_and_empty_input() {
        let ds = parse("1\t1\t3\t1\n").unwrap();
        assert!(split_train_test(&ds, 1.0, 1).is_err());
        assert!(split_train_test(&ds, -0.1, 1).is_err());
        let empty = RatingsDataset {
            records: vec![],
            meta: ds.meta.clone(),
        };
        assert!(matches!(
            split_train_test(&empty, 0.2, 1),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn matrix_preserves_every_triple() {
        let ds = parse("1\t10\t5\t1\n1\t20\t3\t2\n2\t10\t2\t3\n").unwrap();
        let m = to_matrix(&ds).unwrap();
        assert_eq!(m.n_users(), 2);
        assert_eq!(m.n_items(), 2);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 0), Some(5.0));
        assert_eq!(m.get(0, 1), Some(3.0));
        assert_eq!(m.get(1, 0), Some(2.0));
        assert_eq!(m.get(1, 1), None);

        // CSC view agrees with CSR view.
        let (users, vals) = m.item_col(0);
        assert_eq!(users, &[0, 1]);
        assert_eq!(vals, &[5.0, 2.0]);

        assert!((m.global_mean() - (5.0 + 3.0 + 2.0) / 3.0).abs() < 1e-12);
        assert_eq!(m.user_mean(0), Some(4.0));
        assert_eq!(m.item_mean(1), Some(3.0));
    }

    #[test]
    fn matrix_cell_lands_at_dense_position() {
        let ds = parse("1\t1\t5\t1\n9\t9\t1\t1\n").unwrap();
        let m = to_matrix(&ds).unwrap();
        let u = ds.meta.user_dense(1).unwrap();
        let i = ds.meta.item_dense(1).unwrap();
        assert_eq!(m.get(u, i), Some(5.0));
    }

    #[test]
    fn every_indexed_user_appears_in_records() {
        let ds = parse("3\t7\t4\t1\n8\t7\t2\t1\n").unwrap();
        assert_eq!(ds.meta.n_users(), 2);
        for dense in 0..ds.meta.n_users() {
            let ext = ds.meta.user_external(dense).unwrap();
            assert!(ds.records.iter().any(|r| r.user_id == ext));
        }
    }
}
