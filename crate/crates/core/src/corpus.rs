//! Review ingestion, the utility matrix and ordered preference lists.
//!
//! Two input dialects are supported. JSON-lines files (Amazon style) keep
//! every record and substitute a placeholder stopword for missing review
//! text. CSV files (Modcloth style) drop rows whose review text is empty.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

/// Default placeholder for empty review text in JSON-lines input.
pub const DEFAULT_PLACEHOLDER: &str = "the";

/// One (user, item, rating, review) interaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub user_id: String,
    pub item_id: String,
    pub rating: u8,
    pub review_text: String,
    /// Position among retained records, in file order.
    pub seq: u64,
}

/// Names of the source attributes holding each record field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMap {
    pub user: String,
    pub item: String,
    pub rating: String,
    pub review: String,
}

impl FieldMap {
    pub fn amazon() -> Self {
        FieldMap {
            user: "reviewerID".into(),
            item: "asin".into(),
            rating: "overall".into(),
            review: "reviewText".into(),
        }
    }

    pub fn modcloth() -> Self {
        FieldMap {
            user: "user_id".into(),
            item: "item_id".into(),
            rating: "quality".into(),
            review: "review_text".into(),
        }
    }
}

/// Records retained by an ingest call plus the number rejected for an
/// out-of-range rating.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub records: Vec<ReviewRecord>,
    pub rejected: usize,
}

fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|e| Error::Encoding {
        path: path.to_path_buf(),
        offset: e.utf8_error().valid_up_to(),
    })
}

fn is_nan_text(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("nan")
}

/// Parses a rating written as an integer or an integral float (`5`, `5.0`).
fn parse_rating(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<i64>() {
        return Some(v);
    }
    let v = raw.parse::<f64>().ok()?;
    (v.is_finite() && v.fract() == 0.0).then_some(v as i64)
}

fn valid_rating(v: i64) -> Option<u8> {
    (1..=5).contains(&v).then_some(v as u8)
}

fn json_scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Reads a JSON-lines review file. Blank lines are skipped.
pub fn ingest_jsonl(path: &Path, fields: &FieldMap, placeholder: &str) -> Result<Ingested> {
    let text = read_utf8(path)?;
    parse_jsonl(&text, fields, placeholder).map_err(|e| match e {
        Error::Malformed { line, message, .. } => Error::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

/// In-memory variant of [`ingest_jsonl`]; errors carry an empty path.
pub fn parse_jsonl(text: &str, fields: &FieldMap, placeholder: &str) -> Result<Ingested> {
    let mut out = Ingested::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::Malformed {
            path: Default::default(),
            line: line_no,
            message,
        };
        let obj: Value =
            serde_json::from_str(line).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
        let obj = obj
            .as_object()
            .ok_or_else(|| malformed("expected a JSON object".into()))?;
        let field = |name: &str| {
            obj.get(name)
                .and_then(json_scalar)
                .ok_or_else(|| malformed(format!("missing or non-scalar field `{name}`")))
        };
        let user_id = field(&fields.user)?;
        let item_id = field(&fields.item)?;
        let rating = parse_rating(&field(&fields.rating)?)
            .ok_or_else(|| malformed(format!("non-integral `{}`", fields.rating)))?;
        let Some(rating) = valid_rating(rating) else {
            out.rejected += 1;
            continue;
        };
        let review_text = match obj.get(&fields.review) {
            Some(Value::String(s)) if !is_nan_text(s) => s.clone(),
            _ => placeholder.to_string(),
        };
        let seq = out.records.len() as u64;
        out.records.push(ReviewRecord {
            user_id,
            item_id,
            rating,
            review_text,
            seq,
        });
    }
    if out.rejected > 0 {
        log::warn!("{} record(s) rejected for rating outside [1,5]", out.rejected);
    }
    Ok(out)
}

/// Reads a CSV review file with a header row, dropping rows whose review
/// text is empty or `NaN`.
pub fn ingest_csv_dropping_empty(path: &Path, fields: &FieldMap) -> Result<Ingested> {
    let text = read_utf8(path)?;
    parse_csv_dropping_empty(&text, fields).map_err(|e| match e {
        Error::Malformed { line, message, .. } => Error::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

pub fn parse_csv_dropping_empty(text: &str, fields: &FieldMap) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Malformed {
            path: Default::default(),
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (user_col, item_col, rating_col, review_col) = (
        column(&fields.user)?,
        column(&fields.item)?,
        column(&fields.rating)?,
        column(&fields.review)?,
    );

    let mut out = Ingested::default();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Malformed {
            path: Default::default(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let get = |i: usize| row.get(i).unwrap_or("");
        let review = get(review_col);
        if is_nan_text(review) {
            continue;
        }
        let rating = parse_rating(get(rating_col)).ok_or_else(|| Error::Malformed {
            path: Default::default(),
            line,
            message: format!("non-integral `{}`", fields.rating),
        })?;
        let Some(rating) = valid_rating(rating) else {
            out.rejected += 1;
            continue;
        };
        let seq = out.records.len() as u64;
        out.records.push(ReviewRecord {
            user_id: get(user_col).to_string(),
            item_id: get(item_col).to_string(),
            rating,
            review_text: review.to_string(),
            seq,
        });
    }
    if out.rejected > 0 {
        log::warn!("{} row(s) rejected for rating outside [1,5]", out.rejected);
    }
    Ok(out)
}

/// Sparse user × item ratings. Users and items are indexed in order of first
/// appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UtilityMatrix {
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub entries: BTreeMap<(usize, usize), u8>,
}

impl UtilityMatrix {
    pub fn rating(&self, user: usize, item: usize) -> Option<u8> {
        self.entries.get(&(user, item)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Duplicate (user, item) pairs keep the last rating seen.
pub fn build_utility_matrix(records: &[ReviewRecord]) -> UtilityMatrix {
    let mut um = UtilityMatrix::default();
    let mut user_idx: HashMap<&str, usize> = HashMap::new();
    let mut item_idx: HashMap<&str, usize> = HashMap::new();
    for r in records {
        let u = *user_idx.entry(&r.user_id).or_insert_with(|| {
            um.users.push(r.user_id.clone());
            um.users.len() - 1
        });
        let i = *item_idx.entry(&r.item_id).or_insert_with(|| {
            um.items.push(r.item_id.clone());
            um.items.len() - 1
        });
        um.entries.insert((u, i), r.rating);
    }
    um
}

/// A user's items in preference order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceProfile {
    pub user_id: String,
    pub items: Vec<String>,
}

impl PreferenceProfile {
    pub fn new(user_id: impl Into<String>, items: impl IntoIterator<Item = impl Into<String>>) -> Self {
        PreferenceProfile {
            user_id: user_id.into(),
            items: items.into_iter().map(Into::into).collect(),
        }
    }

    /// 1-based position of `item`, if present.
    pub fn position(&self, item: &str) -> Option<usize> {
        self.items.iter().position(|i| i == item).map(|q| q + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMode {
    Full,
    /// Keep at most the first `k` items.
    Flexible(usize),
}

/// Per-user item lists in appearance order, first occurrence wins. Users are
/// returned in order of first appearance.
pub fn preference_profiles(records: &[ReviewRecord], mode: ProfileMode) -> Vec<PreferenceProfile> {
    let mut order: Vec<&str> = Vec::new();
    let mut lists: HashMap<&str, (Vec<String>, HashSet<&str>)> = HashMap::new();
    let mut sorted: Vec<&ReviewRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.seq);
    for r in sorted {
        let entry = lists.entry(&r.user_id).or_insert_with(|| {
            order.push(&r.user_id);
            Default::default()
        });
        if entry.1.insert(&r.item_id) {
            entry.0.push(r.item_id.clone());
        }
    }
    order
        .into_iter()
        .map(|u| {
            let mut items = lists.remove(u).map(|l| l.0).unwrap_or_default();
            if let ProfileMode::Flexible(k) = mode {
                items.truncate(k);
            }
            PreferenceProfile {
                user_id: u.to_string(),
                items,
            }
        })
        .collect()
}

/// Keeps every record belonging to the first `n` distinct users in file
/// order.
pub fn sample_first_users(records: &[ReviewRecord], n: usize) -> Vec<ReviewRecord> {
    let mut kept: HashSet<&str> = HashSet::new();
    records
        .iter()
        .filter(|r| {
            if kept.contains(r.user_id.as_str()) {
                true
            } else if kept.len() < n {
                kept.insert(&r.user_id);
                true
            } else {
                false
            }
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn rec(user: &str, item: &str, rating: u8, seq: u64) -> ReviewRecord {
        ReviewRecord {
            user_id: user.into(),
            item_id: item.into(),
            rating,
            review_text: "x".into(),
            seq,
        }
    }

    #[test]
    fn jsonl_direct_mapping() {
        let text = r#"{"user":"u1","item":"i1","overall":5,"reviewText":"great"}"#;
        let fields = FieldMap {
            user: "user".into(),
            item: "item".into(),
            rating: "overall".into(),
            review: "reviewText".into(),
        };
        let got = parse_jsonl(text, &fields, "the").unwrap();
        assert_eq!(
            got.records,
            vec![ReviewRecord {
                user_id: "u1".into(),
                item_id: "i1".into(),
                rating: 5,
                review_text: "great".into(),
                seq: 0,
            }]
        );
    }

    #[test]
    fn jsonl_missing_review_gets_placeholder() {
        let text = "{\"reviewerID\":\"u1\",\"asin\":\"i1\",\"overall\":4.0}\n\
                    {\"reviewerID\":\"u2\",\"asin\":\"i1\",\"overall\":3,\"reviewText\":null}\n\
                    {\"reviewerID\":\"u3\",\"asin\":\"i1\",\"overall\":3,\"reviewText\":\"  \"}\n";
        let got = parse_jsonl(text, &FieldMap::amazon(), "the").unwrap();
        assert_eq!(got.records.len(), 3);
        assert!(got.records.iter().all(|r| r.review_text == "the"));
        assert_eq!(got.records[0].rating, 4);
    }

    #[test]
    fn jsonl_empty_file() {
        let got = parse_jsonl("", &FieldMap::amazon(), "the").unwrap();
        assert!(got.records.is_empty());
    }

    #[test]
    fn jsonl_malformed_line_reports_line_number() {
        let text = "{\"reviewerID\":\"u1\",\"asin\":\"i1\",\"overall\":4}\n{oops\n";
        match parse_jsonl(text, &FieldMap::amazon(), "the") {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jsonl_out_of_range_rating_is_counted() {
        let text = "{\"reviewerID\":\"u1\",\"asin\":\"i1\",\"overall\":6}\n\
                    {\"reviewerID\":\"u1\",\"asin\":\"i2\",\"overall\":0}\n\
                    {\"reviewerID\":\"u1\",\"asin\":\"i3\",\"overall\":2}\n";
        let got = parse_jsonl(text, &FieldMap::amazon(), "the").unwrap();
        assert_eq!(got.rejected, 2);
        assert_eq!(got.records.len(), 1);
        assert_eq!(got.records[0].seq, 0);
    }

    #[test]
    fn jsonl_rejects_invalid_utf8() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"{\"reviewerID\":\"u\xff\"}\n").unwrap();
        assert!(matches!(
            ingest_jsonl(f.path(), &FieldMap::amazon(), "the"),
            Err(Error::Encoding { .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            ingest_jsonl(Path::new("/nonexistent/x.jsonl"), &FieldMap::amazon(), "the"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn csv_drops_empty_reviews() {
        let text = "user_id,item_id,quality,review_text\n\
                    u1,i1,5,nice fit\n\
                    u2,i1,3,\n\
                    u3,i2,4,\"runs small, though\"\n";
        let got = parse_csv_dropping_empty(text, &FieldMap::modcloth()).unwrap();
        assert_eq!(got.records.len(), 2);
        assert_eq!(got.records[1].user_id, "u3");
        assert_eq!(got.records[1].seq, 1);
        assert_eq!(got.records[1].review_text, "runs small, though");
    }

    #[test]
    fn csv_all_empty_reviews() {
        let text = "user_id,item_id,quality,review_text\nu1,i1,5,\nu2,i1,3,NaN\n";
        let got = parse_csv_dropping_empty(text, &FieldMap::modcloth()).unwrap();
        assert!(got.records.is_empty());
    }

    #[test]
    fn csv_missing_column_is_named() {
        let text = "user_id,item_id,review_text\nu1,i1,ok\n";
        match parse_csv_dropping_empty(text, &FieldMap::modcloth()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "quality"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn utility_matrix_basic() {
        let um = build_utility_matrix(&[rec("u1", "i1", 5, 0), rec("u2", "i1", 3, 1)]);
        assert_eq!(um.users.len(), 2);
        assert_eq!(um.items.len(), 1);
        assert_eq!(um.len(), 2);
    }

    #[test]
    fn utility_matrix_last_write_wins() {
        let um = build_utility_matrix(&[rec("u1", "i1", 5, 0), rec("u1", "i1", 4, 1)]);
        assert_eq!(um.len(), 1);
        assert_eq!(um.rating(0, 0), Some(4));
    }

    #[test]
    fn utility_matrix_empty() {
        assert!(build_utility_matrix(&[]).is_empty());
    }

    #[test]
    fn profiles_follow_appearance_order() {
        let recs = [rec("u1", "i3", 5, 0), rec("u1", "i1", 2, 1)];
        let p = preference_profiles(&recs, ProfileMode::Full);
        assert_eq!(p, vec![PreferenceProfile::new("u1", ["i3", "i1"])]);
    }

    #[test]
    fn profiles_dedup_keeps_first() {
        let recs = [rec("u1", "i1", 5, 0), rec("u1", "i1", 2, 1), rec("u1", "i2", 2, 2)];
        let p = preference_profiles(&recs, ProfileMode::Full);
        assert_eq!(p[0].items, vec!["i1", "i2"]);
    }

    #[test]
    fn profiles_flexible_truncates() {
        let recs = [rec("u1", "i3", 5, 0), rec("u1", "i1", 2, 1), rec("u1", "i5", 2, 2)];
        let p = preference_profiles(&recs, ProfileMode::Flexible(2));
        assert_eq!(p[0].items, vec!["i3", "i1"]);
    }

    #[test]
    fn sampler_keeps_first_users() {
        let recs = [
            rec("a", "i1", 5, 0),
            rec("b", "i1", 5, 1),
            rec("c", "i1", 5, 2),
            rec("a", "i2", 5, 3),
        ];
        let s = sample_first_users(&recs, 2);
        let users: Vec<_> = s.iter().map(|r| r.user_id.as_str()).collect();
        assert_eq!(users, vec!["a", "b", "a"]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn records() -> impl Strategy<Value = Vec<ReviewRecord>> {
            prop::collection::vec((0u8..5, 0u8..6, 1u8..=5), 0..40).prop_map(|rows| {
                rows.into_iter()
                    .enumerate()
                    .map(|(s, (u, i, r))| rec(&format!("u{u}"), &format!("i{i}"), r, s as u64))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn matrix_entry_count(recs in records()) {
                let um = build_utility_matrix(&recs);
                let distinct: HashSet<_> =
                    recs.iter().map(|r| (r.user_id.clone(), r.item_id.clone())).collect();
                prop_assert!(um.len() <= recs.len());
                prop_assert_eq!(um.len(), distinct.len());
            }

            #[test]
            fn profiles_are_duplicate_free(recs in records(), k in 1usize..5) {
                let items: HashSet<_> = recs.iter().map(|r| r.item_id.clone()).collect();
                for mode in [ProfileMode::Full, ProfileMode::Flexible(k)] {
                    for p in preference_profiles(&recs, mode) {
                        let set: HashSet<_> = p.items.iter().collect();
                        prop_assert_eq!(set.len(), p.items.len());
                        prop_assert!(p.items.iter().all(|i| items.contains(i)));
                        if let ProfileMode::Flexible(k) = mode {
                            prop_assert!(!p.items.is_empty() && p.items.len() <= k);
                        }
                    }
                }
            }
        }
    }
}
