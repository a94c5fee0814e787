//! Pipeline stages shared by the subcommands.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{EmbeddingSource, Format, PipelineConfig};
use super::report::{fmt6, read_label_table, to_csv, to_json, write_text};
use crate::baseline::{cluster_users, predict_ratings};
use crate::clustering::{assign_users, select_k, spectral_cluster, ClusterAssignment, SilhouetteReport};
use crate::consensus::{recommend, Catalog, Group, Method, ScoringParams};
use crate::corpus::{
    build_utility_matrix, ingest_csv_dropping_empty, ingest_jsonl, preference_profiles, sample_first_users,
    PreferenceProfile, ProfileMode, ReviewRecord,
};
use crate::embedding::{cosine_similarity_matrix, embed_tfidf, load_vectors, EmbeddingMatrix, SimilarityMatrix};
use crate::validation::{contingency, MetricsReport, RecallConvention};
use crate::Error;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Numerical = 3,
}

/// A failure tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub kind: ExitKind,
    pub message: String,
}

impl StageError {
    pub fn usage(message: impl Into<String>) -> Self {
        StageError {
            stage: "config".into(),
            kind: ExitKind::Usage,
            message: message.into(),
        }
    }

    pub fn data(stage: &str, message: impl Into<String>) -> Self {
        StageError {
            stage: stage.into(),
            kind: ExitKind::Data,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for StageError {}

pub type StageResult<T> = std::result::Result<T, StageError>;

fn at<T>(stage: &str, r: crate::Result<T>) -> StageResult<T> {
    r.map_err(|e| {
        let kind = match e {
            Error::Numerical(_) | Error::NotSymmetric(..) => ExitKind::Numerical,
            _ => ExitKind::Data,
        };
        StageError {
            stage: stage.into(),
            kind,
            message: e.to_string(),
        }
    })
}

/// Ingests the dataset and keeps the first `sample_n` users.
pub fn load_records(cfg: &PipelineConfig) -> StageResult<Vec<ReviewRecord>> {
    let path = cfg
        .dataset
        .as_deref()
        .ok_or_else(|| StageError::usage("no dataset given (--dataset)"))?;
    let fields = cfg.field_map();
    let ingested = at(
        "ingest",
        match cfg.format {
            Format::Jsonl => ingest_jsonl(path, &fields, &cfg.placeholder),
            Format::Csv => ingest_csv_dropping_empty(path, &fields),
        },
    )?;
    if ingested.rejected > 0 {
        log::warn!("{} record(s) rejected", ingested.rejected);
    }
    let records = sample_first_users(&ingested.records, cfg.sample_n);
    let users: HashSet<&str> = records.iter().map(|r| r.user_id.as_str()).collect();
    if users.len() < 2 {
        return Err(StageError::data("sample", format!("need at least 2 users, found {}", users.len())));
    }
    Ok(records)
}

/// One embedding row per record, in record order.
pub fn embed(cfg: &PipelineConfig, records: &[ReviewRecord]) -> StageResult<EmbeddingMatrix> {
    match cfg.embedding {
        EmbeddingSource::Tfidf => {
            let texts: Vec<&str> = records.iter().map(|r| r.review_text.as_str()).collect();
            let mut emb = at("embedding", embed_tfidf(&texts))?;
            emb.ids = records.iter().map(|r| r.seq).collect();
            Ok(emb)
        }
        EmbeddingSource::Vectors => {
            let path = cfg
                .vectors
                .as_deref()
                .ok_or_else(|| StageError::usage("embedding = vectors needs --vectors"))?;
            let all = at("embedding", load_vectors(path))?;
            let index: HashMap<u64, usize> = all.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
            let mut rows = Vec::with_capacity(records.len());
            for r in records {
                let i = index.get(&r.seq).ok_or_else(|| {
                    StageError::data(
                        "embedding/id-mismatch",
                        format!("no vector for instance {} in {}", r.seq, path.display()),
                    )
                })?;
                rows.push(all.row(*i).to_vec());
            }
            at(
                "embedding",
                EmbeddingMatrix::from_rows(records.iter().map(|r| r.seq).collect(), rows),
            )
        }
    }
}

pub struct Clustered {
    pub silhouette: SilhouetteReport,
    pub assignment: ClusterAssignment,
}

/// Chooses the cluster count by silhouette, clusters instances and assigns
/// users by majority.
pub fn cluster(cfg: &PipelineConfig, records: &[ReviewRecord], sim: &SimilarityMatrix) -> StageResult<Clustered> {
    let m = sim.n_instances();
    if m < 3 {
        return Err(StageError::data("cluster", format!("need at least 3 instances, found {m}")));
    }
    let max = cfg.k_range.max.min(m - 1);
    if cfg.k_range.min > max {
        return Err(StageError::data(
            "cluster",
            format!("k_range {} leaves no candidate for {m} instances", cfg.k_range),
        ));
    }
    if max < cfg.k_range.max {
        log::warn!("k_range capped at {max} for {m} instances");
    }
    let silhouette = at("cluster", select_k(sim, cfg.k_range.min..=max, cfg.seed))?;
    let labels = at("cluster", spectral_cluster(sim, silhouette.chosen_k, cfg.seed))?;
    let mut assignment = at("cluster", assign_users(records, &labels))?;
    assignment.n_clusters = silhouette.chosen_k;
    Ok(Clustered { silhouette, assignment })
}

/// Items in order of first appearance.
fn item_order(records: &[ReviewRecord]) -> Vec<String> {
    let mut seen = HashSet::new();
    records
        .iter()
        .filter(|r| seen.insert(r.item_id.as_str()))
        .map(|r| r.item_id.clone())
        .collect()
}

/// A detected group with its item universe: members' items first, then the
/// remaining corpus items, each in order of first appearance.
pub struct GroupContext {
    pub group_id: usize,
    pub profiles: Vec<PreferenceProfile>,
    pub items: Vec<String>,
}

pub fn group_contexts(records: &[ReviewRecord], assignment: &ClusterAssignment) -> Vec<GroupContext> {
    let profiles: BTreeMap<String, PreferenceProfile> = preference_profiles(records, ProfileMode::Full)
        .into_iter()
        .map(|p| (p.user_id.clone(), p))
        .collect();
    let corpus_items = item_order(records);
    assignment
        .groups()
        .into_iter()
        .enumerate()
        .filter(|(_, users)| !users.is_empty())
        .map(|(group_id, users)| {
            let members: HashSet<&str> = users.iter().copied().collect();
            let own: Vec<String> = item_order(
                &records
                    .iter()
                    .filter(|r| members.contains(r.user_id.as_str()))
                    .cloned()
                    .collect::<Vec<_>>(),
            );
            let own_set: HashSet<&str> = own.iter().map(String::as_str).collect();
            let rest = corpus_items.iter().filter(|i| !own_set.contains(i.as_str())).cloned();
            let items: Vec<String> = own.iter().cloned().chain(rest).collect();
            GroupContext {
                group_id,
                profiles: users
                    .iter()
                    .filter_map(|u| profiles.get(*u).cloned())
                    .collect(),
                items,
            }
        })
        .collect()
}

impl GroupContext {
    /// The group restricted to the first `m` catalog items (all when `None`),
    /// with lists truncated to `k` when `flexible`.
    pub fn instance(&self, m: Option<usize>, k: usize, flexible: bool) -> crate::Result<(Group, Catalog)> {
        let items = match m {
            Some(m) => &self.items[..m.min(self.items.len())],
            None => &self.items[..],
        };
        let allowed: HashSet<&str> = items.iter().map(String::as_str).collect();
        let members = self
            .profiles
            .iter()
            .map(|p| {
                let mut list: Vec<String> = p.items.iter().filter(|i| allowed.contains(i.as_str())).cloned().collect();
                if flexible {
                    list.truncate(k);
                }
                PreferenceProfile {
                    user_id: p.user_id.clone(),
                    items: list,
                }
            })
            .collect();
        Ok((Group::new(self.group_id, members)?, Catalog::new(items.iter().cloned())?))
    }
}

/// One group's recommendation from one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationReport {
    pub group_id: usize,
    pub method: Method,
    pub k: usize,
    pub items: Vec<String>,
    pub per_user: BTreeMap<String, f64>,
    pub group_score: f64,
}

pub fn recommend_all(cfg: &PipelineConfig, groups: &[GroupContext]) -> StageResult<Vec<RecommendationReport>> {
    let params = at("recommend", cfg.scoring(cfg.budget))?;
    let mut out = Vec::new();
    for g in groups {
        let (group, catalog) = at("recommend", g.instance(None, cfg.budget, cfg.flexible))?;
        for &method in &cfg.methods {
            let (rec, report) = at("recommend", recommend(method, &group, &catalog, &params))?;
            out.push(RecommendationReport {
                group_id: g.group_id,
                method,
                k: cfg.budget,
                items: rec.items,
                per_user: report.per_user,
                group_score: report.group_score,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub k: usize,
    pub m: usize,
    /// Mean normalised group score across groups.
    pub group_score: f64,
}

/// Mean group score for every method × budget × item-count combination
/// that fits the corpus (`k ≤ m ≤` distinct items).
pub fn sweep(cfg: &PipelineConfig, groups: &[GroupContext]) -> StageResult<Vec<SweepRow>> {
    let n_items = groups.first().map_or(0, |g| g.items.len());
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for &k in &cfg.sweep_budgets {
            let params: ScoringParams = at("sweep", cfg.scoring(k))?;
            for &m in &cfg.sweep_items {
                if m < k || m > n_items {
                    continue;
                }
                let mut total = 0.0;
                for g in groups {
                    let (group, catalog) = at("sweep", g.instance(Some(m), k, cfg.flexible))?;
                    total += at("sweep", recommend(method, &group, &catalog, &params))?.1.group_score;
                }
                rows.push(SweepRow {
                    method,
                    k,
                    m,
                    group_score: total / groups.len().max(1) as f64,
                });
            }
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    to_csv(
        &["method", "k", "m", "group_score"],
        rows.iter().map(|r| {
            vec![
                r.method.to_string(),
                r.k.to_string(),
                r.m.to_string(),
                fmt6(r.group_score),
            ]
        }),
    )
}

pub fn clusters_csv(records: &[ReviewRecord], a: &ClusterAssignment) -> String {
    to_csv(
        &["instance_id", "user_id", "cluster"],
        records
            .iter()
            .zip(&a.instance_labels)
            .map(|(r, l)| vec![r.seq.to_string(), r.user_id.clone(), l.to_string()]),
    )
}

pub fn users_csv(a: &ClusterAssignment) -> String {
    to_csv(
        &["user_id", "cluster"],
        a.user_labels.iter().map(|(u, l)| vec![u.clone(), l.to_string()]),
    )
}

/// Predict & Cluster grouping of the sampled users.
pub fn baseline(cfg: &PipelineConfig, records: &[ReviewRecord]) -> StageResult<ClusterAssignment> {
    let um = build_utility_matrix(records);
    let dense = at("baseline", predict_ratings(&um, cfg.neighbors, cfg.min_overlap))?;
    at("baseline", cluster_users(&dense, cfg.baseline_k, cfg.seed))
}

/// Pair-counting metrics of `a`'s user labels against `b`'s.
pub fn compare_partitions(a: &ClusterAssignment, b: &ClusterAssignment) -> crate::Result<MetricsReport> {
    compare_label_maps(&a.user_labels, &b.user_labels, RecallConvention::Standard)
}

pub fn compare_label_maps<L: Eq + std::hash::Hash>(
    a: &BTreeMap<String, L>,
    b: &BTreeMap<String, L>,
    recall: RecallConvention,
) -> crate::Result<MetricsReport> {
    if !a.keys().eq(b.keys()) {
        let only_a = a.keys().find(|k| !b.contains_key(*k));
        let only_b = b.keys().find(|k| !a.contains_key(*k));
        return Err(Error::InvalidInput(format!(
            "partitions cover different ids (first unmatched: {:?} / {:?})",
            only_a, only_b
        )));
    }
    let left: Vec<&L> = a.values().collect();
    let right: Vec<&L> = b.values().collect();
    Ok(MetricsReport::from_counts(&contingency(&left, &right)?, recall))
}

/// Paths written by [`run_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub chosen_k: usize,
    pub files: Vec<PathBuf>,
}

fn write(out: &Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> StageResult<()> {
    let path = out.join(name);
    at("write", write_text(&path, text))?;
    files.push(path);
    Ok(())
}

#[derive(Serialize)]
struct Status<'a> {
    status: &'a str,
    stage: Option<&'a str>,
    error: Option<&'a str>,
}

/// Runs every stage and writes the reports into `cfg.out`. On failure a
/// `status.json` naming the failed stage marks the directory as partial.
pub fn run_pipeline(cfg: &PipelineConfig) -> StageResult<RunSummary> {
    cfg.validate().map_err(StageError::usage)?;
    fs::create_dir_all(&cfg.out)
        .map_err(|e| StageError::data("write", format!("cannot create {}: {e}", cfg.out.display())))?;
    let result = run_stages(cfg);
    let status = match &result {
        Ok(_) => Status {
            status: "ok",
            stage: None,
            error: None,
        },
        Err(e) => Status {
            status: "failed",
            stage: Some(&e.stage),
            error: Some(&e.message),
        },
    };
    let _ = write_text(&cfg.out.join("status.json"), &to_json(&status));
    result
}

fn run_stages(cfg: &PipelineConfig) -> StageResult<RunSummary> {
    let out = cfg.out.as_path();
    let mut files = Vec::new();

    let records = load_records(cfg)?;
    let emb = embed(cfg, &records)?;
    let sim = cosine_similarity_matrix(&emb);
    let clustered = cluster(cfg, &records, &sim)?;
    write(out, "clusters.csv", &clusters_csv(&records, &clustered.assignment), &mut files)?;
    write(out, "users.csv", &users_csv(&clustered.assignment), &mut files)?;
    write(out, "silhouette.json", &to_json(&clustered.silhouette), &mut files)?;

    if let Some(truth) = &cfg.truth {
        let truth = at("validate", read_label_table(truth))?;
        let predicted: BTreeMap<String, usize> = records
            .iter()
            .zip(&clustered.assignment.instance_labels)
            .map(|(r, &l)| (r.seq.to_string(), l))
            .collect();
        let truth: BTreeMap<String, String> = truth
            .into_iter()
            .filter(|(k, _)| predicted.contains_key(k))
            .collect();
        let metrics = at(
            "validate",
            compare_label_maps(
                &predicted.into_iter().map(|(k, v)| (k, v.to_string())).collect(),
                &truth,
                RecallConvention::Standard,
            ),
        )?;
        write(out, "validation.json", &to_json(&metrics), &mut files)?;
    }

    let groups = group_contexts(&records, &clustered.assignment);
    let recs = recommend_all(cfg, &groups)?;
    write(out, "recommendations.json", &to_json(&recs), &mut files)?;
    write(out, "sweep.csv", &sweep_csv(&sweep(cfg, &groups)?), &mut files)?;

    if cfg.baseline {
        let base = baseline(cfg, &records)?;
        write(out, "predict_and_cluster_users.csv", &users_csv(&base), &mut files)?;
        let base_groups = group_contexts(&records, &base);
        write(out, "baseline_sweep.csv", &sweep_csv(&sweep(cfg, &base_groups)?), &mut files)?;
        let metrics = at("compare", compare_partitions(&clustered.assignment, &base))?;
        write(out, "metrics.json", &to_json(&metrics), &mut files)?;
    }

    Ok(RunSummary {
        chosen_k: clustered.silhouette.chosen_k,
        files,
    })
}
