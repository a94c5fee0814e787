//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numerical failure.

pub mod config;
pub mod pipeline;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::{EmbeddingSource, Format, KRange, PipelineConfig};
use pipeline::{StageError, StageResult};
use report::{read_label_table, to_json, write_text};

use crate::embedding::{cosine_similarity_matrix, write_vectors};
use crate::validation::RecallConvention;

type MethodList = Vec<crate::consensus::Method>;
type UsizeList = Vec<usize>;

#[derive(Debug, Parser)]
#[command(name = "grouprec", version, about = "Text-similarity user groups and order-aware group recommendation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a dataset and write normalised records (records.jsonl).
    Ingest(DataArgs),
    /// Write TF-IDF vectors for the sampled reviews (vectors.jsonl).
    Embed(DataArgs),
    /// Pick the cluster count and cluster reviews and users.
    Cluster(DataArgs),
    /// Compare a label table against reference labels.
    Validate(ValidateArgs),
    /// Recommend for each detected group and write the sweep table.
    Recommend(RecommendArgs),
    /// Predict & Cluster baseline grouping.
    Baseline(DataArgs),
    /// Full pipeline.
    Run(DataArgs),
    /// Compare two user partitions.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// TOML file of `key = value` settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// jsonl (keeps empty reviews as a placeholder) or csv (drops them).
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub user_field: Option<String>,
    #[arg(long)]
    pub item_field: Option<String>,
    #[arg(long)]
    pub rating_field: Option<String>,
    #[arg(long)]
    pub review_field: Option<String>,
    #[arg(long)]
    pub placeholder: Option<String>,
    #[arg(long)]
    pub sample_n: Option<usize>,
    /// tfidf or vectors.
    #[arg(long)]
    pub embedding: Option<EmbeddingSource>,
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Candidate cluster counts, e.g. 2-10.
    #[arg(long)]
    pub k_range: Option<KRange>,
    /// Group budget k.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long = "a")]
    pub a: Option<f64>,
    #[arg(long = "c")]
    pub c: Option<f64>,
    /// Comma-separated subset of LMM,LMMP,GRAM,HAM, or `all`.
    #[arg(long, value_parser = config::parse_methods)]
    pub methods: Option<Vec<MethodList>>,
    #[arg(long)]
    pub flexible: bool,
    #[arg(long, value_parser = config::parse_list)]
    pub sweep_budgets: Option<Vec<UsizeList>>,
    #[arg(long, value_parser = config::parse_list)]
    pub sweep_items: Option<Vec<UsizeList>>,
    #[arg(long)]
    pub no_baseline: bool,
    #[arg(long)]
    pub baseline_k: Option<usize>,
    #[arg(long)]
    pub neighbors: Option<usize>,
    #[arg(long)]
    pub min_overlap: Option<usize>,
    /// Instance-level reference labels (instance_id,label).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Use this user table (user_id,cluster) instead of clustering.
    #[arg(long)]
    pub users: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Predicted labels: first column key, last column label.
    #[arg(long)]
    pub labels: PathBuf,
    /// Reference labels in the same layout.
    #[arg(long)]
    pub truth: PathBuf,
    /// Report recall as tp/(tp+tn) instead of tp/(tp+fn).
    #[arg(long)]
    pub recall_over_agreements: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    pub left: PathBuf,
    pub right: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl DataArgs {
    /// Config file (if any) with flag overrides applied.
    pub fn resolve(&self) -> StageResult<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path).map_err(StageError::usage)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v; })*
            };
        }
        set!(format, placeholder, sample_n, embedding, k_range, budget, a, c, baseline_k, neighbors, min_overlap, seed, out);
        macro_rules! set_opt {
            ($($field:ident),*) => {
                $(if self.$field.is_some() { cfg.$field = self.$field.clone(); })*
            };
        }
        set_opt!(dataset, user_field, item_field, rating_field, review_field, vectors, truth);
        if let Some(m) = &self.methods {
            cfg.methods = m.iter().flatten().copied().collect();
        }
        if let Some(v) = &self.sweep_budgets {
            cfg.sweep_budgets = v.iter().flatten().copied().collect();
        }
        if let Some(v) = &self.sweep_items {
            cfg.sweep_items = v.iter().flatten().copied().collect();
        }
        if self.vectors.is_some() && self.embedding.is_none() {
            cfg.embedding = EmbeddingSource::Vectors;
        }
        cfg.flexible |= self.flexible;
        cfg.baseline &= !self.no_baseline;
        cfg.validate().map_err(StageError::usage)?;
        Ok(cfg)
    }
}

fn prepare_out(cfg: &PipelineConfig) -> StageResult<()> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| StageError::data("write", format!("cannot create {}: {e}", cfg.out.display())))
}

fn emit(path: PathBuf, text: &str) -> StageResult<()> {
    write_text(&path, text).map_err(|e| StageError::data("write", e.to_string()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn read_table(path: &Path) -> StageResult<BTreeMap<String, String>> {
    read_label_table(path).map_err(|e| StageError::data("read", e.to_string()))
}

/// Executes one parsed command.
pub fn execute(cli: Cli) -> StageResult<()> {
    match cli.command {
        Command::Ingest(args) => {
            let cfg = args.resolve()?;
            prepare_out(&cfg)?;
            let records = pipeline::load_records(&cfg)?;
            let mut text = String::new();
            for r in &records {
                text.push_str(&serde_json::to_string(r).expect("records serialise"));
                text.push('\n');
            }
            let um = crate::corpus::build_utility_matrix(&records);
            println!(
                "{} records, {} users, {} items",
                records.len(),
                um.users.len(),
                um.items.len()
            );
            emit(cfg.out.join("records.jsonl"), &text)
        }
        Command::Embed(args) => {
            let mut cfg = args.resolve()?;
            cfg.embedding = EmbeddingSource::Tfidf;
            prepare_out(&cfg)?;
            let records = pipeline::load_records(&cfg)?;
            let emb = pipeline::embed(&cfg, &records)?;
            emit(cfg.out.join("vectors.jsonl"), &write_vectors(&emb))
        }
        Command::Cluster(args) => {
            let cfg = args.resolve()?;
            prepare_out(&cfg)?;
            let records = pipeline::load_records(&cfg)?;
            let sim = cosine_similarity_matrix(&pipeline::embed(&cfg, &records)?);
            let c = pipeline::cluster(&cfg, &records, &sim)?;
            println!("chosen k = {}", c.silhouette.chosen_k);
            emit(cfg.out.join("clusters.csv"), &pipeline::clusters_csv(&records, &c.assignment))?;
            emit(cfg.out.join("users.csv"), &pipeline::users_csv(&c.assignment))?;
            emit(cfg.out.join("silhouette.json"), &to_json(&c.silhouette))
        }
        Command::Recommend(args) => {
            let cfg = args.data.resolve()?;
            prepare_out(&cfg)?;
            let records = pipeline::load_records(&cfg)?;
            let assignment = match &args.users {
                Some(path) => user_table_assignment(&read_table(path)?)?,
                None => {
                    let sim = cosine_similarity_matrix(&pipeline::embed(&cfg, &records)?);
                    pipeline::cluster(&cfg, &records, &sim)?.assignment
                }
            };
            let sampled: std::collections::HashSet<&str> = records.iter().map(|r| r.user_id.as_str()).collect();
            let mut assignment = assignment;
            assignment.user_labels.retain(|u, _| sampled.contains(u.as_str()));
            let groups = pipeline::group_contexts(&records, &assignment);
            emit(
                cfg.out.join("recommendations.json"),
                &to_json(&pipeline::recommend_all(&cfg, &groups)?),
            )?;
            emit(cfg.out.join("sweep.csv"), &pipeline::sweep_csv(&pipeline::sweep(&cfg, &groups)?))
        }
        Command::Baseline(args) => {
            let cfg = args.resolve()?;
            prepare_out(&cfg)?;
            let records = pipeline::load_records(&cfg)?;
            let base = pipeline::baseline(&cfg, &records)?;
            emit(cfg.out.join("predict_and_cluster_users.csv"), &pipeline::users_csv(&base))?;
            let groups = pipeline::group_contexts(&records, &base);
            emit(
                cfg.out.join("baseline_sweep.csv"),
                &pipeline::sweep_csv(&pipeline::sweep(&cfg, &groups)?),
            )
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let summary = pipeline::run_pipeline(&cfg)?;
            println!("chosen k = {}", summary.chosen_k);
            for f in summary.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Validate(args) => {
            let recall = if args.recall_over_agreements {
                RecallConvention::OverAgreements
            } else {
                RecallConvention::Standard
            };
            let metrics = pipeline::compare_label_maps(&read_table(&args.labels)?, &read_table(&args.truth)?, recall)
                .map_err(|e| StageError::data("validate", e.to_string()))?;
            finish_metrics(&to_json(&metrics), args.out)
        }
        Command::Compare(args) => {
            let left = user_table_assignment(&read_table(&args.left)?)?;
            let right = user_table_assignment(&read_table(&args.right)?)?;
            let metrics = pipeline::compare_partitions(&left, &right)
                .map_err(|e| StageError::data("compare", e.to_string()))?;
            finish_metrics(&to_json(&metrics), args.out)
        }
    }
}

fn finish_metrics(json: &str, out: Option<PathBuf>) -> StageResult<()> {
    print!("{json}");
    match out {
        Some(path) => write_text(&path, json).map_err(|e| StageError::data("write", e.to_string())),
        None => Ok(()),
    }
}

fn user_table_assignment(table: &BTreeMap<String, String>) -> StageResult<crate::clustering::ClusterAssignment> {
    let mut user_labels = BTreeMap::new();
    for (user, label) in table {
        let l: usize = label
            .trim()
            .parse()
            .map_err(|_| StageError::data("read", format!("cluster label `{label}` for `{user}` is not an integer")))?;
        user_labels.insert(user.clone(), l);
    }
    let n_clusters = user_labels.values().max().map_or(1, |m| m + 1);
    Ok(crate::clustering::ClusterAssignment {
        instance_labels: Vec::new(),
        user_labels,
        n_clusters,
    })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
