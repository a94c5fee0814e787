//! Pipeline configuration: a TOML file of `key = value` pairs, then command
//! line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer};

use crate::baseline::{DEFAULT_MIN_OVERLAP, DEFAULT_NEIGHBORS};
use crate::consensus::{Method, ScoringParams};
use crate::corpus::{FieldMap, DEFAULT_PLACEHOLDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("unknown format `{s}` (expected jsonl or csv)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingSource {
    Tfidf,
    Vectors,
}

impl FromStr for EmbeddingSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tfidf" => Ok(EmbeddingSource::Tfidf),
            "vectors" => Ok(EmbeddingSource::Vectors),
            _ => Err(format!("unknown embedding `{s}` (expected tfidf or vectors)")),
        }
    }
}

/// Inclusive range of candidate cluster counts, written `2-10` or `2..10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub min: usize,
    pub max: usize,
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (lo, hi) = s
            .split_once("..=")
            .or_else(|| s.split_once(".."))
            .or_else(|| s.split_once('-'))
            .or_else(|| s.split_once(':'))
            .unwrap_or((s, s));
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid cluster-count range `{s}`"))
        };
        Ok(KRange {
            min: parse(lo)?,
            max: parse(hi)?,
        })
    }
}

impl fmt::Display for KRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.min, self.max)
    }
}

impl<'de> Deserialize<'de> for KRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Pair([usize; 2]),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Pair([min, max]) => Ok(KRange { min, max }),
        }
    }
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(Method::ALL.to_vec());
    }
    s.split(',')
        .map(|m| m.parse::<Method>().map_err(|e| e.to_string()))
        .collect()
}

pub fn parse_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|_| format!("invalid integer `{v}`")))
        .collect()
}

fn deserialize_methods<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Method>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        List(Vec<String>),
    }
    match Raw::deserialize(d)? {
        Raw::Text(s) => parse_methods(&s).map_err(serde::de::Error::custom),
        Raw::List(l) => parse_methods(&l.join(",")).map_err(serde::de::Error::custom),
    }
}

/// Everything a pipeline run needs.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: Option<PathBuf>,
    pub format: Format,
    pub user_field: Option<String>,
    pub item_field: Option<String>,
    pub rating_field: Option<String>,
    pub review_field: Option<String>,
    /// Stand-in for empty review text in JSON-lines input.
    pub placeholder: String,
    pub sample_n: usize,
    pub embedding: EmbeddingSource,
    pub vectors: Option<PathBuf>,
    pub k_range: KRange,
    pub budget: usize,
    pub a: f64,
    pub c: f64,
    #[serde(deserialize_with = "deserialize_methods")]
    pub methods: Vec<Method>,
    /// Truncate each preference list to the budget.
    pub flexible: bool,
    pub sweep_budgets: Vec<usize>,
    pub sweep_items: Vec<usize>,
    pub baseline: bool,
    pub baseline_k: usize,
    pub neighbors: usize,
    pub min_overlap: usize,
    /// Optional instance-level reference labels (`instance_id,label`).
    pub truth: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: None,
            format: Format::Jsonl,
            user_field: None,
            item_field: None,
            rating_field: None,
            review_field: None,
            placeholder: DEFAULT_PLACEHOLDER.into(),
            sample_n: 500,
            embedding: EmbeddingSource::Tfidf,
            vectors: None,
            k_range: KRange { min: 2, max: 10 },
            budget: 5,
            a: ScoringParams::DEFAULT_A,
            c: ScoringParams::DEFAULT_C,
            methods: Method::ALL.to_vec(),
            flexible: false,
            sweep_budgets: vec![3, 5, 7, 10],
            sweep_items: vec![10, 20, 50],
            baseline: true,
            baseline_k: 2,
            neighbors: DEFAULT_NEIGHBORS,
            min_overlap: DEFAULT_MIN_OVERLAP,
            truth: None,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn field_map(&self) -> FieldMap {
        let base = match self.format {
            Format::Jsonl => FieldMap::amazon(),
            Format::Csv => FieldMap::modcloth(),
        };
        FieldMap {
            user: self.user_field.clone().unwrap_or(base.user),
            item: self.item_field.clone().unwrap_or(base.item),
            rating: self.rating_field.clone().unwrap_or(base.rating),
            review: self.review_field.clone().unwrap_or(base.review),
        }
    }

    pub fn scoring(&self, k: usize) -> crate::Result<ScoringParams> {
        ScoringParams::new(self.a, self.c, k)
    }

    /// Checks every bound that does not depend on the data.
    pub fn validate(&self) -> Result<(), String> {
        if self.dataset.is_none() {
            return Err("no dataset given (--dataset)".into());
        }
        if self.sample_n < 2 {
            return Err(format!("sample_n must be at least 2, got {}", self.sample_n));
        }
        if self.k_range.min < 2 || self.k_range.min > self.k_range.max {
            return Err(format!("k_range {} must satisfy 2 <= min <= max", self.k_range));
        }
        if self.budget == 0 || self.sweep_budgets.contains(&0) {
            return Err("group budget must be at least 1".into());
        }
        if self.sweep_items.contains(&0) {
            return Err("sweep item counts must be positive".into());
        }
        self.scoring(self.budget).map_err(|e| e.to_string())?;
        if self.methods.is_empty() {
            return Err("no consensus methods selected".into());
        }
        if self.embedding == EmbeddingSource::Vectors && self.vectors.is_none() {
            return Err("embedding = vectors needs a vectors file (--vectors)".into());
        }
        if self.baseline && self.baseline_k == 0 {
            return Err("baseline_k must be at least 1".into());
        }
        Ok(())
    }
}
