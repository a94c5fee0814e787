//! Order-aware group recommendation.
//!
//! A member whose preference list holds item `t` at position `q` (1-based)
//! gains `a^(−|q − p| / c)` when `t` is recommended at position `p`, so an
//! item placed exactly where the member ranked it scores 1 and the reward
//! decays with displacement. Summing over members gives the position score
//! matrix `W[p][t]` shared by the consensus functions.

mod assignment;
mod greedy;
mod least_misery;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use assignment::{ham, max_weight_assignment, Assignment};
pub use greedy::{gram, greedy_assignment};
pub use least_misery::{lmm, lmmp, pick_least_satisfied, Candidate, TieRule};

use crate::corpus::PreferenceProfile;
use crate::{Error, Result};

/// Scores closer than this are treated as tied.
pub(crate) const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringParams {
    /// Base of the positional decay, `> 1`.
    pub a: f64,
    /// Regularisation factor, `> 0`.
    pub c: f64,
    /// Group budget: length of the recommendation vector.
    pub k: usize,
}

impl ScoringParams {
    pub const DEFAULT_A: f64 = 2.0;
    pub const DEFAULT_C: f64 = 1.0;

    pub fn new(a: f64, c: f64, k: usize) -> Result<Self> {
        if !(a.is_finite() && a > 1.0) {
            return Err(Error::InvalidInput(format!("score base a must exceed 1, got {a}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidInput(format!("regularisation c must be positive, got {c}")));
        }
        if k == 0 {
            return Err(Error::InvalidInput("group budget k must be at least 1".into()));
        }
        Ok(ScoringParams { a, c, k })
    }

    /// Default `a` and `c` with budget `k`.
    pub fn with_budget(k: usize) -> Result<Self> {
        Self::new(Self::DEFAULT_A, Self::DEFAULT_C, k)
    }

    /// Reward for recommending at `p` an item the member ranked at `q`.
    pub fn positional(&self, q: usize, p: usize) -> f64 {
        self.a.powf(-(q.abs_diff(p) as f64) / self.c)
    }
}

/// A detected group and its members' preference lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub group_id: usize,
    pub members: Vec<PreferenceProfile>,
}

impl Group {
    pub fn new(group_id: usize, members: Vec<PreferenceProfile>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidInput(format!("group {group_id} has no members")));
        }
        let mut seen = HashSet::new();
        for m in &members {
            if !seen.insert(m.user_id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "user `{}` appears twice in group {group_id}",
                    m.user_id
                )));
            }
        }
        Ok(Group { group_id, members })
    }
}

/// Ordered, duplicate-free set of recommendable items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Catalog {
    pub fn new(items: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let items: Vec<String> = items.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            if index.insert(item.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("item `{item}` listed twice in catalog")));
            }
        }
        Ok(Catalog { items, index })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn index_of(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }
}

/// The ordered items recommended to a group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendationVector {
    pub items: Vec<String>,
}

impl RecommendationVector {
    pub fn new(items: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let items: Vec<String> = items.into_iter().map(Into::into).collect();
        let distinct: HashSet<&String> = items.iter().collect();
        if distinct.len() != items.len() {
            return Err(Error::InvalidInput("recommendation repeats an item".into()));
        }
        Ok(RecommendationVector { items })
    }

    fn from_indices(catalog: &Catalog, idx: &[usize]) -> Self {
        RecommendationVector {
            items: idx.iter().map(|&i| catalog.items[i].clone()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Lmm,
    Lmmp,
    Gram,
    Ham,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lmm, Method::Lmmp, Method::Gram, Method::Ham];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lmm => "LMM",
            Method::Lmmp => "LMMP",
            Method::Gram => "GRAM",
            Method::Ham => "HAM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown consensus method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionReport {
    pub method: Option<Method>,
    /// Unnormalised satisfaction per member, in `[0, k]`.
    pub per_user: BTreeMap<String, f64>,
    /// Mean of `per_user / k`, in `[0, 1]`.
    pub group_score: f64,
}

impl SatisfactionReport {
    /// Unnormalised total satisfaction over all members.
    pub fn total(&self) -> f64 {
        self.per_user.values().sum()
    }
}

/// Satisfaction of one member with a recommendation vector.
pub fn uso_score(profile: &PreferenceProfile, rec: &RecommendationVector, params: &ScoringParams) -> f64 {
    rec.items
        .iter()
        .enumerate()
        .filter_map(|(p, item)| profile.position(item).map(|q| params.positional(q, p + 1)))
        .sum()
}

/// `W[p][t]`: summed reward of placing catalog item `t` at position `p + 1`,
/// for `p < k`.
pub fn position_score_matrix(group: &Group, catalog: &Catalog, params: &ScoringParams) -> Result<Vec<Vec<f64>>> {
    let mut w = vec![vec![0.0; catalog.len()]; params.k];
    for member in &group.members {
        for (q0, item) in member.items.iter().enumerate() {
            let t = catalog
                .index_of(item)
                .ok_or_else(|| Error::UnknownItem(item.clone()))?;
            for (p0, row) in w.iter_mut().enumerate() {
                row[t] += params.positional(q0 + 1, p0 + 1);
            }
        }
    }
    Ok(w)
}

/// Scores `rec` for every member of `group`.
pub fn evaluate(group: &Group, rec: &RecommendationVector, params: &ScoringParams) -> SatisfactionReport {
    let per_user: BTreeMap<String, f64> = group
        .members
        .iter()
        .map(|m| (m.user_id.clone(), uso_score(m, rec, params)))
        .collect();
    let group_score = if per_user.is_empty() {
        0.0
    } else {
        per_user.values().sum::<f64>() / per_user.len() as f64 / params.k as f64
    };
    SatisfactionReport {
        method: None,
        per_user,
        group_score,
    }
}

/// Runs one consensus function.
pub fn recommend(
    method: Method,
    group: &Group,
    catalog: &Catalog,
    params: &ScoringParams,
) -> Result<(RecommendationVector, SatisfactionReport)> {
    match method {
        Method::Lmm => lmm(group, catalog, params),
        Method::Lmmp => lmmp(group, catalog, params),
        Method::Gram => gram(group, catalog, params),
        Method::Ham => ham(group, catalog, params),
    }
}

fn check_budget(catalog: &Catalog, params: &ScoringParams) -> Result<()> {
    if catalog.len() < params.k {
        return Err(Error::CatalogTooSmall {
            catalog: catalog.len(),
            k: params.k,
        });
    }
    Ok(())
}

fn finish(
    method: Method,
    group: &Group,
    catalog: &Catalog,
    params: &ScoringParams,
    picks: &[usize],
) -> (RecommendationVector, SatisfactionReport) {
    let rec = RecommendationVector::from_indices(catalog, picks);
    let mut report = evaluate(group, &rec, params);
    report.method = Some(method);
    (rec, report)
}
