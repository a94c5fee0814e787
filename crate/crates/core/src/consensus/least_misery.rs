//! Least-misery consensus: each position goes to the currently least
//! satisfied member, who contributes the item from their own list that adds
//! the most group satisfaction at that position.

use super::{check_budget, finish, position_score_matrix, Catalog, Group, Method, RecommendationVector,
    SatisfactionReport, ScoringParams, TIE_EPS};
use crate::Result;

/// How ties between equally least-satisfied members are broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieRule {
    /// Smallest user id.
    UserId,
    /// Fewest of the member's items already recommended, then user id.
    Priority,
}

/// A member still able to contribute an item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate<'a> {
    pub user_id: &'a str,
    pub satisfaction: f64,
    /// How many of this member's items are already recommended.
    pub included: usize,
}

/// Index of the least satisfied candidate under `rule`.
pub fn pick_least_satisfied(candidates: &[Candidate<'_>], rule: TieRule) -> Option<usize> {
    let min = candidates
        .iter()
        .map(|c| c.satisfaction)
        .fold(f64::INFINITY, f64::min);
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.satisfaction <= min + TIE_EPS)
        .min_by(|(_, x), (_, y)| match rule {
            TieRule::UserId => x.user_id.cmp(y.user_id),
            TieRule::Priority => x.included.cmp(&y.included).then(x.user_id.cmp(y.user_id)),
        })
        .map(|(i, _)| i)
}

pub fn lmm(group: &Group, catalog: &Catalog, params: &ScoringParams) -> Result<(RecommendationVector, SatisfactionReport)> {
    least_misery(Method::Lmm, TieRule::UserId, group, catalog, params)
}

pub fn lmmp(group: &Group, catalog: &Catalog, params: &ScoringParams) -> Result<(RecommendationVector, SatisfactionReport)> {
    least_misery(Method::Lmmp, TieRule::Priority, group, catalog, params)
}

fn least_misery(
    method: Method,
    rule: TieRule,
    group: &Group,
    catalog: &Catalog,
    params: &ScoringParams,
) -> Result<(RecommendationVector, SatisfactionReport)> {
    check_budget(catalog, params)?;
    let w = position_score_matrix(group, catalog, params)?;
    // member preference lists as catalog indices
    let prefs: Vec<Vec<usize>> = group
        .members
        .iter()
        .map(|m| m.items.iter().filter_map(|i| catalog.index_of(i)).collect())
        .collect();

    let mut used = vec![false; catalog.len()];
    let mut picks = Vec::with_capacity(params.k);
    let mut satisfaction = vec![0.0; group.members.len()];
    let mut included = vec![0usize; group.members.len()];

    for p0 in 0..params.k {
        let eligible: Vec<usize> = (0..prefs.len())
            .filter(|&u| prefs[u].iter().any(|&t| !used[t]))
            .collect();
        let candidates: Vec<Candidate> = eligible
            .iter()
            .map(|&u| Candidate {
                user_id: &group.members[u].user_id,
                satisfaction: satisfaction[u],
                included: included[u],
            })
            .collect();

        let item = match pick_least_satisfied(&candidates, rule) {
            Some(c) => {
                let mut best: Option<usize> = None;
                for &t in prefs[eligible[c]].iter().filter(|&&t| !used[t]) {
                    if best.is_none_or(|b| w[p0][t] > w[p0][b] + TIE_EPS) {
                        best = Some(t);
                    }
                }
                best.expect("eligible member has an unused item")
            }
            None => (0..catalog.len()).find(|&t| !used[t]).expect("catalog holds k items"),
        };

        used[item] = true;
        picks.push(item);
        for (u, list) in prefs.iter().enumerate() {
            if let Some(q0) = list.iter().position(|&t| t == item) {
                satisfaction[u] += params.positional(q0 + 1, p0 + 1);
                included[u] += 1;
            }
        }
    }
    Ok(finish(method, group, catalog, params, &picks))
}
