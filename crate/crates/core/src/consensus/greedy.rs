use super::{check_budget, finish, position_score_matrix, Catalog, Group, Method, RecommendationVector,
    SatisfactionReport, ScoringParams, TIE_EPS};
use crate::Result;

/// Fills positions in order, each with the unused column of highest weight
/// (ties to the lowest column). `w` has one row per position and at least as
/// many columns as rows.
pub fn greedy_assignment(w: &[Vec<f64>]) -> Vec<usize> {
    let cols = w.first().map_or(0, Vec::len);
    let mut used = vec![false; cols];
    w.iter()
        .map(|row| {
            let mut best: Option<usize> = None;
            for t in (0..cols).filter(|&t| !used[t]) {
                if best.is_none_or(|b| row[t] > row[b] + TIE_EPS) {
                    best = Some(t);
                }
            }
            let t = best.expect("more columns than rows");
            used[t] = true;
            t
        })
        .collect()
}

/// Greedy aggregation over the position score matrix.
pub fn gram(group: &Group, catalog: &Catalog, params: &ScoringParams) -> Result<(RecommendationVector, SatisfactionReport)> {
    check_budget(catalog, params)?;
    let w = position_score_matrix(group, catalog, params)?;
    let picks = greedy_assignment(&w);
    Ok(finish(Method::Gram, group, catalog, params, &picks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::PreferenceProfile;

    #[test]
    fn greedy_on_small_matrix() {
        // p1 takes t2 (5), p2 gets t1 (2): total 7, the better of 1+3 and 5+2
        let w = vec![vec![1.0, 5.0], vec![2.0, 3.0]];
        assert_eq!(greedy_assignment(&w), vec![1, 0]);
    }

    #[test]
    fn greedy_can_be_suboptimal() {
        let w = vec![vec![10.0, 9.0], vec![10.0, 0.0]];
        assert_eq!(greedy_assignment(&w), vec![0, 1]);
    }

    #[test]
    fn unanimous_group() {
        let p = ["c", "a", "b"];
        let g = Group::new(
            0,
            vec![PreferenceProfile::new("u", p), PreferenceProfile::new("v", p)],
        )
        .unwrap();
        let cat = Catalog::new(["a", "b", "c", "d"]).unwrap();
        let (rec, rep) = gram(&g, &cat, &ScoringParams::with_budget(3).unwrap()).unwrap();
        assert_eq!(rec.items, p);
        assert_eq!(rep.group_score, 1.0);
    }

    #[test]
    fn empty_preferences_take_catalog_prefix() {
        let g = Group::new(0, vec![PreferenceProfile::new("u", Vec::<String>::new())]).unwrap();
        let cat = Catalog::new(["q", "r", "s"]).unwrap();
        let (rec, rep) = gram(&g, &cat, &ScoringParams::with_budget(2).unwrap()).unwrap();
        assert_eq!(rec.items, vec!["q", "r"]);
        assert_eq!(rep.group_score, 0.0);
    }
}
