//! Text vectors and the cosine affinity between review instances.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row-major `m × dim` matrix with one row per review instance.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub ids: Vec<u64>,
    pub dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn from_rows(ids: Vec<u64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::LengthMismatch(ids.len(), rows.len()));
        }
        let dim = rows.first().map(Vec::len).ok_or(Error::NoVectors)?;
        if dim == 0 {
            return Err(Error::InvalidInput("vector dimension must be positive".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (id, row) in ids.iter().zip(&rows) {
            if row.len() != dim {
                return Err(Error::RaggedVectors {
                    expected: dim,
                    found: row.len(),
                    id: *id,
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(*id));
            }
            data.extend_from_slice(row);
        }
        Ok(EmbeddingMatrix { ids, dim, data })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// L2-normalised TF-IDF rows over the corpus vocabulary, using raw term
/// counts and the smoothed idf `ln((1 + m) / (1 + df)) + 1`. Texts with no
/// tokens give all-zero rows. Row ids are the text indices.
pub fn embed_tfidf<S: AsRef<str>>(texts: &[S]) -> Result<EmbeddingMatrix> {
    if texts.is_empty() {
        return Err(Error::InvalidInput("no texts to embed".into()));
    }
    let docs: Vec<BTreeMap<String, usize>> = texts
        .iter()
        .map(|t| {
            let mut counts = BTreeMap::new();
            for tok in tokenize(t.as_ref()) {
                *counts.entry(tok).or_insert(0) += 1;
            }
            counts
        })
        .collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &docs {
        for term in doc.keys() {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let vocab: BTreeMap<&str, usize> = df.keys().enumerate().map(|(i, t)| (*t, i)).collect();
    let m = docs.len() as f64;
    let idf: Vec<f64> = df
        .values()
        .map(|&d| ((1.0 + m) / (1.0 + d as f64)).ln() + 1.0)
        .collect();

    // An empty vocabulary still needs a positive dimension.
    let dim = vocab.len().max(1);
    let rows = docs
        .iter()
        .map(|doc| {
            let mut row = vec![0.0; dim];
            for (term, &count) in doc {
                let j = vocab[term.as_str()];
                row[j] = count as f64 * idf[j];
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
            row
        })
        .collect();
    EmbeddingMatrix::from_rows((0..texts.len() as u64).collect(), rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct VectorLine {
    id: u64,
    vector: Vec<f64>,
}

/// Reads a JSON-lines vector file of `{"id": <seq>, "vector": [...]}`.
pub fn load_vectors(path: &Path) -> Result<EmbeddingMatrix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_vectors(&text).map_err(|e| match e {
        Error::Malformed { line, message, .. } => Error::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        },
        other => other,
    })
}

pub fn parse_vectors(text: &str) -> Result<EmbeddingMatrix> {
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: VectorLine = serde_json::from_str(line).map_err(|e| Error::Malformed {
            path: Default::default(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(parsed.id) {
            return Err(Error::DuplicateId(parsed.id));
        }
        ids.push(parsed.id);
        rows.push(parsed.vector);
    }
    EmbeddingMatrix::from_rows(ids, rows)
}

/// Serialises an embedding in the vector-file format read by [`load_vectors`].
pub fn write_vectors(emb: &EmbeddingMatrix) -> String {
    let mut out = String::new();
    for (id, row) in emb.ids.iter().zip(emb.rows()) {
        let line = VectorLine {
            id: *id,
            vector: row.to_vec(),
        };
        out.push_str(&serde_json::to_string(&line).expect("finite vectors serialise"));
        out.push('\n');
    }
    out
}

/// Symmetric `m × m` affinity, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds a matrix from row-major values, checking squareness and
    /// symmetry to 1e-12.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} similarity values, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite similarity".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                if (values[i * n + j] - values[j * n + i]).abs() > 1e-12 {
                    return Err(Error::NotSymmetric(i, j));
                }
            }
        }
        Ok(SimilarityMatrix { n, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("similarity rows must be square".into()));
        }
        Self::from_values(n, rows.concat())
    }

    pub fn n_instances(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// `1 − sim` with a zero diagonal, clamped to `[0, 2]`.
    pub fn to_distances(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        if i == j {
                            0.0
                        } else {
                            (1.0 - self.get(i, j)).clamp(0.0, 2.0)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Pairwise cosine similarity. Pairs involving an all-zero row (including
/// its own diagonal cell) are 0.
pub fn cosine_similarity_matrix(emb: &EmbeddingMatrix) -> SimilarityMatrix {
    let n = emb.len();
    let norms: Vec<f64> = emb
        .rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else if i == j {
                1.0
            } else {
                let dot: f64 = emb.row(i).iter().zip(emb.row(j)).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            };
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    SimilarityMatrix { n, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn identical_texts_identical_rows() {
        let e = embed_tfidf(&["cat", "cat"]).unwrap();
        assert_eq!(e.row(0), e.row(1));
    }

    #[test]
    fn disjoint_texts_are_orthogonal() {
        let e = embed_tfidf(&["cat", "dog"]).unwrap();
        let sim = cosine_similarity_matrix(&e);
        assert_eq!(sim.get(0, 1), 0.0);
    }

    #[test]
    fn stopword_only_text_gives_zero_row() {
        let e = embed_tfidf(&["...", "dog"]).unwrap();
        assert!(e.row(0).iter().all(|v| *v == 0.0));
        let sim = cosine_similarity_matrix(&e);
        assert_eq!(sim.get(0, 0), 0.0);
        assert_eq!(sim.get(1, 1), 1.0);
    }

    #[test]
    fn tfidf_matches_hand_computation() {
        // df(a)=2, df(b)=1 over m=2: idf(a)=1, idf(b)=ln(1.5)+1
        let e = embed_tfidf(&["a b", "a"]).unwrap();
        let idf_b = 1.5f64.ln() + 1.0;
        let norm = (1.0 + idf_b * idf_b).sqrt();
        assert_abs_diff_eq!(e.row(0)[0], 1.0 / norm, epsilon = 1e-15);
        assert_abs_diff_eq!(e.row(0)[1], idf_b / norm, epsilon = 1e-15);
        assert_eq!(e.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn tfidf_empty_corpus_is_error() {
        assert!(embed_tfidf::<&str>(&[]).is_err());
    }

    #[test]
    fn cosine_examples() {
        let e = EmbeddingMatrix::from_rows(
            vec![0, 1, 2, 3],
            vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 3.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let s = cosine_similarity_matrix(&e);
        assert_abs_diff_eq!(s.get(0, 1), 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(s.get(0, 2), 0.0);
        assert_eq!(s.get(0, 3), 1.0);
        assert_eq!(s.get(1, 1), 1.0);
    }

    #[test]
    fn two_vocabulary_corpus_separates() {
        let a = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa"];
        let b = ["red", "green", "blue", "cyan", "magenta", "yellow", "black", "white", "grey", "pink"];
        let make = |vocab: &[&str], i: usize| -> String {
            (0..4).map(|j| vocab[(i * 3 + j * 7) % 10]).collect::<Vec<_>>().join(" ") + " " + vocab[0]
        };
        let texts: Vec<String> = (0..15).map(|i| make(&a, i)).chain((0..15).map(|i| make(&b, i))).collect();
        let e = embed_tfidf(&texts).unwrap();
        // direct pairwise cosines from the raw rows
        let mut min_within = f64::INFINITY;
        let mut max_cross = f64::NEG_INFINITY;
        for i in 0..30 {
            for j in 0..30 {
                if i == j {
                    continue;
                }
                let c = cos(e.row(i), e.row(j));
                if (i < 15) == (j < 15) {
                    min_within = min_within.min(c);
                } else {
                    max_cross = max_cross.max(c);
                }
            }
        }
        assert!(min_within > max_cross, "{min_within} vs {max_cross}");
    }

    #[test]
    fn vectors_load_512() {
        let row: Vec<String> = (0..512).map(|i| format!("{}", i as f64 / 512.0)).collect();
        let text = format!(
            "{{\"id\":0,\"vector\":[{}]}}\n{{\"id\":1,\"vector\":[{}]}}\n",
            row.join(","),
            row.join(",")
        );
        let e = parse_vectors(&text).unwrap();
        assert_eq!(e.dim, 512);
        assert_eq!(e.ids, vec![0, 1]);
    }

    #[test]
    fn vectors_ragged_is_error() {
        let a: Vec<&str> = vec!["0.5"; 512];
        let b: Vec<&str> = vec!["0.5"; 511];
        let text = format!(
            "{{\"id\":0,\"vector\":[{}]}}\n{{\"id\":1,\"vector\":[{}]}}\n",
            a.join(","),
            b.join(",")
        );
        assert!(matches!(
            parse_vectors(&text),
            Err(Error::RaggedVectors { expected: 512, found: 511, id: 1 })
        ));
    }

    #[test]
    fn vectors_empty_and_duplicate() {
        let err = parse_vectors("").unwrap_err();
        assert_eq!(err.to_string(), "no vectors");
        let dup = "{\"id\":3,\"vector\":[1]}\n{\"id\":3,\"vector\":[2]}\n";
        assert!(matches!(parse_vectors(dup), Err(Error::DuplicateId(3))));
    }

    #[test]
    fn vectors_round_trip_through_writer() {
        let e = embed_tfidf(&["one two", "two three"]).unwrap();
        assert_eq!(parse_vectors(&write_vectors(&e)).unwrap(), e);
    }

    #[test]
    fn non_symmetric_rejected() {
        assert!(matches!(
            SimilarityMatrix::from_rows(&[vec![1.0, 0.2], vec![0.3, 1.0]]),
            Err(Error::NotSymmetric(0, 1))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cosine_is_scale_invariant_and_bounded(
                rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 2..8),
                scales in prop::collection::vec(0.01f64..100.0, 8),
            ) {
                let ids: Vec<u64> = (0..rows.len() as u64).collect();
                let scaled: Vec<Vec<f64>> = rows.iter().zip(&scales)
                    .map(|(r, s)| r.iter().map(|v| v * s).collect()).collect();
                let a = cosine_similarity_matrix(&EmbeddingMatrix::from_rows(ids.clone(), rows.clone()).unwrap());
                let b = cosine_similarity_matrix(&EmbeddingMatrix::from_rows(ids, scaled).unwrap());
                for i in 0..rows.len() {
                    for j in 0..rows.len() {
                        prop_assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-9);
                        prop_assert!((-1.0..=1.0).contains(&a.get(i, j)));
                        prop_assert_eq!(a.get(i, j), a.get(j, i));
                    }
                }
            }

            #[test]
            fn tfidf_is_deterministic(words in prop::collection::vec("[a-d ]{0,12}", 1..10)) {
                let a = embed_tfidf(&words).unwrap();
                let b = embed_tfidf(&words).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
