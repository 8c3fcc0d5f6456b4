use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ClusterError;

/// Sparse TF-IDF vector. Terms with zero weight are omitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TfidfVector {
    pub terms: BTreeMap<String, f64>,
    pub norm: f64,
}

impl TfidfVector {
    pub fn from_weights(weights: impl IntoIterator<Item = (String, f64)>) -> Self {
        let terms: BTreeMap<String, f64> = weights.into_iter().filter(|(_, w)| *w != 0.0).collect();
        let norm = terms.values().map(|w| w * w).sum::<f64>().sqrt();
        TfidfVector { terms, norm }
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.terms.get(term).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }

    pub fn dot(&self, other: &TfidfVector) -> f64 {
        let (small, large) = if self.terms.len() <= other.terms.len() { (self, other) } else { (other, self) };
        small.terms.iter().map(|(t, w)| w * large.weight(t)).sum()
    }

    /// Cosine similarity; zero vectors have similarity 0 with everything.
    pub fn cosine(&self, other: &TfidfVector) -> f64 {
        if self.is_zero() || other.is_zero() {
            return 0.0;
        }
        self.dot(other) / (self.norm * other.norm)
    }

    /// `1 - cosine`, clamped to `[0, 2]`, with float noise near zero
    /// snapped to exactly zero. Two zero vectors are identical (distance
    /// 0); a zero vector is at distance 1 from any other vector.
    pub fn cosine_distance(&self, other: &TfidfVector) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        if self.is_zero() || other.is_zero() {
            return 1.0;
        }
        let d = (1.0 - self.cosine(other)).clamp(0.0, 2.0);
        if d < 1e-12 {
            0.0
        } else {
            d
        }
    }

    /// Arithmetic mean of vectors.
    pub fn mean<'a>(vectors: impl IntoIterator<Item = &'a TfidfVector>) -> TfidfVector {
        let mut sums: BTreeMap<String, f64> = BTreeMap::new();
        let mut n = 0usize;
        for v in vectors {
            n += 1;
            for (t, w) in &v.terms {
                *sums.entry(t.clone()).or_default() += w;
            }
        }
        if n == 0 {
            return TfidfVector::default();
        }
        TfidfVector::from_weights(sums.into_iter().map(|(t, w)| (t, w / n as f64)))
    }

    /// Highest-weighted terms, ties broken alphabetically.
    pub fn top_terms(&self, k: usize) -> Vec<String> {
        let mut terms: Vec<(&String, &f64)> = self.terms.iter().collect();
        terms.sort_by(|a, b| b.1.total_cmp(a.1).then_with(|| a.0.cmp(b.0)));
        terms.into_iter().take(k).map(|(t, _)| t.clone()).collect()
    }
}

/// Document frequencies of a fitted corpus; `idf(t) = ln(N / df(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    n_docs: usize,
    df: BTreeMap<String, usize>,
}

impl TfidfModel {
    pub fn fit(docs: &[Vec<String>]) -> Result<Self, ClusterError> {
        if docs.is_empty() {
            return Err(ClusterError::EmptyDocumentSet);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            for term in doc.iter().collect::<BTreeSet<_>>() {
                *df.entry(term.clone()).or_default() += 1;
            }
        }
        Ok(TfidfModel { n_docs: docs.len(), df })
    }

    /// Inverse document frequency; terms never seen during fitting get 0.
    pub fn idf(&self, term: &str) -> f64 {
        match self.df.get(term) {
            Some(&df) => (self.n_docs as f64 / df as f64).ln(),
            None => 0.0,
        }
    }

    /// Raw term count times idf.
    pub fn transform(&self, doc: &[String]) -> TfidfVector {
        let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
        for term in doc {
            *tf.entry(term.as_str()).or_default() += 1;
        }
        TfidfVector::from_weights(tf.into_iter().map(|(t, count)| (t.to_string(), count as f64 * self.idf(t))))
    }
}

/// Vectorize token sequences with `weight(t, d) = tf(t, d) * ln(|docs| / df(t))`.
pub fn tfidf_vectorize(docs: &[Vec<String>]) -> Result<Vec<TfidfVector>, ClusterError> {
    let model = TfidfModel::fit(docs)?;
    Ok(docs.iter().map(|d| model.transform(d)).collect())
}
