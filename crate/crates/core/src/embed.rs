//! Embedding providers.
//!
//! Two implementations: vectors supplied alongside the input (`precomputed`)
//! and a seedless character-trigram hashing embedder (`hash-ngram`) for
//! offline runs and tests.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{EmbedError, Error};
use crate::model::LayoutElement;

pub const DEFAULT_HASH_DIM: usize = 384;

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Signed feature hashing of lowercase character trigrams, L2-normalized.
///
/// Text is padded with one space on each side so that short strings still
/// yield trigrams. Empty or whitespace-only text maps to the zero vector.
#[derive(Debug, Clone)]
pub struct HashNgramEmbedder {
    dim: usize,
}

impl HashNgramEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }
}

impl Default for HashNgramEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_HASH_DIM)
    }
}

impl EmbeddingProvider for HashNgramEmbedder {
    fn name(&self) -> &str {
        "hash-ngram"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let mut v = vec![0.0; self.dim];
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Ok(v);
        }
        let chars: Vec<char> = std::iter::once(' ')
            .chain(trimmed.chars().flat_map(char::to_lowercase))
            .chain(std::iter::once(' '))
            .collect();
        let mut buf = String::with_capacity(12);
        for w in chars.windows(3) {
            buf.clear();
            buf.extend(w);
            let h = fnv1a(buf.as_bytes());
            let slot = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) == 0 { 1.0 } else { -1.0 };
            v[slot] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }
}

/// Text-keyed lookup of vectors produced by an external model.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedEmbeddings {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrecomputedFile {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl PrecomputedEmbeddings {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, text: impl Into<String>, v: Vec<f64>) -> Result<(), EmbedError> {
        if v.len() != self.dim {
            return Err(EmbedError::Dimension {
                expected: self.dim,
                found: v.len(),
            });
        }
        self.vectors.insert(text.into(), v);
        Ok(())
    }

    /// Reads `{"dim": n, "vectors": {"text": [..], ..}}`.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let raw = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: PrecomputedFile = serde_json::from_str(&raw)?;
        let mut out = Self::new(file.dim);
        for (k, v) in file.vectors {
            out.insert(k, v)?;
        }
        Ok(out)
    }
}

impl EmbeddingProvider for PrecomputedEmbeddings {
    fn name(&self) -> &str {
        "precomputed"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        self.vectors
            .get(text)
            .cloned()
            .ok_or_else(|| EmbedError::Missing(text.to_string()))
    }
}

/// Vector for an element: its ingested embedding when present, else the
/// provider's embedding of its text. `None` when neither is available.
pub fn element_vector(
    el: &LayoutElement,
    provider: &dyn EmbeddingProvider,
) -> Result<Option<Vec<f64>>, EmbedError> {
    if let Some(v) = &el.embedding {
        return Ok(Some(v.clone()));
    }
    if el.text.trim().is_empty() {
        return Ok(None);
    }
    match provider.embed(&el.text) {
        Ok(v) => Ok(Some(v)),
        Err(EmbedError::Missing(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::cosine_sim;

    #[test]
    fn hash_embedder_is_deterministic_and_normalized() {
        let e = HashNgramEmbedder::new(64);
        let a = e.embed("Water quality in the experiments").unwrap();
        let b = e.embed("Water quality in the experiments").unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn hash_embedder_is_case_insensitive_and_empty_is_zero() {
        let e = HashNgramEmbedder::default();
        assert_eq!(e.embed("Table").unwrap(), e.embed("table").unwrap());
        assert!(e.embed("   ").unwrap().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn related_texts_are_closer_than_unrelated() {
        let e = HashNgramEmbedder::default();
        let q = e.embed("Sewage water quality parameters").unwrap();
        let near = e.embed("water quality parameters of the sewage").unwrap();
        let far = e.embed("zzqx kjvb").unwrap();
        assert!(cosine_sim(&q, &near).unwrap() > cosine_sim(&q, &far).unwrap());
    }

    #[test]
    fn precomputed_lookup_and_dimension_guard() {
        let mut p = PrecomputedEmbeddings::new(2);
        p.insert("a", vec![1.0, 0.0]).unwrap();
        assert_eq!(p.embed("a").unwrap(), vec![1.0, 0.0]);
        assert!(matches!(p.embed("b"), Err(EmbedError::Missing(_))));
        assert!(p.insert("c", vec![1.0]).is_err());
    }
}
