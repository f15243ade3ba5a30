//! Clustering metrics, k-means and synthetic block generators.

mod hungarian;
mod kmeans;
mod metrics;
pub mod synth;

use std::collections::HashMap;

pub use hungarian::{max_weight_matching, min_cost_assignment};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};
pub use metrics::{acc, ari, nmi, precision_at_k, Contingency};

/// Cluster assignment of `len()` items into clusters `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Panics if a label is `>= k`.
    pub fn new(labels: Vec<usize>, k: usize) -> Self {
        assert!(labels.iter().all(|&l| l < k), "label out of range");
        Self { labels, k }
    }

    /// `k` is one past the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        Self { labels, k }
    }

    /// Ids assigned in order of first appearance.
    pub fn from_strings<S: AsRef<str>>(labels: &[S]) -> (Self, Vec<String>) {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut names = Vec::new();
        let labels = labels
            .iter()
            .map(|s| {
                *ids.entry(s.as_ref()).or_insert_with(|| {
                    names.push(s.as_ref().to_string());
                    names.len() - 1
                })
            })
            .collect();
        (Self { labels, k: names.len() }, names)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}
