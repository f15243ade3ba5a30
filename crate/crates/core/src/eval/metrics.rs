use std::collections::HashSet;
use std::hash::Hash;

use super::hungarian::max_weight_matching;
use super::Partition;
use crate::error::{Error, Result};

/// Dense `a.k x b.k` table of co-assignment counts.
#[derive(Debug, Clone)]
pub struct Contingency {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u64>,
    pub n: u64,
}

impl Contingency {
    pub fn new(a: &Partition, b: &Partition) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch(a.len(), b.len()));
        }
        let (rows, cols) = (a.k(), b.k());
        let mut counts = vec![0u64; rows * cols];
        for (&x, &y) in a.labels().iter().zip(b.labels()) {
            counts[x * cols + y] += 1;
        }
        Ok(Self { rows, cols, counts, n: a.len() as u64 })
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j)).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.get(i, j)).sum()).collect()
    }

    /// Whether the nonempty clusters of both sides are in one-to-one correspondence.
    pub fn is_bijective(&self) -> bool {
        let row_ok = (0..self.rows).all(|i| (0..self.cols).filter(|&j| self.get(i, j) > 0).count() <= 1);
        let col_ok = (0..self.cols).all(|j| (0..self.rows).filter(|&i| self.get(i, j) > 0).count() <= 1);
        row_ok && col_ok
    }
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, `I(a;b) / sqrt(H(a) H(b))`.
///
/// Identical partitions (up to relabeling) score 1; otherwise a zero entropy
/// on either side scores 0.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    if t.n == 0 {
        return Ok(1.0);
    }
    if t.is_bijective() {
        return Ok(1.0);
    }
    let n = t.n as f64;
    let (rs, cs) = (t.row_sums(), t.col_sums());
    let (ha, hb) = (entropy(&rs, n), entropy(&cs, n));
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for i in 0..t.rows {
        for j in 0..t.cols {
            let c = t.get(i, j);
            if c > 0 {
                let c = c as f64;
                mi += c / n * (n * c / (rs[i] as f64 * cs[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

fn comb2(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index from the pair-counting contingency formula.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    let sum_cells: f64 = t.counts.iter().map(|&c| comb2(c)).sum();
    let sum_a: f64 = t.row_sums().into_iter().map(comb2).sum();
    let sum_b: f64 = t.col_sums().into_iter().map(comb2).sum();
    let total = comb2(t.n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(if t.is_bijective() { 1.0 } else { 0.0 });
    }
    Ok((sum_cells - expected) / denom)
}

/// Clustering accuracy: best one-to-one relabeling of `pred` onto `truth`,
/// found by optimal assignment on the contingency table.
pub fn acc(pred: &Partition, truth: &Partition) -> Result<f64> {
    let t = Contingency::new(pred, truth)?;
    if t.n == 0 {
        return Ok(1.0);
    }
    let w: Vec<f64> = t.counts.iter().map(|&c| c as f64).collect();
    let matched: f64 = max_weight_matching(&w, t.rows, t.cols).into_iter().map(|(i, j)| t.get(i, j) as f64).sum();
    Ok(matched / t.n as f64)
}

/// `|top-k ∩ relevant| / k`.
pub fn precision_at_k<T: Eq + Hash>(ranked: &[T], relevant: &HashSet<T>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let hits = ranked.iter().take(k).filter(|x| relevant.contains(x)).count();
    Ok(hits as f64 / k as f64)
}
