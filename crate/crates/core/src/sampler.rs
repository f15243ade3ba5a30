//! Constant-time weighted sampling (Vose's alias method) and negative sampling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{MatrixSet, RelationMatrix};
use crate::registry::{EntityId, Registry, TypeId};

/// Alias table over `0..n` built with Vose's two-worklist construction.
#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// `weights` must be nonnegative with a positive sum.
    pub fn new(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        if n == 0 || total <= 0.0 || !total.is_finite() {
            return Err(Error::EmptyMatrix);
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidArgument("alias weights must be finite and nonnegative".into()));
        }
        let scale = n as f64 / total;
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        let mut prob = vec![0.0; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let mut small = Vec::new();
        let mut large = Vec::new();
        for (i, &p) in scaled.iter().enumerate() {
            if p < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&l), Some(&g)) = (small.last(), large.last()) {
            small.pop();
            large.pop();
            prob[l] = scaled[l];
            alias[l] = g;
            scaled[g] = (scaled[g] + scaled[l]) - 1.0;
            if scaled[g] < 1.0 {
                small.push(g);
            } else {
                large.push(g);
            }
        }
        // Leftovers on either list are 1 up to rounding.
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
            alias[i] = i;
        }
        Ok(Self { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    pub fn prob(&self) -> &[f64] {
        &self.prob
    }

    pub fn alias(&self) -> &[usize] {
        &self.alias
    }

    /// Column pick plus coin flip.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let k = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[k] {
            k
        } else {
            self.alias[k]
        }
    }

    /// Probability of each outcome implied by the table.
    pub fn reconstructed_probabilities(&self) -> Vec<f64> {
        let n = self.prob.len() as f64;
        let mut out: Vec<f64> = self.prob.iter().map(|p| p / n).collect();
        for (k, (&p, &a)) in self.prob.iter().zip(&self.alias).enumerate() {
            if a != k {
                out[a] += (1.0 - p) / n;
            }
        }
        out
    }
}

/// Samples `(row, col)` pairs of one matrix with probability `M[i,j] / total_mass`.
#[derive(Debug, Clone)]
pub struct PairSampler {
    table: AliasTable,
    cells: Vec<(EntityId, EntityId)>,
}

impl PairSampler {
    pub fn new(m: &RelationMatrix) -> Self {
        let weights: Vec<f64> = m.cells().iter().map(|c| c.weight).collect();
        let table = AliasTable::new(&weights).expect("relation matrices have positive mass");
        let cells = m.cells().iter().map(|c| (c.row, c.col)).collect();
        Self { table, cells }
    }

    #[inline]
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (EntityId, EntityId) {
        self.cells[self.table.sample(rng)]
    }

    pub fn table(&self) -> &AliasTable {
        &self.table
    }

    pub fn cells(&self) -> &[(EntityId, EntityId)] {
        &self.cells
    }
}

pub fn build_alias_table(m: &RelationMatrix) -> PairSampler {
    PairSampler::new(m)
}

/// One alias table over the concatenation of every matrix, normalized by the
/// combined mass. Only used for the global-normalization ablation.
#[derive(Debug, Clone)]
pub struct GlobalPairSampler {
    table: AliasTable,
    entries: Vec<(usize, EntityId, EntityId)>,
}

impl GlobalPairSampler {
    pub fn new(set: &MatrixSet) -> Result<Self> {
        let mut weights = Vec::new();
        let mut entries = Vec::new();
        for (mi, m) in set.iter().enumerate() {
            for c in m.cells() {
                weights.push(c.weight);
                entries.push((mi, c.row, c.col));
            }
        }
        Ok(Self { table: AliasTable::new(&weights)?, entries })
    }

    /// Returns `(matrix index, row, col)`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, EntityId, EntityId) {
        self.entries[self.table.sample(rng)]
    }
}

/// Distribution negatives are drawn from, per column type.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NegativeDistribution {
    #[default]
    Uniform,
    /// word2vec-style smoothed unigram: column mass raised to `power`.
    Unigram { power: f64 },
}

/// `n_neg` ids i.i.d. uniform over `0..n_entities`. Duplicates are allowed.
pub fn sample_negatives<R: Rng + ?Sized>(n_entities: usize, n_neg: usize, rng: &mut R) -> Result<Vec<EntityId>> {
    if n_entities == 0 {
        return Err(Error::EmptyType(String::new()));
    }
    Ok((0..n_neg).map(|_| rng.gen_range(0..n_entities)).collect())
}

#[derive(Debug, Clone)]
enum TypeSampler {
    Uniform(usize),
    Table(AliasTable),
}

/// Negative sampler covering every registered type.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    per_type: Vec<TypeSampler>,
}

impl NegativeSampler {
    pub fn new(registry: &Registry, set: &MatrixSet, dist: NegativeDistribution) -> Self {
        let mut per_type: Vec<TypeSampler> = registry.types().map(|(_, t)| TypeSampler::Uniform(t.len())).collect();
        if let NegativeDistribution::Unigram { power } = dist {
            let mut mass: Vec<Vec<f64>> = registry.types().map(|(_, t)| vec![0.0; t.len()]).collect();
            for m in set {
                let col_mass = &mut mass[m.col_type().0];
                for (j, s) in m.col_sums().into_iter().enumerate() {
                    col_mass[j] += s;
                }
            }
            for (t, weights) in mass.into_iter().enumerate() {
                let smoothed: Vec<f64> = weights.iter().map(|w| w.powf(power)).collect();
                if let Ok(table) = AliasTable::new(&smoothed) {
                    per_type[t] = TypeSampler::Table(table);
                }
            }
        }
        Self { per_type }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, t: TypeId, rng: &mut R) -> EntityId {
        match &self.per_type[t.0] {
            TypeSampler::Uniform(n) => rng.gen_range(0..*n),
            TypeSampler::Table(table) => table.sample(rng),
        }
    }

    pub fn type_len(&self, t: TypeId) -> usize {
        match &self.per_type[t.0] {
            TypeSampler::Uniform(n) => *n,
            TypeSampler::Table(table) => table.len(),
        }
    }
}
