//! Per-type centering, distance and retrieval utilities, and the PMI diagnostic.

use std::cmp::Ordering;

use crate::embedding::{EmbeddingSet, Scalar};
use crate::error::{Error, Result};
use crate::matrix::RelationMatrix;
use crate::registry::{EntityId, TypeId};

/// Mean embedding of each type (empty types get `None`).
pub fn type_means<F: Scalar>(emb: &EmbeddingSet<F>) -> Vec<Option<Vec<f64>>> {
    (0..emb.n_types())
        .map(|t| {
            let t = TypeId(t);
            let n = emb.type_len(t);
            if n == 0 {
                return None;
            }
            let mut mean = vec![0.0; emb.dim()];
            for row in emb.rows(t) {
                for (m, x) in mean.iter_mut().zip(row) {
                    *m += x.as_f64();
                }
            }
            mean.iter_mut().for_each(|m| *m /= n as f64);
            Some(mean)
        })
        .collect()
}

/// Subtracts each type's own mean from that type's embeddings.
pub fn center_by_type<F: Scalar>(emb: &EmbeddingSet<F>) -> EmbeddingSet<F> {
    let means = type_means(emb);
    let mut out = emb.clone();
    for (t, mean) in means.iter().enumerate() {
        let Some(mean) = mean else { continue };
        let t = TypeId(t);
        for id in 0..out.type_len(t) {
            for (x, m) in out.row_mut(t, id).iter_mut().zip(mean) {
                *x = F::of(x.as_f64() - m);
            }
        }
    }
    out
}

/// Dense symmetric L2 distance matrix over the entities of several types,
/// laid out in blocks in the order the types were given.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    types: Vec<TypeId>,
    offsets: Vec<usize>,
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn types(&self) -> &[TypeId] {
        &self.types
    }

    /// Row/column index of the first entity of the `k`-th listed type.
    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Distance between entity `a` of listed type `ka` and entity `b` of listed type `kb`.
    pub fn between(&self, ka: usize, a: EntityId, kb: usize, b: EntityId) -> f64 {
        self.get(self.offsets[ka] + a, self.offsets[kb] + b)
    }
}

pub fn l2<F: Scalar>(a: &[F], b: &[F]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

pub fn pairwise_distances<F: Scalar>(emb: &EmbeddingSet<F>, types: &[TypeId]) -> Result<DistanceMatrix> {
    let mut rows: Vec<&[F]> = Vec::new();
    let mut offsets = Vec::with_capacity(types.len());
    for &t in types {
        if t.0 >= emb.n_types() {
            return Err(Error::UnknownType(format!("#{}", t.0)));
        }
        if emb.type_len(t) == 0 {
            return Err(Error::EmptyType(format!("#{}", t.0)));
        }
        offsets.push(rows.len());
        rows.extend(emb.rows(t));
    }
    let n = rows.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = l2(rows[i], rows[j]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { types: types.to_vec(), offsets, n, data })
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

#[derive(Debug, Clone)]
pub enum Query {
    Entity(TypeId, EntityId),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: EntityId,
    pub score: f64,
}

/// Top-`k` entities of `target` by cosine similarity to the query, descending,
/// ties by id. An entity query never returns itself.
pub fn nearest_neighbors<F: Scalar>(
    emb: &EmbeddingSet<F>,
    query: &Query,
    target: TypeId,
    k: usize,
) -> Result<Vec<Neighbor>> {
    if emb.type_len(target) == 0 {
        return Err(Error::EmptyType(format!("#{}", target.0)));
    }
    let (qv, skip) = match query {
        Query::Entity(t, id) => {
            let v: Vec<f64> = emb.row(*t, *id).iter().map(|x| x.as_f64()).collect();
            (v, (*t == target).then_some(*id))
        }
        Query::Vector(v) => {
            if v.len() != emb.dim() {
                return Err(Error::LengthMismatch(v.len(), emb.dim()));
            }
            (v.clone(), None)
        }
    };
    if qv.iter().all(|x| *x == 0.0) {
        return Err(Error::InvalidArgument("query vector is zero".into()));
    }
    let mut scored: Vec<Neighbor> = emb
        .rows(target)
        .enumerate()
        .filter(|(id, _)| Some(*id) != skip)
        .map(|(id, row)| {
            let r: Vec<f64> = row.iter().map(|x| x.as_f64()).collect();
            Neighbor { id, score: cosine(&qv, &r) }
        })
        .collect();
    scored.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal).then(a.id.cmp(&b.id)));
    scored.truncate(k);
    Ok(scored)
}

/// `ln(P[i,j] / (P[i,·] P[·,j]))` with `P = M / total_mass`.
pub fn pmi(m: &RelationMatrix, i: EntityId, j: EntityId) -> Result<f64> {
    let w = m.get(i, j);
    if w <= 0.0 {
        return Err(Error::ZeroCell { row: i, col: j });
    }
    let total = m.total_mass();
    let (mut row, mut col) = (0.0, 0.0);
    for c in m.cells() {
        if c.row == i {
            row += c.weight;
        }
        if c.col == j {
            col += c.weight;
        }
    }
    Ok(((w / total) / ((row / total) * (col / total))).ln())
}
