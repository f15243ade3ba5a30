//! Dense per-type embedding storage.

use std::fmt::{Debug, Display};
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::registry::{EntityId, Registry, TypeId};

/// Floating-point element type of an embedding store. `f32` for training,
/// `f64` for gradient checks.
pub trait Scalar: Float + Debug + Display + Default + Send + Sync + 'static {
    /// Word-sized cell used for lock-free parallel updates.
    type Atomic: Send + Sync;

    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
    fn new_atomic(self) -> Self::Atomic;
    fn load(a: &Self::Atomic) -> Self;
    fn store(a: &Self::Atomic, v: Self);
}

impl Scalar for f32 {
    type Atomic = AtomicU32;

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
    fn new_atomic(self) -> AtomicU32 {
        AtomicU32::new(self.to_bits())
    }
    #[inline]
    fn load(a: &AtomicU32) -> Self {
        f32::from_bits(a.load(Ordering::Relaxed))
    }
    #[inline]
    fn store(a: &AtomicU32, v: Self) {
        a.store(v.to_bits(), Ordering::Relaxed)
    }
}

impl Scalar for f64 {
    type Atomic = AtomicU64;

    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
    fn new_atomic(self) -> AtomicU64 {
        AtomicU64::new(self.to_bits())
    }
    #[inline]
    fn load(a: &AtomicU64) -> Self {
        f64::from_bits(a.load(Ordering::Relaxed))
    }
    #[inline]
    fn store(a: &AtomicU64, v: Self) {
        a.store(v.to_bits(), Ordering::Relaxed)
    }
}

/// One `n_type x dim` row-major table per registered type, indexed by [`TypeId`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet<F = f32> {
    dim: usize,
    tables: Vec<Vec<F>>,
}

impl<F: Scalar> EmbeddingSet<F> {
    pub fn zeros(registry: &Registry, dim: usize) -> Self {
        let tables = registry.types().map(|(_, t)| vec![F::zero(); t.len() * dim]).collect();
        Self { dim, tables }
    }

    /// Builds a set from explicit per-type tables.
    pub fn from_tables(dim: usize, tables: Vec<Vec<F>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be >= 1".into()));
        }
        if tables.iter().any(|t| t.len() % dim != 0) {
            return Err(Error::InvalidArgument("table length is not a multiple of dim".into()));
        }
        Ok(Self { dim, tables })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_types(&self) -> usize {
        self.tables.len()
    }

    pub fn type_len(&self, t: TypeId) -> usize {
        self.tables[t.0].len() / self.dim
    }

    #[inline]
    pub fn row(&self, t: TypeId, id: EntityId) -> &[F] {
        &self.tables[t.0][id * self.dim..(id + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, t: TypeId, id: EntityId) -> &mut [F] {
        let d = self.dim;
        &mut self.tables[t.0][id * d..(id + 1) * d]
    }

    pub fn table(&self, t: TypeId) -> &[F] {
        &self.tables[t.0]
    }

    pub fn rows(&self, t: TypeId) -> impl Iterator<Item = &[F]> {
        self.tables[t.0].chunks_exact(self.dim)
    }

    /// Rows of type `t` widened to `f64`, one `Vec` per entity.
    pub fn rows_f64(&self, t: TypeId) -> Vec<Vec<f64>> {
        self.rows(t).map(|r| r.iter().map(|x| x.as_f64()).collect()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tables.iter().flatten().all(|x| x.is_finite())
    }

    pub fn cast<G: Scalar>(&self) -> EmbeddingSet<G> {
        EmbeddingSet {
            dim: self.dim,
            tables: self.tables.iter().map(|t| t.iter().map(|x| G::of(x.as_f64())).collect()).collect(),
        }
    }
}

/// Each component i.i.d. uniform on `[-0.5/dim, 0.5/dim]`, types in registry order.
pub fn init_embeddings<F: Scalar, R: Rng + ?Sized>(
    registry: &Registry,
    dim: usize,
    rng: &mut R,
) -> Result<EmbeddingSet<F>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dim must be >= 1".into()));
    }
    let scale = 1.0 / dim as f64;
    let tables = registry
        .types()
        .map(|(_, t)| (0..t.len() * dim).map(|_| F::of((rng.gen::<f64>() - 0.5) * scale)).collect())
        .collect();
    Ok(EmbeddingSet { dim, tables })
}

/// Row access used by the SGD step, so the same update code drives both the
/// exclusive store and the shared lock-free one.
pub(crate) trait RowStore<F: Scalar> {
    fn read(&self, t: TypeId, id: EntityId, out: &mut [F]);
    fn write(&mut self, t: TypeId, id: EntityId, row: &[F]);
}

impl<F: Scalar> RowStore<F> for EmbeddingSet<F> {
    #[inline]
    fn read(&self, t: TypeId, id: EntityId, out: &mut [F]) {
        out.copy_from_slice(self.row(t, id));
    }

    #[inline]
    fn write(&mut self, t: TypeId, id: EntityId, row: &[F]) {
        self.row_mut(t, id).copy_from_slice(row);
    }
}

/// Shared store for asynchronous training. Reads and writes are per-component
/// relaxed atomics, so concurrent updates to one row may interleave or be lost.
pub(crate) struct AtomicEmbeddingSet<F: Scalar> {
    dim: usize,
    tables: Vec<Vec<F::Atomic>>,
}

impl<F: Scalar> AtomicEmbeddingSet<F> {
    pub(crate) fn from_set(set: &EmbeddingSet<F>) -> Self {
        Self { dim: set.dim, tables: set.tables.iter().map(|t| t.iter().map(|x| x.new_atomic()).collect()).collect() }
    }

    pub(crate) fn snapshot(&self) -> EmbeddingSet<F> {
        EmbeddingSet { dim: self.dim, tables: self.tables.iter().map(|t| t.iter().map(F::load).collect()).collect() }
    }
}

/// Per-worker handle onto an [`AtomicEmbeddingSet`].
pub(crate) struct SharedRows<'a, F: Scalar>(pub(crate) &'a AtomicEmbeddingSet<F>);

impl<F: Scalar> RowStore<F> for SharedRows<'_, F> {
    #[inline]
    fn read(&self, t: TypeId, id: EntityId, out: &mut [F]) {
        let d = self.0.dim;
        for (o, a) in out.iter_mut().zip(&self.0.tables[t.0][id * d..(id + 1) * d]) {
            *o = F::load(a);
        }
    }

    #[inline]
    fn write(&mut self, t: TypeId, id: EntityId, row: &[F]) {
        let d = self.0.dim;
        for (v, a) in row.iter().zip(&self.0.tables[t.0][id * d..(id + 1) * d]) {
            F::store(a, *v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn registry(n: usize) -> Registry {
        let mut r = Registry::new();
        let t = r.add_type("x").unwrap();
        for i in 0..n {
            r.register(t, &i.to_string()).unwrap();
        }
        r
    }

    #[test]
    fn dim_one_range() {
        let reg = registry(1000);
        let e: EmbeddingSet<f32> = init_embeddings(&reg, 1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(e.table(TypeId(0)).iter().all(|x| (-0.5..=0.5).contains(x)));
    }

    #[test]
    fn same_seed_same_embeddings() {
        let reg = registry(50);
        let a: EmbeddingSet<f32> = init_embeddings(&reg, 8, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b: EmbeddingSet<f32> = init_embeddings(&reg, 8, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mean_is_near_zero() {
        // Component std is (1/dim)/sqrt(12); the mean of 1e4 draws has std 1/100 of that.
        let dim = 100;
        let reg = registry(10_000);
        let e: EmbeddingSet<f64> = init_embeddings(&reg, dim, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let bound = 3.0 * (1.0 / 12f64.sqrt() * 0.01) / 100.0;
        for k in 0..dim {
            let mean: f64 = e.rows(TypeId(0)).map(|r| r[k]).sum::<f64>() / 10_000.0;
            assert!(mean.abs() < bound, "component {k}: {mean}");
        }
    }

    #[test]
    fn zero_dim_rejected() {
        let reg = registry(1);
        assert!(init_embeddings::<f32, _>(&reg, 0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn atomic_snapshot_round_trips() {
        let reg = registry(3);
        let e: EmbeddingSet<f32> = init_embeddings(&reg, 4, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let shared = AtomicEmbeddingSet::from_set(&e);
        let mut h = SharedRows(&shared);
        h.write(TypeId(0), 1, &[1.0, 2.0, 3.0, 4.0]);
        let mut buf = [0.0f32; 4];
        h.read(TypeId(0), 1, &mut buf);
        assert_eq!(buf, [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(shared.snapshot().row(TypeId(0), 0), e.row(TypeId(0), 0));
    }
}
