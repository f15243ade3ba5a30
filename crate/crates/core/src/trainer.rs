//! Multi-matrix skip-gram training.
//!
//! Every outer iteration visits the matrices in declared order, draws
//! `batch_size` pairs from each under that matrix's own normalization, and
//! applies one positive and `n_neg` negative updates per pair. Negatives come
//! from the column type of the sampled pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{init_embeddings, AtomicEmbeddingSet, EmbeddingSet, RowStore, Scalar, SharedRows};
use crate::error::{Error, Result};
use crate::matrix::MatrixSet;
use crate::registry::{EntityId, Registry, TypeId};
use crate::sampler::{GlobalPairSampler, NegativeDistribution, NegativeSampler, PairSampler};
use crate::sgns;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Each matrix normalized by its own mass and sampled every iteration.
    #[default]
    Independent,
    /// One table over all matrices, normalized by the combined mass.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Linear decay from `eta` to `eta / 100` over the run.
    LinearDecay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub n_iter: usize,
    pub n_neg: usize,
    pub eta: f64,
    pub dim: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub workers: usize,
    pub sampling: SamplingMode,
    pub lr_schedule: LrSchedule,
    pub negatives: NegativeDistribution,
    /// Redraw a negative that equals the positive column entity.
    pub exclude_positive: bool,
    /// Pairs per matrix in the fixed loss probe set; 0 disables probing.
    pub probe_pairs: usize,
    /// Emit a checkpoint every this many iterations (single worker only).
    pub checkpoint_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_iter: 10_000,
            n_neg: 5,
            eta: 0.025,
            dim: 100,
            batch_size: 128,
            seed: 1,
            workers: 1,
            sampling: SamplingMode::Independent,
            lr_schedule: LrSchedule::Constant,
            negatives: NegativeDistribution::Uniform,
            exclude_positive: false,
            probe_pairs: 256,
            checkpoint_every: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta <= 0.0 || !self.eta.is_finite() {
            return Err(Error::Config(format!("eta must be > 0, got {}", self.eta)));
        }
        if self.dim == 0 {
            return Err(Error::Config("dim must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if let NegativeDistribution::Unigram { power } = self.negatives {
            if !power.is_finite() || power < 0.0 {
                return Err(Error::Config(format!("unigram power must be >= 0, got {power}")));
            }
        }
        if self.checkpoint_every == Some(0) {
            return Err(Error::Config("checkpoint interval must be >= 1".into()));
        }
        Ok(())
    }

    fn eta_at(&self, iteration: usize) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.eta,
            LrSchedule::LinearDecay => {
                let frac = iteration as f64 / self.n_iter.max(1) as f64;
                self.eta * (1.0 - 0.99 * frac)
            }
        }
    }
}

/// Hooks called during training. All methods default to no-ops.
pub trait TrainObserver<F: Scalar> {
    /// Mean probe-set loss before training and after every tenth of the iterations.
    fn on_probe(&mut self, _iteration: usize, _loss: f64) {}

    fn on_checkpoint(&mut self, _iteration: usize, _embeddings: &EmbeddingSet<F>) -> Result<()> {
        Ok(())
    }
}

impl<F: Scalar> TrainObserver<F> for () {}

/// Records every probe measurement.
#[derive(Debug, Default, Clone)]
pub struct ProbeHistory(pub Vec<(usize, f64)>);

impl<F: Scalar> TrainObserver<F> for ProbeHistory {
    fn on_probe(&mut self, iteration: usize, loss: f64) {
        self.0.push((iteration, loss));
    }
}

pub fn train<F: Scalar>(set: &MatrixSet, registry: &Registry, config: &TrainConfig) -> Result<EmbeddingSet<F>> {
    train_with(set, registry, config, &mut ())
}

pub fn train_with<F: Scalar>(
    set: &MatrixSet,
    registry: &Registry,
    config: &TrainConfig,
    observer: &mut dyn TrainObserver<F>,
) -> Result<EmbeddingSet<F>> {
    config.validate()?;
    if set.is_empty() {
        return Err(Error::InvalidArgument("matrix set is empty".into()));
    }
    set.validate(registry)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut emb: EmbeddingSet<F> = init_embeddings(registry, config.dim, &mut rng)?;
    if config.n_iter == 0 {
        return Ok(emb);
    }

    let plan = Plan::new(set, registry, config)?;
    let probe = ProbeSet::new(set, &plan.negatives, config);
    let marks = progress_marks(config.n_iter);
    if let Some(p) = &probe {
        observer.on_probe(0, p.mean_loss(&emb));
    }

    if config.workers == 1 {
        let mut worker = Worker::new(&plan, config.dim);
        for it in 0..config.n_iter {
            worker.iteration(&mut emb, &mut rng, it, config.eta_at(it))?;
            let done = it + 1;
            if let Some(p) = &probe {
                if marks.contains(&done) {
                    let l = p.mean_loss(&emb);
                    log::info!("iteration {done}/{}: probe loss {l:.6}", config.n_iter);
                    observer.on_probe(done, l);
                }
            }
            if let Some(every) = config.checkpoint_every {
                if done % every == 0 {
                    observer.on_checkpoint(done, &emb)?;
                }
            }
        }
        return Ok(emb);
    }

    let shared = AtomicEmbeddingSet::from_set(&emb);
    let n_workers = config.workers;
    let results: Vec<Result<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n_workers)
            .map(|w| {
                let plan = &plan;
                let shared = &shared;
                // Worker w takes iterations w, w + n_workers, ...
                let seed = config.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(w as u64 + 1));
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let mut rows = SharedRows(shared);
                    let mut worker = Worker::new(plan, config.dim);
                    for it in (w..config.n_iter).step_by(n_workers) {
                        worker.iteration(&mut rows, &mut rng, it, config.eta_at(it))?;
                    }
                    Ok(())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
    });
    for r in results {
        r?;
    }
    let emb = shared.snapshot();
    if let Some(p) = &probe {
        observer.on_probe(config.n_iter, p.mean_loss(&emb));
    }
    Ok(emb)
}

fn progress_marks(n_iter: usize) -> Vec<usize> {
    let mut marks: Vec<usize> = (1..=10).map(|k| (n_iter * k).div_ceil(10)).filter(|&m| m > 0).collect();
    marks.dedup();
    marks
}

struct MatrixInfo {
    row_type: TypeId,
    col_type: TypeId,
    alpha: f64,
}

enum Samplers {
    Independent(Vec<PairSampler>),
    Global(GlobalPairSampler),
}

/// Immutable per-run state shared by all workers.
struct Plan<'a> {
    registry: &'a Registry,
    info: Vec<MatrixInfo>,
    samplers: Samplers,
    negatives: NegativeSampler,
    n_neg: usize,
    batch_size: usize,
    exclude_positive: bool,
}

impl<'a> Plan<'a> {
    fn new(set: &MatrixSet, registry: &'a Registry, config: &TrainConfig) -> Result<Self> {
        let info = set
            .iter()
            .map(|m| MatrixInfo { row_type: m.row_type(), col_type: m.col_type(), alpha: m.alpha() })
            .collect();
        let samplers = match config.sampling {
            SamplingMode::Independent => Samplers::Independent(set.iter().map(PairSampler::new).collect()),
            SamplingMode::Global => Samplers::Global(GlobalPairSampler::new(set)?),
        };
        Ok(Self {
            registry,
            info,
            samplers,
            negatives: NegativeSampler::new(registry, set, config.negatives),
            n_neg: config.n_neg,
            batch_size: config.batch_size,
            exclude_positive: config.exclude_positive,
        })
    }
}

struct Worker<'p, F> {
    plan: &'p Plan<'p>,
    p: Vec<F>,
    q: Vec<F>,
    n: Vec<F>,
}

impl<'p, F: Scalar> Worker<'p, F> {
    fn new(plan: &'p Plan<'p>, dim: usize) -> Self {
        Self { plan, p: vec![F::zero(); dim], q: vec![F::zero(); dim], n: vec![F::zero(); dim] }
    }

    fn iteration<S: RowStore<F>, R: Rng>(&mut self, store: &mut S, rng: &mut R, it: usize, eta: f64) -> Result<()> {
        let plan = self.plan;
        match &plan.samplers {
            Samplers::Independent(samplers) => {
                for (mi, sampler) in samplers.iter().enumerate() {
                    for _ in 0..plan.batch_size {
                        let (p, q) = sampler.sample_pair(rng);
                        self.pair(store, rng, it, eta, mi, p, q)?;
                    }
                }
            }
            Samplers::Global(global) => {
                for _ in 0..plan.info.len() * plan.batch_size {
                    let (mi, p, q) = global.sample(rng);
                    self.pair(store, rng, it, eta, mi, p, q)?;
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn pair<S: RowStore<F>, R: Rng>(
        &mut self,
        store: &mut S,
        rng: &mut R,
        it: usize,
        eta: f64,
        mi: usize,
        p: EntityId,
        q: EntityId,
    ) -> Result<()> {
        let plan = self.plan;
        let MatrixInfo { row_type, col_type, alpha } = plan.info[mi];
        store.read(row_type, p, &mut self.p);
        store.read(col_type, q, &mut self.q);
        sgns::update_positive(&mut self.p, &mut self.q, eta, alpha);
        self.check(&self.q, it, col_type, q)?;
        store.write(col_type, q, &self.q);

        let n_cols = plan.negatives.type_len(col_type);
        for _ in 0..plan.n_neg {
            let mut neg = plan.negatives.sample(col_type, rng);
            if plan.exclude_positive && n_cols > 1 {
                // Bounded so a unigram table concentrated on `q` cannot spin forever.
                for _ in 0..64 {
                    if neg != q {
                        break;
                    }
                    neg = plan.negatives.sample(col_type, rng);
                }
            }
            if row_type == col_type && neg == p {
                self.n.copy_from_slice(&self.p);
            } else {
                store.read(col_type, neg, &mut self.n);
            }
            sgns::update_negative(&mut self.p, &mut self.n, eta, alpha);
            self.check(&self.n, it, col_type, neg)?;
            store.write(col_type, neg, &self.n);
        }
        self.check(&self.p, it, row_type, p)?;
        store.write(row_type, p, &self.p);
        Ok(())
    }

    #[inline]
    fn check(&self, row: &[F], it: usize, t: TypeId, id: EntityId) -> Result<()> {
        if row.iter().all(|x| x.is_finite()) {
            return Ok(());
        }
        let ty = self.plan.registry.get(t);
        Err(Error::NonFinite {
            iteration: it,
            type_name: ty.name.clone(),
            entity: ty.name_of(id).unwrap_or("?").to_string(),
        })
    }
}

/// Fixed pairs and negatives drawn once from a separate stream, used to track
/// the objective during training without perturbing the training RNG.
struct ProbeSet {
    items: Vec<ProbeItem>,
}

struct ProbeItem {
    row_type: TypeId,
    col_type: TypeId,
    p: EntityId,
    q: EntityId,
    negs: Vec<EntityId>,
}

impl ProbeSet {
    fn new(set: &MatrixSet, negatives: &NegativeSampler, config: &TrainConfig) -> Option<Self> {
        if config.probe_pairs == 0 {
            return None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x05ee_d0f9_b0be));
        let mut items = Vec::new();
        for m in set {
            let sampler = PairSampler::new(m);
            for _ in 0..config.probe_pairs {
                let (p, q) = sampler.sample_pair(&mut rng);
                let negs = (0..config.n_neg).map(|_| negatives.sample(m.col_type(), &mut rng)).collect();
                items.push(ProbeItem { row_type: m.row_type(), col_type: m.col_type(), p, q, negs });
            }
        }
        Some(Self { items })
    }

    fn mean_loss<F: Scalar>(&self, emb: &EmbeddingSet<F>) -> f64 {
        let total: f64 = self
            .items
            .iter()
            .map(|it| {
                let negs: Vec<&[F]> = it.negs.iter().map(|&n| emb.row(it.col_type, n)).collect();
                sgns::loss(emb.row(it.row_type, it.p), emb.row(it.col_type, it.q), &negs)
            })
            .sum();
        total / self.items.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::RelationMatrix;

    fn tiny() -> (Registry, MatrixSet) {
        let mut reg = Registry::new();
        let a = reg.add_type("A").unwrap();
        let b = reg.add_type("B").unwrap();
        let lonely = reg.add_type("Z").unwrap();
        for i in 0..4 {
            reg.register(a, &format!("a{i}")).unwrap();
            reg.register(b, &format!("b{i}")).unwrap();
        }
        reg.register(lonely, "z").unwrap();
        let m = RelationMatrix::build(&reg, a, b, (0..4).map(|i| (i, i, 1.0))).unwrap();
        (reg, [m].into_iter().collect())
    }

    fn cfg() -> TrainConfig {
        TrainConfig { n_iter: 200, dim: 8, batch_size: 4, eta: 0.1, seed: 3, ..Default::default() }
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let (reg, set) = tiny();
        let c = TrainConfig { n_iter: 0, ..cfg() };
        let trained: EmbeddingSet<f32> = train(&set, &reg, &c).unwrap();
        let init: EmbeddingSet<f32> = init_embeddings(&reg, c.dim, &mut ChaCha8Rng::seed_from_u64(c.seed)).unwrap();
        assert_eq!(trained, init);
    }

    #[test]
    fn deterministic_single_worker() {
        let (reg, set) = tiny();
        let a: EmbeddingSet<f32> = train(&set, &reg, &cfg()).unwrap();
        let b: EmbeddingSet<f32> = train(&set, &reg, &cfg()).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());
    }

    #[test]
    fn untouched_types_keep_initialization() {
        let (reg, set) = tiny();
        let c = cfg();
        let trained: EmbeddingSet<f32> = train(&set, &reg, &c).unwrap();
        let init: EmbeddingSet<f32> = init_embeddings(&reg, c.dim, &mut ChaCha8Rng::seed_from_u64(c.seed)).unwrap();
        let z = reg.type_id("Z").unwrap();
        assert_eq!(trained.table(z), init.table(z));
        assert_ne!(trained.table(TypeId(0)), init.table(TypeId(0)));
    }

    #[test]
    fn rejects_bad_config() {
        let (reg, set) = tiny();
        for bad in [
            TrainConfig { eta: 0.0, ..cfg() },
            TrainConfig { dim: 0, ..cfg() },
            TrainConfig { batch_size: 0, ..cfg() },
            TrainConfig { workers: 0, ..cfg() },
        ] {
            assert!(matches!(train::<f32>(&set, &reg, &bad), Err(Error::Config(_))));
        }
        assert!(train::<f32>(&MatrixSet::new(), &reg, &cfg()).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let (reg, set) = tiny();
        let c = TrainConfig { eta: 1e38, ..cfg() };
        match train::<f32>(&set, &reg, &c) {
            Err(Error::NonFinite { type_name, .. }) => assert!(type_name == "A" || type_name == "B"),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn probes_cover_every_tenth() {
        let (reg, set) = tiny();
        let mut hist = ProbeHistory::default();
        let _: EmbeddingSet<f32> = train_with(&set, &reg, &TrainConfig { n_iter: 100, ..cfg() }, &mut hist).unwrap();
        let its: Vec<usize> = hist.0.iter().map(|(i, _)| *i).collect();
        assert_eq!(its, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
        assert!(hist.0.last().unwrap().1 < hist.0[0].1);
    }

    #[test]
    fn parallel_mode_trains() {
        let (reg, set) = tiny();
        let c = TrainConfig { workers: 3, ..cfg() };
        let e: EmbeddingSet<f32> = train(&set, &reg, &c).unwrap();
        assert!(e.is_finite());
    }

    #[test]
    fn exclusion_and_unigram_options_run() {
        let (reg, set) = tiny();
        let c = TrainConfig {
            exclude_positive: true,
            negatives: NegativeDistribution::Unigram { power: 0.75 },
            lr_schedule: LrSchedule::LinearDecay,
            sampling: SamplingMode::Global,
            ..cfg()
        };
        let e: EmbeddingSet<f32> = train(&set, &reg, &c).unwrap();
        assert!(e.is_finite());
    }

    #[test]
    fn decay_schedule_endpoints() {
        let c = TrainConfig { n_iter: 100, eta: 1.0, lr_schedule: LrSchedule::LinearDecay, ..cfg() };
        assert_eq!(c.eta_at(0), 1.0);
        assert!((c.eta_at(100) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn checkpoints_fire_on_interval() {
        struct Count(Vec<usize>);
        impl TrainObserver<f32> for Count {
            fn on_checkpoint(&mut self, it: usize, _: &EmbeddingSet<f32>) -> Result<()> {
                self.0.push(it);
                Ok(())
            }
        }
        let (reg, set) = tiny();
        let mut c = Count(vec![]);
        let cfg = TrainConfig { n_iter: 10, checkpoint_every: Some(4), ..cfg() };
        let _ = train_with(&set, &reg, &cfg, &mut c).unwrap();
        assert_eq!(c.0, vec![4, 8]);
    }
}
