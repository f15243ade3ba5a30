//! Lloyd's k-means with k-means++ seeding and best-of-n restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::Partition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, n_init: 10, max_iter: 300, seed }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub partition: Partition,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares.
    pub inertia: f64,
    /// Objective after each assignment step of the winning restart.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kmeans(points: &[Vec<f64>], config: &KMeansConfig) -> Result<KMeansResult> {
    let n = points.len();
    let k = config.k;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds the {n} points")));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument("points have differing dimensions".into()));
    }
    let restarts = config.n_init.max(1);
    let runs: Vec<KMeansResult> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let seed = config.seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(r as u64);
            lloyd(points, k, config.max_iter, &mut ChaCha8Rng::seed_from_u64(seed))
        })
        .collect();
    // Lowest inertia wins; earlier restart on ties.
    let best = runs
        .into_iter()
        .reduce(|best, r| if r.inertia < best.inertia { r } else { best })
        .expect("at least one restart");
    Ok(best)
}

fn plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centroids.push(points[next].clone());
        let c = centroids.last().expect("just pushed");
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centroids
}

fn lloyd<R: Rng>(points: &[Vec<f64>], k: usize, max_iter: usize, rng: &mut R) -> KMeansResult {
    let n = points.len();
    let dim = points[0].len();
    let mut centroids = plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut inertia = 0.0;
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut dists = vec![0.0; n];
        for (i, p) in points.iter().enumerate() {
            let (best, d) = centroids
                .iter()
                .enumerate()
                .map(|(c, ctr)| (c, sq_dist(p, ctr)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
            dists[i] = d;
        }
        // Empty clusters take the point currently farthest from its centroid.
        let mut sizes = vec![0usize; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .expect("k <= n leaves a donor cluster");
            sizes[labels[far]] -= 1;
            labels[far] = c;
            sizes[c] = 1;
            dists[far] = 0.0;
            changed = true;
        }
        inertia = dists.iter().sum();
        history.push(inertia);

        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in points.iter().zip(&labels) {
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for (c, s) in sums.into_iter().enumerate() {
            centroids[c] = s.into_iter().map(|x| x / sizes[c] as f64).collect();
        }
        if !changed {
            break;
        }
    }
    // Objective against the final centroids.
    inertia = inertia.min(points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centroids[l])).sum());
    KMeansResult { partition: Partition::new(labels, k), centroids, inertia, history }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::nmi;
    use rand_distr_free_normal as normal;

    // Box-Muller; keeps the test free of an extra distribution crate.
    mod rand_distr_free_normal {
        use rand::Rng;
        pub fn sample<R: Rng>(rng: &mut R) -> f64 {
            let u1: f64 = rng.gen::<f64>().max(1e-300);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }

    #[test]
    fn k_equals_n() {
        let pts = vec![vec![0.0], vec![1.0], vec![5.0]];
        let r = kmeans(&pts, &KMeansConfig::new(3, 0)).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut l = r.partition.labels().to_vec();
        l.sort();
        l.dedup();
        assert_eq!(l.len(), 3);
    }

    #[test]
    fn k_one_uses_mean() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 4.0], vec![4.0, 2.0]];
        let r = kmeans(&pts, &KMeansConfig::new(1, 0)).unwrap();
        assert_eq!(r.centroids[0], vec![2.0, 2.0]);
        assert!(r.partition.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn too_many_clusters() {
        assert!(kmeans(&[vec![0.0]], &KMeansConfig::new(2, 0)).is_err());
    }

    #[test]
    fn separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (label, center) in [(0usize, 0.0), (1, 10.0)] {
            for _ in 0..50 {
                pts.push(vec![center + normal::sample(&mut rng), center + normal::sample(&mut rng)]);
                truth.push(label);
            }
        }
        let r = kmeans(&pts, &KMeansConfig::new(2, 1)).unwrap();
        assert_eq!(nmi(&r.partition, &Partition::from_labels(truth)).unwrap(), 1.0);
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
        for seed in 0..5 {
            let r = kmeans(&pts, &KMeansConfig { n_init: 1, ..KMeansConfig::new(6, seed) }).unwrap();
            for w in r.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", r.history);
            }
        }
    }

    #[test]
    fn clusters_are_nonempty_and_deterministic() {
        let pts: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 3) as f64, 0.0]).collect();
        let a = kmeans(&pts, &KMeansConfig::new(5, 3)).unwrap();
        let b = kmeans(&pts, &KMeansConfig::new(5, 3)).unwrap();
        assert_eq!(a.partition, b.partition);
        let mut sizes = vec![0; 5];
        a.partition.labels().iter().for_each(|&l| sizes[l] += 1);
        assert!(sizes.iter().all(|&s| s > 0));
    }
}
