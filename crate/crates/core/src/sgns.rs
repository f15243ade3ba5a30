//! Skip-gram negative-sampling objective and its SGD updates.
//!
//! For a sampled pair `(p, q)` and negatives `n_1..n_k`:
//!
//! ```text
//! loss = -ln σ(v_p·v_q) - Σ_i ln σ(-v_p·v_{n_i})
//! ```
//!
//! Each update applies both assignments of its pair from the pre-update
//! vectors, which is exactly a gradient step on the corresponding loss term.

use crate::embedding::Scalar;

/// Dot products are clipped to this magnitude before exponentiation.
pub const MAX_EXP: f64 = 30.0;

/// Floor applied to σ inside the logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-MAX_EXP, MAX_EXP);
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Negative log-likelihood of one positive pair and its negatives. Always >= 0.
pub fn loss<F: Scalar>(v_p: &[F], v_q: &[F], negatives: &[&[F]]) -> f64 {
    let pos = -sigmoid(dot(v_p, v_q).as_f64()).max(LOG_FLOOR).ln();
    let neg: f64 = negatives.iter().map(|v_n| -sigmoid(-dot(v_p, v_n).as_f64()).max(LOG_FLOOR).ln()).sum();
    pos + neg
}

/// Simultaneous update of both vectors by `-scale * other`.
#[inline]
fn step<F: Scalar>(a: &mut [F], b: &mut [F], scale: F) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (x0, y0) = (*x, *y);
        *x = x0 - scale * y0;
        *y = y0 - scale * x0;
    }
}

/// Positive-pair update: `g = σ(v_p·v_q) - 1`, then
/// `v_q -= η α g v_p` and `v_p -= η α g v_q`.
pub fn update_positive<F: Scalar>(v_p: &mut [F], v_q: &mut [F], eta: f64, alpha: f64) {
    if alpha == 0.0 {
        return;
    }
    let g = sigmoid(dot(v_p, v_q).as_f64()) - 1.0;
    step(v_p, v_q, F::of(eta * alpha * g));
}

/// Negative-pair update: `g = σ(v_p·v_neg)`, then
/// `v_neg -= η α g v_p` and `v_p -= η α g v_neg`.
pub fn update_negative<F: Scalar>(v_p: &mut [F], v_neg: &mut [F], eta: f64, alpha: f64) {
    if alpha == 0.0 {
        return;
    }
    let g = sigmoid(dot(v_p, v_neg).as_f64());
    step(v_p, v_neg, F::of(eta * alpha * g));
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn loss_at_zero_dot() {
        assert!((loss::<f64>(&[0.0, 0.0], &[1.0, 1.0], &[]) - LN2).abs() < 1e-12);
    }

    #[test]
    fn loss_vanishes_for_large_dot() {
        assert!(loss::<f64>(&[100.0], &[100.0], &[]) < 1e-12);
    }

    #[test]
    fn loss_with_one_negative() {
        let neg: &[f64] = &[1.0, 0.0];
        let l = loss::<f64>(&[1.0, 0.0], &[0.0, 1.0], &[neg]);
        let expected = LN2 + (1.0 + 1f64.exp()).ln();
        assert!((l - expected).abs() < 1e-12, "{l} vs {expected}");
        assert!((l - 2.006409).abs() < 1e-6);
    }

    #[test]
    fn loss_is_clamped() {
        let l = loss::<f64>(&[1e6], &[-1e6], &[]);
        assert!(l.is_finite() && l > 0.0);
    }

    #[test]
    fn positive_update_example() {
        let (mut p, mut q) = ([1.0f64, 0.0], [0.0f64, 1.0]);
        update_positive(&mut p, &mut q, 1.0, 1.0);
        assert_eq!(q, [0.5, 1.0]);
        assert_eq!(p, [1.0, 0.5]);
    }

    #[test]
    fn negative_update_example() {
        let (mut p, mut n) = ([1.0f64, 0.0], [0.0f64, 1.0]);
        update_negative(&mut p, &mut n, 1.0, 1.0);
        assert_eq!(n, [-0.5, 1.0]);
        assert_eq!(p, [1.0, -0.5]);
    }

    #[test]
    fn zero_alpha_is_a_no_op() {
        let (mut p, mut q) = ([0.3f32, -0.2], [0.1f32, 0.7]);
        update_positive(&mut p, &mut q, 0.5, 0.0);
        update_negative(&mut p, &mut q, 0.5, 0.0);
        assert_eq!((p, q), ([0.3, -0.2], [0.1, 0.7]));
    }

    #[test]
    fn negative_update_lowers_dot() {
        let (mut p, mut n) = ([0.4f64, 0.3, -0.1], [0.2f64, 0.5, 0.3]);
        let before = dot(&p, &n);
        update_negative(&mut p, &mut n, 1e-3, 1.0);
        assert!(dot(&p, &n) < before);
    }

    #[test]
    fn update_directions_are_parallel() {
        let (p0, q0) = ([0.3f64, -0.7, 0.2], [0.5f64, 0.1, -0.4]);
        let (mut p, mut q) = (p0, q0);
        update_positive(&mut p, &mut q, 0.1, 0.8);
        let dp: Vec<f64> = p.iter().zip(&p0).map(|(a, b)| a - b).collect();
        let dq: Vec<f64> = q.iter().zip(&q0).map(|(a, b)| a - b).collect();
        let cross =
            |a: &[f64], b: &[f64]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        assert!(cross(&dp, &q0).iter().all(|c| c.abs() < 1e-15));
        assert!(cross(&dq, &p0).iter().all(|c| c.abs() < 1e-15));
    }
}
