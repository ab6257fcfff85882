use crate::engine::NUM_ACTIONS;

use super::softmax;

/// Weight of the value term; the policy term gets `1 - alpha`.
pub const DEFAULT_ALPHA: f32 = 0.1;
/// Lower bound applied to probabilities before taking the logarithm.
pub const P_CLAMP: f32 = 1e-12;

/// `alpha * (z - v)^2 - (1 - alpha) * sum_a pi_a * ln(max(p_a, 1e-12))`.
pub fn loss(p: &[f32; NUM_ACTIONS], v: f32, pi: &[f32; NUM_ACTIONS], z: f32, alpha: f32) -> f32 {
    let value = (z - v) * (z - v);
    let ce: f32 = pi.iter().zip(p).map(|(t, q)| t * q.max(P_CLAMP).ln()).sum();
    alpha * value - (1.0 - alpha) * ce
}

/// Loss as a function of the raw head outputs (policy logits and the value
/// pre-activation) together with its gradient with respect to them.
///
/// Returns `(loss, d_logits, d_value_pre)`. The clamp is ignored in the
/// gradient, which is exact as long as no probability underflows it.
pub fn loss_and_grad(
    logits: &[f32; NUM_ACTIONS],
    value_pre: f32,
    pi: &[f32; NUM_ACTIONS],
    z: f32,
    alpha: f32,
) -> (f32, [f32; NUM_ACTIONS], f32) {
    let p = softmax(logits);
    let v = value_pre.tanh();
    let l = loss(&p, v, pi, z, alpha);
    let mass: f32 = pi.iter().sum();
    let mut d_logits = [0.0; NUM_ACTIONS];
    for a in 0..NUM_ACTIONS {
        d_logits[a] = (1.0 - alpha) * (p[a] * mass - pi[a]);
    }
    let d_v = -2.0 * alpha * (z - v) * (1.0 - v * v);
    (l, d_logits, d_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn value_only_zero_when_exact() {
        let p = [1.0 / 6.0; 6];
        let pi = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(loss(&p, 0.3, &pi, 0.3, 1.0), 0.0);
    }

    #[test]
    fn hand_evaluated_example() {
        let p = [1.0 / 6.0; 6];
        let pi = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let oracle = 0.1 * 1.0 + 0.9 * 6f64.ln();
        let l = loss(&p, 0.0, &pi, 1.0, DEFAULT_ALPHA);
        assert!((l as f64 - oracle).abs() < 1e-6);
        assert!((l - 1.712583).abs() < 1e-5);
    }

    #[test]
    fn zero_probability_is_clamped() {
        let p = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let pi = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let l = loss(&p, 0.0, &pi, 0.0, 0.0);
        assert!(l.is_finite());
        assert!((l + (1e-12f32).ln()).abs() < 1e-3);
    }

    #[test]
    fn terms_are_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let logits: [f32; 6] = std::array::from_fn(|_| rng.gen_range(-5.0..5.0));
            let mut pi: [f32; 6] = std::array::from_fn(|_| rng.gen::<f32>());
            let s: f32 = pi.iter().sum();
            pi.iter_mut().for_each(|x| *x /= s);
            let v = rng.gen_range(-1.0f32..1.0);
            let z = [-1.0, 0.0, 1.0][rng.gen_range(0..3)];
            let alpha = rng.gen::<f32>();
            assert!(loss(&softmax(&logits), v, &pi, z, alpha) >= 0.0);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // f64 oracle of the same expression
        let f = |lg: &[f64; 6], u: f64, pi: &[f64; 6], z: f64, alpha: f64| {
            let m = lg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = lg.iter().map(|l| (l - m).exp()).sum();
            let ce: f64 = (0..6).map(|a| pi[a] * ((lg[a] - m) - s.ln())).sum();
            alpha * (z - u.tanh()).powi(2) - (1.0 - alpha) * ce
        };
        for _ in 0..10 {
            let lg32: [f32; 6] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let u32_: f32 = rng.gen_range(-1.5..1.5);
            let mut pi32: [f32; 6] = std::array::from_fn(|_| rng.gen::<f32>());
            let s: f32 = pi32.iter().sum();
            pi32.iter_mut().for_each(|x| *x /= s);
            let z = [-1.0f32, 0.0, 1.0][rng.gen_range(0..3)];
            let alpha = rng.gen_range(0.05f32..0.95);

            let (_, g, gv) = loss_and_grad(&lg32, u32_, &pi32, z, alpha);
            let lg = lg32.map(f64::from);
            let pi = pi32.map(f64::from);
            let (z, alpha, u) = (z as f64, alpha as f64, u32_ as f64);
            let h = 1e-5;
            for a in 0..6 {
                let (mut up, mut dn) = (lg, lg);
                up[a] += h;
                dn[a] -= h;
                let num = (f(&up, u, &pi, z, alpha) - f(&dn, u, &pi, z, alpha)) / (2.0 * h);
                let rel = (g[a] as f64 - num).abs() / num.abs().max(1e-3);
                assert!(rel < 1e-4, "logit {a}: {} vs {num}", g[a]);
            }
            let num = (f(&lg, u + h, &pi, z, alpha) - f(&lg, u - h, &pi, z, alpha)) / (2.0 * h);
            let rel = (gv as f64 - num).abs() / num.abs().max(1e-3);
            assert!(rel < 1e-4, "value: {gv} vs {num}");
        }
    }

    #[test]
    fn alpha_extremes_zero_one_head() {
        let lg = [0.3, -0.2, 0.1, 0.0, 0.5, -1.0];
        let pi = [0.2, 0.2, 0.2, 0.2, 0.1, 0.1];
        let (_, _, gv) = loss_and_grad(&lg, 0.4, &pi, 1.0, 0.0);
        assert_eq!(gv, 0.0);
        let (_, g, _) = loss_and_grad(&lg, 0.4, &pi, 1.0, 1.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }
}
