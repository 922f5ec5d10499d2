//! Euclidean projection onto the roll-off feasible set
//! `{x : 0 ≤ x ≤ 1, x nondecreasing, Σx = c}`.

/// Pool-adjacent-violators: least-squares nondecreasing fit.
pub fn isotonic(x: &[f64]) -> Vec<f64> {
    // (mean, weight) blocks
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(x.len());
    for &v in x {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (b, wb) = blocks[blocks.len() - 1];
            let (a, wa) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let w = wa + wb;
            *blocks.last_mut().unwrap() = ((a * wa as f64 + b * wb as f64) / w as f64, w);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, w)| std::iter::repeat_n(v, w))
        .collect()
}

/// Project `x` onto the feasible set with total `sum`. Requires
/// `0 ≤ sum ≤ x.len()`.
pub fn project_feasible(x: &[f64], sum: f64) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let v = isotonic(x);
    let total = |lam: f64| v.iter().map(|&t| (t - lam).clamp(0.0, 1.0)).sum::<f64>();
    // total is nonincreasing in λ, from len at lo down to 0 at hi
    let mut lo = v[0] - 1.0;
    let mut hi = v[v.len() - 1];
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > sum {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    let mut out: Vec<f64> = v.iter().map(|&t| (t - lam).clamp(0.0, 1.0)).collect();
    // absorb the last rounding error into the interior entries
    let interior: Vec<usize> = (0..out.len()).filter(|&i| out[i] > 0.0 && out[i] < 1.0).collect();
    if !interior.is_empty() {
        let err = (sum - out.iter().sum::<f64>()) / interior.len() as f64;
        for i in interior {
            out[i] = (out[i] + err).clamp(0.0, 1.0);
        }
    }
    out
}

/// Largest violation of the feasible-set constraints.
pub fn max_violation(x: &[f64], sum: f64) -> f64 {
    let mut worst = (x.iter().sum::<f64>() - sum).abs();
    for (i, &v) in x.iter().enumerate() {
        worst = worst.max(-v).max(v - 1.0);
        if i > 0 {
            worst = worst.max(x[i - 1] - v);
        }
    }
    worst.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pava_examples() {
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(isotonic(&[]), Vec::<f64>::new());
    }

    #[test]
    fn feasible_point_is_fixed() {
        let x = [0.0, 0.1, 0.5, 0.9, 1.0];
        let p = project_feasible(&x, 2.5);
        for (a, b) in p.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn projection_is_feasible(x in proptest::collection::vec(-2.0f64..3.0, 1..40), frac in 0.0f64..=1.0) {
            let sum = frac * x.len() as f64;
            let p = project_feasible(&x, sum);
            prop_assert!(max_violation(&p, sum) <= 1e-12);
        }

        #[test]
        fn projection_is_closest(x in proptest::collection::vec(-1.0f64..2.0, 2..12), seed in any::<u64>()) {
            // any other feasible point must be at least as far
            let sum = x.len() as f64 / 2.0;
            let p = project_feasible(&x, sum);
            let dist = |y: &[f64]| y.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let mut rng = crate::rng::stream(seed, 0);
            for _ in 0..20 {
                let other: Vec<f64> = (0..x.len()).map(|_| rand::Rng::random_range(&mut rng, -1.0..2.0)).collect();
                let q = project_feasible(&other, sum);
                prop_assert!(dist(&p) <= dist(&q) + 1e-9);
            }
        }
    }
}
