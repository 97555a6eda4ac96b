use alloc::vec::Vec;

use super::{DenseMatrix, Prng};

/// `fan_in x fan_out` weights drawn uniformly from `[-L, L]` with
/// `L = sqrt(6 / (fan_in + fan_out))`, row-major from `rng`.
///
/// Panics if either fan is zero.
pub fn glorot_uniform(fan_in: usize, fan_out: usize, rng: &mut Prng) -> DenseMatrix {
    assert!(fan_in >= 1 && fan_out >= 1, "glorot_uniform: fans must be >= 1");
    let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    let data: Vec<f64> = (0..fan_in * fan_out).map(|_| rng.uniform(-limit, limit)).collect();
    DenseMatrix::new(fan_in, fan_out, data).expect("finite by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_five_by_fifty() {
        let w = glorot_uniform(5, 50, &mut Prng::new(1));
        let limit = (6.0f64 / 55.0).sqrt();
        assert!((limit - 0.330289).abs() < 1e-6);
        assert_eq!(w.shape(), (5, 50));
        assert!(w.data().iter().all(|v| v.abs() <= limit));
        // 250 draws should come close to both ends of the interval.
        let max = w.data().iter().cloned().fold(f64::MIN, f64::max);
        assert!(max > 0.8 * limit);
    }

    #[test]
    fn bound_one_by_one() {
        let mut rng = Prng::new(2);
        for _ in 0..1000 {
            let w = glorot_uniform(1, 1, &mut rng);
            assert!(w.get(0, 0).abs() <= 3f64.sqrt());
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(glorot_uniform(4, 7, &mut Prng::new(11)), glorot_uniform(4, 7, &mut Prng::new(11)));
    }
}
