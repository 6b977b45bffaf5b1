//! Synthetic fixtures shared by the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbnn::{Matrix, Samples};

/// `n` rows of `d` uniform features with a smooth nonlinear target.
pub fn synthetic(n: usize, d: usize, seed: u64) -> Samples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<f64> = x
        .chunks(d)
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(i, v)| (v * (i + 1) as f64).sin())
                .sum::<f64>()
                + 0.1 * rng.gen_range(-1.0..1.0)
        })
        .collect();
    Samples {
        x: Matrix::new(n, d, x).expect("finite"),
        y: Matrix::new(n, 1, y).expect("finite"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_seeded() {
        let a = synthetic(20, 3, 9);
        assert_eq!(a, synthetic(20, 3, 9));
        assert_ne!(a.y, synthetic(20, 3, 10).y);
        assert_eq!(a.x.shape(), (20, 3));
    }
}
