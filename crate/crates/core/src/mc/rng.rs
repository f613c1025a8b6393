use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Gaussian increments of one path. Each path owns the ChaCha stream
/// selected by its index, so results do not depend on scheduling.
/// Antithetic pairs `(2j, 2j + 1)` share stream `j` with opposite signs.
pub struct NoiseStream {
    rng: ChaCha8Rng,
    sign: f64,
}

impl NoiseStream {
    pub fn new(seed: u64, path: usize, antithetic: bool) -> Self {
        let (stream, sign) = if antithetic { (path / 2, if path.is_multiple_of(2) { 1.0 } else { -1.0 }) } else { (path, 1.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        NoiseStream { rng, sign }
    }

    pub fn next_normal(&mut self) -> f64 {
        let e: f64 = StandardNormal.sample(&mut self.rng);
        self.sign * e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = (0..5).scan(NoiseStream::new(7, 3, false), |s, _| Some(s.next_normal())).collect();
        let b: Vec<f64> = (0..5).scan(NoiseStream::new(7, 3, false), |s, _| Some(s.next_normal())).collect();
        let c: Vec<f64> = (0..5).scan(NoiseStream::new(7, 4, false), |s, _| Some(s.next_normal())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn antithetic_pairs_mirror() {
        let mut even = NoiseStream::new(1, 10, true);
        let mut odd = NoiseStream::new(1, 11, true);
        for _ in 0..10 {
            assert_eq!(even.next_normal(), -odd.next_normal());
        }
    }
}
