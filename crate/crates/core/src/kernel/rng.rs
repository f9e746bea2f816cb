use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded random stream owned by exactly one execution strand.
///
/// Same seed, same sequence. Implements [`RngCore`], so the whole `rand`
/// API is available on top of the helpers below.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
    seed: u64,
}

impl SimRng {
    pub fn seed_from(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    /// The seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn coin(&mut self) -> bool {
        self.inner.random_bool(0.5)
    }

    pub fn bits(&mut self, len: usize) -> Vec<bool> {
        (0..len).map(|_| self.coin()).collect()
    }

    /// Index in `0..n` drawn with probability proportional to `weights[i]`.
    pub fn weighted_index(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.uniform() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        // rounding left u just past the last bucket
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }

    /// Uniformly random `amount`-subset of `0..len`, sorted ascending.
    pub fn subset(&mut self, len: usize, amount: usize) -> Vec<usize> {
        let mut picked = index::sample(&mut self.inner, len, amount).into_vec();
        picked.sort_unstable();
        picked
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Stable 64-bit mix of a master seed and a stream index (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(master ^ splitmix(index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SimRng::seed_from(7);
        let mut b = SimRng::seed_from(7);
        let xs: Vec<u64> = (0..32).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..32).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn subset_is_sorted_and_distinct() {
        let mut rng = SimRng::seed_from(1);
        for _ in 0..100 {
            let s = rng.subset(10, 4);
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&i| i < 10));
        }
    }

    #[test]
    fn weighted_index_respects_point_mass() {
        let mut rng = SimRng::seed_from(3);
        for _ in 0..1000 {
            assert_eq!(rng.weighted_index(&[0.0, 0.0, 1.0, 0.0]), 2);
        }
    }

    #[test]
    fn derived_seeds_differ_per_index() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(derive_seed(42, 5), derive_seed(42, 5));
    }
}
