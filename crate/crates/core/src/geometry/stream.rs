use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Location of one random stream: which task, which split, which instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamPath {
    pub task: u32,
    pub split: u32,
    pub index: u64,
}

impl StreamPath {
    pub const fn new(task: u32, split: u32, index: u64) -> Self {
        StreamPath { task, split, index }
    }
}

/// A seeded random stream. Its state is a pure function of
/// `(master_seed, path)`; streams are never shared between workers.
#[derive(Debug, Clone)]
pub struct RandomStream {
    master_seed: u64,
    path: StreamPath,
    rng: ChaCha8Rng,
}

fn splitmix64(z: u64) -> u64 {
    let mut x = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_stream(master_seed: u64, path: StreamPath) -> RandomStream {
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ u64::from(path.task));
    h = splitmix64(h ^ u64::from(path.split).rotate_left(32));
    h = splitmix64(h ^ path.index);
    let mut seed = [0u8; 32];
    for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
        let w = splitmix64(h.wrapping_add((i as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)));
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    RandomStream { master_seed, path, rng: ChaCha8Rng::from_seed(seed) }
}

impl RandomStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> StreamPath {
        self.path
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    /// Uniform integer in `[0, n)`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn int_inclusive(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.random_range(lo..=hi)
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(rand_distr::StandardNormal)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random_bool(0.5)
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.index(items.len())]
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }

    /// Two distinct elements, in random order.
    pub fn pick_two<T: Copy>(&mut self, items: &[T]) -> (T, T) {
        let i = self.index(items.len());
        let mut j = self.index(items.len() - 1);
        if j >= i {
            j += 1;
        }
        (items[i], items[j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn same_inputs_same_draws() {
        let mut a = derive_stream(42, StreamPath::new(1, 2, 3));
        let mut b = derive_stream(42, StreamPath::new(1, 2, 3));
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_master_seeds_differ() {
        let mut a = derive_stream(1, StreamPath::new(0, 0, 0));
        let mut b = derive_stream(2, StreamPath::new(0, 0, 0));
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn adjacent_paths_do_not_collide() {
        let mut seen = HashSet::new();
        for t in 0..2u32 {
            for s in 0..3u32 {
                for i in 0..(100_000 / 6) as u64 {
                    let first = derive_stream(9, StreamPath::new(t, s, i)).next_u64();
                    assert!(seen.insert(first), "collision at {t} {s} {i}");
                }
            }
        }
    }

    #[test]
    fn pick_two_is_distinct() {
        let mut s = derive_stream(0, StreamPath::new(0, 0, 0));
        for _ in 0..1000 {
            let (a, b) = s.pick_two(&[1, 2, 3]);
            assert_ne!(a, b);
        }
    }
}
