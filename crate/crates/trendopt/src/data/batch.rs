//! Seed-deterministic minibatch index streams.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::util::derive_seed;

/// Yields minibatch index slices, visiting every sample exactly once per
/// epoch in a seed-determined shuffle. The final short batch is retained.
#[derive(Debug, Clone)]
pub struct BatchStream {
    order: Vec<usize>,
    batch_size: usize,
    seed: u64,
    epoch: u64,
    cursor: usize,
}

impl BatchStream {
    pub fn new(samples: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if samples == 0 || batch_size == 0 {
            return Err(Error::InvalidArgument(
                "samples and batch_size must be at least 1".into(),
            ));
        }
        let mut stream = Self {
            order: (0..samples).collect(),
            batch_size,
            seed,
            epoch: 0,
            cursor: 0,
        };
        stream.shuffle_epoch();
        Ok(stream)
    }

    /// Completed plus current epoch index (0-based).
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Number of batches one epoch yields (the last may be short).
    pub fn batches_per_epoch(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }

    /// Next index slice; rolls over into a freshly shuffled epoch when the
    /// current one is exhausted.
    pub fn next_batch(&mut self) -> &[usize] {
        if self.cursor >= self.order.len() {
            self.epoch += 1;
            self.cursor = 0;
            self.shuffle_epoch();
        }
        let start = self.cursor;
        let end = (start + self.batch_size).min(self.order.len());
        self.cursor = end;
        &self.order[start..end]
    }

    fn shuffle_epoch(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, self.epoch));
        self.order.shuffle(&mut rng);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_streams_agree() {
        let mut a = BatchStream::new(37, 8, 5).unwrap();
        let mut b = BatchStream::new(37, 8, 5).unwrap();
        for _ in 0..20 {
            assert_eq!(a.next_batch(), b.next_batch());
        }
    }

    #[test]
    fn epoch_covers_every_index_once() {
        let mut stream = BatchStream::new(103, 10, 1).unwrap();
        for epoch in 0..3 {
            let mut seen = vec![0usize; 103];
            for _ in 0..stream.batches_per_epoch() {
                for &i in stream.next_batch() {
                    seen[i] += 1;
                }
                assert_eq!(stream.epoch(), epoch);
            }
            assert!(seen.iter().all(|&c| c == 1), "epoch {epoch} multiset wrong");
        }
    }

    #[test]
    fn batch_count_and_final_short_batch() {
        let mut stream = BatchStream::new(1000, 128, 0).unwrap();
        assert_eq!(stream.batches_per_epoch(), 8);
        let mut sizes = Vec::new();
        for _ in 0..8 {
            sizes.push(stream.next_batch().len());
        }
        assert_eq!(sizes[..7], [128; 7]);
        assert_eq!(sizes[7], 104);
    }

    #[test]
    fn epochs_reshuffle() {
        let mut stream = BatchStream::new(64, 64, 9).unwrap();
        let first: Vec<usize> = stream.next_batch().to_vec();
        let second: Vec<usize> = stream.next_batch().to_vec();
        assert_ne!(first, second);
        let mut sorted = second.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..64).collect::<Vec<_>>());
    }
}
