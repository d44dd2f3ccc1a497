use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::ManifestEntry;

/// Splits `0..n` into consecutive batches of `batch_size` (the last may be
/// short). With `shuffle`, the order is a Fisher–Yates permutation drawn
/// from `seed`.
///
/// # Panics
/// If `batch_size` is zero.
pub fn batches(n: usize, batch_size: usize, seed: u64, shuffle: bool) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch size must be at least 1");
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

/// Seeded stratified split: per class, `round(n · test_fraction)` entries go
/// to the test side. Entries keep their relative order on both sides.
pub fn stratified_split(
    entries: &[ManifestEntry],
    test_fraction: f64,
    seed: u64,
) -> (Vec<ManifestEntry>, Vec<ManifestEntry>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; entries.len()];
    for class in super::Emotion::ALL {
        let mut idx: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].label == class).collect();
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        for &i in idx.iter().take(n_test) {
            is_test[i] = true;
        }
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (e, t) in entries.iter().zip(is_test) {
        if t {
            test.push(e.clone());
        } else {
            train.push(e.clone());
        }
    }
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_test_count_batches() {
        let b = batches(1580, 100, 0, true);
        assert_eq!(b.len(), 16);
        assert_eq!(b.last().unwrap().len(), 80);
    }

    #[test]
    fn unshuffled_is_identity() {
        let b = batches(7, 3, 99, false);
        assert_eq!(b, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6]]);
    }

    #[test]
    fn same_seed_same_order() {
        assert_eq!(batches(50, 8, 5, true), batches(50, 8, 5, true));
        assert_ne!(batches(50, 8, 5, true), batches(50, 8, 6, true));
    }

    #[test]
    fn oversized_batch() {
        assert_eq!(batches(3, 10, 1, false), vec![vec![0, 1, 2]]);
        assert!(batches(0, 10, 1, true).is_empty());
    }
}
