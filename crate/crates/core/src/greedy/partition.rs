use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Random split of a candidate list into groups whose sizes differ by at
/// most one. Members of each group are stored in increasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    groups: Vec<Vec<usize>>,
}

impl Partition {
    /// Shuffles `items` and deals them round-robin into `min(p, len)` groups.
    pub fn balanced<R: Rng + ?Sized>(items: &[usize], p: usize, rng: &mut R) -> Result<Self> {
        if p == 0 {
            return Err(Error::Parameter("number of partitions must be at least 1".into()));
        }
        if items.is_empty() {
            return Err(Error::Partition("nothing to partition".into()));
        }
        let p = p.min(items.len());
        let mut order = items.to_vec();
        order.shuffle(rng);
        let mut groups = vec![Vec::with_capacity(items.len() / p + 1); p];
        for (pos, item) in order.into_iter().enumerate() {
            groups[pos % p].push(item);
        }
        for g in &mut groups {
            g.sort_unstable();
        }
        Ok(Self { groups })
    }

    /// A partition with explicitly given groups; none may be empty.
    pub fn from_groups(groups: Vec<Vec<usize>>) -> Result<Self> {
        if groups.is_empty() || groups.iter().any(Vec::is_empty) {
            return Err(Error::Partition("partition groups must be nonempty".into()));
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }
    pub fn len(&self) -> usize {
        self.groups.len()
    }
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// `k` distinct unselected items proposed for joint addition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchCandidate {
    /// Increasing item indices.
    pub items: Vec<usize>,
    pub exact_gain: Option<f64>,
}

/// Draws `s` independent batches, each `k` items sampled without replacement
/// from `remaining`.
pub fn sample_batches<R: Rng + ?Sized>(remaining: &[usize], k: usize, s: usize, rng: &mut R) -> Result<Vec<BatchCandidate>> {
    if k == 0 || s == 0 {
        return Err(Error::Parameter(format!("batch size and count must be positive, got k={k}, s={s}")));
    }
    if remaining.len() < k {
        return Err(Error::BatchSize { k, remaining: remaining.len() });
    }
    Ok((0..s)
        .map(|_| {
            let mut items: Vec<usize> = index::sample(rng, remaining.len(), k).into_iter().map(|q| remaining[q]).collect();
            items.sort_unstable();
            BatchCandidate { items, exact_gain: None }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn balanced_sizes() {
        let items: Vec<usize> = (0..23).collect();
        let part = Partition::balanced(&items, 5, &mut stream(1, Purpose::Partitions, 0)).unwrap();
        let sizes: Vec<usize> = part.groups().iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 23);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = part.groups().concat();
        all.sort_unstable();
        assert_eq!(all, items);
    }

    #[test]
    fn more_groups_than_items() {
        let part = Partition::balanced(&[4, 9], 5, &mut stream(0, Purpose::Partitions, 0)).unwrap();
        assert_eq!(part.len(), 2);
    }

    #[test]
    fn singleton_batches() {
        let remaining = [2, 5, 7];
        let b = sample_batches(&remaining, 1, 50, &mut stream(3, Purpose::Batches, 0)).unwrap();
        assert_eq!(b.len(), 50);
        assert!(b.iter().all(|c| c.items.len() == 1 && remaining.contains(&c.items[0])));
    }

    #[test]
    fn batch_too_large() {
        let err = sample_batches(&[1, 2], 3, 4, &mut stream(0, Purpose::Batches, 0)).unwrap_err();
        assert!(matches!(err, Error::BatchSize { k: 3, remaining: 2 }));
    }
}
