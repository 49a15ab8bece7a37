use rand::Rng;

/// One transition `(o, a, r, o′)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
}

/// Fixed-capacity FIFO store; the oldest transition is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        }
    }

    pub fn push(&mut self, exp: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(exp);
        } else {
            self.items[self.cursor] = exp;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stored transitions from oldest to newest.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &Experience> {
        let split = if self.items.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// Uniform sampling with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        assert!(!self.items.is_empty(), "sampling from an empty buffer");
        (0..n).map(|_| rng.gen_range(0..self.items.len())).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Experience> {
        self.sample_indices(n, rng)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn exp(i: usize) -> Experience {
        Experience {
            obs: vec![i as f64],
            action: vec![],
            reward: i as f64,
            next_obs: vec![],
        }
    }

    #[test]
    fn keeps_most_recent_capacity() {
        let mut b = ReplayBuffer::new(5);
        for i in 0..3 {
            b.push(exp(i));
        }
        assert_eq!(
            b.iter_oldest_first().map(|e| e.reward).collect::<Vec<_>>(),
            vec![0.0, 1.0, 2.0]
        );
        for i in 3..13 {
            b.push(exp(i));
        }
        assert_eq!(b.len(), 5);
        assert_eq!(
            b.iter_oldest_first().map(|e| e.reward).collect::<Vec<_>>(),
            vec![8.0, 9.0, 10.0, 11.0, 12.0]
        );
    }

    #[test]
    fn sampling_is_reproducible() {
        let mut b = ReplayBuffer::new(10);
        (0..10).for_each(|i| b.push(exp(i)));
        assert_eq!(
            b.sample_indices(20, &mut seeded_rng(1, 0)),
            b.sample_indices(20, &mut seeded_rng(1, 0))
        );
    }
}
