use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity FIFO experience store with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            cursor: 0,
        }
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

    /// Appends, overwriting the oldest entry once full.
    pub fn store(&mut self, transition: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(transition);
        } else {
            self.items[self.cursor] = transition;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Entries from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `k` entries drawn uniformly with replacement.
    pub fn sample(&self, k: usize, rng: &mut RngStream) -> Vec<&Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..k)
            .map(|_| &self.items[rng.index(self.items.len())])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tr(r: f64) -> Transition {
        Transition {
            state: vec![r],
            action: vec![0.0],
            reward: r,
            next_state: vec![r],
            done: false,
        }
    }

    #[test]
    fn evicts_oldest_and_keeps_order() {
        let mut b = ReplayBuffer::new(3);
        for r in 0..4 {
            b.store(tr(r as f64));
        }
        assert_eq!(b.len(), 3);
        let rewards: Vec<f64> = b.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![1.0, 2.0, 3.0]);
        for r in 4..8 {
            b.store(tr(r as f64));
        }
        let rewards: Vec<f64> = b.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![5.0, 6.0, 7.0]);
    }

    #[test]
    fn sample_is_uniform() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let mut b = ReplayBuffer::new(5);
        for r in 0..5 {
            b.store(tr(r as f64));
        }
        let mut rng = RngStream::new(31);
        let mut counts = [0usize; 5];
        let draws = 10_000;
        for t in b.sample(draws, &mut rng) {
            counts[t.reward as usize] += 1;
        }
        let expected = draws as f64 / 5.0;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let p = 1.0 - ChiSquared::new(4.0).unwrap().cdf(stat);
        assert!(p > 0.01, "chi2 {stat}, p {p}");
    }

    #[test]
    fn sample_size_and_empty_buffer() {
        let mut b = ReplayBuffer::new(10);
        assert!(b.sample(4, &mut RngStream::new(0)).is_empty());
        b.store(tr(1.0));
        assert_eq!(b.sample(4, &mut RngStream::new(0)).len(), 4);
    }
}
