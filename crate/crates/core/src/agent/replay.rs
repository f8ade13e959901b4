//! Bounded transition store with uniform sampling.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;

use crate::env::Observation;

/// One allocation step. Observations are kept raw so the feature pipeline
/// (and its shuffling) runs again every time the transition is replayed.
#[derive(Clone, Debug)]
pub struct Transition {
    pub state: Arc<Observation>,
    pub action: usize,
    /// `base_reward + bonus`.
    pub reward: f64,
    pub base_reward: f64,
    pub bonus: f64,
    pub episode: u64,
    pub next_state: Arc<Observation>,
    pub terminal: bool,
}

#[derive(Clone, Debug)]
pub struct ReplayMemory {
    capacity: usize,
    items: Vec<Transition>,
    /// Slot the next push overwrites once full.
    next: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, index: usize) -> &Transition {
        &self.items[index]
    }

    /// Stored transitions in storage order (not insertion order once wrapped).
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Storage indices of a uniform batch drawn without replacement, or
    /// `None` while fewer than `batch` transitions are stored.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Option<Vec<usize>> {
        if batch == 0 || self.items.len() < batch {
            return None;
        }
        Some(sample(rng, self.items.len(), batch).into_vec())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        self.sample_indices(batch, rng)
            .map(|idx| idx.into_iter().map(|i| &self.items[i]).collect())
    }
}
