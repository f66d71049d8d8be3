//! Vector-set lower bound.

use crate::belief::Belief;
use crate::model::PomdpModel;
use crate::par::Execution;

/// A linear function over beliefs, tagged with the action whose backup
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    pub values: Vec<f64>,
    pub action: usize,
}

impl AlphaVector {
    pub fn new(values: Vec<f64>, action: usize) -> Self {
        AlphaVector { values, action }
    }

    pub fn dot(&self, b: &Belief) -> f64 {
        b.dot(&self.values)
    }

    /// `self >= other` in every component.
    pub fn dominates(&self, other: &AlphaVector) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a >= b)
    }
}

/// `max_{alpha in Gamma} alpha . b` over a non-empty set of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    num_states: usize,
    vectors: Vec<AlphaVector>,
    size_at_last_prune: usize,
}

impl LowerBound {
    /// Panics if `vectors` is empty or lengths disagree with `num_states`.
    pub fn new(num_states: usize, vectors: Vec<AlphaVector>) -> Self {
        assert!(!vectors.is_empty(), "lower bound needs at least one vector");
        assert!(vectors.iter().all(|v| v.values.len() == num_states));
        let size_at_last_prune = vectors.len();
        LowerBound {
            num_states,
            vectors,
            size_at_last_prune,
        }
    }

    /// Blind-policy initialization: the single constant vector
    /// `max_a min_s R(s, a) / (1 - gamma)`, tagged with the maximizing action.
    pub fn blind(model: &PomdpModel) -> Self {
        let (action, worst) = (0..model.num_actions())
            .map(|a| {
                let min = model
                    .reward_column(a)
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                (a, min)
            })
            .fold((0, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best });
        let value = worst / (1.0 - model.discount());
        let ns = model.num_states();
        LowerBound::new(ns, vec![AlphaVector::new(vec![value; ns], action)])
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn vectors(&self) -> &[AlphaVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Index and value of the maximizing vector at `b`, lowest index on ties.
    pub fn best(&self, b: &Belief) -> (usize, f64) {
        let mut best = (0, self.vectors[0].dot(b));
        for (i, v) in self.vectors.iter().enumerate().skip(1) {
            let x = v.dot(b);
            if x > best.1 {
                best = (i, x);
            }
        }
        best
    }

    pub fn value(&self, b: &Belief) -> f64 {
        self.best(b).1
    }

    /// Action tag of the maximizing vector at `b`.
    pub fn action(&self, b: &Belief) -> usize {
        self.vectors[self.best(b).0].action
    }

    /// Gradient backup at `b`.
    ///
    /// For each action the successor vectors are chosen by maximizing at
    /// each posterior; an observation impossible under `b` reuses the
    /// vector chosen for the first possible one. The returned vector `beta`
    /// satisfies `beta . b = max_a Q(b, a)` for this bound.
    pub fn backup(&self, model: &PomdpModel, b: &Belief) -> AlphaVector {
        let ns = model.num_states();
        let no = model.num_observations();
        let gamma = model.discount();
        let mut best: Option<(f64, AlphaVector)> = None;
        let mut chosen = vec![0usize; no];
        let mut future = vec![0.0; ns];
        for a in 0..model.num_actions() {
            let successors = model.successors(b, a);
            let mut fallback = None;
            let mut possible = vec![false; no];
            for succ in &successors {
                let idx = self.best(&succ.belief).0;
                chosen[succ.observation] = idx;
                possible[succ.observation] = true;
                fallback.get_or_insert(idx);
            }
            let fallback = fallback.unwrap_or(0);
            for (o, c) in chosen.iter_mut().enumerate() {
                if !possible[o] {
                    *c = fallback;
                }
            }
            for (next, f) in future.iter_mut().enumerate() {
                *f = model
                    .observation_row(a, next)
                    .iter()
                    .zip(&chosen)
                    .map(|(&p, &idx)| if p > 0.0 { p * self.vectors[idx].values[next] } else { 0.0 })
                    .sum();
            }
            let rewards = model.reward_column(a);
            let values: Vec<f64> = (0..ns)
                .map(|s| {
                    let cont: f64 = model
                        .transition_row(a, s)
                        .iter()
                        .map(|&(n, p)| p * future[n])
                        .sum();
                    rewards[s] + gamma * cont
                })
                .collect();
            let candidate = AlphaVector::new(values, a);
            let score = candidate.dot(b);
            if best.as_ref().is_none_or(|(x, _)| score > *x) {
                best = Some((score, candidate));
            }
        }
        best.expect("model has at least one action").1
    }

    pub fn insert(&mut self, alpha: AlphaVector) {
        debug_assert_eq!(alpha.values.len(), self.num_states);
        self.vectors.push(alpha);
    }

    /// True once the set has grown by 10% since the last prune.
    pub fn needs_prune(&self) -> bool {
        self.vectors.len() * 10 >= self.size_at_last_prune * 11
    }

    /// Removes pointwise-dominated vectors; of several identical vectors the
    /// earliest survives. The represented function is unchanged. Returns
    /// the number of vectors removed.
    pub fn prune(&mut self, exec: Execution) -> usize {
        let vectors = &self.vectors;
        let keep = exec.map_range(vectors.len(), |i| {
            let v = &vectors[i];
            !vectors.iter().enumerate().any(|(j, w)| {
                j != i && w.dominates(v) && (j < i || w.values != v.values)
            })
        });
        let before = self.vectors.len();
        let mut flags = keep.into_iter();
        self.vectors.retain(|_| flags.next().unwrap_or(true));
        self.size_at_last_prune = self.vectors.len();
        before - self.vectors.len()
    }
}
