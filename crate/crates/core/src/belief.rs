//! Sparse probability distributions over states.

use std::fmt;

use thiserror::Error;

/// Mass below which a state is dropped from a normalized belief.
pub const SPARSITY_THRESHOLD: f64 = 1e-12;

/// Tolerance on the total mass of a belief.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("belief dimension must be positive")]
    EmptyDimension,
    #[error("state index {index} out of range for {dim} states")]
    StateOutOfRange { index: usize, dim: usize },
    #[error("negative or non-finite probability {value} at state {index}")]
    InvalidMass { index: usize, value: f64 },
    #[error("belief mass sums to {0}, expected 1")]
    NotNormalized(f64),
    #[error("belief has no positive mass")]
    ZeroMass,
}

/// A probability distribution over `dim` states, stored as sorted
/// `(state, mass)` pairs with strictly positive mass.
#[derive(Clone, PartialEq)]
pub struct Belief {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl Belief {
    /// Point mass on `state`.
    pub fn point(dim: usize, state: usize) -> Self {
        assert!(state < dim, "state {state} out of range for {dim} states");
        Belief {
            dim,
            entries: vec![(state, 1.0)],
        }
    }

    pub fn uniform(dim: usize) -> Self {
        assert!(dim > 0);
        let p = 1.0 / dim as f64;
        Belief {
            dim,
            entries: (0..dim).map(|s| (s, p)).collect(),
        }
    }

    /// Uniform over the given states.
    pub fn uniform_over(dim: usize, states: &[usize]) -> Result<Self, BeliefError> {
        if states.is_empty() {
            return Err(BeliefError::ZeroMass);
        }
        Self::from_weights(dim, states.iter().map(|&s| (s, 1.0)))
    }

    /// Validates a dense distribution. The mass must already sum to one.
    pub fn from_dense(probs: &[f64]) -> Result<Self, BeliefError> {
        if probs.is_empty() {
            return Err(BeliefError::EmptyDimension);
        }
        let mut total = 0.0;
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(BeliefError::InvalidMass { index, value });
            }
            total += value;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(BeliefError::NotNormalized(total));
        }
        Self::from_weights(probs.len(), probs.iter().copied().enumerate())
    }

    /// Normalizes arbitrary non-negative weights into a belief. Repeated
    /// states are summed; states left with mass below
    /// [`SPARSITY_THRESHOLD`] are dropped.
    pub fn from_weights<I>(dim: usize, weights: I) -> Result<Self, BeliefError>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        if dim == 0 {
            return Err(BeliefError::EmptyDimension);
        }
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (index, value) in weights {
            if index >= dim {
                return Err(BeliefError::StateOutOfRange { index, dim });
            }
            if !value.is_finite() || value < 0.0 {
                return Err(BeliefError::InvalidMass { index, value });
            }
            if value > 0.0 {
                entries.push((index, value));
            }
        }
        entries.sort_by_key(|e| e.0);
        merge_sorted(&mut entries);
        Self::normalize_entries(dim, entries)
    }

    /// Builds a belief from already-sorted, duplicate-free positive weights.
    pub(crate) fn from_sorted_weights(
        dim: usize,
        entries: Vec<(usize, f64)>,
    ) -> Result<Self, BeliefError> {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self::normalize_entries(dim, entries)
    }

    fn normalize_entries(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self, BeliefError> {
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if total.is_nan() || total <= 0.0 {
            return Err(BeliefError::ZeroMass);
        }
        for e in entries.iter_mut() {
            e.1 /= total;
        }
        let before = entries.len();
        entries.retain(|e| e.1 >= SPARSITY_THRESHOLD);
        if entries.len() != before {
            let total: f64 = entries.iter().map(|e| e.1).sum();
            for e in entries.iter_mut() {
                e.1 /= total;
            }
        }
        Ok(Belief { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    /// Mass on `state`.
    pub fn prob(&self, state: usize) -> f64 {
        match self.entries.binary_search_by_key(&state, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    /// The state carrying all the mass, if the belief is a point mass.
    pub fn as_point(&self) -> Option<usize> {
        match self.entries.as_slice() {
            [(s, _)] => Some(*s),
            _ => None,
        }
    }

    pub fn dot(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.dim);
        self.entries.iter().map(|&(s, p)| p * values[s]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(s, p) in &self.entries {
            out[s] = p;
        }
        out
    }

    pub fn l1_distance(&self, other: &Belief) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut dist = 0.0;
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(&(sa, pa)), Some(&(sb, pb))) if sa == sb => {
                    dist += (pa - pb).abs();
                    i += 1;
                    j += 1;
                }
                (Some(&(sa, pa)), Some(&(sb, _))) if sa < sb => {
                    dist += pa;
                    i += 1;
                }
                (Some(&(_, pa)), None) => {
                    dist += pa;
                    i += 1;
                }
                (_, Some(&(_, pb))) => {
                    dist += pb;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        dist
    }

    /// True when every state in this belief's support is marked in `mask`.
    pub fn support_within(&self, mask: &[bool]) -> bool {
        self.entries.iter().all(|&(s, _)| mask[s])
    }
}

impl fmt::Debug for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Belief[{}]{{", self.dim)?;
        for (i, (s, p)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{s}: {p:.6}")?;
        }
        write!(f, "}}")
    }
}

/// Sums adjacent entries with equal state index in a sorted list.
pub(crate) fn merge_sorted(entries: &mut Vec<(usize, f64)>) {
    let mut w = 0;
    for r in 0..entries.len() {
        if w > 0 && entries[w - 1].0 == entries[r].0 {
            entries[w - 1].1 += entries[r].1;
        } else {
            entries[w] = entries[r];
            w += 1;
        }
    }
    entries.truncate(w);
}

/// A value interval `[lower, upper]` at a belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueInterval {
    pub lower: f64,
    pub upper: f64,
}

impl ValueInterval {
    pub fn new(lower: f64, upper: f64) -> Self {
        ValueInterval { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        value >= self.lower - slack && value <= self.upper + slack
    }
}
