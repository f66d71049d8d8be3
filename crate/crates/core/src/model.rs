//! Finite discounted POMDP models and the exact belief-space kernel.
//!
//! Transitions are stored as one sparse row per `(action, state)` pair,
//! observations as dense `|S| x |O|` matrices per action, and rewards as one
//! dense column of length `|S|` per action.

use thiserror::Error;

use crate::belief::{merge_sorted, Belief, BeliefError};

/// Tolerance for row-stochasticity checks.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Unnormalized posterior mass at or below which an observation is treated
/// as impossible.
pub const MIN_OBSERVATION_MASS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("model needs at least one {0}")]
    EmptyDimension(&'static str),
    #[error("discount {0} outside [0, 1)")]
    InvalidDiscount(f64),
    #[error("transition row T({state}, {action}, .) sums to {sum}")]
    TransitionRow { action: usize, state: usize, sum: f64 },
    #[error("observation row O({state}, {action}, .) sums to {sum}")]
    ObservationRow { action: usize, state: usize, sum: f64 },
    #[error("{what} probability {value} outside [0, 1]")]
    Probability { what: &'static str, value: f64 },
    #[error("non-finite reward R({state}, {action})")]
    Reward { action: usize, state: usize },
    #[error("{what} index {index} out of range ({len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("{what} names list has {got} entries, expected {expected}")]
    NameCount {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("initial belief: {0}")]
    InitialBelief(#[from] BeliefError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("observation {observation} has zero probability after action {action}")]
pub struct ZeroProbabilityObservation {
    pub action: usize,
    pub observation: usize,
}

/// One child of a belief node: an observation, its probability, and the
/// resulting posterior.
#[derive(Debug, Clone)]
pub struct Successor {
    pub observation: usize,
    pub probability: f64,
    pub belief: Belief,
}

/// Incremental construction of a [`PomdpModel`]. Unset entries are zero;
/// later writes to the same entry overwrite earlier ones.
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    transitions: Vec<Vec<(usize, f64)>>,
    observations: Vec<f64>,
    rewards: Vec<f64>,
    discount: f64,
    initial_belief: Option<Belief>,
    state_names: Option<Vec<String>>,
    action_names: Option<Vec<String>>,
    observation_names: Option<Vec<String>>,
}

impl ModelBuilder {
    pub fn new(num_states: usize, num_actions: usize, num_observations: usize) -> Self {
        ModelBuilder {
            num_states,
            num_actions,
            num_observations,
            transitions: vec![Vec::new(); num_actions * num_states],
            observations: vec![0.0; num_actions * num_states * num_observations],
            rewards: vec![0.0; num_actions * num_states],
            discount: 0.95,
            initial_belief: None,
            state_names: None,
            action_names: None,
            observation_names: None,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }

    pub fn set_discount(&mut self, discount: f64) {
        self.discount = discount;
    }

    pub fn set_transition(&mut self, action: usize, state: usize, next: usize, p: f64) {
        let row = &mut self.transitions[action * self.num_states + state];
        match row.binary_search_by_key(&next, |e| e.0) {
            Ok(i) => row[i].1 = p,
            Err(i) => row.insert(i, (next, p)),
        }
    }

    /// Replaces a whole transition row with dense probabilities.
    pub fn set_transition_row(&mut self, action: usize, state: usize, probs: &[f64]) {
        let row = &mut self.transitions[action * self.num_states + state];
        row.clear();
        row.extend(probs.iter().copied().enumerate().filter(|e| e.1 != 0.0));
    }

    /// Current nonzero entries of `T(state, action, .)`.
    pub fn transition_row(&self, action: usize, state: usize) -> &[(usize, f64)] {
        &self.transitions[action * self.num_states + state]
    }

    pub fn transition(&self, state: usize, action: usize, next: usize) -> f64 {
        let row = &self.transitions[action * self.num_states + state];
        row.binary_search_by_key(&next, |e| e.0)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    pub fn set_observation(&mut self, action: usize, next: usize, obs: usize, p: f64) {
        let no = self.num_observations;
        self.observations[(action * self.num_states + next) * no + obs] = p;
    }

    pub fn observation(&self, next: usize, action: usize, obs: usize) -> f64 {
        let no = self.num_observations;
        self.observations[(action * self.num_states + next) * no + obs]
    }

    pub fn set_reward(&mut self, action: usize, state: usize, r: f64) {
        self.rewards[action * self.num_states + state] = r;
    }

    pub fn initial_belief(mut self, belief: Belief) -> Self {
        self.initial_belief = Some(belief);
        self
    }

    pub fn set_initial_belief(&mut self, belief: Belief) {
        self.initial_belief = Some(belief);
    }

    pub fn state_names(mut self, names: Vec<String>) -> Self {
        self.state_names = Some(names);
        self
    }

    pub fn action_names(mut self, names: Vec<String>) -> Self {
        self.action_names = Some(names);
        self
    }

    pub fn observation_names(mut self, names: Vec<String>) -> Self {
        self.observation_names = Some(names);
        self
    }

    pub fn set_names(
        &mut self,
        states: Option<Vec<String>>,
        actions: Option<Vec<String>>,
        observations: Option<Vec<String>>,
    ) {
        self.state_names = states;
        self.action_names = actions;
        self.observation_names = observations;
    }

    pub fn build(self) -> Result<PomdpModel, ModelError> {
        let (ns, na, no) = (self.num_states, self.num_actions, self.num_observations);
        if ns == 0 {
            return Err(ModelError::EmptyDimension("state"));
        }
        if na == 0 {
            return Err(ModelError::EmptyDimension("action"));
        }
        if no == 0 {
            return Err(ModelError::EmptyDimension("observation"));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(ModelError::InvalidDiscount(self.discount));
        }
        for (what, names, expected) in [
            ("state", &self.state_names, ns),
            ("action", &self.action_names, na),
            ("observation", &self.observation_names, no),
        ] {
            if let Some(names) = names {
                if names.len() != expected {
                    return Err(ModelError::NameCount {
                        what,
                        got: names.len(),
                        expected,
                    });
                }
            }
        }

        let mut row_offsets = Vec::with_capacity(na * ns + 1);
        let mut entries = Vec::new();
        row_offsets.push(0);
        for a in 0..na {
            for s in 0..ns {
                let row = &self.transitions[a * ns + s];
                let mut sum = 0.0;
                for &(next, p) in row {
                    if next >= ns {
                        return Err(ModelError::IndexOutOfRange {
                            what: "state",
                            index: next,
                            len: ns,
                        });
                    }
                    check_probability("transition", p)?;
                    sum += p;
                    if p > 0.0 {
                        entries.push((next, p));
                    }
                }
                if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                    return Err(ModelError::TransitionRow { action: a, state: s, sum });
                }
                row_offsets.push(entries.len());
            }
        }
        for a in 0..na {
            for s in 0..ns {
                let row = &self.observations[(a * ns + s) * no..(a * ns + s + 1) * no];
                let mut sum = 0.0;
                for &p in row {
                    check_probability("observation", p)?;
                    sum += p;
                }
                if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                    return Err(ModelError::ObservationRow { action: a, state: s, sum });
                }
            }
        }
        for a in 0..na {
            for s in 0..ns {
                if !self.rewards[a * ns + s].is_finite() {
                    return Err(ModelError::Reward { action: a, state: s });
                }
            }
        }
        let initial_belief = match self.initial_belief {
            Some(b) => {
                if b.dim() != ns {
                    return Err(ModelError::InitialBelief(BeliefError::StateOutOfRange {
                        index: b.dim(),
                        dim: ns,
                    }));
                }
                b
            }
            None => Belief::uniform(ns),
        };

        let mut model = PomdpModel {
            num_states: ns,
            num_actions: na,
            num_observations: no,
            row_offsets,
            transitions: entries,
            observations: self.observations,
            rewards: self.rewards,
            discount: self.discount,
            initial_belief,
            state_names: self.state_names,
            action_names: self.action_names,
            observation_names: self.observation_names,
            absorbing_zero: Vec::new(),
        };
        model.absorbing_zero = (0..ns)
            .map(|s| {
                (0..na).all(|a| {
                    model.reward(s, a) == 0.0 && model.transition_row(a, s) == [(s, 1.0)]
                })
            })
            .collect();
        Ok(model)
    }
}

fn check_probability(what: &'static str, p: f64) -> Result<(), ModelError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ModelError::Probability { what, value: p });
    }
    Ok(())
}

/// A finite discounted POMDP `<S, A, O, T, O, R, gamma, b0>` with
/// rewards `R(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    row_offsets: Vec<usize>,
    transitions: Vec<(usize, f64)>,
    observations: Vec<f64>,
    rewards: Vec<f64>,
    discount: f64,
    initial_belief: Belief,
    state_names: Option<Vec<String>>,
    action_names: Option<Vec<String>>,
    observation_names: Option<Vec<String>>,
    absorbing_zero: Vec<bool>,
}

impl PomdpModel {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial_belief(&self) -> &Belief {
        &self.initial_belief
    }

    pub fn state_names(&self) -> Option<&[String]> {
        self.state_names.as_deref()
    }

    pub fn action_names(&self) -> Option<&[String]> {
        self.action_names.as_deref()
    }

    pub fn observation_names(&self) -> Option<&[String]> {
        self.observation_names.as_deref()
    }

    /// Nonzero entries `(s', T(s, a, s'))` sorted by `s'`.
    pub fn transition_row(&self, action: usize, state: usize) -> &[(usize, f64)] {
        let r = action * self.num_states + state;
        &self.transitions[self.row_offsets[r]..self.row_offsets[r + 1]]
    }

    pub fn transition(&self, state: usize, action: usize, next: usize) -> f64 {
        let row = self.transition_row(action, state);
        row.binary_search_by_key(&next, |e| e.0)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    /// `O(s', a, .)` as a slice of length `|O|`.
    pub fn observation_row(&self, action: usize, next: usize) -> &[f64] {
        let no = self.num_observations;
        let r = action * self.num_states + next;
        &self.observations[r * no..(r + 1) * no]
    }

    pub fn observation(&self, next: usize, action: usize, obs: usize) -> f64 {
        self.observation_row(action, next)[obs]
    }

    /// `R(., a)` as a slice of length `|S|`.
    pub fn reward_column(&self, action: usize) -> &[f64] {
        &self.rewards[action * self.num_states..(action + 1) * self.num_states]
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[action * self.num_states + state]
    }

    /// Largest absolute reward.
    pub fn max_abs_reward(&self) -> f64 {
        self.rewards.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// True for states that loop to themselves under every action with
    /// zero reward.
    pub fn is_absorbing_zero(&self, state: usize) -> bool {
        self.absorbing_zero[state]
    }

    /// Number of stored nonzero transition entries.
    pub fn transition_nonzeros(&self) -> usize {
        self.transitions.len()
    }

    /// `sum_s R(s, a) b(s)`.
    pub fn expected_reward(&self, belief: &Belief, action: usize) -> f64 {
        belief.dot(self.reward_column(action))
    }

    /// Predicted next-state distribution `sum_s T(s, a, s') b(s)` as sorted
    /// sparse entries.
    pub fn predict(&self, belief: &Belief, action: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (s, p) in belief.iter() {
            for &(next, t) in self.transition_row(action, s) {
                out.push((next, p * t));
            }
        }
        out.sort_by_key(|e| e.0);
        merge_sorted(&mut out);
        out
    }

    /// `Pr(o | b, a)`.
    pub fn observation_probability(&self, belief: &Belief, action: usize, obs: usize) -> f64 {
        self.predict(belief, action)
            .iter()
            .map(|&(next, p)| p * self.observation(next, action, obs))
            .sum()
    }

    /// The posterior `tau(b, a, o)`.
    pub fn belief_update(
        &self,
        belief: &Belief,
        action: usize,
        obs: usize,
    ) -> Result<Belief, ZeroProbabilityObservation> {
        let predicted = self.predict(belief, action);
        self.condition(&predicted, action, obs)
            .map(|(_, b)| b)
            .ok_or(ZeroProbabilityObservation {
                action,
                observation: obs,
            })
    }

    fn condition(&self, predicted: &[(usize, f64)], action: usize, obs: usize) -> Option<(f64, Belief)> {
        let weights: Vec<(usize, f64)> = predicted
            .iter()
            .map(|&(next, p)| (next, p * self.observation(next, action, obs)))
            .filter(|e| e.1 > 0.0)
            .collect();
        let mass: f64 = weights.iter().map(|e| e.1).sum();
        if mass <= MIN_OBSERVATION_MASS {
            return None;
        }
        Belief::from_sorted_weights(self.num_states, weights)
            .ok()
            .map(|b| (mass, b))
    }

    /// Every observation with nonzero probability after `action`, with its
    /// probability and posterior, in observation order.
    pub fn successors(&self, belief: &Belief, action: usize) -> Vec<Successor> {
        let predicted = self.predict(belief, action);
        (0..self.num_observations)
            .filter_map(|o| {
                self.condition(&predicted, action, o)
                    .map(|(probability, belief)| Successor {
                        observation: o,
                        probability,
                        belief,
                    })
            })
            .collect()
    }
}
