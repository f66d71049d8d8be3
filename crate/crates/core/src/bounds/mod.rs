//! Lower and upper bounds on the optimal value function, their
//! initialization, Bellman-based local updates, and pruning.

mod lower;
mod mdp;
mod upper;

use thiserror::Error;

pub use lower::{AlphaVector, LowerBound};
pub use mdp::{mdp_values, MDP_MAX_SWEEPS, MDP_RESIDUAL};
pub use upper::{UpperBound, UpperPoint, DEDUP_DISTANCE, PRUNE_SLACK};

use crate::belief::{Belief, ValueInterval};
use crate::lp::LpError;
use crate::model::PomdpModel;
use crate::par::Execution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("MDP value iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Anything that can be evaluated at a belief.
pub trait ValueFunction {
    fn value(&self, b: &Belief) -> Result<f64, LpError>;
}

impl ValueFunction for LowerBound {
    fn value(&self, b: &Belief) -> Result<f64, LpError> {
        Ok(LowerBound::value(self, b))
    }
}

/// `Q(b, a) = sum_s R(s, a) b(s) + gamma sum_o Pr(o | b, a) V(tau(b, a, o))`,
/// summing only over observations with positive probability.
pub fn q_value<V: ValueFunction + ?Sized>(
    model: &PomdpModel,
    v: &V,
    b: &Belief,
    action: usize,
) -> Result<f64, LpError> {
    let immediate = model.expected_reward(b, action);
    let gamma = model.discount();
    if gamma == 0.0 {
        return Ok(immediate);
    }
    let mut future = 0.0;
    for succ in model.successors(b, action) {
        future += succ.probability * v.value(&succ.belief)?;
    }
    Ok(immediate + gamma * future)
}

/// `(argmax_a Q(b, a), max_a Q(b, a))`, lowest action index on ties.
pub fn bellman<V: ValueFunction + ?Sized>(
    model: &PomdpModel,
    v: &V,
    b: &Belief,
) -> Result<(usize, f64), LpError> {
    let mut best = (0, q_value(model, v, b, 0)?);
    for a in 1..model.num_actions() {
        let q = q_value(model, v, b, a)?;
        if q > best.1 {
            best = (a, q);
        }
    }
    Ok(best)
}

/// Blind-policy lower bound.
pub fn init_lower(model: &PomdpModel) -> LowerBound {
    LowerBound::blind(model)
}

/// Upper bound holding the fully observable MDP values at the simplex
/// corners.
pub fn init_upper(model: &PomdpModel) -> Result<UpperBound, BoundsError> {
    init_upper_with(model, Execution::default())
}

pub fn init_upper_with(model: &PomdpModel, exec: Execution) -> Result<UpperBound, BoundsError> {
    let values = mdp_values(model, MDP_RESIDUAL, MDP_MAX_SWEEPS, exec)?;
    Ok(UpperBound::from_corners(values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Lower and upper bound maintained together.
#[derive(Debug, Clone)]
pub struct BoundsPair {
    pub lower: LowerBound,
    pub upper: UpperBound,
    exec: Execution,
}

impl BoundsPair {
    pub fn new(lower: LowerBound, upper: UpperBound) -> Self {
        assert_eq!(lower.num_states(), upper.num_states());
        BoundsPair {
            lower,
            upper,
            exec: Execution::default(),
        }
    }

    /// Blind-policy lower bound and MDP upper bound.
    pub fn initialize(model: &PomdpModel) -> Result<Self, BoundsError> {
        Self::initialize_with(model, Execution::default())
    }

    pub fn initialize_with(model: &PomdpModel, exec: Execution) -> Result<Self, BoundsError> {
        let mut pair = BoundsPair::new(init_lower(model), init_upper_with(model, exec)?);
        pair.exec = exec;
        Ok(pair)
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn set_execution(&mut self, exec: Execution) {
        self.exec = exec;
    }

    pub fn lower_value(&self, b: &Belief) -> f64 {
        self.lower.value(b)
    }

    pub fn upper_value(&self, b: &Belief) -> Result<f64, LpError> {
        self.upper.value(b)
    }

    pub fn interval(&self, b: &Belief) -> Result<ValueInterval, LpError> {
        Ok(ValueInterval::new(self.lower.value(b), self.upper.value(b)?))
    }

    pub fn width(&self, b: &Belief) -> Result<f64, LpError> {
        self.interval(b).map(|v| v.width())
    }

    pub fn q_value(
        &self,
        model: &PomdpModel,
        side: BoundSide,
        b: &Belief,
        action: usize,
    ) -> Result<f64, LpError> {
        match side {
            BoundSide::Lower => q_value(model, &self.lower, b, action),
            BoundSide::Upper => q_value(model, &self.upper, b, action),
        }
    }

    /// Applies both local update operators at `b`: the lower bound gains
    /// the gradient backup and the upper bound gains `(b, H V(b))`.
    pub fn local_update(&mut self, model: &PomdpModel, b: &Belief) -> Result<(), LpError> {
        let (_, upper) = bellman(model, &self.upper, b)?;
        self.local_update_with(model, b, upper)
    }

    /// Local update with a precomputed upper Bellman value. Any value at
    /// least `H V(b)` keeps the upper bound valid.
    pub fn local_update_with(
        &mut self,
        model: &PomdpModel,
        b: &Belief,
        upper_value: f64,
    ) -> Result<(), LpError> {
        let beta = self.lower.backup(model, b);
        self.lower.insert(beta);
        if self.lower.needs_prune() {
            self.lower.prune(self.exec);
        }
        self.upper.insert(b.clone(), upper_value);
        if self.upper.needs_prune() {
            self.upper.prune(model, self.exec)?;
        }
        Ok(())
    }

    pub fn prune_lower(&mut self) -> usize {
        self.lower.prune(self.exec)
    }

    pub fn prune_upper(&mut self, model: &PomdpModel) -> Result<usize, LpError> {
        self.upper.prune(model, self.exec)
    }
}
