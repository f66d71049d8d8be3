//! Value iteration on the fully observable relaxation.

use crate::model::PomdpModel;
use crate::par::Execution;

use super::BoundsError;

pub const MDP_RESIDUAL: f64 = 1e-6;
pub const MDP_MAX_SWEEPS: usize = 1_000_000;

/// Optimal values of the underlying MDP.
///
/// Iteration starts from `max R / (1 - gamma)` and sweeps synchronously, so
/// every iterate (including the returned one) is an upper bound on the
/// MDP value and satisfies `HV <= V`.
pub fn mdp_values(
    model: &PomdpModel,
    residual: f64,
    max_sweeps: usize,
    exec: Execution,
) -> Result<Vec<f64>, BoundsError> {
    let ns = model.num_states();
    let gamma = model.discount();
    let r_max = (0..model.num_actions())
        .flat_map(|a| model.reward_column(a).iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut values = vec![r_max / (1.0 - gamma); ns];
    for _ in 0..max_sweeps {
        let next = exec.map_range(ns, |s| {
            (0..model.num_actions())
                .map(|a| {
                    let future: f64 = model
                        .transition_row(a, s)
                        .iter()
                        .map(|&(n, p)| p * values[n])
                        .sum();
                    model.reward(s, a) + gamma * future
                })
                .fold(f64::NEG_INFINITY, f64::max)
        });
        let delta = next
            .iter()
            .zip(&values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        values = next;
        if delta <= residual {
            return Ok(values);
        }
    }
    Err(BoundsError::NoConvergence { sweeps: max_sweeps })
}
