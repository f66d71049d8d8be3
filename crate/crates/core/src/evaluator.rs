//! Monte Carlo evaluation of the direct-control policy of a lower bound.
//!
//! Every episode owns a ChaCha stream selected by its index, so results do
//! not depend on scheduling and episodes run in parallel when enabled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::belief::Belief;
use crate::bounds::LowerBound;
use crate::model::PomdpModel;
use crate::par::Execution;

/// Attempts per episode before a degenerate episode is kept as is.
pub const MAX_EPISODE_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub num_episodes: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Sum `gamma^t r_t` (default) or plain `r_t`.
    pub discounted: bool,
    pub execution: Execution,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            num_episodes: 500,
            horizon: 251,
            seed: 0,
            discounted: true,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub total: f64,
    pub steps: usize,
    /// Restarts caused by an observation with vanishing posterior mass.
    pub restarts: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub mean: f64,
    pub stderr: f64,
    /// `1.96 * stderr`.
    pub ci_half_width: f64,
    /// False with a single episode; `stderr` is then reported as 0.
    pub stderr_defined: bool,
    pub returns: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub restarted_episodes: usize,
    /// `gamma^horizon * max|R| / (1 - gamma)`: the most the cut-off tail of
    /// a discounted episode can be worth.
    pub truncation_error: f64,
}

/// Action tag of the maximizing vector at `b`.
pub fn policy_action(lb: &LowerBound, b: &Belief) -> usize {
    lb.action(b)
}

fn sample_index<I, R>(rng: &mut R, weights: I) -> usize
where
    I: IntoIterator<Item = (usize, f64)>,
    R: Rng,
{
    let mut u: f64 = rng.gen();
    let mut last = 0;
    for (i, p) in weights {
        last = i;
        if u < p {
            return i;
        }
        u -= p;
    }
    last
}

fn episode_rng(seed: u64, episode: u64, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(episode);
    rng
}

/// Runs one episode from a state sampled from the initial belief, acting
/// with [`policy_action`] and tracking the belief exactly. Stops at the
/// horizon or on entering a zero-reward absorbing state.
pub fn simulate_episode(
    model: &PomdpModel,
    lb: &LowerBound,
    config: &EvalConfig,
    episode: u64,
) -> EpisodeOutcome {
    let mut restarts = 0;
    loop {
        let mut rng = episode_rng(config.seed, episode, restarts);
        match run_episode(model, lb, config, &mut rng) {
            Some((total, steps)) => {
                return EpisodeOutcome {
                    total,
                    steps,
                    restarts,
                }
            }
            None if restarts + 1 >= MAX_EPISODE_ATTEMPTS => {
                log::warn!("episode {episode}: belief degenerated on every attempt");
                return EpisodeOutcome {
                    total: f64::NAN,
                    steps: 0,
                    restarts: restarts + 1,
                };
            }
            None => {
                log::warn!("episode {episode}: impossible observation, restarting");
                restarts += 1;
            }
        }
    }
}

fn run_episode(
    model: &PomdpModel,
    lb: &LowerBound,
    config: &EvalConfig,
    rng: &mut ChaCha8Rng,
) -> Option<(f64, usize)> {
    let gamma = model.discount();
    let mut belief = model.initial_belief().clone();
    let mut state = sample_index(rng, belief.iter());
    let mut total = 0.0;
    let mut weight = 1.0;
    let mut steps = 0;
    while steps < config.horizon && !model.is_absorbing_zero(state) {
        let action = policy_action(lb, &belief);
        total += weight * model.reward(state, action);
        let next = sample_index(rng, model.transition_row(action, state).iter().copied());
        let obs = sample_index(rng, model.observation_row(action, next).iter().copied().enumerate());
        belief = model.belief_update(&belief, action, obs).ok()?;
        state = next;
        if config.discounted {
            weight *= gamma;
        }
        steps += 1;
    }
    Some((total, steps))
}

/// Mean return over `num_episodes` seeded episodes with a normal-theory 95%
/// confidence interval.
pub fn evaluate(model: &PomdpModel, lb: &LowerBound, config: &EvalConfig) -> EvalResult {
    assert!(config.num_episodes >= 1, "need at least one episode");
    assert!(config.horizon >= 1, "horizon must be positive");
    let outcomes = config
        .execution
        .map_range(config.num_episodes, |e| simulate_episode(model, lb, config, e as u64));
    let restarted_episodes = outcomes.iter().filter(|o| o.restarts > 0).count();
    let returns: Vec<f64> = outcomes.into_iter().map(|o| o.total).collect();
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let (stderr, stderr_defined) = if returns.len() > 1 {
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        ((var / n).sqrt(), true)
    } else {
        (0.0, false)
    };
    let gamma = model.discount();
    EvalResult {
        mean,
        stderr,
        ci_half_width: 1.96 * stderr,
        stderr_defined,
        min: returns.iter().copied().fold(f64::INFINITY, f64::min),
        max: returns.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        returns,
        restarted_episodes,
        truncation_error: gamma.powi(config.horizon as i32) * model.max_abs_reward() / (1.0 - gamma),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::AlphaVector;
    use crate::model::ModelBuilder;

    fn one_state(reward: f64) -> PomdpModel {
        let mut b = ModelBuilder::new(1, 1, 1).discount(0.95);
        b.set_transition(0, 0, 0, 1.0);
        b.set_observation(0, 0, 0, 1.0);
        b.set_reward(0, 0, reward);
        b.build().unwrap()
    }

    #[test]
    fn policy_action_follows_best_vector() {
        let lb = LowerBound::new(1, vec![AlphaVector::new(vec![0.0], 2)]);
        assert_eq!(policy_action(&lb, &Belief::point(1, 0)), 2);
        let lb = LowerBound::new(
            2,
            vec![
                AlphaVector::new(vec![1.0, 0.0], 0),
                AlphaVector::new(vec![0.0, 1.0], 1),
            ],
        );
        let b = Belief::from_dense(&[0.9, 0.1]).unwrap();
        assert_eq!(policy_action(&lb, &b), 0);
    }

    #[test]
    fn geometric_episode_return() {
        let m = one_state(1.0);
        let lb = LowerBound::blind(&m);
        let out = simulate_episode(&m, &lb, &EvalConfig::default(), 0);
        let expected = (1.0 - 0.95f64.powi(251)) / 0.05;
        assert!((out.total - expected).abs() < 1e-9);
        assert!((expected - 19.99995).abs() < 1e-5);
        assert_eq!(out.steps, 251);
    }

    #[test]
    fn zero_reward_stops_immediately() {
        let m = one_state(0.0);
        let lb = LowerBound::blind(&m);
        let res = evaluate(&m, &lb, &EvalConfig::default());
        assert_eq!(res.mean, 0.0);
        assert_eq!(res.ci_half_width, 0.0);
        assert_eq!(res.returns.len(), 500);
    }

    #[test]
    fn single_episode_has_undefined_stderr() {
        let m = one_state(1.0);
        let lb = LowerBound::blind(&m);
        let cfg = EvalConfig {
            num_episodes: 1,
            ..Default::default()
        };
        let res = evaluate(&m, &lb, &cfg);
        assert!(!res.stderr_defined);
        assert_eq!(res.stderr, 0.0);
        assert_eq!(res.mean, res.returns[0]);
    }

    #[test]
    fn undiscounted_mode_sums_rewards() {
        let m = one_state(1.0);
        let lb = LowerBound::blind(&m);
        let cfg = EvalConfig {
            num_episodes: 2,
            horizon: 10,
            discounted: false,
            ..Default::default()
        };
        assert_eq!(evaluate(&m, &lb, &cfg).mean, 10.0);
    }
}
