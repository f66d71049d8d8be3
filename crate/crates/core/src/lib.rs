//! Heuristic search value iteration for finite discounted POMDPs.
//!
//! The solver keeps a vector-set lower bound and a point-set upper bound on
//! the optimal value function and tightens both with local Bellman updates
//! along forward-search trials from the initial belief. When the two bounds
//! meet within `epsilon` at the initial belief, the lower bound's greedy
//! policy is `epsilon`-optimal.
//!
//! ```
//! use hsvi::{gen_rocksample, solve, RockSampleParams, SolverConfig};
//!
//! let model = gen_rocksample(&RockSampleParams::new(2, 1).unwrap()).unwrap();
//! let result = solve(&model, &SolverConfig::with_epsilon(0.5)).unwrap();
//! assert!(result.upper_b0 - result.lower_b0 <= 0.5);
//! ```

pub mod belief;
pub mod bounds;
pub mod evaluator;
pub mod io;
pub mod lp;
pub mod model;
pub mod par;
pub mod solver;

pub use belief::{Belief, BeliefError, ValueInterval};
pub use bounds::{AlphaVector, BoundSide, BoundsError, BoundsPair, LowerBound, UpperBound, ValueFunction};
pub use evaluator::{evaluate, policy_action, simulate_episode, EvalConfig, EvalResult};
pub use io::{
    gen_rocksample, load_policy, load_pomdp, parse_pomdp, save_policy, save_pomdp, write_pomdp,
    ModelIoError, ParseError, PolicyFile, RockSampleParams,
};
pub use lp::{hull_projection, solve_lp, LpError, LpProblem, LpSolution};
pub use model::{ModelBuilder, ModelError, PomdpModel};
pub use par::Execution;
pub use solver::{
    solve, solve_anytime, solve_with_observer, ObservationHeuristic, SolveResult, SolveTrace,
    SolverConfig, SolverError, Termination, TraceRow,
};
