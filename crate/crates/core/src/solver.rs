//! Heuristic search value iteration.
//!
//! Each top-level trial follows a single path from the initial belief,
//! picking the action with the highest upper Q-value and the observation
//! whose child contributes most excess uncertainty, then updates both
//! bounds at every visited belief on the way back up.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::belief::Belief;
use crate::bounds::{bellman, BoundsError, BoundsPair};
use crate::lp::LpError;
use crate::model::PomdpModel;
use crate::par::Execution;

/// Widths at or below this count as converged in anytime mode.
pub const WIDTH_FLOOR: f64 = 1e-9;

/// Extra depth allowed beyond the theoretical maximum before the search
/// reports an internal error.
pub const DEPTH_MARGIN: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("search reached depth {depth}, beyond the cap of {cap}")]
    DepthCapExceeded { depth: usize, cap: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// How the search picks which observation branch to follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationHeuristic {
    /// Maximize `Pr(o | b, a*) * excess(tau(b, a*, o), t + 1)`.
    ExcessUncertainty,
    /// Sample `o ~ Pr(o | b, a*)` (comparison only; slower to converge).
    Sampled { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Target width at the initial belief. In anytime mode this is the
    /// final target; each trial uses `zeta` times the current width.
    pub epsilon: f64,
    pub zeta: f64,
    pub timeout: Option<Duration>,
    pub max_trials: Option<usize>,
    /// Number of random beliefs (plus the initial belief) at which bound
    /// monotonicity and ordering are checked after every trial. Zero
    /// disables the audit.
    pub audit_beliefs: usize,
    pub audit_seed: u64,
    pub observation_heuristic: ObservationHeuristic,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-3,
            zeta: 0.95,
            timeout: None,
            max_trials: None,
            audit_beliefs: 0,
            audit_seed: 0,
            observation_heuristic: ObservationHeuristic::ExcessUncertainty,
            execution: Execution::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        SolverConfig {
            epsilon,
            ..Default::default()
        }
    }

    fn validate(&self, anytime: bool) -> Result<(), SolverError> {
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "zeta must lie in (0, 1), got {}",
                self.zeta
            )));
        }
        if anytime {
            if self.epsilon.is_nan() || self.epsilon < 0.0 {
                return Err(SolverError::InvalidConfig(format!(
                    "final epsilon must be non-negative, got {}",
                    self.epsilon
                )));
            }
        } else if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(SolverError::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    EpsilonReached,
    Timeout,
    TrialCap,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::EpsilonReached => "epsilon-reached",
            Termination::Timeout => "timeout",
            Termination::TrialCap => "trial-cap",
        }
    }
}

/// Bound state at the initial belief after one top-level trial (trial 0 is
/// the initialization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub trial: usize,
    pub wall_time_s: f64,
    pub lower_b0: f64,
    pub upper_b0: f64,
    pub width: f64,
    pub num_vectors: usize,
    pub num_points: usize,
    pub updates: u64,
    pub max_depth: usize,
    /// Epsilon passed to this trial's search (zero for trial 0).
    pub trial_epsilon: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
}

pub const TRACE_HEADER: &str =
    "trial,wall_time_s,lower_b0,upper_b0,width,num_vectors,num_points,updates,max_depth";

impl SolveTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.6},{},{},{},{},{},{},{}",
                r.trial,
                r.wall_time_s,
                r.lower_b0,
                r.upper_b0,
                r.width,
                r.num_vectors,
                r.num_points,
                r.updates,
                r.max_depth
            )?;
        }
        Ok(())
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

/// Violations found by the per-trial bound audit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub beliefs: usize,
    pub checks: usize,
    pub lower_decreases: usize,
    pub upper_increases: usize,
    pub crossings: usize,
    pub width_increases: usize,
    pub depth_violations: usize,
}

impl AuditReport {
    pub fn violations(&self) -> usize {
        self.lower_decreases
            + self.upper_increases
            + self.crossings
            + self.width_increases
            + self.depth_violations
    }
}

/// Audit tolerance for monotonicity between trials.
pub const AUDIT_MONOTONE_SLACK: f64 = 1e-9;
/// Audit tolerance for `lower <= upper`.
pub const AUDIT_ORDER_SLACK: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub bounds: BoundsPair,
    pub trace: SolveTrace,
    pub terminated_by: Termination,
    /// Width at the initial belief; bounds the regret of the lower-bound
    /// policy there.
    pub final_width: f64,
    pub lower_b0: f64,
    pub upper_b0: f64,
    /// `max_s (V_upper_0 - V_lower_0)(s)` after initialization.
    pub initial_gap: f64,
    /// Depth bound for the final epsilon.
    pub t_max: usize,
    /// Update-count bound for the final epsilon.
    pub u_max: f64,
    pub updates: u64,
    /// Deepest search depth reached in any trial.
    pub max_depth: usize,
    /// Largest per-trial excess of the reached depth over that trial's
    /// depth bound (zero when the bound always held).
    pub depth_bound_excess: usize,
    pub audit: Option<AuditReport>,
}

/// `ceil(log_gamma(epsilon / gap))`, clamped at zero. Nodes at this depth
/// or deeper are finished from the start.
pub fn t_max(gamma: f64, epsilon: f64, gap: f64) -> usize {
    if gap <= epsilon || gap <= 0.0 {
        return 0;
    }
    if gamma == 0.0 {
        return 1;
    }
    let t = ((epsilon / gap).ln() / gamma.ln()).ceil();
    if t.is_finite() && t > 0.0 {
        t as usize
    } else {
        0
    }
}

/// `t_max ((|A||O|)^(t_max + 1) - 1) / (|A||O| - 1)`, as a float (it
/// overflows integers for realistic inputs).
pub fn u_max(t_max: usize, num_actions: usize, num_observations: usize) -> f64 {
    let k = (num_actions * num_observations) as f64;
    let t = t_max as f64;
    if k == 1.0 {
        return t * (t + 1.0);
    }
    t * (k.powf(t + 1.0) - 1.0) / (k - 1.0)
}

/// Maximum over the simplex of `upper_0 - lower_0`; both are linear between
/// corners, so the maximum is attained at a corner.
pub fn initial_gap(bounds: &BoundsPair) -> f64 {
    let ns = bounds.upper.num_states();
    (0..ns)
        .map(|s| {
            let b = Belief::point(ns, s);
            bounds.upper.corner_values()[s] - bounds.lower.value(&b)
        })
        .fold(0.0f64, f64::max)
}

/// Per-node expansion: for every action its successors with cached bound
/// values.
struct Expansion {
    children: Vec<Vec<Child>>,
    q_upper: Vec<f64>,
}

struct Child {
    probability: f64,
    belief: Belief,
    lower: f64,
    upper: f64,
}

impl Child {
    fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

struct Search<'m> {
    model: &'m PomdpModel,
    bounds: BoundsPair,
    updates: u64,
    trial_max_depth: usize,
    deadline: Option<Instant>,
    timed_out: bool,
    depth_cap: usize,
    heuristic: ObservationHeuristic,
    rng: ChaCha8Rng,
}

impl<'m> Search<'m> {
    fn expired(&mut self) -> bool {
        if !self.timed_out {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                }
            }
        }
        self.timed_out
    }

    fn expand(&self, b: &Belief) -> Result<Expansion, LpError> {
        let gamma = self.model.discount();
        let na = self.model.num_actions();
        let mut children = Vec::with_capacity(na);
        let mut q_upper = Vec::with_capacity(na);
        for a in 0..na {
            let mut kids = Vec::new();
            let mut future = 0.0;
            for succ in self.model.successors(b, a) {
                let upper = self.bounds.upper.value(&succ.belief)?;
                let lower = self.bounds.lower.value(&succ.belief);
                future += succ.probability * upper;
                kids.push(Child {
                    probability: succ.probability,
                    belief: succ.belief,
                    lower,
                    upper,
                });
            }
            q_upper.push(self.model.expected_reward(b, a) + gamma * future);
            children.push(kids);
        }
        Ok(Expansion { children, q_upper })
    }

    fn explore(&mut self, b: &Belief, epsilon: f64, depth: usize) -> Result<(), SolverError> {
        if self.expired() {
            return Ok(());
        }
        self.trial_max_depth = self.trial_max_depth.max(depth);
        let gamma = self.model.discount();
        let threshold = epsilon * gamma.powi(-(depth as i32));
        let width = self.bounds.width(b)?;
        if width <= threshold {
            return Ok(());
        }
        if depth > self.depth_cap {
            return Err(SolverError::DepthCapExceeded {
                depth,
                cap: self.depth_cap,
            });
        }

        let mut expansion = self.expand(b)?;
        let action = argmax(&expansion.q_upper);
        let child_threshold = epsilon * gamma.powi(-(depth as i32 + 1));
        let next = self.choose_child(&expansion.children[action], child_threshold);

        if let Some(i) = next {
            let child = expansion.children[action][i].belief.clone();
            self.explore(&child, epsilon, depth + 1)?;
            if self.timed_out {
                return Ok(());
            }
            // Only the followed action's children are re-evaluated; the
            // other cached Q-values can only be stale-high, which keeps the
            // inserted upper value valid.
            let mut future = 0.0;
            for kid in expansion.children[action].iter_mut() {
                kid.upper = self.bounds.upper.value(&kid.belief)?;
                future += kid.probability * kid.upper;
            }
            expansion.q_upper[action] = self.model.expected_reward(b, action) + gamma * future;
        }
        let upper = expansion
            .q_upper
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        self.bounds.local_update_with(self.model, b, upper)?;
        self.updates += 1;
        Ok(())
    }

    fn choose_child(&mut self, children: &[Child], threshold: f64) -> Option<usize> {
        match self.heuristic {
            ObservationHeuristic::ExcessUncertainty => excess_argmax(
                children.iter().map(|c| (c.probability, c.width())),
                threshold,
            ),
            ObservationHeuristic::Sampled { .. } => {
                if children.iter().all(|c| c.width() <= threshold) {
                    return None;
                }
                let total: f64 = children.iter().map(|c| c.probability).sum();
                let mut u = self.rng.gen::<f64>() * total;
                for (i, c) in children.iter().enumerate() {
                    u -= c.probability;
                    if u <= 0.0 {
                        return Some(i);
                    }
                }
                Some(children.len() - 1)
            }
        }
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Index maximizing `p * (width - threshold)` among entries with positive
/// excess, lowest index on ties; `None` when every entry is finished.
fn excess_argmax<I>(children: I, threshold: f64) -> Option<usize>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, (p, width)) in children.into_iter().enumerate() {
        let excess = width - threshold;
        if excess <= 0.0 {
            continue;
        }
        let score = p * excess;
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.map(|b| b.0)
}

/// IE-MAX action choice: `argmax_a Q_upper(b, a)`, lowest index on ties.
pub fn choose_action(model: &PomdpModel, bounds: &BoundsPair, b: &Belief) -> Result<usize, LpError> {
    bellman(model, &bounds.upper, b).map(|(a, _)| a)
}

/// Observation whose child maximizes
/// `Pr(o | b, a) * (width(tau(b, a, o)) - epsilon gamma^-(depth + 1))`,
/// or `None` if every possible child is already finished.
pub fn choose_observation(
    model: &PomdpModel,
    bounds: &BoundsPair,
    b: &Belief,
    action: usize,
    epsilon: f64,
    depth: usize,
) -> Result<Option<usize>, LpError> {
    let threshold = epsilon * model.discount().powi(-(depth as i32 + 1));
    let successors = model.successors(b, action);
    let mut scored = Vec::with_capacity(successors.len());
    for s in &successors {
        scored.push((s.probability, bounds.width(&s.belief)?));
    }
    Ok(excess_argmax(scored, threshold).map(|i| successors[i].observation))
}

/// Observer called with the trace row and bounds after every trial
/// (including trial 0).
pub trait TrialObserver {
    fn on_trial(&mut self, row: &TraceRow, bounds: &BoundsPair);
}

impl<F: FnMut(&TraceRow, &BoundsPair)> TrialObserver for F {
    fn on_trial(&mut self, row: &TraceRow, bounds: &BoundsPair) {
        self(row, bounds)
    }
}

struct NoObserver;

impl TrialObserver for NoObserver {
    fn on_trial(&mut self, _: &TraceRow, _: &BoundsPair) {}
}

/// Fixed-epsilon search: trials run until the width at the initial belief
/// is at most `config.epsilon`.
pub fn solve(model: &PomdpModel, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    run(model, config, false, &mut NoObserver)
}

/// Anytime search: each trial targets `zeta` times the current width at the
/// initial belief.
pub fn solve_anytime(model: &PomdpModel, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    run(model, config, true, &mut NoObserver)
}

pub fn solve_with_observer<O: TrialObserver>(
    model: &PomdpModel,
    config: &SolverConfig,
    anytime: bool,
    observer: &mut O,
) -> Result<SolveResult, SolverError> {
    run(model, config, anytime, observer)
}

fn audit_beliefs(model: &PomdpModel, count: usize, seed: u64) -> Vec<Belief> {
    let ns = model.num_states();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![model.initial_belief().clone()];
    for _ in 0..count {
        // Sparse random beliefs: a few states with exponential weights.
        let k = rng.gen_range(1..=ns.min(4));
        let weights: Vec<(usize, f64)> = (0..k)
            .map(|_| (rng.gen_range(0..ns), -rng.gen::<f64>().max(1e-12).ln()))
            .collect();
        out.push(Belief::from_weights(ns, weights).expect("positive weights"));
    }
    out
}

struct Auditor {
    beliefs: Vec<Belief>,
    previous: Vec<(f64, f64)>,
    report: AuditReport,
}

impl Auditor {
    fn new(beliefs: Vec<Belief>) -> Self {
        let n = beliefs.len();
        Auditor {
            beliefs,
            previous: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
            report: AuditReport {
                beliefs: n,
                ..Default::default()
            },
        }
    }

    fn check(&mut self, bounds: &BoundsPair, exec: Execution) -> Result<(), LpError> {
        let beliefs = &self.beliefs;
        let current = exec.try_map_range(beliefs.len(), |i| {
            bounds.interval(&beliefs[i]).map(|v| (v.lower, v.upper))
        })?;
        for ((lo, hi), (plo, phi)) in current.iter().zip(self.previous.iter_mut()) {
            self.report.checks += 1;
            if *lo < *plo - AUDIT_MONOTONE_SLACK {
                self.report.lower_decreases += 1;
            }
            if *hi > *phi + AUDIT_MONOTONE_SLACK {
                self.report.upper_increases += 1;
            }
            if *lo > *hi + AUDIT_ORDER_SLACK {
                self.report.crossings += 1;
            }
            *plo = *lo;
            *phi = *hi;
        }
        Ok(())
    }
}

fn trace_row(
    search: &Search,
    start: Instant,
    trial: usize,
    trial_epsilon: f64,
    lower_b0: f64,
    upper_b0: f64,
) -> TraceRow {
    TraceRow {
        trial,
        wall_time_s: start.elapsed().as_secs_f64(),
        lower_b0,
        upper_b0,
        width: upper_b0 - lower_b0,
        num_vectors: search.bounds.lower.len(),
        num_points: search.bounds.upper.len(),
        updates: search.updates,
        max_depth: search.trial_max_depth,
        trial_epsilon,
    }
}

fn run<O: TrialObserver>(
    model: &PomdpModel,
    config: &SolverConfig,
    anytime: bool,
    observer: &mut O,
) -> Result<SolveResult, SolverError> {
    config.validate(anytime)?;
    let start = Instant::now();
    let deadline = config.timeout.map(|t| start + t);
    let bounds = BoundsPair::initialize_with(model, config.execution)?;
    let gamma = model.discount();
    let gap = initial_gap(&bounds);
    let b0 = model.initial_belief().clone();
    let target = if anytime {
        config.epsilon.max(WIDTH_FLOOR)
    } else {
        config.epsilon
    };
    let final_t_max = t_max(gamma, target, gap);
    let seed = match config.observation_heuristic {
        ObservationHeuristic::Sampled { seed } => seed,
        ObservationHeuristic::ExcessUncertainty => 0,
    };
    let mut search = Search {
        model,
        bounds,
        updates: 0,
        trial_max_depth: 0,
        deadline,
        timed_out: false,
        depth_cap: final_t_max + DEPTH_MARGIN,
        heuristic: config.observation_heuristic,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let mut auditor = (config.audit_beliefs > 0)
        .then(|| Auditor::new(audit_beliefs(model, config.audit_beliefs, config.audit_seed)));

    let mut trace = SolveTrace::default();
    let mut lower_b0 = search.bounds.lower.value(&b0);
    let mut upper_b0 = search.bounds.upper.value(&b0)?;
    let mut max_depth = 0;
    let mut depth_bound_excess = 0;
    let row = trace_row(&search, start, 0, 0.0, lower_b0, upper_b0);
    trace.rows.push(row);
    observer.on_trial(&row, &search.bounds);
    if let Some(a) = auditor.as_mut() {
        a.check(&search.bounds, config.execution)?;
    }

    let mut trial = 0;
    let terminated_by = loop {
        let width = upper_b0 - lower_b0;
        if width <= target {
            break Termination::EpsilonReached;
        }
        if search.expired() {
            break Termination::Timeout;
        }
        if config.max_trials.is_some_and(|cap| trial >= cap) {
            break Termination::TrialCap;
        }
        let eps = if anytime { config.zeta * width } else { target };
        let trial_t_max = t_max(gamma, eps, gap);
        search.depth_cap = trial_t_max + DEPTH_MARGIN;
        search.trial_max_depth = 0;
        search.explore(&b0, eps, 0)?;
        trial += 1;
        max_depth = max_depth.max(search.trial_max_depth);
        depth_bound_excess = depth_bound_excess.max(search.trial_max_depth.saturating_sub(trial_t_max));

        // Each evaluation is a valid bound, so the tracked values keep the
        // tightest seen.
        lower_b0 = lower_b0.max(search.bounds.lower.value(&b0));
        upper_b0 = upper_b0.min(search.bounds.upper.value(&b0)?);
        let row = trace_row(&search, start, trial, eps, lower_b0, upper_b0);
        trace.rows.push(row);
        observer.on_trial(&row, &search.bounds);
        if let Some(a) = auditor.as_mut() {
            a.check(&search.bounds, config.execution)?;
            let rows = &trace.rows;
            if rows.len() >= 2 && rows[rows.len() - 1].width > rows[rows.len() - 2].width {
                a.report.width_increases += 1;
            }
            if search.trial_max_depth > trial_t_max {
                a.report.depth_violations += 1;
            }
        }
        log::debug!(
            "trial {trial}: [{lower_b0:.6}, {upper_b0:.6}] |G|={} |U|={} depth={}",
            search.bounds.lower.len(),
            search.bounds.upper.len(),
            search.trial_max_depth
        );
        if search.timed_out {
            break Termination::Timeout;
        }
    };

    Ok(SolveResult {
        final_width: upper_b0 - lower_b0,
        lower_b0,
        upper_b0,
        initial_gap: gap,
        t_max: final_t_max,
        u_max: u_max(final_t_max, model.num_actions(), model.num_observations()),
        updates: search.updates,
        max_depth,
        depth_bound_excess,
        audit: auditor.map(|a| a.report),
        bounds: search.bounds,
        trace,
        terminated_by,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelBuilder;

    #[test]
    fn t_max_examples() {
        assert_eq!(t_max(0.95, 1.0, 100.0), 90);
        assert_eq!(t_max(0.95, 1.0, 0.5), 0);
        assert_eq!(t_max(0.0, 0.1, 1.0), 1);
    }

    #[test]
    fn u_max_examples() {
        assert_eq!(u_max(0, 2, 2), 0.0);
        assert_eq!(u_max(2, 2, 1), 2.0 * 7.0);
        assert_eq!(u_max(3, 1, 1), 12.0);
    }

    #[test]
    fn excess_heuristic_arithmetic() {
        let threshold = 0.1 * 0.95f64.powi(-3);
        let excess = 0.5 - threshold;
        assert!((excess - 0.383_36).abs() < 1e-4);
        assert_eq!(excess_argmax([(0.5, 0.5), (0.5, 0.1)], threshold), Some(0));
        assert_eq!(excess_argmax([(0.5, 0.1), (0.5, 0.1)], threshold), None);
        assert_eq!(excess_argmax([(0.5, 0.5), (0.5, 0.5)], threshold), Some(0));
    }

    #[test]
    fn anytime_epsilon_is_zeta_times_width() {
        let cfg = SolverConfig::default();
        assert!((cfg.zeta * 10.0 - 9.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        let mut b = ModelBuilder::new(1, 1, 1);
        b.set_transition(0, 0, 0, 1.0);
        b.set_observation(0, 0, 0, 1.0);
        let m = b.build().unwrap();
        let mut cfg = SolverConfig::with_epsilon(0.0);
        assert!(matches!(solve(&m, &cfg), Err(SolverError::InvalidConfig(_))));
        cfg.epsilon = 0.1;
        cfg.zeta = 1.0;
        assert!(matches!(solve(&m, &cfg), Err(SolverError::InvalidConfig(_))));
    }

    #[test]
    fn zero_reward_converges_immediately() {
        let mut b = ModelBuilder::new(2, 2, 1);
        for a in 0..2 {
            for s in 0..2 {
                b.set_transition(a, s, 1 - s, 1.0);
                b.set_observation(a, s, 0, 1.0);
            }
        }
        let m = b.build().unwrap();
        let r = solve(&m, &SolverConfig::with_epsilon(0.1)).unwrap();
        assert_eq!(r.terminated_by, Termination::EpsilonReached);
        assert_eq!(r.final_width, 0.0);
        assert_eq!(r.trace.rows.len(), 1);
        assert_eq!(r.updates, 0);
        let r = solve_anytime(&m, &SolverConfig::default()).unwrap();
        assert_eq!(r.trace.rows.len(), 1);
    }

    #[test]
    fn single_state_geometric_series() {
        let mut b = ModelBuilder::new(1, 1, 1).discount(0.95);
        b.set_transition(0, 0, 0, 1.0);
        b.set_observation(0, 0, 0, 1.0);
        b.set_reward(0, 0, 1.0);
        let m = b.build().unwrap();
        let r = solve(&m, &SolverConfig::with_epsilon(0.01)).unwrap();
        assert_eq!(r.terminated_by, Termination::EpsilonReached);
        assert!((r.lower_b0 - 20.0).abs() <= 0.01);
        assert!((r.upper_b0 - 20.0).abs() <= 0.01);
    }
}
