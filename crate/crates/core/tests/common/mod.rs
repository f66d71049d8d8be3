//! Reference implementations used as test oracles. Everything here works
//! on dense arrays and shares no code with the library beyond reading model
//! entries.

#![allow(dead_code)]

use hsvi::{Belief, ModelBuilder, PomdpModel};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Dense copy of a model: `t[a][s][s']`, `o[a][s'][o]`, `r[a][s]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub t: Vec<Vec<Vec<f64>>>,
    pub o: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl Dense {
    pub fn of(m: &PomdpModel) -> Self {
        let (ns, na, no) = (m.num_states(), m.num_actions(), m.num_observations());
        Dense {
            t: (0..na)
                .map(|a| (0..ns).map(|s| (0..ns).map(|n| m.transition(s, a, n)).collect()).collect())
                .collect(),
            o: (0..na)
                .map(|a| (0..ns).map(|n| (0..no).map(|o| m.observation(n, a, o)).collect()).collect())
                .collect(),
            r: (0..na).map(|a| (0..ns).map(|s| m.reward(s, a)).collect()).collect(),
            gamma: m.discount(),
        }
    }

    pub fn ns(&self) -> usize {
        self.r[0].len()
    }

    pub fn na(&self) -> usize {
        self.r.len()
    }

    pub fn no(&self) -> usize {
        self.o[0][0].len()
    }

    /// Unnormalized posterior `sum_s b(s) T(s, a, s') O(s', a, o)`.
    pub fn joint(&self, b: &[f64], a: usize, o: usize) -> Vec<f64> {
        let ns = self.ns();
        (0..ns)
            .map(|n| {
                let pred: f64 = (0..ns).map(|s| b[s] * self.t[a][s][n]).sum();
                pred * self.o[a][n][o]
            })
            .collect()
    }

    /// Bayes' rule; `None` for an impossible observation.
    pub fn update(&self, b: &[f64], a: usize, o: usize) -> Option<(f64, Vec<f64>)> {
        let joint = self.joint(b, a, o);
        let p: f64 = joint.iter().sum();
        (p > 0.0).then(|| (p, joint.iter().map(|x| x / p).collect()))
    }

    /// `max_a [R_a . b + gamma sum_o Pr(o) max_alpha alpha . b']`, written
    /// straight from the definition.
    pub fn q_lower(&self, vectors: &[Vec<f64>], b: &[f64], a: usize) -> f64 {
        let immediate: f64 = b.iter().zip(&self.r[a]).map(|(p, r)| p * r).sum();
        let mut future = 0.0;
        for o in 0..self.no() {
            if let Some((p, post)) = self.update(b, a, o) {
                let best = vectors
                    .iter()
                    .map(|v| dot(v, &post))
                    .fold(f64::NEG_INFINITY, f64::max);
                future += p * best;
            }
        }
        immediate + self.gamma * future
    }

    pub fn bellman_lower(&self, vectors: &[Vec<f64>], b: &[f64]) -> f64 {
        (0..self.na())
            .map(|a| self.q_lower(vectors, b, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_reward(d: &Dense) -> f64 {
    d.r.iter().flatten().fold(0.0f64, |m, r| m.max(r.abs()))
}

/// Random distribution with roughly `zero_frac` of the entries zeroed.
pub fn random_distribution<R: Rng>(rng: &mut R, n: usize, zero_frac: f64) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen::<f64>() < zero_frac {
                    0.0
                } else {
                    -rng.gen::<f64>().max(1e-12).ln()
                }
            })
            .collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            return w.iter().map(|x| x / total).collect();
        }
    }
}

/// Random model with rewards in `[-1, 1]`.
pub fn random_model<R: Rng>(rng: &mut R, ns: usize, na: usize, no: usize, gamma: f64) -> PomdpModel {
    let mut b = ModelBuilder::new(ns, na, no).discount(gamma);
    for a in 0..na {
        for s in 0..ns {
            b.set_transition_row(a, s, &random_distribution(rng, ns, 0.3));
            for (o, p) in random_distribution(rng, no, 0.3).into_iter().enumerate() {
                b.set_observation(a, s, o, p);
            }
            b.set_reward(a, s, rng.gen_range(-1.0..=1.0));
        }
    }
    let start = random_distribution(rng, ns, 0.2);
    b.set_initial_belief(Belief::from_dense(&start).unwrap());
    b.build().unwrap()
}

pub fn random_belief<R: Rng>(rng: &mut R, ns: usize) -> Belief {
    Belief::from_dense(&random_distribution(rng, ns, 0.3)).unwrap()
}

/// `max b . (alpha - w)` over the simplex and over every `w` in `others`;
/// returns the witness belief when the margin exceeds `tol`.
fn witness(alpha: &[f64], others: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    let ns = alpha.len();
    if others.is_empty() {
        let mut b = vec![0.0; ns];
        b[0] = 1.0;
        return Some(b);
    }
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let bs: Vec<_> = (0..ns).map(|_| p.add_var(0.0, (0.0, 1.0))).collect();
    let delta = p.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    p.add_constraint(bs.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
    for w in others {
        let mut expr: Vec<_> = bs.iter().enumerate().map(|(s, &v)| (v, alpha[s] - w[s])).collect();
        expr.push((delta, -1.0));
        p.add_constraint(expr, ComparisonOp::Ge, 0.0);
    }
    let sol = p.solve().expect("witness program is feasible and bounded");
    (sol.objective() > tol).then(|| bs.iter().map(|&v| *sol.var_value(v)).collect())
}

/// Minimal subset of `vectors` with the same upper envelope on the simplex
/// (Lark's filter after removing pointwise-dominated vectors).
pub fn prune(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    prune_within(vectors, 1e-10)
}

/// Like [`prune`], but also drops vectors that raise the envelope by at
/// most `tol` anywhere. The envelope of the result is within `tol` of the
/// original everywhere.
pub fn prune_within(mut vectors: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    const TOL: f64 = 1e-10;
    let mut undominated: Vec<Vec<f64>> = Vec::new();
    vectors.sort_by(|a, b| b.iter().sum::<f64>().total_cmp(&a.iter().sum::<f64>()));
    for v in vectors {
        if undominated
            .iter()
            .any(|u| u.iter().zip(&v).all(|(x, y)| *x >= *y - TOL))
        {
            continue;
        }
        undominated.retain(|u| !v.iter().zip(u).all(|(x, y)| *x >= *y - TOL));
        undominated.push(v);
    }
    let mut kept: Vec<Vec<f64>> = Vec::new();
    let mut pending = undominated;
    while let Some(v) = pending.pop() {
        let Some(b) = witness(&v, &kept, tol) else {
            continue;
        };
        pending.push(v);
        let best = (0..pending.len())
            .max_by(|&i, &j| dot(&pending[i], &b).total_cmp(&dot(&pending[j], &b)))
            .unwrap();
        kept.push(pending.swap_remove(best));
    }
    kept
}

/// `horizon`-step value function (terminal value 0) by incremental-pruning
/// dynamic programming with every prune allowed an envelope loss of `tol`.
/// The result undershoots the exact finite-horizon value by at most
/// [`pruning_error`].
pub fn finite_horizon_vectors(d: &Dense, horizon: usize, tol: f64) -> Vec<Vec<f64>> {
    let (ns, na, no) = (d.ns(), d.na(), d.no());
    let mut gamma_set = vec![vec![0.0; ns]];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for a in 0..na {
            let mut acc: Vec<Vec<f64>> = vec![d.r[a].clone()];
            for o in 0..no {
                let projected: Vec<Vec<f64>> = gamma_set
                    .iter()
                    .map(|alpha| {
                        (0..ns)
                            .map(|s| {
                                d.gamma
                                    * (0..ns)
                                        .map(|n| d.t[a][s][n] * d.o[a][n][o] * alpha[n])
                                        .sum::<f64>()
                            })
                            .collect()
                    })
                    .collect();
                let projected = prune_within(projected, tol);
                let mut sum = Vec::with_capacity(acc.len() * projected.len());
                for x in &acc {
                    for y in &projected {
                        sum.push(x.iter().zip(y).map(|(p, q)| p + q).collect());
                    }
                }
                acc = prune_within(sum, tol);
            }
            next.extend(acc);
        }
        gamma_set = prune_within(next, tol);
    }
    gamma_set
}

/// Bound on the loss of [`finite_horizon_vectors`]: each step prunes
/// `2 |O| + 1` times and losses are discounted from step to step.
pub fn pruning_error(d: &Dense, tol: f64) -> f64 {
    (2 * d.no() + 1) as f64 * tol / (1.0 - d.gamma)
}

/// Horizon after which the discounted tail is worth at most `tail`.
pub fn horizon_for_tail(gamma: f64, max_abs_reward: f64, tail: f64) -> usize {
    if max_abs_reward == 0.0 {
        return 0;
    }
    ((tail * (1.0 - gamma) / max_abs_reward).ln() / gamma.ln()).ceil().max(0.0) as usize
}

/// Lowest value at `query` over all convex combinations of at most
/// `|S|` points that reproduce `query`, found by enumerating subsets and
/// solving each linear system. `None` when no combination exists.
pub fn caratheodory(points: &[(Vec<f64>, f64)], query: &[f64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut subset = Vec::new();
    fn recurse(
        start: usize,
        subset: &mut Vec<usize>,
        points: &[(Vec<f64>, f64)],
        query: &[f64],
        best: &mut Option<f64>,
    ) {
        let ns = query.len();
        if !subset.is_empty() {
            let k = subset.len();
            let a = DMatrix::from_fn(ns + 1, k, |r, c| if r < ns { points[subset[c]].0[r] } else { 1.0 });
            let rhs = DVector::from_fn(ns + 1, |r, _| if r < ns { query[r] } else { 1.0 });
            if let Ok(lambda) = a.clone().svd(true, true).solve(&rhs, 1e-12) {
                let residual = (&a * &lambda - &rhs).amax();
                if residual < 1e-9 && lambda.iter().all(|&l| l >= -1e-12) {
                    let value: f64 = subset.iter().zip(lambda.iter()).map(|(&i, l)| l * points[i].1).sum();
                    if best.is_none_or(|b| value < b) {
                        *best = Some(value);
                    }
                }
            }
        }
        if subset.len() == ns {
            return;
        }
        for i in start..points.len() {
            subset.push(i);
            recurse(i + 1, subset, points, query, best);
            subset.pop();
        }
    }
    recurse(0, &mut subset, points, query, &mut best);
    best
}

/// Interval certain to contain `V*(b0)`: the pruned finite-horizon value,
/// widened by the pruning loss above and the discounted tail on both sides.
pub fn value_interval(model: &PomdpModel, tail: f64, tol: f64) -> (f64, f64) {
    let d = Dense::of(model);
    let horizon = horizon_for_tail(d.gamma, max_abs_reward(&d), tail);
    let b0 = model.initial_belief().to_dense();
    let value = finite_horizon_vectors(&d, horizon, tol)
        .iter()
        .map(|v| dot(v, &b0))
        .fold(f64::NEG_INFINITY, f64::max);
    (value - tail, value + pruning_error(&d, tol) + tail)
}
