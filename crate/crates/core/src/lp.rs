//! Dense linear programming for convex-hull projection.
//!
//! [`solve_lp`] minimizes `c . x` subject to `A x = b`, `x >= 0` with a
//! two-phase tableau simplex: Dantzig pricing with a Harris ratio test, and
//! a right-hand side perturbation when the objective stalls on a degenerate
//! vertex.
//! [`hull_projection`] builds the projection program for a belief/value
//! point set.

use thiserror::Error;

use crate::belief::Belief;

/// Entries with magnitude at or below this are never pivoted on.
pub const PIVOT_TOLERANCE: f64 = 1e-9;

/// Reduced costs above `-OPTIMALITY_TOLERANCE` count as non-negative.
pub const OPTIMALITY_TOLERANCE: f64 = 1e-9;

const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Relative objective decrease that counts as progress.
const STALL_TOLERANCE: f64 = 1e-12;

/// Size of the right-hand side perturbation applied to stalled programs,
/// relative to equilibrated rows.
const PERTURBATION: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex exceeded {0} iterations")]
    MaxIterations(usize),
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("non-finite coefficient in linear program")]
    NonFinite,
}

/// `minimize c . x  s.t.  A x = b, x >= 0` with a dense row-major `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    objective: Vec<f64>,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self, LpError> {
        let n = objective.len();
        if rows.len() != rhs.len() {
            return Err(LpError::Dimension(format!(
                "{} constraint rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        let mut matrix = Vec::with_capacity(rows.len() * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(LpError::Dimension(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            matrix.extend(row);
        }
        Self::from_dense(objective, matrix, rhs)
    }

    /// `matrix` holds `rhs.len()` rows of `objective.len()` entries each.
    pub fn from_dense(objective: Vec<f64>, matrix: Vec<f64>, rhs: Vec<f64>) -> Result<Self, LpError> {
        if matrix.len() != objective.len() * rhs.len() {
            return Err(LpError::Dimension(format!(
                "matrix has {} entries, expected {}x{}",
                matrix.len(),
                rhs.len(),
                objective.len()
            )));
        }
        if objective.iter().chain(&matrix).chain(&rhs).any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
        Ok(LpProblem {
            objective,
            matrix,
            rhs,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    fn coeff(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.num_cols() + col]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    /// Basic variable of each surviving constraint row.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

/// Outcome of a primal pass.
enum Pass {
    Optimal,
    /// The objective stopped improving and the right-hand side may still be
    /// perturbed.
    Stalled,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows x (cols + 2)`. Column `cols` is the working right-hand side,
    /// which may be perturbed; column `cols + 1` carries the true one
    /// through every pivot.
    cells: Vec<f64>,
    /// Reduced costs; the two trailing entries are minus the objective for
    /// each right-hand side.
    costs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    /// Tableau for `[matrix | rhs]` given as `rows` rows of `cols + 1`
    /// entries, with no basis or costs yet.
    fn new(rows: usize, cols: usize, augmented: impl Fn(usize, usize) -> f64) -> Self {
        let w = cols + 2;
        let mut cells = vec![0.0; rows * w];
        for r in 0..rows {
            for c in 0..=cols {
                cells[r * w + c] = augmented(r, c);
            }
            cells[r * w + cols + 1] = cells[r * w + cols];
        }
        Tableau {
            rows,
            cols,
            cells,
            costs: vec![0.0; w],
            basis: vec![usize::MAX; rows],
        }
    }

    fn width(&self) -> usize {
        self.cols + 2
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let inv = 1.0 / self.cells[pr * w + pc];
        for c in 0..w {
            self.cells[pr * w + c] *= inv;
        }
        self.cells[pr * w + pc] = 1.0;
        let (before, rest) = self.cells.split_at_mut(pr * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[pc];
            if f != 0.0 {
                for (x, p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        let f = self.costs[pc];
        if f != 0.0 {
            for (x, p) in self.costs.iter_mut().zip(prow.iter()) {
                *x -= f * p;
            }
            self.costs[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Resets the cost row to reduced costs of `objective` (indexed by
    /// column; columns beyond its length cost zero).
    fn price(&mut self, objective: &[f64]) {
        let w = self.width();
        self.costs.clear();
        self.costs.resize(w, 0.0);
        self.costs[..objective.len()].copy_from_slice(objective);
        for r in 0..self.rows {
            let cb = objective.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for c in 0..w {
                    self.costs[c] -= cb * self.cells[r * w + c];
                }
            }
        }
    }

    /// Simplex over columns `< allowed` from a primal feasible basis.
    ///
    /// Pivots use Dantzig pricing with a Harris ratio test. The first time
    /// the objective stops improving, the right-hand side is perturbed to
    /// break the degeneracy; once the perturbed program is solved the true
    /// right-hand side is restored and any resulting infeasibility is
    /// removed with dual simplex pivots. A second stall switches to Bland's
    /// rule for good.
    fn optimize(&mut self, allowed: usize, cap: usize, iterations: &mut usize) -> Result<(), LpError> {
        let mut perturbed = false;
        let mut may_perturb = true;
        loop {
            match self.primal_pass(allowed, cap, iterations, may_perturb)? {
                Pass::Stalled => {
                    self.perturb();
                    perturbed = true;
                    may_perturb = false;
                }
                Pass::Optimal if perturbed => {
                    self.restore_rhs();
                    self.dual_repair(allowed, cap, iterations)?;
                    perturbed = false;
                }
                Pass::Optimal => return Ok(()),
            }
        }
    }

    fn primal_pass(
        &mut self,
        allowed: usize,
        cap: usize,
        iterations: &mut usize,
        may_perturb: bool,
    ) -> Result<Pass, LpError> {
        let mut best = f64::INFINITY;
        let mut stalled = 0;
        let mut bland = false;
        let stall_limit = 2 * self.rows + 10;
        loop {
            let objective = -self.costs[self.cols];
            if objective < best - STALL_TOLERANCE * (1.0 + best.abs().min(objective.abs())) {
                best = objective;
                stalled = 0;
            } else {
                stalled += 1;
            }
            if stalled > stall_limit {
                if may_perturb {
                    return Ok(Pass::Stalled);
                }
                bland = true;
            }
            let enter = if bland {
                (0..allowed).find(|&c| self.costs[c] < -OPTIMALITY_TOLERANCE)
            } else {
                (0..allowed)
                    .filter(|&c| self.costs[c] < -OPTIMALITY_TOLERANCE)
                    .min_by(|&a, &b| self.costs[a].total_cmp(&self.costs[b]))
            };
            let Some(enter) = enter else {
                return Ok(Pass::Optimal);
            };
            if *iterations >= cap {
                return Err(LpError::MaxIterations(cap));
            }
            let leave = if bland {
                self.bland_ratio_test(enter)
            } else {
                self.harris_ratio_test(enter)
            };
            let Some(leave) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(leave, enter);
            *iterations += 1;
        }
    }

    /// Adds a small distinct positive amount to every working right-hand
    /// side entry. The offsets are deterministic.
    fn perturb(&mut self) {
        let w = self.width();
        for r in 0..self.rows {
            let hash = (r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11;
            let unit = hash as f64 / (1u64 << 53) as f64;
            self.cells[r * w + self.cols] += PERTURBATION * (1.0 + unit);
        }
    }

    fn restore_rhs(&mut self) {
        let w = self.width();
        for r in 0..self.rows {
            self.cells[r * w + self.cols] = self.cells[r * w + self.cols + 1];
        }
        self.costs[self.cols] = self.costs[self.cols + 1];
    }

    /// Dual simplex pivots until the right-hand side is feasible again. The
    /// basis is dual feasible on entry, since reduced costs do not depend on
    /// the right-hand side.
    fn dual_repair(&mut self, allowed: usize, cap: usize, iterations: &mut usize) -> Result<(), LpError> {
        loop {
            let leave = (0..self.rows)
                .filter(|&r| self.rhs(r) < -FEASIBILITY_TOLERANCE)
                .min_by(|&a, &b| self.rhs(a).total_cmp(&self.rhs(b)));
            let Some(leave) = leave else {
                return Ok(());
            };
            if *iterations >= cap {
                return Err(LpError::MaxIterations(cap));
            }
            let enter = (0..allowed)
                .filter(|&c| self.at(leave, c) < -PIVOT_TOLERANCE)
                .map(|c| (c, self.costs[c].max(0.0) / -self.at(leave, c)))
                .min_by(|x, y| {
                    x.1.total_cmp(&y.1)
                        .then(self.at(leave, x.0).total_cmp(&self.at(leave, y.0)))
                })
                .map(|(c, _)| c)
                .ok_or(LpError::Infeasible)?;
            self.pivot(leave, enter);
            *iterations += 1;
        }
    }

    /// Smallest ratio, ties to the lowest basic variable.
    fn bland_ratio_test(&self, enter: usize) -> Option<usize> {
        (0..self.rows)
            .filter(|&r| self.at(r, enter) > PIVOT_TOLERANCE)
            .map(|r| (r, self.rhs(r).max(0.0) / self.at(r, enter)))
            .min_by(|x, y| x.1.total_cmp(&y.1).then(self.basis[x.0].cmp(&self.basis[y.0])))
            .map(|(r, _)| r)
    }

    /// Two-pass (Harris) ratio test: find the smallest ratio with the
    /// right-hand sides relaxed by `FEASIBILITY_TOLERANCE`, then take the
    /// largest pivot among rows within that ratio. Large pivots keep the
    /// tableau well conditioned on nearly degenerate hull programs.
    fn harris_ratio_test(&self, enter: usize) -> Option<usize> {
        let bound = (0..self.rows)
            .filter(|&r| self.at(r, enter) > PIVOT_TOLERANCE)
            .map(|r| (self.rhs(r).max(0.0) + FEASIBILITY_TOLERANCE) / self.at(r, enter))
            .min_by(f64::total_cmp)?;
        (0..self.rows)
            .filter(|&r| {
                let a = self.at(r, enter);
                a > PIVOT_TOLERANCE && self.rhs(r).max(0.0) / a <= bound
            })
            .max_by(|&x, &y| {
                self.at(x, enter)
                    .total_cmp(&self.at(y, enter))
                    .then(self.basis[y].cmp(&self.basis[x]))
            })
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width();
        self.cells.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }

    fn solution(&self, p: &LpProblem, iterations: usize) -> LpSolution {
        let mut x = vec![0.0; p.num_cols()];
        for r in 0..self.rows {
            if self.basis[r] < x.len() {
                x[self.basis[r]] = self.rhs(r).max(0.0);
            }
        }
        let value = x.iter().zip(&p.objective).map(|(a, c)| a * c).sum();
        LpSolution {
            value,
            x,
            basis: self.basis.clone(),
            iterations,
        }
    }
}

fn iteration_cap(p: &LpProblem) -> usize {
    10 * (p.num_cols() + p.num_rows()).max(1)
}

/// Each row divided by its largest magnitude. Hull programs can carry
/// belief masses far below the pivot tolerance on some rows.
fn equilibrate(p: &LpProblem) -> LpProblem {
    let n = p.num_cols();
    let mut scaled = p.clone();
    for r in 0..p.num_rows() {
        let row = &mut scaled.matrix[r * n..(r + 1) * n];
        let big = row.iter().fold(p.rhs[r].abs(), |m, x| m.max(x.abs()));
        if big > 0.0 {
            row.iter_mut().for_each(|x| *x /= big);
            scaled.rhs[r] /= big;
        }
    }
    scaled
}

/// Solves the program from scratch (phase one with artificial variables,
/// then phase two).
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    cold_start(&equilibrate(p))
}

fn cold_start(p: &LpProblem) -> Result<LpSolution, LpError> {
    let (m, n) = (p.num_rows(), p.num_cols());
    let cols = n + m;
    let mut t = Tableau::new(m, cols, |r, c| {
        let sign = if p.rhs[r] < 0.0 { -1.0 } else { 1.0 };
        if c < n {
            sign * p.coeff(r, c)
        } else if c == cols {
            sign * p.rhs[r]
        } else if c == n + r {
            1.0
        } else {
            0.0
        }
    });
    t.basis = (n..n + m).collect();
    let mut phase_one_cost = vec![0.0; cols];
    phase_one_cost[n..].iter_mut().for_each(|c| *c = 1.0);
    t.price(&phase_one_cost);

    let cap = iteration_cap(p);
    let mut iterations = 0;
    t.optimize(cols, cap + 10 * m, &mut iterations)?;
    let scale = p.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    if -t.costs[cols] > FEASIBILITY_TOLERANCE * scale {
        return Err(LpError::Infeasible);
    }

    // Drive artificial variables out of the basis; rows where that is
    // impossible are linearly dependent on the others.
    let mut r = 0;
    while r < t.rows {
        if t.basis[r] >= n {
            let best = (0..n)
                .map(|c| (c, t.at(r, c).abs()))
                .filter(|e| e.1 > PIVOT_TOLERANCE)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((c, _)) => t.pivot(r, c),
                None => {
                    t.remove_row(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut t = drop_columns(t, n);
    t.price(&p.objective);
    t.optimize(n, iterations + cap, &mut iterations)?;
    Ok(t.solution(p, iterations))
}

fn drop_columns(t: Tableau, keep: usize) -> Tableau {
    let w = t.width();
    let mut cells = Vec::with_capacity(t.rows * (keep + 2));
    for r in 0..t.rows {
        cells.extend_from_slice(&t.cells[r * w..r * w + keep]);
        cells.extend_from_slice(&t.cells[r * w + t.cols..(r + 1) * w]);
    }
    Tableau {
        rows: t.rows,
        cols: keep,
        cells,
        costs: Vec::new(),
        basis: t.basis,
    }
}

/// Solves the program starting from a caller-supplied basis (one column per
/// row). Falls back to [`solve_lp`] when the basis is singular or
/// infeasible, or when the simplex stalls from it.
pub fn solve_lp_from_basis(p: &LpProblem, basis: &[usize]) -> Result<LpSolution, LpError> {
    let p = &equilibrate(p);
    let (m, n) = (p.num_rows(), p.num_cols());
    if basis.len() != m || basis.iter().any(|&c| c >= n) {
        return cold_start(p);
    }
    let mut t = Tableau::new(m, n, |r, c| if c < n { p.coeff(r, c) } else { p.rhs[r] });
    let mut assigned = vec![false; m];
    for &c in basis {
        let best = (0..m)
            .filter(|&r| !assigned[r])
            .map(|r| (r, t.at(r, c).abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((r, mag)) if mag > PIVOT_TOLERANCE => {
                t.pivot(r, c);
                assigned[r] = true;
            }
            _ => return cold_start(p),
        }
    }
    if (0..m).any(|r| t.rhs(r) < -FEASIBILITY_TOLERANCE) {
        return cold_start(p);
    }
    t.price(&p.objective);
    let mut iterations = 0;
    match t.optimize(n, iteration_cap(p), &mut iterations) {
        Ok(()) => Ok(t.solution(p, iterations)),
        Err(LpError::MaxIterations(_)) => cold_start(p),
        Err(e) => Err(e),
    }
}

/// Lowest value at `query` of the convex hull of `points`:
/// `min sum_i l_i v_i  s.t.  sum_i l_i b_i = query, sum_i l_i = 1, l >= 0`.
///
/// Only points whose support lies inside the query's support can carry
/// weight, so the program is restricted to those points and to the rows of
/// the query's support. Feasibility requires the point-mass beliefs of the
/// query's support to be present.
pub fn hull_projection(points: &[(Belief, f64)], query: &Belief) -> Result<f64, LpError> {
    project(query, points.iter().map(|(b, v)| (b, *v)))
}

pub(crate) fn project<'a, I>(query: &Belief, points: I) -> Result<f64, LpError>
where
    I: IntoIterator<Item = (&'a Belief, f64)>,
{
    let dim = query.dim();
    let mut row_of = vec![usize::MAX; dim];
    for (r, s) in query.support().enumerate() {
        row_of[s] = r;
    }
    let m = query.support_len();

    let mut corner: Vec<Option<usize>> = vec![None; m];
    let mut columns: Vec<(&Belief, f64)> = Vec::new();
    for (b, v) in points {
        if b.dim() != dim {
            return Err(LpError::Dimension(format!(
                "point of dimension {} for query of dimension {dim}",
                b.dim()
            )));
        }
        if !b.iter().all(|(s, _)| row_of[s] != usize::MAX) {
            continue;
        }
        if let Some(s) = b.as_point() {
            let r = row_of[s];
            match corner[r] {
                Some(c) => {
                    let old = columns[c].1;
                    if v < old {
                        columns[c].1 = v;
                    }
                    continue;
                }
                None => corner[r] = Some(columns.len()),
            }
        }
        columns.push((b, v));
    }
    if columns.is_empty() {
        return Err(LpError::Infeasible);
    }

    // The sum-to-one row is implied: every column and the query carry unit
    // mass on the retained rows.
    let n = columns.len();
    let mut matrix = vec![0.0; m * n];
    for (c, (b, _)) in columns.iter().enumerate() {
        for (s, p) in b.iter() {
            matrix[row_of[s] * n + c] = p;
        }
    }
    let objective: Vec<f64> = columns.iter().map(|c| c.1).collect();
    let rhs: Vec<f64> = query.iter().map(|e| e.1).collect();
    let problem = LpProblem::from_dense(objective, matrix, rhs)?;
    let solution = match corner.iter().copied().collect::<Option<Vec<usize>>>() {
        Some(basis) => solve_lp_from_basis(&problem, &basis)?,
        None => solve_lp(&problem)?,
    };
    Ok(solution.value)
}
