//! Point-set upper bound evaluated by convex-hull projection.

use crate::belief::Belief;
use crate::lp::{project, LpError};
use crate::model::PomdpModel;
use crate::par::Execution;

use super::{bellman, ValueFunction};

/// L1 distance under which two beliefs count as the same point.
pub const DEDUP_DISTANCE: f64 = 1e-9;

/// Slack on `H V(b_i) < v_i` before a stored value is lowered in pruning.
pub const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct UpperPoint {
    pub belief: Belief,
    pub value: f64,
}

/// Upper bound represented by simplex-corner values plus interior
/// belief/value points.
#[derive(Debug, Clone)]
pub struct UpperBound {
    corner_beliefs: Vec<Belief>,
    corners: Vec<f64>,
    points: Vec<UpperPoint>,
    /// Interior points keyed by the first state of their support.
    by_first_state: Vec<Vec<usize>>,
    size_at_last_prune: usize,
}

impl UpperBound {
    /// Bound made of the `|S|` simplex corners only.
    pub fn from_corners(values: Vec<f64>) -> Self {
        let ns = values.len();
        assert!(ns > 0);
        UpperBound {
            corner_beliefs: (0..ns).map(|s| Belief::point(ns, s)).collect(),
            corners: values,
            points: Vec::new(),
            by_first_state: vec![Vec::new(); ns],
            size_at_last_prune: ns,
        }
    }

    pub fn num_states(&self) -> usize {
        self.corners.len()
    }

    pub fn corner_values(&self) -> &[f64] {
        &self.corners
    }

    /// Interior (non-corner) points.
    pub fn points(&self) -> &[UpperPoint] {
        &self.points
    }

    /// Corners plus interior points.
    pub fn len(&self) -> usize {
        self.corners.len() + self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Every stored belief/value pair, corners first.
    pub fn all_points(&self) -> impl Iterator<Item = (&Belief, f64)> + '_ {
        self.corner_beliefs
            .iter()
            .zip(self.corners.iter().copied())
            .chain(self.points.iter().map(|p| (&p.belief, p.value)))
    }

    fn candidates<'a>(
        &'a self,
        b: &'a Belief,
        skip: Option<usize>,
    ) -> impl Iterator<Item = (&'a Belief, f64)> + 'a {
        let corners = b.iter().map(move |(s, _)| (&self.corner_beliefs[s], self.corners[s]));
        let interior = b
            .iter()
            .flat_map(move |(s, _)| self.by_first_state[s].iter().copied())
            .filter(move |&i| Some(i) != skip)
            .map(move |i| (&self.points[i].belief, self.points[i].value));
        corners.chain(interior)
    }

    /// Hull projection at `b`; exact stored value at a corner.
    pub fn value(&self, b: &Belief) -> Result<f64, LpError> {
        if let Some(s) = b.as_point() {
            return Ok(self.corners[s]);
        }
        project(b, self.candidates(b, None))
    }

    fn value_without(&self, b: &Belief, skip: usize) -> Result<f64, LpError> {
        project(b, self.candidates(b, Some(skip)))
    }

    /// Adds `(b, value)`. At a corner the stored value is lowered if
    /// `value` is smaller. A belief within [`DEDUP_DISTANCE`] of an
    /// interior point replaces it when lower and is dropped otherwise.
    pub fn insert(&mut self, b: Belief, value: f64) {
        if let Some(s) = b.as_point() {
            if value < self.corners[s] {
                self.corners[s] = value;
            }
            return;
        }
        let first = b.entries()[0].0;
        let existing = self.by_first_state[first]
            .iter()
            .copied()
            .find(|&i| self.points[i].belief.l1_distance(&b) <= DEDUP_DISTANCE);
        match existing {
            Some(i) => {
                if value < self.points[i].value {
                    self.points[i] = UpperPoint { belief: b, value };
                }
            }
            None => {
                self.by_first_state[first].push(self.points.len());
                self.points.push(UpperPoint { belief: b, value });
            }
        }
    }

    /// True once the point set has grown by 10% since the last prune.
    pub fn needs_prune(&self) -> bool {
        self.len() * 10 >= self.size_at_last_prune * 11
    }

    fn rebuild_index(&mut self) {
        for bucket in self.by_first_state.iter_mut() {
            bucket.clear();
        }
        for (i, p) in self.points.iter().enumerate() {
            self.by_first_state[p.belief.entries()[0].0].push(i);
        }
    }

    /// Prunes the interior points.
    ///
    /// First every point whose Bellman update is strictly lower than its
    /// stored value (`H V(b_i) < v_i`) gets that lower value, with `H V`
    /// evaluated on the current set including `b_i`. Then points lying on
    /// or above the hull of the remaining points are dropped one at a time.
    /// The bound never rises anywhere. Returns the number of points removed.
    pub fn prune(&mut self, model: &PomdpModel, exec: Execution) -> Result<usize, LpError> {
        let backed_up = {
            let this = &*self;
            exec.try_map_range(this.points.len(), |i| {
                bellman(model, this, &this.points[i].belief).map(|(_, v)| v)
            })?
        };
        for (p, h) in self.points.iter_mut().zip(backed_up) {
            if h < p.value - PRUNE_SLACK {
                p.value = h;
            }
        }

        let flagged = {
            let this = &*self;
            exec.try_map_range(this.points.len(), |i| {
                let p = &this.points[i];
                this.value_without(&p.belief, i).map(|v| p.value >= v)
            })?
        };
        let before = self.points.len();
        for i in (0..before).rev() {
            if flagged[i] && self.points[i].value >= self.value_without(&self.points[i].belief, i)? {
                self.points.swap_remove(i);
                self.rebuild_index();
            }
        }
        self.size_at_last_prune = self.len();
        Ok(before - self.points.len())
    }
}

impl ValueFunction for UpperBound {
    fn value(&self, b: &Belief) -> Result<f64, LpError> {
        UpperBound::value(self, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_values_are_exact() {
        let ub = UpperBound::from_corners(vec![0.1, 0.2, 0.3]);
        assert_eq!(ub.value(&Belief::point(3, 1)).unwrap(), 0.2);
        assert!((ub.value(&Belief::uniform(3)).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn insert_lowers_hull_and_dedups() {
        let mut ub = UpperBound::from_corners(vec![10.0, 10.0]);
        let mid = Belief::uniform(2);
        ub.insert(mid.clone(), 4.0);
        assert!((ub.value(&mid).unwrap() - 4.0).abs() < 1e-12);
        let nearly = Belief::from_weights(2, [(0, 0.5 + 1e-12), (1, 0.5)]).unwrap();
        ub.insert(nearly.clone(), 5.0);
        assert_eq!(ub.points().len(), 1);
        assert_eq!(ub.points()[0].value, 4.0);
        ub.insert(nearly, 3.0);
        assert_eq!(ub.points().len(), 1);
        assert_eq!(ub.points()[0].value, 3.0);
    }

    #[test]
    fn corner_insert_only_lowers() {
        let mut ub = UpperBound::from_corners(vec![1.0, 1.0]);
        ub.insert(Belief::point(2, 0), 2.0);
        assert_eq!(ub.corner_values(), &[1.0, 1.0]);
        ub.insert(Belief::point(2, 0), 0.5);
        assert_eq!(ub.corner_values(), &[0.5, 1.0]);
    }
}
