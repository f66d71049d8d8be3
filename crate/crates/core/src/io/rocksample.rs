//! RockSample[n, k] generator.
//!
//! State index: `(y * n + x) * 2^k + rocks` where bit `i` of `rocks` is set
//! when rock `i` is good, plus one absorbing terminal state at the end.
//! Actions: North, South, East, West, Sample, Check_1..Check_k.
//! Observations: Good, Bad. Only Check actions are informative; every
//! other action observes Good with probability 1.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::belief::Belief;
use crate::model::{ModelBuilder, PomdpModel};

use super::ModelIoError;

pub const GOOD: usize = 0;
pub const BAD: usize = 1;
pub const DEFAULT_HALF_EFFICIENCY_DISTANCE: f64 = 20.0;

const NORTH: usize = 0;
const SOUTH: usize = 1;
const EAST: usize = 2;
const WEST: usize = 3;
const SAMPLE: usize = 4;
const FIRST_CHECK: usize = 5;

/// Where the rocks and the rover start.
#[derive(Debug, Clone, PartialEq)]
pub struct RockSampleLayout {
    pub rock_positions: Vec<(usize, usize)>,
    pub rover_start: (usize, usize),
}

impl RockSampleLayout {
    /// Rover at `(0, n / 2)`, rocks on `k` distinct other cells drawn with
    /// a ChaCha stream seeded by `seed`.
    pub fn seeded(grid_size: usize, num_rocks: usize, seed: u64) -> Result<Self, ModelIoError> {
        if grid_size == 0 {
            return Err(ModelIoError::InvalidParams("grid size must be positive".into()));
        }
        let cells = grid_size * grid_size;
        if num_rocks + 1 > cells {
            return Err(ModelIoError::InvalidParams(format!(
                "{num_rocks} rocks do not fit on a {grid_size}x{grid_size} grid"
            )));
        }
        let rover_start = (0, grid_size / 2);
        let start_cell = rover_start.1 * grid_size;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rock_positions = sample(&mut rng, cells - 1, num_rocks)
            .into_iter()
            .map(|i| if i >= start_cell { i + 1 } else { i })
            .map(|c| (c % grid_size, c / grid_size))
            .collect();
        Ok(RockSampleLayout {
            rock_positions,
            rover_start,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RockSampleParams {
    pub grid_size: usize,
    pub num_rocks: usize,
    /// `(x, y)` cells, `x` growing towards the exit on the east edge.
    pub rock_positions: Vec<(usize, usize)>,
    pub rover_start: (usize, usize),
    /// Distance at which the sensor efficiency halves.
    pub half_efficiency_distance: f64,
    pub sample_good_reward: f64,
    pub sample_bad_penalty: f64,
    pub exit_reward: f64,
    pub discount: f64,
}

impl RockSampleParams {
    /// Default rewards with the layout drawn from seed 0.
    pub fn new(grid_size: usize, num_rocks: usize) -> Result<Self, ModelIoError> {
        Self::with_layout_seed(grid_size, num_rocks, 0)
    }

    pub fn with_layout_seed(grid_size: usize, num_rocks: usize, seed: u64) -> Result<Self, ModelIoError> {
        let layout = RockSampleLayout::seeded(grid_size, num_rocks, seed)?;
        Ok(Self::with_layout(grid_size, layout))
    }

    pub fn with_layout(grid_size: usize, layout: RockSampleLayout) -> Self {
        RockSampleParams {
            grid_size,
            num_rocks: layout.rock_positions.len(),
            rock_positions: layout.rock_positions,
            rover_start: layout.rover_start,
            half_efficiency_distance: DEFAULT_HALF_EFFICIENCY_DISTANCE,
            sample_good_reward: 10.0,
            sample_bad_penalty: -10.0,
            exit_reward: 10.0,
            discount: 0.95,
        }
    }

    pub fn num_states(&self) -> usize {
        self.grid_size * self.grid_size * (1 << self.num_rocks) + 1
    }

    pub fn num_actions(&self) -> usize {
        self.num_rocks + 5
    }

    /// Index of the state with the rover at `(x, y)` and rock types `rocks`.
    pub fn state_index(&self, x: usize, y: usize, rocks: usize) -> usize {
        ((y * self.grid_size + x) << self.num_rocks) | rocks
    }

    pub fn terminal_state(&self) -> usize {
        self.num_states() - 1
    }

    pub fn check_action(&self, rock: usize) -> usize {
        FIRST_CHECK + rock
    }

    pub fn validate(&self) -> Result<(), ModelIoError> {
        let bad = |m: String| Err(ModelIoError::InvalidParams(m));
        let n = self.grid_size;
        if n == 0 {
            return bad("grid size must be positive".into());
        }
        if self.num_rocks == 0 {
            return bad("need at least one rock".into());
        }
        if self.num_rocks >= usize::BITS as usize - 1 {
            return bad(format!("{} rocks is too many", self.num_rocks));
        }
        if self.rock_positions.len() != self.num_rocks {
            return bad(format!(
                "{} rock positions for {} rocks",
                self.rock_positions.len(),
                self.num_rocks
            ));
        }
        for (i, &(x, y)) in self.rock_positions.iter().enumerate() {
            if x >= n || y >= n {
                return bad(format!("rock {i} at ({x}, {y}) is outside the {n}x{n} grid"));
            }
            if self.rock_positions[..i].contains(&(x, y)) {
                return bad(format!("rocks share cell ({x}, {y})"));
            }
        }
        let (sx, sy) = self.rover_start;
        if sx >= n || sy >= n {
            return bad(format!("rover start ({sx}, {sy}) is outside the grid"));
        }
        if !self.half_efficiency_distance.is_finite() || self.half_efficiency_distance <= 0.0 {
            return bad(format!(
                "half-efficiency distance {} must be positive",
                self.half_efficiency_distance
            ));
        }
        Ok(())
    }

    fn rock_at(&self, x: usize, y: usize) -> Option<usize> {
        self.rock_positions.iter().position(|&p| p == (x, y))
    }
}

/// `2^(-d / d0)`.
pub fn sensor_efficiency(distance: f64, half_efficiency_distance: f64) -> f64 {
    (-distance / half_efficiency_distance).exp2()
}

/// Probability that a check at `distance` reports the true rock type.
pub fn sensor_accuracy(distance: f64, half_efficiency_distance: f64) -> f64 {
    (1.0 + sensor_efficiency(distance, half_efficiency_distance)) / 2.0
}

pub fn gen_rocksample(params: &RockSampleParams) -> Result<PomdpModel, ModelIoError> {
    params.validate()?;
    let n = params.grid_size;
    let k = params.num_rocks;
    let configs = 1usize << k;
    let ns = params.num_states();
    let na = params.num_actions();
    let terminal = params.terminal_state();
    let mut b = ModelBuilder::new(ns, na, 2).discount(params.discount);

    for a in 0..na {
        b.set_transition(a, terminal, terminal, 1.0);
        b.set_observation(a, terminal, GOOD, 1.0);
    }
    for y in 0..n {
        for x in 0..n {
            let here = params.rock_at(x, y);
            for rocks in 0..configs {
                let s = params.state_index(x, y, rocks);
                let moves = [
                    (NORTH, x, (y + 1).min(n - 1)),
                    (SOUTH, x, y.saturating_sub(1)),
                    (WEST, x.saturating_sub(1), y),
                ];
                for (a, nx, ny) in moves {
                    b.set_transition(a, s, params.state_index(nx, ny, rocks), 1.0);
                }
                if x + 1 == n {
                    b.set_transition(EAST, s, terminal, 1.0);
                    b.set_reward(EAST, s, params.exit_reward);
                } else {
                    b.set_transition(EAST, s, params.state_index(x + 1, y, rocks), 1.0);
                }
                match here {
                    Some(i) if rocks & (1 << i) != 0 => {
                        b.set_transition(SAMPLE, s, params.state_index(x, y, rocks & !(1 << i)), 1.0);
                        b.set_reward(SAMPLE, s, params.sample_good_reward);
                    }
                    _ => {
                        b.set_transition(SAMPLE, s, s, 1.0);
                        b.set_reward(SAMPLE, s, params.sample_bad_penalty);
                    }
                }
                for a in NORTH..=SAMPLE {
                    b.set_observation(a, s, GOOD, 1.0);
                }
                for (i, &(rx, ry)) in params.rock_positions.iter().enumerate() {
                    let a = params.check_action(i);
                    b.set_transition(a, s, s, 1.0);
                    let d = (x as f64 - rx as f64).hypot(y as f64 - ry as f64);
                    let p = sensor_accuracy(d, params.half_efficiency_distance);
                    let (good, bad) = if rocks & (1 << i) != 0 { (p, 1.0 - p) } else { (1.0 - p, p) };
                    b.set_observation(a, s, GOOD, good);
                    b.set_observation(a, s, BAD, bad);
                }
            }
        }
    }

    let (sx, sy) = params.rover_start;
    let start_states: Vec<usize> = (0..configs).map(|r| params.state_index(sx, sy, r)).collect();
    let belief = Belief::uniform_over(ns, &start_states).map_err(crate::model::ModelError::from)?;
    b.set_initial_belief(belief);

    let mut actions: Vec<String> = ["north", "south", "east", "west", "sample"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    actions.extend((1..=k).map(|i| format!("check{i}")));
    b.set_names(None, Some(actions), Some(vec!["good".into(), "bad".into()]));
    Ok(b.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        for (n, k, s, a) in [(4, 4, 257, 9), (5, 5, 801, 10), (5, 7, 3201, 12)] {
            let m = gen_rocksample(&RockSampleParams::new(n, k).unwrap()).unwrap();
            assert_eq!((m.num_states(), m.num_actions(), m.num_observations()), (s, a, 2));
        }
    }

    #[test]
    fn sensor_endpoints() {
        assert_eq!(sensor_accuracy(0.0, 20.0), 1.0);
        assert!((sensor_accuracy(1e6, 20.0) - 0.5).abs() < 1e-12);
        assert!((sensor_efficiency(20.0, 20.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn layout_is_reproducible_and_valid() {
        let a = RockSampleLayout::seeded(7, 8, 3).unwrap();
        let b = RockSampleLayout::seeded(7, 8, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.rock_positions.iter().all(|&p| p != a.rover_start));
        let params = RockSampleParams::with_layout(7, a);
        params.validate().unwrap();
    }

    #[test]
    fn out_of_grid_rock_is_rejected() {
        let mut p = RockSampleParams::new(4, 2).unwrap();
        p.rock_positions[1] = (4, 0);
        assert!(matches!(gen_rocksample(&p), Err(ModelIoError::InvalidParams(_))));
    }

    #[test]
    fn sampling_good_rock_makes_it_bad() {
        let p = RockSampleParams::with_layout(
            3,
            RockSampleLayout {
                rock_positions: vec![(1, 1)],
                rover_start: (0, 1),
            },
        );
        let m = gen_rocksample(&p).unwrap();
        let good = p.state_index(1, 1, 1);
        let bad = p.state_index(1, 1, 0);
        assert_eq!(m.transition(good, SAMPLE, bad), 1.0);
        assert_eq!(m.reward(good, SAMPLE), 10.0);
        assert_eq!(m.reward(bad, SAMPLE), -10.0);
        assert_eq!(m.reward(p.state_index(0, 0, 1), SAMPLE), -10.0);
        let edge = p.state_index(2, 0, 1);
        assert_eq!(m.transition(edge, EAST, p.terminal_state()), 1.0);
        assert_eq!(m.reward(edge, EAST), 10.0);
        assert!(m.is_absorbing_zero(p.terminal_state()));
        assert_eq!(m.observation(good, p.check_action(0), GOOD), 1.0);
    }
}
