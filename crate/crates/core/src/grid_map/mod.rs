//! Occupancy grid world model.
//!
//! `x` is the column index and `y` the row index, with the origin at the top-left
//! corner. A continuous state `(x, y)` lies in the cell `(floor(x), floor(y))`.

pub mod pgm;
pub mod supercover;

use std::fs;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Occupancy grid; `true` marks an obstacle cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    occupancy: Vec<bool>,
}

impl GridMap {
    pub fn new(width: usize, height: usize, occupancy: Vec<bool>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidMap(format!(
                "map must be at least 2x2, got {width}x{height}"
            )));
        }
        if occupancy.len() != width * height {
            return Err(Error::InvalidMap(format!(
                "occupancy has {} cells, expected {}",
                occupancy.len(),
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            occupancy,
        })
    }

    /// An obstacle-free map.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    /// Builds a map from a per-cell predicate `occupied(col, row)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut occupied: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut occupancy = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                occupancy.push(occupied(col, row));
            }
        }
        Self::new(width, height, occupancy)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    #[inline]
    pub fn is_obstacle(&self, col: usize, row: usize) -> bool {
        self.occupancy[row * self.width + col]
    }

    pub fn set_obstacle(&mut self, col: usize, row: usize, occupied: bool) {
        self.occupancy[row * self.width + col] = occupied;
    }

    /// Fills the half-open cell rectangle `[c0, c1) x [r0, r1)`, clipped to the map.
    pub fn fill_rect(&mut self, c0: usize, r0: usize, c1: usize, r1: usize, occupied: bool) {
        for row in r0.min(self.height)..r1.min(self.height) {
            for col in c0.min(self.width)..c1.min(self.width) {
                self.set_obstacle(col, row, occupied);
            }
        }
    }

    pub fn free_cell_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| !o).count()
    }

    pub fn contains<T: Scalar>(&self, s: &State<T>) -> bool {
        let (x, y) = (s.x.as_f64(), s.y.as_f64());
        x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64
    }

    /// The `(col, row)` cell containing `s`.
    pub fn cell_of<T: Scalar>(&self, s: &State<T>) -> Result<(usize, usize)> {
        if !self.contains(s) {
            return Err(self.out_of_bounds(s));
        }
        Ok((s.x.as_f64().floor() as usize, s.y.as_f64().floor() as usize))
    }

    fn out_of_bounds<T: Scalar>(&self, s: &State<T>) -> Error {
        Error::OutOfBounds {
            x: s.x.as_f64(),
            y: s.y.as_f64(),
            width: self.width,
            height: self.height,
        }
    }

    /// Whether the cell containing `s` is free.
    pub fn free_state<T: Scalar>(&self, s: &State<T>) -> Result<bool> {
        let (col, row) = self.cell_of(s)?;
        Ok(!self.is_obstacle(col, row))
    }

    /// Whether every cell touched by the segment `a`–`b` is free.
    ///
    /// The traversal always runs from the lexicographically smaller endpoint so the
    /// answer is exactly symmetric in its arguments.
    pub fn free_edge<T: Scalar>(&self, a: &State<T>, b: &State<T>) -> Result<bool> {
        if !self.contains(a) {
            return Err(self.out_of_bounds(a));
        }
        if !self.contains(b) {
            return Err(self.out_of_bounds(b));
        }
        let (p, q) = canonical_order(a.to_f64_pair(), b.to_f64_pair());
        let (w, h) = (self.width as i64, self.height as i64);
        Ok(supercover::for_each_cell(p, q, |(c, r)| {
            // Corner neighbours may fall one cell outside the map; those are not part of it.
            c < 0 || r < 0 || c >= w || r >= h || !self.is_obstacle(c as usize, r as usize)
        }))
    }

    /// In-bounds cells touched by `a`–`b`, in canonical traversal order.
    pub fn segment_cells<T: Scalar>(&self, a: &State<T>, b: &State<T>) -> Vec<(usize, usize)> {
        let (p, q) = canonical_order(a.to_f64_pair(), b.to_f64_pair());
        supercover::supercover(p, q)
            .into_iter()
            .filter(|&(c, r)| {
                c >= 0 && r >= 0 && (c as usize) < self.width && (r as usize) < self.height
            })
            .map(|(c, r)| (c as usize, r as usize))
            .collect()
    }

    /// Reads a `P5` map: samples below half the maxval (below 128 for maxval 255) are obstacles.
    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        let g = pgm::decode(bytes)?;
        let threshold = u16::from(g.maxval) + 1;
        let occupancy = g
            .pixels
            .iter()
            .map(|&v| 2 * u16::from(v) < threshold)
            .collect();
        Self::new(g.width, g.height, occupancy)
    }

    /// Obstacles as 0, free space as 255.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        pgm::encode(&pgm::Greymap {
            width: self.width,
            height: self.height,
            maxval: 255,
            pixels: self
                .occupancy
                .iter()
                .map(|&o| if o { 0 } else { 255 })
                .collect(),
        })
    }

    pub fn load_pgm(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_pgm_bytes(&bytes)
    }

    pub fn save_pgm(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_pgm_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Three-channel `P6` rendering: free white, obstacles black, start red, goal blue.
    pub fn render_ppm<T: Scalar>(&self, start: &State<T>, goal: &State<T>) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        let start = self.cell_of(start).ok();
        let goal = self.cell_of(goal).ok();
        for row in 0..self.height {
            for col in 0..self.width {
                let rgb = if Some((col, row)) == start {
                    [255, 0, 0]
                } else if Some((col, row)) == goal {
                    [0, 0, 255]
                } else if self.is_obstacle(col, row) {
                    [0, 0, 0]
                } else {
                    [255, 255, 255]
                };
                out.extend_from_slice(&rgb);
            }
        }
        out
    }
}

fn canonical_order(a: (f64, f64), b: (f64, f64)) -> ((f64, f64), (f64, f64)) {
    if (b.0, b.1) < (a.0, a.1) {
        (b, a)
    } else {
        (a, b)
    }
}

/// A continuous planar state in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> State<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn dist_sq(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.x.as_f64(), self.y.as_f64())
    }

    pub fn cast<U: Scalar>(&self) -> State<U> {
        State::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()))
    }
}

/// A sequence of states; consecutive states are distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct Path<T> {
    states: Vec<State<T>>,
}

impl<T: Scalar> Path<T> {
    pub fn new(states: Vec<State<T>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidProblem(
                "a path needs at least one state".into(),
            ));
        }
        if states.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidProblem(
                "consecutive path states must be distinct".into(),
            ));
        }
        Ok(Self { states })
    }

    /// Builds a path, dropping consecutive duplicates.
    pub fn from_states_dedup(mut states: Vec<State<T>>) -> Result<Self> {
        states.dedup();
        Self::new(states)
    }

    pub fn states(&self) -> &[State<T>] {
        &self.states
    }

    pub fn into_states(self) -> Vec<State<T>> {
        self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> &State<T> {
        &self.states[0]
    }

    pub fn last(&self) -> &State<T> {
        &self.states[self.states.len() - 1]
    }

    pub fn cost(&self) -> T {
        path_cost(self)
    }

    pub fn reversed(&self) -> Self {
        let mut states = self.states.clone();
        states.reverse();
        Self { states }
    }

    /// Joins `self` and `other` at a shared endpoint (`self.last() == other.first()`).
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.last() != other.first() {
            return Err(Error::InvalidProblem(
                "paths do not share an endpoint".into(),
            ));
        }
        let mut states = self.states.clone();
        states.extend_from_slice(&other.states[1..]);
        Self::new(states)
    }

    /// Whether every segment of the path is collision-free on `map`.
    pub fn is_collision_free(&self, map: &GridMap) -> Result<bool> {
        if self.states.len() == 1 {
            return map.free_state(&self.states[0]);
        }
        for w in self.states.windows(2) {
            if !map.free_edge(&w[0], &w[1])? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Sum of Euclidean segment lengths.
pub fn path_cost<T: Scalar>(path: &Path<T>) -> T {
    path.states.windows(2).map(|w| w[0].dist(&w[1])).sum()
}

/// Start/goal query on a map; the goal counts as reached anywhere within `goal_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningProblem<T> {
    pub map: GridMap,
    pub start: State<T>,
    pub goal: State<T>,
    pub goal_radius: T,
}

impl<T: Scalar> PlanningProblem<T> {
    pub fn new(map: GridMap, start: State<T>, goal: State<T>, goal_radius: T) -> Result<Self> {
        // NaN fails too
        if goal_radius.is_nan() || goal_radius <= T::zero() {
            return Err(Error::InvalidProblem(format!(
                "goal radius must be positive, got {goal_radius}"
            )));
        }
        for (name, s) in [("start", &start), ("goal", &goal)] {
            if !map.contains(s) {
                return Err(Error::InvalidProblem(format!(
                    "{name} ({}, {}) is outside the map",
                    s.x, s.y
                )));
            }
            if !map.free_state(s)? {
                return Err(Error::InvalidProblem(format!(
                    "{name} ({}, {}) lies in an obstacle",
                    s.x, s.y
                )));
            }
        }
        Ok(Self {
            map,
            start,
            goal,
            goal_radius,
        })
    }

    pub fn in_goal(&self, s: &State<T>) -> bool {
        s.dist(&self.goal) <= self.goal_radius
    }

    pub fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            start: [self.start.x.as_f64(), self.start.y.as_f64()],
            goal: [self.goal.x.as_f64(), self.goal.y.as_f64()],
            goal_radius: self.goal_radius.as_f64(),
        }
    }

    pub fn from_spec(map: GridMap, spec: &ProblemSpec) -> Result<Self> {
        Self::new(
            map,
            State::new(T::lit(spec.start[0]), T::lit(spec.start[1])),
            State::new(T::lit(spec.goal[0]), T::lit(spec.goal[1])),
            T::lit(spec.goal_radius),
        )
    }
}

/// On-disk problem description: `{"start":[x,y], "goal":[x,y], "goal_radius":r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub goal_radius: f64,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("problem JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("problem spec serializes")
    }
}

pub fn load_problem<T: Scalar>(
    map_file: impl AsRef<FsPath>,
    problem_file: impl AsRef<FsPath>,
) -> Result<PlanningProblem<T>> {
    let map = GridMap::load_pgm(map_file)?;
    let path = problem_file.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PlanningProblem::from_spec(map, &ProblemSpec::from_json(&text)?)
}

pub fn save_problem<T: Scalar>(
    problem: &PlanningProblem<T>,
    map_file: impl AsRef<FsPath>,
    problem_file: impl AsRef<FsPath>,
) -> Result<()> {
    problem.map.save_pgm(map_file)?;
    let path = problem_file.as_ref();
    fs::write(path, problem.spec().to_json()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64, y: f64) -> State<f64> {
        State::new(x, y)
    }

    fn walled() -> GridMap {
        // 1-cell-thick vertical wall at column 5 across the full height
        GridMap::from_fn(10, 10, |c, _| c == 5).unwrap()
    }

    #[test]
    fn rejects_degenerate_maps() {
        assert!(GridMap::empty(1, 5).is_err());
        assert!(GridMap::new(3, 3, vec![false; 8]).is_err());
    }

    #[test]
    fn free_state_cases() {
        let m = walled();
        assert!(m.free_state(&s(2.5, 3.5)).unwrap());
        assert!(!m.free_state(&s(5.0, 3.0)).unwrap());
        assert!(!m.free_state(&s(5.99, 9.99)).unwrap());
        assert!(matches!(
            m.free_state(&s(-1.0, 0.0)),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(matches!(
            m.free_state(&s(10.0, 0.0)),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn free_edge_cases() {
        let open = GridMap::empty(32, 32).unwrap();
        assert!(open.free_edge(&s(1.0, 1.0), &s(30.5, 29.2)).unwrap());
        let m = walled();
        assert!(!m.free_edge(&s(1.0, 1.0), &s(8.0, 2.0)).unwrap());
        assert!(m.free_edge(&s(4.5, 4.5), &s(4.5, 4.5)).unwrap());
        assert!(m.free_edge(&s(0.5, 0.5), &s(4.9, 9.5)).unwrap());
        assert!(m.free_edge(&s(1.0, 1.0), &s(12.0, 1.0)).is_err());
    }

    #[test]
    fn corner_cut_between_diagonal_obstacles_is_blocked() {
        // obstacles at (1,0) and (0,1); the diagonal through the shared corner touches both
        let m = GridMap::from_fn(4, 4, |c, r| (c, r) == (1, 0) || (c, r) == (0, 1)).unwrap();
        assert!(!m.free_edge(&s(0.5, 0.5), &s(1.5, 1.5)).unwrap());
    }

    #[test]
    fn path_cost_examples() {
        let p = Path::new(vec![s(0.0, 0.0), s(3.0, 4.0)]).unwrap();
        assert_eq!(path_cost(&p), 5.0);
        let p = Path::new(vec![s(0.0, 0.0), s(3.0, 4.0), s(3.0, 10.0)]).unwrap();
        assert_eq!(path_cost(&p), 11.0);
        let p = Path::new(vec![s(7.0, 7.0)]).unwrap();
        assert_eq!(path_cost(&p), 0.0);
    }

    #[test]
    fn path_rejects_repeated_states() {
        assert!(Path::new(vec![s(1.0, 1.0), s(1.0, 1.0)]).is_err());
        assert!(Path::<f64>::new(vec![]).is_err());
        let p = Path::from_states_dedup(vec![s(1.0, 1.0), s(1.0, 1.0), s(2.0, 1.0)]).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn pgm_threshold_rule() {
        let mut bytes = b"P5\n4 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 127, 128, 255, 255, 255, 1, 200]);
        let m = GridMap::from_pgm_bytes(&bytes).unwrap();
        assert_eq!(
            m.occupancy(),
            &[true, true, false, false, false, false, true, false]
        );
    }

    #[test]
    fn problem_rejects_start_in_obstacle() {
        let err = PlanningProblem::new(walled(), s(5.5, 1.0), s(1.0, 1.0), 2.0);
        assert!(matches!(err, Err(Error::InvalidProblem(_))));
        let err = PlanningProblem::new(walled(), s(1.5, 1.0), s(1.0, 1.0), 0.0);
        assert!(matches!(err, Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn problem_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (mp, pp) = (dir.path().join("m.pgm"), dir.path().join("p.json"));
        let problem =
            PlanningProblem::new(walled(), s(1.1 / 3.0, 2.0), s(8.25, 7.0 + 1e-13), 2.5).unwrap();
        save_problem(&problem, &mp, &pp).unwrap();
        let back: PlanningProblem<f64> = load_problem(&mp, &pp).unwrap();
        assert_eq!(back, problem);
    }

    #[test]
    fn json_start_in_obstacle_is_invalid_problem() {
        let dir = tempfile::tempdir().unwrap();
        let (mp, pp) = (dir.path().join("m.pgm"), dir.path().join("p.json"));
        walled().save_pgm(&mp).unwrap();
        fs::write(
            &pp,
            r#"{"start":[5.5,2.0],"goal":[1.0,1.0],"goal_radius":3}"#,
        )
        .unwrap();
        assert!(matches!(
            load_problem::<f64>(&mp, &pp),
            Err(Error::InvalidProblem(_))
        ));
        fs::write(&pp, r#"{"start":[5.5,2.0]"#).unwrap();
        assert!(matches!(
            load_problem::<f64>(&mp, &pp),
            Err(Error::Parse(_))
        ));
    }
}
