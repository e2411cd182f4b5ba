//! Sampling-based planners with a pluggable heuristic sampler.
//!
//! All planners stop at their first solution (unless RRT* refinement is requested),
//! are single-threaded, and are deterministic for a fixed seed.

mod bit_star;
mod lsc;
mod nearest;
mod rrt;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid_map::{Path, PlanningProblem, State};
use crate::scalar::Scalar;

pub use bit_star::{bit_star_plan, bit_star_plan_traced};
pub use lsc::lsc_shorten;
pub use nearest::GridIndex;
pub use rrt::{rrt_plan, rrt_plan_traced, rrt_star_plan, rrt_star_plan_traced};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Rrt,
    RrtStar,
    BitStar,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Rrt => "rrt",
            PlannerKind::RrtStar => "rrt_star",
            PlannerKind::BitStar => "bit_star",
        }
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rrt" => Ok(PlannerKind::Rrt),
            "rrt_star" | "rrt*" => Ok(PlannerKind::RrtStar),
            "bit_star" | "bit*" => Ok(PlannerKind::BitStar),
            other => Err(crate::Error::Config(format!("unknown planner {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig<T> {
    /// Steering distance of RRT/RRT* in pixels.
    pub step_size: T,
    /// Outer-loop budget of RRT/RRT*.
    pub max_iterations: usize,
    /// Fixed ChooseParent/Rewire neighbourhood of RRT*.
    pub rewire_radius: T,
    /// Samples added per BIT* batch.
    pub batch_size: usize,
    /// Total BIT* sample budget (the goal state is not counted).
    pub sample_limit: usize,
    /// `eta` in the BIT* r-disc connection radius.
    pub bit_radius_eta: f64,
    /// Probability of drawing from the promising region; used when building samplers.
    pub heuristic_bias: f64,
    pub seed: u64,
    /// Keep refining RRT* after the first solution until `max_iterations`.
    pub refine: bool,
    /// Re-check the RRT* cost-to-come invariant over the whole tree after every iteration.
    pub audit: bool,
    /// Sample/steer attempts per iteration before the iteration is given up.
    pub max_free_retries: usize,
    /// Wall-clock cap for BIT*.
    #[serde(skip)]
    pub time_limit: Option<Duration>,
}

impl<T: Scalar> Default for PlannerConfig<T> {
    fn default() -> Self {
        Self {
            step_size: T::lit(10.0),
            max_iterations: 5000,
            rewire_radius: T::lit(20.0),
            batch_size: 30,
            sample_limit: 1000,
            bit_radius_eta: 1.1,
            heuristic_bias: 0.5,
            seed: 0,
            refine: false,
            audit: false,
            max_free_retries: 10_000,
            time_limit: None,
        }
    }
}

impl<T: Scalar> PlannerConfig<T> {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(crate::Error::Config(msg.to_string()));
        if self.step_size.is_nan() || self.step_size <= T::zero() {
            return bad("step_size must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.rewire_radius.is_nan() || self.rewire_radius <= T::zero() {
            return bad("rewire_radius must be positive");
        }
        if !(0.0..=1.0).contains(&self.heuristic_bias) {
            return bad("heuristic_bias must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerResult<T> {
    pub success: bool,
    pub iterations: usize,
    pub node_count: usize,
    /// Cost of the reported path; `None` on failure.
    pub cost: Option<T>,
    pub path: Option<Path<T>>,
    /// `(iteration, best cost)` after every iteration once a solution exists (RRT* refinement only).
    pub cost_history: Vec<(usize, T)>,
}

impl<T: Scalar> PlannerResult<T> {
    fn failure(iterations: usize, node_count: usize) -> Self {
        Self {
            success: false,
            iterations,
            node_count,
            cost: None,
            path: None,
            cost_history: Vec::new(),
        }
    }
}

/// A planner result together with the final search tree.
#[derive(Debug, Clone)]
pub struct PlanOutput<T> {
    pub result: PlannerResult<T>,
    pub tree: Tree<T>,
}

/// Search tree rooted at the start state.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree<T> {
    vertices: Vec<State<T>>,
    parent: Vec<Option<usize>>,
    cost: Vec<T>,
    children: Vec<Vec<usize>>,
}

impl<T: Scalar> Tree<T> {
    pub fn new(root: State<T>) -> Self {
        Self {
            vertices: vec![root],
            parent: vec![None],
            cost: vec![T::zero()],
            children: vec![Vec::new()],
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[State<T>] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &State<T> {
        &self.vertices[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn cost_to_come(&self, v: usize) -> T {
        self.cost[v]
    }

    /// `(parent, child)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (p, v)))
    }

    pub fn add(&mut self, state: State<T>, parent: usize) -> usize {
        let cost = self.cost[parent] + self.vertices[parent].dist(&state);
        self.vertices.push(state);
        self.parent.push(Some(parent));
        self.cost.push(cost);
        self.children.push(Vec::new());
        let v = self.vertices.len() - 1;
        self.children[parent].push(v);
        v
    }

    /// Moves `v` under `new_parent` and refreshes the cost-to-come of its subtree.
    pub fn reparent(&mut self, v: usize, new_parent: usize) {
        if let Some(old) = self.parent[v] {
            self.children[old].retain(|&c| c != v);
        }
        self.parent[v] = Some(new_parent);
        self.children[new_parent].push(v);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            let p = self.parent[u].expect("reparented subtree has parents");
            self.cost[u] = self.cost[p] + self.vertices[p].dist(&self.vertices[u]);
            stack.extend_from_slice(&self.children[u]);
        }
    }

    /// States from the root to `v`.
    pub fn path_to(&self, v: usize) -> Vec<State<T>> {
        let mut states = vec![self.vertices[v]];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            states.push(self.vertices[p]);
            cur = p;
        }
        states.reverse();
        states
    }

    /// Every non-root cost equals its parent's cost plus the edge length, within `tol`,
    /// and following parents from any vertex reaches the root.
    pub fn is_consistent(&self, tol: T) -> bool {
        if self.parent.first() != Some(&None) || self.cost[0] != T::zero() {
            return false;
        }
        for v in 1..self.len() {
            let Some(p) = self.parent[v] else {
                return false;
            };
            let expected = self.cost[p] + self.vertices[p].dist(&self.vertices[v]);
            if (self.cost[v] - expected).abs() > tol {
                return false;
            }
        }
        // acyclic: every chain reaches the root within len steps
        (0..self.len()).all(|v| {
            let mut cur = v;
            for _ in 0..self.len() {
                match self.parent[cur] {
                    Some(p) => cur = p,
                    None => return cur == 0,
                }
            }
            false
        })
    }
}

/// Moves from `from` toward `to` by at most `step`.
pub fn steer<T: Scalar>(from: &State<T>, to: &State<T>, step: T) -> State<T> {
    let d = from.dist(to);
    if d <= step {
        return *to;
    }
    let k = step / d;
    State::new(from.x + (to.x - from.x) * k, from.y + (to.y - from.y) * k)
}

/// Root-to-`v` path, extended to the exact goal when that last segment is free.
fn solution_path<T: Scalar>(
    problem: &PlanningProblem<T>,
    tree: &Tree<T>,
    v: usize,
) -> Result<Path<T>> {
    let mut states = tree.path_to(v);
    let last = *tree.vertex(v);
    if last != problem.goal && problem.map.free_edge(&last, &problem.goal)? {
        states.push(problem.goal);
    }
    Path::from_states_dedup(states)
}

fn success_result<T: Scalar>(
    problem: &PlanningProblem<T>,
    tree: &Tree<T>,
    v: usize,
    iterations: usize,
) -> Result<PlannerResult<T>> {
    let path = solution_path(problem, tree, v)?;
    Ok(PlannerResult {
        success: true,
        iterations,
        node_count: tree.len(),
        cost: Some(path.cost()),
        path: Some(path),
        cost_history: Vec::new(),
    })
}
