use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::nearest::GridIndex;
use super::{solution_path, steer, success_result, PlanOutput, PlannerConfig, PlannerResult, Tree};
use crate::error::Result;
use crate::grid_map::{PlanningProblem, State};
use crate::heuristic::HeuristicSampler;
use crate::scalar::Scalar;

/// RRT with the heuristic sampler substituted for uniform sampling.
pub fn rrt_plan<T: Scalar>(
    problem: &PlanningProblem<T>,
    config: &PlannerConfig<T>,
    sampler: &HeuristicSampler,
) -> Result<PlannerResult<T>> {
    Ok(rrt_plan_traced(problem, config, sampler)?.result)
}

pub fn rrt_plan_traced<T: Scalar>(
    problem: &PlanningProblem<T>,
    config: &PlannerConfig<T>,
    sampler: &HeuristicSampler,
) -> Result<PlanOutput<T>> {
    grow(problem, config, sampler, false)
}

/// RRT* (fixed-radius ChooseParent and Rewire) with the heuristic sampler.
pub fn rrt_star_plan<T: Scalar>(
    problem: &PlanningProblem<T>,
    config: &PlannerConfig<T>,
    sampler: &HeuristicSampler,
) -> Result<PlannerResult<T>> {
    Ok(rrt_star_plan_traced(problem, config, sampler)?.result)
}

pub fn rrt_star_plan_traced<T: Scalar>(
    problem: &PlanningProblem<T>,
    config: &PlannerConfig<T>,
    sampler: &HeuristicSampler,
) -> Result<PlanOutput<T>> {
    grow(problem, config, sampler, true)
}

struct Search<'a, T> {
    problem: &'a PlanningProblem<T>,
    config: &'a PlannerConfig<T>,
    tree: Tree<T>,
    index: GridIndex<T>,
}

impl<T: Scalar> Search<'_, T> {
    fn insert(&mut self, state: State<T>, parent: usize) -> usize {
        let v = self.tree.add(state, parent);
        self.index.insert(v, &state);
        v
    }

    /// The repeat-until-free loop: sample, find the nearest vertex and steer until the
    /// new state is free. `None` if the retry budget runs out.
    fn free_extension(
        &self,
        sampler: &HeuristicSampler,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<(usize, State<T>)>> {
        for _ in 0..self.config.max_free_retries {
            let target: State<T> = sampler.sample(rng);
            let nearest = self
                .index
                .nearest(&target, self.tree.vertices())
                .expect("tree always holds the root");
            let new = steer(self.tree.vertex(nearest), &target, self.config.step_size);
            if new == *self.tree.vertex(nearest) || !self.problem.map.contains(&new) {
                continue;
            }
            if self.problem.map.free_state(&new)? {
                return Ok(Some((nearest, new)));
            }
        }
        Ok(None)
    }

    /// Lowest cost-to-come parent among free connections within the rewire radius,
    /// falling back to `nearest`.
    fn choose_parent(
        &self,
        new: &State<T>,
        nearest: usize,
        near: &[usize],
    ) -> Result<Option<usize>> {
        let mut candidates: Vec<(T, usize)> = near
            .iter()
            .chain(std::iter::once(&nearest))
            .map(|&v| (self.tree.cost_to_come(v) + self.tree.vertex(v).dist(new), v))
            .collect();
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        candidates.dedup_by_key(|c| c.1);
        for (_, v) in candidates {
            if self.problem.map.free_edge(self.tree.vertex(v), new)? {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    fn rewire(&mut self, new: usize, near: &[usize]) -> Result<()> {
        let parent = self.tree.parent(new);
        for &v in near {
            if Some(v) == parent || v == new {
                continue;
            }
            let through =
                self.tree.cost_to_come(new) + self.tree.vertex(new).dist(self.tree.vertex(v));
            if through < self.tree.cost_to_come(v)
                && self
                    .problem
                    .map
                    .free_edge(self.tree.vertex(new), self.tree.vertex(v))?
            {
                self.tree.reparent(v, new);
            }
        }
        Ok(())
    }

    /// Cost of reaching the goal ball through `v`, including the final hop to the goal when free.
    fn goal_cost(&self, v: usize, link: T) -> T {
        self.tree.cost_to_come(v) + link
    }
}

fn grow<T: Scalar>(
    problem: &PlanningProblem<T>,
    config: &PlannerConfig<T>,
    sampler: &HeuristicSampler,
    star: bool,
) -> Result<PlanOutput<T>> {
    config.validate()?;
    let map = &problem.map;
    let mut search = Search {
        problem,
        config,
        tree: Tree::new(problem.start),
        index: GridIndex::new(map.width(), map.height(), config.step_size),
    };
    search.index.insert(0, &problem.start);

    if problem.in_goal(&problem.start) {
        let result = success_result(problem, &search.tree, 0, 0)?;
        return Ok(PlanOutput {
            result,
            tree: search.tree,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let refine = star && config.refine;
    // goal-ball vertices with the length of their free final hop (0 when blocked)
    let mut goal_vertices: Vec<(usize, T)> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;

    for iter in 1..=config.max_iterations {
        iterations = iter;
        let Some((nearest, new_state)) = search.free_extension(sampler, &mut rng)? else {
            continue;
        };

        let new = if star {
            let near =
                search
                    .index
                    .within(&new_state, config.rewire_radius, search.tree.vertices());
            let Some(parent) = search.choose_parent(&new_state, nearest, &near)? else {
                continue;
            };
            let v = search.insert(new_state, parent);
            search.rewire(v, &near)?;
            if config.audit {
                assert!(
                    search.tree.is_consistent(T::lit(1e-9)),
                    "cost-to-come invariant broken after iteration {iter}"
                );
            }
            v
        } else {
            if !map.free_edge(search.tree.vertex(nearest), &new_state)? {
                continue;
            }
            search.insert(new_state, nearest)
        };

        if problem.in_goal(&new_state) {
            if !refine {
                let result = success_result(problem, &search.tree, new, iter)?;
                return Ok(PlanOutput {
                    result,
                    tree: search.tree,
                });
            }
            let link = if map.free_edge(&new_state, &problem.goal)? {
                new_state.dist(&problem.goal)
            } else {
                T::zero()
            };
            goal_vertices.push((new, link));
        }
        if let Some(best) = goal_vertices
            .iter()
            .map(|&(v, link)| search.goal_cost(v, link))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            history.push((iter, best));
        }
    }

    let best = goal_vertices.iter().copied().min_by(|a, b| {
        let (ca, cb) = (search.goal_cost(a.0, a.1), search.goal_cost(b.0, b.1));
        ca.partial_cmp(&cb).unwrap().then(a.0.cmp(&b.0))
    });
    let result = match best {
        Some((v, _)) => {
            let path = solution_path(problem, &search.tree, v)?;
            PlannerResult {
                success: true,
                iterations,
                node_count: search.tree.len(),
                cost: Some(path.cost()),
                path: Some(path),
                cost_history: history,
            }
        }
        None => PlannerResult::failure(iterations, search.tree.len()),
    };
    Ok(PlanOutput {
        result,
        tree: search.tree,
    })
}
