//! Batch Informed Trees, run until the first solution.
//!
//! Samples arrive in batches through the heuristic sampler. Vertices are expanded
//! lazily into an edge queue ordered by `g(v) + |v - x| + |x - goal|`, and collision
//! checks are deferred until an edge is popped. There is no informed-set pruning.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{success_result, PlanOutput, PlannerConfig, PlannerResult, Tree};
use crate::error::Result;
use crate::grid_map::{PlanningProblem, State};
use crate::heuristic::HeuristicSampler;
use crate::scalar::Scalar;

pub fn bit_star_plan<T: Scalar>(
    problem: &PlanningProblem<T>,
    config: &PlannerConfig<T>,
    sampler: &HeuristicSampler,
) -> Result<PlannerResult<T>> {
    Ok(bit_star_plan_traced(problem, config, sampler)?.result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Target {
    Sample(usize),
    Vertex(usize),
}

/// Min-queue key with deterministic tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Bit<'a, T> {
    problem: &'a PlanningProblem<T>,
    tree: Tree<T>,
    samples: Vec<State<T>>,
    /// Batch in which each sample was drawn; `None` once it joined the tree.
    sample_batch: Vec<Option<usize>>,
    /// Last batch in which each vertex was expanded.
    expanded_in: Vec<Option<usize>>,
    vertex_queue: BinaryHeap<Reverse<(Key, usize)>>,
    edge_queue: BinaryHeap<Reverse<(Key, usize, Target)>>,
    batch: usize,
    radius: T,
}

impl<T: Scalar> Bit<'_, T> {
    fn heuristic(&self, s: &State<T>) -> T {
        s.dist(&self.problem.goal)
    }

    fn push_vertex(&mut self, v: usize) {
        let key = self.tree.cost_to_come(v) + self.heuristic(self.tree.vertex(v));
        self.vertex_queue.push(Reverse((Key(key.as_f64()), v)));
    }

    fn best_vertex_key(&self) -> Option<f64> {
        self.vertex_queue.peek().map(|Reverse((k, _))| k.0)
    }

    fn best_edge_key(&self) -> Option<f64> {
        self.edge_queue.peek().map(|Reverse((k, _, _))| k.0)
    }

    fn expand(&mut self, v: usize) {
        let first_time = self.expanded_in[v].is_none();
        if self.expanded_in[v] == Some(self.batch) {
            return;
        }
        self.expanded_in[v] = Some(self.batch);
        let r2 = self.radius * self.radius;
        let vs = *self.tree.vertex(v);
        let g = self.tree.cost_to_come(v);

        for (x, s) in self.samples.iter().enumerate() {
            let Some(drawn) = self.sample_batch[x] else {
                continue;
            };
            // vertices seen in an earlier batch only connect to the new samples
            if (!first_time && drawn != self.batch) || vs.dist_sq(s) > r2 {
                continue;
            }
            let key = g + vs.dist(s) + self.heuristic(s);
            self.edge_queue
                .push(Reverse((Key(key.as_f64()), v, Target::Sample(x))));
        }
        if first_time {
            for w in 0..self.tree.len() {
                if w == v || Some(w) == self.tree.parent(v) || self.tree.parent(w) == Some(v) {
                    continue;
                }
                let ws = self.tree.vertex(w);
                if vs.dist_sq(ws) > r2 {
                    continue;
                }
                let through = g + vs.dist(ws);
                if through < self.tree.cost_to_come(w) {
                    let key = through + self.heuristic(ws);
                    self.edge_queue
                        .push(Reverse((Key(key.as_f64()), v, Target::Vertex(w))));
                }
            }
        }
    }

    /// r-disc radius `2 eta sqrt(1.5 * free_area / pi) sqrt(ln q / q)` for `q` states.
    fn update_radius(&mut self, eta: f64) {
        let q = (self.tree.len() + self.sample_batch.iter().flatten().count()) as f64;
        let free_area = self.problem.map.free_cell_count() as f64;
        let r = if q > 1.0 {
            2.0 * eta * (1.5 * free_area / PI).sqrt() * (q.ln() / q).sqrt()
        } else {
            f64::INFINITY
        };
        self.radius = T::lit(r.min((free_area * 2.0).sqrt() * 2.0));
    }

    /// Whether `w` lies on the tree path from the root to `v`.
    fn is_ancestor(&self, w: usize, v: usize) -> bool {
        let mut cur = Some(v);
        while let Some(c) = cur {
            if c == w {
                return true;
            }
            cur = self.tree.parent(c);
        }
        false
    }
}

pub fn bit_star_plan_traced<T: Scalar>(
    problem: &PlanningProblem<T>,
    config: &PlannerConfig<T>,
    sampler: &HeuristicSampler,
) -> Result<PlanOutput<T>> {
    config.validate()?;
    let started = Instant::now();
    let mut bit = Bit {
        problem,
        tree: Tree::new(problem.start),
        samples: Vec::new(),
        sample_batch: Vec::new(),
        expanded_in: vec![None],
        vertex_queue: BinaryHeap::new(),
        edge_queue: BinaryHeap::new(),
        batch: 0,
        radius: T::zero(),
    };
    if problem.in_goal(&problem.start) {
        let result = success_result(problem, &bit.tree, 0, 0)?;
        return Ok(PlanOutput {
            result,
            tree: bit.tree,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut drawn = 0usize;
    let mut iterations = 0usize;
    let fail = |bit: Bit<'_, T>, iterations| {
        Ok(PlanOutput {
            result: PlannerResult::failure(iterations, bit.tree.len()),
            tree: bit.tree,
        })
    };

    loop {
        if let Some(limit) = config.time_limit {
            if started.elapsed() > limit {
                return fail(bit, iterations);
            }
        }
        if bit.vertex_queue.is_empty() && bit.edge_queue.is_empty() {
            if drawn >= config.sample_limit {
                return fail(bit, iterations);
            }
            bit.batch += 1;
            if bit.batch == 1 {
                bit.samples.push(problem.goal);
                bit.sample_batch.push(Some(1));
            }
            let count = config.batch_size.min(config.sample_limit - drawn);
            for _ in 0..count {
                let mut accepted = None;
                for _ in 0..config.max_free_retries {
                    let s: State<T> = sampler.sample(&mut rng);
                    if problem.map.free_state(&s)? {
                        accepted = Some(s);
                        break;
                    }
                }
                if let Some(s) = accepted {
                    bit.samples.push(s);
                    bit.sample_batch.push(Some(bit.batch));
                }
                drawn += 1;
            }
            bit.update_radius(config.bit_radius_eta);
            for v in 0..bit.tree.len() {
                bit.push_vertex(v);
            }
        }

        // Expand vertices while they could still yield a better edge than the best queued one.
        while let Some(vk) = bit.best_vertex_key() {
            match bit.best_edge_key() {
                Some(ek) if vk > ek => break,
                _ => {}
            }
            let Reverse((_, v)) = bit.vertex_queue.pop().unwrap();
            bit.expand(v);
        }

        let Some(Reverse((_, v, target))) = bit.edge_queue.pop() else {
            continue;
        };
        iterations += 1;
        let vs = *bit.tree.vertex(v);
        match target {
            Target::Sample(x) => {
                if bit.sample_batch[x].is_none() {
                    continue;
                }
                let xs = bit.samples[x];
                if !problem.map.free_edge(&vs, &xs)? {
                    continue;
                }
                bit.sample_batch[x] = None;
                let nv = bit.tree.add(xs, v);
                bit.expanded_in.push(None);
                if problem.in_goal(&xs) {
                    let result = success_result(problem, &bit.tree, nv, iterations)?;
                    return Ok(PlanOutput {
                        result,
                        tree: bit.tree,
                    });
                }
                bit.push_vertex(nv);
            }
            Target::Vertex(w) => {
                let ws = *bit.tree.vertex(w);
                let through = bit.tree.cost_to_come(v) + vs.dist(&ws);
                if through < bit.tree.cost_to_come(w)
                    && !bit.is_ancestor(w, v)
                    && problem.map.free_edge(&vs, &ws)?
                {
                    bit.tree.reparent(w, v);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_map::GridMap;

    fn open_problem() -> PlanningProblem<f64> {
        PlanningProblem::new(
            GridMap::empty(64, 64).unwrap(),
            State::new(5.0, 5.0),
            State::new(58.0, 58.0),
            5.0,
        )
        .unwrap()
    }

    #[test]
    fn solves_open_map_with_few_nodes() {
        let p = open_problem();
        let cfg = PlannerConfig::<f64>::default();
        let out = bit_star_plan_traced(&p, &cfg, &HeuristicSampler::uniform(64, 64)).unwrap();
        let r = out.result;
        assert!(r.success);
        assert!(r.node_count < 30, "node count {}", r.node_count);
        assert!(p.in_goal(r.path.as_ref().unwrap().last()));
        assert!(out.tree.is_consistent(1e-9));
        for (a, b) in out.tree.edges() {
            assert!(p
                .map
                .free_edge(out.tree.vertex(a), out.tree.vertex(b))
                .unwrap());
        }
    }

    #[test]
    fn zero_sample_limit_fails_immediately() {
        let p = open_problem();
        let cfg = PlannerConfig::<f64> {
            sample_limit: 0,
            ..PlannerConfig::default()
        };
        let r = bit_star_plan(&p, &cfg, &HeuristicSampler::uniform(64, 64)).unwrap();
        assert!(!r.success);
        assert_eq!((r.iterations, r.node_count), (0, 1));
    }

    #[test]
    fn walled_off_goal_exhausts_samples() {
        let map = GridMap::from_fn(64, 64, |c, _| (30..34).contains(&c)).unwrap();
        let p =
            PlanningProblem::new(map, State::new(5.0, 5.0), State::new(58.0, 58.0), 5.0).unwrap();
        let cfg = PlannerConfig::<f64> {
            sample_limit: 120,
            ..PlannerConfig::default()
        };
        let r = bit_star_plan(&p, &cfg, &HeuristicSampler::uniform(64, 64)).unwrap();
        assert!(!r.success);
    }
}
