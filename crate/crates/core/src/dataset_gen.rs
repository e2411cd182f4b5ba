//! Random obstacle maps and RRT-derived ground-truth promising regions.
//!
//! Obstacle families (sizes below are for 256 px maps and scale with the shorter side):
//!
//! 1. `Blocks`: axis-aligned rectangles, 16 to 56 px per side.
//! 2. `Walls`: full-length horizontal or vertical walls, 4 to 8 px thick, each with 1 to 3
//!    gaps of 14 to 28 px.
//! 3. `Blobs`: convex polygons inscribed in random rotated ellipses (semi-axes 12 to 36 px).
//! 4. `DeadEnds`: U-shaped cups (and some L-shapes) with 6 px walls; every accepted map
//!    holds at least one open cup whose pocket is a concave dead end.
//! 5. `Clutter`: many small rectangles and discs, 4 to 14 px across.
//!
//! Every accepted map keeps a 4-connected free component covering at least 30% of its
//! area. Ground truth is the union of LSC-shortened plain RRT solutions, rasterized with
//! the supercover traversal, dilated to the stroke width and clipped to free space.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_map::{load_problem, save_problem, GridMap, Path, PlanningProblem, State};
use crate::heuristic::HeuristicSampler;
use crate::planners::{lsc_shorten, rrt_plan, PlannerConfig};
use crate::region_graph::{node_to_edge_labels, EdgeField, RegionMask};

/// Attempts before `gen_map` gives up.
pub const MAX_MAP_RETRIES: usize = 100;
/// Required share of the map covered by the largest free component.
pub const MIN_FREE_FRACTION: f64 = 0.3;
/// Goal-ball radius of sampled problems.
pub const DEFAULT_GOAL_RADIUS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapCategory {
    Blocks,
    Walls,
    Blobs,
    DeadEnds,
    Clutter,
}

/// Evaluation split of a category: 1 to 3 look like typical corridors, 4 and 5 do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryGroup {
    Similar,
    Dissimilar,
}

impl MapCategory {
    pub const ALL: [MapCategory; 5] = [
        MapCategory::Blocks,
        MapCategory::Walls,
        MapCategory::Blobs,
        MapCategory::DeadEnds,
        MapCategory::Clutter,
    ];

    /// 1-based family number.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_number(n: u8) -> Result<Self> {
        Self::ALL
            .get((n as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::Config(format!("map category must be 1..=5, got {n}")))
    }

    pub fn group(self) -> CategoryGroup {
        match self {
            MapCategory::Blocks | MapCategory::Walls | MapCategory::Blobs => CategoryGroup::Similar,
            MapCategory::DeadEnds | MapCategory::Clutter => CategoryGroup::Dissimilar,
        }
    }

    fn default_obstacle_count(self) -> (usize, usize) {
        match self {
            MapCategory::Blocks => (4, 9),
            MapCategory::Walls => (2, 3),
            MapCategory::Blobs => (4, 8),
            MapCategory::DeadEnds => (2, 4),
            MapCategory::Clutter => (40, 70),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapRecipe {
    pub category: MapCategory,
    pub width: usize,
    pub height: usize,
    /// Inclusive range of obstacles placed per attempt.
    pub obstacle_count: (usize, usize),
    pub seed: u64,
}

impl MapRecipe {
    /// 256 x 256 recipe with the family's default obstacle count.
    pub fn new(category: MapCategory, seed: u64) -> Self {
        Self::with_size(category, 256, 256, seed)
    }

    pub fn with_size(category: MapCategory, width: usize, height: usize, seed: u64) -> Self {
        Self {
            category,
            width,
            height,
            obstacle_count: category.default_obstacle_count(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 64 || self.height < 64 {
            return Err(Error::Config(format!(
                "map size must be at least 64x64, got {}x{}",
                self.width, self.height
            )));
        }
        let (lo, hi) = self.obstacle_count;
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!(
                "bad obstacle count range {lo}..={hi}"
            )));
        }
        Ok(())
    }
}

/// What the generator observed about an accepted map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    /// Attempts used, including the accepted one.
    pub attempts: usize,
    /// Largest 4-connected free component over map area.
    pub free_fraction: f64,
    /// Open cup pockets that pass [`is_dead_end_pocket`].
    pub dead_ends: usize,
}

pub fn gen_map(recipe: &MapRecipe) -> Result<GridMap> {
    Ok(gen_map_with_report(recipe)?.0)
}

pub fn gen_map_with_report(recipe: &MapRecipe) -> Result<(GridMap, MapReport)> {
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    for attempt in 1..=MAX_MAP_RETRIES {
        let mut map = GridMap::empty(recipe.width, recipe.height)?;
        let (lo, hi) = recipe.obstacle_count;
        let count = rng.gen_range(lo..=hi);
        let mut pockets = Vec::new();
        let mut painter = Painter {
            map: &mut map,
            scale: recipe.width.min(recipe.height) as f64 / 256.0,
        };
        for _ in 0..count {
            match recipe.category {
                MapCategory::Blocks => painter.block(&mut rng),
                MapCategory::Walls => painter.wall(&mut rng),
                MapCategory::Blobs => painter.blob(&mut rng),
                MapCategory::DeadEnds => {
                    if let Some(p) = painter.cup(&mut rng) {
                        pockets.push(p);
                    }
                }
                MapCategory::Clutter => painter.clutter(&mut rng),
            }
        }
        let free_fraction =
            largest_free_component(&map).len() as f64 / (recipe.width * recipe.height) as f64;
        let dead_ends = pockets
            .iter()
            .filter(|p| is_dead_end_pocket(&map, p.cell, p.open, p.reach))
            .count();
        let needs_dead_end = recipe.category == MapCategory::DeadEnds;
        if free_fraction >= MIN_FREE_FRACTION && (!needs_dead_end || dead_ends > 0) {
            let report = MapReport {
                attempts: attempt,
                free_fraction,
                dead_ends,
            };
            return Ok((map, report));
        }
    }
    Err(Error::GenerationFailed(MAX_MAP_RETRIES))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    Right,
    Left,
    Down,
    Up,
}

impl Heading {
    const ALL: [Heading; 4] = [Heading::Right, Heading::Left, Heading::Down, Heading::Up];

    /// `(dcol, drow)` unit step.
    pub fn step(self) -> (i64, i64) {
        match self {
            Heading::Right => (1, 0),
            Heading::Left => (-1, 0),
            Heading::Down => (0, 1),
            Heading::Up => (0, -1),
        }
    }
}

/// A cup interior cell with the direction of the cup mouth.
#[derive(Debug, Clone, Copy)]
struct Pocket {
    cell: (usize, usize),
    open: Heading,
    reach: usize,
}

/// Whether the free `(col, row)` cell is a concave dead end: rays in the three headings
/// other than `open` hit an obstacle within `reach` cells, while the `open` ray stays
/// free for `reach` cells.
pub fn is_dead_end_pocket(
    map: &GridMap,
    cell: (usize, usize),
    open: Heading,
    reach: usize,
) -> bool {
    let (w, h) = (map.width() as i64, map.height() as i64);
    let free = |c: i64, r: i64| {
        c >= 0 && r >= 0 && c < w && r < h && !map.is_obstacle(c as usize, r as usize)
    };
    let (c0, r0) = (cell.0 as i64, cell.1 as i64);
    if !free(c0, r0) {
        return false;
    }
    Heading::ALL.iter().all(|&dir| {
        let (dc, dr) = dir.step();
        let blocked = (1..=reach as i64).any(|k| !free(c0 + k * dc, r0 + k * dr));
        if dir == open {
            !blocked
        } else {
            blocked
        }
    })
}

struct Painter<'a> {
    map: &'a mut GridMap,
    scale: f64,
}

impl Painter<'_> {
    fn px(&self, v: f64) -> usize {
        ((v * self.scale).round() as usize).max(1)
    }

    fn span(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> usize {
        rng.gen_range(self.px(lo)..=self.px(hi))
    }

    fn fill(&mut self, c0: i64, r0: i64, c1: i64, r1: i64) {
        let clip = |v: i64| v.max(0) as usize;
        self.map
            .fill_rect(clip(c0), clip(r0), clip(c1), clip(r1), true);
    }

    fn block(&mut self, rng: &mut ChaCha8Rng) {
        let (w, h) = self.map.dims();
        let bw = self.span(rng, 16.0, 56.0);
        let bh = self.span(rng, 16.0, 56.0);
        let c = rng.gen_range(0..w.saturating_sub(bw).max(1)) as i64;
        let r = rng.gen_range(0..h.saturating_sub(bh).max(1)) as i64;
        self.fill(c, r, c + bw as i64, r + bh as i64);
    }

    fn wall(&mut self, rng: &mut ChaCha8Rng) {
        let (w, h) = self.map.dims();
        let vertical = rng.gen_bool(0.5);
        let (across, along) = if vertical { (w, h) } else { (h, w) };
        let thick = self.span(rng, 4.0, 8.0);
        let pos =
            rng.gen_range((across as f64 * 0.15) as usize..(across as f64 * 0.85) as usize - thick);
        let mut solid = vec![true; along];
        for _ in 0..rng.gen_range(1..=3) {
            let gap = self.span(rng, 14.0, 28.0);
            let at = rng.gen_range(0..along - gap);
            solid[at..at + gap].iter_mut().for_each(|s| *s = false);
        }
        for (t, _) in solid.iter().enumerate().filter(|(_, s)| **s) {
            for k in pos..pos + thick {
                if vertical {
                    self.map.set_obstacle(k, t, true);
                } else {
                    self.map.set_obstacle(t, k, true);
                }
            }
        }
    }

    fn polygon(&mut self, vertices: &[(f64, f64)]) {
        let (w, h) = self.map.dims();
        let xs = vertices.iter().map(|v| v.0);
        let ys = vertices.iter().map(|v| v.1);
        let (x0, x1) = (
            xs.clone().fold(f64::MAX, f64::min),
            xs.fold(f64::MIN, f64::max),
        );
        let (y0, y1) = (
            ys.clone().fold(f64::MAX, f64::min),
            ys.fold(f64::MIN, f64::max),
        );
        let clamp = |v: f64, n: usize| (v.max(0.0) as usize).min(n);
        for row in clamp(y0.floor(), h)..clamp(y1.ceil() + 1.0, h) {
            for col in clamp(x0.floor(), w)..clamp(x1.ceil() + 1.0, w) {
                let (px, py) = (col as f64 + 0.5, row as f64 + 0.5);
                // counter-clockwise vertices: inside means left of every edge
                let inside = (0..vertices.len()).all(|i| {
                    let (ax, ay) = vertices[i];
                    let (bx, by) = vertices[(i + 1) % vertices.len()];
                    (bx - ax) * (py - ay) - (by - ay) * (px - ax) >= 0.0
                });
                if inside {
                    self.map.set_obstacle(col, row, true);
                }
            }
        }
    }

    fn blob(&mut self, rng: &mut ChaCha8Rng) {
        let (w, h) = self.map.dims();
        let a = self.span(rng, 12.0, 36.0) as f64;
        let b = self.span(rng, 12.0, 36.0) as f64;
        let cx = rng.gen_range(0.0..w as f64);
        let cy = rng.gen_range(0.0..h as f64);
        let rot = rng.gen_range(0.0..PI);
        let k = rng.gen_range(5..=9);
        let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        angles.sort_by(f64::total_cmp);
        // points on an ellipse in angular order form a convex polygon
        let vertices: Vec<(f64, f64)> = angles
            .iter()
            .map(|t| {
                let (ex, ey) = (a * t.cos(), b * t.sin());
                (
                    cx + ex * rot.cos() - ey * rot.sin(),
                    cy + ex * rot.sin() + ey * rot.cos(),
                )
            })
            .collect();
        self.polygon(&vertices);
    }

    /// Places a U (or, 30% of the time, an L); returns the pocket of a U.
    fn cup(&mut self, rng: &mut ChaCha8Rng) -> Option<Pocket> {
        let (w, h) = self.map.dims();
        let thick = self.px(6.0) as i64;
        let depth = self.span(rng, 40.0, 80.0) as i64;
        let inner = self.span(rng, 30.0, 60.0) as i64;
        let breadth = inner + 2 * thick;
        let open = Heading::ALL[rng.gen_range(0..4)];
        let is_u = rng.gen_bool(0.7);
        let (sx, sy) = match open {
            Heading::Right | Heading::Left => (depth, breadth),
            Heading::Down | Heading::Up => (breadth, depth),
        };
        let bx = rng.gen_range(0..(w as i64 - sx).max(1));
        let by = rng.gen_range(0..(h as i64 - sy).max(1));
        // local frame: u runs from the back wall toward the mouth, v across the cup
        let to_map = |u: i64, v: i64| match open {
            Heading::Right => (bx + u, by + v),
            Heading::Left => (bx + depth - 1 - u, by + v),
            Heading::Down => (bx + v, by + u),
            Heading::Up => (bx + v, by + depth - 1 - u),
        };
        let mut local_rect = |u0: i64, v0: i64, u1: i64, v1: i64| {
            let (a, b) = (to_map(u0, v0), to_map(u1 - 1, v1 - 1));
            self.fill(
                a.0.min(b.0),
                a.1.min(b.1),
                a.0.max(b.0) + 1,
                a.1.max(b.1) + 1,
            );
        };
        local_rect(0, 0, thick, breadth);
        local_rect(0, 0, depth, thick);
        if is_u {
            local_rect(0, breadth - thick, depth, breadth);
        }
        let (pc, pr) = to_map(thick, thick + inner / 2);
        (is_u && pc >= 0 && pr >= 0 && (pc as usize) < w && (pr as usize) < h).then(|| Pocket {
            cell: (pc as usize, pr as usize),
            open,
            reach: (depth - thick).max(inner) as usize,
        })
    }

    fn clutter(&mut self, rng: &mut ChaCha8Rng) {
        let (w, h) = self.map.dims();
        let size = self.span(rng, 4.0, 14.0) as i64;
        let c = rng.gen_range(0..w as i64);
        let r = rng.gen_range(0..h as i64);
        if rng.gen_bool(0.5) {
            self.fill(c, r, c + size, r + size);
        } else {
            let rad = size as f64 / 2.0;
            for row in (r - size).max(0)..(r + size).min(h as i64) {
                for col in (c - size).max(0)..(c + size).min(w as i64) {
                    let (dx, dy) = (col as f64 + 0.5 - c as f64, row as f64 + 0.5 - r as f64);
                    if dx * dx + dy * dy <= rad * rad {
                        self.map.set_obstacle(col as usize, row as usize, true);
                    }
                }
            }
        }
    }
}

/// Cells `(col, row)` of the largest 4-connected free component, ties to the earliest
/// component in row-major order.
pub fn largest_free_component(map: &GridMap) -> Vec<(usize, usize)> {
    let (w, h) = map.dims();
    let mut seen = vec![false; w * h];
    let mut best: Vec<(usize, usize)> = Vec::new();
    for start in 0..w * h {
        if seen[start] || map.occupancy()[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            let (c, r) = (i % w, i / w);
            comp.push((c, r));
            for (nc, nr) in neighbours4(c, r, w, h) {
                let n = nr * w + nc;
                if !seen[n] && !map.occupancy()[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best
}

fn neighbours4(c: usize, r: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    let cand = [
        (c.wrapping_add(1), r),
        (c.wrapping_sub(1), r),
        (c, r.wrapping_add(1)),
        (c, r.wrapping_sub(1)),
    ];
    cand.into_iter().filter(move |&(c, r)| c < w && r < h)
}

/// Shortest 4-connected free-cell route between two `(col, row)` cells, endpoints included.
pub fn bfs_free_path(
    map: &GridMap,
    from: (usize, usize),
    to: (usize, usize),
) -> Option<Vec<(usize, usize)>> {
    let (w, h) = map.dims();
    let idx = |(c, r): (usize, usize)| r * w + c;
    if map.is_obstacle(from.0, from.1) || map.is_obstacle(to.0, to.1) {
        return None;
    }
    let mut prev = vec![usize::MAX; w * h];
    prev[idx(from)] = idx(from);
    let mut queue = VecDeque::from([from]);
    while let Some(cell) = queue.pop_front() {
        if cell == to {
            let mut route = vec![to];
            let mut i = idx(to);
            while i != idx(from) {
                i = prev[i];
                route.push((i % w, i / w));
            }
            route.reverse();
            return Some(route);
        }
        for n in neighbours4(cell.0, cell.1, w, h) {
            if prev[idx(n)] == usize::MAX && !map.is_obstacle(n.0, n.1) {
                prev[idx(n)] = idx(cell);
                queue.push_back(n);
            }
        }
    }
    None
}

/// Offsets `lo..=hi` of a square brush `stroke` cells wide.
fn brush(stroke: usize) -> (i64, i64) {
    let s = stroke.max(1) as i64;
    (-(s - 1) / 2, s / 2)
}

/// Marks `cells` dilated by a `stroke`-wide square brush, clipped to free space.
pub fn paint_cells(
    region: &mut RegionMask,
    map: &GridMap,
    cells: &[(usize, usize)],
    stroke: usize,
) {
    let (lo, hi) = brush(stroke);
    let (w, h) = (map.width() as i64, map.height() as i64);
    for &(c, r) in cells {
        for dr in lo..=hi {
            for dc in lo..=hi {
                let (cc, rr) = (c as i64 + dc, r as i64 + dr);
                if cc >= 0
                    && rr >= 0
                    && cc < w
                    && rr < h
                    && !map.is_obstacle(cc as usize, rr as usize)
                {
                    region.set(rr as usize, cc as usize, true);
                }
            }
        }
    }
}

/// Supercover cells of every segment of `states`, in order.
pub fn polyline_cells(map: &GridMap, states: &[State<f64>]) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for seg in states.windows(2) {
        cells.extend(map.segment_cells(&seg[0], &seg[1]));
    }
    if let [only] = states {
        cells.extend(map.cell_of(only).ok());
    }
    cells
}

/// Rasterizes a polyline with a `stroke`-wide brush, clipped to free space.
pub fn rasterize_polyline(map: &GridMap, states: &[State<f64>], stroke: usize) -> RegionMask {
    let mut region = RegionMask::empty(map.width(), map.height());
    paint_cells(&mut region, map, &polyline_cells(map, states), stroke);
    region
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthOptions {
    pub runs: usize,
    pub stroke: usize,
    pub step_size: f64,
    pub max_iterations: usize,
    /// Run `i` uses seed `seed + i`.
    pub seed: u64,
}

impl Default for GroundTruthOptions {
    fn default() -> Self {
        Self {
            runs: 50,
            stroke: 2,
            step_size: 10.0,
            max_iterations: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSample {
    pub problem: PlanningProblem<f64>,
    pub region: RegionMask,
    pub edges: EdgeField<f64>,
}

impl DatasetSample {
    pub fn map(&self) -> &GridMap {
        &self.problem.map
    }
}

/// Runs plain RRT `runs` times and paints the union of the shortened solutions.
pub fn gen_ground_truth(
    problem: &PlanningProblem<f64>,
    opts: &GroundTruthOptions,
) -> Result<DatasetSample> {
    let map = &problem.map;
    let start_cell = map.cell_of(&problem.start)?;
    let goal_cell = map.cell_of(&problem.goal)?;
    if bfs_free_path(map, start_cell, goal_cell).is_none() {
        return Err(Error::Unsolvable);
    }
    let config = PlannerConfig {
        step_size: opts.step_size,
        max_iterations: opts.max_iterations,
        heuristic_bias: 0.0,
        ..PlannerConfig::default()
    };
    let sampler = HeuristicSampler::uniform(map.width(), map.height());
    let paths: Vec<Option<Path<f64>>> = (0..opts.runs)
        .into_par_iter()
        .map(|i| {
            let r = rrt_plan(problem, &config.with_seed(opts.seed + i as u64), &sampler)?;
            r.path.map(|p| lsc_shorten(&p, map)).transpose()
        })
        .collect::<Result<_>>()?;
    let found = paths.iter().flatten().count();
    if found < opts.runs {
        return Err(Error::InsufficientSolutions {
            found,
            required: opts.runs,
        });
    }

    let mut region = RegionMask::empty(map.width(), map.height());
    for path in paths.iter().flatten() {
        let mut cells = polyline_cells(map, path.states());
        // a path that stops inside the goal ball is joined to the goal cell on the free grid
        let end = map.cell_of(path.last())?;
        if end != goal_cell {
            cells.extend(bfs_free_path(map, end, goal_cell).ok_or(Error::Unsolvable)?);
        }
        paint_cells(&mut region, map, &cells, opts.stroke);
    }
    let edges = node_to_edge_labels(&region);
    Ok(DatasetSample {
        problem: problem.clone(),
        region,
        edges,
    })
}

/// Draws a start and goal at free cell centres of the largest free component, preferring
/// pairs at least half the shorter map side apart.
pub fn sample_problem(map: &GridMap, seed: u64) -> Result<PlanningProblem<f64>> {
    let comp = largest_free_component(map);
    if comp.len() < 2 {
        return Err(Error::Unsolvable);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_sep = map.width().min(map.height()) as f64 / 2.0;
    let centre = |(c, r): (usize, usize)| State::new(c as f64 + 0.5, r as f64 + 0.5);
    let mut best: Option<(f64, State<f64>, State<f64>)> = None;
    for _ in 0..1000 {
        let s = centre(comp[rng.gen_range(0..comp.len())]);
        let g = centre(comp[rng.gen_range(0..comp.len())]);
        let d = s.dist(&g);
        if best.as_ref().is_none_or(|b| d > b.0) {
            best = Some((d, s, g));
        }
        if d >= min_sep {
            break;
        }
    }
    let (_, start, goal) = best.expect("at least one draw");
    PlanningProblem::new(map.clone(), start, goal, DEFAULT_GOAL_RADIUS)
}

/// File names of one sample, relative to the dataset directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleFiles {
    pub map: String,
    pub problem: String,
    pub region: String,
    pub edges: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub recipe: MapRecipe,
    pub group: CategoryGroup,
    /// Seed of the first problem draw; attempt `k` uses `problem_seed + k`.
    pub problem_seed: u64,
    /// Problem draws rejected before this sample was accepted.
    pub rejected_problems: usize,
    pub files: SampleFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub problems_per_map: usize,
    pub ground_truth: GroundTruthOptions,
    pub samples: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<FsPath>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Recipes in first-seen order.
    pub fn recipes(&self) -> Vec<MapRecipe> {
        let mut out: Vec<MapRecipe> = Vec::new();
        for e in &self.samples {
            if !out.contains(&e.recipe) {
                out.push(e.recipe.clone());
            }
        }
        out
    }
}

/// Problem draws per sample before the sample is abandoned.
pub const MAX_PROBLEM_ATTEMPTS: usize = 20;

/// Seed of the first problem draw for problem `p` of the map built from `map_seed`.
pub fn problem_seed(map_seed: u64, p: usize) -> u64 {
    map_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (p as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Generates every sample, writes `<id>.map.pgm`, `<id>.problem.json`, `<id>.region.pgm`,
/// `<id>.edges.efld` and `manifest.json` into `out_dir`.
pub fn gen_dataset(
    recipes: &[MapRecipe],
    problems_per_map: usize,
    opts: &GroundTruthOptions,
    out_dir: impl AsRef<FsPath>,
) -> Result<Manifest> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let jobs: Vec<(usize, &MapRecipe, usize)> = recipes
        .iter()
        .enumerate()
        .flat_map(|(m, r)| (0..problems_per_map).map(move |p| (m, r, p)))
        .collect();
    let samples = jobs
        .par_iter()
        .map(|&(m, recipe, p)| {
            let map = gen_map(recipe)?;
            let seed = problem_seed(recipe.seed, p);
            let id = format!("m{m:04}_p{p:02}");
            let mut last_err = Error::Unsolvable;
            for k in 0..MAX_PROBLEM_ATTEMPTS {
                let problem = sample_problem(&map, seed.wrapping_add(k as u64))?;
                match gen_ground_truth(&problem, opts) {
                    Ok(sample) => {
                        let files = write_sample(out_dir, &id, &sample)?;
                        return Ok(ManifestEntry {
                            id,
                            recipe: recipe.clone(),
                            group: recipe.category.group(),
                            problem_seed: seed,
                            rejected_problems: k,
                            files,
                        });
                    }
                    Err(e @ (Error::Unsolvable | Error::InsufficientSolutions { .. })) => {
                        last_err = e
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(last_err)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        problems_per_map,
        ground_truth: opts.clone(),
        samples,
    };
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Rebuilds a dataset from a manifest into `out_dir`.
pub fn regenerate(manifest: &Manifest, out_dir: impl AsRef<FsPath>) -> Result<Manifest> {
    gen_dataset(
        &manifest.recipes(),
        manifest.problems_per_map,
        &manifest.ground_truth,
        out_dir,
    )
}

fn write_sample(dir: &FsPath, id: &str, sample: &DatasetSample) -> Result<SampleFiles> {
    let files = SampleFiles {
        map: format!("{id}.map.pgm"),
        problem: format!("{id}.problem.json"),
        region: format!("{id}.region.pgm"),
        edges: format!("{id}.edges.efld"),
    };
    save_problem(
        &sample.problem,
        dir.join(&files.map),
        dir.join(&files.problem),
    )?;
    sample.region.save_pgm(dir.join(&files.region))?;
    sample.edges.save_efld(dir.join(&files.edges))?;
    Ok(files)
}

/// A manifest sample loaded back from disk.
pub fn load_sample(dir: impl AsRef<FsPath>, entry: &ManifestEntry) -> Result<DatasetSample> {
    let dir = dir.as_ref();
    let problem = load_problem(dir.join(&entry.files.map), dir.join(&entry.files.problem))?;
    let region = RegionMask::load_pgm(dir.join(&entry.files.region))?;
    let edges = EdgeField::load_efld(dir.join(&entry.files.edges))?;
    Ok(DatasetSample {
        problem,
        region,
        edges,
    })
}

/// Directory holding the sample files listed in the manifest at `manifest_path`.
pub fn manifest_dir(manifest_path: &FsPath) -> PathBuf {
    manifest_path
        .parent()
        .map(FsPath::to_path_buf)
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region_graph::is_connected;

    #[test]
    fn categories_round_trip_numbers() {
        for c in MapCategory::ALL {
            assert_eq!(MapCategory::from_number(c.number()).unwrap(), c);
        }
        assert!(MapCategory::from_number(0).is_err());
        assert!(MapCategory::from_number(6).is_err());
        assert_eq!(MapCategory::Walls.group(), CategoryGroup::Similar);
        assert_eq!(MapCategory::Clutter.group(), CategoryGroup::Dissimilar);
    }

    #[test]
    fn maps_are_seed_deterministic() {
        for c in MapCategory::ALL {
            let r = MapRecipe::new(c, 42);
            assert_eq!(
                gen_map(&r).unwrap().to_pgm_bytes(),
                gen_map(&r).unwrap().to_pgm_bytes()
            );
        }
        let a = gen_map(&MapRecipe::new(MapCategory::Walls, 1)).unwrap();
        let b = gen_map(&MapRecipe::new(MapCategory::Walls, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn recipe_validation() {
        assert!(MapRecipe::with_size(MapCategory::Blocks, 32, 256, 0)
            .validate()
            .is_err());
        let mut r = MapRecipe::new(MapCategory::Blocks, 0);
        r.obstacle_count = (5, 3);
        assert!(gen_map(&r).is_err());
    }

    #[test]
    fn impossible_recipe_fails_after_retries() {
        let mut r = MapRecipe::with_size(MapCategory::Blocks, 64, 64, 0);
        r.obstacle_count = (400, 400);
        assert!(matches!(
            gen_map(&r),
            Err(Error::GenerationFailed(MAX_MAP_RETRIES))
        ));
    }

    #[test]
    fn dead_end_pocket_detection() {
        // a cup opening right: back wall at col 10, arms on rows 10 and 20
        let mut map = GridMap::empty(40, 40).unwrap();
        map.fill_rect(10, 10, 11, 21, true);
        map.fill_rect(10, 10, 25, 11, true);
        map.fill_rect(10, 20, 25, 21, true);
        assert!(is_dead_end_pocket(&map, (11, 15), Heading::Right, 15));
        assert!(!is_dead_end_pocket(&map, (11, 15), Heading::Left, 15));
        assert!(!is_dead_end_pocket(&map, (30, 15), Heading::Right, 15));
        map.fill_rect(24, 11, 25, 20, true);
        assert!(!is_dead_end_pocket(&map, (11, 15), Heading::Right, 15));
    }

    #[test]
    fn brush_widths() {
        assert_eq!(brush(1), (0, 0));
        assert_eq!(brush(2), (0, 1));
        assert_eq!(brush(3), (-1, 1));
        assert_eq!(brush(13), (-6, 6));
    }

    #[test]
    fn bfs_route_is_four_connected() {
        let map = GridMap::from_fn(20, 20, |c, r| c == 10 && r < 18).unwrap();
        let route = bfs_free_path(&map, (2, 2), (17, 2)).unwrap();
        assert_eq!(route.first(), Some(&(2, 2)));
        assert_eq!(route.last(), Some(&(17, 2)));
        assert!(route
            .windows(2)
            .all(|w| w[0].0.abs_diff(w[1].0) + w[0].1.abs_diff(w[1].1) == 1));
        assert!(route.iter().all(|&(c, r)| !map.is_obstacle(c, r)));
        let sealed = GridMap::from_fn(20, 20, |c, _| c == 10).unwrap();
        assert!(bfs_free_path(&sealed, (2, 2), (17, 2)).is_none());
    }

    #[test]
    fn empty_map_ground_truth_is_a_connected_band() {
        let map = GridMap::empty(64, 64).unwrap();
        let p =
            PlanningProblem::new(map, State::new(6.5, 6.5), State::new(57.5, 50.5), 5.0).unwrap();
        let opts = GroundTruthOptions {
            runs: 10,
            ..GroundTruthOptions::default()
        };
        let s = gen_ground_truth(&p, &opts).unwrap();
        assert!(is_connected(&s.region, &p).unwrap());
        assert!(s.region.get(6, 6) && s.region.get(50, 57));
        assert_eq!(s.edges, node_to_edge_labels(&s.region));
        assert!(s.edges.padding_is_zero());
        // a band, not the whole map
        assert!(s.region.count() < 64 * 64 / 2);
    }

    #[test]
    fn sealed_goal_is_unsolvable() {
        let map = GridMap::from_fn(64, 64, |c, _| c == 30).unwrap();
        let p =
            PlanningProblem::new(map, State::new(5.5, 5.5), State::new(50.5, 50.5), 5.0).unwrap();
        assert!(matches!(
            gen_ground_truth(&p, &GroundTruthOptions::default()),
            Err(Error::Unsolvable)
        ));
    }

    #[test]
    fn too_few_solutions_are_rejected() {
        let map = GridMap::from_fn(64, 64, |c, r| c == 30 && r > 0).unwrap();
        let p =
            PlanningProblem::new(map, State::new(5.5, 60.5), State::new(50.5, 60.5), 2.0).unwrap();
        let opts = GroundTruthOptions {
            runs: 4,
            max_iterations: 20,
            ..GroundTruthOptions::default()
        };
        assert!(matches!(
            gen_ground_truth(&p, &opts),
            Err(Error::InsufficientSolutions { required: 4, .. })
        ));
    }
}
