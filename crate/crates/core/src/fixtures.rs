//! Hand-built benchmark maps with connected and disconnected promising regions.
//!
//! - `two_passage`: two walls, each crossed by one narrow gap at opposite ends, so the
//!   shortest route zig-zags through both gaps.
//! - `dead_end`: a cup opening toward the start, with its back wall sealing the way to
//!   the goal except for a gap along the top edge.
//! - `open`: an empty map.
//!
//! Regions are thick polylines clipped to free space. A disconnected region follows the
//! connected one but leaves out a stretch, or points straight into a dead end.

use std::fs;
use std::path::Path as FsPath;

use crate::dataset_gen::rasterize_polyline;
use crate::error::{Error, Result};
use crate::grid_map::{save_problem, GridMap, PlanningProblem, State};
use crate::region_graph::RegionMask;

pub const FIXTURE_SIZE: usize = 256;
/// Brush width of the hand-drawn regions.
pub const REGION_STROKE: usize = 13;
pub const FIXTURE_GOAL_RADIUS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub problem: PlanningProblem<f64>,
    pub connected: RegionMask,
    pub disconnected: RegionMask,
}

fn s(x: f64, y: f64) -> State<f64> {
    State::new(x, y)
}

fn polyline(map: &GridMap, points: &[(f64, f64)]) -> RegionMask {
    let states: Vec<State<f64>> = points.iter().map(|&(x, y)| s(x, y)).collect();
    rasterize_polyline(map, &states, REGION_STROKE)
}

fn erase_columns(region: &mut RegionMask, cols: std::ops::Range<usize>) {
    for row in 0..region.height() {
        for col in cols.clone() {
            region.set(row, col, false);
        }
    }
}

fn build(
    name: &'static str,
    map: GridMap,
    start: (f64, f64),
    goal: (f64, f64),
    connected: RegionMask,
    disconnected: RegionMask,
) -> Fixture {
    let problem = PlanningProblem::new(
        map,
        s(start.0, start.1),
        s(goal.0, goal.1),
        FIXTURE_GOAL_RADIUS,
    )
    .expect("fixture problems are valid");
    Fixture {
        name,
        problem,
        connected,
        disconnected,
    }
}

pub fn two_passage() -> Fixture {
    let mut map = GridMap::empty(FIXTURE_SIZE, FIXTURE_SIZE).unwrap();
    map.fill_rect(80, 0, 90, 20, true);
    map.fill_rect(80, 32, 90, 256, true);
    map.fill_rect(166, 0, 176, 224, true);
    map.fill_rect(166, 236, 176, 256, true);
    let route = [
        (20.0, 230.0),
        (50.0, 26.0),
        (120.0, 26.0),
        (140.0, 230.0),
        (200.0, 230.0),
        (236.0, 20.0),
    ];
    let connected = polyline(&map, &route);
    let mut disconnected = connected.clone();
    erase_columns(&mut disconnected, 150..190);
    build(
        "two-passage",
        map,
        (20.0, 230.0),
        (236.0, 20.0),
        connected,
        disconnected,
    )
}

pub fn dead_end() -> Fixture {
    let mut map = GridMap::empty(FIXTURE_SIZE, FIXTURE_SIZE).unwrap();
    map.fill_rect(70, 80, 160, 88, true);
    map.fill_rect(70, 168, 160, 176, true);
    map.fill_rect(152, 16, 160, 256, true);
    let connected = polyline(
        &map,
        &[(30.0, 128.0), (40.0, 8.0), (200.0, 8.0), (226.0, 128.0)],
    );
    let disconnected = polyline(&map, &[(30.0, 128.0), (226.0, 128.0)]);
    build(
        "dead-end",
        map,
        (30.0, 128.0),
        (226.0, 128.0),
        connected,
        disconnected,
    )
}

pub fn open() -> Fixture {
    let map = GridMap::empty(FIXTURE_SIZE, FIXTURE_SIZE).unwrap();
    let connected = polyline(&map, &[(20.0, 20.0), (236.0, 236.0)]);
    let mut disconnected = connected.clone();
    erase_columns(&mut disconnected, 110..140);
    build(
        "open",
        map,
        (20.0, 20.0),
        (236.0, 236.0),
        connected,
        disconnected,
    )
}

pub fn all() -> Vec<Fixture> {
    vec![two_passage(), dead_end(), open()]
}

pub fn by_name(name: &str) -> Result<Fixture> {
    all()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| Error::Config(format!("unknown fixture {name:?}")))
}

/// Writes `<name>.map.pgm`, `<name>.problem.json`, `<name>.connected.pgm` and
/// `<name>.disconnected.pgm` for every fixture.
pub fn write_all(dir: impl AsRef<FsPath>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for f in all() {
        save_problem(
            &f.problem,
            dir.join(format!("{}.map.pgm", f.name)),
            dir.join(format!("{}.problem.json", f.name)),
        )?;
        f.connected
            .save_pgm(dir.join(format!("{}.connected.pgm", f.name)))?;
        f.disconnected
            .save_pgm(dir.join(format!("{}.disconnected.pgm", f.name)))?;
    }
    Ok(())
}
