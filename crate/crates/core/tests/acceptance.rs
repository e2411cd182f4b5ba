//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nhplan::bench::{run_experiment, ExperimentConfig};
use nhplan::dataset_gen::{self, GroundTruthOptions, MapCategory, MapRecipe};
use nhplan::fixtures;
use nhplan::heuristic::build_sampler;
use nhplan::losses::{self, grad_check};
use nhplan::mst_cbpt::{build_cbpt, edge_records, edge_weights};
use nhplan::planners::{PlannerConfig, PlannerKind};
use nhplan::region_graph::{connectivity_rate, decode_region, node_to_edge_labels};
use nhplan::{EdgeField, GridMap, PlanningProblem, RegionMask, State};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

/// Field whose non-padding entries are a shuffled, evenly spaced grid in [0.05, 0.95],
/// so every pair of probabilities differs by far more than the difference step.
fn gapped_field(rng: &mut ChaCha8Rng, w: usize, h: usize) -> EdgeField<f64> {
    let n = 2 * w * h - w - h;
    let mut values: Vec<f64> = (0..n)
        .map(|k| 0.05 + 0.9 * k as f64 / (n - 1) as f64)
        .collect();
    values.shuffle(rng);
    let mut it = values.into_iter();
    let mut f = EdgeField::zeros(w, h);
    for i in 0..h {
        for j in 0..w - 1 {
            f.set_x(i, j, it.next().unwrap());
        }
    }
    for i in 0..h - 1 {
        for j in 0..w {
            f.set_y(i, j, it.next().unwrap());
        }
    }
    f
}

fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> RegionMask {
    RegionMask::from_fn(w, h, |_, _| rng.gen_bool(density))
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut checked = 0;
    for _ in 0..20 {
        let region = random_mask(&mut rng, 16, 16, 0.5);
        let truth: EdgeField<f64> = node_to_edge_labels(&region);
        let pred = gapped_field(&mut rng, 16, 16);
        let conn_region = random_mask(&mut rng, 12, 12, 0.6);
        let conn_pred = gapped_field(&mut rng, 12, 12);
        let runs = [
            (
                "bce",
                grad_check::check(&pred, 1e-5, 1e-8, |p| losses::bce_xy(&truth, p)),
            ),
            (
                "dice",
                grad_check::check(&pred, 1e-5, 1e-8, |p| losses::dice_xy(&truth, p)),
            ),
            (
                "conn",
                grad_check::check(&conn_pred, 1e-5, 1e-8, |p| {
                    losses::connectivity_loss(&conn_region, p)
                }),
            ),
            (
                "total",
                grad_check::check(&pred, 1e-5, 1e-8, |p| {
                    losses::total_loss(&truth, &region, p)
                }),
            ),
        ];
        for (name, run) in runs {
            let r = run.expect("loss evaluates");
            checked += r.checked;
            let e = worst.entry(name).or_insert(0.0);
            *e = e.max(r.max_rel_error);
        }
    }
    let elapsed = started.elapsed();
    let ok = worst.values().all(|&e| e < 1e-4) && checked > 0 && elapsed < Duration::from_secs(60);
    outcome(
        ok,
        format!(
            "max rel error {worst:?} over {checked} entries in {elapsed:.1?} (limit 1e-4, 60 s)"
        ),
    )
}

/// Brute-force bottleneck oracle: widest-path values over the full grid graph, each
/// promising pair credited to the unique edge carrying that value.
fn maximin_oracle(field: &EdgeField<f64>, truth: &RegionMask) -> BTreeMap<usize, u64> {
    let (w, h) = field.dims();
    let n = w * h;
    let edges = edge_records(field, truth);
    let mut best = vec![vec![f64::NEG_INFINITY; n]; n];
    for e in &edges {
        let (a, b) = e.endpoints;
        best[a][b] = e.probability;
        best[b][a] = e.probability;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = best[i][k].min(best[k][j]);
                if through > best[i][j] {
                    best[i][j] = through;
                }
            }
        }
    }
    let promising: Vec<usize> = (0..n).filter(|&v| truth.as_slice()[v]).collect();
    let mut out = BTreeMap::new();
    for (x, &u) in promising.iter().enumerate() {
        for &v in &promising[x + 1..] {
            let e = edges
                .iter()
                .find(|e| e.probability == best[u][v])
                .expect("bottleneck value belongs to an edge");
            if e.promising {
                *out.entry(e.index).or_insert(0) += 1;
            }
        }
    }
    out
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut mismatches = 0;
    let grids = 60;
    for _ in 0..grids {
        let (w, h) = loop {
            let d = (rng.gen_range(1..=8), rng.gen_range(1..=8));
            if d.0 * d.1 >= 2 {
                break d;
            }
        };
        let mut field = EdgeField::zeros(w, h);
        // distinct values make the bottleneck edge of every pair unique
        let n = 2 * w * h - w - h;
        let mut values: Vec<f64> = (0..n).map(|k| (k + 1) as f64 / (n + 1) as f64).collect();
        values.shuffle(&mut rng);
        let mut it = values.into_iter();
        for i in 0..h {
            for j in 0..w.saturating_sub(1) {
                field.set_x(i, j, it.next().unwrap());
            }
        }
        for i in 0..h.saturating_sub(1) {
            for j in 0..w {
                field.set_y(i, j, it.next().unwrap());
            }
        }
        let density = rng.gen_range(0.2..0.9);
        let truth = random_mask(&mut rng, w, h, density);
        let got = edge_weights(&build_cbpt(&field, &truth).unwrap());
        if got != maximin_oracle(&field, &truth) {
            mismatches += 1;
        }
    }
    let elapsed = started.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(30),
        format!("{mismatches}/{grids} grids differ from the brute-force oracle, {elapsed:.1?} (limit 30 s)"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut failures = Vec::new();

    let mut out_of_range = 0;
    for _ in 0..10_000 {
        let (w, h) = (rng.gen_range(2..=6), rng.gen_range(2..=6));
        let mut pred = EdgeField::<f64>::zeros(w, h);
        for i in 0..h {
            for j in 0..w {
                if j + 1 < w {
                    pred.set_x(i, j, rng.gen());
                }
                if i + 1 < h {
                    pred.set_y(i, j, rng.gen());
                }
            }
        }
        let region = random_mask(&mut rng, w, h, 0.5);
        let v = losses::connectivity_loss(&region, &pred).unwrap().value;
        if !(0.0..=1.0).contains(&v) {
            out_of_range += 1;
        }
    }
    if out_of_range > 0 {
        failures.push(format!("{out_of_range} connectivity values outside [0,1]"));
    }

    let region = random_mask(&mut rng, 10, 10, 0.6);
    let mut pred = gapped_field(&mut rng, 10, 10);
    for e in edge_records(&pred.clone(), &region) {
        if e.promising {
            match e.direction {
                nhplan::mst_cbpt::Direction::X => pred.px_mut()[e.channel_offset()] = 1.0,
                nhplan::mst_cbpt::Direction::Y => pred.py_mut()[e.channel_offset()] = 1.0,
            }
        }
    }
    let zero = losses::connectivity_loss(&region, &pred).unwrap().value;
    if zero != 0.0 {
        failures.push(format!("saturated promising edges give {zero}"));
    }

    let both = RegionMask::from_fn(2, 1, |_, _| true);
    for _ in 0..1000 {
        let p: f64 = rng.gen();
        let mut f = EdgeField::zeros(2, 1);
        f.set_x(0, 0, p);
        let v = losses::connectivity_loss(&both, &f).unwrap().value;
        if v != (1.0 - p) * (1.0 - p) {
            failures.push(format!("single edge p={p} gives {v}"));
            break;
        }
    }

    let a = RegionMask::from_fn(8, 8, |r, _| r < 4);
    let b = RegionMask::from_fn(8, 8, |r, _| r >= 5);
    let (ta, tb): (EdgeField<f64>, EdgeField<f64>) =
        (node_to_edge_labels(&a), node_to_edge_labels(&b));
    let same = losses::dice_xy(&ta, &ta).unwrap().value;
    let disjoint = losses::dice_xy(&ta, &tb).unwrap().value;
    if same != 0.0 || disjoint != 1.0 {
        failures.push(format!("dice exact {same}, disjoint {disjoint}"));
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "10^4 range checks, saturation, single-edge and dice anchors hold".to_string()
        } else {
            failures.join("; ")
        },
    )
}

/// Drops promising nodes lacking a promising right or down edge until none are left.
///
/// The promising node with the largest `row + col` never has both, so this always ends
/// at the empty mask: the only masks whose every promising node has both owned edges
/// promising.
fn with_both_owned_edges(mut m: RegionMask) -> RegionMask {
    let (w, h) = m.dims();
    loop {
        let mut changed = false;
        for i in 0..h {
            for j in 0..w {
                let right = j + 1 < w && m.get(i, j + 1);
                let down = i + 1 < h && m.get(i + 1, j);
                if m.get(i, j) && !(right && down) {
                    m.set(i, j, false);
                    changed = true;
                }
            }
        }
        if !changed {
            return m;
        }
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut identity_failures, mut constrained_nodes) = (0, 0);
    let (mut removed_set_failures, mut kept_nodes) = (0, 0);
    for _ in 0..100 {
        let (w, h) = (rng.gen_range(2..=24), rng.gen_range(2..=24));
        let m = random_mask(&mut rng, w, h, 0.6);

        let constrained = with_both_owned_edges(m.clone());
        constrained_nodes += constrained.count();
        let labels: EdgeField<f64> = node_to_edge_labels(&constrained);
        if decode_region(&labels, 0.09).unwrap() != constrained {
            identity_failures += 1;
        }

        // general law: exactly the promising nodes with no promising owned edge are lost
        let expected = RegionMask::from_fn(w, h, |i, j| {
            m.get(i, j) && ((j + 1 < w && m.get(i, j + 1)) || (i + 1 < h && m.get(i + 1, j)))
        });
        kept_nodes += expected.count();
        let labels: EdgeField<f64> = node_to_edge_labels(&m);
        if decode_region(&labels, 0.09).unwrap() != expected {
            removed_set_failures += 1;
        }
    }
    outcome(
        identity_failures == 0 && removed_set_failures == 0 && kept_nodes > 0,
        format!(
            "identity on both-edges masks {identity_failures}/100 failures (family holds only the empty \
             mask, {constrained_nodes} nodes); removed-set law {removed_set_failures}/100 failures \
             over {kept_nodes} recovered nodes at t = 0.09"
        ),
    )
}

fn criterion_5() -> Outcome {
    let map = GridMap::empty(32, 32).unwrap();
    let p = PlanningProblem::new(map, State::new(2.5, 16.5), State::new(29.5, 16.5), 2.0).unwrap();
    let band = RegionMask::from_fn(32, 32, |r, _| (14..19).contains(&r));
    let cut = RegionMask::from_fn(32, 32, |r, c| (14..19).contains(&r) && c != 20);
    let bent = RegionMask::from_fn(32, 32, |r, c| {
        (r == 16 && c <= 10)
            || (c == 10 && (5..=16).contains(&r))
            || (r == 5 && c >= 10)
            || (c == 29 && r >= 5)
    });
    let diagonal_only = RegionMask::from_fn(32, 32, |r, c| {
        r == 16 && (c <= 10 || c >= 12) || (r == 17 && c == 11)
    });
    let connected = connectivity_rate(&[(band, p.clone()), (bent, p.clone())]).unwrap();
    let cut_rate = connectivity_rate(&[(cut, p.clone()), (diagonal_only, p.clone())]).unwrap();

    let recipes: Vec<MapRecipe> = (0..10)
        .map(|i| MapRecipe::new(MapCategory::ALL[i % 5], 500 + i as u64))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let manifest =
        dataset_gen::gen_dataset(&recipes, 1, &GroundTruthOptions::default(), dir.path()).unwrap();
    let cases: Vec<(RegionMask, PlanningProblem<f64>)> = manifest
        .samples
        .iter()
        .map(|e| {
            let s = dataset_gen::load_sample(dir.path(), e).unwrap();
            (s.region, s.problem)
        })
        .collect();
    let dataset_rate = connectivity_rate(&cases).unwrap();
    outcome(
        connected == 1.0 && cut_rate == 0.0 && dataset_rate == 1.0,
        format!(
            "hand-built connected {connected}, cut {cut_rate}, generated dataset ({} samples) {dataset_rate}",
            cases.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let fixtures = fixtures::all();
    let planners = [PlannerKind::Rrt, PlannerKind::RrtStar, PlannerKind::BitStar];
    let biases = [0.0, 0.5, 0.9];
    let (mut solved, mut violations) = (0, Vec::new());
    for trial in 0..200usize {
        let f = &fixtures[trial % 3];
        let kind = planners[(trial / 3) % 3];
        let bias = biases[(trial / 9) % 3];
        let region = if (trial / 27) % 2 == 0 {
            &f.connected
        } else {
            &f.disconnected
        };
        let sampler = build_sampler(region, bias).unwrap();
        let config = PlannerConfig::<f64>::default().with_seed(9000 + trial as u64);
        let p = &f.problem;
        let r = nhplan::bench::plan(kind, p, &config, &sampler).unwrap();
        if r.success != r.path.is_some() || r.success != r.cost.is_some() {
            violations.push(format!(
                "trial {trial}: success flag disagrees with path/cost"
            ));
        }
        let Some(path) = r.path else { continue };
        solved += 1;
        let states = path.states();
        let free = states
            .iter()
            .all(|s| p.map.contains(s) && p.map.free_state(s).unwrap())
            && states
                .windows(2)
                .all(|w| p.map.free_edge(&w[0], &w[1]).unwrap());
        let lower = p.start.dist(&p.goal) - p.goal_radius;
        let checks = [
            (free, "collision"),
            (*path.first() == p.start, "start"),
            (p.in_goal(path.last()), "goal ball"),
            (path.cost() >= lower, "cost lower bound"),
            (r.cost == Some(path.cost()), "reported cost"),
        ];
        for (ok, what) in checks {
            if !ok {
                violations.push(format!(
                    "trial {trial} ({}, {}): {what}",
                    f.name,
                    kind.name()
                ));
            }
        }
    }
    outcome(
        violations.is_empty() && solved > 0,
        if violations.is_empty() {
            format!("200 trials, {solved} solutions audited, no violations")
        } else {
            violations.join("; ")
        },
    )
}

fn rrt_experiment(
    f: &fixtures::Fixture,
    region: &RegionMask,
    bias: f64,
) -> nhplan::bench::AggregateResult {
    let mut config = ExperimentConfig::new(PlannerKind::Rrt, bias, 50, 0);
    config.planner_config.step_size = 10.0;
    config.planner_config.max_iterations = 5000;
    run_experiment(&config, &f.problem, Some(region)).unwrap()
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let f = fixtures::two_passage();
    let plain = rrt_experiment(&f, &f.connected, 0.0);
    let nh = rrt_experiment(&f, &f.connected, 0.5);
    let ratio = nh.mean_iterations / plain.mean_iterations;
    let elapsed = started.elapsed();
    outcome(
        ratio <= 0.8 && nh.success_rate == 1.0 && elapsed < Duration::from_secs(300),
        format!(
            "NH-RRT {:.1} vs RRT {:.1} mean iterations (ratio {ratio:.3}, limit 0.8), NH-RRT success {:.2}, {elapsed:.1?}",
            nh.mean_iterations, plain.mean_iterations, nh.success_rate
        ),
    )
}

fn criterion_8() -> Outcome {
    let f = fixtures::two_passage();
    let low = rrt_experiment(&f, &f.connected, 0.3);
    let high = rrt_experiment(&f, &f.connected, 0.9);
    outcome(
        high.mean_iterations < low.mean_iterations,
        format!(
            "mean iterations h_b=0.9: {:.1}, h_b=0.3: {:.1}",
            high.mean_iterations, low.mean_iterations
        ),
    )
}

fn criterion_9() -> Outcome {
    let f = fixtures::dead_end();
    let connected = rrt_experiment(&f, &f.connected, 0.9);
    let disconnected = rrt_experiment(&f, &f.disconnected, 0.9);
    outcome(
        disconnected.success_rate < connected.success_rate,
        format!(
            "success at h_b=0.9: disconnected {:.2}, connected {:.2}",
            disconnected.success_rate, connected.success_rate
        ),
    )
}

fn read_dir_bytes(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let f = fixtures::two_passage();
    let runs: Vec<BTreeMap<String, Vec<u8>>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            for kind in [PlannerKind::Rrt, PlannerKind::RrtStar, PlannerKind::BitStar] {
                let config = ExperimentConfig::new(kind, 0.5, 20, 77);
                let agg = run_experiment(&config, &f.problem, Some(&f.connected)).unwrap();
                agg.write(dir.path(), kind.name()).unwrap();
            }
            let recipes: Vec<MapRecipe> = (0..3)
                .map(|i| MapRecipe::new(MapCategory::ALL[i + 1], 31 + i as u64))
                .collect();
            let opts = GroundTruthOptions {
                runs: 10,
                ..GroundTruthOptions::default()
            };
            dataset_gen::gen_dataset(&recipes, 1, &opts, dir.path().join("data")).unwrap();
            let region = f.connected.clone();
            let truth: EdgeField<f64> = node_to_edge_labels(&region);
            let pred = gapped_field(&mut ChaCha8Rng::seed_from_u64(5), 256, 256);
            let grad = losses::total_loss(&truth, &region, &pred).unwrap().grad;
            grad.save_efld(dir.path().join("grad.efld")).unwrap();
            let mut files = read_dir_bytes(dir.path());
            files.extend(
                read_dir_bytes(&dir.path().join("data"))
                    .into_iter()
                    .map(|(k, v)| (format!("data/{k}"), v)),
            );
            files
        })
        .collect();
    let efld = runs[0].keys().filter(|k| k.ends_with(".efld")).count();
    outcome(
        runs[0] == runs[1] && efld == 4,
        format!(
            "{} files (CSV, JSON, PGM, EFLD; {efld} EFLD) {} across reruns",
            runs[0].len(),
            if runs[0] == runs[1] {
                "byte-identical"
            } else {
                "DIFFER"
            }
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient oracle", criterion_1),
        ("maximin weight oracle", criterion_2),
        ("loss anchors", criterion_3),
        ("representation round-trip", criterion_4),
        ("connectivity metric", criterion_5),
        ("planner soundness", criterion_6),
        ("heuristic speed-up on two-passage", criterion_7),
        ("bias sweep direction", criterion_8),
        ("disconnected-region degradation", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let o = run();
        if !o.ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<36} {}  {} [{:.1?}]",
            i + 1,
            name,
            if o.ok { "PASS" } else { "FAIL" },
            o.detail,
            started.elapsed()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
