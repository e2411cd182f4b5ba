//! Seeded multi-trial planner experiments, bias sweeps and prediction scoring.
//!
//! Trial `i` of an experiment runs with seed `seed + i`. Trials run concurrently but are
//! reduced in trial order, so CSV and JSON output is byte-identical across reruns.
//! Iteration and node means cover all trials; the cost mean covers successful trials only.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset_gen::{load_sample, CategoryGroup, Manifest};
use crate::error::{Error, Result};
use crate::grid_map::PlanningProblem;
use crate::heuristic::{build_sampler, HeuristicSampler};
use crate::planners::{
    bit_star_plan, rrt_plan, rrt_star_plan, PlannerConfig, PlannerKind, PlannerResult,
};
use crate::region_graph::{
    connectivity_rate, decode_region, decode_region_nodepair, false_negative_rate, EdgeField,
    NodePairField, RegionMask,
};

pub const COST_CONVENTION: &str = "mean_cost averages successful trials only";
pub const CSV_HEADER: &str = "trial,success,iterations,nodes,cost";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub planner: PlannerKind,
    pub trials: usize,
    /// Heuristic bias `h_b`; overrides `planner_config.heuristic_bias`.
    pub bias: f64,
    /// Base seed; overrides `planner_config.seed`.
    pub seed: u64,
    pub planner_config: PlannerConfig<f64>,
}

impl ExperimentConfig {
    pub fn new(planner: PlannerKind, bias: f64, trials: usize, seed: u64) -> Self {
        Self {
            planner,
            trials,
            bias,
            seed,
            planner_config: PlannerConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.bias) {
            return Err(Error::InvalidBias(self.bias));
        }
        self.planner_config.validate()
    }

    /// `RRT` for a zero bias, `NH-RRT` otherwise (likewise for RRT* and BIT*).
    pub fn label(&self) -> String {
        let base = match self.planner {
            PlannerKind::Rrt => "RRT",
            PlannerKind::RrtStar => "RRT*",
            PlannerKind::BitStar => "BIT*",
        };
        if self.bias == 0.0 {
            base.to_string()
        } else {
            format!("NH-{base}")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub success: bool,
    pub iterations: usize,
    pub nodes: usize,
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub label: String,
    pub planner: PlannerKind,
    pub bias: f64,
    pub trials: usize,
    pub mean_iterations: f64,
    pub mean_nodes: f64,
    /// `None` when no trial succeeded.
    pub mean_cost: Option<f64>,
    pub success_rate: f64,
    pub cost_convention: String,
    pub rows: Vec<TrialRow>,
}

impl AggregateResult {
    pub fn from_rows(
        label: String,
        planner: PlannerKind,
        bias: f64,
        rows: Vec<TrialRow>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = rows.len() as f64;
        let costs: Vec<f64> = rows.iter().filter_map(|r| r.cost).collect();
        let successes = rows.iter().filter(|r| r.success).count();
        Ok(Self {
            label,
            planner,
            bias,
            trials: rows.len(),
            mean_iterations: rows.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
            mean_nodes: rows.iter().map(|r| r.nodes as f64).sum::<f64>() / n,
            mean_cost: (!costs.is_empty()).then(|| costs.iter().sum::<f64>() / costs.len() as f64),
            success_rate: successes as f64 / n,
            cost_convention: COST_CONVENTION.to_string(),
            rows,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let cost = r.cost.map(|c| c.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                r.trial, r.success as u8, r.iterations, r.nodes, cost
            )
            .unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("aggregate serializes") + "\n"
    }

    /// Per-trial rows parsed back from [`AggregateResult::to_csv`] output.
    pub fn rows_from_csv(text: &str) -> Result<Vec<TrialRow>> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or("");
            let num = |i: usize| -> Result<usize> {
                field(i)
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad integer {:?} in CSV", field(i))))
            };
            let success = match field(1) {
                "1" => true,
                "0" => false,
                other => return Err(Error::Parse(format!("bad success flag {other:?}"))),
            };
            let cost = match field(4) {
                "" => None,
                c => Some(
                    c.parse()
                        .map_err(|_| Error::Parse(format!("bad cost {c:?}")))?,
                ),
            };
            if success != cost.is_some() {
                return Err(Error::Parse(format!(
                    "trial {} success flag disagrees with cost",
                    field(0)
                )));
            }
            rows.push(TrialRow {
                trial: num(0)?,
                success,
                iterations: num(2)?,
                nodes: num(3)?,
                cost,
            });
        }
        Ok(rows)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<FsPath>, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&csv_path, self.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
        fs::write(&json_path, self.to_json()).map_err(|e| Error::io(&json_path, e))?;
        Ok((csv_path, json_path))
    }
}

/// Dispatches to the configured planner.
pub fn plan(
    kind: PlannerKind,
    problem: &PlanningProblem<f64>,
    config: &PlannerConfig<f64>,
    sampler: &HeuristicSampler,
) -> Result<PlannerResult<f64>> {
    match kind {
        PlannerKind::Rrt => rrt_plan(problem, config, sampler),
        PlannerKind::RrtStar => rrt_star_plan(problem, config, sampler),
        PlannerKind::BitStar => bit_star_plan(problem, config, sampler),
    }
}

/// Sampler for bias `bias`: plain uniform at zero bias, otherwise biased toward `region`.
pub fn sampler_for(
    problem: &PlanningProblem<f64>,
    region: Option<&RegionMask>,
    bias: f64,
) -> Result<HeuristicSampler> {
    let (w, h) = problem.map.dims();
    match region {
        _ if bias == 0.0 => Ok(HeuristicSampler::uniform(w, h)),
        Some(region) => {
            region.check_dims((w, h))?;
            build_sampler(region, bias)
        }
        None => Err(Error::Config(format!(
            "bias {bias} needs a heuristic region"
        ))),
    }
}

pub fn run_experiment(
    config: &ExperimentConfig,
    problem: &PlanningProblem<f64>,
    region: Option<&RegionMask>,
) -> Result<AggregateResult> {
    config.validate()?;
    let sampler = sampler_for(problem, region, config.bias)?;
    let base = PlannerConfig {
        heuristic_bias: config.bias,
        ..config.planner_config.clone()
    };
    let rows = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let r = plan(
                config.planner,
                problem,
                &base.with_seed(config.seed + trial as u64),
                &sampler,
            )?;
            Ok(TrialRow {
                trial,
                success: r.success,
                iterations: r.iterations,
                nodes: r.node_count,
                cost: r.cost,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    AggregateResult::from_rows(config.label(), config.planner, config.bias, rows)
}

/// One experiment per bias, in the given order.
pub fn sweep_bias(
    config: &ExperimentConfig,
    problem: &PlanningProblem<f64>,
    region: Option<&RegionMask>,
    biases: &[f64],
) -> Result<Vec<AggregateResult>> {
    if biases.is_empty() {
        return Err(Error::EmptyInput);
    }
    biases
        .iter()
        .map(|&bias| {
            run_experiment(
                &ExperimentConfig {
                    bias,
                    ..config.clone()
                },
                problem,
                region,
            )
        })
        .collect()
}

pub fn sweep_csv(rows: &[AggregateResult]) -> String {
    let mut out =
        String::from("label,h_b,trials,mean_iterations,mean_nodes,mean_cost,success_rate\n");
    for r in rows {
        let cost = r.mean_cost.map(|c| c.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.label, r.bias, r.trials, r.mean_iterations, r.mean_nodes, cost, r.success_rate
        )
        .unwrap();
    }
    out
}

/// Spearman rank correlation with average ranks for ties. `NaN` when either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "spearman needs paired samples");
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub samples: usize,
    pub connectivity_rate: f64,
    pub mean_false_negative_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub overall: GroupMetrics,
    pub similar: Option<GroupMetrics>,
    pub dissimilar: Option<GroupMetrics>,
}

/// Per-sample decoded prediction scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub id: String,
    pub group: CategoryGroup,
    pub connected: bool,
    pub false_negative_rate: f64,
}

/// Loads `<id>.efld` (decoded at `threshold`) or `<id>.npar` from `pred_dir`.
pub fn load_prediction(pred_dir: &FsPath, id: &str, threshold: f64) -> Result<RegionMask> {
    let efld = pred_dir.join(format!("{id}.efld"));
    if efld.exists() {
        return decode_region(&EdgeField::<f64>::load_efld(&efld)?, threshold);
    }
    let npar = pred_dir.join(format!("{id}.npar"));
    if npar.exists() {
        return Ok(decode_region_nodepair(&NodePairField::<f64>::load_npar(
            &npar,
        )?));
    }
    Err(Error::MissingPrediction(id.to_string()))
}

/// Decodes one prediction per manifest sample and scores it against the ground truth.
pub fn eval_predictions(
    manifest: &Manifest,
    dataset_dir: impl AsRef<FsPath>,
    pred_dir: impl AsRef<FsPath>,
    threshold: f64,
) -> Result<(EvalReport, Vec<SampleScore>)> {
    let (dataset_dir, pred_dir) = (dataset_dir.as_ref(), pred_dir.as_ref());
    if manifest.samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut scores = Vec::new();
    let mut cases = Vec::new();
    for entry in &manifest.samples {
        let truth = load_sample(dataset_dir, entry)?;
        let pred = load_prediction(pred_dir, &entry.id, threshold)?;
        pred.check_dims(truth.problem.map.dims())?;
        scores.push(SampleScore {
            id: entry.id.clone(),
            group: entry.group,
            connected: crate::region_graph::is_connected(&pred, &truth.problem)?,
            false_negative_rate: false_negative_rate(&pred, &truth.region)?,
        });
        cases.push((pred, truth.problem));
    }
    let overall = GroupMetrics {
        samples: cases.len(),
        connectivity_rate: connectivity_rate(&cases)?,
        mean_false_negative_rate: scores.iter().map(|s| s.false_negative_rate).sum::<f64>()
            / scores.len() as f64,
    };
    let group = |g: CategoryGroup| {
        let members: Vec<&SampleScore> = scores.iter().filter(|s| s.group == g).collect();
        (!members.is_empty()).then(|| {
            let n = members.len() as f64;
            GroupMetrics {
                samples: members.len(),
                connectivity_rate: members.iter().filter(|s| s.connected).count() as f64 / n,
                mean_false_negative_rate: members
                    .iter()
                    .map(|s| s.false_negative_rate)
                    .sum::<f64>()
                    / n,
            }
        })
    };
    let report = EvalReport {
        threshold,
        similar: group(CategoryGroup::Similar),
        dissimilar: group(CategoryGroup::Dissimilar),
        overall,
    };
    Ok((report, scores))
}
