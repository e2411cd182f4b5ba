use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nhplan::bench::{self, AggregateResult, ExperimentConfig};
use nhplan::dataset_gen::{self, GroundTruthOptions, Manifest, MapCategory, MapRecipe};
use nhplan::grid_map::load_problem;
use nhplan::losses::{self, grad_check};
use nhplan::planners::{PlannerConfig, PlannerKind};
use nhplan::region_graph::node_to_edge_labels;
use nhplan::{fixtures, EdgeField, PlanningProblem, RegionMask};

#[derive(Parser)]
#[command(
    name = "nhplan",
    version,
    about = "Connectivity-aware heuristic path planning toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Planner experiments and prediction scoring.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Evaluate the training loss of a predicted edge field.
    Loss(LossArgs),
    /// Generate random obstacle maps.
    GenMaps(GenMapsArgs),
    /// Generate maps, problems and RRT ground truth with a manifest.
    GenGt(GenGtArgs),
    /// Write the built-in benchmark fixtures.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Seeded multi-trial run of one planner at one bias.
    Plan(PlanArgs),
    /// One experiment per heuristic bias.
    Sweep {
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,0.3,0.6,0.9")]
        biases: Vec<f64>,
    },
    /// Connectivity and false-negative rates of predictions against a dataset.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        /// Directory of `<id>.efld` or `<id>.npar` predictions.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value_t = 0.09)]
        threshold: f64,
        /// Also write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct PlanArgs {
    #[arg(long, default_value = "rrt")]
    planner: String,
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    /// Promising-region PGM (pixels at or above half the maxval are promising).
    #[arg(long)]
    region: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    hb: f64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    step: f64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    #[arg(long, default_value_t = 20.0)]
    rewire_radius: f64,
    #[arg(long, default_value_t = 30)]
    batch_size: usize,
    #[arg(long, default_value_t = 1000)]
    sample_limit: usize,
}

impl PlanArgs {
    fn load(&self) -> Result<(ExperimentConfig, PlanningProblem<f64>, Option<RegionMask>)> {
        let planner: PlannerKind = self.planner.parse()?;
        let problem = load_problem(&self.map, &self.problem).with_context(|| {
            format!(
                "loading {} / {}",
                self.map.display(),
                self.problem.display()
            )
        })?;
        let region = self
            .region
            .as_ref()
            .map(|p| RegionMask::load_pgm(p).with_context(|| format!("loading {}", p.display())))
            .transpose()?;
        let config = ExperimentConfig {
            planner_config: PlannerConfig {
                step_size: self.step,
                max_iterations: self.max_iter,
                rewire_radius: self.rewire_radius,
                batch_size: self.batch_size,
                sample_limit: self.sample_limit,
                ..PlannerConfig::default()
            },
            ..ExperimentConfig::new(planner, self.hb, self.trials, self.seed)
        };
        Ok((config, problem, region))
    }
}

#[derive(Args)]
struct LossArgs {
    /// Ground-truth promising-region PGM.
    #[arg(long)]
    truth: PathBuf,
    /// Predicted edge field (EFLD).
    #[arg(long)]
    pred: PathBuf,
    /// Write the gradient of the total loss as EFLD.
    #[arg(long)]
    grad: Option<PathBuf>,
    /// Compare every gradient against central finite differences.
    #[arg(long)]
    grad_check: bool,
}

#[derive(Args)]
struct MapArgs {
    /// Obstacle family 1-5; cycles through all five when omitted.
    #[arg(long)]
    category: Option<u8>,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

impl MapArgs {
    /// Recipe `i` uses seed `seed + i`.
    fn recipes(&self) -> Result<Vec<MapRecipe>> {
        let fixed = self.category.map(MapCategory::from_number).transpose()?;
        Ok((0..self.count)
            .map(|i| {
                let category = fixed.unwrap_or(MapCategory::ALL[i % 5]);
                MapRecipe::with_size(category, self.size, self.size, self.seed + i as u64)
            })
            .collect())
    }
}

#[derive(Args)]
struct GenMapsArgs {
    #[command(flatten)]
    maps: MapArgs,
}

#[derive(Args)]
struct GenGtArgs {
    #[command(flatten)]
    maps: MapArgs,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    #[arg(long, default_value_t = 2)]
    stroke: usize,
    #[arg(long, default_value_t = 1)]
    problems_per_map: usize,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Bench(BenchCommand::Plan(args)) => bench_plan(&args),
        Command::Bench(BenchCommand::Sweep { plan, biases }) => bench_sweep(&plan, &biases),
        Command::Bench(BenchCommand::Eval {
            manifest,
            pred,
            threshold,
            out,
        }) => bench_eval(&manifest, &pred, threshold, out.as_deref()),
        Command::Loss(args) => loss(&args),
        Command::GenMaps(args) => gen_maps(&args.maps),
        Command::GenGt(args) => gen_gt(&args),
        Command::Fixtures { out } => {
            fixtures::write_all(&out)?;
            println!("wrote fixtures to {}", out.display());
            Ok(())
        }
    }
}

fn stem(config: &ExperimentConfig) -> String {
    format!("{}_hb{}", config.planner.name(), config.bias)
}

fn summary(agg: &AggregateResult) -> String {
    let cost = agg.mean_cost.map_or("-".to_string(), |c| format!("{c:.2}"));
    format!(
        "{:<8} h_b={:<4} iterations={:.1} nodes={:.1} cost={} success={:.2}",
        agg.label, agg.bias, agg.mean_iterations, agg.mean_nodes, cost, agg.success_rate
    )
}

fn bench_plan(args: &PlanArgs) -> Result<()> {
    let (config, problem, region) = args.load()?;
    let agg = bench::run_experiment(&config, &problem, region.as_ref())?;
    let (csv, json) = agg.write(&args.out, &stem(&config))?;
    println!("{}", summary(&agg));
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn bench_sweep(args: &PlanArgs, biases: &[f64]) -> Result<()> {
    let (config, problem, region) = args.load()?;
    let rows = bench::sweep_bias(&config, &problem, region.as_ref(), biases)?;
    for row in &rows {
        row.write(
            &args.out,
            &stem(&ExperimentConfig {
                bias: row.bias,
                ..config.clone()
            }),
        )?;
        println!("{}", summary(row));
    }
    let table = args
        .out
        .join(format!("{}_sweep.csv", config.planner.name()));
    fs::write(&table, bench::sweep_csv(&rows))
        .with_context(|| format!("writing {}", table.display()))?;
    if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| r.bias).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_iterations).collect();
        println!(
            "spearman(h_b, mean_iterations) = {:.3}",
            bench::spearman(&xs, &ys)
        );
    }
    println!("wrote {}", table.display());
    Ok(())
}

fn bench_eval(manifest_path: &Path, pred: &Path, threshold: f64, out: Option<&Path>) -> Result<()> {
    let manifest = Manifest::load(manifest_path)?;
    let dir = dataset_gen::manifest_dir(manifest_path);
    let (report, _) = bench::eval_predictions(&manifest, &dir, pred, threshold)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    if let Some(out) = out {
        fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    }
    print!("{text}");
    Ok(())
}

fn loss(args: &LossArgs) -> Result<()> {
    let region = RegionMask::load_pgm(&args.truth)?;
    let pred = EdgeField::<f64>::load_efld(&args.pred)?;
    let truth: EdgeField<f64> = node_to_edge_labels(&region);
    let parts = losses::loss_breakdown(&truth, &region, &pred)?;
    let mut report = json!({
        "bce": parts.bce.value,
        "dice": parts.dice.value,
        "conn": parts.conn.value,
        "total": parts.total.value,
    });
    if args.grad_check {
        let mut checks = serde_json::Map::new();
        type LossFn<'a> =
            Box<dyn Fn(&EdgeField<f64>) -> nhplan::Result<losses::LossOutput<f64>> + 'a>;
        let terms: [(&str, LossFn); 4] = [
            ("bce", Box::new(|p| losses::bce_xy(&truth, p))),
            ("dice", Box::new(|p| losses::dice_xy(&truth, p))),
            ("conn", Box::new(|p| losses::connectivity_loss(&region, p))),
            (
                "total",
                Box::new(|p| losses::total_loss(&truth, &region, p)),
            ),
        ];
        for (name, f) in terms {
            let c = grad_check::check(&pred, 1e-5, 1e-8, f)?;
            checks.insert(
                name.to_string(),
                json!({"max_rel_error": c.max_rel_error, "checked": c.checked, "skipped": c.skipped}),
            );
        }
        report["grad_check"] = checks.into();
    }
    if let Some(path) = &args.grad {
        parts.total.grad.save_efld(path)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn gen_maps(args: &MapArgs) -> Result<()> {
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut listing = Vec::new();
    for (i, recipe) in args.recipes()?.into_iter().enumerate() {
        let (map, report) = dataset_gen::gen_map_with_report(&recipe)?;
        let name = format!("map{i:04}_c{}.pgm", recipe.category.number());
        map.save_pgm(args.out.join(&name))?;
        listing.push(json!({"file": name, "recipe": recipe, "report": report}));
    }
    let index = args.out.join("maps.json");
    fs::write(&index, serde_json::to_string_pretty(&listing)? + "\n")?;
    println!("wrote {} maps to {}", listing.len(), args.out.display());
    Ok(())
}

fn gen_gt(args: &GenGtArgs) -> Result<()> {
    if args.runs == 0 || args.stroke == 0 {
        bail!("--runs and --stroke must be positive");
    }
    let opts = GroundTruthOptions {
        runs: args.runs,
        stroke: args.stroke,
        max_iterations: args.max_iter,
        seed: args.maps.seed,
        ..GroundTruthOptions::default()
    };
    let manifest = dataset_gen::gen_dataset(
        &args.maps.recipes()?,
        args.problems_per_map,
        &opts,
        &args.maps.out,
    )?;
    println!(
        "wrote {} samples and manifest.json to {}",
        manifest.samples.len(),
        args.maps.out.display()
    );
    Ok(())
}
