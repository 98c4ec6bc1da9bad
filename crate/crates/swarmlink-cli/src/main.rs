//! Command-line runner: single runs with full data/plot output, seed
//! batches, and paired method comparisons.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use swarmlink::baselines::Method;
use swarmlink::metrics::RunMetrics;
use swarmlink::plot;
use swarmlink::scenario::Scenario;
use swarmlink::sim::run_scenario;
use swarmlink::stats::{mean_std, paired_t_less};

#[derive(Parser)]
#[command(
    name = "swarmlink",
    about = "Topology maintenance simulator for mobile robot networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its data and plots.
    Run(RunArgs),
    /// Run many seeds of one scenario in parallel and summarize.
    Batch(BatchArgs),
    /// Run all four methods on shared seeds and compare costs.
    Compare(CompareArgs),
}

/// Scenario selection shared by all subcommands: an optional config file,
/// then individual overrides on top.
#[derive(Args)]
struct ScenarioArgs {
    /// TOML scenario file; defaults apply for fields it omits.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Planner: A (leader pipeline), B (ideal MST), C (diameter-bounded
    /// MST), D (fixed leader).
    #[arg(long)]
    method: Option<Method>,
    /// Team size.
    #[arg(long)]
    nodes: Option<usize>,
    /// Hop-diameter cap.
    #[arg(long)]
    tau_d: Option<u32>,
    /// Simulation length in ticks.
    #[arg(long)]
    steps: Option<usize>,
}

impl ScenarioArgs {
    fn build(&self) -> Result<Scenario> {
        let mut s = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Scenario::from_toml_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => Scenario::default(),
        };
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.method {
            s.method = v;
        }
        if let Some(v) = self.nodes {
            s.nodes = v;
        }
        if let Some(v) = self.tau_d {
            s.tau_d = v;
        }
        if let Some(v) = self.steps {
            s.duration_steps = v;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Directory for CSV, summary, and SVG output.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of seeds to run (seed, seed+1, ...).
    #[arg(long, default_value_t = 20)]
    runs: usize,
    /// Optional directory for the per-run table.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Number of shared seeds per method.
    #[arg(long, default_value_t = 30)]
    runs: usize,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run_one(args),
        Command::Batch(args) => run_batch(args),
        Command::Compare(args) => run_compare(args),
    }
}

fn run_one(args: RunArgs) -> Result<()> {
    let scenario = args.scenario.build()?;
    let metrics = run_scenario(&scenario)
        .with_context(|| format!("run failed (seed {})", scenario.seed))?;
    write_outputs(&args.out_dir, &scenario, &metrics)?;
    print!("{}", metrics.summary());
    println!("outputs: {}", args.out_dir.display());
    Ok(())
}

fn write_outputs(dir: &Path, scenario: &Scenario, metrics: &RunMetrics) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut steps = Vec::new();
    metrics.write_step_csv(&mut steps)?;
    fs::write(dir.join("steps.csv"), steps)?;
    let mut decisions = Vec::new();
    metrics.write_decision_csv(&mut decisions)?;
    fs::write(dir.join("decisions.csv"), decisions)?;
    fs::write(dir.join("summary.txt"), metrics.summary())?;
    fs::write(dir.join("scenario.toml"), scenario.to_toml_string())?;
    let annotation = (scenario.plot_stressed_threshold > 0.0)
        .then_some(scenario.plot_stressed_threshold);
    fs::write(
        dir.join("edges.svg"),
        plot::edge_series_svg(metrics, annotation),
    )?;
    fs::write(
        dir.join("topology.svg"),
        plot::topology_svg(
            &metrics.final_positions,
            &metrics.final_edges,
            metrics.final_central,
            None,
        ),
    )?;
    Ok(())
}

fn run_batch(args: BatchArgs) -> Result<()> {
    let base = args.scenario.build()?;
    if args.runs == 0 {
        bail!("need at least one run");
    }
    let results: Vec<(u64, Result<RunMetrics, swarmlink::Error>)> = (0..args.runs)
        .into_par_iter()
        .map(|k| {
            let mut s = base.clone();
            s.seed = base.seed.wrapping_add(k as u64);
            (s.seed, run_scenario(&s))
        })
        .collect();

    let mut costs = Vec::new();
    let mut failures = 0usize;
    let mut table = String::from("seed,cumulative_cost,decisions,diameter_violations\n");
    for (seed, outcome) in &results {
        match outcome {
            Ok(m) => {
                costs.push(m.cumulative_cost());
                table.push_str(&format!(
                    "{seed},{},{},{}\n",
                    m.cumulative_cost(),
                    m.decisions.len(),
                    m.diameter_violations
                ));
                println!(
                    "seed {seed}: cost {:.3}, {} decisions, {} diameter violations",
                    m.cumulative_cost(),
                    m.decisions.len(),
                    m.diameter_violations
                );
            }
            Err(e) => {
                failures += 1;
                table.push_str(&format!("{seed},failed,,\n"));
                eprintln!("seed {seed}: FAILED: {e}");
            }
        }
    }
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("batch.csv"), table)?;
    }
    if !costs.is_empty() {
        let (mean, std) = mean_std(&costs);
        println!(
            "{} ok / {} failed; cost mean {mean:.3}, std {std:.3}",
            costs.len(),
            failures
        );
    }
    if failures > 0 {
        bail!("{failures} of {} runs failed", args.runs);
    }
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let base = args.scenario.build()?;
    if args.runs < 2 {
        bail!("paired comparison needs at least two seeds");
    }
    let jobs: Vec<(Method, u64)> = Method::ALL
        .iter()
        .flat_map(|&m| (0..args.runs).map(move |k| (m, k as u64)))
        .collect();
    let results: Vec<(Method, u64, Result<RunMetrics, swarmlink::Error>)> = jobs
        .into_par_iter()
        .map(|(m, k)| {
            let mut s = base.clone();
            s.method = m;
            s.seed = base.seed.wrapping_add(k);
            (m, k, run_scenario(&s))
        })
        .collect();

    let mut by_method: Vec<Vec<f64>> = vec![Vec::new(); Method::ALL.len()];
    for (m, k, outcome) in results {
        let idx = Method::ALL.iter().position(|&x| x == m).unwrap();
        match outcome {
            Ok(metrics) => by_method[idx].push(metrics.cumulative_cost()),
            Err(e) => bail!("method {} seed {k} failed: {e}", m.tag()),
        }
    }
    for (m, costs) in Method::ALL.iter().zip(&by_method) {
        let (mean, std) = mean_std(costs);
        println!("method {} ({m:?}): cost mean {mean:.3}, std {std:.3}", m.tag());
    }
    let idx = |m: Method| Method::ALL.iter().position(|&x| x == m).unwrap();
    let pairs = [
        (Method::IdealMst, Method::Hybrid),
        (Method::Hybrid, Method::DiameterMst),
        (Method::Hybrid, Method::FixedLeader),
    ];
    for (lo, hi) in pairs {
        let r = paired_t_less(&by_method[idx(lo)], &by_method[idx(hi)])?;
        println!(
            "H1 {} < {}: mean diff {:.3}, t = {:.3}, one-sided p = {:.2e}",
            lo.tag(),
            hi.tag(),
            r.mean_diff,
            r.t,
            r.p_less
        );
    }
    Ok(())
}
