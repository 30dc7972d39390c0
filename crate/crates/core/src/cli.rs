//! Command-line front end: `run`, `batch`, `compare`, `validate`.
//!
//! All randomness flows from the seeds in the config (plus `--seed`
//! overrides); nothing reads the clock, so every command is reproducible
//! byte-for-byte.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{load_config, ConfigError, RunConfig};
use crate::output::{emit_run, strategy_label, write_json, write_slots_csv, MetricAggregate};
use crate::rate::Mode;
use crate::sim::{run, Scenario, SimulationResult, Summary};

#[derive(Debug, Parser)]
#[command(
    name = "d2dvid",
    version,
    about = "Simulate VBR video streaming to a cellular user and a D2D pair, \
             with per-slot power control and spectrum-sharing mode selection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write slots.csv, curves.csv, utilization.csv,
    /// and summary.json.
    Run {
        /// Scenario description (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's fading seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Pin every slot to one mode instead of selecting per slot.
        #[arg(long, value_name = "MODE")]
        forced_mode: Option<Mode>,
        /// Write outputs here instead of the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Sweep seeds for one strategy and aggregate the summary metrics.
    Batch {
        #[arg(long)]
        config: PathBuf,
        /// Number of seeds, counting up from the config's fading seed.
        #[arg(long)]
        seeds: u32,
        #[arg(long, value_name = "MODE")]
        forced_mode: Option<Mode>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run the three pinned modes and per-slot selection over shared seeds;
    /// write one comparison summary plus each strategy's first-seed slot log.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Number of seeds per strategy.
        #[arg(long)]
        seeds: u32,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check a config and its traces; list every violation found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Executes a parsed command line. Errors become exit code 1 in `main`.
pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            forced_mode,
            output_dir,
        } => cmd_run(&config, seed, forced_mode, output_dir),
        Command::Batch {
            config,
            seeds,
            forced_mode,
            output_dir,
        } => cmd_batch(&config, seeds, forced_mode, output_dir),
        Command::Compare {
            config,
            seeds,
            output_dir,
        } => cmd_compare(&config, seeds, output_dir),
        Command::Validate { config } => cmd_validate(&config),
    }
}

fn load_and_build(
    config_path: &Path,
    seed: Option<u64>,
    forced_mode: Option<Mode>,
    output_dir: Option<PathBuf>,
) -> anyhow::Result<(RunConfig, Scenario)> {
    let mut cfg = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.fading.seed = s;
    }
    if let Some(m) = forced_mode {
        cfg.forced_mode = Some(m);
    }
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    let scenario = cfg.build_scenario()?;
    Ok((cfg, scenario))
}

// --- run --------------------------------------------------------------------

fn cmd_run(
    config_path: &Path,
    seed: Option<u64>,
    forced_mode: Option<Mode>,
    output_dir: Option<PathBuf>,
) -> anyhow::Result<()> {
    let (cfg, scenario) = load_and_build(config_path, seed, forced_mode, output_dir)?;
    let result = run(&scenario)?;
    emit_run(
        &cfg.output_dir,
        &result,
        cfg.zoom,
        scenario.forced_mode,
        scenario.fading.seed,
    )?;

    let s = &result.summary;
    println!(
        "{} strategy, seed {}: {} slots, underflow p(c1)={} p(d2)={}, \
         mean rate {:.3e} bit/s",
        strategy_label(scenario.forced_mode),
        scenario.fading.seed,
        s.slots,
        s.c1.underflow_probability,
        s.d2.underflow_probability,
        s.mean_total_rate,
    );
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

// --- batch ------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct PerReceiver<T> {
    c1: T,
    d2: T,
}

#[derive(Debug, Serialize)]
struct BatchDoc {
    strategy: &'static str,
    seeds: Vec<u64>,
    underflow_probability: PerReceiver<MetricAggregate>,
    clip_events: PerReceiver<MetricAggregate>,
    mean_buffer_utilization: PerReceiver<MetricAggregate>,
    mean_total_rate: MetricAggregate,
}

fn aggregate_receiver(
    summaries: &[Summary],
    metric: impl Fn(&Summary) -> (f64, f64),
) -> PerReceiver<MetricAggregate> {
    let c1: Vec<f64> = summaries.iter().map(|s| metric(s).0).collect();
    let d2: Vec<f64> = summaries.iter().map(|s| metric(s).1).collect();
    PerReceiver {
        c1: MetricAggregate::from_samples(&c1),
        d2: MetricAggregate::from_samples(&d2),
    }
}

fn batch_doc(strategy: Option<Mode>, seeds: Vec<u64>, summaries: &[Summary]) -> BatchDoc {
    let rates: Vec<f64> = summaries.iter().map(|s| s.mean_total_rate).collect();
    BatchDoc {
        strategy: strategy_label(strategy),
        seeds,
        underflow_probability: aggregate_receiver(summaries, |s| {
            (s.c1.underflow_probability, s.d2.underflow_probability)
        }),
        clip_events: aggregate_receiver(summaries, |s| {
            (s.c1.clip_events as f64, s.d2.clip_events as f64)
        }),
        mean_buffer_utilization: aggregate_receiver(summaries, |s| {
            (s.c1.mean_buffer_utilization, s.d2.mean_buffer_utilization)
        }),
        mean_total_rate: MetricAggregate::from_samples(&rates),
    }
}

fn cmd_batch(
    config_path: &Path,
    seeds: u32,
    forced_mode: Option<Mode>,
    output_dir: Option<PathBuf>,
) -> anyhow::Result<()> {
    if seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let (cfg, scenario) = load_and_build(config_path, None, forced_mode, output_dir)?;
    let seed_list: Vec<u64> = (0..seeds as u64)
        .map(|i| cfg.fading.seed.wrapping_add(i))
        .collect();

    let mut summaries = Vec::with_capacity(seed_list.len());
    for &seed in &seed_list {
        let result = run(&scenario.with_seed(seed))?;
        summaries.push(result.summary);
    }

    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;
    let doc = batch_doc(scenario.forced_mode, seed_list, &summaries);
    let path = cfg.output_dir.join("batch_summary.json");
    write_json(&path, &doc, "batch summary")?;

    println!(
        "{} strategy over {} seeds: underflow p(c1)={:.4} ± {:.4}, p(d2)={:.4} ± {:.4}",
        doc.strategy,
        seeds,
        doc.underflow_probability.c1.mean,
        doc.underflow_probability.c1.ci95,
        doc.underflow_probability.d2.mean,
        doc.underflow_probability.d2.ci95,
    );
    println!("wrote {}", path.display());
    Ok(())
}

// --- compare ----------------------------------------------------------------

/// Table order for the four strategies in comparison outputs.
const STRATEGIES: [Option<Mode>; 4] = [
    Some(Mode::Cellular),
    Some(Mode::Dedicated),
    Some(Mode::Reuse),
    None,
];

#[derive(Debug, Serialize)]
struct PerStrategy<T> {
    cellular: T,
    dedicated: T,
    reuse: T,
    selection: T,
}

impl<T> PerStrategy<T> {
    fn build(mut make: impl FnMut(Option<Mode>) -> T) -> PerStrategy<T> {
        PerStrategy {
            cellular: make(Some(Mode::Cellular)),
            dedicated: make(Some(Mode::Dedicated)),
            reuse: make(Some(Mode::Reuse)),
            selection: make(None),
        }
    }

    fn get(&self, strategy: Option<Mode>) -> &T {
        match strategy {
            Some(Mode::Cellular) => &self.cellular,
            Some(Mode::Dedicated) => &self.dedicated,
            Some(Mode::Reuse) => &self.reuse,
            None => &self.selection,
        }
    }
}

#[derive(Debug, Serialize)]
struct ModeFractions {
    cellular: f64,
    dedicated: f64,
    reuse: f64,
}

#[derive(Debug, Serialize)]
struct CompareDoc {
    seeds: Vec<u64>,
    shared_fading: bool,
    underflow_probability: PerReceiver<PerStrategy<MetricAggregate>>,
    clip_events: PerReceiver<PerStrategy<MetricAggregate>>,
    mean_buffer_utilization: PerReceiver<PerStrategy<MetricAggregate>>,
    mean_total_rate: PerStrategy<MetricAggregate>,
    /// How often per-slot selection picked each mode, averaged over seeds.
    selection_mode_fraction: ModeFractions,
}

/// Runs all four strategies over the seed sweep. Returns each strategy's
/// summaries plus its first-seed full result (for the slot logs).
fn run_strategies(
    scenario: &Scenario,
    seed_list: &[u64],
    shared_fading: bool,
) -> anyhow::Result<PerStrategy<(Vec<Summary>, SimulationResult)>> {
    let mut out: Vec<(Vec<Summary>, SimulationResult)> = Vec::with_capacity(4);
    for (idx, strategy) in STRATEGIES.into_iter().enumerate() {
        let base = scenario.with_forced_mode(strategy);
        let mut summaries = Vec::with_capacity(seed_list.len());
        let mut first: Option<SimulationResult> = None;
        for &seed in seed_list {
            // Common random numbers when shared; otherwise each strategy gets
            // its own decorrelated seed stream.
            let seed = if shared_fading {
                seed
            } else {
                seed.wrapping_add((idx as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
            };
            let result = run(&base.with_seed(seed))?;
            summaries.push(result.summary.clone());
            if first.is_none() {
                first = Some(result);
            }
        }
        out.push((summaries, first.expect("at least one seed")));
    }
    let [c, d, r, s] = <[_; 4]>::try_from(out).expect("four strategies");
    Ok(PerStrategy {
        cellular: c,
        dedicated: d,
        reuse: r,
        selection: s,
    })
}

fn cmd_compare(config_path: &Path, seeds: u32, output_dir: Option<PathBuf>) -> anyhow::Result<()> {
    if seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let (cfg, scenario) = load_and_build(config_path, None, None, output_dir)?;
    if scenario.forced_mode.is_some() {
        bail!("compare ignores sim.forced_mode; remove it from the config");
    }
    let seed_list: Vec<u64> = (0..seeds as u64)
        .map(|i| cfg.fading.seed.wrapping_add(i))
        .collect();

    let per = run_strategies(&scenario, &seed_list, cfg.shared_fading)?;

    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;
    for strategy in STRATEGIES {
        let (_, first) = per.get(strategy);
        let name = format!("slots_{}.csv", strategy_label(strategy));
        write_slots_csv(&cfg.output_dir.join(name), first)?;
    }

    let agg = |pick: &dyn Fn(&Summary) -> f64| -> PerStrategy<MetricAggregate> {
        PerStrategy::build(|strategy| {
            let samples: Vec<f64> = per.get(strategy).0.iter().map(pick).collect();
            MetricAggregate::from_samples(&samples)
        })
    };
    let selection_runs = &per.selection.0;
    let mode_mean = |pick: &dyn Fn(&Summary) -> u32| -> f64 {
        selection_runs
            .iter()
            .map(|s| pick(s) as f64 / s.slots as f64)
            .sum::<f64>()
            / selection_runs.len() as f64
    };
    let doc = CompareDoc {
        seeds: seed_list,
        shared_fading: cfg.shared_fading,
        underflow_probability: PerReceiver {
            c1: agg(&|s| s.c1.underflow_probability),
            d2: agg(&|s| s.d2.underflow_probability),
        },
        clip_events: PerReceiver {
            c1: agg(&|s| s.c1.clip_events as f64),
            d2: agg(&|s| s.d2.clip_events as f64),
        },
        mean_buffer_utilization: PerReceiver {
            c1: agg(&|s| s.c1.mean_buffer_utilization),
            d2: agg(&|s| s.d2.mean_buffer_utilization),
        },
        mean_total_rate: agg(&|s| s.mean_total_rate),
        selection_mode_fraction: ModeFractions {
            cellular: mode_mean(&|s| s.mode_histogram.cellular),
            dedicated: mode_mean(&|s| s.mode_histogram.dedicated),
            reuse: mode_mean(&|s| s.mode_histogram.reuse),
        },
    };
    let path = cfg.output_dir.join("compare_summary.json");
    write_json(&path, &doc, "comparison summary")?;

    println!("underflow probability, mean over {seeds} seeds:");
    println!(
        "  {:<4} {:>10} {:>10} {:>10} {:>10}",
        "", "cellular", "dedicated", "reuse", "selection"
    );
    for (label, row) in [
        ("c1", &doc.underflow_probability.c1),
        ("d2", &doc.underflow_probability.d2),
    ] {
        println!(
            "  {:<4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            label, row.cellular.mean, row.dedicated.mean, row.reuse.mean, row.selection.mean
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

// --- validate ---------------------------------------------------------------

fn cmd_validate(config_path: &Path) -> anyhow::Result<()> {
    let cfg = load_config(config_path)?;
    let scenario = cfg.build_scenario()?;
    println!("configuration is valid");
    println!(
        "  c1 video: {} frames at {} fps ({})",
        scenario.trace_c1.len(),
        scenario.trace_c1.frame_rate(),
        cfg.trace_c1.display()
    );
    println!(
        "  d2 video: {} frames at {} fps ({})",
        scenario.trace_d2.len(),
        scenario.trace_d2.frame_rate(),
        cfg.trace_d2.display()
    );
    println!(
        "  strategy: {}, seed {}, buffer factor {}",
        strategy_label(cfg.forced_mode),
        cfg.fading.seed,
        cfg.buffer_factor
    );
    Ok(())
}

// --- error presentation -----------------------------------------------------

/// Renders an error chain for stderr. Config validation reports keep their
/// one-problem-per-line shape.
pub fn render_error(err: &anyhow::Error) -> String {
    let mut text = format!("error: {err}");
    for cause in err.chain().skip(1) {
        text.push_str(&format!("\n  caused by: {cause}"));
    }
    text
}

/// True when the error is a validation report (as opposed to I/O trouble);
/// both still exit nonzero.
pub fn is_validation_error(err: &anyhow::Error) -> bool {
    err.downcast_ref::<ConfigError>()
        .map(|e| matches!(e, ConfigError::Invalid(_)))
        .unwrap_or(false)
}
