//! `trotter`: experiments on Suzuki coefficient optimization for the
//! disordered Heisenberg chain.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use trotter_core::harness::{
    self, Axis, OptimizeConfig, RunRecord, SweepMode, SweepRecord, Timing,
};
use trotter_core::sampler::{default_scales, SamplingPlan, SamplingScheme};
use trotter_core::{ChainInstance, DecompositionSpec};

#[derive(Parser)]
#[command(name = "trotter", version, about)]
struct Cli {
    /// Worker threads for independent evaluations.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a chain instance and write it as JSON.
    GenerateInstance {
        #[arg(long, default_value_t = 5)]
        n: usize,
        /// Simulation time (default 2n).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Suzuki-seed error and gate counts.
    Baseline {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CMA-ES over the coefficient vector, starting from the Suzuki seed.
    Optimize {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        cma: CmaArgs,
        /// Run record JSON; a trajectory CSV is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fitness statistics of random vectors around a center, per scale.
    Sample {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value_t = Scheme::AroundSuzuki)]
        scheme: Scheme,
        /// Standard deviations (default 1e-9, 1e-8, ..., 1).
        #[arg(long, value_delimiter = ',')]
        scales: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Baseline and optimized error over a grid of r.
    SweepR {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value_t = OrderingName::Grouped)]
        ordering: OrderingName,
        #[arg(long, value_delimiter = ',', default_values_t = [25, 50, 75, 100, 125])]
        grid: Vec<usize>,
        #[arg(long, value_enum, default_value_t = SweepKind::Baseline)]
        mode: SweepKind,
        /// Run record whose vector is evaluated in `fixed` mode.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Report the smallest r whose error is below this value.
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        cma: CmaArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an optimized vector along one problem axis.
    Generalize {
        #[arg(long)]
        record: PathBuf,
        #[arg(long, value_enum)]
        axis: AxisName,
        /// Grid values; instance seeds for the v axis.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gate count and error for grouped, canonical and random orderings.
    Perms {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [25, 50, 75, 100, 125])]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON. Without it an instance is drawn from --n, --t and --instance-seed.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = 1)]
    instance_seed: u64,
}

impl InstanceArgs {
    fn load(&self) -> Result<ChainInstance> {
        match &self.instance {
            Some(path) => Ok(harness::read_instance(path)?),
            None => Ok(harness::generate_instance(
                self.n,
                self.t,
                self.instance_seed,
            )?),
        }
    }
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 125)]
    r: usize,
    /// `random` draws a permutation from --seed.
    #[arg(long, value_enum, default_value_t = OrderingName::Grouped)]
    ordering: OrderingName,
}

impl SpecArgs {
    fn build(&self, instance: &ChainInstance, seed: u64) -> Result<DecompositionSpec> {
        let ordering = self.ordering.resolve(instance, seed);
        Ok(DecompositionSpec::new(self.k, self.r, ordering)?)
    }
}

#[derive(Args)]
struct CmaArgs {
    #[arg(long, default_value_t = 250)]
    generations: usize,
    /// Initial step size (default 1e-7 / d).
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CmaArgs {
    fn config(&self, parallel: bool) -> OptimizeConfig {
        OptimizeConfig {
            sigma0: self.sigma0,
            parallel,
            ..OptimizeConfig::new(self.generations, self.seed)
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderingName {
    Canonical,
    Grouped,
    Random,
}

impl OrderingName {
    fn resolve(self, instance: &ChainInstance, seed: u64) -> trotter_core::TermOrdering {
        let name = self.to_possible_value().expect("no skipped variants");
        harness::resolve_ordering(name.get_name(), instance.num_terms(), seed)
            .expect("known ordering")
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    AroundUniform,
    AroundSuzuki,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SweepKind {
    Baseline,
    Optimize,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisName {
    V,
    N,
    T,
    R,
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => harness::write_json(path, value)?,
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn emit_csv<T: Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    match out {
        Some(path) => harness::write_csv(path, rows)?,
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_sweep(out: Option<&Path>, rec: &SweepRecord) -> Result<()> {
    emit_json(out, rec)?;
    if let Some(path) = out {
        harness::write_csv(&path.with_extension("csv"), &rec.points)?;
    }
    Ok(())
}

fn summarize(rec: &RunRecord) {
    eprintln!(
        "error {:.6e} -> {:.6e} ({:.3}% reduction, {} evaluations)",
        rec.error_initial, rec.error_final, rec.reduction_pct, rec.evaluations
    );
}

fn run(cli: &Cli) -> Result<Option<PathBuf>> {
    let parallel = cli.jobs > 1;
    match &cli.command {
        Command::GenerateInstance { n, t, seed, out } => {
            harness::write_instance(out, &harness::generate_instance(*n, *t, *seed)?)?;
            Ok(Some(out.clone()))
        }
        Command::Baseline {
            instance,
            spec,
            seed,
            out,
        } => {
            let inst = instance.load()?;
            let spec = spec.build(&inst, *seed)?;
            emit_json(out.as_deref(), &harness::baseline(&inst, &spec)?)?;
            Ok(out.clone())
        }
        Command::Optimize {
            instance,
            spec,
            cma,
            out,
        } => {
            let inst = instance.load()?;
            let spec = spec.build(&inst, cma.seed)?;
            let rec = harness::optimize(&inst, &spec, &cma.config(parallel))?;
            summarize(&rec);
            emit_json(out.as_deref(), &rec)?;
            if let Some(path) = out {
                harness::write_csv(&path.with_extension("csv"), &rec.trajectory_rows())?;
            }
            Ok(out.clone())
        }
        Command::Sample {
            instance,
            spec,
            scheme,
            scales,
            samples,
            seed,
            out,
        } => {
            let inst = instance.load()?;
            let spec = spec.build(&inst, *seed)?;
            let scheme = match scheme {
                Scheme::AroundUniform => SamplingScheme::AroundUniform,
                Scheme::AroundSuzuki => SamplingScheme::AroundSuzuki,
            };
            let scales = if scales.is_empty() {
                default_scales()
            } else {
                scales.clone()
            };
            let plan = SamplingPlan::new(scheme, scales, *samples)?;
            emit_csv(
                out.as_deref(),
                &harness::sample(&inst, &spec, &plan, *seed)?,
            )?;
            Ok(out.clone())
        }
        Command::SweepR {
            instance,
            k,
            ordering,
            grid,
            mode,
            record,
            epsilon,
            cma,
            out,
        } => {
            let inst = instance.load()?;
            let ordering = ordering.resolve(&inst, cma.seed);
            let mode = match (mode, record) {
                (SweepKind::Baseline, _) => SweepMode::BaselineOnly,
                (SweepKind::Optimize, _) => SweepMode::Optimize(cma.config(false)),
                (SweepKind::Fixed, Some(path)) => {
                    let rec: RunRecord = harness::read_json(path)?;
                    SweepMode::Fixed(rec.p_final)
                }
                (SweepKind::Fixed, None) => bail!("--mode fixed needs --record"),
            };
            let rec = harness::sweep_r(&inst, *k, &ordering, grid, &mode, *epsilon)?;
            emit_sweep(out.as_deref(), &rec)?;
            Ok(out.clone())
        }
        Command::Generalize {
            record,
            axis,
            grid,
            out,
        } => {
            let rec: RunRecord = harness::read_json(record)?;
            let axis = match axis {
                AxisName::V => Axis::V,
                AxisName::N => Axis::N,
                AxisName::T => Axis::T,
                AxisName::R => Axis::R,
            };
            emit_sweep(out.as_deref(), &harness::generalize(&rec, axis, grid)?)?;
            Ok(out.clone())
        }
        Command::Perms {
            instance,
            k,
            grid,
            random,
            seed,
            out,
        } => {
            let inst = instance.load()?;
            emit_csv(
                out.as_deref(),
                &harness::perms(&inst, *k, grid, *random, *seed)?,
            )?;
            Ok(out.clone())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Timing::now();
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.max(1))
        .build_global()
        .map_err(|e| anyhow!(e))
        .and_then(|_| run(&cli));
    match result {
        Ok(Some(out)) => {
            let finished = Timing::now();
            let timing = Timing {
                command: std::env::args().collect::<Vec<_>>().join(" "),
                started_unix_s: started,
                finished_unix_s: finished,
                elapsed_s: finished - started,
                threads: cli.jobs.max(1),
            };
            match harness::write_timing(&out, &timing).context("timing sidecar") {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
