use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use dmmgen::bench::bench;
use dmmgen::compare::compare;
use dmmgen::dmm_io::load_dmm;
use dmmgen::executor::RayonExecutor;
use dmmgen::report;
use dmmgen::topology::Topology;
use dmmgen::trace_io::{load_trace, save_trace};
use dmmgen::workload::load_workload;
use dmmgen_core::dmm_space::{HwParams, OsBackstop};
use dmmgen_core::ge::{kingsley_weights, run_sequential, Evaluator, GeParams, GeRun, Phenotype};
use dmmgen_core::grammar::{generate_grammar, Grammar};
use dmmgen_core::pgea::{self, build_topology};
use dmmgen_core::simulator::{fitness, simulate};
use dmmgen_core::trace::{synth_workload, Trace};

/// Trace-driven search for custom dynamic memory managers.
#[derive(Parser)]
#[command(name = "dmmgen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic allocation trace.
    Synth {
        /// Workload description (TOML).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the workload file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print trace statistics.
    Stats {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Write a grammar customized to a trace.
    GenGrammar {
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        hw: HwArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the standard master-worker topology file.
    GenTopology {
        #[arg(long)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a trace through one DMM; prints ex_time,mem_acc,peak_mem_used,energy,fitness.
    Simulate {
        #[arg(long)]
        dmm: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        hw: HwArgs,
        #[arg(long, value_parser = parse_weights, default_value = "balanced")]
        weights: [f64; 3],
    },
    /// Evolve a DMM for a trace.
    Optimize(OptimizeArgs),
    /// Compare Kingsley, Lea-like and an evolved DMM.
    Compare {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        dmm: PathBuf,
        #[command(flatten)]
        hw: HwArgs,
        #[arg(long, value_parser = parse_weights, default_value = "balanced")]
        weights: [f64; 3],
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time sequential and parallel runs.
    Bench {
        #[command(flatten)]
        search: SearchArgs,
        /// Comma-separated worker counts.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4])]
        workers: Vec<usize>,
        /// Comma-separated execution-unit counts.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4])]
        units: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Copy)]
struct HwArgs {
    /// Platform memory in bytes (suffixes K, M, G).
    #[arg(long, value_parser = parse_bytes, default_value = "256M")]
    memory: u64,
    /// Joules per memory access.
    #[arg(long, default_value_t = 1e-9)]
    energy_per_access: f64,
}

impl HwArgs {
    fn params(&self) -> anyhow::Result<HwParams> {
        let hw = HwParams { energy_per_access: self.energy_per_access, memory_size: self.memory };
        anyhow::ensure!(hw.is_valid(), "memory and energy per access must be positive");
        Ok(hw)
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    trace: PathBuf,
    /// BNF grammar; generated from the trace when absent.
    #[arg(long)]
    grammar: Option<PathBuf>,
    #[command(flatten)]
    hw: HwArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    generations: usize,
    #[arg(long, default_value_t = 60)]
    pop: usize,
    #[arg(long, default_value_t = 0.8)]
    pc: f64,
    #[arg(long, default_value_t = 0.02)]
    pm: f64,
    #[arg(long, default_value_t = 3)]
    max_wraps: usize,
    #[arg(long, default_value_t = 3)]
    tournament: usize,
    #[arg(long, default_value_t = 1)]
    elitism: usize,
    #[arg(long, value_parser = parse_weights, default_value = "balanced")]
    weights: [f64; 3],
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    search: SearchArgs,
    /// Worker models; 0 runs the plain sequential loop.
    #[arg(long, default_value_t = 1, conflicts_with = "topology")]
    workers: usize,
    /// Threads for worker transitions; defaults to the worker count.
    #[arg(long)]
    units: Option<usize>,
    /// Topology file overriding --workers.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Per-generation log (CSV); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the best DMM expression.
    #[arg(long)]
    best_out: Option<PathBuf>,
}

enum Failure {
    Input(anyhow::Error),
    Exhausted(String),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn parse_bytes(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let (digits, shift) = match s.chars().last() {
        Some('K' | 'k') => (&s[..s.len() - 1], 10),
        Some('M' | 'm') => (&s[..s.len() - 1], 20),
        Some('G' | 'g') => (&s[..s.len() - 1], 30),
        _ => (s, 0),
    };
    let n: u64 = digits.parse().map_err(|_| format!("`{s}` is not a byte count"))?;
    n.checked_mul(1 << shift).ok_or_else(|| format!("`{s}` is too large"))
}

fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    if s == "balanced" {
        return Ok([1.0 / 3.0; 3]);
    }
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| "expected three comma-separated weights".to_string())
}

fn invocation() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn trace_arg(path: &Path) -> anyhow::Result<Trace> {
    load_trace(path).with_context(|| format!("reading trace {}", path.display()))
}

fn grammar_for(args: &SearchArgs, trace: &Trace, hw: &HwParams) -> anyhow::Result<Grammar> {
    let text = match &args.grammar {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading grammar {}", p.display()))?,
        None => generate_grammar(trace.stats(), hw),
    };
    Grammar::parse(&text).context("parsing grammar")
}

fn search_setup(args: &SearchArgs) -> anyhow::Result<(Arc<Evaluator>, GeParams)> {
    let hw = args.hw.params()?;
    let trace = trace_arg(&args.trace)?;
    let grammar = grammar_for(args, &trace, &hw)?;
    let params = GeParams {
        population_size: args.pop,
        generations: args.generations,
        p_crossover: args.pc,
        p_mutation: args.pm,
        max_wraps: args.max_wraps,
        tournament_size: args.tournament,
        elitism_count: args.elitism,
        rng_seed: args.seed,
        ..GeParams::default()
    };
    params.validate()?;
    let evaluator = Evaluator::new(Arc::new(grammar), Arc::new(trace), hw, args.weights, params.max_wraps)?;
    Ok((Arc::new(evaluator), params))
}

fn optimize(args: &OptimizeArgs) -> Result<(), Failure> {
    let (evaluator, params) = search_setup(&args.search)?;
    let run: GeRun = if let Some(path) = &args.topology {
        let topology = Topology::load(path).with_context(|| format!("reading topology {}", path.display()))?;
        let coupling = topology.coupling().map_err(anyhow::Error::from)?;
        let (models, _) = build_topology(topology.workers, params, evaluator).map_err(|e| Failure::Input(e.into()))?;
        let executor = RayonExecutor::new(args.units.unwrap_or(topology.workers)).map_err(|e| Failure::Internal(e.into()))?;
        pgea::run_models(models, &coupling, &executor).map_err(|e| Failure::Internal(e.into()))?.0
    } else if args.workers == 0 {
        run_sequential(&evaluator, &params)
    } else {
        if params.population_size < args.workers {
            return Err(Failure::Input(anyhow!("{} workers for a population of {}", args.workers, params.population_size)));
        }
        dmmgen::run_parallel_ge(evaluator, &params, args.workers, args.units.unwrap_or(args.workers))
            .map_err(Failure::Internal)?
    };

    let mut out = output(args.out.as_deref())?;
    report::write_generation_log(&mut out, &invocation(), &run.log).map_err(|e| Failure::Input(e.into()))?;
    let best = match &run.best.phenotype {
        Some(Phenotype::Valid(dmm)) => dmm.to_string(),
        _ => return Err(Failure::Exhausted("no valid DMM was found".into())),
    };
    writeln!(out, "# best: {best}").map_err(|e| Failure::Input(e.into()))?;
    out.flush().map_err(|e| Failure::Input(e.into()))?;
    if let Some(p) = &args.best_out {
        std::fs::write(p, format!("{best}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    if args.out.is_some() {
        println!("{best}");
    }
    if !run.best.score().is_finite() {
        return Err(Failure::Exhausted("every candidate exhausted the heap".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth { config, out, seed } => {
            let cfg = load_workload(&config).with_context(|| format!("reading workload {}", config.display()))?;
            let trace = synth_workload(&cfg.spec, seed.unwrap_or(cfg.seed)).map_err(anyhow::Error::from)?;
            save_trace(&out, &trace).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Stats { trace } => {
            let s = trace_arg(&trace)?.stats().clone();
            println!("events: {}", s.event_count);
            println!("allocations: {}", s.alloc_count);
            println!("max_live_bytes: {}", s.max_live_bytes);
            let sizes: Vec<String> = s.distinct_sizes.iter().map(u64::to_string).collect();
            println!("distinct_sizes: {}", sizes.join(","));
        }
        Command::GenGrammar { trace, hw, out } => {
            let text = generate_grammar(trace_arg(&trace)?.stats(), &hw.params()?);
            let mut w = output(out.as_deref())?;
            w.write_all(text.as_bytes()).map_err(anyhow::Error::from)?;
            w.flush().map_err(anyhow::Error::from)?;
        }
        Command::GenTopology { workers, out } => {
            if workers == 0 {
                return Err(Failure::Input(anyhow!("at least one worker is needed")));
            }
            let mut w = output(out.as_deref())?;
            w.write_all(Topology::standard(workers).to_toml().as_bytes()).map_err(anyhow::Error::from)?;
            w.flush().map_err(anyhow::Error::from)?;
        }
        Command::Simulate { dmm, trace, hw, weights } => {
            let hw = hw.params()?;
            let dmm = load_dmm(&dmm).with_context(|| format!("reading DMM {}", dmm.display()))?;
            let trace = trace_arg(&trace)?;
            let weights = kingsley_weights(&trace, &hw, weights).map_err(anyhow::Error::from)?;
            let m = simulate(&dmm, &trace, &hw);
            println!("{}", report::simulate_line(&m, fitness(&m, &weights)));
            if m.exhausted {
                return Err(Failure::Exhausted(format!("heap exhausted (limit {} bytes)", limit(&dmm.backstop, &hw))));
            }
        }
        Command::Optimize(args) => optimize(&args)?,
        Command::Compare { trace, dmm, hw, weights, out } => {
            let hw = hw.params()?;
            let evolved = load_dmm(&dmm).with_context(|| format!("reading DMM {}", dmm.display()))?;
            let trace = trace_arg(&trace)?;
            let rows = compare(&trace, &hw, &evolved, weights).map_err(anyhow::Error::from)?;
            let mut w = output(out.as_deref())?;
            report::write_compare(&mut w, &invocation(), &rows).map_err(anyhow::Error::from)?;
            if let Some(r) = rows.iter().find(|r| r.metrics.exhausted) {
                return Err(Failure::Exhausted(format!("{} exhausted the heap", r.name)));
            }
        }
        Command::Bench { search, workers, units, reps, out } => {
            let (evaluator, params) = search_setup(&search)?;
            if let Some(w) = workers.iter().find(|&&w| w == 0 || w > params.population_size) {
                return Err(Failure::Input(anyhow!("bad worker count {w}")));
            }
            let configs: Vec<(usize, usize)> =
                workers.iter().flat_map(|&w| units.iter().map(move |&u| (w, u.max(1)))).collect();
            let rows = bench(evaluator, &params, &configs, reps).map_err(Failure::Internal)?;
            let mut w = output(out.as_deref())?;
            report::write_bench(&mut w, &invocation(), &rows).map_err(anyhow::Error::from)?;
        }
    }
    Ok(())
}

fn limit(backstop: &OsBackstop, hw: &HwParams) -> u64 {
    backstop.heap_limit.min(hw.memory_size)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Exhausted(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(3)
        }
    }
}
