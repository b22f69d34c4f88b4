use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use construct::check::validate_assignment;
use construct::container::{load_trace, write_trace, REFERENCE_TRACE};
use construct::fixtures::build_fixture;
use construct::ga::{run_ga, search_space_size, GaConfig, GaError, GaResult, Mode};
use construct::model::{emit_modelica, skeleton};
use construct::pipeline::{
    load_mapping, simulate_mapping, translate_container, write_file, PipelineError,
};
use construct::sim::{mean_squared_error, output_names};

#[derive(Parser)]
#[command(
    name = "construct",
    version,
    about = "Recover equation models from decompiled FMU step functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for the slot-to-variable mapping that best reproduces the reference trace.
    Synth(SynthArgs),
    /// Print the recovered equation skeleton and its symbol slots, or the
    /// model a mapping binds.
    Translate {
        container: PathBuf,
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Write the skeleton model here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check a mapping against the validity constraints.
    Validate {
        container: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
    },
    /// Simulate a mapping over the container's input trace.
    Simulate {
        container: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        /// Input trace to use instead of the container's own.
        #[arg(long)]
        inputs: Option<PathBuf>,
        /// Write the output trace here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Simulate the ground-truth mapping and write traces/reference.csv.
    MakeReference {
        container: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        inputs: Option<PathBuf>,
    },
    /// Print the number of injective slot-to-variable mappings.
    Space { slots: u64, variables: u64 },
    /// Write one of the bundled controller fixtures (pi, pid, limpid).
    MakeFixture { name: String, dir: PathBuf },
}

#[derive(Args)]
struct SynthArgs {
    container: PathBuf,
    #[arg(long)]
    mode: Mode,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    gens: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    elitism: Option<usize>,
    /// Crossover probability.
    #[arg(long)]
    pc: Option<f64>,
    /// Mutation probability.
    #[arg(long)]
    pm: Option<f64>,
    #[arg(long)]
    tournament: Option<usize>,
    /// Always run every generation.
    #[arg(long)]
    no_early_stop: bool,
    /// Repair CbT crossover children with partially mapped crossover.
    #[arg(long)]
    cbt_repair: bool,
    /// Where to write the best model (`.mo`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-generation best MSE as CSV.
    #[arg(long)]
    curves: Option<PathBuf>,
}

impl SynthArgs {
    fn config(&self) -> Result<GaConfig, GaError> {
        let mut cfg = GaConfig::default();
        if let Some(v) = self.pop {
            cfg.population_size = v;
        }
        if let Some(v) = self.gens {
            cfg.max_generations = v;
        }
        if let Some(v) = self.seed {
            cfg.rng_seed = v;
        }
        if let Some(v) = self.elitism {
            cfg.elitism = v;
        }
        if let Some(v) = self.pc {
            cfg.crossover_rate = v;
        }
        if let Some(v) = self.pm {
            cfg.mutation_rate = v;
        }
        if let Some(v) = self.tournament {
            cfg.tournament_size = v;
        }
        if self.no_early_stop {
            cfg.early_stop = None;
        }
        cfg.cbt_repair = self.cbt_repair;
        cfg.with_env_threads()
    }
}

fn curves_csv(r: &GaResult) -> String {
    let mut s = String::from("mode,generation,best_mse\n");
    for g in &r.per_generation {
        let mse = g.best_mse.map(|m| format!("{m:e}")).unwrap_or_default();
        let _ = writeln!(s, "{},{},{}", r.mode, g.generation, mse);
    }
    s
}

fn synth(args: &SynthArgs) -> Result<ExitCode, PipelineError> {
    let cfg = args.config()?;
    let t = translate_container(&args.container)?;
    let problem = t.problem();
    let result = run_ga(args.mode, &problem, &cfg)?;
    if let Some(path) = &args.report {
        write_file(path, &result.report_json())?;
    }
    if let Some(path) = &args.curves {
        write_file(path, &curves_csv(&result))?;
    }
    let (best, fitness) = &result.best;
    eprintln!(
        "{} generations, {} evaluations, best {fitness} with genes {:?}",
        result.per_generation.len(),
        result.evaluations,
        best.genes
    );
    if !fitness.is_finite() {
        eprintln!("no chromosome could be simulated");
        return Ok(ExitCode::from(2));
    }
    let text = emit_modelica(&t.bind(best)?, &t.model_name());
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, PipelineError> {
    match cli.command {
        Command::Synth(args) => return synth(&args),
        Command::Translate {
            container,
            mapping,
            out,
        } => {
            let t = translate_container(&container)?;
            let text = match mapping {
                Some(path) => emit_modelica(&t.bind(&load_mapping(&path)?)?, &t.model_name()),
                None => {
                    let mut text = emit_modelica(&skeleton(&t.model), &t.model_name());
                    text.push_str("\n// slots\n");
                    for s in &t.model.slots {
                        let _ = writeln!(
                            text,
                            "// {}  {}  {}",
                            s.placeholder(),
                            s.origin,
                            s.inferred_type
                        );
                    }
                    text
                }
            };
            match out {
                Some(path) => write_file(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Validate { container, mapping } => {
            let t = translate_container(&container)?;
            let c = load_mapping(&mapping)?;
            let report = validate_assignment(&t.model, &t.container.variable_table, &c);
            println!("{report}");
            if !report.valid {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Simulate {
            container,
            mapping,
            inputs,
            out,
        } => {
            let t = translate_container(&container)?;
            let c = load_mapping(&mapping)?;
            let inputs = match inputs {
                Some(p) => load_trace(&p)?,
                None => t
                    .container
                    .input_trace
                    .clone()
                    .ok_or(PipelineError::NoInputTrace)?,
            };
            let trace = simulate_mapping(&t, &c, &inputs)?;
            match out {
                Some(path) => write_trace(&path, &trace)?,
                None => print!("{}", trace.to_csv()),
            }
            if let Some(reference) = &t.container.reference_trace {
                let outputs = output_names(&t.container.variable_table);
                if let Some(mse) = mean_squared_error(&trace, reference, &outputs) {
                    eprintln!("mse against reference: {mse:e}");
                }
            }
        }
        Command::MakeReference {
            container,
            mapping,
            inputs,
        } => {
            let t = translate_container(&container)?;
            let c = load_mapping(&mapping)?;
            let inputs = match inputs {
                Some(p) => load_trace(&p)?,
                None => t
                    .container
                    .input_trace
                    .clone()
                    .ok_or(PipelineError::NoInputTrace)?,
            };
            let trace = simulate_mapping(&t, &c, &inputs)?;
            write_trace(&container.join(REFERENCE_TRACE), &trace)?;
        }
        Command::Space { slots, variables } => {
            println!("{}", search_space_size(slots, variables)?);
        }
        Command::MakeFixture { name, dir } => {
            let f = build_fixture(&name, &dir)?;
            let (eqs, vars, slots) = f.counts;
            println!(
                "{}: {eqs} equations, {vars} variables, {slots} slots",
                f.name
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // Exit code 2 is reserved for "no simulatable chromosome", so usage
    // errors exit 1 like any other failure.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
