//! Command-line surface: compile nets, generate problem models, solve,
//! decode, verify, and convert between variable domains.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or input error,
//! 3 feasibility requirement not met (`--require-feasible`).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bqn::{self, BinaryQuadraticNet};
use crate::coeff::{self, Coeff};
use crate::expr::VarType;
use crate::io;
use crate::problems::{
    graph_partitioning_model, job_shop_minimize_makespan, job_shop_model, tsp_model,
    vertex_cover_model, CompiledModel, DecodeHints,
};
use crate::solver::{
    self, brute_force_capped, simulated_annealing, solve_auto, AnnealConfig, Decoded, SampleSet,
    SolveConfig,
};

#[derive(Parser)]
#[command(
    name = "bqnet",
    version,
    about = "Compile Petri-net optimization models into binary quadratic nets and solve them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_coeff_arg(text: &str) -> Result<Coeff, String> {
    coeff::parse(text).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverChoice {
    /// Exhaustive search when small enough, annealing otherwise.
    Auto,
    /// Exhaustive search only (errors above the variable cap).
    Brute,
    /// Simulated annealing only.
    Sa,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetDomain {
    Binary,
    Spin,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    /// JSON model file with exact coefficients and decode hints.
    ModelJson,
    /// `i j coeff` lines plus a `.vars` variable index sidecar.
    Coordinate,
}

#[derive(Args)]
struct SolveOpts {
    /// Seed for annealing (default: SEED environment variable, then 42).
    #[arg(long)]
    seed: Option<u64>,
    /// Annealing sweeps per read.
    #[arg(long)]
    sweeps: Option<u32>,
    /// Independent annealing reads.
    #[arg(long)]
    reads: Option<u32>,
    /// Largest variable count still solved exhaustively.
    #[arg(long)]
    brute_cap: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a net description and construction config into a model file.
    Compile {
        net: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "model-json")]
        format: ExportFormat,
        /// Write coefficients as floating-point numbers instead of exact strings.
        #[arg(long)]
        float: bool,
        /// Ignore unknown keys in input files.
        #[arg(long)]
        lenient: bool,
    },
    /// Minimize a model file; writes a samples file.
    Solve {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        solver: SolverChoice,
        #[command(flatten)]
        opts: SolveOpts,
        /// Samples file to write (stdout if omitted).
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Exit 3 unless a zero-energy sample is found.
        #[arg(long)]
        require_feasible: bool,
        #[arg(long)]
        lenient: bool,
    },
    /// Read an assignment or samples file back as a problem solution.
    Decode {
        model: PathBuf,
        assignment: PathBuf,
        #[arg(long)]
        lenient: bool,
    },
    /// Report energy, per-component penalties, and token-game replay.
    Verify {
        model: PathBuf,
        assignment: PathBuf,
        /// Exit 3 unless the assignment is a feasible solution.
        #[arg(long)]
        require_feasible: bool,
        #[arg(long)]
        lenient: bool,
    },
    /// Re-express a model over the other variable domain.
    Convert {
        model: PathBuf,
        #[arg(long, value_enum)]
        to: TargetDomain,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "model-json")]
        format: ExportFormat,
        #[arg(long)]
        float: bool,
        #[arg(long)]
        lenient: bool,
    },
    /// Generate a model file from a problem instance.
    Gen {
        #[command(subcommand)]
        problem: GenCommand,
    },
    /// Binary-search the smallest feasible deadline of a job-shop instance.
    JobshopOpt {
        /// Job-shop instance file; its max_time field is ignored.
        instance: PathBuf,
        #[arg(long = "A", value_parser = parse_coeff_arg, default_value = "1")]
        a: Coeff,
        #[arg(long = "B", value_parser = parse_coeff_arg, default_value = "1")]
        b: Coeff,
        #[arg(long = "C", value_parser = parse_coeff_arg, default_value = "1")]
        c: Coeff,
        #[command(flatten)]
        opts: SolveOpts,
        /// Write the schedule as JSON instead of plain text.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Minimum vertex cover of a graph file {"n": .., "edges": [[u, v], ..]}.
    VertexCover {
        #[arg(long)]
        graph: PathBuf,
        /// Penalty per uncovered edge (must exceed B).
        #[arg(long = "A", value_parser = parse_coeff_arg, default_value = "2")]
        a: Coeff,
        /// Cost per chosen vertex.
        #[arg(long = "B", value_parser = parse_coeff_arg, default_value = "1")]
        b: Coeff,
        #[command(flatten)]
        out: GenOutput,
    },
    /// Balanced two-way partition of a graph file; spin variables.
    Partition {
        #[arg(long)]
        graph: PathBuf,
        /// Imbalance penalty (default: the vertex count).
        #[arg(long = "A", value_parser = parse_coeff_arg)]
        a: Option<Coeff>,
        /// Cost per cut edge.
        #[arg(long = "B", value_parser = parse_coeff_arg, default_value = "1")]
        b: Coeff,
        #[command(flatten)]
        out: GenOutput,
    },
    /// Traveling salesman over a square distance matrix file.
    Tsp {
        #[arg(long)]
        dist: PathBuf,
        /// Penalty for visiting a city more or less than once.
        #[arg(long = "A", value_parser = parse_coeff_arg, default_value = "10")]
        a: Coeff,
        /// Penalty for steps without exactly one city.
        #[arg(long = "B", value_parser = parse_coeff_arg, default_value = "10")]
        b: Coeff,
        /// Tour length scale.
        #[arg(long = "C", value_parser = parse_coeff_arg, default_value = "1")]
        c: Coeff,
        /// Pin city 0 to step 0, removing rotational symmetry.
        #[arg(long)]
        clamp_start: bool,
        #[command(flatten)]
        out: GenOutput,
    },
    /// Job-shop scheduling from an instance file with jobs, resources, max_time.
    Jobshop {
        #[arg(long)]
        instance: PathBuf,
        /// Precedence penalty.
        #[arg(long = "A", value_parser = parse_coeff_arg, default_value = "1")]
        a: Coeff,
        /// Resource conflict penalty.
        #[arg(long = "B", value_parser = parse_coeff_arg, default_value = "1")]
        b: Coeff,
        /// Fire-exactly-once and deadline penalty.
        #[arg(long = "C", value_parser = parse_coeff_arg, default_value = "1")]
        c: Coeff,
        #[command(flatten)]
        out: GenOutput,
    },
}

#[derive(Args)]
struct GenOutput {
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "model-json")]
    format: ExportFormat,
    #[arg(long)]
    float: bool,
}

enum Failure {
    Usage(String),
    Validation(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Validation(m) => m,
        }
    }
}

macro_rules! from_validation {
    ($($ty:ty),*) => {
        $(impl From<$ty> for Failure {
            fn from(e: $ty) -> Self {
                Failure::Validation(e.to_string())
            }
        })*
    };
}

from_validation!(
    crate::io::IoError,
    crate::problems::ProblemError,
    crate::solver::SolverError,
    crate::solver::DecodeError,
    crate::bqn::BqnError
);

/// Entry point over real stdio and process arguments.
pub fn run() -> i32 {
    let args: Vec<OsString> = std::env::args_os().collect();
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// Run one invocation against arbitrary writers; returns the exit code.
/// The first argument is the program name, as in `argv`.
pub fn run_with<A, O, E>(args: A, stdout: &mut O, stderr: &mut E) -> i32
where
    A: IntoIterator,
    A::Item: Into<OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(stderr, "error: {}", failure.message());
            failure.code()
        }
    }
}

fn effective_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("SEED must be an unsigned integer, got `{text}`"))),
        Err(_) => Ok(42),
    }
}

fn solve_config(opts: &SolveOpts) -> Result<SolveConfig, Failure> {
    let mut anneal = AnnealConfig {
        seed: effective_seed(opts.seed)?,
        ..AnnealConfig::default()
    };
    if let Some(sweeps) = opts.sweeps {
        anneal.sweeps = sweeps;
    }
    if let Some(reads) = opts.reads {
        anneal.reads = reads;
    }
    Ok(SolveConfig {
        anneal,
        brute_cap: opts.brute_cap,
    })
}

fn write_model(
    net: &BinaryQuadraticNet,
    hints: &DecodeHints,
    output: &Path,
    format: ExportFormat,
    float: bool,
) -> Result<(), Failure> {
    match format {
        ExportFormat::ModelJson => {
            io::write_file(output, &io::model_to_json(net, hints, float))?;
        }
        ExportFormat::Coordinate => {
            let (body, sidecar) = io::model_to_coordinate(net);
            io::write_file(output, &body)?;
            let mut vars_path = output.as_os_str().to_owned();
            vars_path.push(".vars");
            io::write_file(Path::new(&vars_path), &sidecar)?;
        }
    }
    Ok(())
}

/// Rebuild the full compiled model behind a model file. Problem hints
/// regenerate the components and (for job shop) the net; the file's own
/// weights stay authoritative for energies. A domain mismatch means the
/// file was converted, so the components are converted to match.
fn rebuild_model(
    bqn: BinaryQuadraticNet,
    hints: DecodeHints,
) -> Result<CompiledModel, Failure> {
    let rebuilt = match &hints {
        DecodeHints::VertexCover { graph, a, b } => Some(vertex_cover_model(graph, *a, *b)?),
        DecodeHints::Partition { graph, a, b } => Some(graph_partitioning_model(graph, *a, *b)?),
        DecodeHints::Tsp {
            distances,
            a,
            b,
            c,
            clamp_start,
        } => Some(tsp_model(distances, *a, *b, *c, *clamp_start)?),
        DecodeHints::JobShop { instance, a, b, c } => Some(job_shop_model(instance, *a, *b, *c)?),
        DecodeHints::Custom { .. } => None,
    };
    Ok(match rebuilt {
        Some(model) => {
            let model = if model.bqn.var_type == bqn.var_type {
                model
            } else {
                model.with_var_type(bqn.var_type)
            };
            CompiledModel { bqn, ..model }
        }
        None => CompiledModel {
            bqn,
            components: Vec::new(),
            petri: None,
            hints,
        },
    })
}

fn model_summary(net: &BinaryQuadraticNet) -> String {
    format!(
        "{} variables, {} interactions, {} domain",
        net.num_places(),
        net.transitions.len(),
        net.var_type
    )
}

fn dispatch<O: Write, E: Write>(
    command: Command,
    stdout: &mut O,
    stderr: &mut E,
) -> Result<i32, Failure> {
    match command {
        Command::Compile {
            net,
            config,
            output,
            format,
            float,
            lenient,
        } => {
            let petri = io::load_net(&net, lenient)?;
            let config = io::load_config(&config, lenient)?;
            let model = io::compile_net(&petri, &config)?;
            write_model(&model.bqn, &model.hints, &output, format, float)?;
            let _ = writeln!(
                stdout,
                "compiled {} ({} components)",
                model_summary(&model.bqn),
                model.components.len()
            );
            Ok(0)
        }
        Command::Solve {
            model,
            solver,
            opts,
            output,
            require_feasible,
            lenient,
        } => {
            let (net, _) = io::load_model(&model, lenient)?;
            let config = solve_config(&opts)?;
            let samples: SampleSet = match solver {
                SolverChoice::Auto => solve_auto(&net, &config)?,
                SolverChoice::Brute => brute_force_capped(&net, config.brute_cap())?,
                SolverChoice::Sa => simulated_annealing(&net, &config.anneal),
            };
            let mut text =
                serde_json::to_string_pretty(&samples).expect("sample sets serialize");
            text.push('\n');
            match &output {
                Some(path) => {
                    io::write_file(path, &text)?;
                    if let Some(best) = samples.best() {
                        let _ = writeln!(
                            stdout,
                            "best energy {} over {} samples ({})",
                            coeff::render(&best.energy),
                            samples.samples.len(),
                            samples.metadata.solver
                        );
                    }
                }
                None => {
                    let _ = write!(stdout, "{text}");
                }
            }
            if require_feasible {
                let feasible = samples
                    .min_energy()
                    .map(|e| e == coeff::coeff(0))
                    .unwrap_or(false);
                if !feasible {
                    let _ = writeln!(stderr, "no zero-energy sample found");
                    return Ok(3);
                }
            }
            Ok(0)
        }
        Command::Decode {
            model,
            assignment,
            lenient,
        } => {
            let (net, hints) = io::load_model(&model, lenient)?;
            let model = rebuild_model(net, hints)?;
            let input = io::load_assignment_input(&assignment)?;
            let primary = input
                .primary()
                .ok_or_else(|| Failure::Validation("assignment file has no samples".into()))?;
            let decoded = solver::decode(&model, primary)?;
            let _ = writeln!(stdout, "{decoded}");
            if let (Decoded::Schedule(s), Some(petri)) = (&decoded, &model.petri) {
                let _ = writeln!(stdout, "makespan: {}", s.makespan(petri));
            }
            Ok(0)
        }
        Command::Verify {
            model,
            assignment,
            require_feasible,
            lenient,
        } => {
            let (net, hints) = io::load_model(&model, lenient)?;
            let model = rebuild_model(net, hints)?;
            let input = io::load_assignment_input(&assignment)?;
            let primary = input
                .primary()
                .ok_or_else(|| Failure::Validation("assignment file has no samples".into()))?;
            let report = solver::verify(&model, primary)?;
            let _ = write!(stdout, "{report}");
            if require_feasible && !report.is_feasible() {
                let _ = writeln!(stderr, "assignment is not a feasible solution");
                return Ok(3);
            }
            Ok(0)
        }
        Command::Convert {
            model,
            to,
            output,
            format,
            float,
            lenient,
        } => {
            let (net, hints) = io::load_model(&model, lenient)?;
            let target = match to {
                TargetDomain::Binary => VarType::Binary,
                TargetDomain::Spin => VarType::Spin,
            };
            let converted = bqn::convert(&net, target);
            write_model(&converted, &hints, &output, format, float)?;
            let _ = writeln!(stdout, "converted to {}", model_summary(&converted));
            Ok(0)
        }
        Command::Gen { problem } => {
            let (model, out) = match problem {
                GenCommand::VertexCover { graph, a, b, out } => {
                    let g = io::load_graph(&graph)?;
                    (vertex_cover_model(&g, a, b)?, out)
                }
                GenCommand::Partition { graph, a, b, out } => {
                    let g = io::load_graph(&graph)?;
                    let a = a.unwrap_or_else(|| coeff::coeff(g.n as i64));
                    (graph_partitioning_model(&g, a, b)?, out)
                }
                GenCommand::Tsp {
                    dist,
                    a,
                    b,
                    c,
                    clamp_start,
                    out,
                } => {
                    let d = io::load_distances(&dist)?;
                    (tsp_model(&d, a, b, c, clamp_start)?, out)
                }
                GenCommand::Jobshop {
                    instance,
                    a,
                    b,
                    c,
                    out,
                } => {
                    let inst = io::load_jobshop(&instance)?;
                    (job_shop_model(&inst, a, b, c)?, out)
                }
            };
            write_model(&model.bqn, &model.hints, &out.output, out.format, out.float)?;
            let _ = writeln!(stdout, "generated {}", model_summary(&model.bqn));
            Ok(0)
        }
        Command::JobshopOpt {
            instance,
            a,
            b,
            c,
            opts,
            output,
        } => {
            let inst = io::load_jobshop(&instance)?;
            let config = solve_config(&opts)?;
            let result =
                job_shop_minimize_makespan(&inst.jobs, &inst.resources, a, b, c, &config)?;
            let _ = writeln!(stdout, "makespan: {}", result.makespan);
            let durations: Vec<u32> = inst
                .jobs
                .iter()
                .flat_map(|job| job.iter().map(|t| t.duration))
                .collect();
            for &(t, k) in result.schedule.entries() {
                let _ = writeln!(stdout, "t{t} @ {k} (duration {})", durations[t]);
            }
            if let Some(path) = output {
                let entries: Vec<serde_json::Value> = result
                    .schedule
                    .entries()
                    .iter()
                    .map(|&(t, k)| serde_json::json!([t, k]))
                    .collect();
                let doc = serde_json::json!({
                    "makespan": result.makespan,
                    "schedule": entries,
                });
                let mut text =
                    serde_json::to_string_pretty(&doc).expect("schedule serializes");
                text.push('\n');
                io::write_file(&path, &text)?;
            }
            Ok(0)
        }
    }
}
