use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dgsem_core::config::RunConfig;
use dgsem_core::convergence::{convergence_study, Refinement};
use dgsem_core::mesh::{audit, box_mesh, read_mesh, warped_box_mesh, write_mesh};
use dgsem_core::run::{basis_table, run_case, RunError};
use dgsem_core::spectral::NodalBasis;
use dgsem_core::verify::{self, Suite};

const EXIT_CHECK: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dgsem",
    version,
    about = "Split-form DGSEM solver and verification driver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured case and write the monitor CSV and final state.
    Run {
        config: PathBuf,
        /// Override the final time from the config.
        #[arg(long)]
        final_time: Option<f64>,
    },
    /// Run an invariant battery and print one line per check.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Refine a configured case and report errors and observed orders as CSV.
    Converge(ConvergeArgs),
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Basis utilities.
    Basis {
        #[command(subcommand)]
        command: BasisCommand,
    },
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("refinement").required(true).args(["levels", "degrees"])))]
struct ConvergeArgs {
    config: PathBuf,
    /// Elements per direction, e.g. 2,4,8.
    #[arg(long, value_delimiter = ',')]
    levels: Vec<usize>,
    /// Polynomial degrees at the configured mesh, e.g. 2,3,4.
    #[arg(long, value_delimiter = ',')]
    degrees: Vec<usize>,
    /// Write the CSV here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Fail with exit code 1 if the last observed density order is lower.
    #[arg(long)]
    min_order: Option<f64>,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Print per-element Jacobian ranges and metric identity residuals.
    Audit {
        path: PathBuf,
        #[arg(long, default_value_t = 4)]
        degree: usize,
        /// Largest acceptable metric identity residual.
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
    /// Write a built-in mesh in the text mesh format.
    Generate {
        #[arg(long, value_enum, default_value_t = MeshShape::Warped)]
        kind: MeshShape,
        /// Elements per direction.
        #[arg(long, default_value_t = 4)]
        elements: usize,
        /// Warp amplitude.
        #[arg(long, default_value_t = 0.05)]
        amplitude: f64,
        /// Degree of the stored curved-face grids.
        #[arg(long, default_value_t = 6)]
        face_degree: usize,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum BasisCommand {
    /// Print nodes, weights and the derivative matrix as CSV.
    Dump {
        #[arg(long)]
        degree: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshShape {
    Box,
    Warped,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn check(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CHECK,
            message: message.into(),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let code = match e {
            RunError::Config(_) | RunError::StateFormat { .. } => EXIT_USAGE,
            RunError::Solver(_) | RunError::Io { .. } => EXIT_RUNTIME,
        };
        let message = if e.is_positivity() {
            format!("aborted: {e}")
        } else {
            e.to_string()
        };
        Self { code, message }
    }
}

fn write_output(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure {
        code: EXIT_RUNTIME,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn fmt5(v: &[f64; 5]) -> String {
    v.iter()
        .map(|x| format!("{x:.3e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn run(config: &Path, final_time: Option<f64>) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(config).map_err(Failure::usage)?;
    if let Some(t) = final_time {
        cfg.numerics.final_time = t;
    }
    let report = run_case(&cfg)?;
    println!("case            {}", cfg.case.name());
    println!("steps           {}", report.steps);
    println!("final time      {:.6}", report.final_time);
    println!("initial |dU/dt| {:.3e}", report.initial_residual);
    println!("max dS/dt       {:.3e}", report.max_entropy_rate);
    println!("total drift     {}", fmt5(&report.max_total_drift()));
    println!("L2 error        {}", fmt5(&report.errors.l2));
    println!("Linf error      {}", fmt5(&report.errors.linf));
    for p in [&cfg.output.monitor, &cfg.output.final_state]
        .into_iter()
        .flatten()
    {
        println!("wrote           {}", p.display());
    }
    Ok(())
}

fn converge(args: &ConvergeArgs) -> Result<(), Failure> {
    let cfg = RunConfig::load(&args.config).map_err(Failure::usage)?;
    let refinement = if args.levels.is_empty() {
        Refinement::Degrees(args.degrees.clone())
    } else {
        Refinement::Elements(args.levels.clone())
    };
    let report = convergence_study(&cfg, &refinement)?;
    let csv = report.to_csv();
    match &args.output {
        Some(p) => write_output(p, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(min) = args.min_order {
        let order = report
            .last_order(0)
            .ok_or_else(|| Failure::usage("--min-order needs at least two --levels"))?;
        if order < min {
            return Err(Failure::check(format!(
                "observed order {order:.3} below {min}"
            )));
        }
    }
    Ok(())
}

fn mesh_audit(path: &Path, degree: usize, tolerance: f64) -> Result<(), Failure> {
    let mesh = read_mesh(path).map_err(Failure::usage)?;
    let a = audit(&mesh, degree).map_err(Failure::usage)?;
    println!("element,jacobian_min,jacobian_max,metric_residual");
    for e in &a.elements {
        println!(
            "{},{:.6e},{:.6e},{:.3e}",
            e.element, e.jacobian_min, e.jacobian_max, e.metric_residual
        );
    }
    let worst = a.max_metric_residual();
    eprintln!(
        "{} elements at degree {}: max metric residual {worst:.3e}, surface mismatch {:.3e}",
        a.elements.len(),
        a.degree,
        a.surface_mismatch
    );
    if worst > tolerance {
        return Err(Failure::check(format!(
            "metric identity residual {worst:.3e} exceeds {tolerance:.1e}"
        )));
    }
    Ok(())
}

fn mesh_generate(
    kind: MeshShape,
    elements: usize,
    amplitude: f64,
    face_degree: usize,
    output: &Path,
) -> Result<(), Failure> {
    if elements == 0 {
        return Err(Failure::usage("--elements must be at least 1"));
    }
    let m = match kind {
        MeshShape::Box => {
            box_mesh([elements; 3], [0.0; 3], [1.0; 3], [true; 3]).map_err(Failure::usage)?
        }
        MeshShape::Warped => warped_box_mesh([elements; 3], amplitude),
    };
    let degree = match kind {
        MeshShape::Box => 1,
        MeshShape::Warped => face_degree,
    };
    let text = write_mesh(&m, degree).map_err(Failure::usage)?;
    write_output(output, &text)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, final_time } => run(&config, final_time),
        Command::Verify { suite, seed } => {
            let report = verify::run(suite, seed);
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::check("verification failed"))
            }
        }
        Command::Converge(args) => converge(&args),
        Command::Mesh { command } => match command {
            MeshCommand::Audit {
                path,
                degree,
                tolerance,
            } => mesh_audit(&path, degree, tolerance),
            MeshCommand::Generate {
                kind,
                elements,
                amplitude,
                face_degree,
                output,
            } => mesh_generate(kind, elements, amplitude, face_degree, &output),
        },
        Command::Basis {
            command: BasisCommand::Dump { degree },
        } => {
            let basis = NodalBasis::new(degree).map_err(Failure::usage)?;
            print!("{}", basis_table(&basis));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
