//! `devsim`: run, validate, flatten, and audit simulation models, and score
//! approach assessments.
//!
//! Exit codes: 0 success, 1 validation or semantic error, 2 runtime
//! simulation error, 3 usage error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use devsim_core::audit::structure_audit;
use devsim_core::{
    flatten, parse_model, parse_trace, print_model, BehaviorCatalog, Engine, Mode, SimTime,
    WriteSink,
};
use devsim_scorer as scorer;

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "devsim",
    about = "Discrete-event simulation kernel with dynamic structure",
    version,
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a model file and write its trace.
    Run(RunArgs),
    /// Parse and statically validate a model file.
    Validate { model: PathBuf },
    /// Rewrite a model file into its single-level equivalent.
    Flatten {
        model: PathBuf,
        /// Write the flattened document here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct the structure a trace had at a given time.
    Audit {
        trace: PathBuf,
        /// Time of interest (a non-negative number, or `inf` for the end).
        #[arg(long)]
        at: String,
    },
    /// Score approach assessments against weighted criteria.
    Score(ScoreArgs),
}

#[derive(Args)]
struct RunArgs {
    model: PathBuf,
    /// Write the trace to this file (defaults to stdout).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Override the execution mode from the file header.
    #[arg(long)]
    mode: Option<String>,
    /// Override the time limit.
    #[arg(long)]
    until: Option<f64>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Criteria file (`criteria { name = weight ... }`).
    #[arg(long)]
    criteria: Option<PathBuf>,
    /// Assessments file (`assessments { approach ... }`).
    #[arg(long)]
    assessments: PathBuf,
    /// Use the built-in criterion set instead of --criteria.
    #[arg(long)]
    paper_preset: bool,
    /// Check the published comparison's constraints on the results.
    #[arg(long)]
    paper_check: bool,
    /// Report ranking sensitivity to this relative weight perturbation.
    #[arg(long)]
    sensitivity: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit.
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(EXIT_USAGE);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { model } => validate(model),
        Command::Flatten { model, out } => flatten_cmd(model, out),
        Command::Audit { trace, at } => audit(trace, at),
        Command::Score(args) => score(args),
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("devsim: {message}");
    ExitCode::from(code)
}

fn read(path: &PathBuf) -> Result<String, ExitCode> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn load_model(path: &PathBuf, catalog: &BehaviorCatalog) -> Result<devsim_core::ModelDocument, ExitCode> {
    let text = read(path)?;
    parse_model(&text, catalog)
        .map_err(|e| fail(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

fn run(args: RunArgs) -> ExitCode {
    let catalog = Arc::new(BehaviorCatalog::standard());
    let mut document = match load_model(&args.model, &catalog) {
        Ok(document) => document,
        Err(code) => return code,
    };
    if let Some(mode) = &args.mode {
        document.mode = match Mode::parse(mode) {
            Ok(mode) => mode,
            Err(e) => return fail(EXIT_USAGE, e),
        };
        if document.mode == Mode::Classic {
            // Re-validate: the file may lack select orders.
            let printed = print_model(&document);
            if let Err(e) = parse_model(&printed, &catalog) {
                return fail(EXIT_VALIDATION, format!("--mode classic: {e}"));
            }
        }
    }
    if let Some(until) = args.until {
        document.stop.time_limit = match SimTime::finite(until) {
            Ok(t) => Some(t),
            Err(e) => return fail(EXIT_USAGE, e),
        };
    }

    let mut engine = match Engine::new(document, catalog) {
        Ok(engine) => engine,
        Err(e) => return fail(EXIT_VALIDATION, e),
    };
    let result = match &args.trace {
        Some(path) => {
            let file = match fs::File::create(path) {
                Ok(file) => file,
                Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", path.display())),
            };
            let mut sink = WriteSink::new(std::io::BufWriter::new(file));
            let result = engine.run(&mut sink);
            if let Err(e) = sink.into_inner().flush() {
                return fail(EXIT_RUNTIME, e);
            }
            result
        }
        None => {
            let stdout = std::io::stdout();
            let mut sink = WriteSink::new(stdout.lock());
            engine.run(&mut sink)
        }
    };
    match result {
        Ok(_) => ExitCode::SUCCESS,
        // A closed stdout (e.g. piping into `head`) is not a simulation error.
        Err(e) if args.trace.is_none() && e.to_string().contains("Broken pipe") => {
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_RUNTIME, e),
    }
}

fn validate(model: PathBuf) -> ExitCode {
    let catalog = BehaviorCatalog::standard();
    match load_model(&model, &catalog) {
        Ok(_) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn flatten_cmd(model: PathBuf, out: Option<PathBuf>) -> ExitCode {
    let catalog = BehaviorCatalog::standard();
    let document = match load_model(&model, &catalog) {
        Ok(document) => document,
        Err(code) => return code,
    };
    let mut flat = document;
    flat.root = flatten(&flat.root);
    let printed = print_model(&flat);
    match out {
        Some(path) => match fs::write(&path, printed) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(EXIT_USAGE, format!("{}: {e}", path.display())),
        },
        None => {
            print!("{printed}");
            ExitCode::SUCCESS
        }
    }
}

fn audit(trace: PathBuf, at: String) -> ExitCode {
    let text = match read(&trace) {
        Ok(text) => text,
        Err(code) => return code,
    };
    let time = match SimTime::parse(&at) {
        Ok(time) => time,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let records = match parse_trace(&text) {
        Ok(records) => records,
        Err(e) => return fail(EXIT_VALIDATION, e),
    };
    let history = match structure_audit(&records) {
        Ok(history) => history,
        Err(e) => return fail(EXIT_VALIDATION, e),
    };
    match history.at(time) {
        Some(structure) => {
            print!("# structure at t={time}\n{}", structure.render());
            ExitCode::SUCCESS
        }
        None => fail(EXIT_VALIDATION, "trace contains no structure information"),
    }
}

fn score(args: ScoreArgs) -> ExitCode {
    let criteria = match (&args.criteria, args.paper_preset) {
        (Some(_), true) => {
            return fail(EXIT_USAGE, "--criteria and --paper-preset are mutually exclusive")
        }
        (None, false) => {
            return fail(EXIT_USAGE, "provide --criteria <file> or --paper-preset")
        }
        (None, true) => scorer::paper_preset(),
        (Some(path), false) => {
            let text = match read(path) {
                Ok(text) => text,
                Err(code) => return code,
            };
            match scorer::parse_criteria(&text) {
                Ok(criteria) => criteria,
                Err(e) => return fail(EXIT_VALIDATION, e),
            }
        }
    };
    let assessments = {
        let text = match read(&args.assessments) {
            Ok(text) => text,
            Err(code) => return code,
        };
        match scorer::parse_assessments(&text) {
            Ok(assessments) => assessments,
            Err(e) => return fail(EXIT_VALIDATION, e),
        }
    };
    let board = match scorer::score(&criteria, &assessments) {
        Ok(board) => board,
        Err(e) => return fail(EXIT_VALIDATION, e),
    };
    print!("{}", board.render_table());
    println!();
    print!("{}", board.render_machine());

    if let Some(perturbation) = args.sensitivity {
        match scorer::sensitivity(&criteria, &assessments, perturbation) {
            Ok(report) => {
                println!();
                print!("{}", report.render());
            }
            Err(e) => return fail(EXIT_USAGE, e),
        }
    }
    if args.paper_check {
        match scorer::paper_check(&board) {
            Ok(()) => println!("\npaper-check: all constraints satisfied"),
            Err(violations) => {
                eprintln!("devsim: paper-check failed:");
                for violation in violations {
                    eprintln!("  - {violation}");
                }
                return ExitCode::from(EXIT_VALIDATION);
            }
        }
    }
    ExitCode::SUCCESS
}
