use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use solitonscope::cli::{
    self, CliError, Command as RunCommand, Expectation, OutputFormat, RunOutcome,
};

#[derive(Parser)]
#[command(
    name = "solitonscope",
    version,
    about = "Verify conformal-soliton conditions on hypersurfaces and metrics, \
             check the structural identities, and classify soliton hypersurfaces"
)]
struct Args {
    /// Config source: a JSON file path, `-` for stdin, or gallery:<id>(p=v,...)
    #[arg(long)]
    config: Option<String>,

    /// What to run
    #[arg(long, value_enum)]
    command: CommandArg,

    /// Expected outcome; exit code 1 when unmet
    #[arg(long, value_enum)]
    expect: Option<ExpectArg>,

    /// Output format (overrides the config's output.format)
    #[arg(long, value_enum)]
    format: Option<FormatArg>,

    /// Output path (overrides the config's output.path; stdout by default)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Maximum jet order the evaluator accepts (default 4)
    #[arg(long)]
    jet_order: Option<usize>,

    /// Worker threads for point evaluation (default: all cores;
    /// SOLITONSCOPE_THREADS is the environment fallback)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CommandArg {
    Verify,
    Identities,
    Classify,
    Sweep,
    Gallery,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpectArg {
    Soliton,
    #[value(name = "not-soliton")]
    NotSoliton,
    Hyperplane,
    Cone,
    Hypersphere,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
}

fn main() -> ExitCode {
    let args = Args::parse();

    let threads = args.threads.or_else(|| {
        std::env::var("SOLITONSCOPE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n > 0 {
            // ignore failure: the global pool may already exist in tests
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }

    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("solitonscope: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(args: &Args) -> Result<i32, CliError> {
    let command = match args.command {
        CommandArg::Verify => RunCommand::Verify,
        CommandArg::Identities => RunCommand::Identities,
        CommandArg::Classify => RunCommand::Classify,
        CommandArg::Sweep => RunCommand::Sweep,
        CommandArg::Gallery => RunCommand::Gallery,
    };
    let expect = args.expect.map(|e| match e {
        ExpectArg::Soliton => Expectation::Soliton,
        ExpectArg::NotSoliton => Expectation::NotSoliton,
        ExpectArg::Hyperplane => Expectation::Hyperplane,
        ExpectArg::Cone => Expectation::Cone,
        ExpectArg::Hypersphere => Expectation::Hypersphere,
    });

    // gallery listing needs no config
    let (outcome, cfg_format, cfg_path) = match (&args.config, command) {
        (None, RunCommand::Gallery) => {
            if expect.is_some() {
                return Err(CliError::Config(
                    "--expect is not meaningful for the gallery listing".into(),
                ));
            }
            (
                RunOutcome {
                    report: cli::gallery_listing_report(),
                    exit_code: 0,
                },
                None,
                None,
            )
        }
        (None, _) => {
            return Err(CliError::Config(
                "--config is required for this command".into(),
            ))
        }
        (Some(source), _) => {
            let mut cfg = cli::load_config(source)?;
            if let Some(k) = args.jet_order {
                cfg.max_jet_order = k;
            }
            solitonscope::expr::set_default_max_jet_order(cfg.max_jet_order);
            let fmt = cfg.output_format;
            let path = cfg.output_path.clone();
            (cli::execute(command, &cfg, expect)?, Some(fmt), path)
        }
    };

    let format = match args.format {
        Some(FormatArg::Text) => OutputFormat::Text,
        Some(FormatArg::Json) => OutputFormat::Json,
        Some(FormatArg::Csv) => OutputFormat::Csv,
        None => cfg_format.unwrap_or(OutputFormat::Text),
    };
    let rendered = cli::render(&outcome.report, format)?;

    match args.out.clone().or_else(|| cfg_path.map(PathBuf::from)) {
        Some(path) => {
            std::fs::write(&path, rendered.as_bytes())?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(rendered.as_bytes())?;
        }
    }
    Ok(outcome.exit_code)
}
