use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use twinbeam::app::{self, AnalyzeArgs, SimulateArgs};
use twinbeam::traceio::Format;
use twinbeam::{AppResult, Mode};

#[derive(Parser)]
#[command(
    name = "twinbeam",
    version,
    about = "Simulate and analyze pulsed twin-beam squeezing measurements"
)]
struct Cli {
    /// Default output directory.
    #[arg(long, env = "TWINBEAM_OUT_DIR", default_value = ".", global = true)]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Binary,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the traces of one run.
    Simulate {
        #[arg(long)]
        mode: Mode,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the trace files (default: the output directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "binary")]
        format: FileFormat,
    },
    /// Analyze trace files and write a JSON report plus CSV plot tables.
    Analyze {
        #[arg(long)]
        mode: Mode,
        /// Trace files; roles are read from their headers.
        #[arg(long = "trace", required = true, num_args = 1..)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report path (default: <out-dir>/report_<mode>.json).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        correct_electronic: bool,
        /// Probe shift in samples before digital subtraction.
        #[arg(long, allow_negative_numbers = true)]
        delay_comp: Option<i64>,
        #[arg(long)]
        window_center_hz: Option<f64>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Print a summary of a report file.
    Report { report: PathBuf },
}

fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Simulate {
            mode,
            config,
            seed,
            out,
            format,
        } => {
            let args = SimulateArgs {
                mode,
                config,
                seed,
                out: out.unwrap_or(cli.out_dir),
                format: match format {
                    FileFormat::Binary => Format::Binary,
                    FileFormat::Csv => Format::Csv,
                },
            };
            for p in app::simulate(&args)? {
                println!("{}", p.display());
            }
        }
        Command::Analyze {
            mode,
            traces,
            config,
            out,
            correct_electronic,
            delay_comp,
            window_center_hz,
            bins,
        } => {
            let args = AnalyzeArgs {
                traces,
                config,
                out: out.unwrap_or_else(|| cli.out_dir.join(format!("report_{mode}.json"))),
                correct_electronic,
                delay_comp,
                window_center_hz,
                bins,
            };
            let (report, tables) = app::analyze(mode, &args)?;
            println!("{}", args.out.display());
            for t in tables {
                println!("{}", t.display());
            }
            print!("{}", twinbeam::report::render_summary(&report));
        }
        Command::Report { report } => print!("{}", app::report(&report)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
