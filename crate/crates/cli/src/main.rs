//! `kanbun`: extraction, return marks, reordering and evaluation over
//! tab-separated corpus files.

mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "kanbun", version, about = "Kanbun reading-order toolkit")]
struct Cli {
    /// Worker threads; 0 uses every core. Output order never depends on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Character-form table (`variant\tstandard` per line) replacing the
    /// shipped one.
    #[arg(long, global = true, value_name = "FILE")]
    char_table: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    Exponential,
    None,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract reading orders from a raw parallel file into a corpus file.
    Extract {
        /// Raw file: `id\tpoem_id\tsource\tkanbun` per line.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Escape sidecar: `id\tkind\tposition[\targument]` per line.
        #[arg(long, value_name = "FILE")]
        annotations: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Write return marks for every corpus record as `id\tmarked`.
    RenderKaeriten {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Read `id\tmarked` lines and write their orders as `id\torder\tflags`.
    ParseKaeriten {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Fit the baseline rank predictor on a corpus file.
    Train {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Predict reading orders for a corpus file or `id\tsource` lines.
    Reorder {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Trained baseline model; without it the source order is kept.
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Score predicted orders against gold orders (τ and PMR), matched by id.
    EvalOrder {
        /// Corpus file or `id\torder\tflags` file.
        #[arg(long, value_name = "FILE")]
        gold: PathBuf,
        /// `id\torder\tflags` file or corpus file; extra ids are ignored.
        #[arg(long, value_name = "FILE")]
        predicted: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Score translations with character BLEU, RIBES and ROUGE-L.
    EvalMt {
        /// One candidate per line, as `text` or `id\ttext`.
        #[arg(long, value_name = "FILE")]
        candidates: PathBuf,
        /// One reference per line, aligned with the candidates.
        #[arg(long, value_name = "FILE")]
        references: PathBuf,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..=16))]
        max_n: u64,
        #[arg(long, value_enum, default_value_t = SmoothingArg::Exponential)]
        smoothing: SmoothingArg,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Split a corpus by poem into train, validation and test files.
    Split {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Train, validation and test shares; must sum to 1.
        #[arg(long, default_value = "0.8,0.1,0.1", value_parser = parse_ratios)]
        ratios: [f64; 3],
        #[arg(long, value_name = "DIR")]
        output_dir: PathBuf,
    },
    /// Print poem, sentence and character counts.
    Stats {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
    },
    /// Correlate automatic scores with human judgements.
    Correlate {
        /// Metric report, or a table with an `id\t<metric>...` header row.
        #[arg(long, value_name = "FILE")]
        auto: PathBuf,
        /// Judgements as `id\tcriterion\trater\tscore` lines.
        #[arg(long, value_name = "FILE")]
        human: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Translate sentences through an external command, one line in and one
    /// line out per sentence.
    Translate {
        /// Corpus file or `id\tsource` lines.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        /// Program to run; it reads sentences on stdin and writes one
        /// translation per line on stdout.
        #[arg(long, value_name = "PROGRAM")]
        backend: PathBuf,
        /// Argument for the program; repeat for several.
        #[arg(long = "backend-arg", value_name = "ARG", allow_hyphen_values = true)]
        backend_args: Vec<String>,
        /// Reorder sentences with this baseline model before translating.
        #[arg(long, value_name = "FILE")]
        reorder_model: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("{p:?} is not a number"))
        })
        .collect::<Result<_, _>>()?;
    let [a, b, c] = parts[..] else {
        return Err("expected three comma-separated ratios".into());
    };
    let r = [a, b, c];
    if r.iter().any(|x| !x.is_finite() || *x < 0.0) || (a + b + c - 1.0).abs() > 1e-6 {
        return Err("ratios must be non-negative and sum to 1".into());
    }
    Ok(r)
}

fn usage_message(e: &clap::Error) -> String {
    let rendered = e.render().to_string();
    rendered
        .lines()
        .next()
        .unwrap_or("invalid arguments")
        .trim_start_matches("error: ")
        .to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(usage_message(&e))),
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            return fail(&CliError::Usage(format!(
                "cannot start {} workers: {e}",
                cli.jobs
            )))
        }
    };
    let ctx = commands::Context {
        seed: cli.seed,
        char_table: cli.char_table,
    };
    match pool.install(|| commands::run(&ctx, cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}
