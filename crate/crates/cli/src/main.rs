//! `latbp`: command-line front end for latbp-core.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use latbp_core::checks::{all_passed, Check};
use latbp_core::function::{
    e_certificate, renorm_certificate, ELatticeConfig, PLFunction, RenormOptions, SeqWithLimit,
};
use latbp_core::gallery::{antidiagonal_example, walsh_modulus_example, WalshOptions};
use latbp_core::suite::{random_suite, SuiteConfig, SuiteKind};
use latbp_core::{analyze, DefectOptions, LatticeError, NormSpec, Operator, REPORT_SCHEMA};
use serde::Serialize;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "latbp", version, about = "Band-preservation defects and certificates")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Omit the timestamp so identical runs give identical bytes.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Defects, approximants and bound checks for one matrix.
    Analyze {
        #[arg(long)]
        matrix: PathBuf,
        /// l1 | l2 | linf | lp:<p> | wsup:<weights.json>
        #[arg(long)]
        norm: String,
        #[arg(long, default_value_t = 20)]
        exact_max_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Seeded random verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated sizes (or `n` of `T_n` for the function suite).
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Comma-separated norm specs.
        #[arg(long, value_delimiter = ',')]
        specs: Option<Vec<String>>,
    },
    /// Named examples with asserted values.
    Gallery {
        #[command(subcommand)]
        example: GalleryCmd,
    },
    /// Lower-bound certificates against band-preserving approximation.
    Counterexample {
        #[command(subcommand)]
        model: CounterCmd,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Bounds,
    Approximants,
    Function,
}

#[derive(Subcommand)]
enum GalleryCmd {
    Antidiagonal {
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    Walsh {
        #[arg(long, default_value_t = 4)]
        i: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        exact_bp_max_i: u32,
    },
}

#[derive(Subcommand)]
enum CounterCmd {
    /// Multiplier `phi` against `T_n` on the piecewise-linear lattice.
    #[command(name = "e-lattice")]
    ELattice {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long, default_value_t = 12)]
        depth: u32,
    },
    /// Multiplier `psi` against `x ↦ x_lim 𝟏` under the renormed sup norm.
    Renorm {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        psi: PathBuf,
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Input(String),
}

impl From<LatticeError> for Failure {
    fn from(e: LatticeError) -> Self {
        Failure::Input(e.to_string())
    }
}

#[derive(Serialize)]
struct Envelope {
    schema: &'static str,
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp_unix: Option<u64>,
    passed: bool,
    result: Value,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("malformed JSON in {}: {e}", path.display())))
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn run(cli: &Cli) -> Result<(String, bool, Value), Failure> {
    match &cli.command {
        Command::Analyze { matrix, norm, exact_max_n, seed } => {
            let m: Operator = read_json(matrix)?;
            let spec = NormSpec::parse(norm)?;
            let opts = DefectOptions { exact_max_n: *exact_max_n, seed: *seed, ..DefectOptions::default() };
            let r = analyze(&m, &spec, &opts)?;
            Ok(("analyze".into(), r.passed, to_value(&r)))
        }
        Command::Verify { suite, trials, seed, dims, specs } => {
            let kind = match suite {
                SuiteArg::Bounds => SuiteKind::Bounds,
                SuiteArg::Approximants => SuiteKind::Approximants,
                SuiteArg::Function => SuiteKind::Function,
            };
            let mut cfg = SuiteConfig::new(kind, *seed, *trials);
            if let Some(d) = dims {
                cfg.dims = d.clone();
            }
            if let Some(s) = specs {
                cfg.specs = s.iter().map(|s| NormSpec::parse(s)).collect::<Result<_, _>>()?;
            }
            let r = random_suite(&cfg)?;
            Ok(("verify".into(), r.passed(), to_value(&r)))
        }
        Command::Gallery { example: GalleryCmd::Antidiagonal { eps } } => {
            let b = antidiagonal_example(*eps)?;
            Ok(("gallery antidiagonal".into(), all_passed(&b.checks), to_value(&b)))
        }
        Command::Gallery { example: GalleryCmd::Walsh { i, seed, exact_bp_max_i } } => {
            let b = walsh_modulus_example(*i, &WalshOptions { seed: *seed, exact_bp_max_i: *exact_bp_max_i })?;
            Ok(("gallery walsh".into(), all_passed(&b.checks), to_value(&b)))
        }
        Command::Counterexample { model: CounterCmd::ELattice { n, phi, depth } } => {
            let cfg = ELatticeConfig::new(*depth)?;
            let phi: PLFunction = read_json(phi)?;
            let c = e_certificate(*n, &phi, &cfg)?;
            let ok = Check::le("certificate >= 1/2", 0.5, c.lower_bound, 1e-12).passed;
            Ok(("counterexample e-lattice".into(), ok, to_value(&c)))
        }
        Command::Counterexample { model: CounterCmd::Renorm { eps, psi, samples, seed } } => {
            let psi: SeqWithLimit = read_json(psi)?;
            let c = renorm_certificate(*eps, &psi, &RenormOptions { samples: *samples, seed: *seed })?;
            let ok = c.lower_bound >= c.guarantee - 1e-12 && c.contraction_ok && c.center_ok;
            Ok(("counterexample renorm".into(), ok, to_value(&c)))
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("LATBP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Input(format!("LATBP_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(format!("cannot configure thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|_| run(&cli));
    let (command, passed, result) = match outcome {
        Ok(v) => v,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let timestamp_unix = (!cli.no_timestamp)
        .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let env = Envelope { schema: REPORT_SCHEMA, command, timestamp_unix, passed, result };
    let mut text = serde_json::to_string_pretty(&env).expect("reports serialize");
    text.push('\n');
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("assertion failure: see the report's checks");
        ExitCode::from(1)
    }
}
