use clap::{Parser, Subcommand, ValueEnum};
use fracns_cli::checks::{formula_checks, generator_checks, leray_checks, oracle_gap};
use fracns_cli::config::LoadedConfig;
use fracns_cli::record::{read_records, write_records};
use fracns_cli::summary::{tables, write_csv, write_csv_file, write_ndjson};
use fracns_cli::{member, run_experiment, Check, HarnessError, RunContext};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracns", version, about = "Truncated fractional stochastic Navier-Stokes experiments")]
struct Cli {
    /// Worker threads for ensemble members [env: FRACNS_WORKERS; default: available cores]
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more experiment configs in order.
    Run {
        configs: Vec<PathBuf>,
        /// Override `output.records` (NDJSON; stdout when neither is set).
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Continue the trajectory stored in a checkpoint to its final step.
    Resume {
        checkpoint: PathBuf,
        /// NDJSON file for the resume record [default: stdout]
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Turn NDJSON records into per-experiment tables.
    Summarize {
        records: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output file [default: stdout]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form predictions.
    Predict {
        #[command(subcommand)]
        what: Predict,
    },
    /// Deterministic identity suites (exit 1 if any check fails).
    Check {
        #[arg(value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
}

#[derive(Subcommand)]
enum Predict {
    /// Effective viscosity nu_eff(d, lambda_hat); labeled theorem (d = 2) or conjecture (d >= 3).
    NuEff {
        #[arg(long)]
        d: usize,
        #[arg(long = "lambda-hat", allow_hyphen_values = true)]
        lambda_hat: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Ndjson,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Identities,
    Generator,
    Formulas,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.filter(|&w| w > 0).unwrap_or_else(fracns_cli::workers_from_env);
    match dispatch(cli.command, workers) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let HarnessError::Abort { checkpoint: Some(p), .. } = &e {
                eprintln!("checkpoint written to {}", p.display());
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command, workers: usize) -> Result<u8, HarnessError> {
    match cmd {
        Command::Run { configs, records } => {
            if configs.is_empty() {
                return Err(HarnessError::Config("no config given".into()));
            }
            // parse everything first so a typo in the last file fails fast
            let loaded: Vec<LoadedConfig> =
                configs.iter().map(|p| LoadedConfig::from_path(p)).collect::<Result<_, _>>()?;
            for l in loaded {
                let ctx = RunContext::new(l, workers);
                let out = run_experiment(&ctx)?;
                let path = records.clone().or_else(|| ctx.config().output.records.clone());
                write_records(path.as_deref(), &out.records)?;
                if let Some(csv) = &ctx.config().output.summary {
                    write_csv_file(csv, &out.records)?;
                }
                let verdict = if out.passed() { "PASS" } else { "FAIL" };
                eprintln!("[{verdict}] {}: {}", ctx.config().kind.name(), out.summary);
            }
            Ok(0)
        }
        Command::Resume { checkpoint, records } => {
            let rec = member::resume(&checkpoint, workers)?;
            write_records(records.as_deref(), &[rec])?;
            Ok(0)
        }
        Command::Summarize { records, format, out } => {
            let mut all = Vec::new();
            for p in &records {
                all.extend(read_records(p)?);
            }
            let mut buf = Vec::new();
            for (i, t) in tables(&all).values().enumerate() {
                match format {
                    Format::Csv => {
                        if i > 0 {
                            buf.push(b'\n');
                        }
                        write_csv(&mut buf, t)?
                    }
                    Format::Ndjson => write_ndjson(&mut buf, t)?,
                }
            }
            match out {
                Some(p) => std::fs::write(p, buf)?,
                None => print!("{}", String::from_utf8_lossy(&buf)),
            }
            Ok(0)
        }
        Command::Predict { what: Predict::NuEff { d, lambda_hat } } => {
            if d < 2 {
                return Err(HarnessError::Config(format!("d must be at least 2, got {d}")));
            }
            let status = match fracns::nu_eff_status(d) {
                fracns::FormulaStatus::Theorem => "theorem",
                fracns::FormulaStatus::Conjecture => "conjecture",
            };
            let line = serde_json::json!({
                "d": d,
                "lambda_hat": lambda_hat,
                "nu_eff": fracns::nu_eff(d, lambda_hat),
                "status": status,
            });
            println!("{line}");
            Ok(0)
        }
        Command::Check { suite } => {
            let mut checks: Vec<Check> = Vec::new();
            if matches!(suite, Suite::All | Suite::Identities) {
                checks.extend(leray_checks(0, 200));
                checks.push(Check::at_most("convolution_oracle", oracle_gap(8, 2.0, 0), 1e-10));
                let grid = fracns::WaveGrid::for_cutoff(3, 1.0, 4.0)?;
                let cut = fracns::CutoffProfile::sharp(4.0);
                let e = fracns_cli::checks::energy_on_random_fields(grid, &cut, 100, 0);
                checks.push(Check::at_most("energy_random_fields", e, 1e-10));
            }
            if matches!(suite, Suite::All | Suite::Generator) {
                checks.extend(generator_checks(3, 1.0, 1.5, 3, 10, 1e-10, 0));
                checks.extend(generator_checks(2, 1.0, 2.3, 3, 10, 1e-10, 1));
            }
            if matches!(suite, Suite::All | Suite::Formulas) {
                checks.extend(formula_checks());
            }
            let mut failed = 0;
            for c in &checks {
                let v = c.value.map_or(String::new(), |v| format!(" {v:.3e}"));
                println!("[{}] {}{v}", if c.passed { "PASS" } else { "FAIL" }, c.name);
                failed += usize::from(!c.passed);
            }
            Ok(u8::from(failed > 0))
        }
    }
}
