use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rdd::error::{EXIT_INPUT, EXIT_VERIFICATION};
use rdd::run::{default_out_root, run_scenarios, RunOptions};

#[derive(Parser)]
#[command(
    name = "rdd",
    version,
    about = "Riemann problems with delta shocks under time-dependent damping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        /// Scenario file (repeatable).
        #[arg(long, required = true)]
        scenario: Vec<PathBuf>,
        /// Output root; each scenario writes to <out>/<name>/.
        #[arg(long, env = "RDD_OUT_DIR")]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Seed for randomized probes.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tolerance override, e.g. `linf=1e-4` (repeatable).
        #[arg(long = "tolerance", value_parser = parse_key_value)]
        tolerances: Vec<(String, f64)>,
    },
    /// Compare two run directories.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        /// Spatial window `lo:hi` for the L1 and mass differences.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_window)]
        window: Option<(f64, f64)>,
        /// Override `linf`, `l1` or `mass` (repeatable).
        #[arg(long = "tolerance", value_parser = parse_key_value)]
        tolerances: Vec<(String, f64)>,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn parse_key_value(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    if !(v.is_finite() && v > 0.0) {
        return Err(format!("tolerance `{k}` must be positive"));
    }
    Ok((k.trim().to_string(), v))
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    let (a, b) = (parse(a)?, parse(b)?);
    if a < b {
        Ok((a, b))
    } else {
        Err("window needs lo < hi".into())
    }
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            scenario,
            out,
            jobs,
            seed,
            tolerances,
        } => {
            let opts = RunOptions {
                out_root: out.unwrap_or_else(|| default_out_root().to_path_buf()),
                jobs,
                seed,
                tolerances,
            };
            let results = match run_scenarios(&scenario, &opts) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(e.exit_code());
                }
            };
            let mut worst = 0;
            for r in results {
                match r {
                    Ok(s) => {
                        let verdict = if s.verified { "verified" } else { "FAILED" };
                        let mut stdout = std::io::stdout();
                        let _ = writeln!(stdout, "{}: {} {verdict}", s.scenario, s.task.name());
                        for c in s.checks.iter().filter(|c| !c.pass) {
                            let _ = writeln!(
                                stdout,
                                "  {} = {:e} (limit {} {:e})",
                                c.name, c.value, c.relation, c.limit
                            );
                        }
                        if !s.verified && worst == 0 {
                            worst = EXIT_VERIFICATION;
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        let c = e.exit_code();
                        // Input errors outrank verification failures.
                        if worst == 0 || c == EXIT_INPUT {
                            worst = c;
                        }
                    }
                }
            }
            code(worst)
        }
        Command::Compare {
            run_a,
            run_b,
            window,
            tolerances,
            report,
        } => match rdd::compare::compare(&run_a, &run_b, window, &tolerances) {
            Ok(rep) => {
                let text = serde_json::to_string_pretty(&rep).expect("serializable report");
                // A closed pipe (e.g. `| head`) is not an error.
                let _ = writeln!(std::io::stdout(), "{text}");
                if let Some(path) = report {
                    if let Err(e) = rdd::output::write_json(&path, &rep) {
                        eprintln!("error: {e}");
                        return code(EXIT_INPUT);
                    }
                }
                code(if rep.pass { 0 } else { EXIT_VERIFICATION })
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(e.exit_code())
            }
        },
    }
}
