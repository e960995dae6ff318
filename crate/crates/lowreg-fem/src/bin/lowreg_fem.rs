//! Command-line study harness.
//!
//! Exit codes: 0 success, 1 error, 2 acceptance-threshold violation under
//! `--check`.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use lowreg_fem::fields::FIELD_NAMES;
use lowreg_fem::mesh::DOMAIN_NAMES;
use lowreg_fem::study::{run_study, StudyConfig, StudyReport};

#[derive(Parser)]
#[command(name = "lowreg-fem", about = "Convergence studies for low-regularity vector field interpolation", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study from a JSON config
    Run {
        /// Path to the StudyConfig JSON document
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's out_dir)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread count (overrides the config; 0 = automatic)
        #[arg(long)]
        threads: Option<usize>,
        /// Verify acceptance thresholds; exit code 2 on violation
        #[arg(long)]
        check: bool,
    },
    /// List the analytic field catalog
    ListFields,
    /// List the built-in domains
    ListDomains,
}

/// Acceptance thresholds for `--check`: the global L2 error must decrease
/// at every refinement and, where the bound RHS is nonzero, the global
/// effectivity must vary by less than 20% between consecutive levels.
fn check_report(report: &StudyReport) -> Result<(), String> {
    for w in report.levels.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.err_l2 > 0.0 && b.err_l2 >= a.err_l2 {
            return Err(format!(
                "err_l2 did not decrease from level {} ({:.6e}) to level {} ({:.6e})",
                a.level, a.err_l2, b.level, b.err_l2
            ));
        }
        if a.effectivity_global > 0.0 && b.effectivity_global > 0.0 {
            let ratio = b.effectivity_global / a.effectivity_global;
            if !(0.8..=1.2).contains(&ratio) {
                return Err(format!(
                    "global effectivity varied by more than 20% between levels {} and {} (ratio {ratio:.4})",
                    a.level, b.level
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListFields => {
            for (name, description) in FIELD_NAMES {
                println!("{name:<20} {description}");
            }
            ExitCode::SUCCESS
        }
        Command::ListDomains => {
            for name in DOMAIN_NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            threads,
            check,
        } => {
            let mut cfg = match StudyConfig::from_json_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(dir) = out {
                cfg.out_dir = Some(dir.to_string_lossy().into_owned());
            }
            if let Some(t) = threads {
                cfg.threads = t;
            }
            let report = match run_study(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            print!("{}", report.to_csv());
            if check {
                if let Err(msg) = check_report(&report) {
                    eprintln!("check failed: {msg}");
                    return ExitCode::from(2);
                }
                println!("check passed");
            }
            ExitCode::SUCCESS
        }
    }
}
