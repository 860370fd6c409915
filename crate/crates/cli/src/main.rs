use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lossy_helmholtz_cli::config::{parse_entries, Entry, RunConfig};
use lossy_helmholtz_cli::run;

/// Lossy Helmholtz solver. Flags override keys from the config file.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// dirichlet or robin
    #[arg(long)]
    bc: Option<String>,
    /// both, real-primal or imag-primal
    #[arg(long)]
    mode: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Convergence study over start:end:step
    #[arg(long)]
    study: Option<String>,
    /// Plain CG instead of block-Jacobi PCG
    #[arg(long)]
    no_precond: bool,
    #[arg(long)]
    eval_n: Option<usize>,
    /// solve, study or diagnostics
    #[arg(long)]
    driver: Option<String>,
}

impl Args {
    fn overrides(&self) -> Vec<Entry> {
        let mut e = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                e.push(Entry::override_(k, v));
            }
        };
        put("n", self.n.map(|v| v.to_string()));
        put("omega", self.omega.clone());
        put("tol", self.tol.clone());
        put("bc", self.bc.clone());
        put("mode", self.mode.clone());
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("eval_n", self.eval_n.map(|v| v.to_string()));
        if let Some(s) = &self.study {
            put("study", Some(s.clone()));
            put("driver", Some("study".into()));
        }
        put("driver", self.driver.clone());
        if self.no_precond {
            put("precond", Some("off".into()));
        }
        e
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let text = match &args.config {
        Some(path) => match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: reading {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => String::new(),
    };
    let config = parse_entries(&text).and_then(|mut entries| {
        entries.extend(args.overrides());
        RunConfig::from_entries(&entries)
    });
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match run(&config) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            println!("{}", outcome.status_line());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("status=failed partial_outputs=true reason={e}");
            ExitCode::from(1)
        }
    }
}
