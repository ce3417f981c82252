use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use torus_critical::constants::estimate_dk;
use torus_critical::experiment::{convergence_sweep, run_experiment, DK_STREAM};
use torus_critical::io::{fmt_f64, load_config, write_results, write_sweep, write_timing, Overrides, Timing};
use torus_critical::parallel::{with_workers, Execution};
use torus_critical::sampling::substream;
use torus_critical::verify::selftest;
use torus_critical::{Error, Result};

/// Worker-count override; unset means one worker per core.
const WORKERS_ENV: &str = "CRITFACES_WORKERS";

#[derive(Parser)]
#[command(name = "critfaces", version, about = "Critical faces of random point clouds on the flat torus")]
struct Cli {
    /// Run trials on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trials of one configuration and compare with the exact means.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Exit nonzero when an exact-mean row fails its z-test.
        #[arg(long)]
        strict: bool,
    },
    /// Run one configuration at several intensities.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Table of D_k for every (d, k) pair given.
    Constants {
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Brute-force oracle suites on small random clouds.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: u64,
    },
}

fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(Some(w)),
            _ => Err(Error::Config(format!("{WORKERS_ENV}={v} is not a positive integer"))),
        },
    }
}

fn timing(started: SystemTime, clock: Instant, workers: Option<usize>) -> Timing {
    Timing {
        started_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        workers,
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let workers = workers_from_env()?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let started = SystemTime::now();
    let clock = Instant::now();
    match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            out,
            strict,
        } => {
            let (cfg, _) = load_config(&config, &Overrides { seed, trials, n_list: None })?;
            let report = with_workers(workers, || run_experiment(&cfg, exec))??;
            let files = write_results(&out, &report)?;
            write_timing(&out, &timing(started, clock, workers))?;
            let mut ok = true;
            if let Some(t) = &report.theory {
                for row in &t.rows {
                    println!(
                        "{:<24} {:?} empirical {} target {} z {} {}",
                        row.statistic,
                        row.kind,
                        fmt_f64(row.empirical),
                        fmt_f64(row.target),
                        fmt_f64(row.z),
                        if row.pass { "PASS" } else { "FAIL" }
                    );
                }
                ok = !strict || t.exact_rows_pass();
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(ok)
        }
        Command::Sweep {
            config,
            n_list,
            seed,
            trials,
            out,
        } => {
            let (cfg, _) = load_config(&config, &Overrides { seed, trials, n_list })?;
            let (sweep, stats) = with_workers(workers, || convergence_sweep(&cfg, &cfg.n_list, exec))??;
            let files = write_sweep(&out, &cfg, &sweep, &stats)?;
            write_timing(&out, &timing(started, clock, workers))?;
            for c in &sweep.cells {
                println!(
                    "n {} scaled_P(G>=1) {} [{}, {}] covers {}",
                    fmt_f64(c.n),
                    fmt_f64(c.g.estimate),
                    fmt_f64(c.g.lo),
                    fmt_f64(c.g.hi),
                    c.g.covers
                );
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(true)
        }
        Command::Constants { d, k, samples, seed } => {
            println!("d,k,value,std_error,samples,exact");
            for &dd in &d {
                for &kk in &k {
                    if kk == 0 || kk >= dd {
                        eprintln!("skipping d = {dd}, k = {kk}: D_k needs 1 <= k <= d-1");
                        continue;
                    }
                    let mut stream = substream(seed, DK_STREAM);
                    let e = with_workers(workers, || estimate_dk(dd, kk, samples, &mut stream, exec))??;
                    println!("{dd},{kk},{},{},{},{}", fmt_f64(e.value), fmt_f64(e.std_error), e.samples, e.exact);
                }
            }
            Ok(true)
        }
        Command::Selftest { seed, cases } => {
            let suites = with_workers(workers, || selftest(seed, cases, exec))?;
            let mut ok = true;
            for s in &suites {
                println!(
                    "{} {}: {} cases, {} failures",
                    if s.passed() { "PASS" } else { "FAIL" },
                    s.name,
                    s.cases,
                    s.failures.len()
                );
                for f in s.failures.iter().take(10) {
                    println!("  {f}");
                }
                ok &= s.passed();
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
