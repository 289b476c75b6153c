use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anisobbm_cli::acceptance;
use anisobbm_cli::commands;
use anisobbm_cli::config::{self, CheckId2Config, ConfigError, LimitStudyConfig, NormsConfig, PerimeterConfig};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

const PASS: u8 = 0;
const FAIL: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "anisobbm", version, about = "Anisotropic magnetic nonlocal functionals and their local limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (strict JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Existing directory for output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Acceptance checks to run, by number or name (comma separated).
    #[arg(long, global = true)]
    only: Vec<String>,
    /// Print machine-readable JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Gauge and moment norm of the configured vectors.
    Norms,
    /// Volume against sphere representation of the moment norm.
    CheckId2,
    /// Functional along a schedule, extrapolated and compared with its limit.
    LimitStudy,
    /// Anisotropic perimeter of a polytope and the total variation of its mollifications.
    Perimeter,
    /// The full acceptance suite.
    Acceptance,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(format!("config error: {e}"))
    }
}

impl From<anisobbm::Error> for Failure {
    fn from(e: anisobbm::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn load<T: DeserializeOwned>(cli: &Cli) -> Result<(T, String), Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Usage("--config is required for this command".into()))?;
    let text = config::read(path)?;
    Ok((config::parse(&text)?, text))
}

fn out_dir(cli: &Cli) -> Result<Option<&Path>, Failure> {
    match &cli.out {
        Some(d) if !d.is_dir() => Err(Failure::Usage(format!("output directory {} does not exist", d.display()))),
        Some(d) => Ok(Some(d.as_path())),
        None => Ok(None),
    }
}

fn write(dir: Option<&Path>, name: &str, contents: &str) -> Result<(), Failure> {
    if let Some(d) = dir {
        let path = d.join(name);
        std::fs::write(&path, contents).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn norms(cli: &Cli) -> Result<u8, Failure> {
    let (cfg, text): (NormsConfig, _) = load(cli)?;
    let job = cfg.validate(&text, cli.seed)?;
    let dir = out_dir(cli)?;
    let rows = commands::norms(&job)?;
    if cli.json {
        println!("{}", to_json(&rows));
    } else {
        println!("{:<32} {:>14} {:>18} {:>10}", "vector", "gauge", "moment norm", "error");
        for r in &rows {
            let g = r.gauge.map_or("-".to_string(), |g| format!("{g:.10}"));
            println!("{:<32} {:>14} {:>18.12} {:>10.2e}", r.vector, g, r.moment_norm, r.error);
        }
    }
    write(dir, "norms.csv", &commands::norms_csv(&rows))?;
    Ok(PASS)
}

fn check_id2(cli: &Cli) -> Result<u8, Failure> {
    let (cfg, text): (CheckId2Config, _) = load(cli)?;
    let job = cfg.validate(&text, cli.seed)?;
    let dir = out_dir(cli)?;
    let rows = commands::check_id2(&job)?;
    write(dir, "id2.csv", &commands::id2_csv(&rows))?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    if cli.json {
        println!("{}", to_json(&serde_json::json!({ "comparisons": rows.len(), "failed": failed, "pass": failed == 0 })));
    } else {
        for (label, _) in &job.bodies {
            for &p in &job.p_values {
                let sel: Vec<_> = rows.iter().filter(|r| &r.body == label && r.p == p).collect();
                let bad = sel.iter().filter(|r| !r.pass).count();
                let worst = sel.iter().map(|r| r.gap / r.allowed.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
                println!("{label:<10} p={p:<4} {:>4} vectors  {bad:>3} failed  worst gap/allowed {worst:.3}", sel.len());
            }
        }
        println!("{} of {} comparisons within tolerance", rows.len() - failed, rows.len());
    }
    Ok(if failed == 0 { PASS } else { FAIL })
}

fn limit_study(cli: &Cli) -> Result<u8, Failure> {
    let (cfg, text): (LimitStudyConfig, _) = load(cli)?;
    let study = cfg.validate(&text, cli.seed)?;
    let dir = out_dir(cli)?;
    let report = commands::limit_study(&study)?;
    write(dir, "report.json", &report.to_json())?;
    write(dir, "points.csv", &report.to_csv())?;
    write(dir, "plot.dat", &report.to_plot_data())?;
    if cli.json {
        println!("{}", report.to_json());
    } else {
        println!("{:>12} {:>18} {:>10}", "parameter", "value", "error");
        for pt in &report.points {
            println!("{:>12} {:>18.10} {:>10.2e}", pt.parameter, pt.value, pt.error);
        }
        let ex = &report.extrapolation;
        let d = &report.diagnostics;
        println!("limit    {:.8} +- {:.2e} (rate {})", ex.limit, ex.limit_error, ex.rate.map_or("undetermined".into(), |b| format!("{b:.3}")));
        println!("target   {:.8} ({:?})", report.target.value, report.target.kind);
        match d.relative_gap {
            Some(g) => println!("gap      {:.4}% (allowed {:.3e} absolute)", 100.0 * g, d.allowed),
            None => println!("gap      {:.3e} absolute (allowed {:.3e})", d.gap, d.allowed),
        }
        println!("dominant error: {:?}{}", d.dominant_error, if d.lower_bound_only { "; lower bound only" } else { "" });
        println!("{}", if report.pass { "PASS" } else { "FAIL" });
    }
    Ok(if report.pass { PASS } else { FAIL })
}

fn perimeter(cli: &Cli) -> Result<u8, Failure> {
    let (cfg, text): (PerimeterConfig, _) = load(cli)?;
    let (region, body) = cfg.validate(&text)?;
    let dir = out_dir(cli)?;
    let rows = commands::perimeter(&region, &body, &cfg.mollify, cfg.grid.as_ref())?;
    write(dir, "perimeter.csv", &commands::perimeter_csv(&rows))?;
    if cli.json {
        println!("{}", to_json(&rows));
    } else {
        println!("perimeter {:.10}", rows[0].value);
        for r in &rows[1..] {
            println!("m={:<5} total variation {:.8} +- {:.1e}  gap {:.3}%", r.m, r.value, r.error, 100.0 * r.relative_gap);
        }
    }
    Ok(PASS)
}

fn run_acceptance(cli: &Cli) -> Result<u8, Failure> {
    let ids = acceptance::select(&cli.only).map_err(Failure::Usage)?;
    let dir = out_dir(cli)?;
    let seed = cli.seed.unwrap_or(acceptance::DEFAULT_SEED);
    let mut outcomes = Vec::new();
    for id in ids {
        let start = Instant::now();
        let o = acceptance::run(id, seed)?;
        if !cli.json {
            let verdict = if o.pass { "PASS" } else { "FAIL" };
            println!("[{verdict}] {:>2} {:<20} {} ({:.1} s)", o.id, o.name, o.summary, start.elapsed().as_secs_f64());
        }
        write(dir, &format!("check_{:02}_{}.csv", o.id, o.name), &o.csv)?;
        outcomes.push(o);
    }
    write(dir, "acceptance.csv", &acceptance::summary_csv(&outcomes))?;
    let pass = outcomes.iter().all(|o| o.pass);
    if cli.json {
        println!("{}", to_json(&serde_json::json!({ "seed": seed, "pass": pass, "checks": outcomes })));
    } else {
        println!("{} of {} checks passed", outcomes.iter().filter(|o| o.pass).count(), outcomes.len());
    }
    Ok(if pass { PASS } else { FAIL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} worker threads");
            return ExitCode::from(USAGE);
        }
    }
    let result = match cli.command {
        Command::Norms => norms(&cli),
        Command::CheckId2 => check_id2(&cli),
        Command::LimitStudy => limit_study(&cli),
        Command::Perimeter => perimeter(&cli),
        Command::Acceptance => run_acceptance(&cli),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
    }
}
