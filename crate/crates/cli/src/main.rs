use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hcbound_core::config::structure_hash;
use hcbound_core::verify::{positivity_counterexample_demo, sample_verify, VerifyConfig};
use hcbound_core::{Error, LowerBoundCertificate, Pipeline, RunConfig};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "hcbound")]
#[command(about = "Certified polynomial lower bounds for a_P(exp X)^rho on block parabolics of sl(n, R)")]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the cyclic module and write certificate.json
    Certify(RunArgs),
    /// Check a certificate by sampling and write report.json
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// certificate.json produced by `certify`
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Write the positivity counterexample trace to demo.json
    Demo(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON run configuration; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parent directory for run directories
    #[arg(long)]
    out: Option<PathBuf>,
    /// Block sizes, e.g. 1,2,1
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<usize>>,
    /// Matrix size; without --blocks the minimal parabolic is used
    #[arg(long)]
    n: Option<usize>,
}

/// Failure carried to `main`: exit code plus a machine-readable document.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    fn usage(kind: &str, message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            kind: kind.into(),
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            kind: "io".into(),
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_usage() { EXIT_USAGE } else { EXIT_NUMERICAL },
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct ErrorDocument<'a> {
    error: &'a str,
    message: &'a str,
    exit_code: u8,
}

fn resolve_config(args: &RunArgs) -> Result<RunConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::usage("config", format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::usage("config", format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    match (&args.blocks, args.n) {
        (Some(blocks), n) => {
            config.algebra.n = n.unwrap_or_else(|| blocks.iter().sum());
            config.blocks = blocks.clone();
        }
        (None, Some(n)) => {
            config.algebra.n = n;
            config.blocks = vec![1; n];
        }
        (None, None) => {}
    }
    config.validate()?;
    Ok(config)
}

/// Fresh `<out>/<label>-<timestamp>[-k]`; existing directories are never reused.
fn create_run_dir(out: &Path, label: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::io(out, e))?;
    let stamp = Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    for k in 0.. {
        let name = if k == 0 {
            format!("{label}-{stamp}")
        } else {
            format!("{label}-{stamp}-{k}")
        };
        let dir = out.join(name);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Failure::io(&dir, e)),
        }
    }
    unreachable!()
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
    Ok(path)
}

fn certify(args: &RunArgs) -> Result<u8, Failure> {
    let config = resolve_config(args)?;
    let dir = create_run_dir(&config.output_dir, "certify")?;
    write_json(&dir, "config.json", &config)?;
    let result = Pipeline::build(&config.algebra, &config.blocks, &config.tolerances)
        .and_then(|p| p.certificate(config.tolerances));
    let cert = match result {
        Ok(c) => c,
        Err(e) => return Err(record_failure(&dir, e.into())),
    };
    for w in &cert.build_info.warnings {
        eprintln!("warning: {w}");
    }
    let path = write_json(&dir, "certificate.json", &cert)?;
    println!("{}", path.display());
    println!(
        "a^rho >= {:.6e} (1 + |X|^2)^{}  (|psi|^2 >= {:.6e} (1 + |X|^2)^(1/{}))",
        cert.final_hc.c,
        cert.final_hc.m,
        cert.final_psi.c,
        cert.m_denominator()
    );
    Ok(0)
}

fn load_certificate(path: &Path) -> Result<LowerBoundCertificate, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage("certificate", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage("certificate", format!("{}: {e}", path.display())))
}

fn verify(args: &RunArgs, certificate: &Path) -> Result<u8, Failure> {
    let config = resolve_config(args)?;
    let cert = load_certificate(certificate)?;
    let expected = structure_hash(&config.algebra, &config.blocks);
    if cert.build_info.config_hash != expected || cert.algebra != config.algebra || cert.blocks != config.blocks {
        return Err(Failure::usage(
            "certificate-mismatch",
            format!(
                "certificate is for sl({}) blocks {:?}, config asks for sl({}) blocks {:?}",
                cert.algebra.n, cert.blocks, config.algebra.n, config.blocks
            ),
        ));
    }
    let dir = create_run_dir(&config.output_dir, "verify")?;
    write_json(&dir, "config.json", &config)?;
    let pipeline = match Pipeline::build(&config.algebra, &config.blocks, &config.tolerances) {
        Ok(p) => p,
        Err(e) => return Err(record_failure(&dir, e.into())),
    };
    for w in &cert.build_info.warnings {
        eprintln!("warning: {w}");
    }
    let report = sample_verify(pipeline.module.as_ref(), &pipeline.graded, &cert, &VerifyConfig::from(&config));
    let path = write_json(&dir, "report.json", &report)?;
    println!("{}", path.display());
    println!(
        "evaluated {} points: {} violations, oracle max discrepancy {:.3e} over {} points ({} skipped)",
        report.evaluated,
        report.violations.count,
        report.oracle_max_discrepancy,
        report.oracle_compared,
        report.oracle_skipped
    );
    Ok(if report.passed() { 0 } else { EXIT_VERIFY_FAILED })
}

fn demo(args: &RunArgs) -> Result<u8, Failure> {
    let config = resolve_config(args)?;
    let dir = create_run_dir(&config.output_dir, "demo")?;
    let trace = positivity_counterexample_demo();
    let path = write_json(&dir, "demo.json", &trace)?;
    println!("{}", path.display());
    println!(
        "grid minimum {:.3e} > 0; f(1/t, t) = {:.1e} at t = {:.0e}",
        trace.grid.min_value,
        trace.curve_points.last().map_or(f64::NAN, |p| p.value),
        trace.curve_points.last().map_or(f64::NAN, |p| p.t)
    );
    Ok(0)
}

/// Best effort: also drop the error document into the run directory.
fn record_failure(dir: &Path, f: Failure) -> Failure {
    let doc = ErrorDocument {
        error: &f.kind,
        message: &f.message,
        exit_code: f.code,
    };
    let _ = write_json(dir, "error.json", &doc);
    f
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Certify(args) => certify(args),
        Command::Verify { run, certificate } => verify(run, certificate),
        Command::Demo(args) => demo(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let doc = ErrorDocument {
                error: &f.kind,
                message: &f.message,
                exit_code: f.code,
            };
            eprintln!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
            ExitCode::from(f.code)
        }
    }
}
