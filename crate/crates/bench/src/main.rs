use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use cp_beamforming::bounds::{
    distortion_bound, fading_abs_moments, grs_covering_radius_bruteforce, min_rate, qe_bound,
};
use cp_beamforming::channel::{CorrelationSpec, FadingSpec};
use cp_beamforming::egt::{egt_baseline_mc, EgtConfig};
use cp_beamforming::experiment::{reproduce, run_experiment, write_rows, ExperimentConfig, Preset, RunOptions};
use cp_beamforming::export::export_codebook_in;
use cp_beamforming::{Error, MessageSpace, PrimeModulus};

#[derive(Parser)]
#[command(name = "cp-bench", version, about = "Constant-modulus codebook beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a codebook as CSV.
    Codebook {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// `constant_free` (f_1..f_k) or `with_constant` (f_0..f_{k-1}).
        #[arg(long, default_value = "constant_free", value_parser = parse_space)]
        message_space: MessageSpace,
    },
    /// Run an experiment described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        allow_long: bool,
    },
    /// Regenerate the data behind a figure or table.
    Reproduce {
        #[arg(value_parser = parse_preset)]
        preset: Preset,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        allow_long: bool,
        #[arg(long)]
        threads: Option<usize>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average iterative equal-gain baseline for a 2 x N_T channel.
    EgtBaseline {
        #[arg(long)]
        nt: usize,
        #[arg(long, default_value_t = 8)]
        b: u32,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, default_value = "rayleigh", value_parser = parse_fading)]
        fading: FadingSpec,
        #[arg(long, default_value_t = 0.0)]
        rho_tx: f64,
        #[arg(long, default_value_t = 0.0)]
        rho_rx: f64,
        #[arg(long, default_value_t = 300)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Analytic quantization error and distortion bounds.
    Bounds {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "rayleigh", value_parser = parse_fading)]
        fading: FadingSpec,
    },
    /// Exact Hamming covering radius of the evaluation code.
    Covering {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_space(s: &str) -> std::result::Result<MessageSpace, String> {
    match s {
        "constant_free" => Ok(MessageSpace::ConstantFree),
        "with_constant" => Ok(MessageSpace::WithConstant),
        _ => Err(format!("expected 'constant_free' or 'with_constant', got '{s}'")),
    }
}

fn parse_fading(s: &str) -> std::result::Result<FadingSpec, String> {
    match s.split_once(':') {
        None if s == "rayleigh" => Ok(FadingSpec::Rayleigh),
        Some(("rician", k)) => {
            let kappa: f64 = k.parse().map_err(|_| format!("bad Rician factor '{k}'"))?;
            Ok(FadingSpec::Rician { kappa })
        }
        _ => Err(format!("expected 'rayleigh' or 'rician:KAPPA', got '{s}'")),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 2,
        Some(Error::LongRun(_)) => 4,
        Some(Error::Io(_)) | None => 1,
        Some(_) => 3,
    }
}

fn write_output(out: Option<&PathBuf>, rows: &[cp_beamforming::ResultRow]) -> Result<()> {
    match out {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_rows(rows, std::io::BufWriter::new(file))?;
        }
        None => {
            let stdout = std::io::stdout();
            write_rows(rows, stdout.lock())?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Codebook { p, k, n, out, message_space } => {
            let cb = export_codebook_in(PrimeModulus::new(p)?, k, n, message_space, &out)?;
            println!("wrote {} codewords ({} bits) to {}", cb.len(), cb.feedback_bits(), out.display());
        }
        Command::Simulate { config, out, trials, seed, threads, allow_long } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            cfg.validate()?;
            let rows = run_experiment(&cfg, RunOptions { threads, allow_long })?;
            write_output(Some(&out), &rows)?;
        }
        Command::Reproduce { preset, trials, seed, allow_long, threads, out } => {
            if trials == Some(0) {
                return Err(Error::Config("trials must be positive".into()).into());
            }
            let rows = reproduce(preset, trials, seed, RunOptions { threads, allow_long })?;
            write_output(out.as_ref(), &rows)?;
        }
        Command::EgtBaseline { nt, b, iters, fading, rho_tx, rho_rx, trials, seed } => {
            let mut cfg = EgtConfig::standard(fading, trials);
            cfg.bits = b;
            cfg.sweeps = iters;
            if rho_tx != 0.0 || rho_rx != 0.0 {
                cfg.correlation = Some(CorrelationSpec { rho_tx, rho_rx });
            }
            let s = egt_baseline_mc(&cfg, nt, seed)?;
            println!("channel=2x{nt} fading={} b={b} N={iters} trials={trials} seed={seed}", fading.label());
            println!("egt_db={:.4} egt_linear={:.6}", s.mean_db, s.mean_linear);
        }
        Command::Bounds { p, n, k, fading } => {
            let pm = PrimeModulus::new(p)?;
            let m = fading_abs_moments(&fading)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "fading={} mu={:.6} sigma2={:.6}", fading.label(), m.mu, m.sigma2)?;
            writeln!(out, "rate={:.6} min_rate={:.6}", k as f64 / n as f64, min_rate(pm)?)?;
            writeln!(out, "qe_bound={:.6}", qe_bound(pm, n, k, m)?)?;
            writeln!(out, "distortion_bound={:.6}", distortion_bound(pm, n, k, m)?)?;
        }
        Command::Covering { p, n, k } => {
            let r = grs_covering_radius_bruteforce(PrimeModulus::new(p)?, n, k)?;
            println!("covering_radius={r} n_minus_k={}", n - k);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
