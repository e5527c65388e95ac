use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skewmix::lab::{run, run_to_disk, Command, ExperimentConfig, Override};
use skewmix::Error;

/// Mixing-or-coboundary laboratory for torus-extension skew products.
#[derive(Parser)]
#[command(name = "skewmix", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Invariant density of the base map.
    Density(Common),
    /// Spectral radii of the twisted operators over the configured frequencies.
    TwistSpectrum(Common),
    /// Search for the first iterate with sup p̃ < 1.
    SymbolBound(Common),
    /// Periodic-orbit obstructions and the coboundary certificate.
    Livsic(LivsicArgs),
    /// Correlation series and decay fits.
    Correlate(Common),
    /// Full verdict: livsic, spectra, symbol bound and correlations.
    Dichotomy(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Path to the TOML experiment file.
    #[arg(long, short)]
    config: PathBuf,
    /// Override any key, e.g. `--set spectral.k=128` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sobolev order s < 0.
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    /// Fourier cut-off for the spectral run.
    #[arg(long)]
    k: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print JSON only; write nothing to disk.
    #[arg(long)]
    no_write: bool,
}

#[derive(Args, Clone)]
struct LivsicArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p_max: Option<usize>,
    /// real | integral | auto
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    v_max: Option<i64>,
}

fn load(common: &Common, extra: Vec<Override>) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let mut edits = common.set.iter().map(|kv| Override::parse(kv)).collect::<Result<Vec<_>, _>>()?;
    if let Some(seed) = common.seed {
        edits.push(Override::new("seed", seed as i64));
    }
    if let Some(s) = common.s {
        edits.push(Override::new("s", s));
    }
    if let Some(k) = common.k {
        edits.push(Override::new("spectral.k", k as i64));
    }
    if let Some(out) = &common.out {
        edits.push(Override::new("output.dir", out.display().to_string()));
    }
    edits.extend(extra);
    ExperimentConfig::from_toml_with(&text, &edits)
}

fn execute(cli: Cli) -> Result<(), Error> {
    let (cmd, common, extra) = match cli.command {
        Sub::Density(c) => (Command::Density, c, vec![]),
        Sub::TwistSpectrum(c) => (Command::TwistSpectrum, c, vec![]),
        Sub::SymbolBound(c) => (Command::SymbolBound, c, vec![]),
        Sub::Correlate(c) => (Command::Correlate, c, vec![]),
        Sub::Dichotomy(c) => (Command::Dichotomy, c, vec![]),
        Sub::Livsic(a) => {
            let mut extra = Vec::new();
            if let Some(p) = a.p_max {
                extra.push(Override::new("livsic.p_max", p as i64));
            }
            if let Some(m) = a.mode {
                extra.push(Override::new("livsic.mode", m));
            }
            if let Some(v) = a.v_max {
                extra.push(Override::new("livsic.v_max", v));
            }
            (Command::Livsic, a.common, extra)
        }
    };
    let cfg = load(&common, extra)?;
    if common.no_write {
        println!("{}", run(cmd, &cfg)?.json);
    } else {
        for p in run_to_disk(cmd, &cfg)? {
            eprintln!("wrote {}", p.display());
        }
        let json = cfg.output.dir.join(format!("{}.json", cmd.name()));
        println!("{}", std::fs::read_to_string(json)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("skewmix: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
