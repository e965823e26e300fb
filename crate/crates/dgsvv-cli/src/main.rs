use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dgsvv::basis::{identity_residuals, OperatorSet};
use dgsvv::cases::driver::write_spectrum;
use dgsvv::cases::output::Snapshot;
use dgsvv::cases::spectrum::snapshot_spectrum;
use dgsvv::cases::{presets, run_with, RunConfig};
use dgsvv::vonneumann::{dispersion_curves, k_sweep, write_csv, VnConfig};
use dgsvv::Error;

#[derive(Parser)]
#[command(name = "dgsvv", version, about = "Entropy-stable DGSEM with filtered spectral vanishing viscosity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a case from a TOML file or a built-in preset.
    Run(RunArgs),
    /// Dispersion/dissipation curves of the 1-D advection–diffusion scheme.
    Vonneumann(VnArgs),
    /// Operator identity residuals for degrees 1..=N.
    Verify {
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
    /// Kinetic energy spectrum of a 3-D periodic snapshot.
    Spectrum {
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// One of tgv, shu-osher, ffs.
    #[arg(long)]
    preset: Option<String>,
    /// Override a configuration value, e.g. `--set time.t_end=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct VnArgs {
    #[arg(long, default_value_t = 7)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Comma-separated kernel exponents.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    psvv: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Upwinding, 0 (central) to 1 (full).
    #[arg(long, default_value_t = 1.0)]
    upwind: f64,
    /// Number of wavenumbers in (0, π].
    #[arg(long, default_value_t = 400)]
    nk: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_admissibility() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn execute(cmd: Command) -> dgsvv::Result<()> {
    match cmd {
        Command::Run(args) => run(args),
        Command::Vonneumann(args) => vonneumann(args),
        Command::Verify { n } => verify(n),
        Command::Spectrum { snapshot, out } => {
            let snap = Snapshot::read(File::open(&snapshot)?)?;
            let spec = snapshot_spectrum(&snap)?;
            write_spectrum(&out, &spec)?;
            eprintln!(
                "t = {}: {} shells, total {:.6e}, Parseval defect {:.2e}",
                snap.t,
                spec.k.len(),
                spec.total(),
                spec.parseval_error()
            );
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> dgsvv::Result<()> {
    let base = match (&args.config, &args.preset) {
        (Some(path), _) => RunConfig::from_toml(&std::fs::read_to_string(path)?)?,
        (None, Some(name)) => presets::preset(name)?,
        (None, None) => return Err(Error::Config("give a config file or --preset".into())),
    };
    let cfg = base.with_overrides(&args.overrides)?;
    if args.dry_run {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let start = std::time::Instant::now();
    let report = (cfg.time.t_end / 20.0).max(f64::MIN_POSITIVE);
    let mut next = report;
    let outcome = run_with(&cfg, args.out.as_deref(), |info, solver, _| {
        if info.t >= next {
            eprintln!("step {:>7}  t = {:.4}  dt = {:.3e}  max sensor {:.3}", info.step, info.t, info.dt, solver.max_sensor());
            next += report;
        }
    })?;
    let last = outcome.history.last().expect("history has the initial row");
    println!(
        "finished t = {} in {} steps ({:.1} s): kinetic energy {:.6e}, entropy {:.6e}, min rho {:.4e}, min p {:.4e}",
        outcome.t,
        outcome.steps,
        start.elapsed().as_secs_f64(),
        last.kinetic_energy,
        last.entropy,
        last.min_density,
        last.min_pressure
    );
    for (t, spec) in &outcome.spectra {
        println!("spectrum at t = {t}: Parseval defect {:.2e}", spec.parseval_error());
    }
    Ok(())
}

fn vonneumann(args: VnArgs) -> dgsvv::Result<()> {
    let ks = k_sweep(args.nk);
    let mut curves = Vec::with_capacity(args.psvv.len());
    for &p in &args.psvv {
        let cfg = VnConfig { degree: args.n, speed: args.speed, mu: args.mu, p_svv: p, upwind: args.upwind };
        let rows = dispersion_curves(&cfg, &ks)?;
        let crossings = rows.iter().filter(|r| r.ambiguous).count();
        if crossings > 0 {
            eprintln!("P_SVV = {p}: branch tracking ambiguous at {crossings} wavenumbers");
        }
        curves.push((p, rows));
    }
    match args.out {
        Some(path) => write_csv(BufWriter::new(File::create(path)?), &curves),
        None => write_csv(io::stdout().lock(), &curves),
    }
}

fn verify(n_max: usize) -> dgsvv::Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{:>3} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "N", "SBP", "FB-I", "BF-I", "transpose", "parseval1", "parseval3")?;
    let mut worst = 0.0f64;
    for n in 1..=n_max {
        let r = identity_residuals(&*OperatorSet::cached(n)?);
        let vals = [r.sbp, r.fb_minus_i, r.bf_minus_i, r.transpose, r.parseval_1d, r.parseval_3d];
        worst = vals.iter().copied().fold(worst, f64::max);
        write!(out, "{n:>3}")?;
        for v in vals {
            write!(out, " {v:>10.2e}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "max residual {worst:.2e}")?;
    Ok(())
}
