//! Runs a configuration end to end.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::basis::OperatorSet;
use crate::error::Result;
use crate::operator::Solver;
use crate::state::State5;
use crate::timeint::{advance, StepInfo, TimeConfig};

use super::config::RunConfig;
use super::diagnostics::{csv_error, DiagnosticsRow, DiagnosticsWriter};
use super::output::{write_line_csv, Snapshot};
use super::spectrum::{kinetic_energy_spectrum, Spectrum};

pub struct RunOutcome {
    pub steps: usize,
    pub t: f64,
    /// Diagnostics at `t = 0`, every `diagnostics_every` steps and at the end.
    pub history: Vec<DiagnosticsRow>,
    pub spectra: Vec<(f64, Spectrum)>,
    pub state: Vec<State5>,
    pub solver: Solver,
}

/// First line of every written config: identifies the code that produced a run.
pub fn provenance_line() -> String {
    format!("# written by dgsvv {}", env!("CARGO_PKG_VERSION"))
}

/// Integrates `cfg`, writing outputs to `cfg.output.dir` when set.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    run_with(cfg, None, |_, _, _| {})
}

/// Integrates `cfg`; when `out_dir` (or `cfg.output.dir`) is set, writes the
/// resolved config, `diagnostics.csv`, snapshots and spectra there.
/// `on_step` sees every accepted step.
pub fn run_with(
    cfg: &RunConfig,
    out_dir: Option<&Path>,
    mut on_step: impl FnMut(&StepInfo, &Solver, &[State5]),
) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir: Option<PathBuf> = out_dir.map(Path::to_path_buf).or_else(|| cfg.output.dir.clone());
    if let Some(d) = &dir {
        fs::create_dir_all(d)?;
        let mut f = File::create(d.join("config.toml"))?;
        writeln!(f, "{}", provenance_line())?;
        f.write_all(cfg.to_toml().as_bytes())?;
    }

    let ops = OperatorSet::cached(cfg.degree())?;
    let mesh = cfg.build_mesh(&ops)?;
    let mut q = cfg.initial_state(&mesh)?;
    let mut solver = Solver::new(mesh, ops, cfg.scheme()?, cfg.boundary_data())?;
    if let Some(w) = &cfg.warm_start {
        solver.set_artificial_coefficients([w.mu1, w.mu2], [w.alpha1, w.alpha2])?;
    }

    let mut diag_out = match &dir {
        Some(d) => Some(DiagnosticsWriter::new(BufWriter::new(File::create(d.join("diagnostics.csv"))?))),
        None => None,
    };
    let mut history = Vec::new();
    let mut spectra = Vec::new();
    let every = cfg.output.diagnostics_every;

    // One residual evaluation so the first row reports the sensor.
    solver.begin_step();
    let mut scratch = vec![State5::ZERO; q.len()];
    solver.rhs(&q, &mut scratch)?;
    drop(scratch);
    let mut last = DiagnosticsRow::sample(&solver, &q, 0, 0.0, 0.0, None)?;
    if let Some(w) = diag_out.as_mut() {
        w.write(&last)?;
    }
    history.push(last);

    // Segment ends: every output time and the warm-start switch.
    let t_end = cfg.time.t_end;
    let mut stops: Vec<f64> = cfg
        .output
        .snapshot_times
        .iter()
        .chain(&cfg.output.spectrum_times)
        .copied()
        .chain(cfg.warm_start.map(|w| w.t_end))
        .filter(|&t| (0.0..=t_end).contains(&t))
        .chain([t_end])
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut t = 0.0;
    let mut steps = 0;
    for stop in stops {
        if stop > t {
            let seg = TimeConfig { t_end: stop, ..cfg.time };
            let summary = advance(&mut solver, &mut q, t, &seg, |info, solver, q| {
                let info = StepInfo { step: steps + info.step, ..*info };
                on_step(&info, solver, q);
                if (every > 0 && info.step % every == 0) || info.t >= t_end {
                    let row = DiagnosticsRow::sample(solver, q, info.step, info.t, info.dt, Some(&last))?;
                    if let Some(w) = diag_out.as_mut() {
                        w.write(&row)?;
                    }
                    history.push(row);
                    last = row;
                }
                Ok(())
            })?;
            steps += summary.steps;
            t = summary.t;
        }
        if let (Some(w), Some(s)) = (&cfg.warm_start, &cfg.svv) {
            if stop == w.t_end {
                solver.set_artificial_coefficients([s.mu1, s.mu2], [s.alpha1, s.alpha2])?;
            }
        }
        if cfg.output.spectrum_times.contains(&stop) {
            let spec = kinetic_energy_spectrum(solver.mesh(), solver.ops(), &q, &cfg.gas, cfg.degree() + 1)?;
            if let Some(d) = &dir {
                write_spectrum(&d.join(format!("spectrum_t{stop}.csv")), &spec)?;
            }
            spectra.push((stop, spec));
        }
        if cfg.output.snapshot_times.contains(&stop) {
            if let Some(d) = &dir {
                let snap = Snapshot::new(solver.mesh(), &cfg.gas, stop, &q);
                snap.write(BufWriter::new(File::create(d.join(format!("snapshot_t{stop}.bin")))?))?;
                if cfg.output.line_csv && cfg.dim() == 1 {
                    write_line_csv(File::create(d.join(format!("line_t{stop}.csv")))?, solver.mesh(), &cfg.gas, &q)?;
                }
            }
        }
    }
    if let Some(w) = diag_out.as_mut() {
        w.flush()?;
    }
    Ok(RunOutcome { steps, t, history, spectra, state: q, solver })
}

/// `k, E` table.
pub fn write_spectrum(path: &Path, spec: &Spectrum) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(["k", "E"]).map_err(csv_error)?;
    for (k, e) in spec.k.iter().zip(&spec.energy) {
        w.write_record(&[k.to_string(), e.to_string()]).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
