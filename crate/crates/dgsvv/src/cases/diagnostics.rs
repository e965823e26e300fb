//! Scalar time histories.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::Solver;
use crate::state::State5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub kinetic_energy: f64,
    /// Integral of the entropy function `-ρ s/(γ-1)`.
    pub entropy: f64,
    /// `-dE_k/dt` by a backward difference over the last step.
    pub dissipation_rate: f64,
    pub min_density: f64,
    pub min_pressure: f64,
    pub max_sensor: f64,
    pub shocked_elements: usize,
}

impl DiagnosticsRow {
    pub fn sample(solver: &Solver, q: &[State5], step: usize, t: f64, dt: f64, previous: Option<&DiagnosticsRow>) -> Result<Self> {
        let gas = solver.scheme().gas;
        let (mut min_density, mut min_pressure) = (f64::INFINITY, f64::INFINITY);
        for qi in q {
            let p = gas.primitive(qi)?;
            min_density = min_density.min(p.rho);
            min_pressure = min_pressure.min(p.p);
        }
        let kinetic_energy = solver.total_kinetic_energy(q);
        let dissipation_rate = match previous {
            Some(prev) if t > prev.t => -(kinetic_energy - prev.kinetic_energy) / (t - prev.t),
            _ => 0.0,
        };
        Ok(DiagnosticsRow {
            step,
            t,
            dt,
            kinetic_energy,
            entropy: solver.total_entropy(q),
            dissipation_rate,
            min_density,
            min_pressure,
            max_sensor: solver.max_sensor(),
            shocked_elements: solver.shocked().iter().filter(|&&s| s).count(),
        })
    }
}

/// Streams rows to a CSV sink with a header.
pub struct DiagnosticsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(sink: W) -> Self {
        DiagnosticsWriter { inner: csv::Writer::from_writer(sink) }
    }

    pub fn write(&mut self, row: &DiagnosticsRow) -> Result<()> {
        self.inner.serialize(row).map_err(csv_error)
    }

    pub fn flush(&mut self) -> Result<()> {
        Ok(self.inner.flush()?)
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Reads a diagnostics CSV back.
pub fn read_diagnostics(text: &str) -> Result<Vec<DiagnosticsRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}
