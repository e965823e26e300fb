//! Snapshot and line-profile files.
//!
//! A snapshot is a short text header terminated by a line `end`, followed by
//! little-endian `f64` data: three coordinates per node, then the five
//! conserved variables per node, both in element-major node order.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::state::{GasModel, State5};

use super::diagnostics::csv_error;

const MAGIC: &str = "dgsvv-snapshot 1";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub dim: usize,
    pub degree: usize,
    pub num_elements: usize,
    pub gamma: f64,
    /// Structured cell counts of a box mesh.
    pub cells: Option<[usize; 3]>,
    pub coords: Vec<[f64; 3]>,
    pub state: Vec<State5>,
}

impl Snapshot {
    pub fn new(mesh: &Mesh, gas: &GasModel, t: f64, q: &[State5]) -> Self {
        Snapshot {
            t,
            dim: mesh.dim,
            degree: mesh.degree,
            num_elements: mesh.num_elements,
            gamma: gas.gamma,
            cells: mesh.box_info.as_ref().map(|b| b.counts),
            coords: mesh.coords.clone(),
            state: q.to_vec(),
        }
    }

    pub fn nodes_per_elem(&self) -> usize {
        (self.degree + 1).pow(self.dim as u32)
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "t {:e}", self.t)?;
        writeln!(w, "dim {}", self.dim)?;
        writeln!(w, "degree {}", self.degree)?;
        writeln!(w, "elements {}", self.num_elements)?;
        writeln!(w, "gamma {:e}", self.gamma)?;
        if let Some(c) = self.cells {
            writeln!(w, "cells {} {} {}", c[0], c[1], c[2])?;
        }
        writeln!(w, "end")?;
        let mut buf = Vec::with_capacity(self.coords.len() * 64);
        for x in &self.coords {
            x.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        }
        for q in &self.state {
            q.0.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let bad = |m: String| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, m));
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim_end() != MAGIC {
            return Err(bad(format!("not a snapshot (header {:?})", line.trim_end())));
        }
        let (mut t, mut dim, mut degree, mut ne, mut gamma, mut cells) = (None, None, None, None, None, None);
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(bad("truncated snapshot header".into()));
            }
            let l = line.trim_end();
            if l == "end" {
                break;
            }
            let (key, value) = l.split_once(' ').ok_or_else(|| bad(format!("malformed header line {l:?}")))?;
            let float = || value.parse::<f64>().map_err(|e| bad(format!("{key}: {e}")));
            let int = || value.parse::<usize>().map_err(|e| bad(format!("{key}: {e}")));
            match key {
                "t" => t = Some(float()?),
                "dim" => dim = Some(int()?),
                "degree" => degree = Some(int()?),
                "elements" => ne = Some(int()?),
                "gamma" => gamma = Some(float()?),
                "cells" => {
                    let c: Vec<usize> = value
                        .split_whitespace()
                        .map(|v| v.parse().map_err(|e| bad(format!("cells: {e}"))))
                        .collect::<Result<_>>()?;
                    cells = Some(<[usize; 3]>::try_from(c).map_err(|_| bad("cells needs three counts".into()))?);
                }
                _ => return Err(bad(format!("unknown header key {key:?}"))),
            }
        }
        let missing = |k: &str| bad(format!("snapshot header lacks {k}"));
        let mut snap = Snapshot {
            t: t.ok_or_else(|| missing("t"))?,
            dim: dim.ok_or_else(|| missing("dim"))?,
            degree: degree.ok_or_else(|| missing("degree"))?,
            num_elements: ne.ok_or_else(|| missing("elements"))?,
            gamma: gamma.ok_or_else(|| missing("gamma"))?,
            cells,
            coords: Vec::new(),
            state: Vec::new(),
        };
        let nodes = snap.num_elements * snap.nodes_per_elem();
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        if data.len() != nodes * 8 * 8 {
            return Err(bad(format!("expected {} data bytes, found {}", nodes * 64, data.len())));
        }
        let vals: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let (xs, qs) = vals.split_at(nodes * 3);
        snap.coords = xs.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        snap.state = qs.chunks_exact(5).map(|c| State5([c[0], c[1], c[2], c[3], c[4]])).collect();
        Ok(snap)
    }
}

/// Writes `x, rho, u, p, element` for every node of a 1-D solution, sorted
/// by `x`; duplicate interface nodes are kept.
pub fn write_line_csv(w: impl Write, mesh: &Mesh, gas: &GasModel, q: &[State5]) -> Result<()> {
    if mesh.dim != 1 {
        return Err(Error::Config("line output is available for 1-D meshes only".into()));
    }
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| mesh.coords[a][0].total_cmp(&mesh.coords[b][0]).then(a.cmp(&b)));
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "rho", "u", "p", "element"]).map_err(csv_error)?;
    for i in order {
        let p = gas.primitive(&q[i])?;
        out.write_record(&[
            mesh.coords[i][0].to_string(),
            p.rho.to_string(),
            p.u[0].to_string(),
            p.p.to_string(),
            (i / mesh.nodes_per_elem).to_string(),
        ])
        .map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}
