//! Kinetic energy spectrum of a periodic box solution.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::basis::{lagrange_values, OperatorSet};
use crate::error::{Error, Result};
use crate::mesh::{node_index, FaceNeighbor, Mesh};
use crate::state::{GasModel, State5};
use crate::svv::tensor_weights;

use super::output::Snapshot;

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    /// Integer shell wavenumbers `0, 1, 2, …`; shell 0 holds the mean flow.
    pub k: Vec<usize>,
    pub energy: Vec<f64>,
    /// `½⟨|u|²⟩` on the sampling grid.
    pub grid_energy: f64,
    /// `½⟨|u|²⟩` from the element quadrature.
    pub quadrature_energy: f64,
}

impl Spectrum {
    pub fn total(&self) -> f64 {
        self.energy.iter().sum()
    }

    /// Relative mismatch between the shell sum and the grid energy.
    pub fn parseval_error(&self) -> f64 {
        (self.total() - self.grid_energy).abs() / self.grid_energy.abs().max(f64::MIN_POSITIVE)
    }
}

/// Samples the velocity on a uniform cell-centred grid with `m` points per
/// element and direction (use `N+1`), then bins `½|û|²` into integer
/// shells of the wavenumber index (physical wavenumbers for a `2π` box).
pub fn kinetic_energy_spectrum(mesh: &Mesh, ops: &OperatorSet, q: &[State5], gas: &GasModel, m: usize) -> Result<Spectrum> {
    let bx = mesh
        .box_info
        .as_ref()
        .filter(|_| mesh.dim == 3)
        .ok_or_else(|| Error::Config("spectra need a full 3-D box mesh".into()))?;
    if m == 0 {
        return Err(Error::Config("samples per element must be positive".into()));
    }
    let counts = bx.counts;
    let np = mesh.np;
    let npe = mesh.nodes_per_elem;
    if mesh.num_elements != counts.iter().product::<usize>()
        || mesh.faces.iter().any(|f| matches!(f.right, FaceNeighbor::Boundary(_)))
    {
        return Err(Error::Config("spectra need a fully periodic box".into()));
    }

    let basis: Vec<Vec<f64>> = (0..m).map(|s| lagrange_values(&ops.rule.nodes, -1.0 + (2 * s + 1) as f64 / m as f64)).collect();
    let velocity: Vec<[f64; 3]> = q
        .iter()
        .enumerate()
        .map(|(i, qi)| gas.primitive(qi).map(|p| p.u).map_err(|e| e.at(i / npe, i % npe)))
        .collect::<Result<_>>()?;

    let g = [counts[0] * m, counts[1] * m, counts[2] * m];
    let total = g[0] * g[1] * g[2];
    let mut fields = vec![vec![Complex::new(0.0, 0.0); total]; 3];
    for (e, c) in mesh.cell_index.iter().enumerate() {
        let u = &velocity[e * npe..(e + 1) * npe];
        for sz in 0..m {
            for sy in 0..m {
                for sx in 0..m {
                    let mut acc = [0.0; 3];
                    for k in 0..np {
                        for j in 0..np {
                            let wjk = basis[sy][j] * basis[sz][k];
                            for i in 0..np {
                                let w = basis[sx][i] * wjk;
                                let ui = u[node_index(np, [i, j, k])];
                                acc.iter_mut().zip(&ui).for_each(|(a, v)| *a += w * v);
                            }
                        }
                    }
                    let gi = [c[0] * m + sx, c[1] * m + sy, c[2] * m + sz];
                    let idx = gi[0] + g[0] * (gi[1] + g[1] * gi[2]);
                    for d in 0..3 {
                        fields[d][idx] = Complex::new(acc[d], 0.0);
                    }
                }
            }
        }
    }

    let grid_energy = fields.iter().flatten().map(|v| v.re * v.re).sum::<f64>() * 0.5 / total as f64;

    let mut planner = FftPlanner::new();
    let kmax = (0..3).map(|d| g[d] / 2).max().unwrap_or(0) as f64 * 3f64.sqrt();
    let nshell = kmax.round() as usize + 2;
    let mut shells = vec![0.0; nshell];
    for f in fields.iter_mut() {
        fft_3d(&mut planner, f, g);
        for kz in 0..g[2] {
            for ky in 0..g[1] {
                for kx in 0..g[0] {
                    let idx = kx + g[0] * (ky + g[1] * kz);
                    let wav = [signed(kx, g[0]), signed(ky, g[1]), signed(kz, g[2])];
                    let kk = (wav.iter().map(|v| v * v).sum::<f64>()).sqrt();
                    shells[kk.round() as usize] += 0.5 * f[idx].norm_sqr() / (total as f64).powi(2);
                }
            }
        }
    }

    let volume: f64 = (0..3).map(|d| bx.hi[d] - bx.lo[d]).product();
    let w = tensor_weights(ops, 3);
    let quadrature_energy =
        velocity.iter().enumerate().map(|(i, u)| w[i % npe] * mesh.jac[i] * 0.5 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2])).sum::<f64>()
            / volume;

    Ok(Spectrum { k: (0..nshell).collect(), energy: shells, grid_energy, quadrature_energy })
}

/// Spectrum of a stored periodic-box snapshot.
pub fn snapshot_spectrum(snap: &Snapshot) -> Result<Spectrum> {
    let cells = snap.cells.filter(|_| snap.dim == 3).ok_or_else(|| Error::Config("snapshot is not a 3-D box".into()))?;
    let lo: [f64; 3] = std::array::from_fn(|d| snap.coords.iter().map(|x| x[d]).fold(f64::INFINITY, f64::min));
    let hi: [f64; 3] = std::array::from_fn(|d| snap.coords.iter().map(|x| x[d]).fold(f64::NEG_INFINITY, f64::max));
    let ops = OperatorSet::cached(snap.degree)?;
    let mesh = Mesh::build_periodic_box(3, lo, hi, cells, &ops)?;
    let len = (0..3).map(|d| hi[d] - lo[d]).fold(0.0, f64::max);
    let mismatch = mesh
        .coords
        .iter()
        .zip(&snap.coords)
        .any(|(a, b)| (0..3).any(|d| (a[d] - b[d]).abs() > 1e-10 * len));
    if mesh.coords.len() != snap.coords.len() || mismatch {
        return Err(Error::Config("snapshot nodes do not form a Cartesian box".into()));
    }
    let gas = GasModel { gamma: snap.gamma, ..GasModel::default() };
    kinetic_energy_spectrum(&mesh, &ops, &snap.state, &gas, snap.degree + 1)
}

fn signed(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

fn fft_3d(planner: &mut FftPlanner<f64>, data: &mut [Complex<f64>], g: [usize; 3]) {
    let mut line = Vec::new();
    for dir in 0..3 {
        let fft = planner.plan_fft_forward(g[dir]);
        let stride = match dir {
            0 => 1,
            1 => g[0],
            _ => g[0] * g[1],
        };
        let (a, b) = match dir {
            0 => (g[1], g[2]),
            1 => (g[0], g[2]),
            _ => (g[0], g[1]),
        };
        for i1 in 0..a {
            for i2 in 0..b {
                let base = match dir {
                    0 => g[0] * (i1 + g[1] * i2),
                    1 => i1 + g[0] * g[1] * i2,
                    _ => i1 + g[0] * i2,
                };
                line.clear();
                line.extend((0..g[dir]).map(|s| data[base + s * stride]));
                fft.process(&mut line);
                for (s, v) in line.iter().enumerate() {
                    data[base + s * stride] = *v;
                }
            }
        }
    }
}
