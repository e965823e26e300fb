//! Bloch-wave analysis of the 1-D advection–diffusion DGSEM with a filtered
//! (SVV) viscous term.
//!
//! Elements are `[-1, 1]` (so `h = 1`, element width 2) and every result is
//! reported against `k̃ = k h / (N + 1)`. A mode `U ∝ exp(i(kx − ωt))` turns the
//! semi-discrete operator into an `(N+1)²` complex matrix `L(k)` with
//! eigenvalues `−iω`.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{FilterSpec, OperatorSet};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VnConfig {
    pub degree: usize,
    #[serde(default = "unit")]
    pub speed: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub p_svv: f64,
    /// 0 = central, 1 = full upwind.
    #[serde(default = "unit")]
    pub upwind: f64,
}

fn unit() -> f64 {
    1.0
}

impl VnConfig {
    pub fn new(degree: usize, mu: f64, p_svv: f64) -> Self {
        VnConfig { degree, speed: 1.0, mu, p_svv, upwind: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        if !(self.speed > 0.0) {
            return Err(Error::Config(format!("advection speed must be positive, got {}", self.speed)));
        }
        if !(self.mu >= 0.0) {
            return Err(Error::Config(format!("viscosity must be nonnegative, got {}", self.mu)));
        }
        if !(self.p_svv >= 0.0) {
            return Err(Error::Config(format!("kernel exponent must be nonnegative, got {}", self.p_svv)));
        }
        if !(0.0..=1.0).contains(&self.upwind) {
            return Err(Error::Config(format!("upwind parameter must lie in [0, 1], got {}", self.upwind)));
        }
        Ok(())
    }

    /// Physical wavenumber for a normalized one.
    pub fn wavenumber(&self, k_tilde: f64) -> f64 {
        k_tilde * (self.degree + 1) as f64
    }
}

/// `n` equispaced normalized wavenumbers in `(0, π]`.
pub fn k_sweep(n: usize) -> Vec<f64> {
    (1..=n).map(|i| std::f64::consts::PI * i as f64 / n as f64).collect()
}

/// Pre-built real operators for one configuration.
pub struct BlochOperator {
    cfg: VnConfig,
    d: DMatrix<f64>,
    h: DMatrix<f64>,
    w0: f64,
}

impl BlochOperator {
    pub fn new(cfg: &VnConfig) -> Result<Self> {
        cfg.validate()?;
        let ops = OperatorSet::cached(cfg.degree)?;
        let h = ops.filter_matrix(&FilterSpec::power_law(cfg.degree, cfg.p_svv))?;
        Ok(BlochOperator { cfg: cfg.clone(), d: ops.d.clone(), h, w0: ops.weights()[0] })
    }

    /// The matrix `L(k)` of `dU/dt = L U` for the Bloch wave of wavenumber `k`.
    pub fn symbol(&self, k: f64) -> DMatrix<Complex64> {
        let np = self.d.nrows();
        let n = np - 1;
        let a = self.cfg.speed;
        let mu = self.cfg.mu;
        let tau = self.cfg.upwind;
        // Neighbor phases across an element of width 2.
        let right = Complex64::from_polar(1.0, 2.0 * k);
        let left = right.conj();
        let lift = 1.0 / self.w0;
        let d = self.d.map(Complex64::from);
        let h = self.h.map(Complex64::from);

        // Face traces as rows acting on U: own end node and neighbour's node.
        let unit_row = |i: usize, c: Complex64| {
            let mut r = DMatrix::<Complex64>::zeros(1, np);
            r[(0, i)] = c;
            r
        };
        // Right face: inside = U_N, outside = e^{2ik} U_0. Left face: inside = U_0, outside = e^{-2ik} U_N.
        let (r_in, r_out) = (unit_row(n, 1.0.into()), unit_row(0, right));
        let (l_in, l_out) = (unit_row(0, 1.0.into()), unit_row(n, left));

        // BR1 gradient G = A_g U.
        let mut ag = d.clone();
        {
            let jump_r = (&r_in + &r_out) * Complex64::from(0.5) - &r_in;
            let jump_l = (&l_in + &l_out) * Complex64::from(0.5) - &l_in;
            for c in 0..np {
                ag[(n, c)] += lift * jump_r[(0, c)];
                ag[(0, c)] -= lift * jump_l[(0, c)];
            }
        }
        // Filtered viscous flux V = μ H G and its traces.
        let v = &h * &ag * Complex64::from(mu);
        let v_row = |i: usize, c: Complex64| v.rows(i, 1) * c;
        let (vr_in, vr_out) = (v_row(n, 1.0.into()), v_row(0, right));
        let (vl_in, vl_out) = (v_row(0, 1.0.into()), v_row(n, left));

        // Total flux f = aU − V; interface flux f* = a{{U}} − τ|a|/2 ⟦U⟧ − {{V}}.
        let a_c = Complex64::from(a);
        let half = Complex64::from(0.5);
        let num_r = (&r_in + &r_out) * (a_c * half) - (&r_out - &r_in) * Complex64::from(tau * a.abs() * 0.5)
            - (&vr_in + &vr_out) * half;
        let num_l = (&l_out + &l_in) * (a_c * half) - (&l_in - &l_out) * Complex64::from(tau * a.abs() * 0.5)
            - (&vl_out + &vl_in) * half;
        let own_r = &r_in * a_c - &vr_in;
        let own_l = &l_in * a_c - &vl_in;

        let f = DMatrix::<Complex64>::identity(np, np) * a_c - &v;
        let mut l = -(&d * &f);
        for c in 0..np {
            l[(n, c)] -= lift * (num_r[(0, c)] - own_r[(0, c)]);
            l[(0, c)] += lift * (num_l[(0, c)] - own_l[(0, c)]);
        }
        l
    }

    /// Frequencies `ω = iλ` of all `N+1` modes at wavenumber `k`.
    pub fn frequencies(&self, k: f64) -> Result<Vec<Complex64>> {
        let l = self.symbol(k);
        let scale = l.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1.0);
        let schur = l
            .try_schur(1e-15 * scale, 10_000)
            .ok_or_else(|| Error::Config(format!("eigenvalue iteration did not converge at k = {k}")))?;
        let (_, t) = schur.unpack();
        Ok((0..t.nrows()).map(|i| t[(i, i)] * Complex64::i()).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersionRow {
    pub k_tilde: f64,
    /// All frequencies, sorted by real part.
    pub omegas: Vec<Complex64>,
    /// Index into `omegas` of the traced physical branch.
    pub physical: usize,
    /// Another eigenvalue lay nearly as close to the extrapolated branch.
    pub ambiguous: bool,
}

impl DispersionRow {
    pub fn physical_omega(&self) -> Complex64 {
        self.omegas[self.physical]
    }
}

/// Eigenvalues over an increasing `k̃` sweep with the physical branch traced
/// by continuity from `ω ≈ ak`.
pub fn dispersion_curves(cfg: &VnConfig, k_tilde: &[f64]) -> Result<Vec<DispersionRow>> {
    if k_tilde.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("wavenumbers must be strictly increasing".into()));
    }
    let op = BlochOperator::new(cfg)?;
    let mut rows: Vec<DispersionRow> = Vec::with_capacity(k_tilde.len());
    for &kt in k_tilde {
        let k = cfg.wavenumber(kt);
        let mut omegas = op.frequencies(k)?;
        omegas.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let guess = match rows.as_slice() {
            [.., a, b] => {
                let (wa, wb) = (a.physical_omega(), b.physical_omega());
                wb + (wb - wa) * ((kt - b.k_tilde) / (b.k_tilde - a.k_tilde))
            }
            [b] => b.physical_omega() * (kt / b.k_tilde),
            [] => Complex64::new(cfg.speed * k, -cfg.mu * k * k),
        };
        let mut dist: Vec<(f64, usize)> = omegas.iter().enumerate().map(|(i, w)| ((w - guess).norm(), i)).collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ambiguous = dist.len() > 1 && dist[1].0 < 2.0 * dist[0].0 + 1e-12;
        rows.push(DispersionRow { k_tilde: kt, omegas, physical: dist[0].1, ambiguous });
    }
    Ok(rows)
}

/// CSV with columns `p_svv, k_tilde, branch_id, re_omega, im_omega, is_physical`.
pub fn write_csv(mut w: impl Write, curves: &[(f64, Vec<DispersionRow>)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(&mut w);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    out.write_record(["p_svv", "k_tilde", "branch_id", "re_omega", "im_omega", "is_physical"]).map_err(io)?;
    for (p, rows) in curves {
        for row in rows {
            for (b, om) in row.omegas.iter().enumerate() {
                out.write_record(&[
                    p.to_string(),
                    row.k_tilde.to_string(),
                    b.to_string(),
                    om.re.to_string(),
                    om.im.to_string(),
                    u8::from(b == row.physical).to_string(),
                ])
                .map_err(io)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
