//! Entropy variables and the symmetric dissipation matrices (with their
//! `LᵀDL` factorizations) for the Navier–Stokes and Guermond–Popov fluxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Block3x5, BlockMat, GasModel, Primitive, State5, NBLK};

/// Which convex entropy the dissipative terms are symmetrized with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropySet {
    /// `𝒦 = ρ|u|²/2`.
    Kinetic,
    /// `𝒮 = -ρ s / (γ-1)`.
    Thermodynamic,
}

/// `w = ∂𝒦/∂q = (-|u|²/2, u, v, w, 0)`.
pub fn entropy_vars_kinetic(q: &State5, gas: &GasModel) -> Result<State5> {
    let p = gas.primitive(q)?;
    Ok(kinetic_vars(&p))
}

pub fn kinetic_vars(p: &Primitive) -> State5 {
    State5([-0.5 * p.speed_sq(), p.u[0], p.u[1], p.u[2], 0.0])
}

/// `w = ∂𝒮/∂q = ((γ-s)/(γ-1) - ρ|u|²/(2p), ρu/p, ρv/p, ρw/p, -ρ/p)`.
pub fn entropy_vars_thermo(q: &State5, gas: &GasModel) -> Result<State5> {
    let p = gas.primitive(q)?;
    Ok(thermo_vars(&p, gas))
}

pub fn thermo_vars(p: &Primitive, gas: &GasModel) -> State5 {
    let s = p.entropy(gas);
    let beta = p.rho / p.p;
    State5([
        (gas.gamma - s) / (gas.gamma - 1.0) - 0.5 * beta * p.speed_sq(),
        beta * p.u[0],
        beta * p.u[1],
        beta * p.u[2],
        -beta,
    ])
}

pub fn entropy_vars(set: EntropySet, p: &Primitive, gas: &GasModel) -> State5 {
    match set {
        EntropySet::Kinetic => kinetic_vars(p),
        EntropySet::Thermodynamic => thermo_vars(p, gas),
    }
}

/// Thermodynamic entropy density `𝒮 = -ρ s / (γ-1)`.
pub fn thermo_entropy(p: &Primitive, gas: &GasModel) -> f64 {
    -p.rho * p.entropy(gas) / (gas.gamma - 1.0)
}

pub fn kinetic_energy(p: &Primitive) -> f64 {
    0.5 * p.rho * p.speed_sq()
}

/// Entropy density of the chosen set.
pub fn entropy_density(set: EntropySet, p: &Primitive, gas: &GasModel) -> f64 {
    match set {
        EntropySet::Kinetic => kinetic_energy(p),
        EntropySet::Thermodynamic => thermo_entropy(p, gas),
    }
}

/// Entropy flux potential `ψ = wᵀf - F^𝓔` for the thermodynamic pair: `ψ = ρu`.
pub fn thermo_flux_potential(p: &Primitive) -> [f64; 3] {
    [p.rho * p.u[0], p.rho * p.u[1], p.rho * p.u[2]]
}

/// `∂q/∂w` for the thermodynamic variables (the symmetrizer).
pub fn thermo_symmetrizer(p: &Primitive, gas: &GasModel) -> nalgebra::Matrix5<f64> {
    let (r, [u, v, w], pr) = (p.rho, p.u, p.p);
    let h = p.enthalpy(gas);
    let e = r * p.energy(gas);
    let a2 = gas.gamma * pr / r;
    let m = [r * u, r * v, r * w];
    let mut out = nalgebra::Matrix5::zeros();
    out[(0, 0)] = r;
    for i in 0..3 {
        out[(0, i + 1)] = m[i];
        out[(i + 1, 4)] = m[i] * h;
        for j in 0..3 {
            out[(i + 1, j + 1)] = m[i] * p.u[j] + if i == j { pr } else { 0.0 };
        }
    }
    out[(0, 4)] = e;
    out[(4, 4)] = r * h * h - a2 * pr / (gas.gamma - 1.0);
    for i in 0..5 {
        for j in 0..i {
            out[(i, j)] = out[(j, i)];
        }
    }
    out
}

/// Constant kinetic-set viscous matrix `C` such that the momentum part of the
/// viscous flux is `μ C ∇w` (the energy row is closed separately).
pub fn ns_matrix_kinetic() -> BlockMat {
    let mut c = BlockMat::zeros();
    for a in 0..3 {
        for k in 1..4 {
            c.set_block(a, a, k, k, if k == a + 1 { 4.0 / 3.0 } else { 1.0 });
        }
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        c.set_block(a, b, a + 1, b + 1, -2.0 / 3.0);
        c.set_block(a, b, b + 1, a + 1, 1.0);
    }
    c.symmetrize_from_upper();
    c
}

/// Viscous stress tensor `τ/μ` from the velocity gradient `du[i][j] = ∂u_i/∂x_j`.
pub fn stress_over_mu(du: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let div = du[0][0] + du[1][1] + du[2][2];
    std::array::from_fn(|i| {
        std::array::from_fn(|j| du[i][j] + du[j][i] - if i == j { 2.0 / 3.0 * div } else { 0.0 })
    })
}

/// Energy-row closure `τ·u + κ∇T` for the viscous flux in each direction.
pub fn kinetic_energy_closure(
    u: &[f64; 3],
    du: &[[f64; 3]; 3],
    grad_t: &[f64; 3],
    mu: f64,
    gas: &GasModel,
) -> [f64; 3] {
    let tau = stress_over_mu(du);
    let kappa = gas.theta() * gas.r_gas;
    std::array::from_fn(|d| mu * ((0..3).map(|i| tau[d][i] * u[i]).sum::<f64>() + kappa * grad_t[d]))
}

/// The thermodynamic-set viscous dissipation matrix and its factorization.
#[derive(Clone, Debug)]
pub struct Factored {
    pub b: BlockMat,
    pub l: BlockMat,
    pub d: [f64; NBLK],
}

impl Factored {
    /// `Lᵀ diag(D) L`.
    pub fn reconstruct(&self) -> BlockMat {
        let mut dl = self.l;
        for (i, row) in dl.0.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v *= self.d[i];
            }
        }
        self.l.transpose().matmul(&dl)
    }
}

/// `B̃` (scaled by `μ p / ρ` to give `B`), `L`, and `D` for the thermodynamic set.
pub fn ns_matrix_thermo(p: &Primitive, mu: f64, gas: &GasModel) -> Result<Factored> {
    if !(mu >= 0.0) {
        return Err(Error::Config(format!("viscosity must be nonnegative, got {mu}")));
    }
    let (f, l, d) = ns_thermo_unscaled(p, gas);
    let s = mu * p.p / p.rho;
    Ok(Factored { b: f.scale(s), l, d: d.map(|v| v * s) })
}

/// `(B̃, L, D)` without the `μ p / ρ` scaling.
pub fn ns_thermo_unscaled(p: &Primitive, gas: &GasModel) -> (BlockMat, BlockMat, [f64; NBLK]) {
    let [u, v, w] = p.u;
    let q2 = p.speed_sq();
    let tp = gas.theta() * p.p / p.rho;
    let f43 = 4.0 / 3.0;
    let t23 = -2.0 / 3.0;

    let mut b = BlockMat::zeros();
    b.set_row(0, 0, 1, [0.0, f43, 0.0, 0.0, f43 * u]);
    b.set_row(0, 0, 2, [0.0, 0.0, 1.0, 0.0, v]);
    b.set_row(0, 0, 3, [0.0, 0.0, 0.0, 1.0, w]);
    b.set_row(0, 0, 4, [0.0, f43 * u, v, w, u * u / 3.0 + q2 + tp]);

    b.set_row(1, 1, 1, [0.0, 1.0, 0.0, 0.0, u]);
    b.set_row(1, 1, 2, [0.0, 0.0, f43, 0.0, f43 * v]);
    b.set_row(1, 1, 3, [0.0, 0.0, 0.0, 1.0, w]);
    b.set_row(1, 1, 4, [0.0, u, f43 * v, w, v * v / 3.0 + q2 + tp]);

    b.set_row(2, 2, 1, [0.0, 1.0, 0.0, 0.0, u]);
    b.set_row(2, 2, 2, [0.0, 0.0, 1.0, 0.0, v]);
    b.set_row(2, 2, 3, [0.0, 0.0, 0.0, f43, f43 * w]);
    b.set_row(2, 2, 4, [0.0, u, v, f43 * w, w * w / 3.0 + q2 + tp]);

    b.set_row(0, 1, 1, [0.0, 0.0, t23, 0.0, t23 * v]);
    b.set_row(0, 1, 2, [0.0, 1.0, 0.0, 0.0, u]);
    b.set_row(0, 1, 4, [0.0, v, t23 * u, 0.0, u * v / 3.0]);

    b.set_row(0, 2, 1, [0.0, 0.0, 0.0, t23, t23 * w]);
    b.set_row(0, 2, 3, [0.0, 1.0, 0.0, 0.0, u]);
    b.set_row(0, 2, 4, [0.0, w, 0.0, t23 * u, u * w / 3.0]);

    b.set_row(1, 2, 2, [0.0, 0.0, 0.0, t23, t23 * w]);
    b.set_row(1, 2, 3, [0.0, 0.0, 1.0, 0.0, v]);
    b.set_row(1, 2, 4, [0.0, 0.0, w, t23 * v, v * w / 3.0]);
    b.symmetrize_from_upper();

    let mut l = BlockMat::zeros();
    l.set_row(0, 0, 1, [0.0, 1.0, 0.0, 0.0, u]);
    l.set_row(0, 0, 2, [0.0, 0.0, 1.0, 0.0, v]);
    l.set_row(0, 0, 3, [0.0, 0.0, 0.0, 1.0, w]);
    l.set_row(0, 0, 4, [0.0, 0.0, 0.0, 0.0, 1.0]);
    l.set_row(1, 1, 2, [0.0, 0.0, 1.0, 0.0, v]);
    l.set_row(1, 1, 3, [0.0, 0.0, 0.0, 1.0, w]);
    l.set_row(1, 1, 4, [0.0, 0.0, 0.0, 0.0, 1.0]);
    l.set_row(2, 2, 4, [0.0, 0.0, 0.0, 0.0, 1.0]);
    l.set_row(0, 1, 1, [0.0, 0.0, -0.5, 0.0, -0.5 * v]);
    l.set_row(0, 1, 2, [0.0, 1.0, 0.0, 0.0, u]);
    l.set_row(0, 2, 1, [0.0, 0.0, 0.0, -0.5, -0.5 * w]);
    l.set_row(0, 2, 3, [0.0, 1.0, 0.0, 0.0, u]);
    l.set_row(1, 2, 2, [0.0, 0.0, 0.0, -1.0, -w]);
    l.set_row(1, 2, 3, [0.0, 0.0, 1.0, 0.0, v]);

    let d = [
        0.0, f43, 1.0, 1.0, tp, //
        0.0, 0.0, 1.0, 1.0, tp, //
        0.0, 0.0, 0.0, 0.0, tp,
    ];
    (b, l, d)
}

/// `Λ = (p/ρ) / √(γ-1)`.
pub fn gp_lambda(p: &Primitive, gas: &GasModel) -> f64 {
    p.p / p.rho / (gas.gamma - 1.0).sqrt()
}

/// Guermond–Popov matrix `α ρ B^α + μ p B^μ` and its factorization.
pub fn gp_matrices(p: &Primitive, mu_a: f64, alpha_a: f64, gas: &GasModel) -> Result<Factored> {
    if !(mu_a >= 0.0) || !(alpha_a >= 0.0) {
        return Err(Error::Config(format!(
            "artificial viscosities must be nonnegative, got mu = {mu_a}, alpha = {alpha_a}"
        )));
    }
    let [u, v, w] = p.u;
    let e = p.energy(gas);
    let lam = gp_lambda(p, gas);
    let qh = [1.0, u, v, w, e];
    let q2 = p.speed_sq();
    let ar = alpha_a * p.rho;
    let mp = mu_a * p.p;

    let mut ba = BlockMat::zeros();
    for a in 0..3 {
        for r in 0..5 {
            for c in 0..5 {
                ba.set_block(a, a, r, c, qh[r] * qh[c]);
            }
        }
        ba.set_block(a, a, 4, 4, e * e + lam * lam);
    }

    let mut bm = BlockMat::zeros();
    let vel = [u, v, w];
    for a in 0..3 {
        for k in 0..3 {
            let diag = if k == a { 1.0 } else { 0.5 };
            bm.set_block(a, a, k + 1, k + 1, diag);
            bm.set_block(a, a, k + 1, 4, diag * vel[k]);
            bm.set_block(a, a, 4, k + 1, diag * vel[k]);
        }
        bm.set_block(a, a, 4, 4, 0.5 * (vel[a] * vel[a] + q2));
    }
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        // Symmetric-gradient coupling between directions a and b.
        bm.set_block(a, b, b + 1, a + 1, 0.5);
        bm.set_block(a, b, b + 1, 4, 0.5 * vel[a]);
        bm.set_block(a, b, 4, a + 1, 0.5 * vel[b]);
        bm.set_block(a, b, 4, 4, 0.5 * vel[a] * vel[b]);
    }
    bm.symmetrize_from_upper();

    let b = ba.scale(ar).add(&bm.scale(mp));
    let (l, d) = gp_factors(p, mu_a, alpha_a, gas);
    Ok(Factored { b, l, d })
}

/// `L` and `D` of the Guermond–Popov matrix (no validation, no `B`).
pub fn gp_factors(p: &Primitive, mu_a: f64, alpha_a: f64, gas: &GasModel) -> (BlockMat, [f64; NBLK]) {
    let [u, v, w] = p.u;
    let qh = [1.0, u, v, w, p.energy(gas)];
    let lam = gp_lambda(p, gas);
    let vel = [u, v, w];
    let ar = alpha_a * p.rho;
    let mp = mu_a * p.p;
    let mut l = BlockMat::zeros();
    for a in 0..3 {
        l.set_row(a, a, 0, qh);
        for k in a..3 {
            let mut row = [0.0; 5];
            row[k + 1] = 1.0;
            row[4] = vel[k];
            l.set_row(a, a, k + 1, row);
        }
        l.set_row(a, a, 4, [0.0, 0.0, 0.0, 0.0, lam]);
    }
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let mut row = [0.0; 5];
        row[a + 1] = 1.0;
        row[4] = vel[a];
        l.set_row(a, b, b + 1, row);
    }
    let d = [
        ar, mp, 0.5 * mp, 0.5 * mp, ar, //
        ar, 0.0, mp, 0.5 * mp, ar, //
        ar, 0.0, 0.0, mp, ar,
    ];
    (l, d)
}

/// `∇ρ = qᵀ ∇w` for thermodynamic entropy-variable gradients.
pub fn density_gradient_from_w(q: &State5, grad_w: &Block3x5) -> [f64; 3] {
    std::array::from_fn(|d| q.dot(&grad_w.0[d]))
}

/// Velocity gradient `∂u_i/∂x_j` and temperature gradient recovered from
/// thermodynamic entropy-variable gradients (`w_{i+1} = u_i β`, `w_5 = -β`,
/// `β = 1/(RT)`).
pub fn primitive_gradients_thermo(
    p: &Primitive,
    grad_w: &Block3x5,
    gas: &GasModel,
) -> ([[f64; 3]; 3], [f64; 3]) {
    let beta = p.rho / p.p;
    let t = p.temperature(gas);
    let mut du = [[0.0; 3]; 3];
    let mut dt = [0.0; 3];
    for j in 0..3 {
        let g = &grad_w.0[j];
        let dbeta = -g[4];
        for i in 0..3 {
            du[i][j] = (g[i + 1] - p.u[i] * dbeta) / beta;
        }
        // β = 1/(R T)  ⇒  ∂T = -T ∂β / β
        dt[j] = -t * dbeta / beta;
    }
    (du, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gas() -> GasModel {
        GasModel::default()
    }

    #[test]
    fn kinetic_examples() {
        let g = gas();
        let q = g.conserved(1.0, [1.0, 0.0, 0.0], 3.0);
        assert_eq!(entropy_vars_kinetic(&q, &g).unwrap().0, [-0.5, 1.0, 0.0, 0.0, 0.0]);
        let q = g.conserved(2.0, [1.0, 2.0, 2.0], 1.0);
        assert_abs_diff_eq!(entropy_vars_kinetic(&q, &g).unwrap()[0], -4.5, epsilon = 1e-14);
        let rest = g.conserved(0.7, [0.0; 3], 1.0);
        assert_eq!(entropy_vars_kinetic(&rest, &g).unwrap(), State5::ZERO);
    }

    #[test]
    fn thermo_example() {
        let g = gas();
        let w = entropy_vars_thermo(&g.conserved(1.0, [0.0; 3], 1.0), &g).unwrap();
        for (a, b) in w.0.iter().zip([3.5, 0.0, 0.0, 0.0, -1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn kinetic_matrix_blocks() {
        let c = ns_matrix_kinetic();
        let diag: Vec<f64> = (0..5).map(|k| c.block(0, 0, k, k)).collect();
        assert_eq!(diag, vec![0.0, 4.0 / 3.0, 1.0, 1.0, 0.0]);
        assert_eq!(c.asymmetry(), 0.0);
        // pure shear du/dy = 1 dissipates exactly mu
        let mut g = Block3x5::ZERO;
        g.0[1][1] = 1.0;
        assert_abs_diff_eq!(g.dot(&c.matvec(&g)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gp_diagonal_example() {
        let g = gas();
        let p = Primitive { rho: 2.0, u: [0.3, 0.1, -0.2], p: 3.0 };
        let f = gp_matrices(&p, 1.0, 1.0, &g).unwrap();
        assert_eq!(&f.d[..4], &[2.0, 3.0, 1.5, 1.5]);
        assert!(gp_matrices(&p, -1.0, 0.0, &g).is_err());
    }

    #[test]
    fn thermo_dvec_positions() {
        let g = gas();
        let p = Primitive { rho: 1.2, u: [0.0; 3], p: 0.9 };
        let (b, _, d) = ns_thermo_unscaled(&p, &g);
        let tp = g.theta() * 0.9 / 1.2;
        for k in [4, 9, 14] {
            assert_abs_diff_eq!(d[k], tp, epsilon = 1e-14);
        }
        for c in 0..5 {
            let expect = if c == 4 { tp } else { 0.0 };
            assert_abs_diff_eq!(b.block(0, 0, 4, c), expect, epsilon = 1e-14);
        }
    }
}
