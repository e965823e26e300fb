//! Inviscid fluxes: physical flux, symmetric two-point volume fluxes and
//! interface Riemann fluxes.
//!
//! Two-point fluxes in an arbitrary direction `n` (not necessarily unit), with
//! `{{·}}` the arithmetic mean and `u_n = u·n`:
//!
//! * Pirozzoli: `F_ρ = {{ρ}}{{u_n}}`, `F_m = F_ρ{{u}} + {{p}}n`, `F_E = F_ρ{{h}}`.
//! * Chandrashekar, with `β = ρ/(2p)`, logarithmic means `ρ^ln`, `β^ln` and
//!   `p̂ = {{ρ}}/(2{{β}})`: `F_ρ = ρ^ln{{u_n}}`, `F_m = F_ρ{{u}} + p̂ n`,
//!   `F_E = F_ρ(1/(2(γ-1)β^ln) - ½{{|u|²}}) + {{u}}·F_m`.

use serde::{Deserialize, Serialize};

use crate::entropy::thermo_vars;
use crate::error::Result;
use crate::state::{Block3x5, GasModel, Primitive, State5};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwoPointKind {
    /// Arithmetic mean of the physical fluxes.
    Central,
    Pirozzoli,
    Chandrashekar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiemannKind {
    /// The bare two-point flux.
    Central,
    LaxFriedrichs,
    MatrixDissipation,
}

/// Per-node quantities reused by every pairing in the split-form sums.
#[derive(Clone, Copy, Debug, Default)]
pub struct NodeAux {
    pub q: State5,
    pub rho: f64,
    pub u: [f64; 3],
    pub p: f64,
    pub h: f64,
    pub beta: f64,
    pub ln_rho: f64,
    pub ln_beta: f64,
}

impl NodeAux {
    pub fn new(q: State5, gas: &GasModel) -> Result<Self> {
        let prim = gas.primitive(&q)?;
        Ok(Self::from_primitive(q, &prim, gas))
    }

    pub fn from_primitive(q: State5, prim: &Primitive, gas: &GasModel) -> Self {
        let beta = 0.5 * prim.rho / prim.p;
        NodeAux {
            q,
            rho: prim.rho,
            u: prim.u,
            p: prim.p,
            h: prim.enthalpy(gas),
            beta,
            ln_rho: prim.rho.ln(),
            ln_beta: beta.ln(),
        }
    }

    pub fn primitive(&self) -> Primitive {
        Primitive { rho: self.rho, u: self.u, p: self.p }
    }
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Physical inviscid flux in direction `n`.
pub fn euler_flux_normal(a: &NodeAux, n: &[f64; 3]) -> State5 {
    let un = dot3(&a.u, n);
    let m = a.rho * un;
    State5([
        m,
        m * a.u[0] + a.p * n[0],
        m * a.u[1] + a.p * n[1],
        m * a.u[2] + a.p * n[2],
        m * a.h,
    ])
}

/// The three Cartesian columns of the inviscid flux.
pub fn euler_flux(q: &State5, gas: &GasModel) -> Result<Block3x5> {
    let a = NodeAux::new(*q, gas)?;
    Ok(Block3x5([
        euler_flux_normal(&a, &[1.0, 0.0, 0.0]),
        euler_flux_normal(&a, &[0.0, 1.0, 0.0]),
        euler_flux_normal(&a, &[0.0, 0.0, 1.0]),
    ]))
}

/// `(a - b) / (ln a - ln b)` with a series branch near `a = b`.
pub fn log_mean_with_logs(a: f64, b: f64, ln_a: f64, ln_b: f64) -> f64 {
    let f = (a - b) / (a + b);
    let u = f * f;
    if u < 1e-2 {
        // ln(a/b) = 2f(1 + u/3 + u²/5 + …); truncation error below u^8/17.
        let s = 1.0
            + u * (1.0 / 3.0
                + u * (1.0 / 5.0
                    + u * (1.0 / 7.0
                        + u * (1.0 / 9.0 + u * (1.0 / 11.0 + u * (1.0 / 13.0 + u / 15.0))))));
        0.5 * (a + b) / s
    } else {
        (a - b) / (ln_a - ln_b)
    }
}

pub fn log_mean(a: f64, b: f64) -> f64 {
    log_mean_with_logs(a, b, a.ln(), b.ln())
}

pub fn two_point_normal(kind: TwoPointKind, l: &NodeAux, r: &NodeAux, n: &[f64; 3], gas: &GasModel) -> State5 {
    match kind {
        TwoPointKind::Central => (euler_flux_normal(l, n) + euler_flux_normal(r, n)) * 0.5,
        TwoPointKind::Pirozzoli => {
            let rho = 0.5 * (l.rho + r.rho);
            let u: [f64; 3] = std::array::from_fn(|i| 0.5 * (l.u[i] + r.u[i]));
            let p = 0.5 * (l.p + r.p);
            let h = 0.5 * (l.h + r.h);
            let m = rho * dot3(&u, n);
            State5([m, m * u[0] + p * n[0], m * u[1] + p * n[1], m * u[2] + p * n[2], m * h])
        }
        TwoPointKind::Chandrashekar => {
            let rho_ln = log_mean_with_logs(l.rho, r.rho, l.ln_rho, r.ln_rho);
            let beta_ln = log_mean_with_logs(l.beta, r.beta, l.ln_beta, r.ln_beta);
            let u: [f64; 3] = std::array::from_fn(|i| 0.5 * (l.u[i] + r.u[i]));
            let u2avg = 0.5 * (dot3(&l.u, &l.u) + dot3(&r.u, &r.u));
            let p_hat = 0.5 * (l.rho + r.rho) / (l.beta + r.beta);
            let f1 = rho_ln * dot3(&u, n);
            let fm = [f1 * u[0] + p_hat * n[0], f1 * u[1] + p_hat * n[1], f1 * u[2] + p_hat * n[2]];
            let f5 = f1 * (0.5 / ((gas.gamma - 1.0) * beta_ln) - 0.5 * u2avg) + dot3(&u, &fm);
            State5([f1, fm[0], fm[1], fm[2], f5])
        }
    }
}

/// Two-point flux in Cartesian direction `dir` (0, 1, 2).
pub fn two_point_flux(kind: TwoPointKind, ql: &State5, qr: &State5, dir: usize, gas: &GasModel) -> Result<State5> {
    let l = NodeAux::new(*ql, gas)?;
    let r = NodeAux::new(*qr, gas)?;
    let mut n = [0.0; 3];
    n[dir] = 1.0;
    Ok(two_point_normal(kind, &l, &r, &n, gas))
}

/// Orthonormal frame `(n, t1, t2)` and the induced state rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationFrame {
    pub n: [f64; 3],
    pub t1: [f64; 3],
    pub t2: [f64; 3],
}

impl RotationFrame {
    /// Frame from a unit normal; tangents are built from the least-aligned axis.
    pub fn from_normal(n: [f64; 3]) -> Self {
        let k = (0..3)
            .min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs()))
            .unwrap_or(0);
        let mut e = [0.0; 3];
        e[k] = 1.0;
        let c = dot3(&e, &n);
        let mut t1: [f64; 3] = std::array::from_fn(|i| e[i] - c * n[i]);
        let s = dot3(&t1, &t1).sqrt();
        t1.iter_mut().for_each(|v| *v /= s);
        let t2 = [
            n[1] * t1[2] - n[2] * t1[1],
            n[2] * t1[0] - n[0] * t1[2],
            n[0] * t1[1] - n[1] * t1[0],
        ];
        RotationFrame { n, t1, t2 }
    }

    pub fn rotate(&self, q: &State5) -> State5 {
        let m = [q[1], q[2], q[3]];
        State5([q[0], dot3(&self.n, &m), dot3(&self.t1, &m), dot3(&self.t2, &m), q[4]])
    }

    pub fn unrotate(&self, q: &State5) -> State5 {
        let mut out = State5([q[0], 0.0, 0.0, 0.0, q[4]]);
        for i in 0..3 {
            out[i + 1] = self.n[i] * q[1] + self.t1[i] * q[2] + self.t2[i] * q[3];
        }
        out
    }

    pub fn matrix(&self) -> nalgebra::Matrix5<f64> {
        let mut t = nalgebra::Matrix5::zeros();
        t[(0, 0)] = 1.0;
        t[(4, 4)] = 1.0;
        for i in 0..3 {
            t[(1, i + 1)] = self.n[i];
            t[(2, i + 1)] = self.t1[i];
            t[(3, i + 1)] = self.t2[i];
        }
        t
    }
}

/// `M ⟦w⟧` for the entropy-stable matrix dissipation, with unit normal `n`.
///
/// `M = R|Λ|T Rᵀ` uses the entropy-scaled eigenvectors of the normal flux
/// Jacobian at the logarithmic-mean state, so it is PSD for any pair and
/// reduces to `|A| ∂q/∂w` at equal states.
pub fn matrix_dissipation_apply(l: &NodeAux, r: &NodeAux, n: &[f64; 3], jump_w: &State5, gas: &GasModel) -> State5 {
    let g = gas.gamma;
    let rho_ln = log_mean_with_logs(l.rho, r.rho, l.ln_rho, r.ln_rho);
    let beta_ln = log_mean_with_logs(l.beta, r.beta, l.ln_beta, r.ln_beta);
    let u: [f64; 3] = std::array::from_fn(|i| 0.5 * (l.u[i] + r.u[i]));
    let un = dot3(&u, n);
    let p_hat = 0.5 * (l.rho + r.rho) / (l.beta + r.beta);
    let a = (g * p_hat / rho_ln).sqrt();
    let u2bar = 2.0 * dot3(&u, &u) - 0.5 * (dot3(&l.u, &l.u) + dot3(&r.u, &r.u));
    let h = g / (2.0 * beta_ln * (g - 1.0)) + 0.5 * u2bar;

    let acoustic = |s: f64| {
        State5([
            1.0,
            u[0] + s * a * n[0],
            u[1] + s * a * n[1],
            u[2] + s * a * n[2],
            h + s * a * un,
        ])
    };
    let r1 = acoustic(-1.0);
    let r5 = acoustic(1.0);
    let r2 = State5([1.0, u[0], u[1], u[2], 0.5 * u2bar]);
    let x = jump_w;

    let t_ac = rho_ln / (2.0 * g);
    let mut out = r1 * ((un - a).abs() * t_ac * r1.dot(x));
    out += r5 * ((un + a).abs() * t_ac * r5.dot(x));
    out += r2 * (un.abs() * rho_ln * (g - 1.0) / g * r2.dot(x));
    // Shear waves: Σ_t r_t r_tᵀ x with r_t = (0, t, u·t) collapses onto the
    // tangential projector P = I - n nᵀ.
    let y = [x[1] + u[0] * x[4], x[2] + u[1] * x[4], x[3] + u[2] * x[4]];
    let yn = dot3(&y, n);
    let py: [f64; 3] = std::array::from_fn(|i| y[i] - yn * n[i]);
    let s = un.abs() * p_hat;
    out += State5([0.0, py[0], py[1], py[2], dot3(&u, &py)]) * s;
    out
}

/// Interface flux `F*·n` for a unit normal `n`.
pub fn riemann_normal(
    kind: RiemannKind,
    two_point: TwoPointKind,
    l: &NodeAux,
    r: &NodeAux,
    n: &[f64; 3],
    gas: &GasModel,
) -> State5 {
    let f = two_point_normal(two_point, l, r, n, gas);
    match kind {
        RiemannKind::Central => f,
        RiemannKind::LaxFriedrichs => {
            let al = (gas.gamma * l.p / l.rho).sqrt();
            let ar = (gas.gamma * r.p / r.rho).sqrt();
            let lam = (dot3(&l.u, n).abs() + al).max(dot3(&r.u, n).abs() + ar);
            f - (r.q - l.q) * (0.5 * lam)
        }
        RiemannKind::MatrixDissipation => {
            let wl = thermo_vars(&l.primitive(), gas);
            let wr = thermo_vars(&r.primitive(), gas);
            f - matrix_dissipation_apply(l, r, n, &(wr - wl), gas) * 0.5
        }
    }
}

/// Riemann flux through the rotated one-dimensional problem:
/// `F*·n = Tᵀ F^{1,*}(T q_L, T q_R)`.
pub fn riemann_flux(
    kind: RiemannKind,
    two_point: TwoPointKind,
    ql: &State5,
    qr: &State5,
    frame: &RotationFrame,
    gas: &GasModel,
) -> Result<State5> {
    let l = NodeAux::new(frame.rotate(ql), gas)?;
    let r = NodeAux::new(frame.rotate(qr), gas)?;
    let f = riemann_normal(kind, two_point, &l, &r, &[1.0, 0.0, 0.0], gas);
    Ok(frame.unrotate(&f))
}

pub fn br1_average<T>(a: T, b: T) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    (a + b) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rest_and_moving_flux() {
        let gas = GasModel::default();
        let f = euler_flux(&gas.conserved(1.0, [0.0; 3], 1.0), &gas).unwrap();
        assert_eq!(f.0[0].0, [0.0, 1.0, 0.0, 0.0, 0.0]);
        let q = gas.conserved(1.0, [1.0, 0.0, 0.0], 1.0);
        let f = euler_flux(&q, &gas).unwrap();
        let h = q[4] + 1.0;
        for (a, b) in f.0[0].0.iter().zip([1.0, 2.0, 0.0, 0.0, h]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn log_mean_branches_agree() {
        for &(a, b) in &[(1.0, 1.0), (1.0, 1.0 + 1e-9), (2.0, 2.2), (0.3, 5.0), (1.0, 1.2)] {
            let exact = if a == b { a } else { (a - b) / (f64::ln(a) - f64::ln(b)) };
            assert!((log_mean(a, b) - exact).abs() <= 1e-13 * exact.max(1.0) || a == b || (b - a).abs() < 1e-6);
        }
        // continuity across the branch switch
        let b = 1.0 + 0.2 / 0.9;
        let lo = log_mean(1.0, b * (1.0 - 1e-12));
        let hi = log_mean(1.0, b * (1.0 + 1e-12));
        assert!((lo - hi).abs() < 1e-11);
        assert_eq!(log_mean(2.0, 2.0), 2.0);
    }

    #[test]
    fn frame_is_orthogonal() {
        let s = (1.0f64 / 3.0).sqrt();
        let fr = RotationFrame::from_normal([s, -s, s]);
        let t = fr.matrix();
        assert!((t.transpose() * t - nalgebra::Matrix5::identity()).amax() < 1e-14);
    }

    #[test]
    fn br1_examples() {
        assert_eq!(br1_average(0.0, 2.0), 1.0);
        let a = State5([1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(br1_average(a, a), a);
    }
}
