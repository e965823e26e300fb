//! Conserved states, block vectors and 15×15 block matrices.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NVAR: usize = 5;
pub const NBLK: usize = 3 * NVAR;

/// Ideal-gas constants (nondimensional).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasModel {
    pub gamma: f64,
    pub r_gas: f64,
    pub prandtl: f64,
}

impl Default for GasModel {
    fn default() -> Self {
        GasModel { gamma: 1.4, r_gas: 1.0, prandtl: 0.72 }
    }
}

impl GasModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) || !(self.prandtl > 0.0) || !(self.r_gas > 0.0) {
            return Err(Error::Config(format!("invalid gas model {self:?}")));
        }
        Ok(())
    }

    /// `θ = γ / ((γ-1) Pr)`, so that the heat conductivity is `κ = θ μ R`.
    pub fn theta(&self) -> f64 {
        self.gamma / ((self.gamma - 1.0) * self.prandtl)
    }

    pub fn pressure(&self, q: &State5) -> f64 {
        let [r, mx, my, mz, e] = q.0;
        (self.gamma - 1.0) * (e - 0.5 * (mx * mx + my * my + mz * mz) / r)
    }

    pub fn primitive(&self, q: &State5) -> Result<Primitive> {
        let rho = q.0[0];
        let p = self.pressure(q);
        if !(rho > 0.0) || !(p > 0.0) {
            return Err(Error::Inadmissible { element: None, node: None, rho, p });
        }
        let u = [q.0[1] / rho, q.0[2] / rho, q.0[3] / rho];
        Ok(Primitive { rho, u, p })
    }

    pub fn conserved(&self, rho: f64, u: [f64; 3], p: f64) -> State5 {
        let ke = 0.5 * rho * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
        State5([rho, rho * u[0], rho * u[1], rho * u[2], p / (self.gamma - 1.0) + ke])
    }

    pub fn sound_speed(&self, prim: &Primitive) -> f64 {
        (self.gamma * prim.p / prim.rho).sqrt()
    }

    pub fn is_admissible(&self, q: &State5) -> bool {
        q.0[0] > 0.0 && self.pressure(q) > 0.0
    }
}

/// Density, velocity and pressure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Primitive {
    pub rho: f64,
    pub u: [f64; 3],
    pub p: f64,
}

impl Primitive {
    pub fn speed_sq(&self) -> f64 {
        self.u[0] * self.u[0] + self.u[1] * self.u[1] + self.u[2] * self.u[2]
    }

    pub fn temperature(&self, gas: &GasModel) -> f64 {
        self.p / (self.rho * gas.r_gas)
    }

    /// Total specific enthalpy.
    pub fn enthalpy(&self, gas: &GasModel) -> f64 {
        gas.gamma / (gas.gamma - 1.0) * self.p / self.rho + 0.5 * self.speed_sq()
    }

    /// Total specific energy.
    pub fn energy(&self, gas: &GasModel) -> f64 {
        self.p / ((gas.gamma - 1.0) * self.rho) + 0.5 * self.speed_sq()
    }

    /// `s = ln p - γ ln ρ`.
    pub fn entropy(&self, gas: &GasModel) -> f64 {
        self.p.ln() - gas.gamma * self.rho.ln()
    }
}

/// One conserved state `(ρ, ρu, ρv, ρw, ρE)`, or any 5-vector in that layout.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct State5(pub [f64; NVAR]);

impl State5 {
    pub const ZERO: State5 = State5([0.0; NVAR]);

    pub fn dot(&self, o: &State5) -> f64 {
        self.0.iter().zip(&o.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for State5 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for State5 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for State5 {
    type Output = State5;
    fn add(self, o: State5) -> State5 {
        State5(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for State5 {
    type Output = State5;
    fn sub(self, o: State5) -> State5 {
        State5(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Mul<f64> for State5 {
    type Output = State5;
    fn mul(self, s: f64) -> State5 {
        State5(self.0.map(|v| v * s))
    }
}

impl Neg for State5 {
    type Output = State5;
    fn neg(self) -> State5 {
        State5(self.0.map(|v| -v))
    }
}

impl AddAssign for State5 {
    fn add_assign(&mut self, o: State5) {
        for i in 0..NVAR {
            self.0[i] += o.0[i];
        }
    }
}

impl SubAssign for State5 {
    fn sub_assign(&mut self, o: State5) {
        for i in 0..NVAR {
            self.0[i] -= o.0[i];
        }
    }
}

/// Three stacked states: the x, y and z parts of a flux or a gradient.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Block3x5(pub [State5; 3]);

impl Block3x5 {
    pub const ZERO: Block3x5 = Block3x5([State5::ZERO; 3]);

    pub fn get(&self, k: usize) -> f64 {
        self.0[k / NVAR].0[k % NVAR]
    }

    pub fn set(&mut self, k: usize, v: f64) {
        self.0[k / NVAR].0[k % NVAR] = v;
    }

    pub fn flat(&self) -> [f64; NBLK] {
        std::array::from_fn(|k| self.get(k))
    }

    pub fn from_flat(v: &[f64; NBLK]) -> Self {
        let mut b = Block3x5::ZERO;
        for (k, x) in v.iter().enumerate() {
            b.set(k, *x);
        }
        b
    }

    pub fn dot(&self, o: &Block3x5) -> f64 {
        (0..3).map(|d| self.0[d].dot(&o.0[d])).sum()
    }

    /// Normal component `Σ_d n_d f_d`.
    pub fn normal(&self, n: &[f64; 3]) -> State5 {
        self.0[0] * n[0] + self.0[1] * n[1] + self.0[2] * n[2]
    }
}

impl Add for Block3x5 {
    type Output = Block3x5;
    fn add(self, o: Block3x5) -> Block3x5 {
        Block3x5([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Block3x5 {
    type Output = Block3x5;
    fn sub(self, o: Block3x5) -> Block3x5 {
        Block3x5([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Block3x5 {
    type Output = Block3x5;
    fn mul(self, s: f64) -> Block3x5 {
        Block3x5([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl AddAssign for Block3x5 {
    fn add_assign(&mut self, o: Block3x5) {
        for d in 0..3 {
            self.0[d] += o.0[d];
        }
    }
}

/// Dense 15×15 matrix viewed as a 3×3 arrangement of 5×5 state matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockMat(pub [[f64; NBLK]; NBLK]);

impl Default for BlockMat {
    fn default() -> Self {
        BlockMat([[0.0; NBLK]; NBLK])
    }
}

impl BlockMat {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn from_diag(d: &[f64; NBLK]) -> Self {
        let mut m = Self::zeros();
        for (k, v) in d.iter().enumerate() {
            m.0[k][k] = *v;
        }
        m
    }

    /// Entry `(r, c)` of block `(a, b)`, all indices zero-based.
    pub fn block(&self, a: usize, b: usize, r: usize, c: usize) -> f64 {
        self.0[NVAR * a + r][NVAR * b + c]
    }

    pub fn set_block(&mut self, a: usize, b: usize, r: usize, c: usize, v: f64) {
        self.0[NVAR * a + r][NVAR * b + c] = v;
    }

    /// Write a row of block `(a, b)`.
    pub fn set_row(&mut self, a: usize, b: usize, r: usize, row: [f64; NVAR]) {
        for (c, v) in row.into_iter().enumerate() {
            self.set_block(a, b, r, c, v);
        }
    }

    /// Fill the lower block triangle from the upper one (`B_ji = B_ijᵀ`).
    pub fn symmetrize_from_upper(&mut self) {
        for a in 0..3 {
            for b in (a + 1)..3 {
                for r in 0..NVAR {
                    for c in 0..NVAR {
                        let v = self.block(a, b, r, c);
                        self.set_block(b, a, c, r, v);
                    }
                }
            }
        }
    }

    pub fn transpose(&self) -> Self {
        BlockMat(std::array::from_fn(|i| std::array::from_fn(|j| self.0[j][i])))
    }

    pub fn scale(&self, s: f64) -> Self {
        BlockMat(self.0.map(|row| row.map(|v| v * s)))
    }

    pub fn add(&self, o: &BlockMat) -> Self {
        BlockMat(std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j] + o.0[i][j])))
    }

    pub fn matmul(&self, o: &BlockMat) -> Self {
        let mut out = Self::zeros();
        for i in 0..NBLK {
            for k in 0..NBLK {
                let a = self.0[i][k];
                if a != 0.0 {
                    for j in 0..NBLK {
                        out.0[i][j] += a * o.0[k][j];
                    }
                }
            }
        }
        out
    }

    pub fn matvec_flat(&self, x: &[f64; NBLK]) -> [f64; NBLK] {
        std::array::from_fn(|i| {
            let row = &self.0[i];
            let mut s = 0.0;
            for j in 0..NBLK {
                if row[j] != 0.0 {
                    s += row[j] * x[j];
                }
            }
            s
        })
    }

    pub fn matvec(&self, g: &Block3x5) -> Block3x5 {
        Block3x5::from_flat(&self.matvec_flat(&g.flat()))
    }

    pub fn transpose_matvec_flat(&self, x: &[f64; NBLK]) -> [f64; NBLK] {
        let mut out = [0.0; NBLK];
        for i in 0..NBLK {
            if x[i] != 0.0 {
                for j in 0..NBLK {
                    out[j] += self.0[i][j] * x[i];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..NBLK {
            for j in 0..i {
                m = m.max((self.0[i][j] - self.0[j][i]).abs());
            }
        }
        m
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(NBLK, NBLK, |i, j| self.0[i][j])
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_dmatrix();
        let s = (&m + m.transpose()) * 0.5;
        s.symmetric_eigenvalues().min()
    }
}
