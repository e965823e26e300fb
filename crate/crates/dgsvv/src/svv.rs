//! Filtered (spectral vanishing viscosity) artificial-dissipation fluxes,
//! tensor-product kernels, shock sensor and Smagorinsky viscosity.

use serde::{Deserialize, Serialize};

use crate::basis::{FilterSpec, OperatorSet};
use crate::entropy::EntropySet;
use crate::error::{Error, Result};
use crate::state::{Block3x5, BlockMat, NBLK};

/// Which artificial flux the filter acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxFamily {
    NavierStokesKinetic,
    NavierStokesThermo,
    GuermondPopov,
}

impl FluxFamily {
    pub fn entropy_set(self) -> EntropySet {
        match self {
            FluxFamily::NavierStokesKinetic => EntropySet::Kinetic,
            _ => EntropySet::Thermodynamic,
        }
    }
}

/// 3-D (or 2-D) modal kernel from a 1-D kernel per active direction.
///
/// High-pass: `k_ijk = k_i k_j k_k`. Otherwise `1 - (1-k_i)(1-k_j)(1-k_k)`.
pub fn tensor_kernel(k1d: &[&[f64]], high_pass: bool) -> Vec<f64> {
    let dim = k1d.len();
    let np = k1d[0].len();
    let total = np.pow(dim as u32);
    (0..total)
        .map(|idx| {
            let mut rem = idx;
            let mut prod = 1.0;
            for k in k1d {
                let i = rem % np;
                rem /= np;
                prod *= if high_pass { k[i] } else { 1.0 - k[i] };
            }
            if high_pass {
                prod
            } else {
                1.0 - prod
            }
        })
        .collect()
}

/// Calls `f(base, stride)` for every grid line along `dir` of an `np^dim` block.
#[inline]
pub fn for_each_line(np: usize, dim: usize, dir: usize, mut f: impl FnMut(usize, usize)) {
    let stride = np.pow(dir as u32);
    let outer = np.pow((dim - dir - 1) as u32);
    for o in 0..outer {
        for s in 0..stride {
            f(o * stride * np + s, stride);
        }
    }
}

/// Applies a dense 1-D matrix along direction `dir` to a nodal block field.
pub fn apply_along<const C: usize>(
    mat: &[f64],
    np: usize,
    dim: usize,
    dir: usize,
    src: &[[f64; C]],
    dst: &mut [[f64; C]],
) {
    for_each_line(np, dim, dir, |base, stride| {
        for i in 0..np {
            let mut acc = [0.0; C];
            for m in 0..np {
                let a = mat[i * np + m];
                let v = &src[base + m * stride];
                for c in 0..C {
                    acc[c] += a * v[c];
                }
            }
            dst[base + i * stride] = acc;
        }
    });
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum KernelClass {
    Identity,
    Zero,
    General,
}

/// Modal filter `H = B diag(k) F` acting on one element's nodal field.
#[derive(Clone, Debug)]
pub struct ElementFilter {
    np: usize,
    dim: usize,
    kernel: Vec<f64>,
    forward: Vec<f64>,
    backward: Vec<f64>,
    class: KernelClass,
}

impl ElementFilter {
    pub fn new(ops: &OperatorSet, dim: usize, kernel: Vec<f64>) -> Result<Self> {
        let np = ops.np();
        if kernel.len() != np.pow(dim as u32) {
            return Err(Error::Config(format!("kernel size {} does not match np^dim", kernel.len())));
        }
        if kernel.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::Config("filter kernel must be nonnegative".into()));
        }
        let class = if kernel.iter().all(|&k| k == 1.0) {
            KernelClass::Identity
        } else if kernel.iter().all(|&k| k == 0.0) {
            KernelClass::Zero
        } else {
            KernelClass::General
        };
        let row_major = |m: &nalgebra::DMatrix<f64>| (0..np * np).map(|k| m[(k / np, k % np)]).collect();
        Ok(ElementFilter {
            np,
            dim,
            kernel,
            forward: row_major(&ops.forward),
            backward: row_major(&ops.backward),
            class,
        })
    }

    /// Same 1-D kernel in each active direction.
    pub fn from_spec(ops: &OperatorSet, dim: usize, spec: &FilterSpec, high_pass: bool) -> Result<Self> {
        let k = spec.coefficients.as_slice();
        let ks = vec![k; dim];
        Self::new(ops, dim, tensor_kernel(&ks, high_pass))
    }

    pub fn identity(ops: &OperatorSet, dim: usize) -> Self {
        Self::new(ops, dim, vec![1.0; ops.np().pow(dim as u32)]).expect("identity kernel")
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn is_identity(&self) -> bool {
        self.class == KernelClass::Identity
    }

    pub fn is_zero(&self) -> bool {
        self.class == KernelClass::Zero
    }

    /// In-place `H` applied componentwise.
    pub fn apply<const C: usize>(&self, field: &mut [[f64; C]]) {
        match self.class {
            KernelClass::Identity => {}
            KernelClass::Zero => field.iter_mut().for_each(|v| *v = [0.0; C]),
            KernelClass::General => {
                let mut tmp = vec![[0.0; C]; field.len()];
                for dir in 0..self.dim {
                    apply_along(&self.forward, self.np, self.dim, dir, field, &mut tmp);
                    field.copy_from_slice(&tmp);
                }
                for (v, k) in field.iter_mut().zip(&self.kernel) {
                    v.iter_mut().for_each(|x| *x *= k);
                }
                for dir in 0..self.dim {
                    apply_along(&self.backward, self.np, self.dim, dir, field, &mut tmp);
                    field.copy_from_slice(&tmp);
                }
            }
        }
    }

    pub fn apply_scalar(&self, field: &mut [f64]) {
        let mut f: Vec<[f64; 1]> = field.iter().map(|&v| [v]).collect();
        self.apply(&mut f);
        for (a, b) in field.iter_mut().zip(f) {
            *a = b[0];
        }
    }
}

/// `√(α/J) C H(√(Jα) G)` nodewise.
pub fn filtered_flux_scalar_coeff(
    filter: &ElementFilter,
    jac: &[f64],
    alpha: &[f64],
    c: &BlockMat,
    g: &[Block3x5],
) -> Result<Vec<Block3x5>> {
    check_positive(jac, alpha)?;
    let mut y: Vec<[f64; NBLK]> = g
        .iter()
        .zip(jac.iter().zip(alpha))
        .map(|(gi, (j, a))| gi.flat().map(|v| v * (j * a).sqrt()))
        .collect();
    filter.apply(&mut y);
    Ok(y.iter()
        .zip(jac.iter().zip(alpha))
        .map(|(yi, (j, a))| Block3x5::from_flat(&c.matvec_flat(yi).map(|v| v * (a / j).sqrt())))
        .collect())
}

/// `J^{-1/2} Lᵀ √D H(√(J D) L G)` nodewise.
pub fn filtered_flux_cholesky(
    filter: &ElementFilter,
    jac: &[f64],
    l: &[BlockMat],
    d: &[[f64; NBLK]],
    g: &[Block3x5],
) -> Result<Vec<Block3x5>> {
    if jac.iter().any(|j| !(*j > 0.0)) {
        return Err(Error::Config("Jacobian must be positive".into()));
    }
    if d.iter().flatten().any(|v| !(*v >= 0.0)) {
        return Err(Error::Config("diagonal factor must be nonnegative".into()));
    }
    let mut y = cholesky_scaled(jac, l, d, g);
    filter.apply(&mut y);
    Ok(cholesky_unscale(jac, l, d, &y))
}

/// `√(J D) L G` nodewise.
pub fn cholesky_scaled(jac: &[f64], l: &[BlockMat], d: &[[f64; NBLK]], g: &[Block3x5]) -> Vec<[f64; NBLK]> {
    (0..g.len())
        .map(|k| {
            let lg = l[k].matvec_flat(&g[k].flat());
            std::array::from_fn(|i| (jac[k] * d[k][i]).sqrt() * lg[i])
        })
        .collect()
}

/// `J^{-1/2} Lᵀ √D y` nodewise.
pub fn cholesky_unscale(jac: &[f64], l: &[BlockMat], d: &[[f64; NBLK]], y: &[[f64; NBLK]]) -> Vec<Block3x5> {
    (0..y.len())
        .map(|k| {
            let s: [f64; NBLK] = std::array::from_fn(|i| d[k][i].sqrt() * y[k][i]);
            let f = l[k].transpose_matvec_flat(&s);
            Block3x5::from_flat(&f.map(|v| v / jac[k].sqrt()))
        })
        .collect()
}

fn check_positive(jac: &[f64], alpha: &[f64]) -> Result<()> {
    if jac.iter().any(|j| !(*j > 0.0)) {
        return Err(Error::Config("Jacobian must be positive".into()));
    }
    if alpha.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::Config("viscosity coefficient must be nonnegative".into()));
    }
    Ok(())
}

/// Tensor-product quadrature weights of an `np^dim` element.
pub fn tensor_weights(ops: &OperatorSet, dim: usize) -> Vec<f64> {
    let np = ops.np();
    let w = ops.weights();
    (0..np.pow(dim as u32))
        .map(|mut idx| {
            let mut prod = 1.0;
            for _ in 0..dim {
                prod *= w[idx % np];
                idx /= np;
            }
            prod
        })
        .collect()
}

/// Element sensor `√(Σ w |∇ρ|²)` with reference-element weights.
pub fn sensor(weights: &[f64], grad_rho: &[[f64; 3]]) -> f64 {
    weights
        .iter()
        .zip(grad_rho)
        .map(|(w, g)| w * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]))
        .sum::<f64>()
        .sqrt()
}

/// `|S| = √(2 S_ij S_ij)` with `S = ½(∇u + ∇uᵀ)`, `du[i][j] = ∂u_i/∂x_j`.
pub fn strain_magnitude(du: &[[f64; 3]; 3]) -> f64 {
    let mut s2 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let s = 0.5 * (du[i][j] + du[j][i]);
            s2 += s * s;
        }
    }
    (2.0 * s2).sqrt()
}

/// Filter width `Δ = (V / (N+1)^dim)^{1/dim}`.
pub fn les_filter_width(cell_volume: f64, n: usize, dim: usize) -> f64 {
    (cell_volume / ((n + 1) as f64).powi(dim as i32)).powf(1.0 / dim as f64)
}

/// `μ = C_S² Δ² |S|`.
pub fn smagorinsky_viscosity(du: &[[f64; 3]; 3], delta: f64, c_s: f64) -> f64 {
    c_s * c_s * delta * delta * strain_magnitude(du)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_edges() {
        let k: Vec<f64> = FilterSpec::power_law(4, 2.0).coefficients;
        let hp = tensor_kernel(&[&k, &k, &k], true);
        let nhp = tensor_kernel(&[&k, &k, &k], false);
        let np = 5;
        for j in 0..np {
            for m in 0..np {
                let idx = 4 + np * (j + np * m);
                assert!((hp[idx] - k[j] * k[m]).abs() < 1e-15);
                assert_eq!(nhp[idx], 1.0);
            }
        }
        let z = vec![0.0; 5];
        assert!(tensor_kernel(&[&z, &z, &z], true).iter().all(|v| *v == 0.0));
        assert!(tensor_kernel(&[&z, &z, &z], false).iter().all(|v| *v == 0.0));
        assert!(nhp.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn smagorinsky_examples() {
        let zero = [[0.0; 3]; 3];
        assert_eq!(smagorinsky_viscosity(&zero, 1.0, 0.2), 0.0);
        let mut rot = zero;
        rot[0][1] = 1.0;
        rot[1][0] = -1.0;
        assert_eq!(smagorinsky_viscosity(&rot, 1.0, 0.2), 0.0);
        let mut shear = zero;
        shear[0][1] = 1.0;
        assert!((smagorinsky_viscosity(&shear, 1.0, 0.2) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn sensor_of_linear_density() {
        let ops = OperatorSet::new(4).unwrap();
        let w = tensor_weights(&ops, 1);
        assert_eq!(sensor(&w, &vec![[0.0; 3]; 5]), 0.0);
        let s = sensor(&w, &vec![[1.0, 0.0, 0.0]; 5]);
        assert!((s - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn kernel_decreases_with_exponent() {
        let n = 6;
        for i in 1..n {
            let mut last = f64::INFINITY;
            for p in [0.5, 1.0, 2.0, 4.0, 10.0] {
                let k = FilterSpec::power_law(n, p).coefficients[i];
                assert!(k < last);
                last = k;
            }
        }
    }
}
