//! Gauss–Lobatto nodal basis: quadrature, SBP derivative matrix, Legendre
//! modal transforms and modal filter matrices.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Legendre polynomial `L_n(x)` and its derivative, by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    match n {
        0 => (1.0, 0.0),
        1 => (x, 1.0),
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            let (mut d0, mut d1) = (0.0, 1.0);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                let d2 = d0 + (2.0 * kf - 1.0) * p1;
                p0 = p1;
                p1 = p2;
                d0 = d1;
                d1 = d2;
            }
            (p1, d1)
        }
    }
}

/// Gauss–Lobatto nodes and weights for polynomial degree `N`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub degree: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature sum of `f` sampled at the nodes.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Nodes are the roots of `(1 - x^2) L_N'(x)`, found by Newton iteration on
/// `L_{N+1} - L_{N-1}` (proportional to it) from Chebyshev–Lobatto guesses.
pub fn gauss_lobatto_rule(n: usize) -> Result<QuadratureRule> {
    if n < 1 {
        return Err(Error::Config(format!("Gauss-Lobatto degree must be >= 1, got {n}")));
    }
    let np = n + 1;
    let mut nodes = vec![0.0; np];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    for (j, node) in nodes.iter_mut().enumerate().take(n).skip(1) {
        let mut x = -(std::f64::consts::PI * j as f64 / n as f64).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (lp1, _) = legendre(n + 1, x);
            let (lm1, _) = legendre(n - 1, x);
            let (ln, _) = legendre(n, x);
            let q = lp1 - lm1;
            let dq = (2 * n + 1) as f64 * ln;
            let dx = q / dq;
            x -= dx;
            if dx.abs() <= NEWTON_TOL {
                break;
            }
        }
        *node = x;
    }
    let c = 2.0 / (n * np) as f64;
    let weights = nodes
        .iter()
        .map(|&x| {
            let (ln, _) = legendre(n, x);
            c / (ln * ln)
        })
        .collect();
    Ok(QuadratureRule { degree: n, nodes, weights })
}

fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            let prod: f64 = (0..nodes.len())
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product();
            1.0 / prod
        })
        .collect()
}

/// `D_ij = l_j'(x_i)`; diagonal from the negative-sum trick so rows sum to zero.
pub fn derivative_matrix(rule: &QuadratureRule) -> DMatrix<f64> {
    let np = rule.len();
    let x = &rule.nodes;
    let lam = barycentric_weights(x);
    let mut d = DMatrix::zeros(np, np);
    for i in 0..np {
        let mut diag = 0.0;
        for j in 0..np {
            if i != j {
                let v = lam[j] / lam[i] / (x[i] - x[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Values of the Lagrange basis on `nodes` at an arbitrary point `x`.
pub fn lagrange_values(nodes: &[f64], x: f64) -> Vec<f64> {
    let lam = barycentric_weights(nodes);
    if let Some(k) = nodes.iter().position(|&xn| xn == x) {
        let mut out = vec![0.0; nodes.len()];
        out[k] = 1.0;
        return out;
    }
    let terms: Vec<f64> = nodes.iter().zip(&lam).map(|(&xn, &l)| l / (x - xn)).collect();
    let s: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / s).collect()
}

/// Forward (nodal -> modal) matrix, backward matrix and discrete Legendre norms.
pub fn modal_transforms(rule: &QuadratureRule) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let np = rule.len();
    let b = DMatrix::from_fn(np, np, |i, j| legendre(j, rule.nodes[i]).0);
    let norms: Vec<f64> = (0..np)
        .map(|j| (0..np).map(|i| rule.weights[i] * b[(i, j)] * b[(i, j)]).sum())
        .collect();
    let f = DMatrix::from_fn(np, np, |i, j| rule.weights[j] * b[(j, i)] / norms[i]);
    (f, b, norms)
}

/// One-dimensional modal kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterSpec {
    pub coefficients: Vec<f64>,
}

impl FilterSpec {
    /// Power-law kernel `(i/N)^p`. `p == 0` is the identity kernel.
    pub fn power_law(n: usize, p: f64) -> Self {
        let coefficients = (0..=n)
            .map(|i| if p == 0.0 { 1.0 } else { (i as f64 / n as f64).powf(p) })
            .collect();
        FilterSpec { coefficients }
    }

    pub fn explicit(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(c) = coefficients.iter().find(|c| !(**c >= 0.0)) {
            return Err(Error::Config(format!("filter coefficients must be nonnegative, got {c}")));
        }
        Ok(FilterSpec { coefficients })
    }

    pub fn identity(n: usize) -> Self {
        FilterSpec { coefficients: vec![1.0; n + 1] }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }
}

/// Per-degree bundle of the immutable 1-D operators.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub rule: QuadratureRule,
    pub d: DMatrix<f64>,
    pub legendre_norms_sq: Vec<f64>,
    pub forward: DMatrix<f64>,
    pub backward: DMatrix<f64>,
}

impl OperatorSet {
    pub fn new(n: usize) -> Result<Self> {
        let rule = gauss_lobatto_rule(n)?;
        let d = derivative_matrix(&rule);
        let (forward, backward, legendre_norms_sq) = modal_transforms(&rule);
        Ok(OperatorSet { rule, d, legendre_norms_sq, forward, backward })
    }

    /// Shared instance for degree `n`, built once per process.
    pub fn cached(n: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<OperatorSet>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut map = cache.lock().expect("operator cache poisoned");
        if let Some(ops) = map.get(&n) {
            return Ok(ops.clone());
        }
        let ops = Arc::new(OperatorSet::new(n)?);
        map.insert(n, ops.clone());
        Ok(ops)
    }

    pub fn degree(&self) -> usize {
        self.rule.degree
    }

    pub fn np(&self) -> usize {
        self.rule.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.rule.weights
    }

    /// `Q = P D`.
    pub fn q(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(self.weights())) * &self.d
    }

    /// `H = B diag(k) F`.
    pub fn filter_matrix(&self, spec: &FilterSpec) -> Result<DMatrix<f64>> {
        if spec.coefficients.len() != self.np() {
            return Err(Error::Config(format!(
                "filter has {} coefficients, basis has {} modes",
                spec.coefficients.len(),
                self.np()
            )));
        }
        if spec.coefficients.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::Config("filter coefficients must be nonnegative".into()));
        }
        let k = DMatrix::from_diagonal(&DVector::from_column_slice(&spec.coefficients));
        Ok(&self.backward * k * &self.forward)
    }

    pub fn nodal_to_modal(&self, u: &[f64]) -> Vec<f64> {
        (&self.forward * DVector::from_column_slice(u)).as_slice().to_vec()
    }

    pub fn modal_to_nodal(&self, c: &[f64]) -> Vec<f64> {
        (&self.backward * DVector::from_column_slice(c)).as_slice().to_vec()
    }
}

/// Residuals of the identities every operator set must satisfy.
#[derive(Clone, Debug)]
pub struct IdentityResiduals {
    pub sbp: f64,
    pub fb_minus_i: f64,
    pub bf_minus_i: f64,
    pub transpose: f64,
    pub parseval_1d: f64,
    pub parseval_3d: f64,
}

pub fn identity_residuals(ops: &OperatorSet) -> IdentityResiduals {
    let np = ops.np();
    let q = ops.q();
    let mut bmat = DMatrix::zeros(np, np);
    bmat[(0, 0)] = -1.0;
    bmat[(np - 1, np - 1)] = 1.0;
    let sbp = (&q + q.transpose() - bmat).amax();
    let eye = DMatrix::<f64>::identity(np, np);
    let fb_minus_i = (&ops.forward * &ops.backward - &eye).amax();
    let bf_minus_i = (&ops.backward * &ops.forward - &eye).amax();
    let mut transpose = 0.0f64;
    for i in 0..np {
        for j in 0..np {
            let r = ops.weights()[i] * ops.backward[(i, j)]
                - ops.legendre_norms_sq[j] * ops.forward[(j, i)];
            transpose = transpose.max(r.abs());
        }
    }
    let field = |len: usize| (0..len).map(|i| (1.37 * i as f64 + 0.4).sin() + 0.25).collect::<Vec<_>>();
    let parseval_1d = parseval_defect(ops, 1, &field(np));
    let parseval_3d = parseval_defect(ops, 3, &field(np * np * np));
    IdentityResiduals { sbp, fb_minus_i, bf_minus_i, transpose, parseval_1d, parseval_3d }
}

/// Relative mismatch between the nodal quadrature norm `Σ w u²` and the
/// modal norm `Σ ‖L_i‖² û_i²` of a tensor-product field.
pub fn parseval_defect(ops: &OperatorSet, dim: usize, u: &[f64]) -> f64 {
    let np = ops.np();
    assert_eq!(u.len(), np.pow(dim as u32), "field size does not match the element");
    let mut modal = u.to_vec();
    let mut line = vec![0.0; np];
    for d in 0..dim {
        let stride = np.pow(d as u32);
        for base in 0..u.len() {
            if (base / stride) % np != 0 {
                continue;
            }
            for (k, l) in line.iter_mut().enumerate() {
                *l = (0..np).map(|j| ops.forward[(k, j)] * modal[base + j * stride]).sum();
            }
            for (k, l) in line.iter().enumerate() {
                modal[base + k * stride] = *l;
            }
        }
    }
    let weight = |table: &[f64], idx: usize| (0..dim).map(|d| table[(idx / np.pow(d as u32)) % np]).product::<f64>();
    let nodal: f64 = u.iter().enumerate().map(|(i, v)| weight(ops.weights(), i) * v * v).sum();
    let spectral: f64 = modal.iter().enumerate().map(|(i, v)| weight(&ops.legendre_norms_sq, i) * v * v).sum();
    (nodal - spectral).abs() / nodal.abs().max(f64::MIN_POSITIVE)
}
