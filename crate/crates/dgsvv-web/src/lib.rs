//! Browser bindings: filter kernels, dispersion curves and a 1-D shock tube.
//!
//! Every function returns flat `f64` arrays so the page can plot them without
//! extra glue.

use dgsvv::basis::{FilterSpec, OperatorSet};
use dgsvv::cases::{presets, run};
use dgsvv::vonneumann::{dispersion_curves, k_sweep, VnConfig};
use wasm_bindgen::prelude::*;

fn js_err(e: dgsvv::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Modal kernel `(i/N)^P`, `i = 0..=N`.
#[wasm_bindgen]
pub fn filter_kernel(degree: usize, p_svv: f64) -> Vec<f64> {
    FilterSpec::power_law(degree, p_svv).coefficients
}

/// Nodal filter matrix, row-major `(N+1) × (N+1)`.
#[wasm_bindgen]
pub fn filter_matrix(degree: usize, p_svv: f64) -> Result<Vec<f64>, JsError> {
    let ops = OperatorSet::cached(degree).map_err(js_err)?;
    let h = ops.filter_matrix(&FilterSpec::power_law(degree, p_svv)).map_err(js_err)?;
    let np = ops.np();
    Ok((0..np * np).map(|k| h[(k / np, k % np)]).collect())
}

/// Gauss–Lobatto nodes of degree `N`.
#[wasm_bindgen]
pub fn lobatto_nodes(degree: usize) -> Result<Vec<f64>, JsError> {
    Ok(OperatorSet::cached(degree).map_err(js_err)?.rule.nodes.clone())
}

/// Flattened `(k̃, Re ω, Im ω, physical)` quadruples for every eigenvalue at
/// `nk` wavenumbers in `(0, π]`; `physical` is 1 on the traced branch.
#[wasm_bindgen]
pub fn dispersion(degree: usize, mu: f64, p_svv: f64, upwind: f64, nk: usize) -> Result<Vec<f64>, JsError> {
    let cfg = VnConfig { degree, speed: 1.0, mu, p_svv, upwind };
    let rows = dispersion_curves(&cfg, &k_sweep(nk)).map_err(js_err)?;
    let mut out = Vec::with_capacity(rows.len() * (degree + 1) * 4);
    for r in rows {
        for (b, w) in r.omegas.iter().enumerate() {
            out.extend_from_slice(&[r.k_tilde, w.re, w.im, f64::from(u8::from(b == r.physical))]);
        }
    }
    Ok(out)
}

/// Shu–Osher density profile at `t_end`: flattened `(x, ρ)` pairs sorted by `x`.
#[wasm_bindgen]
pub fn shu_osher_profile(elements: usize, degree: usize, t_end: f64) -> Result<Vec<f64>, JsError> {
    let mut cfg = presets::shu_osher(elements, degree);
    cfg.time.t_end = t_end;
    cfg.output.snapshot_times.clear();
    cfg.output.diagnostics_every = 0;
    let outcome = run(&cfg).map_err(js_err)?;
    let mesh = outcome.solver.mesh();
    let mut pts: Vec<(f64, f64)> = mesh.coords.iter().zip(&outcome.state).map(|(x, q)| (x[0], q[0])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pts.into_iter().flat_map(|(x, r)| [x, r]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_and_matrix_agree_on_identity() {
        assert_eq!(filter_kernel(3, 0.0), vec![1.0; 4]);
        let h = filter_matrix(3, 0.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((h[i * 4 + j] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dispersion_marks_one_physical_mode_per_wavenumber() {
        let d = dispersion(4, 0.01, 2.0, 1.0, 20).unwrap();
        assert_eq!(d.len(), 20 * 5 * 4);
        let physical = d.chunks(4).filter(|c| c[3] == 1.0).count();
        assert_eq!(physical, 20);
    }

    #[test]
    fn short_shock_tube_profile() {
        let p = shu_osher_profile(10, 2, 0.05).unwrap();
        assert_eq!(p.len(), 2 * 10 * 3);
        assert!(p.chunks(2).all(|c| c[1] > 0.0));
        assert!(p.chunks(2).zip(p.chunks(2).skip(1)).all(|(a, b)| a[0] <= b[0]));
    }
}
