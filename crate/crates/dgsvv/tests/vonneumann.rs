use dgsvv::vonneumann::{dispersion_curves, k_sweep, write_csv, BlochOperator, VnConfig};
use proptest::prelude::*;

fn low_k(cfg: &VnConfig) -> Vec<dgsvv::vonneumann::DispersionRow> {
    let ks: Vec<f64> = (1..=40).map(|i| 0.2 * i as f64 / 40.0).collect();
    dispersion_curves(cfg, &ks).unwrap()
}

#[test]
fn upwind_inviscid_is_stable_and_accurate_at_low_k() {
    let cfg = VnConfig::new(7, 0.0, 0.0);
    let rows = dispersion_curves(&cfg, &k_sweep(300)).unwrap();
    let worst = rows.iter().flat_map(|r| r.omegas.iter()).fold(f64::NEG_INFINITY, |m, w| m.max(w.im));
    assert!(worst <= 1e-10, "max Im ω = {worst:e}");
    for r in low_k(&cfg) {
        let ratio = r.physical_omega().re / (cfg.speed * cfg.wavenumber(r.k_tilde));
        assert!((0.999..=1.001).contains(&ratio), "k̃ = {}: {ratio}", r.k_tilde);
        assert!(!r.ambiguous);
    }
}

#[test]
fn unfiltered_viscosity_matches_exact_damping() {
    let cfg = VnConfig::new(7, 0.01, 0.0);
    for r in low_k(&cfg) {
        let k = cfg.wavenumber(r.k_tilde);
        let exact = -cfg.mu * k * k;
        let im = r.physical_omega().im;
        assert!((im - exact).abs() <= 0.05 * exact.abs(), "k̃ = {}: {im} vs {exact}", r.k_tilde);
    }
}

#[test]
fn stronger_kernel_exponent_damps_low_modes_less() {
    let damping: Vec<f64> = [0.0, 1.0, 4.0, 10.0]
        .iter()
        .map(|&p| {
            let rows = dispersion_curves(&VnConfig::new(7, 0.01, p), &[0.05, 0.1]).unwrap();
            -rows[1].physical_omega().im
        })
        .collect();
    assert!(damping.windows(2).all(|w| w[1] < w[0]), "{damping:?}");
    assert!(damping[3] >= 0.0);
}

#[test]
fn csv_has_one_row_per_eigenvalue() {
    let cfg = VnConfig::new(3, 0.01, 2.0);
    let rows = dispersion_curves(&cfg, &k_sweep(10)).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &[(2.0, rows)]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p_svv,k_tilde,branch_id,re_omega,im_omega,is_physical");
    assert_eq!(lines.len(), 1 + 10 * 4);
    let physical = lines[1..].iter().filter(|l| l.ends_with(",1")).count();
    assert_eq!(physical, 10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn viscous_filtered_modes_never_grow(n in 1usize..=8, mu in 0.0f64..0.5, p in 0.0f64..12.0, kt in 0.0f64..3.2, tau in 0.0f64..=1.0) {
        let cfg = VnConfig { upwind: tau, ..VnConfig::new(n, mu, p) };
        let op = BlochOperator::new(&cfg).unwrap();
        for w in op.frequencies(cfg.wavenumber(kt)).unwrap() {
            prop_assert!(w.im <= 1e-10, "{w}");
        }
    }
}
