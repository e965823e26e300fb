mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use dgsvv::basis::OperatorSet;
use dgsvv::fluxes::{RiemannKind, TwoPointKind};
use dgsvv::mesh::{BoundaryTag, Mesh};
use dgsvv::operator::{ArtificialViscosity, BoundaryData, Scheme, SensorSwitch, Solver};
use dgsvv::svv::FluxFamily;
use dgsvv::{GasModel, State5};
use rand::Rng;

fn gas() -> GasModel {
    GasModel::default()
}

fn gp(p: [f64; 2], mu: [f64; 2], alpha: [f64; 2], sensor: Option<SensorSwitch>) -> ArtificialViscosity {
    ArtificialViscosity {
        family: FluxFamily::GuermondPopov,
        p_svv: p,
        mu,
        alpha,
        sensor,
        high_pass: false,
        les_c_s: None,
    }
}

fn thermo_scheme(riemann: RiemannKind, av: Option<ArtificialViscosity>, mu: f64) -> Scheme {
    Scheme {
        gas: gas(),
        two_point: TwoPointKind::Chandrashekar,
        riemann,
        viscosity: mu,
        artificial: av,
    }
}

/// Smooth random field: a few low Fourier modes on top of a reference state.
fn smooth_field(mesh: &Mesh, seed: u64, amp: f64) -> Vec<State5> {
    let mut r = common::rng(seed);
    let mut modes = Vec::new();
    for _ in 0..5 {
        let k: [f64; 3] = std::array::from_fn(|_| r.gen_range(0..3) as f64);
        let c: [f64; 5] = std::array::from_fn(|_| r.gen_range(-1.0..1.0));
        modes.push((k, r.gen_range(0.0..2.0 * PI), c));
    }
    let lo = mesh.coords.iter().fold([f64::INFINITY; 3], |a, x| std::array::from_fn(|d| a[d].min(x[d])));
    let hi = mesh.coords.iter().fold([f64::NEG_INFINITY; 3], |a, x| std::array::from_fn(|d| a[d].max(x[d])));
    let ext: [f64; 3] = std::array::from_fn(|d| (hi[d] - lo[d]).max(1.0));
    mesh.coords
        .iter()
        .map(|x| {
            let mut v = [1.0, 0.3, -0.2, 0.1, 1.0];
            for (k, ph, c) in &modes {
                let arg: f64 = (0..3).map(|d| 2.0 * PI * k[d] * (x[d] - lo[d]) / ext[d]).sum::<f64>() + ph;
                for i in 0..5 {
                    v[i] += amp * c[i] * arg.sin();
                }
            }
            let u = if mesh.dim == 3 { [v[1], v[2], v[3]] } else if mesh.dim == 2 { [v[1], v[2], 0.0] } else { [v[1], 0.0, 0.0] };
            gas().conserved(v[0], u, v[4])
        })
        .collect()
}

fn curved_periodic(n: usize, counts: [usize; 2]) -> (Mesh, Arc<OperatorSet>) {
    let ops = OperatorSet::cached(n).unwrap();
    let mesh = Mesh::build_curved_quad(
        [0.0; 3],
        [2.0, 1.5, 1.0],
        counts,
        [true; 2],
        [BoundaryTag::Periodic; 4],
        0.04,
        &ops,
    )
    .unwrap();
    (mesh, ops)
}

fn rhs(solver: &mut Solver, q: &[State5]) -> Vec<State5> {
    let mut dq = vec![State5::ZERO; q.len()];
    solver.rhs(q, &mut dq).unwrap();
    dq
}

fn max_abs(v: &[State5]) -> f64 {
    v.iter().map(|s| s.norm_inf()).fold(0.0, f64::max)
}

#[test]
fn free_stream_curved_quad_with_dissipation() {
    let (mesh, ops) = curved_periodic(5, [4, 3]);
    let av = gp([2.0, 0.0], [1e-3, 1e-3], [1e-3, 0.0], Some(SensorSwitch { threshold: 1.0, inclusive: true }));
    let mut s = Solver::new(mesh, ops, thermo_scheme(RiemannKind::MatrixDissipation, Some(av), 1e-3), BoundaryData::default()).unwrap();
    let q = vec![gas().conserved(1.4, [3.0, -0.7, 0.0], 1.0); s.num_nodes()];
    let r = max_abs(&rhs(&mut s, &q));
    // The residual carries units of flux / length: measure it against |F|/h.
    let h = s.mesh().sizes.iter().copied().fold(f64::INFINITY, f64::min);
    let flux = 1.4 * 9.0 + 1.0;
    assert!(r < 1e-12 * flux / h, "{r:e}");
    assert!(dgsvv::mesh::metric_identity_residual(s.mesh(), s.ops()) < 1e-12);
}

#[test]
fn free_stream_box_walls_and_step() {
    let ops = OperatorSet::cached(3).unwrap();
    let walls = [BoundaryTag::WallFreeSlip; 6];
    let mesh = Mesh::build_box(3, [0.0; 3], [1.0, 2.0, 1.0], [2, 3, 2], [true, false, true], walls, &ops).unwrap();
    let mut s = Solver::new(mesh, ops, Scheme::inviscid(gas(), TwoPointKind::Pirozzoli, RiemannKind::LaxFriedrichs), BoundaryData::default()).unwrap();
    // Flow tangential to the walls.
    let q = vec![gas().conserved(0.9, [0.4, 0.0, -0.3], 2.0); s.num_nodes()];
    assert!(max_abs(&rhs(&mut s, &q)) < 1e-11);

    let ops = OperatorSet::cached(4).unwrap();
    let mesh = dgsvv::mesh::build_step_mesh(&Default::default(), 0.2, &ops).unwrap();
    let inflow = dgsvv::Primitive { rho: 1.4, u: [3.0, 0.0, 0.0], p: 1.0 };
    let bc = BoundaryData { inflow: Some(inflow), back_pressure: None };
    let mut s = Solver::new(mesh, ops, thermo_scheme(RiemannKind::MatrixDissipation, None, 0.0), bc).unwrap();
    let q = vec![gas().conserved(1.4, [3.0, 0.0, 0.0], 1.0); s.num_nodes()];
    let dq = rhs(&mut s, &q);
    // Only the vertical step face disturbs a uniform stream.
    let step_x = 0.6;
    for (x, d) in s.mesh().coords.iter().zip(&dq) {
        if (x[0] - step_x).abs() > 0.25 {
            assert!(d.norm_inf() < 1e-11, "at {x:?}: {d:?}");
        }
    }
}

#[test]
fn periodic_conservation() {
    let (mesh, ops) = curved_periodic(4, [3, 3]);
    let av = gp([2.0, 0.0], [2e-3, 2e-3], [2e-3, 0.0], None);
    let mut s = Solver::new(mesh, ops, thermo_scheme(RiemannKind::MatrixDissipation, Some(av), 1e-3), BoundaryData::default()).unwrap();
    let q = smooth_field(s.mesh(), 3, 0.1);
    let dq = rhs(&mut s, &q);
    let tot = s.totals(&dq);
    let scale = max_abs(&dq).max(1.0);
    assert!(tot.norm_inf() < 1e-11 * scale, "{tot:?}");
}

#[test]
fn entropy_conservative_volume_and_faces() {
    for dim in [1, 2] {
        let (mesh, ops) = if dim == 1 {
            let ops = OperatorSet::cached(4).unwrap();
            (Mesh::build_periodic_box(1, [0.0; 3], [1.0; 3], [7, 1, 1], &ops).unwrap(), ops)
        } else {
            curved_periodic(4, [3, 2])
        };
        let mut s = Solver::new(mesh, ops, thermo_scheme(RiemannKind::Central, None, 0.0), BoundaryData::default()).unwrap();
        let q = smooth_field(s.mesh(), 11, 0.15);
        let mut dq = vec![State5::ZERO; q.len()];
        let b = s.entropy_budget(&q, &mut dq).unwrap();
        let scale = s.integrate(&dq, |v| v.norm_inf());
        assert!(b.rate.abs() < 1e-12 * scale.max(1.0), "dim {dim}: {b:?}");
        assert!(b.residual().abs() < 1e-12 * scale.max(1.0));
    }
}

#[test]
fn entropy_budget_periodic_and_walls() {
    let cases: Vec<(Mesh, Arc<OperatorSet>)> = vec![
        curved_periodic(4, [3, 3]),
        {
            let ops = OperatorSet::cached(4).unwrap();
            let sides = [
                BoundaryTag::WallFreeSlip,
                BoundaryTag::WallFreeSlip,
                BoundaryTag::WallNoSlip,
                BoundaryTag::WallNoSlip,
            ];
            (Mesh::build_curved_quad([0.0; 3], [1.0, 1.0, 1.0], [3, 3], [false; 2], sides, 0.03, &ops).unwrap(), ops)
        },
    ];
    for (seed, (mesh, ops)) in cases.into_iter().enumerate() {
        let av = gp([2.0, 0.0], [5e-3, 5e-3], [5e-3, 0.0], None);
        let mut s = Solver::new(mesh, ops, thermo_scheme(RiemannKind::MatrixDissipation, Some(av), 2e-3), BoundaryData::default()).unwrap();
        let q = smooth_field(s.mesh(), 100 + seed as u64, 0.1);
        let mut dq = vec![State5::ZERO; q.len()];
        let b = s.entropy_budget(&q, &mut dq).unwrap();
        assert!(b.rate <= 0.0, "{b:?}");
        assert!(b.interior >= 0.0 && b.viscous >= 0.0 && b.artificial >= 0.0, "{b:?}");
        assert!(b.residual().abs() <= 1e-10 * b.scale(), "{b:?}");
    }
}

#[test]
fn gradient_exact_for_polynomial_data() {
    // Kinetic set: W = (-u²/2, u, 0, 0, T) with u, T linear in x.
    let ops = OperatorSet::cached(4).unwrap();
    let sides = [BoundaryTag::Outflow; 6];
    let mesh = Mesh::build_box(1, [0.0; 3], [2.0, 1.0, 1.0], [2, 1, 1], [false; 3], sides, &ops).unwrap();
    let scheme = Scheme {
        gas: gas(),
        two_point: TwoPointKind::Pirozzoli,
        riemann: RiemannKind::LaxFriedrichs,
        viscosity: 1e-2,
        artificial: None,
    };
    let mut s = Solver::new(mesh, ops, scheme, BoundaryData::default()).unwrap();
    let q: Vec<State5> = s
        .mesh()
        .coords
        .iter()
        .map(|x| {
            let u = 0.1 + 0.2 * x[0];
            let t = 1.0 + 0.5 * x[0];
            gas().conserved(1.0, [u, 0.0, 0.0], t)
        })
        .collect();
    rhs(&mut s, &q);
    for (x, g) in s.mesh().coords.iter().zip(s.gradients()) {
        let u = 0.1 + 0.2 * x[0];
        let expect = [-u * 0.2, 0.2, 0.0, 0.0, 0.5];
        for c in 0..5 {
            assert!((g.0[0][c] - expect[c]).abs() < 1e-12, "{x:?} {c}: {}", g.0[0][c]);
        }
    }
}

#[test]
fn residual_is_deterministic() {
    let (mesh, ops) = curved_periodic(3, [3, 3]);
    let av = gp([2.0, 0.0], [1e-3, 1e-2], [1e-3, 0.0], Some(SensorSwitch { threshold: 1.0, inclusive: true }));
    let mut s = Solver::new(mesh, ops, thermo_scheme(RiemannKind::MatrixDissipation, Some(av), 0.0), BoundaryData::default()).unwrap();
    let q = smooth_field(s.mesh(), 9, 0.2);
    let a = rhs(&mut s, &q);
    s.begin_step();
    let b = rhs(&mut s, &q);
    assert!(a.iter().zip(&b).all(|(x, y)| x.0.iter().zip(&y.0).all(|(u, v)| u.to_bits() == v.to_bits())));
}

#[test]
fn inadmissible_state_is_located() {
    let ops = OperatorSet::cached(2).unwrap();
    let mesh = Mesh::build_periodic_box(1, [0.0; 3], [1.0; 3], [4, 1, 1], &ops).unwrap();
    let mut s = Solver::new(mesh, ops, thermo_scheme(RiemannKind::MatrixDissipation, None, 0.0), BoundaryData::default()).unwrap();
    let mut q = vec![gas().conserved(1.0, [0.0; 3], 1.0); s.num_nodes()];
    q[2 * 3 + 1].0[4] = -1.0;
    let mut dq = vec![State5::ZERO; q.len()];
    let err = s.rhs(&q, &mut dq).unwrap_err();
    assert!(err.is_admissibility());
    assert!(err.to_string().contains("element 2, node 1"), "{err}");
}
