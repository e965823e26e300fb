//! The three benchmark cases, at desk scale by default.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fluxes::{RiemannKind, TwoPointKind};
use crate::mesh::{BoundaryTag, StepGeometry};
use crate::state::{GasModel, Primitive};
use crate::svv::FluxFamily;
use crate::timeint::{TimeConfig, TimeScheme};

use super::config::{
    BoundaryConfig, BoxMesh, FluxConfig, InitialCondition, LesConfig, MeshConfig, OutputConfig, RunConfig, SideTags,
    StepMesh, SvvConfig, WarmStart,
};

pub const PRESET_NAMES: [&str; 3] = ["tgv", "shu-osher", "ffs"];

/// Looks a preset up by name at its default resolution.
pub fn preset(name: &str) -> Result<RunConfig> {
    match name {
        "tgv" => Ok(tgv(4, 4)),
        "shu-osher" => Ok(shu_osher(50, 5)),
        "ffs" => Ok(ffs(0.1, 4)),
        other => Err(Error::Config(format!("unknown preset {other:?}; expected one of {}", PRESET_NAMES.join(", ")))),
    }
}

/// Taylor–Green vortex in `[0, 2π]³` with the LES-driven kinetic SVV flux.
pub fn tgv(elements: usize, degree: usize) -> RunConfig {
    RunConfig {
        gas: GasModel::default(),
        mesh: MeshConfig::Box(BoxMesh {
            degree,
            extents: vec![[0.0, 2.0 * PI]; 3],
            elements: vec![elements; 3],
            periodic: vec![true; 3],
            boundary: SideTags::default(),
            curvature: 0.0,
        }),
        initial: InitialCondition::TaylorGreen { p0: 100.0 },
        flux: FluxConfig { two_point: TwoPointKind::Pirozzoli, riemann: RiemannKind::LaxFriedrichs, viscosity: 0.0 },
        svv: Some(SvvConfig {
            flux_family: FluxFamily::NavierStokesKinetic,
            p_svv_smooth: 0.1,
            p_svv_shock: None,
            mu1: 0.0,
            mu2: 0.0,
            alpha1: 0.0,
            alpha2: 0.0,
            sensor_threshold: None,
            sensor_inclusive: false,
            high_pass: true,
        }),
        les: Some(LesConfig { c_s: 0.2 }),
        boundary: BoundaryConfig::default(),
        time: TimeConfig::new(TimeScheme::Rk4LowStorage, 0.4, 10.0),
        warm_start: None,
        output: OutputConfig { spectrum_times: vec![10.0], line_csv: false, ..OutputConfig::default() },
    }
}

/// Shu–Osher shock/entropy-wave interaction on `[-4.5, 4.5]`.
pub fn shu_osher(elements: usize, degree: usize) -> RunConfig {
    let left = Primitive { rho: 3.857143, u: [2.629369, 0.0, 0.0], p: 10.3333 };
    RunConfig {
        gas: GasModel::default(),
        mesh: MeshConfig::Box(BoxMesh {
            degree,
            extents: vec![[-4.5, 4.5]],
            elements: vec![elements],
            periodic: vec![false],
            boundary: SideTags { x_lo: Some(BoundaryTag::Inflow), x_hi: Some(BoundaryTag::Outflow), ..SideTags::default() },
            curvature: 0.0,
        }),
        initial: InitialCondition::ShuOsher,
        flux: FluxConfig {
            two_point: TwoPointKind::Chandrashekar,
            riemann: RiemannKind::MatrixDissipation,
            viscosity: 0.0,
        },
        svv: Some(SvvConfig {
            flux_family: FluxFamily::GuermondPopov,
            p_svv_smooth: 2.0,
            p_svv_shock: Some(0.0),
            mu1: 1e-3,
            mu2: 2e-2,
            alpha1: 1e-3,
            alpha2: 2e-2,
            sensor_threshold: Some(10.0),
            sensor_inclusive: false,
            high_pass: false,
        }),
        les: None,
        boundary: BoundaryConfig { inflow: Some(left), back_pressure: Some(1.0) },
        time: TimeConfig::new(TimeScheme::Rk4LowStorage, 0.4, 1.8),
        warm_start: None,
        output: OutputConfig { snapshot_times: vec![1.8], ..OutputConfig::default() },
    }
}

/// Nodal spacing `h/N` of a fine forward-step mesh (3653 elements of degree
/// 7) at which the base viscosities below are used unscaled.
pub const FFS_REFERENCE_SPACING: f64 = 0.02626 / 7.0;

/// Factor applied to the reference step viscosities on a coarser mesh, so the
/// viscous length stays a fixed multiple of the nodal spacing.
pub fn ffs_viscosity_scale(element_size: f64, degree: usize) -> f64 {
    (element_size / degree as f64 / FFS_REFERENCE_SPACING).max(1.0)
}

/// Mach 3 flow over a forward-facing step, with a more viscous warm start.
pub fn ffs(element_size: f64, degree: usize) -> RunConfig {
    let c = ffs_viscosity_scale(element_size, degree);
    let inflow = Primitive { rho: 1.4, u: [3.0, 0.0, 0.0], p: 1.0 };
    RunConfig {
        gas: GasModel::default(),
        mesh: MeshConfig::Step(StepMesh { degree, element_size, geometry: StepGeometry::default() }),
        initial: InitialCondition::Uniform { rho: inflow.rho, u: inflow.u, p: inflow.p },
        flux: FluxConfig {
            two_point: TwoPointKind::Chandrashekar,
            riemann: RiemannKind::MatrixDissipation,
            viscosity: 0.0,
        },
        svv: Some(SvvConfig {
            flux_family: FluxFamily::GuermondPopov,
            p_svv_smooth: 4.0,
            p_svv_shock: Some(0.0),
            mu1: 5e-4 * c,
            mu2: 5e-4 * c,
            alpha1: 5e-4 * c,
            alpha2: 0.0,
            sensor_threshold: Some(1.0),
            sensor_inclusive: true,
            high_pass: false,
        }),
        les: None,
        boundary: BoundaryConfig { inflow: Some(inflow), back_pressure: None },
        time: TimeConfig::new(TimeScheme::Rk4LowStorage, 0.4, 4.0),
        warm_start: Some(WarmStart { t_end: 1.0, mu1: 1e-3 * c, mu2: 1e-3 * c, alpha1: 1e-3 * c, alpha2: 0.0 }),
        output: OutputConfig { snapshot_times: vec![1.0, 4.0], diagnostics_every: 10, line_csv: false, ..OutputConfig::default() },
    }
}
