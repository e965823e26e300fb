use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::OperatorSet;
use crate::error::{Error, Result};
use crate::fluxes::{RiemannKind, TwoPointKind};
use crate::mesh::{build_step_mesh, BoundaryTag, Mesh, StepGeometry};
use crate::operator::{ArtificialViscosity, BoundaryData, Scheme, SensorSwitch};
use crate::state::{GasModel, Primitive, State5};
use crate::svv::FluxFamily;
use crate::timeint::TimeConfig;

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub gas: GasModel,
    pub mesh: MeshConfig,
    pub initial: InitialCondition,
    pub flux: FluxConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svv: Option<SvvConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub les: Option<LesConfig>,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    pub time: TimeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<WarmStart>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshConfig {
    Box(BoxMesh),
    Step(StepMesh),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxMesh {
    pub degree: usize,
    /// `[lo, hi]` per active direction; its length sets the dimension.
    pub extents: Vec<[f64; 2]>,
    pub elements: Vec<usize>,
    pub periodic: Vec<bool>,
    #[serde(default)]
    pub boundary: SideTags,
    /// Interior bending amplitude (2-D only), relative to the box size.
    #[serde(default)]
    pub curvature: f64,
}

/// Boundary tags of the non-periodic box sides.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideTags {
    pub x_lo: Option<BoundaryTag>,
    pub x_hi: Option<BoundaryTag>,
    pub y_lo: Option<BoundaryTag>,
    pub y_hi: Option<BoundaryTag>,
    pub z_lo: Option<BoundaryTag>,
    pub z_hi: Option<BoundaryTag>,
}

impl SideTags {
    fn get(&self, side: usize) -> Option<BoundaryTag> {
        [self.x_lo, self.x_hi, self.y_lo, self.y_hi, self.z_lo, self.z_hi][side]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepMesh {
    pub degree: usize,
    pub element_size: f64,
    #[serde(default)]
    pub geometry: StepGeometry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    Uniform { rho: f64, u: [f64; 3], p: f64 },
    /// `ρ = 1 + A sin(2π k (x - lo)/L)` advected by a uniform velocity and pressure.
    DensityWave {
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
        u: [f64; 3],
        p: f64,
    },
    TaylorGreen {
        #[serde(default = "tgv_p0")]
        p0: f64,
    },
    ShuOsher,
}

fn one() -> f64 {
    1.0
}

fn tgv_p0() -> f64 {
    100.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    pub two_point: TwoPointKind,
    pub riemann: RiemannKind,
    #[serde(default)]
    pub viscosity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvvConfig {
    pub flux_family: FluxFamily,
    pub p_svv_smooth: f64,
    /// Defaults to the smooth exponent.
    #[serde(default)]
    pub p_svv_shock: Option<f64>,
    #[serde(default)]
    pub mu1: f64,
    #[serde(default)]
    pub mu2: f64,
    #[serde(default)]
    pub alpha1: f64,
    #[serde(default)]
    pub alpha2: f64,
    #[serde(default)]
    pub sensor_threshold: Option<f64>,
    /// Whether `s = threshold` counts as shocked.
    #[serde(default)]
    pub sensor_inclusive: bool,
    #[serde(default)]
    pub high_pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LesConfig {
    pub c_s: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inflow: Option<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub back_pressure: Option<f64>,
}

/// A first phase with different SVV viscosities, run before the main phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarmStart {
    pub t_end: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Steps between diagnostics rows (0 disables).
    pub diagnostics_every: usize,
    pub snapshot_times: Vec<f64>,
    pub spectrum_times: Vec<f64>,
    /// Also write a CSV line dump with every snapshot (1-D meshes).
    pub line_csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, diagnostics_every: 1, snapshot_times: Vec::new(), spectrum_times: Vec::new(), line_csv: true }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `path.to.key=value` assignments; values are TOML literals
    /// (bare words are taken as strings).
    pub fn with_overrides<S: AsRef<str>>(&self, assignments: &[S]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(&self.to_toml()).map_err(|e| Error::Config(e.to_string()))?;
        for a in assignments {
            let a = a.as_ref();
            let (path, raw) = a
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {a:?} is not of the form key=value")))?;
            let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
                Ok(mut t) => t.remove("v").expect("parsed key"),
                Err(_) => toml::Value::String(raw.trim().to_string()),
            };
            let keys: Vec<&str> = path.trim().split('.').collect();
            let (last, parents) = keys.split_last().expect("split yields one item");
            let mut table = &mut doc;
            for k in parents {
                table = table
                    .entry(k.to_string())
                    .or_insert_with(|| toml::Value::Table(Default::default()))
                    .as_table_mut()
                    .ok_or_else(|| Error::Config(format!("override {path:?}: {k} is not a table")))?;
            }
            table.insert(last.to_string(), value);
        }
        let text = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
        RunConfig::from_toml(&text)
    }

    pub fn degree(&self) -> usize {
        match &self.mesh {
            MeshConfig::Box(b) => b.degree,
            MeshConfig::Step(s) => s.degree,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.mesh {
            MeshConfig::Box(b) => b.extents.len(),
            MeshConfig::Step(_) => 2,
        }
    }

    /// Cross-field checks beyond what the types express.
    pub fn validate(&self) -> Result<()> {
        self.time.validate()?;
        self.scheme()?.validate()?;
        if !(1..=16).contains(&self.degree()) {
            return Err(Error::Config(format!("polynomial degree must be in 1..=16, got {}", self.degree())));
        }
        if let MeshConfig::Box(b) = &self.mesh {
            let dim = b.extents.len();
            if !(1..=3).contains(&dim) || b.elements.len() != dim || b.periodic.len() != dim {
                return Err(Error::Config("mesh.extents, mesh.elements and mesh.periodic must share a length of 1-3".into()));
            }
            for d in 0..dim {
                for s in 0..2 {
                    match (b.periodic[d], b.boundary.get(2 * d + s)) {
                        (true, Some(t)) if t != BoundaryTag::Periodic => {
                            return Err(Error::Config(format!("direction {d} is periodic but side tagged {}", t.name())))
                        }
                        (false, None) | (false, Some(BoundaryTag::Periodic)) => {
                            return Err(Error::Config(format!("direction {d} needs non-periodic boundary tags")))
                        }
                        _ => {}
                    }
                }
            }
            if b.curvature != 0.0 && dim != 2 {
                return Err(Error::Config("curved meshes are supported in 2-D only".into()));
            }
            if matches!(self.initial, InitialCondition::TaylorGreen { .. }) && (dim != 3 || b.periodic.iter().any(|p| !p)) {
                return Err(Error::Config("the Taylor-Green vortex needs a 3-D periodic box".into()));
            }
        }
        if let Some(w) = &self.warm_start {
            if self.svv.is_none() {
                return Err(Error::Config("warm_start requires an [svv] block".into()));
            }
            if !(w.t_end >= 0.0 && w.t_end <= self.time.t_end) {
                return Err(Error::Config("warm_start.t_end must lie in [0, time.t_end]".into()));
            }
        }
        if self.les.is_some() && self.svv.is_none() {
            return Err(Error::Config("[les] feeds the SVV flux and needs an [svv] block".into()));
        }
        Ok(())
    }

    pub fn scheme(&self) -> Result<Scheme> {
        let artificial = self.svv.map(|s| ArtificialViscosity {
            family: s.flux_family,
            p_svv: [s.p_svv_smooth, s.p_svv_shock.unwrap_or(s.p_svv_smooth)],
            mu: [s.mu1, s.mu2],
            alpha: [s.alpha1, s.alpha2],
            sensor: s.sensor_threshold.map(|threshold| SensorSwitch { threshold, inclusive: s.sensor_inclusive }),
            high_pass: s.high_pass,
            les_c_s: self.les.map(|l| l.c_s),
        });
        Ok(Scheme {
            gas: self.gas,
            two_point: self.flux.two_point,
            riemann: self.flux.riemann,
            viscosity: self.flux.viscosity,
            artificial,
        })
    }

    pub fn boundary_data(&self) -> BoundaryData {
        BoundaryData { inflow: self.boundary.inflow, back_pressure: self.boundary.back_pressure }
    }

    pub fn build_mesh(&self, ops: &Arc<OperatorSet>) -> Result<Mesh> {
        match &self.mesh {
            MeshConfig::Box(b) => {
                let dim = b.extents.len();
                let mut lo = [0.0; 3];
                let mut hi = [1.0; 3];
                let mut counts = [1usize; 3];
                let mut periodic = [true; 3];
                for d in 0..dim {
                    lo[d] = b.extents[d][0];
                    hi[d] = b.extents[d][1];
                    counts[d] = b.elements[d];
                    periodic[d] = b.periodic[d];
                }
                let sides: [BoundaryTag; 6] = std::array::from_fn(|s| b.boundary.get(s).unwrap_or(BoundaryTag::Periodic));
                if b.curvature != 0.0 {
                    Mesh::build_curved_quad(
                        lo,
                        hi,
                        [counts[0], counts[1]],
                        [periodic[0], periodic[1]],
                        [sides[0], sides[1], sides[2], sides[3]],
                        b.curvature,
                        ops,
                    )
                } else {
                    Mesh::build_box(dim, lo, hi, counts, periodic, sides, ops)
                }
            }
            MeshConfig::Step(s) => build_step_mesh(&s.geometry, s.element_size, ops),
        }
    }

    /// Nodal initial state on `mesh`.
    pub fn initial_state(&self, mesh: &Mesh) -> Result<Vec<State5>> {
        let gas = self.gas;
        let lo = mesh.coords.iter().fold([f64::INFINITY; 3], |a, x| std::array::from_fn(|d| a[d].min(x[d])));
        let hi = mesh.coords.iter().fold([f64::NEG_INFINITY; 3], |a, x| std::array::from_fn(|d| a[d].max(x[d])));
        let q: Vec<State5> = mesh
            .coords
            .iter()
            .map(|x| {
                let p = initial_primitive(&self.initial, x, lo[0], hi[0] - lo[0]);
                gas.conserved(p.rho, p.u, p.p)
            })
            .collect();
        let npe = mesh.nodes_per_elem;
        for (i, qi) in q.iter().enumerate() {
            gas.primitive(qi).map_err(|e| e.at(i / npe, i % npe))?;
        }
        Ok(q)
    }
}

/// Primitive initial state at `x`; `x0`, `len` describe the x-extent.
pub fn initial_primitive(ic: &InitialCondition, x: &[f64; 3], x0: f64, len: f64) -> Primitive {
    match *ic {
        InitialCondition::Uniform { rho, u, p } => Primitive { rho, u, p },
        InitialCondition::DensityWave { amplitude, wavenumber, u, p } => Primitive {
            rho: 1.0 + amplitude * (2.0 * PI * wavenumber * (x[0] - x0) / len).sin(),
            u,
            p,
        },
        InitialCondition::TaylorGreen { p0 } => {
            let (sx, cx) = x[0].sin_cos();
            let (sy, cy) = x[1].sin_cos();
            let cz = x[2].cos();
            let p = p0 + ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * ((2.0 * x[2]).cos() + 2.0) / 16.0;
            Primitive { rho: 1.0, u: [sx * cy * cz, -cx * sy * cz, 0.0], p }
        }
        InitialCondition::ShuOsher => {
            if x[0] <= -4.0 {
                Primitive { rho: 3.857143, u: [2.629369, 0.0, 0.0], p: 10.3333 }
            } else {
                Primitive { rho: 1.0 + 0.2 * (5.0 * x[0]).sin(), u: [0.0; 3], p: 1.0 }
            }
        }
    }
}
