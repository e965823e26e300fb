//! Semi-discrete residual of the split-form DGSEM: BR1 gradients, entropy
//! conservative volume fluxes, Riemann surface fluxes, physical and filtered
//! artificial dissipation, and weakly imposed boundary conditions.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{FilterSpec, OperatorSet};
use crate::entropy::{
    self, gp_factors, kinetic_energy_closure, ns_matrix_kinetic, ns_matrix_thermo, ns_thermo_unscaled,
    primitive_gradients_thermo, EntropySet,
};
use crate::error::{Error, Result};
use crate::fluxes::{euler_flux_normal, riemann_normal, two_point_normal, NodeAux, RiemannKind, TwoPointKind};
use crate::mesh::{face_node_volume_index, right_face_node, BoundaryTag, FaceNeighbor, Mesh};
use crate::state::{Block3x5, BlockMat, GasModel, Primitive, State5};
use crate::svv::{
    apply_along, filtered_flux_cholesky, filtered_flux_scalar_coeff, for_each_line, les_filter_width, sensor,
    smagorinsky_viscosity, tensor_weights, ElementFilter, FluxFamily,
};

/// Element-wise switch between the quiet and shocked SVV parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSwitch {
    pub threshold: f64,
    /// `s ≥ threshold` counts as shocked (otherwise `s > threshold`).
    pub inclusive: bool,
}

impl SensorSwitch {
    pub fn fires(&self, s: f64) -> bool {
        if self.inclusive {
            s >= self.threshold
        } else {
            s > self.threshold
        }
    }
}

/// Filtered artificial dissipation. Index 0 of each pair is the quiet value,
/// index 1 the shocked one.
#[derive(Clone, Debug, PartialEq)]
pub struct ArtificialViscosity {
    pub family: FluxFamily,
    pub p_svv: [f64; 2],
    pub mu: [f64; 2],
    pub alpha: [f64; 2],
    pub sensor: Option<SensorSwitch>,
    pub high_pass: bool,
    /// Smagorinsky constant; when set, `μ_a` is the nodal LES viscosity.
    pub les_c_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scheme {
    pub gas: GasModel,
    pub two_point: TwoPointKind,
    pub riemann: RiemannKind,
    /// Physical dynamic viscosity.
    pub viscosity: f64,
    pub artificial: Option<ArtificialViscosity>,
}

impl Scheme {
    pub fn inviscid(gas: GasModel, two_point: TwoPointKind, riemann: RiemannKind) -> Self {
        Scheme { gas, two_point, riemann, viscosity: 0.0, artificial: None }
    }

    /// Checks the parameters and returns the entropy set the dissipative
    /// terms are symmetrized with.
    pub fn validate(&self) -> Result<EntropySet> {
        self.gas.validate()?;
        if !(self.viscosity >= 0.0) {
            return Err(Error::Config(format!("viscosity must be nonnegative, got {}", self.viscosity)));
        }
        let from_flux = match self.two_point {
            TwoPointKind::Pirozzoli => Some(EntropySet::Kinetic),
            TwoPointKind::Chandrashekar => Some(EntropySet::Thermodynamic),
            TwoPointKind::Central => None,
        };
        let from_av = self.artificial.as_ref().map(|a| a.family.entropy_set());
        if let Some(av) = &self.artificial {
            let all = av.p_svv.iter().chain(&av.mu).chain(&av.alpha);
            if all.clone().any(|v| !(*v >= 0.0)) {
                return Err(Error::Config("SVV exponents and viscosities must be nonnegative".into()));
            }
            if let Some(c) = av.les_c_s {
                if !(c >= 0.0) {
                    return Err(Error::Config(format!("Smagorinsky constant must be nonnegative, got {c}")));
                }
                if av.family == FluxFamily::GuermondPopov {
                    return Err(Error::Config("LES viscosity requires a Navier-Stokes flux family".into()));
                }
            }
            if let Some(s) = &av.sensor {
                if !(s.threshold >= 0.0) {
                    return Err(Error::Config("sensor threshold must be nonnegative".into()));
                }
            }
        }
        match (from_flux, from_av) {
            (Some(a), Some(b)) if a != b => Err(Error::Config(format!(
                "{:?} two-point flux pairs with {a:?} entropy variables, but the artificial flux uses {b:?}",
                self.two_point
            ))),
            (Some(a), _) => Ok(a),
            (None, Some(b)) => Ok(b),
            (None, None) => Ok(EntropySet::Thermodynamic),
        }
    }

    fn needs_gradient(&self) -> bool {
        self.viscosity > 0.0 || self.artificial.is_some()
    }
}

/// Data for the weakly imposed boundary conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BoundaryData {
    pub inflow: Option<Primitive>,
    pub back_pressure: Option<f64>,
}

/// Exterior state seen by the Riemann solver on a boundary face with unit
/// outward normal `n`.
pub fn ghost_state(tag: BoundaryTag, q: &State5, n: &[f64; 3], bc: &BoundaryData, gas: &GasModel) -> Result<State5> {
    let ghost = match tag {
        BoundaryTag::WallFreeSlip | BoundaryTag::WallNoSlip => {
            let mn = q[1] * n[0] + q[2] * n[1] + q[3] * n[2];
            let mut g = *q;
            for i in 0..3 {
                g.0[i + 1] -= 2.0 * mn * n[i];
            }
            g
        }
        BoundaryTag::Inflow => {
            let s = bc
                .inflow
                .ok_or_else(|| Error::Config("inflow boundary present but no inflow state given".into()))?;
            gas.conserved(s.rho, s.u, s.p)
        }
        BoundaryTag::Outflow => {
            let p = gas.primitive(q)?;
            let a = gas.sound_speed(&p);
            let un = p.u[0] * n[0] + p.u[1] * n[1] + p.u[2] * n[2];
            match bc.back_pressure {
                Some(p0) if un < a => {
                    let g1 = gas.gamma - 1.0;
                    let rho0 = p.rho * (1.0 + (p0 / p.p - 1.0) / gas.gamma);
                    if !(rho0 > 0.0) {
                        return Err(Error::Ghost { tag: tag.name(), rho: rho0, p: p0 });
                    }
                    let r_plus = un + 2.0 * a / g1;
                    let a0 = (gas.gamma * p0 / rho0).sqrt();
                    let un0 = r_plus - 2.0 * a0 / g1;
                    let u0: [f64; 3] = std::array::from_fn(|i| p.u[i] + (un0 - un) * n[i]);
                    gas.conserved(rho0, u0, p0)
                }
                _ => *q,
            }
        }
        BoundaryTag::Periodic => return Err(Error::Mesh("periodic tag on an unpaired boundary face".into())),
    };
    match gas.primitive(&ghost) {
        Ok(_) => Ok(ghost),
        Err(_) => Err(Error::Ghost { tag: tag.name(), rho: ghost[0], p: gas.pressure(&ghost) }),
    }
}

/// Boundary value of the gradient variable, `W*`.
pub fn boundary_gradient_value(tag: BoundaryTag, w: &State5) -> State5 {
    match tag {
        BoundaryTag::WallNoSlip => State5([w[0], 0.0, 0.0, 0.0, w[4]]),
        _ => *w,
    }
}

/// Boundary dissipative flux `F*·n` from the interior `F·n`.
pub fn boundary_dissipative_flux(tag: BoundaryTag, fn_int: &State5) -> State5 {
    match tag {
        BoundaryTag::WallNoSlip => State5([0.0, fn_int[1], fn_int[2], fn_int[3], 0.0]),
        _ => State5::ZERO,
    }
}

/// Terms of the discrete entropy balance `Σ⟨J Q_t, W⟩ = -(IBT + PBT + D_v + D_a)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EntropyBudget {
    /// `Σ_e ⟨J Q_t, W⟩`.
    pub rate: f64,
    /// Interior-face entropy production of the Riemann flux.
    pub interior: f64,
    /// Physical-boundary entropy flux.
    pub boundary: f64,
    pub viscous: f64,
    pub artificial: f64,
}

impl EntropyBudget {
    pub fn residual(&self) -> f64 {
        self.rate + self.interior + self.boundary + self.viscous + self.artificial
    }

    pub fn scale(&self) -> f64 {
        [self.rate, self.interior, self.boundary, self.viscous, self.artificial]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct NodeData {
    aux: NodeAux,
    /// Entropy variables of the configured set.
    w: State5,
    /// Variable whose gradient is lifted (kinetic set: slot 5 holds `T`).
    wg: State5,
}

#[derive(Default)]
struct Workspace {
    nodes: Vec<NodeData>,
    grad: Vec<Block3x5>,
    f_visc: Vec<Block3x5>,
    f_art: Vec<Block3x5>,
    /// Per face node: `W*`, `F*_e·n dS`, `F*_d·n dS` (left orientation).
    face_w: Vec<State5>,
    face_e: Vec<State5>,
    face_d: Vec<State5>,
    diffusivity: Vec<f64>,
}

/// Right-hand side evaluator `Q_t = R(Q)` on a fixed mesh.
pub struct Solver {
    mesh: Mesh,
    ops: Arc<OperatorSet>,
    scheme: Scheme,
    set: EntropySet,
    bc: BoundaryData,
    dmat: Vec<f64>,
    /// `w_m D_mi / w_i`, row-major in `(i, m)`: the weak-form volume operator.
    weak: Vec<f64>,
    wvol: Vec<f64>,
    wface: Vec<f64>,
    filters: [ElementFilter; 2],
    kinetic_c: BlockMat,
    shocked: Vec<bool>,
    sensor_values: Vec<f64>,
    refresh_sensor: bool,
    max_diffusivity: f64,
    ws: Workspace,
}

impl Solver {
    pub fn new(mesh: Mesh, ops: Arc<OperatorSet>, scheme: Scheme, bc: BoundaryData) -> Result<Self> {
        let set = scheme.validate()?;
        if mesh.degree != ops.degree() {
            return Err(Error::Config(format!(
                "mesh degree {} does not match operator degree {}",
                mesh.degree,
                ops.degree()
            )));
        }
        if let Some(s) = bc.inflow {
            if !scheme.gas.is_admissible(&scheme.gas.conserved(s.rho, s.u, s.p)) {
                return Err(Error::Config("inflow state is not admissible".into()));
            }
        }
        let np = ops.np();
        let dim = mesh.dim;
        let w = ops.weights();
        let dmat: Vec<f64> = (0..np * np).map(|k| ops.d[(k / np, k % np)]).collect();
        let weak = (0..np * np)
            .map(|k| {
                let (i, m) = (k / np, k % np);
                w[m] * ops.d[(m, i)] / w[i]
            })
            .collect();
        let filters = match &scheme.artificial {
            Some(av) => {
                let make = |p: f64| ElementFilter::from_spec(&ops, dim, &FilterSpec::power_law(ops.degree(), p), av.high_pass);
                [make(av.p_svv[0])?, make(av.p_svv[1])?]
            }
            None => [ElementFilter::identity(&ops, dim), ElementFilter::identity(&ops, dim)],
        };
        let mut kinetic_c = ns_matrix_kinetic();
        let kappa = scheme.gas.theta() * scheme.gas.r_gas;
        for a in 0..3 {
            kinetic_c.set_block(a, a, 4, 4, kappa);
        }
        let ne = mesh.num_elements;
        let mut solver = Solver {
            wvol: tensor_weights(&ops, dim),
            wface: tensor_weights(&ops, dim - 1),
            dmat,
            weak,
            filters,
            kinetic_c,
            shocked: vec![false; ne],
            sensor_values: vec![0.0; ne],
            refresh_sensor: true,
            max_diffusivity: 0.0,
            ws: Workspace::default(),
            set,
            bc,
            scheme,
            ops,
            mesh,
        };
        solver.max_diffusivity = solver.constant_diffusivity();
        Ok(solver)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn ops(&self) -> &OperatorSet {
        &self.ops
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn entropy_set(&self) -> EntropySet {
        self.set
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.bc
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_elements * self.mesh.nodes_per_elem
    }

    /// Latest element sensor values.
    pub fn sensor_values(&self) -> &[f64] {
        &self.sensor_values
    }

    pub fn shocked(&self) -> &[bool] {
        &self.shocked
    }

    pub fn max_sensor(&self) -> f64 {
        self.sensor_values.iter().copied().fold(0.0, f64::max)
    }

    /// Gradients from the most recent residual evaluation.
    pub fn gradients(&self) -> &[Block3x5] {
        &self.ws.grad
    }

    /// Replaces the artificial viscosity coefficients (quiet, shocked); the
    /// filters and sensor are kept.
    pub fn set_artificial_coefficients(&mut self, mu: [f64; 2], alpha: [f64; 2]) -> Result<()> {
        let av = self
            .scheme
            .artificial
            .as_mut()
            .ok_or_else(|| Error::Config("scheme has no artificial viscosity".into()))?;
        let old = (av.mu, av.alpha);
        av.mu = mu;
        av.alpha = alpha;
        if let Err(e) = self.scheme.validate() {
            let av = self.scheme.artificial.as_mut().expect("checked above");
            (av.mu, av.alpha) = old;
            return Err(e);
        }
        self.max_diffusivity = self.constant_diffusivity();
        Ok(())
    }

    /// Re-evaluate the shock sensor on the next residual call.
    pub fn begin_step(&mut self) {
        self.refresh_sensor = true;
    }

    fn constant_diffusivity(&self) -> f64 {
        let visc = self.scheme.viscosity * (4.0f64 / 3.0).max(self.scheme.gas.gamma / self.scheme.gas.prandtl);
        let av = self
            .scheme
            .artificial
            .as_ref()
            .map(|a| a.mu.iter().chain(&a.alpha).copied().fold(0.0, f64::max))
            .unwrap_or(0.0);
        visc.max(av)
    }

    /// Largest explicit step: `CFL·min Δx_eff/(|u|+a)`, capped by the
    /// diffusive limit `0.2 Δx_eff²/ν`.
    pub fn stable_dt(&self, q: &[State5], cfl: f64) -> Result<f64> {
        let npe = self.mesh.nodes_per_elem;
        let gas = &self.scheme.gas;
        let mut dt = f64::INFINITY;
        for e in 0..self.mesh.num_elements {
            let dx = self.mesh.effective_spacing(e);
            let mut smax = 0.0f64;
            for (i, qi) in q[e * npe..(e + 1) * npe].iter().enumerate() {
                let p = gas.primitive(qi).map_err(|err| err.at(e, i))?;
                smax = smax.max(p.speed_sq().sqrt() + gas.sound_speed(&p));
            }
            dt = dt.min(cfl * dx / smax);
            if self.max_diffusivity > 0.0 {
                dt = dt.min(0.2 * dx * dx / self.max_diffusivity);
            }
        }
        Ok(dt)
    }

    /// First inadmissible node, if any.
    pub fn check_admissible(&self, q: &[State5]) -> Result<()> {
        let npe = self.mesh.nodes_per_elem;
        for (i, qi) in q.iter().enumerate() {
            self.scheme.gas.primitive(qi).map_err(|e| e.at(i / npe, i % npe))?;
        }
        Ok(())
    }

    /// Quadrature integral `Σ w J f(q)` over the mesh.
    pub fn integrate(&self, q: &[State5], f: impl Fn(&State5) -> f64) -> f64 {
        let npe = self.mesh.nodes_per_elem;
        q.iter()
            .enumerate()
            .map(|(i, qi)| self.wvol[i % npe] * self.mesh.jac[i] * f(qi))
            .sum()
    }

    /// Totals of the conserved variables.
    pub fn totals(&self, q: &[State5]) -> State5 {
        let npe = self.mesh.nodes_per_elem;
        let mut acc = State5::ZERO;
        for (i, qi) in q.iter().enumerate() {
            acc += *qi * (self.wvol[i % npe] * self.mesh.jac[i]);
        }
        acc
    }

    pub fn total_entropy(&self, q: &[State5]) -> f64 {
        let gas = self.scheme.gas;
        self.integrate(q, |qi| gas.primitive(qi).map(|p| entropy::thermo_entropy(&p, &gas)).unwrap_or(f64::NAN))
    }

    pub fn total_kinetic_energy(&self, q: &[State5]) -> f64 {
        let gas = self.scheme.gas;
        self.integrate(q, |qi| gas.primitive(qi).map(|p| entropy::kinetic_energy(&p)).unwrap_or(f64::NAN))
    }

    /// Evaluates `Q_t` into `dq`.
    pub fn rhs(&mut self, q: &[State5], dq: &mut [State5]) -> Result<()> {
        let total = self.num_nodes();
        if q.len() != total || dq.len() != total {
            return Err(Error::Config(format!("state has {} nodes, mesh has {total}", q.len())));
        }
        self.prepare_workspace();
        self.nodal_pass(q)?;
        self.face_pass()?;
        if self.scheme.needs_gradient() {
            self.gradient_pass();
            if self.refresh_sensor {
                self.update_sensor();
            }
            self.dissipative_pass()?;
            self.face_dissipative_pass();
        }
        self.refresh_sensor = false;
        self.assemble(dq);
        Ok(())
    }

    fn prepare_workspace(&mut self) {
        let total = self.num_nodes();
        let nface = self.mesh.faces.len() * self.mesh.nodes_per_face();
        let ws = &mut self.ws;
        if ws.nodes.len() != total {
            ws.nodes = vec![NodeData::default(); total];
            ws.face_w = vec![State5::ZERO; nface];
            ws.face_e = vec![State5::ZERO; nface];
            ws.face_d = vec![State5::ZERO; nface];
            if self.scheme.needs_gradient() {
                ws.grad = vec![Block3x5::ZERO; total];
                ws.f_visc = vec![Block3x5::ZERO; total];
                ws.f_art = vec![Block3x5::ZERO; total];
                ws.diffusivity = vec![0.0; self.mesh.num_elements];
            }
        }
    }

    fn nodal_pass(&mut self, q: &[State5]) -> Result<()> {
        let npe = self.mesh.nodes_per_elem;
        let gas = self.scheme.gas;
        let set = self.set;
        self.ws.nodes.par_chunks_mut(npe).enumerate().try_for_each(|(e, chunk)| {
            for (i, nd) in chunk.iter_mut().enumerate() {
                let qi = q[e * npe + i];
                let prim = gas.primitive(&qi).map_err(|err| err.at(e, i))?;
                let w = entropy::entropy_vars(set, &prim, &gas);
                let mut wg = w;
                if set == EntropySet::Kinetic {
                    wg.0[4] = prim.temperature(&gas);
                }
                *nd = NodeData { aux: NodeAux::from_primitive(qi, &prim, &gas), w, wg };
            }
            Ok(())
        })
    }

    /// Volume index of face node `k` (left numbering) and of its partner.
    #[inline]
    fn face_nodes(&self, fi: usize, k: usize) -> (usize, Option<usize>) {
        let m = &self.mesh;
        let f = &m.faces[fi];
        let npe = m.nodes_per_elem;
        let left = f.elem * npe + face_node_volume_index(m.np, m.dim, f.face, k);
        let right = match f.right {
            FaceNeighbor::Interior { elem, face, flip } => {
                Some(elem * npe + face_node_volume_index(m.np, m.dim, face, right_face_node(m.np, k, flip)))
            }
            FaceNeighbor::Boundary(_) => None,
        };
        (left, right)
    }

    /// Inviscid face fluxes and BR1 face values.
    fn face_pass(&mut self) -> Result<()> {
        let nf = self.mesh.nodes_per_face();
        let mut face_e = std::mem::take(&mut self.ws.face_e);
        let mut face_w = std::mem::take(&mut self.ws.face_w);
        let this = &*self;
        let (scheme, bc, nodes) = (&this.scheme, &this.bc, &this.ws.nodes);
        let needs_grad = scheme.needs_gradient();
        let result = face_e
            .par_chunks_mut(nf)
            .zip(face_w.par_chunks_mut(nf))
            .enumerate()
            .try_for_each(|(fi, (fe, fw))| {
                let face = &this.mesh.faces[fi];
                for k in 0..nf {
                    let (il, ir) = this.face_nodes(fi, k);
                    let l = &nodes[il];
                    let n = &face.normal[k];
                    let (flux, wstar) = match (ir, face.right) {
                        (Some(ir), _) => {
                            let r = &nodes[ir];
                            let f = riemann_normal(scheme.riemann, scheme.two_point, &l.aux, &r.aux, n, &scheme.gas);
                            (f, (l.wg + r.wg) * 0.5)
                        }
                        (None, FaceNeighbor::Boundary(tag)) => {
                            let g = ghost_state(tag, &l.aux.q, n, bc, &scheme.gas)?;
                            let ga = NodeAux::new(g, &scheme.gas)?;
                            let f = riemann_normal(scheme.riemann, scheme.two_point, &l.aux, &ga, n, &scheme.gas);
                            (f, boundary_gradient_value(tag, &l.wg))
                        }
                        _ => unreachable!("interior face without partner"),
                    };
                    fe[k] = flux * face.ds[k];
                    if needs_grad {
                        fw[k] = wstar;
                    }
                }
                Ok::<(), Error>(())
            });
        self.ws.face_e = face_e;
        self.ws.face_w = face_w;
        result
    }

    /// Lifted gradient `G = J⁻¹ [Σ_a Ja^a ∂_a W + surface corrections]`.
    fn gradient_pass(&mut self) {
        let m = &self.mesh;
        let (np, dim, npe, nf) = (m.np, m.dim, m.nodes_per_elem, m.nodes_per_face());
        let nodes = &self.ws.nodes;
        let face_w = &self.ws.face_w;
        let dmat = &self.dmat;
        let w_end = self.ops.weights()[0];
        self.ws.grad.par_chunks_mut(npe).enumerate().for_each(|(e, g)| {
            let base = e * npe;
            let wg: Vec<[f64; 5]> = nodes[base..base + npe].iter().map(|n| n.wg.0).collect();
            let mut dw = vec![[0.0; 5]; npe];
            g.iter_mut().for_each(|v| *v = Block3x5::ZERO);
            for a in 0..dim {
                apply_along(dmat, np, dim, a, &wg, &mut dw);
                for i in 0..npe {
                    let ja = m.metrics[base + i][a];
                    for d in 0..3 {
                        if ja[d] != 0.0 {
                            g[i].0[d] += State5(dw[i]) * ja[d];
                        }
                    }
                }
            }
            for (lf, &(fi, is_left)) in m.elem_faces[e].iter().enumerate() {
                let (dir, side) = (lf / 2, lf % 2);
                let sign = if side == 0 { -1.0 } else { 1.0 };
                let flip = match m.faces[fi].right {
                    FaceNeighbor::Interior { flip, .. } => flip,
                    FaceNeighbor::Boundary(_) => false,
                };
                for kr in 0..nf {
                    let k = if is_left { kr } else { right_face_node(np, kr, flip) };
                    let i = face_node_volume_index(np, dim, lf, kr);
                    let jump = face_w[fi * nf + k] - State5(wg[i]);
                    let nds = m.metrics[base + i][dir];
                    for d in 0..3 {
                        if nds[d] != 0.0 {
                            g[i].0[d] += jump * (sign * nds[d] / w_end);
                        }
                    }
                }
            }
            for (i, gi) in g.iter_mut().enumerate() {
                *gi = *gi * (1.0 / m.jac[base + i]);
            }
        });
    }

    fn density_gradient(&self, e: usize, out: &mut [[f64; 3]]) {
        let m = &self.mesh;
        let (np, dim, npe) = (m.np, m.dim, m.nodes_per_elem);
        let base = e * npe;
        match self.set {
            EntropySet::Thermodynamic => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = entropy::density_gradient_from_w(&self.ws.nodes[base + i].aux.q, &self.ws.grad[base + i]);
                }
            }
            EntropySet::Kinetic => {
                let rho: Vec<[f64; 1]> = (0..npe).map(|i| [self.ws.nodes[base + i].aux.rho]).collect();
                let mut dr = vec![[0.0; 1]; npe];
                out.iter_mut().for_each(|o| *o = [0.0; 3]);
                for a in 0..dim {
                    apply_along(&self.dmat, np, dim, a, &rho, &mut dr);
                    for i in 0..npe {
                        let ja = m.metrics[base + i][a];
                        for d in 0..3 {
                            out[i][d] += ja[d] * dr[i][0] / m.jac[base + i];
                        }
                    }
                }
            }
        }
    }

    fn update_sensor(&mut self) {
        let Some(switch) = self.scheme.artificial.as_ref().and_then(|a| a.sensor) else {
            return;
        };
        let npe = self.mesh.nodes_per_elem;
        let values: Vec<f64> = (0..self.mesh.num_elements)
            .into_par_iter()
            .map(|e| {
                let mut grad = vec![[0.0; 3]; npe];
                self.density_gradient(e, &mut grad);
                sensor(&self.wvol, &grad)
            })
            .collect();
        for (e, s) in values.into_iter().enumerate() {
            self.sensor_values[e] = s;
            self.shocked[e] = switch.fires(s);
        }
    }

    /// Physical viscous and filtered artificial fluxes at every node.
    fn dissipative_pass(&mut self) -> Result<()> {
        let m = &self.mesh;
        let npe = m.nodes_per_elem;
        let gas = self.scheme.gas;
        let mu = self.scheme.viscosity;
        let set = self.set;
        let nodes = &self.ws.nodes;
        let grad = &self.ws.grad;
        let av = self.scheme.artificial.as_ref();
        let filters = &self.filters;
        let shocked = &self.shocked;
        let kinetic_c = &self.kinetic_c;
        let n = self.ops.degree();
        let visc_factor = (4.0f64 / 3.0).max(gas.gamma / gas.prandtl);

        self.ws
            .f_visc
            .par_chunks_mut(npe)
            .zip(self.ws.f_art.par_chunks_mut(npe))
            .zip(self.ws.diffusivity.par_iter_mut())
            .enumerate()
            .try_for_each(|(e, ((fv, fa), nu_max))| {
                let base = e * npe;
                let nd = &nodes[base..base + npe];
                let g = &grad[base..base + npe];
                let jac = &m.jac[base..base + npe];
                let mut nu = 0.0f64;
                let mut rho_min = f64::INFINITY;
                // Physical viscosity.
                for i in 0..npe {
                    let prim = nd[i].aux.primitive();
                    rho_min = rho_min.min(prim.rho);
                    fv[i] = if mu > 0.0 {
                        match set {
                            EntropySet::Kinetic => kinetic_viscous_flux(&prim, &g[i], mu, &gas),
                            EntropySet::Thermodynamic => ns_matrix_thermo(&prim, mu, &gas)?.b.matvec(&g[i]),
                        }
                    } else {
                        Block3x5::ZERO
                    };
                }
                if mu > 0.0 {
                    nu = mu * visc_factor / rho_min;
                }
                let Some(av) = av else {
                    fa.iter_mut().for_each(|v| *v = Block3x5::ZERO);
                    *nu_max = nu;
                    return Ok(());
                };
                let sel = usize::from(shocked[e]);
                let filter = &filters[sel];
                let (mu_c, alpha_c) = (av.mu[sel], av.alpha[sel]);
                let mu_a: Vec<f64> = match av.les_c_s {
                    Some(c_s) => {
                        let delta = les_filter_width(m.volumes[e], n, m.dim);
                        (0..npe)
                            .map(|i| {
                                let du = velocity_gradient(set, &nd[i].aux.primitive(), &g[i], &gas);
                                smagorinsky_viscosity(&du, delta, c_s)
                            })
                            .collect()
                    }
                    None => vec![mu_c; npe],
                };
                let quiet = mu_a.iter().all(|v| *v == 0.0) && (av.family != FluxFamily::GuermondPopov || alpha_c == 0.0);
                if quiet || filter.is_zero() {
                    fa.iter_mut().for_each(|v| *v = Block3x5::ZERO);
                    *nu_max = nu;
                    return Ok(());
                }
                let flux = match av.family {
                    FluxFamily::NavierStokesKinetic => {
                        let mut f = filtered_flux_scalar_coeff(filter, jac, &mu_a, kinetic_c, g)?;
                        for (fi, ndi) in f.iter_mut().zip(nd) {
                            let u = ndi.aux.u;
                            for d in 0..3 {
                                fi.0[d].0[4] += u[0] * fi.0[d][1] + u[1] * fi.0[d][2] + u[2] * fi.0[d][3];
                            }
                        }
                        let mu_max = mu_a.iter().copied().fold(0.0, f64::max);
                        nu = nu.max(mu_max * visc_factor / rho_min);
                        f
                    }
                    FluxFamily::NavierStokesThermo => {
                        let mut ls = Vec::with_capacity(npe);
                        let mut ds = Vec::with_capacity(npe);
                        for i in 0..npe {
                            let prim = nd[i].aux.primitive();
                            let (_, l, d) = ns_thermo_unscaled(&prim, &gas);
                            let s = mu_a[i] * prim.p / prim.rho;
                            ls.push(l);
                            ds.push(d.map(|v| v * s));
                        }
                        let mu_max = mu_a.iter().copied().fold(0.0, f64::max);
                        nu = nu.max(mu_max * visc_factor / rho_min);
                        filtered_flux_cholesky(filter, jac, &ls, &ds, g)?
                    }
                    FluxFamily::GuermondPopov => {
                        let mut ls = Vec::with_capacity(npe);
                        let mut ds = Vec::with_capacity(npe);
                        for i in 0..npe {
                            let (l, d) = gp_factors(&nd[i].aux.primitive(), mu_a[i], alpha_c, &gas);
                            ls.push(l);
                            ds.push(d);
                        }
                        nu = nu.max(mu_c.max(alpha_c));
                        filtered_flux_cholesky(filter, jac, &ls, &ds, g)?
                    }
                };
                fa.copy_from_slice(&flux);
                *nu_max = nu;
                Ok::<(), Error>(())
            })?;
        self.max_diffusivity = self.ws.diffusivity.iter().copied().fold(0.0, f64::max);
        Ok(())
    }

    /// BR1 dissipative face fluxes.
    fn face_dissipative_pass(&mut self) {
        let nf = self.mesh.nodes_per_face();
        let mut face_d = std::mem::take(&mut self.ws.face_d);
        let this = &*self;
        let (fv, fa) = (&this.ws.f_visc, &this.ws.f_art);
        face_d.par_chunks_mut(nf).enumerate().for_each(|(fi, fd)| {
            let face = &this.mesh.faces[fi];
            for k in 0..nf {
                let (il, ir) = this.face_nodes(fi, k);
                let nds: [f64; 3] = face.normal[k].map(|v| v * face.ds[k]);
                let fl = (fv[il] + fa[il]).normal(&nds);
                fd[k] = match (ir, face.right) {
                    (Some(ir), _) => (fl + (fv[ir] + fa[ir]).normal(&nds)) * 0.5,
                    (None, FaceNeighbor::Boundary(tag)) => boundary_dissipative_flux(tag, &fl),
                    _ => unreachable!(),
                };
            }
        });
        self.ws.face_d = face_d;
    }

    /// Volume and surface terms, divided by `J`.
    fn assemble(&self, dq: &mut [State5]) {
        let m = &self.mesh;
        let (np, dim, npe, nf) = (m.np, m.dim, m.nodes_per_elem, m.nodes_per_face());
        let scheme = &self.scheme;
        let gas = &scheme.gas;
        let nodes = &self.ws.nodes;
        let w_end = self.ops.weights()[0];
        let dmat = &self.dmat;
        let weak = &self.weak;
        let needs_grad = scheme.needs_gradient();
        let (fv, fa) = (&self.ws.f_visc, &self.ws.f_art);
        let (face_e, face_d) = (&self.ws.face_e, &self.ws.face_d);

        dq.par_chunks_mut(npe).enumerate().for_each(|(e, res)| {
            let base = e * npe;
            res.iter_mut().for_each(|v| *v = State5::ZERO);
            // Split-form inviscid volume term with metric-averaged directions.
            for a in 0..dim {
                for_each_line(np, dim, a, |start, stride| {
                    for i in 0..np {
                        let ii = start + i * stride;
                        let (ai, ja_i) = (&nodes[base + ii].aux, m.metrics[base + ii][a]);
                        for mm in i..np {
                            let im = start + mm * stride;
                            let ja_m = m.metrics[base + im][a];
                            let nav: [f64; 3] = std::array::from_fn(|d| 0.5 * (ja_i[d] + ja_m[d]));
                            let f = if mm == i {
                                euler_flux_normal(ai, &nav)
                            } else {
                                two_point_normal(scheme.two_point, ai, &nodes[base + im].aux, &nav, gas)
                            };
                            res[ii] -= f * (2.0 * dmat[i * np + mm]);
                            if mm != i {
                                res[im] -= f * (2.0 * dmat[mm * np + i]);
                            }
                        }
                    }
                });
            }
            // Weak-form dissipative volume term.
            if needs_grad {
                let contra: Vec<[[f64; 5]; 3]> = (0..npe)
                    .map(|i| {
                        let f = fv[base + i] + fa[base + i];
                        std::array::from_fn(|a| f.normal(&m.metrics[base + i][a]).0)
                    })
                    .collect();
                for a in 0..dim {
                    for_each_line(np, dim, a, |start, stride| {
                        for i in 0..np {
                            let mut acc = State5::ZERO;
                            for mm in 0..np {
                                acc += State5(contra[start + mm * stride][a]) * weak[i * np + mm];
                            }
                            res[start + i * stride] -= acc;
                        }
                    });
                }
            }
            // Surface terms.
            for (lf, &(fi, is_left)) in m.elem_faces[e].iter().enumerate() {
                let (dir, side) = (lf / 2, lf % 2);
                let own_sign = if side == 0 { -1.0 } else { 1.0 };
                let face_sign = if is_left { 1.0 } else { -1.0 };
                let flip = match m.faces[fi].right {
                    FaceNeighbor::Interior { flip, .. } => flip,
                    FaceNeighbor::Boundary(_) => false,
                };
                for kr in 0..nf {
                    let k = if is_left { kr } else { right_face_node(np, kr, flip) };
                    let i = face_node_volume_index(np, dim, lf, kr);
                    let own_n = m.metrics[base + i][dir].map(|v| own_sign * v);
                    let own = euler_flux_normal(&nodes[base + i].aux, &own_n);
                    let mut s = own - face_e[fi * nf + k] * face_sign;
                    if needs_grad {
                        s += face_d[fi * nf + k] * face_sign;
                    }
                    res[i] += s * (1.0 / w_end);
                }
            }
            for (i, r) in res.iter_mut().enumerate() {
                *r = *r * (1.0 / m.jac[base + i]);
            }
        });
    }

    /// Evaluates the residual and the discrete entropy balance. Requires the
    /// thermodynamic entropy set.
    pub fn entropy_budget(&mut self, q: &[State5], dq: &mut [State5]) -> Result<EntropyBudget> {
        if self.set != EntropySet::Thermodynamic {
            return Err(Error::Config("entropy budget requires thermodynamic entropy variables".into()));
        }
        self.rhs(q, dq)?;
        let m = &self.mesh;
        let npe = m.nodes_per_elem;
        let nf = m.nodes_per_face();
        let nodes = &self.ws.nodes;
        let mut b = EntropyBudget::default();
        for i in 0..self.num_nodes() {
            let wj = self.wvol[i % npe] * m.jac[i];
            b.rate += wj * dq[i].dot(&nodes[i].w);
            if self.scheme.needs_gradient() {
                b.viscous += wj * self.ws.grad[i].dot(&self.ws.f_visc[i]);
                b.artificial += wj * self.ws.grad[i].dot(&self.ws.f_art[i]);
            }
        }
        let psi = |a: &NodeAux, n: &[f64; 3]| a.rho * (a.u[0] * n[0] + a.u[1] * n[1] + a.u[2] * n[2]);
        for (fi, face) in m.faces.iter().enumerate() {
            for k in 0..nf {
                let (il, ir) = self.face_nodes(fi, k);
                let nds = face.normal[k].map(|v| v * face.ds[k]);
                let fe = self.ws.face_e[fi * nf + k];
                let l = &nodes[il];
                match ir {
                    Some(ir) => {
                        let r = &nodes[ir];
                        b.interior += self.wface[k] * (psi(&r.aux, &nds) - psi(&l.aux, &nds) - (r.w - l.w).dot(&fe));
                    }
                    None => b.boundary += self.wface[k] * (l.w.dot(&fe) - psi(&l.aux, &nds)),
                }
            }
        }
        Ok(b)
    }
}

/// Velocity gradient `∂u_i/∂x_j` from the lifted gradient.
fn velocity_gradient(set: EntropySet, p: &Primitive, g: &Block3x5, gas: &GasModel) -> [[f64; 3]; 3] {
    match set {
        EntropySet::Kinetic => std::array::from_fn(|i| std::array::from_fn(|j| g.0[j][i + 1])),
        EntropySet::Thermodynamic => primitive_gradients_thermo(p, g, gas).0,
    }
}

/// Navier–Stokes flux from kinetic-set gradients (slot 5 holds `∇T`).
fn kinetic_viscous_flux(p: &Primitive, g: &Block3x5, mu: f64, gas: &GasModel) -> Block3x5 {
    let du: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| g.0[j][i + 1]));
    let grad_t = [g.0[0][4], g.0[1][4], g.0[2][4]];
    let tau = entropy::stress_over_mu(&du);
    let energy = kinetic_energy_closure(&p.u, &du, &grad_t, mu, gas);
    Block3x5(std::array::from_fn(|d| {
        State5([0.0, mu * tau[d][0], mu * tau[d][1], mu * tau[d][2], energy[d]])
    }))
}
