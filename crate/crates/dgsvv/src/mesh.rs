//! Block-structured hexahedral/quadrilateral/line meshes, metric terms and
//! face connectivity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::OperatorSet;
use crate::error::{Error, Result};
use crate::svv::apply_along;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    WallFreeSlip,
    WallNoSlip,
    Inflow,
    Outflow,
    Periodic,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::WallFreeSlip => "wall_free_slip",
            BoundaryTag::WallNoSlip => "wall_no_slip",
            BoundaryTag::Inflow => "inflow",
            BoundaryTag::Outflow => "outflow",
            BoundaryTag::Periodic => "periodic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceNeighbor {
    /// Element, local face, and whether the face-node order is reversed (2-D).
    Interior { elem: usize, face: usize, flip: bool },
    Boundary(BoundaryTag),
}

/// A face seen from its left element; the normal points out of `elem`.
#[derive(Clone, Debug)]
pub struct Face {
    pub elem: usize,
    pub face: usize,
    pub right: FaceNeighbor,
    /// Unit outward normal of the left element at each face node.
    pub normal: Vec<[f64; 3]>,
    /// Surface Jacobian `|Ja^d|` at each face node.
    pub ds: Vec<f64>,
}

/// Axis-aligned box description retained for spectral post-processing.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxInfo {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub counts: [usize; 3],
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub dim: usize,
    pub degree: usize,
    pub np: usize,
    pub nodes_per_elem: usize,
    pub num_elements: usize,
    /// Physical node coordinates, element-major.
    pub coords: Vec<[f64; 3]>,
    pub jac: Vec<f64>,
    /// `metrics[node][i]` is the contravariant vector `J a^i`.
    pub metrics: Vec<[[f64; 3]; 3]>,
    pub faces: Vec<Face>,
    /// For each element and local face: (face index, element is the left side).
    pub elem_faces: Vec<Vec<(usize, bool)>>,
    pub volumes: Vec<f64>,
    /// Element extents along each active reference direction (physical length).
    pub sizes: Vec<f64>,
    pub box_info: Option<BoxInfo>,
    /// Structured cell index of each element.
    pub cell_index: Vec<[usize; 3]>,
}

/// Node index inside an element from per-direction indices.
pub fn node_index(np: usize, ijk: [usize; 3]) -> usize {
    ijk[0] + np * (ijk[1] + np * ijk[2])
}

/// Volume node of face node `k` on local face `f = 2 d + side`.
pub fn face_node_volume_index(np: usize, dim: usize, f: usize, k: usize) -> usize {
    let d = f / 2;
    let side = f % 2;
    let mut ijk = [0usize; 3];
    ijk[d] = side * (np - 1);
    let mut rem = k;
    for (e, idx) in ijk.iter_mut().enumerate().take(dim) {
        if e != d {
            *idx = rem % np;
            rem /= np;
        }
    }
    node_index(np, ijk)
}

pub fn nodes_per_face(np: usize, dim: usize) -> usize {
    np.pow(dim as u32 - 1)
}

/// Logical description of a block-structured mesh before geometry is attached.
pub struct StructuredSpec<'a> {
    pub dim: usize,
    pub counts: [usize; 3],
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    pub periodic: [bool; 3],
    /// Whether a cell exists.
    pub active: &'a dyn Fn([usize; 3]) -> bool,
    /// Tag for a non-periodic boundary face: cell, direction, side.
    pub boundary: &'a dyn Fn([usize; 3], usize, usize) -> BoundaryTag,
    /// Smooth map applied to Cartesian node positions.
    pub warp: Option<&'a dyn Fn([f64; 3]) -> [f64; 3]>,
}

impl Mesh {
    pub fn element_nodes(&self, e: usize) -> std::ops::Range<usize> {
        e * self.nodes_per_elem..(e + 1) * self.nodes_per_elem
    }

    pub fn nodes_per_face(&self) -> usize {
        nodes_per_face(self.np, self.dim)
    }

    /// Physical extent of the smallest element direction, divided by
    /// `(N+1)²` — the length scale used for the explicit step limit.
    pub fn effective_spacing(&self, e: usize) -> f64 {
        self.sizes[e] / ((self.np * self.np) as f64)
    }

    pub fn build_structured(spec: &StructuredSpec, ops: &OperatorSet) -> Result<Mesh> {
        let dim = spec.dim;
        if !(1..=3).contains(&dim) {
            return Err(Error::Mesh(format!("unsupported dimension {dim}")));
        }
        let mut counts = spec.counts;
        for d in 0..3 {
            if d >= dim {
                counts[d] = 1;
            } else if counts[d] == 0 || !(spec.hi[d] > spec.lo[d]) {
                return Err(Error::Mesh(format!("invalid extent or count in direction {d}")));
            }
        }
        let np = ops.np();
        let npe = np.pow(dim as u32);

        let mut cell_to_elem = vec![usize::MAX; counts[0] * counts[1] * counts[2]];
        let cell_lin = |c: [usize; 3]| c[0] + counts[0] * (c[1] + counts[1] * c[2]);
        let mut cells = Vec::new();
        for k in 0..counts[2] {
            for j in 0..counts[1] {
                for i in 0..counts[0] {
                    let c = [i, j, k];
                    if (spec.active)(c) {
                        cell_to_elem[cell_lin(c)] = cells.len();
                        cells.push(c);
                    }
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::Mesh("mesh has no elements".into()));
        }
        let ne = cells.len();
        let h: [f64; 3] = std::array::from_fn(|d| {
            if d < dim {
                (spec.hi[d] - spec.lo[d]) / counts[d] as f64
            } else {
                1.0
            }
        });

        // Node coordinates.
        let xi = &ops.rule.nodes;
        let mut coords = Vec::with_capacity(ne * npe);
        for c in &cells {
            for idx in 0..npe {
                let ijk = [idx % np, (idx / np) % np, idx / (np * np)];
                let mut x = [0.0; 3];
                for d in 0..dim {
                    x[d] = spec.lo[d] + h[d] * (c[d] as f64 + 0.5 * (xi[ijk[d]] + 1.0));
                }
                if let Some(w) = spec.warp {
                    x = w(x);
                }
                coords.push(x);
            }
        }

        let (jac, metrics) = if spec.warp.is_some() {
            compute_metrics(&coords, ops, dim, ne)?
        } else {
            // Affine cells: J = Π h_d/2, J a^i = (Π_{d≠i} h_d/2) e_i.
            let half: [f64; 3] = std::array::from_fn(|d| if d < dim { 0.5 * h[d] } else { 1.0 });
            let j = half[0] * half[1] * half[2];
            let m: [[f64; 3]; 3] = std::array::from_fn(|i| {
                let mut v = [0.0; 3];
                v[i] = j / half[i];
                v
            });
            (vec![j; ne * npe], vec![m; ne * npe])
        };

        // Faces.
        let mut faces = Vec::new();
        let mut elem_faces = vec![vec![(usize::MAX, false); 2 * dim]; ne];
        for (e, c) in cells.iter().enumerate() {
            for d in 0..dim {
                for side in 0..2 {
                    let f = 2 * d + side;
                    if elem_faces[e][f].0 != usize::MAX {
                        continue;
                    }
                    let mut nb = *c;
                    let on_edge = if side == 0 { c[d] == 0 } else { c[d] + 1 == counts[d] };
                    let neighbor = if on_edge {
                        if spec.periodic[d] {
                            nb[d] = if side == 0 { counts[d] - 1 } else { 0 };
                            Some(nb)
                        } else {
                            None
                        }
                    } else {
                        nb[d] = if side == 0 { c[d] - 1 } else { c[d] + 1 };
                        Some(nb)
                    };
                    let right = match neighbor.map(|nb| cell_to_elem[cell_lin(nb)]) {
                        Some(re) if re != usize::MAX => FaceNeighbor::Interior { elem: re, face: 2 * d + (1 - side), flip: false },
                        _ => FaceNeighbor::Boundary((spec.boundary)(*c, d, side)),
                    };
                    let fi = faces.len();
                    elem_faces[e][f] = (fi, true);
                    if let FaceNeighbor::Interior { elem, face, .. } = right {
                        elem_faces[elem][face] = (fi, false);
                    }
                    faces.push(face_geometry(e, f, right, &metrics, np, dim));
                }
            }
        }

        let weights = crate::svv::tensor_weights(ops, dim);
        let volumes = (0..ne)
            .map(|e| (0..npe).map(|k| weights[k] * jac[e * npe + k]).sum())
            .collect();
        let sizes = (0..ne)
            .map(|e| element_min_extent(&coords[e * npe..(e + 1) * npe], np, dim))
            .collect();
        let full_box = cells.len() == counts[0] * counts[1] * counts[2] && spec.warp.is_none();
        let box_info = full_box.then(|| BoxInfo { lo: spec.lo, hi: spec.hi, counts });

        Ok(Mesh {
            dim,
            degree: ops.degree(),
            np,
            nodes_per_elem: npe,
            num_elements: ne,
            coords,
            jac,
            metrics,
            faces,
            elem_faces,
            volumes,
            sizes,
            box_info,
            cell_index: cells,
        })
    }

    /// Cartesian box with the same boundary tag on every non-periodic side,
    /// or per-side tags `[x-, x+, y-, y+, z-, z+]`.
    pub fn build_box(
        dim: usize,
        lo: [f64; 3],
        hi: [f64; 3],
        counts: [usize; 3],
        periodic: [bool; 3],
        sides: [BoundaryTag; 6],
        ops: &OperatorSet,
    ) -> Result<Mesh> {
        let active = |_: [usize; 3]| true;
        let boundary = move |_: [usize; 3], d: usize, s: usize| sides[2 * d + s];
        Mesh::build_structured(
            &StructuredSpec { dim, counts, lo, hi, periodic, active: &active, boundary: &boundary, warp: None },
            ops,
        )
    }

    pub fn build_periodic_box(dim: usize, lo: [f64; 3], hi: [f64; 3], counts: [usize; 3], ops: &OperatorSet) -> Result<Mesh> {
        Mesh::build_box(dim, lo, hi, counts, [true; 3], [BoundaryTag::Periodic; 6], ops)
    }

    /// 2-D box whose interior is bent by the displacement
    /// `amplitude·sin(2πx̂)sin(2πŷ)` (unit-scaled coordinates) in both
    /// directions. The boundary stays straight, so the same mesh works with
    /// periodic or wall sides.
    #[allow(clippy::too_many_arguments)]
    pub fn build_curved_quad(
        lo: [f64; 3],
        hi: [f64; 3],
        counts: [usize; 2],
        periodic: [bool; 2],
        sides: [BoundaryTag; 4],
        amplitude: f64,
        ops: &OperatorSet,
    ) -> Result<Mesh> {
        let ext = [hi[0] - lo[0], hi[1] - lo[1]];
        let warp = move |x: [f64; 3]| {
            let s = (2.0 * PI * (x[0] - lo[0]) / ext[0]).sin() * (2.0 * PI * (x[1] - lo[1]) / ext[1]).sin();
            [x[0] + amplitude * ext[0] * s, x[1] + amplitude * ext[1] * s, x[2]]
        };
        let active = |_: [usize; 3]| true;
        let boundary = move |_: [usize; 3], d: usize, s: usize| sides[2 * d + s];
        Mesh::build_structured(
            &StructuredSpec {
                dim: 2,
                counts: [counts[0], counts[1], 1],
                lo,
                hi,
                periodic: [periodic[0], periodic[1], false],
                active: &active,
                boundary: &boundary,
                warp: Some(&warp),
            },
            ops,
        )
    }
}

/// Forward-facing step geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepGeometry {
    pub length: f64,
    pub height: f64,
    pub step_x: f64,
    pub step_height: f64,
}

impl Default for StepGeometry {
    fn default() -> Self {
        StepGeometry { length: 3.0, height: 1.0, step_x: 0.6, step_height: 0.2 }
    }
}

/// L-shaped channel: inflow left, outflow right, free-slip walls elsewhere.
/// Cells are squares of side `target` (adjusted so the step corner lies on
/// a grid line).
pub fn build_step_mesh(geom: &StepGeometry, target: f64, ops: &OperatorSet) -> Result<Mesh> {
    let g = *geom;
    if !(g.step_x > 0.0 && g.step_x < g.length && g.step_height > 0.0 && g.step_height < g.height) {
        return Err(Error::Mesh(format!("step outside domain: {g:?}")));
    }
    if !(target > 0.0) {
        return Err(Error::Mesh("element size must be positive".into()));
    }
    let nx = (g.length / target).round().max(1.0) as usize;
    let ny = (g.height / target).round().max(1.0) as usize;
    let hx = g.length / nx as f64;
    let hy = g.height / ny as f64;
    let step_i = (g.step_x / hx).round() as usize;
    let step_j = (g.step_height / hy).round() as usize;
    if step_i == 0 || step_i >= nx || step_j == 0 || step_j >= ny {
        return Err(Error::Mesh("element size too coarse to resolve the step".into()));
    }
    let active = move |c: [usize; 3]| !(c[0] >= step_i && c[1] < step_j);
    let boundary = move |_: [usize; 3], d: usize, s: usize| match (d, s) {
        (0, 0) => BoundaryTag::Inflow,
        (0, 1) => BoundaryTag::Outflow,
        _ => BoundaryTag::WallFreeSlip,
    };
    // The vertical step face bounds cells on its left from the +x side.
    let boundary = move |c: [usize; 3], d: usize, s: usize| {
        if d == 0 && s == 1 && c[0] + 1 == step_i && c[1] < step_j {
            BoundaryTag::WallFreeSlip
        } else {
            boundary(c, d, s)
        }
    };
    Mesh::build_structured(
        &StructuredSpec {
            dim: 2,
            counts: [nx, ny, 1],
            lo: [0.0; 3],
            hi: [g.length, g.height, 1.0],
            periodic: [false; 3],
            active: &active,
            boundary: &boundary,
            warp: None,
        },
        ops,
    )
}

fn element_min_extent(x: &[[f64; 3]], np: usize, dim: usize) -> f64 {
    let mut m = f64::INFINITY;
    for d in 0..dim {
        let a = [0usize; 3];
        let mut b = [0usize; 3];
        b[d] = np - 1;
        let (pa, pb) = (x[node_index(np, a)], x[node_index(np, b)]);
        let len = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2)).sqrt();
        m = m.min(len);
    }
    m
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Covariant bases from the polynomial interpolant of the node coordinates,
/// contravariant `J a^i` in cross-product form.
pub fn compute_metrics(coords: &[[f64; 3]], ops: &OperatorSet, dim: usize, ne: usize) -> Result<(Vec<f64>, Vec<[[f64; 3]; 3]>)> {
    let np = ops.np();
    let npe = np.pow(dim as u32);
    let dmat: Vec<f64> = (0..np * np).map(|k| ops.d[(k / np, k % np)]).collect();
    let mut jac = vec![0.0; ne * npe];
    let mut metrics = vec![[[0.0; 3]; 3]; ne * npe];
    let mut cov = vec![vec![[0.0; 3]; npe]; 3];
    for e in 0..ne {
        let x = &coords[e * npe..(e + 1) * npe];
        for d in 0..3 {
            if d < dim {
                apply_along(&dmat, np, dim, d, x, &mut cov[d]);
            } else {
                let mut unit = [0.0; 3];
                unit[d] = 1.0;
                cov[d].iter_mut().for_each(|v| *v = unit);
            }
        }
        for k in 0..npe {
            let (a1, a2, a3) = (cov[0][k], cov[1][k], cov[2][k]);
            let m = [cross(a2, a3), cross(a3, a1), cross(a1, a2)];
            let j = a1[0] * m[0][0] + a1[1] * m[0][1] + a1[2] * m[0][2];
            if !(j > 0.0) {
                return Err(Error::Mesh(format!("non-positive Jacobian {j:e} in element {e}")));
            }
            jac[e * npe + k] = j;
            metrics[e * npe + k] = m;
        }
    }
    Ok((jac, metrics))
}

fn face_geometry(e: usize, f: usize, right: FaceNeighbor, metrics: &[[[f64; 3]; 3]], np: usize, dim: usize) -> Face {
    let npe = np.pow(dim as u32);
    let nf = nodes_per_face(np, dim);
    let d = f / 2;
    let sign = if f % 2 == 0 { -1.0 } else { 1.0 };
    let mut normal = Vec::with_capacity(nf);
    let mut ds = Vec::with_capacity(nf);
    for k in 0..nf {
        let v = metrics[e * npe + face_node_volume_index(np, dim, f, k)][d];
        let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        normal.push([sign * v[0] / len, sign * v[1] / len, sign * v[2] / len]);
        ds.push(len);
    }
    Face { elem: e, face: f, right, normal, ds }
}

/// Face node on the right element matching face node `k` of the left.
pub fn right_face_node(np: usize, k: usize, flip: bool) -> usize {
    if flip {
        np - 1 - k
    } else {
        k
    }
}

/// Max over nodes of `|Σ_i ∂_ξi (J a^i)|`: the discrete metric identities.
pub fn metric_identity_residual(mesh: &Mesh, ops: &OperatorSet) -> f64 {
    let np = mesh.np;
    let dim = mesh.dim;
    let npe = mesh.nodes_per_elem;
    let dmat: Vec<f64> = (0..np * np).map(|k| ops.d[(k / np, k % np)]).collect();
    let mut worst = 0.0f64;
    let mut tmp = vec![[0.0; 3]; npe];
    for e in 0..mesh.num_elements {
        let m = &mesh.metrics[e * npe..(e + 1) * npe];
        let mut sum = vec![[0.0; 3]; npe];
        for i in 0..dim {
            let col: Vec<[f64; 3]> = m.iter().map(|v| v[i]).collect();
            apply_along(&dmat, np, dim, i, &col, &mut tmp);
            for (s, t) in sum.iter_mut().zip(&tmp) {
                for c in 0..3 {
                    s[c] += t[c];
                }
            }
        }
        for s in sum {
            worst = worst.max(s[0].abs().max(s[1].abs()).max(s[2].abs()));
        }
    }
    worst
}
