//! Boundary quantities on `∂Ω`: variational conormal flux and tangential
//! derivatives of traces.

use std::collections::BTreeMap;

use crate::fem::assembly::apply_stiffness;
use crate::fem::field::FemField;
use crate::fem::mesh::{TriMesh, VertexKind};
use crate::fem::sparse::{pcg, CgOptions, CsrMatrix};
use crate::geometry::{vec2, Mat2, Vec2};

/// Function on the outer boundary, linear on each boundary edge and possibly
/// discontinuous at corners.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFunction {
    pub edges: Vec<[u32; 2]>,
    /// Values at the two ends of each edge.
    pub ends: Vec<[f64; 2]>,
}

impl BoundaryFunction {
    pub fn edge_length(&self, mesh: &TriMesh, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        (mesh.vertices[b as usize] - mesh.vertices[a as usize]).norm()
    }

    pub fn midpoint(&self, mesh: &TriMesh, e: usize) -> Vec2 {
        let [a, b] = self.edges[e];
        (mesh.vertices[a as usize] + mesh.vertices[b as usize]) * 0.5
    }

    pub fn l2_norm(&self, mesh: &TriMesh) -> f64 {
        let mut s = 0.0;
        for (e, &[ga, gb]) in self.ends.iter().enumerate() {
            s += self.edge_length(mesh, e) / 3.0 * (ga * ga + ga * gb + gb * gb);
        }
        s.sqrt()
    }

    pub fn integral(&self, mesh: &TriMesh) -> f64 {
        self.ends
            .iter()
            .enumerate()
            .map(|(e, &[ga, gb])| self.edge_length(mesh, e) * 0.5 * (ga + gb))
            .sum()
    }

    /// Mean value on each edge.
    pub fn edge_means(&self) -> Vec<f64> {
        self.ends.iter().map(|[a, b]| 0.5 * (a + b)).collect()
    }

    /// `‖self - g‖_{L²(∂Ω)}` with Simpson's rule per edge.
    pub fn l2_distance(&self, mesh: &TriMesh, g: impl Fn(Vec2) -> f64) -> f64 {
        let mut s = 0.0;
        for (e, &[ga, gb]) in self.ends.iter().enumerate() {
            let [a, b] = self.edges[e];
            let pa = mesh.vertices[a as usize];
            let pb = mesh.vertices[b as usize];
            let len = (pb - pa).norm();
            let d0 = ga - g(pa);
            let d1 = 0.5 * (ga + gb) - g((pa + pb) * 0.5);
            let d2 = gb - g(pb);
            s += len / 6.0 * (d0 * d0 + 4.0 * d1 * d1 + d2 * d2);
        }
        s.sqrt()
    }
}

/// Outward unit normal of a boundary edge oriented with the mesh on its left.
pub fn outward_normal(mesh: &TriMesh, [a, b]: [u32; 2]) -> Vec2 {
    let d = mesh.vertices[b as usize] - mesh.vertices[a as usize];
    vec2(d.y, -d.x) / d.norm()
}

fn face_key(n: Vec2) -> (i64, i64) {
    ((n.x * 1e8).round() as i64, (n.y * 1e8).round() as i64)
}

/// Conormal derivative `n·A∇u` on `∂Ω` by variational recovery.
///
/// The nodal fluxes are the residuals `a(u, φ_i) - (f, φ_i)` of the boundary
/// hat functions. Corner residuals are split between the two faces around
/// the direct element fluxes, and each face's nodal fluxes are turned into a
/// linear density by a one dimensional mass solve. `load` is the nodal load
/// of any interior source (zeros for homogeneous problems).
pub fn conormal_flux(field: &FemField, coeff: &[Mat2], load: &[f64]) -> BoundaryFunction {
    let mesh = &field.mesh;
    let mut residual = apply_stiffness(mesh, coeff, &field.values);
    for (r, l) in residual.iter_mut().zip(load) {
        *r -= l;
    }
    check_interior_residual(mesh, &residual, load);

    let edges = mesh.boundary_edges.clone();
    // owning triangle of each boundary edge
    let mut owner: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            owner.insert((tri[k], tri[(k + 1) % 3]), t);
        }
    }
    let direct: Vec<f64> = edges
        .iter()
        .map(|&[a, b]| {
            let t = owner[&(a, b)];
            let n = outward_normal(mesh, [a, b]);
            let len = (mesh.vertices[b as usize] - mesh.vertices[a as usize]).norm();
            n.dot(&(coeff[t] * field.gradient(t))) * len
        })
        .collect();

    // group edges into faces of constant normal
    let mut faces: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (e, &edge) in edges.iter().enumerate() {
        faces.entry(face_key(outward_normal(mesh, edge))).or_default().push(e);
    }
    let mut vertex_faces: BTreeMap<u32, Vec<((i64, i64), usize)>> = BTreeMap::new();
    for (key, es) in &faces {
        for &e in es {
            for v in edges[e] {
                vertex_faces.entry(v).or_default().push((*key, e));
            }
        }
    }

    let mut ends = vec![[0.0; 2]; edges.len()];
    for (key, es) in &faces {
        // local numbering of the face's vertices
        let mut local: BTreeMap<u32, usize> = BTreeMap::new();
        for &e in es {
            for v in edges[e] {
                let k = local.len();
                local.entry(v).or_insert(k);
            }
        }
        let n = local.len();
        let mut rhs = vec![0.0; n];
        for (&v, &i) in &local {
            let around = &vertex_faces[&v];
            let mine: f64 = around.iter().filter(|(k, _)| k == key).map(|(_, e)| 0.5 * direct[*e]).sum();
            let all: f64 = around.iter().map(|(_, e)| 0.5 * direct[*e]).sum();
            let nfaces = {
                let mut ks: Vec<_> = around.iter().map(|(k, _)| *k).collect();
                ks.sort();
                ks.dedup();
                ks.len()
            };
            rhs[i] = if nfaces == 1 {
                residual[v as usize]
            } else {
                mine + (residual[v as usize] - all) / nfaces as f64
            };
        }
        let mut trip = Vec::new();
        for &e in es {
            let [a, b] = edges[e];
            let len = (mesh.vertices[b as usize] - mesh.vertices[a as usize]).norm();
            let (i, j) = (local[&a], local[&b]);
            trip.push((i, i, len / 3.0));
            trip.push((j, j, len / 3.0));
            trip.push((i, j, len / 6.0));
            trip.push((j, i, len / 6.0));
        }
        let m = CsrMatrix::from_triplets(n, &trip);
        let opts = CgOptions {
            tol: 1e-14,
            ..Default::default()
        };
        let density = pcg(&m, &rhs, opts).map(|(x, _)| x).unwrap_or(rhs);
        for &e in es {
            let [a, b] = edges[e];
            ends[e] = [density[local[&a]], density[local[&b]]];
        }
    }
    BoundaryFunction { edges, ends }
}

fn check_interior_residual(mesh: &TriMesh, residual: &[f64], load: &[f64]) {
    let mut interior = 0.0;
    let mut scale = 0.0;
    for (v, r) in residual.iter().enumerate() {
        if mesh.vertex_kind[v] == VertexKind::OuterBoundary {
            scale += r * r;
        } else {
            interior += r * r;
        }
    }
    scale += load.iter().map(|l| l * l).sum::<f64>();
    if scale > 0.0 && (interior / scale).sqrt() > 1e-6 {
        log::warn!(
            "NotASolution: interior residual {:.3e} relative to boundary flux",
            (interior / scale).sqrt()
        );
    }
}

/// Arclength derivative of the trace on each boundary edge.
pub fn tangential_gradient(field: &FemField) -> BoundaryFunction {
    let mesh = &field.mesh;
    let edges = mesh.boundary_edges.clone();
    let ends = edges
        .iter()
        .map(|&[a, b]| {
            let len = (mesh.vertices[b as usize] - mesh.vertices[a as usize]).norm();
            let g = (field.values[b as usize] - field.values[a as usize]) / len;
            [g, g]
        })
        .collect();
    BoundaryFunction { edges, ends }
}

/// Trace of a field on the boundary edges.
pub fn boundary_trace(field: &FemField) -> BoundaryFunction {
    let edges = field.mesh.boundary_edges.clone();
    let ends = edges
        .iter()
        .map(|&[a, b]| [field.values[a as usize], field.values[b as usize]])
        .collect();
    BoundaryFunction { edges, ends }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::constant_coefficients;
    use crate::fem::mesher::mesh_rectangle;
    use crate::geometry::Rect;
    use std::sync::Arc;

    #[test]
    fn affine_flux_and_tangential_derivative() {
        let mesh = Arc::new(mesh_rectangle(Rect::unit(), 0.125).unwrap());
        let u = FemField::interpolate(mesh.clone(), |p| p.x);
        let coeff = constant_coefficients(&mesh, Mat2::identity());
        let zero = vec![0.0; mesh.n_vertices()];
        let flux = conormal_flux(&u, &coeff, &zero);
        for (e, [ga, gb]) in flux.ends.iter().enumerate() {
            let n = outward_normal(&mesh, flux.edges[e]);
            assert!((ga - n.x).abs() < 1e-8 && (gb - n.x).abs() < 1e-8, "edge {e}: {ga} {gb} vs {}", n.x);
        }
        assert!(flux.integral(&mesh).abs() < 1e-12);

        let tg = tangential_gradient(&u);
        for (e, [g, _]) in tg.ends.iter().enumerate() {
            let n = outward_normal(&mesh, tg.edges[e]);
            // tangent is n rotated counter-clockwise
            let t = vec2(-n.y, n.x);
            assert!((g - t.x).abs() < 1e-12);
        }
        assert!((flux.l2_norm(&mesh) - 2f64.sqrt()).abs() < 1e-8);
        assert!((tg.l2_norm(&mesh) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_trace_has_no_tangential_derivative() {
        let mesh = Arc::new(mesh_rectangle(Rect::unit(), 0.25).unwrap());
        let u = FemField::interpolate(mesh, |_| 3.0);
        assert!(tangential_gradient(&u).ends.iter().all(|[a, b]| *a == 0.0 && *b == 0.0));
    }
}
