//! Extension of a field from the matrix phase into the holes by solving the
//! Dirichlet problem for `div(A(x/ε)∇u) = 0` in each hole.

use crate::error::Result;
use crate::fem::assembly::{assemble, solve, DofMap};
use crate::fem::field::FemField;
use crate::fem::mesh::{Region, VertexKind};
use crate::geometry::{Mat2, MaterialTensor};

/// Replaces hole-interior values by the `A`-harmonic extension of the trace
/// on the hole boundaries. Values elsewhere are untouched.
pub fn extend_into_holes(field: &FemField, material: &MaterialTensor, epsilon: f64) -> Result<FemField> {
    let mesh = &field.mesh;
    let coeff: Vec<Mat2> = (0..mesh.n_triangles())
        .map(|t| match mesh.regions[t] {
            Region::Matrix => Mat2::zeros(),
            Region::Hole(_) => material.eval(mesh.centroid(t) / epsilon),
        })
        .collect();
    extend_with(field, &coeff)
}

/// Same as [`extend_into_holes`] with explicit per-triangle coefficients;
/// only hole triangles are used.
pub fn extend_with(field: &FemField, coeff: &[Mat2]) -> Result<FemField> {
    let mesh = &field.mesh;
    let hole_coeff: Vec<Mat2> = coeff
        .iter()
        .zip(&mesh.regions)
        .map(|(a, r)| if *r == Region::Matrix { Mat2::zeros() } else { *a })
        .collect();
    let dofs = DofMap::free_where(&field.values, |v| mesh.vertex_kind[v] == VertexKind::HoleInterior);
    if dofs.n_free == 0 {
        return Ok(field.clone());
    }
    let load = vec![0.0; mesh.n_vertices()];
    let system = assemble(mesh, &hole_coeff, &load, dofs)?;
    let (out, _) = solve(mesh, &system, 1e-12)?;
    Ok(out)
}

/// Largest ratio over holes of `‖∇u‖` in the hole to `‖∇u‖` on the matrix
/// triangles within `margin` of the hole's bounding box.
pub fn extension_energy_ratio(field: &FemField, margin: f64) -> f64 {
    let mesh = &field.mesh;
    let nh = mesh.n_holes();
    if nh == 0 {
        return 0.0;
    }
    let mut lo = vec![crate::geometry::vec2(f64::INFINITY, f64::INFINITY); nh];
    let mut hi = vec![crate::geometry::vec2(f64::NEG_INFINITY, f64::NEG_INFINITY); nh];
    let mut inner = vec![0.0f64; nh];
    for t in 0..mesh.n_triangles() {
        if let Region::Hole(k) = mesh.regions[t] {
            let k = k as usize;
            for p in mesh.corners(t) {
                lo[k] = lo[k].inf(&p);
                hi[k] = hi[k].sup(&p);
            }
            inner[k] += mesh.area(t) * field.gradient(t).norm_squared();
        }
    }
    let mut outer = vec![0.0; nh];
    for t in 0..mesh.n_triangles() {
        if mesh.regions[t] != Region::Matrix {
            continue;
        }
        let c = mesh.centroid(t);
        let e = mesh.area(t) * field.gradient(t).norm_squared();
        for k in 0..nh {
            if c.x > lo[k].x - margin && c.x < hi[k].x + margin && c.y > lo[k].y - margin && c.y < hi[k].y + margin {
                outer[k] += e;
            }
        }
    }
    (0..nh)
        .filter(|&k| outer[k] > 0.0)
        .map(|k| (inner[k] / outer[k]).sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesher::{mesh_domain, mesh_unit_cell};
    use crate::geometry::{build_perforated_domain, CellGeometry, OmegaSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn affine_fields_are_reproduced() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let d = build_perforated_domain(4, &cell, OmegaSpec::UnitSquare).unwrap();
        let mesh = Arc::new(mesh_domain(&d, 1.0 / 32.0).unwrap());
        let exact: Vec<f64> = mesh.vertices.iter().map(|p| 1.5 * p.x - 0.5 * p.y + 2.0).collect();
        let mut garbled = exact.clone();
        for (v, x) in garbled.iter_mut().enumerate() {
            if mesh.vertex_kind[v] == VertexKind::HoleInterior {
                *x = 100.0;
            }
        }
        let f = FemField::new(mesh.clone(), garbled).unwrap();
        let ext = extend_into_holes(&f, &MaterialTensor::identity(), d.epsilon).unwrap();
        for (a, b) in ext.values.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_trace_extends_by_zero() {
        let cell = CellGeometry::centered_disk(0.3, 0.2).unwrap();
        let mesh = Arc::new(mesh_unit_cell(&cell, 0.05, true).unwrap());
        let values: Vec<f64> = (0..mesh.n_vertices())
            .map(|v| if mesh.vertex_kind[v] == VertexKind::HoleInterior { 7.0 } else { 0.0 })
            .collect();
        let ext = extend_into_holes(&FemField::new(mesh, values).unwrap(), &MaterialTensor::identity(), 1.0).unwrap();
        assert!(ext.max_abs() < 1e-14);
    }

    #[test]
    fn discrete_maximum_principle() {
        let cell = CellGeometry::centered_disk(0.3, 0.2).unwrap();
        let mesh = Arc::new(mesh_unit_cell(&cell, 0.04, true).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let values: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ext = extend_into_holes(&FemField::new(mesh.clone(), values).unwrap(), &MaterialTensor::identity(), 1.0).unwrap();
        let mut bmax = f64::NEG_INFINITY;
        let mut bmin = f64::INFINITY;
        let mut imax = f64::NEG_INFINITY;
        let mut imin = f64::INFINITY;
        for v in 0..mesh.n_vertices() {
            match mesh.vertex_kind[v] {
                VertexKind::HoleBoundary => {
                    bmax = bmax.max(ext.values[v]);
                    bmin = bmin.min(ext.values[v]);
                }
                VertexKind::HoleInterior => {
                    imax = imax.max(ext.values[v]);
                    imin = imin.min(ext.values[v]);
                }
                _ => {}
            }
        }
        assert!(imax <= bmax + 1e-12 && imin >= bmin - 1e-12);
    }
}
