//! Weighted P1 stiffness assembly with constraint elimination.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::field::FemField;
use crate::fem::mesh::{Region, TriMesh, VertexKind};
use crate::fem::sparse::{pcg_from, CgOptions, CgReport, CsrMatrix};
use crate::geometry::{Mat2, MaterialTensor, Vec2};

/// Role of a mesh vertex in a linear system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DofSlot {
    Free(u32),
    Fixed(f64),
    /// Not part of the system; value left at zero.
    Inactive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub slots: Vec<DofSlot>,
    pub n_free: usize,
    /// Constants span the kernel (pure Neumann or periodic problems).
    pub constant_kernel: bool,
}

impl DofMap {
    pub fn from_slots(slots: Vec<DofSlot>, constant_kernel: bool) -> Self {
        let n_free = slots
            .iter()
            .filter_map(|s| match s {
                DofSlot::Free(k) => Some(*k as usize + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        DofMap {
            slots,
            n_free,
            constant_kernel,
        }
    }

    /// Every active vertex free; `active = None` means all vertices.
    pub fn natural(mesh: &TriMesh, active: Option<&[bool]>) -> Self {
        let mut next = 0u32;
        let slots = (0..mesh.n_vertices())
            .map(|v| {
                if active.map_or(true, |a| a[v]) {
                    next += 1;
                    DofSlot::Free(next - 1)
                } else {
                    DofSlot::Inactive
                }
            })
            .collect();
        Self::from_slots(slots, true)
    }

    /// Outer boundary vertices fixed to `g(x)`, the rest free when active.
    pub fn dirichlet(mesh: &TriMesh, active: Option<&[bool]>, g: impl Fn(Vec2) -> f64) -> Self {
        let mut next = 0u32;
        let slots = (0..mesh.n_vertices())
            .map(|v| {
                if mesh.vertex_kind[v] == VertexKind::OuterBoundary {
                    DofSlot::Fixed(g(mesh.vertices[v]))
                } else if active.map_or(true, |a| a[v]) {
                    next += 1;
                    DofSlot::Free(next - 1)
                } else {
                    DofSlot::Inactive
                }
            })
            .collect();
        Self::from_slots(slots, false)
    }

    /// Periodic identification through the mesh's representatives.
    pub fn periodic(mesh: &TriMesh, active: Option<&[bool]>) -> Result<Self> {
        let rep = mesh
            .periodic_rep
            .as_ref()
            .ok_or_else(|| Error::AssemblyError("mesh carries no periodic identification".into()))?;
        let mut index = vec![u32::MAX; mesh.n_vertices()];
        let mut next = 0u32;
        for v in 0..mesh.n_vertices() {
            let r = rep[v] as usize;
            if active.map_or(true, |a| a[r]) && index[r] == u32::MAX {
                index[r] = next;
                next += 1;
            }
        }
        let slots = (0..mesh.n_vertices())
            .map(|v| {
                let k = index[rep[v] as usize];
                if k == u32::MAX {
                    DofSlot::Inactive
                } else {
                    DofSlot::Free(k)
                }
            })
            .collect();
        Ok(Self::from_slots(slots, true))
    }

    /// Free vertices of the listed kinds, everything else fixed to the
    /// values of `field`.
    pub fn free_where(values: &[f64], free: impl Fn(usize) -> bool) -> Self {
        let mut next = 0u32;
        let slots = values
            .iter()
            .enumerate()
            .map(|(v, &x)| {
                if free(v) {
                    next += 1;
                    DofSlot::Free(next - 1)
                } else {
                    DofSlot::Fixed(x)
                }
            })
            .collect();
        Self::from_slots(slots, false)
    }
}

/// Assembled constrained system `K x = b` on the free unknowns.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    /// Per-vertex weights of the mean-zero normalization applied after the
    /// solve (lumped areas, so the weighted sum is the exact integral).
    pub mean_weights: Option<Vec<f64>>,
}

/// Per-triangle coefficient `[Λ_δ]² A(x/ε)` evaluated at centroids; the
/// hole label of the triangle decides `Λ_δ`.
pub fn element_coefficients(mesh: &TriMesh, material: &MaterialTensor, epsilon: f64, delta: f64) -> Vec<Mat2> {
    (0..mesh.n_triangles())
        .map(|t| {
            let a = material.eval(mesh.centroid(t) / epsilon);
            match mesh.regions[t] {
                Region::Matrix => a,
                Region::Hole(_) => a * (delta * delta),
            }
        })
        .collect()
}

/// Constant coefficient on every triangle.
pub fn constant_coefficients(mesh: &TriMesh, a: Mat2) -> Vec<Mat2> {
    vec![a; mesh.n_triangles()]
}

#[inline]
fn element_matrix(mesh: &TriMesh, t: usize, a: &Mat2) -> [[f64; 3]; 3] {
    let g = mesh.hat_gradients(t);
    let area = mesh.area(t);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        let ag = a * g[i];
        for j in i..3 {
            let v = area * g[j].dot(&ag);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

fn is_zero(a: &Mat2) -> bool {
    a.iter().all(|&x| x == 0.0)
}

/// Assembles `∫ A ∇u·∇ψ = ⟨load, ψ⟩` with the constraints of `dofs`.
/// `load` is a nodal load vector over all mesh vertices.
pub fn assemble(mesh: &TriMesh, coeff: &[Mat2], load: &[f64], dofs: DofMap) -> Result<LinearSystem> {
    if coeff.len() != mesh.n_triangles() || load.len() != mesh.n_vertices() || dofs.slots.len() != mesh.n_vertices() {
        return Err(Error::MeshMismatch("coefficient, load or dof map size".into()));
    }
    if let Some(t) = coeff.iter().position(|a| a.iter().any(|x| !x.is_finite())) {
        return Err(Error::AssemblyError(format!("non-finite coefficient on triangle {t}")));
    }
    let n = dofs.n_free;
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if is_zero(&coeff[t]) {
            continue;
        }
        for &a in tri {
            if let DofSlot::Free(i) = dofs.slots[a as usize] {
                for &b in tri {
                    if let DofSlot::Free(j) = dofs.slots[b as usize] {
                        rows[i as usize].push(j);
                    }
                }
            }
        }
    }
    let mut matrix = CsrMatrix::from_pattern(rows);
    let mut rhs = vec![0.0; n];
    for (v, slot) in dofs.slots.iter().enumerate() {
        if let DofSlot::Free(i) = slot {
            rhs[*i as usize] += load[v];
        }
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if is_zero(&coeff[t]) {
            continue;
        }
        let k = element_matrix(mesh, t, &coeff[t]);
        for (a, &va) in tri.iter().enumerate() {
            let DofSlot::Free(i) = dofs.slots[va as usize] else { continue };
            for (b, &vb) in tri.iter().enumerate() {
                match dofs.slots[vb as usize] {
                    DofSlot::Free(j) => matrix.add(i as usize, j as usize, k[a][b]),
                    DofSlot::Fixed(g) => rhs[i as usize] -= k[a][b] * g,
                    DofSlot::Inactive => {}
                }
            }
        }
    }
    Ok(LinearSystem {
        matrix,
        rhs,
        dofs,
        mean_weights: None,
    })
}

/// `K u` over all vertices, without constraints.
pub fn apply_stiffness(mesh: &TriMesh, coeff: &[Mat2], values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if is_zero(&coeff[t]) {
            continue;
        }
        let k = element_matrix(mesh, t, &coeff[t]);
        for a in 0..3 {
            let mut s = 0.0;
            for b in 0..3 {
                s += k[a][b] * values[tri[b] as usize];
            }
            out[tri[a] as usize] += s;
        }
    }
    out
}

/// `∫ f φ_i` by the three-point edge-midpoint rule on selected triangles.
pub fn source_load(mesh: &TriMesh, f: impl Fn(Vec2) -> f64, select: impl Fn(usize) -> bool) -> Vec<f64> {
    let mut load = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !select(t) {
            continue;
        }
        let p = mesh.corners(t);
        // value at the midpoint opposite each corner
        let fm = [f((p[1] + p[2]) * 0.5), f((p[2] + p[0]) * 0.5), f((p[0] + p[1]) * 0.5)];
        let w = mesh.area(t) / 6.0;
        for a in 0..3 {
            load[tri[a] as usize] += w * (fm[0] + fm[1] + fm[2] - fm[a]);
        }
    }
    load
}

/// `∫_{∂Ω} g φ_i dσ` with two-point Gauss quadrature on each boundary edge.
pub fn boundary_load(mesh: &TriMesh, g: impl Fn(Vec2) -> f64) -> Vec<f64> {
    let mut load = vec![0.0; mesh.n_vertices()];
    let s = 0.5 / 3f64.sqrt();
    for &[a, b] in &mesh.boundary_edges {
        let pa = mesh.vertices[a as usize];
        let pb = mesh.vertices[b as usize];
        let len = (pb - pa).norm();
        for t in [0.5 - s, 0.5 + s] {
            let gv = g(pa + (pb - pa) * t) * len * 0.5;
            load[a as usize] += gv * (1.0 - t);
            load[b as usize] += gv * t;
        }
    }
    load
}

/// `-∫ (A e) · ∇φ_i`, the right hand side of a cell problem in direction `e`.
pub fn divergence_load(mesh: &TriMesh, coeff: &[Mat2], e: Vec2) -> Vec<f64> {
    let mut load = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let ae = coeff[t] * e;
        if ae.x == 0.0 && ae.y == 0.0 {
            continue;
        }
        let g = mesh.hat_gradients(t);
        let area = mesh.area(t);
        for a in 0..3 {
            load[tri[a] as usize] -= area * ae.dot(&g[a]);
        }
    }
    load
}

/// Solves a constrained system and expands the result to all vertices.
pub fn solve(mesh: &Arc<TriMesh>, system: &LinearSystem, tol: f64) -> Result<(FemField, CgReport)> {
    let opts = CgOptions {
        tol,
        max_iter: None,
        constant_kernel: system.dofs.constant_kernel,
    };
    // start from the mean of the Dirichlet data, which is exact for constants
    let fixed: Vec<f64> = system
        .dofs
        .slots
        .iter()
        .filter_map(|s| match s {
            DofSlot::Fixed(g) => Some(*g),
            _ => None,
        })
        .collect();
    let start = (!fixed.is_empty()).then(|| vec![fixed.iter().sum::<f64>() / fixed.len() as f64; system.dofs.n_free]);
    let (x, report) = pcg_from(&system.matrix, &system.rhs, start.as_deref(), opts)?;
    let mut values: Vec<f64> = system
        .dofs
        .slots
        .iter()
        .map(|s| match s {
            DofSlot::Free(k) => x[*k as usize],
            DofSlot::Fixed(g) => *g,
            DofSlot::Inactive => 0.0,
        })
        .collect();
    if let Some(w) = &system.mean_weights {
        let total: f64 = w.iter().sum();
        let mean = values.iter().zip(w).map(|(u, w)| u * w).sum::<f64>() / total;
        for (v, slot) in values.iter_mut().zip(&system.dofs.slots) {
            if matches!(slot, DofSlot::Free(_)) {
                *v -= mean;
            }
        }
    }
    Ok((FemField::new(mesh.clone(), values)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesher::mesh_rectangle;
    use crate::geometry::Rect;

    #[test]
    fn patch_test_reproduces_affine() {
        let mesh = Arc::new(mesh_rectangle(Rect::unit(), 1.0 / 8.0).unwrap());
        let coeff = constant_coefficients(&mesh, Mat2::new(2.0, 0.5, 0.5, 1.0));
        let load = vec![0.0; mesh.n_vertices()];
        let dofs = DofMap::dirichlet(&mesh, None, |p| 3.0 * p.x - p.y + 1.0);
        let sys = assemble(&mesh, &coeff, &load, dofs).unwrap();
        assert_eq!(sys.matrix.max_asymmetry(), 0.0);
        let (u, _) = solve(&mesh, &sys, 1e-12).unwrap();
        for (v, p) in mesh.vertices.iter().enumerate() {
            assert!((u.values[v] - (3.0 * p.x - p.y + 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn constants_span_neumann_kernel() {
        let mesh = mesh_rectangle(Rect::unit(), 0.25).unwrap();
        let coeff = constant_coefficients(&mesh, Mat2::identity());
        let k = apply_stiffness(&mesh, &coeff, &vec![1.0; mesh.n_vertices()]);
        assert!(k.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn source_load_integrates_linear_exactly() {
        let mesh = mesh_rectangle(Rect::unit(), 0.2).unwrap();
        let load = source_load(&mesh, |p| p.x + 2.0 * p.y, |_| true);
        // sum of loads = ∫ f = 1/2 + 1
        assert!((load.iter().sum::<f64>() - 1.5).abs() < 1e-13);
        let bl = boundary_load(&mesh, |_| 1.0);
        assert!((bl.iter().sum::<f64>() - 4.0).abs() < 1e-13);
    }
}
