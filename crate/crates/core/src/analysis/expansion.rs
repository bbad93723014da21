//! Homogenized solutions and the two-scale expansion error
//! `w = u − v − ε χ(x/ε) S_ε(η_ε ∇v)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::smoothing::{CutoffFunction, MollifierKernel};
use crate::bvp::BvpSolution;
use crate::cell::CorrectorSet;
use crate::error::{Error, Result};
use crate::fem::assembly::{assemble, constant_coefficients, solve, DofMap};
use crate::fem::field::{region_norm, FemField, NormKind, Weight};
use crate::fem::flux::tangential_gradient;
use crate::fem::locate::PointLocator;
use crate::fem::mesh::TriMesh;
use crate::fem::mesher::mesh_rectangle;
use crate::geometry::{reduce_to_cell, Mat2, Rect, Vec2};

/// `v` with `div(Â∇v) = 0` in `Ω`, `v = f` on `∂Ω`, on a structured mesh.
pub fn homogenized_solution(omega: Rect, a_hat: &Mat2, f: &dyn Fn(Vec2) -> f64, h: f64) -> Result<FemField> {
    let (lo, _) = crate::geometry::sym_eigenvalues(&Mat2::new(
        a_hat[(0, 0)],
        0.5 * (a_hat[(0, 1)] + a_hat[(1, 0)]),
        0.5 * (a_hat[(0, 1)] + a_hat[(1, 0)]),
        a_hat[(1, 1)],
    ));
    if !(lo > 0.0) {
        return Err(Error::InvalidInput(format!("homogenized tensor is not elliptic (lambda_min = {lo})")));
    }
    let mesh = Arc::new(mesh_rectangle(omega, h)?);
    let coeff = constant_coefficients(&mesh, *a_hat);
    let dofs = DofMap::dirichlet(&mesh, None, f);
    let system = assemble(&mesh, &coeff, &vec![0.0; mesh.n_vertices()], dofs)?;
    Ok(solve(&mesh, &system, crate::bvp::BVP_TOL)?.0)
}

/// A field on one mesh evaluated at arbitrary points of another, with its
/// nodal gradient lift.
pub struct SampledField {
    field: FemField,
    locator: PointLocator,
    grad_x: Vec<f64>,
    grad_y: Vec<f64>,
}

impl SampledField {
    pub fn new(field: FemField) -> Self {
        let locator = PointLocator::new(&field.mesh);
        let g = field.nodal_gradient();
        SampledField {
            grad_x: g.iter().map(|v| v.x).collect(),
            grad_y: g.iter().map(|v| v.y).collect(),
            field,
            locator,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.field.mesh
    }

    pub fn value(&self, p: Vec2) -> Option<f64> {
        self.locator.interpolate(&self.field.mesh, &self.field.values, p)
    }

    /// Nodal-averaged gradient interpolated at `p`.
    pub fn gradient(&self, p: Vec2) -> Option<Vec2> {
        let (t, lam) = self.locator.locate(&self.field.mesh, p)?;
        let tri = self.field.mesh.triangles[t];
        let mut g = Vec2::zeros();
        for k in 0..3 {
            let v = tri[k] as usize;
            g.x += lam[k] * self.grad_x[v];
            g.y += lam[k] * self.grad_y[v];
        }
        Some(g)
    }
}

/// Correctors evaluated at `x/ε mod 1`.
fn corrector_values(u_mesh: &TriMesh, correctors: &CorrectorSet, epsilon: f64) -> Result<[Vec<f64>; 2]> {
    // tiled meshes whose cell mesh is the corrector mesh read values directly
    if let Some(tiling) = &u_mesh.tiling {
        let same = Arc::ptr_eq(&tiling.cell_mesh, &correctors.mesh)
            || tiling.cell_mesh.fingerprint() == correctors.mesh.fingerprint();
        if same && (tiling.epsilon - epsilon).abs() <= 1e-12 * epsilon {
            return Ok([0, 1].map(|j| {
                tiling.canonical.iter().map(|&(_, _, r)| correctors.chi[j].values[r as usize]).collect()
            }));
        }
    }
    let locator = PointLocator::new(&correctors.mesh);
    let mut out = [Vec::with_capacity(u_mesh.n_vertices()), Vec::with_capacity(u_mesh.n_vertices())];
    for p in &u_mesh.vertices {
        let y = reduce_to_cell(p / epsilon);
        let (t, lam) = locator
            .locate(&correctors.mesh, y)
            .ok_or_else(|| Error::MeshMismatch(format!("cell point {y:?} not covered by the corrector mesh")))?;
        let tri = correctors.mesh.triangles[t];
        for j in 0..2 {
            out[j].push((0..3).map(|k| lam[k] * correctors.chi[j].values[tri[k] as usize]).sum());
        }
    }
    Ok(out)
}

/// Nodal `w_{ε,δ}` on the mesh of `u`.
pub fn two_scale_expansion(
    u: &BvpSolution,
    omega: &Rect,
    v: &SampledField,
    correctors: &CorrectorSet,
    cutoff: &CutoffFunction,
    kernel: &MollifierKernel,
) -> Result<FemField> {
    if (correctors.delta - u.delta).abs() > 1e-12 {
        return Err(Error::MeshMismatch(format!(
            "correctors for delta = {} used with a solution at delta = {}",
            correctors.delta, u.delta
        )));
    }
    let eps = u.epsilon;
    let mesh = &u.field.mesh;
    let chi = corrector_values(mesh, correctors, eps)?;
    let reach = 0.5 * eps;
    let mut values = Vec::with_capacity(mesh.n_vertices());
    for (k, p) in mesh.vertices.iter().enumerate() {
        let vp = v
            .value(*p)
            .ok_or_else(|| Error::MeshMismatch(format!("point {p:?} outside the homogenized mesh")))?;
        let mut w = u.field.values[k] - vp;
        // the smoothed field vanishes where η does on the whole kernel support
        if omega.dist_to_boundary(*p) + reach > cutoff.zero_width {
            let s = kernel.apply_vec(*p, eps, |q| {
                let eta = cutoff.eval(omega, q);
                if eta == 0.0 {
                    Vec2::zeros()
                } else {
                    v.gradient(q).unwrap_or_else(Vec2::zeros) * eta
                }
            });
            w -= eps * (chi[0][k] * s.x + chi[1][k] * s.y);
        }
        values.push(w);
    }
    FemField::new(mesh.clone(), values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub epsilon: f64,
    pub delta: f64,
    /// `‖Λ^ε_δ ∇w‖_{L²(Ω)}`.
    pub weighted_gradient: f64,
    /// `‖∇w‖_{L²(Ω^ε)}`.
    pub perforated_gradient: f64,
    pub l2: f64,
    /// `‖∇_tan f‖_{L²(∂Ω)}`.
    pub tangential_data: f64,
    /// `‖∇u‖_{L²(Ω)}`.
    pub solution_gradient: f64,
    /// `ε^{1/4} ‖∇_tan f‖^{1/2} (‖∇_tan f‖^{1/2} + ‖∇u‖^{1/2})`.
    pub bound: f64,
    /// `weighted_gradient / bound`.
    pub ratio: f64,
}

pub fn expansion_error(w: &FemField, u: &BvpSolution) -> Result<ExpansionReport> {
    let mesh = &w.mesh;
    let weighted_gradient = region_norm(w, |_| true, Weight::Lambda(u.delta), NormKind::H1Semi)?;
    let perforated_gradient = region_norm(w, |t| mesh.is_matrix(t), Weight::None, NormKind::H1Semi)?;
    let l2 = region_norm(w, |_| true, Weight::None, NormKind::L2)?;
    let tangential_data = tangential_gradient(&u.field).l2_norm(&u.field.mesh);
    let solution_gradient = u.energy.gradient;
    let bound = u.epsilon.powf(0.25) * tangential_data.sqrt() * (tangential_data.sqrt() + solution_gradient.sqrt());
    Ok(ExpansionReport {
        epsilon: u.epsilon,
        delta: u.delta,
        weighted_gradient,
        perforated_gradient,
        l2,
        tangential_data,
        solution_gradient,
        bound,
        ratio: if bound > 0.0 { weighted_gradient / bound } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::solve_dirichlet;
    use crate::cell::{solve_cell, CorrectorSet, Normalization};
    use crate::fem::mesher::mesh_domain;
    use crate::geometry::{build_perforated_domain, CellGeometry, MaterialTensor, OmegaSpec};

    #[test]
    fn homogenized_solution_reproduces_affine_and_constant_data() {
        let v = homogenized_solution(Rect::unit(), &Mat2::identity(), &|p| p.x, 1.0 / 16.0).unwrap();
        for (k, p) in v.mesh.vertices.iter().enumerate() {
            assert!((v.values[k] - p.x).abs() < 1e-10);
        }
        let a = Mat2::new(1.6, 0.0, 0.0, 2.5);
        let v = homogenized_solution(Rect::unit(), &a, &|_| 1.0, 1.0 / 16.0).unwrap();
        assert!(v.values.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn anisotropic_solution_converges_under_refinement() {
        // x₁x₂ is Â-harmonic for diagonal Â, so the nodal error is pure
        // discretization error and must shrink with h
        let a = Mat2::new(1.6, 0.0, 0.0, 2.5);
        let f = |p: Vec2| p.x * p.y;
        let coarse = homogenized_solution(Rect::unit(), &a, &f, 1.0 / 16.0).unwrap();
        let fine = homogenized_solution(Rect::unit(), &a, &f, 1.0 / 64.0).unwrap();
        let (_, h1c) = crate::fem::field::error_norms(&coarse, f, |p| Vec2::new(p.y, p.x));
        let (_, h1f) = crate::fem::field::error_norms(&fine, f, |p| Vec2::new(p.y, p.x));
        assert!(h1f <= h1c / 3.0 + 1e-12);
        let sampled = SampledField::new(fine);
        let g = sampled.gradient(Vec2::new(0.3, 0.6)).unwrap();
        assert!((g - Vec2::new(0.6, 0.3)).norm() < 1e-8);
    }

    #[test]
    fn identity_coefficient_leaves_pure_discretization_error() {
        let d = build_perforated_domain(4, &CellGeometry::empty(), OmegaSpec::UnitSquare).unwrap();
        let mesh = Arc::new(mesh_domain(&d, 1.0 / 32.0).unwrap());
        let mat = MaterialTensor::identity();
        let f = |p: Vec2| p.x + 2.0 * p.y;
        let u = solve_dirichlet(&d, &mesh, &mat, 1.0, &f).unwrap();
        let cell = solve_cell(&mesh.tiling.as_ref().unwrap().cell_mesh, &mat, 1.0).unwrap();
        let v = SampledField::new(homogenized_solution(Rect::unit(), &cell.tensor.matrix(), &f, 1.0 / 64.0).unwrap());
        let w = two_scale_expansion(
            &u,
            &Rect::unit(),
            &v,
            &cell.correctors,
            &CutoffFunction::standard(d.epsilon),
            &MollifierKernel::new(),
        )
        .unwrap();
        assert!(w.max_abs() < 1e-9);
        let r = expansion_error(&w, &u).unwrap();
        assert!(r.weighted_gradient < 1e-7);
    }

    #[test]
    fn zero_correctors_and_same_solve_give_zero() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let d = build_perforated_domain(4, &cell, OmegaSpec::UnitSquare).unwrap();
        let mesh = Arc::new(mesh_domain(&d, 1.0 / 32.0).unwrap());
        let mat = MaterialTensor::identity();
        let u = solve_dirichlet(&d, &mesh, &mat, 0.5, &|p| p.x * p.x - p.y).unwrap();
        let cm = mesh.tiling.as_ref().unwrap().cell_mesh.clone();
        let zero = CorrectorSet {
            mesh: cm.clone(),
            chi: [FemField::zeros(cm.clone()), FemField::zeros(cm)],
            delta: 0.5,
            normalization: Normalization::MeanZeroOnY,
        };
        let v = SampledField::new(u.field.clone());
        let w = two_scale_expansion(
            &u,
            &Rect::unit(),
            &v,
            &zero,
            &CutoffFunction::standard(d.epsilon),
            &MollifierKernel::new(),
        )
        .unwrap();
        let r = expansion_error(&w, &u).unwrap();
        assert!(r.weighted_gradient < 1e-12 && r.l2 < 1e-12);
    }

    #[test]
    fn direct_and_interpolated_corrector_lookup_agree() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let d = build_perforated_domain(4, &cell, OmegaSpec::UnitSquare).unwrap();
        let mesh = mesh_domain(&d, 1.0 / 32.0).unwrap();
        let mat = MaterialTensor::identity();
        let cm = mesh.tiling.as_ref().unwrap().cell_mesh.clone();
        let c = solve_cell(&cm, &mat, 0.0).unwrap().correctors;
        let direct = corrector_values(&mesh, &c, d.epsilon).unwrap();
        let mut bare = mesh.clone();
        bare.tiling = None;
        let interp = corrector_values(&bare, &c, d.epsilon).unwrap();
        for j in 0..2 {
            for (a, b) in direct[j].iter().zip(&interp[j]) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
