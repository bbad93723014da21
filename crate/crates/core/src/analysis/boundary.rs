//! Boundary layer energies, Rellich ratios and difference quotients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assembly::apply_stiffness;
use crate::fem::field::FemField;
use crate::fem::flux::{conormal_flux, tangential_gradient};
use crate::fem::locate::PointLocator;
use crate::fem::mesh::VertexKind;
use crate::geometry::{Mat2, Rect};

/// `∫_{Σ_t} |∇u|²`, counting triangles whose centroid lies in the strip.
pub fn boundary_layer_norm(u: &FemField, omega: &Rect, t: f64) -> f64 {
    let mesh = &u.mesh;
    (0..mesh.n_triangles())
        .filter(|&k| omega.dist_to_boundary(mesh.centroid(k)) < t)
        .map(|k| mesh.area(k) * u.gradient(k).norm_squared())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RellichRatio {
    /// `‖∂u/∂ν‖_{L²(∂Ω)}`.
    pub conormal: f64,
    /// `‖∇_tan u‖_{L²(∂Ω)}`.
    pub tangential: f64,
    pub ratio: f64,
}

/// Conormal over tangential boundary norm of a discrete solution of the
/// homogeneous equation with per-triangle coefficient `coeff`.
pub fn rellich_ratio(u: &FemField, coeff: &[Mat2]) -> Result<RellichRatio> {
    let mesh = &u.mesh;
    let conormal = conormal_flux(u, coeff, &vec![0.0; mesh.n_vertices()]).l2_norm(mesh);
    let tangential = tangential_gradient(u).l2_norm(mesh);
    if tangential < 1e-12 {
        return Err(Error::DegenerateBoundaryNorm(tangential));
    }
    Ok(RellichRatio {
        conormal,
        tangential,
        ratio: conormal / tangential,
    })
}

#[derive(Clone, Debug)]
pub struct DifferenceQuotient {
    /// `Q_ε(u)` at vertices where `x + εe` lies in `Ω`, zero elsewhere.
    pub field: FemField,
    pub valid: Vec<bool>,
    /// Vertices whose shifted point fell outside the domain.
    pub skipped: usize,
}

/// `Q_ε(u)(x) = (u(x + εe_k) − u(x)) / ε` for `k = direction`.
pub fn difference_quotient(u: &FemField, epsilon: f64, direction: usize) -> Result<DifferenceQuotient> {
    if direction > 1 {
        return Err(Error::InvalidInput(format!("direction {direction} outside {{0, 1}}")));
    }
    let mesh = &u.mesh;
    let n = mesh.n_vertices();
    let mut values = vec![0.0; n];
    let mut valid = vec![false; n];
    // tiled meshes are translation invariant by whole periods
    let steps = mesh.tiling.as_ref().and_then(|t| {
        let s = epsilon / t.epsilon;
        ((s - s.round()).abs() < 1e-9 && s.round() >= 1.0).then_some((t, s.round() as i64))
    });
    let locator = if steps.is_none() { Some(PointLocator::new(mesh)) } else { None };
    for v in 0..n {
        let shifted = match steps {
            Some((tiling, s)) => {
                let (dx, dy) = if direction == 0 { (s, 0) } else { (0, s) };
                tiling.shifted(v, dx, dy).map(|w| u.values[w])
            }
            None => {
                let mut p = mesh.vertices[v];
                p[direction] += epsilon;
                locator.as_ref().and_then(|l| l.interpolate(mesh, &u.values, p))
            }
        };
        if let Some(s) = shifted {
            values[v] = (s - u.values[v]) / epsilon;
            valid[v] = true;
        }
    }
    let skipped = valid.iter().filter(|x| !**x).count();
    Ok(DifferenceQuotient {
        field: FemField::new(mesh.clone(), values)?,
        valid,
        skipped,
    })
}

/// `max |K x|` over rows of interior vertices whose whole stencil is in
/// `valid`, relative to `max |K x|` over all rows.
pub fn interior_operator_residual(x: &FemField, coeff: &[Mat2], valid: &[bool]) -> f64 {
    let mesh = &x.mesh;
    let kx = apply_stiffness(mesh, coeff, &x.values);
    let mut ok: Vec<bool> = (0..mesh.n_vertices())
        .map(|v| valid[v] && mesh.vertex_kind[v] != VertexKind::OuterBoundary)
        .collect();
    for tri in &mesh.triangles {
        if tri.iter().any(|&v| !valid[v as usize]) {
            for &v in tri {
                ok[v as usize] = false;
            }
        }
    }
    let scale = kx
        .iter()
        .zip(valid)
        .filter(|(_, v)| **v)
        .fold(0.0f64, |m, (r, _)| m.max(r.abs()));
    let r = kx.iter().zip(&ok).filter(|(_, o)| **o).fold(0.0f64, |m, (r, _)| m.max(r.abs()));
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}
