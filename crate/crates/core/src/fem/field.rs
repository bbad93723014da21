use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::mesh::{Region, TriMesh};
use crate::geometry::Vec2;

/// Nodal values of a P1 function on a mesh.
#[derive(Clone, Debug)]
pub struct FemField {
    pub mesh: Arc<TriMesh>,
    pub values: Vec<f64>,
}

impl FemField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::MeshMismatch(format!(
                "{} values for {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        Ok(FemField { mesh, values })
    }

    pub fn zeros(mesh: Arc<TriMesh>) -> Self {
        let n = mesh.n_vertices();
        FemField {
            mesh,
            values: vec![0.0; n],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<TriMesh>, f: impl Fn(Vec2) -> f64) -> Self {
        let values = mesh.vertices.iter().map(|&p| f(p)).collect();
        FemField { mesh, values }
    }

    pub fn gradient(&self, t: usize) -> Vec2 {
        self.mesh.gradient(t, &self.values)
    }

    /// `∫ u` over the selected triangles (exact for P1).
    pub fn integral(&self, select: impl Fn(usize) -> bool) -> f64 {
        let mut s = 0.0;
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            if select(t) {
                let sum: f64 = tri.iter().map(|&v| self.values[v as usize]).sum();
                s += self.mesh.area(t) * sum / 3.0;
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Area-weighted average of element gradients at each vertex.
    pub fn nodal_gradient(&self) -> Vec<Vec2> {
        let mut acc = vec![Vec2::zeros(); self.mesh.n_vertices()];
        let mut w = vec![0.0; self.mesh.n_vertices()];
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let a = self.mesh.area(t);
            let g = self.gradient(t) * a;
            for &v in tri {
                acc[v as usize] += g;
                w[v as usize] += a;
            }
        }
        acc.iter().zip(&w).map(|(g, w)| g / *w).collect()
    }

    /// `self - other` on a common mesh.
    pub fn sub(&self, other: &FemField) -> Result<FemField> {
        if !Arc::ptr_eq(&self.mesh, &other.mesh) && self.values.len() != other.values.len() {
            return Err(Error::MeshMismatch("fields live on different meshes".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        FemField::new(self.mesh.clone(), values)
    }
}

/// Weight multiplying the integrand of a norm, taken from triangle labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    None,
    /// `Λ_δ`: `δ` on hole triangles.
    Lambda(f64),
    /// `Λ_δ²`.
    LambdaSquared(f64),
}

impl Weight {
    #[inline]
    pub fn at(&self, region: Region) -> f64 {
        match (self, region) {
            (Weight::None, _) | (_, Region::Matrix) => 1.0,
            (Weight::Lambda(d), Region::Hole(_)) => *d,
            (Weight::LambdaSquared(d), Region::Hole(_)) => d * d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L2,
    H1Semi,
}

/// `(∫ w² |u|²)^{1/2}` or `(∫ w² |∇u|²)^{1/2}` over the selected triangles.
pub fn region_norm(field: &FemField, select: impl Fn(usize) -> bool, weight: Weight, what: NormKind) -> Result<f64> {
    let mesh = &field.mesh;
    let mut total = 0.0;
    let mut any = false;
    for t in 0..mesh.n_triangles() {
        if !select(t) {
            continue;
        }
        any = true;
        let w = weight.at(mesh.regions[t]);
        if w == 0.0 {
            continue;
        }
        let area = mesh.area(t);
        let integrand = match what {
            NormKind::H1Semi => area * field.gradient(t).norm_squared(),
            NormKind::L2 => {
                let [a, b, c] = mesh.triangles[t].map(|v| field.values[v as usize]);
                area / 12.0 * (a * a + b * b + c * c + (a + b + c) * (a + b + c))
            }
        };
        total += w * w * integrand;
    }
    if !any {
        return Err(Error::EmptyRegion);
    }
    Ok(total.sqrt())
}

/// Degree-five seven-point rule on the reference triangle: barycentric
/// coordinates and weights summing to one.
pub(crate) const QUAD7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// `‖u - u*‖_{L²}` and `‖∇(u - u*)‖_{L²}` against an exact solution, with a
/// seven-point rule per triangle.
pub fn error_norms(
    field: &FemField,
    exact: impl Fn(Vec2) -> f64,
    exact_grad: impl Fn(Vec2) -> Vec2,
) -> (f64, f64) {
    let mesh = &field.mesh;
    let mut l2: f64 = 0.0;
    let mut h1: f64 = 0.0;
    for t in 0..mesh.n_triangles() {
        let p = mesh.corners(t);
        let u = mesh.triangles[t].map(|v| field.values[v as usize]);
        let g = field.gradient(t);
        let area = mesh.area(t);
        for (lam, w) in QUAD7 {
            let x = p[0] * lam[0] + p[1] * lam[1] + p[2] * lam[2];
            let uh = u[0] * lam[0] + u[1] * lam[1] + u[2] * lam[2];
            l2 += area * w * (uh - exact(x)).powi(2);
            h1 += area * w * (g - exact_grad(x)).norm_squared();
        }
    }
    (l2.sqrt(), h1.sqrt())
}

/// Writes a field as CSV `vertex,value`.
pub fn field_to_csv(field: &FemField) -> String {
    let mut out = String::from("vertex,value\n");
    for (i, v) in field.values.iter().enumerate() {
        out.push_str(&format!("{i},{v:.17e}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesher::{mesh_domain, mesh_rectangle};
    use crate::geometry::{build_perforated_domain, CellGeometry, OmegaSpec, Rect};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn norm_examples() {
        let mesh = Arc::new(mesh_rectangle(Rect::unit(), 0.1).unwrap());
        let c = FemField::interpolate(mesh.clone(), |_| -2.5);
        assert_relative_eq!(region_norm(&c, |_| true, Weight::None, NormKind::L2).unwrap(), 2.5, epsilon = 1e-12);
        let x = FemField::interpolate(mesh.clone(), |p| p.x);
        assert_relative_eq!(
            region_norm(&x, |_| true, Weight::None, NormKind::H1Semi).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            region_norm(&x, |_| false, Weight::None, NormKind::L2),
            Err(Error::EmptyRegion)
        ));
    }

    #[test]
    fn weighted_norm_on_perforated_domain() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let d = build_perforated_domain(4, &cell, OmegaSpec::UnitSquare).unwrap();
        let mesh = Arc::new(mesh_domain(&d, 1.0 / 32.0).unwrap());
        let u = FemField::interpolate(mesh.clone(), |p| p.x);
        let n = region_norm(&u, |_| true, Weight::LambdaSquared(0.0), NormKind::H1Semi).unwrap();
        // the mesh resolves each disk by an inscribed polygon
        let k = cell.holes[0].boundary_polyline(1.0 / 8.0).len() as f64;
        let r = 0.25 / 4.0;
        let poly = 0.5 * k * r * r * (2.0 * PI / k).sin();
        assert_relative_eq!(n, (1.0 - 16.0 * poly).sqrt(), epsilon = 1e-12);
        assert!((n - (1.0 - PI / 16.0).sqrt()).abs() < 0.01);
    }

    #[test]
    fn exact_l2_formula_matches_quadrature() {
        let mesh = Arc::new(mesh_rectangle(Rect::unit(), 0.2).unwrap());
        let u = FemField::interpolate(mesh.clone(), |p| (3.0 * p.x).sin() + p.y * p.y);
        let direct = region_norm(&u, |_| true, Weight::None, NormKind::L2).unwrap();
        let (via_rule, _) = error_norms(&u, |_| 0.0, |_| Vec2::zeros());
        assert_relative_eq!(direct, via_rule, epsilon = 1e-12);
    }
}
