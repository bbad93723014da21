//! Dirichlet and Neumann problems for `div(A^ε_δ ∇u) = 0` on `Ω`, hole
//! transmission diagnostics and discrete Green's functions.
//!
//! For `δ = 0` the problem reduces to `Ω^ε` with a natural condition on the
//! hole boundaries: hole-interior unknowns are eliminated and the solution
//! is afterwards extended `A`-harmonically into each hole.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assembly::{apply_stiffness, assemble, boundary_load, element_coefficients, solve, source_load, DofMap};
use crate::fem::extension::extend_into_holes;
use crate::fem::field::{region_norm, FemField, NormKind, Weight};
use crate::fem::flux::{boundary_trace, tangential_gradient};
use crate::fem::mesh::{Region, TriMesh};
use crate::fem::sparse::{dot, CgReport};
use crate::geometry::{Mat2, MaterialTensor, PerforatedDomain, Vec2};

/// Relative residual for domain solves.
pub const BVP_TOL: f64 = 1e-10;

/// Raw `|∮ g|` above which Neumann data is reported as incompatible before
/// it is projected.
pub const COMPATIBILITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    /// `‖Λ^ε_δ ∇u‖_{L²(Ω)}`.
    pub weighted_gradient: f64,
    /// `‖∇u‖_{L²(Ω^ε)}`.
    pub perforated_gradient: f64,
    /// `‖∇u‖_{L²(Ω)}`.
    pub gradient: f64,
    pub l2: f64,
    /// `‖f‖_{H¹(∂Ω)}` (scale invariant) for Dirichlet data, `‖g‖_{L²(∂Ω)}`
    /// for Neumann data.
    pub data_norm: f64,
}

impl EnergyRecord {
    /// `‖u‖_{H¹(Ω)} / data_norm`, the constant of the energy estimate.
    pub fn estimate_constant(&self) -> f64 {
        (self.gradient * self.gradient + self.l2 * self.l2).sqrt() / self.data_norm
    }
}

#[derive(Clone, Debug)]
pub struct BvpSolution {
    pub field: FemField,
    pub epsilon: f64,
    pub delta: f64,
    pub problem: ProblemKind,
    pub energy: EnergyRecord,
    pub solver: CgReport,
    /// Per-triangle `[Λ_δ]² A(x/ε)`.
    pub coeff: Vec<Mat2>,
    /// Raw `∮ g` before projection (Neumann only).
    pub raw_flux_integral: f64,
}

fn check_mesh(domain: &PerforatedDomain, mesh: &TriMesh) -> Result<()> {
    let eps = mesh
        .tiling
        .as_ref()
        .map(|t| t.epsilon)
        .ok_or_else(|| Error::MeshMismatch("domain mesh carries no tiling".into()))?;
    if (eps - domain.epsilon).abs() > 1e-12 * domain.epsilon {
        return Err(Error::MeshMismatch(format!("mesh period {eps} but domain epsilon {}", domain.epsilon)));
    }
    Ok(())
}

/// `‖f‖_{H¹(∂Ω)} = ‖∇_tan f‖ + diam(∂Ω)^{-1} ‖f‖` of the trace of `field`.
pub fn boundary_h1_norm(field: &FemField, diameter: f64) -> f64 {
    let mesh = &field.mesh;
    tangential_gradient(field).l2_norm(mesh) + boundary_trace(field).l2_norm(mesh) / diameter
}

fn energies(field: &FemField, delta: f64, data_norm: f64) -> Result<EnergyRecord> {
    let mesh = &field.mesh;
    Ok(EnergyRecord {
        weighted_gradient: region_norm(field, |_| true, Weight::Lambda(delta), NormKind::H1Semi)?,
        perforated_gradient: region_norm(field, |t| mesh.is_matrix(t), Weight::None, NormKind::H1Semi)?,
        gradient: region_norm(field, |_| true, Weight::None, NormKind::H1Semi)?,
        l2: region_norm(field, |_| true, Weight::None, NormKind::L2)?,
        data_norm,
    })
}

fn active_set(mesh: &TriMesh, delta: f64) -> Option<Vec<bool>> {
    (delta == 0.0).then(|| mesh.matrix_vertices())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidInput(format!("delta = {delta} outside [0, 1]")));
    }
    Ok(())
}

pub fn solve_dirichlet(
    domain: &PerforatedDomain,
    mesh: &Arc<TriMesh>,
    material: &MaterialTensor,
    delta: f64,
    f: &dyn Fn(Vec2) -> f64,
) -> Result<BvpSolution> {
    check_delta(delta)?;
    check_mesh(domain, mesh)?;
    let coeff = element_coefficients(mesh, material, domain.epsilon, delta);
    let active = active_set(mesh, delta);
    let dofs = DofMap::dirichlet(mesh, active.as_deref(), f);
    let system = assemble(mesh, &coeff, &vec![0.0; mesh.n_vertices()], dofs)?;
    let (mut field, solver) = solve(mesh, &system, BVP_TOL)?;
    if delta == 0.0 {
        field = extend_into_holes(&field, material, domain.epsilon)?;
    }
    let data_norm = boundary_h1_norm(&field, domain.omega.diameter());
    let energy = energies(&field, delta, data_norm)?;
    Ok(BvpSolution {
        field,
        epsilon: domain.epsilon,
        delta,
        problem: ProblemKind::Dirichlet,
        energy,
        solver,
        coeff,
        raw_flux_integral: 0.0,
    })
}

pub fn solve_neumann(
    domain: &PerforatedDomain,
    mesh: &Arc<TriMesh>,
    material: &MaterialTensor,
    delta: f64,
    g: &dyn Fn(Vec2) -> f64,
) -> Result<BvpSolution> {
    check_delta(delta)?;
    check_mesh(domain, mesh)?;
    let coeff = element_coefficients(mesh, material, domain.epsilon, delta);
    let mut load = boundary_load(mesh, g);
    let raw: f64 = load.iter().sum();
    if raw.abs() > COMPATIBILITY_TOL {
        log::warn!("NonCompatibleData: boundary integral of g is {raw:.3e}, subtracting its mean");
    }
    // subtract the boundary mean of g: ∫ φ_i dσ is half the incident edge lengths
    let lengths = boundary_lumped_lengths(mesh);
    let perimeter: f64 = lengths.iter().sum();
    for (l, w) in load.iter_mut().zip(&lengths) {
        *l -= raw / perimeter * w;
    }
    let g_norm = {
        let mean = raw / perimeter;
        neumann_data_norm(mesh, |x| g(x) - mean)
    };
    let active = active_set(mesh, delta);
    let dofs = DofMap::natural(mesh, active.as_deref());
    let mut system = assemble(mesh, &coeff, &load, dofs)?;
    system.mean_weights = Some(mesh.lumped_areas(|t| mesh.is_matrix(t)));
    let (mut field, solver) = solve(mesh, &system, BVP_TOL)?;
    if delta == 0.0 {
        field = extend_into_holes(&field, material, domain.epsilon)?;
    }
    let energy = energies(&field, delta, g_norm)?;
    Ok(BvpSolution {
        field,
        epsilon: domain.epsilon,
        delta,
        problem: ProblemKind::Neumann,
        energy,
        solver,
        coeff,
        raw_flux_integral: raw,
    })
}

fn boundary_lumped_lengths(mesh: &TriMesh) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_vertices()];
    for &[a, b] in &mesh.boundary_edges {
        let len = (mesh.vertices[b as usize] - mesh.vertices[a as usize]).norm();
        out[a as usize] += 0.5 * len;
        out[b as usize] += 0.5 * len;
    }
    out
}

/// `‖g‖_{L²(∂Ω)}` by two-point Gauss quadrature per boundary edge.
pub fn neumann_data_norm(mesh: &TriMesh, g: impl Fn(Vec2) -> f64) -> f64 {
    let s = 0.5 / 3f64.sqrt();
    let mut acc = 0.0;
    for &[a, b] in &mesh.boundary_edges {
        let pa = mesh.vertices[a as usize];
        let pb = mesh.vertices[b as usize];
        let len = (pb - pa).norm();
        for t in [0.5 - s, 0.5 + s] {
            acc += 0.5 * len * g(pa + (pb - pa) * t).powi(2);
        }
    }
    acc.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoleFlux {
    pub hole: u32,
    /// Least-squares ratio of the outside weak flux to the unweighted inside
    /// weak flux over the hole boundary vertices; equals `δ²` for an exact
    /// discrete solution.
    pub ratio: f64,
    /// Euclidean norm of the outside weak flux vector, relative to the
    /// square root of the local energy `∫_{F_k} |∇u|² + ∫_{near F_k} |∇u|²`.
    pub outside_relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionReport {
    pub delta: f64,
    pub holes: Vec<HoleFlux>,
    /// `u₊ − u₋` on the interfaces; conforming elements make this zero.
    pub trace_mismatch: f64,
    /// Range of `ratio / δ²` over the holes (`δ > 0`).
    pub ratio_band: Option<(f64, f64)>,
    pub max_outside_relative: f64,
}

/// Compares the weak conormal flux from the matrix side of each hole
/// boundary with the flux from inside the hole.
pub fn transmission_check(solution: &BvpSolution, material: &MaterialTensor) -> Result<TransmissionReport> {
    let field = &solution.field;
    let mesh = &field.mesh;
    let eps = solution.epsilon;
    let nh = mesh.n_holes();
    let n = mesh.n_vertices();
    let mut outside = vec![0.0; n];
    let mut inside = vec![0.0; n];
    let mut energy = vec![0.0; nh];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = material.eval(mesh.centroid(t) / eps);
        let g = mesh.hat_gradients(t);
        let area = mesh.area(t);
        let flux = a * field.gradient(t);
        let target = match mesh.regions[t] {
            Region::Matrix => &mut outside,
            Region::Hole(k) => {
                energy[k as usize] += area * field.gradient(t).dot(&flux);
                &mut inside
            }
        };
        for k in 0..3 {
            target[tri[k] as usize] += area * flux.dot(&g[k]);
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); nh];
    for &([a, b], k) in &mesh.hole_edges {
        members[k as usize].push(a as usize);
        members[k as usize].push(b as usize);
    }
    // energy in the matrix triangles touching each hole boundary
    let mut ring = vec![0.0; nh];
    let vt = mesh.vertex_triangles();
    for (k, m) in members.iter_mut().enumerate() {
        m.sort_unstable();
        m.dedup();
        let mut tris: Vec<u32> = m.iter().flat_map(|&v| vt[v].iter().copied()).filter(|&t| mesh.is_matrix(t as usize)).collect();
        tris.sort_unstable();
        tris.dedup();
        for t in tris {
            let t = t as usize;
            let a = material.eval(mesh.centroid(t) / eps);
            let g = field.gradient(t);
            ring[k] += mesh.area(t) * g.dot(&(a * g));
        }
    }
    let delta = solution.delta;
    let mut holes = Vec::with_capacity(nh);
    for (k, m) in members.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        let o: Vec<f64> = m.iter().map(|&v| outside[v]).collect();
        let i: Vec<f64> = m.iter().map(|&v| inside[v]).collect();
        let ii = dot(&i, &i);
        let ratio = if ii > 0.0 { -dot(&o, &i) / ii } else { 0.0 };
        let local = (energy[k] + ring[k]).sqrt();
        let on = dot(&o, &o).sqrt();
        holes.push(HoleFlux {
            hole: k as u32,
            ratio,
            outside_relative: if local > 0.0 { on / local } else { on },
        });
    }
    let ratio_band = (delta > 0.0 && !holes.is_empty()).then(|| {
        let d2 = delta * delta;
        holes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), h| {
            (lo.min(h.ratio / d2), hi.max(h.ratio / d2))
        })
    });
    let max_outside_relative = holes.iter().map(|h| h.outside_relative).fold(0.0, f64::max);
    Ok(TransmissionReport {
        delta,
        holes,
        trace_mismatch: 0.0,
        ratio_band,
        max_outside_relative,
    })
}

/// Distance from `x` to the nearest scaled hole.
pub fn hole_distance(domain: &PerforatedDomain, x: Vec2) -> f64 {
    if domain.hole_instances.is_empty() {
        return f64::INFINITY;
    }
    let eps = domain.epsilon;
    let ci = (x.x / eps).floor() as i64;
    let cj = (x.y / eps).floor() as i64;
    let mut best = f64::INFINITY;
    for j in cj - 1..=cj + 1 {
        for i in ci - 1..=ci + 1 {
            if i < 0 || j < 0 || i as usize >= domain.cells_x || j as usize >= domain.cells_y {
                continue;
            }
            for local in 0..domain.cell.holes.len() {
                let inst = &domain.hole_instances[domain.instance_index(i as usize, j as usize, local)];
                best = best.min(inst.shape.signed_distance(x));
            }
        }
    }
    best
}

/// Column of the discrete Green's function: the response to a unit mass
/// source mollified over `B(source, 2h)`, zero on `∂Ω`.
#[derive(Clone, Debug)]
pub struct GreenColumn {
    pub field: FemField,
    pub source: Vec2,
    /// Nodal load of the mollified source.
    pub load: Vec<f64>,
    pub solver: CgReport,
}

impl GreenColumn {
    /// `G(x₀, y₀)` paired through the mollified source at `y₀`.
    pub fn pair(&self, other: &GreenColumn) -> f64 {
        dot(&self.field.values, &other.load)
    }
}

/// Unit-mass nodal load of a smooth bump of radius `r` centred at `x0`.
pub fn mollified_source(mesh: &TriMesh, x0: Vec2, r: f64) -> Vec<f64> {
    let bump = |p: Vec2| {
        let s = (p - x0).norm_squared() / (r * r);
        if s < 1.0 {
            (-1.0 / (1.0 - s)).exp()
        } else {
            0.0
        }
    };
    let mut load = source_load(mesh, bump, |t| {
        mesh.corners(t).iter().any(|p| (p - x0).norm() < r + mesh.h * 2.0)
    });
    let mass: f64 = load.iter().sum();
    if mass > 0.0 {
        load.iter_mut().for_each(|l| *l /= mass);
    } else {
        // the bump fell between quadrature points: use the nearest vertex
        let v = (0..mesh.n_vertices())
            .min_by(|&a, &b| (mesh.vertices[a] - x0).norm().total_cmp(&(mesh.vertices[b] - x0).norm()))
            .unwrap_or(0);
        load[v] = 1.0;
    }
    load
}

pub fn greens_function(
    domain: &PerforatedDomain,
    mesh: &Arc<TriMesh>,
    material: &MaterialTensor,
    delta: f64,
    source: Vec2,
) -> Result<GreenColumn> {
    check_delta(delta)?;
    check_mesh(domain, mesh)?;
    let h = mesh.h;
    let clearance = hole_distance(domain, source).min(domain.dist_to_boundary(source));
    if !(clearance >= h) || !domain.omega.contains(source) {
        return Err(Error::SourceTooClose { min: h });
    }
    let coeff = element_coefficients(mesh, material, domain.epsilon, delta);
    let load = mollified_source(mesh, source, 2.0 * h);
    let active = active_set(mesh, delta);
    let dofs = DofMap::dirichlet(mesh, active.as_deref(), |_| 0.0);
    let system = assemble(mesh, &coeff, &load, dofs)?;
    let (mut field, solver) = solve(mesh, &system, BVP_TOL)?;
    if delta == 0.0 {
        field = extend_into_holes(&field, material, domain.epsilon)?;
    }
    if material.symmetric {
        let negative = field.values.iter().fold(0.0f64, |m, v| m.min(*v));
        if negative < -1e-12 * field.max_abs() {
            log::warn!("Green's function has negative values ({negative:.3e}); the mesh is not Delaunay enough for a maximum principle");
        }
    }
    Ok(GreenColumn {
        field,
        source,
        load,
        solver,
    })
}

/// Interior residual `max |K u − load|` over free vertices relative to
/// `max |K u|`, for checking that a field solves the discrete equation.
pub fn interior_residual(field: &FemField, coeff: &[Mat2], free: impl Fn(usize) -> bool) -> f64 {
    let ku = apply_stiffness(&field.mesh, coeff, &field.values);
    let scale = ku.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let r = ku
        .iter()
        .enumerate()
        .filter(|(v, _)| free(*v))
        .fold(0.0f64, |m, (_, x)| m.max(x.abs()));
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::VertexKind;
    use crate::fem::flux::{conormal_flux, outward_normal};
    use crate::fem::mesher::mesh_domain;
    use crate::geometry::{build_perforated_domain, vec2, CellGeometry, OmegaSpec};

    fn plain(n: usize, h: f64) -> (PerforatedDomain, Arc<TriMesh>) {
        let d = build_perforated_domain(n, &CellGeometry::empty(), OmegaSpec::UnitSquare).unwrap();
        let m = Arc::new(mesh_domain(&d, h).unwrap());
        (d, m)
    }

    fn disks(n: usize, h: f64) -> (PerforatedDomain, Arc<TriMesh>) {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let d = build_perforated_domain(n, &cell, OmegaSpec::UnitSquare).unwrap();
        let m = Arc::new(mesh_domain(&d, h).unwrap());
        (d, m)
    }

    #[test]
    fn affine_data_is_reproduced_without_holes() {
        let (d, m) = plain(4, 1.0 / 32.0);
        let mat = MaterialTensor::identity();
        let f = |p: Vec2| 2.0 * p.x - p.y + 0.5;
        for delta in [0.0, 0.5, 1.0] {
            let s = solve_dirichlet(&d, &m, &mat, delta, &f).unwrap();
            for (v, p) in m.vertices.iter().enumerate() {
                assert!((s.field.values[v] - f(*p)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn constants_solve_both_problems() {
        let (d, m) = disks(4, 1.0 / 32.0);
        let mat = MaterialTensor::oscillating(0.5).unwrap();
        for delta in [0.0, 0.3, 1.0] {
            let s = solve_dirichlet(&d, &m, &mat, delta, &|_| 1.0).unwrap();
            let err = s.field.values.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
            assert!(err < 1e-10, "delta {delta}: {err:.3e} after {} iterations", s.solver.iterations);
            let s = solve_neumann(&d, &m, &mat, delta, &|_| 0.0).unwrap();
            assert!(s.field.max_abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_normal_component_gives_x1() {
        let (d, m) = plain(4, 1.0 / 32.0);
        let mat = MaterialTensor::identity();
        // n₁ on the unit square: +1 on the right face, -1 on the left face
        let g = |p: Vec2| {
            if p.x > 1.0 - 1e-12 {
                1.0
            } else if p.x < 1e-12 {
                -1.0
            } else {
                0.0
            }
        };
        let s = solve_neumann(&d, &m, &mat, 1.0, &g).unwrap();
        for (v, p) in m.vertices.iter().enumerate() {
            assert!((s.field.values[v] - (p.x - 0.5)).abs() < 1e-8);
        }
        let flux = conormal_flux(&s.field, &s.coeff, &vec![0.0; m.n_vertices()]);
        for (e, [a, b]) in flux.ends.iter().enumerate() {
            let n = outward_normal(&m, flux.edges[e]);
            assert!((a - n.x).abs() < 1e-6 && (b - n.x).abs() < 1e-6);
        }
    }

    #[test]
    fn incompatible_neumann_data_is_projected() {
        let (d, m) = disks(4, 1.0 / 32.0);
        let s = solve_neumann(&d, &m, &MaterialTensor::identity(), 0.5, &|_| 1.0).unwrap();
        assert!((s.raw_flux_integral - 4.0).abs() < 1e-10);
        assert!(s.field.max_abs() < 1e-10);
    }

    #[test]
    fn delta_zero_solution_is_harmonic_extension() {
        let (d, m) = disks(4, 1.0 / 32.0);
        let mat = MaterialTensor::identity();
        let s = solve_dirichlet(&d, &m, &mat, 0.0, &|p| p.x * p.y).unwrap();
        // hole-interior rows of the unweighted operator vanish after extension
        let full = element_coefficients(&m, &mat, d.epsilon, 1.0);
        let hole_only: Vec<Mat2> = full
            .iter()
            .zip(&m.regions)
            .map(|(a, r)| if *r == Region::Matrix { Mat2::zeros() } else { *a })
            .collect();
        let r = interior_residual(&s.field, &hole_only, |v| m.vertex_kind[v] == VertexKind::HoleInterior);
        assert!(r < 1e-8, "{r}");
        // and matrix rows of the weighted operator vanish
        let r = interior_residual(&s.field, &s.coeff, |v| {
            matches!(m.vertex_kind[v], VertexKind::Interior | VertexKind::HoleBoundary)
        });
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn transmission_ratios() {
        let (d, m) = disks(4, 1.0 / 32.0);
        let mat = MaterialTensor::identity();
        let f = |p: Vec2| (std::f64::consts::PI * p.x).sin() * (std::f64::consts::PI * p.y).cos();
        let one = transmission_check(&solve_dirichlet(&d, &m, &mat, 1.0, &f).unwrap(), &mat).unwrap();
        let (lo, hi) = one.ratio_band.unwrap();
        assert!((lo - 1.0).abs() < 0.1 && (hi - 1.0).abs() < 0.1);
        let mid = transmission_check(&solve_dirichlet(&d, &m, &mat, 0.3, &f).unwrap(), &mat).unwrap();
        let (lo, hi) = mid.ratio_band.unwrap();
        assert!(lo >= 0.5 && hi <= 2.0);
        let zero = transmission_check(&solve_dirichlet(&d, &m, &mat, 0.0, &f).unwrap(), &mat).unwrap();
        assert!(zero.max_outside_relative < 1e-6, "{}", zero.max_outside_relative);
        assert_eq!(zero.trace_mismatch, 0.0);
    }

    #[test]
    fn green_function_is_symmetric() {
        let (d, m) = disks(8, 1.0 / 64.0);
        let mat = MaterialTensor::identity();
        let x = vec2(0.25, 0.25);
        let y = vec2(0.625, 0.75);
        for delta in [0.0, 0.2] {
            let gx = greens_function(&d, &m, &mat, delta, x).unwrap();
            let gy = greens_function(&d, &m, &mat, delta, y).unwrap();
            let a = gx.pair(&gy);
            let b = gy.pair(&gx);
            assert!((a - b).abs() <= 1e-6 * a.abs(), "{a} {b}");
            assert!(a > 0.0);
        }
    }

    #[test]
    fn sources_near_holes_are_rejected() {
        let (d, m) = disks(8, 1.0 / 64.0);
        let centre = vec2(1.0 / 16.0, 1.0 / 16.0);
        assert!(matches!(
            greens_function(&d, &m, &MaterialTensor::identity(), 1.0, centre),
            Err(Error::SourceTooClose { .. })
        ));
        assert!(greens_function(&d, &m, &MaterialTensor::identity(), 1.0, vec2(0.001, 0.5)).is_err());
    }
}
