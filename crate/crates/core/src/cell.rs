//! Cell problems: correctors, the homogenized tensor and flux correctors.
//!
//! For `δ > 0` the corrector solves the periodic problem on the whole cell
//! with coefficient `[Λ_δ]² A`. For `δ = 0` the problem lives on the matrix
//! phase only (natural condition on the hole boundaries), and `χ + y_j` is
//! then extended `A`-harmonically into each hole.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::rates::{fit_rate, RateFit};
use crate::error::{Error, Result};
use crate::fem::assembly::{assemble, divergence_load, element_coefficients, solve, DofMap, DofSlot};
use crate::fem::extension::extend_into_holes;
use crate::fem::field::{region_norm, FemField, NormKind, Weight};
use crate::fem::mesh::TriMesh;
use crate::fem::mesher::mesh_unit_cell_for;
use crate::fem::sparse::{dot, pcg, CgOptions, CsrMatrix};
use crate::geometry::{sym_eigenvalues, vec2, CellGeometry, Mat2, MaterialTensor, Vec2};

/// Relative residual for cell solves; the meshes are small.
pub const CELL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    MeanZeroOnY,
    MeanZeroOnMatrix,
}

#[derive(Clone, Debug)]
pub struct CorrectorSet {
    pub mesh: Arc<TriMesh>,
    pub chi: [FemField; 2],
    pub delta: f64,
    pub normalization: Normalization,
}

impl CorrectorSet {
    /// `∫_Y |∇χ_j|² + |χ_j|²` for both directions.
    pub fn energies(&self) -> [f64; 2] {
        self.chi.clone().map(|c| {
            let g = region_norm(&c, |_| true, Weight::None, NormKind::H1Semi).unwrap_or(0.0);
            let l = region_norm(&c, |_| true, Weight::None, NormKind::L2).unwrap_or(0.0);
            g * g + l * l
        })
    }

    /// The normalization integral of `χ_j`: over `Y` or over the matrix.
    pub fn normalization_integral(&self, j: usize) -> f64 {
        match self.normalization {
            Normalization::MeanZeroOnY => self.chi[j].integral(|_| true),
            Normalization::MeanZeroOnMatrix => self.chi[j].integral(|t| self.mesh.is_matrix(t)),
        }
    }
}

/// Number of connected components of the matrix phase, with periodic
/// identification when the mesh carries it.
pub fn matrix_components(mesh: &TriMesh) -> usize {
    let n = mesh.n_vertices();
    let rep: Vec<usize> = match &mesh.periodic_rep {
        Some(r) => r.iter().map(|&x| x as usize).collect(),
        None => (0..n).collect(),
    };
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !mesh.is_matrix(t) {
            continue;
        }
        let a = find(&mut parent, rep[tri[0] as usize]);
        for &v in &tri[1..] {
            let b = find(&mut parent, rep[v as usize]);
            if a != b {
                parent[b] = a;
            }
        }
    }
    let active = mesh.matrix_vertices();
    let mut roots: Vec<usize> = (0..n).filter(|&v| active[v]).map(|v| find(&mut parent, rep[v])).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Corrector `χ_{δ,j}` on a periodic cell mesh, `j ∈ {0, 1}`.
pub fn solve_corrector(mesh: &Arc<TriMesh>, material: &MaterialTensor, delta: f64, j: usize) -> Result<FemField> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidInput(format!("delta = {delta} outside [0, 1]")));
    }
    if j > 1 {
        return Err(Error::InvalidInput(format!("direction index {j} outside {{0, 1}}")));
    }
    let e = if j == 0 { vec2(1.0, 0.0) } else { vec2(0.0, 1.0) };
    let coeff = element_coefficients(mesh, material, 1.0, delta);
    let load = divergence_load(mesh, &coeff, e);
    if delta > 0.0 {
        let dofs = DofMap::periodic(mesh, None)?;
        let mut system = assemble(mesh, &coeff, &load, dofs)?;
        system.mean_weights = Some(mesh.lumped_areas(|_| true));
        let (chi, _) = solve(mesh, &system, CELL_TOL)?;
        return Ok(chi);
    }
    if matrix_components(mesh) != 1 {
        return Err(Error::DegenerateCell);
    }
    let active = mesh.matrix_vertices();
    let dofs = DofMap::periodic(mesh, Some(&active))?;
    let mut system = assemble(mesh, &coeff, &load, dofs)?;
    system.mean_weights = Some(mesh.lumped_areas(|t| mesh.is_matrix(t)));
    let (chi, _) = solve(mesh, &system, CELL_TOL)?;
    // extend χ + y_j, which is what solves the equation, then subtract y_j
    let shifted: Vec<f64> = chi.values.iter().zip(&mesh.vertices).map(|(c, p)| c + p[j]).collect();
    let ext = extend_into_holes(&FemField::new(mesh.clone(), shifted)?, material, 1.0)?;
    let values = ext.values.iter().zip(&mesh.vertices).map(|(c, p)| c - p[j]).collect();
    FemField::new(mesh.clone(), values)
}

/// Both correctors, solved concurrently.
pub fn solve_correctors(mesh: &Arc<TriMesh>, material: &MaterialTensor, delta: f64) -> Result<CorrectorSet> {
    let (a, b) = rayon::join(
        || solve_corrector(mesh, material, delta, 0),
        || solve_corrector(mesh, material, delta, 1),
    );
    Ok(CorrectorSet {
        mesh: mesh.clone(),
        chi: [a?, b?],
        delta,
        normalization: if delta > 0.0 {
            Normalization::MeanZeroOnY
        } else {
            Normalization::MeanZeroOnMatrix
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedTensor {
    /// Row-major `Â_δ`.
    pub a_hat: [[f64; 2]; 2],
    pub delta: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// The same tensor from the energy form `⨍ A(e_j + ∇χ_j)·(e_i + ∇χ_i)`.
    pub quadratic_form: [[f64; 2]; 2],
}

impl HomogenizedTensor {
    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.a_hat[0][0], self.a_hat[0][1], self.a_hat[1][0], self.a_hat[1][1])
    }

    pub fn from_matrix(a: Mat2, delta: f64) -> Self {
        let (lo, hi) = sym_eigenvalues(&a);
        let rows = [[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]];
        HomogenizedTensor {
            a_hat: rows,
            delta,
            lambda_min: lo,
            lambda_max: hi,
            quadratic_form: rows,
        }
    }

    pub fn asymmetry(&self) -> f64 {
        (self.a_hat[0][1] - self.a_hat[1][0]).abs()
    }

    /// Largest entrywise relative gap between the average and energy forms.
    pub fn form_mismatch(&self) -> f64 {
        let scale = self.lambda_max.abs().max(f64::MIN_POSITIVE);
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.a_hat[i][j] - self.quadratic_form[i][j]).abs() / scale);
            }
        }
        m
    }
}

fn check_same_mesh(c: &CorrectorSet) -> Result<()> {
    for chi in &c.chi {
        if !Arc::ptr_eq(&chi.mesh, &c.mesh) {
            return Err(Error::MeshMismatch("corrector lives on a different mesh".into()));
        }
    }
    Ok(())
}

pub fn homogenized_tensor(correctors: &CorrectorSet, material: &MaterialTensor) -> Result<HomogenizedTensor> {
    check_same_mesh(correctors)?;
    let mesh = &correctors.mesh;
    let coeff = element_coefficients(mesh, material, 1.0, correctors.delta);
    let mut avg = Mat2::zeros();
    let mut quad = Mat2::zeros();
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        let a = coeff[t];
        let cols: [Vec2; 2] = [0, 1].map(|j| {
            let mut e = Vec2::zeros();
            e[j] = 1.0;
            e + correctors.chi[j].gradient(t)
        });
        for j in 0..2 {
            let flux = a * cols[j];
            for i in 0..2 {
                avg[(i, j)] += area * flux[i];
                quad[(i, j)] += area * cols[i].dot(&flux);
            }
        }
    }
    let total = mesh.total_area();
    avg /= total;
    quad /= total;
    let (lo, hi) = sym_eigenvalues(&avg);
    Ok(HomogenizedTensor {
        a_hat: [[avg[(0, 0)], avg[(0, 1)]], [avg[(1, 0)], avg[(1, 1)]]],
        delta: correctors.delta,
        lambda_min: lo,
        lambda_max: hi,
        quadratic_form: [[quad[(0, 0)], quad[(0, 1)]], [quad[(1, 0)], quad[(1, 1)]]],
    })
}

/// Mesh, correctors and tensor of one cell problem.
#[derive(Clone, Debug)]
pub struct CellSolution {
    pub correctors: CorrectorSet,
    pub tensor: HomogenizedTensor,
}

pub fn solve_cell(mesh: &Arc<TriMesh>, material: &MaterialTensor, delta: f64) -> Result<CellSolution> {
    let correctors = solve_correctors(mesh, material, delta)?;
    let tensor = homogenized_tensor(&correctors, material)?;
    Ok(CellSolution { correctors, tensor })
}

/// Periodic cell mesh resolving holes and material interfaces.
pub fn cell_mesh(cell: &CellGeometry, material: &MaterialTensor, h: f64) -> Result<Arc<TriMesh>> {
    Ok(Arc::new(mesh_unit_cell_for(cell, Some(material), h, true)?))
}

#[derive(Clone, Debug)]
pub struct FluxCorrectorSet {
    /// `phi[k][i][j]` is `φ_{kij}`.
    pub phi: [[[FemField; 2]; 2]; 2],
    /// `f_aux[i][j]` solves `Δ f_ij = b_ij`.
    pub f_aux: [[FemField; 2]; 2],
    /// Largest `|⨍ b_ij|` before its removal.
    pub mean_removed: f64,
    /// Largest dual norm over `(i, j)` of `b_ij − ∂_k φ_kij`.
    pub weak_residual: f64,
}

/// Tolerance on `⨍ b_ij` beyond which `Â` is declared inconsistent.
pub const MEAN_TOL: f64 = 1e-8;

/// Per-triangle `b_ij = (A_δ)_ij + (A_δ∇χ_j)_i − Â_ij`.
pub fn flux_data(correctors: &CorrectorSet, a_hat: &Mat2, material: &MaterialTensor) -> [[Vec<f64>; 2]; 2] {
    let mesh = &correctors.mesh;
    let coeff = element_coefficients(mesh, material, 1.0, correctors.delta);
    let mut b: [[Vec<f64>; 2]; 2] = Default::default();
    for j in 0..2 {
        for t in 0..mesh.n_triangles() {
            let mut e = Vec2::zeros();
            e[j] = 1.0;
            let flux = coeff[t] * (e + correctors.chi[j].gradient(t));
            for i in 0..2 {
                b[i][j].push(flux[i] - a_hat[(i, j)]);
            }
        }
    }
    b
}

/// Area-weighted nodal average of a piecewise constant function, pooled over
/// periodically identified vertices.
fn periodic_nodal_average(mesh: &TriMesh, per_triangle: &[f64]) -> Vec<f64> {
    let n = mesh.n_vertices();
    let rep = |v: usize| mesh.periodic_rep.as_ref().map_or(v, |r| r[v] as usize);
    let mut acc = vec![0.0; n];
    let mut w = vec![0.0; n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.area(t);
        for &v in tri {
            let r = rep(v as usize);
            acc[r] += a * per_triangle[t];
            w[r] += a;
        }
    }
    (0..n).map(|v| acc[rep(v)] / w[rep(v)]).collect()
}

fn laplacian_system(mesh: &TriMesh, with_mass: bool) -> Result<(CsrMatrix, DofMap)> {
    let dofs = DofMap::periodic(mesh, None)?;
    let coeff = vec![Mat2::identity(); mesh.n_triangles()];
    let mut sys = assemble(mesh, &coeff, &vec![0.0; mesh.n_vertices()], dofs)?;
    if with_mass {
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let m = mesh.area(t) / 12.0;
            for (a, &va) in tri.iter().enumerate() {
                let DofSlot::Free(i) = sys.dofs.slots[va as usize] else { continue };
                for (b, &vb) in tri.iter().enumerate() {
                    if let DofSlot::Free(k) = sys.dofs.slots[vb as usize] {
                        sys.matrix.add(i as usize, k as usize, if a == b { 2.0 * m } else { m });
                    }
                }
            }
        }
    }
    Ok((sys.matrix, sys.dofs))
}

fn gather(dofs: &DofMap, nodal: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dofs.n_free];
    for (v, s) in dofs.slots.iter().enumerate() {
        if let DofSlot::Free(i) = s {
            out[*i as usize] += nodal[v];
        }
    }
    out
}

fn scatter(dofs: &DofMap, x: &[f64]) -> Vec<f64> {
    dofs.slots
        .iter()
        .map(|s| match s {
            DofSlot::Free(i) => x[*i as usize],
            _ => 0.0,
        })
        .collect()
}

/// Nodal load `∫ c ψ_v` of a piecewise constant `c`.
fn constant_load(mesh: &TriMesh, c: &[f64]) -> Vec<f64> {
    let mut load = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let w = mesh.area(t) * c[t] / 3.0;
        for &v in tri {
            load[v as usize] += w;
        }
    }
    load
}

/// Flux correctors `φ_{kij} = ∂_k f_ij − ∂_i f_kj` with `Δ f_ij = b_ij`.
pub fn flux_correctors(correctors: &CorrectorSet, a_hat: &HomogenizedTensor, material: &MaterialTensor) -> Result<FluxCorrectorSet> {
    check_same_mesh(correctors)?;
    let mesh = &correctors.mesh;
    let total = mesh.total_area();
    let mut b = flux_data(correctors, &a_hat.matrix(), material);
    let mut mean_removed: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let mean = (0..mesh.n_triangles()).map(|t| mesh.area(t) * b[i][j][t]).sum::<f64>() / total;
            if mean.abs() > MEAN_TOL {
                return Err(Error::NonZeroMean { i, j, mean });
            }
            mean_removed = mean_removed.max(mean.abs());
            for x in b[i][j].iter_mut() {
                *x -= mean;
            }
        }
    }
    let (lap, dofs) = laplacian_system(mesh, false)?;
    let weights = mesh.lumped_areas(|_| true);
    let solve_one = |data: &Vec<f64>| -> Result<FemField> {
        let load: Vec<f64> = constant_load(mesh, data).iter().map(|x| -x).collect();
        let opts = CgOptions {
            tol: CELL_TOL,
            max_iter: None,
            constant_kernel: true,
        };
        let (x, _) = pcg(&lap, &gather(&dofs, &load), opts)?;
        let mut values = scatter(&dofs, &x);
        let mean = dot(&values, &weights) / total;
        values.iter_mut().for_each(|v| *v -= mean);
        FemField::new(mesh.clone(), values)
    };
    let flat: Vec<Result<FemField>> = {
        use rayon::prelude::*;
        [(0, 0), (0, 1), (1, 0), (1, 1)].par_iter().map(|&(i, j)| solve_one(&b[i][j])).collect()
    };
    let mut it = flat.into_iter();
    let mut next = || it.next().unwrap();
    let f_aux = [[next()?, next()?], [next()?, next()?]];

    // gradients of every f_ij on every triangle
    let grad: Vec<[[Vec2; 2]; 2]> = (0..mesh.n_triangles())
        .map(|t| [0, 1].map(|i| [0, 1].map(|j| f_aux[i][j].gradient(t))))
        .collect();
    let component = |k: usize, i: usize, j: usize| -> Vec<f64> {
        let per_tri: Vec<f64> = grad.iter().map(|g| g[i][j][k] - g[k][j][i]).collect();
        periodic_nodal_average(mesh, &per_tri)
    };
    let mut phi: [[[FemField; 2]; 2]; 2] = std::array::from_fn(|_| {
        std::array::from_fn(|_| std::array::from_fn(|_| FemField::zeros(mesh.clone())))
    });
    for j in 0..2 {
        for k in 0..2 {
            for i in 0..2 {
                if k == i {
                    continue;
                }
                if k < i {
                    phi[k][i][j] = FemField::new(mesh.clone(), component(k, i, j))?;
                } else {
                    let neg = phi[i][k][j].values.iter().map(|x| -x).collect();
                    phi[k][i][j] = FemField::new(mesh.clone(), neg)?;
                }
            }
        }
    }
    let weak_residual = divergence_residual(mesh, &b, &phi)?;
    Ok(FluxCorrectorSet {
        phi,
        f_aux,
        mean_removed,
        weak_residual,
    })
}

/// Largest `H⁻¹`-type norm over `(i, j)` of `b_ij − ∂_k φ_kij`: the
/// functional `ψ ↦ ∫ b_ij ψ + ∫ φ_kij ∂_k ψ` measured in the dual of the
/// periodic `H¹` norm.
pub fn divergence_residual(mesh: &Arc<TriMesh>, b: &[[Vec<f64>; 2]; 2], phi: &[[[FemField; 2]; 2]; 2]) -> Result<f64> {
    let (gram, dofs) = laplacian_system(mesh, true)?;
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let mut r = constant_load(mesh, &b[i][j]);
            for (t, tri) in mesh.triangles.iter().enumerate() {
                let g = mesh.hat_gradients(t);
                let area = mesh.area(t);
                let mut mean = Vec2::zeros();
                for k in 0..2 {
                    mean[k] = tri.iter().map(|&v| phi[k][i][j].values[v as usize]).sum::<f64>() / 3.0;
                }
                for a in 0..3 {
                    r[tri[a] as usize] += area * mean.dot(&g[a]);
                }
            }
            let rf = gather(&dofs, &r);
            let opts = CgOptions {
                tol: 1e-10,
                max_iter: None,
                constant_kernel: false,
            };
            let (z, _) = pcg(&gram, &rf, opts)?;
            worst = worst.max(dot(&rf, &z).max(0.0).sqrt());
        }
    }
    Ok(worst)
}

/// `max_j |∫ b_ij ∂_i ψ| / (‖b_·j‖ ‖∇ψ‖)` for a nodal periodic test field
/// `ψ`; zero up to solver tolerance because the columns of `b` are
/// divergence free against the discrete periodic space.
pub fn divergence_probe(mesh: &TriMesh, b: &[[Vec<f64>; 2]; 2], psi: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    let grad: Vec<Vec2> = (0..mesh.n_triangles()).map(|t| mesh.gradient(t, psi)).collect();
    let grad_norm = (0..mesh.n_triangles()).map(|t| mesh.area(t) * grad[t].norm_squared()).sum::<f64>().sqrt();
    for j in 0..2 {
        let mut pairing = 0.0;
        let mut b_norm = 0.0;
        for t in 0..mesh.n_triangles() {
            let a = mesh.area(t);
            pairing += a * (b[0][j][t] * grad[t].x + b[1][j][t] * grad[t].y);
            b_norm += a * (b[0][j][t].powi(2) + b[1][j][t].powi(2));
        }
        let scale = b_norm.sqrt() * grad_norm;
        if scale > 0.0 {
            worst = worst.max(pairing.abs() / scale);
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationTable {
    pub deltas: Vec<f64>,
    /// Frobenius norm of `Â_δ − Â_0` per entry of `deltas`.
    pub deviations: Vec<f64>,
    pub reference: HomogenizedTensor,
    pub fit: Option<RateFit>,
}

/// `‖Â_δ − Â_0‖_F` over a grid of `δ ∈ (0, 1]` with a log-log slope.
pub fn contrast_deviation(mesh: &Arc<TriMesh>, material: &MaterialTensor, delta_grid: &[f64]) -> Result<DeviationTable> {
    let zero = solve_cell(mesh, material, 0.0)?.tensor;
    let mut deviations = Vec::with_capacity(delta_grid.len());
    for &d in delta_grid {
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::InvalidInput(format!("delta = {d} outside (0, 1]")));
        }
        let t = solve_cell(mesh, material, d)?.tensor;
        deviations.push((t.matrix() - zero.matrix()).norm());
    }
    let pairs: Vec<(f64, f64)> = delta_grid.iter().copied().zip(deviations.iter().copied()).collect();
    let fit = if pairs.len() >= 3 && pairs.iter().all(|p| p.1 > 0.0) {
        Some(fit_rate(&pairs)?)
    } else {
        None
    };
    Ok(DeviationTable {
        deltas: delta_grid.to_vec(),
        deviations,
        reference: zero,
        fit,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityWindow {
    pub min_lambda: f64,
    pub max_lambda: f64,
    /// `max λ_min / min λ_min` over the sequence.
    pub degradation: f64,
    /// Set when `degradation > 3`.
    pub flagged: bool,
}

pub fn ellipticity_bounds(tensors: &[HomogenizedTensor]) -> Result<EllipticityWindow> {
    if tensors.is_empty() {
        return Err(Error::InvalidInput("no tensors".into()));
    }
    let min_lambda = tensors.iter().map(|t| t.lambda_min).fold(f64::INFINITY, f64::min);
    let top = tensors.iter().map(|t| t.lambda_min).fold(f64::NEG_INFINITY, f64::max);
    let max_lambda = tensors.iter().map(|t| t.lambda_max).fold(f64::NEG_INFINITY, f64::max);
    let degradation = top / min_lambda;
    Ok(EllipticityWindow {
        min_lambda,
        max_lambda,
        degradation,
        flagged: !(degradation <= 3.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesher::mesh_unit_cell;

    fn identity_cell(h: f64) -> Arc<TriMesh> {
        Arc::new(mesh_unit_cell(&CellGeometry::empty(), h, true).unwrap())
    }

    #[test]
    fn identity_without_holes_is_trivial() {
        let mesh = identity_cell(0.1);
        for delta in [0.0, 0.5, 1.0] {
            let s = solve_cell(&mesh, &MaterialTensor::identity(), delta).unwrap();
            assert!(s.correctors.chi.iter().all(|c| c.max_abs() < 1e-12));
            assert!((s.tensor.matrix() - Mat2::identity()).abs().max() < 1e-10);
            let f = flux_correctors(&s.correctors, &s.tensor, &MaterialTensor::identity()).unwrap();
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        assert!(f.phi[k][i][j].max_abs() < 1e-12);
                    }
                }
            }
        }
    }

    /// One dimensional cell solution for `a(y1)` piecewise constant on the
    /// two halves: `∂₁χ₁ = ā_h / a − 1` with the harmonic mean `ā_h`.
    fn laminate_chi(y: f64, lo: f64, hi: f64) -> f64 {
        let harm = 2.0 / (1.0 / lo + 1.0 / hi);
        // slopes on each half, integrated from 0 and shifted to mean zero
        let s_lo = harm / lo - 1.0;
        let s_hi = harm / hi - 1.0;
        let raw = |y: f64| if y <= 0.5 { s_lo * y } else { s_lo * 0.5 + s_hi * (y - 0.5) };
        // mean of the raw profile over [0, 1]
        let mean = s_lo * 0.125 + s_lo * 0.25 + s_hi * 0.125;
        raw(y) - mean
    }

    #[test]
    fn laminate_matches_one_dimensional_solution() {
        let mat = MaterialTensor::laminate_half(1.0, 4.0).unwrap();
        let mesh = cell_mesh(&CellGeometry::empty(), &mat, 1.0 / 32.0).unwrap();
        let s = solve_cell(&mesh, &mat, 1.0).unwrap();
        // which half carries the low value is decided by the material
        let lo_first = mat.eval(vec2(0.25, 0.5))[(0, 0)] < 2.0;
        let (a, b) = if lo_first { (1.0, 4.0) } else { (4.0, 1.0) };
        for (v, p) in mesh.vertices.iter().enumerate() {
            let exact = laminate_chi(p.x, a, b);
            assert!((s.correctors.chi[0].values[v] - exact).abs() < 1e-8, "{} vs {}", s.correctors.chi[0].values[v], exact);
        }
        assert!(s.correctors.chi[1].max_abs() < 1e-10);
        let a_hat = s.tensor.matrix();
        assert!((a_hat[(0, 0)] - 1.6).abs() < 1e-8);
        assert!((a_hat[(1, 1)] - 2.5).abs() < 1e-8);
        let f = flux_correctors(&s.correctors, &s.tensor, &mat).unwrap();
        assert!(f.f_aux[0][0].max_abs() < 1e-8);
    }

    #[test]
    fn disk_cell_tensor_properties() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let mat = MaterialTensor::identity();
        let mesh = cell_mesh(&cell, &mat, 1.0 / 32.0).unwrap();
        let mut tensors = Vec::new();
        for delta in [0.0, 0.3, 1.0] {
            let s = solve_cell(&mesh, &mat, delta).unwrap();
            assert!(s.tensor.asymmetry() < 1e-8);
            assert!(s.tensor.form_mismatch() < 1e-8, "{}", s.tensor.form_mismatch());
            for j in 0..2 {
                assert!(s.correctors.normalization_integral(j).abs() < 1e-10);
            }
            tensors.push(s.tensor);
        }
        // δ = 1 with A = I has no microstructure at all
        assert!((tensors[2].matrix() - Mat2::identity()).abs().max() < 1e-10);
        // the tensor increases with the conductivity of the holes
        assert!(tensors[0].lambda_min < tensors[1].lambda_min && tensors[1].lambda_min < tensors[2].lambda_min);
        let w = ellipticity_bounds(&tensors).unwrap();
        assert!(!w.flagged);
    }

    #[test]
    fn flux_correctors_are_antisymmetric_and_mean_zero() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let mat = MaterialTensor::oscillating(0.5).unwrap();
        let mesh = cell_mesh(&cell, &mat, 1.0 / 16.0).unwrap();
        let s = solve_cell(&mesh, &mat, 0.2).unwrap();
        let f = flux_correctors(&s.correctors, &s.tensor, &mat).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    for v in 0..mesh.n_vertices() {
                        assert_eq!(f.phi[k][i][j].values[v], -f.phi[i][k][j].values[v]);
                    }
                    assert!(f.phi[k][i][j].integral(|_| true).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn inconsistent_tensor_is_detected() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let mat = MaterialTensor::identity();
        let mesh = cell_mesh(&cell, &mat, 1.0 / 16.0).unwrap();
        let s = solve_cell(&mesh, &mat, 0.5).unwrap();
        let wrong = HomogenizedTensor::from_matrix(s.tensor.matrix() * 1.1, 0.5);
        assert!(matches!(flux_correctors(&s.correctors, &wrong, &mat), Err(Error::NonZeroMean { .. })));
    }

    #[test]
    fn deviation_vanishes_without_holes() {
        let mesh = identity_cell(0.125);
        let table = contrast_deviation(&mesh, &MaterialTensor::identity(), &[0.4, 0.2, 0.1]).unwrap();
        assert!(table.deviations.iter().all(|d| *d < 1e-10));
        assert!(table.fit.is_none());
    }
}
