//! Boundary value problems and the two-scale expansion on whole domains.

use std::f64::consts::PI;
use std::sync::Arc;

use perfhom::analysis::smoothing::{CutoffFunction, MollifierKernel};
use perfhom::analysis::{expansion_error, fit_rate, homogenized_solution, two_scale_expansion, SampledField};
use perfhom::bvp::{solve_dirichlet, solve_neumann};
use perfhom::cell::{solve_cell, CorrectorSet, Normalization};
use perfhom::fem::field::{region_norm, FemField, NormKind, Weight};
use perfhom::fem::flux::conormal_flux;
use perfhom::fem::mesher::{mesh_domain, mesh_domain_for};
use perfhom::geometry::{build_perforated_domain, CellGeometry, MaterialTensor, OmegaSpec, Rect, Vec2};

#[test]
fn neumann_flux_recovery_converges() {
    let g = |p: Vec2| (2.0 * PI * p.x).cos() * (2.0 * PI * p.y).cos();
    let mat = MaterialTensor::identity();
    let mut pairs = Vec::new();
    for n in [4, 8, 16] {
        let d = build_perforated_domain(n, &CellGeometry::empty(), OmegaSpec::UnitSquare).unwrap();
        let h = 1.0 / (4 * n) as f64;
        let mesh = Arc::new(mesh_domain(&d, h).unwrap());
        let u = solve_neumann(&d, &mesh, &mat, 1.0, &g).unwrap();
        let flux = conormal_flux(&u.field, &u.coeff, &vec![0.0; mesh.n_vertices()]);
        // Simpson on each edge of (flux - g)², flux linear along the edge
        let mut err = 0.0;
        for (e, &[fa, fb]) in flux.ends.iter().enumerate() {
            let [a, b] = flux.edges[e];
            let (pa, pb) = (mesh.vertices[a as usize], mesh.vertices[b as usize]);
            let m = (pa + pb) * 0.5;
            let (ea, em, eb) = (fa - g(pa), 0.5 * (fa + fb) - g(m), fb - g(pb));
            err += flux.edge_length(&mesh, e) / 6.0 * (ea * ea + 4.0 * em * em + eb * eb);
        }
        pairs.push((h, err.sqrt()));
    }
    let slope = fit_rate(&pairs).unwrap().slope;
    assert!(slope >= 0.8, "{pairs:?}");
}

#[test]
fn delta_to_zero_family_converges_quadratically() {
    let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
    let d = build_perforated_domain(8, &cell, OmegaSpec::UnitSquare).unwrap();
    let mat = MaterialTensor::identity();
    let mesh = Arc::new(mesh_domain(&d, 1.0 / 64.0).unwrap());
    let f = |p: Vec2| p.x;
    let u0 = solve_dirichlet(&d, &mesh, &mat, 0.0, &f).unwrap();
    let mut pairs = Vec::new();
    for delta in [0.4, 0.2, 0.1, 0.05] {
        let u = solve_dirichlet(&d, &mesh, &mat, delta, &f).unwrap();
        let diff: Vec<f64> = u.field.values.iter().zip(&u0.field.values).map(|(a, b)| a - b).collect();
        let diff = FemField::new(mesh.clone(), diff).unwrap();
        let norm = region_norm(&diff, |t| mesh.is_matrix(t), Weight::None, NormKind::H1Semi).unwrap();
        pairs.push((delta, norm));
    }
    let slope = fit_rate(&pairs).unwrap().slope;
    assert!((slope - 2.0).abs() <= 0.3, "{pairs:?}");
}

#[test]
fn laminate_correctors_capture_the_oscillation() {
    let mat = MaterialTensor::laminate_half(1.0, 4.0).unwrap();
    let d = build_perforated_domain(8, &CellGeometry::empty(), OmegaSpec::UnitSquare).unwrap();
    let mesh = Arc::new(mesh_domain_for(&d, Some(&mat), 1.0 / 64.0).unwrap());
    let f = |p: Vec2| p.x;
    let u = solve_dirichlet(&d, &mesh, &mat, 1.0, &f).unwrap();
    let cm = mesh.tiling.as_ref().unwrap().cell_mesh.clone();
    let cell = solve_cell(&cm, &mat, 1.0).unwrap();
    let v = SampledField::new(homogenized_solution(Rect::unit(), &cell.tensor.matrix(), &f, 1.0 / 128.0).unwrap());
    // at ε = 1/8 wider cutoff bands cover most of the square; the band only
    // has to clear the mollifier reach ε/2
    let cutoff = CutoffFunction::new(d.epsilon, 0.5, 0.75);
    let kernel = MollifierKernel::new();
    let w = two_scale_expansion(&u, &Rect::unit(), &v, &cell.correctors, &cutoff, &kernel).unwrap();
    let with = expansion_error(&w, &u).unwrap().weighted_gradient;
    let zero = CorrectorSet {
        mesh: cm.clone(),
        chi: [FemField::zeros(cm.clone()), FemField::zeros(cm)],
        delta: 1.0,
        normalization: Normalization::MeanZeroOnY,
    };
    let bare = two_scale_expansion(&u, &Rect::unit(), &v, &zero, &cutoff, &kernel).unwrap();
    let without = expansion_error(&bare, &u).unwrap().weighted_gradient;
    assert!(without >= 2.0 * with, "with {with}, without {without}");
}
