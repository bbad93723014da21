//! Sweep drivers. Every study evaluates independent sweep points in
//! parallel and merges them in key order, so output is independent of the
//! thread count.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    boundary_layer_norm, expansion_error, fit_rate, homogenized_solution, ntmf, rellich_ratio, two_scale_expansion,
    CutoffFunction, MollifierKernel, NtmfVariant, RateFit, SampledField,
};
use crate::bvp::{greens_function, hole_distance, solve_dirichlet, solve_neumann, BvpSolution, BVP_TOL};
use crate::cell::{cell_mesh, CELL_TOL};
use crate::error::{Error, Result};
use crate::fem::field::{region_norm, NormKind, Weight};
use crate::fem::flux::boundary_trace;
use crate::fem::locate::PointLocator;
use crate::fem::mesh::TriMesh;
use crate::fem::mesher::mesh_domain_for;
use crate::geometry::{build_perforated_domain, vec2, CellGeometry, MaterialTensor, PerforatedDomain, Vec2};
use crate::study::cache::{cached_cell, CorrectorCache};
use crate::study::config::{DataPreset, StudyConfig, StudyKind, Threshold};

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub study: String,
    pub epsilon: f64,
    pub delta: f64,
    pub h: f64,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub label: String,
    pub fit: RateFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub metric: String,
    /// `None` when the study produced no such summary value.
    pub value: Option<f64>,
    pub threshold: Threshold,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSize {
    pub epsilon: f64,
    pub h: f64,
    pub vertices: usize,
    pub triangles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub bvp_tol: f64,
    pub cell_tol: f64,
    pub meshes: Vec<MeshSize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub study: StudyKind,
    pub records: Vec<Record>,
    pub rates: Vec<RateRecord>,
    pub summary: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
    pub provenance: Provenance,
}

impl StudyResult {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Shared resources of a run.
#[derive(Clone, Debug, Default)]
pub struct RunContext {
    pub cache: Option<CorrectorCache>,
}

/// Output of one sweep point.
#[derive(Default)]
struct Part {
    records: Vec<Record>,
    meshes: Vec<MeshSize>,
}

impl Part {
    fn push(&mut self, study: StudyKind, epsilon: f64, delta: f64, h: f64, metric: &str, value: f64) {
        self.records.push(Record {
            study: study.name().into(),
            epsilon,
            delta,
            h,
            metric: metric.into(),
            value,
        });
    }

    fn mesh(&mut self, epsilon: f64, mesh: &TriMesh) {
        self.meshes.push(MeshSize {
            epsilon,
            h: mesh.h,
            vertices: mesh.n_vertices(),
            triangles: mesh.n_triangles(),
        });
    }
}

struct Setup<'a> {
    cfg: &'a StudyConfig,
    ctx: &'a RunContext,
    cell: CellGeometry,
    material: MaterialTensor,
}

impl Setup<'_> {
    fn domain(&self, epsilon: f64) -> Result<PerforatedDomain> {
        build_perforated_domain((1.0 / epsilon).round() as usize, &self.cell, self.cfg.omega)
    }

    fn mesh(&self, domain: &PerforatedDomain, h: f64) -> Result<Arc<TriMesh>> {
        Ok(Arc::new(mesh_domain_for(domain, Some(&self.material), h)?))
    }

    fn h(&self, epsilon: f64) -> f64 {
        epsilon / self.cfg.h_divisor
    }

    fn dirichlet(&self, domain: &PerforatedDomain, mesh: &Arc<TriMesh>, delta: f64, data: DataPreset) -> Result<BvpSolution> {
        let omega = domain.omega;
        solve_dirichlet(domain, mesh, &self.material, delta, &|p| data.eval(&omega, p))
    }
}

fn max_over_min(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let hi = v.clone().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.fold(f64::INFINITY, f64::min);
    hi / lo
}

fn with_context<T>(study: StudyKind, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::ConfigError(m) => Error::ConfigError(format!("{}: {m}", study.name())),
        other => {
            log::error!("study {} failed: {other}", study.name());
            other
        }
    })
}

pub fn run_study(cfg: &StudyConfig, ctx: &RunContext) -> Result<StudyResult> {
    cfg.validate()?;
    let setup = Setup {
        cfg,
        ctx,
        cell: cfg.cell.build()?,
        material: cfg.material.build()?,
    };
    let mut rates = Vec::new();
    let mut summary = BTreeMap::new();
    let parts = with_context(
        cfg.study,
        match cfg.study {
            StudyKind::Contrast => contrast(&setup, &mut rates, &mut summary),
            StudyKind::Expansion => expansion(&setup, &mut rates, &mut summary),
            StudyKind::Layer => layer(&setup, &mut rates, &mut summary),
            StudyKind::Ntmf => ntmf_study(&setup, &mut summary),
            StudyKind::Rellich => rellich(&setup, &mut summary),
            StudyKind::Green => green(&setup, &mut rates, &mut summary),
            StudyKind::Continuity => continuity(&setup, &mut rates, &mut summary),
        },
    )?;
    let mut records = Vec::new();
    let mut meshes = Vec::new();
    for p in parts {
        records.extend(p.records);
        meshes.extend(p.meshes);
    }
    let verdicts = cfg
        .thresholds
        .iter()
        .map(|(name, t)| {
            let value = summary.get(name).copied();
            Verdict {
                metric: name.clone(),
                value,
                threshold: *t,
                pass: value.is_some_and(|v| t.accepts(v)),
            }
        })
        .collect();
    Ok(StudyResult {
        study: cfg.study,
        records,
        rates,
        summary,
        verdicts,
        provenance: Provenance {
            config_hash: cfg.hash(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: cfg.seed,
            bvp_tol: BVP_TOL,
            cell_tol: CELL_TOL,
            meshes,
        },
    })
}

fn fit(label: String, pairs: &[(f64, f64)], rates: &mut Vec<RateRecord>) -> Result<f64> {
    let f = fit_rate(pairs)?;
    let slope = f.slope;
    rates.push(RateRecord { label, fit: f });
    Ok(slope)
}

fn contrast(s: &Setup, rates: &mut Vec<RateRecord>, summary: &mut BTreeMap<String, f64>) -> Result<Vec<Part>> {
    let study = StudyKind::Contrast;
    let h = s.cfg.options.cell_h;
    let mesh = cell_mesh(&s.cell, &s.material, h)?;
    let mut deltas = vec![0.0];
    deltas.extend(s.cfg.deltas.iter().copied().filter(|d| *d > 0.0));
    let cells: Vec<_> = deltas
        .par_iter()
        .map(|&d| cached_cell(s.ctx.cache.as_ref(), &mesh, &s.material, d))
        .collect::<Result<_>>()?;
    let reference = cells[0].tensor.matrix();
    let mut part = Part::default();
    part.mesh(1.0, &mesh);
    let mut pairs = Vec::new();
    let mut energies = Vec::new();
    let mut mismatch: f64 = 0.0;
    for (d, c) in deltas.iter().zip(&cells) {
        let t = &c.tensor;
        part.push(study, 1.0, *d, h, "a11", t.a_hat[0][0]);
        part.push(study, 1.0, *d, h, "a12", t.a_hat[0][1]);
        part.push(study, 1.0, *d, h, "a22", t.a_hat[1][1]);
        part.push(study, 1.0, *d, h, "lambda_min", t.lambda_min);
        part.push(study, 1.0, *d, h, "lambda_max", t.lambda_max);
        let e: f64 = c.correctors.energies().iter().sum();
        part.push(study, 1.0, *d, h, "corrector_energy", e);
        energies.push(e);
        mismatch = mismatch.max(t.form_mismatch());
        if *d > 0.0 {
            let dev = (t.matrix() - reference).norm();
            part.push(study, 1.0, *d, h, "deviation", dev);
            pairs.push((*d, dev));
        }
    }
    let lambdas: Vec<f64> = cells.iter().map(|c| c.tensor.lambda_min).collect();
    summary.insert("slope".into(), fit("deviation vs delta".into(), &pairs, rates)?);
    summary.insert("lambda_degradation".into(), max_over_min(lambdas.iter().copied()));
    summary.insert("min_lambda".into(), lambdas.iter().copied().fold(f64::INFINITY, f64::min));
    summary.insert("energy_max_over_min".into(), max_over_min(energies.iter().copied()));
    summary.insert("max_form_mismatch".into(), mismatch);
    Ok(vec![part])
}

/// `‖Λ∇w‖` at one `(ε, δ)` with the given mesh sizes.
fn expansion_point(s: &Setup, epsilon: f64, delta: f64, h: f64, hv: f64, part: &mut Part) -> Result<f64> {
    let domain = s.domain(epsilon)?;
    let mesh = s.mesh(&domain, h)?;
    part.mesh(epsilon, &mesh);
    let u = s.dirichlet(&domain, &mesh, delta, s.cfg.data)?;
    // the discrete limit of a tiled mesh is the tensor of its own cell mesh
    let cm = mesh
        .tiling
        .as_ref()
        .ok_or_else(|| Error::MeshMismatch("expansion needs a tiled mesh".into()))?
        .cell_mesh
        .clone();
    let cell = cached_cell(s.ctx.cache.as_ref(), &cm, &s.material, delta)?;
    let omega = domain.omega;
    let data = s.cfg.data;
    let v = homogenized_solution(omega, &cell.tensor.matrix(), &|p| data.eval(&omega, p), hv)?;
    let v = SampledField::new(v);
    let c = s.cfg.options.cutoff;
    let cutoff = CutoffFunction::new(epsilon, c.inner, c.outer);
    let w = two_scale_expansion(&u, &omega, &v, &cell.correctors, &cutoff, &MollifierKernel::new())?;
    let r = expansion_error(&w, &u)?;
    let study = StudyKind::Expansion;
    part.push(study, epsilon, delta, h, "weighted_gradient", r.weighted_gradient);
    part.push(study, epsilon, delta, h, "perforated_gradient", r.perforated_gradient);
    part.push(study, epsilon, delta, h, "l2", r.l2);
    part.push(study, epsilon, delta, h, "tangential_data", r.tangential_data);
    part.push(study, epsilon, delta, h, "solution_gradient", r.solution_gradient);
    part.push(study, epsilon, delta, h, "bound_ratio", r.ratio);
    Ok(r.weighted_gradient)
}

fn expansion(s: &Setup, rates: &mut Vec<RateRecord>, summary: &mut BTreeMap<String, f64>) -> Result<Vec<Part>> {
    let study = StudyKind::Expansion;
    let hv = s.cfg.options.homogenized_h;
    let n_ctrl = s.cfg.options.control_points.min(s.cfg.epsilons.len());
    // (delta, epsilon, refined)
    let mut points = Vec::new();
    for &d in &s.cfg.deltas {
        for (k, &e) in s.cfg.epsilons.iter().enumerate() {
            points.push((d, e, false));
            if k < n_ctrl {
                points.push((d, e, true));
            }
        }
    }
    let out: Vec<(Part, f64)> = points
        .par_iter()
        .map(|&(d, e, refined)| {
            let mut part = Part::default();
            let (h, hv) = if refined { (s.h(e) / 2.0, hv / 2.0) } else { (s.h(e), hv) };
            let norm = expansion_point(s, e, d, h, hv, &mut part)?;
            if refined {
                // control rows are kept apart from the measured ones
                for r in part.records.iter_mut() {
                    r.metric = format!("control_{}", r.metric);
                }
            }
            Ok((part, norm))
        })
        .collect::<Result<_>>()?;
    let mut min_slope = f64::INFINITY;
    let mut max_floor: f64 = 0.0;
    let mut parts = Vec::new();
    let mut it = out.into_iter();
    for &d in &s.cfg.deltas {
        let mut pairs = Vec::new();
        for (k, &e) in s.cfg.epsilons.iter().enumerate() {
            let (part, norm) = it.next().expect("one result per point");
            pairs.push((e, norm));
            parts.push(part);
            if k < n_ctrl {
                let (control, fine) = it.next().expect("one result per point");
                let floor = (norm - fine).abs();
                let mut extra = Part::default();
                extra.push(study, e, d, s.h(e), "floor", floor);
                extra.push(study, e, d, s.h(e), "floor_ratio", floor / norm);
                max_floor = max_floor.max(floor / norm);
                parts.push(control);
                parts.push(extra);
            }
        }
        min_slope = min_slope.min(fit(format!("weighted_gradient vs epsilon, delta = {d}"), &pairs, rates)?);
    }
    summary.insert("min_slope".into(), min_slope);
    summary.insert("max_floor_ratio".into(), max_floor);
    Ok(parts)
}

fn layer(s: &Setup, rates: &mut Vec<RateRecord>, summary: &mut BTreeMap<String, f64>) -> Result<Vec<Part>> {
    let study = StudyKind::Layer;
    let width = s.cfg.options.layer_width.unwrap_or(s.cell.kappa);
    let mut points = Vec::new();
    for neumann in [false, true] {
        for &d in &s.cfg.deltas {
            for &e in &s.cfg.epsilons {
                points.push((neumann, d, e));
            }
        }
    }
    let out: Vec<(Part, f64)> = points
        .par_iter()
        .map(|&(neumann, d, e)| {
            let mut part = Part::default();
            let domain = s.domain(e)?;
            let mesh = s.mesh(&domain, s.h(e))?;
            part.mesh(e, &mesh);
            let omega = domain.omega;
            let u = if neumann {
                let g = s.cfg.options.neumann_data;
                solve_neumann(&domain, &mesh, &s.material, d, &|p| g.eval(&omega, p))?
            } else {
                s.dirichlet(&domain, &mesh, d, s.cfg.data)?
            };
            let energy = boundary_layer_norm(&u.field, &omega, width * e);
            let name = if neumann { "layer_neumann" } else { "layer_dirichlet" };
            part.push(study, e, d, s.h(e), name, energy);
            part.push(study, e, d, s.h(e), &format!("{name}_over_eps"), energy / e);
            Ok((part, energy))
        })
        .collect::<Result<_>>()?;
    let mut min_slope = f64::INFINITY;
    for (chunk, (neumann, d, _)) in out.chunks(s.cfg.epsilons.len()).zip(points.iter().step_by(s.cfg.epsilons.len())) {
        let pairs: Vec<(f64, f64)> = s.cfg.epsilons.iter().copied().zip(chunk.iter().map(|c| c.1)).collect();
        let kind = if *neumann { "neumann" } else { "dirichlet" };
        min_slope = min_slope.min(fit(format!("{kind} layer energy vs epsilon, delta = {d}"), &pairs, rates)?);
    }
    summary.insert("min_slope".into(), min_slope);
    Ok(out.into_iter().map(|p| p.0).collect())
}

fn grid(s: &Setup) -> Vec<(f64, f64)> {
    let mut points = Vec::new();
    for &e in &s.cfg.epsilons {
        for &d in &s.cfg.deltas {
            points.push((e, d));
        }
    }
    points
}

fn ntmf_study(s: &Setup, summary: &mut BTreeMap<String, f64>) -> Result<Vec<Part>> {
    let study = StudyKind::Ntmf;
    let c0 = s.cfg.options.aperture;
    let out: Vec<(Part, [f64; 3])> = grid(s)
        .par_iter()
        .map(|&(e, d)| {
            let mut part = Part::default();
            let domain = s.domain(e)?;
            let mesh = s.mesh(&domain, s.h(e))?;
            part.mesh(e, &mesh);
            let u = s.dirichlet(&domain, &mesh, d, s.cfg.data)?;
            let f_norm = boundary_trace(&u.field).l2_norm(&mesh);
            let n = ntmf(&u.field, &domain.omega, c0, NtmfVariant::N);
            let nt = ntmf(&u.field, &domain.omega, c0, NtmfVariant::NTilde);
            let ratio = n.l2_norm() / f_norm;
            // pointwise N ≤ C Ñ: the smallest admissible C
            let c = n
                .values
                .iter()
                .zip(&nt.values)
                .filter(|(a, _)| **a > 0.0)
                .map(|(a, b)| a / b)
                .fold(0.0f64, f64::max);
            let h = s.h(e);
            part.push(study, e, d, h, "ntmf_ratio", ratio);
            part.push(study, e, d, h, "ntilde_ratio", nt.l2_norm() / f_norm);
            part.push(study, e, d, h, "n_over_ntilde", c);
            part.push(study, e, d, h, "empty_cones", n.empty_cones as f64);
            part.push(study, e, d, h, "energy_constant", u.energy.estimate_constant());
            Ok((part, [ratio, c, u.energy.estimate_constant()]))
        })
        .collect::<Result<_>>()?;
    summary.insert("max_over_min".into(), max_over_min(out.iter().map(|o| o.1[0])));
    summary.insert("max_n_over_ntilde".into(), out.iter().map(|o| o.1[1]).fold(0.0, f64::max));
    summary.insert("energy_max_over_min".into(), max_over_min(out.iter().map(|o| o.1[2])));
    Ok(out.into_iter().map(|p| p.0).collect())
}

fn rellich(s: &Setup, summary: &mut BTreeMap<String, f64>) -> Result<Vec<Part>> {
    let study = StudyKind::Rellich;
    let mut points = Vec::new();
    for &data in &s.cfg.options.rellich_data {
        for (e, d) in grid(s) {
            points.push((data, e, d));
        }
    }
    let out: Vec<(Part, f64)> = points
        .par_iter()
        .map(|&(data, e, d)| {
            let mut part = Part::default();
            let domain = s.domain(e)?;
            let mesh = s.mesh(&domain, s.h(e))?;
            part.mesh(e, &mesh);
            let u = s.dirichlet(&domain, &mesh, d, data)?;
            let r = rellich_ratio(&u.field, &u.coeff)?;
            part.push(study, e, d, s.h(e), &format!("rellich_{}", data.name()), r.ratio);
            Ok((part, r.ratio))
        })
        .collect::<Result<_>>()?;
    summary.insert("min_ratio".into(), out.iter().map(|o| o.1).fold(f64::INFINITY, f64::min));
    summary.insert("max_ratio".into(), out.iter().map(|o| o.1).fold(0.0, f64::max));
    Ok(out.into_iter().map(|p| p.0).collect())
}

fn green(s: &Setup, rates: &mut Vec<RateRecord>, summary: &mut BTreeMap<String, f64>) -> Result<Vec<Part>> {
    let study = StudyKind::Green;
    let [a, b] = s.cfg.options.green_sources;
    let (x0, y0) = (vec2(a[0], a[1]), vec2(b[0], b[1]));
    let mut points = Vec::new();
    for &e in &s.cfg.epsilons {
        for &d in &s.cfg.deltas {
            points.push((e, d));
        }
    }
    let out: Vec<(Part, [f64; 3], Vec<(f64, f64)>)> = points
        .par_iter()
        .map(|&(e, d)| {
            let mut part = Part::default();
            let domain = s.domain(e)?;
            let h = s.h(e);
            let mesh = s.mesh(&domain, h)?;
            part.mesh(e, &mesh);
            let gx = greens_function(&domain, &mesh, &s.material, d, x0)?;
            let gy = greens_function(&domain, &mesh, &s.material, d, y0)?;
            let (p, q) = (gx.pair(&gy), gy.pair(&gx));
            let symmetry = (p - q).abs() / p.abs().max(q.abs());
            let ray = green_ray(&domain, &mesh, &gx.field.values, x0, y0);
            let matrix = mesh.matrix_vertices();
            let far = mesh
                .vertices
                .iter()
                .enumerate()
                .filter(|(v, p)| matrix[*v] && (**p - x0).norm() >= 8.0 * e)
                .map(|(v, _)| gx.field.values[v])
                .fold(0.0f64, f64::max);
            let lowest = gx.field.values.iter().copied().fold(0.0f64, f64::min);
            part.push(study, e, d, h, "symmetry", symmetry);
            part.push(study, e, d, h, "far_sup", far);
            part.push(study, e, d, h, "min_value", lowest);
            part.push(study, e, d, h, "ray_points", ray.len() as f64);
            Ok((part, [symmetry, far, lowest], ray))
        })
        .collect::<Result<_>>()?;
    let symmetry = out.iter().map(|o| o.1[0]).fold(0.0, f64::max);
    let lowest = out.iter().map(|o| o.1[2]).fold(0.0, f64::min);
    let mut parts = Vec::new();
    let mut min_sigma = f64::INFINITY;
    let mut uniformity: f64 = 0.0;
    let mut it = out.into_iter();
    for &e in &s.cfg.epsilons {
        let mut sups = Vec::new();
        for &d in &s.cfg.deltas {
            let (part, vals, ray) = it.next().expect("one result per point");
            if ray.len() < 3 {
                return Err(Error::ConfigError(format!(
                    "the decay ray from {y0:?} has {} admissible points at epsilon = {e}, need 3",
                    ray.len()
                )));
            }
            let sigma = fit(format!("G(x0, y) vs d(y), epsilon = {e}, delta = {d}"), &ray, rates)?;
            min_sigma = min_sigma.min(sigma);
            sups.push(vals[1]);
            parts.push(part);
            let mut extra = Part::default();
            extra.push(study, e, d, s.h(e), "sigma", sigma);
            parts.push(extra);
        }
        uniformity = uniformity.max(max_over_min(sups.into_iter()));
    }
    summary.insert("max_symmetry".into(), symmetry);
    summary.insert("min_sigma".into(), min_sigma);
    summary.insert("uniformity".into(), uniformity);
    summary.insert("min_value".into(), lowest);
    Ok(parts)
}

/// `(d(y), G(x0, y))` for `y` on the segment from `y0` straight down to
/// `∂Ω`, restricted to the regime `|x0 − y| ≥ max(8ε, 2 max(d(x0), d(y)))`
/// and to the matrix phase.
fn green_ray(domain: &PerforatedDomain, mesh: &TriMesh, values: &[f64], x0: Vec2, y0: Vec2) -> Vec<(f64, f64)> {
    let locator = PointLocator::new(mesh);
    let eps = domain.epsilon;
    let dx = domain.dist_to_boundary(x0);
    let mut out = Vec::new();
    let mut t = y0.y;
    while t > 2.0 * mesh.h {
        let y = vec2(y0.x, t);
        let dy = domain.dist_to_boundary(y);
        let regime = (x0 - y).norm() >= (8.0 * eps).max(2.0 * dx.max(dy));
        if regime && hole_distance(domain, y) > mesh.h {
            if let Some(g) = locator.interpolate(mesh, values, y) {
                if g > 0.0 {
                    out.push((dy, g));
                }
            }
        }
        t *= 0.8;
    }
    out.reverse();
    out
}

fn continuity(s: &Setup, rates: &mut Vec<RateRecord>, summary: &mut BTreeMap<String, f64>) -> Result<Vec<Part>> {
    let study = StudyKind::Continuity;
    let mut parts = Vec::new();
    let mut min_slope = f64::INFINITY;
    for &e in &s.cfg.epsilons {
        let domain = s.domain(e)?;
        let h = s.h(e);
        let mesh = s.mesh(&domain, h)?;
        let mut head = Part::default();
        head.mesh(e, &mesh);
        let u0 = s.dirichlet(&domain, &mesh, 0.0, s.cfg.data)?;
        let deltas: Vec<f64> = s.cfg.deltas.iter().copied().filter(|d| *d > 0.0).collect();
        let out: Vec<(Part, f64)> = deltas
            .par_iter()
            .map(|&d| {
                let u = s.dirichlet(&domain, &mesh, d, s.cfg.data)?;
                let diff = u.field.sub(&u0.field)?;
                let norm = region_norm(&diff, |t| mesh.is_matrix(t), Weight::None, NormKind::H1Semi)?;
                let mut part = Part::default();
                part.push(study, e, d, h, "perforated_difference", norm);
                Ok((part, norm))
            })
            .collect::<Result<_>>()?;
        let pairs: Vec<(f64, f64)> = deltas.iter().copied().zip(out.iter().map(|o| o.1)).collect();
        min_slope = min_slope.min(fit(format!("difference vs delta, epsilon = {e}"), &pairs, rates)?);
        parts.push(head);
        parts.extend(out.into_iter().map(|o| o.0));
    }
    summary.insert("slope".into(), min_slope);
    Ok(parts)
}
