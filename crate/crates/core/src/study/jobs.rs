//! Single runs behind the `cell`, `solve` and `green` commands.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_rate, RateFit};
use crate::bvp::{greens_function, solve_dirichlet, solve_neumann, EnergyRecord, GreenColumn, ProblemKind};
use crate::cell::{cell_mesh, ellipticity_bounds, EllipticityWindow, HomogenizedTensor};
use crate::error::{Error, Result};
use crate::fem::field::FemField;
use crate::fem::mesh::TriMesh;
use crate::fem::mesher::mesh_domain_for;
use crate::geometry::{build_perforated_domain, vec2, OmegaSpec, PerforatedDomain, Vec2};
use crate::study::cache::cached_cell;
use crate::study::config::{CellConfig, DataPreset, MaterialConfig};
use crate::study::run::RunContext;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellJob {
    pub cell: CellConfig,
    pub material: MaterialConfig,
    pub h: f64,
    pub deltas: Vec<f64>,
}

impl Default for CellJob {
    fn default() -> Self {
        CellJob {
            cell: CellConfig::default(),
            material: MaterialConfig::default(),
            h: 1.0 / 64.0,
            deltas: vec![0.0, 0.05, 0.2, 1.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub tensor: HomogenizedTensor,
    /// `∫ |∇χ_j|² + |χ_j|²` for `j = 1, 2`.
    pub corrector_energy: [f64; 2],
    /// `‖Â_δ − Â_0‖_F`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub h: f64,
    pub vertices: usize,
    pub entries: Vec<CellEntry>,
    pub ellipticity: EllipticityWindow,
    /// Log-log slope of the deviation over the positive `δ`, when there are
    /// at least three of them.
    pub deviation_fit: Option<RateFit>,
}

pub fn run_cell(job: &CellJob, ctx: &RunContext) -> Result<CellReport> {
    if job.deltas.is_empty() || job.deltas.iter().any(|d| !(0.0..=1.0).contains(d)) {
        return Err(Error::ConfigError("cell: deltas must be a nonempty list in [0, 1]".into()));
    }
    if !(job.h > 0.0 && job.h <= 0.25) {
        return Err(Error::ConfigError(format!("cell: h = {} must lie in (0, 1/4]", job.h)));
    }
    let material = job.material.build()?;
    let mesh = cell_mesh(&job.cell.build()?, &material, job.h)?;
    let mut deltas = job.deltas.clone();
    if !deltas.contains(&0.0) {
        deltas.insert(0, 0.0);
    }
    let sols: Vec<_> = deltas
        .par_iter()
        .map(|&d| cached_cell(ctx.cache.as_ref(), &mesh, &material, d))
        .collect::<Result<_>>()?;
    let zero = sols[deltas.iter().position(|&d| d == 0.0).unwrap_or(0)].tensor.matrix();
    let entries: Vec<CellEntry> = sols
        .iter()
        .map(|s| CellEntry {
            tensor: s.tensor.clone(),
            corrector_energy: s.correctors.energies(),
            deviation: (s.tensor.matrix() - zero).norm(),
        })
        .collect();
    let pairs: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.tensor.delta > 0.0 && e.deviation > 0.0)
        .map(|e| (e.tensor.delta, e.deviation))
        .collect();
    let deviation_fit = if pairs.len() >= 3 { Some(fit_rate(&pairs)?) } else { None };
    let tensors: Vec<HomogenizedTensor> = entries.iter().map(|e| e.tensor.clone()).collect();
    Ok(CellReport {
        h: job.h,
        vertices: mesh.n_vertices(),
        ellipticity: ellipticity_bounds(&tensors)?,
        entries,
        deviation_fit,
    })
}

/// A boundary value problem on the perforated domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemJob {
    pub cell: CellConfig,
    pub material: MaterialConfig,
    pub omega: OmegaSpec,
    pub epsilon: f64,
    pub delta: f64,
    /// `h = ε / h_divisor`.
    pub h_divisor: f64,
    pub data: DataPreset,
    /// Sources for `green`; the command line `--source` replaces them.
    pub sources: Vec<[f64; 2]>,
}

impl Default for ProblemJob {
    fn default() -> Self {
        ProblemJob {
            cell: CellConfig::default(),
            material: MaterialConfig::default(),
            omega: OmegaSpec::UnitSquare,
            epsilon: 1.0 / 16.0,
            delta: 1.0,
            h_divisor: 8.0,
            data: DataPreset::Sinusoidal,
            sources: vec![[3.0 / 16.0, 2.0 / 16.0]],
        }
    }
}

impl ProblemJob {
    fn setup(&self) -> Result<(PerforatedDomain, Arc<TriMesh>, crate::geometry::MaterialTensor)> {
        let n = (1.0 / self.epsilon).round();
        if !(n >= 1.0) || (1.0 / n - self.epsilon).abs() > 1e-12 {
            return Err(Error::ConfigError(format!("epsilon = {} must be 1/n", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::ConfigError(format!("delta = {} outside [0, 1]", self.delta)));
        }
        if !(self.h_divisor >= 4.0) {
            return Err(Error::ConfigError("h_divisor must be at least 4".into()));
        }
        let material = self.material.build()?;
        let domain = build_perforated_domain(n as usize, &self.cell.build()?, self.omega)?;
        let mesh = Arc::new(mesh_domain_for(&domain, Some(&material), self.epsilon / self.h_divisor)?);
        Ok((domain, mesh, material))
    }
}

#[derive(Clone, Debug)]
pub struct ProblemOutput {
    pub field: FemField,
    pub problem: ProblemKind,
    pub energy: EnergyRecord,
    pub iterations: usize,
}

impl ProblemOutput {
    /// `x,y,matrix,u` per vertex, `matrix` being 1 off the hole interiors.
    pub fn csv(&self) -> String {
        let mesh = &self.field.mesh;
        let mut in_matrix = vec![false; mesh.n_vertices()];
        for t in 0..mesh.triangles.len() {
            if mesh.is_matrix(t) {
                for v in mesh.triangles[t] {
                    in_matrix[v as usize] = true;
                }
            }
        }
        let mut out = String::from("x,y,matrix,u\n");
        for (v, p) in mesh.vertices.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", p.x, p.y, in_matrix[v] as u8, self.field.values[v]);
        }
        out
    }
}

pub fn run_problem(job: &ProblemJob) -> Result<ProblemOutput> {
    let (domain, mesh, material) = job.setup()?;
    let omega = domain.omega;
    let data = |p: Vec2| job.data.eval(&omega, p);
    let sol = if job.data.is_neumann() {
        solve_neumann(&domain, &mesh, &material, job.delta, &data)?
    } else {
        solve_dirichlet(&domain, &mesh, &material, job.delta, &data)?
    };
    Ok(ProblemOutput {
        field: sol.field,
        problem: sol.problem,
        energy: sol.energy,
        iterations: sol.solver.iterations,
    })
}

#[derive(Clone, Debug)]
pub struct GreenOutput {
    pub columns: Vec<GreenColumn>,
    /// `|G(x, y) − G(y, x)| / max` for each pair of sources.
    pub symmetry: Vec<(usize, usize, f64)>,
}

impl GreenOutput {
    /// `x,y,g0,g1,...` per vertex.
    pub fn csv(&self) -> String {
        let mut out = String::from("x,y");
        for k in 0..self.columns.len() {
            let _ = write!(out, ",g{k}");
        }
        out.push('\n');
        let Some(first) = self.columns.first() else {
            return out;
        };
        for (v, p) in first.field.mesh.vertices.iter().enumerate() {
            let _ = write!(out, "{},{}", p.x, p.y);
            for c in &self.columns {
                let _ = write!(out, ",{}", c.field.values[v]);
            }
            out.push('\n');
        }
        out
    }
}

pub fn run_green(job: &ProblemJob) -> Result<GreenOutput> {
    if job.sources.is_empty() {
        return Err(Error::ConfigError("green: no sources".into()));
    }
    let (domain, mesh, material) = job.setup()?;
    let columns: Vec<GreenColumn> = job
        .sources
        .par_iter()
        .map(|s| greens_function(&domain, &mesh, &material, job.delta, vec2(s[0], s[1])))
        .collect::<Result<_>>()?;
    let mut symmetry = Vec::new();
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            let (p, q) = (columns[i].pair(&columns[j]), columns[j].pair(&columns[i]));
            symmetry.push((i, j, (p - q).abs() / p.abs().max(q.abs()).max(f64::MIN_POSITIVE)));
        }
    }
    Ok(GreenOutput { columns, symmetry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::config::{CellPreset, MaterialPreset};

    #[test]
    fn cell_report_on_a_laminate() {
        let job = CellJob {
            cell: CellConfig::Preset(CellPreset::Empty),
            material: MaterialConfig::Preset(MaterialPreset::Laminate),
            h: 1.0 / 16.0,
            deltas: vec![1.0],
        };
        let r = run_cell(&job, &RunContext::default()).unwrap();
        // zero is prepended; without holes δ does nothing
        assert_eq!(r.entries.len(), 2);
        let a = r.entries[1].tensor.a_hat;
        assert!((a[0][0] - 1.6).abs() < 1e-8 && (a[1][1] - 2.5).abs() < 1e-8);
        assert!(r.entries[1].deviation < 1e-10);
        assert!(r.deviation_fit.is_none());
    }

    #[test]
    fn bad_jobs_are_config_errors() {
        let job = CellJob {
            deltas: vec![1.5],
            ..Default::default()
        };
        assert!(matches!(run_cell(&job, &RunContext::default()), Err(Error::ConfigError(_))));
        let job = ProblemJob {
            epsilon: 0.3,
            ..Default::default()
        };
        assert!(matches!(run_problem(&job), Err(Error::ConfigError(_))));
    }

    #[test]
    fn affine_data_without_holes_is_reproduced() {
        let job = ProblemJob {
            cell: CellConfig::Preset(CellPreset::Empty),
            material: MaterialConfig::Preset(MaterialPreset::Identity),
            epsilon: 0.25,
            data: DataPreset::Affine,
            ..Default::default()
        };
        let out = run_problem(&job).unwrap();
        let mesh = &out.field.mesh;
        let err = mesh.vertices.iter().zip(&out.field.values).map(|(p, u)| (p.x - u).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        let csv = out.csv();
        assert!(csv.starts_with("x,y,matrix,u\n"));
        assert_eq!(csv.lines().count(), mesh.n_vertices() + 1);
    }

    #[test]
    fn green_columns_are_symmetric() {
        let job = ProblemJob {
            epsilon: 0.25,
            sources: vec![[0.25, 0.5], [0.75, 0.25]],
            ..Default::default()
        };
        let out = run_green(&job).unwrap();
        assert_eq!(out.symmetry.len(), 1);
        assert!(out.symmetry[0].2 < 1e-6);
        assert!(out.csv().starts_with("x,y,g0,g1\n"));
    }
}
