//! JSON study configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{CellGeometry, CellSpec, MaterialSpec, MaterialTensor, OmegaSpec, Rect, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    /// `‖Â_δ − Â_0‖` against δ.
    Contrast,
    /// Two-scale expansion error against ε.
    Expansion,
    /// Boundary layer energy against ε.
    Layer,
    Ntmf,
    Rellich,
    Green,
    /// `‖∇(u_δ − u_0)‖` against δ.
    Continuity,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Contrast => "contrast",
            StudyKind::Expansion => "expansion",
            StudyKind::Layer => "layer",
            StudyKind::Ntmf => "ntmf",
            StudyKind::Rellich => "rellich",
            StudyKind::Green => "green",
            StudyKind::Continuity => "continuity",
        }
    }

    pub fn all() -> [StudyKind; 7] {
        [
            StudyKind::Contrast,
            StudyKind::Expansion,
            StudyKind::Layer,
            StudyKind::Ntmf,
            StudyKind::Rellich,
            StudyKind::Green,
            StudyKind::Continuity,
        ]
    }

    /// Studies that fit a rate and so need at least three scales.
    fn fits_epsilon(self) -> bool {
        matches!(self, StudyKind::Expansion | StudyKind::Layer)
    }

    fn fits_delta(self) -> bool {
        matches!(self, StudyKind::Contrast | StudyKind::Continuity)
    }
}

impl std::str::FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StudyKind::all()
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::ConfigError(format!("unknown study '{s}'")))
    }
}

/// Named boundary data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataPreset {
    /// `f = x₁`.
    Affine,
    /// `f = sin(πx₁) cos(πx₂)`.
    Sinusoidal,
    /// `f = |x₁ − 1/2|`.
    Piecewise,
    /// `g = n₁`, the first component of the outer normal.
    Normal1,
    /// `g = cos(2πx₁) cos(2πx₂)`, with zero integral over each face of the
    /// unit square.
    MeanZero,
}

impl DataPreset {
    /// Value at `p` on or in `omega = [0, w] × [0, h]`.
    pub fn eval(self, omega: &Rect, p: Vec2) -> f64 {
        match self {
            DataPreset::Affine => p.x,
            DataPreset::Sinusoidal => (PI * p.x).sin() * (PI * p.y).cos(),
            DataPreset::Piecewise => (p.x - 0.5).abs(),
            DataPreset::Normal1 => {
                let tol = 1e-12 * omega.width.max(1.0);
                if p.x <= tol {
                    -1.0
                } else if p.x >= omega.width - tol {
                    1.0
                } else {
                    0.0
                }
            }
            DataPreset::MeanZero => (2.0 * PI * p.x).cos() * (2.0 * PI * p.y).cos(),
        }
    }

    pub fn is_neumann(self) -> bool {
        matches!(self, DataPreset::Normal1 | DataPreset::MeanZero)
    }

    pub fn name(self) -> &'static str {
        match self {
            DataPreset::Affine => "affine",
            DataPreset::Sinusoidal => "sinusoidal",
            DataPreset::Piecewise => "piecewise",
            DataPreset::Normal1 => "normal1",
            DataPreset::MeanZero => "mean-zero",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellPreset {
    /// Centered disk of radius 1/4, `κ = 0.2`.
    Disk,
    /// No holes.
    Empty,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellConfig {
    Preset(CellPreset),
    Spec(CellSpec),
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig::Preset(CellPreset::Disk)
    }
}

impl CellConfig {
    pub fn build(&self) -> Result<CellGeometry> {
        match self {
            CellConfig::Preset(CellPreset::Disk) => CellGeometry::centered_disk(0.25, 0.2),
            CellConfig::Preset(CellPreset::Empty) => Ok(CellGeometry::empty()),
            CellConfig::Spec(spec) => CellGeometry::from_spec(spec),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaterialPreset {
    Identity,
    /// `1 + sin(2πy₁) sin(2πy₂) / 2`, sampled on a 64² grid.
    Oscillating,
    /// `{1, 4}` half-half laminate in `y₁`.
    Laminate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaterialConfig {
    Preset(MaterialPreset),
    Spec(MaterialSpec),
}

impl Default for MaterialConfig {
    fn default() -> Self {
        MaterialConfig::Preset(MaterialPreset::Oscillating)
    }
}

impl MaterialConfig {
    pub fn build(&self) -> Result<MaterialTensor> {
        match self {
            MaterialConfig::Preset(MaterialPreset::Identity) => Ok(MaterialTensor::identity()),
            MaterialConfig::Preset(MaterialPreset::Oscillating) => MaterialTensor::oscillating(0.5),
            MaterialConfig::Preset(MaterialPreset::Laminate) => MaterialTensor::laminate_half(1.0, 4.0),
            MaterialConfig::Spec(spec) => MaterialTensor::from_spec(spec),
        }
    }
}

/// Bounds on a summary metric; either side may be open.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Threshold {
    pub fn at_least(v: f64) -> Self {
        Threshold { min: Some(v), max: None }
    }

    pub fn at_most(v: f64) -> Self {
        Threshold { min: None, max: Some(v) }
    }

    pub fn within(lo: f64, hi: f64) -> Self {
        Threshold { min: Some(lo), max: Some(hi) }
    }

    pub fn accepts(&self, v: f64) -> bool {
        v.is_finite() && self.min.map_or(true, |m| v >= m) && self.max.map_or(true, |m| v <= m)
    }

    pub fn describe(&self) -> String {
        match (self.min, self.max) {
            (Some(a), Some(b)) => format!("in [{a}, {b}]"),
            (Some(a), None) => format!(">= {a}"),
            (None, Some(b)) => format!("<= {b}"),
            (None, None) => "recorded".into(),
        }
    }
}

/// Cut-off multipliers: `η = 0` within `inner·ε` of `∂Ω`, one beyond
/// `outer·ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffConfig {
    pub inner: f64,
    pub outer: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig { inner: 1.0, outer: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyOptions {
    /// Mesh size of the homogenized solve in the expansion study.
    pub homogenized_h: f64,
    pub cutoff: CutoffConfig,
    /// Re-run the first `control_points` scales at half the mesh size.
    pub control_points: usize,
    /// Layer width `t = layer_width·ε`; defaults to the cell's `κ`.
    pub layer_width: Option<f64>,
    /// Neumann data of the layer study.
    pub neumann_data: DataPreset,
    /// Dirichlet presets of the Rellich study.
    pub rellich_data: Vec<DataPreset>,
    pub aperture: f64,
    /// Green's function sources `[x, y]`, paired for the symmetry check.
    pub green_sources: [[f64; 2]; 2],
    /// Cell mesh size of the contrast study.
    pub cell_h: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            homogenized_h: 1.0 / 256.0,
            cutoff: CutoffConfig::default(),
            control_points: 3,
            layer_width: None,
            neumann_data: DataPreset::MeanZero,
            rellich_data: vec![DataPreset::Affine, DataPreset::Sinusoidal],
            aperture: crate::analysis::ntmf::DEFAULT_APERTURE,
            green_sources: [[3.0 / 16.0, 2.0 / 16.0], [13.0 / 16.0, 5.0 / 16.0]],
            cell_h: 1.0 / 64.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: String,
    pub json: String,
    pub markdown: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            csv: "results.csv".into(),
            json: "results.json".into(),
            markdown: "summary.md".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyKind,
    #[serde(default)]
    pub cell: CellConfig,
    #[serde(default)]
    pub material: MaterialConfig,
    #[serde(default)]
    pub omega: OmegaSpec,
    /// Strictly decreasing; every `1/ε` must be an integer.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// `h = ε / h_divisor`.
    #[serde(default = "default_h_divisor")]
    pub h_divisor: f64,
    #[serde(default = "default_data")]
    pub data: DataPreset,
    #[serde(default)]
    pub seed: u64,
    /// Summary metric name to bounds; missing names get the study defaults.
    #[serde(default)]
    pub thresholds: BTreeMap<String, Threshold>,
    #[serde(default)]
    pub options: StudyOptions,
    #[serde(default)]
    pub outputs: OutputPaths,
}

fn default_h_divisor() -> f64 {
    8.0
}

fn default_data() -> DataPreset {
    DataPreset::Sinusoidal
}

pub const DEFAULT_EPSILONS: [f64; 4] = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
pub const DEFAULT_DELTAS: [f64; 4] = [0.0, 0.05, 0.2, 1.0];

impl StudyConfig {
    /// The default configuration of a study, with its default thresholds.
    pub fn preset(study: StudyKind) -> Self {
        let (epsilons, deltas): (Vec<f64>, Vec<f64>) = match study {
            StudyKind::Contrast => (vec![], vec![0.4, 0.2, 0.1, 0.05]),
            StudyKind::Expansion => (DEFAULT_EPSILONS.to_vec(), vec![0.0, 0.2, 1.0]),
            StudyKind::Layer => (DEFAULT_EPSILONS.to_vec(), vec![0.0, 1.0]),
            StudyKind::Ntmf | StudyKind::Rellich => (DEFAULT_EPSILONS.to_vec(), DEFAULT_DELTAS.to_vec()),
            StudyKind::Green => (vec![1.0 / 16.0], vec![0.1, 0.5, 1.0]),
            StudyKind::Continuity => (vec![1.0 / 8.0], vec![0.4, 0.2, 0.1, 0.05]),
        };
        let data = match study {
            StudyKind::Continuity => DataPreset::Affine,
            _ => DataPreset::Sinusoidal,
        };
        let mut cfg = StudyConfig {
            study,
            cell: CellConfig::default(),
            material: match study {
                StudyKind::Contrast => MaterialConfig::Preset(MaterialPreset::Identity),
                _ => MaterialConfig::default(),
            },
            omega: OmegaSpec::UnitSquare,
            epsilons,
            deltas,
            h_divisor: default_h_divisor(),
            data,
            seed: 0,
            thresholds: BTreeMap::new(),
            options: StudyOptions::default(),
            outputs: OutputPaths::default(),
        };
        cfg.fill_thresholds();
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: StudyConfig =
            serde_json::from_str(text).map_err(|e| Error::ConfigError(format!("study config: {e}")))?;
        let preset = StudyConfig::preset(cfg.study);
        if cfg.epsilons.is_empty() {
            cfg.epsilons = preset.epsilons;
        }
        if cfg.deltas.is_empty() {
            cfg.deltas = preset.deltas;
        }
        cfg.fill_thresholds();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_thresholds(study: StudyKind) -> Vec<(&'static str, Threshold)> {
        match study {
            StudyKind::Contrast => vec![
                ("slope", Threshold::within(1.7, 2.5)),
                ("lambda_degradation", Threshold::at_most(3.0)),
                ("min_lambda", Threshold::at_least(0.05)),
                ("energy_max_over_min", Threshold::at_most(10.0)),
                ("max_form_mismatch", Threshold::at_most(1e-8)),
            ],
            StudyKind::Expansion => vec![
                ("min_slope", Threshold::at_least(0.2)),
                ("max_floor_ratio", Threshold::at_most(1.0 / 3.0)),
            ],
            StudyKind::Layer => vec![("min_slope", Threshold::at_least(0.8))],
            StudyKind::Ntmf => vec![
                ("max_over_min", Threshold::at_most(5.0)),
                ("max_n_over_ntilde", Threshold::at_most(10.0)),
                ("energy_max_over_min", Threshold::at_most(5.0)),
            ],
            StudyKind::Rellich => vec![
                ("min_ratio", Threshold::at_least(0.2)),
                ("max_ratio", Threshold::at_most(5.0)),
            ],
            StudyKind::Green => vec![
                ("max_symmetry", Threshold::at_most(1e-6)),
                ("min_sigma", Threshold::at_least(0.2)),
                ("uniformity", Threshold::at_most(3.0)),
            ],
            StudyKind::Continuity => vec![("slope", Threshold::at_least(1.7))],
        }
    }

    fn fill_thresholds(&mut self) {
        for (name, t) in Self::default_thresholds(self.study) {
            self.thresholds.entry(name.to_string()).or_insert(t);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigError(m));
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return bad(format!("epsilon list must be strictly decreasing, got {:?}", self.epsilons));
        }
        for &e in &self.epsilons {
            let n = 1.0 / e;
            if !(e > 0.0 && e <= 1.0) || (n - n.round()).abs() > 1e-9 {
                return bad(format!("epsilon {e} is not the reciprocal of a positive integer"));
            }
        }
        if let Some(d) = self.deltas.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return bad(format!("delta {d} outside [0, 1]"));
        }
        if !(self.h_divisor >= 4.0) {
            return bad(format!("h = eps/{} is coarser than eps/4", self.h_divisor));
        }
        if self.study.fits_epsilon() && self.epsilons.len() < 3 {
            return bad(format!("study {} fits a rate in epsilon and needs at least 3 values, got {}", self.study.name(), self.epsilons.len()));
        }
        if self.study.fits_delta() && self.deltas.iter().filter(|d| **d > 0.0).count() < 3 {
            return bad(format!("study {} fits a rate in delta and needs at least 3 positive values", self.study.name()));
        }
        if self.study.fits_delta() && self.deltas.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("delta list of a rate study must be strictly decreasing".into());
        }
        if !matches!(self.study, StudyKind::Contrast) && self.epsilons.is_empty() {
            return bad(format!("study {} needs at least one epsilon", self.study.name()));
        }
        if self.data.is_neumann() {
            return bad(format!("'{}' is Neumann data; use options.neumann_data", self.data.name()));
        }
        if !self.options.neumann_data.is_neumann() || self.options.rellich_data.iter().any(|d| d.is_neumann()) {
            return bad("boundary data presets do not match their problem kind".into());
        }
        if !(self.options.aperture > 1.0) {
            return bad(format!("aperture {} must exceed 1", self.options.aperture));
        }
        let c = self.options.cutoff;
        if !(c.inner >= 0.0 && c.outer > c.inner) {
            return bad(format!("cut-off multipliers {} < {} required", c.inner, c.outer));
        }
        if !(self.options.cell_h > 0.0 && self.options.cell_h <= 0.25) || !(self.options.homogenized_h > 0.0) {
            return bad("mesh sizes must be positive and cell_h at most 1/4".into());
        }
        self.cell.build()?;
        self.material.build()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for k in StudyKind::all() {
            StudyConfig::preset(k).validate().unwrap();
        }
    }

    #[test]
    fn expansion_with_two_scales_is_rejected() {
        let text = r#"{"study": "expansion", "epsilons": [0.125, 0.0625]}"#;
        assert!(matches!(StudyConfig::from_json(text), Err(Error::ConfigError(_))));
    }

    #[test]
    fn bad_lists_are_rejected() {
        for text in [
            r#"{"study": "ntmf", "epsilons": [0.0625, 0.125, 0.03125]}"#,
            r#"{"study": "ntmf", "deltas": [0.5, 1.5]}"#,
            r#"{"study": "ntmf", "h_divisor": 2}"#,
            r#"{"study": "ntmf", "epsilons": [0.3]}"#,
            r#"{"study": "ntmf", "bogus": 1}"#,
        ] {
            assert!(matches!(StudyConfig::from_json(text), Err(Error::ConfigError(_))), "{text}");
        }
    }

    #[test]
    fn json_defaults_and_thresholds() {
        let cfg = StudyConfig::from_json(r#"{"study": "layer", "thresholds": {"min_slope": {"min": 0.9}}}"#).unwrap();
        assert_eq!(cfg.epsilons.len(), 4);
        assert_eq!(cfg.thresholds["min_slope"], Threshold::at_least(0.9));
        let back = StudyConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn presets_take_material_and_cell_specs() {
        let text = r#"{"study": "ntmf",
            "cell": {"holes": [{"type": "disk", "center": [0.5, 0.5], "radius": 0.2}], "kappa": 0.2},
            "material": {"kind": "constant", "matrix": [[2.0, 0.0], [0.0, 1.0]]}}"#;
        let cfg = StudyConfig::from_json(text).unwrap();
        assert_eq!(cfg.cell.build().unwrap().holes.len(), 1);
        assert_eq!(cfg.material.build().unwrap().mu, 0.5);
    }

    #[test]
    fn neumann_presets_have_zero_face_integrals() {
        // midpoint rule on each face of the unit square
        let n = 4000;
        for g in [DataPreset::Normal1, DataPreset::MeanZero] {
            let mut total = 0.0;
            for k in 0..n {
                let s = (k as f64 + 0.5) / n as f64;
                for p in [Vec2::new(s, 0.0), Vec2::new(s, 1.0), Vec2::new(0.0, s), Vec2::new(1.0, s)] {
                    total += g.eval(&Rect::unit(), p) / n as f64;
                }
            }
            assert!(total.abs() < 1e-10, "{g:?}: {total}");
        }
    }
}
