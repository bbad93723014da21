//! Nontangential maximal functions on the boundary of a rectangle.
//!
//! `N(u)(x)` is a supremum over the cone `{y : |y − x| < C₀ d(y)}` of the
//! root mean square of `u` on `B(y, d(y)/4)`. The supremum is taken over a
//! layered probe set: contours `d(y) = d_k` with `d_k` decreasing
//! geometrically down to the mesh scale, each sampled at spacing `d_k/2`.
//! Every cone of aperture `C₀ > 1` meets every layer below its apex in a
//! chord of length at least `2 sqrt(C₀² − 1) d_k`, so it always contains
//! probes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fem::field::FemField;
use crate::fem::flux::BoundaryFunction;
use crate::fem::locate::PointLocator;
use crate::fem::mesh::TriMesh;
use crate::geometry::{vec2, Rect, Vec2};

pub const DEFAULT_APERTURE: f64 = 4.0;

/// Ratio between successive probe layers.
const LAYER_RATIO: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NtmfVariant {
    /// Ball averages over the full cone.
    N,
    /// Pointwise values at matrix-phase vertices in the cone.
    NTilde,
    /// Ball averages over the part of the cone with `d(y) < t`.
    Truncated(f64),
}

/// `(x, weight)` boundary samples at outer boundary edge midpoints.
pub fn boundary_samples(mesh: &TriMesh) -> Vec<(Vec2, f64)> {
    mesh.boundary_edges
        .iter()
        .map(|&[a, b]| {
            let pa = mesh.vertices[a as usize];
            let pb = mesh.vertices[b as usize];
            ((pa + pb) * 0.5, (pb - pa).norm())
        })
        .collect()
}

/// Probe points on the contours of `d` with their distances.
pub fn probe_points(omega: &Rect, min_depth: f64) -> Vec<(Vec2, f64)> {
    let mut out = Vec::new();
    let mut d = 0.5 * omega.width.min(omega.height) * 0.999;
    while d >= min_depth {
        let (x0, x1, y0, y1) = (d, omega.width - d, d, omega.height - d);
        let step = 0.5 * d;
        let mut push_segment = |a: Vec2, b: Vec2| {
            let len = (b - a).norm();
            let n = ((len / step).ceil() as usize).max(1);
            for k in 0..n {
                out.push((a + (b - a) * (k as f64 / n as f64), d));
            }
        };
        if x1 - x0 < 1e-12 || y1 - y0 < 1e-12 {
            push_segment(vec2(x0, y0), vec2(x1, y1));
            out.push((vec2(x1, y1), d));
        } else {
            push_segment(vec2(x0, y0), vec2(x1, y0));
            push_segment(vec2(x1, y0), vec2(x1, y1));
            push_segment(vec2(x1, y1), vec2(x0, y1));
            push_segment(vec2(x0, y1), vec2(x0, y0));
        }
        d *= LAYER_RATIO;
    }
    out
}

/// Root mean square of `u` over `B(y, r)`: three-point Gauss in the radius
/// times eight angles. Points falling outside the mesh are dropped.
pub fn ball_rms(mesh: &TriMesh, locator: &PointLocator, values: &[f64], y: Vec2, r: f64) -> f64 {
    const RADII: [(f64, f64); 3] = [
        (0.112_701_665_379_258_3, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.887_298_334_620_741_7, 5.0 / 18.0),
    ];
    const ANGLES: usize = 8;
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for (s, ws) in RADII {
        for k in 0..ANGLES {
            let th = 2.0 * PI * (k as f64 + 0.5) / ANGLES as f64;
            let p = y + vec2(th.cos(), th.sin()) * (s * r);
            if let Some(u) = locator.interpolate(mesh, values, p) {
                acc += ws * s * u * u;
                wsum += ws * s;
            }
        }
    }
    if wsum > 0.0 {
        (acc / wsum).sqrt()
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NtmfResult {
    pub samples: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
    /// Samples whose cone held no probe; they fall back to the nearest probe.
    pub empty_cones: usize,
}

impl NtmfResult {
    /// `‖N(u)‖_{L²(∂Ω)}` with edge-length weights.
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
    }
}

/// Largest value over the cone of each sample.
fn cone_sup(samples: &[(Vec2, f64)], probes: &[(Vec2, f64, f64)], c0: f64) -> (Vec<f64>, usize) {
    let mut empty = 0;
    let values = samples
        .iter()
        .map(|(x, _)| {
            let mut best = f64::NEG_INFINITY;
            let mut nearest = (f64::INFINITY, 0.0);
            for &(y, d, val) in probes {
                let dist = (y - x).norm();
                if dist < c0 * d {
                    best = best.max(val);
                }
                if dist < nearest.0 {
                    nearest = (dist, val);
                }
            }
            if best == f64::NEG_INFINITY {
                empty += 1;
                nearest.1
            } else {
                best
            }
        })
        .collect();
    (values, empty)
}

pub fn ntmf(u: &FemField, omega: &Rect, c0: f64, variant: NtmfVariant) -> NtmfResult {
    assert!(c0 > 1.0, "aperture must exceed one");
    let mesh = &u.mesh;
    let samples = boundary_samples(mesh);
    let probes: Vec<(Vec2, f64, f64)> = match variant {
        NtmfVariant::NTilde => {
            let active = mesh.matrix_vertices();
            mesh.vertices
                .iter()
                .enumerate()
                .filter(|(v, p)| active[*v] && omega.dist_to_boundary(**p) > 0.0)
                .map(|(v, p)| (*p, omega.dist_to_boundary(*p), u.values[v].abs()))
                .collect()
        }
        NtmfVariant::N | NtmfVariant::Truncated(_) => {
            let locator = PointLocator::new(mesh);
            let limit = match variant {
                NtmfVariant::Truncated(t) => t,
                _ => f64::INFINITY,
            };
            probe_points(omega, 2.0 * mesh.h)
                .into_iter()
                .filter(|(_, d)| *d < limit)
                .map(|(y, d)| (y, d, ball_rms(mesh, &locator, &u.values, y, 0.25 * d)))
                .collect()
        }
    };
    let (values, empty_cones) = if probes.is_empty() {
        (vec![0.0; samples.len()], samples.len())
    } else {
        cone_sup(&samples, &probes, c0)
    };
    NtmfResult {
        samples: samples.iter().map(|s| [s.0.x, s.0.y]).collect(),
        weights: samples.iter().map(|s| s.1).collect(),
        values,
        empty_cones,
    }
}

/// `‖f‖_{L²(∂Ω)}` of a boundary function, for normalizing `‖N(u)‖`.
pub fn boundary_l2(mesh: &TriMesh, f: &BoundaryFunction) -> f64 {
    f.l2_norm(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesher::mesh_rectangle;
    use std::sync::Arc;

    fn square(h: f64) -> Arc<TriMesh> {
        Arc::new(mesh_rectangle(Rect::unit(), h).unwrap())
    }

    #[test]
    fn constants_have_constant_maximal_function() {
        let mesh = square(1.0 / 32.0);
        let u = FemField::interpolate(mesh, |_| -1.5);
        for variant in [NtmfVariant::N, NtmfVariant::NTilde, NtmfVariant::Truncated(0.2)] {
            let n = ntmf(&u, &Rect::unit(), 4.0, variant);
            assert_eq!(n.empty_cones, 0);
            assert!(n.values.iter().all(|v| (v - 1.5).abs() < 1e-12), "{variant:?}");
            assert!((n.l2_norm() - 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn distance_function_sanity_window() {
        let mesh = square(1.0 / 32.0);
        let omega = Rect::unit();
        let u = FemField::interpolate(mesh, |p| omega.dist_to_boundary(p));
        let n = ntmf(&u, &omega, 4.0, NtmfVariant::N);
        for v in &n.values {
            assert!(*v <= 0.5 + 1e-12);
            // the deepest probe reachable from any sample sits at d ≈ 0.5
            assert!(*v >= 0.3);
        }
    }

    #[test]
    fn wider_apertures_never_decrease() {
        let mesh = square(1.0 / 32.0);
        let u = FemField::interpolate(mesh, |p| (3.0 * p.x).sin() * (5.0 * p.y).cos() + p.x * p.y);
        let omega = Rect::unit();
        for variant in [NtmfVariant::N, NtmfVariant::NTilde] {
            let a = ntmf(&u, &omega, 2.0, variant);
            let b = ntmf(&u, &omega, 4.0, variant);
            let c = ntmf(&u, &omega, 8.0, variant);
            for k in 0..a.values.len() {
                assert!(b.values[k] >= a.values[k] && c.values[k] >= b.values[k]);
            }
        }
    }

    #[test]
    fn truncation_restricts_the_cone() {
        let mesh = square(1.0 / 32.0);
        let omega = Rect::unit();
        let u = FemField::interpolate(mesh, |p| omega.dist_to_boundary(p));
        let full = ntmf(&u, &omega, 4.0, NtmfVariant::N);
        let trunc = ntmf(&u, &omega, 4.0, NtmfVariant::Truncated(0.1));
        for k in 0..full.values.len() {
            assert!(trunc.values[k] <= full.values[k]);
            assert!(trunc.values[k] <= 0.1 * 1.25 + 1e-12);
        }
    }

    #[test]
    fn probes_cover_all_cones() {
        let omega = Rect::unit();
        let probes = probe_points(&omega, 1.0 / 64.0);
        for k in 0..400 {
            let x = vec2(k as f64 / 400.0, 0.0);
            assert!(probes.iter().any(|(y, d)| (y - x).norm() < 1.5 * d));
        }
    }
}
