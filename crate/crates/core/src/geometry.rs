//! Periodic coefficients, hole layouts in the unit cell and perforated
//! macroscopic domains.
//!
//! All quantities here are two dimensional. The reference cell is
//! `Y = [0,1]^2`; a hole layout `F` lives strictly inside `Y` and is tiled
//! periodically. The macroscopic domain is a rectangle made of whole
//! `eps`-cells, which puts every scaled hole at least `kappa * eps` away from
//! the outer boundary without any further work.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, HoleRef, Result};

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

#[inline]
pub fn vec2(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// Reduces a point of the plane to the reference cell `[0,1)^2`.
#[inline]
pub fn reduce_to_cell(y: Vec2) -> Vec2 {
    vec2(y.x - y.x.floor(), y.y - y.y.floor())
}

fn mat_from_rows(rows: [[f64; 2]; 2]) -> Mat2 {
    Mat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn segments_cross(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = cross(a1 - a0, b0 - a0);
    let d2 = cross(a1 - a0, b1 - a0);
    let d3 = cross(b1 - b0, a0 - b0);
    let d4 = cross(b1 - b0, a1 - b0);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// A single inclusion of the cell: a disk or a convex polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Hole {
    Disk { center: [f64; 2], radius: f64 },
    /// Convex polygon. Orientation is normalized to counter-clockwise on
    /// validation.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Hole {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Hole::Disk { center, radius }
    }

    /// Axis aligned square with the given center and side length.
    pub fn square(center: [f64; 2], side: f64) -> Self {
        let s = side / 2.0;
        let [cx, cy] = center;
        Hole::Polygon {
            vertices: vec![
                [cx - s, cy - s],
                [cx + s, cy - s],
                [cx + s, cy + s],
                [cx - s, cy + s],
            ],
        }
    }

    fn polygon_points(vertices: &[[f64; 2]]) -> Vec<Vec2> {
        vertices.iter().map(|v| vec2(v[0], v[1])).collect()
    }

    /// True for points in the open set `F_k`.
    pub fn contains(&self, y: Vec2) -> bool {
        match self {
            Hole::Disk { center, radius } => (y - vec2(center[0], center[1])).norm() < *radius,
            Hole::Polygon { vertices } => {
                let pts = Self::polygon_points(vertices);
                let n = pts.len();
                (0..n).all(|i| cross(pts[(i + 1) % n] - pts[i], y - pts[i]) > 0.0)
            }
        }
    }

    /// Signed distance to the hole boundary, negative inside.
    pub fn signed_distance(&self, y: Vec2) -> f64 {
        match self {
            Hole::Disk { center, radius } => (y - vec2(center[0], center[1])).norm() - radius,
            Hole::Polygon { vertices } => {
                let pts = Self::polygon_points(vertices);
                let n = pts.len();
                let d = (0..n)
                    .map(|i| point_segment_distance(y, pts[i], pts[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min);
                if self.contains(y) {
                    -d
                } else {
                    d
                }
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Hole::Disk { radius, .. } => PI * radius * radius,
            Hole::Polygon { vertices } => {
                let pts = Self::polygon_points(vertices);
                let n = pts.len();
                0.5 * (0..n).map(|i| cross(pts[i], pts[(i + 1) % n])).sum::<f64>().abs()
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Hole::Disk { radius, .. } => 2.0 * radius,
            Hole::Polygon { vertices } => {
                let pts = Self::polygon_points(vertices);
                let mut d: f64 = 0.0;
                for a in &pts {
                    for b in &pts {
                        d = d.max((a - b).norm());
                    }
                }
                d
            }
        }
    }

    /// Radius for disks; distance from the vertex centroid to the nearest
    /// edge for polygons.
    pub fn inner_radius(&self) -> f64 {
        match self {
            Hole::Disk { radius, .. } => *radius,
            Hole::Polygon { vertices } => {
                let pts = Self::polygon_points(vertices);
                let n = pts.len();
                let c = pts.iter().fold(Vec2::zeros(), |acc, p| acc + p) / n as f64;
                (0..n)
                    .map(|i| point_segment_distance(c, pts[i], pts[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        match self {
            Hole::Disk { center, radius } => (
                vec2(center[0] - radius, center[1] - radius),
                vec2(center[0] + radius, center[1] + radius),
            ),
            Hole::Polygon { vertices } => {
                let mut lo = vec2(f64::INFINITY, f64::INFINITY);
                let mut hi = vec2(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    lo.x = lo.x.min(v[0]);
                    lo.y = lo.y.min(v[1]);
                    hi.x = hi.x.max(v[0]);
                    hi.y = hi.y.max(v[1]);
                }
                (lo, hi)
            }
        }
    }

    /// Distance from the hole to the boundary of the unit cell.
    pub fn cell_boundary_clearance(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        lo.x.min(lo.y).min(1.0 - hi.x).min(1.0 - hi.y)
    }

    /// Image of the hole under `y -> scale * y + offset`.
    pub fn transformed(&self, scale: f64, offset: Vec2) -> Hole {
        match self {
            Hole::Disk { center, radius } => Hole::Disk {
                center: [scale * center[0] + offset.x, scale * center[1] + offset.y],
                radius: scale * radius,
            },
            Hole::Polygon { vertices } => Hole::Polygon {
                vertices: vertices
                    .iter()
                    .map(|v| [scale * v[0] + offset.x, scale * v[1] + offset.y])
                    .collect(),
            },
        }
    }

    /// Counter-clockwise polygonal approximation of the boundary with
    /// segment length at most `h`. Disks are split into a multiple of four
    /// segments so the discretization keeps the symmetry of the square.
    pub fn boundary_polyline(&self, h: f64) -> Vec<Vec2> {
        match self {
            Hole::Disk { center, radius } => {
                let per_quarter = ((2.0 * PI * radius / h) / 4.0).ceil().max(2.0) as usize;
                let n = 4 * per_quarter;
                (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        vec2(center[0] + radius * t.cos(), center[1] + radius * t.sin())
                    })
                    .collect()
            }
            Hole::Polygon { vertices } => {
                let pts = Self::polygon_points(vertices);
                let n = pts.len();
                let mut out = Vec::new();
                for i in 0..n {
                    let a = pts[i];
                    let b = pts[(i + 1) % n];
                    let m = ((b - a).norm() / h).ceil().max(1.0) as usize;
                    for s in 0..m {
                        out.push(a + (b - a) * (s as f64 / m as f64));
                    }
                }
                out
            }
        }
    }

    /// Gap between `self` and `other` translated by `shift`; negative or zero
    /// when they overlap.
    pub fn gap(&self, other: &Hole, shift: Vec2) -> f64 {
        let other = other.transformed(1.0, shift);
        match (self, &other) {
            (Hole::Disk { center: c1, radius: r1 }, Hole::Disk { center: c2, radius: r2 }) => {
                (vec2(c1[0], c1[1]) - vec2(c2[0], c2[1])).norm() - r1 - r2
            }
            (Hole::Disk { center, radius }, poly @ Hole::Polygon { .. })
            | (poly @ Hole::Polygon { .. }, Hole::Disk { center, radius }) => {
                poly.signed_distance(vec2(center[0], center[1])) - radius
            }
            (Hole::Polygon { vertices: va }, Hole::Polygon { vertices: vb }) => {
                let pa = Self::polygon_points(va);
                let pb = Self::polygon_points(vb);
                let mut g = f64::INFINITY;
                for p in &pa {
                    g = g.min(other.signed_distance(*p));
                }
                for p in &pb {
                    g = g.min(self.signed_distance(*p));
                }
                if g > 0.0 {
                    let (na, nb) = (pa.len(), pb.len());
                    for i in 0..na {
                        for j in 0..nb {
                            if segments_cross(pa[i], pa[(i + 1) % na], pb[j], pb[(j + 1) % nb]) {
                                return 0.0;
                            }
                        }
                    }
                }
                g
            }
        }
    }

    fn normalized(&self) -> Result<Hole> {
        match self {
            Hole::Disk { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidInput(format!("disk radius {radius} must be positive")));
                }
                if !(center[0].is_finite() && center[1].is_finite()) {
                    return Err(Error::InvalidInput("disk center must be finite".into()));
                }
                Ok(self.clone())
            }
            Hole::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidInput("polygon needs at least three vertices".into()));
                }
                let pts = Self::polygon_points(vertices);
                let n = pts.len();
                let signed: f64 = 0.5 * (0..n).map(|i| cross(pts[i], pts[(i + 1) % n])).sum::<f64>();
                if signed.abs() < 1e-14 {
                    return Err(Error::InvalidInput("degenerate polygon".into()));
                }
                let mut v = vertices.clone();
                if signed < 0.0 {
                    v.reverse();
                }
                let pts = Self::polygon_points(&v);
                for i in 0..n {
                    let turn = cross(pts[(i + 1) % n] - pts[i], pts[(i + 2) % n] - pts[(i + 1) % n]);
                    if turn <= 0.0 {
                        return Err(Error::InvalidInput("polygon holes must be strictly convex".into()));
                    }
                }
                Ok(Hole::Polygon { vertices: v })
            }
        }
    }
}

/// Hole layout `F = union of F_k` inside the unit cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry {
    pub holes: Vec<Hole>,
    pub kappa: f64,
    #[serde(default)]
    pub enlarged_margin: f64,
}

/// Raw cell description as found in configuration files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellSpec {
    #[serde(default)]
    pub holes: Vec<Hole>,
    pub kappa: f64,
}

impl CellGeometry {
    /// Validates a hole layout and returns the cell.
    ///
    /// Holes must lie in the open cell, be pairwise (and with their periodic
    /// images) at least `kappa` apart, stay `kappa / 100` away from the cell
    /// boundary and have diameter at most `sqrt(2)`.
    pub fn new(holes: Vec<Hole>, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::InvalidInput(format!("kappa = {kappa} must lie in (0,1)")));
        }
        let holes = holes.iter().map(Hole::normalized).collect::<Result<Vec<_>>>()?;
        let margin = kappa / 100.0;
        // direct pairs first so that overlaps are reported as such
        let shifts: Vec<(i32, i32)> = std::iter::once((0, 0))
            .chain((-1..=1).flat_map(|sx| (-1..=1).map(move |sy| (sx, sy))).filter(|&s| s != (0, 0)))
            .collect();
        for &(sx, sy) in &shifts {
            for a in 0..holes.len() {
                for b in a..holes.len() {
                    if a == b && sx == 0 && sy == 0 {
                        continue;
                    }
                    let gap = holes[a].gap(&holes[b], vec2(sx as f64, sy as f64));
                    if gap < kappa {
                        let second = if sx == 0 && sy == 0 {
                            HoleRef::Hole(b)
                        } else {
                            HoleRef::Image(b)
                        };
                        return Err(Error::SeparationViolation {
                            first: HoleRef::Hole(a),
                            second,
                            gap,
                            required: kappa,
                        });
                    }
                }
            }
        }
        for (k, hole) in holes.iter().enumerate() {
            let (lo, hi) = hole.bounding_box();
            if lo.x <= 0.0 || lo.y <= 0.0 || hi.x >= 1.0 || hi.y >= 1.0 {
                let gap = hole.cell_boundary_clearance();
                return Err(Error::SeparationViolation {
                    first: HoleRef::Hole(k),
                    second: HoleRef::CellBoundary,
                    gap,
                    required: margin,
                });
            }
            if hole.diameter() > 2f64.sqrt() {
                return Err(Error::InvalidInput(format!("hole {k} is wider than the cell")));
            }
            let clearance = hole.cell_boundary_clearance();
            if clearance <= margin {
                return Err(Error::SeparationViolation {
                    first: HoleRef::Hole(k),
                    second: HoleRef::CellBoundary,
                    gap: clearance,
                    required: margin,
                });
            }
        }
        Ok(CellGeometry {
            holes,
            kappa,
            enlarged_margin: margin,
        })
    }

    pub fn from_spec(spec: &CellSpec) -> Result<Self> {
        Self::new(spec.holes.clone(), spec.kappa)
    }

    /// Cell with one centered disk.
    pub fn centered_disk(radius: f64, kappa: f64) -> Result<Self> {
        Self::new(vec![Hole::disk([0.5, 0.5], radius)], kappa)
    }

    /// Cell without holes, `omega = R^2`.
    pub fn empty() -> Self {
        CellGeometry {
            holes: Vec::new(),
            kappa: 0.5,
            enlarged_margin: 0.005,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.holes.is_empty()
    }

    /// Index of the hole containing `y` (reduced mod 1).
    pub fn hole_at(&self, y: Vec2) -> Option<usize> {
        let y = reduce_to_cell(y);
        self.holes.iter().position(|h| h.contains(y))
    }

    /// `|F ∩ Y|`.
    pub fn hole_area(&self) -> f64 {
        self.holes.iter().map(Hole::area).sum()
    }

    /// Smallest distance from a hole to the cell boundary.
    pub fn boundary_clearance(&self) -> f64 {
        self.holes
            .iter()
            .map(Hole::cell_boundary_clearance)
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest gap between distinct holes, periodic images included.
    pub fn min_hole_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for a in 0..self.holes.len() {
            for b in a..self.holes.len() {
                for sx in -1..=1 {
                    for sy in -1..=1 {
                        if a == b && sx == 0 && sy == 0 {
                            continue;
                        }
                        g = g.min(self.holes[a].gap(&self.holes[b], vec2(sx as f64, sy as f64)));
                    }
                }
            }
        }
        g
    }
}

/// The high-contrast mask `Λ_δ`: one on the closure of `omega`, `δ` in the holes.
#[derive(Clone, Copy, Debug)]
pub struct ContrastMask<'a> {
    pub cell: &'a CellGeometry,
    pub delta: f64,
}

impl ContrastMask<'_> {
    pub fn eval(&self, y: Vec2) -> f64 {
        if self.cell.hole_at(y).is_some() {
            self.delta
        } else {
            1.0
        }
    }
}

/// `Λ_δ(x/ε)` with `x/ε` reduced mod 1.
pub fn contrast_at(point: Vec2, epsilon: f64, delta: f64, cell: &CellGeometry) -> f64 {
    ContrastMask { cell, delta }.eval(point / epsilon)
}

/// `[Λ_δ(x/ε)]^2 A(x/ε)`.
pub fn coefficient_at(
    point: Vec2,
    epsilon: f64,
    delta: f64,
    material: &MaterialTensor,
    cell: &CellGeometry,
) -> Mat2 {
    let y = point / epsilon;
    let lambda = ContrastMask { cell, delta }.eval(y);
    material.eval(y) * (lambda * lambda)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialRegion {
    pub shape: Hole,
    pub matrix: [[f64; 2]; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaterialKind {
    Constant {
        matrix: [[f64; 2]; 2],
    },
    /// Isotropic layered material `a(y_direction) I`; `values[k]` holds on
    /// `[breakpoints[k], breakpoints[k+1])`.
    Laminate {
        direction: usize,
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `background` everywhere except inside the listed shapes.
    Regions {
        background: [[f64; 2]; 2],
        regions: Vec<MaterialRegion>,
    },
    /// Entries `(a11, a12, a22)` sampled at `(i/nx, j/ny)`, row major in `j`,
    /// interpolated bilinearly with periodic wrap.
    Sampled {
        nx: usize,
        ny: usize,
        entries: Vec<[f64; 3]>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderData {
    pub m: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaterialSpec {
    #[serde(flatten)]
    pub kind: MaterialKind,
    #[serde(default)]
    pub holder: Option<HolderData>,
}

/// Interface of a material that a mesh has to resolve.
#[derive(Clone, Debug, PartialEq)]
pub enum MaterialInterface {
    /// The line `y[axis] = coord` across the cell.
    Line { axis: usize, coord: f64 },
    Shape(Hole),
}

/// Periodic symmetric coefficient `A(y)` on the unit cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaterialTensor {
    pub kind: MaterialKind,
    pub mu: f64,
    pub symmetric: bool,
    pub holder: Option<HolderData>,
}

impl MaterialTensor {
    pub fn new(kind: MaterialKind) -> Result<Self> {
        Self::with_holder(kind, None)
    }

    pub fn with_holder(kind: MaterialKind, holder: Option<HolderData>) -> Result<Self> {
        match &kind {
            MaterialKind::Constant { matrix } => check_symmetric(matrix)?,
            MaterialKind::Laminate {
                direction,
                breakpoints,
                values,
            } => {
                if *direction > 1 {
                    return Err(Error::InvalidInput("laminate direction must be 0 or 1".into()));
                }
                if breakpoints.is_empty() || breakpoints.len() != values.len() || breakpoints[0] != 0.0 {
                    return Err(Error::InvalidInput(
                        "laminate needs matching breakpoints/values starting at 0".into(),
                    ));
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) || *breakpoints.last().unwrap() >= 1.0 {
                    return Err(Error::InvalidInput("laminate breakpoints must increase inside [0,1)".into()));
                }
            }
            MaterialKind::Regions { background, regions } => {
                check_symmetric(background)?;
                for r in regions {
                    check_symmetric(&r.matrix)?;
                    r.shape.normalized()?;
                }
            }
            MaterialKind::Sampled { nx, ny, entries } => {
                if *nx == 0 || *ny == 0 || entries.len() != nx * ny {
                    return Err(Error::InvalidInput("sampled material has the wrong number of entries".into()));
                }
            }
        }
        let kind = match kind {
            MaterialKind::Regions { background, regions } => MaterialKind::Regions {
                background,
                regions: regions
                    .into_iter()
                    .map(|r| {
                        Ok(MaterialRegion {
                            shape: r.shape.normalized()?,
                            matrix: r.matrix,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            },
            other => other,
        };
        let mut tensor = MaterialTensor {
            kind,
            mu: 1.0,
            symmetric: true,
            holder,
        };
        tensor.mu = tensor.measure_ellipticity();
        if !(tensor.mu > 0.0) {
            return Err(Error::InvalidInput("material is not uniformly elliptic".into()));
        }
        Ok(tensor)
    }

    pub fn from_spec(spec: &MaterialSpec) -> Result<Self> {
        Self::with_holder(spec.kind.clone(), spec.holder)
    }

    pub fn identity() -> Self {
        Self::new(MaterialKind::Constant {
            matrix: [[1.0, 0.0], [0.0, 1.0]],
        })
        .expect("identity is elliptic")
    }

    /// Half-half laminate along `y_1`: `a = low` on `[0,1/2)`, `high` on `[1/2,1)`.
    pub fn laminate_half(low: f64, high: f64) -> Result<Self> {
        Self::new(MaterialKind::Laminate {
            direction: 0,
            breakpoints: vec![0.0, 0.5],
            values: vec![low, high],
        })
    }

    /// Samples an isotropic analytic coefficient `a(y) I` on an `n x n` grid.
    pub fn sample_isotropic(n: usize, a: impl Fn(Vec2) -> f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let v = a(vec2(i as f64 / n as f64, j as f64 / n as f64));
                entries.push([v, 0.0, v]);
            }
        }
        Self::new(MaterialKind::Sampled { nx: n, ny: n, entries })
    }

    /// Smooth oscillating coefficient `(1 + amplitude sin(2πy₁) sin(2πy₂)) I`
    /// sampled on a 64 x 64 grid.
    pub fn oscillating(amplitude: f64) -> Result<Self> {
        Self::sample_isotropic(64, |y| 1.0 + amplitude * (2.0 * PI * y.x).sin() * (2.0 * PI * y.y).sin())
    }

    /// `A(y)` with `y` reduced mod 1.
    pub fn eval(&self, y: Vec2) -> Mat2 {
        let y = reduce_to_cell(y);
        match &self.kind {
            MaterialKind::Constant { matrix } => mat_from_rows(*matrix),
            MaterialKind::Laminate {
                direction,
                breakpoints,
                values,
            } => {
                let t = y[*direction];
                let k = breakpoints.iter().rposition(|&b| b <= t).unwrap_or(0);
                Mat2::identity() * values[k]
            }
            MaterialKind::Regions { background, regions } => regions
                .iter()
                .find(|r| r.shape.contains(y))
                .map(|r| mat_from_rows(r.matrix))
                .unwrap_or_else(|| mat_from_rows(*background)),
            MaterialKind::Sampled { nx, ny, entries } => {
                let fx = y.x * *nx as f64;
                let fy = y.y * *ny as f64;
                let i0 = (fx.floor() as usize) % nx;
                let j0 = (fy.floor() as usize) % ny;
                let tx = fx - fx.floor();
                let ty = fy - fy.floor();
                let i1 = (i0 + 1) % nx;
                let j1 = (j0 + 1) % ny;
                let e = |i: usize, j: usize| entries[j * nx + i];
                let mut out = [0.0; 3];
                for (c, o) in out.iter_mut().enumerate() {
                    *o = (1.0 - tx) * (1.0 - ty) * e(i0, j0)[c]
                        + tx * (1.0 - ty) * e(i1, j0)[c]
                        + (1.0 - tx) * ty * e(i0, j1)[c]
                        + tx * ty * e(i1, j1)[c];
                }
                Mat2::new(out[0], out[1], out[1], out[2])
            }
        }
    }

    /// Lines and shapes across which `A` jumps.
    pub fn interfaces(&self) -> Vec<MaterialInterface> {
        match &self.kind {
            MaterialKind::Laminate {
                direction, breakpoints, ..
            } => breakpoints
                .iter()
                .filter(|&&b| b > 0.0)
                .map(|&b| MaterialInterface::Line {
                    axis: *direction,
                    coord: b,
                })
                .collect(),
            MaterialKind::Regions { regions, .. } => {
                regions.iter().map(|r| MaterialInterface::Shape(r.shape.clone())).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Largest `mu` with `mu |ξ|² ≤ A ξ·ξ` and `|a_ij| ≤ 1/mu` over a sample grid.
    fn measure_ellipticity(&self) -> f64 {
        let n = 96;
        let mut lmin = f64::INFINITY;
        let mut amax: f64 = 0.0;
        let mut visit = |a: Mat2| {
            let (l0, _) = sym_eigenvalues(&a);
            lmin = lmin.min(l0);
            amax = amax.max(a.abs().max());
        };
        for j in 0..n {
            for i in 0..n {
                visit(self.eval(vec2((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64)));
            }
        }
        match &self.kind {
            MaterialKind::Regions { regions, .. } => {
                for r in regions {
                    visit(mat_from_rows(r.matrix));
                }
            }
            // bilinear values are convex combinations of the samples, so the
            // samples carry the extremes
            MaterialKind::Sampled { entries, .. } => {
                for e in entries {
                    visit(Mat2::new(e[0], e[1], e[1], e[2]));
                }
            }
            _ => {}
        }
        lmin.min(1.0 / amax)
    }
}

impl<'de> Deserialize<'de> for MaterialTensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = MaterialSpec::deserialize(d)?;
        MaterialTensor::from_spec(&spec).map_err(serde::de::Error::custom)
    }
}

fn check_symmetric(m: &[[f64; 2]; 2]) -> Result<()> {
    if (m[0][1] - m[1][0]).abs() > 1e-14 * (1.0 + m[0][1].abs()) {
        return Err(Error::InvalidInput("material matrices must be symmetric".into()));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("material entries must be finite".into()));
    }
    Ok(())
}

/// Eigenvalues of a symmetric 2x2 matrix in increasing order.
pub fn sym_eigenvalues(a: &Mat2) -> (f64, f64) {
    let (p, q, r) = (a[(0, 0)], 0.5 * (a[(0, 1)] + a[(1, 0)]), a[(1, 1)]);
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    (mean - rad, mean + rad)
}

/// The macroscopic domain `[0,width] x [0,height]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn unit() -> Self {
        Rect {
            width: 1.0,
            height: 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn diameter(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn contains(&self, x: Vec2) -> bool {
        x.x >= 0.0 && x.y >= 0.0 && x.x <= self.width && x.y <= self.height
    }

    /// Distance to the boundary for points inside the rectangle.
    pub fn dist_to_boundary(&self, x: Vec2) -> f64 {
        x.x.min(self.width - x.x).min(x.y).min(self.height - x.y)
    }

    /// Boundary faces as counter-clockwise segments.
    pub fn faces(&self) -> [(Vec2, Vec2); 4] {
        let (w, h) = (self.width, self.height);
        [
            (vec2(0.0, 0.0), vec2(w, 0.0)),
            (vec2(w, 0.0), vec2(w, h)),
            (vec2(w, h), vec2(0.0, h)),
            (vec2(0.0, h), vec2(0.0, 0.0)),
        ]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OmegaSpec {
    #[default]
    UnitSquare,
    Rectangle {
        width: f64,
        height: f64,
    },
}

/// A scaled copy `ε(F_k + z)` of a cell hole.
#[derive(Clone, Debug, PartialEq)]
pub struct HoleInstance {
    pub cell: (usize, usize),
    pub local: usize,
    pub shape: Hole,
}

/// `Ω^ε = Ω \ εF̄` for a rectangle `Ω` tiled by `ε`-cells.
#[derive(Clone, Debug)]
pub struct PerforatedDomain {
    pub omega: Rect,
    pub n: usize,
    pub epsilon: f64,
    pub cells_x: usize,
    pub cells_y: usize,
    pub cell: CellGeometry,
    pub hole_instances: Vec<HoleInstance>,
    pub kappa: f64,
    /// Measured `dist(∂Ω, εF)`.
    pub boundary_clearance: f64,
}

fn cell_count(length: f64, n: usize) -> Result<usize> {
    let cells = length * n as f64;
    let rounded = cells.round();
    if (cells - rounded).abs() > 1e-9 || rounded < 1.0 {
        return Err(Error::InvalidInput(format!(
            "domain side {length} is not a whole number of cells of size 1/{n}"
        )));
    }
    Ok(rounded as usize)
}

/// Tiles `Ω` by cells of side `ε = 1/n` and records the scaled holes.
pub fn build_perforated_domain(n: usize, cell: &CellGeometry, omega_spec: OmegaSpec) -> Result<PerforatedDomain> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("n = {n} must be at least 2")));
    }
    let omega = match omega_spec {
        OmegaSpec::UnitSquare => Rect::unit(),
        OmegaSpec::Rectangle { width, height } => Rect { width, height },
    };
    let cells_x = cell_count(omega.width, n)?;
    let cells_y = cell_count(omega.height, n)?;
    let epsilon = 1.0 / n as f64;
    let mut hole_instances = Vec::with_capacity(cells_x * cells_y * cell.holes.len());
    let mut clearance = f64::INFINITY;
    for j in 0..cells_y {
        for i in 0..cells_x {
            let offset = vec2(i as f64 * epsilon, j as f64 * epsilon);
            for (k, hole) in cell.holes.iter().enumerate() {
                let shape = hole.transformed(epsilon, offset);
                let (lo, hi) = shape.bounding_box();
                let d = lo.x.min(lo.y).min(omega.width - hi.x).min(omega.height - hi.y);
                clearance = clearance.min(d);
                if d < cell.kappa * epsilon * (1.0 - 1e-12) {
                    return Err(Error::ClearanceViolation {
                        hole: hole_instances.len(),
                        distance: d,
                        required: cell.kappa * epsilon,
                    });
                }
                hole_instances.push(HoleInstance {
                    cell: (i, j),
                    local: k,
                    shape,
                });
            }
        }
    }
    Ok(PerforatedDomain {
        omega,
        n,
        epsilon,
        cells_x,
        cells_y,
        cell: cell.clone(),
        hole_instances,
        kappa: cell.kappa,
        boundary_clearance: clearance,
    })
}

impl PerforatedDomain {
    /// `|Ω^ε|` from the exact hole areas.
    pub fn perforated_area(&self) -> f64 {
        self.omega.area() - self.hole_instances.len() as f64 / self.cell.holes.len().max(1) as f64
            * self.cell.hole_area()
            * self.epsilon
            * self.epsilon
    }

    pub fn dist_to_boundary(&self, x: Vec2) -> f64 {
        self.omega.dist_to_boundary(x)
    }

    /// True when `x` lies in some `εF_k`.
    pub fn in_hole(&self, x: Vec2) -> bool {
        self.cell.hole_at(x / self.epsilon).is_some()
    }

    /// Global hole instance index for hole `local` of cell `(i, j)`.
    pub fn instance_index(&self, i: usize, j: usize, local: usize) -> usize {
        (j * self.cells_x + i) * self.cell.holes.len() + local
    }
}

/// `Σ_t = {x ∈ Ω : dist(x, ∂Ω) < t}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryStrip {
    pub t: f64,
    pub omega: Rect,
}

impl BoundaryStrip {
    pub fn contains(&self, x: Vec2) -> bool {
        self.omega.contains(x) && self.omega.dist_to_boundary(x) < self.t
    }

    pub fn area(&self) -> f64 {
        let w = (self.omega.width - 2.0 * self.t).max(0.0);
        let h = (self.omega.height - 2.0 * self.t).max(0.0);
        self.omega.area() - w * h
    }
}

pub fn boundary_strip(domain: &PerforatedDomain, t: f64) -> BoundaryStrip {
    BoundaryStrip {
        t,
        omega: domain.omega,
    }
}
