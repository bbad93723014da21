//! Cell and domain meshing.
//!
//! Cell meshes start from a uniform lattice of spacing `1/m <= h`, drop the
//! lattice points that crowd a feature (hole boundary or material
//! interface), add the feature polylines as constraint edges and hand the
//! lot to a constrained Delaunay triangulation. Opposite faces of the cell
//! carry identical point sets, so every cell mesh can be identified
//! periodically and tiled. Domain meshes are tilings of a cell mesh.

use std::collections::HashMap;
use std::sync::Arc;

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::fem::mesh::{classify_edges, Region, Tiling, TriMesh, VertexKind};
use crate::geometry::{vec2, CellGeometry, MaterialInterface, MaterialTensor, PerforatedDomain, Rect, Vec2};

/// Lattice points closer than this fraction of the spacing to a feature are
/// dropped.
const CROWDING: f64 = 0.55;

fn lattice_count(h: f64) -> usize {
    (1.0 / h - 1e-9).ceil().max(1.0) as usize
}

fn polygon_contains(pts: &[Vec2], p: Vec2) -> bool {
    let n = pts.len();
    (0..n).all(|i| {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) > 0.0
    })
}

/// Mesh of the unit cell resolving the holes of `cell`.
pub fn mesh_unit_cell(cell: &CellGeometry, h: f64, periodic: bool) -> Result<TriMesh> {
    mesh_unit_cell_for(cell, None, h, periodic)
}

/// Mesh of the unit cell resolving the holes and the interfaces of `material`.
pub fn mesh_unit_cell_for(
    cell: &CellGeometry,
    material: Option<&MaterialTensor>,
    h: f64,
    periodic: bool,
) -> Result<TriMesh> {
    let mut mesh = build_cell_mesh(cell, material, h)?;
    if !periodic {
        mesh.periodic_rep = None;
    }
    Ok(mesh)
}

fn check_resolution(cell: &CellGeometry, h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0 && h <= 0.5) {
        return Err(Error::MeshFailure(format!("mesh size {h} outside (0, 1/2]")));
    }
    let gap = cell.min_hole_gap();
    for (k, hole) in cell.holes.iter().enumerate() {
        let limit = hole.cell_boundary_clearance().min(hole.inner_radius()).min(gap) / 2.0;
        if h > limit * (1.0 + 1e-12) {
            return Err(Error::MeshFailure(format!(
                "hole {k} cannot be resolved at h = {h}: need h <= {limit:.4}"
            )));
        }
    }
    Ok(())
}

struct Feature {
    points: Vec<Vec2>,
    closed: bool,
    hole: Option<usize>,
}

fn build_cell_mesh(cell: &CellGeometry, material: Option<&MaterialTensor>, h: f64) -> Result<TriMesh> {
    check_resolution(cell, h)?;
    let m = lattice_count(h);
    let s = 1.0 / m as f64;

    let mut lines: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut shapes = Vec::new();
    if let Some(mat) = material {
        for interface in mat.interfaces() {
            match interface {
                MaterialInterface::Line { axis, coord } => {
                    for (k, hole) in cell.holes.iter().enumerate() {
                        let (lo, hi) = hole.bounding_box();
                        if coord > lo[axis] - s && coord < hi[axis] + s {
                            return Err(Error::MeshFailure(format!(
                                "material interface y{} = {coord} meets hole {k}",
                                axis + 1
                            )));
                        }
                    }
                    lines[axis].push(coord);
                }
                MaterialInterface::Shape(shape) => shapes.push(shape),
            }
        }
    }

    // Face coordinates, shared by opposite faces. Index 0 holds the x values
    // used on the bottom and top faces.
    let mut face_coords: [Vec<(f64, Option<usize>)>; 2] = [Vec::new(), Vec::new()];
    for axis in 0..2 {
        let mut coords: Vec<(f64, Option<usize>)> = Vec::new();
        for i in 0..m {
            let c = i as f64 * s;
            if lines[axis].iter().any(|&l| (l - c).abs() < 0.3 * s && l != c) {
                continue;
            }
            coords.push((c, Some(i)));
        }
        for &l in &lines[axis] {
            if !coords.iter().any(|&(c, _)| c == l) {
                coords.push((l, None));
            }
        }
        coords.sort_by(|a, b| a.0.total_cmp(&b.0));
        face_coords[axis] = coords;
    }

    let mut features: Vec<Feature> = Vec::new();
    for (k, hole) in cell.holes.iter().enumerate() {
        features.push(Feature {
            points: hole.boundary_polyline(h),
            closed: true,
            hole: Some(k),
        });
    }
    for shape in &shapes {
        features.push(Feature {
            points: shape.boundary_polyline(h),
            closed: true,
            hole: None,
        });
    }

    let crowded = |p: Vec2| -> bool {
        cell.holes.iter().any(|hole| hole.signed_distance(p).abs() < CROWDING * s)
            || shapes.iter().any(|sh| sh.signed_distance(p).abs() < CROWDING * s)
            || (0..2).any(|a| lines[a].iter().any(|&l| (p[a] - l).abs() < CROWDING * s))
    };

    let mut vertices: Vec<Vec2> = Vec::new();
    let mut lattice: HashMap<(usize, usize), usize> = HashMap::new();
    let mut lattice_of: Vec<Option<(usize, usize)>> = Vec::new();
    let mut push = |p: Vec2, ij: Option<(usize, usize)>, vertices: &mut Vec<Vec2>| {
        if let Some(ij) = ij {
            lattice.insert(ij, vertices.len());
        }
        lattice_of.push(ij);
        vertices.push(p);
    };

    // Boundary: bottom and top rows use face_coords[0] for x, left and right
    // columns use face_coords[1] for y; corners come from both.
    let xs = &face_coords[0];
    let ys = &face_coords[1];
    for &(x, xi) in xs {
        push(vec2(x, 0.0), xi.map(|i| (i, 0)), &mut vertices);
    }
    push(vec2(1.0, 0.0), Some((m, 0)), &mut vertices);
    for &(y, yj) in ys.iter().skip(1) {
        push(vec2(0.0, y), yj.map(|j| (0, j)), &mut vertices);
        push(vec2(1.0, y), yj.map(|j| (m, j)), &mut vertices);
    }
    for &(x, xi) in xs {
        push(vec2(x, 1.0), xi.map(|i| (i, m)), &mut vertices);
    }
    push(vec2(1.0, 1.0), Some((m, m)), &mut vertices);

    for j in 1..m {
        for i in 1..m {
            let p = vec2(i as f64 * s, j as f64 * s);
            if !crowded(p) {
                push(p, Some((i, j)), &mut vertices);
            }
        }
    }

    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut hole_boundary_vertices = Vec::new();
    for f in &features {
        let start = vertices.len();
        for &p in &f.points {
            push(p, None, &mut vertices);
            if f.hole.is_some() {
                hole_boundary_vertices.push(vertices.len() - 1);
            }
        }
        let n = f.points.len();
        let last = if f.closed { n } else { n - 1 };
        for i in 0..last {
            edges.push([start + i, start + (i + 1) % n]);
        }
    }
    // Interface lines run across the cell between the matching face points.
    for axis in 0..2 {
        let other = &face_coords[1 - axis];
        for &l in &lines[axis] {
            let mut chain = Vec::new();
            let at = |t: f64| if axis == 0 { vec2(l, t) } else { vec2(t, l) };
            let find = |p: Vec2, vs: &[Vec2]| vs.iter().position(|&q| q == p);
            chain.push(find(at(0.0), &vertices).expect("face point on interface"));
            for &(t, _) in other.iter().skip(1) {
                let p = at(t);
                let idx = vertices.len();
                push(p, None, &mut vertices);
                chain.push(idx);
            }
            chain.push(find(at(1.0), &vertices).expect("face point on interface"));
            for w in chain.windows(2) {
                edges.push([w[0], w[1]]);
            }
        }
    }

    let points: Vec<Point2<f64>> = vertices.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let mut conflict = false;
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::try_bulk_load_cdt(points, edges, |_| {
        conflict = true;
    })
    .map_err(|e| Error::MeshFailure(format!("triangulation failed: {e:?}")))?;
    if conflict {
        return Err(Error::MeshFailure("feature polylines intersect".into()));
    }
    if cdt.num_vertices() != vertices.len() {
        return Err(Error::MeshFailure("coincident mesh vertices".into()));
    }

    let mut triangles: Vec<[u32; 3]> = cdt
        .inner_faces()
        .map(|f| {
            let [a, b, c] = f.vertices();
            [a.fix().index() as u32, b.fix().index() as u32, c.fix().index() as u32]
        })
        .collect();
    for t in triangles.iter_mut() {
        let [a, b, c] = t.map(|i| vertices[i as usize]);
        if (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x) < 0.0 {
            t.swap(1, 2);
        }
    }
    normalize_diagonals(&mut triangles, &lattice_of, &lattice);
    triangles.sort_unstable();

    let hole_polys: Vec<Vec<Vec2>> = features
        .iter()
        .filter(|f| f.hole.is_some())
        .map(|f| f.points.clone())
        .collect();
    let regions: Vec<Region> = triangles
        .iter()
        .map(|t| {
            let c = t.iter().fold(Vec2::zeros(), |acc, &i| acc + vertices[i as usize]) / 3.0;
            hole_polys
                .iter()
                .position(|poly| polygon_contains(poly, c))
                .map_or(Region::Matrix, |k| Region::Hole(k as u32))
        })
        .collect();

    let mut kinds = vec![VertexKind::Interior; vertices.len()];
    for (v, p) in vertices.iter().enumerate() {
        if p.x == 0.0 || p.y == 0.0 || p.x == 1.0 || p.y == 1.0 {
            kinds[v] = VertexKind::OuterBoundary;
        } else if hole_polys.iter().any(|poly| polygon_contains(poly, *p)) {
            kinds[v] = VertexKind::HoleInterior;
        }
    }
    for &v in &hole_boundary_vertices {
        kinds[v] = VertexKind::HoleBoundary;
    }

    let rep = periodic_representatives(&vertices);
    let mut mesh = TriMesh::from_parts(vertices, triangles, regions, kinds, h);
    mesh.periodic_rep = Some(rep);
    for t in 0..mesh.n_triangles() {
        if mesh.signed_area(t) <= 0.0 {
            return Err(Error::MeshFailure(format!("degenerate triangle {t}")));
        }
    }
    Ok(mesh)
}

/// Makes every lattice square that is split into two triangles use the
/// same diagonal, so the mesh keeps the symmetry `y1 <-> y2` of the lattice.
fn normalize_diagonals(
    triangles: &mut [[u32; 3]],
    lattice_of: &[Option<(usize, usize)>],
    lattice: &HashMap<(usize, usize), usize>,
) {
    let mut squares: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        let ij: Option<Vec<(usize, usize)>> = tri.iter().map(|&v| lattice_of[v as usize]).collect();
        let Some(ij) = ij else { continue };
        let i0 = ij.iter().map(|p| p.0).min().unwrap();
        let j0 = ij.iter().map(|p| p.1).min().unwrap();
        if ij.iter().all(|&(i, j)| i - i0 <= 1 && j - j0 <= 1) {
            squares.entry((i0, j0)).or_default().push(t);
        }
    }
    for ((i, j), ts) in squares {
        if ts.len() != 2 {
            continue;
        }
        let v00 = lattice[&(i, j)] as u32;
        let v10 = lattice[&(i + 1, j)] as u32;
        let v01 = lattice[&(i, j + 1)] as u32;
        let v11 = lattice[&(i + 1, j + 1)] as u32;
        let anti = ts.iter().all(|&t| triangles[t].contains(&v10) && triangles[t].contains(&v01));
        if anti {
            triangles[ts[0]] = [v00, v10, v11];
            triangles[ts[1]] = [v00, v11, v01];
        }
    }
}

/// Representative of each cell vertex under the identification of opposite
/// faces: points with `x = 1` map to `x = 0`, `y = 1` to `y = 0`.
fn periodic_representatives(vertices: &[Vec2]) -> Vec<u32> {
    let key = |p: Vec2| (p.x.to_bits(), p.y.to_bits());
    let index: HashMap<(u64, u64), u32> = vertices
        .iter()
        .enumerate()
        .map(|(i, &p)| (key(p), i as u32))
        .collect();
    vertices
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let q = vec2(if p.x == 1.0 { 0.0 } else { p.x }, if p.y == 1.0 { 0.0 } else { p.y });
            if q == p {
                i as u32
            } else {
                index[&key(q)]
            }
        })
        .collect()
}

/// Mesh of `Ω` tiling a cell mesh of size `h/ε`; all hole triangles are
/// kept and labelled by hole instance.
pub fn mesh_domain(domain: &PerforatedDomain, h: f64) -> Result<TriMesh> {
    mesh_domain_for(domain, None, h)
}

pub fn mesh_domain_for(domain: &PerforatedDomain, material: Option<&MaterialTensor>, h: f64) -> Result<TriMesh> {
    let eps = domain.epsilon;
    if !(h > 0.0 && h <= eps / 4.0 * (1.0 + 1e-12)) {
        return Err(Error::MeshFailure(format!("h = {h} does not resolve eps = {eps}: need h <= eps/4")));
    }
    let cell_mesh = Arc::new(build_cell_mesh(&domain.cell, material, h / eps)?);
    Ok(tile(&cell_mesh, domain.cells_x, domain.cells_y, eps, domain.cell.holes.len(), h))
}

pub(crate) fn tile(cell_mesh: &Arc<TriMesh>, cells_x: usize, cells_y: usize, eps: f64, holes_per_cell: usize, h: f64) -> TriMesh {
    let rep = cell_mesh.periodic_rep.as_ref().expect("cell meshes carry representatives");
    let nloc = cell_mesh.n_vertices();
    let mut slots = vec![u32::MAX; (cells_x + 1) * (cells_y + 1) * nloc];
    let mut vertices = Vec::new();
    let mut kinds = Vec::new();
    let mut canonical = Vec::new();
    let mut triangles = Vec::with_capacity(cells_x * cells_y * cell_mesh.n_triangles());
    let mut regions = Vec::with_capacity(triangles.capacity());

    // lattice shift of each local vertex relative to its representative
    let shift: Vec<(usize, usize)> = (0..nloc)
        .map(|v| {
            let p = cell_mesh.vertices[v];
            let r = cell_mesh.vertices[rep[v] as usize];
            ((p.x - r.x).round() as usize, (p.y - r.y).round() as usize)
        })
        .collect();

    let mut global = vec![0u32; nloc];
    for cj in 0..cells_y {
        for ci in 0..cells_x {
            for v in 0..nloc {
                let r = rep[v] as usize;
                let (i, j) = (ci + shift[v].0, cj + shift[v].1);
                let slot = (j * (cells_x + 1) + i) * nloc + r;
                if slots[slot] == u32::MAX {
                    slots[slot] = vertices.len() as u32;
                    let y = cell_mesh.vertices[r];
                    vertices.push(vec2(eps * (i as f64 + y.x), eps * (j as f64 + y.y)));
                    let on_outer = (y.x == 0.0 && (i == 0 || i == cells_x)) || (y.y == 0.0 && (j == 0 || j == cells_y));
                    kinds.push(match cell_mesh.vertex_kind[v] {
                        VertexKind::HoleBoundary => VertexKind::HoleBoundary,
                        VertexKind::HoleInterior => VertexKind::HoleInterior,
                        _ if on_outer => VertexKind::OuterBoundary,
                        _ => VertexKind::Interior,
                    });
                    canonical.push((i as u32, j as u32, r as u32));
                }
                global[v] = slots[slot];
            }
            let cell_index = cj * cells_x + ci;
            for (t, tri) in cell_mesh.triangles.iter().enumerate() {
                triangles.push(tri.map(|v| global[v as usize]));
                regions.push(match cell_mesh.regions[t] {
                    Region::Matrix => Region::Matrix,
                    Region::Hole(k) => Region::Hole((cell_index * holes_per_cell) as u32 + k),
                });
            }
        }
    }
    let (boundary_edges, hole_edges) = classify_edges(&triangles, &regions);
    TriMesh {
        vertices,
        triangles,
        regions,
        vertex_kind: kinds,
        boundary_edges,
        hole_edges,
        periodic_rep: None,
        tiling: Some(Tiling::new(cells_x, cells_y, eps, cell_mesh.clone(), canonical, slots)),
        h,
    }
}

/// Structured mesh of a rectangle with spacing at most `h`, every square
/// split along the same diagonal.
pub fn mesh_rectangle(rect: Rect, h: f64) -> Result<TriMesh> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::MeshFailure(format!("invalid mesh size {h}")));
    }
    let nx = (rect.width / h - 1e-9).ceil().max(1.0) as usize;
    let ny = (rect.height / h - 1e-9).ceil().max(1.0) as usize;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut kinds = Vec::with_capacity(vertices.capacity());
    for j in 0..=ny {
        for i in 0..=nx {
            let x = if i == nx { rect.width } else { rect.width * i as f64 / nx as f64 };
            let y = if j == ny { rect.height } else { rect.height * j as f64 / ny as f64 };
            vertices.push(vec2(x, y));
            kinds.push(if i == 0 || j == 0 || i == nx || j == ny {
                VertexKind::OuterBoundary
            } else {
                VertexKind::Interior
            });
        }
    }
    let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let regions = vec![Region::Matrix; triangles.len()];
    Ok(TriMesh::from_parts(vertices, triangles, regions, kinds, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_perforated_domain, Hole, OmegaSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn inscribed_area(r: f64, n: usize) -> f64 {
        0.5 * n as f64 * r * r * (2.0 * PI / n as f64).sin()
    }

    #[test]
    fn empty_cell_structured() {
        let mesh = mesh_unit_cell(&CellGeometry::empty(), 0.25, true).unwrap();
        assert_eq!(mesh.n_vertices(), 25);
        assert_eq!(mesh.n_triangles(), 32);
        let rep = mesh.periodic_rep.as_ref().unwrap();
        for (v, &r) in rep.iter().enumerate() {
            let d = mesh.vertices[v] - mesh.vertices[r as usize];
            assert!(d.x == 0.0 || d.x == 1.0);
            assert!(d.y == 0.0 || d.y == 1.0);
        }
        // 9 interior nodes, 4 on the bottom face, 3 more on the left face
        let distinct: std::collections::BTreeSet<u32> = rep.iter().copied().collect();
        assert_eq!(distinct.len(), 16);
    }

    #[test]
    fn disk_cell_areas() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let mesh = mesh_unit_cell(&cell, 0.05, true).unwrap();
        assert_relative_eq!(mesh.total_area(), 1.0, epsilon = 1e-12);
        let n = cell.holes[0].boundary_polyline(0.05).len();
        assert_relative_eq!(mesh.matrix_area(), 1.0 - inscribed_area(0.25, n), epsilon = 1e-12);
        assert!((mesh.matrix_area() - (1.0 - PI * 0.0625)).abs() < 2.0 * 0.05);
        for t in 0..mesh.n_triangles() {
            assert!(mesh.signed_area(t) > 0.0);
        }
        assert_eq!(mesh.hole_loop_count(), 1);
        assert!(mesh.max_edge_length() <= 0.05 * 2f64.sqrt() * 1.5);
    }

    #[test]
    fn coarse_disk_fails() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        assert!(matches!(mesh_unit_cell(&cell, 0.3, true), Err(Error::MeshFailure(_))));
    }

    #[test]
    fn laminate_interface_is_resolved() {
        let lam = MaterialTensor::laminate_half(1.0, 4.0).unwrap();
        let mesh = mesh_unit_cell_for(&CellGeometry::empty(), Some(&lam), 0.1, true).unwrap();
        for t in 0..mesh.n_triangles() {
            let [a, b, c] = mesh.corners(t);
            let lo = a.x.min(b.x).min(c.x);
            let hi = a.x.max(b.x).max(c.x);
            assert!(hi <= 0.5 || lo >= 0.5, "triangle {t} straddles the interface");
        }
    }

    #[test]
    fn interface_through_hole_rejected() {
        let lam = MaterialTensor::laminate_half(1.0, 4.0).unwrap();
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        assert!(matches!(
            mesh_unit_cell_for(&cell, Some(&lam), 0.05, true),
            Err(Error::MeshFailure(_))
        ));
    }

    #[test]
    fn square_hole_cell() {
        let cell = CellGeometry::new(vec![Hole::square([0.5, 0.5], 0.4)], 0.2).unwrap();
        let mesh = mesh_unit_cell(&cell, 0.05, true).unwrap();
        assert_relative_eq!(mesh.matrix_area(), 1.0 - 0.16, epsilon = 1e-12);
    }

    #[test]
    fn domain_mesh_examples() {
        let empty = build_perforated_domain(2, &CellGeometry::empty(), OmegaSpec::UnitSquare).unwrap();
        let mesh = mesh_domain(&empty, 0.125).unwrap();
        assert!(mesh.hole_edges.is_empty());
        assert_relative_eq!(mesh.total_area(), 1.0, epsilon = 1e-12);
        let boundary_len: f64 = mesh
            .boundary_edges
            .iter()
            .map(|[a, b]| (mesh.vertices[*a as usize] - mesh.vertices[*b as usize]).norm())
            .sum();
        assert_relative_eq!(boundary_len, 4.0, epsilon = 1e-12);

        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let d = build_perforated_domain(4, &cell, OmegaSpec::UnitSquare).unwrap();
        let mesh = mesh_domain(&d, 1.0 / 32.0).unwrap();
        assert_eq!(mesh.hole_loop_count(), 16);
        assert_eq!(mesh.n_holes(), 16);
        assert!((mesh.total_area() - 1.0).abs() < 1e-12);
        for t in 0..mesh.n_triangles() {
            assert!(mesh.signed_area(t) > 0.0);
        }
        for [a, b] in &mesh.boundary_edges {
            assert_eq!(mesh.vertex_kind[*a as usize], VertexKind::OuterBoundary);
            assert_eq!(mesh.vertex_kind[*b as usize], VertexKind::OuterBoundary);
        }
        assert!(mesh_domain(&d, 0.1).is_err());
    }

    #[test]
    fn tiling_shift_lookup() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let d = build_perforated_domain(4, &cell, OmegaSpec::UnitSquare).unwrap();
        let mesh = mesh_domain(&d, 1.0 / 32.0).unwrap();
        let tiling = mesh.tiling.as_ref().unwrap();
        for v in 0..mesh.n_vertices() {
            if let Some(w) = tiling.shifted(v, 1, 0) {
                let diff = mesh.vertices[w] - mesh.vertices[v];
                assert_relative_eq!(diff.x, 0.25, epsilon = 1e-12);
                assert_relative_eq!(diff.y, 0.0, epsilon = 1e-12);
            } else {
                assert!(mesh.vertices[v].x > 0.75 - 1e-12);
            }
        }
    }

    #[test]
    fn rectangle_mesh() {
        let mesh = mesh_rectangle(Rect::unit(), 0.25).unwrap();
        assert_eq!(mesh.n_vertices(), 25);
        assert_eq!(mesh.boundary_edges.len(), 16);
        assert_relative_eq!(mesh.total_area(), 1.0, epsilon = 1e-14);
    }
}
