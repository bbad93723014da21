//! Plain-text mesh format.
//!
//! ```text
//! h <mesh size>
//! v <x> <y>
//! t <i> <j> <k>
//! m t <triangle> matrix|hole <k>
//! m v <vertex> interior|outer|hole_boundary|hole_interior
//! m p <vertex> <representative>
//! ```
//! Lines starting with `#` are comments. Boundary and hole edges are
//! recomputed from the triangles on reading.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::mesh::{Region, TriMesh, VertexKind};
use crate::geometry::vec2;

pub fn mesh_to_string(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# perfhom mesh: {} vertices, {} triangles", mesh.n_vertices(), mesh.n_triangles());
    let _ = writeln!(s, "h {:e}", mesh.h);
    for p in &mesh.vertices {
        let _ = writeln!(s, "v {:e} {:e}", p.x, p.y);
    }
    for [a, b, c] in &mesh.triangles {
        let _ = writeln!(s, "t {a} {b} {c}");
    }
    for (t, r) in mesh.regions.iter().enumerate() {
        match r {
            Region::Matrix => {
                let _ = writeln!(s, "m t {t} matrix");
            }
            Region::Hole(k) => {
                let _ = writeln!(s, "m t {t} hole {k}");
            }
        }
    }
    for (v, k) in mesh.vertex_kind.iter().enumerate() {
        let name = match k {
            VertexKind::Interior => "interior",
            VertexKind::OuterBoundary => "outer",
            VertexKind::HoleBoundary => "hole_boundary",
            VertexKind::HoleInterior => "hole_interior",
        };
        let _ = writeln!(s, "m v {v} {name}");
    }
    if let Some(rep) = &mesh.periodic_rep {
        for (v, r) in rep.iter().enumerate() {
            let _ = writeln!(s, "m p {v} {r}");
        }
    }
    s
}

pub fn mesh_from_str(text: &str) -> Result<TriMesh> {
    let mut h = 0.0;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    let mut kinds = Vec::new();
    let mut rep: Vec<(usize, u32)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = |m: &str| Error::Parse {
            line: ln + 1,
            message: m.to_string(),
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("expected a number"));
        let idx = |s: &str| s.parse::<u32>().map_err(|_| bad("expected an index"));
        match parts.as_slice() {
            ["h", x] => h = num(x)?,
            ["v", x, y] => vertices.push(vec2(num(x)?, num(y)?)),
            ["t", a, b, c] => triangles.push([idx(a)?, idx(b)?, idx(c)?]),
            ["m", "t", t, "matrix"] => regions.push((idx(t)? as usize, Region::Matrix)),
            ["m", "t", t, "hole", k] => regions.push((idx(t)? as usize, Region::Hole(idx(k)?))),
            ["m", "v", v, kind] => {
                let k = match *kind {
                    "interior" => VertexKind::Interior,
                    "outer" => VertexKind::OuterBoundary,
                    "hole_boundary" => VertexKind::HoleBoundary,
                    "hole_interior" => VertexKind::HoleInterior,
                    _ => return Err(bad("unknown vertex kind")),
                };
                kinds.push((idx(v)? as usize, k));
            }
            ["m", "p", v, r] => rep.push((idx(v)? as usize, idx(r)?)),
            _ => return Err(bad("unrecognized line")),
        }
    }
    let nv = vertices.len();
    let nt = triangles.len();
    if triangles.iter().flatten().any(|&i| i as usize >= nv) {
        return Err(Error::Parse {
            line: 0,
            message: "triangle refers to a missing vertex".into(),
        });
    }
    let mut region_vec = vec![Region::Matrix; nt];
    for (t, r) in regions {
        *region_vec.get_mut(t).ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("region for missing triangle {t}"),
        })? = r;
    }
    let mut kind_vec = vec![VertexKind::Interior; nv];
    for (v, k) in kinds {
        *kind_vec.get_mut(v).ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("marker for missing vertex {v}"),
        })? = k;
    }
    let mut mesh = TriMesh::from_parts(vertices, triangles, region_vec, kind_vec, h);
    if !rep.is_empty() {
        let mut r: Vec<u32> = (0..nv as u32).collect();
        for (v, to) in rep {
            if v >= nv || to as usize >= nv {
                return Err(Error::Parse {
                    line: 0,
                    message: "periodic pair out of range".into(),
                });
            }
            r[v] = to;
        }
        mesh.periodic_rep = Some(r);
    }
    Ok(mesh)
}

pub fn write_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn read_mesh(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    mesh_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesher::mesh_unit_cell;
    use crate::geometry::CellGeometry;

    #[test]
    fn roundtrip_preserves_mesh() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let mesh = mesh_unit_cell(&cell, 0.1, true).unwrap();
        let back = mesh_from_str(&mesh_to_string(&mesh)).unwrap();
        assert_eq!(back.vertices, mesh.vertices);
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.regions, mesh.regions);
        assert_eq!(back.vertex_kind, mesh.vertex_kind);
        assert_eq!(back.periodic_rep, mesh.periodic_rep);
        assert_eq!(back.boundary_edges, mesh.boundary_edges);
        assert_eq!(back.hole_edges, mesh.hole_edges);
    }

    #[test]
    fn bad_lines_are_reported() {
        let err = mesh_from_str("v 0 0\nq 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
