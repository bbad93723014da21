use std::collections::HashMap;
use std::sync::Arc;

use crate::geometry::{vec2, Vec2};

/// Material label of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Matrix,
    /// Hole id: the local hole index on cell meshes, the global hole
    /// instance index on domain meshes.
    Hole(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Interior,
    /// On `∂Ω`, or on the cell boundary for cell meshes.
    OuterBoundary,
    HoleBoundary,
    HoleInterior,
}

/// Bookkeeping for meshes built by tiling a cell mesh.
#[derive(Clone, Debug)]
pub struct Tiling {
    pub cells_x: usize,
    pub cells_y: usize,
    pub epsilon: f64,
    pub cell_mesh: Arc<TriMesh>,
    /// Per global vertex: lattice corner `(i, j)` and representative local
    /// vertex of the cell mesh, so that `x = ε((i, j) + y_rep)`.
    pub canonical: Vec<(u32, u32, u32)>,
    slots: Vec<u32>,
}

impl Tiling {
    pub(crate) fn new(
        cells_x: usize,
        cells_y: usize,
        epsilon: f64,
        cell_mesh: Arc<TriMesh>,
        canonical: Vec<(u32, u32, u32)>,
        slots: Vec<u32>,
    ) -> Self {
        Tiling {
            cells_x,
            cells_y,
            epsilon,
            cell_mesh,
            canonical,
            slots,
        }
    }

    pub(crate) fn slot_index(&self, i: usize, j: usize, rep: usize) -> usize {
        (j * (self.cells_x + 1) + i) * self.cell_mesh.vertices.len() + rep
    }

    /// Global vertex at lattice corner `(i, j)` with representative `rep`.
    pub fn vertex_at(&self, i: i64, j: i64, rep: usize) -> Option<usize> {
        if i < 0 || j < 0 || i as usize > self.cells_x || j as usize > self.cells_y {
            return None;
        }
        let s = self.slots[self.slot_index(i as usize, j as usize, rep)];
        (s != u32::MAX).then_some(s as usize)
    }

    /// The vertex `x + ε (dx, dy)` when it exists.
    pub fn shifted(&self, vertex: usize, dx: i64, dy: i64) -> Option<usize> {
        let (i, j, rep) = self.canonical[vertex];
        self.vertex_at(i as i64 + dx, j as i64 + dy, rep as usize)
    }
}

/// Conforming triangulation with material labels and boundary markers.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<Vec2>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[u32; 3]>,
    pub regions: Vec<Region>,
    pub vertex_kind: Vec<VertexKind>,
    /// Outer boundary edges, oriented with the mesh on the left.
    pub boundary_edges: Vec<[u32; 2]>,
    /// Hole boundary edges oriented with the matrix on the left, and the
    /// hole they bound.
    pub hole_edges: Vec<([u32; 2], u32)>,
    /// For periodic cell meshes: the representative of each vertex under
    /// identification of opposite faces.
    pub periodic_rep: Option<Vec<u32>>,
    pub tiling: Option<Tiling>,
    pub h: f64,
}

impl TriMesh {
    /// Assembles a mesh from raw parts and derives the edge markers.
    pub fn from_parts(
        vertices: Vec<Vec2>,
        triangles: Vec<[u32; 3]>,
        regions: Vec<Region>,
        vertex_kind: Vec<VertexKind>,
        h: f64,
    ) -> Self {
        let (boundary_edges, hole_edges) = classify_edges(&triangles, &regions);
        TriMesh {
            vertices,
            triangles,
            regions,
            vertex_kind,
            boundary_edges,
            hole_edges,
            periodic_rep: None,
            tiling: None,
            h,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn corners(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    #[inline]
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
    }

    #[inline]
    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    #[inline]
    pub fn centroid(&self, t: usize) -> Vec2 {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    /// Gradients of the three barycentric hat functions on triangle `t`.
    #[inline]
    pub fn hat_gradients(&self, t: usize) -> [Vec2; 3] {
        let [a, b, c] = self.corners(t);
        let two_area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        let inv = 1.0 / two_area;
        [
            vec2(b.y - c.y, c.x - b.x) * inv,
            vec2(c.y - a.y, a.x - c.x) * inv,
            vec2(a.y - b.y, b.x - a.x) * inv,
        ]
    }

    /// Gradient of the P1 interpolant of nodal `values` on triangle `t`.
    #[inline]
    pub fn gradient(&self, t: usize, values: &[f64]) -> Vec2 {
        let g = self.hat_gradients(t);
        let [a, b, c] = self.triangles[t];
        g[0] * values[a as usize] + g[1] * values[b as usize] + g[2] * values[c as usize]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn is_matrix(&self, t: usize) -> bool {
        self.regions[t] == Region::Matrix
    }

    /// Number of distinct hole ids.
    pub fn n_holes(&self) -> usize {
        self.regions
            .iter()
            .filter_map(|r| match r {
                Region::Hole(k) => Some(*k as usize + 1),
                Region::Matrix => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Vertices touched by a matrix triangle, i.e. the closure of `omega`.
    pub fn matrix_vertices(&self) -> Vec<bool> {
        let mut out = vec![false; self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.is_matrix(t) {
                for &v in tri {
                    out[v as usize] = true;
                }
            }
        }
        out
    }

    /// Area of the matrix phase.
    pub fn matrix_area(&self) -> f64 {
        (0..self.n_triangles()).filter(|&t| self.is_matrix(t)).map(|t| self.area(t)).sum()
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.n_vertices()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                out[v as usize].push(t as u32);
            }
        }
        out
    }

    /// Lumped nodal areas: one third of the area of each incident triangle.
    pub fn lumped_areas(&self, select: impl Fn(usize) -> bool) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vertices()];
        for t in 0..self.n_triangles() {
            if select(t) {
                let a = self.area(t) / 3.0;
                for &v in &self.triangles[t] {
                    out[v as usize] += a;
                }
            }
        }
        out
    }

    /// Number of closed hole boundary loops, counted as connected components
    /// of the hole edge graph.
    pub fn hole_loop_count(&self) -> usize {
        let mut parent: HashMap<u32, u32> = HashMap::new();
        fn find(p: &mut HashMap<u32, u32>, x: u32) -> u32 {
            let mut r = x;
            while let Some(&q) = p.get(&r) {
                if q == r {
                    break;
                }
                r = q;
            }
            p.insert(x, r);
            r
        }
        for ([a, b], _) in &self.hole_edges {
            parent.entry(*a).or_insert(*a);
            parent.entry(*b).or_insert(*b);
            let ra = find(&mut parent, *a);
            let rb = find(&mut parent, *b);
            if ra != rb {
                parent.insert(ra, rb);
            }
        }
        let keys: Vec<u32> = parent.keys().copied().collect();
        let mut roots: Vec<u32> = keys.into_iter().map(|k| find(&mut parent, k)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Largest triangle edge length.
    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in 0..self.n_triangles() {
            let [a, b, c] = self.corners(t);
            h = h.max((a - b).norm()).max((b - c).norm()).max((c - a).norm());
        }
        h
    }

    /// Stable fingerprint of the mesh geometry, used as a cache key.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for v in &self.vertices {
            hasher.update(v.x.to_le_bytes());
            hasher.update(v.y.to_le_bytes());
        }
        for (t, r) in self.triangles.iter().zip(&self.regions) {
            for i in t {
                hasher.update(i.to_le_bytes());
            }
            let tag: u32 = match r {
                Region::Matrix => u32::MAX,
                Region::Hole(k) => *k,
            };
            hasher.update(tag.to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Outer boundary edges (used by one triangle) and interface edges between
/// matrix and hole triangles.
pub(crate) fn classify_edges(triangles: &[[u32; 3]], regions: &[Region]) -> (Vec<[u32; 2]>, Vec<([u32; 2], u32)>) {
    let mut seen: HashMap<(u32, u32), (u32, u32, u32)> = HashMap::with_capacity(triangles.len() * 2);
    let mut interfaces = Vec::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            if let Some((t0, a0, b0)) = seen.remove(&key) {
                let (r0, r1) = (regions[t0 as usize], regions[t]);
                match (r0, r1) {
                    (Region::Matrix, Region::Hole(h)) => interfaces.push(([a0, b0], h)),
                    (Region::Hole(h), Region::Matrix) => interfaces.push(([a, b], h)),
                    _ => {}
                }
            } else {
                seen.insert(key, (t as u32, a, b));
            }
        }
    }
    let mut boundary: Vec<[u32; 2]> = seen.into_values().map(|(_, a, b)| [a, b]).collect();
    boundary.sort_unstable();
    interfaces.sort_unstable();
    (boundary, interfaces)
}
