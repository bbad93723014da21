use crate::fem::mesh::TriMesh;
use crate::geometry::Vec2;

/// Bucket grid over triangle bounding boxes for point location.
#[derive(Clone, Debug)]
pub struct PointLocator {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl PointLocator {
    pub fn new(mesh: &TriMesh) -> Self {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &mesh.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = hi - lo;
        let area = (extent.x * extent.y).max(1e-300);
        // about two triangles per bucket
        let cell = (2.0 * area / mesh.n_triangles().max(1) as f64).sqrt().max(1e-12);
        let nx = ((extent.x / cell).ceil() as usize).max(1);
        let ny = ((extent.y / cell).ceil() as usize).max(1);
        let mut counts = vec![0u32; nx * ny + 1];
        let range = |t: usize| {
            let [a, b, c] = mesh.corners(t);
            let tlo = a.inf(&b).inf(&c);
            let thi = a.sup(&b).sup(&c);
            let i0 = (((tlo.x - lo.x) / cell).floor().max(0.0) as usize).min(nx - 1);
            let i1 = (((thi.x - lo.x) / cell).floor().max(0.0) as usize).min(nx - 1);
            let j0 = (((tlo.y - lo.y) / cell).floor().max(0.0) as usize).min(ny - 1);
            let j1 = (((thi.y - lo.y) / cell).floor().max(0.0) as usize).min(ny - 1);
            (i0, i1, j0, j1)
        };
        for t in 0..mesh.n_triangles() {
            let (i0, i1, j0, j1) = range(t);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    counts[j * nx + i + 1] += 1;
                }
            }
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; counts[nx * ny] as usize];
        for t in 0..mesh.n_triangles() {
            let (i0, i1, j0, j1) = range(t);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let b = j * nx + i;
                    items[fill[b] as usize] = t as u32;
                    fill[b] += 1;
                }
            }
        }
        PointLocator {
            origin: lo,
            cell,
            nx,
            ny,
            starts: counts,
            items,
        }
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    ///
    /// Points within rounding distance outside the mesh are attributed to the
    /// nearest candidate triangle; points farther away give `None`.
    pub fn locate(&self, mesh: &TriMesh, p: Vec2) -> Option<(usize, [f64; 3])> {
        let fi = (p.x - self.origin.x) / self.cell;
        let fj = (p.y - self.origin.y) / self.cell;
        if fi < -1e-9 || fj < -1e-9 || fi > self.nx as f64 + 1e-9 || fj > self.ny as f64 + 1e-9 {
            return None;
        }
        let i = (fi.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fj.floor().max(0.0) as usize).min(self.ny - 1);
        let b = j * self.nx + i;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.items[self.starts[b] as usize..self.starts[b + 1] as usize] {
            let t = t as usize;
            let lam = barycentric(mesh, t, p);
            let worst = lam[0].min(lam[1]).min(lam[2]);
            if worst >= 0.0 {
                return Some((t, lam));
            }
            if best.map_or(true, |(_, _, w)| worst > w) {
                best = Some((t, lam, worst));
            }
        }
        match best {
            Some((t, lam, w)) if w > -1e-9 => Some((t, lam)),
            _ => None,
        }
    }

    /// P1 interpolant of nodal `values` at `p`.
    pub fn interpolate(&self, mesh: &TriMesh, values: &[f64], p: Vec2) -> Option<f64> {
        self.locate(mesh, p).map(|(t, lam)| {
            let [a, b, c] = mesh.triangles[t];
            lam[0] * values[a as usize] + lam[1] * values[b as usize] + lam[2] * values[c as usize]
        })
    }
}

pub fn barycentric(mesh: &TriMesh, t: usize, p: Vec2) -> [f64; 3] {
    let [a, b, c] = mesh.corners(t);
    let det = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    let l1 = ((p.x - a.x) * (c.y - a.y) - (p.y - a.y) * (c.x - a.x)) / det;
    let l2 = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / det;
    [1.0 - l1 - l2, l1, l2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesher::{mesh_domain, mesh_rectangle};
    use crate::geometry::{build_perforated_domain, vec2, CellGeometry, OmegaSpec, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn affine_interpolation_is_exact() {
        let cell = CellGeometry::centered_disk(0.25, 0.2).unwrap();
        let d = build_perforated_domain(4, &cell, OmegaSpec::UnitSquare).unwrap();
        let mesh = mesh_domain(&d, 1.0 / 32.0).unwrap();
        let values: Vec<f64> = mesh.vertices.iter().map(|p| 2.0 * p.x - 3.0 * p.y + 0.5).collect();
        let loc = PointLocator::new(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let p = vec2(rng.gen(), rng.gen());
            let v = loc.interpolate(&mesh, &values, p).unwrap();
            assert!((v - (2.0 * p.x - 3.0 * p.y + 0.5)).abs() < 1e-12);
        }
        assert!(loc.interpolate(&mesh, &values, vec2(1.5, 0.5)).is_none());
    }

    #[test]
    fn corners_and_edges_are_found() {
        let mesh = mesh_rectangle(Rect::unit(), 0.1).unwrap();
        let loc = PointLocator::new(&mesh);
        for p in [vec2(0.0, 0.0), vec2(1.0, 1.0), vec2(1.0, 0.3), vec2(0.5, 0.0)] {
            assert!(loc.locate(&mesh, p).is_some());
        }
    }
}
