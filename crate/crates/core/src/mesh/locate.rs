//! Bucket-grid point location for vertices and triangles.

use super::{Mesh, Point};

/// Uniform bucket grid over the mesh extent.
pub struct SpatialIndex<'m> {
    mesh: &'m Mesh,
    origin: Point,
    cell: [f64; 2],
    dims: [usize; 2],
    vertex_buckets: Vec<Vec<usize>>,
    cell_buckets: Vec<Vec<usize>>,
}

impl<'m> SpatialIndex<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        let ext = mesh.extent();
        let n = (mesh.num_cells().max(1) as f64).sqrt().ceil() as usize;
        let dims = [n.max(1), n.max(1)];
        let cell = [
            (ext.width() / dims[0] as f64).max(f64::MIN_POSITIVE),
            (ext.height() / dims[1] as f64).max(f64::MIN_POSITIVE),
        ];
        let mut index = SpatialIndex {
            mesh,
            origin: [ext.x_min, ext.y_min],
            cell,
            dims,
            vertex_buckets: vec![Vec::new(); dims[0] * dims[1]],
            cell_buckets: vec![Vec::new(); dims[0] * dims[1]],
        };
        for (v, p) in mesh.vertices().iter().enumerate() {
            let b = index.bucket_of(*p);
            index.vertex_buckets[b[1] * dims[0] + b[0]].push(v);
        }
        for t in 0..mesh.num_cells() {
            let pts = mesh.cell_vertices(t);
            let lo = index.bucket_of([
                pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
                pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
            ]);
            let hi = index.bucket_of([
                pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
                pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
            ]);
            for by in lo[1]..=hi[1] {
                for bx in lo[0]..=hi[0] {
                    index.cell_buckets[by * dims[0] + bx].push(t);
                }
            }
        }
        index
    }

    fn bucket_of(&self, p: Point) -> [usize; 2] {
        let f = |k: usize| {
            let r = ((p[k] - self.origin[k]) / self.cell[k]).floor();
            if r < 0.0 {
                0
            } else {
                (r as usize).min(self.dims[k] - 1)
            }
        };
        [f(0), f(1)]
    }

    /// Nearest vertex; ties go to the lowest index.
    pub fn nearest_vertex(&self, p: Point) -> usize {
        let b = self.bucket_of(p);
        let mut best: Option<(f64, usize)> = None;
        let max_ring = self.dims[0].max(self.dims[1]);
        for ring in 0..=max_ring {
            let x0 = b[0].saturating_sub(ring);
            let x1 = (b[0] + ring).min(self.dims[0] - 1);
            let y0 = b[1].saturating_sub(ring);
            let y1 = (b[1] + ring).min(self.dims[1] - 1);
            for by in y0..=y1 {
                for bx in x0..=x1 {
                    let on_ring = bx + ring == b[0] || bx == b[0] + ring || by + ring == b[1] || by == b[1] + ring;
                    if ring > 0 && !on_ring {
                        continue;
                    }
                    for &v in &self.vertex_buckets[by * self.dims[0] + bx] {
                        let q = self.mesh.vertex(v);
                        let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                        best = match best {
                            Some((bd, bv)) if bd < d || (bd == d && bv < v) => Some((bd, bv)),
                            _ => Some((d, v)),
                        };
                    }
                }
            }
            if let Some((d, v)) = best {
                // anything outside the scanned square is at least `ring` buckets away
                let reach = ring as f64 * self.cell[0].min(self.cell[1]);
                if d.sqrt() < reach {
                    return v;
                }
            }
        }
        best.map(|(_, v)| v).expect("mesh has vertices")
    }

    /// All triangles containing `p`, boundary points included (relative
    /// tolerance `1e-12` on the barycentric coordinates).
    pub fn containing_cells(&self, p: Point) -> Vec<usize> {
        let b = self.bucket_of(p);
        let mut out: Vec<usize> = self.cell_buckets[b[1] * self.dims[0] + b[0]]
            .iter()
            .copied()
            .filter(|&t| contains(self.mesh, t, p))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The containing triangle whose centroid is nearest to `p`; ties go to
    /// the lowest cell index.
    pub fn locate(&self, p: Point) -> Option<usize> {
        self.containing_cells(p)
            .into_iter()
            .map(|t| {
                let c = self.mesh.centroid(t);
                ((c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2), t)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, t)| t)
    }
}

pub(crate) fn barycentric(pts: &[Point; 3], p: Point) -> [f64; 3] {
    let [a, b, c] = *pts;
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
    let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    [1.0 - l1 - l2, l1, l2]
}

fn contains(mesh: &Mesh, t: usize, p: Point) -> bool {
    let lam = barycentric(&mesh.cell_vertices(t), p);
    lam.iter().all(|&l| l >= -1e-12)
}
