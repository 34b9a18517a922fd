//! Conforming triangular meshes with oriented edges.
//!
//! Edges are stored with the lower vertex index first, which fixes the global
//! tangent direction used by the edge basis. Each triangle lists its three
//! edges in local order `(v0,v1)`, `(v1,v2)`, `(v2,v0)` together with a sign
//! that is `+1` when the local traversal agrees with the global orientation.

mod io;
mod locate;
mod snap;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use locate::SpatialIndex;
pub(crate) use locate::barycentric as locate_barycentric;
pub use snap::{snap_interface, CurvePrimitive, InterfaceSpec};

/// A point or vector in the plane, in meters.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellTag {
    Physical,
    Pml,
}

impl CellTag {
    pub fn code(self) -> u8 {
        match self {
            CellTag::Physical => 0,
            CellTag::Pml => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CellTag::Physical),
            1 => Some(CellTag::Pml),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    Interior,
    Interface,
    OuterBoundary,
}

impl EdgeTag {
    pub fn code(self) -> u8 {
        match self {
            EdgeTag::Interior => 0,
            EdgeTag::Interface => 1,
            EdgeTag::OuterBoundary => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(EdgeTag::Interior),
            1 => Some(EdgeTag::Interface),
            2 => Some(EdgeTag::OuterBoundary),
            _ => None,
        }
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Rect {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn unit_square() -> Self {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.x_min.is_finite()
            && self.x_max.is_finite()
            && self.y_min.is_finite()
            && self.y_max.is_finite()
            && self.x_max > self.x_min
            && self.y_max > self.y_min)
    }

    /// Closed containment.
    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x_min >= self.x_min
            && other.x_max <= self.x_max
            && other.y_min >= self.y_min
            && other.y_max <= self.y_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    tri_edges: Vec<[usize; 3]>,
    tri_signs: Vec<[f64; 3]>,
    edge_cells: Vec<[Option<usize>; 2]>,
    cell_tags: Vec<CellTag>,
    edge_tags: Vec<EdgeTag>,
    h_x: f64,
    h_y: f64,
}

impl Mesh {
    /// Builds edge connectivity from vertices and counterclockwise triangles.
    ///
    /// Edges with a single incident triangle are tagged `OuterBoundary`. The
    /// `edge_tags` list overrides tags for the given vertex pairs; every
    /// invariant is checked before returning.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        cell_tags: Vec<CellTag>,
        edge_tags: &[([usize; 2], EdgeTag)],
    ) -> Result<Mesh> {
        if cell_tags.len() != triangles.len() {
            return Err(Error::DimensionMismatch {
                expected: triangles.len(),
                actual: cell_tags.len(),
            });
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::MeshInvariant(format!(
                    "triangle {t} references a vertex out of range"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::MeshInvariant(format!(
                    "triangle {t} has repeated vertices"
                )));
            }
        }

        let mut lookup: HashMap<[usize; 2], usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::with_capacity(triangles.len() * 3 / 2 + vertices.len());
        let mut edge_cells: Vec<[Option<usize>; 2]> = Vec::with_capacity(edges.capacity());
        let mut tri_edges = Vec::with_capacity(triangles.len());
        let mut tri_signs = Vec::with_capacity(triangles.len());

        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            let mut signs = [0.0; 3];
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = if a < b { [a, b] } else { [b, a] };
                signs[k] = if a < b { 1.0 } else { -1.0 };
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_cells.push([None, None]);
                    edges.len() - 1
                });
                match edge_cells[e] {
                    [None, _] => edge_cells[e][0] = Some(t),
                    [Some(_), None] => edge_cells[e][1] = Some(t),
                    [Some(_), Some(_)] => {
                        return Err(Error::MeshInvariant(format!(
                            "edge ({}, {}) is shared by more than two triangles",
                            key[0], key[1]
                        )))
                    }
                }
                local[k] = e;
            }
            tri_edges.push(local);
            tri_signs.push(signs);
        }

        let mut tags: Vec<EdgeTag> = edge_cells
            .iter()
            .map(|c| {
                if c[1].is_none() {
                    EdgeTag::OuterBoundary
                } else {
                    EdgeTag::Interior
                }
            })
            .collect();
        for &(pair, tag) in edge_tags {
            let key = if pair[0] < pair[1] {
                pair
            } else {
                [pair[1], pair[0]]
            };
            let e = *lookup.get(&key).ok_or_else(|| {
                Error::MeshInvariant(format!(
                    "tagged edge ({}, {}) is not an edge of the mesh",
                    key[0], key[1]
                ))
            })?;
            tags[e] = tag;
        }

        let (h_x, h_y) = cell_extents(&vertices, &triangles);
        let mesh = Mesh {
            vertices,
            triangles,
            edges,
            tri_edges,
            tri_signs,
            edge_cells,
            cell_tags,
            edge_tags: tags,
            h_x,
            h_y,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks orientation, edge sharing, tag consistency, the Euler relation
    /// and the interface branching bound.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.num_cells() {
            let a = self.signed_area(t);
            if !(a > 0.0) {
                return Err(Error::MeshInvariant(format!(
                    "triangle {t} is not counterclockwise (signed area {a:e})"
                )));
            }
        }
        for (e, cells) in self.edge_cells.iter().enumerate() {
            let shared = cells.iter().flatten().count();
            match (self.edge_tags[e], shared) {
                (EdgeTag::OuterBoundary, 1) => {}
                (EdgeTag::Interior | EdgeTag::Interface, 2) => {}
                (tag, n) => {
                    return Err(Error::MeshInvariant(format!(
                        "edge {e} tagged {tag:?} is shared by {n} triangle(s)"
                    )))
                }
            }
        }
        let v = self.num_vertices() as i64;
        let e = self.num_edges() as i64;
        let t = self.num_cells() as i64;
        if v - e + t + 1 != 2 {
            return Err(Error::MeshInvariant(format!(
                "Euler relation fails: V - E + T + 1 = {} (mesh not simply connected)",
                v - e + t + 1
            )));
        }
        let mut degree = vec![0u8; self.num_vertices()];
        for (e, edge) in self.edges.iter().enumerate() {
            if self.edge_tags[e] == EdgeTag::Interface {
                for &v in edge {
                    degree[v] += 1;
                    if degree[v] > 3 {
                        return Err(Error::MeshInvariant(format!(
                            "interface vertex {v} touches more than 3 interface edges"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_cells(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    /// Global edge indices of triangle `t` in local order.
    pub fn cell_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    /// Orientation signs matching [`Mesh::cell_edges`].
    pub fn cell_edge_signs(&self, t: usize) -> [f64; 3] {
        self.tri_signs[t]
    }

    /// Triangles incident to edge `e`; the second slot is empty on the boundary.
    pub fn edge_cells(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_cells[e]
    }

    pub fn cell_tags(&self) -> &[CellTag] {
        &self.cell_tags
    }

    pub fn cell_tag(&self, t: usize) -> CellTag {
        self.cell_tags[t]
    }

    pub fn edge_tags(&self) -> &[EdgeTag] {
        &self.edge_tags
    }

    pub fn edge_tag(&self, e: usize) -> EdgeTag {
        self.edge_tags[e]
    }

    pub fn h_x(&self) -> f64 {
        self.h_x
    }

    pub fn h_y(&self) -> f64 {
        self.h_y
    }

    /// `min(h_x, h_y)`, the mesh size entering the time-step bound.
    pub fn h_min(&self) -> f64 {
        self.h_x.min(self.h_y)
    }

    pub fn cell_vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.cell_vertices(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [p0, p1, p2] = self.cell_vertices(t);
        [
            (p0[0] + p1[0] + p2[0]) / 3.0,
            (p0[1] + p1[1] + p2[1]) / 3.0,
        ]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn min_edge_length(&self) -> f64 {
        (0..self.num_edges())
            .map(|e| self.edge_length(e))
            .fold(f64::INFINITY, f64::min)
    }

    /// Bounding box of all vertices.
    pub fn extent(&self) -> Rect {
        let mut r = Rect::new(
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for p in &self.vertices {
            r.x_min = r.x_min.min(p[0]);
            r.x_max = r.x_max.max(p[0]);
            r.y_min = r.y_min.min(p[1]);
            r.y_max = r.y_max.max(p[1]);
        }
        r
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_edges()).filter(|&e| self.edge_tags[e] == EdgeTag::OuterBoundary)
    }

    pub fn interface_edges(&self) -> Vec<usize> {
        (0..self.num_edges())
            .filter(|&e| self.edge_tags[e] == EdgeTag::Interface)
            .collect()
    }

    pub fn set_cell_tags(&mut self, tags: Vec<CellTag>) -> Result<()> {
        if tags.len() != self.num_cells() {
            return Err(Error::DimensionMismatch {
                expected: self.num_cells(),
                actual: tags.len(),
            });
        }
        self.cell_tags = tags;
        Ok(())
    }

    /// Tags the given edges as `Interface`. Boundary edges are rejected.
    pub fn tag_interface(&mut self, edges: impl IntoIterator<Item = usize>) -> Result<()> {
        let previous = self.edge_tags.clone();
        for e in edges {
            if e >= self.num_edges() {
                self.edge_tags = previous;
                return Err(Error::invalid(format!("edge {e} out of range")));
            }
            if self.edge_tags[e] == EdgeTag::OuterBoundary {
                self.edge_tags = previous;
                return Err(Error::MeshInvariant(format!(
                    "boundary edge {e} cannot carry an interface"
                )));
            }
            self.edge_tags[e] = EdgeTag::Interface;
        }
        if let Err(err) = self.validate() {
            self.edge_tags = previous;
            return Err(err);
        }
        Ok(())
    }

    /// Snaps `spec` onto mesh edges and tags them; returns the tagged set.
    pub fn apply_interface(&mut self, spec: &InterfaceSpec) -> Result<Vec<usize>> {
        let edges: Vec<usize> = snap_interface(self, spec)?.into_iter().collect();
        self.tag_interface(edges.iter().copied())?;
        Ok(edges)
    }
}

fn cell_extents(vertices: &[Point], triangles: &[[usize; 3]]) -> (f64, f64) {
    let mut hx: f64 = 0.0;
    let mut hy: f64 = 0.0;
    for tri in triangles {
        let xs = tri.map(|v| vertices[v][0]);
        let ys = tri.map(|v| vertices[v][1]);
        let span = |a: [f64; 3]| {
            a.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - a.iter().copied().fold(f64::INFINITY, f64::min)
        };
        hx = hx.max(span(xs));
        hy = hy.max(span(ys));
    }
    (hx, hy)
}

/// Structured criss-cross triangulation of `bounds` extended by
/// `pml_layers` cells on every side.
///
/// Every grid cell is split along its lower-left to upper-right diagonal.
/// Cells whose centroid lies outside `bounds` are tagged `Pml`.
pub fn generate_rect_mesh(bounds: Rect, nx: usize, ny: usize, pml_layers: usize) -> Result<Mesh> {
    if bounds.is_degenerate() {
        return Err(Error::invalid(format!("degenerate bounds {bounds:?}")));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("nx and ny must be at least 1"));
    }
    let hx = bounds.width() / nx as f64;
    let hy = bounds.height() / ny as f64;
    let total_x = nx + 2 * pml_layers;
    let total_y = ny + 2 * pml_layers;
    let layers = pml_layers as f64;

    let mut vertices = Vec::with_capacity((total_x + 1) * (total_y + 1));
    for j in 0..=total_y {
        let y = grid_coordinate(bounds.y_min, bounds.y_max, ny, j as f64 - layers, hy);
        for i in 0..=total_x {
            let x = grid_coordinate(bounds.x_min, bounds.x_max, nx, i as f64 - layers, hx);
            vertices.push([x, y]);
        }
    }

    let idx = |i: usize, j: usize| j * (total_x + 1) + i;
    let mut triangles = Vec::with_capacity(2 * total_x * total_y);
    for j in 0..total_y {
        for i in 0..total_x {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v01 = idx(i, j + 1);
            let v11 = idx(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let total = triangles.len();
    let mut mesh = Mesh::from_parts(vertices, triangles, vec![CellTag::Physical; total], &[])?;
    let tags = classify_cells(&mesh, &bounds);
    mesh.set_cell_tags(tags)?;
    Ok(mesh)
}

/// Grid line `k` (may be negative or beyond `n`) of a uniform partition of
/// `[lo, hi]` into `n` cells; the physical boundary lines are hit exactly.
fn grid_coordinate(lo: f64, hi: f64, n: usize, k: f64, h: f64) -> f64 {
    if k <= 0.0 {
        lo + k * h
    } else if k >= n as f64 {
        hi + (k - n as f64) * h
    } else {
        lo + k * h
    }
}

/// Tags each cell `Physical` iff its centroid lies in `physical_bounds`.
pub fn classify_cells(mesh: &Mesh, physical_bounds: &Rect) -> Vec<CellTag> {
    (0..mesh.num_cells())
        .map(|t| {
            if physical_bounds.contains(mesh.centroid(t)) {
                CellTag::Physical
            } else {
                CellTag::Pml
            }
        })
        .collect()
}

/// Per-cell indicator of the physical region (the `C1` coefficient);
/// `1 - C1` marks the absorbing layer.
pub fn physical_indicator(mesh: &Mesh) -> Vec<f64> {
    mesh.cell_tags()
        .iter()
        .map(|t| match t {
            CellTag::Physical => 1.0,
            CellTag::Pml => 0.0,
        })
        .collect()
}
