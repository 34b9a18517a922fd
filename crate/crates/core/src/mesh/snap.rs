//! Snapping of graphene curves onto mesh edge paths.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::{CellTag, Mesh, Point, SpatialIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvePrimitive {
    Segment {
        start: Point,
        end: Point,
    },
    /// Circular arc traversed from `angle_start` to `angle_end` (radians,
    /// either direction).
    Arc {
        center: Point,
        radius: f64,
        angle_start: f64,
        angle_end: f64,
    },
}

impl CurvePrimitive {
    pub fn length(&self) -> f64 {
        match *self {
            CurvePrimitive::Segment { start, end } => (end[0] - start[0]).hypot(end[1] - start[1]),
            CurvePrimitive::Arc {
                radius,
                angle_start,
                angle_end,
                ..
            } => radius * (angle_end - angle_start).abs(),
        }
    }

    /// Point at curve parameter `s ∈ [0, 1]`.
    pub fn point_at(&self, s: f64) -> Point {
        match *self {
            CurvePrimitive::Segment { start, end } => [
                start[0] + s * (end[0] - start[0]),
                start[1] + s * (end[1] - start[1]),
            ],
            CurvePrimitive::Arc {
                center,
                radius,
                angle_start,
                angle_end,
            } => {
                let a = angle_start + s * (angle_end - angle_start);
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
        }
    }

    /// Circular arc through three points, traversed `first → middle → last`.
    pub fn arc_through(first: Point, middle: Point, last: Point) -> Result<Self> {
        let (ax, ay) = (first[0], first[1]);
        let (bx, by) = (middle[0], middle[1]);
        let (cx, cy) = (last[0], last[1]);
        let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        if d.abs() < 1e-30 {
            return Err(Error::invalid("arc points are collinear"));
        }
        let a2 = ax * ax + ay * ay;
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d;
        let uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d;
        let radius = (ax - ux).hypot(ay - uy);
        let angle = |p: Point| (p[1] - uy).atan2(p[0] - ux);
        let start = angle(first);
        let tau = std::f64::consts::TAU;
        let wrap = |a: f64| (a - start).rem_euclid(tau);
        let mid = wrap(angle(middle));
        let end = wrap(angle(last));
        // counterclockwise if the middle point comes before the end going ccw
        let sweep = if mid < end { end } else { end - tau };
        Ok(CurvePrimitive::Arc {
            center: [ux, uy],
            radius,
            angle_start: start,
            angle_end: start + sweep,
        })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CurvePrimitive::Segment { start, end } => {
                if !(start.iter().chain(end.iter()).all(|v| v.is_finite())) {
                    return Err(Error::invalid("segment endpoints must be finite"));
                }
            }
            CurvePrimitive::Arc {
                radius,
                angle_start,
                angle_end,
                center,
            } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid(format!("arc radius must be positive, got {radius}")));
                }
                if !(angle_start.is_finite() && angle_end.is_finite() && center.iter().all(|v| v.is_finite())) {
                    return Err(Error::invalid("arc parameters must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Ordered list of curve primitives making up the graphene sheets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InterfaceSpec {
    pub primitives: Vec<CurvePrimitive>,
}

impl InterfaceSpec {
    pub fn new(primitives: Vec<CurvePrimitive>) -> Self {
        InterfaceSpec { primitives }
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// Polyline made of the given mesh edges, one segment per edge.
    pub fn from_edges(mesh: &Mesh, edges: impl IntoIterator<Item = usize>) -> Self {
        InterfaceSpec::new(
            edges
                .into_iter()
                .map(|e| {
                    let [a, b] = mesh.edge(e);
                    CurvePrimitive::Segment {
                        start: mesh.vertex(a),
                        end: mesh.vertex(b),
                    }
                })
                .collect(),
        )
    }
}

#[derive(PartialEq)]
struct Frontier {
    dist: f64,
    vertex: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct EdgeGraph {
    adjacency: Vec<Vec<(usize, usize)>>,
    length: Vec<f64>,
}

impl EdgeGraph {
    /// Edges usable by an interface: at least one incident cell is physical.
    fn new(mesh: &Mesh) -> Self {
        let mut adjacency = vec![Vec::new(); mesh.num_vertices()];
        for e in 0..mesh.num_edges() {
            let physical = mesh
                .edge_cells(e)
                .iter()
                .flatten()
                .any(|&t| mesh.cell_tag(t) == CellTag::Physical);
            if physical {
                let [a, b] = mesh.edge(e);
                adjacency[a].push((b, e));
                adjacency[b].push((a, e));
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        EdgeGraph {
            adjacency,
            length: (0..mesh.num_edges()).map(|e| mesh.edge_length(e)).collect(),
        }
    }

    /// Shortest edge path from `from` to `to` (Dijkstra on edge lengths).
    fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut dist: HashMap<usize, f64> = HashMap::new();
        let mut via: HashMap<usize, (usize, usize)> = HashMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(from, 0.0);
        heap.push(Frontier {
            dist: 0.0,
            vertex: from,
        });
        while let Some(Frontier { dist: d, vertex: v }) = heap.pop() {
            if v == to {
                let mut path = Vec::new();
                let mut cur = to;
                while cur != from {
                    let (prev, e) = via[&cur];
                    path.push(e);
                    cur = prev;
                }
                path.reverse();
                return Some(path);
            }
            if d > dist[&v] {
                continue;
            }
            for &(w, e) in &self.adjacency[v] {
                let nd = d + self.length[e];
                if dist.get(&w).is_none_or(|&old| nd < old) {
                    dist.insert(w, nd);
                    via.insert(w, (v, e));
                    heap.push(Frontier { dist: nd, vertex: w });
                }
            }
        }
        None
    }
}

/// Maps every primitive of `spec` to a connected path of mesh edges.
///
/// Each primitive is sampled at a quarter of the shortest edge length, every
/// sample is mapped to its nearest vertex and consecutive distinct vertices
/// are joined by a shortest edge path. Samples falling strictly inside the
/// absorbing layer are rejected.
pub fn snap_interface(mesh: &Mesh, spec: &InterfaceSpec) -> Result<BTreeSet<usize>> {
    let index = SpatialIndex::new(mesh);
    let graph = EdgeGraph::new(mesh);
    let step = mesh.min_edge_length() / 4.0;
    let mut edges = BTreeSet::new();

    for (k, prim) in spec.primitives.iter().enumerate() {
        prim.validate()?;
        let n = ((prim.length() / step).ceil() as usize).max(1);
        let mut chain: Vec<usize> = Vec::new();
        for i in 0..=n {
            let p = prim.point_at(i as f64 / n as f64);
            let cells = index.containing_cells(p);
            if cells.is_empty() {
                return Err(Error::Snap(format!(
                    "primitive {k} leaves the mesh at ({:e}, {:e})",
                    p[0], p[1]
                )));
            }
            if cells.iter().all(|&t| mesh.cell_tag(t) == CellTag::Pml) {
                return Err(Error::Snap(format!(
                    "primitive {k} enters the absorbing layer at ({:e}, {:e})",
                    p[0], p[1]
                )));
            }
            let mut v = index.nearest_vertex(p);
            // on ties keep the current vertex, otherwise the midpoint of a
            // diagonal edge may detour through a corner
            if let Some(&last) = chain.last() {
                let d = |u: usize| {
                    let q = mesh.vertex(u);
                    (q[0] - p[0]).hypot(q[1] - p[1])
                };
                if d(last) <= d(v) * (1.0 + 1e-9) {
                    v = last;
                }
            }
            if chain.last() != Some(&v) {
                chain.push(v);
            }
        }
        if chain.len() < 2 {
            return Err(Error::Snap(format!(
                "primitive {k} is shorter than the mesh resolution"
            )));
        }
        for pair in chain.windows(2) {
            let path = graph.shortest_path(pair[0], pair[1]).ok_or_else(|| {
                Error::Snap(format!(
                    "primitive {k}: no edge path between vertices {} and {}",
                    pair[0], pair[1]
                ))
            })?;
            edges.extend(path);
        }
    }
    Ok(edges)
}
