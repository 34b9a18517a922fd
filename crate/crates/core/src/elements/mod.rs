//! Lowest-order edge elements (Whitney) paired with piecewise constants.
//!
//! The edge function of the local edge `(a, b)` is
//! `φ = s (λ_a ∇λ_b − λ_b ∇λ_a)` where `s = ±1` aligns it with the global
//! edge orientation. Its tangential moment is one on its own edge and zero
//! on the other two, and its curl is the constant `s / |K|`.

mod quadrature;

pub use quadrature::{segment_quadrature, triangle_quadrature, QuadratureRule};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Degree used for all assembly and error integrals.
pub const QUADRATURE_DEGREE: usize = 3;

/// Affine triangle with barycentric gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// `∇λ_i`, constant on the triangle.
    pub grad_lambda: [[f64; 2]; 3],
}

impl TriangleGeometry {
    pub fn new(vertices: [Point; 3]) -> Result<Self> {
        let [p0, p1, p2] = vertices;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::invalid(format!(
                "degenerate or clockwise triangle (2·area = {det:e})"
            )));
        }
        let g = |a: Point, b: Point| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
        Ok(TriangleGeometry {
            vertices,
            area: 0.5 * det,
            grad_lambda: [g(p1, p2), g(p2, p0), g(p0, p1)],
        })
    }

    pub fn point(&self, lambda: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.vertices;
        [
            lambda[0] * p0[0] + lambda[1] * p1[0] + lambda[2] * p2[0],
            lambda[0] * p0[1] + lambda[1] * p1[1] + lambda[2] * p2[1],
        ]
    }

    pub fn barycentric(&self, p: Point) -> [f64; 3] {
        crate::mesh::locate_barycentric(&self.vertices, p)
    }

    /// `∫_K f` with the given rule.
    pub fn integrate(&self, rule: &QuadratureRule, mut f: impl FnMut(Point) -> f64) -> f64 {
        self.area * rule.normalized().map(|(l, w)| w * f(self.point(l))).sum::<f64>()
    }
}

/// The three Whitney functions of one mesh triangle, signed to the global
/// edge orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeElement {
    pub geometry: TriangleGeometry,
    pub signs: [f64; 3],
}

const LOCAL_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl EdgeElement {
    pub fn new(vertices: [Point; 3], signs: [f64; 3]) -> Result<Self> {
        Ok(EdgeElement {
            geometry: TriangleGeometry::new(vertices)?,
            signs,
        })
    }

    pub fn from_mesh(mesh: &Mesh, t: usize) -> Result<Self> {
        EdgeElement::new(mesh.cell_vertices(t), mesh.cell_edge_signs(t))
    }

    /// Basis values at barycentric coordinates `lambda`.
    pub fn basis(&self, lambda: [f64; 3]) -> [[f64; 2]; 3] {
        let g = &self.geometry.grad_lambda;
        let mut out = [[0.0; 2]; 3];
        for (k, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
            let s = self.signs[k];
            out[k] = [
                s * (lambda[a] * g[b][0] - lambda[b] * g[a][0]),
                s * (lambda[a] * g[b][1] - lambda[b] * g[a][1]),
            ];
        }
        out
    }

    /// Basis values at a point of the triangle (closure).
    pub fn basis_at(&self, p: Point) -> Result<[[f64; 2]; 3]> {
        let lambda = self.geometry.barycentric(p);
        if lambda.iter().any(|&l| l < -1e-10) {
            return Err(Error::invalid("point lies outside the triangle"));
        }
        Ok(self.basis(lambda))
    }

    /// Constant curls `∂_x φ_y − ∂_y φ_x`.
    pub fn curls(&self) -> [f64; 3] {
        let g = &self.geometry.grad_lambda;
        let mut out = [0.0; 3];
        for (k, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
            out[k] = 2.0 * self.signs[k] * cross(g[a], g[b]);
        }
        out
    }

    /// Constant partial derivatives `∂_x (φ)_y`.
    pub fn dx_of_y(&self) -> [f64; 3] {
        let g = &self.geometry.grad_lambda;
        let mut out = [0.0; 3];
        for (k, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
            out[k] = self.signs[k] * (g[a][0] * g[b][1] - g[b][0] * g[a][1]);
        }
        out
    }

    /// Constant partial derivatives `∂_y (φ)_x`.
    pub fn dy_of_x(&self) -> [f64; 3] {
        let g = &self.geometry.grad_lambda;
        let mut out = [0.0; 3];
        for (k, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
            out[k] = self.signs[k] * (g[a][1] * g[b][0] - g[b][1] * g[a][0]);
        }
        out
    }

    /// Field `Σ dof_k φ_k` at barycentric coordinates.
    pub fn reconstruct(&self, dofs: [f64; 3], lambda: [f64; 3]) -> [f64; 2] {
        let phi = self.basis(lambda);
        let mut v = [0.0; 2];
        for k in 0..3 {
            v[0] += dofs[k] * phi[k][0];
            v[1] += dofs[k] * phi[k][1];
        }
        v
    }
}

/// Values of the local DoFs of triangle `t` taken from a global edge vector.
pub fn local_dofs(mesh: &Mesh, t: usize, global: &[f64]) -> [f64; 3] {
    mesh.cell_edges(t).map(|e| global[e])
}

/// Tangential moment `∫_e u · t ds` of one edge, `t` the unit tangent in
/// global orientation.
pub fn edge_moment(mesh: &Mesh, e: usize, field: impl Fn(Point) -> [f64; 2]) -> f64 {
    let rule = segment_quadrature(QUADRATURE_DEGREE).expect("supported degree");
    let [a, b] = mesh.edge(e);
    let (p, q) = (mesh.vertex(a), mesh.vertex(b));
    let d = [q[0] - p[0], q[1] - p[1]];
    rule.normalized()
        .map(|(s, w)| {
            let x = [p[0] + s[0] * d[0], p[1] + s[0] * d[1]];
            let u = field(x);
            w * (u[0] * d[0] + u[1] * d[1])
        })
        .sum()
}

/// Edge-element interpolant: one tangential moment per edge.
pub fn interpolate_hcurl(mesh: &Mesh, field: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
    (0..mesh.num_edges())
        .map(|e| edge_moment(mesh, e, &field))
        .collect()
}

/// Cell means `(1/|K|) ∫_K u`, the L² projection onto piecewise constants.
pub fn project_l2_p0(mesh: &Mesh, field: impl Fn(Point) -> f64) -> Vec<f64> {
    let rule = triangle_quadrature(QUADRATURE_DEGREE).expect("supported degree");
    (0..mesh.num_cells())
        .map(|t| {
            let geo = TriangleGeometry::new(mesh.cell_vertices(t)).expect("validated mesh");
            geo.integrate(&rule, &field) / geo.area
        })
        .collect()
}

/// Evaluates an edge-DoF field at a point of triangle `t`.
pub fn evaluate_edge_field(mesh: &Mesh, t: usize, dofs: &[f64], p: Point) -> [f64; 2] {
    let el = EdgeElement::from_mesh(mesh, t).expect("validated mesh");
    el.reconstruct(local_dofs(mesh, t, dofs), el.geometry.barycentric(p))
}
