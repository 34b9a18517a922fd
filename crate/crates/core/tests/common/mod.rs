//! Dense brute-force oracles shared by the integration tests. Nothing here
//! calls into the element or assembly code of the library; the mesh is used
//! only for its vertex, edge and cell numbering.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use sppfetd::assembly::CellCoefficients;
use sppfetd::mesh::{CellTag, EdgeTag, Mesh};
use sppfetd::physics::MaterialParams;
use sppfetd::sparse::SparseMatrix;

/// Affine barycentric functions of one triangle, valid on the whole plane.
pub struct Affine {
    /// `λ_i(x, y) = c[i][0] + c[i][1] x + c[i][2] y`.
    c: [[f64; 3]; 3],
    pub area: f64,
    pub vertices: [[f64; 2]; 3],
}

impl Affine {
    pub fn new(vertices: [[f64; 2]; 3]) -> Self {
        let m = Matrix3::from_fn(|i, j| match j {
            0 => 1.0,
            1 => vertices[i][0],
            _ => vertices[i][1],
        });
        let inv = m.try_inverse().expect("non-degenerate triangle");
        let mut c = [[0.0; 3]; 3];
        for (i, row) in c.iter_mut().enumerate() {
            // λ_i is the i-th column of the inverse
            let col: Vector3<f64> = inv.column(i).into();
            *row = [col[0], col[1], col[2]];
        }
        let area = 0.5 * m.determinant().abs();
        Affine { c, area, vertices }
    }

    pub fn lambda(&self, i: usize, p: [f64; 2]) -> f64 {
        self.c[i][0] + self.c[i][1] * p[0] + self.c[i][2] * p[1]
    }

    pub fn grad(&self, i: usize) -> [f64; 2] {
        [self.c[i][1], self.c[i][2]]
    }

    pub fn map(&self, u: f64, v: f64) -> [f64; 2] {
        let [a, b, c] = self.vertices;
        [
            a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]),
            a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1]),
        ]
    }
}

const GL4: [(f64, f64); 4] = [
    (-0.8611363115940526, 0.3478548451374538),
    (-0.3399810435848563, 0.6521451548625461),
    (0.3399810435848563, 0.6521451548625461),
    (0.8611363115940526, 0.3478548451374538),
];

/// Collapsed tensor Gauss rule on a triangle: points and weights summing
/// to the area.
pub fn duffy_rule(tri: &Affine) -> Vec<([f64; 2], f64)> {
    let mut out = Vec::with_capacity(16);
    for &(a, wa) in &GL4 {
        for &(b, wb) in &GL4 {
            let s = 0.5 * (a + 1.0);
            let r = 0.5 * (b + 1.0);
            let (u, v) = (s, r * (1.0 - s));
            let w = 0.25 * wa * wb * (1.0 - s) * 2.0 * tri.area;
            out.push((tri.map(u, v), w));
        }
    }
    out
}

/// Gauss points on `[0, 1]`.
pub fn segment_rule() -> Vec<(f64, f64)> {
    GL4.iter().map(|&(a, w)| (0.5 * (a + 1.0), 0.5 * w)).collect()
}

/// Whitney function of the global edge `[a, b]` (oriented `a → b`) on a
/// cell whose vertex list is `tri`.
pub fn whitney(tri_vertices: [usize; 3], affine: &Affine, edge: [usize; 2], p: [f64; 2]) -> [f64; 2] {
    let ia = tri_vertices.iter().position(|&v| v == edge[0]).expect("edge in cell");
    let ib = tri_vertices.iter().position(|&v| v == edge[1]).expect("edge in cell");
    let (la, lb) = (affine.lambda(ia, p), affine.lambda(ib, p));
    let (ga, gb) = (affine.grad(ia), affine.grad(ib));
    [la * gb[0] - lb * ga[0], la * gb[1] - lb * ga[1]]
}

/// Cells of the mesh as oracle triangles.
pub fn cells(mesh: &Mesh) -> Vec<Affine> {
    (0..mesh.num_cells())
        .map(|t| {
            let tri = mesh.triangle(t);
            Affine::new(tri.map(|v| mesh.vertex(v)))
        })
        .collect()
}

/// Edges of a cell, read from the vertex list so that the assembled
/// `cell_edges` table is not trusted.
pub fn edges_of(mesh: &Mesh, t: usize) -> Vec<(usize, [usize; 2])> {
    let tri = mesh.triangle(t);
    (0..mesh.num_edges())
        .filter(|&e| {
            let [a, b] = mesh.edge(e);
            tri.contains(&a) && tri.contains(&b)
        })
        .map(|e| (e, mesh.edge(e)))
        .collect()
}

/// Curl of a Whitney field by exact difference quotients of the affine
/// extension (step 1 is exact for affine functions).
pub fn whitney_curl(tri: [usize; 3], affine: &Affine, edge: [usize; 2]) -> f64 {
    let (dxy, dyx) = whitney_partials(tri, affine, edge);
    dxy - dyx
}

/// `(∂_x φ_y, ∂_y φ_x)` by difference quotients.
pub fn whitney_partials(tri: [usize; 3], affine: &Affine, edge: [usize; 2]) -> (f64, f64) {
    let p = affine.map(1.0 / 3.0, 1.0 / 3.0);
    let f = |q: [f64; 2]| whitney(tri, affine, edge, q);
    let px = f([p[0] + 1.0, p[1]]);
    let py = f([p[0], p[1] + 1.0]);
    let p0 = f(p);
    (px[1] - p0[1], py[0] - p0[0])
}

pub struct DenseOperators {
    pub mass: DMatrix<f64>,
    pub mass_d1: DMatrix<f64>,
    pub mass_c1: DMatrix<f64>,
    pub curl_curl: DMatrix<f64>,
    pub curl_curl_c1: DMatrix<f64>,
    pub mixed_curl: DMatrix<f64>,
    pub dx: DMatrix<f64>,
    pub dy: DMatrix<f64>,
    pub interface: DMatrix<f64>,
    pub cell_mass: DMatrix<f64>,
    pub cell_mass_sigma_x: DMatrix<f64>,
    pub cell_mass_sigma_y: DMatrix<f64>,
}

pub fn dense_operators(mesh: &Mesh, coeff: &CellCoefficients) -> DenseOperators {
    let ne = mesh.num_edges();
    let nc = mesh.num_cells();
    let mut o = DenseOperators {
        mass: DMatrix::zeros(ne, ne),
        mass_d1: DMatrix::zeros(ne, ne),
        mass_c1: DMatrix::zeros(ne, ne),
        curl_curl: DMatrix::zeros(ne, ne),
        curl_curl_c1: DMatrix::zeros(ne, ne),
        mixed_curl: DMatrix::zeros(nc, ne),
        dx: DMatrix::zeros(nc, ne),
        dy: DMatrix::zeros(nc, ne),
        interface: DMatrix::zeros(ne, ne),
        cell_mass: DMatrix::zeros(nc, nc),
        cell_mass_sigma_x: DMatrix::zeros(nc, nc),
        cell_mass_sigma_y: DMatrix::zeros(nc, nc),
    };
    let tris = cells(mesh);
    for (t, aff) in tris.iter().enumerate() {
        let tri = mesh.triangle(t);
        let local = edges_of(mesh, t);
        let rule = duffy_rule(aff);
        let (sx, sy, c1) = (coeff.sigma_x[t], coeff.sigma_y[t], coeff.c1[t]);
        for &(i, ei) in &local {
            let ci = whitney_curl(tri, aff, ei);
            let (dxy, dyx) = whitney_partials(tri, aff, ei);
            o.mixed_curl[(t, i)] += ci * aff.area;
            o.dx[(t, i)] += dxy * aff.area;
            o.dy[(t, i)] += dyx * aff.area;
            for &(j, ej) in &local {
                let cj = whitney_curl(tri, aff, ej);
                let (mut m, mut md) = (0.0, 0.0);
                for &(p, w) in &rule {
                    let a = whitney(tri, aff, ei, p);
                    let b = whitney(tri, aff, ej, p);
                    m += w * (a[0] * b[0] + a[1] * b[1]);
                    md += w * (sy * a[0] * b[0] + sx * a[1] * b[1]);
                }
                o.mass[(i, j)] += m;
                o.mass_d1[(i, j)] += md;
                o.mass_c1[(i, j)] += c1 * m;
                o.curl_curl[(i, j)] += aff.area * ci * cj;
                o.curl_curl_c1[(i, j)] += c1 * aff.area * ci * cj;
            }
        }
        o.cell_mass[(t, t)] = aff.area;
        o.cell_mass_sigma_x[(t, t)] = sx * aff.area;
        o.cell_mass_sigma_y[(t, t)] = sy * aff.area;
    }
    for e in 0..ne {
        if mesh.edge_tag(e) != EdgeTag::Interface {
            continue;
        }
        let [a, b] = mesh.edge(e);
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        let tangent = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
        let t = (0..mesh.num_cells())
            .find(|&t| {
                let tri = mesh.triangle(t);
                tri.contains(&a) && tri.contains(&b)
            })
            .expect("edge has a cell");
        let tri = mesh.triangle(t);
        let local = edges_of(mesh, t);
        for &(s, w) in &segment_rule() {
            let p = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let tr: Vec<(usize, f64)> = local
                .iter()
                .map(|&(i, ei)| {
                    let f = whitney(tri, &tris[t], ei, p);
                    (i, f[0] * tangent[0] + f[1] * tangent[1])
                })
                .collect();
            for &(i, u) in &tr {
                for &(j, v) in &tr {
                    o.interface[(i, j)] += w * len * u * v;
                }
            }
        }
    }
    o
}

pub fn to_dense(a: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplets() {
        d[(i, j)] += v;
    }
    d
}

pub fn max_entry_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).abs().max()
}

/// Eight-triangle mesh of a skewed 2×2 patch: a perturbed interior vertex,
/// both diagonal directions, two PML cells and a two-edge interface.
pub fn tiny_mesh(with_interface: bool, with_pml: bool) -> Mesh {
    let vertices = vec![
        [0.0, 0.0],
        [1.0, 0.05],
        [2.1, 0.0],
        [-0.05, 0.9],
        [1.15, 1.1],
        [2.0, 1.0],
        [0.0, 2.0],
        [0.95, 2.05],
        [2.05, 1.95],
    ];
    let triangles = vec![
        [0, 1, 4],
        [0, 4, 3],
        [1, 2, 5],
        [1, 5, 4],
        [3, 4, 6],
        [4, 7, 6],
        [4, 5, 8],
        [4, 8, 7],
    ];
    let mut tags = vec![CellTag::Physical; 8];
    if with_pml {
        tags[2] = CellTag::Pml;
        tags[6] = CellTag::Pml;
    }
    let interface: Vec<([usize; 2], EdgeTag)> = if with_interface {
        vec![([3, 4], EdgeTag::Interface), ([4, 5], EdgeTag::Interface)]
    } else {
        vec![]
    };
    Mesh::from_parts(vertices, triangles, tags, &interface).expect("valid tiny mesh")
}

/// Dense step `(E^{n−1}, E^n, H^{n−1/2}, K_s) → (E^{n+1}, H^{n+1/2})` of the
/// unsplit leapfrog scheme on the interior DoFs; boundary DoFs of `E` are
/// zero.
pub struct DenseLeapfrog {
    pub interior: Vec<usize>,
    lhs_inv: DMatrix<f64>,
    ops: DenseOperators,
    params: MaterialParams,
    tau: f64,
}

impl DenseLeapfrog {
    pub fn new(mesh: &Mesh, params: MaterialParams, tau: f64) -> Self {
        let ops = dense_operators(mesh, &CellCoefficients::undamped(mesh));
        let interior: Vec<usize> = (0..mesh.num_edges())
            .filter(|&e| mesh.edge_tag(e) != EdgeTag::OuterBoundary)
            .collect();
        let (eps, tau0) = (params.epsilon0, params.tau0);
        let full = &ops.mass * (eps / (tau * tau) + eps / (2.0 * tau * tau0));
        let n = interior.len();
        let lhs = DMatrix::from_fn(n, n, |i, j| full[(interior[i], interior[j])]);
        let lhs_inv = lhs.try_inverse().expect("invertible");
        DenseLeapfrog {
            interior,
            lhs_inv,
            ops,
            params,
            tau,
        }
    }

    pub fn step(&self, e_prev: &DVector<f64>, e: &DVector<f64>, h: &DVector<f64>, ks: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let MaterialParams {
            epsilon0: eps,
            mu0: mu,
            tau0,
            sigma0,
        } = self.params;
        let tau = self.tau;
        let areas = self.ops.cell_mass.diagonal();
        // μ0 (H⁺ − H⁻)/τ |K| = −(∇×E, 1)_K − K_s |K|
        let curl = &self.ops.mixed_curl * e;
        let h_next = DVector::from_fn(h.len(), |k, _| h[k] - tau / mu * (curl[k] / areas[k] + ks[k]));
        let h_bar = (&h_next + h) * 0.5;
        let m = &self.ops.mass;
        let rhs = m * (e * 2.0 - e_prev) * (eps / (tau * tau)) + m * e_prev * (eps / (2.0 * tau * tau0))
            - &self.ops.curl_curl * e / mu
            + self.ops.mixed_curl.transpose() * &h_bar / tau0
            - &self.ops.interface * e * (sigma0 / tau0)
            - self.ops.mixed_curl.transpose() * ks / mu;
        let r = DVector::from_fn(self.interior.len(), |i, _| rhs[self.interior[i]]);
        let x = &self.lhs_inv * r;
        let mut e_next = DVector::zeros(e.len());
        for (i, &k) in self.interior.iter().enumerate() {
            e_next[k] = x[i];
        }
        (e_next, h_next)
    }
}

/// Coefficients with distinct damping on every cell.
pub fn varied_coefficients(mesh: &Mesh) -> CellCoefficients {
    let mut c = CellCoefficients::undamped(mesh);
    for t in 0..mesh.num_cells() {
        c.sigma_x[t] = 0.25 * (t % 3) as f64 + 0.1 * t as f64;
        c.sigma_y[t] = 0.7 - 0.05 * t as f64;
    }
    c
}

/// Largest entry-wise deviation of every assembled operator from the
/// dense oracle, by name.
pub fn assembly_deviations(mesh: &Mesh, coeff: &CellCoefficients) -> Vec<(&'static str, f64)> {
    let ops = sppfetd::assembly::OperatorSet::assemble(mesh, coeff.clone()).expect("assembly");
    let d = dense_operators(mesh, coeff);
    vec![
        ("mass", max_entry_diff(&to_dense(&ops.mass), &d.mass)),
        ("mass_d1", max_entry_diff(&to_dense(&ops.mass_d1), &d.mass_d1)),
        ("mass_c1", max_entry_diff(&to_dense(&ops.mass_c1), &d.mass_c1)),
        ("curl_curl", max_entry_diff(&to_dense(&ops.curl_curl), &d.curl_curl)),
        ("curl_curl_c1", max_entry_diff(&to_dense(&ops.curl_curl_c1), &d.curl_curl_c1)),
        ("mixed_curl", max_entry_diff(&to_dense(&ops.mixed_curl), &d.mixed_curl)),
        ("dx", max_entry_diff(&to_dense(&ops.dx), &d.dx)),
        ("dy", max_entry_diff(&to_dense(&ops.dy), &d.dy)),
        ("interface", max_entry_diff(&to_dense(&ops.interface), &d.interface)),
        ("cell_mass", max_entry_diff(&to_dense(&ops.cell_mass), &d.cell_mass)),
        ("cell_mass_sigma_x", max_entry_diff(&to_dense(&ops.cell_mass_sigma_x), &d.cell_mass_sigma_x)),
        ("cell_mass_sigma_y", max_entry_diff(&to_dense(&ops.cell_mass_sigma_y), &d.cell_mass_sigma_y)),
    ]
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    a.clone().symmetric_eigen().eigenvalues.min()
}

/// Step material with distinct, order-one constants.
pub fn step_params() -> MaterialParams {
    MaterialParams {
        epsilon0: 1.3,
        mu0: 0.8,
        tau0: 0.7,
        sigma0: 0.9,
    }
}

struct FixedSource(Vec<f64>);

impl sppfetd::dynamics::Source for FixedSource {
    fn magnetic(&self, _t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.0);
    }
}

/// Largest entry-wise deviation between the library step operator and the
/// dense leapfrog step, columns taken over unit inputs
/// `(E^{n−1}, E^n, H_zx, H_zy, K_s)`; `H` is compared as `H_zx + H_zy`.
pub fn step_deviation(mesh: &Mesh, params: MaterialParams, tau: f64) -> f64 {
    use sppfetd::assembly::{apply_pec, OperatorSet};
    use sppfetd::dynamics::{FieldState, StepOperator};
    use sppfetd::solve::SolverConfig;

    let ops = apply_pec(OperatorSet::assemble(mesh, CellCoefficients::undamped(mesh)).unwrap(), mesh).unwrap();
    let solver = SolverConfig {
        tolerance: 1e-15,
        ..Default::default()
    };
    let stepper = StepOperator::new(&ops, &params, tau, solver).unwrap();
    let oracle = DenseLeapfrog::new(mesh, params, tau);
    let (ne, nc) = (mesh.num_edges(), mesh.num_cells());
    let inputs = 2 * oracle.interior.len() + 3 * nc;
    let mut worst: f64 = 0.0;
    for k in 0..inputs {
        let mut state = FieldState::zeros(ne, nc, tau);
        state.step = 1;
        let mut ks = vec![0.0; nc];
        let n_in = oracle.interior.len();
        match k {
            k if k < n_in => state.e_prev[oracle.interior[k]] = 1.0,
            k if k < 2 * n_in => state.e_curr[oracle.interior[k - n_in]] = 1.0,
            k if k < 2 * n_in + nc => state.hzx[k - 2 * n_in] = 1.0,
            k if k < 2 * n_in + 2 * nc => state.hzy[k - 2 * n_in - nc] = 1.0,
            k => ks[k - 2 * n_in - 2 * nc] = 1.0,
        }
        let e_prev = DVector::from_column_slice(&state.e_prev);
        let e = DVector::from_column_slice(&state.e_curr);
        let h = DVector::from_fn(nc, |t, _| state.hzx[t] + state.hzy[t]);
        let (e_next, h_next) = oracle.step(&e_prev, &e, &h, &DVector::from_column_slice(&ks));
        stepper.step(&mut state, &FixedSource(ks), None).unwrap();
        for i in 0..ne {
            worst = worst.max((state.e_curr[i] - e_next[i]).abs());
        }
        for t in 0..nc {
            worst = worst.max((state.hzx[t] + state.hzy[t] - h_next[t]).abs());
        }
    }
    worst
}
