//! Sparse operators of the leapfrog scheme.

use rayon::prelude::*;

use crate::elements::{triangle_quadrature, EdgeElement, QUADRATURE_DEGREE};
use crate::error::{Error, Result};
use crate::mesh::{CellTag, EdgeTag, Mesh};
use crate::sparse::SparseMatrix;

/// Per-cell coefficient of an edge mass matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum MassCoefficient {
    Scalar(Vec<f64>),
    /// `diag(a, b)` acting on `(E_x, E_y)`.
    Diagonal(Vec<[f64; 2]>),
}

impl MassCoefficient {
    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        MassCoefficient::Scalar(vec![c; mesh.num_cells()])
    }

    fn len(&self) -> usize {
        match self {
            MassCoefficient::Scalar(v) => v.len(),
            MassCoefficient::Diagonal(v) => v.len(),
        }
    }

    fn at(&self, t: usize) -> [f64; 2] {
        match self {
            MassCoefficient::Scalar(v) => [v[t], v[t]],
            MassCoefficient::Diagonal(v) => v[t],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

fn element(mesh: &Mesh, t: usize) -> EdgeElement {
    EdgeElement::from_mesh(mesh, t).expect("mesh invariants guarantee positive area")
}

fn check_len(mesh: &Mesh, len: usize) -> Result<()> {
    if len != mesh.num_cells() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_cells(),
            actual: len,
        });
    }
    Ok(())
}

/// Builds an edge×edge matrix from per-cell 3×3 blocks, computed in
/// parallel and accumulated in cell order.
fn edge_matrix(
    mesh: &Mesh,
    local: impl Fn(usize) -> [[f64; 3]; 3] + Sync + Send,
) -> SparseMatrix {
    let blocks: Vec<[[f64; 3]; 3]> = (0..mesh.num_cells()).into_par_iter().map(local).collect();
    let triplets = blocks.iter().enumerate().flat_map(|(t, b)| {
        let e = mesh.cell_edges(t);
        (0..9).map(move |k| (e[k / 3], e[k % 3], b[k / 3][k % 3]))
    });
    SparseMatrix::from_triplets(mesh.num_edges(), mesh.num_edges(), triplets)
        .expect("indices come from the mesh")
}

fn cell_edge_matrix(mesh: &Mesh, local: impl Fn(usize) -> [f64; 3] + Sync + Send) -> SparseMatrix {
    let rows: Vec<[f64; 3]> = (0..mesh.num_cells()).into_par_iter().map(local).collect();
    let triplets = rows.iter().enumerate().flat_map(|(t, r)| {
        let e = mesh.cell_edges(t);
        (0..3).map(move |k| (t, e[k], r[k]))
    });
    SparseMatrix::from_triplets(mesh.num_cells(), mesh.num_edges(), triplets)
        .expect("indices come from the mesh")
}

/// `∫_K a φ_e · φ_e'` summed over cells.
pub fn assemble_edge_mass(mesh: &Mesh, coeff: &MassCoefficient) -> Result<SparseMatrix> {
    check_len(mesh, coeff.len())?;
    for t in 0..mesh.num_cells() {
        let c = coeff.at(t);
        if !(c[0].is_finite() && c[1].is_finite()) {
            return Err(Error::NonFinite("mass coefficient"));
        }
        if c[0] < 0.0 || c[1] < 0.0 {
            return Err(Error::invalid(format!("negative mass coefficient on cell {t}")));
        }
    }
    let rule = triangle_quadrature(QUADRATURE_DEGREE)?;
    Ok(edge_matrix(mesh, |t| {
        let el = element(mesh, t);
        let c = coeff.at(t);
        let mut m = [[0.0; 3]; 3];
        for (lambda, w) in rule.normalized() {
            let phi = el.basis(lambda);
            let w = w * el.geometry.area;
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += w * (c[0] * phi[i][0] * phi[j][0] + c[1] * phi[i][1] * phi[j][1]);
                }
            }
        }
        m
    }))
}

/// `∫_K w ∇×φ_e ∇×φ_e'` with a per-cell weight.
pub fn assemble_weighted_curl_curl(mesh: &Mesh, weight: &[f64]) -> Result<SparseMatrix> {
    check_len(mesh, weight.len())?;
    Ok(edge_matrix(mesh, |t| {
        let el = element(mesh, t);
        let c = el.curls();
        let s = weight[t] * el.geometry.area;
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = s * c[i] * c[j];
            }
        }
        m
    }))
}

/// `(∇×φ_e, ∇×φ_e')`.
pub fn assemble_curl_curl(mesh: &Mesh) -> SparseMatrix {
    assemble_weighted_curl_curl(mesh, &vec![1.0; mesh.num_cells()]).expect("matching length")
}

/// Cells × edges, entry `∫_K ∇×φ_e`.
pub fn assemble_mixed_curl(mesh: &Mesh) -> SparseMatrix {
    cell_edge_matrix(mesh, |t| {
        let el = element(mesh, t);
        el.curls().map(|c| c * el.geometry.area)
    })
}

/// Cells × edges: `X` gives `∫_K ∂_x (φ_e)_y`, `Y` gives `∫_K ∂_y (φ_e)_x`.
pub fn assemble_partial(mesh: &Mesh, axis: Axis) -> SparseMatrix {
    cell_edge_matrix(mesh, |t| {
        let el = element(mesh, t);
        let d = match axis {
            Axis::X => el.dx_of_y(),
            Axis::Y => el.dy_of_x(),
        };
        d.map(|v| v * el.geometry.area)
    })
}

/// `∫_Γ (φ_e·t)(φ_e'·t) ds` over the given edges.
pub fn assemble_interface_mass(mesh: &Mesh, interface: &[usize]) -> Result<SparseMatrix> {
    let rule = crate::elements::segment_quadrature(QUADRATURE_DEGREE)?;
    let mut triplets = Vec::new();
    for &e in interface {
        if e >= mesh.num_edges() {
            return Err(Error::invalid(format!("interface edge {e} out of range")));
        }
        let t = mesh.edge_cells(e)[0].expect("every edge has a cell");
        let el = element(mesh, t);
        let tri = mesh.triangle(t);
        let [a, b] = mesh.edge(e);
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let d = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = mesh.edge_length(e);
        let tangent = [d[0] / len, d[1] / len];
        let la = tri.iter().position(|&v| v == a).expect("edge vertex in cell");
        let lb = tri.iter().position(|&v| v == b).expect("edge vertex in cell");
        let mut g = [[0.0; 3]; 3];
        for (s, w) in rule.normalized() {
            let mut lambda = [0.0; 3];
            lambda[la] = 1.0 - s[0];
            lambda[lb] = s[0];
            let phi = el.basis(lambda);
            let tr = phi.map(|p| p[0] * tangent[0] + p[1] * tangent[1]);
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] += w * len * tr[i] * tr[j];
                }
            }
        }
        let edges = mesh.cell_edges(t);
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((edges[i], edges[j], g[i][j]));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.num_edges(), mesh.num_edges(), triplets)
}

/// Diagonal P0 mass `diag(∫_K c)`.
pub fn assemble_cell_mass(mesh: &Mesh, coeff: &[f64]) -> Result<SparseMatrix> {
    check_len(mesh, coeff.len())?;
    let d: Vec<f64> = (0..mesh.num_cells()).map(|t| coeff[t] * mesh.area(t)).collect();
    Ok(SparseMatrix::from_diagonal(&d))
}

/// Cell-sampled coefficients of the merged scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCoefficients {
    /// Damping in S/m, sampled at centroids.
    pub sigma_x: Vec<f64>,
    pub sigma_y: Vec<f64>,
    /// 1 on physical cells, 0 on PML cells.
    pub c1: Vec<f64>,
}

impl CellCoefficients {
    /// No damping, `C1` from the cell tags.
    pub fn undamped(mesh: &Mesh) -> Self {
        CellCoefficients {
            sigma_x: vec![0.0; mesh.num_cells()],
            sigma_y: vec![0.0; mesh.num_cells()],
            c1: crate::mesh::physical_indicator(mesh),
        }
    }

    /// Damping profiles evaluated at cell centroids.
    pub fn sampled(
        mesh: &Mesh,
        sigma_x: impl Fn(f64) -> f64,
        sigma_y: impl Fn(f64) -> f64,
    ) -> Self {
        let centroids: Vec<_> = (0..mesh.num_cells()).map(|t| mesh.centroid(t)).collect();
        CellCoefficients {
            sigma_x: centroids.iter().map(|c| sigma_x(c[0])).collect(),
            sigma_y: centroids.iter().map(|c| sigma_y(c[1])).collect(),
            c1: crate::mesh::physical_indicator(mesh),
        }
    }

    pub fn c2(&self) -> Vec<f64> {
        self.c1.iter().map(|c| 1.0 - c).collect()
    }

    fn validate(&self, mesh: &Mesh) -> Result<()> {
        for v in [&self.sigma_x, &self.sigma_y, &self.c1] {
            check_len(mesh, v.len())?;
        }
        if self
            .sigma_x
            .iter()
            .chain(&self.sigma_y)
            .any(|s| !s.is_finite() || *s < 0.0)
        {
            return Err(Error::invalid("damping must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Every operator the stepper needs. Matrices are stored without boundary
/// constraints; `pec_mask` flags the edge DoFs that system matrices and
/// states must constrain.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    /// Plain edge mass `(φ, φ')`.
    pub mass: SparseMatrix,
    /// Edge mass weighted by `D1 = diag(σ_y, σ_x)`.
    pub mass_d1: SparseMatrix,
    /// Edge mass weighted by `C1`.
    pub mass_c1: SparseMatrix,
    pub curl_curl: SparseMatrix,
    /// Curl–curl weighted by `C1`.
    pub curl_curl_c1: SparseMatrix,
    pub mixed_curl: SparseMatrix,
    pub dx: SparseMatrix,
    pub dy: SparseMatrix,
    pub interface: SparseMatrix,
    pub cell_mass: SparseMatrix,
    pub cell_mass_sigma_x: SparseMatrix,
    pub cell_mass_sigma_y: SparseMatrix,
    pub coefficients: CellCoefficients,
    pub cell_areas: Vec<f64>,
    pub pec_mask: Vec<bool>,
}

impl OperatorSet {
    pub fn assemble(mesh: &Mesh, coefficients: CellCoefficients) -> Result<Self> {
        coefficients.validate(mesh)?;
        let d1: Vec<[f64; 2]> = coefficients
            .sigma_y
            .iter()
            .zip(&coefficients.sigma_x)
            .map(|(&sy, &sx)| [sy, sx])
            .collect();
        let interface = mesh.interface_edges();
        Ok(OperatorSet {
            mass: assemble_edge_mass(mesh, &MassCoefficient::constant(mesh, 1.0))?,
            mass_d1: assemble_edge_mass(mesh, &MassCoefficient::Diagonal(d1))?,
            mass_c1: assemble_edge_mass(mesh, &MassCoefficient::Scalar(coefficients.c1.clone()))?,
            curl_curl: assemble_curl_curl(mesh),
            curl_curl_c1: assemble_weighted_curl_curl(mesh, &coefficients.c1)?,
            mixed_curl: assemble_mixed_curl(mesh),
            dx: assemble_partial(mesh, Axis::X),
            dy: assemble_partial(mesh, Axis::Y),
            interface: assemble_interface_mass(mesh, &interface)?,
            cell_mass: assemble_cell_mass(mesh, &vec![1.0; mesh.num_cells()])?,
            cell_mass_sigma_x: assemble_cell_mass(mesh, &coefficients.sigma_x)?,
            cell_mass_sigma_y: assemble_cell_mass(mesh, &coefficients.sigma_y)?,
            cell_areas: (0..mesh.num_cells()).map(|t| mesh.area(t)).collect(),
            coefficients,
            pec_mask: vec![false; mesh.num_edges()],
        })
    }

    pub fn num_edges(&self) -> usize {
        self.mass.nrows()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_areas.len()
    }

    /// Eliminates constrained rows and columns with a unit diagonal.
    pub fn constrain_matrix(&self, a: &SparseMatrix) -> Result<SparseMatrix> {
        a.eliminate(&self.pec_mask)
    }

    /// Zeroes constrained entries.
    pub fn constrain_vector(&self, v: &mut [f64]) {
        for (x, &c) in v.iter_mut().zip(&self.pec_mask) {
            if c {
                *x = 0.0;
            }
        }
    }

    pub fn num_constrained(&self) -> usize {
        self.pec_mask.iter().filter(|&&c| c).count()
    }
}

/// Flags every outer-boundary edge as a perfect-conductor constraint.
pub fn apply_pec(mut ops: OperatorSet, mesh: &Mesh) -> Result<OperatorSet> {
    if ops.num_edges() != mesh.num_edges() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_edges(),
            actual: ops.num_edges(),
        });
    }
    ops.pec_mask = mesh
        .edge_tags()
        .iter()
        .map(|&t| t == EdgeTag::OuterBoundary)
        .collect();
    Ok(ops)
}

/// Number of physical cells.
pub fn count_physical(mesh: &Mesh) -> usize {
    mesh.cell_tags().iter().filter(|&&t| t == CellTag::Physical).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::interpolate_hcurl;
    use crate::mesh::{generate_rect_mesh, Rect};
    use crate::solve::{solve_spd, SolverConfig};

    fn single() -> Mesh {
        Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![CellTag::Physical],
            &[],
        )
        .unwrap()
    }

    fn square2() -> Mesh {
        generate_rect_mesh(Rect::unit_square(), 1, 1, 0).unwrap()
    }

    #[test]
    fn curl_curl_on_unit_right_triangle() {
        let s = assemble_curl_curl(&single());
        for (_, _, v) in s.triplets() {
            assert!((v.abs() - 2.0).abs() < 1e-14);
        }
        assert_eq!(s.nnz(), 9);
    }

    #[test]
    fn zero_coefficient_gives_zero_mass() {
        let m = generate_rect_mesh(Rect::unit_square(), 2, 2, 0).unwrap();
        let z = assemble_edge_mass(&m, &MassCoefficient::constant(&m, 0.0)).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert!(assemble_edge_mass(&m, &MassCoefficient::constant(&m, -1.0)).is_err());
    }

    #[test]
    fn shared_edge_accumulates_both_cells() {
        let m = square2();
        let full = assemble_edge_mass(&m, &MassCoefficient::constant(&m, 1.0)).unwrap();
        let only0 = assemble_edge_mass(&m, &MassCoefficient::Scalar(vec![1.0, 0.0])).unwrap();
        let only1 = assemble_edge_mass(&m, &MassCoefficient::Scalar(vec![0.0, 1.0])).unwrap();
        let shared = (0..m.num_edges())
            .find(|&e| m.edge_cells(e)[1].is_some())
            .unwrap();
        let sum = only0.get(shared, shared) + only1.get(shared, shared);
        assert!((full.get(shared, shared) - sum).abs() < 1e-15);
        assert!(only0.get(shared, shared) > 0.0 && only1.get(shared, shared) > 0.0);
    }

    #[test]
    fn curl_identities() {
        let m = generate_rect_mesh(Rect::new(-1.0, 2.0, 0.0, 1.5), 4, 3, 1).unwrap();
        let c = assemble_mixed_curl(&m);
        let dx = assemble_partial(&m, Axis::X);
        let dy = assemble_partial(&m, Axis::Y);
        let diff = SparseMatrix::linear_combination(&[(1.0, &dx), (-1.0, &dy), (-1.0, &c)]).unwrap();
        assert!(diff.max_abs() < 1e-12 * c.max_abs());

        let rot = interpolate_hcurl(&m, |p| [-p[1], p[0]]);
        let cr = c.spmv(&rot).unwrap();
        for t in 0..m.num_cells() {
            assert!((cr[t] - 2.0 * m.area(t)).abs() < 1e-12);
        }
        let constant = interpolate_hcurl(&m, |_| [0.3, -1.7]);
        assert!(c.spmv(&constant).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(dy.spmv(&constant).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gradients_in_curl_curl_kernel() {
        let m = generate_rect_mesh(Rect::unit_square(), 4, 4, 0).unwrap();
        let g = interpolate_hcurl(&m, |p| [p[1], p[0]]);
        let r = assemble_curl_curl(&m).spmv(&g).unwrap();
        assert!(crate::sparse::norm2(&r) < 1e-10);
    }

    #[test]
    fn interface_diagonal_is_inverse_length() {
        let mut m = generate_rect_mesh(Rect::new(0.0, 2.0, 0.0, 1.0), 2, 2, 0).unwrap();
        let e = (0..m.num_edges())
            .find(|&e| {
                let [a, b] = m.edge(e);
                m.vertex(a)[1] == 0.5 && m.vertex(b)[1] == 0.5
            })
            .unwrap();
        m.tag_interface([e]).unwrap();
        let g = assemble_interface_mass(&m, &m.interface_edges()).unwrap();
        assert!((g.get(e, e) - 1.0 / m.edge_length(e)).abs() < 1e-14);
        let off: f64 = g.triplets().filter(|&(i, j, _)| i != e || j != e).map(|t| t.2.abs()).sum();
        assert!(off < 1e-14);
        assert_eq!(assemble_interface_mass(&m, &[]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn pec_on_two_triangles() {
        let m = square2();
        let ops = OperatorSet::assemble(&m, CellCoefficients::undamped(&m)).unwrap();
        let ops = apply_pec(ops, &m).unwrap();
        assert_eq!(ops.num_constrained(), 4);
        let a = ops.constrain_matrix(&ops.mass).unwrap();
        let mut b = vec![1.0; m.num_edges()];
        ops.constrain_vector(&mut b);
        let x = solve_spd(&a, &b, &SolverConfig::default()).unwrap();
        for (xi, &c) in x.iter().zip(&ops.pec_mask) {
            if c {
                assert_eq!(*xi, 0.0);
            } else {
                assert!(xi.abs() > 0.0);
            }
        }
    }

    #[test]
    fn symmetric_operators() {
        let mut m = generate_rect_mesh(Rect::new(0.0, 1.0, 0.0, 1.0), 4, 4, 2).unwrap();
        let edges: Vec<usize> = (0..m.num_edges())
            .filter(|&e| {
                let [a, b] = m.edge(e);
                m.vertex(a)[1] == 0.5 && m.vertex(b)[1] == 0.5 && m.vertex(a)[0] >= 0.0 && m.vertex(b)[0] <= 1.0
            })
            .collect();
        m.tag_interface(edges).unwrap();
        let coeffs = CellCoefficients::sampled(&m, |x| x.abs(), |y| y * y);
        let ops = OperatorSet::assemble(&m, coeffs).unwrap();
        for a in [&ops.mass, &ops.mass_d1, &ops.mass_c1, &ops.curl_curl, &ops.curl_curl_c1, &ops.interface, &ops.cell_mass] {
            assert!(a.max_asymmetry() <= 1e-13 * a.max_abs().max(1.0));
        }
    }
}
