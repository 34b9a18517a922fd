//! Manufactured-solution runs and observed convergence rates.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{apply_pec, CellCoefficients, OperatorSet};
use crate::dynamics::{init_state, run, FieldState, InitialFields, RunOptions, Source, StepOperator};
use crate::elements::{edge_moment, triangle_quadrature, EdgeElement};
use crate::error::{Error, Result};
use crate::mesh::{generate_rect_mesh, CurvePrimitive, InterfaceSpec, Mesh, Point, Rect};
use crate::physics::manufactured::ManufacturedCase;
use crate::solve::SolverConfig;

/// Quadrature degree for error norms and loads.
const ERROR_DEGREE: usize = 5;

/// Forcing and data that make [`ManufacturedCase`] an exact solution of the
/// scheme's continuous problem.
pub struct ManufacturedSource<'m> {
    pub case: ManufacturedCase,
    mesh: &'m Mesh,
    elements: Vec<EdgeElement>,
    boundary: Vec<usize>,
}

impl<'m> ManufacturedSource<'m> {
    pub fn new(mesh: &'m Mesh, case: ManufacturedCase) -> Result<Self> {
        let elements = (0..mesh.num_cells())
            .map(|t| EdgeElement::from_mesh(mesh, t))
            .collect::<Result<_>>()?;
        Ok(ManufacturedSource {
            case,
            mesh,
            elements,
            boundary: mesh.boundary_edges().collect(),
        })
    }
}

impl Source for ManufacturedSource<'_> {
    /// `K_s = −(μ0 ∂_t H + ∇×E)` as cell means.
    fn magnetic(&self, t: f64, out: &mut [f64]) {
        let rule = triangle_quadrature(ERROR_DEGREE).expect("supported degree");
        for (k, el) in self.elements.iter().enumerate() {
            let mean: f64 = rule
                .normalized()
                .map(|(l, w)| w * self.case.source_magnetic(el.geometry.point(l), t))
                .sum();
            out[k] = -mean;
        }
    }

    fn electric_load(&self, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let rule = triangle_quadrature(ERROR_DEGREE).expect("supported degree");
        for (k, el) in self.elements.iter().enumerate() {
            let mut local = [0.0; 3];
            for (l, w) in rule.normalized() {
                let f = self.case.electric_load(el.geometry.point(l), t);
                let phi = el.basis(l);
                for i in 0..3 {
                    local[i] += w * el.geometry.area * (f[0] * phi[i][0] + f[1] * phi[i][1]);
                }
            }
            for (i, &e) in self.mesh.cell_edges(k).iter().enumerate() {
                out[e] += local[i];
            }
        }
    }

    fn boundary_values(&self, t: f64, out: &mut [f64]) -> bool {
        for &e in &self.boundary {
            out[e] = edge_moment(self.mesh, e, |p| self.case.electric(p, t));
        }
        true
    }
}

impl InitialFields for ManufacturedCase {
    fn e0(&self, p: Point) -> [f64; 2] {
        self.electric(p, 0.0)
    }
    fn h0(&self, p: Point) -> f64 {
        self.magnetic(p, 0.0)
    }
    fn curl_e0(&self, p: Point) -> f64 {
        self.curl_electric(p, 0.0)
    }
    fn e_velocity0(&self, p: Point) -> [f64; 2] {
        self.electric_dt(p, 0.0)
    }
}

/// `‖E(t) − E_h‖` and `‖H(t − τ/2) − H_h‖` in L² for a state after step
/// `n` with `t = nτ`; the magnetic field of the state sits half a step back.
pub fn l2_errors(state: &FieldState, case: &ManufacturedCase, t: f64, mesh: &Mesh) -> Result<(f64, f64)> {
    l2_errors_at(mesh, &state.e_curr, &state.hz(), case, t, t - 0.5 * state.tau)
}

/// L² errors of explicit edge and cell vectors at separate times.
pub fn l2_errors_at(
    mesh: &Mesh,
    e: &[f64],
    h: &[f64],
    case: &ManufacturedCase,
    t_e: f64,
    t_h: f64,
) -> Result<(f64, f64)> {
    if e.len() != mesh.num_edges() || h.len() != mesh.num_cells() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_edges(),
            actual: e.len(),
        });
    }
    let rule = triangle_quadrature(ERROR_DEGREE)?;
    let (mut ee, mut eh) = (0.0, 0.0);
    for k in 0..mesh.num_cells() {
        let el = EdgeElement::from_mesh(mesh, k)?;
        let dofs = mesh.cell_edges(k).map(|i| e[i]);
        for (l, w) in rule.normalized() {
            let p = el.geometry.point(l);
            let w = w * el.geometry.area;
            let u = el.reconstruct(dofs, l);
            let ex = case.electric(p, t_e);
            ee += w * ((ex[0] - u[0]).powi(2) + (ex[1] - u[1]).powi(2));
            eh += w * (case.magnetic(p, t_h) - h[k]).powi(2);
        }
    }
    Ok((ee.sqrt(), eh.sqrt()))
}

/// Time-step policy of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ConvergenceMode {
    /// Same `τ` and step count on every mesh.
    Fixed { tau: f64, steps: usize },
    /// `τ = h / ratio` up to `final_time`.
    Coupled { ratio: f64, final_time: f64 },
}

impl ConvergenceMode {
    pub fn table1() -> Self {
        ConvergenceMode::Fixed { tau: 1e-4, steps: 1000 }
    }

    pub fn table3() -> Self {
        ConvergenceMode::Coupled {
            ratio: 200.0,
            final_time: 0.01,
        }
    }

    fn schedule(&self, h: f64) -> Result<(f64, usize)> {
        match *self {
            ConvergenceMode::Fixed { tau, steps } if tau > 0.0 => Ok((tau, steps)),
            ConvergenceMode::Coupled { ratio, final_time } if ratio > 0.0 && final_time > 0.0 => {
                let tau = h / ratio;
                let steps = (final_time / tau).round() as usize;
                if (steps as f64 * tau - final_time).abs() > 1e-9 * final_time {
                    return Err(Error::Config(format!(
                        "final time {final_time} is not a multiple of τ = {tau}"
                    )));
                }
                Ok((tau, steps))
            }
            _ => Err(Error::Config(format!("invalid convergence mode {self:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub h: f64,
    pub tau: f64,
    pub steps: usize,
    pub e_error: f64,
    pub e_rate: Option<f64>,
    pub h_error: f64,
    pub h_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

/// Observed order between two refinements.
pub fn observed_rate(h_coarse: f64, e_coarse: f64, h_fine: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln()
}

impl ErrorTable {
    /// Fills the rate columns from consecutive rows.
    pub fn from_errors(raw: Vec<(f64, f64, usize, f64, f64)>) -> Self {
        let mut rows: Vec<ErrorRow> = Vec::with_capacity(raw.len());
        for (h, tau, steps, e_error, h_error) in raw {
            let (e_rate, h_rate) = match rows.last() {
                Some(prev) => (
                    Some(observed_rate(prev.h, prev.e_error, h, e_error)),
                    Some(observed_rate(prev.h, prev.h_error, h, h_error)),
                ),
                None => (None, None),
            };
            rows.push(ErrorRow {
                h,
                tau,
                steps,
                e_error,
                e_rate,
                h_error,
                h_rate,
            });
        }
        ErrorTable { rows }
    }

    pub fn e_rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.e_rate).collect()
    }

    pub fn h_rates(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.h_rate).collect()
    }
}

impl fmt::Display for ErrorTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>10} {:>14} {:>9} {:>14} {:>9}", "h", "|E-E_h|", "rate", "|H-H_h|", "rate")?;
        let rate = |r: Option<f64>| r.map_or_else(String::new, |v| format!("{v:.6}"));
        for r in &self.rows {
            writeln!(
                f,
                "{:>10} {:>14.6e} {:>9} {:>14.6e} {:>9}",
                format!("1/{}", (1.0 / r.h).round()),
                r.e_error,
                rate(r.e_rate),
                r.h_error,
                rate(r.h_rate)
            )?;
        }
        Ok(())
    }
}

/// Unit-square mesh with the sheet along `y = 1/2`.
pub fn convergence_mesh(h: f64) -> Result<Mesh> {
    let n = (1.0 / h).round();
    if !(n >= 1.0) || (n * h - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("h = {h} does not divide the unit square")));
    }
    let n = n as usize;
    if n % 2 != 0 {
        return Err(Error::Config(format!("h = 1/{n} does not resolve y = 1/2")));
    }
    let mut mesh = generate_rect_mesh(Rect::unit_square(), n, n, 0)?;
    mesh.apply_interface(&InterfaceSpec::new(vec![CurvePrimitive::Segment {
        start: [0.0, 0.5],
        end: [1.0, 0.5],
    }]))?;
    Ok(mesh)
}

/// Runs the manufactured problem on one mesh; returns `(τ, steps, ‖E−E_h‖, ‖H−H_h‖)`.
pub fn run_manufactured(mesh: &Mesh, case: &ManufacturedCase, tau: f64, steps: usize, solver: &SolverConfig) -> Result<(f64, f64)> {
    let ops = apply_pec(OperatorSet::assemble(mesh, CellCoefficients::undamped(mesh))?, mesh)?;
    let source = ManufacturedSource::new(mesh, *case)?;
    let (state, velocity) = init_state(mesh, &ops, &case.params, case, &source, tau)?;
    let stepper = StepOperator::new(&ops, &case.params, tau, *solver)?;
    let options = RunOptions {
        steps,
        energy_every: steps.max(1),
        ..Default::default()
    };
    let out = run(&stepper, &ops, state, &velocity, &source, &options, &mut |_| Ok(()), &mut |_| {})?;
    l2_errors(&out.state, case, out.state.time(), mesh)
}

/// Errors and rates of the manufactured problem over a list of mesh sizes.
pub fn run_convergence_study(mode: ConvergenceMode, hs: &[f64]) -> Result<ErrorTable> {
    run_convergence_study_with(mode, hs, &ManufacturedCase::default(), &SolverConfig::default())
}

pub fn run_convergence_study_with(
    mode: ConvergenceMode,
    hs: &[f64],
    case: &ManufacturedCase,
    solver: &SolverConfig,
) -> Result<ErrorTable> {
    if hs.is_empty() {
        return Err(Error::Config("no mesh sizes given".into()));
    }
    let raw = hs
        .par_iter()
        .map(|&h| {
            let (tau, steps) = mode.schedule(h)?;
            let mesh = convergence_mesh(h)?;
            let (ee, eh) = run_manufactured(&mesh, case, tau, steps, solver)?;
            log::info!("h = {h}: |E-E_h| = {ee:e}, |H-H_h| = {eh:e}");
            Ok((h, tau, steps, ee, eh))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorTable::from_errors(raw))
}
