//! Leapfrog stepping of the merged graphene/PML scheme.
//!
//! `E` lives on edges at integer levels, the split magnetic field
//! `H_z = H_zx + H_zy` on cells at half levels. Each step first updates the
//! two magnetic components cell by cell, then solves one SPD system for
//! `E^{n+1}`.

use serde::{Deserialize, Serialize};

use crate::assembly::OperatorSet;
use crate::elements::{interpolate_hcurl, project_l2_p0};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::physics::MaterialParams;
use crate::solve::{solve_spd_from, SolverConfig};
use crate::sparse::{max_norm, SparseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    /// `E^{n−1}`.
    pub e_prev: Vec<f64>,
    /// `E^n`.
    pub e_curr: Vec<f64>,
    /// `H_zx^{n−1/2}`.
    pub hzx: Vec<f64>,
    /// `H_zy^{n−1/2}`.
    pub hzy: Vec<f64>,
    pub step: usize,
    pub tau: f64,
}

impl FieldState {
    pub fn zeros(num_edges: usize, num_cells: usize, tau: f64) -> Self {
        FieldState {
            e_prev: vec![0.0; num_edges],
            e_curr: vec![0.0; num_edges],
            hzx: vec![0.0; num_cells],
            hzy: vec![0.0; num_cells],
            step: 0,
            tau,
        }
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.tau
    }

    /// `H_z = H_zx + H_zy`.
    pub fn hz(&self) -> Vec<f64> {
        self.hzx.iter().zip(&self.hzy).map(|(a, b)| a + b).collect()
    }

    pub fn is_finite(&self) -> bool {
        [&self.e_prev, &self.e_curr, &self.hzx, &self.hzy]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CflConstants {
    pub c_in: f64,
    pub c_tr: f64,
}

impl Default for CflConstants {
    fn default() -> Self {
        CflConstants { c_in: 1.0, c_tr: 1.0 }
    }
}

/// The five arguments of the time-step bound, in order.
pub fn cfl_terms(params: &MaterialParams, h: f64, cfl: &CflConstants) -> Result<[f64; 5]> {
    params.validate()?;
    if !(h > 0.0 && cfl.c_in > 0.0 && cfl.c_tr > 0.0) {
        return Err(Error::invalid("mesh size and CFL constants must be positive"));
    }
    let cv = params.wave_speed();
    let (eps, tau0, sigma0) = (params.epsilon0, params.tau0, params.sigma0);
    let graphene = if sigma0 > 0.0 {
        h * (eps * tau0).sqrt() / (2.0 * cfl.c_tr * sigma0.sqrt())
    } else {
        f64::INFINITY
    };
    Ok([
        1.0,
        h / (2.0 * cfl.c_in * cv),
        graphene,
        h * tau0.sqrt() / (2f64.sqrt() * cfl.c_in * cv),
        h * tau0 / (cfl.c_in * cv),
    ])
}

/// Largest time step allowed by the stability bound, with
/// `h = min(h_x, h_y)`.
pub fn cfl_max_timestep(params: &MaterialParams, mesh: &Mesh, cfl: &CflConstants) -> Result<f64> {
    Ok(cfl_terms(params, mesh.h_min(), cfl)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Initial data of the continuous problem.
pub trait InitialFields {
    fn e0(&self, p: Point) -> [f64; 2];
    fn h0(&self, p: Point) -> f64;
    /// `∇×E0`.
    fn curl_e0(&self, p: Point) -> f64;
    /// `∂_t E(·, 0)`, normally `ε0⁻¹ ∇×H0`.
    fn e_velocity0(&self, p: Point) -> [f64; 2];
}

/// Everything starts at rest.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFields;

impl InitialFields for ZeroFields {
    fn e0(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn h0(&self, _: Point) -> f64 {
        0.0
    }
    fn curl_e0(&self, _: Point) -> f64 {
        0.0
    }
    fn e_velocity0(&self, _: Point) -> [f64; 2] {
        [0.0; 2]
    }
}

/// Time-dependent forcing.
pub trait Source {
    /// Cell values of `K_s(t)`.
    fn magnetic(&self, t: f64, out: &mut [f64]);

    /// Extra edge load `(F(t), φ_e)` added to the electric right-hand side.
    fn electric_load(&self, _t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Edge values prescribed on constrained DoFs at time `t`. Returning
    /// `false` means homogeneous conditions.
    fn boundary_values(&self, _t: f64, _out: &mut [f64]) -> bool {
        false
    }
}

/// No forcing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoSource;

impl Source for NoSource {
    fn magnetic(&self, _t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Point dipoles resolved to cells.
#[derive(Debug, Clone)]
pub struct DipoleSource {
    pub spec: crate::physics::SourceSpec,
    pub cells: Vec<(usize, f64)>,
}

impl DipoleSource {
    pub fn new(mesh: &Mesh, spec: crate::physics::SourceSpec) -> Result<Self> {
        spec.validate()?;
        let cells = crate::physics::dipole_source_cells(mesh, &spec)?;
        Ok(DipoleSource { spec, cells })
    }
}

impl Source for DipoleSource {
    fn magnetic(&self, t: f64, out: &mut [f64]) {
        crate::physics::eval_source(&self.spec, &self.cells, t, out);
    }
}

/// Source scaled by a constant.
pub struct ScaledSource<'a, S: Source + ?Sized> {
    pub inner: &'a S,
    pub factor: f64,
}

impl<S: Source + ?Sized> Source for ScaledSource<'_, S> {
    fn magnetic(&self, t: f64, out: &mut [f64]) {
        self.inner.magnetic(t, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn electric_load(&self, t: f64, out: &mut [f64]) {
        self.inner.electric_load(t, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn boundary_values(&self, t: f64, out: &mut [f64]) -> bool {
        let lifted = self.inner.boundary_values(t, out);
        out.iter_mut().for_each(|v| *v *= self.factor);
        lifted
    }
}

/// Discrete initial state and the first-step velocity `V`.
pub fn init_state(
    mesh: &Mesh,
    ops: &OperatorSet,
    params: &MaterialParams,
    initial: &dyn InitialFields,
    source: &dyn Source,
    tau: f64,
) -> Result<(FieldState, Vec<f64>)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("time step must be positive"));
    }
    let mut state = FieldState::zeros(mesh.num_edges(), mesh.num_cells(), tau);
    state.e_curr = interpolate_hcurl(mesh, |p| initial.e0(p));
    let mut velocity = interpolate_hcurl(mesh, |p| initial.e_velocity0(p));
    let mut lift = vec![0.0; mesh.num_edges()];
    if source.boundary_values(0.0, &mut lift) {
        for (e, &c) in ops.pec_mask.iter().enumerate() {
            if c {
                state.e_curr[e] = lift[e];
            }
        }
    } else {
        ops.constrain_vector(&mut state.e_curr);
        ops.constrain_vector(&mut velocity);
    }
    state.e_prev = state.e_curr.clone();

    let c = tau / (2.0 * params.mu0);
    let mut ks = vec![0.0; mesh.num_cells()];
    source.magnetic(0.0, &mut ks);
    let h = project_l2_p0(mesh, |p| initial.h0(p) + c * initial.curl_e0(p));
    for t in 0..mesh.num_cells() {
        let half = 0.5 * (h[t] + c * ks[t]);
        state.hzx[t] = half;
        state.hzy[t] = half;
    }
    if !state.is_finite() || velocity.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }
    Ok((state, velocity))
}

/// Matrices and per-cell factors of one leapfrog step at fixed `τ`.
#[derive(Debug, Clone)]
pub struct StepOperator {
    pub params: MaterialParams,
    pub tau: f64,
    /// `A+ = (ε0/τ²)M + (1/2τ)M_D1 + (ε0/(2ττ0))M_C1`, unconstrained.
    pub lhs_full: SparseMatrix,
    /// `A+` with constrained rows and columns eliminated.
    pub lhs: SparseMatrix,
    /// `(2ε0/τ²)M`, the first-step matrix, unconstrained and eliminated.
    pub first_lhs_full: SparseMatrix,
    pub first_lhs: SparseMatrix,
    /// `A− = (ε0/τ²)M − (1/2τ)M_D1 − (ε0/(2ττ0))M_C1`.
    pub a_minus: SparseMatrix,
    /// `(2ε0/τ²)M − (1/μ0)S_C1 − (σ0/τ0)G`, applied to `E^n`.
    pub b_curr: SparseMatrix,
    /// `Cᵀ`, edges × cells.
    pub curl_t: SparseMatrix,
    pub dx: SparseMatrix,
    pub dy: SparseMatrix,
    pub mask: Vec<bool>,
    c1: Vec<f64>,
    c2: Vec<f64>,
    areas: Vec<f64>,
    hx_keep: Vec<f64>,
    hy_keep: Vec<f64>,
    hx_scale: Vec<f64>,
    hy_scale: Vec<f64>,
    pub solver: SolverConfig,
}

impl StepOperator {
    pub fn new(ops: &OperatorSet, params: &MaterialParams, tau: f64, solver: SolverConfig) -> Result<Self> {
        params.validate()?;
        solver.validate()?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid("time step must be positive"));
        }
        let MaterialParams {
            epsilon0: eps,
            mu0: mu,
            tau0,
            sigma0,
        } = *params;
        let a = eps / (tau * tau);
        let d = 1.0 / (2.0 * tau);
        let r = eps / (2.0 * tau * tau0);
        let lhs_full = SparseMatrix::linear_combination(&[(a, &ops.mass), (d, &ops.mass_d1), (r, &ops.mass_c1)])?;
        let a_minus = SparseMatrix::linear_combination(&[(a, &ops.mass), (-d, &ops.mass_d1), (-r, &ops.mass_c1)])?;
        let first_lhs_full = ops.mass.scaled(2.0 * a);
        let b_curr = SparseMatrix::linear_combination(&[
            (2.0 * a, &ops.mass),
            (-1.0 / mu, &ops.curl_curl_c1),
            (-sigma0 / tau0, &ops.interface),
        ])?;

        let coeff = &ops.coefficients;
        let n = ops.num_cells();
        let mut hx_keep = vec![0.0; n];
        let mut hy_keep = vec![0.0; n];
        let mut hx_scale = vec![0.0; n];
        let mut hy_scale = vec![0.0; n];
        for t in 0..n {
            let px = mu / tau + mu * coeff.sigma_x[t] / (2.0 * eps);
            let mx = mu / tau - mu * coeff.sigma_x[t] / (2.0 * eps);
            let py = mu / tau + mu * coeff.sigma_y[t] / (2.0 * eps);
            let my = mu / tau - mu * coeff.sigma_y[t] / (2.0 * eps);
            hx_keep[t] = mx / px;
            hy_keep[t] = my / py;
            hx_scale[t] = 1.0 / px;
            hy_scale[t] = 1.0 / py;
        }
        Ok(StepOperator {
            params: *params,
            tau,
            lhs: ops.constrain_matrix(&lhs_full)?,
            lhs_full,
            first_lhs: ops.constrain_matrix(&first_lhs_full)?,
            first_lhs_full,
            a_minus,
            b_curr,
            curl_t: ops.mixed_curl.transpose(),
            dx: ops.dx.clone(),
            dy: ops.dy.clone(),
            mask: ops.pec_mask.clone(),
            c1: coeff.c1.clone(),
            c2: coeff.c2(),
            areas: ops.cell_areas.clone(),
            hx_keep,
            hy_keep,
            hx_scale,
            hy_scale,
            solver,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.mask.len()
    }

    pub fn num_cells(&self) -> usize {
        self.areas.len()
    }

    /// Advances `H_zx`, `H_zy` from `n−1/2` to `n+1/2` in place, given
    /// `E^n` and `K_s^n`.
    pub fn step_h(&self, e: &[f64], ks: &[f64], hzx: &mut [f64], hzy: &mut [f64]) -> Result<()> {
        let dxe = self.dx.spmv(e)?;
        let dye = self.dy.spmv(e)?;
        for t in 0..self.num_cells() {
            let area = self.areas[t];
            hzx[t] = self.hx_keep[t] * hzx[t] + self.hx_scale[t] * (-dxe[t] / area - 0.5 * ks[t]);
            hzy[t] = self.hy_keep[t] * hzy[t] + self.hy_scale[t] * (dye[t] / area - 0.5 * ks[t]);
        }
        Ok(())
    }

    /// Electric right-hand side before constraints. `velocity` is used only
    /// on the first step, in place of `E^{n−1}`.
    #[allow(clippy::too_many_arguments)]
    pub fn electric_rhs(
        &self,
        e_prev: &[f64],
        e_curr: &[f64],
        h_old: (&[f64], &[f64]),
        h_new: (&[f64], &[f64]),
        ks: &[f64],
        load: &[f64],
        velocity: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let (mu, tau0, tau) = (self.params.mu0, self.params.tau0, self.tau);
        let mut rhs = self.b_curr.spmv(e_curr)?;
        match velocity {
            // E^{−1} = E^1 − 2τV moves A−E^1 to the left and leaves +2τ A− V
            Some(v) => {
                let am = self.a_minus.spmv(v)?;
                rhs.iter_mut().zip(&am).for_each(|(r, x)| *r += 2.0 * tau * x);
            }
            None => {
                let am = self.a_minus.spmv(e_prev)?;
                rhs.iter_mut().zip(&am).for_each(|(r, x)| *r -= x);
            }
        }
        let w: Vec<f64> = (0..self.num_cells())
            .map(|t| {
                let new = h_new.0[t] + h_new.1[t];
                let old = h_old.0[t] + h_old.1[t];
                self.c1[t] / (2.0 * tau0) * (new + old) + self.c2[t] / tau * (new - old)
                    - self.c1[t] / mu * ks[t]
            })
            .collect();
        let cw = self.curl_t.spmv(&w)?;
        for e in 0..rhs.len() {
            rhs[e] += cw[e] + load[e];
        }
        Ok(rhs)
    }

    /// Solves for `E^{n+1}` given the right-hand side, the boundary lift
    /// (if any) and an initial guess.
    pub fn solve_electric(&self, rhs: &[f64], lift: Option<&[f64]>, guess: &[f64], first: bool) -> Result<Vec<f64>> {
        let (full, constrained) = if first {
            (&self.first_lhs_full, &self.first_lhs)
        } else {
            (&self.lhs_full, &self.lhs)
        };
        let mut b = rhs.to_vec();
        if let Some(g) = lift {
            let g: Vec<f64> = g
                .iter()
                .zip(&self.mask)
                .map(|(&v, &c)| if c { v } else { 0.0 })
                .collect();
            let ag = full.spmv(&g)?;
            b.iter_mut().zip(&ag).for_each(|(bi, a)| *bi -= a);
        }
        for (bi, &c) in b.iter_mut().zip(&self.mask) {
            if c {
                *bi = 0.0;
            }
        }
        let mut x0: Vec<f64> = guess.to_vec();
        for (xi, &c) in x0.iter_mut().zip(&self.mask) {
            if c {
                *xi = 0.0;
            }
        }
        let mut x = solve_spd_from(constrained, &b, Some(&x0), &self.solver)?.x;
        if let Some(g) = lift {
            for (e, &c) in self.mask.iter().enumerate() {
                if c {
                    x[e] = g[e];
                }
            }
        }
        Ok(x)
    }

    /// One full step `n → n+1`. `velocity` must be given on the first step.
    pub fn step(&self, state: &mut FieldState, source: &dyn Source, velocity: Option<&[f64]>) -> Result<()> {
        let t = state.time();
        let first = state.step == 0;
        if first && velocity.is_none() {
            return Err(Error::invalid("the first step needs the initial velocity"));
        }
        let mut ks = vec![0.0; self.num_cells()];
        source.magnetic(t, &mut ks);
        let mut load = vec![0.0; self.num_edges()];
        source.electric_load(t, &mut load);

        let (hzx_old, hzy_old) = (state.hzx.clone(), state.hzy.clone());
        self.step_h(&state.e_curr, &ks, &mut state.hzx, &mut state.hzy)?;
        let rhs = self.electric_rhs(
            &state.e_prev,
            &state.e_curr,
            (&hzx_old, &hzy_old),
            (&state.hzx, &state.hzy),
            &ks,
            &load,
            if first { velocity } else { None },
        )?;
        let mut lift = vec![0.0; self.num_edges()];
        let lifted = source.boundary_values(t + self.tau, &mut lift);
        let guess: Vec<f64> = if first {
            state.e_curr.clone()
        } else {
            state.e_curr.iter().zip(&state.e_prev).map(|(c, p)| 2.0 * c - p).collect()
        };
        let next = self.solve_electric(&rhs, lifted.then_some(&lift[..]), &guess, first)?;
        state.e_prev = std::mem::replace(&mut state.e_curr, next);
        state.step += 1;
        Ok(())
    }
}

/// Terms of the discrete energy after a step, with `H = H_zx + H_zy`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Energy index `m`; the state holds `E^{m+1}`.
    pub step: usize,
    /// Time of `E^{m+1}`.
    pub time: f64,
    /// `ε0 ‖(E^{m+1} − E^m)/τ‖²`.
    pub electric: f64,
    /// `(1/2μ0)(‖∇×E^{m+1}‖² + ‖∇×E^m‖²)`.
    pub curl: f64,
    /// `μ0 ‖H^{m+1/2}‖²`.
    pub magnetic: f64,
    /// `(σ0/2τ0)(‖E^{m+1}‖²_Γ + ‖E^m‖²_Γ)`.
    pub interface: f64,
    /// `(τ/4μ0τ0)(‖∇×E^{m+1}‖² + ‖∇×E^m‖²)`.
    pub curl_correction: f64,
    pub total: f64,
}

impl EnergyReport {
    pub fn terms(&self) -> [f64; 5] {
        [self.electric, self.curl, self.magnetic, self.interface, self.curl_correction]
    }
}

/// Energy of the state `(E^{m+1}, E^m, H^{m+1/2})` held after step `m+1`.
pub fn discrete_energy(state: &FieldState, ops: &OperatorSet, params: &MaterialParams) -> Result<EnergyReport> {
    let (eps, mu, tau0, sigma0) = (params.epsilon0, params.mu0, params.tau0, params.sigma0);
    let tau = state.tau;
    let de: Vec<f64> = state
        .e_curr
        .iter()
        .zip(&state.e_prev)
        .map(|(a, b)| (a - b) / tau)
        .collect();
    let s_sum = ops.curl_curl.quadratic_form(&state.e_curr)? + ops.curl_curl.quadratic_form(&state.e_prev)?;
    let g_sum = ops.interface.quadratic_form(&state.e_curr)? + ops.interface.quadratic_form(&state.e_prev)?;
    let h = state.hz();
    let mut r = EnergyReport {
        step: state.step.saturating_sub(1),
        time: state.time(),
        electric: eps * ops.mass.quadratic_form(&de)?,
        curl: s_sum / (2.0 * mu),
        magnetic: mu * ops.cell_mass.quadratic_form(&h)?,
        interface: sigma0 / (2.0 * tau0) * g_sum,
        curl_correction: tau / (4.0 * mu * tau0) * s_sum,
        total: 0.0,
    };
    // roundoff can leave tiny negative quadratic forms
    for v in [&mut r.electric, &mut r.curl, &mut r.magnetic, &mut r.interface, &mut r.curl_correction] {
        *v = v.max(0.0);
    }
    r.total = r.terms().iter().sum();
    Ok(r)
}

/// Field copy emitted during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub e: Vec<f64>,
    pub hz: Vec<f64>,
}

impl Snapshot {
    pub fn of(state: &FieldState) -> Self {
        Snapshot {
            step: state.step,
            time: state.time(),
            e: state.e_curr.clone(),
            hz: state.hz(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub steps: usize,
    /// Snapshot cadence in steps; `None` emits only the initial snapshot.
    pub snapshot_every: Option<usize>,
    /// Record the energy every this many steps.
    pub energy_every: usize,
    /// Ratio to the first nonzero field magnitude that counts as blow-up.
    pub blow_up_factor: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            steps: 0,
            snapshot_every: None,
            energy_every: 1,
            blow_up_factor: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: FieldState,
    pub energy: Vec<EnergyReport>,
    pub snapshots_written: usize,
}

#[derive(Debug, Default)]
struct BlowUpGuard {
    scale_e: Option<f64>,
    scale_h: Option<f64>,
}

impl BlowUpGuard {
    fn check(&mut self, state: &FieldState, factor: f64) -> Result<()> {
        if !state.is_finite() {
            return Err(Error::NonFinite("field state"));
        }
        let e = max_norm(&state.e_curr);
        let h = max_norm(&state.hzx).max(max_norm(&state.hzy));
        for (value, scale) in [(e, &mut self.scale_e), (h, &mut self.scale_h)] {
            match *scale {
                None if value > 0.0 => *scale = Some(value),
                Some(s) if value > factor * s => {
                    return Err(Error::BlowUp {
                        step: state.step,
                        magnitude: value,
                        threshold: factor * s,
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Runs `options.steps` steps from an initialized state. Snapshots go to
/// `on_snapshot` (the initial state always does); every step goes to
/// `observer`.
#[allow(clippy::too_many_arguments)]
pub fn run(
    stepper: &StepOperator,
    ops: &OperatorSet,
    mut state: FieldState,
    velocity: &[f64],
    source: &dyn Source,
    options: &RunOptions,
    on_snapshot: &mut dyn FnMut(&Snapshot) -> Result<()>,
    observer: &mut dyn FnMut(&FieldState),
) -> Result<RunOutput> {
    if options.snapshot_every == Some(0) || options.energy_every == 0 {
        return Err(Error::Config("output cadences must be at least 1".into()));
    }
    let mut guard = BlowUpGuard::default();
    guard.check(&state, options.blow_up_factor)?;
    on_snapshot(&Snapshot::of(&state))?;
    let mut written = 1;
    let mut energy = Vec::new();
    for _ in 0..options.steps {
        let first = state.step == 0;
        stepper.step(&mut state, source, first.then_some(velocity))?;
        guard.check(&state, options.blow_up_factor)?;
        if state.step % options.energy_every == 0 || state.step == 1 {
            energy.push(discrete_energy(&state, ops, &stepper.params)?);
        }
        if let Some(every) = options.snapshot_every {
            if state.step % every == 0 {
                on_snapshot(&Snapshot::of(&state))?;
                written += 1;
            }
        }
        observer(&state);
        if state.step % 1000 == 0 {
            log::info!("step {} of {}", state.step, options.steps);
        }
    }
    log::debug!("finished {} steps at t = {:e}", state.step, state.time());
    Ok(RunOutput {
        state,
        energy,
        snapshots_written: written,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{apply_pec, CellCoefficients};
    use crate::elements::interpolate_hcurl;
    use crate::mesh::{generate_rect_mesh, Rect};

    fn setup(n: usize) -> (Mesh, OperatorSet) {
        let m = generate_rect_mesh(Rect::unit_square(), n, n, 0).unwrap();
        let ops = OperatorSet::assemble(&m, CellCoefficients::undamped(&m)).unwrap();
        let ops = apply_pec(ops, &m).unwrap();
        (m, ops)
    }

    #[test]
    fn cfl_second_term() {
        let p = MaterialParams::vacuum(1.2e-12, 0.2);
        let t = cfl_terms(&p, 1e-7, &CflConstants::default()).unwrap();
        assert!((t[1] - 1.667820475990760e-16).abs() < 1e-12 * t[1]);
        let m = generate_rect_mesh(Rect::new(0.0, 4e-7, 0.0, 2e-7), 4, 2, 0).unwrap();
        let min = cfl_max_timestep(&p, &m, &CflConstants::default()).unwrap();
        assert_eq!(min, t.iter().cloned().fold(f64::INFINITY, f64::min));
        assert!(8.3e-17 < t[1]);
        assert!(cfl_terms(&p, 0.0, &CflConstants::default()).is_err());
    }

    #[test]
    fn zero_state_stays_zero() {
        let (m, ops) = setup(3);
        let p = MaterialParams::unit();
        let (mut s, v) = init_state(&m, &ops, &p, &ZeroFields, &NoSource, 0.01).unwrap();
        assert!(s.e_curr.iter().chain(&s.hzx).all(|&x| x == 0.0));
        let st = StepOperator::new(&ops, &p, 0.01, SolverConfig::default()).unwrap();
        st.step(&mut s, &NoSource, Some(&v)).unwrap();
        st.step(&mut s, &NoSource, None).unwrap();
        assert!(s.e_curr.iter().chain(&s.hzx).chain(&s.hzy).all(|&x| x == 0.0));
        assert_eq!(discrete_energy(&s, &ops, &p).unwrap().total, 0.0);
    }

    #[test]
    fn magnetic_update_from_rotation() {
        let (m, ops) = setup(3);
        let p = MaterialParams::unit();
        let tau = 0.01;
        let st = StepOperator::new(&ops, &p, tau, SolverConfig::default()).unwrap();
        let e = interpolate_hcurl(&m, |x| [-x[1], x[0]]);
        let mut hzx = vec![0.0; m.num_cells()];
        let mut hzy = vec![0.0; m.num_cells()];
        st.step_h(&e, &vec![0.0; m.num_cells()], &mut hzx, &mut hzy).unwrap();
        for t in 0..m.num_cells() {
            let dh = (hzx[t] + hzy[t]) / tau;
            assert!((dh + 2.0 / p.mu0).abs() < 1e-10);
        }
    }

    #[test]
    fn damped_cell_update() {
        let (m, mut ops) = setup(1);
        let p = MaterialParams::vacuum(1e-12, 0.1);
        let tau = 1e-16;
        ops.coefficients.sigma_x = vec![p.epsilon0 / tau; m.num_cells()];
        let st = StepOperator::new(&ops, &p, tau, SolverConfig::default()).unwrap();
        let e = vec![1.0, -2.0, 0.5, 3.0, 1.5];
        let ks = vec![7.0, -3.0];
        let mut hzx = vec![0.0; 2];
        let mut hzy = vec![0.0; 2];
        st.step_h(&e, &ks, &mut hzx, &mut hzy).unwrap();
        let dxe = ops.dx.spmv(&e).unwrap();
        for t in 0..2 {
            let expected = (-dxe[t] / m.area(t) - 0.5 * ks[t]) * tau / (1.5 * p.mu0);
            assert!((hzx[t] - expected).abs() < 1e-12 * expected.abs());
        }
    }

    #[test]
    fn energy_of_pure_magnetic_state() {
        let (m, ops) = setup(2);
        let p = MaterialParams { mu0: 2.5, ..MaterialParams::unit() };
        let mut s = FieldState::zeros(m.num_edges(), m.num_cells(), 0.1);
        s.step = 1;
        s.hzx = (0..m.num_cells()).map(|t| t as f64 * 0.1).collect();
        s.hzy = vec![0.25; m.num_cells()];
        let r = discrete_energy(&s, &ops, &p).unwrap();
        let h = s.hz();
        let expected: f64 = (0..m.num_cells()).map(|t| p.mu0 * m.area(t) * h[t] * h[t]).sum();
        assert!((r.total - expected).abs() < 1e-14);
        assert_eq!(r.electric, 0.0);
    }

    #[test]
    fn first_step_requires_velocity() {
        let (m, ops) = setup(2);
        let p = MaterialParams::unit();
        let st = StepOperator::new(&ops, &p, 0.1, SolverConfig::default()).unwrap();
        let mut s = FieldState::zeros(m.num_edges(), m.num_cells(), 0.1);
        assert!(st.step(&mut s, &NoSource, None).is_err());
    }

    struct Blast;
    impl Source for Blast {
        fn magnetic(&self, t: f64, out: &mut [f64]) {
            out.iter_mut().for_each(|v| *v = 1e30 * (1.0 + t));
        }
    }

    #[test]
    fn blow_up_guard_trips() {
        let (m, ops) = setup(2);
        let p = MaterialParams::unit();
        let tau = 0.05;
        let st = StepOperator::new(&ops, &p, tau, SolverConfig::default()).unwrap();
        let init = RotationField;
        let (s, v) = init_state(&m, &ops, &p, &init, &NoSource, tau).unwrap();
        let opts = RunOptions { steps: 5, ..Default::default() };
        let r = run(&st, &ops, s, &v, &Blast, &opts, &mut |_| Ok(()), &mut |_| {});
        assert!(matches!(r, Err(Error::BlowUp { step: 1, .. })), "{r:?}");
    }

    struct RotationField;
    impl InitialFields for RotationField {
        fn e0(&self, p: Point) -> [f64; 2] {
            [-p[1], p[0]]
        }
        fn h0(&self, _: Point) -> f64 {
            1.0
        }
        fn curl_e0(&self, _: Point) -> f64 {
            2.0
        }
        fn e_velocity0(&self, _: Point) -> [f64; 2] {
            [0.0; 2]
        }
    }

    #[test]
    fn zero_step_run_emits_initial_snapshot() {
        let (m, ops) = setup(2);
        let p = MaterialParams::unit();
        let st = StepOperator::new(&ops, &p, 0.1, SolverConfig::default()).unwrap();
        let (s, v) = init_state(&m, &ops, &p, &RotationField, &NoSource, 0.1).unwrap();
        let mut seen = Vec::new();
        let out = run(&st, &ops, s, &v, &NoSource, &RunOptions::default(), &mut |snap| {
            seen.push(snap.step);
            Ok(())
        }, &mut |_| {})
        .unwrap();
        assert_eq!(seen, vec![0]);
        assert_eq!(out.snapshots_written, 1);
        assert!(out.energy.is_empty());
    }
}
