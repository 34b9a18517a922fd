//! Running a configured simulation end to end.

use std::path::Path;

use serde::Serialize;

use crate::assembly::{apply_pec, OperatorSet};
use crate::dynamics::{
    cfl_max_timestep, cfl_terms, init_state, run, DipoleSource, EnergyReport, FieldState,
    InitialFields, NoSource, RunOptions, RunOutput, Snapshot, Source, StepOperator, ZeroFields,
};
use crate::error::{Error, Result};
use crate::harness::config::{cell_coefficients, Excitation, SimulationConfig};
use crate::harness::convergence::{l2_errors, ManufacturedSource};
use crate::harness::output::{write_energy_log, write_snapshot};
use crate::mesh::Mesh;
use crate::physics::manufactured::ManufacturedCase;
use crate::physics::MaterialParams;

/// Mesh, operators and stepper built from a config.
pub struct PreparedRun {
    pub config: SimulationConfig,
    pub mesh: Mesh,
    pub ops: OperatorSet,
    pub params: MaterialParams,
    pub stepper: StepOperator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CflReport {
    pub h: f64,
    pub terms: [f64; 5],
    pub limit: f64,
    pub tau: f64,
    pub satisfied: bool,
}

impl PreparedRun {
    pub fn new(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        let params = config.material.resolve()?;
        let mesh = config.build_mesh()?;
        let coefficients = cell_coefficients(&mesh, &config.pml)?;
        let ops = apply_pec(OperatorSet::assemble(&mesh, coefficients)?, &mesh)?;
        let stepper = StepOperator::new(&ops, &params, config.tau, config.solver)?;
        log::info!(
            "{}: {} vertices, {} edges, {} cells, {} interface edges",
            config.name,
            mesh.num_vertices(),
            mesh.num_edges(),
            mesh.num_cells(),
            mesh.interface_edges().len()
        );
        Ok(PreparedRun {
            config: config.clone(),
            mesh,
            ops,
            params,
            stepper,
        })
    }

    pub fn cfl(&self) -> Result<CflReport> {
        let h = self.mesh.h_min();
        let terms = cfl_terms(&self.params, h, &self.config.cfl)?;
        let limit = cfl_max_timestep(&self.params, &self.mesh, &self.config.cfl)?;
        Ok(CflReport {
            h,
            terms,
            limit,
            tau: self.config.tau,
            satisfied: self.config.tau <= limit,
        })
    }

    fn manufactured(&self) -> ManufacturedCase {
        ManufacturedCase::new(self.params)
    }

    /// Runs `options.steps` steps with the config's excitation.
    pub fn execute(
        &self,
        options: &RunOptions,
        on_snapshot: &mut dyn FnMut(&Snapshot) -> Result<()>,
        observer: &mut dyn FnMut(&FieldState),
    ) -> Result<RunOutput> {
        let cfl = self.cfl()?;
        if !cfl.satisfied {
            log::warn!(
                "tau = {:e} s exceeds the stability bound {:e} s",
                cfl.tau,
                cfl.limit
            );
        }
        let tau = self.config.tau;
        let case = self.manufactured();
        let (source, initial): (Box<dyn Source + '_>, &dyn InitialFields) = match &self.config.excitation {
            Excitation::None => (Box::new(NoSource), &ZeroFields),
            Excitation::Dipoles(spec) => (Box::new(DipoleSource::new(&self.mesh, spec.clone())?), &ZeroFields),
            Excitation::Manufactured => (Box::new(ManufacturedSource::new(&self.mesh, case)?), &case),
        };
        let (state, velocity) = init_state(&self.mesh, &self.ops, &self.params, initial, source.as_ref(), tau)?;
        run(&self.stepper, &self.ops, state, &velocity, source.as_ref(), options, on_snapshot, observer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub steps: usize,
    pub final_time: f64,
    pub cfl: CflReport,
    pub snapshots: usize,
    pub final_energy: Option<EnergyReport>,
    pub max_abs_hz: f64,
    /// L² errors of `E` and `H` for the manufactured excitation.
    pub errors: Option<(f64, f64)>,
}

/// Runs a config, writing snapshots and the energy log into `out_dir` when
/// given.
pub fn run_simulation(config: &SimulationConfig, out_dir: Option<&Path>) -> Result<RunSummary> {
    let prepared = PreparedRun::new(config)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let options = RunOptions {
        steps: config.steps,
        snapshot_every: config.snapshot_every,
        energy_every: config.energy_every,
        ..Default::default()
    };
    let mesh = &prepared.mesh;
    let mut max_abs_hz: f64 = 0.0;
    let out = prepared.execute(
        &options,
        &mut |snap| {
            if let Some(dir) = out_dir {
                write_snapshot(mesh, snap, &dir.join(format!("snapshot_{:06}.vtk", snap.step)))?;
            }
            Ok(())
        },
        &mut |state| {
            for (a, b) in state.hzx.iter().zip(&state.hzy) {
                max_abs_hz = max_abs_hz.max((a + b).abs());
            }
        },
    )?;
    if let Some(dir) = out_dir {
        write_energy_log(&out.energy, &dir.join("energy.csv"))?;
    }
    let errors = match config.excitation {
        Excitation::Manufactured => Some(l2_errors(&out.state, &prepared.manufactured(), out.state.time(), mesh)?),
        _ => None,
    };
    Ok(RunSummary {
        name: config.name.clone(),
        steps: out.state.step,
        final_time: out.state.time(),
        cfl: prepared.cfl()?,
        snapshots: out.snapshots_written,
        final_energy: out.energy.last().copied(),
        max_abs_hz,
        errors,
    })
}
