//! Configuration, scenarios, convergence studies and file output.

pub mod config;
pub mod convergence;
pub mod output;
pub mod scenarios;
pub mod simulate;

pub use config::{Excitation, MaterialSpec, MeshSpec, SimulationConfig, CONFIG_VERSION};
pub use convergence::{
    l2_errors, run_convergence_study, ConvergenceMode, ErrorRow, ErrorTable, ManufacturedSource,
};
pub use output::{parse_energy_csv, write_energy_log, write_snapshot};
pub use scenarios::{scenario, SCENARIO_NAMES};
pub use simulate::{run_simulation, CflReport, PreparedRun, RunSummary};
