//! Versioned JSON run description.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::{Axis, CellCoefficients};
use crate::dynamics::CflConstants;
use crate::error::{Error, Result};
use crate::mesh::{generate_rect_mesh, load_mesh, CellTag, InterfaceSpec, Mesh, Rect};
use crate::physics::{kubo_sigma0, KuboParams, MaterialParams, PmlProfile, PmlSpec, SourceSpec};
use crate::solve::SolverConfig;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    /// Structured mesh of `bounds` (m) plus a PML collar of `pml_layers`
    /// cells on every side.
    Rect {
        bounds: Rect,
        nx: usize,
        ny: usize,
        #[serde(default)]
        pml_layers: usize,
    },
    /// Mesh file in the `SPPMESH` format; tags are taken from the file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaterialSpec {
    /// SI vacuum with σ0 from the Kubo formula.
    Kubo(KuboParams),
    Explicit(MaterialParams),
}

impl MaterialSpec {
    pub fn resolve(&self) -> Result<MaterialParams> {
        let p = match self {
            MaterialSpec::Kubo(k) => {
                k.validate()?;
                MaterialParams::vacuum(k.tau0, kubo_sigma0(k))
            }
            MaterialSpec::Explicit(p) => *p,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Excitation {
    #[default]
    None,
    Dipoles(SourceSpec),
    /// Closed-form solution on the unit square; the run reports its errors.
    Manufactured,
}

fn default_energy_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub version: u32,
    pub name: String,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub interface: InterfaceSpec,
    pub material: MaterialSpec,
    #[serde(default)]
    pub pml: PmlSpec,
    #[serde(default)]
    pub excitation: Excitation,
    /// Time step, s.
    pub tau: f64,
    pub steps: usize,
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    #[serde(default = "default_energy_every")]
    pub energy_every: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub cfl: CflConstants,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimulationConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        // relative mesh paths are taken from the config's directory
        if let MeshSpec::File { path: mesh_path } = &mut cfg.mesh {
            if mesh_path.is_relative() {
                if let Some(dir) = path.parent() {
                    *mesh_path = dir.join(&*mesh_path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::Config("snapshot_every must be at least 1".into()));
        }
        if self.energy_every == 0 {
            return Err(Error::Config("energy_every must be at least 1".into()));
        }
        if let MeshSpec::Rect { bounds, nx, ny, .. } = &self.mesh {
            if *nx == 0 || *ny == 0 || bounds.is_degenerate() {
                return Err(Error::Config("mesh needs positive cell counts and nondegenerate bounds".into()));
            }
        }
        if let Excitation::Dipoles(s) = &self.excitation {
            s.validate()?;
        }
        self.material.resolve()?;
        self.solver.validate()?;
        if !(self.cfl.c_in > 0.0 && self.cfl.c_tr > 0.0) {
            return Err(Error::Config("CFL constants must be positive".into()));
        }
        Ok(())
    }

    /// Builds the mesh and tags the interface.
    pub fn build_mesh(&self) -> Result<Mesh> {
        let mut mesh = match &self.mesh {
            MeshSpec::Rect {
                bounds,
                nx,
                ny,
                pml_layers,
            } => generate_rect_mesh(*bounds, *nx, *ny, *pml_layers)?,
            MeshSpec::File { path } => load_mesh(path)?,
        };
        if !self.interface.is_empty() {
            mesh.apply_interface(&self.interface)?;
        }
        Ok(mesh)
    }
}

/// Damping profile implied by the PML cells of a mesh: the physical region
/// is the bounding box of the physical cells, the thickness per axis the
/// widest collar side.
pub fn pml_profile(mesh: &Mesh, spec: &PmlSpec) -> Result<Option<PmlProfile>> {
    let mut physical: Option<Rect> = None;
    for t in 0..mesh.num_cells() {
        if mesh.cell_tag(t) != CellTag::Physical {
            continue;
        }
        for p in mesh.cell_vertices(t) {
            let r = physical.get_or_insert(Rect::new(p[0], p[0], p[1], p[1]));
            r.x_min = r.x_min.min(p[0]);
            r.x_max = r.x_max.max(p[0]);
            r.y_min = r.y_min.min(p[1]);
            r.y_max = r.y_max.max(p[1]);
        }
    }
    let Some(physical) = physical else {
        return Err(Error::Config("mesh has no physical cells".into()));
    };
    if mesh.cell_tags().iter().all(|&t| t == CellTag::Physical) {
        return Ok(None);
    }
    let ext = mesh.extent();
    let dd_x = (physical.x_min - ext.x_min).max(ext.x_max - physical.x_max);
    let dd_y = (physical.y_min - ext.y_min).max(ext.y_max - physical.y_max);
    let tiny = 1e-12 * ext.width().max(ext.height());
    Ok(Some(PmlProfile::new(physical, dd_x.max(tiny), dd_y.max(tiny), *spec)?))
}

/// Cell coefficients of the merged scheme for a mesh.
pub fn cell_coefficients(mesh: &Mesh, spec: &PmlSpec) -> Result<CellCoefficients> {
    Ok(match pml_profile(mesh, spec)? {
        None => CellCoefficients::undamped(mesh),
        Some(p) => CellCoefficients::sampled(
            mesh,
            |x| p.damping_profile(x, Axis::X),
            |y| p.damping_profile(y, Axis::Y),
        ),
    })
}
