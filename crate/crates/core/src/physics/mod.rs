//! Physical constants, graphene conductivity, PML damping and sources.

pub mod manufactured;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{CellTag, Mesh, Point, Rect, SpatialIndex};

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.8541878128e-12;
/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.25663706212e-6;
/// Impedance of free space as used for the PML grading, Ω.
pub const ETA_FREE_SPACE: f64 = 377.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub epsilon0: f64,
    pub mu0: f64,
    /// Relaxation time, s.
    pub tau0: f64,
    /// Surface conductivity, S.
    pub sigma0: f64,
}

impl MaterialParams {
    /// SI vacuum with the given graphene parameters.
    pub fn vacuum(tau0: f64, sigma0: f64) -> Self {
        MaterialParams {
            epsilon0: EPSILON_0,
            mu0: MU_0,
            tau0,
            sigma0,
        }
    }

    /// All four parameters equal to one.
    pub fn unit() -> Self {
        MaterialParams {
            epsilon0: 1.0,
            mu0: 1.0,
            tau0: 1.0,
            sigma0: 1.0,
        }
    }

    /// Wave speed `1/√(ε0 μ0)`.
    pub fn wave_speed(&self) -> f64 {
        1.0 / (self.epsilon0 * self.mu0).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.epsilon0) && ok(self.mu0) && ok(self.tau0)) {
            return Err(Error::Config(format!("material parameters must be positive: {self:?}")));
        }
        // σ0 = 0 switches the sheet off, which the comparison runs rely on
        if !(self.sigma0.is_finite() && self.sigma0 >= 0.0) {
            return Err(Error::Config(format!("sigma0 must be nonnegative, got {}", self.sigma0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KuboParams {
    /// Electron charge, C.
    pub q: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Temperature, K.
    pub temperature: f64,
    /// Chemical potential, eV.
    pub mu_c: f64,
    /// Relaxation time, s.
    pub tau0: f64,
}

impl KuboParams {
    /// Constants at the precision used in the reference simulations.
    pub fn reference(mu_c: f64) -> Self {
        KuboParams {
            q: 1.6022e-19,
            k_b: 1.3806e-23,
            hbar: 1.0546e-34,
            temperature: 300.0,
            mu_c,
            tau0: 1.2e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.q, self.k_b, self.hbar, self.temperature, self.tau0];
        if vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) || !(self.mu_c >= 0.0) {
            return Err(Error::Config(format!("invalid Kubo parameters: {self:?}")));
        }
        Ok(())
    }
}

/// Intraband surface conductivity in S. The closed form carries an overall
/// minus sign; its magnitude is returned.
pub fn kubo_sigma0(p: &KuboParams) -> f64 {
    let kt = p.k_b * p.temperature;
    let mu = p.mu_c * p.q;
    let x = mu / kt;
    // ln(1 + e^{-x}) without underflow trouble
    let bracket = x + 2.0 * (-x).exp().ln_1p();
    (p.q * p.q * kt * p.tau0 / (std::f64::consts::PI * p.hbar * p.hbar) * bracket).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmlSpec {
    /// Target reflection used in the grading.
    pub err: f64,
    pub eta: f64,
}

impl Default for PmlSpec {
    fn default() -> Self {
        PmlSpec {
            err: 1e-7,
            eta: ETA_FREE_SPACE,
        }
    }
}

/// A PML spec bound to a physical rectangle and layer thicknesses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlProfile {
    pub physical: Rect,
    pub dd_x: f64,
    pub dd_y: f64,
    pub spec: PmlSpec,
}

impl PmlProfile {
    pub fn new(physical: Rect, dd_x: f64, dd_y: f64, spec: PmlSpec) -> Result<Self> {
        if !(dd_x > 0.0 && dd_y > 0.0) {
            return Err(Error::Config("PML thickness must be positive".into()));
        }
        if !(spec.err > 0.0 && spec.err < 1.0 && spec.eta > 0.0) {
            return Err(Error::Config(format!("invalid PML parameters: {spec:?}")));
        }
        Ok(PmlProfile {
            physical,
            dd_x,
            dd_y,
            spec,
        })
    }

    /// `σ_max = −ln(err)·5 / (2·dd·η)`, S/m.
    pub fn sigma_max(&self, axis: crate::assembly::Axis) -> f64 {
        let dd = match axis {
            crate::assembly::Axis::X => self.dd_x,
            crate::assembly::Axis::Y => self.dd_y,
        };
        -self.spec.err.ln() * 5.0 / (2.0 * dd * self.spec.eta)
    }

    /// Quartic damping ramp, zero on the physical interval.
    pub fn damping_profile(&self, coordinate: f64, axis: crate::assembly::Axis) -> f64 {
        use crate::assembly::Axis;
        let (lo, hi, dd) = match axis {
            Axis::X => (self.physical.x_min, self.physical.x_max, self.dd_x),
            Axis::Y => (self.physical.y_min, self.physical.y_max, self.dd_y),
        };
        let depth = if coordinate > hi {
            coordinate - hi
        } else if coordinate < lo {
            lo - coordinate
        } else {
            return 0.0;
        };
        self.sigma_max(axis) * (depth / dd).powi(4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSource {
    pub position: Point,
    pub sign: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    /// `sin(2π f0 t)`, switched on at `t = 0`.
    #[default]
    Sine,
    /// `sin(2π f0 t)` under a Hann window lasting `cycles / f0`.
    HannBurst { cycles: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub points: Vec<PointSource>,
    /// Hz.
    pub frequency: f64,
    /// Normalization length `h`, m.
    pub normalization_length: f64,
    #[serde(default)]
    pub waveform: Waveform,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::Config("source frequency must be positive".into()));
        }
        if !(self.normalization_length > 0.0) {
            return Err(Error::Config("source normalization length must be positive".into()));
        }
        if let Waveform::HannBurst { cycles } = self.waveform {
            if !(cycles > 0.0) {
                return Err(Error::Config("burst cycle count must be positive".into()));
            }
        }
        if self.points.iter().any(|p| !p.sign.is_finite()) {
            return Err(Error::Config("source sign must be finite".into()));
        }
        Ok(())
    }

    /// Time factor without the sign and `1/h` normalization.
    pub fn signal(&self, t: f64) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * self.frequency * t;
        match self.waveform {
            Waveform::Sine => phase.sin(),
            Waveform::HannBurst { cycles } => {
                let duration = cycles / self.frequency;
                if !(0.0..=duration).contains(&t) {
                    0.0
                } else {
                    let w = (std::f64::consts::PI * t / duration).sin();
                    w * w * phase.sin()
                }
            }
        }
    }
}

/// Containing cell and sign of every point source.
pub fn dipole_source_cells(mesh: &Mesh, spec: &SourceSpec) -> Result<Vec<(usize, f64)>> {
    let index = SpatialIndex::new(mesh);
    spec.points
        .iter()
        .map(|p| {
            let t = index.locate(p.position).ok_or_else(|| {
                Error::Config(format!("source at {:?} lies outside the mesh", p.position))
            })?;
            if mesh.cell_tag(t) == CellTag::Pml {
                return Err(Error::Config(format!(
                    "source at {:?} lies in the PML",
                    p.position
                )));
            }
            Ok((t, p.sign))
        })
        .collect()
}

/// Writes `K_s(t)` per cell into `out`.
pub fn eval_source(spec: &SourceSpec, cells: &[(usize, f64)], t: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let s = spec.signal(t) / spec.normalization_length;
    for &(c, sign) in cells {
        out[c] += sign * s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Axis;
    use crate::mesh::generate_rect_mesh;

    #[test]
    fn kubo_pinned_values() {
        // high-precision evaluation of the closed form
        let s15 = kubo_sigma0(&KuboParams::reference(1.5));
        assert!((s15 - 0.21188356947340605).abs() < 1e-12 * s15);
        let s08 = kubo_sigma0(&KuboParams::reference(0.8));
        assert!((s08 - 0.11300457038581683).abs() < 1e-12 * s08);
        let s0 = kubo_sigma0(&KuboParams::reference(0.0));
        assert!((s0 - 0.005062136767594040).abs() < 1e-12 * s0);
    }

    #[test]
    fn kubo_zero_potential_limit() {
        let p = KuboParams::reference(0.0);
        let kt = p.k_b * p.temperature;
        let expected =
            p.q * p.q * kt * p.tau0 / (std::f64::consts::PI * p.hbar * p.hbar) * 2.0 * 2f64.ln();
        assert!((kubo_sigma0(&p) - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn kubo_linear_in_relaxation_time() {
        let p = KuboParams::reference(1.5);
        let q = KuboParams { tau0: 2.0 * p.tau0, ..p };
        assert!((kubo_sigma0(&q) - 2.0 * kubo_sigma0(&p)).abs() < 1e-15);
    }

    fn profile() -> PmlProfile {
        PmlProfile::new(
            Rect::new(-30e-6, 30e-6, -10e-6, 10e-6),
            1.2e-6,
            2.4e-6,
            PmlSpec::default(),
        )
        .unwrap()
    }

    #[test]
    fn sigma_max_natural_log() {
        let s = profile().sigma_max(Axis::X);
        assert!((s - 89069.9361790358).abs() < 1e-9 * s);
    }

    #[test]
    fn damping_ramp_ends() {
        let p = profile();
        assert_eq!(p.damping_profile(30e-6, Axis::X), 0.0);
        assert_eq!(p.damping_profile(-30e-6, Axis::X), 0.0);
        assert_eq!(p.damping_profile(0.0, Axis::Y), 0.0);
        let end = p.damping_profile(31.2e-6, Axis::X);
        assert!((end - p.sigma_max(Axis::X)).abs() < 1e-9 * end);
        let low = p.damping_profile(-12.4e-6, Axis::Y);
        assert!((low - p.sigma_max(Axis::Y)).abs() < 1e-9 * low);
    }

    #[test]
    fn source_values() {
        let spec = SourceSpec {
            points: vec![PointSource { position: [0.0, 0.0], sign: 1.0 }],
            frequency: 10e12,
            normalization_length: 0.2e-6,
            waveform: Waveform::Sine,
        };
        let cells = [(0, 1.0), (1, -1.0)];
        let mut out = vec![0.0; 3];
        eval_source(&spec, &cells, 0.0, &mut out);
        assert!(out.iter().all(|&v| v == 0.0));
        eval_source(&spec, &cells, 1.0 / (4.0 * spec.frequency), &mut out);
        assert!((out[0] - 5e6).abs() < 1e-6);
        assert!((out[1] + 5e6).abs() < 1e-6);
        assert_eq!(out[2], 0.0);
    }

    #[test]
    fn burst_vanishes_outside_window() {
        let spec = SourceSpec {
            points: vec![],
            frequency: 2.0,
            normalization_length: 1.0,
            waveform: Waveform::HannBurst { cycles: 3.0 },
        };
        assert_eq!(spec.signal(0.0), 0.0);
        assert_eq!(spec.signal(1.6), 0.0);
        assert!(spec.signal(0.625).abs() > 0.1);
    }

    #[test]
    fn source_cells_located() {
        let m = generate_rect_mesh(Rect::unit_square(), 4, 4, 2).unwrap();
        let t = (0..m.num_cells())
            .find(|&t| m.cell_tag(t) == CellTag::Physical)
            .unwrap();
        let c = m.centroid(t);
        let spec = SourceSpec {
            points: vec![PointSource { position: c, sign: -1.0 }],
            frequency: 1.0,
            normalization_length: 0.25,
            waveform: Waveform::Sine,
        };
        assert_eq!(dipole_source_cells(&m, &spec).unwrap(), vec![(t, -1.0)]);
        let pml = SourceSpec {
            points: vec![PointSource { position: [-0.3, 0.5], sign: 1.0 }],
            ..spec
        };
        assert!(dipole_source_cells(&m, &pml).is_err());
    }
}
