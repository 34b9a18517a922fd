//! Named, fully populated run descriptions.

use crate::error::{Error, Result};
use crate::harness::config::{
    Excitation, MaterialSpec, MeshSpec, SimulationConfig, CONFIG_VERSION,
};
use crate::dynamics::CflConstants;
use crate::mesh::{CurvePrimitive, InterfaceSpec, Point, Rect};
use crate::physics::{KuboParams, MaterialParams, PmlSpec, PointSource, SourceSpec, Waveform};
use crate::solve::SolverConfig;

pub const SCENARIO_NAMES: [&str; 7] = [
    "bifurcated-straight",
    "bifurcated-curved",
    "adjacent-arcs",
    "bulb",
    "ring-resonator",
    "spiral",
    "convergence",
];

const UM: f64 = 1e-6;
const PML_LAYERS: usize = 12;
const TAU: f64 = 8.3e-17;
const F0: f64 = 10e12;

fn um(p: [f64; 2]) -> Point {
    [p[0] * UM, p[1] * UM]
}

fn segment(a: [f64; 2], b: [f64; 2]) -> CurvePrimitive {
    CurvePrimitive::Segment {
        start: um(a),
        end: um(b),
    }
}

fn arc(center: [f64; 2], radius: f64, from_deg: f64, to_deg: f64) -> CurvePrimitive {
    CurvePrimitive::Arc {
        center: um(center),
        radius: radius * UM,
        angle_start: from_deg.to_radians(),
        angle_end: to_deg.to_radians(),
    }
}

fn arc3(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> CurvePrimitive {
    CurvePrimitive::arc_through(um(a), um(b), um(c)).expect("non-collinear points")
}

/// Dipole pair with opposite signs, upper point first.
fn dipoles(points: &[[f64; 2]], h: f64) -> Excitation {
    Excitation::Dipoles(SourceSpec {
        points: points
            .iter()
            .enumerate()
            .map(|(i, &p)| PointSource {
                position: um(p),
                sign: if i % 2 == 0 { 1.0 } else { -1.0 },
            })
            .collect(),
        frequency: F0,
        normalization_length: h,
        waveform: Waveform::Sine,
    })
}

struct Layout {
    half_x: f64,
    half_y: f64,
    nx: usize,
    ny: usize,
}

/// `[−30, 30] × [−10, 10]` μm at `h_x = 0.6`, `h_y = 0.2` μm.
const WIDE: Layout = Layout {
    half_x: 30.0,
    half_y: 10.0,
    nx: 100,
    ny: 100,
};

/// `[−20, 20]²` μm at `h = 0.1` μm.
const SQUARE: Layout = Layout {
    half_x: 20.0,
    half_y: 20.0,
    nx: 400,
    ny: 400,
};

fn spp(name: &str, layout: Layout, mu_c: f64, interface: Vec<CurvePrimitive>, sources: &[[f64; 2]], steps: usize) -> SimulationConfig {
    let bounds = Rect::new(
        -layout.half_x * UM,
        layout.half_x * UM,
        -layout.half_y * UM,
        layout.half_y * UM,
    );
    let h_y = bounds.height() / layout.ny as f64;
    SimulationConfig {
        version: CONFIG_VERSION,
        name: name.to_string(),
        mesh: MeshSpec::Rect {
            bounds,
            nx: layout.nx,
            ny: layout.ny,
            pml_layers: PML_LAYERS,
        },
        interface: InterfaceSpec::new(interface),
        material: MaterialSpec::Kubo(KuboParams::reference(mu_c)),
        pml: PmlSpec::default(),
        excitation: dipoles(sources, h_y),
        tau: TAU,
        steps,
        snapshot_every: Some(1000),
        energy_every: 100,
        output_dir: None,
        cfl: CflConstants::default(),
        solver: SolverConfig::default(),
    }
}

fn spiral_interface() -> Vec<CurvePrimitive> {
    let w = 4.0;
    let mut prims = Vec::new();
    // p1(−w,0) → p2(w,0) → p3(−2w,0) → … → p8(4w,0)
    for k in 1..=7usize {
        let upper = k % 2 == 1;
        let m = k.div_ceil(2) as f64;
        if upper {
            prims.push(arc([0.0, 0.0], m * w, 180.0, 0.0));
        } else {
            prims.push(arc([-w / 2.0, 0.0], (m + 0.5) * w, 0.0, -180.0));
        }
    }
    // quarter turn p8(4w,0) → p9(0,−4.5w) about (−w/4, −w/4)
    let c = [-w / 4.0, -w / 4.0];
    let angle = |p: [f64; 2]| (p[1] - c[1]).atan2(p[0] - c[0]);
    let radius = (4.0 * w - c[0]).hypot(0.0 - c[1]);
    prims.push(CurvePrimitive::Arc {
        center: um(c),
        radius: radius * UM,
        angle_start: angle([4.0 * w, 0.0]),
        angle_end: angle([0.0, -4.5 * w]),
    });
    prims.push(segment([0.0, -4.5 * w], [-4.5 * w, -4.5 * w]));
    prims
}

/// Run description for a named scenario.
pub fn scenario(name: &str) -> Result<SimulationConfig> {
    let hy_um = 0.2;
    let cfg = match name {
        "bifurcated-straight" => spp(
            name,
            WIDE,
            1.5,
            vec![
                segment([-30.0, 0.0], [-15.0, 0.0]),
                segment([-15.0, 0.0], [0.0, 5.0]),
                segment([0.0, 5.0], [15.0, 5.0]),
                segment([-15.0, 0.0], [0.0, -5.0]),
                segment([0.0, -5.0], [15.0, -5.0]),
            ],
            &[[-27.0, 1.0], [-27.0, -1.0]],
            20000,
        ),
        "bifurcated-curved" => spp(
            name,
            WIDE,
            1.5,
            vec![
                segment([-28.0, 0.0], [0.0, 0.0]),
                segment([7.0, 7.0], [15.0, 7.0]),
                segment([7.0, -7.0], [15.0, -7.0]),
                arc([7.0, 0.0], 7.0, 90.0, 270.0),
            ],
            &[[-27.0, 1.0], [-27.0, -1.0]],
            20000,
        ),
        "adjacent-arcs" => {
            let d = 2.0 * hy_um;
            spp(
                name,
                WIDE,
                1.5,
                vec![
                    arc3([-24.0, 0.0], [-18.0, 3.0], [-12.0, 0.0]),
                    arc3([-12.0, -d], [-6.0, -3.0 - d], [0.0, -d]),
                    arc3([0.0, 0.0], [6.0, 3.0], [12.0, 0.0]),
                    arc3([12.0, -d], [18.0, -3.0 - d], [24.0, -d]),
                ],
                &[[-18.0, 3.5], [-18.0, 2.5]],
                20000,
            )
        }
        "bulb" => spp(
            name,
            WIDE,
            1.5,
            vec![
                segment([-15.0, 2.0], [0.0, 2.0]),
                segment([-15.0, -2.0], [0.0, -2.0]),
                arc3([0.0, 2.0], [10.0, 0.0], [0.0, -2.0]),
            ],
            &[[-15.0, 2.5], [-15.0, 1.5], [-15.0, -2.5], [-15.0, -1.5]],
            10000,
        ),
        "ring-resonator" => spp(
            name,
            SQUARE,
            1.5,
            vec![
                arc([0.0, 0.0], 11.0, 0.0, 360.0),
                segment([-15.0, 13.0], [15.0, 13.0]),
                segment([-15.0, -13.0], [15.0, -13.0]),
            ],
            &[[-13.0, 13.5], [-13.0, 12.5]],
            20000,
        ),
        "spiral" => spp(
            name,
            SQUARE,
            0.8,
            spiral_interface(),
            &[[-16.0, -18.5], [-16.0, -17.5]],
            100000,
        ),
        "convergence" => {
            let h = 0.1;
            SimulationConfig {
                version: CONFIG_VERSION,
                name: name.to_string(),
                mesh: MeshSpec::Rect {
                    bounds: Rect::unit_square(),
                    nx: 10,
                    ny: 10,
                    pml_layers: 0,
                },
                interface: InterfaceSpec::new(vec![CurvePrimitive::Segment {
                    start: [0.0, 0.5],
                    end: [1.0, 0.5],
                }]),
                material: MaterialSpec::Explicit(MaterialParams::unit()),
                pml: PmlSpec::default(),
                excitation: Excitation::Manufactured,
                tau: h / 200.0,
                steps: 20,
                snapshot_every: None,
                energy_every: 1,
                output_dir: None,
                cfl: CflConstants::default(),
                solver: SolverConfig::default(),
            }
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown scenario '{name}'; valid names: {}",
                SCENARIO_NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}
