//! Snapshot and energy-log writers.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::dynamics::{EnergyReport, Snapshot};
use crate::elements::evaluate_edge_field;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

pub const ENERGY_HEADER: &str = "step,time,electric,curl,magnetic,interface,curl_correction,total";

/// Legacy-VTK ASCII text of a snapshot: `Hz` and the cell-centre `E` as cell
/// data.
pub fn snapshot_vtk(mesh: &Mesh, snapshot: &Snapshot) -> Result<String> {
    if snapshot.e.len() != mesh.num_edges() || snapshot.hz.len() != mesh.num_cells() {
        return Err(Error::DimensionMismatch {
            expected: mesh.num_edges(),
            actual: snapshot.e.len(),
        });
    }
    let mut s = String::new();
    let nv = mesh.num_vertices();
    let nc = mesh.num_cells();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "sppfetd step {} time {:e}", snapshot.step, snapshot.time);
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.12e} {:.12e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nc} {}", 4 * nc);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {nc}\nSCALARS Hz double 1\nLOOKUP_TABLE default");
    for v in &snapshot.hz {
        let _ = writeln!(s, "{v:.12e}");
    }
    let _ = writeln!(s, "VECTORS E double");
    for t in 0..nc {
        let e = evaluate_edge_field(mesh, t, &snapshot.e, mesh.centroid(t));
        let _ = writeln!(s, "{:.12e} {:.12e} 0", e[0], e[1]);
    }
    Ok(s)
}

pub fn write_snapshot(mesh: &Mesh, snapshot: &Snapshot, path: &Path) -> Result<()> {
    let text = snapshot_vtk(mesh, snapshot)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// CSV with one row per report.
pub fn energy_csv(series: &[EnergyReport]) -> String {
    let mut s = String::from(ENERGY_HEADER);
    s.push('\n');
    for r in series {
        let _ = writeln!(
            s,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.step, r.time, r.electric, r.curl, r.magnetic, r.interface, r.curl_correction, r.total
        );
    }
    s
}

pub fn write_energy_log(series: &[EnergyReport], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(energy_csv(series).as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Parses text written by [`energy_csv`].
pub fn parse_energy_csv(text: &str) -> Result<Vec<EnergyReport>> {
    let mut lines = text.lines();
    if lines.next() != Some(ENERGY_HEADER) {
        return Err(Error::Config("energy log header missing".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Config(format!("energy log row {} malformed", i + 1));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 8 {
                return Err(bad());
            }
            let f = |k: usize| cols[k].parse::<f64>().map_err(|_| bad());
            Ok(EnergyReport {
                step: cols[0].parse().map_err(|_| bad())?,
                time: f(1)?,
                electric: f(2)?,
                curl: f(3)?,
                magnetic: f(4)?,
                interface: f(5)?,
                curl_correction: f(6)?,
                total: f(7)?,
            })
        })
        .collect()
}
