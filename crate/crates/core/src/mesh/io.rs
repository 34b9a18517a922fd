//! ASCII mesh format.
//!
//! ```text
//! SPPMESH 1
//! VERTICES n
//! x y
//! TRIANGLES m
//! i j k tag        # tag: 0 physical, 1 pml
//! EDGETAGS p
//! i j tag          # tag: 1 interface, 2 outer boundary (interior edges omitted)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CellTag, EdgeTag, Mesh, Point};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str("SPPMESH 1\n");
    let _ = writeln!(out, "VERTICES {}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:?} {:?}", p[0], p[1]);
    }
    let _ = writeln!(out, "TRIANGLES {}", mesh.num_cells());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            tri[0],
            tri[1],
            tri[2],
            mesh.cell_tag(t).code()
        );
    }
    let tagged: Vec<usize> = (0..mesh.num_edges())
        .filter(|&e| mesh.edge_tag(e) != EdgeTag::Interior)
        .collect();
    let _ = writeln!(out, "EDGETAGS {}", tagged.len());
    for e in tagged {
        let [a, b] = mesh.edge(e);
        let _ = writeln!(out, "{} {} {}", a, b, mesh.edge_tag(e).code());
    }
    out
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_mesh(mesh)).map_err(|e| Error::io(path, e))
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Result<&'a str> {
        for (i, raw) in self.inner.by_ref() {
            self.line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                return Ok(content);
            }
        }
        Err(Error::MeshParse {
            line: self.line + 1,
            message: "unexpected end of file".into(),
        })
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::MeshParse {
            line: self.line,
            message: message.into(),
        }
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let content = self.next_content()?;
        let mut parts = content.split_whitespace();
        if parts.next() != Some(keyword) {
            return Err(self.err(format!("expected `{keyword} <count>`, found `{content}`")));
        }
        let count = parts
            .next()
            .and_then(|c| c.parse::<usize>().ok())
            .ok_or_else(|| self.err(format!("missing or invalid {keyword} count")))?;
        if parts.next().is_some() {
            return Err(self.err("trailing tokens after count"));
        }
        Ok(count)
    }

    fn fields<T: std::str::FromStr>(&mut self, n: usize, what: &str) -> Result<Vec<T>> {
        let content = self.next_content()?;
        let parsed: Option<Vec<T>> = content.split_whitespace().map(|s| s.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == n => Ok(v),
            _ => Err(self.err(format!("expected {n} fields for {what}, found `{content}`"))),
        }
    }
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let magic = lines.next_content()?;
    if magic.split_whitespace().collect::<Vec<_>>() != ["SPPMESH", "1"] {
        return Err(lines.err(format!("bad header `{magic}`, expected `SPPMESH 1`")));
    }

    let nv = lines.header("VERTICES")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let xy: Vec<f64> = lines.fields(2, "vertex")?;
        if !xy.iter().all(|v| v.is_finite()) {
            return Err(lines.err("non-finite vertex coordinate"));
        }
        vertices.push([xy[0], xy[1]]);
    }

    let nt = lines.header("TRIANGLES")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut cell_tags = Vec::with_capacity(nt);
    for t in 0..nt {
        let f: Vec<usize> = lines.fields(4, "triangle")?;
        if f[..3].iter().any(|&v| v >= nv) {
            return Err(lines.err("triangle vertex index out of range"));
        }
        let tri = [f[0], f[1], f[2]];
        let [p0, p1, p2] = tri.map(|v| vertices[v]);
        let area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        if !(area > 0.0) {
            return Err(lines.err(format!(
                "triangle {t} has non-positive signed area (must be counterclockwise)"
            )));
        }
        let tag = u8::try_from(f[3])
            .ok()
            .and_then(CellTag::from_code)
            .ok_or_else(|| lines.err(format!("unknown cell tag {}", f[3])))?;
        triangles.push(tri);
        cell_tags.push(tag);
    }

    let ne = lines.header("EDGETAGS")?;
    let mut edge_tags = Vec::with_capacity(ne);
    for _ in 0..ne {
        let f: Vec<usize> = lines.fields(3, "edge tag")?;
        let tag = u8::try_from(f[2])
            .ok()
            .and_then(EdgeTag::from_code)
            .ok_or_else(|| lines.err(format!("unknown edge tag {}", f[2])))?;
        if f[0] >= nv || f[1] >= nv {
            return Err(lines.err("edge vertex index out of range"));
        }
        edge_tags.push(([f[0], f[1]], tag));
    }
    let last = lines.line;

    Mesh::from_parts(vertices, triangles, cell_tags, &edge_tags).map_err(|e| match e {
        Error::MeshInvariant(message) => Error::MeshParse {
            line: last,
            message,
        },
        other => other,
    })
}
