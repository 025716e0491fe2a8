//! Line-based mesh text format.
//!
//! ```text
//! mesh2d 1
//! points N
//! x y            (N lines)
//! cells M
//! i j k          (M lines)
//! boundary K
//! i j TAG        (K lines, TAG is D or N)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryTag, MeshError, Point, Triangulation};

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), MeshError> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok((i + 1, fields));
            }
        }
        Err(parse_err(self.last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn section(&mut self, name: &str) -> Result<usize, MeshError> {
        let (line, f) = self.next_line(name)?;
        if f.len() != 2 || f[0] != name {
            return Err(parse_err(line, format!("expected `{name} <count>`, found `{}`", f.join(" "))));
        }
        f[1].parse()
            .map_err(|_| parse_err(line, format!("invalid count `{}`", f[1])))
    }
}

fn field<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, MeshError> {
    s.parse().map_err(|_| parse_err(line, format!("invalid value `{s}`")))
}

pub fn read_mesh(text: &str) -> Result<Triangulation, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (line, header) = lines.next_line("header")?;
    if header != ["mesh2d", "1"] {
        return Err(parse_err(line, "expected header `mesh2d 1`"));
    }
    let n = lines.section("points")?;
    let mut points: Vec<Point> = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, f) = lines.next_line("point")?;
        if f.len() != 2 {
            return Err(parse_err(line, "point line needs 2 coordinates"));
        }
        let p = [field::<f64>(line, f[0])?, field::<f64>(line, f[1])?];
        if !p.iter().all(|c| c.is_finite()) {
            return Err(parse_err(line, "non-finite coordinate"));
        }
        points.push(p);
    }
    let m = lines.section("cells")?;
    let mut cells = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, f) = lines.next_line("cell")?;
        if f.len() != 3 {
            return Err(parse_err(line, "cell line needs 3 vertex indices"));
        }
        cells.push([field(line, f[0])?, field(line, f[1])?, field(line, f[2])?]);
    }
    let k = lines.section("boundary")?;
    let mut boundary = Vec::with_capacity(k);
    for _ in 0..k {
        let (line, f) = lines.next_line("boundary edge")?;
        if f.len() != 3 {
            return Err(parse_err(line, "boundary line needs `i j TAG`"));
        }
        let tag = match f[2] {
            "D" => BoundaryTag::Dirichlet,
            "N" => BoundaryTag::Neumann,
            other => return Err(parse_err(line, format!("unknown boundary tag `{other}`"))),
        };
        boundary.push((field(line, f[0])?, field(line, f[1])?, tag));
    }
    if let Ok((line, f)) = lines.next_line("") {
        return Err(parse_err(line, format!("unrecognized line `{}`", f.join(" "))));
    }
    Triangulation::with_tagged_boundary(points, cells, &boundary)
}

pub fn write_mesh(mesh: &Triangulation) -> String {
    let mut out = String::new();
    out.push_str("mesh2d 1\n");
    let _ = writeln!(out, "points {}", mesh.n_points());
    for p in mesh.points() {
        // `{:?}` round-trips f64 exactly
        let _ = writeln!(out, "{:?} {:?}", p[0], p[1]);
    }
    let _ = writeln!(out, "cells {}", mesh.n_cells());
    for c in mesh.cells() {
        let _ = writeln!(out, "{} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(out, "boundary {}", mesh.n_boundary_edges());
    for (e, tag) in mesh.boundary_edges() {
        let [a, b] = mesh.edges()[e];
        let _ = writeln!(out, "{a} {b} {}", tag.letter());
    }
    out
}

pub fn read_mesh_file(path: impl AsRef<Path>) -> Result<Triangulation, MeshError> {
    read_mesh(&std::fs::read_to_string(path)?)
}

pub fn write_mesh_file(mesh: &Triangulation, path: impl AsRef<Path>) -> Result<(), MeshError> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{square_grid, square_with_hole};

    #[test]
    fn round_trip() {
        let m = square_with_hole(6, 2, 3.0).uniform_refine();
        let back = read_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back, m);
        let g = square_grid(3, 1.0 / 3.0, |_, _| BoundaryTag::Neumann);
        assert_eq!(read_mesh(&write_mesh(&g)).unwrap(), g);
    }

    #[test]
    fn rejects_trailing_garbage() {
        let m = square_grid(1, 1.0, |_, _| BoundaryTag::Dirichlet);
        let text = write_mesh(&m) + "extra 1\n";
        let err = read_mesh(&text).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 15, .. }), "{err}");
    }

    #[test]
    fn rejects_bad_header_and_tags() {
        assert!(matches!(read_mesh("mesh3d 1\n"), Err(MeshError::Parse { line: 1, .. })));
        let text = "mesh2d 1\npoints 3\n0 0\n1 0\n0 1\ncells 1\n0 1 2\nboundary 3\n0 1 D\n1 2 X\n0 2 D\n";
        let err = read_mesh(text).unwrap_err();
        assert!(err.to_string().contains("unknown boundary tag `X`"), "{err}");
    }

    #[test]
    fn missing_boundary_tag_is_an_error() {
        let text = "mesh2d 1\npoints 3\n0 0\n1 0\n0 1\ncells 1\n0 1 2\nboundary 2\n0 1 D\n1 2 N\n";
        assert_eq!(read_mesh(text).unwrap_err(), MeshError::UntaggedBoundaryEdge(0, 2));
    }
}
