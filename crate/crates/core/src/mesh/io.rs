use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryTag, Mesh, Point};
use crate::error::{PlateError, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> PlateError {
    PlateError::Parse { line, msg: msg.into() }
}

/// Parses a `plate-mesh v1` document.
pub fn load_mesh(text: &str) -> Result<Mesh> {
    let mut lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (n, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if header != "plate-mesh v1" {
        return Err(parse_err(n, format!("expected `plate-mesh v1`, found `{header}`")));
    }
    let (n, counts) = lines.next().ok_or_else(|| parse_err(n + 1, "missing count line"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| parse_err(n, format!("bad count `{s}`"))))
        .collect::<Result<_>>()?;
    let [nv, nt, nb] = counts[..] else {
        return Err(parse_err(n, "count line must hold `<nv> <nt> <nb>`"));
    };

    let mut last = n;
    let mut next = |what: &str| {
        let r = lines.next().ok_or_else(|| parse_err(last + 1, format!("missing {what} line")));
        if let Ok((n, _)) = r {
            last = n;
        }
        r
    };

    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = next("vertex")?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| parse_err(n, format!("bad coordinate `{s}`"))))
            .collect::<Result<_>>()?;
        if xs.len() != 2 || !xs.iter().all(|x| x.is_finite()) {
            return Err(parse_err(n, "vertex line must hold two finite numbers"));
        }
        vertices.push([xs[0], xs[1]]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = next("triangle")?;
        let ix: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| parse_err(n, format!("bad vertex index `{s}`"))))
            .collect::<Result<_>>()?;
        if ix.len() != 3 {
            return Err(parse_err(n, "triangle line must hold three indices"));
        }
        triangles.push([ix[0], ix[1], ix[2]]);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (n, l) = next("boundary")?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(n, "boundary line must hold `<a> <b> <tag>`"));
        }
        let a = parts[0].parse().map_err(|_| parse_err(n, "bad vertex index"))?;
        let b = parts[1].parse().map_err(|_| parse_err(n, "bad vertex index"))?;
        let tag =
            BoundaryTag::from_code(parts[2]).ok_or_else(|| parse_err(n, format!("unknown tag `{}`", parts[2])))?;
        boundary.push(([a, b], tag));
    }
    if let Some((n, _)) = lines.next() {
        return Err(parse_err(n, "trailing content after boundary section"));
    }
    Mesh::new(vertices, triangles, boundary)
}

pub fn read_mesh_file(path: impl AsRef<Path>) -> Result<Mesh> {
    load_mesh(&std::fs::read_to_string(path)?)
}

/// Serializes a mesh; `load_mesh(format_mesh(m))` reproduces `m` exactly.
pub fn format_mesh(m: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "plate-mesh v1").unwrap();
    writeln!(s, "{} {} {}", m.num_vertices(), m.num_triangles(), m.boundary_edges().len()).unwrap();
    for p in m.vertices() {
        writeln!(s, "{:?} {:?}", p[0], p[1]).unwrap();
    }
    for t in m.triangles() {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    for b in m.boundary_edges() {
        writeln!(s, "{} {} {}", b.vertices[0], b.vertices[1], b.tag.code()).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: &str = "plate-mesh v1\n3 1 3\n0 0\n1 0\n0 1\n0 1 2\n0 1 c\n1 2 c\n2 0 c\n";

    #[test]
    fn parses_reference_triangle() {
        let m = load_mesh(TRI).unwrap();
        assert_eq!((m.num_vertices(), m.num_triangles(), m.boundary_edges().len()), (3, 1, 3));
    }

    #[test]
    fn round_trip_is_exact() {
        let m = load_mesh(TRI).unwrap();
        let again = load_mesh(&format_mesh(&m)).unwrap();
        assert_eq!(format_mesh(&m), format_mesh(&again));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let bad = TRI.replace("1 0\n0 1\n0 1 2", "1 zero\n0 1\n0 1 2");
        match load_mesh(&bad) {
            Err(PlateError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let badtag = TRI.replace("2 0 c", "2 0 x");
        assert!(matches!(load_mesh(&badtag), Err(PlateError::Parse { line: 9, .. })));
        assert!(matches!(load_mesh("plate-mesh v2\n"), Err(PlateError::Parse { .. })));
        assert!(matches!(load_mesh(&TRI[..TRI.len() - 7]), Err(PlateError::Parse { .. })));
    }
}
