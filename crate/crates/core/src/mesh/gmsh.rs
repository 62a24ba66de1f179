//! Gmsh MSH 2.2 ASCII reader/writer (tetrahedra only).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::TetMesh;
use crate::error::{Error, Result};

const TET4: usize = 4;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_nonempty(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() {
                self.line = i + 1;
                return Some(l);
            }
        }
        None
    }
}

fn err(section: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Gmsh {
        section: section.to_string(),
        line,
        message: message.into(),
    }
}

fn expect_end(lines: &mut Lines, section: &str) -> Result<()> {
    let end = format!("$End{}", &section[1..]);
    match lines.next_nonempty() {
        Some(l) if l == end => Ok(()),
        Some(l) => Err(err(section, lines.line, format!("expected `{end}`, found `{l}`"))),
        None => Err(err(section, lines.line, format!("missing `{end}`"))),
    }
}

fn parse_count(lines: &mut Lines, section: &str) -> Result<usize> {
    let l = lines
        .next_nonempty()
        .ok_or_else(|| err(section, lines.line, "missing count"))?;
    l.parse()
        .map_err(|_| err(section, lines.line, format!("bad count `{l}`")))
}

pub fn parse_gmsh(text: &str) -> Result<TetMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut seen_format = false;
    let mut node_ids: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut raw_tets: Vec<[usize; 4]> = Vec::new();

    while let Some(header) = lines.next_nonempty() {
        match header {
            "$MeshFormat" => {
                const S: &str = "$MeshFormat";
                let l = lines
                    .next_nonempty()
                    .ok_or_else(|| err(S, lines.line, "missing version line"))?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != 3 || !f[0].starts_with("2.") {
                    return Err(err(S, lines.line, format!("unsupported format line `{l}`")));
                }
                if f[1] != "0" {
                    return Err(err(S, lines.line, "binary files are not supported"));
                }
                expect_end(&mut lines, S)?;
                seen_format = true;
            }
            "$Nodes" => {
                const S: &str = "$Nodes";
                let n = parse_count(&mut lines, S)?;
                vertices.reserve(n);
                for _ in 0..n {
                    let l = lines
                        .next_nonempty()
                        .ok_or_else(|| err(S, lines.line, "truncated node list"))?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(err(S, lines.line, format!("bad node line `{l}`")));
                    }
                    let id: usize = f[0]
                        .parse()
                        .map_err(|_| err(S, lines.line, format!("bad node id `{}`", f[0])))?;
                    let mut x = [0.0; 3];
                    for (k, s) in f[1..].iter().enumerate() {
                        x[k] = s
                            .parse()
                            .map_err(|_| err(S, lines.line, format!("bad coordinate `{s}`")))?;
                    }
                    if node_ids.insert(id, vertices.len()).is_some() {
                        return Err(err(S, lines.line, format!("duplicate node id {id}")));
                    }
                    vertices.push(Vector3::from(x));
                }
                expect_end(&mut lines, S)?;
            }
            "$Elements" => {
                const S: &str = "$Elements";
                let n = parse_count(&mut lines, S)?;
                for _ in 0..n {
                    let l = lines
                        .next_nonempty()
                        .ok_or_else(|| err(S, lines.line, "truncated element list"))?;
                    let f: Vec<usize> = l
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| err(S, lines.line, format!("bad element line `{l}`")))?;
                    if f.len() < 3 || f.len() < 3 + f[2] {
                        return Err(err(S, lines.line, format!("bad element line `{l}`")));
                    }
                    if f[1] != TET4 {
                        continue;
                    }
                    let nodes = &f[3 + f[2]..];
                    if nodes.len() != 4 {
                        return Err(err(S, lines.line, "tetrahedron needs 4 nodes"));
                    }
                    raw_tets.push([nodes[0], nodes[1], nodes[2], nodes[3]]);
                }
                expect_end(&mut lines, S)?;
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // Skip sections we do not use ($PhysicalNames, $NodeData, ...).
                let end = format!("$End{}", &other[1..]);
                loop {
                    match lines.next_nonempty() {
                        Some(l) if l == end => break,
                        Some(_) => {}
                        None => return Err(err(other, lines.line, format!("missing `{end}`"))),
                    }
                }
            }
            other => {
                return Err(err("(top level)", lines.line, format!("unexpected line `{other}`")));
            }
        }
    }
    if !seen_format {
        return Err(err("$MeshFormat", lines.line, "missing section"));
    }
    if raw_tets.is_empty() {
        return Err(err("$Elements", lines.line, "file contains no 4-node tetrahedra"));
    }
    let tets = raw_tets
        .into_iter()
        .map(|t| {
            let mut out = [0; 4];
            for (k, id) in t.iter().enumerate() {
                out[k] = *node_ids
                    .get(id)
                    .ok_or_else(|| err("$Elements", 0, format!("unknown node id {id}")))?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    TetMesh::new(vertices, tets)
}

pub fn read_gmsh(path: impl AsRef<Path>) -> Result<TetMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_gmsh(&text)
}

/// Serializes nodes and tetrahedra with 1-based ids.
pub fn to_gmsh(mesh: &TetMesh) -> String {
    let mut s = String::new();
    writeln!(s, "$MeshFormat\n2.2 0 8\n$EndMeshFormat").unwrap();
    writeln!(s, "$Nodes\n{}", mesh.vertices().len()).unwrap();
    for (i, v) in mesh.vertices().iter().enumerate() {
        writeln!(s, "{} {:.17e} {:.17e} {:.17e}", i + 1, v.x, v.y, v.z).unwrap();
    }
    writeln!(s, "$EndNodes\n$Elements\n{}", mesh.n_tets()).unwrap();
    for (i, t) in mesh.tets().iter().enumerate() {
        writeln!(s, "{} 4 2 1 1 {} {} {} {}", i + 1, t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1).unwrap();
    }
    writeln!(s, "$EndElements").unwrap();
    s
}

pub fn write_gmsh(mesh: &TetMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_gmsh(mesh)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::structured_cube_mesh;

    const ONE_TET: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
3
1 15 2 0 1 1
2 2 2 0 1 1 2 3
3 4 2 0 1 1 2 3 4
$EndElements
";

    #[test]
    fn single_reference_tet() {
        let m = parse_gmsh(ONE_TET).unwrap();
        assert_eq!(m.vertices().len(), 4);
        assert_eq!(m.n_tets(), 1);
        assert_eq!(m.edges().len(), 6);
        assert_eq!(m.boundary_edges().len(), 6);
        assert_eq!(m.boundary_faces().len(), 4);
    }

    #[test]
    fn round_trip_structured_mesh() {
        let m = structured_cube_mesh(2);
        let back = parse_gmsh(&to_gmsh(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.msh");
        let m = structured_cube_mesh(1);
        write_gmsh(&m, &path).unwrap();
        assert_eq!(read_gmsh(&path).unwrap(), m);
    }

    #[test]
    fn malformed_section_is_named() {
        let bad = ONE_TET.replace("$EndNodes", "$EndNodez");
        match parse_gmsh(&bad) {
            Err(Error::Gmsh { section, .. }) => assert_eq!(section, "$Nodes"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = ONE_TET.replace("1 0 0 0", "1 0 zero 0");
        assert!(matches!(parse_gmsh(&bad), Err(Error::Gmsh { section, .. }) if section == "$Nodes"));
    }

    #[test]
    fn no_tets_is_an_error() {
        let only_lines = ONE_TET.replace("3\n1 15", "2\n1 15").replace("3 4 2 0 1 1 2 3 4\n", "");
        assert!(matches!(parse_gmsh(&only_lines), Err(Error::Gmsh { section, .. }) if section == "$Elements"));
    }
}
