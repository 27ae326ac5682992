use std::fmt::Write;

use super::{Mesh, MeshError};

/// Plain-text dump: `vertices N` then `x y` rows, `triangles M` then index
/// triples, `boundary K` then `a b tag` rows. Coordinates use the shortest
/// representation that reads back to the same `f64`.
pub fn export_text(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "vertices {}", mesh.n_vertices()).unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{:?} {:?}", p[0], p[1]).unwrap();
    }
    writeln!(out, "triangles {}", mesh.n_triangles()).unwrap();
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(out, "boundary {}", mesh.boundary_edges().len()).unwrap();
    for e in mesh.boundary_edges() {
        writeln!(out, "{} {} {}", e.vertices[0], e.vertices[1], e.tag).unwrap();
    }
    out
}

pub fn import_text(text: &str) -> Result<Mesh, MeshError> {
    let rows: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut pos = 0;
    let mut section = |name: &str| -> Result<Vec<(usize, Vec<&str>)>, MeshError> {
        let (ln, l) = *rows
            .get(pos)
            .ok_or_else(|| MeshError::MissingSection(name.into()))?;
        let count: usize = l
            .strip_prefix(name)
            .ok_or_else(|| MeshError::MissingSection(name.into()))?
            .trim()
            .parse()
            .map_err(|_| MeshError::Parse {
                line: ln,
                message: format!("bad {name} count"),
            })?;
        pos += 1;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, l) = *rows.get(pos).ok_or(MeshError::Parse {
                line: ln,
                message: format!("truncated {name} section"),
            })?;
            out.push((ln, l.split_whitespace().collect()));
            pos += 1;
        }
        Ok(out)
    };
    fn num<T: std::str::FromStr>(ln: usize, tok: &[&str], k: usize) -> Result<T, MeshError> {
        tok.get(k)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| MeshError::Parse {
                line: ln,
                message: format!("bad or missing field {}", k + 1),
            })
    }
    let vertices = section("vertices")?
        .into_iter()
        .map(|(ln, t)| Ok([num(ln, &t, 0)?, num(ln, &t, 1)?]))
        .collect::<Result<Vec<_>, MeshError>>()?;
    let triangles = section("triangles")?
        .into_iter()
        .map(|(ln, t)| Ok([num(ln, &t, 0)?, num(ln, &t, 1)?, num(ln, &t, 2)?]))
        .collect::<Result<Vec<_>, MeshError>>()?;
    let boundary = section("boundary")?
        .into_iter()
        .map(|(ln, t)| Ok((num(ln, &t, 0)?, num(ln, &t, 1)?, num(ln, &t, 2)?)))
        .collect::<Result<Vec<_>, MeshError>>()?;
    Mesh::new(vertices, triangles, boundary)
}
