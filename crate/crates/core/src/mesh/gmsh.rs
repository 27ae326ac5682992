use std::collections::HashMap;

use super::{Mesh, MeshError};

const LINE: i64 = 1;
const TRIANGLE: i64 = 2;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        self.inner
            .by_ref()
            .map(|(i, l)| (i + 1, l.trim()))
            .find(|(_, l)| !l.is_empty())
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, MeshError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot read {what} from '{tok}'")))
}

/// Reads a Gmsh ASCII 2.2 mesh.
///
/// 2-node lines give boundary edges tagged with their first (physical) tag;
/// 3-node triangles give the elements; all other element types are ignored.
/// Nodes not referenced by any triangle are dropped.
pub fn import_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let mut version = None;
    let mut nodes: Option<(Vec<i64>, Vec<[f64; 2]>)> = None;
    let mut elements: Option<Vec<(usize, i64, i64, Vec<i64>)>> = None;

    while let Some((ln, l)) = lines.next() {
        let Some(section) = l.strip_prefix('$') else {
            return Err(parse_err(ln, format!("expected a section header, found '{l}'")));
        };
        let end = format!("$End{section}");
        match section {
            "MeshFormat" => {
                let (ln, l) = lines
                    .next()
                    .ok_or_else(|| parse_err(ln, "truncated $MeshFormat"))?;
                let mut tok = l.split_whitespace();
                let v: String = field(tok.next(), ln, "version")?;
                let file_type: i64 = field(tok.next(), ln, "file type")?;
                if v != "2.2" && v != "2" && v != "2.0" && v != "2.1" {
                    return Err(MeshError::UnsupportedVersion(v));
                }
                if file_type != 0 {
                    return Err(MeshError::UnsupportedVersion(format!("{v} (binary)")));
                }
                version = Some(v);
            }
            "Nodes" => {
                let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "truncated $Nodes"))?;
                let n: usize = field(Some(l), ln, "node count")?;
                let mut ids = Vec::with_capacity(n);
                let mut coords = Vec::with_capacity(n);
                for _ in 0..n {
                    let (ln, l) = lines.next().ok_or_else(|| parse_err(ln, "truncated $Nodes"))?;
                    let mut tok = l.split_whitespace();
                    ids.push(field(tok.next(), ln, "node id")?);
                    let x = field(tok.next(), ln, "x coordinate")?;
                    let y = field(tok.next(), ln, "y coordinate")?;
                    coords.push([x, y]);
                }
                nodes = Some((ids, coords));
            }
            "Elements" => {
                let (ln, l) = lines
                    .next()
                    .ok_or_else(|| parse_err(ln, "truncated $Elements"))?;
                let n: usize = field(Some(l), ln, "element count")?;
                let mut list = Vec::with_capacity(n);
                for _ in 0..n {
                    let (ln, l) = lines
                        .next()
                        .ok_or_else(|| parse_err(ln, "truncated $Elements"))?;
                    let mut tok = l.split_whitespace();
                    let _id: i64 = field(tok.next(), ln, "element id")?;
                    let kind: i64 = field(tok.next(), ln, "element type")?;
                    let ntags: usize = field(tok.next(), ln, "tag count")?;
                    let mut tags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tags.push(field::<i64>(tok.next(), ln, "tag")?);
                    }
                    let physical = tags.first().copied().unwrap_or(0);
                    let nodes = tok
                        .map(|t| {
                            t.parse::<i64>()
                                .map_err(|_| parse_err(ln, format!("bad node reference '{t}'")))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let expected = match kind {
                        LINE => 2,
                        TRIANGLE => 3,
                        _ => nodes.len(),
                    };
                    if nodes.len() != expected {
                        return Err(parse_err(
                            ln,
                            format!("element of type {kind} needs {expected} nodes"),
                        ));
                    }
                    list.push((ln, kind, physical, nodes));
                }
                elements = Some(list);
            }
            _ => {
                // skip unknown sections such as $PhysicalNames
                loop {
                    match lines.next() {
                        Some((_, l)) if l == end => break,
                        Some(_) => {}
                        None => return Err(parse_err(ln, format!("unterminated ${section}"))),
                    }
                }
                continue;
            }
        }
        match lines.next() {
            Some((_, l)) if l == end => {}
            Some((ln, l)) => return Err(parse_err(ln, format!("expected '{end}', found '{l}'"))),
            None => return Err(parse_err(ln, format!("missing '{end}'"))),
        }
    }

    if version.is_none() {
        return Err(MeshError::MissingSection("MeshFormat".into()));
    }
    let (ids, coords) = nodes.ok_or_else(|| MeshError::MissingSection("Nodes".into()))?;
    let elements = elements.ok_or_else(|| MeshError::MissingSection("Elements".into()))?;

    let index: HashMap<i64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let lookup = |id: i64, element: usize| -> Result<usize, MeshError> {
        index.get(&id).copied().ok_or(MeshError::Connectivity {
            triangle: element,
            vertex: id.max(0) as usize,
            count: ids.len(),
        })
    };

    let mut new_index = vec![usize::MAX; coords.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (_, kind, _, nodes) in elements.iter().filter(|e| e.1 == TRIANGLE) {
        debug_assert_eq!(*kind, TRIANGLE);
        let t = triangles.len();
        let mut tri = [0usize; 3];
        for k in 0..3 {
            let old = lookup(nodes[k], t)?;
            if new_index[old] == usize::MAX {
                new_index[old] = vertices.len();
                vertices.push(coords[old]);
            }
            tri[k] = new_index[old];
        }
        triangles.push(tri);
    }
    let mut boundary = Vec::new();
    for (ln, _, tag, nodes) in elements.iter().filter(|e| e.1 == LINE) {
        let mut ends = [0usize; 2];
        for k in 0..2 {
            let old = index.get(&nodes[k]).copied().ok_or_else(|| {
                parse_err(*ln, format!("line references unknown node {}", nodes[k]))
            })?;
            if new_index[old] == usize::MAX {
                return Err(MeshError::NonConforming(format!(
                    "boundary line on line {ln} uses node {} that belongs to no triangle",
                    nodes[k]
                )));
            }
            ends[k] = new_index[old];
        }
        let tag = i32::try_from(*tag).map_err(|_| parse_err(*ln, "tag out of range"))?;
        boundary.push((ends[0], ends[1], tag));
    }
    Mesh::new(vertices, triangles, boundary)
}
