//! Legacy ASCII VTK output.

use std::io::{self, Write};

use super::{FieldKind, TaylorHoodSpace};

/// Writes an unstructured grid with point data.
///
/// With `subdivide` every triangle is split into four through its edge
/// midpoints so that all P2 velocity dofs are shown; otherwise only the vertex
/// values are written. Pressure at midpoints is the average of the endpoints.
pub fn write_vtk<W: Write>(
    out: &mut W,
    space: &TaylorHoodSpace,
    title: &str,
    velocity: Option<&[f64]>,
    pressure: Option<&[f64]>,
    subdivide: bool,
) -> io::Result<()> {
    let mesh = space.mesh();
    let n_points = if subdivide { space.n_p2() } else { mesh.n_vertices() };
    let coords = &space.dof_coords()[..n_points];
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.replace('\n', " "))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n_points} double")?;
    for p in coords {
        writeln!(out, "{:.12e} {:.12e} 0", p[0], p[1])?;
    }
    let cells: Vec<[usize; 3]> = if subdivide {
        (0..space.n_elements())
            .flat_map(|t| {
                let d = space.element_dofs(t);
                [
                    [d[0], d[3], d[5]],
                    [d[3], d[1], d[4]],
                    [d[5], d[4], d[2]],
                    [d[3], d[4], d[5]],
                ]
            })
            .collect()
    } else {
        mesh.triangles().to_vec()
    };
    writeln!(out, "CELLS {} {}", cells.len(), 4 * cells.len())?;
    for c in &cells {
        writeln!(out, "3 {} {} {}", c[0], c[1], c[2])?;
    }
    writeln!(out, "CELL_TYPES {}", cells.len())?;
    for _ in &cells {
        writeln!(out, "5")?;
    }
    if velocity.is_none() && pressure.is_none() {
        return Ok(());
    }
    writeln!(out, "POINT_DATA {n_points}")?;
    if let Some(u) = velocity {
        assert_eq!(u.len(), space.n_velocity(), "{:?} length", FieldKind::Velocity);
        let n2 = space.n_p2();
        writeln!(out, "VECTORS velocity double")?;
        for i in 0..n_points {
            writeln!(out, "{:.12e} {:.12e} 0", u[i], u[n2 + i])?;
        }
    }
    if let Some(p) = pressure {
        assert_eq!(p.len(), space.n_pressure(), "{:?} length", FieldKind::Pressure);
        writeln!(out, "SCALARS pressure double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in p {
            writeln!(out, "{v:.12e}")?;
        }
        if subdivide {
            for e in mesh.edges() {
                writeln!(out, "{:.12e}", 0.5 * (p[e[0]] + p[e[1]]))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::square_space;

    #[test]
    fn header_and_counts() {
        let s = square_space(1, &[]);
        let u = vec![0.5; s.n_velocity()];
        let p = vec![1.0; s.n_pressure()];
        let mut buf = Vec::new();
        write_vtk(&mut buf, &s, "t=0", Some(&u), Some(&p), true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\nt=0\nASCII\n"));
        assert!(text.contains("POINTS 9 double"));
        assert!(text.contains("CELLS 8 32"));
        assert_eq!(text.lines().filter(|l| *l == "1.000000000000e0").count(), 9);
        let mut buf = Vec::new();
        write_vtk(&mut buf, &s, "coarse", None, Some(&p), false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("POINTS 4 double") && text.contains("POINT_DATA 4"));
    }
}
