//! Builds every mesh the library knows about, prints its metrics, and reads
//! a small Gmsh file and the text format back in.
//!
//! `cargo run --release --example meshes`

use nsensemble::experiments::benchmarks::graded_cylinder_mesh;
use nsensemble::mesh::{contraction_channel, export_text, generate_channel, generate_unit_square, import_mesh, import_text, Hole, Mesh};

const GMSH: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
6
1 1 2 7 1 1 2
2 1 2 7 1 2 3
3 1 2 8 1 3 4
4 1 2 8 1 4 1
5 2 2 0 1 1 2 3
6 2 2 0 1 1 3 4
$EndElements
";

fn report(name: &str, mesh: &Mesh) {
    let m = mesh.metrics();
    println!(
        "{name:<22} {:>6} vertices {:>6} triangles  h = {:.4}  area = {:.6}  tags {:?}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        m.h,
        m.total_area,
        mesh.boundary_tags()
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    report("unit square n=16", &generate_unit_square(16)?);
    report("channel 4x1", &generate_channel(4.0, 1.0, 32, 8, None)?);
    let hole = Hole { center: [0.2, 0.2], radius: 0.05 };
    report("uniform cylinder", &generate_channel(2.2, 0.41, 88, 16, Some(hole))?);
    report("graded cylinder", &graded_cylinder_mesh(0.033, 0.007)?);
    report("contraction h=0.05", &contraction_channel(0.05)?);

    let imported = import_mesh(GMSH)?;
    report("gmsh square", &imported);

    let text = export_text(&imported);
    let back = import_text(&text)?;
    assert_eq!(back.triangles(), imported.triangles());
    println!("text round trip: {} lines, connectivity preserved", text.lines().count());
    Ok(())
}
