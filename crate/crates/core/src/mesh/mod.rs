//! Conforming triangulations with tagged boundary edges.

mod generate;
mod gmsh;
mod text;

pub use generate::{
    contraction_channel, generate_channel, generate_unit_square, refine_loops, triangulate_loops, BoundaryLoop,
    Hole,
};
pub use gmsh::import_mesh;
pub use text::{export_text, import_text};

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

/// Boundary tags assigned by the built-in generators.
pub mod tags {
    pub const LEFT: i32 = 1;
    pub const RIGHT: i32 = 2;
    pub const BOTTOM: i32 = 3;
    pub const TOP: i32 = 4;

    pub const INLET: i32 = LEFT;
    pub const OUTLET: i32 = RIGHT;
    pub const WALL: i32 = BOTTOM;
    pub const CYLINDER: i32 = 5;
    /// Second outlet of the contraction channel.
    pub const TOP_OUTLET: i32 = 6;
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid generator argument: {0}")]
    InvalidArgument(String),
    #[error("hole does not lie strictly inside the channel: {0}")]
    HoleOutsideDomain(String),
    #[error("triangle {triangle} references vertex {vertex}, but only {count} vertices exist")]
    Connectivity {
        triangle: usize,
        vertex: usize,
        count: usize,
    },
    #[error("triangle {0} has zero area")]
    ZeroArea(usize),
    #[error("non-conforming triangulation: {0}")]
    NonConforming(String),
    #[error("boundary edge ({0}, {1}) carries no tag")]
    UntaggedBoundary(usize, usize),
    #[error("vertex {0} is not referenced by any triangle")]
    UnreferencedVertex(usize),
    #[error("missing section ${0}")]
    MissingSection(String),
    #[error("unsupported mesh format version {0} (only Gmsh ASCII 2.2 is accepted)")]
    UnsupportedVersion(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("boundary partition: {0}")]
    Partition(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Oriented so that the domain lies to the left.
    pub vertices: [usize; 2],
    pub tag: i32,
}

/// Immutable conforming triangulation.
///
/// Triangles are counter-clockwise. Local edge `k` of a triangle joins its local
/// vertices `k` and `(k + 1) % 3`.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    boundary_edge_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshMetrics {
    /// Longest edge over all triangles.
    pub h: f64,
    /// Largest distance between two vertices.
    pub diam: f64,
    pub areas: Vec<f64>,
    pub total_area: f64,
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds a mesh and checks every structural invariant.
    ///
    /// Clockwise triangles are reoriented; boundary edges may be given in either
    /// direction and are reoriented to keep the domain on their left.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        boundary: Vec<(usize, usize, i32)>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        let mut referenced = vec![false; nv];
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(MeshError::Connectivity {
                        triangle: t,
                        vertex: v,
                        count: nv,
                    });
                }
                referenced[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::ZeroArea(t));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            let scale = edge_len(vertices[tri[0]], vertices[tri[1]])
                .max(edge_len(vertices[tri[1]], vertices[tri[2]]))
                .max(edge_len(vertices[tri[2]], vertices[tri[0]]));
            if area.abs() <= 1e-14 * scale * scale || !area.is_finite() {
                return Err(MeshError::ZeroArea(t));
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(MeshError::UnreferencedVertex(v));
        }

        // (edge id, directed uses)
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut uses: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut local = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let id = *edge_index.entry(key(a, b)).or_insert_with(|| {
                    edges.push([key(a, b).0, key(a, b).1]);
                    uses.push(Vec::new());
                    edges.len() - 1
                });
                uses[id].push((a, b));
                local[k] = id;
            }
            triangle_edges.push(local);
        }
        for (id, u) in uses.iter().enumerate() {
            match u.len() {
                1 => {}
                2 => {
                    if u[0] == u[1] {
                        return Err(MeshError::NonConforming(format!(
                            "edge ({}, {}) is traversed in the same direction by two triangles",
                            edges[id][0], edges[id][1]
                        )));
                    }
                }
                n => {
                    return Err(MeshError::NonConforming(format!(
                        "edge ({}, {}) is shared by {n} triangles",
                        edges[id][0], edges[id][1]
                    )))
                }
            }
        }

        let mut tagged: HashMap<(usize, usize), i32> = HashMap::new();
        for &(a, b, tag) in &boundary {
            let k = key(a, b);
            match edge_index.get(&k) {
                Some(&id) if uses[id].len() == 1 => {}
                _ => {
                    return Err(MeshError::NonConforming(format!(
                        "tagged edge ({a}, {b}) is not a boundary edge of the triangulation"
                    )))
                }
            }
            if let Some(prev) = tagged.insert(k, tag) {
                if prev != tag {
                    return Err(MeshError::NonConforming(format!(
                        "boundary edge ({a}, {b}) carries two tags ({prev} and {tag})"
                    )));
                }
            }
        }

        let mut boundary_edges = Vec::new();
        let mut boundary_edge_ids = Vec::new();
        for (id, u) in uses.iter().enumerate() {
            if u.len() == 1 {
                let (a, b) = u[0];
                let tag = *tagged
                    .get(&key(a, b))
                    .ok_or(MeshError::UntaggedBoundary(a, b))?;
                boundary_edges.push(BoundaryEdge {
                    vertices: [a, b],
                    tag,
                });
                boundary_edge_ids.push(id);
            }
        }

        Ok(Self {
            vertices,
            triangles,
            boundary: boundary_edges,
            edges,
            triangle_edges,
            boundary_edge_ids,
        })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Unique undirected edges, each stored as `[min, max]`.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    /// Global edge index of each boundary edge (parallel to [`Mesh::boundary_edges`]).
    pub fn boundary_edge_ids(&self) -> &[usize] {
        &self.boundary_edge_ids
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn boundary_tags(&self) -> BTreeSet<i32> {
        self.boundary.iter().map(|e| e.tag).collect()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn metrics(&self) -> MeshMetrics {
        mesh_metrics(self)
    }

    /// Area enclosed by the boundary loops, by the shoelace formula.
    pub fn boundary_enclosed_area(&self) -> f64 {
        self.boundary
            .iter()
            .map(|e| {
                let p = self.vertices[e.vertices[0]];
                let q = self.vertices[e.vertices[1]];
                0.5 * (p[0] * q[1] - q[0] * p[1])
            })
            .sum()
    }

    /// Triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let tol = 1e-12;
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|v| self.vertices[v]);
            let area = signed_area(a, b, c);
            let l0 = signed_area(p, b, c) / area;
            let l1 = signed_area(a, p, c) / area;
            let l2 = 1.0 - l0 - l1;
            if l0 >= -tol && l1 >= -tol && l2 >= -tol {
                return Some((t, [l0, l1, l2]));
            }
        }
        None
    }
}

fn edge_len(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

/// Element size, domain diameter and element areas.
pub fn mesh_metrics(mesh: &Mesh) -> MeshMetrics {
    let mut h = 0.0f64;
    let mut areas = Vec::with_capacity(mesh.n_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            h = h.max(edge_len(
                mesh.vertices[tri[k]],
                mesh.vertices[tri[(k + 1) % 3]],
            ));
        }
        areas.push(mesh.triangle_area(t));
    }
    // the farthest pair of points of a polygonal domain is a pair of boundary vertices
    let bverts: Vec<[f64; 2]> = mesh
        .boundary
        .iter()
        .map(|e| e.vertices[0])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|v| mesh.vertices[v])
        .collect();
    let mut diam = 0.0f64;
    for (i, p) in bverts.iter().enumerate() {
        for q in &bverts[i + 1..] {
            diam = diam.max(edge_len(*p, *q));
        }
    }
    let total_area = areas.iter().sum();
    MeshMetrics {
        h,
        diam,
        areas,
        total_area,
    }
}

/// Split of the boundary into Dirichlet and open parts, with outward normals.
#[derive(Debug, Clone)]
pub struct BoundaryPartition {
    dirichlet_tags: BTreeSet<i32>,
    open_tags: BTreeSet<i32>,
    normals: Vec<[f64; 2]>,
    is_open: Vec<bool>,
}

impl BoundaryPartition {
    pub fn new(
        mesh: &Mesh,
        dirichlet_tags: impl IntoIterator<Item = i32>,
        open_tags: impl IntoIterator<Item = i32>,
    ) -> Result<Self, MeshError> {
        let dirichlet_tags: BTreeSet<i32> = dirichlet_tags.into_iter().collect();
        let open_tags: BTreeSet<i32> = open_tags.into_iter().collect();
        if let Some(t) = dirichlet_tags.intersection(&open_tags).next() {
            return Err(MeshError::Partition(format!(
                "tag {t} is listed as both Dirichlet and open"
            )));
        }
        let mut normals = Vec::with_capacity(mesh.boundary.len());
        let mut is_open = Vec::with_capacity(mesh.boundary.len());
        for e in &mesh.boundary {
            let open = open_tags.contains(&e.tag);
            if !open && !dirichlet_tags.contains(&e.tag) {
                return Err(MeshError::Partition(format!(
                    "boundary tag {} is neither Dirichlet nor open",
                    e.tag
                )));
            }
            let p = mesh.vertices[e.vertices[0]];
            let q = mesh.vertices[e.vertices[1]];
            let len = edge_len(p, q);
            normals.push([(q[1] - p[1]) / len, -(q[0] - p[0]) / len]);
            is_open.push(open);
        }
        Ok(Self {
            dirichlet_tags,
            open_tags,
            normals,
            is_open,
        })
    }

    /// Every boundary edge is Dirichlet.
    pub fn all_dirichlet(mesh: &Mesh) -> Self {
        Self::new(mesh, mesh.boundary_tags(), []).expect("all tags are covered")
    }

    pub fn dirichlet_tags(&self) -> &BTreeSet<i32> {
        &self.dirichlet_tags
    }

    pub fn open_tags(&self) -> &BTreeSet<i32> {
        &self.open_tags
    }

    /// Outward unit normal of each boundary edge.
    pub fn normals(&self) -> &[[f64; 2]] {
        &self.normals
    }

    pub fn is_open(&self, boundary_edge: usize) -> bool {
        self.is_open[boundary_edge]
    }

    pub fn has_open(&self) -> bool {
        self.is_open.iter().any(|&o| o)
    }

    pub fn has_dirichlet(&self) -> bool {
        self.is_open.iter().any(|&o| !o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
        (
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
    }

    fn square_boundary() -> Vec<(usize, usize, i32)> {
        vec![(0, 1, 3), (1, 2, 2), (2, 3, 4), (3, 0, 1)]
    }

    #[test]
    fn clockwise_triangles_are_reoriented() {
        let (v, _) = two_triangles();
        let mesh = Mesh::new(v, vec![[0, 2, 1], [0, 3, 2]], square_boundary()).unwrap();
        for t in 0..2 {
            assert!(mesh.triangle_area(t) > 0.0);
        }
    }

    #[test]
    fn untagged_boundary_edge_is_rejected() {
        let (v, t) = two_triangles();
        let mut b = square_boundary();
        b.pop();
        assert!(matches!(
            Mesh::new(v, t, b),
            Err(MeshError::UntaggedBoundary(..))
        ));
    }

    #[test]
    fn interior_edge_cannot_be_tagged() {
        let (v, t) = two_triangles();
        let mut b = square_boundary();
        b.push((0, 2, 7));
        assert!(matches!(Mesh::new(v, t, b), Err(MeshError::NonConforming(_))));
    }

    #[test]
    fn edge_shared_by_three_triangles_is_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 0.5]];
        let t = vec![[0, 1, 2], [0, 3, 1], [0, 1, 4]];
        assert!(matches!(Mesh::new(v, t, vec![]), Err(MeshError::NonConforming(_))));
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(matches!(
            Mesh::new(v, vec![[0, 1, 2]], vec![]),
            Err(MeshError::ZeroArea(0))
        ));
    }

    #[test]
    fn normals_point_outward_and_have_unit_length() {
        let mesh = generate_unit_square(3).unwrap();
        let part = BoundaryPartition::all_dirichlet(&mesh);
        for (e, n) in mesh.boundary_edges().iter().zip(part.normals()) {
            assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-12);
            let mid = [
                0.5 * (mesh.vertices()[e.vertices[0]][0] + mesh.vertices()[e.vertices[1]][0]),
                0.5 * (mesh.vertices()[e.vertices[0]][1] + mesh.vertices()[e.vertices[1]][1]),
            ];
            // outward means away from the centre of the square
            assert!(n[0] * (mid[0] - 0.5) + n[1] * (mid[1] - 0.5) > 0.0);
        }
    }

    #[test]
    fn partition_rejects_overlap_and_gaps() {
        let mesh = generate_unit_square(2).unwrap();
        assert!(BoundaryPartition::new(&mesh, [1, 2, 3], [3, 4]).is_err());
        assert!(BoundaryPartition::new(&mesh, [1, 2, 3], []).is_err());
        let p = BoundaryPartition::new(&mesh, [1, 3, 4], [2]).unwrap();
        assert!(p.has_open() && p.has_dirichlet());
    }

    #[test]
    fn metrics_of_unit_square() {
        let m = generate_unit_square(1).unwrap().metrics();
        assert!((m.h - 2f64.sqrt()).abs() < 1e-15);
        assert!((m.diam - 2f64.sqrt()).abs() < 1e-15);
        assert!((m.total_area - 1.0).abs() < 1e-15);
        let m10 = generate_unit_square(10).unwrap().metrics();
        assert!((m10.h - 2f64.sqrt() / 10.0).abs() < 1e-14);
    }

    #[test]
    fn locate_finds_containing_triangle() {
        let mesh = generate_unit_square(4).unwrap();
        let (t, l) = mesh.locate([0.3, 0.6]).unwrap();
        let tri = mesh.triangles()[t];
        let x: f64 = (0..3).map(|k| l[k] * mesh.vertices()[tri[k]][0]).sum();
        let y: f64 = (0..3).map(|k| l[k] * mesh.vertices()[tri[k]][1]).sum();
        assert!((x - 0.3).abs() < 1e-14 && (y - 0.6).abs() < 1e-14);
        assert!(mesh.locate([1.5, 0.5]).is_none());
    }
}
