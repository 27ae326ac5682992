use std::f64::consts::PI;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::{tags, Mesh, MeshError};

/// Structured `n x n` triangulation of the unit square, tagged by side.
pub fn generate_unit_square(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidArgument(
            "unit square needs at least one subdivision".into(),
        ));
    }
    structured_rectangle(1.0, 1.0, n, n, [tags::BOTTOM, tags::RIGHT, tags::TOP, tags::LEFT])
}

/// Circular obstacle cut out of a channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hole {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Rectangular channel `[0, length] x [0, height]` with inlet at `x = 0`, outlet at
/// `x = length` and walls elsewhere, optionally with a circular obstacle.
///
/// Without a hole the mesh is structured (identical to the unit square generator
/// for `1 x 1`); with a hole it is a constrained Delaunay triangulation of the
/// structured grid points kept clear of the obstacle.
pub fn generate_channel(
    length: f64,
    height: f64,
    nx: usize,
    ny: usize,
    hole: Option<Hole>,
) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 || !(length > 0.0) || !(height > 0.0) {
        return Err(MeshError::InvalidArgument(format!(
            "channel {length} x {height} with {nx} x {ny} cells"
        )));
    }
    let Some(hole) = hole else {
        return structured_rectangle(
            length,
            height,
            nx,
            ny,
            [tags::WALL, tags::OUTLET, tags::WALL, tags::INLET],
        );
    };
    let [cx, cy] = hole.center;
    let r = hole.radius;
    if !(r > 0.0) || cx - r <= 0.0 || cx + r >= length || cy - r <= 0.0 || cy + r >= height {
        return Err(MeshError::HoleOutsideDomain(format!(
            "circle at ({cx}, {cy}) with radius {r} in {length} x {height}"
        )));
    }

    let dx = length / nx as f64;
    let dy = height / ny as f64;
    let h_target = dx.min(dy);

    let mut outer = BoundaryLoop::default();
    for i in 0..nx {
        outer.push([i as f64 * dx, 0.0], tags::WALL);
    }
    for j in 0..ny {
        outer.push([length, j as f64 * dy], tags::OUTLET);
    }
    for i in (1..=nx).rev() {
        outer.push([i as f64 * dx, height], tags::WALL);
    }
    for j in (1..=ny).rev() {
        outer.push([0.0, j as f64 * dy], tags::INLET);
    }

    let segments = ((2.0 * PI * r / h_target).ceil() as usize).max(16);
    let mut circle = BoundaryLoop::default();
    for k in 0..segments {
        let a = 2.0 * PI * k as f64 / segments as f64;
        circle.push([cx + r * a.cos(), cy + r * a.sin()], tags::CYLINDER);
    }

    let clearance = 0.5 * h_target;
    let mut interior = Vec::new();
    for j in 1..ny {
        for i in 1..nx {
            let p = [i as f64 * dx, j as f64 * dy];
            let d = ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt();
            if d > r + clearance {
                interior.push(p);
            }
        }
    }
    triangulate_loops(&[outer, circle], &interior, 0.25 * h_target)
}

/// Two-outlet channel with a contraction: inlet at `x = 0`, `y in [0, 1]`; an end
/// outlet at `x = 4`, `y in [0.25, 0.75]`; a side branch leaving through
/// `y = 1.5`, `x in [0.8, 1.2]`.
///
/// Outline (counter-clockwise): (0,0) (2,0) (2.5,0.25) (4,0.25) (4,0.75)
/// (2.5,0.75) (2,1) (1.2,1) (1.2,1.5) (0.8,1.5) (0.8,1) (0,1).
pub fn contraction_channel(h: f64) -> Result<Mesh, MeshError> {
    if !(h > 0.0) || h > 0.25 {
        return Err(MeshError::InvalidArgument(format!(
            "contraction channel mesh size {h} must lie in (0, 0.25]"
        )));
    }
    let corners: [([f64; 2], i32); 12] = [
        ([0.0, 0.0], tags::WALL),
        ([2.0, 0.0], tags::WALL),
        ([2.5, 0.25], tags::WALL),
        ([4.0, 0.25], tags::OUTLET),
        ([4.0, 0.75], tags::WALL),
        ([2.5, 0.75], tags::WALL),
        ([2.0, 1.0], tags::WALL),
        ([1.2, 1.0], tags::WALL),
        ([1.2, 1.5], tags::TOP_OUTLET),
        ([0.8, 1.5], tags::WALL),
        ([0.8, 1.0], tags::WALL),
        ([0.0, 1.0], tags::INLET),
    ];
    let mut outer = BoundaryLoop::default();
    for k in 0..corners.len() {
        let (p, tag) = corners[k];
        let q = corners[(k + 1) % corners.len()].0;
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        let pieces = (len / h).ceil().max(1.0) as usize;
        for s in 0..pieces {
            let t = s as f64 / pieces as f64;
            outer.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])], tag);
        }
    }
    let mut interior = Vec::new();
    let nx = (4.0 / h).round() as usize;
    let ny = (1.5 / h).round() as usize;
    for j in 1..ny {
        for i in 1..nx {
            interior.push([i as f64 * 4.0 / nx as f64, j as f64 * 1.5 / ny as f64]);
        }
    }
    triangulate_loops(&[outer], &interior, 0.4 * h)
}

/// Closed polygonal boundary; segment `k` runs from point `k` to point `k + 1`
/// (cyclically) and carries `tags[k]`.
#[derive(Debug, Clone, Default)]
pub struct BoundaryLoop {
    pub points: Vec<[f64; 2]>,
    pub tags: Vec<i32>,
}

impl BoundaryLoop {
    pub fn push(&mut self, p: [f64; 2], tag_of_next_segment: i32) {
        self.points.push(p);
        self.tags.push(tag_of_next_segment);
    }

    fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2], i32)> + '_ {
        let n = self.points.len();
        (0..n).map(move |k| (self.points[k], self.points[(k + 1) % n], self.tags[k]))
    }
}

fn point_in_loops(p: [f64; 2], loops: &[BoundaryLoop]) -> bool {
    let mut inside = false;
    for lp in loops {
        for (a, b, _) in lp.segments() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
    }
    inside
}

fn distance_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    ((p[0] - a[0] - t * d[0]).powi(2) + (p[1] - a[1] - t * d[1]).powi(2)).sqrt()
}

/// Constrained Delaunay triangulation of the region bounded by `loops` (even-odd
/// rule), seeded with `interior` points. Interior points closer than `clearance`
/// to a boundary segment, or outside the region, are skipped.
pub fn triangulate_loops(
    loops: &[BoundaryLoop],
    interior: &[[f64; 2]],
    clearance: f64,
) -> Result<Mesh, MeshError> {
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut boundary = Vec::new();
    for lp in loops {
        if lp.points.len() < 3 {
            return Err(MeshError::InvalidArgument(
                "boundary loop needs at least three points".into(),
            ));
        }
        let handles = lp
            .points
            .iter()
            .map(|p| cdt.insert(Point2::new(p[0], p[1])))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| MeshError::Triangulation(format!("{e:?}")))?;
        let n = handles.len();
        for k in 0..n {
            let (a, b) = (handles[k], handles[(k + 1) % n]);
            if cdt.can_add_constraint(a, b) {
                cdt.add_constraint(a, b);
            } else {
                return Err(MeshError::Triangulation(
                    "boundary segments intersect".into(),
                ));
            }
            boundary.push((a.index(), b.index(), lp.tags[k]));
        }
    }
    for &p in interior {
        if !point_in_loops(p, loops) {
            continue;
        }
        let near = loops
            .iter()
            .flat_map(|lp| lp.segments())
            .any(|(a, b, _)| distance_to_segment(p, a, b) < clearance);
        if !near {
            cdt.insert(Point2::new(p[0], p[1]))
                .map_err(|e| MeshError::Triangulation(format!("{e:?}")))?;
        }
    }

    let positions: Vec<[f64; 2]> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            [p.x, p.y]
        })
        .collect();
    interior_mesh(&cdt, &positions, loops, boundary)
}

/// Quality triangulation of the region bounded by `loops`: Ruppert refinement
/// until every angle is at least `min_angle_deg` and every triangle has area at
/// most `max_area`. Boundary segments may be split; pieces keep the tag of the
/// segment they lie on.
pub fn refine_loops(loops: &[BoundaryLoop], max_area: f64, min_angle_deg: f64) -> Result<Mesh, MeshError> {
    if !(max_area > 0.0) || !(0.0..=33.0).contains(&min_angle_deg) {
        return Err(MeshError::InvalidArgument(format!(
            "refinement with max area {max_area} and angle limit {min_angle_deg} degrees"
        )));
    }
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    for lp in loops {
        if lp.points.len() < 3 {
            return Err(MeshError::InvalidArgument(
                "boundary loop needs at least three points".into(),
            ));
        }
        let handles = lp
            .points
            .iter()
            .map(|p| cdt.insert(Point2::new(p[0], p[1])))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| MeshError::Triangulation(format!("{e:?}")))?;
        let n = handles.len();
        for k in 0..n {
            let (a, b) = (handles[k], handles[(k + 1) % n]);
            if !cdt.can_add_constraint(a, b) {
                return Err(MeshError::Triangulation("boundary segments intersect".into()));
            }
            cdt.add_constraint(a, b);
        }
    }
    let result = cdt.refine(
        RefinementParameters::<f64>::new()
            .exclude_outer_faces(true)
            .with_angle_limit(AngleLimit::from_deg(min_angle_deg))
            .with_max_allowed_area(max_area)
            .with_max_additional_vertices(2_000_000),
    );
    if !result.refinement_complete {
        return Err(MeshError::Triangulation("refinement did not converge".into()));
    }

    let positions: Vec<[f64; 2]> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            [p.x, p.y]
        })
        .collect();
    let segments: Vec<([f64; 2], [f64; 2], i32)> = loops.iter().flat_map(|lp| lp.segments()).collect();
    let mut boundary = Vec::new();
    for e in cdt.undirected_edges() {
        if !e.is_constraint_edge() {
            continue;
        }
        let [a, b] = e.vertices().map(|v| v.fix().index());
        let mid = [
            0.5 * (positions[a][0] + positions[b][0]),
            0.5 * (positions[a][1] + positions[b][1]),
        ];
        let tag = segments
            .iter()
            .min_by(|s, t| distance_to_segment(mid, s.0, s.1).total_cmp(&distance_to_segment(mid, t.0, t.1)))
            .map(|s| s.2)
            .expect("at least one segment");
        boundary.push((a, b, tag));
    }
    interior_mesh(&cdt, &positions, loops, boundary)
}

/// Keeps the faces inside `loops` and drops vertices used by no kept face.
fn interior_mesh(
    cdt: &ConstrainedDelaunayTriangulation<Point2<f64>>,
    positions: &[[f64; 2]],
    loops: &[BoundaryLoop],
    boundary: Vec<(usize, usize, i32)>,
) -> Result<Mesh, MeshError> {
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        let centroid = [
            (positions[a][0] + positions[b][0] + positions[c][0]) / 3.0,
            (positions[a][1] + positions[b][1] + positions[c][1]) / 3.0,
        ];
        if point_in_loops(centroid, loops) {
            triangles.push([a, b, c]);
        }
    }
    let mut new_index = vec![usize::MAX; positions.len()];
    let mut vertices = Vec::new();
    for tri in &mut triangles {
        for v in tri.iter_mut() {
            if new_index[*v] == usize::MAX {
                new_index[*v] = vertices.len();
                vertices.push(positions[*v]);
            }
            *v = new_index[*v];
        }
    }
    let boundary = boundary
        .into_iter()
        .map(|(a, b, t)| (new_index[a], new_index[b], t))
        .collect();
    Mesh::new(vertices, triangles, boundary)
}

/// `side_tags` is ordered bottom, right, top, left.
fn structured_rectangle(
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    side_tags: [i32; 4],
) -> Result<Mesh, MeshError> {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            // diagonal from lower-left to upper-right
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let [bottom, right, top, left] = side_tags;
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push((id(i, 0), id(i + 1, 0), bottom));
    }
    for j in 0..ny {
        boundary.push((id(nx, j), id(nx, j + 1), right));
    }
    for i in (0..nx).rev() {
        boundary.push((id(i + 1, ny), id(i, ny), top));
    }
    for j in (0..ny).rev() {
        boundary.push((id(0, j + 1), id(0, j), left));
    }
    Mesh::new(vertices, triangles, boundary)
}
