//! Conforming triangulations of (-1, 1)² with newest-vertex bisection.
//!
//! Local numbering: local edge `i` of a triangle is the edge opposite local
//! vertex `i`, running from vertex `(i + 1) % 3` to vertex `(i + 2) % 3`.
//! Triangles are stored counterclockwise, so that direction is also the
//! counterclockwise tangent and its right-hand normal points outward.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Endpoints, lower vertex index first. This is also the global
    /// orientation used for edge parametrizations.
    pub vertices: [usize; 2],
    /// Adjacent triangles, lower index first.
    pub triangles: [Option<usize>; 2],
    /// Present exactly for boundary edges.
    pub tag: Option<BoundaryTag>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles[1].is_none()
    }
}

/// An immutable conforming triangulation.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    subdomain: Vec<usize>,
    refinement_edge: Vec<u8>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    edge_index: HashMap<(usize, usize), usize>,
    areas: Vec<f64>,
    diameters: Vec<f64>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn signed_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn dist(p: Point, q: Point) -> f64 {
    (q[0] - p[0]).hypot(q[1] - p[1])
}

/// Quadrant index 1..4 of a point strictly inside a quadrant.
pub fn quadrant_of(p: Point) -> usize {
    match (p[0] > 0.0, p[1] > 0.0) {
        (true, true) => 1,
        (false, true) => 2,
        (false, false) => 3,
        (true, false) => 4,
    }
}

/// Local index of the longest edge; ties go to the edge whose opposite
/// vertex has the smallest global index.
fn longest_edge(vertices: &[Point], tri: [usize; 3]) -> u8 {
    let mut best = 0usize;
    let mut best_len = f64::NEG_INFINITY;
    for i in 0..3 {
        let len = dist(vertices[tri[(i + 1) % 3]], vertices[tri[(i + 2) % 3]]);
        if len > best_len || (len == best_len && tri[i] < tri[best]) {
            best = i;
            best_len = len;
        }
    }
    best as u8
}

impl Mesh {
    /// Builds the edge structure. `tag_of` is called for every boundary edge
    /// with its two endpoint indices.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        subdomain: Vec<usize>,
        refinement_edge: Vec<u8>,
        mut tag_of: impl FnMut(usize, usize) -> BoundaryTag,
    ) -> Self {
        assert_eq!(triangles.len(), subdomain.len());
        assert_eq!(triangles.len(), refinement_edge.len());
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 3 / 2 + 8);
        let mut edge_index = HashMap::with_capacity(triangles.len() * 3 / 2 + 8);
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for (i, slot) in te.iter_mut().enumerate() {
                let k = key(tri[(i + 1) % 3], tri[(i + 2) % 3]);
                let e = *edge_index.entry(k).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [k.0, k.1],
                        triangles: [None, None],
                        tag: None,
                    });
                    edges.len() - 1
                });
                let adj = &mut edges[e].triangles;
                if adj[0].is_none() {
                    adj[0] = Some(t);
                } else {
                    adj[1] = Some(t);
                }
                *slot = e;
            }
            triangle_edges.push(te);
        }
        for e in edges.iter_mut() {
            if e.is_boundary() {
                e.tag = Some(tag_of(e.vertices[0], e.vertices[1]));
            }
        }
        let areas = triangles
            .iter()
            .map(|t| signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
            .collect();
        let diameters = triangles
            .iter()
            .map(|t| {
                (0..3)
                    .map(|i| dist(vertices[t[i]], vertices[t[(i + 1) % 3]]))
                    .fold(0.0, f64::max)
            })
            .collect();
        Mesh {
            vertices,
            triangles,
            subdomain,
            refinement_edge,
            edges,
            triangle_edges,
            edge_index,
            areas,
            diameters,
        }
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

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// Global edge indices of the three local edges.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&key(a, b)).copied()
    }

    pub fn subdomain(&self, t: usize) -> usize {
        self.subdomain[t]
    }

    pub fn subdomains(&self) -> &[usize] {
        &self.subdomain
    }

    pub fn refinement_edge(&self, t: usize) -> usize {
        self.refinement_edge[t] as usize
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    /// Longest edge length `h_K`.
    pub fn diameter(&self, t: usize) -> f64 {
        self.diameters[t]
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e].vertices;
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    /// Outward unit normal of local edge `i` of triangle `t`.
    pub fn outward_normal(&self, t: usize, i: usize) -> [f64; 2] {
        let tri = self.triangles[t];
        let p = self.vertices[tri[(i + 1) % 3]];
        let q = self.vertices[tri[(i + 2) % 3]];
        let len = dist(p, q);
        [(q[1] - p[1]) / len, -(q[0] - p[0]) / len]
    }

    /// Global unit normal of an edge: outward from its lower-index triangle
    /// (outward from the domain on the boundary).
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let owner = self.edges[e].triangles[0].expect("edge without triangle");
        let local = self.local_edge(owner, e);
        self.outward_normal(owner, local)
    }

    /// Local index of global edge `e` in triangle `t`.
    pub fn local_edge(&self, t: usize, e: usize) -> usize {
        self.triangle_edges[t]
            .iter()
            .position(|&x| x == e)
            .expect("edge not in triangle")
    }

    /// Orientation of local edge `i` of `t` relative to the global normal.
    pub fn edge_sign(&self, t: usize, i: usize) -> f64 {
        let e = self.triangle_edges[t][i];
        if self.edges[e].triangles[0] == Some(t) {
            1.0
        } else {
            -1.0
        }
    }

    /// +1 if local edge `i` of `t` runs in the global (lower → higher vertex)
    /// direction.
    pub fn edge_direction(&self, t: usize, i: usize) -> f64 {
        let tri = self.triangles[t];
        if tri[(i + 1) % 3] < tri[(i + 2) % 3] {
            1.0
        } else {
            -1.0
        }
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_boundary())
            .map(|(i, _)| i)
    }

    /// Returns a copy with boundary tags reassigned from edge midpoints.
    pub fn with_boundary_tags(&self, tag_at: impl Fn(Point) -> BoundaryTag) -> Mesh {
        let mut out = self.clone();
        for e in 0..out.edges.len() {
            if out.edges[e].is_boundary() {
                out.edges[e].tag = Some(tag_at(self.edge_midpoint(e)));
            }
        }
        out
    }

    /// Newest-vertex bisection of the marked triangles with conforming
    /// closure. Each marked triangle is bisected at least once across its
    /// refinement edge.
    pub fn bisect(&self, marked: &[usize]) -> Mesh {
        let mut split = vec![false; self.edges.len()];
        let mut queue = VecDeque::new();
        for &t in marked {
            let e = self.triangle_edges[t][self.refinement_edge(t)];
            if !split[e] {
                split[e] = true;
                queue.push_back(e);
            }
        }
        if queue.is_empty() {
            return self.clone();
        }
        // closure: a triangle with any split edge must split its refinement edge
        while let Some(e) = queue.pop_front() {
            for t in self.edges[e].triangles.iter().flatten() {
                let r = self.triangle_edges[*t][self.refinement_edge(*t)];
                if !split[r] {
                    split[r] = true;
                    queue.push_back(r);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut parent_edge: HashMap<usize, usize> = HashMap::new();
        for (e, _) in split.iter().enumerate().filter(|(_, s)| **s) {
            let [a, b] = self.edges[e].vertices;
            let (p, q) = (self.vertices[a], self.vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            let m = vertices.len() - 1;
            midpoint.insert((a, b), m);
            parent_edge.insert(m, e);
        }

        let mut triangles = Vec::with_capacity(self.triangles.len() + 4 * marked.len());
        let mut subdomain = Vec::with_capacity(triangles.capacity());
        let mut refinement = Vec::with_capacity(triangles.capacity());
        for t in 0..self.triangles.len() {
            split_triangle(
                self.triangles[t],
                self.refinement_edge[t],
                &midpoint,
                &mut |tri, r| {
                    triangles.push(tri);
                    refinement.push(r);
                    subdomain.push(self.subdomain[t]);
                },
            );
        }

        let n_old = self.vertices.len();
        Mesh::from_parts(vertices, triangles, subdomain, refinement, |a, b| {
            if let Some(e) = self.find_edge(a, b) {
                return self.edges[e].tag.expect("boundary edge without tag");
            }
            let m = if a >= n_old { a } else { b };
            let parent = parent_edge[&m];
            self.edges[parent].tag.expect("boundary edge without tag")
        })
    }

    /// Checks every structural invariant. Returns the list of violations.
    pub fn audit(&self) -> Vec<String> {
        let mut issues = Vec::new();
        for t in 0..self.n_triangles() {
            if !(self.areas[t] > 0.0) {
                issues.push(format!("triangle {t} has area {}", self.areas[t]));
            }
            let tri = self.triangles[t];
            let xs: Vec<f64> = tri.iter().map(|&v| self.vertices[v][0]).collect();
            let ys: Vec<f64> = tri.iter().map(|&v| self.vertices[v][1]).collect();
            let straddles = |c: &[f64]| c.iter().any(|&x| x > 0.0) && c.iter().any(|&x| x < 0.0);
            if straddles(&xs) || straddles(&ys) {
                issues.push(format!("triangle {t} straddles an axis"));
            }
            let longest = (0..3)
                .map(|i| dist(self.vertices[tri[i]], self.vertices[tri[(i + 1) % 3]]))
                .fold(0.0, f64::max);
            if longest != self.diameters[t] {
                issues.push(format!("triangle {t} has stale diameter"));
            }
            if self.refinement_edge[t] > 2 {
                issues.push(format!("triangle {t} has refinement edge out of range"));
            }
        }
        let on_boundary = |p: Point| p[0].abs() == 1.0 || p[1].abs() == 1.0;
        for (i, e) in self.edges.iter().enumerate() {
            let [a, b] = e.vertices;
            let (p, q) = (self.vertices[a], self.vertices[b]);
            let geometric_boundary = (p[0] == q[0] && p[0].abs() == 1.0)
                || (p[1] == q[1] && p[1].abs() == 1.0);
            if e.is_boundary() != geometric_boundary {
                issues.push(format!(
                    "edge {i} ({a},{b}) has {} adjacent triangles but boundary = {geometric_boundary}",
                    e.triangles.iter().flatten().count()
                ));
            }
            if e.is_boundary() && (!on_boundary(p) || !on_boundary(q)) {
                issues.push(format!("edge {i} is a hanging boundary edge"));
            }
            if e.is_boundary() != e.tag.is_some() {
                issues.push(format!("edge {i} tag does not match boundary status"));
            }
        }
        let total: f64 = self.areas.iter().sum();
        if (total - 4.0).abs() > 1e-12 {
            issues.push(format!("total area {total} differs from 4"));
        }
        issues
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.n_triangles() {
            let c = self.corners(t);
            for i in 0..3 {
                let p = c[i];
                let u = [c[(i + 1) % 3][0] - p[0], c[(i + 1) % 3][1] - p[1]];
                let v = [c[(i + 2) % 3][0] - p[0], c[(i + 2) % 3][1] - p[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                best = best.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
        best
    }

    /// Legacy ASCII VTK unstructured grid with the subdomain id and, when
    /// given, one scalar per element.
    pub fn write_vtk<W: Write>(&self, mut w: W, indicators: Option<&[f64]>) -> std::io::Result<()> {
        let nt = self.n_triangles();
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "augmix mesh")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.n_vertices())?;
        for p in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} 0", p[0], p[1])?;
        }
        writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(w, "5")?;
        }
        writeln!(w, "CELL_DATA {nt}")?;
        writeln!(w, "SCALARS subdomain_id int 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for s in &self.subdomain {
            writeln!(w, "{s}")?;
        }
        if let Some(eta) = indicators {
            writeln!(w, "SCALARS indicator double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in eta {
                writeln!(w, "{v:.17e}")?;
            }
        }
        Ok(())
    }
}

fn split_triangle(
    tri: [usize; 3],
    r: u8,
    midpoint: &HashMap<(usize, usize), usize>,
    emit: &mut impl FnMut([usize; 3], u8),
) {
    let r = r as usize;
    let p = tri[r];
    let a = tri[(r + 1) % 3];
    let b = tri[(r + 2) % 3];
    match midpoint.get(&key(a, b)) {
        None => emit(tri, r as u8),
        Some(&m) => {
            // children (p, a, m) and (p, m, b); the new vertex m is opposite
            // each child's refinement edge
            split_triangle([p, a, m], 2, midpoint, emit);
            split_triangle([p, m, b], 1, midpoint, emit);
        }
    }
}

/// Uniform mesh of (2n)×(2n) squares, each cut by the diagonal that points
/// away from the origin, so the coordinate axes are resolved by edges and
/// every diagonal is the refinement edge of both its triangles.
pub fn initial_square_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "initial mesh needs n >= 1");
    let m = 2 * n;
    let coord = |i: usize| -1.0 + i as f64 / n as f64;
    let mut vertices = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            vertices.push([coord(i), coord(j)]);
        }
    }
    let id = |i: usize, j: usize| j * (m + 1) + i;
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            let cx = coord(i) + 0.5 / n as f64;
            let cy = coord(j) + 0.5 / n as f64;
            if cx * cy > 0.0 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    let subdomain = triangles
        .iter()
        .map(|t| {
            let c = [
                (vertices[t[0]][0] + vertices[t[1]][0] + vertices[t[2]][0]) / 3.0,
                (vertices[t[0]][1] + vertices[t[1]][1] + vertices[t[2]][1]) / 3.0,
            ];
            quadrant_of(c)
        })
        .collect();
    let refinement = triangles.iter().map(|&t| longest_edge(&vertices, t)).collect();
    Mesh::from_parts(vertices, triangles, subdomain, refinement, |_, _| BoundaryTag::Dirichlet)
}

/// Applies `levels` rounds of bisection to every element.
pub fn uniform_refine(mesh: &Mesh, levels: usize) -> Mesh {
    let mut m = mesh.clone();
    for _ in 0..levels {
        let all: Vec<usize> = (0..m.n_triangles()).collect();
        m = m.bisect(&all);
    }
    m
}
