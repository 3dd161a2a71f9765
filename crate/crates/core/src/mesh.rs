//! Conforming triangulations with newest-vertex bisection.
//!
//! Every triangle stores its vertices counter-clockwise with the newest
//! vertex first, so the refinement edge is always the edge opposite local
//! vertex 0. Local edge `i` joins local vertices `i+1` and `i+2` (mod 3).

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `(-0.5, 0.5)^2`
    Square,
    /// `(-0.5, 0.5)^2 \ [0, 0.5]^2`
    LShape,
}

impl Domain {
    pub fn area(self) -> f64 {
        match self {
            Domain::Square => 1.0,
            Domain::LShape => 0.75,
        }
    }

    /// Whether `p` lies in the closed domain (tolerance `tol`).
    pub fn contains(self, p: Point, tol: f64) -> bool {
        let in_box = p[0] >= -0.5 - tol && p[0] <= 0.5 + tol && p[1] >= -0.5 - tol && p[1] <= 0.5 + tol;
        match self {
            Domain::Square => in_box,
            Domain::LShape => in_box && !(p[0] > tol && p[1] > tol),
        }
    }

    /// Whether `p` lies on the boundary of the domain (tolerance `tol`).
    pub fn on_boundary(self, p: Point, tol: f64) -> bool {
        if !self.contains(p, tol) {
            return false;
        }
        let outer = (p[0].abs() - 0.5).abs() <= tol || (p[1].abs() - 0.5).abs() <= tol;
        match self {
            Domain::Square => outer,
            Domain::LShape => {
                outer
                    || (p[0].abs() <= tol && p[1] >= -tol)
                    || (p[1].abs() <= tol && p[0] >= -tol)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    /// Counter-clockwise, newest vertex first.
    pub vertices: [usize; 3],
    /// Triangle of the previous mesh this one descends from.
    pub parent: Option<usize>,
    /// Number of bisections separating this triangle from the initial mesh.
    pub generation: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    /// Adjacent triangles; `triangles[0]` has the lower id.
    pub triangles: [usize; 2],
    pub boundary: bool,
}

impl Edge {
    /// Adjacent triangles (one on the boundary, two otherwise).
    pub fn adjacent(&self) -> &[usize] {
        if self.boundary {
            &self.triangles[..1]
        } else {
            &self.triangles[..]
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Domain,
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    tri_edges: Vec<[usize; 3]>,
    vertex_edge_ptr: Vec<usize>,
    vertex_edge_idx: Vec<usize>,
    boundary_vertex: Vec<bool>,
}

impl Mesh {
    /// Coarse mesh of the given domain: a grid of squares of side 1/4, each
    /// split along its south-west to north-east diagonal.
    pub fn build_initial(domain: Domain) -> Mesh {
        let n = 4;
        let step = 1.0 / n as f64;
        let keep_square = |i: usize, j: usize| match domain {
            Domain::Square => true,
            Domain::LShape => !(i >= n / 2 && j >= n / 2),
        };
        let mut index = vec![usize::MAX; (n + 1) * (n + 1)];
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let used = [(i, j), (i.wrapping_sub(1), j), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j.wrapping_sub(1))]
                    .iter()
                    .any(|&(a, b)| a < n && b < n && keep_square(a, b));
                if used {
                    index[j * (n + 1) + i] = vertices.len();
                    vertices.push([-0.5 + i as f64 * step, -0.5 + j as f64 * step]);
                }
            }
        }
        let id = |i: usize, j: usize| index[j * (n + 1) + i];
        let mut triangles = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if !keep_square(i, j) {
                    continue;
                }
                let (p00, p10, p01, p11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
                for v in [[p10, p11, p00], [p01, p00, p11]] {
                    triangles.push(Triangle {
                        vertices: v,
                        parent: None,
                        generation: 0,
                    });
                }
            }
        }
        Mesh::from_parts(domain, vertices, triangles)
    }

    /// Mesh from explicit connectivity. Each triangle must be listed
    /// counter-clockwise with its newest vertex first.
    pub fn from_triangles(domain: Domain, vertices: Vec<Point>, triangles: &[[usize; 3]]) -> Result<Mesh> {
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(Error::InvalidId {
                        kind: "vertex",
                        id: v,
                        len: vertices.len(),
                    });
                }
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            if area <= 0.0 {
                return Err(Error::Dimension(format!("triangle {t} is not counter-clockwise")));
            }
        }
        let triangles = triangles
            .iter()
            .map(|&v| Triangle {
                vertices: v,
                parent: None,
                generation: 0,
            })
            .collect();
        Ok(Mesh::from_parts(domain, vertices, triangles))
    }

    fn from_parts(domain: Domain, vertices: Vec<Point>, triangles: Vec<Triangle>) -> Mesh {
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges: Vec<Edge> = Vec::with_capacity(triangles.len() * 2);
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for (i, slot) in te.iter_mut().enumerate() {
                let a = tri.vertices[(i + 1) % 3];
                let b = tri.vertices[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        triangles: [t, usize::MAX],
                        boundary: true,
                    });
                    edges.len() - 1
                });
                if edges[e].triangles[0] != t {
                    edges[e].triangles[1] = t;
                    edges[e].boundary = false;
                }
                *slot = e;
            }
            tri_edges.push(te);
        }
        let nv = vertices.len();
        let mut boundary_vertex = vec![false; nv];
        let mut count = vec![0usize; nv + 1];
        for e in &edges {
            count[e.vertices[0] + 1] += 1;
            count[e.vertices[1] + 1] += 1;
            if e.boundary {
                boundary_vertex[e.vertices[0]] = true;
                boundary_vertex[e.vertices[1]] = true;
            }
        }
        for v in 0..nv {
            count[v + 1] += count[v];
        }
        let vertex_edge_ptr = count.clone();
        let mut fill = count;
        let mut vertex_edge_idx = vec![0; vertex_edge_ptr[nv]];
        for (e, edge) in edges.iter().enumerate() {
            for &v in &edge.vertices {
                vertex_edge_idx[fill[v]] = e;
                fill[v] += 1;
            }
        }
        Mesh {
            domain,
            vertices,
            triangles,
            edges,
            tri_edges,
            vertex_edge_ptr,
            vertex_edge_idx,
            boundary_vertex,
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge ids of triangle `t`; entry `i` is opposite local vertex `i`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.tri_edges[t]
    }

    /// Edge bisected when `t` is refined.
    pub fn refinement_edge(&self, t: usize) -> usize {
        self.tri_edges[t][0]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let v = self.triangles[t].vertices;
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    }

    /// Diameter of triangle `t` (its longest edge).
    pub fn h(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn h_max(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.h(t)).fold(0.0, f64::max)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    /// Unit normal of edge `e` pointing from `triangles[0]` into
    /// `triangles[1]`; outward on the boundary.
    pub fn unit_normal(&self, e: usize) -> Point {
        let edge = &self.edges[e];
        let a = self.vertices[edge.vertices[0]];
        let b = self.vertices[edge.vertices[1]];
        let len = dist(a, b);
        let mut n = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
        let t0 = &self.triangles[edge.triangles[0]];
        let opposite = t0
            .vertices
            .iter()
            .copied()
            .find(|v| !edge.vertices.contains(v))
            .expect("triangle has a vertex off the edge");
        let o = self.vertices[opposite];
        if (o[0] - a[0]) * n[0] + (o[1] - a[1]) * n[1] > 0.0 {
            n = [-n[0], -n[1]];
        }
        n
    }

    /// Edges incident to vertex `v`.
    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edge_idx[self.vertex_edge_ptr[v]..self.vertex_edge_ptr[v + 1]]
    }

    /// All edges with at least one endpoint among the vertices of `t`.
    pub fn edge_star(&self, t: usize) -> Vec<usize> {
        let mut star: Vec<usize> = self.triangles[t]
            .vertices
            .iter()
            .flat_map(|&v| self.vertex_edges(v).iter().copied())
            .collect();
        star.sort_unstable();
        star.dedup();
        star
    }

    /// Triangle across local edge `i` of `t`, if any.
    pub fn neighbor(&self, t: usize, i: usize) -> Option<usize> {
        let edge = &self.edges[self.tri_edges[t][i]];
        if edge.boundary {
            None
        } else if edge.triangles[0] == t {
            Some(edge.triangles[1])
        } else {
            Some(edge.triangles[0])
        }
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Finds a triangle containing `p`, walking from `hint` and falling back
    /// to a linear scan.
    pub fn locate(&self, p: Point, hint: Option<usize>) -> Option<usize> {
        const TOL: f64 = 1e-12;
        let nt = self.num_triangles();
        if nt == 0 {
            return None;
        }
        let mut t = hint.filter(|&h| h < nt).unwrap_or(0);
        for _ in 0..(4 * (nt as f64).sqrt() as usize + 16) {
            let l = self.barycentric(t, p);
            let (imin, lmin) = l
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
            if lmin >= -TOL {
                return Some(t);
            }
            match self.neighbor(t, imin) {
                Some(next) => t = next,
                None => break,
            }
        }
        (0..nt).find(|&t| self.barycentric(t, p).iter().all(|&l| l >= -TOL))
    }

    /// Newest-vertex bisection of the marked triangles and edges followed by
    /// the conformity closure.
    pub fn refine(&self, marked_triangles: &[usize], marked_edges: &[usize]) -> Result<Mesh> {
        let nt = self.num_triangles();
        let ne = self.num_edges();
        let mut marked = vec![false; ne];
        let mut stack = Vec::new();
        for &t in marked_triangles {
            if t >= nt {
                return Err(Error::InvalidId { kind: "triangle", id: t, len: nt });
            }
            let r = self.refinement_edge(t);
            if !marked[r] {
                marked[r] = true;
                stack.push(r);
            }
        }
        for &e in marked_edges {
            if e >= ne {
                return Err(Error::InvalidId { kind: "edge", id: e, len: ne });
            }
            if !marked[e] {
                marked[e] = true;
                stack.push(e);
            }
        }
        let limit = nt * 64;
        let mut splits = stack.len();
        while let Some(e) = stack.pop() {
            for &t in self.edges[e].adjacent() {
                let r = self.refinement_edge(t);
                if !marked[r] {
                    marked[r] = true;
                    splits += 1;
                    if splits > limit {
                        return Err(Error::ClosureOverflow { limit });
                    }
                    stack.push(r);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint = vec![usize::MAX; ne];
        for (e, edge) in self.edges.iter().enumerate() {
            if marked[e] {
                let a = self.vertices[edge.vertices[0]];
                let b = self.vertices[edge.vertices[1]];
                midpoint[e] = vertices.len();
                vertices.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            }
        }

        let mut triangles = Vec::with_capacity(nt + 2 * splits);
        for (t, tri) in self.triangles.iter().enumerate() {
            let te = self.tri_edges[t];
            let g = tri.generation;
            let child = |vertices: [usize; 3], generation: u32| Triangle {
                vertices,
                parent: Some(t),
                generation,
            };
            if !marked[te[0]] {
                triangles.push(child(tri.vertices, g));
                continue;
            }
            let [a, b, c] = tri.vertices;
            let m = midpoint[te[0]];
            // Children (m, a, b) and (m, c, a); their refinement edges are
            // the old edges ab (local 2) and ca (local 1).
            for (kid, old_edge) in [([m, a, b], te[2]), ([m, c, a], te[1])] {
                if marked[old_edge] {
                    let w = midpoint[old_edge];
                    let [x, y, z] = kid;
                    triangles.push(child([w, x, y], g + 2));
                    triangles.push(child([w, z, x], g + 2));
                } else {
                    triangles.push(child(kid, g + 1));
                }
            }
        }
        Ok(Mesh::from_parts(self.domain, vertices, triangles))
    }

    /// Splits every triangle into four similar children (two bisection
    /// sweeps), halving every element diameter.
    pub fn uniform_refine(&self) -> Mesh {
        let all: Vec<usize> = (0..self.num_edges()).collect();
        self.refine(&[], &all)
            .expect("marking every edge never overflows the closure")
    }

    /// Ratio of circumscribed to inscribed diameter of triangle `t`.
    pub fn shape_ratio(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        let (la, lb, lc) = (dist(b, c), dist(c, a), dist(a, b));
        let area = self.signed_area(t);
        let circ = la * lb * lc / (4.0 * area);
        let inr = 2.0 * area / (la + lb + lc);
        circ / inr
    }

    /// Smallest interior angle of triangle `t` in radians.
    pub fn min_angle(&self, t: usize) -> f64 {
        let p = self.triangle_points(t);
        (0..3)
            .map(|i| {
                let o = p[i];
                let u = [p[(i + 1) % 3][0] - o[0], p[(i + 1) % 3][1] - o[1]];
                let v = [p[(i + 2) % 3][0] - o[0], p[(i + 2) % 3][1] - o[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (dist(p[(i + 1) % 3], o) * dist(p[(i + 2) % 3], o));
                cos.clamp(-1.0, 1.0).acos()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks positivity, edge adjacency, boundary placement and area
    /// conservation. A hanging node would leave an interior segment with a
    /// single adjacent triangle, which the boundary test rejects.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut area = 0.0;
        for t in 0..self.num_triangles() {
            let a = self.signed_area(t);
            if a <= 0.0 {
                return Err(format!("triangle {t} has non-positive area {a}"));
            }
            area += a;
        }
        if (area - self.domain.area()).abs() > 1e-12 {
            return Err(format!("total area {area} differs from the domain area"));
        }
        let mut count = vec![0usize; self.num_edges()];
        for te in &self.tri_edges {
            for &e in te {
                count[e] += 1;
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            let expected = if edge.boundary { 1 } else { 2 };
            if count[e] != expected {
                return Err(format!("edge {e} has {} adjacent triangles", count[e]));
            }
            if edge.boundary {
                let a = self.vertices[edge.vertices[0]];
                let b = self.vertices[edge.vertices[1]];
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                if !self.domain.on_boundary(mid, 1e-12) {
                    return Err(format!("edge {e} is a boundary edge inside the domain (hanging node)"));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump: a `vertices N triangles M` header, `N` lines `x y`,
    /// then `M` lines `i j k`.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "vertices {} triangles {}", self.num_vertices(), self.num_triangles())?;
        for p in &self.vertices {
            writeln!(out, "{} {}", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t.vertices[0], t.vertices[1], t.vertices[2])?;
        }
        Ok(())
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
