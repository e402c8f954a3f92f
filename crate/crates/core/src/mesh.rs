//! Conforming triangular meshes and piecewise-linear (P1) nodal fields.
//!
//! The disk builder produces a quasi-uniform triangulation of the disk of
//! radius `1/sqrt(pi)` (unit area) from concentric rings of nodes, zipped
//! together ring by ring. Meshes for other polygonal domains can be loaded
//! from the plain-text format below.
//!
//! Text format: a header line `nodes M triangles T`, then `M` lines
//! `x y boundary_flag`, then `T` lines `i j k` with 0-based node indices.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Identity token binding fields to the mesh they were built on.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct MeshId(u64);

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

impl MeshId {
    fn fresh() -> Self {
        MeshId(NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed))
    }
}

/// Radius of the unit-area disk.
pub fn unit_disk_radius() -> f64 {
    (1.0 / std::f64::consts::PI).sqrt()
}

#[derive(Clone, Debug)]
pub struct TriangularMesh {
    id: MeshId,
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    interior_nodes: Vec<usize>,
    on_boundary: Vec<bool>,
    locator: GridLocator,
}

impl TriangularMesh {
    /// Quasi-uniform triangulation of the unit-area disk with roughly
    /// `target_node_count` nodes (guaranteed within 25% for targets >= 3).
    ///
    /// Boundary nodes are placed exactly on the circle. The summed triangle
    /// area approaches 1 as the boundary polygon refines; it is within 1% of
    /// 1 for targets of roughly 100 nodes and above (a 3-node mesh is a
    /// single inscribed triangle and cannot capture the disk area).
    pub fn build_disk(target_node_count: usize) -> Result<Self> {
        if target_node_count < 3 {
            return Err(Error::InvalidArgument(format!(
                "disk mesh needs at least 3 nodes, got {target_node_count}"
            )));
        }
        let r = unit_disk_radius();
        let mut nodes: Vec<Point> = Vec::new();
        let mut tris: Vec<[usize; 3]> = Vec::new();

        if target_node_count == 3 {
            for j in 0..3 {
                let th = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * j as f64 / 3.0;
                nodes.push([r * th.cos(), r * th.sin()]);
            }
            tris.push([0, 1, 2]);
            return Self::from_parts(nodes, tris);
        }
        if target_node_count <= 6 {
            // centre + small boundary fan
            nodes.push([0.0, 0.0]);
            let m = target_node_count - 1;
            for j in 0..m {
                let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                nodes.push([r * th.cos(), r * th.sin()]);
            }
            for j in 0..m {
                tris.push([0, 1 + j, 1 + (j + 1) % m]);
            }
            return Self::from_parts(nodes, tris);
        }

        // Solve 1 + 3 s n (n+1) = target for the ring count n at density s=1,
        // then fine-tune s so the node total lands on the target.
        let t = (target_node_count - 1) as f64;
        let n0 = 0.5 * (-1.0 + (1.0 + 4.0 * t / 3.0).sqrt());
        let n_rings = (n0.round() as usize).max(2);
        let s = (t / (3.0 * n_rings as f64 * (n_rings as f64 + 1.0))).clamp(0.5, 1.7);

        nodes.push([0.0, 0.0]);
        let mut ring_start = vec![0usize; n_rings + 1];
        let mut ring_size = vec![0usize; n_rings + 1];
        let mut ring_offset = vec![0.0f64; n_rings + 1];
        for k in 1..=n_rings {
            let m = ((6.0 * k as f64 * s).round() as usize).max(3);
            let off = if k % 2 == 0 { 0.5 } else { 0.0 };
            ring_start[k] = nodes.len();
            ring_size[k] = m;
            ring_offset[k] = off;
            let rk = r * k as f64 / n_rings as f64;
            for j in 0..m {
                let th = 2.0 * std::f64::consts::PI * (j as f64 + off) / m as f64;
                nodes.push([rk * th.cos(), rk * th.sin()]);
            }
        }

        // centre fan
        let (s1, m1) = (ring_start[1], ring_size[1]);
        for j in 0..m1 {
            tris.push([0, s1 + j, s1 + (j + 1) % m1]);
        }
        // zip consecutive rings
        for k in 2..=n_rings {
            zip_annulus(
                &mut tris,
                ring_start[k - 1],
                ring_size[k - 1],
                ring_offset[k - 1],
                ring_start[k],
                ring_size[k],
                ring_offset[k],
            );
        }
        Self::from_parts(nodes, tris)
    }

    /// Assemble a mesh from raw nodes and triangles. Triangles with negative
    /// signed area are reoriented; degenerate triangles are rejected. The
    /// boundary is derived from edge topology (an edge on exactly one
    /// triangle is a boundary edge).
    pub fn from_parts(nodes: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> Result<Self> {
        if nodes.len() < 3 || triangles.is_empty() {
            return Err(Error::InvalidMesh(
                "need at least 3 nodes and 1 triangle".into(),
            ));
        }
        for (i, p) in nodes.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidMesh(format!("node {i} is not finite")));
            }
        }
        let scale = bbox_diameter(&nodes);
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nodes.len() {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} references node {v} out of range"
                    )));
                }
            }
            let a = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if a < 0.0 {
                tri.swap(1, 2);
            } else if a.abs() < 1e-14 * scale * scale {
                return Err(Error::InvalidMesh(format!("triangle {t} is degenerate")));
            }
        }

        let mut on_boundary = vec![false; nodes.len()];
        let mut edge_count = std::collections::HashMap::new();
        for tri in &triangles {
            for e in 0..3 {
                let (u, v) = (tri[e], tri[(e + 1) % 3]);
                let key = (u.min(v), u.max(v));
                *edge_count.entry(key).or_insert(0usize) += 1;
            }
        }
        for (&(u, v), &c) in &edge_count {
            if c > 2 {
                return Err(Error::InvalidMesh(format!(
                    "edge ({u},{v}) is shared by {c} triangles"
                )));
            }
            if c == 1 {
                on_boundary[u] = true;
                on_boundary[v] = true;
            }
        }
        let boundary_nodes: Vec<usize> = (0..nodes.len()).filter(|&i| on_boundary[i]).collect();
        let interior_nodes: Vec<usize> = (0..nodes.len()).filter(|&i| !on_boundary[i]).collect();

        let locator = GridLocator::build(&nodes, &triangles);
        Ok(TriangularMesh {
            id: MeshId::fresh(),
            nodes,
            triangles,
            boundary_nodes,
            interior_nodes,
            on_boundary,
            locator,
        })
    }

    pub fn id(&self) -> MeshId {
        self.id
    }

    /// Node count `M`.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.on_boundary[node]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn triangle_centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        [
            (self.nodes[a][0] + self.nodes[b][0] + self.nodes[c][0]) / 3.0,
            (self.nodes[a][1] + self.nodes[b][1] + self.nodes[c][1]) / 3.0,
        ]
    }

    /// Total meshed area (sum of signed triangle areas).
    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Largest triangle edge length.
    pub fn max_diameter(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for e in 0..3 {
                let p = self.nodes[tri[e]];
                let q = self.nodes[tri[(e + 1) % 3]];
                h = h.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
            }
        }
        h
    }

    /// Find the triangle containing `p` and its barycentric coordinates.
    /// Returns `None` for points outside the meshed domain. Points within
    /// ~1e-10 of an edge may resolve to either adjacent triangle.
    pub fn locate_point(&self, p: Point) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-10;
        for &t in self.locator.candidates(p) {
            let [a, b, c] = self.triangles[t];
            let w = barycentric(self.nodes[a], self.nodes[b], self.nodes[c], p);
            if w[0] >= -TOL && w[1] >= -TOL && w[2] >= -TOL {
                return Some((t, w));
            }
        }
        None
    }

    /// Check the structural invariants. Intended for loaded meshes and tests;
    /// meshes produced by the builders satisfy these by construction.
    pub fn validate(&self) -> Result<()> {
        let scale = bbox_diameter(&self.nodes);
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) <= 1e-14 * scale * scale {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has non-positive area"
                )));
            }
        }
        let mut seen = vec![false; self.node_count()];
        for &i in self.boundary_nodes.iter().chain(self.interior_nodes.iter()) {
            if seen[i] {
                return Err(Error::InvalidMesh(format!(
                    "node {i} appears in both index sets"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidMesh(
                "boundary/interior sets do not cover all nodes".into(),
            ));
        }
        Ok(())
    }

    /// Write the plain-text mesh format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "nodes {} triangles {}",
            self.node_count(),
            self.triangles.len()
        )?;
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(
                out,
                "{} {} {}",
                p[0],
                p[1],
                if self.on_boundary[i] { 1 } else { 0 }
            )?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    /// Load the plain-text mesh format. Boundary flags in the file must agree
    /// with the boundary derived from edge topology.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let parse =
            |line: usize, msg: String| Error::Parse { path: name.clone(), line, msg };
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines().enumerate();

        let (ln, header) = lines
            .next()
            .ok_or_else(|| parse(1, "empty file".into()))?;
        let header = header?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "nodes" || h[2] != "triangles" {
            return Err(parse(ln + 1, format!("bad header: {header}")));
        }
        let m: usize = h[1].parse().map_err(|_| parse(ln + 1, "bad node count".into()))?;
        let t: usize = h[3]
            .parse()
            .map_err(|_| parse(ln + 1, "bad triangle count".into()))?;

        let mut nodes = Vec::with_capacity(m);
        let mut flags = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| parse(0, "unexpected end of file in node block".into()))?;
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse(ln + 1, format!("expected `x y flag`, got: {line}")));
            }
            let x: f64 = f[0].parse().map_err(|_| parse(ln + 1, "bad x".into()))?;
            let y: f64 = f[1].parse().map_err(|_| parse(ln + 1, "bad y".into()))?;
            let b: u8 = f[2].parse().map_err(|_| parse(ln + 1, "bad flag".into()))?;
            nodes.push([x, y]);
            flags.push(b != 0);
        }
        let mut tris = Vec::with_capacity(t);
        for _ in 0..t {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| parse(0, "unexpected end of file in triangle block".into()))?;
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse(ln + 1, format!("expected `i j k`, got: {line}")));
            }
            let mut tri = [0usize; 3];
            for (slot, tok) in tri.iter_mut().zip(f) {
                *slot = tok.parse().map_err(|_| parse(ln + 1, "bad index".into()))?;
            }
            tris.push(tri);
        }
        let mesh = Self::from_parts(nodes, tris)?;
        for (i, &flag) in flags.iter().enumerate() {
            if flag != mesh.on_boundary[i] {
                return Err(Error::InvalidMesh(format!(
                    "boundary flag of node {i} disagrees with edge topology"
                )));
            }
        }
        Ok(mesh)
    }
}

/// Triangulate the annulus between two node rings by walking both rings in
/// angular order and always advancing the pointer with the smaller next angle.
#[allow(clippy::too_many_arguments)]
fn zip_annulus(
    tris: &mut Vec<[usize; 3]>,
    in_start: usize,
    m_in: usize,
    in_off: f64,
    out_start: usize,
    m_out: usize,
    out_off: f64,
) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let a_in = |i: usize| two_pi * (i as f64 + in_off) / m_in as f64;
    let a_out = |o: usize| two_pi * (o as f64 + out_off) / m_out as f64;
    let (mut i, mut o) = (0usize, 0usize);
    while i < m_in || o < m_out {
        let advance_inner = if o == m_out {
            true
        } else if i == m_in {
            false
        } else {
            a_in(i + 1) <= a_out(o + 1)
        };
        if advance_inner {
            tris.push([
                in_start + i % m_in,
                out_start + o % m_out,
                in_start + (i + 1) % m_in,
            ]);
            i += 1;
        } else {
            tris.push([
                in_start + i % m_in,
                out_start + o % m_out,
                out_start + (o + 1) % m_out,
            ]);
            o += 1;
        }
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn bbox_diameter(nodes: &[Point]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in nodes {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
}

/// Barycentric coordinates of `p` in the (counter-clockwise) triangle `abc`.
pub fn barycentric(a: Point, b: Point, c: Point, p: Point) -> [f64; 3] {
    let d = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let wa = ((b[0] - p[0]) * (c[1] - p[1]) - (c[0] - p[0]) * (b[1] - p[1])) / d;
    let wb = ((c[0] - p[0]) * (a[1] - p[1]) - (a[0] - p[0]) * (c[1] - p[1])) / d;
    let wc = ((a[0] - p[0]) * (b[1] - p[1]) - (b[0] - p[0]) * (a[1] - p[1])) / d;
    [wa, wb, wc]
}

/// Uniform-grid spatial hash over triangle bounding boxes.
#[derive(Clone, Debug)]
struct GridLocator {
    x0: f64,
    y0: f64,
    inv_dx: f64,
    inv_dy: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl GridLocator {
    fn build(nodes: &[Point], triangles: &[[usize; 3]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let margin = 1e-9 * bbox_diameter(nodes).max(1e-300);
        lo[0] -= margin;
        lo[1] -= margin;
        hi[0] += margin;
        hi[1] += margin;
        let n = ((triangles.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 512);
        let (nx, ny) = (n, n);
        let inv_dx = nx as f64 / (hi[0] - lo[0]);
        let inv_dy = ny as f64 / (hi[1] - lo[1]);
        let mut cells = vec![Vec::new(); nx * ny];
        for (t, tri) in triangles.iter().enumerate() {
            let (mut bx0, mut by0) = (f64::INFINITY, f64::INFINITY);
            let (mut bx1, mut by1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for &v in tri {
                bx0 = bx0.min(nodes[v][0]);
                by0 = by0.min(nodes[v][1]);
                bx1 = bx1.max(nodes[v][0]);
                by1 = by1.max(nodes[v][1]);
            }
            let ix0 = (((bx0 - margin - lo[0]) * inv_dx) as usize).min(nx - 1);
            let ix1 = (((bx1 + margin - lo[0]) * inv_dx) as usize).min(nx - 1);
            let iy0 = (((by0 - margin - lo[1]) * inv_dy) as usize).min(ny - 1);
            let iy1 = (((by1 + margin - lo[1]) * inv_dy) as usize).min(ny - 1);
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    cells[iy * nx + ix].push(t as u32);
                }
            }
        }
        GridLocator { x0: lo[0], y0: lo[1], inv_dx, inv_dy, nx, ny, cells }
    }

    fn candidates(&self, p: Point) -> impl Iterator<Item = &u32> {
        let fx = (p[0] - self.x0) * self.inv_dx;
        let fy = (p[1] - self.y0) * self.inv_dy;
        let inside = fx >= 0.0 && fy >= 0.0 && fx < self.nx as f64 && fy < self.ny as f64;
        let idx = if inside {
            (fy as usize) * self.nx + fx as usize
        } else {
            0
        };
        let slice: &[u32] = if inside { &self.cells[idx] } else { &[] };
        slice.iter()
    }
}

/// Coefficient vector over mesh nodes, interpreted as a piecewise-linear
/// function via barycentric interpolation.
#[derive(Clone, Debug)]
pub struct NodalField {
    values: Vec<f64>,
    mesh_id: MeshId,
}

impl NodalField {
    pub fn new(mesh: &TriangularMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::FieldLength { len: values.len(), nodes: mesh.node_count() });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField { node });
        }
        Ok(NodalField { values, mesh_id: mesh.id() })
    }

    pub fn constant(mesh: &TriangularMesh, c: f64) -> Self {
        NodalField { values: vec![c; mesh.node_count()], mesh_id: mesh.id() }
    }

    pub fn from_fn(mesh: &TriangularMesh, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = mesh.nodes().iter().map(|p| f(p[0], p[1])).collect();
        Self::new(mesh, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh_id
    }

    pub fn check_binding(&self, mesh: &TriangularMesh) -> Result<()> {
        if self.mesh_id != mesh.id() {
            return Err(Error::MeshMismatch { mesh: mesh.id(), field: self.mesh_id });
        }
        Ok(())
    }

    /// P1 interpolation at `p`: the barycentric-weighted combination of the
    /// three vertex values of the containing triangle.
    pub fn interpolate(&self, mesh: &TriangularMesh, p: Point) -> Result<f64> {
        self.check_binding(mesh)?;
        let (t, w) = mesh
            .locate_point(p)
            .ok_or(Error::OutsideDomain { index: 0, x: p[0], y: p[1] })?;
        let [a, b, c] = mesh.triangles()[t];
        Ok(w[0] * self.values[a] + w[1] * self.values[b] + w[2] * self.values[c])
    }

    /// One value per line, node order.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>, mesh: &TriangularMesh) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        let mut values = Vec::new();
        for (ln, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let s = line.trim();
            if s.is_empty() {
                continue;
            }
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: ln + 1,
                msg: format!("bad value: {s}"),
            })?;
            values.push(v);
        }
        Self::new(mesh, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rejects_tiny_target() {
        assert!(TriangularMesh::build_disk(2).is_err());
    }

    #[test]
    fn minimal_mesh_is_one_boundary_triangle() {
        let mesh = TriangularMesh::build_disk(3).unwrap();
        assert_eq!(mesh.node_count(), 3);
        assert_eq!(mesh.triangles().len(), 1);
        assert_eq!(mesh.boundary_nodes().len(), 3);
        let r = unit_disk_radius();
        for p in mesh.nodes() {
            let radius = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert_relative_eq!(radius, r, max_relative = 1e-12);
        }
    }

    #[test]
    fn disk_node_count_near_target() {
        for target in [50, 200, 500, 1981, 4000] {
            let mesh = TriangularMesh::build_disk(target).unwrap();
            let m = mesh.node_count() as f64;
            assert!(
                (m - target as f64).abs() <= 0.25 * target as f64,
                "target {target}, got {m}"
            );
            mesh.validate().unwrap();
        }
    }

    #[test]
    fn disk_area_within_one_percent() {
        for target in [120, 500, 1981] {
            let mesh = TriangularMesh::build_disk(target).unwrap();
            assert!(
                (mesh.area() - 1.0).abs() < 0.01,
                "target {target}: area {}",
                mesh.area()
            );
        }
    }

    #[test]
    fn boundary_nodes_exactly_on_circle() {
        let mesh = TriangularMesh::build_disk(1981).unwrap();
        let r = unit_disk_radius();
        for &i in mesh.boundary_nodes() {
            let p = mesh.node(i);
            let radius = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((radius - r).abs() / r < 1e-12);
        }
        // interior nodes strictly inside
        for &i in mesh.interior_nodes() {
            let p = mesh.node(i);
            assert!((p[0] * p[0] + p[1] * p[1]).sqrt() < r * (1.0 - 1e-9) + 1e-12);
        }
    }

    #[test]
    fn refinement_shrinks_diameter() {
        let mut prev = TriangularMesh::build_disk(250).unwrap().max_diameter();
        for target in [500, 1000, 2000] {
            let h = TriangularMesh::build_disk(target).unwrap().max_diameter();
            let factor = prev / h;
            assert!(
                (1.2..=2.0).contains(&factor),
                "target {target}: diameter factor {factor}"
            );
            prev = h;
        }
    }

    #[test]
    fn locate_node_and_centroid() {
        let mesh = TriangularMesh::build_disk(500).unwrap();
        // a mesh node resolves with weight ~1 on itself
        let z = mesh.node(17);
        let (t, w) = mesh.locate_point(z).unwrap();
        let tri = mesh.triangles()[t];
        let local = tri.iter().position(|&v| v == 17).unwrap();
        assert_relative_eq!(w[local], 1.0, epsilon = 1e-9);
        // a centroid resolves to its own triangle with equal weights
        let c = mesh.triangle_centroid(42);
        let (t, w) = mesh.locate_point(c).unwrap();
        assert_eq!(t, 42);
        for wi in w {
            assert_relative_eq!(wi, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn locate_far_exterior_point_is_none() {
        let mesh = TriangularMesh::build_disk(100).unwrap();
        assert!(mesh.locate_point([10.0, 10.0]).is_none());
    }

    #[test]
    fn interpolation_reproduces_constants_and_affine() {
        let mesh = TriangularMesh::build_disk(800).unwrap();
        let c = NodalField::constant(&mesh, 3.25);
        let lin = NodalField::from_fn(&mesh, |x, _| x).unwrap();
        for p in [[0.0, 0.0], [0.1, 0.2], [-0.3, 0.05], [0.21, -0.17]] {
            assert_relative_eq!(c.interpolate(&mesh, p).unwrap(), 3.25, epsilon = 1e-12);
            assert_relative_eq!(lin.interpolate(&mesh, p).unwrap(), p[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn interpolation_quadratic_accuracy() {
        let mesh = TriangularMesh::build_disk(2000).unwrap();
        let f = NodalField::from_fn(&mesh, |x, y| x * x + y * y).unwrap();
        let got = f.interpolate(&mesh, [0.1, 0.1]).unwrap();
        assert!((got - 0.02).abs() < 1e-3, "got {got}");
    }

    #[test]
    fn interpolation_outside_domain_errors() {
        let mesh = TriangularMesh::build_disk(100).unwrap();
        let f = NodalField::constant(&mesh, 1.0);
        assert!(matches!(
            f.interpolate(&mesh, [1.0, 1.0]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn field_binding_and_length_checked() {
        let mesh_a = TriangularMesh::build_disk(100).unwrap();
        let mesh_b = TriangularMesh::build_disk(100).unwrap();
        let f = NodalField::constant(&mesh_a, 1.0);
        assert!(f.check_binding(&mesh_b).is_err());
        assert!(NodalField::new(&mesh_a, vec![0.0; 3]).is_err());
        assert!(NodalField::new(&mesh_a, vec![f64::NAN; mesh_a.node_count()]).is_err());
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = std::env::temp_dir().join("darcy_bayes_mesh_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("disk.txt");
        let mesh = TriangularMesh::build_disk(300).unwrap();
        mesh.save(&path).unwrap();
        let loaded = TriangularMesh::load(&path).unwrap();
        assert_eq!(loaded.node_count(), mesh.node_count());
        assert_eq!(loaded.triangles().len(), mesh.triangles().len());
        assert_eq!(loaded.boundary_nodes(), mesh.boundary_nodes());
        assert_relative_eq!(loaded.area(), mesh.area(), max_relative = 1e-14);
        loaded.validate().unwrap();
    }

    proptest! {
        // Partition of unity: barycentric weights of located interior points
        // are nonnegative (up to tolerance) and sum to 1.
        #[test]
        fn located_weights_partition_unity(r in 0.0f64..0.95, th in 0.0f64..(2.0*std::f64::consts::PI)) {
            let mesh = TriangularMesh::build_disk(400).unwrap();
            let rr = r * unit_disk_radius();
            let p = [rr * th.cos(), rr * th.sin()];
            let (_, w) = mesh.locate_point(p).unwrap();
            prop_assert!(w.iter().all(|&wi| wi >= -1e-10));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        // Affine reproduction at arbitrary interior points.
        #[test]
        fn p1_reproduces_affine(r in 0.0f64..0.95, th in 0.0f64..(2.0*std::f64::consts::PI),
                                a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            let mesh = TriangularMesh::build_disk(350).unwrap();
            let rr = r * unit_disk_radius();
            let p = [rr * th.cos(), rr * th.sin()];
            let f = NodalField::from_fn(&mesh, |x, y| a * x + b * y + c).unwrap();
            let want = a * p[0] + b * p[1] + c;
            let got = f.interpolate(&mesh, p).unwrap();
            prop_assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }
}
