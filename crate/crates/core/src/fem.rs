//! P1 finite-element discretisation of the Dirichlet problem
//! `div(f grad u) = s` on the meshed domain with `u = 0` on the boundary,
//! and evaluation of the solution at arbitrary points.
//!
//! The diffusivity is sampled at triangle centroids (one-point quadrature,
//! second-order consistent for P1), Dirichlet conditions are imposed by
//! restricting rows and columns to interior nodes, and the interior system is
//! solved by an envelope Cholesky factorization with a conjugate-gradient
//! fallback.

use crate::error::{Error, Result};
use crate::mesh::{NodalField, Point, TriangularMesh};
use crate::sparse::{
    norm2, pcg_jacobi, reverse_cuthill_mckee, SkylineCholesky, SparseSpdMatrix,
};

/// Relative residual accepted from the linear solver.
pub const SOLVER_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ForwardSolution {
    /// Solution values; exactly 0 at boundary nodes.
    pub u: NodalField,
    /// The diffusivity the system was assembled with.
    pub f_used: NodalField,
    /// Absolute residual norm of the interior system.
    pub residual_norm: f64,
    /// Norm of the interior load vector (0 means a zero load).
    pub load_norm: f64,
}

/// Per-triangle geometry: `area * (grad psi_a . grad psi_b)` for the six
/// lower-triangle pairs (0,0), (1,0), (1,1), (2,0), (2,1), (2,2).
fn local_stiffness(p: [Point; 3]) -> ([f64; 6], f64) {
    let area = 0.5
        * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    let grads = [
        [p[1][1] - p[2][1], p[2][0] - p[1][0]],
        [p[2][1] - p[0][1], p[0][0] - p[2][0]],
        [p[0][1] - p[1][1], p[1][0] - p[0][0]],
    ];
    let c = 1.0 / (4.0 * area);
    let g = |a: usize, b: usize| c * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
    (
        [g(0, 0), g(1, 0), g(1, 1), g(2, 0), g(2, 1), g(2, 2)],
        area,
    )
}

const LOCAL_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2)];

fn check_diffusivity(mesh: &TriangularMesh, f: &NodalField) -> Result<()> {
    f.check_binding(mesh)?;
    for (node, &v) in f.values().iter().enumerate() {
        if v <= 0.0 {
            return Err(Error::NonPositiveDiffusivity { node, value: v });
        }
    }
    Ok(())
}

/// Stiffness matrix restricted to interior nodes (Dirichlet elimination).
/// Equation `e` corresponds to `mesh.interior_nodes()[e]`.
pub fn assemble_stiffness(mesh: &TriangularMesh, f: &NodalField) -> Result<SparseSpdMatrix> {
    check_diffusivity(mesh, f)?;
    let mut eq = vec![None; mesh.node_count()];
    for (e, &node) in mesh.interior_nodes().iter().enumerate() {
        eq[node] = Some(e);
    }
    Ok(assemble_stiffness_with(mesh, f, &eq, mesh.interior_nodes().len()))
}

/// Stiffness matrix over all nodes, no boundary treatment. Row sums vanish
/// because constants lie in the kernel of the weak form.
pub fn assemble_stiffness_full(mesh: &TriangularMesh, f: &NodalField) -> Result<SparseSpdMatrix> {
    check_diffusivity(mesh, f)?;
    let eq: Vec<Option<usize>> = (0..mesh.node_count()).map(Some).collect();
    Ok(assemble_stiffness_with(mesh, f, &eq, mesh.node_count()))
}

fn assemble_stiffness_with(
    mesh: &TriangularMesh,
    f: &NodalField,
    eq: &[Option<usize>],
    n_eq: usize,
) -> SparseSpdMatrix {
    let fv = f.values();
    let mut trips = Vec::with_capacity(mesh.triangles().len() * 6);
    for tri in mesh.triangles() {
        let pts = [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])];
        let (g, _) = local_stiffness(pts);
        let fc = (fv[tri[0]] + fv[tri[1]] + fv[tri[2]]) / 3.0;
        for (k, &(a, b)) in LOCAL_PAIRS.iter().enumerate() {
            if let (Some(ea), Some(eb)) = (eq[tri[a]], eq[tri[b]]) {
                trips.push((ea, eb, fc * g[k]));
            }
        }
    }
    SparseSpdMatrix::from_triplets(n_eq, trips)
}

/// Load vector over all nodes: entry `i` is `sum_t s(c_t) |t| / 3` over
/// triangles incident to node `i` (centroid quadrature).
pub fn assemble_load(mesh: &TriangularMesh, s: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; mesh.node_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let c = mesh.triangle_centroid(t);
        let w = s(c[0], c[1]) * mesh.triangle_area(t) / 3.0;
        for &v in tri {
            b[v] += w;
        }
    }
    b
}

/// Consistent mass matrix restricted to interior nodes.
pub fn assemble_mass(mesh: &TriangularMesh) -> SparseSpdMatrix {
    let mut eq = vec![None; mesh.node_count()];
    for (e, &node) in mesh.interior_nodes().iter().enumerate() {
        eq[node] = Some(e);
    }
    assemble_mass_with(mesh, &eq, mesh.interior_nodes().len())
}

/// Consistent mass matrix over all nodes.
pub fn assemble_mass_full(mesh: &TriangularMesh) -> SparseSpdMatrix {
    let eq: Vec<Option<usize>> = (0..mesh.node_count()).map(Some).collect();
    assemble_mass_with(mesh, &eq, mesh.node_count())
}

fn assemble_mass_with(mesh: &TriangularMesh, eq: &[Option<usize>], n_eq: usize) -> SparseSpdMatrix {
    let mut trips = Vec::with_capacity(mesh.triangles().len() * 6);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        for &(a, b) in LOCAL_PAIRS.iter() {
            if let (Some(ea), Some(eb)) = (eq[tri[a]], eq[tri[b]]) {
                let m = if a == b { area / 6.0 } else { area / 12.0 };
                trips.push((ea, eb, m));
            }
        }
    }
    SparseSpdMatrix::from_triplets(n_eq, trips)
}

/// Mass-matrix quadratic form `sqrt(v^T M v)` over all nodes, i.e. the L2
/// norm of the piecewise-linear function with nodal values `v`.
pub fn l2_norm_full(mesh: &TriangularMesh, v: &[f64]) -> f64 {
    let m = assemble_mass_full(mesh);
    let mut mv = vec![0.0; v.len()];
    m.matvec(v, &mut mv);
    crate::sparse::dot(v, &mv).max(0.0).sqrt()
}

/// Reusable forward solver bound to one mesh. Construction precomputes the
/// interior numbering (reverse Cuthill-McKee), triangle geometry, the sparse
/// pattern, and the assembly scatter map; each `solve` call is pure.
pub struct ForwardSolver {
    mesh_id: crate::mesh::MeshId,
    n_eq: usize,
    eq_to_node: Vec<usize>,
    node_to_eq: Vec<Option<usize>>,
    tri_nodes: Vec<[usize; 3]>,
    tri_geo: Vec<[f64; 6]>,
    tri_area: Vec<f64>,
    tri_centroid: Vec<Point>,
    slots: Vec<[usize; 6]>,
    pattern: SparseSpdMatrix,
}

const NO_SLOT: usize = usize::MAX;

impl ForwardSolver {
    pub fn new(mesh: &TriangularMesh) -> Self {
        let interior = mesh.interior_nodes();
        let n_eq = interior.len();

        // interior adjacency for the ordering
        let mut int_pos = vec![None; mesh.node_count()];
        for (k, &node) in interior.iter().enumerate() {
            int_pos[node] = Some(k);
        }
        let mut adj = vec![Vec::new(); n_eq];
        for tri in mesh.triangles() {
            for a in 0..3 {
                for b in 0..a {
                    if let (Some(pa), Some(pb)) = (int_pos[tri[a]], int_pos[tri[b]]) {
                        adj[pa].push(pb);
                        adj[pb].push(pa);
                    }
                }
            }
        }
        for l in adj.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        let perm = reverse_cuthill_mckee(&adj); // new -> old interior position
        let eq_to_node: Vec<usize> = perm.iter().map(|&p| interior[p]).collect();
        let mut node_to_eq = vec![None; mesh.node_count()];
        for (e, &node) in eq_to_node.iter().enumerate() {
            node_to_eq[node] = Some(e);
        }

        let mut tri_nodes = Vec::with_capacity(mesh.triangles().len());
        let mut tri_geo = Vec::with_capacity(mesh.triangles().len());
        let mut tri_area = Vec::with_capacity(mesh.triangles().len());
        let mut tri_centroid = Vec::with_capacity(mesh.triangles().len());
        let mut pairs = Vec::new();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let pts = [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])];
            let (g, area) = local_stiffness(pts);
            tri_nodes.push(*tri);
            tri_geo.push(g);
            tri_area.push(area);
            tri_centroid.push(mesh.triangle_centroid(t));
            for &(a, b) in LOCAL_PAIRS.iter() {
                if let (Some(ea), Some(eb)) = (node_to_eq[tri[a]], node_to_eq[tri[b]]) {
                    pairs.push((ea, eb, 0.0));
                }
            }
        }
        let pattern = SparseSpdMatrix::from_triplets(n_eq, pairs);
        let slots: Vec<[usize; 6]> = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let mut s = [NO_SLOT; 6];
                for (k, &(a, b)) in LOCAL_PAIRS.iter().enumerate() {
                    if let (Some(ea), Some(eb)) = (node_to_eq[tri[a]], node_to_eq[tri[b]]) {
                        s[k] = pattern.index_of(ea.max(eb), ea.min(eb)).unwrap();
                    }
                }
                s
            })
            .collect();

        ForwardSolver {
            mesh_id: mesh.id(),
            n_eq,
            eq_to_node,
            node_to_eq,
            tri_nodes,
            tri_geo,
            tri_area,
            tri_centroid,
            slots,
            pattern,
        }
    }

    pub fn mesh_id(&self) -> crate::mesh::MeshId {
        self.mesh_id
    }

    /// Solve `div(f grad u) = s`, `u = 0` on the boundary.
    pub fn solve(
        &self,
        mesh: &TriangularMesh,
        f: &NodalField,
        s: impl Fn(f64, f64) -> f64,
    ) -> Result<ForwardSolution> {
        if mesh.id() != self.mesh_id {
            return Err(Error::MeshMismatch { mesh: self.mesh_id, field: mesh.id() });
        }
        check_diffusivity(mesh, f)?;
        let fv = f.values();

        let mut k = self.pattern.clone();
        let mut b = vec![0.0; self.n_eq];
        {
            let vals = unsafe {
                // values are edited through precomputed slot indices
                std::slice::from_raw_parts_mut(
                    k.row(0).1.as_ptr() as *mut f64,
                    k.nnz(),
                )
            };
            let _ = &vals;
            for t in 0..self.tri_nodes.len() {
                let tri = self.tri_nodes[t];
                let fc = (fv[tri[0]] + fv[tri[1]] + fv[tri[2]]) / 3.0;
                let g = &self.tri_geo[t];
                let slots = &self.slots[t];
                for k6 in 0..6 {
                    if slots[k6] != NO_SLOT {
                        vals[slots[k6]] += fc * g[k6];
                    }
                }
                let c = self.tri_centroid[t];
                let w = s(c[0], c[1]) * self.tri_area[t] / 3.0;
                for &v in &tri {
                    if let Some(e) = self.node_to_eq[v] {
                        b[e] += w;
                    }
                }
            }
        }

        let load_norm = norm2(&b);
        let mut u_full = vec![0.0; mesh.node_count()];
        if self.n_eq == 0 || load_norm == 0.0 {
            let u = NodalField::new(mesh, u_full)?;
            return Ok(ForwardSolution { u, f_used: f.clone(), residual_norm: 0.0, load_norm });
        }

        let x = match SkylineCholesky::factor(&k) {
            Ok(chol) => chol.solve(&b),
            Err(_) => pcg_jacobi(&k, &b, SOLVER_TOL, 20 * self.n_eq)?.0,
        };
        let mut r = vec![0.0; self.n_eq];
        k.matvec(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&b) {
            *ri -= bi;
        }
        let residual_norm = norm2(&r);
        if residual_norm / load_norm > SOLVER_TOL {
            return Err(Error::SolverDiverged {
                iterations: 0,
                residual: residual_norm / load_norm,
            });
        }

        for (e, &node) in self.eq_to_node.iter().enumerate() {
            u_full[node] = x[e];
        }
        let u = NodalField::new(mesh, u_full)?;
        Ok(ForwardSolution { u, f_used: f.clone(), residual_norm, load_norm })
    }
}

/// One-shot forward solve; builds a [`ForwardSolver`] internally. Use the
/// struct directly when solving repeatedly on the same mesh.
pub fn solve_forward(
    mesh: &TriangularMesh,
    f: &NodalField,
    s: impl Fn(f64, f64) -> f64,
) -> Result<ForwardSolution> {
    ForwardSolver::new(mesh).solve(mesh, f, s)
}

/// P1 interpolation of the solution at each point, in input order. An
/// outside-domain point is reported with its index.
pub fn evaluate_solution(
    mesh: &TriangularMesh,
    sol: &ForwardSolution,
    points: &[Point],
) -> Result<Vec<f64>> {
    sol.u.check_binding(mesh)?;
    let uv = sol.u.values();
    let mut out = Vec::with_capacity(points.len());
    for (index, &p) in points.iter().enumerate() {
        let (t, w) = mesh
            .locate_point(p)
            .ok_or(Error::OutsideDomain { index, x: p[0], y: p[1] })?;
        let [a, b, c] = mesh.triangles()[t];
        out.push(w[0] * uv[a] + w[1] * uv[b] + w[2] * uv[c]);
    }
    Ok(out)
}
