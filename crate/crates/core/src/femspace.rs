//! H(div) × H¹ conforming space pairs: RT0 × P1 and BDM1 × P2.
//!
//! Global numbering puts flux dofs first:
//!
//! * RT0: dof `e` is `∫_e τ·n_e ds` for the global edge normal `n_e`.
//! * BDM1: dofs `2e` and `2e + 1` are the moments of `τ·n_e` against
//!   `1` and `2s - 1`, with `s ∈ [0, 1]` running from the lower to the
//!   higher vertex index of the edge.
//! * P1: one dof per vertex. P2: vertices, then edge midpoints at
//!   `n_vertices + e`.
//!
//! Element bases are built directly in physical coordinates from
//! barycentric coordinates, which keeps them well scaled on very small
//! elements.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::dense_solve;
use crate::mesh::{BoundaryTag, Mesh};
use crate::quad::{gauss_legendre, to_physical};
use crate::{Error, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Rt0P1,
    Bdm1P2,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Rt0P1 => "rt0-p1",
            Family::Bdm1P2 => "bdm1-p2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rt0-p1" | "rt0" => Ok(Family::Rt0P1),
            "bdm1-p2" | "bdm1" => Ok(Family::Bdm1P2),
            other => Err(Error::Config(format!("unknown space pair '{other}' (expected rt0-p1 or bdm1-p2)"))),
        }
    }

    /// Polynomial degree of the potential space.
    pub fn degree(self) -> usize {
        match self {
            Family::Rt0P1 => 1,
            Family::Bdm1P2 => 2,
        }
    }

    pub fn flux_per_element(self) -> usize {
        match self {
            Family::Rt0P1 => 3,
            Family::Bdm1P2 => 6,
        }
    }

    pub fn potential_per_element(self) -> usize {
        match self {
            Family::Rt0P1 => 3,
            Family::Bdm1P2 => 6,
        }
    }

    /// Quadrature degree that integrates every bilinear-form integrand
    /// exactly for piecewise-constant α.
    pub fn assembly_degree(self) -> usize {
        2 * self.degree() + 1
    }
}

#[derive(Clone, Debug)]
pub struct SpacePair {
    mesh: Arc<Mesh>,
    family: Family,
    n_flux: usize,
    n_potential: usize,
    flux_essential: Vec<usize>,
    potential_essential: Vec<usize>,
    /// One triangle touching each vertex, for subdomain-aware evaluation.
    vertex_owner: Vec<usize>,
}

/// Values of all local basis functions at one point.
#[derive(Clone, Copy, Debug, Default)]
pub struct BasisValues {
    pub flux: [[f64; 2]; 6],
    pub div: [f64; 6],
    pub potential: [f64; 6],
    pub grad: [[f64; 2]; 6],
}

/// Geometry and dof data of one element, with signs folded into the basis.
#[derive(Clone, Debug)]
pub struct ElementBasis {
    pub family: Family,
    pub element: usize,
    pub corners: [Point; 3],
    pub area: f64,
    pub grad_lambda: [[f64; 2]; 3],
    pub flux_dofs: [usize; 6],
    pub potential_dofs: [usize; 6],
    pub nf: usize,
    pub np: usize,
    /// RT0: per-edge sign. BDM1: coefficient matrix over λ_j e_k, columns
    /// indexed by local dof, signs included.
    flux_sign: [f64; 3],
    bdm: [[f64; 6]; 6],
}

impl ElementBasis {
    pub fn eval(&self, l: &[f64; 3]) -> BasisValues {
        let mut out = BasisValues::default();
        let g = &self.grad_lambda;
        match self.family {
            Family::Rt0P1 => {
                let x = to_physical(&self.corners, l);
                for i in 0..3 {
                    let c = self.flux_sign[i] / (2.0 * self.area);
                    let p = self.corners[i];
                    out.flux[i] = [c * (x[0] - p[0]), c * (x[1] - p[1])];
                    out.div[i] = self.flux_sign[i] / self.area;
                    out.potential[i] = l[i];
                    out.grad[i] = g[i];
                }
            }
            Family::Bdm1P2 => {
                for m in 0..6 {
                    let c = &self.bdm;
                    let mut v = [0.0; 2];
                    let mut d = 0.0;
                    for j in 0..3 {
                        for k in 0..2 {
                            let coef = c[2 * j + k][m];
                            v[k] += coef * l[j];
                            d += coef * g[j][k];
                        }
                    }
                    out.flux[m] = v;
                    out.div[m] = d;
                }
                for j in 0..3 {
                    out.potential[j] = l[j] * (2.0 * l[j] - 1.0);
                    let s = 4.0 * l[j] - 1.0;
                    out.grad[j] = [s * g[j][0], s * g[j][1]];
                }
                for i in 0..3 {
                    let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                    out.potential[3 + i] = 4.0 * l[a] * l[b];
                    out.grad[3 + i] = [
                        4.0 * (l[a] * g[b][0] + l[b] * g[a][0]),
                        4.0 * (l[a] * g[b][1] + l[b] * g[a][1]),
                    ];
                }
            }
        }
        out
    }
}

pub fn grad_lambda(c: &[Point; 3], area: f64) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for (j, gj) in g.iter_mut().enumerate() {
        let p = c[(j + 1) % 3];
        let q = c[(j + 2) % 3];
        *gj = [(p[1] - q[1]) / (2.0 * area), (q[0] - p[0]) / (2.0 * area)];
    }
    g
}

/// Moments `∫_{e_i} λ_j n_k ds` and `∫_{e_i} λ_j n_k (2s - 1) ds` with `s`
/// running along local edge `i` from local vertex `i+1` to `i+2`.
fn bdm_reference_matrix(c: &[Point; 3]) -> [[f64; 6]; 6] {
    let mut m = [[0.0; 6]; 6];
    for i in 0..3 {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        let (p, q) = (c[a], c[b]);
        // |e| n = rotated edge vector
        let ln = [q[1] - p[1], -(q[0] - p[0])];
        for k in 0..2 {
            // λ_a = 1 - s, λ_b = s on the edge
            m[2 * i][2 * a + k] = 0.5 * ln[k];
            m[2 * i][2 * b + k] = 0.5 * ln[k];
            m[2 * i + 1][2 * a + k] = -ln[k] / 6.0;
            m[2 * i + 1][2 * b + k] = ln[k] / 6.0;
        }
    }
    m
}

impl SpacePair {
    pub fn new(mesh: Arc<Mesh>, family: Family) -> Self {
        let (n_flux, n_potential) = match family {
            Family::Rt0P1 => (mesh.n_edges(), mesh.n_vertices()),
            Family::Bdm1P2 => (2 * mesh.n_edges(), mesh.n_vertices() + mesh.n_edges()),
        };
        let mut flux_essential = Vec::new();
        let mut dirichlet_vertices = vec![false; mesh.n_vertices()];
        let mut potential_essential = Vec::new();
        for e in mesh.boundary_edges() {
            match mesh.edge(e).tag {
                Some(BoundaryTag::Neumann) => match family {
                    Family::Rt0P1 => flux_essential.push(e),
                    Family::Bdm1P2 => flux_essential.extend([2 * e, 2 * e + 1]),
                },
                Some(BoundaryTag::Dirichlet) => {
                    for v in mesh.edge(e).vertices {
                        dirichlet_vertices[v] = true;
                    }
                    if family == Family::Bdm1P2 {
                        potential_essential.push(mesh.n_vertices() + e);
                    }
                }
                None => unreachable!("boundary edge without tag"),
            }
        }
        potential_essential.extend(dirichlet_vertices.iter().enumerate().filter(|(_, d)| **d).map(|(v, _)| v));
        potential_essential.sort_unstable();
        let mut vertex_owner = vec![usize::MAX; mesh.n_vertices()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for &v in tri {
                if vertex_owner[v] == usize::MAX {
                    vertex_owner[v] = t;
                }
            }
        }
        Self {
            mesh,
            family,
            n_flux,
            n_potential,
            flux_essential,
            potential_essential,
            vertex_owner,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn n_flux(&self) -> usize {
        self.n_flux
    }

    pub fn n_potential(&self) -> usize {
        self.n_potential
    }

    pub fn n_dofs(&self) -> usize {
        self.n_flux + self.n_potential
    }

    /// Neumann flux dofs (flux-local numbering).
    pub fn flux_essential(&self) -> &[usize] {
        &self.flux_essential
    }

    /// Dirichlet potential dofs (potential-local numbering).
    pub fn potential_essential(&self) -> &[usize] {
        &self.potential_essential
    }

    pub fn element(&self, t: usize) -> ElementBasis {
        let mesh = &*self.mesh;
        let corners = mesh.corners(t);
        let area = mesh.area(t);
        let gl = grad_lambda(&corners, area);
        let te = mesh.triangle_edges(t);
        let tri = mesh.triangle(t);
        let mut flux_dofs = [0usize; 6];
        let mut potential_dofs = [0usize; 6];
        let mut flux_sign = [1.0; 3];
        let mut bdm = [[0.0; 6]; 6];
        let (nf, np) = (self.family.flux_per_element(), self.family.potential_per_element());
        match self.family {
            Family::Rt0P1 => {
                for i in 0..3 {
                    flux_dofs[i] = te[i];
                    flux_sign[i] = mesh.edge_sign(t, i);
                    potential_dofs[i] = tri[i];
                }
            }
            Family::Bdm1P2 => {
                let m = bdm_reference_matrix(&corners);
                let inv = invert6(&m).expect("BDM1 moment matrix is invertible on a nondegenerate triangle");
                for i in 0..3 {
                    let s = mesh.edge_sign(t, i);
                    let d = mesh.edge_direction(t, i);
                    flux_dofs[2 * i] = 2 * te[i];
                    flux_dofs[2 * i + 1] = 2 * te[i] + 1;
                    for (r, row) in bdm.iter_mut().enumerate() {
                        row[2 * i] = s * inv[r][2 * i];
                        row[2 * i + 1] = s * d * inv[r][2 * i + 1];
                    }
                    potential_dofs[i] = tri[i];
                    potential_dofs[3 + i] = mesh.n_vertices() + te[i];
                }
            }
        }
        ElementBasis {
            family: self.family,
            element: t,
            corners,
            area,
            grad_lambda: gl,
            flux_dofs,
            potential_dofs,
            nf,
            np,
            flux_sign,
            bdm,
        }
    }

    /// Basis values at a reference point given in barycentric coordinates.
    pub fn eval_basis(&self, t: usize, l: &[f64; 3]) -> BasisValues {
        self.element(t).eval(l)
    }

    /// Nodal interpolation of a potential; `u` receives the subdomain of an
    /// adjacent element and the point.
    pub fn interpolate_potential(&self, u: impl Fn(usize, Point) -> f64) -> Vec<f64> {
        let mesh = &*self.mesh;
        let mut out = vec![0.0; self.n_potential];
        for v in 0..mesh.n_vertices() {
            out[v] = u(mesh.subdomain(self.vertex_owner[v]), mesh.vertex(v));
        }
        if self.family == Family::Bdm1P2 {
            for e in 0..mesh.n_edges() {
                let t = mesh.edge(e).triangles[0].unwrap();
                out[mesh.n_vertices() + e] = u(mesh.subdomain(t), mesh.edge_midpoint(e));
            }
        }
        out
    }

    /// Edge-moment values of a flux field on edge `e`, using the subdomain
    /// of the lower-index adjacent element.
    pub fn flux_moments(&self, e: usize, sigma: &impl Fn(usize, Point) -> [f64; 2]) -> [f64; 2] {
        let mesh = &*self.mesh;
        let edge = mesh.edge(e);
        let sub = mesh.subdomain(edge.triangles[0].unwrap());
        let (p, q) = (mesh.vertex(edge.vertices[0]), mesh.vertex(edge.vertices[1]));
        let n = mesh.edge_normal(e);
        let len = mesh.edge_length(e);
        let (xs, ws) = gauss_legendre(8);
        let mut m = [0.0; 2];
        for (s, w) in xs.iter().zip(&ws) {
            let x = [p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])];
            let v = sigma(sub, x);
            let fl = v[0] * n[0] + v[1] * n[1];
            m[0] += w * len * fl;
            m[1] += w * len * fl * (2.0 * s - 1.0);
        }
        m
    }

    /// Canonical interpolation of a flux field (edge integrals for RT0,
    /// two edge moments for BDM1).
    pub fn interpolate_flux(&self, sigma: impl Fn(usize, Point) -> [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_flux];
        for e in 0..self.mesh.n_edges() {
            let m = self.flux_moments(e, &sigma);
            match self.family {
                Family::Rt0P1 => out[e] = m[0],
                Family::Bdm1P2 => {
                    out[2 * e] = m[0];
                    out[2 * e + 1] = m[1];
                }
            }
        }
        out
    }

    pub fn interpolate(
        self: &Arc<Self>,
        sigma: impl Fn(usize, Point) -> [f64; 2],
        u: impl Fn(usize, Point) -> f64,
    ) -> SolutionPair {
        SolutionPair {
            space: Arc::clone(self),
            flux: self.interpolate_flux(sigma),
            potential: self.interpolate_potential(u),
        }
    }
}

fn invert6(m: &[[f64; 6]; 6]) -> Result<[[f64; 6]; 6]> {
    let a: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
    let mut inv = [[0.0; 6]; 6];
    for c in 0..6 {
        let mut e = vec![0.0; 6];
        e[c] = 1.0;
        let x = dense_solve(a.clone(), e)?;
        for r in 0..6 {
            inv[r][c] = x[r];
        }
    }
    Ok(inv)
}

/// Discrete pair `(σ_h, u_h)` on a space.
#[derive(Clone, Debug)]
pub struct SolutionPair {
    pub space: Arc<SpacePair>,
    pub flux: Vec<f64>,
    pub potential: Vec<f64>,
}

/// Values of a discrete pair at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointValues {
    pub sigma: [f64; 2],
    pub div_sigma: f64,
    pub u: f64,
    pub grad_u: [f64; 2],
}

impl SolutionPair {
    pub fn zeros(space: Arc<SpacePair>) -> Self {
        let (nf, np) = (space.n_flux(), space.n_potential());
        Self {
            space,
            flux: vec![0.0; nf],
            potential: vec![0.0; np],
        }
    }

    /// Splits a global coefficient vector (flux dofs first).
    pub fn from_global(space: Arc<SpacePair>, x: &[f64]) -> Result<Self> {
        if x.len() != space.n_dofs() {
            return Err(Error::Dimension(format!(
                "coefficient vector has length {}, space has {} dofs",
                x.len(),
                space.n_dofs()
            )));
        }
        let nf = space.n_flux();
        Ok(Self {
            flux: x[..nf].to_vec(),
            potential: x[nf..].to_vec(),
            space,
        })
    }

    pub fn to_global(&self) -> Vec<f64> {
        self.flux.iter().chain(&self.potential).copied().collect()
    }

    pub fn eval(&self, basis: &ElementBasis, l: &[f64; 3]) -> PointValues {
        let b = basis.eval(l);
        let mut out = PointValues::default();
        for i in 0..basis.nf {
            let c = self.flux[basis.flux_dofs[i]];
            out.sigma[0] += c * b.flux[i][0];
            out.sigma[1] += c * b.flux[i][1];
            out.div_sigma += c * b.div[i];
        }
        for i in 0..basis.np {
            let c = self.potential[basis.potential_dofs[i]];
            out.u += c * b.potential[i];
            out.grad_u[0] += c * b.grad[i][0];
            out.grad_u[1] += c * b.grad[i][1];
        }
        out
    }

    pub fn eval_at(&self, t: usize, l: &[f64; 3]) -> PointValues {
        self.eval(&self.space.element(t), l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{initial_square_mesh, uniform_refine};
    use crate::quad::rule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit_square_pair() -> Mesh {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        Mesh::from_parts(v, vec![[0, 1, 2], [0, 2, 3]], vec![1, 1], vec![1, 2], |_, _| BoundaryTag::Dirichlet)
    }

    fn space(mesh: Mesh, family: Family) -> Arc<SpacePair> {
        Arc::new(SpacePair::new(Arc::new(mesh), family))
    }

    #[test]
    fn dof_counts_on_two_triangles() {
        let s = space(unit_square_pair(), Family::Rt0P1);
        assert_eq!((s.n_flux(), s.n_potential()), (5, 4));
        assert_eq!((s.potential_essential().len(), s.flux_essential().len()), (4, 0));
        let s = space(unit_square_pair(), Family::Bdm1P2);
        assert_eq!((s.n_flux(), s.n_potential()), (10, 9));
        assert_eq!((s.potential_essential().len(), s.flux_essential().len()), (8, 0));
    }

    #[test]
    fn all_neumann_boundary() {
        let mesh = unit_square_pair().with_boundary_tags(|_| BoundaryTag::Neumann);
        let nb = mesh.boundary_edges().count();
        let s = space(mesh.clone(), Family::Rt0P1);
        assert_eq!(s.flux_essential().len(), nb);
        assert!(s.potential_essential().is_empty());
        let s = space(mesh, Family::Bdm1P2);
        assert_eq!(s.flux_essential().len(), 2 * nb);
    }

    #[test]
    fn potential_partition_of_unity() {
        for family in [Family::Rt0P1, Family::Bdm1P2] {
            let s = space(initial_square_mesh(1), family);
            let el = s.element(3);
            for l in [[0.2, 0.3, 0.5], [1.0, 0.0, 0.0], [0.1, 0.8, 0.1]] {
                let b = el.eval(&l);
                let sum: f64 = b.potential[..el.np].iter().sum();
                let gsum = b.grad[..el.np].iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
                assert!((sum - 1.0).abs() < 1e-14);
                assert!(gsum[0].abs() < 1e-13 && gsum[1].abs() < 1e-13);
            }
        }
    }

    /// Normal trace of each local flux basis function on local edge `j`,
    /// measured against the global edge normal at a few edge points.
    fn normal_traces(s: &SpacePair, t: usize, j: usize) -> Vec<Vec<f64>> {
        let mesh = s.mesh();
        let el = s.element(t);
        let n = mesh.edge_normal(mesh.triangle_edges(t)[j]);
        [0.1, 0.5, 0.9]
            .iter()
            .map(|&u| {
                let mut l = [0.0; 3];
                l[(j + 1) % 3] = 1.0 - u;
                l[(j + 2) % 3] = u;
                let b = el.eval(&l);
                (0..el.nf).map(|i| b.flux[i][0] * n[0] + b.flux[i][1] * n[1]).collect()
            })
            .collect()
    }

    #[test]
    fn rt0_normal_trace_is_kronecker_over_length() {
        let s = space(initial_square_mesh(1), Family::Rt0P1);
        let mesh = s.mesh();
        for t in 0..mesh.n_triangles() {
            for j in 0..3 {
                let len = mesh.edge_length(mesh.triangle_edges(t)[j]);
                for row in normal_traces(&s, t, j) {
                    for (i, v) in row.iter().enumerate() {
                        let want = if i == j { 1.0 / len } else { 0.0 };
                        assert!((v - want).abs() < 1e-13, "t={t} i={i} j={j}: {v} vs {want}");
                    }
                }
            }
        }
    }

    #[test]
    fn rt0_divergence_matches_divergence_theorem() {
        // ∫_K div φ_i = Σ_edges ∫ φ_i·n_out = s_i (unit edge integral)
        let s = space(initial_square_mesh(1), Family::Rt0P1);
        let mesh = s.mesh();
        for t in 0..mesh.n_triangles() {
            let b = s.eval_basis(t, &[1.0 / 3.0; 3]);
            for i in 0..3 {
                let want = mesh.edge_sign(t, i) / mesh.area(t);
                assert!((b.div[i] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn bdm1_dofs_are_dual_to_basis() {
        let mesh = uniform_refine(&initial_square_mesh(1), 1);
        let s = space(mesh, Family::Bdm1P2);
        let (xs, ws) = gauss_legendre(4);
        let mesh = s.mesh();
        for t in 0..mesh.n_triangles() {
            let el = s.element(t);
            let tri = mesh.triangle(t);
            for j in 0..3 {
                let e = mesh.triangle_edges(t)[j];
                let [va, _] = mesh.edge(e).vertices;
                let n = mesh.edge_normal(e);
                let len = mesh.edge_length(e);
                for i in 0..6 {
                    let mut m = [0.0; 2];
                    for (s_, w) in xs.iter().zip(&ws) {
                        // global parameter s runs from the lower vertex va
                        let mut l = [0.0; 3];
                        let ia = tri.iter().position(|&v| v == va).unwrap();
                        let ib = 3 - j - ia;
                        l[ia] = 1.0 - s_;
                        l[ib] = *s_;
                        let f = el.eval(&l).flux[i];
                        let fl = f[0] * n[0] + f[1] * n[1];
                        m[0] += w * len * fl;
                        m[1] += w * len * fl * (2.0 * s_ - 1.0);
                    }
                    for k in 0..2 {
                        let want = if el.flux_dofs[i] == 2 * e + k { 1.0 } else { 0.0 };
                        assert!((m[k] - want).abs() < 1e-12, "t={t} i={i} edge={j} k={k}: {}", m[k]);
                    }
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_space_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for family in [Family::Rt0P1, Family::Bdm1P2] {
            let s = space(uniform_refine(&initial_square_mesh(1), 2), family);
            let flux: Vec<f64> = (0..s.n_flux()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pot: Vec<f64> = (0..s.n_potential()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = SolutionPair { space: s.clone(), flux: flux.clone(), potential: pot.clone() };
            let mesh = s.mesh();
            let got = s.interpolate_flux(|_, p| {
                let (t, l) = locate_on_edges(mesh, p);
                x.eval_at(t, &l).sigma
            });
            for (a, b) in got.iter().zip(&flux) {
                assert!((a - b).abs() < 1e-13, "{family:?}: {a} vs {b}");
            }
            let got = s.interpolate_potential(|_, p| {
                let (t, l) = locate_on_edges(mesh, p);
                x.eval_at(t, &l).u
            });
            for (a, b) in got.iter().zip(&pot) {
                assert!((a - b).abs() < 1e-13, "{family:?}: {a} vs {b}");
            }
        }
    }

    /// Finds the lower-index triangle of the edge containing `p` and its
    /// barycentric coordinates there.
    fn locate_on_edges(mesh: &Mesh, p: Point) -> (usize, [f64; 3]) {
        for e in 0..mesh.n_edges() {
            let [a, b] = mesh.edge(e).vertices;
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let s = ((p[0] - pa[0]) * d[0] + (p[1] - pa[1]) * d[1]) / len2;
            let q = [pa[0] + s * d[0], pa[1] + s * d[1]];
            if (0.0..=1.0).contains(&s) && (q[0] - p[0]).hypot(q[1] - p[1]) < 1e-14 {
                let t = mesh.edge(e).triangles[0].unwrap();
                let tri = mesh.triangle(t);
                let mut l = [0.0; 3];
                l[tri.iter().position(|&v| v == a).unwrap()] = 1.0 - s;
                l[tri.iter().position(|&v| v == b).unwrap()] = s;
                return (t, l);
            }
        }
        panic!("point {p:?} not on an edge")
    }

    #[test]
    fn constant_flux_is_reproduced_by_rt0() {
        let s = space(uniform_refine(&initial_square_mesh(1), 1), Family::Rt0P1);
        let x = s.interpolate(|_, _| [1.0, 0.0], |_, _| 0.0);
        for t in 0..s.mesh().n_triangles() {
            for l in [[0.2, 0.3, 0.5], [0.6, 0.2, 0.2]] {
                let v = x.eval_at(t, &l).sigma;
                assert!((v[0] - 1.0).abs() < 1e-13 && v[1].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rt0_commuting_property() {
        // τ = (x², xy): div τ = 3x; div(I τ) must equal the element mean 3 x̄
        let s = space(uniform_refine(&initial_square_mesh(1), 2), Family::Rt0P1);
        let x = s.interpolate(|_, p| [p[0] * p[0], p[0] * p[1]], |_, _| 0.0);
        let q = rule(4).unwrap();
        for t in 0..s.mesh().n_triangles() {
            let c = s.mesh().corners(t);
            let mean = q.integrate(&c, |p| 3.0 * p[0]) / s.mesh().area(t);
            let d = x.eval_at(t, &[1.0 / 3.0; 3]).div_sigma;
            assert!((d - mean).abs() < 1e-12, "t={t}: {d} vs {mean}");
        }
    }

    #[test]
    fn random_fluxes_are_normal_continuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mesh = initial_square_mesh(1);
        let marked: Vec<usize> = (0..mesh.n_triangles()).filter(|t| t % 3 == 0).collect();
        let mesh = mesh.bisect(&marked);
        for family in [Family::Rt0P1, Family::Bdm1P2] {
            let s = space(mesh.clone(), family);
            let flux: Vec<f64> = (0..s.n_flux()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = SolutionPair { space: s.clone(), flux, potential: vec![0.0; s.n_potential()] };
            assert_max_jump(&x, 1e-12);
        }
    }

    pub(crate) fn assert_max_jump(x: &SolutionPair, tol: f64) {
        let mesh = x.space.mesh();
        for e in 0..mesh.n_edges() {
            let edge = mesh.edge(e);
            let [Some(t0), Some(t1)] = edge.triangles else { continue };
            let n = mesh.edge_normal(e);
            let [a, b] = edge.vertices;
            for s_ in [0.0, 0.3, 0.7, 1.0] {
                let trace = |t: usize| {
                    let tri = mesh.triangle(t);
                    let mut l = [0.0; 3];
                    l[tri.iter().position(|&v| v == a).unwrap()] = 1.0 - s_;
                    l[tri.iter().position(|&v| v == b).unwrap()] = s_;
                    let v = x.eval_at(t, &l).sigma;
                    v[0] * n[0] + v[1] * n[1]
                };
                let jump = (trace(t0) - trace(t1)).abs();
                assert!(jump <= tol, "edge {e}: jump {jump}");
            }
        }
    }

    /// Interpolation errors on a uniform sequence; returns log-log slopes
    /// against h for (flux L², potential H¹-seminorm).
    fn interpolation_slopes(family: Family) -> (f64, f64) {
        let sigma = |_: usize, p: Point| [(PI * p[0]).sin() * (PI * p[1]).cos(), p[0] * p[1] * p[1]];
        let u = |_: usize, p: Point| (PI * p[0]).sin() * (PI * p[1]).sin();
        let grad = |p: Point| [PI * (PI * p[0]).cos() * (PI * p[1]).sin(), PI * (PI * p[0]).sin() * (PI * p[1]).cos()];
        let q = rule(7).unwrap();
        let mut errs = Vec::new();
        let mut mesh = uniform_refine(&initial_square_mesh(1), 2);
        for _ in 0..3 {
            let s = space(mesh.clone(), family);
            let x = s.interpolate(sigma, u);
            let (mut ef, mut eu) = (0.0, 0.0);
            for t in 0..mesh.n_triangles() {
                let el = s.element(t);
                for (l, w) in q.points.iter().zip(&q.weights) {
                    let p = to_physical(&el.corners, l);
                    let v = x.eval(&el, l);
                    let se = sigma(0, p);
                    let ge = grad(p);
                    let jac = 2.0 * el.area * w;
                    ef += jac * ((v.sigma[0] - se[0]).powi(2) + (v.sigma[1] - se[1]).powi(2));
                    eu += jac * ((v.grad_u[0] - ge[0]).powi(2) + (v.grad_u[1] - ge[1]).powi(2));
                }
            }
            let h = (0..mesh.n_triangles()).map(|t| mesh.diameter(t)).fold(0.0, f64::max);
            errs.push((h, ef.sqrt(), eu.sqrt()));
            mesh = uniform_refine(&mesh, 2);
        }
        let n = errs.len() - 1;
        let sf = (errs[n].1 / errs[n - 1].1).ln() / (errs[n].0 / errs[n - 1].0).ln();
        let su = (errs[n].2 / errs[n - 1].2).ln() / (errs[n].0 / errs[n - 1].0).ln();
        (sf, su)
    }

    #[test]
    fn interpolation_rates_lowest_order() {
        let (sf, su) = interpolation_slopes(Family::Rt0P1);
        assert!((sf - 1.0).abs() < 0.1, "RT0 slope {sf}");
        assert!((su - 1.0).abs() < 0.1, "P1 slope {su}");
    }

    #[test]
    fn interpolation_rates_second_order() {
        let (sf, su) = interpolation_slopes(Family::Bdm1P2);
        assert!((sf - 2.0).abs() < 0.1, "BDM1 slope {sf}");
        assert!((su - 2.0).abs() < 0.1, "P2 slope {su}");
    }
}
