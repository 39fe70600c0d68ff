//! Global systems for the augmented mixed and least-squares methods.
//!
//! Unknowns are `(σ_h, u_h)` with flux dofs first. For test pairs `(τ, v)`:
//!
//! ```text
//! aug:  (α⁻¹χ,τ) + (α∇w,∇v) + (∇w,τ) − (χ,∇v) + (θα⁻¹ ∇·χ, ∇·τ)
//!       = (f, τ + α∇v) + 2(g, v) + (θα⁻¹ g, ∇·τ)
//! ls:   (α⁻¹χ + ∇w, τ + α∇v) + (θα⁻¹ ∇·χ, ∇·τ)
//!       = (f, τ + α∇v) + (θα⁻¹ g, ∇·τ)
//! ```
//!
//! with `θ = 1` (`Aug1`, `Ls`) or `θ|_K = h_K²` (`Aug2`, `Hls`). The
//! symmetric augmented variant negates the `v` rows. On Neumann edges the
//! augmented forms carry `2⟨χ·n, v⟩`, which restores consistency with
//! `(g, v)` when the prescribed normal flux is nonzero; it only couples to
//! eliminated flux dofs, so it ends up in the load.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff::CoefficientField;
use crate::femspace::{ElementBasis, SolutionPair, SpacePair};
use crate::linalg::{SparseMatrix, relative_residual, solve};
use crate::mesh::BoundaryTag;
use crate::quad::{QuadRule, gauss_legendre, rule, to_physical};
use crate::{Error, Point, Result};

pub type ScalarFn = Arc<dyn Fn(usize, Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(usize, Point) -> [f64; 2] + Send + Sync>;

/// Coefficient, sources and boundary data. Every handle receives the
/// subdomain id of the element it is evaluated on, so piecewise data is
/// unambiguous on interfaces.
#[derive(Clone)]
pub struct ProblemData {
    pub coefficient: CoefficientField,
    /// Vector source in `α∇u + σ = αf`.
    pub f: VectorFn,
    /// Scalar source in `∇·σ = g`.
    pub g: ScalarFn,
    /// Potential on Γ_D.
    pub g_d: ScalarFn,
    /// A flux field whose normal component is the data on Γ_N.
    pub g_n: VectorFn,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData").field("coefficient", &self.coefficient).finish_non_exhaustive()
    }
}

impl ProblemData {
    /// Zero sources and homogeneous boundary data.
    pub fn homogeneous(coefficient: CoefficientField) -> Self {
        Self {
            coefficient,
            f: Arc::new(|_, _| [0.0, 0.0]),
            g: Arc::new(|_, _| 0.0),
            g_d: Arc::new(|_, _| 0.0),
            g_n: Arc::new(|_, _| [0.0, 0.0]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Aug1,
    Aug2,
    Ls,
    Hls,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Aug1 => "aug1",
            Method::Aug2 => "aug2",
            Method::Ls => "ls",
            Method::Hls => "hls",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "aug1" => Ok(Method::Aug1),
            "aug2" => Ok(Method::Aug2),
            "ls" => Ok(Method::Ls),
            "hls" => Ok(Method::Hls),
            other => Err(Error::Config(format!("unknown method '{other}' (expected aug1, aug2, ls or hls)"))),
        }
    }

    pub fn is_augmented(self) -> bool {
        matches!(self, Method::Aug1 | Method::Aug2)
    }

    /// True when the divergence term carries the mesh weight `h_K²`.
    pub fn mesh_weighted(self) -> bool {
        matches!(self, Method::Aug2 | Method::Hls)
    }

    /// Divergence weight θ on an element of diameter `h`.
    pub fn theta(self, h: f64) -> f64 {
        if self.mesh_weighted() { h * h } else { 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: Method,
    /// Symmetric (negated `v` rows) form; augmented methods only.
    pub symmetric: bool,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self { method, symmetric: false }
    }

    pub fn symmetric(method: Method) -> Result<Self> {
        if !method.is_augmented() {
            return Err(Error::Config(format!(
                "the symmetric variant exists for augmented methods only, not {}",
                method.label()
            )));
        }
        Ok(Self { method, symmetric: true })
    }

    /// Sign applied to potential test rows.
    fn v_sign(&self) -> f64 {
        if self.symmetric { -1.0 } else { 1.0 }
    }
}

/// A system restricted to free dofs, with the eliminated values kept.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Global index of each free unknown.
    pub free: Vec<usize>,
    /// Global index and prescribed value of each essential unknown.
    pub essential: Vec<(usize, f64)>,
    pub n_global: usize,
}

impl LinearSystem {
    /// Scatters a free solution vector into a global coefficient vector.
    pub fn expand(&self, x_free: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_global];
        for (&g, &v) in self.free.iter().zip(x_free) {
            x[g] = v;
        }
        for &(g, v) in &self.essential {
            x[g] = v;
        }
        x
    }

    /// Restricts a global coefficient vector to the free unknowns.
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&g| x[g]).collect()
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        let x = solve(&self.matrix, &self.rhs)?;
        Ok(self.expand(&x))
    }
}

/// Local matrix and load over (flux dofs, potential dofs) of one element.
/// The divergence term is kept apart from the rest of the flux block: on
/// tiny elements it exceeds the mass term by `1/|K|` and adding the two in
/// double precision would wipe out the mass contribution.
struct Local {
    dofs: [usize; 12],
    n: usize,
    nf: usize,
    a: [[f64; 12]; 12],
    div: [[f64; 6]; 6],
    b: [f64; 12],
}

fn element_system(
    el: &ElementBasis,
    q: &QuadRule,
    alpha: f64,
    theta: f64,
    sub: usize,
    data: &ProblemData,
    cfg: &MethodConfig,
) -> Local {
    let (nf, np) = (el.nf, el.np);
    let n = nf + np;
    let mut a = [[0.0; 12]; 12];
    let mut div = [[0.0; 6]; 6];
    let mut b = [0.0; 12];
    let ia = 1.0 / alpha;
    let vs = cfg.v_sign();
    let ls = !cfg.method.is_augmented();
    for (l, w) in q.points.iter().zip(&q.weights) {
        let jw = 2.0 * el.area * w;
        let bv = el.eval(l);
        let x = to_physical(&el.corners, l);
        let f = (data.f)(sub, x);
        let g = (data.g)(sub, x);
        for i in 0..nf {
            let ti = bv.flux[i];
            for j in 0..nf {
                let cj = bv.flux[j];
                a[i][j] += jw * ia * (cj[0] * ti[0] + cj[1] * ti[1]);
                div[i][j] += jw * theta * ia * bv.div[j] * bv.div[i];
            }
            for j in 0..np {
                let gw = bv.grad[j];
                a[i][nf + j] += jw * (gw[0] * ti[0] + gw[1] * ti[1]);
            }
            b[i] += jw * (f[0] * ti[0] + f[1] * ti[1] + theta * ia * g * bv.div[i]);
        }
        for i in 0..np {
            let gv = bv.grad[i];
            let pv = bv.potential[i];
            for j in 0..nf {
                let cj = bv.flux[j];
                let c = cj[0] * gv[0] + cj[1] * gv[1];
                a[nf + i][j] += jw * if ls { c } else { -vs * c };
            }
            for j in 0..np {
                let gw = bv.grad[j];
                let c = alpha * (gw[0] * gv[0] + gw[1] * gv[1]);
                a[nf + i][nf + j] += jw * if ls { c } else { vs * c };
            }
            let fl = alpha * (f[0] * gv[0] + f[1] * gv[1]);
            b[nf + i] += jw * if ls { fl } else { vs * (fl + 2.0 * g * pv) };
        }
    }
    let mut dofs = [0usize; 12];
    for i in 0..nf {
        dofs[i] = el.flux_dofs[i];
    }
    // potential dofs are offset globally by the flux count; filled by caller
    for i in 0..np {
        dofs[nf + i] = el.potential_dofs[i];
    }
    Local { dofs, n, nf, a, div, b }
}

/// Full matrix and load over all dofs, before boundary conditions.
pub fn assemble_unconstrained(
    space: &SpacePair,
    data: &ProblemData,
    cfg: &MethodConfig,
) -> Result<(SparseMatrix, Vec<f64>)> {
    let mesh = space.mesh();
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        if !(area > 0.0) {
            return Err(Error::DegenerateElement { element: t, area });
        }
    }
    let q = rule(space.family().assembly_degree())?;
    let nf_global = space.n_flux();
    let locals: Vec<Local> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let el = space.element(t);
            let sub = mesh.subdomain(t);
            let alpha = data.coefficient.alpha(sub);
            let theta = cfg.method.theta(mesh.diameter(t));
            let mut loc = element_system(&el, &q, alpha, theta, sub, data, cfg);
            for i in el.nf..loc.n {
                loc.dofs[i] += nf_global;
            }
            loc
        })
        .collect();
    let n = space.n_dofs();
    let mut triplets = Vec::with_capacity(locals.iter().map(|l| l.n * l.n).sum());
    let mut load = vec![0.0; n];
    for loc in &locals {
        for i in 0..loc.n {
            for j in 0..loc.n {
                if loc.a[i][j] != 0.0 {
                    triplets.push((loc.dofs[i], loc.dofs[j], loc.a[i][j]));
                }
                if i < loc.nf && j < loc.nf && loc.div[i][j] != 0.0 {
                    triplets.push((loc.dofs[i], loc.dofs[j], loc.div[i][j]));
                }
            }
            load[loc.dofs[i]] += loc.b[i];
        }
    }
    if cfg.method.is_augmented() {
        neumann_coupling(space, cfg, &mut triplets);
    }
    Ok((SparseMatrix::from_triplets(n, n, &triplets), load))
}

/// `±2 ∫_e (φ_j·n) ψ_i ds` on Neumann edges, rows = potential, cols = flux.
fn neumann_coupling(space: &SpacePair, cfg: &MethodConfig, triplets: &mut Vec<(usize, usize, f64)>) {
    let mesh = space.mesh();
    let (xs, ws) = gauss_legendre(4);
    let nf_global = space.n_flux();
    for e in mesh.boundary_edges() {
        if mesh.edge(e).tag != Some(BoundaryTag::Neumann) {
            continue;
        }
        let t = mesh.edge(e).triangles[0].unwrap();
        let i = mesh.local_edge(t, e);
        let el = space.element(t);
        let n = mesh.outward_normal(t, i);
        let len = mesh.edge_length(e);
        let mut acc = [[0.0; 6]; 6];
        for (s, w) in xs.iter().zip(&ws) {
            let mut l = [0.0; 3];
            l[(i + 1) % 3] = 1.0 - s;
            l[(i + 2) % 3] = *s;
            let bv = el.eval(&l);
            for r in 0..el.np {
                for c in 0..el.nf {
                    let tr = bv.flux[c][0] * n[0] + bv.flux[c][1] * n[1];
                    acc[r][c] += w * len * tr * bv.potential[r];
                }
            }
        }
        for r in 0..el.np {
            for c in 0..el.nf {
                if acc[r][c] != 0.0 {
                    triplets.push((nf_global + el.potential_dofs[r], el.flux_dofs[c], 2.0 * cfg.v_sign() * acc[r][c]));
                }
            }
        }
    }
}

/// Values of the essential unknowns: nodal interpolation of `g_D` on
/// Dirichlet potential dofs and edge moments of `g_N` on Neumann flux dofs.
pub fn essential_values(space: &SpacePair, data: &ProblemData) -> Vec<(usize, f64)> {
    let nf = space.n_flux();
    let mut out = Vec::new();
    let gn = &data.g_n;
    for &d in space.flux_essential() {
        let e = match space.family() {
            crate::femspace::Family::Rt0P1 => d,
            crate::femspace::Family::Bdm1P2 => d / 2,
        };
        let m = space.flux_moments(e, &|s, p| gn(s, p));
        let k = match space.family() {
            crate::femspace::Family::Rt0P1 => 0,
            crate::femspace::Family::Bdm1P2 => d % 2,
        };
        out.push((d, m[k]));
    }
    if !space.potential_essential().is_empty() {
        let gd = &data.g_d;
        let values = space.interpolate_potential(|s, p| gd(s, p));
        for &d in space.potential_essential() {
            out.push((nf + d, values[d]));
        }
    }
    out
}

/// Eliminates essential unknowns, moving their contribution to the load.
pub fn apply_essential_bc(
    matrix: &SparseMatrix,
    load: &[f64],
    space: &SpacePair,
    data: &ProblemData,
) -> LinearSystem {
    let n = space.n_dofs();
    let essential = essential_values(space, data);
    let mut fixed = vec![None; n];
    for &(g, v) in &essential {
        fixed[g] = Some(v);
    }
    let mut new_index = vec![usize::MAX; n];
    let mut free = Vec::with_capacity(n - essential.len());
    for g in 0..n {
        if fixed[g].is_none() {
            new_index[g] = free.len();
            free.push(g);
        }
    }
    let mut rhs = Vec::with_capacity(free.len());
    for &g in &free {
        let mut b = load[g];
        for (c, v, e) in matrix.row_split(g) {
            if let Some(x) = fixed[c] {
                b -= (v + e) * x;
            }
        }
        rhs.push(b);
    }
    let cols: Vec<Option<usize>> = new_index.iter().map(|&k| (k != usize::MAX).then_some(k)).collect();
    LinearSystem {
        matrix: matrix.select(&free, &cols, free.len()),
        rhs,
        free,
        essential,
        n_global: n,
    }
}

pub fn assemble(space: &SpacePair, data: &ProblemData, cfg: &MethodConfig) -> Result<LinearSystem> {
    let (a, b) = assemble_unconstrained(space, data, cfg)?;
    Ok(apply_essential_bc(&a, &b, space, data))
}

/// `max_j |F(φ_j) − B(x, φ_j)|` over free test functions, relative to the
/// load, both in the equilibrated scaling of the restricted system.
pub fn residual_check(system: &LinearSystem, solution: &SolutionPair) -> f64 {
    let x = system.restrict(&solution.to_global());
    relative_residual(&system.matrix, &x, &system.rhs)
}

/// Assembles, solves and checks the Galerkin residual.
pub fn solve_problem(space: &Arc<SpacePair>, data: &ProblemData, cfg: &MethodConfig) -> Result<(SolutionPair, f64)> {
    let sys = assemble(space, data, cfg)?;
    let x = sys.solve()?;
    let sol = SolutionPair::from_global(Arc::clone(space), &x)?;
    let res = residual_check(&sys, &sol);
    Ok((sol, res))
}
