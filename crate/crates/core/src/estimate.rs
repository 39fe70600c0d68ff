//! Least-squares a posteriori indicators and energy-norm true errors.
//!
//! For a discrete pair `(σ_h, u_h)` the element indicator is
//!
//! ```text
//! η_K² = w_K ‖α^{-1/2}(g − ∇·σ_h)‖²_K + ‖α^{1/2}(f − ∇u_h − α⁻¹σ_h)‖²_K
//! ```
//!
//! with `w_K = 1` for `Aug1`/`Ls` and `w_K = h_K²` for `Aug2`/`Hls`; the
//! augmented and least-squares methods share the same code path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{Method, ProblemData};
use crate::femspace::SolutionPair;
use crate::mesh::Mesh;
use crate::quad::{QuadRule, rule, to_physical};
use crate::Point;

/// Exact fields of a benchmark problem, evaluated per subdomain.
pub trait ExactSolution: Send + Sync {
    fn u(&self, sub: usize, p: Point) -> f64;
    fn grad_u(&self, sub: usize, p: Point) -> [f64; 2];
    fn sigma(&self, sub: usize, p: Point) -> [f64; 2];
    fn div_sigma(&self, sub: usize, p: Point) -> f64;
    /// A point singularity `r^γ` as `(location, γ)`, if any.
    fn singularity(&self) -> Option<(Point, f64)> {
        None
    }
}

/// Per-element indicators `η_K` (not squared).
pub fn indicators(method: Method, data: &ProblemData, solution: &SolutionPair) -> Vec<f64> {
    let space = &solution.space;
    let mesh = space.mesh();
    let q = rule(space.family().assembly_degree().max(5)).expect("supported degree");
    (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let el = space.element(t);
            let sub = mesh.subdomain(t);
            let a = data.coefficient.alpha(sub);
            let w = method.theta(mesh.diameter(t));
            let mut s = 0.0;
            for (l, wq) in q.points.iter().zip(&q.weights) {
                let x = to_physical(&el.corners, l);
                let v = solution.eval(&el, l);
                let f = (data.f)(sub, x);
                let g = (data.g)(sub, x);
                let r0 = g - v.div_sigma;
                let r1 = [f[0] - v.grad_u[0] - v.sigma[0] / a, f[1] - v.grad_u[1] - v.sigma[1] / a];
                s += 2.0 * el.area * wq * (w * r0 * r0 / a + a * (r1[0] * r1[0] + r1[1] * r1[1]));
            }
            s.sqrt()
        })
        .collect()
}

/// Squared error pieces on one element, from which every norm follows:
///
/// * `energy = ‖α^{1/2}∇e‖² + ‖α^{-1/2}E‖²`
/// * `cross  = 2(∇e, E)`
/// * `div    = ‖α^{-1/2}∇·E‖²`
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorParts {
    pub energy: f64,
    pub cross: f64,
    pub div: f64,
}

impl ErrorParts {
    /// `|||·|||_θ²` on the element.
    pub fn theta_norm2(&self, theta: f64) -> f64 {
        self.energy + theta * self.div
    }

    /// `‖α^{1/2}∇e + α^{-1/2}E‖² + h²‖α^{-1/2}∇·E‖²`.
    pub fn hls_norm2(&self, h: f64) -> f64 {
        (self.energy + self.cross).max(0.0) + h * h * self.div
    }
}

/// How element integrals of the exact fields are computed.
#[derive(Clone, Debug)]
pub struct SingularPolicy {
    pub regular: QuadRule,
    pub near: QuadRule,
    pub radial_points: usize,
    pub angular_points: usize,
    /// Elements whose distance to the singular point is below this
    /// multiple of their diameter use `near`.
    pub near_factor: f64,
}

impl Default for SingularPolicy {
    fn default() -> Self {
        let regular = rule(7).expect("degree 7 rule");
        let near = regular.subdivided(3);
        Self {
            regular,
            near,
            radial_points: 24,
            angular_points: 16,
            near_factor: 2.0,
        }
    }
}

fn dist_to_triangle_vertices(c: &[Point; 3], p: Point) -> (f64, Option<usize>) {
    let mut best = (f64::INFINITY, None);
    for (i, v) in c.iter().enumerate() {
        let d = (v[0] - p[0]).hypot(v[1] - p[1]);
        if d == 0.0 {
            return (0.0, Some(i));
        }
        if d < best.0 {
            best.0 = d;
        }
    }
    best
}

impl SingularPolicy {
    fn rule_for(&self, mesh: &Mesh, t: usize, singular: Option<(Point, f64)>) -> std::borrow::Cow<'_, QuadRule> {
        use std::borrow::Cow;
        let Some((s, gamma)) = singular else {
            return Cow::Borrowed(&self.regular);
        };
        let c = mesh.corners(t);
        let (d, vertex) = dist_to_triangle_vertices(&c, s);
        match vertex {
            Some(v) => Cow::Owned(QuadRule::vertex_graded(
                v,
                self.radial_points,
                self.angular_points,
                1.0 / gamma.clamp(0.05, 1.0),
            )),
            None if d < self.near_factor * mesh.diameter(t) => Cow::Borrowed(&self.near),
            None => Cow::Borrowed(&self.regular),
        }
    }
}

/// Error pieces per element for `exact − solution`, or the exact fields
/// themselves when `solution` is `None`.
pub fn error_parts(
    mesh: &Mesh,
    coefficient: &crate::coeff::CoefficientField,
    solution: Option<&SolutionPair>,
    exact: &dyn ExactSolution,
    policy: &SingularPolicy,
) -> Vec<ErrorParts> {
    let singular = exact.singularity();
    (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let q = policy.rule_for(mesh, t, singular);
            let sub = mesh.subdomain(t);
            let a = coefficient.alpha(sub);
            let c = mesh.corners(t);
            let el = solution.map(|s| s.space.element(t));
            let mut parts = ErrorParts::default();
            for (l, w) in q.points.iter().zip(&q.weights) {
                let x = to_physical(&c, l);
                let (mut ee, mut ge, mut de) = (exact.sigma(sub, x), exact.grad_u(sub, x), exact.div_sigma(sub, x));
                if let (Some(s), Some(el)) = (solution, el.as_ref()) {
                    let v = s.eval(el, l);
                    ee = [ee[0] - v.sigma[0], ee[1] - v.sigma[1]];
                    ge = [ge[0] - v.grad_u[0], ge[1] - v.grad_u[1]];
                    de -= v.div_sigma;
                }
                let jw = 2.0 * mesh.area(t) * w;
                parts.energy += jw * (a * (ge[0] * ge[0] + ge[1] * ge[1]) + (ee[0] * ee[0] + ee[1] * ee[1]) / a);
                parts.cross += jw * 2.0 * (ge[0] * ee[0] + ge[1] * ee[1]);
                parts.div += jw * de * de / a;
            }
            parts
        })
        .collect()
}

/// Global norms of an error (or of the exact solution).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSet {
    /// `|||·|||₁`
    pub theta1: f64,
    /// `|||·|||₂` (θ = h_K²)
    pub theta2: f64,
    /// `|||·|||_hls`
    pub hls: f64,
}

impl NormSet {
    pub fn from_parts(mesh: &Mesh, parts: &[ErrorParts]) -> Self {
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (t, p) in parts.iter().enumerate() {
            let h = mesh.diameter(t);
            a += p.theta_norm2(1.0);
            b += p.theta_norm2(h * h);
            c += p.hls_norm2(h);
        }
        Self {
            theta1: a.sqrt(),
            theta2: b.sqrt(),
            hls: c.sqrt(),
        }
    }

    /// The norm paired with a method's estimator.
    pub fn for_method(&self, method: Method) -> f64 {
        match method {
            Method::Aug1 | Method::Ls => self.theta1,
            Method::Aug2 => self.theta2,
            Method::Hls => self.hls,
        }
    }
}

/// Element errors in the norm paired with `method`.
pub fn element_errors(mesh: &Mesh, parts: &[ErrorParts], method: Method) -> Vec<f64> {
    parts
        .iter()
        .enumerate()
        .map(|(t, p)| {
            let h = mesh.diameter(t);
            match method {
                Method::Hls => p.hls_norm2(h),
                m => p.theta_norm2(m.theta(h)),
            }
            .sqrt()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub method: Method,
    /// `η_K` per element.
    pub indicators: Vec<f64>,
    pub eta: f64,
    /// Element errors in the method's norm, when an exact solution is known.
    pub element_errors: Option<Vec<f64>>,
    pub errors: Option<NormSet>,
    /// Error in the method's norm.
    pub error: Option<f64>,
    /// `η / error`.
    pub eff_index: Option<f64>,
    /// `error / |||(σ, u)|||` in the method's norm.
    pub rel_err: Option<f64>,
}

pub fn global_eta(indicators: &[f64]) -> f64 {
    indicators.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// Indicators plus, given an exact solution and its norms, true errors.
pub fn estimate(
    method: Method,
    data: &ProblemData,
    solution: &SolutionPair,
    exact: Option<(&dyn ExactSolution, &NormSet)>,
    policy: &SingularPolicy,
) -> EstimateReport {
    let ind = indicators(method, data, solution);
    let eta = global_eta(&ind);
    let mut report = EstimateReport {
        method,
        indicators: ind,
        eta,
        element_errors: None,
        errors: None,
        error: None,
        eff_index: None,
        rel_err: None,
    };
    if let Some((ex, exact_norms)) = exact {
        let mesh = solution.space.mesh();
        let parts = error_parts(mesh, &data.coefficient, Some(solution), ex, policy);
        let norms = NormSet::from_parts(mesh, &parts);
        let err = norms.for_method(method);
        report.element_errors = Some(element_errors(mesh, &parts, method));
        report.errors = Some(norms);
        report.error = Some(err);
        report.eff_index = (err > 0.0).then(|| eta / err);
        report.rel_err = Some(err / exact_norms.for_method(method));
    }
    report
}

/// Outcome of the elementwise efficiency audit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EfficiencyAudit {
    /// `max_K η_K / error_K` over elements with nonzero error.
    pub max_ratio: f64,
    pub worst_element: Option<usize>,
    /// Set when every element error vanishes.
    pub degenerate: bool,
}

pub fn efficiency_audit(indicators: &[f64], element_errors: &[f64]) -> EfficiencyAudit {
    let mut out = EfficiencyAudit {
        max_ratio: 0.0,
        worst_element: None,
        degenerate: true,
    };
    for (k, (&e, &r)) in indicators.iter().zip(element_errors).enumerate() {
        if r > 0.0 {
            out.degenerate = false;
            let q = e / r;
            if q > out.max_ratio {
                out.max_ratio = q;
                out.worst_element = Some(k);
            }
        }
    }
    out
}
