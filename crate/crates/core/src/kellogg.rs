//! The checkerboard benchmark with exact solution `ũ = r^γ μ(θ)`.
//!
//! α equals `R` on the first and third quadrants and 1 on the others; the
//! parameters `(γ, ρ, φ, R)` are tied together by
//!
//! ```text
//!     R   = -tan((π/2 - φ)γ) cot(ργ)
//!     1/R = -tan(ργ) cot(φγ)
//!     R   = -tan(φγ) cot((π/2 - ρ)γ)
//! ```
//!
//! subject to `0 < γ < 2`, `max(0, πγ - π) < 2γρ < min(πγ, π)` and
//! `max(0, π - πγ) < -2γφ < min(π, 2π - πγ)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::estimate::ExactSolution;
use crate::{Error, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KelloggParams {
    pub gamma: f64,
    pub rho: f64,
    pub phi: f64,
    pub r: f64,
}

fn cot(x: f64) -> f64 {
    1.0 / x.tan()
}

impl KelloggParams {
    /// Residuals of the three tangent identities.
    pub fn residuals(&self) -> [f64; 3] {
        let KelloggParams { gamma: g, rho, phi, r } = *self;
        [
            r + ((FRAC_PI_2 - phi) * g).tan() * cot(rho * g),
            1.0 / r + (rho * g).tan() * cot(phi * g),
            r + (phi * g).tan() * cot((FRAC_PI_2 - rho) * g),
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Checks the three inequality constraints.
    pub fn check_constraints(&self) -> Result<()> {
        let KelloggParams { gamma: g, rho, phi, r } = *self;
        if !(g > 0.0 && g < 2.0) {
            return Err(Error::Parameter(format!("gamma = {g} outside (0, 2)")));
        }
        let t = 2.0 * g * rho;
        if !((PI * g - PI).max(0.0) < t && t < (PI * g).min(PI)) {
            return Err(Error::Parameter(format!("rho = {rho} violates its admissible interval")));
        }
        let t = -2.0 * g * phi;
        if !((PI - PI * g).max(0.0) < t && t < PI.min(2.0 * PI - PI * g)) {
            return Err(Error::Parameter(format!("phi = {phi} violates its admissible interval")));
        }
        if !(r > 0.0) {
            return Err(Error::Parameter(format!("R = {r} must be positive")));
        }
        Ok(())
    }

    /// Open interval of admissible φ for this γ.
    pub fn phi_interval(gamma: f64) -> (f64, f64) {
        let lo = -(PI.min(2.0 * PI - PI * gamma)) / (2.0 * gamma);
        let hi = -((PI - PI * gamma).max(0.0)) / (2.0 * gamma);
        (lo, hi)
    }

    /// Coefficient on a quadrant (ids 1..=4).
    pub fn alpha(&self, quadrant: usize) -> f64 {
        if quadrant % 2 == 1 { self.r } else { 1.0 }
    }
}

/// Solves the first two identities for `(φ, R)` by a scan over the
/// admissible φ interval followed by damped Newton, then verifies the third
/// identity and the constraints.
pub fn solve_params(gamma: f64, rho: f64) -> Result<KelloggParams> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::Parameter(format!("gamma = {gamma} outside (0, 2)")));
    }
    let (lo, hi) = KelloggParams::phi_interval(gamma);
    if !(lo < hi) {
        return Err(Error::Parameter(format!("empty phi interval for gamma = {gamma}")));
    }
    // With R eliminated via the second identity, φ solves
    // tan((π/2 - φ)γ) = tan(φγ); look for a sign change away from poles.
    let h = |phi: f64| ((FRAC_PI_2 - phi) * gamma).tan() - (phi * gamma).tan();
    let n = 4000;
    let mut best: Option<(f64, f64)> = None;
    let mut prev = (lo + (hi - lo) * 0.5 / n as f64, 0.0);
    prev.1 = h(prev.0);
    for i in 1..n {
        let x = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        let y = h(x);
        if prev.1.signum() != y.signum() && prev.1.is_finite() && y.is_finite() {
            let size = prev.1.abs() + y.abs();
            if best.is_none_or(|(_, s)| size < s) {
                best = Some((0.5 * (prev.0 + x), size));
            }
        }
        prev = (x, y);
    }
    let Some((mut phi, _)) = best else {
        return Err(Error::Parameter(format!("no admissible phi found for gamma = {gamma}")));
    };
    let mut r = -(phi * gamma).tan() / (rho * gamma).tan();

    let f = |phi: f64, r: f64| {
        [
            r + ((FRAC_PI_2 - phi) * gamma).tan() * cot(rho * gamma),
            1.0 / r + (rho * gamma).tan() * cot(phi * gamma),
        ]
    };
    let norm = |v: [f64; 2]| v[0].abs().max(v[1].abs());
    let mut fx = f(phi, r);
    let mut converged = false;
    for _ in 0..100 {
        if norm(fx) <= 1e-14 * r.abs().max(1.0) {
            converged = true;
            break;
        }
        let a = (FRAC_PI_2 - phi) * gamma;
        let j11 = -gamma / (a.cos() * a.cos()) * cot(rho * gamma);
        let j12 = 1.0;
        let s = (phi * gamma).sin();
        let j21 = -(rho * gamma).tan() * gamma / (s * s);
        let j22 = -1.0 / (r * r);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dphi = (fx[0] * j22 - j12 * fx[1]) / det;
        let dr = (j11 * fx[1] - j21 * fx[0]) / det;
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-6 {
            let (p, q) = (phi - step * dphi, r - step * dr);
            let fnew = f(p, q);
            if norm(fnew) < norm(fx) {
                phi = p;
                r = q;
                fx = fnew;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            converged = norm(fx) <= 1e-12;
            break;
        }
    }
    if !converged {
        return Err(Error::Parameter(format!(
            "Newton iteration did not converge for gamma = {gamma}, rho = {rho}"
        )));
    }
    let params = KelloggParams { gamma, rho, phi, r };
    params.check_constraints()?;
    let res = params.max_residual();
    if res > 1e-12 {
        return Err(Error::Parameter(format!(
            "parameters violate the third identity (residual {res:e}); rho = {rho} is not an admissible angle"
        )));
    }
    Ok(params)
}

/// Branch of μ for an angle in [0, 2π): 1..=4, matching the quadrant ids.
pub fn branch_of(theta: f64) -> usize {
    let t = theta.rem_euclid(2.0 * PI);
    if t < FRAC_PI_2 {
        1
    } else if t < PI {
        2
    } else if t < 1.5 * PI {
        3
    } else {
        4
    }
}

/// Amplitude and phase shift of branch `b`: `μ = c · cos((θ - s)γ)`.
fn branch_coeffs(p: &KelloggParams, b: usize) -> (f64, f64) {
    let g = p.gamma;
    match b {
        1 => (((FRAC_PI_2 - p.phi) * g).cos(), FRAC_PI_2 - p.rho),
        2 => ((p.rho * g).cos(), PI - p.phi),
        3 => ((p.phi * g).cos(), PI + p.rho),
        4 => (((FRAC_PI_2 - p.rho) * g).cos(), 1.5 * PI + p.phi),
        _ => panic!("branch index {b} outside 1..=4"),
    }
}

/// μ on a fixed branch, for one-sided evaluation at interface angles.
pub fn mu_branch(theta: f64, p: &KelloggParams, b: usize) -> f64 {
    let (c, s) = branch_coeffs(p, b);
    c * ((theta - s) * p.gamma).cos()
}

pub fn mu_prime_branch(theta: f64, p: &KelloggParams, b: usize) -> f64 {
    let (c, s) = branch_coeffs(p, b);
    -c * p.gamma * ((theta - s) * p.gamma).sin()
}

pub fn mu(theta: f64, p: &KelloggParams) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    mu_branch(t, p, branch_of(t))
}

pub fn mu_prime(theta: f64, p: &KelloggParams) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    mu_prime_branch(t, p, branch_of(t))
}

/// Exact fields `u = ũ + u₀`, `σ = -α∇ũ`, with `f = ∇u₀` and `g = 0`.
#[derive(Clone, Copy, Debug)]
pub struct KelloggSolution {
    pub params: KelloggParams,
}

/// Polar angle in [0, 2π) measured on the branch of a known quadrant, so
/// points on or numerically near an axis use the right formula.
fn angle_in(quadrant: usize, p: Point) -> f64 {
    let t = p[1].atan2(p[0]).rem_euclid(2.0 * PI);
    let (lo, hi) = ((quadrant - 1) as f64 * FRAC_PI_2, quadrant as f64 * FRAC_PI_2);
    // the only ambiguous case is θ = 0 vs 2π on the positive x-axis
    if quadrant == 4 && t == 0.0 {
        return 2.0 * PI;
    }
    t.clamp(lo, hi)
}

impl KelloggSolution {
    pub fn new(params: KelloggParams) -> Self {
        Self { params }
    }

    pub fn from_gamma(gamma: f64) -> Result<Self> {
        Ok(Self::new(solve_params(gamma, PI / 4.0)?))
    }

    pub fn u_tilde(&self, quadrant: usize, p: Point) -> f64 {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            return 0.0;
        }
        r.powf(self.params.gamma) * mu_branch(angle_in(quadrant, p), &self.params, quadrant)
    }

    /// `∇ũ`, or `None` at the origin where it is unbounded.
    pub fn try_grad_u_tilde(&self, quadrant: usize, p: Point) -> Option<[f64; 2]> {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            return None;
        }
        let t = angle_in(quadrant, p);
        let g = self.params.gamma;
        let m = mu_branch(t, &self.params, quadrant);
        let dm = mu_prime_branch(t, &self.params, quadrant);
        let rg = r.powf(g - 1.0);
        let (s, c) = t.sin_cos();
        Some([rg * (g * m * c - dm * s), rg * (g * m * s + dm * c)])
    }

    pub fn u0(p: Point) -> f64 {
        if p[0] <= 0.0 { p[0] + 1.0 } else { 1.0 }
    }

    /// `∇u₀` by quadrant: (1, 0) on the left half, 0 on the right.
    pub fn grad_u0(quadrant: usize) -> [f64; 2] {
        if quadrant == 2 || quadrant == 3 { [1.0, 0.0] } else { [0.0, 0.0] }
    }
}

impl ExactSolution for KelloggSolution {
    fn u(&self, sub: usize, p: Point) -> f64 {
        self.u_tilde(sub, p) + Self::u0(p)
    }

    fn grad_u(&self, sub: usize, p: Point) -> [f64; 2] {
        let g = self.try_grad_u_tilde(sub, p).unwrap_or([f64::NAN; 2]);
        let g0 = Self::grad_u0(sub);
        [g[0] + g0[0], g[1] + g0[1]]
    }

    fn sigma(&self, sub: usize, p: Point) -> [f64; 2] {
        let a = self.params.alpha(sub);
        let g = self.try_grad_u_tilde(sub, p).unwrap_or([f64::NAN; 2]);
        [-a * g[0], -a * g[1]]
    }

    fn div_sigma(&self, _sub: usize, _p: Point) -> f64 {
        0.0
    }

    fn singularity(&self) -> Option<(Point, f64)> {
        Some(([0.0, 0.0], self.params.gamma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre;

    const TABLE: [(f64, f64, f64); 4] = [
        (0.5, -2.3561944901923448, 5.82842712474619),
        (0.2, -7.06858347058882, 39.8634581884533),
        (0.15, -9.68657734859297, 71.3848801304590),
        (0.1, -14.92256510455152, 161.447638797588),
    ];

    #[test]
    fn matches_closed_form_oracle() {
        // with ρ = π/4 the system reduces to φ = π/4 − π/(2γ), R = cot²(γπ/4)
        for (g, _, _) in TABLE {
            let p = solve_params(g, PI / 4.0).unwrap();
            let r = 1.0 / (g * PI / 4.0).tan().powi(2);
            assert!((p.phi - (PI / 4.0 - PI / (2.0 * g))).abs() < 1e-12);
            assert!(((p.r - r) / r).abs() < 1e-13, "gamma {g}: {} vs {r}", p.r);
            assert!(p.max_residual() <= 1e-12);
        }
    }

    #[test]
    fn reproduces_published_rows() {
        for (g, phi, r) in [TABLE[0], TABLE[3]] {
            let p = solve_params(g, PI / 4.0).unwrap();
            assert!((p.phi - phi).abs() < 1e-10, "gamma {g}: phi {} vs {phi}", p.phi);
            assert!((p.r - r).abs() < 1e-10, "gamma {g}: R {} vs {r}", p.r);
        }
    }

    #[test]
    fn inadmissible_inputs() {
        assert!(solve_params(0.0, PI / 4.0).is_err());
        assert!(solve_params(2.5, PI / 4.0).is_err());
        // the third identity forces ρ = π/4 on this branch family
        assert!(solve_params(0.5, 0.6).is_err());
    }

    fn data1() -> KelloggParams {
        solve_params(0.5, PI / 4.0).unwrap()
    }

    #[test]
    fn mu_is_continuous_at_interfaces() {
        for (g, _, _) in TABLE {
            let p = solve_params(g, PI / 4.0).unwrap();
            for (b, t) in [(1, FRAC_PI_2), (2, PI), (3, 1.5 * PI)] {
                let l = mu_branch(t, &p, b);
                let r = mu_branch(t, &p, b + 1);
                assert!((l - r).abs() < 1e-12, "gamma {g}, theta {t}: {l} vs {r}");
            }
            assert!((mu_branch(2.0 * PI, &p, 4) - mu_branch(0.0, &p, 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn flux_is_continuous_at_interfaces() {
        for (g, _, _) in TABLE {
            let p = solve_params(g, PI / 4.0).unwrap();
            let pairs = [(1, 2, FRAC_PI_2, FRAC_PI_2), (2, 3, PI, PI), (3, 4, 1.5 * PI, 1.5 * PI), (4, 1, 2.0 * PI, 0.0)];
            for (bl, br, tl, tr) in pairs {
                let l = p.alpha(bl) * mu_prime_branch(tl, &p, bl);
                let r = p.alpha(br) * mu_prime_branch(tr, &p, br);
                assert!((l - r).abs() <= 1e-10 * l.abs().max(r.abs()), "gamma {g}: {l} vs {r}");
            }
        }
    }

    #[test]
    fn mu_is_harmonic_in_each_branch() {
        let p = data1();
        let h = 1e-4;
        for t in [0.3, 2.0, 4.0, 5.5] {
            let d2 = (mu(t + h, &p) - 2.0 * mu(t, &p) + mu(t - h, &p)) / (h * h);
            assert!((d2 + p.gamma * p.gamma * mu(t, &p)).abs() < 1e-6);
            let d1 = (mu(t + h, &p) - mu(t - h, &p)) / (2.0 * h);
            assert!((d1 - mu_prime(t, &p)).abs() < 1e-7);
        }
    }

    #[test]
    fn origin_and_shift() {
        let s = KelloggSolution::new(data1());
        assert_eq!(s.u_tilde(1, [0.0, 0.0]), 0.0);
        assert!(s.try_grad_u_tilde(1, [0.0, 0.0]).is_none());
        assert_eq!(KelloggSolution::u0([0.0, 0.3]), 1.0);
        assert_eq!(KelloggSolution::u0([1e-300, 0.3]), 1.0);
        assert_eq!(KelloggSolution::u0([-0.25, 0.3]), 0.75);
    }

    #[test]
    fn u_is_continuous_across_axes() {
        for (g, _, _) in TABLE {
            let s = KelloggSolution::from_gamma(g).unwrap();
            for r in [0.1, 0.5, 0.9] {
                let pairs = [(1, 2, [0.0, r]), (2, 3, [-r, 0.0]), (3, 4, [0.0, -r]), (4, 1, [r, 0.0])];
                for (a, b, x) in pairs {
                    let (ua, ub) = (s.u(a, x), s.u(b, x));
                    assert!((ua - ub).abs() < 1e-10, "gamma {g} at {x:?}: {ua} vs {ub}");
                }
            }
        }
    }

    #[test]
    fn normal_flux_is_continuous_across_axes() {
        for (g, _, _) in TABLE {
            let s = KelloggSolution::from_gamma(g).unwrap();
            for r in [0.2, 0.7] {
                // (quadrants, point, normal)
                let cases = [
                    (1, 2, [0.0, r], 0),
                    (2, 3, [-r, 0.0], 1),
                    (3, 4, [0.0, -r], 0),
                    (4, 1, [r, 0.0], 1),
                ];
                for (a, b, x, k) in cases {
                    let (sa, sb) = (s.sigma(a, x)[k], s.sigma(b, x)[k]);
                    assert!((sa - sb).abs() <= 1e-8 * sa.abs().max(1.0), "gamma {g} at {x:?}: {sa} vs {sb}");
                }
            }
        }
    }

    #[test]
    fn flux_through_circle_vanishes() {
        let s = KelloggSolution::new(data1());
        let (t, w) = gauss_legendre(30);
        let radius = 0.5;
        let mut total = 0.0;
        for q in 1..=4 {
            let t0 = (q - 1) as f64 * FRAC_PI_2;
            for (ti, wi) in t.iter().zip(&w) {
                let th = t0 + ti * FRAC_PI_2;
                let n = [th.cos(), th.sin()];
                let x = [radius * n[0], radius * n[1]];
                let sg = s.sigma(q, x);
                total += wi * FRAC_PI_2 * radius * (sg[0] * n[0] + sg[1] * n[1]);
            }
        }
        assert!(total.abs() <= 1e-8, "{total}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let s = KelloggSolution::new(solve_params(0.2, PI / 4.0).unwrap());
        let h = 1e-6;
        for (q, x) in [(1, [0.3, 0.4]), (2, [-0.5, 0.2]), (3, [-0.1, -0.7]), (4, [0.6, -0.2])] {
            let g = s.grad_u(q, x);
            let dx = (s.u(q, [x[0] + h, x[1]]) - s.u(q, [x[0] - h, x[1]])) / (2.0 * h);
            let dy = (s.u(q, [x[0], x[1] + h]) - s.u(q, [x[0], x[1] - h])) / (2.0 * h);
            assert!((g[0] - dx).abs() < 1e-6 && (g[1] - dy).abs() < 1e-6);
        }
    }
}
