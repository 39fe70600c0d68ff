//! Quadrature on the reference triangle {(0,0), (1,0), (0,1)} and on [0, 1].
//!
//! Points are stored in barycentric coordinates `(λ0, λ1, λ2)` so a rule can
//! be pushed to any physical triangle `x = Σ λi Pi`; weights sum to the
//! reference area 1/2, and a physical integral is `2|K| Σ w f(x)`.

use std::f64::consts::PI;

use crate::{Error, Point, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Integrates `f` over the reference triangle; `f` receives (x, y).
    pub fn integrate_reference(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| w * f(l[1], l[2]))
            .sum()
    }

    /// Integrates `f` over the triangle with the given corners.
    pub fn integrate(&self, corners: &[Point; 3], f: impl Fn(Point) -> f64) -> f64 {
        let area = triangle_area(corners);
        2.0 * area
            * self
                .points
                .iter()
                .zip(&self.weights)
                .map(|(l, w)| w * f(to_physical(corners, l)))
                .sum::<f64>()
    }

    /// Composite rule over `4^levels` congruent sub-triangles obtained by
    /// repeated midpoint subdivision.
    pub fn subdivided(&self, levels: usize) -> QuadRule {
        let mut cells: Vec<[[f64; 3]; 3]> = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
        for _ in 0..levels {
            let mut next = Vec::with_capacity(cells.len() * 4);
            for [a, b, c] in cells {
                let mid = |p: [f64; 3], q: [f64; 3]| {
                    [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])]
                };
                let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                next.push([a, ab, ca]);
                next.push([ab, b, bc]);
                next.push([ca, bc, c]);
                next.push([ab, bc, ca]);
            }
            cells = next;
        }
        let scale = 1.0 / cells.len() as f64;
        let mut points = Vec::with_capacity(cells.len() * self.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for cell in &cells {
            for (l, w) in self.points.iter().zip(&self.weights) {
                let mut p = [0.0; 3];
                for (k, corner) in cell.iter().enumerate() {
                    for j in 0..3 {
                        p[j] += l[k] * corner[j];
                    }
                }
                points.push(p);
                weights.push(w * scale);
            }
        }
        QuadRule {
            points,
            weights,
            exact_degree: self.exact_degree,
        }
    }

    /// Collapsed-coordinate rule for integrands with an algebraic
    /// singularity `r^β` at local vertex `vertex`. The radial coordinate is
    /// graded as `s = τ^grading`; with `grading = 1/γ` the singular terms
    /// of `|∇(r^γ μ(θ))|²` become polynomial in `τ`.
    pub fn vertex_graded(vertex: usize, n_radial: usize, n_angular: usize, grading: f64) -> QuadRule {
        assert!(vertex < 3);
        let (tr, wr) = gauss_legendre(n_radial);
        let (ta, wa) = gauss_legendre(n_angular);
        let a = (vertex + 1) % 3;
        let b = (vertex + 2) % 3;
        let mut points = Vec::with_capacity(n_radial * n_angular);
        let mut weights = Vec::with_capacity(points.capacity());
        for (tau, wt) in tr.iter().zip(&wr) {
            let s = tau.powf(grading);
            let ds = grading * tau.powf(grading - 1.0);
            for (t, wang) in ta.iter().zip(&wa) {
                let mut l = [0.0; 3];
                l[vertex] = 1.0 - s;
                l[a] = s * (1.0 - t);
                l[b] = s * t;
                points.push(l);
                weights.push(wt * wang * s * ds);
            }
        }
        QuadRule {
            points,
            weights,
            exact_degree: 0,
        }
    }
}

pub fn triangle_area(c: &[Point; 3]) -> f64 {
    0.5 * ((c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]))
}

pub fn to_physical(c: &[Point; 3], l: &[f64; 3]) -> Point {
    [
        l[0] * c[0][0] + l[1] * c[1][0] + l[2] * c[2][0],
        l[0] * c[0][1] + l[1] * c[1][1] + l[2] * c[2][1],
    ]
}

fn orbit3(a: f64, w: f64, points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    for p in [[b, a, a], [a, b, a], [a, a, b]] {
        points.push(p);
        weights.push(w);
    }
}

/// A rule exact for all polynomials of total degree `<= exact_degree`.
///
/// Degrees 1 and 2 use the centroid and the three-point interior rule,
/// degrees 3 to 5 the seven-point degree-5 rule, and degrees 6 to 10 a
/// collapsed Gauss–Legendre product rule. All weights are positive.
pub fn rule(exact_degree: usize) -> Result<QuadRule> {
    match exact_degree {
        1 => Ok(QuadRule {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![0.5],
            exact_degree: 1,
        }),
        2 => {
            let (mut points, mut weights) = (Vec::new(), Vec::new());
            orbit3(1.0 / 6.0, 1.0 / 6.0, &mut points, &mut weights);
            Ok(QuadRule {
                points,
                weights,
                exact_degree: 2,
            })
        }
        3..=5 => {
            let s15 = 15f64.sqrt();
            let mut points = vec![[1.0 / 3.0; 3]];
            let mut weights = vec![0.5 * 9.0 / 40.0];
            orbit3((6.0 - s15) / 21.0, 0.5 * (155.0 - s15) / 1200.0, &mut points, &mut weights);
            orbit3((6.0 + s15) / 21.0, 0.5 * (155.0 + s15) / 1200.0, &mut points, &mut weights);
            Ok(QuadRule {
                points,
                weights,
                exact_degree: 5,
            })
        }
        6..=10 => {
            let n = (exact_degree + 3) / 2;
            Ok(collapsed_rule(n))
        }
        d => Err(Error::Config(format!("no triangle quadrature of degree {d} (supported: 1..=10)"))),
    }
}

/// Conical product rule with `n × n` points, exact to degree `2n - 2`.
pub fn collapsed_rule(n: usize) -> QuadRule {
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (u, wu) in x.iter().zip(&w) {
        for (v, wv) in x.iter().zip(&w) {
            let px = *u;
            let py = v * (1.0 - u);
            points.push([1.0 - px - py, px, py]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    QuadRule {
        points,
        weights,
        exact_degree: 2 * n - 2,
    }
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
