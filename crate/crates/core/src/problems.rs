//! Benchmark problems with known solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::ProblemData;
use crate::coeff::CoefficientField;
use crate::estimate::ExactSolution;
use crate::kellogg::{KelloggParams, KelloggSolution, solve_params};
use crate::mesh::{BoundaryTag, Mesh, initial_square_mesh};
use crate::{Error, Point, Result};

/// Regularity exponents of the four checkerboard data sets.
pub const KELLOGG_GAMMAS: [f64; 4] = [0.5, 0.2, 0.15, 0.1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Γ_D = ∂Ω.
    Dirichlet,
    /// Γ_D = {y = −1}, Γ_N the rest.
    Mixed,
}

impl BoundaryKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(BoundaryKind::Dirichlet),
            "mixed" => Ok(BoundaryKind::Mixed),
            other => Err(Error::Config(format!("unknown boundary kind '{other}' (expected dirichlet or mixed)"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Mixed => "mixed",
        }
    }

    pub fn tag_at(self, midpoint: Point) -> BoundaryTag {
        match self {
            BoundaryKind::Dirichlet => BoundaryTag::Dirichlet,
            BoundaryKind::Mixed if midpoint[1] == -1.0 => BoundaryTag::Dirichlet,
            BoundaryKind::Mixed => BoundaryTag::Neumann,
        }
    }
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub data: ProblemData,
    pub exact: Arc<dyn ExactSolution>,
    pub bc: BoundaryKind,
    pub kellogg: Option<KelloggParams>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("bc", &self.bc)
            .field("kellogg", &self.kellogg)
            .finish_non_exhaustive()
    }
}

fn data_from_exact(coefficient: CoefficientField, exact: Arc<dyn ExactSolution>, f: crate::assembly::VectorFn, g: crate::assembly::ScalarFn) -> ProblemData {
    let (e1, e2) = (exact.clone(), exact);
    ProblemData {
        coefficient,
        f,
        g,
        g_d: Arc::new(move |s, p| e1.u(s, p)),
        g_n: Arc::new(move |s, p| e2.sigma(s, p)),
    }
}

impl Problem {
    /// Checkerboard data set `index` (1..=4).
    pub fn kellogg(index: usize, bc: BoundaryKind) -> Result<Self> {
        let gamma = *KELLOGG_GAMMAS
            .get(index.wrapping_sub(1))
            .ok_or_else(|| Error::Config(format!("data set {index} outside 1..=4")))?;
        let params = solve_params(gamma, PI / 4.0)?;
        Self::kellogg_with(params, bc, format!("data{index}"))
    }

    pub fn kellogg_with(params: KelloggParams, bc: BoundaryKind, name: String) -> Result<Self> {
        let exact: Arc<dyn ExactSolution> = Arc::new(KelloggSolution::new(params));
        let coefficient = CoefficientField::checkerboard(params.r)?;
        let data = data_from_exact(
            coefficient,
            exact.clone(),
            Arc::new(|s, _| KelloggSolution::grad_u0(s)),
            Arc::new(|_, _| 0.0),
        );
        Ok(Self {
            name,
            data,
            exact,
            bc,
            kellogg: Some(params),
        })
    }

    /// `u = x + y`, α ≡ 1, `σ = −∇u`, `f = 0`, `g = 0`.
    pub fn linear(bc: BoundaryKind) -> Self {
        let exact: Arc<dyn ExactSolution> = Arc::new(Linear);
        let data = data_from_exact(
            CoefficientField::constant(1.0).expect("positive"),
            exact.clone(),
            Arc::new(|_, _| [0.0, 0.0]),
            Arc::new(|_, _| 0.0),
        );
        Self {
            name: "linear".into(),
            data,
            exact,
            bc,
            kellogg: None,
        }
    }

    /// `u = sin(πx) sin(πy)`, α ≡ 1, `σ = −∇u`, `f = 0`, `g = 2π² u`.
    pub fn sine(bc: BoundaryKind) -> Self {
        let exact: Arc<dyn ExactSolution> = Arc::new(Sine);
        let data = data_from_exact(
            CoefficientField::constant(1.0).expect("positive"),
            exact.clone(),
            Arc::new(|_, _| [0.0, 0.0]),
            Arc::new(|_, p| 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin()),
        );
        Self {
            name: "sine".into(),
            data,
            exact,
            bc,
            kellogg: None,
        }
    }

    pub fn initial_mesh(&self, n: usize) -> Mesh {
        let bc = self.bc;
        initial_square_mesh(n).with_boundary_tags(move |p| bc.tag_at(p))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Linear;

impl ExactSolution for Linear {
    fn u(&self, _: usize, p: Point) -> f64 {
        p[0] + p[1]
    }
    fn grad_u(&self, _: usize, _: Point) -> [f64; 2] {
        [1.0, 1.0]
    }
    fn sigma(&self, _: usize, _: Point) -> [f64; 2] {
        [-1.0, -1.0]
    }
    fn div_sigma(&self, _: usize, _: Point) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Sine;

impl ExactSolution for Sine {
    fn u(&self, _: usize, p: Point) -> f64 {
        (PI * p[0]).sin() * (PI * p[1]).sin()
    }
    fn grad_u(&self, _: usize, p: Point) -> [f64; 2] {
        [
            PI * (PI * p[0]).cos() * (PI * p[1]).sin(),
            PI * (PI * p[0]).sin() * (PI * p[1]).cos(),
        ]
    }
    fn sigma(&self, s: usize, p: Point) -> [f64; 2] {
        let g = self.grad_u(s, p);
        [-g[0], -g[1]]
    }
    fn div_sigma(&self, s: usize, p: Point) -> f64 {
        2.0 * PI * PI * self.u(s, p)
    }
}
