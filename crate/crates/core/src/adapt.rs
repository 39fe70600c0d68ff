//! Dörfler marking and the adaptive solve–estimate–mark–refine loop.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{MethodConfig, solve_problem};
use crate::estimate::{EstimateReport, NormSet, SingularPolicy, efficiency_audit, error_parts, estimate};
use crate::femspace::{Family, SolutionPair, SpacePair};
use crate::mesh::{Mesh, uniform_refine};
use crate::problems::Problem;
use crate::{Error, Result};

/// Minimal set of elements, taken in order of decreasing indicator (ties
/// by lower index), whose squared indicators reach `theta · Σ η_K²`.
/// Returns an empty set when every indicator vanishes.
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Vec<usize> {
    assert!(theta > 0.0 && theta <= 1.0, "bulk parameter {theta} outside (0, 1]");
    let mut order: Vec<usize> = (0..indicators.len()).filter(|&k| indicators[k] > 0.0).collect();
    order.sort_by(|&a, &b| indicators[b].total_cmp(&indicators[a]).then(a.cmp(&b)));
    let total: f64 = order.iter().map(|&k| indicators[k] * indicators[k]).sum();
    if total == 0.0 {
        return Vec::new();
    }
    let target = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for k in order {
        marked.push(k);
        acc += indicators[k] * indicators[k];
        if acc >= target {
            break;
        }
    }
    marked
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaptConfig {
    pub method: MethodConfig,
    pub family: Family,
    pub theta_mark: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// The loop stops instead of refining past this many elements.
    pub max_elements: usize,
    /// Initial mesh has `(2n)²` squares.
    pub initial_n: usize,
}

impl AdaptConfig {
    pub fn new(method: MethodConfig, family: Family) -> Self {
        Self {
            method,
            family,
            theta_mark: 0.3,
            tolerance: 0.010,
            max_iterations: 400,
            max_elements: 100_000,
            initial_n: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_mark > 0.0 && self.theta_mark <= 1.0) {
            return Err(Error::Config(format!("bulk parameter {} outside (0, 1]", self.theta_mark)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_elements == 0 {
            return Err(Error::Config("element budget must be positive".into()));
        }
        if self.initial_n == 0 {
            return Err(Error::Config("initial mesh size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub n: usize,
    pub dofs: usize,
    pub eta: f64,
    pub true_error: Option<f64>,
    pub eff_index: Option<f64>,
    pub rel_err: Option<f64>,
    pub error_theta1: Option<f64>,
    pub error_theta2: Option<f64>,
    pub error_hls: Option<f64>,
    pub max_efficiency_ratio: Option<f64>,
    pub galerkin_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    Budget,
    /// Every indicator vanished.
    Exact,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceHistory {
    pub method: String,
    pub space: String,
    pub problem: String,
    pub records: Vec<IterationRecord>,
    pub stop: Option<StopReason>,
    pub exact_norms: Option<NormSet>,
}

impl ConvergenceHistory {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Least-squares slope of `log y` against `log dofs` over the last
    /// `count` records.
    pub fn loglog_slope(&self, count: usize, y: impl Fn(&IterationRecord) -> f64) -> Option<f64> {
        let tail = &self.records[self.records.len().saturating_sub(count)..];
        if tail.len() < 2 {
            return None;
        }
        let pts: Vec<(f64, f64)> = tail.iter().map(|r| ((r.dofs as f64).ln(), y(r).ln())).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        (sxx > 0.0).then(|| sxy / sxx)
    }
}

pub struct AdaptResult {
    pub history: ConvergenceHistory,
    pub mesh: Arc<Mesh>,
    pub solution: SolutionPair,
    pub report: EstimateReport,
}

/// Runs the adaptive loop; `on_iteration` sees every record as it is made.
pub fn adapt_loop(
    problem: &Problem,
    cfg: &AdaptConfig,
    mut on_iteration: impl FnMut(&IterationRecord),
) -> Result<AdaptResult> {
    cfg.validate()?;
    let policy = SingularPolicy::default();
    let mut mesh = Arc::new(problem.initial_mesh(cfg.initial_n));
    let fine = uniform_refine(&mesh, 4);
    let parts = error_parts(&fine, &problem.data.coefficient, None, &*problem.exact, &policy);
    let exact_norms = NormSet::from_parts(&fine, &parts);
    let method = cfg.method.method;
    let mut history = ConvergenceHistory {
        method: method.label().into(),
        space: cfg.family.label().into(),
        problem: problem.name.clone(),
        records: Vec::new(),
        stop: None,
        exact_norms: Some(exact_norms),
    };
    let mut k = 0;
    loop {
        let space = Arc::new(SpacePair::new(Arc::clone(&mesh), cfg.family));
        let (solution, residual) = solve_problem(&space, &problem.data, &cfg.method)?;
        let report = estimate(method, &problem.data, &solution, Some((&*problem.exact, &exact_norms)), &policy);
        let audit = report
            .element_errors
            .as_ref()
            .map(|e| efficiency_audit(&report.indicators, e));
        let errors = report.errors;
        let record = IterationRecord {
            k,
            n: mesh.n_triangles(),
            dofs: space.n_dofs(),
            eta: report.eta,
            true_error: report.error,
            eff_index: report.eff_index,
            rel_err: report.rel_err,
            error_theta1: errors.map(|e| e.theta1),
            error_theta2: errors.map(|e| e.theta2),
            error_hls: errors.map(|e| e.hls),
            max_efficiency_ratio: audit.filter(|a| !a.degenerate).map(|a| a.max_ratio),
            galerkin_residual: residual,
        };
        on_iteration(&record);
        history.records.push(record);
        let stop = if report.rel_err.is_some_and(|r| r <= cfg.tolerance) {
            Some(StopReason::Converged)
        } else if k >= cfg.max_iterations {
            Some(StopReason::Budget)
        } else {
            None
        };
        let marked = if stop.is_none() { dorfler_mark(&report.indicators, cfg.theta_mark) } else { Vec::new() };
        let refined = (stop.is_none() && !marked.is_empty()).then(|| mesh.bisect(&marked));
        let stop = match &refined {
            _ if stop.is_some() => stop,
            None => Some(StopReason::Exact),
            Some(m) if m.n_triangles() > cfg.max_elements => Some(StopReason::Budget),
            Some(_) => None,
        };
        if let Some(stop) = stop {
            history.stop = Some(stop);
            return Ok(AdaptResult {
                history,
                mesh,
                solution,
                report,
            });
        }
        mesh = Arc::new(refined.expect("refined when not stopping"));
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn element_budget_stops_before_refining() {
        let problem = Problem::sine(crate::problems::BoundaryKind::Dirichlet);
        let mut cfg = AdaptConfig::new(MethodConfig::new(crate::assembly::Method::Aug1), Family::Rt0P1);
        cfg.initial_n = 1;
        cfg.max_elements = 40;
        let r = adapt_loop(&problem, &cfg, |_| {}).unwrap();
        assert_eq!(r.history.stop, Some(StopReason::Budget));
        assert!(r.history.records.len() > 1);
        assert!(r.history.records.iter().all(|x| x.n <= 40));
        assert_eq!(r.mesh.n_triangles(), r.history.last().unwrap().n);
    }

    #[test]
    fn marks_single_largest() {
        assert_eq!(dorfler_mark(&[1.0, 4.0, 3.0, 2.0], 0.3), vec![1]);
        assert_eq!(dorfler_mark(&[1.0, 4.0, 3.0, 2.0], 1e-9), vec![1]);
    }

    #[test]
    fn full_bulk_marks_all_positive() {
        let mut m = dorfler_mark(&[1.0, 0.0, 3.0, 2.0], 1.0);
        m.sort_unstable();
        assert_eq!(m, vec![0, 2, 3]);
    }

    #[test]
    fn ties_prefer_lower_index() {
        assert_eq!(dorfler_mark(&[2.0, 2.0, 2.0], 0.3), vec![0]);
        assert_eq!(dorfler_mark(&[2.0, 2.0, 2.0], 0.5), vec![0, 1]);
    }

    #[test]
    fn all_zero_indicators() {
        assert!(dorfler_mark(&[0.0, 0.0], 0.3).is_empty());
    }

    /// Smallest subset size reaching the bulk criterion, by brute force.
    fn brute_force_min(ind: &[f64], theta: f64) -> usize {
        let total: f64 = ind.iter().map(|e| e * e).sum();
        let n = ind.len();
        (0u32..(1 << n))
            .filter(|mask| {
                let s: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ind[k] * ind[k]).sum();
                s >= theta * total
            })
            .map(|mask| mask.count_ones() as usize)
            .min()
            .unwrap()
    }

    #[test]
    fn brute_force_agrees_on_small_example() {
        let ind = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(dorfler_mark(&ind, 0.3).len(), brute_force_min(&ind, 0.3));
    }

    proptest! {
        #[test]
        fn marking_is_minimal(ind in prop::collection::vec(0.0f64..10.0, 1..10), theta in 0.05f64..1.0) {
            prop_assume!(ind.iter().any(|&e| e > 0.0));
            let m = dorfler_mark(&ind, theta);
            let total: f64 = ind.iter().map(|e| e * e).sum();
            let s: f64 = m.iter().map(|&k| ind[k] * ind[k]).sum();
            prop_assert!(s >= theta * total * (1.0 - 1e-12));
            let without_last: f64 = m[..m.len() - 1].iter().map(|&k| ind[k] * ind[k]).sum();
            prop_assert!(without_last < theta * total);
            prop_assert_eq!(m.len(), brute_force_min(&ind, theta));
        }
    }
}
