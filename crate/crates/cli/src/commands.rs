use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use augmix_core::adapt::{IterationRecord, StopReason, adapt_loop};
use augmix_core::kellogg::solve_params;
use augmix_core::mesh::{initial_square_mesh, uniform_refine};
use augmix_core::problems::BoundaryKind;
use augmix_core::tables::{Band, reference_table, table_spec};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{DataSel, RunConfig, read_settings};
use crate::{CliError, KelloggArgs, MeshArgs, RunArgs, TableArgs};

/// Bumped whenever a summary.json field changes meaning or disappears.
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

fn usage(e: augmix_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn settings_from_flags(a: &RunArgs) -> BTreeMap<String, String> {
    let mut s = BTreeMap::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            s.insert(k.to_string(), v);
        }
    };
    put("method", a.method.clone());
    put("space", a.space.clone());
    put("data", a.data.clone());
    put("bc", a.bc.clone());
    put("symmetric", a.symmetric.then(|| "true".into()));
    put("theta_mark", a.theta_mark.map(|v| v.to_string()));
    put("tolerance", a.tolerance.map(|v| v.to_string()));
    put("max_iterations", a.max_iterations.map(|v| v.to_string()));
    put("max_elements", a.max_elements.map(|v| v.to_string()));
    put("initial_n", a.initial_n.map(|v| v.to_string()));
    put("seed", a.seed.map(|v| v.to_string()));
    put("out", a.out.as_ref().map(|p| p.display().to_string()));
    s
}

fn resolve(a: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::new(augmix_core::assembly::Method::Aug1, DataSel::Kellogg(1), BoundaryKind::Dirichlet);
    if let Some(path) = &a.config {
        cfg.apply(&read_settings(path)?)?;
    }
    cfg.apply(&settings_from_flags(a))?;
    Ok(cfg)
}

pub fn run(a: &RunArgs) -> Result<(), CliError> {
    let cfg = resolve(a)?;
    execute(&cfg, a.quiet)?;
    Ok(())
}

/// The part of summary.json that `table` reads back.
#[derive(Debug, Deserialize)]
pub struct SummaryHead {
    pub schema_version: u32,
    #[serde(rename = "final")]
    pub last: IterationRecord,
    pub stop: Option<StopReason>,
}

fn execute(cfg: &RunConfig, quiet: bool) -> Result<SummaryHead, CliError> {
    let adapt = cfg.adapt_config()?;
    let problem = cfg.data.problem(cfg.bc)?;
    fs::create_dir_all(&cfg.out)?;
    let start = Instant::now();
    let mut last = start;
    let mut per_iteration = Vec::new();
    let result = adapt_loop(&problem, &adapt, |r| {
        let now = Instant::now();
        per_iteration.push(now.duration_since(last).as_secs_f64());
        last = now;
        if !quiet {
            eprintln!(
                "k={:<4} n={:<7} dofs={:<7} eta={:.4e} eff={} rel={}",
                r.k,
                r.n,
                r.dofs,
                r.eta,
                r.eff_index.map_or("-".into(), |v| format!("{v:.4}")),
                r.rel_err.map_or("-".into(), |v| format!("{v:.4e}")),
            );
        }
    })?;
    let total = start.elapsed().as_secs_f64();

    result.history.write_csv(BufWriter::new(File::create(cfg.out.join("history.csv"))?))?;
    let mut vtk = BufWriter::new(File::create(cfg.out.join("final_mesh.vtk"))?);
    result.mesh.write_vtk(&mut vtk, Some(&result.report.indicators))?;
    vtk.flush()?;

    let last = result.history.last().expect("the loop records at least one iteration").clone();
    let norms = result.history.exact_norms;
    let qma = problem.data.coefficient.check_qma();
    let summary = json!({
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "config": cfg,
        "problem": problem.name,
        "kellogg": problem.kellogg.map(|p| json!({"gamma": p.gamma, "rho": p.rho, "phi": p.phi, "R": p.r})),
        "qma": { "holds": qma.holds(), "certificate": qma },
        "stop": result.history.stop,
        "iterations": result.history.records.len(),
        "final": last,
        "rel_err_theta2": last.error_theta2.zip(norms).map(|(e, n)| e / n.theta2),
        "rel_err_hls": last.error_hls.zip(norms).map(|(e, n)| e / n.hls),
        "exact_norms": norms,
        "timings": { "total_seconds": total, "per_iteration_seconds": per_iteration },
    });
    let mut f = BufWriter::new(File::create(cfg.out.join("summary.json"))?);
    serde_json::to_writer_pretty(&mut f, &summary)?;
    writeln!(f)?;
    f.flush()?;
    if !quiet {
        eprintln!("wrote {} ({:.1}s)", cfg.out.display(), total);
    }
    Ok(SummaryHead {
        schema_version: SUMMARY_SCHEMA_VERSION,
        last,
        stop: result.history.stop,
    })
}

fn read_summary(path: &Path) -> Result<SummaryHead, CliError> {
    let head: SummaryHead = serde_json::from_reader(File::open(path)?)?;
    if head.schema_version != SUMMARY_SCHEMA_VERSION {
        return Err(CliError::Usage(format!(
            "{} has schema version {}, expected {SUMMARY_SCHEMA_VERSION}",
            path.display(),
            head.schema_version
        )));
    }
    Ok(head)
}

#[derive(Debug, Serialize)]
struct TableRow {
    table: usize,
    method: &'static str,
    space: &'static str,
    bc: &'static str,
    data: usize,
    k: usize,
    n: usize,
    dofs: usize,
    eta: f64,
    error: Option<f64>,
    eff_index: Option<f64>,
    rel_err: Option<f64>,
    stop: Option<StopReason>,
    ref_k: Option<usize>,
    ref_n: Option<usize>,
    ref_eta: Option<f64>,
    ref_error: Option<f64>,
    ref_eff_index: Option<f64>,
    band: String,
    verdict: &'static str,
}

fn band_label(b: &Band) -> String {
    match *b {
        Band::Range { lo, hi } => format!("[{lo}, {hi}]"),
        Band::Decreasing { max_last } => format!("decreasing, last <= {max_last}"),
    }
}

pub fn table(a: &TableArgs) -> Result<(), CliError> {
    let spec = table_spec(a.which).map_err(usage)?;
    let configs: Vec<RunConfig> = (1..=4)
        .map(|d| {
            let mut c = RunConfig::new(spec.method, DataSel::Kellogg(d), spec.bc);
            c.space = spec.family;
            c.out = a.runs.join(c.label());
            c
        })
        .collect();
    let missing: Vec<String> = configs
        .iter()
        .filter(|c| !c.out.join("summary.json").exists())
        .map(|c| c.label())
        .collect();
    if !missing.is_empty() && !a.run_missing {
        return Err(CliError::MissingRuns(missing));
    }
    let mut heads = Vec::new();
    for c in &configs {
        let path = c.out.join("summary.json");
        heads.push(if path.exists() { read_summary(&path)? } else { execute(c, a.quiet)? });
    }
    let effs: Vec<f64> = heads.iter().map(|h| h.last.eff_index.unwrap_or(f64::NAN)).collect();
    let verdicts = spec.band.verdicts(&effs);
    let reference = reference_table(a.which);
    let out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(out);
    for (i, h) in heads.iter().enumerate() {
        let r = reference.iter().find(|r| r.data == i + 1);
        w.serialize(TableRow {
            table: a.which,
            method: spec.method.label(),
            space: spec.family.label(),
            bc: spec.bc.label(),
            data: i + 1,
            k: h.last.k,
            n: h.last.n,
            dofs: h.last.dofs,
            eta: h.last.eta,
            error: h.last.true_error,
            eff_index: h.last.eff_index,
            rel_err: h.last.rel_err,
            stop: h.stop,
            ref_k: r.map(|r| r.k),
            ref_n: r.map(|r| r.n),
            ref_eta: r.map(|r| r.eta),
            ref_error: r.map(|r| r.error),
            ref_eff_index: r.map(|r| r.eff_index),
            band: band_label(&spec.band),
            verdict: if verdicts[i] { "pass" } else { "fail" },
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn kellogg_params(a: &KelloggArgs) -> Result<(), CliError> {
    let p = solve_params(a.gamma, a.rho)?;
    let out = json!({
        "gamma": p.gamma,
        "rho": p.rho,
        "phi": p.phi,
        "R": p.r,
        "residuals": p.residuals(),
        "max_residual": p.max_residual(),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

pub fn mesh_dump(a: &MeshArgs) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let bc = BoundaryKind::parse(&a.bc).map_err(usage)?;
    let base = initial_square_mesh(a.n).with_boundary_tags(|p| bc.tag_at(p));
    let mesh = uniform_refine(&base, a.refine);
    match &a.out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            mesh.write_vtk(&mut w, None)?;
            w.flush()?;
        }
        None => mesh.write_vtk(io::stdout().lock(), None)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_labels() {
        assert_eq!(band_label(&Band::Range { lo: 0.95, hi: 1.15 }), "[0.95, 1.15]");
        assert_eq!(band_label(&Band::Decreasing { max_last: 0.65 }), "decreasing, last <= 0.65");
    }
}
