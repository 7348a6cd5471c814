//! Subcommand bodies. Each returns the text to emit; the caller decides
//! where it goes and which exit code to use.

use std::sync::Arc;

use henon_core::bifurcation::{Engine, ProfileCache};
use henon_core::radial::{decay_bound_check, fowler_check, IntegratorTol, SolveOptions};
use henon_core::rescale::{limit_distance, rescale, uniform_bound_constant};
use henon_core::spectral::{solve_spectrum, SLProblem, SpectralOptions};
use henon_core::{Error, ProblemParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::DiskStore;
use crate::config::{Format, RunConfig};
use crate::output::{fmt_f64, json_doc, Csv};
use crate::CliError;

pub const DEFAULT_R_TRUNC: f64 = 1e3;
pub const DEFAULT_COUNT: usize = 3;

pub fn solve_options(cfg: &RunConfig) -> SolveOptions {
    let mut o = SolveOptions::default();
    if let Some(t) = cfg.tol {
        o.tol = IntegratorTol::uniform(t);
    }
    if let Some(g) = cfg.grid_points {
        o.grid.uniform_points = g;
    }
    o
}

pub fn engine(cfg: &RunConfig) -> Engine {
    let e = Engine::new(solve_options(cfg), SpectralOptions::default());
    if cfg.no_cache {
        e
    } else {
        e.with_cache(ProfileCache::with_store(Arc::new(DiskStore::from_env())))
    }
}

fn params(cfg: &RunConfig) -> Result<ProblemParams, CliError> {
    Ok(ProblemParams::new(cfg.require_n()?, cfg.require_alpha()?, cfg.require_eps()?)?)
}

#[derive(Serialize)]
struct Residuals {
    fowler: f64,
    decay_margin: f64,
    boundary_value: f64,
}

#[derive(Serialize)]
struct SolveDoc<'a> {
    params: &'a ProblemParams,
    grid: &'a [f64],
    u: &'a [f64],
    du: &'a [f64],
    u0: f64,
    mu: f64,
    first_zero_raw: f64,
    residuals: Residuals,
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<String, CliError> {
    let params = params(cfg)?;
    let eng = engine(cfg);
    let prof = eng.profile(&params)?;
    match cfg.format() {
        Format::Json => json_doc(&SolveDoc {
            params: &prof.params,
            grid: &prof.grid,
            u: &prof.u,
            du: &prof.du,
            u0: prof.u0,
            mu: prof.mu,
            first_zero_raw: prof.first_zero_raw,
            residuals: Residuals {
                fowler: fowler_check(&prof)?,
                decay_margin: decay_bound_check(&prof),
                boundary_value: prof.boundary_value(),
            },
        }),
        Format::Csv => {
            let mut csv = Csv::new(&["r", "u", "du"]);
            for i in 0..prof.grid.len() {
                csv.row(&[fmt_f64(prof.grid[i]), fmt_f64(prof.u[i]), fmt_f64(prof.du[i])]);
            }
            Ok(csv.finish())
        }
    }
}

#[derive(Serialize)]
struct RescaleDoc<'a> {
    params: &'a ProblemParams,
    rho_eps: f64,
    kappa: f64,
    w0: f64,
    residual: f64,
    limit_distance: f64,
    uniform_bound_constant: f64,
    grid: &'a [f64],
    w: &'a [f64],
}

pub fn cmd_rescale(cfg: &RunConfig) -> Result<String, CliError> {
    let params = params(cfg)?;
    let prof = engine(cfg).profile(&params)?;
    let w = rescale(&prof)?;
    match cfg.format() {
        Format::Json => json_doc(&RescaleDoc {
            params: &w.params,
            rho_eps: w.rho_eps,
            kappa: w.kappa,
            w0: w.w0,
            residual: w.residual,
            limit_distance: limit_distance(&w),
            uniform_bound_constant: uniform_bound_constant(&w),
            grid: &w.grid,
            w: &w.w,
        }),
        Format::Csv => {
            let mut csv = Csv::new(&["r", "w"]);
            for (r, v) in w.grid.iter().zip(&w.w) {
                csv.row(&[fmt_f64(*r), fmt_f64(*v)]);
            }
            Ok(csv.finish())
        }
    }
}

pub const SPECTRUM_HEADER: [&str; 6] = ["alpha", "eps", "j", "lambda", "node_count", "error_estimate"];

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub alpha: f64,
    pub eps: f64,
    pub j: usize,
    pub lambda: f64,
    pub node_count: usize,
    pub error_estimate: f64,
}

/// Spectrum rows; `eps` is reported as 0 for the limit problem.
pub fn spectrum_rows(cfg: &RunConfig) -> Result<Vec<SpectrumRow>, CliError> {
    let n = cfg.require_n()?;
    let alpha = cfg.require_alpha()?;
    let count = cfg.count.unwrap_or(DEFAULT_COUNT);
    let eng = engine(cfg);
    let (eps, res) = if cfg.limit {
        if alpha < 0.0 {
            return Err(Error::Domain(format!("alpha = {alpha} must be nonnegative")).into());
        }
        let r = cfg.r_trunc.unwrap_or(DEFAULT_R_TRUNC);
        (0.0, solve_spectrum(&SLProblem::limit(n, alpha, r), count, &eng.spectral)?)
    } else {
        let p = params(cfg)?;
        (p.eps(), eng.spectrum(&p, count)?)
    };
    Ok(res
        .into_iter()
        .map(|e| SpectrumRow {
            alpha,
            eps,
            j: e.j,
            lambda: e.lambda,
            node_count: e.node_count,
            error_estimate: e.error_estimate,
        })
        .collect())
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<String, CliError> {
    let rows = spectrum_rows(cfg)?;
    match cfg.format() {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                rows: Vec<SpectrumRow>,
            }
            json_doc(&Doc { rows })
        }
        Format::Csv => {
            let mut csv = Csv::new(&SPECTRUM_HEADER);
            for r in rows {
                csv.row(&[
                    fmt_f64(r.alpha),
                    fmt_f64(r.eps),
                    r.j.to_string(),
                    fmt_f64(r.lambda),
                    r.node_count.to_string(),
                    fmt_f64(r.error_estimate),
                ]);
            }
            Ok(csv.finish())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BifurcateRow {
    #[serde(rename = "N")]
    pub n: u32,
    pub k: u32,
    pub eps: f64,
    pub alpha_k_eps: Option<f64>,
    pub residual: Option<f64>,
    pub bracket_lo: Option<f64>,
    pub bracket_hi: Option<f64>,
    pub non_unique: Option<bool>,
    pub error: Option<String>,
}

fn eps_values(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let mut v = match (&cfg.eps_list, cfg.eps) {
        (Some(l), _) => l.clone(),
        (None, Some(e)) => vec![e],
        (None, None) => return Err(CliError::invalid("--eps or --eps-list is required")),
    };
    if v.is_empty() {
        return Err(CliError::invalid("eps list is empty"));
    }
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

pub fn bifurcate_rows(cfg: &RunConfig) -> Result<Vec<BifurcateRow>, CliError> {
    let n = cfg.require_n()?;
    let k = cfg.k.ok_or_else(|| CliError::invalid("--k is required"))?;
    if k < 2 {
        return Err(CliError::invalid(format!("--k {k}: must be at least 2")));
    }
    let eps = eps_values(cfg)?;
    for &e in &eps {
        ProblemParams::new(n, 2.0 * (k as f64 - 1.0), e)?;
    }
    let eng = engine(cfg);
    Ok(eps
        .par_iter()
        .map(|&e| match eng.find_bifurcation_alpha(n, e, k, None, 1e-6) {
            Ok(rep) => {
                let p = &rep.points[0];
                BifurcateRow {
                    n,
                    k,
                    eps: e,
                    alpha_k_eps: Some(p.alpha_k_eps),
                    residual: Some(p.residual),
                    bracket_lo: Some(p.bracket.0),
                    bracket_hi: Some(p.bracket.1),
                    non_unique: Some(rep.non_unique),
                    error: None,
                }
            }
            Err(err) => BifurcateRow {
                n,
                k,
                eps: e,
                alpha_k_eps: None,
                residual: None,
                bracket_lo: None,
                bracket_hi: None,
                non_unique: None,
                error: Some(err.to_string()),
            },
        })
        .collect())
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn cmd_bifurcate(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    let rows = bifurcate_rows(cfg)?;
    let any_ok = rows.iter().any(|r| r.error.is_none());
    let text = match cfg.format() {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                rows: Vec<BifurcateRow>,
            }
            json_doc(&Doc { rows })?
        }
        Format::Csv => {
            let mut csv = Csv::new(&["N", "k", "eps", "alpha_k_eps", "residual", "bracket_lo", "bracket_hi", "non_unique", "error"]);
            for r in rows {
                csv.row(&[
                    r.n.to_string(),
                    r.k.to_string(),
                    fmt_f64(r.eps),
                    opt(r.alpha_k_eps),
                    opt(r.residual),
                    opt(r.bracket_lo),
                    opt(r.bracket_hi),
                    r.non_unique.map(|b| b.to_string()).unwrap_or_default(),
                    r.error.unwrap_or_default(),
                ]);
            }
            csv.finish()
        }
    };
    Ok((text, any_ok))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub eps: f64,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub index_full: Option<u64>,
    pub index_invariant: Option<u64>,
    pub error: Option<String>,
}

/// One row per `(alpha, eps)`, sorted by `eps` descending then `alpha` ascending.
pub fn sweep_rows(cfg: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    let n = cfg.require_n()?;
    let eps = eps_values(cfg)?;
    let alphas = match (&cfg.alpha_grid, cfg.alpha) {
        (Some(g), _) => g.clone(),
        (None, Some(a)) => vec![a],
        (None, None) => return Err(CliError::invalid("--alpha or --alpha-grid is required")),
    };
    for &e in &eps {
        for &a in &alphas {
            ProblemParams::new(n, a, e)?;
        }
    }
    let eng = engine(cfg);
    let jobs: Vec<(f64, f64)> = eps.iter().flat_map(|&e| alphas.iter().map(move |&a| (e, a))).collect();
    let mut rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(e, a)| {
            let run = || -> henon_core::Result<SweepRow> {
                let m = eng.morse_index(n, e, a)?;
                Ok(SweepRow {
                    alpha: a,
                    eps: e,
                    lambda1: Some(m.eigenvalues[0]),
                    lambda2: Some(m.eigenvalues[1]),
                    index_full: Some(m.index_full),
                    index_invariant: Some(m.index_invariant),
                    error: None,
                })
            };
            run().unwrap_or_else(|err| SweepRow {
                alpha: a,
                eps: e,
                lambda1: None,
                lambda2: None,
                index_full: None,
                index_invariant: None,
                error: Some(err.to_string()),
            })
        })
        .collect();
    rows.sort_by(|x, y| y.eps.total_cmp(&x.eps).then(x.alpha.total_cmp(&y.alpha)));
    Ok(rows)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<(String, bool), CliError> {
    let rows = sweep_rows(cfg)?;
    let any_ok = rows.iter().any(|r| r.error.is_none());
    let text = match cfg.format() {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                rows: Vec<SweepRow>,
            }
            json_doc(&Doc { rows })?
        }
        Format::Csv => {
            let mut csv = Csv::new(&["alpha", "eps", "lambda1", "lambda2", "index_full", "index_invariant", "error"]);
            for r in rows {
                csv.row(&[
                    fmt_f64(r.alpha),
                    fmt_f64(r.eps),
                    opt(r.lambda1),
                    opt(r.lambda2),
                    r.index_full.map(|v| v.to_string()).unwrap_or_default(),
                    r.index_invariant.map(|v| v.to_string()).unwrap_or_default(),
                    r.error.unwrap_or_default(),
                ]);
            }
            csv.finish()
        }
    };
    Ok((text, any_ok))
}
