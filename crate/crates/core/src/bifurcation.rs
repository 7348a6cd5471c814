//! Nonradial bifurcation values `alpha_k^eps` (where `Lambda_1^eps(alpha) = -sigma_k`)
//! and Morse index bookkeeping around them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::{solve_dirichlet_ball, RadialProfile, SolveOptions};
use crate::roots;
use crate::scalar::{bifurcation_alpha, lambda1_closed, sphere_eigen, ProblemParams};
use crate::spectral::{radial_spectrum, solve_spectrum, EigenResult, SLProblem, SpectralOptions};

/// Default half width of the search bracket around `2(k-1)`.
pub const DEFAULT_RHO: f64 = 0.9;
pub const SCAN_POINTS: usize = 32;

type Key = (u32, u64, u64);

/// Persistent backing for [`ProfileCache`].
pub trait ProfileStore: Send + Sync + std::fmt::Debug {
    fn load(&self, params: &ProblemParams, opts: &SolveOptions) -> Option<RadialProfile>;
    fn save(&self, params: &ProblemParams, opts: &SolveOptions, profile: &RadialProfile);
}

/// Radial profiles shared between evaluations, keyed by `(N, alpha, eps)`.
#[derive(Debug, Default)]
pub struct ProfileCache {
    map: Mutex<HashMap<Key, Arc<RadialProfile>>>,
    store: Option<Arc<dyn ProfileStore>>,
}

impl ProfileCache {
    pub fn with_store(store: Arc<dyn ProfileStore>) -> Self {
        Self {
            map: Mutex::default(),
            store: Some(store),
        }
    }

    pub fn get_or_solve(&self, params: &ProblemParams, opts: &SolveOptions) -> Result<Arc<RadialProfile>> {
        let key = (params.n(), params.alpha().to_bits(), params.eps().to_bits());
        if let Some(p) = self.map.lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let stored = self.store.as_ref().and_then(|s| s.load(params, opts));
        // solve outside the lock; a racing duplicate is identical
        let prof = match stored {
            Some(p) => Arc::new(p),
            None => {
                let p = solve_dirichlet_ball(params, opts)?;
                if let Some(s) = &self.store {
                    s.save(params, opts, &p);
                }
                Arc::new(p)
            }
        };
        self.map.lock().unwrap().entry(key).or_insert(prof.clone());
        Ok(prof)
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Solver settings plus the profile cache.
#[derive(Debug, Default)]
pub struct Engine {
    pub solve: SolveOptions,
    pub spectral: SpectralOptions,
    pub cache: ProfileCache,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub alpha: f64,
    pub lambda1: f64,
    pub error_estimate: f64,
    /// The closed-form limit value at the same `alpha`.
    pub lambda1_limit: f64,
}

impl Engine {
    pub fn new(solve: SolveOptions, spectral: SpectralOptions) -> Self {
        Self {
            solve,
            spectral,
            cache: ProfileCache::default(),
        }
    }

    pub fn with_cache(self, cache: ProfileCache) -> Self {
        Self { cache, ..self }
    }

    pub fn profile(&self, params: &ProblemParams) -> Result<Arc<RadialProfile>> {
        self.cache.get_or_solve(params, &self.solve)
    }

    /// Lowest `count` eigenvalues of the unit-ball problem.
    pub fn spectrum(&self, params: &ProblemParams, count: usize) -> Result<Vec<EigenResult>> {
        let prof = self.profile(params)?;
        solve_spectrum(&SLProblem::unit_ball(prof), count, &self.spectral)
    }

    fn lambda1(&self, n: u32, eps: f64, alpha: f64) -> Result<EigenResult> {
        let params = ProblemParams::new(n, alpha, eps)?;
        Ok(self.spectrum(&params, 1)?.remove(0))
    }

    pub fn lambda1_curve(&self, n: u32, eps: f64, alpha_grid: &[f64]) -> Result<Vec<CurveSample>> {
        if let Some(&a) = alpha_grid.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::domain(format!("alpha grid point {a} must be positive")));
        }
        alpha_grid
            .par_iter()
            .map(|&alpha| {
                let e = self.lambda1(n, eps, alpha)?;
                Ok(CurveSample {
                    alpha,
                    lambda1: e.lambda,
                    error_estimate: e.error_estimate,
                    lambda1_limit: lambda1_closed(n, alpha),
                })
            })
            .collect()
    }

    /// Roots of `Lambda_1^eps(alpha) + sigma_k` in the bracket, located by a
    /// 32-point scan and refined with Brent's method.
    pub fn find_bifurcation_alpha(
        &self,
        n: u32,
        eps: f64,
        k: u32,
        bracket: Option<(f64, f64)>,
        tol: f64,
    ) -> Result<BifurcationReport> {
        if k < 2 {
            return Err(Error::domain(format!("k = {k} must be at least 2")));
        }
        let center = bifurcation_alpha(k)?;
        let (lo, hi) = bracket.unwrap_or((center - DEFAULT_RHO, center + DEFAULT_RHO));
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::domain(format!("bracket ({lo}, {hi}) must satisfy 0 < lo < hi")));
        }
        let sigma_k = sphere_eigen(n, k).sigma_f64();
        let grid: Vec<f64> = (0..SCAN_POINTS)
            .map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
            .collect();
        let scan = self.lambda1_curve(n, eps, &grid)?;
        let f_lo = scan[0].lambda1 + sigma_k;
        let f_hi = scan[SCAN_POINTS - 1].lambda1 + sigma_k;
        if !(f_lo > 0.0 && f_hi < 0.0) {
            return Err(Error::Bracket {
                lo,
                hi,
                reason: format!(
                    "Lambda_1 + sigma_{k} does not go from positive to negative ({f_lo:.3e}, {f_hi:.3e}); eps may be too large"
                ),
            });
        }
        let mut points = Vec::new();
        for w in scan.windows(2) {
            let (a, b) = (w[0].lambda1 + sigma_k, w[1].lambda1 + sigma_k);
            if a == 0.0 || a.signum() != b.signum() {
                points.push(self.refine(n, eps, k, sigma_k, (w[0].alpha, w[1].alpha), tol)?);
            }
        }
        // other spherical levels must stay away inside the bracket
        let mut exclusion_ok = true;
        let mut l = 1;
        loop {
            let s = sphere_eigen(n, l).sigma_f64();
            if s > scan.iter().map(|c| -c.lambda1).fold(0.0, f64::max) + 1.0 {
                break;
            }
            if l != k {
                let signs: Vec<bool> = scan.iter().map(|c| c.lambda1 + s > 0.0).collect();
                if signs.windows(2).any(|w| w[0] != w[1]) {
                    exclusion_ok = false;
                }
            }
            l += 1;
        }
        Ok(BifurcationReport {
            non_unique: points.len() > 1,
            points,
            exclusion_ok,
            scan,
        })
    }

    fn refine(&self, n: u32, eps: f64, k: u32, sigma_k: f64, br: (f64, f64), tol: f64) -> Result<BifurcationPoint> {
        let mut failure = None;
        let f = |a: f64| match self.lambda1(n, eps, a) {
            Ok(e) => e.lambda + sigma_k,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        };
        let root = roots::brent(f, br.0, br.1, 1e-12, 100);
        if let Some(e) = failure {
            return Err(e);
        }
        let root = root?;
        let at = self.lambda1(n, eps, root.x)?;
        let residual = (at.lambda + sigma_k).abs();
        if !(residual < tol) {
            return Err(Error::Numeric {
                reason: format!("bifurcation residual {residual:.3e} above tolerance {tol:.1e}"),
                lo: root.lo,
                hi: root.hi,
            });
        }
        Ok(BifurcationPoint {
            k,
            alpha_k_eps: root.x,
            residual,
            bracket: br,
            eps,
            n,
            lambda_error_estimate: at.error_estimate,
        })
    }

    pub fn morse_index(&self, n: u32, eps: f64, alpha: f64) -> Result<MorseIndexReport> {
        let params = ProblemParams::new(n, alpha, eps)?;
        let prof = self.profile(&params)?;
        let eig = solve_spectrum(&SLProblem::unit_ball(prof.clone()), J_MAX, &self.spectral)?;
        let radial = radial_spectrum(&prof, &self.spectral)?;
        if radial.nearest_to_zero.abs() < DEGENERACY_GAP {
            return Err(Error::Degenerate {
                alpha,
                j: 0,
                k: 0,
                gap: radial.nearest_to_zero,
            });
        }
        let l1 = eig[0].lambda;
        let mut k_max = 1u32;
        while sphere_eigen(n, k_max).sigma_f64() <= l1.abs() + 5.0 {
            k_max += 1;
        }
        let mut pairs = Vec::new();
        for e in &eig {
            for k in 1..=k_max {
                let se = sphere_eigen(n, k);
                let gap = e.lambda + se.sigma_f64();
                if gap.abs() < DEGENERACY_GAP {
                    return Err(Error::Degenerate { alpha, j: e.j, k, gap });
                }
                if gap < 0.0 {
                    pairs.push(MorsePair {
                        j: e.j,
                        k,
                        lambda: e.lambda,
                        multiplicity: se.multiplicity,
                    });
                }
            }
        }
        let r = radial.negative_count as u64;
        Ok(MorseIndexReport {
            alpha,
            eps,
            n,
            radial: r,
            index_full: r + pairs.iter().map(|p| p.multiplicity).sum::<u64>(),
            index_invariant: r + pairs.len() as u64,
            k_max,
            eigenvalues: eig.iter().map(|e| e.lambda).collect(),
            pairs,
        })
    }

    pub fn lambda2_floor(&self, n: u32, eps: f64, alpha_grid: &[f64]) -> Result<Lambda2Floor> {
        if alpha_grid.is_empty() {
            return Err(Error::domain("alpha grid is empty"));
        }
        let samples: Vec<(f64, f64, f64)> = alpha_grid
            .par_iter()
            .map(|&alpha| {
                let eig = self.spectrum(&ProblemParams::new(n, alpha, eps)?, 2)?;
                Ok((alpha, eig[0].lambda, eig[1].lambda))
            })
            .collect::<Result<_>>()?;
        let (at_alpha, min) = samples
            .iter()
            .map(|s| (s.0, s.2))
            .fold((f64::NAN, f64::INFINITY), |acc, s| if s.1 < acc.1 { s } else { acc });
        Ok(Lambda2Floor { min, at_alpha, samples })
    }

    /// `alpha_k^eps` along a decreasing list of `eps`.
    pub fn convergence_study(&self, n: u32, k: u32, eps_list: &[f64], tol: f64) -> Result<ConvergenceStudy> {
        if eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::domain("eps_list must be strictly decreasing"));
        }
        let target = bifurcation_alpha(k)?;
        let rows: Vec<ConvergenceRow> = eps_list
            .par_iter()
            .map(|&eps| {
                let rep = self.find_bifurcation_alpha(n, eps, k, None, tol)?;
                let p = rep.points[0].clone();
                Ok(ConvergenceRow {
                    eps,
                    alpha_k_eps: p.alpha_k_eps,
                    error: (p.alpha_k_eps - target).abs(),
                    residual: p.residual,
                    resolution: p.lambda_error_estimate / lambda1_slope(n, p.alpha_k_eps),
                    non_unique: rep.non_unique,
                })
            })
            .collect::<Result<_>>()?;
        let rate = empirical_rate(&rows);
        Ok(ConvergenceStudy { n, k, rows, rate })
    }
}

/// Eigenvalues per Morse evaluation.
pub const J_MAX: usize = 3;
/// `|Lambda_j + sigma_k|` below this counts as sitting on a bifurcation point.
pub const DEGENERACY_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub k: u32,
    pub alpha_k_eps: f64,
    /// `|Lambda_1^eps(alpha_k^eps) + sigma_k|`.
    pub residual: f64,
    pub bracket: (f64, f64),
    pub eps: f64,
    #[serde(rename = "N")]
    pub n: u32,
    /// Grid error estimate of `Lambda_1` at the root.
    pub lambda_error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub points: Vec<BifurcationPoint>,
    pub non_unique: bool,
    /// No other `-sigma_l` is crossed inside the bracket.
    pub exclusion_ok: bool,
    pub scan: Vec<CurveSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorsePair {
    pub j: usize,
    pub k: u32,
    pub lambda: f64,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorseMode {
    Full,
    Invariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseIndexReport {
    pub alpha: f64,
    pub eps: f64,
    #[serde(rename = "N")]
    pub n: u32,
    /// Negative eigenvalues of the radial problem.
    pub radial: u64,
    pub index_full: u64,
    pub index_invariant: u64,
    pub k_max: u32,
    pub eigenvalues: Vec<f64>,
    pub pairs: Vec<MorsePair>,
}

impl MorseIndexReport {
    pub fn index(&self, mode: MorseMode) -> u64 {
        match mode {
            MorseMode::Full => self.index_full,
            MorseMode::Invariant => self.index_invariant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda2Floor {
    pub min: f64,
    pub at_alpha: f64,
    /// `(alpha, Lambda_1, Lambda_2)`.
    pub samples: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub alpha_k_eps: f64,
    pub error: f64,
    pub residual: f64,
    /// Uncertainty of `alpha_k^eps` implied by the grid error of `Lambda_1`.
    pub resolution: f64,
    pub non_unique: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    #[serde(rename = "N")]
    pub n: u32,
    pub k: u32,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln error` against `ln eps`, when all errors are positive.
    pub rate: Option<f64>,
}

fn empirical_rate(rows: &[ConvergenceRow]) -> Option<f64> {
    if rows.len() < 2 || rows.iter().any(|r| !(r.error > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.error.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `|d Lambda_1 / d alpha| = (N + alpha)/2` for the limit curve.
pub fn lambda1_slope(n: u32, alpha: f64) -> f64 {
    (n as f64 + alpha) / 2.0
}

/// Roots of the limit relation `Lambda_1(alpha) + sigma_k = 0`, from the closed form.
pub fn limit_bifurcation_alpha(n: u32, k: u32) -> Result<f64> {
    let sigma = sphere_eigen(n, k).sigma_f64();
    let f = |a: f64| lambda1_closed(n, a) + sigma;
    Ok(roots::brent(f, 0.0, 4.0 * k as f64 + 4.0, 1e-15, 200)?.x)
}
