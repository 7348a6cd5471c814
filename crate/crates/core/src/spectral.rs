//! Linearized spectrum with the inverse-square weight.
//!
//! In `t = ln r` and `y = r^((N-2)/2) z` the weighted problem
//! `-(r^(N-1) z')' - r^(N-1) q z = Lambda r^(N-3) z` becomes
//! `-y'' + [(N-2)^2/4 - Q(t)] y = Lambda y` with `Q = r^2 q`. `Q` is the same
//! function of `t` (up to a shift) for the unit-ball, rescaled and limit
//! forms, which is what makes the three formulations comparable.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::ode::{Adaptive, Cursor, Dopri5, Flow, OdeSystem, Tolerance};
use crate::radial::{IntegratorTol, RadialOde, RadialProfile};
use crate::rescale::RescaledProfile;
use crate::roots;
use crate::scalar::{henon_constant, limit_lambda, threshold_exponent};

/// First grid node used for every spectral computation.
pub const R_START: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum SLForm {
    /// Potential `p r^alpha u^(p-1)` on `(0, 1)`.
    UnitBall(Arc<RadialProfile>),
    /// Potential `p C r^alpha w^(p-1)` on `(0, rho)`.
    Rescaled(Arc<RescaledProfile>),
    /// Bubble potential on `(0, R_trunc)`.
    Limit { alpha: f64 },
}

#[derive(Debug, Clone)]
pub struct SLProblem {
    pub n: u32,
    pub form: SLForm,
    pub r_start: f64,
    pub r_end: f64,
}

impl SLProblem {
    pub fn unit_ball(profile: Arc<RadialProfile>) -> Self {
        Self {
            n: profile.params.n(),
            form: SLForm::UnitBall(profile),
            r_start: R_START,
            r_end: 1.0,
        }
    }

    /// Same interval as [`SLProblem::unit_ball`] stretched by `rho`.
    pub fn rescaled(profile: Arc<RescaledProfile>) -> Self {
        let rho = profile.rho_eps;
        Self {
            n: profile.params.n(),
            form: SLForm::Rescaled(profile),
            r_start: R_START * rho,
            r_end: rho,
        }
    }

    pub fn limit(n: u32, alpha: f64, r_trunc: f64) -> Self {
        Self {
            n,
            form: SLForm::Limit { alpha },
            r_start: R_START,
            r_end: r_trunc,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::domain(format!("dimension N = {} must be at least 3", self.n)));
        }
        if !(self.r_start > 0.0 && self.r_end > self.r_start) {
            return Err(Error::domain(format!(
                "interval ({}, {}) must satisfy 0 < r_start < r_end",
                self.r_start, self.r_end
            )));
        }
        Ok(())
    }

    /// `(N-2)^2/4`, the bottom of the continuous spectrum on the half line.
    pub fn threshold(&self) -> f64 {
        let d = self.n as f64 - 2.0;
        d * d / 4.0
    }

    /// `Q = r^2 q` at increasing radii.
    pub fn scaled_potential(&self, rs: &[f64]) -> Result<Vec<f64>> {
        match &self.form {
            SLForm::UnitBall(prof) => {
                let p = prof.params.p();
                let b = 2.0 + prof.params.alpha();
                let vals = prof.sample(rs)?;
                Ok(rs.iter().zip(vals).map(|(&r, v)| p * r.powf(b) * v[0].abs().powf(p - 1.0)).collect())
            }
            SLForm::Rescaled(prof) => {
                let p = prof.params.p();
                let c = prof.params.henon_constant();
                let b = 2.0 + prof.params.alpha();
                let vals = prof.sample(rs)?;
                Ok(rs
                    .iter()
                    .zip(vals)
                    .map(|(&r, v)| p * c * r.powf(b) * v[0].abs().powf(p - 1.0))
                    .collect())
            }
            SLForm::Limit { alpha } => Ok(rs.iter().map(|&r| limit_scaled_potential(self.n, *alpha, r)).collect()),
        }
    }
}

/// `r^2 q` for the bubble: `p_alpha C s^(2+alpha) / (1 + s^(2+alpha))^2` with `s = lambda r`.
pub fn limit_scaled_potential(n: u32, alpha: f64, r: f64) -> f64 {
    let lambda = limit_lambda(n, alpha);
    let b = 2.0 + alpha;
    let s = (lambda * r).powf(b);
    threshold_exponent(n, alpha) * henon_constant(n, alpha) * s / ((1.0 + s) * (1.0 + s))
}

/// Symmetric tridiagonal pencil `A - Lambda B` with diagonal `B`, on the
/// unknown nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    /// All grid radii, including the boundary nodes.
    pub r: Vec<f64>,
    /// Index in `r` of the first unknown.
    pub first: usize,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub mass: Vec<f64>,
    /// Factor turning the unknowns into values of `z`.
    pub to_z: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LeftEnd {
    Dirichlet,
    Natural,
}

/// Conservative three-point form of `-(a y')' + c y = mu m y` in `t`, Dirichlet on the right.
fn conservative(t: &[f64], a: impl Fn(f64) -> f64, c: &[f64], m: &[f64], left: LeftEnd) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nodes = t.len();
    let first = if left == LeftEnd::Dirichlet { 1 } else { 0 };
    let last = nodes - 2;
    let mut diag = Vec::with_capacity(last + 1 - first);
    let mut off = Vec::with_capacity(last - first);
    let mut mass = Vec::with_capacity(last + 1 - first);
    let flux = |i: usize| {
        let h = t[i + 1] - t[i];
        a(0.5 * (t[i] + t[i + 1])) / h
    };
    for i in first..=last {
        let (left_flux, cell) = if i == 0 {
            (0.0, 0.5 * (t[1] - t[0]))
        } else {
            (flux(i - 1), 0.5 * (t[i + 1] - t[i - 1]))
        };
        diag.push(left_flux + flux(i) + cell * c[i]);
        mass.push(cell * m[i]);
        if i < last {
            off.push(-flux(i));
        }
    }
    (diag, off, mass)
}

fn check_grid(rs: &[f64]) -> Result<()> {
    if rs.len() < 4 {
        return Err(Error::domain("grid needs at least four nodes"));
    }
    if !(rs[0] > 0.0) {
        return Err(Error::domain("first grid node must be > 0"));
    }
    if rs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    Ok(())
}

/// Pencil for the weighted problem on the given radii, Dirichlet at both ends.
pub fn assemble_pencil(problem: &SLProblem, rs: &[f64]) -> Result<Pencil> {
    check_grid(rs)?;
    let q = problem.scaled_potential(rs)?;
    Ok(pencil_from_potential(problem.n, rs, &q))
}

/// Pencil from values of `Q = r^2 q` already sampled on the grid.
pub fn pencil_from_potential(n: u32, rs: &[f64], q: &[f64]) -> Pencil {
    let t: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let d = n as f64 - 2.0;
    let c: Vec<f64> = q.iter().map(|q| d * d / 4.0 - q).collect();
    let ones = vec![1.0; rs.len()];
    let (diag, off, mass) = conservative(&t, |_| 1.0, &c, &ones, LeftEnd::Dirichlet);
    let to_z = rs[1..rs.len() - 1].iter().map(|r| r.powf(-d / 2.0)).collect();
    Pencil {
        r: rs.to_vec(),
        first: 1,
        diag,
        off,
        mass,
        to_z,
    }
}

impl Pencil {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `sigma` (inertia of `A - sigma B`).
    pub fn count_below(&self, sigma: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.dim() {
            let a = self.diag[i] - sigma * self.mass[i];
            d = if i == 0 { a } else { a - self.off[i - 1] * self.off[i - 1] / d };
            if d == 0.0 {
                d = -f64::EPSILON * (a.abs() + 1e-300);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Lower bound for the spectrum from diagonal dominance.
    fn lower_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = self.off.get(i).map_or(0.0, |v| v.abs());
                (self.diag[i] - left - right) / self.mass[i]
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The `j`-th eigenvalue (from 1) by bisection on the inertia count.
    pub fn eigenvalue(&self, j: usize, tol: f64) -> Result<f64> {
        if j == 0 || j > self.dim() {
            return Err(Error::domain(format!("eigenvalue index {j} outside 1..={}", self.dim())));
        }
        let lo = self.lower_bound() - 1.0;
        let mut hi = lo.abs().max(1.0);
        while self.count_below(hi) < j {
            hi = 2.0 * hi + 1.0;
            if !hi.is_finite() {
                return Err(Error::Numeric {
                    reason: "no upper bracket for eigenvalue".into(),
                    lo,
                    hi,
                });
            }
        }
        let (a, b) = roots::bisect_count(|s| self.count_below(s), lo, hi, j, tol)?;
        Ok(0.5 * (a + b))
    }

    /// Eigenvector for an eigenvalue estimate by inverse iteration, as values
    /// of the unknowns (not normalized).
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.dim();
        let shift = lambda + 1e-9 * (1.0 + lambda.abs());
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            let rhs: Vec<f64> = x.iter().zip(&self.mass).map(|(a, b)| a * b).collect();
            x = self.solve_shifted(shift, &rhs);
            let norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            x.iter_mut().for_each(|v| *v /= norm);
        }
        x
    }

    /// Solve `(A - sigma B) x = rhs` (tridiagonal elimination).
    fn solve_shifted(&self, sigma: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let tiny = 1e-300;
        let mut piv = self.diag[0] - sigma * self.mass[0];
        if piv == 0.0 {
            piv = tiny;
        }
        c[0] = if n > 1 { self.off[0] / piv } else { 0.0 };
        d[0] = rhs[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - sigma * self.mass[i] - self.off[i - 1] * c[i - 1];
            if piv == 0.0 {
                piv = tiny;
            }
            c[i] = if i + 1 < n { self.off[i] / piv } else { 0.0 };
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }
}

/// Sign changes in a sequence, skipping exact zeros.
pub fn sign_changes(v: &[f64]) -> usize {
    let mut last = 0.0;
    let mut n = 0;
    for &x in v {
        if x != 0.0 {
            if last != 0.0 && (x > 0.0) != (last > 0.0) {
                n += 1;
            }
            last = x;
        }
    }
    n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteEigen {
    pub j: usize,
    pub lambda: f64,
    pub node_count: usize,
    /// `z` on the full grid (boundary values included), sup-norm 1,
    /// positive at its first interior maximum of `|z|`.
    pub z: Vec<f64>,
}

/// Lowest `count` eigenpairs of a pencil.
pub fn eigenvalues(pencil: &Pencil, count: usize, tol: f64) -> Result<Vec<DiscreteEigen>> {
    if count == 0 {
        return Err(Error::domain("count must be at least 1"));
    }
    (1..=count)
        .map(|j| {
            let lambda = pencil.eigenvalue(j, tol)?;
            let y = pencil.eigenvector(lambda);
            let mut z = vec![0.0; pencil.r.len()];
            for (i, (v, f)) in y.iter().zip(&pencil.to_z).enumerate() {
                z[pencil.first + i] = v * f;
            }
            normalize_sup(&mut z);
            Ok(DiscreteEigen {
                j,
                lambda,
                node_count: sign_changes(&z),
                z,
            })
        })
        .collect()
}

fn normalize_sup(z: &mut [f64]) {
    let (mut imax, mut m) = (0, 0.0);
    for (i, v) in z.iter().enumerate() {
        // first maximum wins ties
        if v.abs() > m * (1.0 + 1e-12) {
            m = v.abs();
            imax = i;
        }
    }
    if m > 0.0 {
        let s = z[imax].signum() / m;
        z.iter_mut().for_each(|v| *v *= s);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOptions {
    /// Step in `ln r` of the coarsest grid.
    pub base_step: f64,
    /// Number of nested grids, each halving the step.
    pub levels: usize,
    pub bisection_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            base_step: 1.05f64.ln(),
            levels: 3,
            bisection_tol: 1e-10,
        }
    }
}

impl SpectralOptions {
    fn validate(&self) -> Result<()> {
        if !(self.base_step > 0.0) || self.levels < 2 || !(self.bisection_tol > 0.0) {
            return Err(Error::domain("spectral options need a positive step, at least two levels and a positive tolerance"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub j: usize,
    /// Richardson value from the two finest grids.
    pub lambda: f64,
    pub node_count: usize,
    pub grid_sizes: Vec<usize>,
    /// Raw value on each grid, coarse to fine.
    pub values: Vec<f64>,
    /// Difference of the two finest Richardson values (or of the raw values with two grids).
    pub error_estimate: f64,
    /// Observed convergence order from three consecutive grids, if available.
    pub observed_order: Option<f64>,
    pub r: Vec<f64>,
    pub eigenfunction: Vec<f64>,
}

/// Radii `exp(t)` of a uniform grid in `t` with `intervals` cells.
fn log_grid(r_start: f64, r_end: f64, intervals: usize) -> Vec<f64> {
    let (a, b) = (r_start.ln(), r_end.ln());
    (0..=intervals)
        .map(|i| {
            if i == intervals {
                r_end
            } else if i == 0 {
                r_start
            } else {
                (a + (b - a) * i as f64 / intervals as f64).exp()
            }
        })
        .collect()
}

fn nested_grids(problem: &SLProblem, opts: &SpectralOptions) -> (Vec<f64>, Vec<usize>) {
    let span = (problem.r_end / problem.r_start).ln();
    let base = (span / opts.base_step).ceil().max(4.0) as usize;
    let finest = base << (opts.levels - 1);
    let sizes = (0..opts.levels).map(|l| base << l).collect();
    (log_grid(problem.r_start, problem.r_end, finest), sizes)
}

fn subsample(v: &[f64], stride: usize) -> Vec<f64> {
    v.iter().step_by(stride).copied().collect()
}

/// Lowest `count` eigenvalues on nested grids with Richardson extrapolation.
pub fn solve_spectrum(problem: &SLProblem, count: usize, opts: &SpectralOptions) -> Result<Vec<EigenResult>> {
    problem.validate()?;
    opts.validate()?;
    let (fine_r, sizes) = nested_grids(problem, opts);
    let fine_q = problem.scaled_potential(&fine_r)?;
    let finest = *sizes.last().unwrap();
    let mut per_level = Vec::with_capacity(sizes.len());
    for &m in &sizes {
        let stride = finest / m;
        let rs = subsample(&fine_r, stride);
        let qs = subsample(&fine_q, stride);
        let pencil = pencil_from_potential(problem.n, &rs, &qs);
        per_level.push(eigenvalues(&pencil, count, opts.bisection_tol)?);
    }
    let fine = per_level.last().unwrap();
    Ok((0..count)
        .map(|k| {
            let values: Vec<f64> = per_level.iter().map(|lv| lv[k].lambda).collect();
            let (lambda, error_estimate, observed_order) = richardson(&values);
            EigenResult {
                j: k + 1,
                lambda,
                node_count: fine[k].node_count,
                grid_sizes: sizes.clone(),
                values,
                error_estimate,
                observed_order,
                r: fine_r.clone(),
                eigenfunction: fine[k].z.clone(),
            }
        })
        .collect())
}

/// Second-order Richardson on grids halving the step.
pub fn richardson(values: &[f64]) -> (f64, f64, Option<f64>) {
    let n = values.len();
    let ext = |a: f64, b: f64| b + (b - a) / 3.0;
    let best = ext(values[n - 2], values[n - 1]);
    if n < 3 {
        return (best, (values[1] - values[0]).abs() / 3.0, None);
    }
    let prev = ext(values[n - 3], values[n - 2]);
    let d1 = values[n - 2] - values[n - 3];
    let d2 = values[n - 1] - values[n - 2];
    let order = if d2 != 0.0 && d1 / d2 > 0.0 {
        Some((d1 / d2).log2())
    } else {
        None
    };
    (best, (best - prev).abs(), order)
}

/// `[u, u_t, theta]` in `t = ln r`: the profile equation together with the
/// Prufer angle of `-y'' + [(N-2)^2/4 - Q] y = Lambda y`.
struct PruferSystem {
    ode: RadialOde,
    lambda: f64,
    threshold: f64,
}

impl OdeSystem<3> for PruferSystem {
    fn rhs(&self, t: f64, y: &[f64; 3]) -> [f64; 3] {
        let o = &self.ode;
        let b = 2.0 + o.alpha;
        let ebt = (b * t).exp();
        let up = y[0].abs().powf(o.p - 1.0);
        let q = o.p * o.coef * ebt * up;
        let (s, c) = y[2].sin_cos();
        [
            y[1],
            -(o.n as f64 - 2.0) * y[1] - o.coef * ebt * up * y[0],
            c * c + (self.lambda - self.threshold + q) * s * s,
        ]
    }
}

struct PruferLimit {
    n: u32,
    alpha: f64,
    lambda: f64,
    threshold: f64,
}

impl OdeSystem<1> for PruferLimit {
    fn rhs(&self, t: f64, y: &[f64; 1]) -> [f64; 1] {
        let q = limit_scaled_potential(self.n, self.alpha, t.exp());
        let (s, c) = y[0].sin_cos();
        [c * c + (self.lambda - self.threshold + q) * s * s]
    }
}

fn prufer_tol() -> IntegratorTol {
    IntegratorTol { rtol: 1e-12, atol: 1e-13 }
}

/// Prufer angle at the right end for a trial `Lambda`, starting from 0 at the left end.
pub fn prufer_angle(problem: &SLProblem, lambda: f64) -> Result<f64> {
    problem.validate()?;
    let (ta, tb) = (problem.r_start.ln(), problem.r_end.ln());
    let threshold = problem.threshold();
    let tol = prufer_tol();
    let drv = Adaptive::new(Dopri5);
    let profile_start = |ode: RadialOde, a: f64| -> Result<Cursor<3>> {
        // run the profile alone up to the left end, then attach the angle
        let ell = ode.natural_scale(a);
        let r0 = 1e-6 * ell.min(problem.r_start);
        let s = ode.series(a, r0);
        let log_sys = LogProfile(ode);
        let mut cur = Cursor::new(r0.ln(), [s[0], r0 * s[1]], 1e-2);
        let t2 = Tolerance::scaled(tol.rtol, tol.atol, [a, a]);
        drv.advance(&log_sys, &t2, &mut cur, ta, |_| Flow::Continue)?;
        Ok(Cursor::new(ta, [cur.y[0], cur.y[1], 0.0], cur.h))
    };
    let (ode, a) = match &problem.form {
        SLForm::Limit { alpha } => {
            let sys = PruferLimit {
                n: problem.n,
                alpha: *alpha,
                lambda,
                threshold,
            };
            let mut cur = Cursor::new(ta, [0.0], 1e-2);
            drv.advance(&sys, &Tolerance::new(tol.rtol, tol.atol), &mut cur, tb, |_| Flow::Continue)?;
            return Ok(cur.y[0]);
        }
        SLForm::UnitBall(prof) => (RadialOde::from_params(&prof.params), prof.u0),
        SLForm::Rescaled(prof) => (prof.ode(), prof.w0),
    };
    let mut cur = profile_start(ode, a)?;
    let sys = PruferSystem { ode, lambda, threshold };
    let t3 = Tolerance::scaled(tol.rtol, tol.atol, [a, a, 1.0]);
    drv.advance(&sys, &t3, &mut cur, tb, |_| Flow::Continue)?;
    Ok(cur.y[2])
}

struct LogProfile(RadialOde);

impl OdeSystem<2> for LogProfile {
    fn rhs(&self, t: f64, y: &[f64; 2]) -> [f64; 2] {
        let o = &self.0;
        let src = o.coef * ((2.0 + o.alpha) * t).exp() * y[0].abs().powf(o.p - 1.0) * y[0];
        [y[1], -(o.n as f64 - 2.0) * y[1] - src]
    }
}

/// `Lambda_j` by Prufer shooting: the root of `theta(t_end; Lambda) = j pi` inside `bracket`.
pub fn prufer_eigen(problem: &SLProblem, j: usize, bracket: (f64, f64)) -> Result<f64> {
    if j == 0 {
        return Err(Error::domain("eigenvalue index starts at 1"));
    }
    let target = j as f64 * std::f64::consts::PI;
    let f = |l: f64| prufer_angle(problem, l).map(|th| th - target);
    let (fa, fb) = (f(bracket.0)?, f(bracket.1)?);
    if !(fa < 0.0 && fb > 0.0) {
        return Err(Error::Bracket {
            lo: bracket.0,
            hi: bracket.1,
            reason: format!("oscillation count does not enclose index {j} (miss {fa:.3e}, {fb:.3e})"),
        });
    }
    let mut failure = None;
    let root = roots::brent(
        |l| match f(l) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        bracket.0,
        bracket.1,
        1e-12,
        200,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(root?.x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEigen {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Same pair with the truncation radius doubled.
    pub lambda1_2r: f64,
    pub lambda2_2r: f64,
    /// Grid-refinement error estimates at `R_trunc`.
    pub grid_error: [f64; 2],
    /// `|value(2R) - value(R)|`.
    pub truncation_shift: [f64; 2],
    pub observed_order: [Option<f64>; 2],
}

/// Lowest two eigenvalues of the truncated limit problem, with the
/// mandatory rerun at twice the truncation radius.
pub fn limit_eigen(n: u32, alpha: f64, r_trunc: f64, opts: &SpectralOptions) -> Result<LimitEigen> {
    if !(r_trunc > 1.0) {
        return Err(Error::domain(format!("truncation radius {r_trunc} must exceed 1")));
    }
    let at = solve_spectrum(&SLProblem::limit(n, alpha, r_trunc), 2, opts)?;
    let at2 = solve_spectrum(&SLProblem::limit(n, alpha, 2.0 * r_trunc), 2, opts)?;
    Ok(LimitEigen {
        lambda1: at[0].lambda,
        lambda2: at[1].lambda,
        lambda1_2r: at2[0].lambda,
        lambda2_2r: at2[1].lambda,
        grid_error: [at[0].error_estimate, at[1].error_estimate],
        truncation_shift: [(at2[0].lambda - at[0].lambda).abs(), (at2[1].lambda - at[1].lambda).abs()],
        observed_order: [at[0].observed_order, at[1].observed_order],
    })
}

/// Closed-form bound states of the limit problem on the whole half line:
/// `(N-2)^2/4 - ((2+alpha)/2)^2 (m/2 - j + 1)^2` for `j - 1 < m/2`.
pub fn limit_bound_state(n: u32, alpha: f64, j: usize) -> Option<f64> {
    let m = crate::scalar::fowler_dimension(n, alpha);
    let g = (2.0 + alpha) / 2.0;
    let k = m / 2.0 - (j as f64 - 1.0);
    let d = n as f64 - 2.0;
    (j >= 1 && k > 0.0).then(|| d * d / 4.0 - g * g * k * k)
}

/// `[u, u', v, v']`: the profile and its radial linearization.
struct Linearized(RadialOde);

impl OdeSystem<4> for Linearized {
    fn rhs(&self, r: f64, y: &[f64; 4]) -> [f64; 4] {
        let o = &self.0;
        let nm1 = o.n as f64 - 1.0;
        let ra = r.powf(o.alpha);
        let up = y[0].abs().powf(o.p - 1.0);
        [
            y[1],
            -nm1 / r * y[1] - o.coef * ra * up * y[0],
            y[3],
            -nm1 / r * y[3] - o.p * o.coef * ra * up * y[2],
        ]
    }
}

/// `v(1)` for `v'' + (N-1)/r v' + p r^alpha u^(p-1) v = 0`, `v(0) = 1`, `v'(0) = 0`.
pub fn radial_kernel_test(profile: &RadialProfile) -> Result<f64> {
    let ode = profile.ode();
    let a = profile.u0;
    let ell = ode.natural_scale(a);
    let r0 = 1e-6 * ell;
    let s = ode.series(a, r0);
    let b = 2.0 + ode.alpha;
    let na = ode.n as f64 + ode.alpha;
    let k = ode.coef * ode.p * a.powf(ode.p - 1.0);
    let v = [1.0 - k * r0.powf(b) / (b * na), -k * r0.powf(b - 1.0) / na];
    let tol = &profile.integrator_tol;
    let scale = [a, a / ell, 1.0, 1.0 / ell];
    let mut cur = Cursor::new(r0, [s[0], s[1], v[0], v[1]], r0);
    Adaptive::new(Dopri5).advance(&Linearized(ode), &Tolerance::scaled(tol.rtol, tol.atol, scale), &mut cur, 1.0, |_| {
        Flow::Continue
    })?;
    Ok(cur.y[2])
}

/// Pencil for the radial problem `-(r^(N-1) v')' - r^(N-1) q v = mu r^(N-1) v`
/// with a natural condition at the first node and Dirichlet at `r = 1`.
pub fn radial_pencil(profile: &RadialProfile, opts: &SpectralOptions) -> Result<Pencil> {
    opts.validate()?;
    let problem = SLProblem::unit_ball(Arc::new(profile.clone()));
    let (rs, _) = nested_grids(&problem, opts);
    let q = problem.scaled_potential(&rs)?;
    let t: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let d = profile.params.n() as f64 - 2.0;
    let w: Vec<f64> = t.iter().map(|t| (d * t).exp()).collect();
    let c: Vec<f64> = w.iter().zip(&q).map(|(w, q)| -w * q).collect();
    let m: Vec<f64> = w.iter().zip(&t).map(|(w, t)| w * (2.0 * t).exp()).collect();
    let (diag, off, mass) = conservative(&t, |t| (d * t).exp(), &c, &m, LeftEnd::Natural);
    let to_z = vec![1.0; diag.len()];
    Ok(Pencil {
        r: rs,
        first: 0,
        diag,
        off,
        mass,
        to_z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSpectrum {
    pub negative_count: usize,
    /// Eigenvalue of smallest modulus.
    pub nearest_to_zero: f64,
}

pub fn radial_spectrum(profile: &RadialProfile, opts: &SpectralOptions) -> Result<RadialSpectrum> {
    let pencil = radial_pencil(profile, opts)?;
    let negative_count = pencil.count_below(0.0);
    let below = if negative_count > 0 {
        pencil.eigenvalue(negative_count, opts.bisection_tol)?
    } else {
        f64::NEG_INFINITY
    };
    let above = pencil.eigenvalue(negative_count + 1, opts.bisection_tol)?;
    let nearest_to_zero = if -below < above { below } else { above };
    Ok(RadialSpectrum {
        negative_count,
        nearest_to_zero,
    })
}

/// Largest discrepancy of the lowest `j_max` eigenvalues between the
/// unit-ball and the stretched-ball formulations.
pub fn scale_equivalence_test(
    profile: Arc<RadialProfile>,
    rescaled: Arc<RescaledProfile>,
    j_max: usize,
    opts: &SpectralOptions,
) -> Result<f64> {
    let a = solve_spectrum(&SLProblem::unit_ball(profile), j_max, opts)?;
    let b = solve_spectrum(&SLProblem::rescaled(rescaled), j_max, opts)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x.lambda - y.lambda).abs()).fold(0.0, f64::max))
}

/// Smallest `C` with `|z| <= C r^(2-N)` and `|z'| <= C r^(1-N)` for `r >= 1`.
pub fn eigfun_decay_check(eig: &EigenResult, n: u32) -> f64 {
    let nf = n as f64;
    let start = eig.r.partition_point(|&r| r < 1.0);
    let rs = &eig.r[start..];
    let zs = &eig.eigenfunction[start..];
    if rs.len() < 2 {
        return 0.0;
    }
    let ders = fd::derivatives(rs, zs, 5);
    rs.iter()
        .zip(zs)
        .zip(ders)
        .map(|((&r, &z), (dz, _))| (r.powf(nf - 2.0) * z.abs()).max(r.powf(nf - 1.0) * dz.abs()))
        .fold(0.0, f64::max)
}

/// `∫ r^(N-3) z1 z2 dr` relative to the product of the weighted norms.
pub fn orthogonality(a: &EigenResult, b: &EigenResult, n: u32) -> f64 {
    let d = n as f64 - 2.0;
    let integral = |f: &dyn Fn(usize) -> f64| {
        a.r.windows(2)
            .enumerate()
            .map(|(i, w)| 0.5 * (w[1] / w[0]).ln() * (f(i) + f(i + 1)))
            .sum::<f64>()
    };
    let weight = |i: usize| a.r[i].powf(d);
    let ab = integral(&|i| weight(i) * a.eigenfunction[i] * b.eigenfunction[i]);
    let aa = integral(&|i| weight(i) * a.eigenfunction[i].powi(2));
    let bb = integral(&|i| weight(i) * b.eigenfunction[i].powi(2));
    ab.abs() / (aa * bb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{solve_dirichlet_ball, SolveOptions};
    use crate::rescale::rescale;
    use crate::scalar::{lambda1_closed, ProblemParams};

    fn free_problem(n: u32, r_end: f64) -> (SLProblem, Vec<f64>) {
        let problem = SLProblem::limit(n, 0.0, r_end);
        (problem, log_grid(R_START, r_end, 400))
    }

    #[test]
    fn pencil_shape_and_grid_checks() {
        let (problem, rs) = free_problem(3, 10.0);
        let p = assemble_pencil(&problem, &rs).unwrap();
        assert_eq!(p.dim(), rs.len() - 2);
        assert_eq!(p.off.len(), p.dim() - 1);
        assert!(p.mass.iter().all(|&m| m > 0.0));
        let mut bad = rs.clone();
        bad[0] = 0.0;
        assert!(matches!(assemble_pencil(&problem, &bad), Err(Error::Domain(_))));
        bad = rs.clone();
        bad.swap(3, 4);
        assert!(assemble_pencil(&problem, &bad).is_err());
    }

    #[test]
    fn inertia_count_is_monotone() {
        let (problem, rs) = free_problem(3, 10.0);
        let p = assemble_pencil(&problem, &rs).unwrap();
        let counts: Vec<usize> = (-20..40).map(|s| p.count_below(s as f64 * 0.5)).collect();
        assert!(counts.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(counts[0], 0);
    }

    #[test]
    fn sign_change_counter() {
        assert_eq!(sign_changes(&[0.0, 1.0, 0.0, 2.0, -1.0, -3.0, 0.0, 4.0, 0.0]), 2);
        assert_eq!(sign_changes(&[0.0, 0.0]), 0);
    }

    #[test]
    fn richardson_on_model_sequence() {
        let f = |h: f64| 2.0 + 3.0 * h * h + 0.5 * h.powi(4);
        let (v, err, order) = richardson(&[f(0.1), f(0.05), f(0.025)]);
        assert!((v - 2.0).abs() < 1e-4);
        assert!(err < 1e-2);
        assert!((order.unwrap() - 2.0).abs() < 0.1);
    }

    #[test]
    fn free_operator_matches_closed_form() {
        // without potential: Lambda_j = (N-2)^2/4 + (j pi / L)^2 in the log variable
        let problem = SLProblem {
            n: 3,
            form: SLForm::Limit { alpha: 0.0 },
            r_start: 1e-12,
            r_end: 1e-9,
        };
        // the bubble potential is below 1e-15 on this interval
        let res = solve_spectrum(&problem, 3, &SpectralOptions::default()).unwrap();
        let l = (1e-9f64 / 1e-12).ln();
        for e in &res {
            let exact = 0.25 + (e.j as f64 * std::f64::consts::PI / l).powi(2);
            assert!((e.lambda - exact).abs() < 1e-7, "j = {}: {} vs {exact}", e.j, e.lambda);
            assert_eq!(e.node_count, e.j - 1);
        }
    }

    #[test]
    fn limit_first_eigenvalue() {
        for (n, alpha) in [(3u32, 2.0), (3, 0.0), (4, 2.0)] {
            let le = limit_eigen(n, alpha, 1e3, &SpectralOptions::default()).unwrap();
            let exact = lambda1_closed(n, alpha);
            assert!((le.lambda1 - exact).abs() < 1e-4, "({n},{alpha}): {} vs {exact}", le.lambda1);
            assert!(le.lambda2.abs() < 1e-2);
            assert!((le.lambda2 - le.lambda2_2r).abs() < 5e-3);
        }
    }

    #[test]
    fn limit_spectrum_against_bound_states() {
        // N = 4, alpha = 2: m = 3, so the bound states are -8 and 0
        let res = solve_spectrum(&SLProblem::limit(4, 2.0, 1e3), 2, &SpectralOptions::default()).unwrap();
        for e in &res {
            let exact = limit_bound_state(4, 2.0, e.j).unwrap();
            assert!((e.lambda - exact).abs() < 1e-3, "{} vs {exact}", e.lambda);
        }
        assert!((limit_bound_state(4, 2.0, 1).unwrap() + 8.0).abs() < 1e-12);
        assert!(limit_bound_state(4, 2.0, 2).unwrap().abs() < 1e-12);
        assert!(limit_bound_state(4, 2.0, 3).is_none());
        // N = 5, alpha = 0: m = 5 leaves room for a third state at the threshold minus 1/4
        assert!((limit_bound_state(5, 0.0, 3).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn prufer_matches_pencil_on_limit() {
        let problem = SLProblem::limit(3, 1.0, 1e3);
        let pencil = solve_spectrum(&problem, 2, &SpectralOptions::default()).unwrap();
        let l1 = prufer_eigen(&problem, 1, (-10.0, -1.0)).unwrap();
        assert!((l1 - pencil[0].lambda).abs() < 1e-6, "{l1} vs {}", pencil[0].lambda);
        assert!((l1 - lambda1_closed(3, 1.0)).abs() < 1e-6);
        // oscillation count grows with Lambda
        let th: Vec<f64> = [-5.0, -2.0, 0.0, 1.0].iter().map(|&l| prufer_angle(&problem, l).unwrap()).collect();
        assert!(th.windows(2).all(|w| w[1] > w[0]));
        assert!(matches!(prufer_eigen(&problem, 1, (-1.0, 0.0)), Err(Error::Bracket { .. })));
    }

    fn profile(n: u32, alpha: f64, eps: f64) -> Arc<RadialProfile> {
        let params = ProblemParams::new(n, alpha, eps).unwrap();
        Arc::new(solve_dirichlet_ball(&params, &SolveOptions::default()).unwrap())
    }

    #[test]
    fn unit_ball_spectrum_certificates() {
        let prof = profile(3, 2.0, 0.05);
        let problem = SLProblem::unit_ball(prof.clone());
        let res = solve_spectrum(&problem, 3, &SpectralOptions::default()).unwrap();
        assert!(res.windows(2).all(|w| w[1].lambda > w[0].lambda));
        for e in &res {
            assert_eq!(e.node_count, e.j - 1);
        }
        assert!(res[0].eigenfunction.iter().all(|&z| z >= 0.0));
        assert!(orthogonality(&res[0], &res[1], 3) < 1e-8);
        let l1 = prufer_eigen(&problem, 1, (res[0].lambda - 0.5, res[0].lambda + 0.5)).unwrap();
        assert!((l1 - res[0].lambda).abs() < 1e-6, "{l1} vs {}", res[0].lambda);
    }

    #[test]
    fn spectra_agree_across_scalings() {
        let prof = profile(3, 2.0, 0.05);
        let resc = Arc::new(rescale(&prof).unwrap());
        let d = scale_equivalence_test(prof, resc, 3, &SpectralOptions::default()).unwrap();
        assert!(d < 1e-6, "discrepancy {d:e}");
    }

    #[test]
    fn radial_problem_is_nondegenerate() {
        let prof = profile(3, 1.0, 0.05);
        let v1 = radial_kernel_test(&prof).unwrap();
        assert!(v1.abs() > 1e-3, "v(1) = {v1}");
        // v(1) is tied to the boundary slope by the scaling identity
        let want = (prof.params.p() - 1.0) / (2.0 + prof.params.alpha()) * prof.boundary_slope() / prof.u0;
        assert!((v1 - want).abs() < 1e-7 * want.abs().max(1.0), "{v1} vs {want}");
        let rs = radial_spectrum(&prof, &SpectralOptions::default()).unwrap();
        assert_eq!(rs.negative_count, 1);
        assert!(rs.nearest_to_zero.abs() > 1e-6);
    }

    #[test]
    fn first_eigenfunction_decays() {
        let eig = &solve_spectrum(&SLProblem::limit(3, 2.0, 1e3), 1, &SpectralOptions::default()).unwrap()[0];
        let c = eigfun_decay_check(eig, 3);
        let start = eig.r.partition_point(|&r| r < 1.0);
        let direct = eig.r[start..]
            .iter()
            .zip(&eig.eigenfunction[start..])
            .map(|(r, z)| r * z.abs())
            .fold(0.0, f64::max);
        assert!(c >= direct && c.is_finite());
    }
}
