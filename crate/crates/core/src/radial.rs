//! Radial solutions by shooting.
//!
//! The initial value problem `u'' + (N-1)/r u' + K r^alpha |u|^(p-1) u = 0`,
//! `u(0) = a`, `u'(0) = 0` is started from its two-term series and advanced
//! with the Dormand-Prince pair. The Dirichlet solution on the unit ball is
//! obtained from one shot by the scaling `lambda^((2+alpha)/(p-1)) u(lambda r)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::ode::{Adaptive, BulirschStoer, Cursor, Dopri5, Flow, OdeSystem, Tolerance};
use crate::scalar::{henon_constant, sup_norm_constant, threshold_exponent, ProblemParams};

/// Series start is taken at this fraction of the natural length scale.
const SERIES_START: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorTol {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for IntegratorTol {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

impl IntegratorTol {
    pub fn uniform(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-2,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::domain("integrator tolerances must be positive"));
        }
        Ok(())
    }
}

/// `u'' + (N-1)/r u' + coef r^alpha |u|^(p-1) u = 0` in the radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialOde {
    pub n: u32,
    pub alpha: f64,
    pub p: f64,
    pub coef: f64,
}

impl RadialOde {
    pub fn new(n: u32, alpha: f64, p: f64) -> Self {
        Self { n, alpha, p, coef: 1.0 }
    }

    pub fn with_coef(self, coef: f64) -> Self {
        Self { coef, ..self }
    }

    pub fn from_params(params: &ProblemParams) -> Self {
        Self::new(params.n(), params.alpha(), params.p())
    }

    fn beta(&self) -> f64 {
        2.0 + self.alpha
    }

    /// Radius on which the solution with center value `a` varies.
    pub fn natural_scale(&self, a: f64) -> f64 {
        (self.coef * a.powf(self.p - 1.0)).powf(-1.0 / self.beta())
    }

    /// Two-term expansion at small `r`.
    pub fn series(&self, a: f64, r: f64) -> [f64; 2] {
        let b = self.beta();
        let na = self.n as f64 + self.alpha;
        let c = self.coef * a.powf(self.p);
        [a - c * r.powf(b) / (b * na), -c * r.powf(b - 1.0) / na]
    }

    fn source(&self, r: f64, u: f64) -> f64 {
        self.coef * r.powf(self.alpha) * u.abs().powf(self.p - 1.0) * u
    }

    fn tolerance(&self, a: f64, tol: &IntegratorTol) -> Tolerance<2> {
        Tolerance::scaled(tol.rtol, tol.atol, [a, a / self.natural_scale(a)])
    }

    fn start(&self, a: f64) -> Cursor<2> {
        let r0 = SERIES_START * self.natural_scale(a);
        Cursor::new(r0, self.series(a, r0), r0)
    }
}

impl OdeSystem<2> for RadialOde {
    fn rhs(&self, r: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -(self.n as f64 - 1.0) / r * y[1] - self.source(r, y[0])]
    }
}

/// The same equation in `t = ln r`: `u_tt + (N-2) u_t + coef e^((2+alpha)t) |u|^(p-1) u = 0`.
struct RadialOdeLog(RadialOde);

impl OdeSystem<2> for RadialOdeLog {
    fn rhs(&self, t: f64, y: &[f64; 2]) -> [f64; 2] {
        let o = &self.0;
        let src = o.coef * (o.beta() * t).exp() * y[0].abs().powf(o.p - 1.0) * y[0];
        [y[1], -(o.n as f64 - 2.0) * y[1] - src]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotSample {
    pub r: f64,
    pub u: f64,
    pub du: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotTrajectory {
    pub a: f64,
    /// Accepted integrator steps, starting at the series point.
    pub samples: Vec<ShotSample>,
    pub first_zero: Option<f64>,
    /// `u'` at the first zero.
    pub slope_at_zero: Option<f64>,
    pub r_max: f64,
}

fn check_exponent(n: u32, alpha: f64, p: f64) -> Result<()> {
    let pa = threshold_exponent(n, alpha);
    if n < 3 || !(alpha >= 0.0) {
        return Err(Error::domain(format!("need N >= 3 and alpha >= 0, got N = {n}, alpha = {alpha}")));
    }
    if !(p > 1.0 && p <= pa * (1.0 + 1e-14)) {
        return Err(Error::domain(format!("exponent p = {p} outside (1, p_alpha = {pa}]")));
    }
    Ok(())
}

/// Shoot from `u(0) = a`, `u'(0) = 0` until the first zero or `r_max`.
pub fn integrate_radial_ivp(
    n: u32,
    alpha: f64,
    p: f64,
    a: f64,
    tol: IntegratorTol,
    r_max: f64,
) -> Result<ShotTrajectory> {
    check_exponent(n, alpha, p)?;
    tol.validate()?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("initial amplitude a = {a} must be positive")));
    }
    let ode = RadialOde::new(n, alpha, p);
    let mut cur = ode.start(a);
    let mut samples = vec![ShotSample {
        r: cur.x,
        u: cur.y[0],
        du: cur.y[1],
    }];
    let hit = Adaptive::new(Dopri5).first_crossing(&ode, &ode.tolerance(a, &tol), &mut cur, 0, r_max, |r, y| {
        samples.push(ShotSample { r, u: y[0], du: y[1] })
    })?;
    let (first_zero, slope_at_zero) = match hit {
        Some((r, y)) => {
            // replace the overshooting step end by the polished crossing
            if let Some(last) = samples.last_mut() {
                *last = ShotSample { r, u: y[0], du: y[1] };
            }
            (Some(r), Some(y[1]))
        }
        None => (None, None),
    };
    Ok(ShotTrajectory {
        a,
        samples,
        first_zero,
        slope_at_zero,
        r_max,
    })
}

/// First zero of the same shot computed independently: extrapolation
/// integrator, logarithmic independent variable, I step control.
pub fn first_zero_oracle(n: u32, alpha: f64, p: f64, a: f64, tol: IntegratorTol, r_max: f64) -> Result<Option<f64>> {
    check_exponent(n, alpha, p)?;
    tol.validate()?;
    let ode = RadialOde::new(n, alpha, p);
    let r0 = SERIES_START * ode.natural_scale(a);
    let y0 = ode.series(a, r0);
    let sys = RadialOdeLog(ode);
    let t0 = r0.ln();
    let mut cur = Cursor::new(t0, [y0[0], r0 * y0[1]], 0.1);
    let tol = Tolerance::scaled(tol.rtol, tol.atol, [a, a]);
    let hit = Adaptive::new(BulirschStoer::default()).first_crossing(&sys, &tol, &mut cur, 0, r_max.ln(), |_, _| {})?;
    Ok(hit.map(|(t, _)| t.exp()))
}

/// `(u, u')` of the shot with center value `a` at increasing radii `xs >= 0`.
pub fn shoot_values(ode: &RadialOde, a: f64, tol: &IntegratorTol, xs: &[f64]) -> Result<Vec<[f64; 2]>> {
    if xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::domain("sample radii must be nondecreasing"));
    }
    let mut cur = ode.start(a);
    let r_start = cur.x;
    let tol = ode.tolerance(a, tol);
    let drv = Adaptive::new(Dopri5);
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        if x <= r_start {
            out.push(ode.series(a, x));
        } else {
            drv.advance(ode, &tol, &mut cur, x, |_| Flow::Continue)?;
            out.push(cur.y);
        }
    }
    Ok(out)
}

/// Grading of the stored profile grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileGrid {
    pub geometric_ratio: f64,
    pub geometric_top: f64,
    pub uniform_points: usize,
    /// Geometric part stops below this multiple of the concentration scale.
    pub depth: f64,
}

impl Default for ProfileGrid {
    fn default() -> Self {
        Self {
            geometric_ratio: 1.05,
            geometric_top: 0.1,
            uniform_points: 2000,
            depth: 1e-4,
        }
    }
}

impl ProfileGrid {
    fn build(&self, scale: f64) -> Vec<f64> {
        let bottom = self.depth * scale;
        let mut geo = Vec::new();
        let mut r = self.geometric_top / self.geometric_ratio;
        while r > bottom {
            geo.push(r);
            r /= self.geometric_ratio;
        }
        geo.reverse();
        let mut grid = Vec::with_capacity(geo.len() + self.uniform_points + 1);
        grid.push(0.0);
        grid.extend(geo);
        let m = self.uniform_points.max(2);
        let top = self.geometric_top;
        grid.extend((0..m).map(|i| top + (1.0 - top) * i as f64 / (m - 1) as f64));
        grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: IntegratorTol,
    pub r_max: f64,
    pub shot_amplitude: f64,
    pub grid: ProfileGrid,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: IntegratorTol::default(),
            r_max: 1e12,
            shot_amplitude: 1.0,
            grid: ProfileGrid::default(),
        }
    }
}

/// The positive radial Dirichlet solution `u_{eps,alpha}` on the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub params: ProblemParams,
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub u0: f64,
    /// First zero of the shot with center value `shot_amplitude`.
    pub first_zero_raw: f64,
    pub shot_amplitude: f64,
    /// `u0^-2`.
    pub mu: f64,
    pub integrator_tol: IntegratorTol,
}

/// Shoot once, locate the first zero, rescale onto the unit ball.
pub fn solve_dirichlet_ball(params: &ProblemParams, opts: &SolveOptions) -> Result<RadialProfile> {
    let a = opts.shot_amplitude;
    let p = params.p();
    let shot = integrate_radial_ivp(params.n(), params.alpha(), p, a, opts.tol, opts.r_max)?;
    let big_r = shot.first_zero.ok_or(Error::NoZero { r_max: opts.r_max })?;
    let u0 = a * big_r.powf((2.0 + params.alpha()) / (p - 1.0));
    let mut profile = RadialProfile {
        params: *params,
        grid: Vec::new(),
        u: Vec::new(),
        du: Vec::new(),
        u0,
        first_zero_raw: big_r,
        shot_amplitude: a,
        mu: 1.0 / (u0 * u0),
        integrator_tol: opts.tol,
    };
    let grid = opts.grid.build(profile.concentration_scale());
    let vals = profile.sample(&grid)?;
    profile.u = vals.iter().map(|v| v[0]).collect();
    profile.du = vals.iter().map(|v| v[1]).collect();
    profile.grid = grid;
    Ok(profile)
}

impl RadialProfile {
    pub fn ode(&self) -> RadialOde {
        RadialOde::from_params(&self.params)
    }

    /// Length scale of the peak on the unit ball.
    pub fn concentration_scale(&self) -> f64 {
        self.ode().natural_scale(self.u0)
    }

    /// `(u, u')` at increasing radii in `[0, 1]`, evaluated through the
    /// stored shot: `u(r) = A u_shot(R r)` with `A = R^((2+alpha)/(p-1))`.
    pub fn sample(&self, rs: &[f64]) -> Result<Vec<[f64; 2]>> {
        if let Some(&r) = rs.iter().find(|&&r| !(0.0..=1.0 + 1e-12).contains(&r)) {
            return Err(Error::domain(format!("sample radius {r} outside [0, 1]")));
        }
        let ode = self.ode();
        let big_r = self.first_zero_raw;
        let amp = big_r.powf((2.0 + self.params.alpha()) / (ode.p - 1.0));
        let xs: Vec<f64> = rs.iter().map(|r| r * big_r).collect();
        let vals = shoot_values(&ode, self.shot_amplitude, &self.integrator_tol, &xs)?;
        Ok(vals.into_iter().map(|y| [amp * y[0], amp * big_r * y[1]]).collect())
    }

    /// Linear interpolation on the stored grid (0 outside [0, 1]).
    pub fn interpolate(&self, r: f64) -> f64 {
        if !(0.0..1.0).contains(&r) {
            return 0.0;
        }
        let i = self.grid.partition_point(|&g| g <= r).clamp(1, self.grid.len() - 1);
        let (r0, r1) = (self.grid[i - 1], self.grid[i]);
        let t = (r - r0) / (r1 - r0);
        self.u[i - 1] * (1.0 - t) + self.u[i] * t
    }

    pub fn boundary_value(&self) -> f64 {
        *self.u.last().unwrap_or(&0.0)
    }

    pub fn boundary_slope(&self) -> f64 {
        *self.du.last().unwrap_or(&0.0)
    }
}

/// `v(s) = [2/(2+alpha)]^(2/(p_alpha-1-eps)) u(s^(2/(2+alpha)))` at the given `s`.
pub fn fowler_transform(profile: &RadialProfile, s: &[f64]) -> Result<Vec<f64>> {
    let pr = &profile.params;
    let b = 2.0 + pr.alpha();
    let c = (2.0 / b).powf(2.0 / (pr.p() - 1.0));
    let rs: Vec<f64> = s.iter().map(|&x| x.powf(2.0 / b).min(1.0)).collect();
    Ok(profile.sample(&rs)?.into_iter().map(|v| c * v[0]).collect())
}

/// Worst pointwise relative residual of the transformed equation
/// `v'' + (m-1)/s v' + v^((m+2)/(m-2) - eps) = 0` on a 2000-point grid
/// graded geometrically toward the origin.
pub fn fowler_check(profile: &RadialProfile) -> Result<f64> {
    let pr = &profile.params;
    let b = 2.0 + pr.alpha();
    let m = crate::scalar::fowler_dimension(pr.n(), pr.alpha());
    let expo = (m + 2.0) / (m - 2.0) - pr.eps();
    // deeper than this the profile is flat to rounding and differences carry no information
    let s_min = (0.1 * profile.concentration_scale()).powf(b / 2.0);
    let pts = 2000;
    let ratio = (1.0 / s_min).ln() / (pts - 1) as f64;
    let s: Vec<f64> = (0..pts).map(|i| (s_min.ln() + ratio * i as f64).exp().min(1.0)).collect();
    let v = fowler_transform(profile, &s)?;
    Ok(fd::radial_relative_residual(&s, &v, m, |_, v| v.abs().powf(expo - 1.0) * v))
}

/// Smallest value of `bound(r) - u(r)` on the stored grid, where `bound` is
/// the explicit upper envelope
/// `[mu^((p_alpha-1-2eps)/4) / (mu^((p_alpha-1-eps)/2) + r^(2+alpha)/C)]^((N-2)/(2+alpha))`.
pub fn decay_bound_check(profile: &RadialProfile) -> f64 {
    profile
        .grid
        .iter()
        .zip(&profile.u)
        .map(|(&r, &u)| decay_bound(profile, r) - u)
        .fold(f64::INFINITY, f64::min)
}

pub fn decay_bound(profile: &RadialProfile, r: f64) -> f64 {
    let pr = &profile.params;
    let (nf, a, eps) = (pr.n() as f64, pr.alpha(), pr.eps());
    let pa = pr.p_alpha();
    let c = henon_constant(pr.n(), a);
    let mu = profile.mu;
    // in logs: mu is tiny for small eps
    let num = 0.25 * (pa - 1.0 - 2.0 * eps) * mu.ln();
    let den_a = 0.5 * (pa - 1.0 - eps) * mu.ln();
    let den_b = (2.0 + a) * r.ln() - c.ln();
    let den = if r == 0.0 {
        den_a
    } else {
        let hi = den_a.max(den_b);
        hi + ((den_a - hi).exp() + (den_b - hi).exp()).ln()
    };
    ((num - den) * (nf - 2.0) / (2.0 + a)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNormRow {
    pub eps: f64,
    pub u0: f64,
    pub eps_u0_sq: f64,
    pub big_m: f64,
    pub ratio: f64,
    /// `mu^eps`, which tends to 1.
    pub mu_pow_eps: f64,
}

/// `eps u0^2` against `M(N, alpha)` along a decreasing list of `eps`.
pub fn sup_norm_table(n: u32, alpha: f64, eps_list: &[f64], opts: &SolveOptions) -> Result<Vec<SupNormRow>> {
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("eps_list must be strictly decreasing"));
    }
    let big_m = sup_norm_constant(n, alpha);
    eps_list
        .iter()
        .map(|&eps| {
            let params = ProblemParams::new(n, alpha, eps)?;
            let profile = solve_dirichlet_ball(&params, opts)?;
            let v = eps * profile.u0 * profile.u0;
            Ok(SupNormRow {
                eps,
                u0: profile.u0,
                eps_u0_sq: v,
                big_m,
                ratio: v / big_m,
                mu_pow_eps: profile.mu.powf(eps),
            })
        })
        .collect()
}

/// Polynomial extrapolation of `eps u0^2` to `eps = 0` through the last
/// `order + 1` rows (Neville's scheme in `eps`).
pub fn extrapolate_sup_norm(rows: &[SupNormRow], order: usize) -> Result<f64> {
    if rows.len() < order + 1 {
        return Err(Error::domain("not enough rows for the requested extrapolation order"));
    }
    let tail = &rows[rows.len() - order - 1..];
    let xs: Vec<f64> = tail.iter().map(|r| r.eps).collect();
    let mut t: Vec<f64> = tail.iter().map(|r| r.eps_u0_sq).collect();
    for l in 1..=order {
        for i in (l..t.len()).rev() {
            t[i] = (xs[i] * t[i - 1] - xs[i - l] * t[i]) / (xs[i] - xs[i - l]);
        }
    }
    Ok(t[order])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> IntegratorTol {
        IntegratorTol { rtol: 1e-12, atol: 1e-14 }
    }

    #[test]
    fn critical_shot_matches_closed_form() {
        let shot = integrate_radial_ivp(3, 0.0, 5.0, 1.0, tight(), 50.0).unwrap();
        assert!(shot.first_zero.is_none());
        let worst = shot
            .samples
            .iter()
            .map(|s| (s.u - (1.0 + s.r * s.r / 3.0).powf(-0.5)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "sup error {worst:e}");
        assert!(shot.samples.last().unwrap().r == 50.0);
    }

    #[test]
    fn critical_shot_stays_positive() {
        for (n, a) in [(3u32, 0.0), (3, 2.0), (4, 1.0)] {
            let pa = threshold_exponent(n, a);
            let shot = integrate_radial_ivp(n, a, pa, 1.0, IntegratorTol::default(), 1e3).unwrap();
            assert!(shot.first_zero.is_none());
            assert!(shot.samples.iter().all(|s| s.u > 0.0));
        }
    }

    #[test]
    fn ivp_rejects_bad_exponent() {
        assert!(matches!(
            integrate_radial_ivp(3, 0.0, 5.5, 1.0, IntegratorTol::default(), 10.0),
            Err(Error::Domain(_))
        ));
        assert!(integrate_radial_ivp(3, 0.0, 1.0, 1.0, IntegratorTol::default(), 10.0).is_err());
        assert!(integrate_radial_ivp(3, 0.0, 3.0, -1.0, IntegratorTol::default(), 10.0).is_err());
    }

    #[test]
    fn shot_starts_from_series() {
        let shot = integrate_radial_ivp(3, 1.0, 5.0, 2.0, IntegratorTol::default(), 1e3).unwrap();
        let s0 = shot.samples[0];
        assert!((s0.u - 2.0).abs() < 1e-12 && s0.du <= 0.0 && s0.du > -1e-9);
        assert!(shot.samples.windows(2).all(|w| w[1].u <= w[0].u));
    }

    #[test]
    fn first_zero_scaling_law() {
        let (n, alpha, p) = (3u32, 1.0, 6.9);
        let r1 = integrate_radial_ivp(n, alpha, p, 1.0, tight(), 1e9).unwrap().first_zero.unwrap();
        for a in [0.5, 2.0, 10.0] {
            let ra = integrate_radial_ivp(n, alpha, p, a, tight(), 1e9).unwrap().first_zero.unwrap();
            let want = a.powf(-(p - 1.0) / (2.0 + alpha)) * r1;
            assert!(((ra - want) / want).abs() < 1e-8, "a = {a}: {ra} vs {want}");
        }
    }

    #[test]
    fn dual_integrators_agree_on_first_zero() {
        let a = integrate_radial_ivp(3, 2.0, 5.0, 1.0, tight(), 1e6).unwrap().first_zero.unwrap();
        let b = first_zero_oracle(3, 2.0, 5.0, 1.0, tight(), 1e6).unwrap().unwrap();
        assert!(((a - b) / a).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn profile_invariants() {
        let params = ProblemParams::new(3, 2.0, 0.05).unwrap();
        let prof = solve_dirichlet_ball(&params, &SolveOptions::default()).unwrap();
        assert_eq!(prof.grid[0], 0.0);
        assert_eq!(*prof.grid.last().unwrap(), 1.0);
        assert!(prof.grid.windows(2).all(|w| w[1] > w[0]));
        assert!((prof.u[0] - prof.u0).abs() < 1e-14 * prof.u0);
        assert!(prof.boundary_value().abs() < 1e-9 * prof.u0);
        assert!(prof.du[1..].iter().all(|&d| d < 0.0));
        assert!(prof.boundary_slope() < 0.0);
        assert!((prof.mu * prof.u0 * prof.u0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn supercritical_is_reported() {
        let ode_p = threshold_exponent(3, 0.0);
        let shot = integrate_radial_ivp(3, 0.0, ode_p, 1.0, IntegratorTol::default(), 1e4).unwrap();
        assert!(shot.first_zero.is_none());
        // the Dirichlet solver surfaces the same situation as an error
        let params = ProblemParams::new(3, 0.0, 0.5).unwrap();
        let opts = SolveOptions {
            r_max: 1.0,
            ..SolveOptions::default()
        };
        assert!(matches!(solve_dirichlet_ball(&params, &opts), Err(Error::NoZero { .. })));
    }

    #[test]
    fn amplitude_invariance() {
        let params = ProblemParams::new(3, 1.0, 0.05).unwrap();
        let one = solve_dirichlet_ball(&params, &SolveOptions::default()).unwrap();
        let four = solve_dirichlet_ball(
            &params,
            &SolveOptions {
                shot_amplitude: 4.0,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let worst = one.u.iter().zip(&four.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8 * one.u0, "sup difference {worst:e}");
    }

    #[test]
    fn fowler_transform_boundary_values() {
        let params = ProblemParams::new(3, 2.0, 0.05).unwrap();
        let prof = solve_dirichlet_ball(&params, &SolveOptions::default()).unwrap();
        let v = fowler_transform(&prof, &[0.0, 1.0]).unwrap();
        let c = (2.0f64 / 4.0).powf(2.0 / (9.0 - 1.0 - 0.05));
        assert!((v[0] - c * prof.u0).abs() < 1e-12 * prof.u0);
        assert!(v[1].abs() < 1e-9 * prof.u0);
        let res = fowler_check(&prof).unwrap();
        assert!(res < 1e-6, "fowler residual {res:e}");
    }

    #[test]
    fn decay_bound_holds() {
        let params = ProblemParams::new(3, 1.0, 0.05).unwrap();
        let prof = solve_dirichlet_ball(&params, &SolveOptions::default()).unwrap();
        assert!((decay_bound(&prof, 0.0) - prof.u0).abs() < 1e-12 * prof.u0);
        let margin = decay_bound_check(&prof);
        assert!(margin >= -1e-9 * prof.u0, "margin {margin:e}");
    }

    #[test]
    fn extrapolation_is_exact_on_polynomials() {
        let rows: Vec<SupNormRow> = [0.1, 0.05, 0.02, 0.01]
            .iter()
            .map(|&e| SupNormRow {
                eps: e,
                u0: 0.0,
                eps_u0_sq: 3.0 + 2.0 * e - 5.0 * e * e,
                big_m: 3.0,
                ratio: 0.0,
                mu_pow_eps: 0.0,
            })
            .collect();
        assert!((extrapolate_sup_norm(&rows, 2).unwrap() - 3.0).abs() < 1e-12);
        assert!(sup_norm_table(3, 0.0, &[0.01, 0.1], &SolveOptions::default()).is_err());
    }
}
