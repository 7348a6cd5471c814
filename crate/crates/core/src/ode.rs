//! Explicit adaptive integrators for small fixed-size systems.
//!
//! Two independent schemes share one driver: the Dormand-Prince 5(4) pair
//! with a PI step controller and continuous extension, and Gragg-Bulirsch-Stoer
//! extrapolation with a plain I controller. Steps can be clipped to land
//! exactly on requested abscissae, and a sign change of one component can be
//! located by re-stepping from the start of the bracketing step.

use crate::error::{Error, Result};
use crate::roots;

pub trait OdeSystem<const D: usize> {
    fn rhs(&self, x: f64, y: &[f64; D]) -> [f64; D];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<const D: usize> {
    pub rtol: f64,
    pub atol: [f64; D],
}

impl<const D: usize> Tolerance<D> {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol: [atol; D],
        }
    }

    /// Absolute tolerances expressed relative to a per-component scale.
    pub fn scaled(rtol: f64, atol: f64, scale: [f64; D]) -> Self {
        Self {
            rtol,
            atol: scale.map(|s| atol * s),
        }
    }

    fn norm(&self, y0: &[f64; D], y1: &[f64; D], err: &[f64; D]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..D {
            let sc = self.atol[i] + self.rtol * y0[i].abs().max(y1[i].abs());
            worst = worst.max(err[i].abs() / sc);
        }
        worst
    }
}

/// One attempted step.
#[derive(Debug, Clone)]
pub struct Trial<const D: usize> {
    pub y: [f64; D],
    pub err: [f64; D],
    dense: Option<[[f64; D]; 5]>,
}

impl<const D: usize> Trial<D> {
    /// Continuous extension at `theta` in [0, 1], when the scheme has one.
    pub fn interpolate(&self, theta: f64) -> Option<[f64; D]> {
        let c = self.dense.as_ref()?;
        let t1 = 1.0 - theta;
        let mut out = [0.0; D];
        for i in 0..D {
            out[i] = c[0][i] + theta * (c[1][i] + t1 * (c[2][i] + theta * (c[3][i] + t1 * c[4][i])));
        }
        Some(out)
    }
}

pub trait Stepper<const D: usize> {
    /// Order used by the step-size controller exponent.
    fn order(&self) -> f64;
    fn pi_controller(&self) -> bool;
    fn trial<S: OdeSystem<D>>(&self, sys: &S, x: f64, y: &[f64; D], h: f64) -> Trial<D>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Dopri5;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

impl<const D: usize> Stepper<D> for Dopri5 {
    fn order(&self) -> f64 {
        5.0
    }

    fn pi_controller(&self) -> bool {
        true
    }

    fn trial<S: OdeSystem<D>>(&self, sys: &S, x: f64, y: &[f64; D], h: f64) -> Trial<D> {
        let k1 = sys.rhs(x, y);
        let k2 = sys.rhs(x + C2 * h, &axpy(y, h, &[(A21, &k1)]));
        let k3 = sys.rhs(x + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = sys.rhs(x + C4 * h, &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = sys.rhs(
            x + C5 * h,
            &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = sys.rhs(
            x + h,
            &axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y1 = axpy(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = sys.rhs(x + h, &y1);
        let mut err = [0.0; D];
        let mut dense = [[0.0; D]; 5];
        for i in 0..D {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let dy = y1[i] - y[i];
            let bspl = h * k1[i] - dy;
            dense[0][i] = y[i];
            dense[1][i] = dy;
            dense[2][i] = bspl;
            dense[3][i] = dy - h * k7[i] - bspl;
            dense[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        Trial {
            y: y1,
            err,
            dense: Some(dense),
        }
    }
}

/// Gragg-Bulirsch-Stoer extrapolation with a fixed harmonic-even sequence.
#[derive(Debug, Clone, Copy)]
pub struct BulirschStoer {
    pub columns: usize,
}

impl Default for BulirschStoer {
    fn default() -> Self {
        Self { columns: 8 }
    }
}

impl BulirschStoer {
    fn midpoint<const D: usize, S: OdeSystem<D>>(sys: &S, x: f64, y: &[f64; D], h: f64, n: usize) -> [f64; D] {
        let sub = h / n as f64;
        let f0 = sys.rhs(x, y);
        let mut prev = *y;
        let mut cur = axpy(y, sub, &[(1.0, &f0)]);
        for m in 1..n {
            let f = sys.rhs(x + m as f64 * sub, &cur);
            let next = axpy(&prev, 2.0 * sub, &[(1.0, &f)]);
            prev = cur;
            cur = next;
        }
        let f = sys.rhs(x + h, &cur);
        let mut out = [0.0; D];
        for i in 0..D {
            out[i] = 0.5 * (prev[i] + cur[i] + sub * f[i]);
        }
        out
    }
}

impl<const D: usize> Stepper<D> for BulirschStoer {
    fn order(&self) -> f64 {
        2.0 * self.columns as f64 - 1.0
    }

    fn pi_controller(&self) -> bool {
        false
    }

    fn trial<S: OdeSystem<D>>(&self, sys: &S, x: f64, y: &[f64; D], h: f64) -> Trial<D> {
        let k = self.columns;
        let seq: Vec<usize> = (1..=k).map(|j| 2 * j).collect();
        // Aitken-Neville tableau in h^2
        let mut table: Vec<[f64; D]> = Vec::with_capacity(k);
        let mut prev_diag = *y;
        let mut last_diag = *y;
        for j in 0..k {
            let mut row = vec![Self::midpoint(sys, x, y, h, seq[j])];
            for l in 1..=j {
                let ratio = (seq[j] as f64 / seq[j - l] as f64).powi(2);
                let mut t = [0.0; D];
                for i in 0..D {
                    t[i] = row[l - 1][i] + (row[l - 1][i] - table[l - 1][i]) / (ratio - 1.0);
                }
                row.push(t);
            }
            prev_diag = if j > 0 { row[j - 1] } else { row[0] };
            last_diag = row[j];
            table = row;
        }
        let mut err = [0.0; D];
        for i in 0..D {
            err[i] = last_diag[i] - prev_diag[i];
        }
        Trial {
            y: last_diag,
            err,
            dense: None,
        }
    }
}

/// What the driver should do after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// An accepted step from `x0` to `x1`.
pub struct Accepted<'a, const D: usize> {
    pub x0: f64,
    pub y0: [f64; D],
    pub x1: f64,
    pub trial: &'a Trial<D>,
}

#[derive(Debug, Clone)]
pub struct Adaptive<S> {
    pub stepper: S,
    pub max_steps: usize,
    /// Smallest admissible step relative to |x|.
    pub min_rel_step: f64,
}

impl<S> Adaptive<S> {
    pub fn new(stepper: S) -> Self {
        Self {
            stepper,
            max_steps: 2_000_000,
            min_rel_step: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Cursor<const D: usize> {
    pub x: f64,
    pub y: [f64; D],
    /// Suggested next step.
    pub h: f64,
    err_prev: f64,
}

impl<const D: usize> Cursor<D> {
    pub fn new(x: f64, y: [f64; D], h: f64) -> Self {
        Self {
            x,
            y,
            h,
            err_prev: 1e-4,
        }
    }
}

impl<St> Adaptive<St> {
    /// Integrate from the cursor to exactly `target`, reporting every accepted
    /// step. Returns `Ok(true)` if `target` was reached and `Ok(false)` if the
    /// callback stopped early; the cursor then sits at the end of that step.
    pub fn advance<const D: usize, S, F>(
        &self,
        sys: &S,
        tol: &Tolerance<D>,
        cur: &mut Cursor<D>,
        target: f64,
        mut on_step: F,
    ) -> Result<bool>
    where
        St: Stepper<D>,
        S: OdeSystem<D>,
        F: FnMut(&Accepted<'_, D>) -> Flow,
    {
        let order = self.stepper.order();
        let mut steps = 0usize;
        while cur.x < target {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration {
                    at: cur.x,
                    reason: format!("exceeded {} steps", self.max_steps),
                });
            }
            let remaining = target - cur.x;
            let last = cur.h >= remaining * (1.0 - 1e-12);
            let h = if last { remaining } else { cur.h };
            let trial = self.stepper.trial(sys, cur.x, &cur.y, h);
            let err = tol.norm(&cur.y, &trial.y, &trial.err);
            if !err.is_finite() {
                cur.h = 0.25 * h;
            } else if err <= 1.0 {
                let x1 = if last { target } else { cur.x + h };
                let acc = Accepted {
                    x0: cur.x,
                    y0: cur.y,
                    x1,
                    trial: &trial,
                };
                let flow = on_step(&acc);
                let fac = if self.stepper.pi_controller() {
                    let e = err.max(1e-10);
                    0.9 * e.powf(-0.7 / order) * cur.err_prev.powf(0.4 / order)
                } else {
                    0.9 * err.max(1e-10).powf(-1.0 / order)
                };
                cur.err_prev = err.max(1e-4);
                cur.x = x1;
                cur.y = trial.y;
                // a clipped final step says nothing about the natural step size
                if !last || fac < 1.0 {
                    cur.h = h * fac.clamp(0.2, 5.0);
                }
                if flow == Flow::Stop {
                    return Ok(false);
                }
                continue;
            } else {
                let fac = 0.9 * err.powf(-1.0 / order);
                cur.h = h * fac.clamp(0.1, 0.9);
            }
            if cur.h < self.min_rel_step * cur.x.abs().max(1e-300) {
                return Err(Error::Integration {
                    at: cur.x,
                    reason: format!("step size underflow (h = {:e})", cur.h),
                });
            }
        }
        Ok(true)
    }

    /// Values at each of the increasing abscissae `xs` (all >= the cursor).
    pub fn solve_at<const D: usize, S>(
        &self,
        sys: &S,
        tol: &Tolerance<D>,
        cur: &mut Cursor<D>,
        xs: &[f64],
    ) -> Result<Vec<[f64; D]>>
    where
        St: Stepper<D>,
        S: OdeSystem<D>,
    {
        let mut out = Vec::with_capacity(xs.len());
        for &x in xs {
            if x < cur.x {
                return Err(Error::domain(format!(
                    "output abscissae must be increasing and start after {}",
                    cur.x
                )));
            }
            self.advance(sys, tol, cur, x, |_| Flow::Continue)?;
            out.push(cur.y);
        }
        Ok(out)
    }

    /// Advance until component `idx` changes sign or `x_max` is reached.
    ///
    /// On a sign change the root is polished by re-stepping from the start of
    /// the bracketing step, so its accuracy is that of a single step of the
    /// scheme rather than of an interpolant. Returns the crossing and the
    /// state there.
    pub fn first_crossing<const D: usize, S>(
        &self,
        sys: &S,
        tol: &Tolerance<D>,
        cur: &mut Cursor<D>,
        idx: usize,
        x_max: f64,
        mut on_step: impl FnMut(f64, &[f64; D]),
    ) -> Result<Option<(f64, [f64; D])>>
    where
        St: Stepper<D>,
        S: OdeSystem<D>,
    {
        let mut bracket: Option<(f64, [f64; D], f64, f64)> = None;
        self.advance(sys, tol, cur, x_max, |acc| {
            on_step(acc.x1, &acc.trial.y);
            if acc.trial.y[idx] <= 0.0 && acc.y0[idx] > 0.0 {
                // initial guess from the continuous extension when available
                let h = acc.x1 - acc.x0;
                let guess = match acc.trial.interpolate(0.5) {
                    Some(_) => {
                        let f = |th: f64| acc.trial.interpolate(th).map(|v| v[idx]).unwrap_or(0.0);
                        roots::brent(f, 0.0, 1.0, 1e-6, 60).map(|r| r.x).unwrap_or(0.5)
                    }
                    None => acc.y0[idx] / (acc.y0[idx] - acc.trial.y[idx]),
                };
                bracket = Some((acc.x0, acc.y0, h, guess));
                Flow::Stop
            } else {
                Flow::Continue
            }
        })?;
        let Some((x0, y0, h, guess)) = bracket else {
            return Ok(None);
        };
        let f = |s: f64| self.stepper.trial(sys, x0, &y0, s).y[idx];
        // narrow the bracket around the interpolated guess when it straddles
        let (mut lo, mut hi) = (0.0, h);
        let width = 1e-3 * h;
        let (a, b) = ((guess * h - width).max(0.0), (guess * h + width).min(h));
        if a > 0.0 && b < h && f(a) > 0.0 && f(b) <= 0.0 {
            (lo, hi) = (a, b);
        }
        let root = roots::brent(f, lo, hi, 1e-15 * (x0 + h).abs(), 200)?;
        let y = self.stepper.trial(sys, x0, &y0, root.x).y;
        Ok(Some((x0 + root.x, y)))
    }
}
