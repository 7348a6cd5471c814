//! Closed-form quantities: exponents, the Henon constant, the sup-norm
//! constant `M(N, alpha)`, the entire-space bubble and its first
//! linearized eigenpair, and spherical-harmonic data.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One instance of `-Δu = |x|^alpha u^(p_alpha - eps)` on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ProblemParams {
    n: u32,
    alpha: f64,
    eps: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    #[serde(rename = "N")]
    n: u32,
    alpha: f64,
    eps: f64,
}

impl TryFrom<RawParams> for ProblemParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ProblemParams::new(raw.n, raw.alpha, raw.eps)
    }
}

impl From<ProblemParams> for RawParams {
    fn from(p: ProblemParams) -> Self {
        RawParams {
            n: p.n,
            alpha: p.alpha,
            eps: p.eps,
        }
    }
}

impl ProblemParams {
    pub fn new(n: u32, alpha: f64, eps: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain(format!("dimension N = {n} must be at least 3")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::domain(format!("alpha = {alpha} must be finite and >= 0")));
        }
        let p_alpha = threshold_exponent(n, alpha);
        if !(eps.is_finite() && eps > 0.0 && eps < p_alpha - 1.0) {
            return Err(Error::domain(format!(
                "eps = {eps} must lie in (0, p_alpha - 1) = (0, {})",
                p_alpha - 1.0
            )));
        }
        Ok(Self { n, alpha, eps })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.n, alpha, self.eps)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.n, self.alpha, eps)
    }

    pub fn p_alpha(&self) -> f64 {
        threshold_exponent(self.n, self.alpha)
    }

    /// The working exponent `p_alpha - eps`.
    pub fn p(&self) -> f64 {
        self.p_alpha() - self.eps
    }

    pub fn henon_constant(&self) -> f64 {
        henon_constant(self.n, self.alpha)
    }

    pub fn limit_constants(&self) -> LimitConstants {
        LimitConstants::new(self.n, self.alpha)
    }
}

/// Constants of the `eps -> 0` limit for fixed `(N, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub c_na: f64,
    pub big_m: f64,
    pub lambda: f64,
    pub m_fowler: f64,
}

impl LimitConstants {
    pub fn new(n: u32, alpha: f64) -> Self {
        Self {
            c_na: henon_constant(n, alpha),
            big_m: sup_norm_constant(n, alpha),
            lambda: limit_lambda(n, alpha),
            m_fowler: fowler_dimension(n, alpha),
        }
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive real arguments.
///
/// Integers up to 170 go through an exact running product; everything else
/// uses the Lanczos approximation with `g = 7` (nine coefficients), with the
/// reflection formula below 1/2.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("gamma requires x > 0, got {x}")));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x == x.floor() && x <= 171.0 {
        return (1..x as u64).fold(1.0, |acc, k| acc * k as f64);
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    let z = x - 1.0;
    let series = LANCZOS_COEF
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_COEF[0], |acc, (i, c)| acc + c / (z + i as f64));
    let t = z + LANCZOS_G + 0.5;
    // split the power so t^(z + 1/2) does not overflow before exp(-t) kicks in
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * series
}

/// `p_alpha = (N + 2 + 2 alpha) / (N - 2)`.
pub fn threshold_exponent(n: u32, alpha: f64) -> f64 {
    let n = n as f64;
    (n + 2.0 + 2.0 * alpha) / (n - 2.0)
}

/// `C_{N,alpha} = (N - 2)(N + alpha)`.
pub fn henon_constant(n: u32, alpha: f64) -> f64 {
    let n = n as f64;
    (n - 2.0) * (n + alpha)
}

/// Fractional dimension `m = 2(N + alpha)/(2 + alpha)` of the unweighted
/// equation reached by `v(s) = c u(s^(2/(2+alpha)))`.
pub fn fowler_dimension(n: u32, alpha: f64) -> f64 {
    2.0 * (n as f64 + alpha) / (2.0 + alpha)
}

/// `M(N, alpha)`, the limit of `eps u(0)^2`.
pub fn sup_norm_constant(n: u32, alpha: f64) -> f64 {
    let nf = n as f64;
    let b = 2.0 + alpha;
    let g_num = gamma_unchecked(2.0 * (nf + alpha) / b);
    let g_den = gamma_unchecked((nf + alpha) / b);
    2.0 * b / (nf - 2.0) * henon_constant(n, alpha).powf((nf - 2.0) / b) * g_num / (g_den * g_den)
}

/// Concentration scale `lambda` of the limit bubble, defined through
/// `lambda^((N-2)/2) = C^(-(N-2)/(2(2+alpha))) M^(1/2)`.
pub fn limit_lambda(n: u32, alpha: f64) -> f64 {
    let nf = n as f64;
    let b = 2.0 + alpha;
    let c = henon_constant(n, alpha);
    let m = sup_norm_constant(n, alpha);
    // lambda = C^(-1/b) M^(1/(N-2))
    (-c.ln() / b + m.ln() / (nf - 2.0)).exp()
}

/// Radial bubble `U_{lambda,alpha}(r)` solving `-ΔU = C r^alpha U^p_alpha` on R^N.
pub fn limit_profile(r: f64, lambda: f64, n: u32, alpha: f64) -> f64 {
    let nf = n as f64;
    let b = 2.0 + alpha;
    let s = (lambda * r).powf(b);
    lambda.powf(0.5 * (nf - 2.0)) / (1.0 + s).powf((nf - 2.0) / b)
}

/// First eigenvalue of the limit linearized problem with `r^-2` weight.
pub fn lambda1_closed(n: u32, alpha: f64) -> f64 {
    let nf = n as f64;
    -(alpha + 2.0) * (2.0 * nf + alpha - 2.0) / 4.0
}

/// The same quantity in expanded polynomial form.
pub fn lambda1_expanded(n: u32, alpha: f64) -> f64 {
    let nf = n as f64;
    -alpha * alpha / 4.0 - alpha * nf / 2.0 + 1.0 - nf
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereEigen {
    /// `sigma_k = k(N + k - 2)`; always an integer.
    pub sigma: u64,
    pub multiplicity: u64,
}

impl SphereEigen {
    pub fn sigma_f64(&self) -> f64 {
        self.sigma as f64
    }
}

/// Eigenvalue `sigma_k` of the Laplace-Beltrami operator on S^(N-1) and
/// the dimension of its eigenspace `(N+2k-2)(N+k-3)!/((N-2)! k!)`.
pub fn sphere_eigen(n: u32, k: u32) -> SphereEigen {
    let (n, k) = (n as u64, k as u64);
    let sigma = k * (n + k - 2);
    if k == 0 {
        return SphereEigen {
            sigma,
            multiplicity: 1,
        };
    }
    // (N+k-3)!/((N-2)! k!) = binom(N+k-3, k)/(N-2); the full product is an
    // integer, so multiply by (N+2k-2) before dividing.
    let b = binomial(n + k - 3, k);
    let multiplicity = (n + 2 * k - 2) * b / (n - 2);
    SphereEigen {
        sigma,
        multiplicity,
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Root `alpha_k = 2(k-1)` of `Λ₁(alpha) = -sigma_k`.
pub fn bifurcation_alpha(k: u32) -> Result<f64> {
    if k < 1 {
        return Err(Error::domain("bifurcation index k must be >= 1"));
    }
    Ok(2.0 * (k as f64 - 1.0))
}

/// Positive eigenfunction of the limit problem for `Λ₁(alpha)`.
pub fn first_eigenfunction_closed(r: f64, lambda: f64, n: u32, alpha: f64) -> f64 {
    let nf = n as f64;
    let b = 2.0 + alpha;
    let s = (lambda * r).powf(b);
    s.sqrt() / (1.0 + s).powf((nf + alpha) / b)
}

/// Radius where [`first_eigenfunction_closed`] peaks:
/// `(lambda r)^(2+alpha) = (2+alpha)/(2N+alpha-2)`.
pub fn first_eigenfunction_argmax(lambda: f64, n: u32, alpha: f64) -> f64 {
    let b = 2.0 + alpha;
    (b / (2.0 * n as f64 + alpha - 2.0)).powf(1.0 / b) / lambda
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Stirling series after upward shifting; independent of the Lanczos path.
    fn ln_gamma_stirling(x: f64) -> f64 {
        let mut shift = 0.0;
        let mut z = x;
        while z < 30.0 {
            shift += z.ln();
            z += 1.0;
        }
        let z2 = z * z;
        let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z2 * z2 * z)
            - 1.0 / (1680.0 * z2 * z2 * z2 * z)
            + 1.0 / (1188.0 * z2 * z2 * z2 * z2 * z);
        (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series - shift
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma(3.0).unwrap(), 2.0);
        assert_eq!(gamma(6.0).unwrap(), 120.0);
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-14);
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(matches!(gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma(-1.5), Err(Error::Domain(_))));
        assert!(gamma(f64::NAN).is_err());
    }

    #[test]
    fn gamma_matches_reference_values() {
        // references from a 30-digit evaluation
        let cases = [
            (1.25, 0.906_402_477_055_477_0),
            (2.5, 1.329_340_388_179_137_0),
            (0.75, 1.225_416_702_465_177_6),
            (7.3, 1_271.423_633_663_909_3),
            (33.7, 3.032_162_654_739_841_6e36),
            (49.9, 4.118_011_034_253_058e62),
        ];
        for (x, want) in cases {
            let got = gamma(x).unwrap();
            assert!(rel(got, want) < 1e-13, "gamma({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn gamma_agrees_with_stirling_oracle() {
        let mut x = 0.55;
        while x < 50.0 {
            let got = gamma(x).unwrap().ln();
            let want = ln_gamma_stirling(x);
            assert!((got - want).abs() < 1e-13 * want.abs().max(1.0), "x = {x}");
            x += 0.37;
        }
    }

    proptest! {
        #[test]
        fn gamma_recurrence(x in 0.5f64..40.0) {
            let r = gamma(x + 1.0).unwrap() / gamma(x).unwrap();
            prop_assert!(rel(r, x) < 1e-12);
        }

        #[test]
        fn lambda1_strictly_decreasing(n in 3u32..9, a in 0.0f64..11.9, da in 1e-3f64..0.1) {
            prop_assert!(lambda1_closed(n, a + da) < lambda1_closed(n, a));
        }
    }

    #[test]
    fn exponents_and_constants() {
        assert_eq!(threshold_exponent(3, 0.0), 5.0);
        assert_eq!(threshold_exponent(3, 2.0), 9.0);
        assert_eq!(threshold_exponent(4, 1.0), 4.0);
        assert_eq!(henon_constant(3, 0.0), 3.0);
        assert_eq!(henon_constant(3, 2.0), 5.0);
        assert_eq!(henon_constant(4, 1.0), 10.0);
    }

    #[test]
    fn sup_norm_constant_values() {
        assert!(rel(sup_norm_constant(4, 0.0), 96.0) < 1e-12);
        assert!(rel(sup_norm_constant(3, 0.0), 32.0 * 3f64.sqrt() / PI) < 1e-12);
        // 8 * 5^(1/4) * Gamma(5/2) / Gamma(5/4)^2 with reference Gamma values
        let want = 8.0 * 5f64.powf(0.25) * 1.329_340_388_179_137_0 / 0.906_402_477_055_477_0f64.powi(2);
        assert!(rel(sup_norm_constant(3, 2.0), want) < 1e-12);
        assert!((sup_norm_constant(3, 2.0) - 19.356).abs() < 1e-3);
    }

    #[test]
    fn limit_lambda_values() {
        assert!(rel(limit_lambda(3, 0.0), 32.0 / PI) < 1e-12);
        assert!(rel(limit_lambda(4, 0.0), 12f64.sqrt()) < 1e-12);
        for (n, a) in [(3, 0.5), (3, 2.0), (4, 1.0), (5, 3.0)] {
            let lam = limit_lambda(n, a);
            let want = (n as f64 - 2.0) / 2.0;
            assert!(rel(limit_profile(0.0, lam, n, a), lam.powf(want)) < 1e-14);
            // defining relation
            let lhs = lam.powf(want);
            let rhs = henon_constant(n, a).powf(-want / (2.0 + a)) * sup_norm_constant(n, a).sqrt();
            assert!(rel(lhs, rhs) < 1e-12);
        }
    }

    /// Second derivative by three-level Richardson on central differences.
    fn d2(f: &dyn Fn(f64) -> f64, r: f64) -> f64 {
        let cd = |h: f64| (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
        let h = 1e-2 * r;
        let (a, b, c) = (cd(h), cd(h / 2.0), cd(h / 4.0));
        let ab = (4.0 * b - a) / 3.0;
        let bc = (4.0 * c - b) / 3.0;
        (16.0 * bc - ab) / 15.0
    }

    fn d1(f: &dyn Fn(f64) -> f64, r: f64) -> f64 {
        let cd = |h: f64| (f(r + h) - f(r - h)) / (2.0 * h);
        let h = 1e-2 * r;
        let (a, b, c) = (cd(h), cd(h / 2.0), cd(h / 4.0));
        let ab = (4.0 * b - a) / 3.0;
        let bc = (4.0 * c - b) / 3.0;
        (16.0 * bc - ab) / 15.0
    }

    /// Hand-differentiated U' and U'' for the bubble.
    fn bubble_derivatives(r: f64, lam: f64, n: u32, a: f64) -> (f64, f64) {
        let b = 2.0 + a;
        let g = (n as f64 - 2.0) / b;
        let amp = lam.powf((n as f64 - 2.0) / 2.0);
        let s = (lam * r).powf(b);
        let d1 = -amp * g * b * s / r * (1.0 + s).powf(-g - 1.0);
        let d2 = -amp * g * b
            * ((b - 1.0) * s / (r * r) * (1.0 + s).powf(-g - 1.0)
                - (g + 1.0) * b * s * s / (r * r) * (1.0 + s).powf(-g - 2.0));
        (d1, d2)
    }

    #[test]
    fn limit_profile_solves_entire_space_equation() {
        for (n, a) in [(3u32, 0.0), (3, 2.0), (4, 1.0)] {
            let lam = limit_lambda(n, a);
            let c = henon_constant(n, a);
            let pa = threshold_exponent(n, a);
            let u = |r: f64| limit_profile(r, lam, n, a);
            for r in [0.1f64, 1.0, 10.0] {
                let (du, ddu) = bubble_derivatives(r, lam, n, a);
                // the closed-form derivatives themselves agree with differencing
                assert!((d1(&u, r) - du).abs() < 1e-7 * du.abs().max(1.0));
                assert!((d2(&u, r) - ddu).abs() < 1e-6 * ddu.abs().max(1.0));
                let res = ddu + (n as f64 - 1.0) / r * du + c * r.powf(a) * u(r).powf(pa);
                let scale = ddu.abs().max(1.0);
                assert!(res.abs() < 1e-10 * scale, "N={n} alpha={a} r={r} residual {res:e}");
            }
            // r^(N-2) U(r) -> lambda^(-(N-2)/2)
            let far = 1e7f64;
            let got = far.powf(n as f64 - 2.0) * u(far);
            assert!(rel(got, lam.powf(-(n as f64 - 2.0) / 2.0)) < 1e-6);
        }
    }

    #[test]
    fn limit_profile_decreasing() {
        let lam = limit_lambda(3, 1.0);
        let mut prev = f64::INFINITY;
        for i in 0..400 {
            let v = limit_profile(i as f64 * 0.05, lam, 3, 1.0);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn lambda1_examples_and_forms() {
        assert_eq!(lambda1_closed(3, 0.0), -2.0);
        assert_eq!(lambda1_closed(3, 2.0), -6.0);
        assert_eq!(lambda1_closed(3, 4.0), -12.0);
        for n in 3..9 {
            for i in 0..=120 {
                let a = i as f64 * 0.1;
                assert!((lambda1_closed(n, a) - lambda1_expanded(n, a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sphere_eigen_values() {
        assert_eq!(sphere_eigen(3, 1), SphereEigen { sigma: 2, multiplicity: 3 });
        assert_eq!(sphere_eigen(3, 2), SphereEigen { sigma: 6, multiplicity: 5 });
        for n in 3..12 {
            assert_eq!(sphere_eigen(n, 0), SphereEigen { sigma: 0, multiplicity: 1 });
        }
        for k in 0..=30 {
            assert_eq!(sphere_eigen(3, k).multiplicity, 2 * k as u64 + 1);
        }
        // N = 4: (k+1)^2
        for k in 0..=30 {
            assert_eq!(sphere_eigen(4, k).multiplicity, (k as u64 + 1).pow(2));
        }
    }

    /// Direct evaluation of the displayed factorial ratio in u128.
    fn multiplicity_by_factorials(n: u64, k: u64) -> u128 {
        let fact = |m: u64| (1..=m as u128).product::<u128>();
        (n + 2 * k - 2) as u128 * fact(n + k - 3) / (fact(n - 2) * fact(k))
    }

    #[test]
    fn multiplicity_matches_factorial_formula() {
        for n in 3..=12u32 {
            for k in 1..=20u32 {
                assert_eq!(
                    sphere_eigen(n, k).multiplicity as u128,
                    multiplicity_by_factorials(n as u64, k as u64),
                    "N={n} k={k}"
                );
            }
        }
        // k up to 30 at N = 12 stays exact without factorial overflow
        assert!(sphere_eigen(12, 30).multiplicity > 0);
    }

    #[test]
    fn bifurcation_alpha_identity() {
        assert_eq!(bifurcation_alpha(1).unwrap(), 0.0);
        assert_eq!(bifurcation_alpha(2).unwrap(), 2.0);
        assert_eq!(bifurcation_alpha(3).unwrap(), 4.0);
        assert!(bifurcation_alpha(0).is_err());
        assert_eq!(lambda1_closed(3, 4.0), -(sphere_eigen(3, 3).sigma as f64));
        for n in 3..=8 {
            for k in 1..=6 {
                let a = bifurcation_alpha(k).unwrap();
                let s = sphere_eigen(n, k).sigma_f64();
                assert!((lambda1_closed(n, a) + s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_eigenfunction_shape() {
        let (n, a) = (3u32, 2.0);
        let lam = limit_lambda(n, a);
        assert_eq!(first_eigenfunction_closed(0.0, lam, n, a), 0.0);
        let rmax = first_eigenfunction_argmax(lam, n, a);
        let s = (lam * rmax).powf(2.0 + a);
        assert!(rel(s, (2.0 + a) / (2.0 * n as f64 + a - 2.0)) < 1e-12);
        let z = |r: f64| first_eigenfunction_closed(r, lam, n, a);
        assert!(z(rmax) > z(rmax * 0.99) && z(rmax) > z(rmax * 1.01));
        assert!(z(1e6) < 1e-10 && z(1e6) > 0.0);
    }

    #[test]
    fn first_eigenfunction_solves_limit_problem() {
        for (n, a) in [(3u32, 0.0), (3, 2.0), (4, 1.0), (4, 2.0)] {
            let lam = limit_lambda(n, a);
            let c = henon_constant(n, a);
            let pa = threshold_exponent(n, a);
            let l1 = lambda1_closed(n, a);
            let b = 2.0 + a;
            let z = |r: f64| first_eigenfunction_closed(r, lam, n, a);
            for r in [0.02f64, 0.05, 0.1, 0.3, 1.0, 3.0] {
                let q = pa * c * lam.powf(b) * r.powf(a) / (1.0 + (lam * r).powf(b)).powi(2);
                let res = -d2(&z, r) - (n as f64 - 1.0) / r * d1(&z, r) - q * z(r) - l1 * z(r) / (r * r);
                let scale = z(r) / (r * r);
                assert!(res.abs() < 1e-8 * scale.max(1.0), "N={n} a={a} r={r}: {res:e}");
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(ProblemParams::new(2, 1.0, 0.1).is_err());
        assert!(ProblemParams::new(3, -0.1, 0.1).is_err());
        assert!(ProblemParams::new(3, 1.0, 0.0).is_err());
        assert!(ProblemParams::new(3, 0.0, 4.0).is_err());
        let p = ProblemParams::new(3, 2.0, 0.05).unwrap();
        assert_eq!(p.p_alpha(), 9.0);
        assert!((p.p() - 8.95).abs() < 1e-15);
        assert!(p.p() > 1.0 && p.p() < p.p_alpha());
        let lc = p.limit_constants();
        assert_eq!(lc.c_na, 5.0);
        assert!(lc.m_fowler > 2.0 && lc.big_m > 0.0 && lc.lambda > 0.0);
    }
}
