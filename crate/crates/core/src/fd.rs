//! Finite-difference weights on arbitrary nodes and a pointwise residual
//! helper for radial second-order equations.

/// Fornberg's recursion: weights `w[m][j]` such that
/// `f^(m)(x0) ≈ Σ_j w[m][j] f(xs[j])` for `m = 0..=max_order`.
pub fn fornberg_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivatives at every node from a sliding stencil of
/// `width` points (shifted near the ends).
pub fn derivatives(xs: &[f64], fs: &[f64], width: usize) -> Vec<(f64, f64)> {
    let n = xs.len();
    let width = width.min(n);
    let half = width / 2;
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - width);
            let nodes = &xs[start..start + width];
            let w = fornberg_weights(xs[i], nodes, 2);
            let d1 = w[1].iter().zip(&fs[start..start + width]).map(|(a, b)| a * b).sum();
            let d2 = w[2].iter().zip(&fs[start..start + width]).map(|(a, b)| a * b).sum();
            (d1, d2)
        })
        .collect()
}

/// Pointwise relative residual of `f'' + (d-1)/x f' + g(x, f) = 0`, each
/// term measured against the sum of the three magnitudes. Returns the worst
/// value over the nodes (endpoints excluded).
pub fn radial_relative_residual(xs: &[f64], fs: &[f64], dim: f64, source: impl Fn(f64, f64) -> f64) -> f64 {
    let ders = derivatives(xs, fs, 9);
    let mut worst: f64 = 0.0;
    for i in 1..xs.len().saturating_sub(1) {
        let (d1, d2) = ders[i];
        let a = d2;
        let b = (dim - 1.0) / xs[i] * d1;
        let c = source(xs[i], fs[i]);
        let scale = a.abs() + b.abs() + c.abs();
        if scale > 0.0 {
            worst = worst.max((a + b + c).abs() / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_reproduce_polynomials() {
        let xs = [0.0, 0.3, 0.7, 1.2, 2.0];
        let w = fornberg_weights(0.5, &xs, 2);
        let f = |x: f64| 1.0 + 2.0 * x - x * x + 0.5 * x * x * x;
        let d1 = 2.0 - 2.0 * 0.5 + 1.5 * 0.25;
        let d2 = -2.0 + 3.0 * 0.5;
        let g: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let dot = |v: &Vec<f64>| v.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
        assert!((dot(&w[0]) - f(0.5)).abs() < 1e-12);
        assert!((dot(&w[1]) - d1).abs() < 1e-12);
        assert!((dot(&w[2]) - d2).abs() < 1e-11);
    }

    #[test]
    fn residual_of_exact_solution_is_small() {
        // u = (1 + r^2/3)^(-1/2) solves u'' + 2/r u' + u^5 = 0 in 3-d
        let xs: Vec<f64> = (0..600).map(|i| 0.05 * 1.01f64.powi(i)).collect();
        let fs: Vec<f64> = xs.iter().map(|r| (1.0 + r * r / 3.0).powf(-0.5)).collect();
        let res = radial_relative_residual(&xs, &fs, 3.0, |_, u| u.powi(5));
        assert!(res < 1e-8, "residual {res:e}");
    }
}
