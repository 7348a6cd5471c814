//! The tridiagonal pencil against a dense symmetric eigensolver and against
//! the continuum problem with no potential.

use henon_core::spectral::{eigenvalues, pencil_from_potential, Pencil};
use nalgebra::{DMatrix, SymmetricEigen};

fn dense_eigenvalues(p: &Pencil) -> Vec<f64> {
    let n = p.dim();
    let s: Vec<f64> = p.mass.iter().map(|m| m.sqrt().recip()).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = p.diag[i] * s[i] * s[i];
        if i + 1 < n {
            let v = p.off[i] * s[i] * s[i + 1];
            a[(i, i + 1)] = v;
            a[(i + 1, i)] = v;
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn log_grid(a: f64, b: f64, nodes: usize) -> Vec<f64> {
    (0..nodes)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (nodes - 1) as f64).exp())
        .collect()
}

#[test]
fn bisection_matches_dense_solver() {
    let rs = log_grid(1e-3, 1.0, 200);
    let q: Vec<f64> = rs.iter().map(|r| 40.0 * r * r / (1.0 + r * r).powi(2) * (3.0 * r).cos()).collect();
    let p = pencil_from_potential(3, &rs, &q);
    let dense = dense_eigenvalues(&p);
    for j in 1..=6 {
        let bis = p.eigenvalue(j, 1e-12).unwrap();
        assert!((bis - dense[j - 1]).abs() < 1e-9 * (1.0 + dense[j - 1].abs()), "j = {j}: {bis} vs {}", dense[j - 1]);
    }
    for sigma in [-5.0, 0.0, 3.0, 50.0] {
        assert_eq!(p.count_below(sigma), dense.iter().filter(|&&d| d < sigma).count());
    }
}

#[test]
fn free_operator_on_log_interval() {
    // -y'' + (N-2)^2/4 y = Lambda y on t in (0, pi): Lambda_j = 1/4 + j^2 for N = 3
    let rs = log_grid(1.0, std::f64::consts::PI.exp(), 200);
    let q = vec![0.0; rs.len()];
    let p = pencil_from_potential(3, &rs, &q);
    let eig = eigenvalues(&p, 3, 1e-12).unwrap();
    let h = std::f64::consts::PI / 199.0;
    for e in &eig {
        let exact = 0.25 + (e.j * e.j) as f64;
        // second order: the leading error is -j^4 h^2 / 12
        assert!((e.lambda - exact).abs() < (e.j as f64).powi(4) * h * h / 6.0, "j = {}: {}", e.j, e.lambda);
        assert_eq!(e.node_count, e.j - 1);
    }
    let dense = dense_eigenvalues(&p);
    for (e, d) in eig.iter().zip(&dense) {
        assert!((e.lambda - d).abs() < 1e-9);
    }
}
