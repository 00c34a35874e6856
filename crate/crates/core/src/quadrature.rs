//! Gauss rules from the Golub–Welsch eigenproblem and quadrature references
//! for the coupling matrix elements.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of an n-point rule, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Rule mapped from [−1, 1] to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> GaussRule {
        let (h, m) = (0.5 * (b - a), 0.5 * (a + b));
        GaussRule {
            nodes: self.nodes.iter().map(|x| m + h * x).collect(),
            weights: self.weights.iter().map(|w| h * w).collect(),
        }
    }
}

/// Jacobi matrix with zero diagonal and off-diagonal `beta(k)` for k = 1..n−1.
fn golub_welsch(n: usize, beta: impl Fn(usize) -> f64, mu0: f64) -> GaussRule {
    assert!(n >= 1, "rule needs at least one node");
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = beta(k);
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    GaussRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// ∫ e^{−x²} g(x) dx, exact for polynomials of degree ≤ 2n−1.
pub fn gauss_hermite(n: usize) -> GaussRule {
    golub_welsch(n, |k| (0.5 * k as f64).sqrt(), PI.sqrt())
}

/// ∫_{−1}^{1} g(x) dx, exact for polynomials of degree ≤ 2n−1.
pub fn gauss_legendre(n: usize) -> GaussRule {
    golub_welsch(
        n,
        |k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        },
        2.0,
    )
}

/// hₙ(x) = ψₙ(x)e^{x²/2} for n = 0..=n_max, ψₙ the normalized oscillator eigenfunctions.
pub fn hermite_polynomials_normalized(n_max: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n_max + 1);
    h.push(PI.powf(-0.25));
    if n_max >= 1 {
        h.push(2.0f64.sqrt() * x * h[0]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        h.push(next);
    }
    h
}

/// ψₙ(x) for n = 0..=n_max.
pub fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    let g = (-0.5 * x * x).exp();
    hermite_polynomials_normalized(n_max, x).into_iter().map(|h| h * g).collect()
}

/// ∫ψₙ(x) f(x) ψₘ(x) dx for f = e^{−x²/2σ²}/(σ√(2π)), all 0 ≤ n,m ≤ n_max.
///
/// With c = 1 + 1/(2σ²) and x = y/√c the integrand is a polynomial times
/// e^{−y²}, so a Gauss–Hermite rule of n_max + 1 nodes is exact.
pub fn gaussian_window_elements(sigma: f64, n_max: usize) -> Vec<Vec<f64>> {
    let c = 1.0 + 1.0 / (2.0 * sigma * sigma);
    let scale = 1.0 / (c.sqrt() * sigma * (2.0 * PI).sqrt());
    let rule = gauss_hermite(n_max + 2);
    let mut out = vec![vec![0.0; n_max + 1]; n_max + 1];
    for (&y, &w) in rule.nodes.iter().zip(&rule.weights) {
        let h = hermite_polynomials_normalized(n_max, y / c.sqrt());
        for n in 0..=n_max {
            for m in 0..=n_max {
                out[n][m] += w * scale * h[n] * h[m];
            }
        }
    }
    out
}
