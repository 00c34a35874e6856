//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use mlg_core::quadrature::{gauss_legendre, GaussRule};
use mlg_core::{psi_at_origin, MatrixElementTable, TimeWindow};
use num_complex::Complex64;

/// Composite Gauss–Legendre rule on [a, b].
pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> GaussRule {
    let base = gauss_legendre(order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let r = base.mapped(a + p as f64 * h, a + (p + 1) as f64 * h);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    }
    GaussRule { nodes, weights }
}

/// Σₖ ψₖ(0)² e^{−ikθ} = (1 − e^{−2iθ})^{−1/2}/√π, the origin-to-origin propagator.
fn origin_propagator(theta: f64) -> Complex64 {
    let z = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -2.0 * theta);
    z.sqrt().inv() / PI.sqrt()
}

/// ⟨F²⟩ for the point coupling as ∫∫ ⟨δ(x(s)) δ(x(t))⟩ ds dt with the
/// intermediate-level sum done in closed form. Valid for ωτ < π.
///
/// `state` lists (n, cₙ). The |s − t|^{−1/2} singularity is removed by
/// s − t = ±w².
pub fn point_coupling_closed_sum(state: &[(usize, Complex64)], omega: f64, tau: f64) -> f64 {
    let amp = |s: f64, t: f64| -> Complex64 {
        let mut left = Complex64::new(0.0, 0.0);
        let mut right = Complex64::new(0.0, 0.0);
        for &(n, c) in state {
            let v = psi_at_origin(n);
            left += c.conj() * v * Complex64::from_polar(1.0, omega * n as f64 * s);
            right += c * v * Complex64::from_polar(1.0, -omega * n as f64 * t);
        }
        left * right
    };
    let outer = composite(0.0, tau.sqrt(), 8, 24);
    let mut total = Complex64::new(0.0, 0.0);
    for (&w, &ww) in outer.nodes.iter().zip(&outer.weights) {
        let u = w * w;
        let inner = composite(0.0, tau - u, 8, 24);
        let plus = origin_propagator(omega * u);
        let minus = origin_propagator(-omega * u);
        let mut acc = Complex64::new(0.0, 0.0);
        for (&t, &wt) in inner.nodes.iter().zip(&inner.weights) {
            acc += (amp(t + u, t) * plus + amp(t, t + u) * minus) * wt;
        }
        total += acc * (2.0 * w * ww);
    }
    total.re
}

/// Σ_{n,ℓ,k} cℓ* cₙ Mℓₖ Mₖₙ ∫∫ e^{iω(k−n)s + iω(ℓ−k)t} ds dt with both time
/// integrals done by quadrature and k summed to the table's cutoff.
pub fn time_quadrature_expectation(c: &[Complex64], window: &TimeWindow, table: &MatrixElementTable, omega: f64) -> f64 {
    let k_max = table.sum_levels();
    let cycles = omega * window.length() * (k_max + c.len()) as f64 / (2.0 * PI);
    let panels = (cycles.ceil() as usize).max(1) * 2;
    let rule = composite(window.t1(), window.t2(), panels, 16);
    let mut total = 0.0;
    for k in 0..=k_max {
        // the s- and t-integrals factor into B and its conjugate
        let mut b = Complex64::new(0.0, 0.0);
        for (&s, &ws) in rule.nodes.iter().zip(&rule.weights) {
            let mut inner = Complex64::new(0.0, 0.0);
            for (n, cn) in c.iter().enumerate() {
                let m = table.try_get(k, n).unwrap_or(0.0);
                if m != 0.0 {
                    inner += cn * m * Complex64::from_polar(1.0, omega * (k as f64 - n as f64) * s);
                }
            }
            b += inner * ws;
        }
        total += b.norm_sqr();
    }
    total
}
