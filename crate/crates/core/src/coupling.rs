//! Detector couplings and their Fock-basis matrix elements Mₙₖ = ⟨n|f(x̂)|k⟩.
//!
//! Two couplings are supported. The point coupling f = Lδ(x̂) has the
//! rank-one table Mₙₖ = ψₙ(0)ψₖ(0) (coupling length absorbed into the unit
//! convention). The Gaussian window f(x) = e^{−x²/2σ²}/(σ√(2π)) has unit
//! integral, so it tends to the point coupling as σ → 0.
//!
//! Gaussian elements come from the bivariate generating function
//!
//! ```text
//! Σ Mₙₘ √(π 2ⁿ⁺ᵐ n! m!) q₁ⁿ q₂ᵐ / (n! m!) = e^{a(q₁² + q₂²) + b q₁q₂} / √(1 + 2σ²)
//! a = −1/(1 + 2σ²),  b = 4σ²/(1 + 2σ²)
//! ```
//!
//! Differentiating the exponential gives a two-term recurrence for the
//! normalized coefficients hₙₘ = √π Mₙₘ:
//!
//! ```text
//! h_{k+1,m} = a √(k/(k+1)) h_{k−1,m} + (b/2) √(m/(k+1)) h_{k,m−1}
//! ```
//!
//! which is run over the lower triangle (m ≤ k) only, so every coefficient
//! on the right is at most one. The prefactor is 1/√(1 + 2σ²); writing the
//! window with 1/(σ√π) instead would carry an extra √2.
//!
//! Rows beyond the state cutoff N are kept (columns 0..=N) for the
//! intermediate-level sums of the correlators.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::oscillator::{origin_values, OscillatorConfig};

/// Hard cap on intermediate levels for any table.
pub const MAX_SUM_LEVELS: usize = 1 << 21;
/// Cap on adaptively sized Gaussian tables.
pub const GAUSSIAN_SUM_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Delta,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CouplingSpec {
    Delta,
    Gaussian { sigma: f64 },
}

impl CouplingSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
        }
        Ok(CouplingSpec::Gaussian { sigma })
    }

    pub fn kind(&self) -> CouplingKind {
        match self {
            CouplingSpec::Delta => CouplingKind::Delta,
            CouplingSpec::Gaussian { .. } => CouplingKind::Gaussian,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match *self {
            CouplingSpec::Delta => None,
            CouplingSpec::Gaussian { sigma } => Some(sigma),
        }
    }
}

impl std::fmt::Display for CouplingSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CouplingSpec::Delta => write!(f, "delta"),
            CouplingSpec::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
        }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    /// Mₙₖ = vₙvₖ.
    RankOne(Vec<f64>),
    /// Lower triangle: row r holds columns 0..=min(r, state_levels).
    Triangle(Vec<f64>),
}

#[derive(Debug, Clone)]
enum TailModel {
    /// Analytic bound vₖ² ≤ √2/(π√k) on the rank-one factor.
    Origin,
    /// |Mₖₙ| ≲ |M_Kn| ρ^{k−K}, fitted on the last computed rows.
    Geometric { ratio: f64 },
    /// |Mₖₙ| ≲ |M_Kn| (K/k)^{1/4}, used when no decay is visible yet.
    PowerLaw,
}

/// Matrix elements Mₙₖ for 0 ≤ min(n,k) ≤ N and max(n,k) ≤ K.
///
/// N = `state_levels` is the Fock cutoff of states; K = `sum_levels` is the
/// cutoff of the intermediate-level sums. Lookups are symmetric by
/// construction.
#[derive(Debug, Clone)]
pub struct MatrixElementTable {
    spec: CouplingSpec,
    state_levels: usize,
    sum_levels: usize,
    storage: Storage,
    tail: TailModel,
    /// Cutoff fixed by the caller; truncation errors become reported tails.
    pinned: bool,
}

fn triangle_index(row: usize, col: usize, n: usize) -> usize {
    if row <= n {
        row * (row + 1) / 2 + col
    } else {
        (n + 1) * (n + 2) / 2 + (row - n - 1) * (n + 1) + col
    }
}

/// Σ over k > K (stride `step`) of k^{−1/2} min(τ, 2/(ω(k−s)))², bounded by an integral.
pub(crate) fn power_tail_sum(k_max: usize, support: usize, tau: f64, omega: f64, step: usize) -> f64 {
    let x_lo = ((k_max + 1).saturating_sub(step) as f64).max(1.0);
    let s = support as f64;
    let x_star = if tau > 0.0 { s + 2.0 / (omega * tau) } else { f64::INFINITY };
    let mut total = 0.0;
    if x_star > x_lo {
        total += 2.0 * tau * tau * (x_star.sqrt() - x_lo.sqrt());
    }
    if x_star.is_finite() {
        let x0 = x_lo.max(x_star);
        total += 4.0 / (omega * omega) / (x0.sqrt() * (x0 - s));
    }
    total / step as f64
}

impl MatrixElementTable {
    pub fn spec(&self) -> CouplingSpec {
        self.spec
    }

    pub fn state_levels(&self) -> usize {
        self.state_levels
    }

    pub fn sum_levels(&self) -> usize {
        self.sum_levels
    }

    /// True when `sum_levels` was fixed explicitly rather than sized from `tail_tol`.
    pub fn is_pinned(&self) -> bool {
        self.pinned
    }

    #[cfg(test)]
    pub(crate) fn truncated_unpinned(&self, sum_levels: usize) -> Self {
        let mut t = self.clone();
        t.sum_levels = sum_levels;
        t.pinned = false;
        t
    }

    /// Mₙₖ. Panics if both indices exceed `state_levels` or either exceeds `sum_levels`.
    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.try_get(n, k).unwrap_or_else(|| {
            panic!(
                "matrix element ({n}, {k}) outside table N = {}, K = {}",
                self.state_levels, self.sum_levels
            )
        })
    }

    pub fn try_get(&self, n: usize, k: usize) -> Option<f64> {
        let (row, col) = if n >= k { (n, k) } else { (k, n) };
        if col > self.state_levels || row > self.sum_levels {
            return None;
        }
        Some(match &self.storage {
            Storage::RankOne(v) => v[row] * v[col],
            Storage::Triangle(data) => data[triangle_index(row, col, self.state_levels)],
        })
    }

    /// True when Mₙₖ = vₙvₖ; the vector is ψₖ(0).
    pub(crate) fn rank_one_factor(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::RankOne(v) => Some(v),
            Storage::Triangle(_) => None,
        }
    }

    /// Row k restricted to columns 0..=min(k, N) plus the transposed entries, as a closure-free copy.
    pub(crate) fn row_into(&self, k: usize, out: &mut [f64]) {
        let cols = out.len().min(self.state_levels + 1);
        match &self.storage {
            Storage::RankOne(v) => {
                for (n, o) in out.iter_mut().enumerate().take(cols) {
                    *o = v[k] * v[n];
                }
            }
            Storage::Triangle(data) => {
                for (n, o) in out.iter_mut().enumerate().take(cols) {
                    let (r, c) = if k >= n { (k, n) } else { (n, k) };
                    *o = data[triangle_index(r, c, self.state_levels)];
                }
            }
        }
    }

    /// Estimate of Σ_{k>K} |Σₙ Mₖₙ Iₖₙ cₙ|² given weights |cₙ| and window length τ.
    pub(crate) fn tail_bound(&self, weights: &[f64], tau: f64, omega: f64) -> f64 {
        let support = match weights.iter().rposition(|&w| w > 0.0) {
            Some(s) => s,
            None => return 0.0,
        };
        let k_max = self.sum_levels;
        match (&self.tail, &self.storage) {
            (TailModel::Origin, Storage::RankOne(v)) => {
                let a: f64 = weights.iter().zip(v).map(|(w, vn)| w * vn.abs()).sum();
                SQRT_2 / PI * a * a * power_tail_sum(k_max, support, tau, omega, 2)
            }
            (model, _) => {
                let mut row = vec![0.0; weights.len().min(self.state_levels + 1)];
                let mut b: f64 = 0.0;
                for k in k_max.saturating_sub(1)..=k_max {
                    self.row_into(k, &mut row);
                    b = b.max(row.iter().zip(weights).map(|(m, w)| m.abs() * w).sum());
                }
                match model {
                    TailModel::Geometric { ratio } => {
                        let gap = (k_max + 1).saturating_sub(support).max(1) as f64;
                        let kern = tau.min(2.0 / (omega * gap));
                        let r2 = ratio * ratio;
                        b * b * r2 / (1.0 - r2) * kern * kern
                    }
                    _ => b * b * (k_max as f64).sqrt() * power_tail_sum(k_max, support, tau, omega, 1),
                }
            }
        }
    }

    /// Write the square block 0 ≤ n,k ≤ N as CSV with header `n,k,M`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,k,M")?;
        for n in 0..=self.state_levels {
            for k in 0..=self.state_levels {
                writeln!(out, "{n},{k},{}", fmt_f64(self.get(n, k)))?;
            }
        }
        Ok(())
    }
}

/// Smallest intermediate cutoff whose worst-case point-coupling tail is below tol/ω².
fn delta_auto_levels(state_levels: usize, tail_tol: f64) -> usize {
    let v = origin_values(state_levels);
    let a2: f64 = v.iter().map(|x| x * x).sum();
    let mut k = (4 * state_levels).max(64);
    // ω = 1 and τ → ∞ (the 2/(ω(k−N)) branch) give the window-independent bound in units of 1/ω².
    while k < MAX_SUM_LEVELS {
        let bound = SQRT_2 / PI * a2 * power_tail_sum(k, state_levels, f64::INFINITY, 1.0, 2);
        if bound <= tail_tol {
            break;
        }
        k = k + k / 4;
    }
    k.min(MAX_SUM_LEVELS)
}

/// Point-coupling table Mₙₖ = ψₙ(0)ψₖ(0).
pub fn delta_matrix_elements(config: &OscillatorConfig) -> MatrixElementTable {
    let n = config.max_level();
    let k = config
        .truncation
        .sum_levels
        .unwrap_or_else(|| delta_auto_levels(n, config.tail_tol()))
        .clamp(n, MAX_SUM_LEVELS);
    MatrixElementTable {
        spec: CouplingSpec::Delta,
        state_levels: n,
        sum_levels: k,
        storage: Storage::RankOne(origin_values(k)),
        tail: TailModel::Origin,
        pinned: config.truncation.sum_levels.is_some(),
    }
}

/// Gaussian-window table from the generating-function recurrence.
pub fn gaussian_matrix_elements(sigma: f64, config: &OscillatorConfig) -> Result<MatrixElementTable> {
    let spec = CouplingSpec::gaussian(sigma)?;
    let n = config.max_level();
    let fixed = config.truncation.sum_levels.map(|k| k.clamp(n, GAUSSIAN_SUM_CAP));
    let cap = fixed.unwrap_or(GAUSSIAN_SUM_CAP);

    let s2 = 2.0 * sigma * sigma;
    let a = -1.0 / (1.0 + s2);
    let half_b = 0.5 * s2 * 2.0 / (1.0 + s2);
    let h00 = 1.0 / (1.0 + s2).sqrt();

    let mut data: Vec<f64> = Vec::with_capacity(triangle_index(n, n, n) + 1);
    let mut mags: Vec<f64> = Vec::with_capacity(data.capacity());
    let at = |data: &Vec<f64>, r: usize, c: usize| -> f64 {
        let (r, c) = if r >= c { (r, c) } else { (c, r) };
        data[triangle_index(r, c, n)]
    };

    let stop = 1e-2 * config.tail_tol().sqrt() * h00;
    let mut row_max: Vec<f64> = Vec::new();
    let mut k_final = cap;
    for row in 0..=cap {
        let cols = row.min(n);
        let mut rmax: f64 = 0.0;
        for m in 0..=cols {
            let (val, mag) = if row == 0 {
                (h00, h00)
            } else {
                let k = row - 1;
                let kf = k as f64;
                let c1 = a * (kf / (kf + 1.0)).sqrt();
                let c2 = half_b * (m as f64 / (kf + 1.0)).sqrt();
                let (t1, m1) = if k >= 1 {
                    (at(&data, k - 1, m), at(&mags, k - 1, m))
                } else {
                    (0.0, 0.0)
                };
                let (t2, m2) = if m >= 1 {
                    (at(&data, k, m - 1), at(&mags, k, m - 1))
                } else {
                    (0.0, 0.0)
                };
                (c1 * t1 + c2 * t2, c1.abs() * m1 + c2 * m2)
            };
            data.push(val);
            mags.push(mag);
            rmax = rmax.max(val.abs());
        }
        row_max.push(rmax);
        if fixed.is_none() && row > 2 * n + 4 {
            let decaying = row_max[row] <= row_max[row - 2] && row_max[row - 1] <= row_max[row - 3];
            if decaying && row_max[row] < stop && row_max[row - 1] < stop {
                k_final = row;
                break;
            }
        }
    }

    let scale = data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let amplification = mags.iter().fold(0.0f64, |m, x| m.max(*x)) / scale;
    if amplification * f64::EPSILON > f64::EPSILON.sqrt() {
        return Err(Error::SeriesNonconvergence {
            sigma,
            lost_digits: amplification.log10(),
        });
    }

    let inv_sqrt_pi = 1.0 / PI.sqrt();
    for x in data.iter_mut() {
        *x *= inv_sqrt_pi;
    }

    let tail = if k_final >= 4 {
        let (last, prev) = (
            row_max[k_final].max(row_max[k_final - 1]),
            row_max[k_final - 2].max(row_max[k_final - 3]),
        );
        if last > 0.0 && prev > 0.0 && last < prev {
            let ratio = (last / prev).sqrt();
            if ratio < 0.999 {
                TailModel::Geometric { ratio }
            } else {
                TailModel::PowerLaw
            }
        } else if last == 0.0 {
            TailModel::Geometric { ratio: 0.0 }
        } else {
            TailModel::PowerLaw
        }
    } else {
        TailModel::PowerLaw
    };

    Ok(MatrixElementTable {
        spec,
        state_levels: n,
        sum_levels: k_final,
        storage: Storage::Triangle(data),
        tail,
        pinned: fixed.is_some(),
    })
}

/// Build the table for any coupling.
pub fn matrix_elements(spec: &CouplingSpec, config: &OscillatorConfig) -> Result<MatrixElementTable> {
    match *spec {
        CouplingSpec::Delta => Ok(delta_matrix_elements(config)),
        CouplingSpec::Gaussian { sigma } => gaussian_matrix_elements(sigma, config),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    kind: CouplingKind,
    sigma_bits: u64,
    max_level: usize,
    sum_levels: Option<usize>,
    tol_bits: u64,
}

/// Read-only tables shared per (coupling, truncation).
#[derive(Debug, Default)]
pub struct TableCache {
    tables: Mutex<HashMap<CacheKey, Arc<MatrixElementTable>>>,
}

impl TableCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, spec: &CouplingSpec, config: &OscillatorConfig) -> Result<Arc<MatrixElementTable>> {
        let key = CacheKey {
            kind: spec.kind(),
            sigma_bits: spec.sigma().unwrap_or(0.0).to_bits(),
            max_level: config.max_level(),
            sum_levels: config.truncation.sum_levels,
            tol_bits: config.tail_tol().to_bits(),
        };
        if let Some(t) = self.tables.lock().expect("table cache poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(matrix_elements(spec, config)?);
        self.tables
            .lock()
            .expect("table cache poisoned")
            .entry(key)
            .or_insert_with(|| Arc::clone(&table));
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.tables.lock().expect("table cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::TruncationPolicy;
    use approx::assert_relative_eq;

    fn config(max_level: usize) -> OscillatorConfig {
        OscillatorConfig::new(1.0, TruncationPolicy::new(max_level, 1e-8).unwrap()).unwrap()
    }

    #[test]
    fn delta_elements() {
        let t = delta_matrix_elements(&config(10));
        let m00 = 1.0 / PI.sqrt();
        assert_relative_eq!(t.get(0, 0), m00, epsilon = 1e-15);
        assert_eq!(t.get(0, 1), 0.0);
        assert_relative_eq!(t.get(0, 2), -m00 / SQRT_2, epsilon = 1e-15);
        assert_relative_eq!(t.get(2, 2), 0.5 * m00, epsilon = 1e-15);
        assert!(t.sum_levels() > 10_000);
    }

    #[test]
    fn delta_auto_levels_grow_with_tolerance() {
        assert!(delta_auto_levels(10, 1e-10) > delta_auto_levels(10, 1e-6));
    }

    #[test]
    fn pinned_sum_levels() {
        let cfg = OscillatorConfig::new(1.0, TruncationPolicy::new(4, 1e-8).unwrap().with_sum_levels(4)).unwrap();
        let t = delta_matrix_elements(&cfg);
        assert_eq!(t.sum_levels(), 4);
        assert!(t.try_get(0, 6).is_none());
    }

    #[test]
    fn gaussian_ground_element() {
        for &sigma in &[0.1, 0.5, 1.0, 2.0] {
            let t = gaussian_matrix_elements(sigma, &config(8)).unwrap();
            let expected = 1.0 / (PI.sqrt() * (1.0 + 2.0 * sigma * sigma).sqrt());
            assert_relative_eq!(t.get(0, 0), expected, epsilon = 1e-15);
            // ⟨1|f|1⟩ = 2σ²/(√π (1+2σ²)^{3/2})
            let s2 = 2.0 * sigma * sigma;
            assert_relative_eq!(t.get(1, 1), s2 / (PI.sqrt() * (1.0 + s2).powf(1.5)), epsilon = 1e-14);
        }
    }

    #[test]
    fn gaussian_parity_and_symmetry() {
        let t = gaussian_matrix_elements(0.5, &config(12)).unwrap();
        for n in 0..=12 {
            for k in 0..=12 {
                assert_eq!(t.get(n, k), t.get(k, n));
                if (n + k) % 2 == 1 {
                    assert_eq!(t.get(n, k), 0.0);
                }
            }
        }
    }

    #[test]
    fn gaussian_small_width_approaches_delta() {
        let d = delta_matrix_elements(&config(10));
        let cfg = OscillatorConfig::new(1.0, TruncationPolicy::new(10, 1e-8).unwrap().with_sum_levels(64)).unwrap();
        let g = gaussian_matrix_elements(1e-3, &cfg).unwrap();
        for n in 0..=10 {
            for k in 0..=10 {
                assert!((d.get(n, k) - g.get(n, k)).abs() < 1e-5, "({n},{k})");
            }
        }
    }

    #[test]
    fn gaussian_adaptive_rows_decay() {
        let t = gaussian_matrix_elements(0.5, &config(10)).unwrap();
        assert!(t.sum_levels() > 20 && t.sum_levels() < GAUSSIAN_SUM_CAP);
        assert!(t.get(t.sum_levels(), 0).abs() < 1e-5);
    }

    #[test]
    fn csv_export_header_and_size() {
        let t = delta_matrix_elements(&config(3));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "n,k,M");
        assert_eq!(lines.len(), 1 + 16);
        let last: f64 = lines[16].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(last, t.get(3, 3));
    }

    #[test]
    fn cache_shares_tables() {
        let cache = TableCache::new();
        let cfg = config(6);
        let a = cache.get(&CouplingSpec::Delta, &cfg).unwrap();
        let b = cache.get(&CouplingSpec::Delta, &cfg).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        cache.get(&CouplingSpec::gaussian(0.3).unwrap(), &cfg).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(gaussian_matrix_elements(0.0, &config(4)).is_err());
        assert!(CouplingSpec::gaussian(-1.0).is_err());
    }
}
