//! Growth of `c_n^(p)` and of the traces `t_2^(p*)(d)`.
//!
//! For large `d` the trace is dominated by the principal forms `[p, b, c]`,
//! whose CM points have the largest imaginary part. Feeding that into the
//! coefficient formula turns `c_n^(p)` into Riemann sums `S_n^(k)` of
//! `e^{λ√(1 - t²)}` with `λ = 4π√n / p`, and Laplace's method gives
//!
//! ```text
//! c_n^(p) ~ C_p(n mod p) · e^{4π√n/p} / (√(2p) · n^{3/4})
//! ```
//!
//! Everything here is plain `f64`: the quantities are diagnostics, and
//! `e^{4π√n/p}` stays far below `f64::MAX` on every grid we use.

use std::f64::consts::PI;
use std::fmt;

use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::forms::{self, FormError};
use crate::hauptmodul::{self, HauptmodulError, Level};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticError {
    #[error("level {0} has no asymptotic formula; expected 2, 3 or 5")]
    UnsupportedLevel(u32),
    #[error("n must be at least 1")]
    ZeroIndex,
    #[error("the n grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Hauptmodul(#[from] HauptmodulError),
}

pub type Result<T> = std::result::Result<T, AsymptoticError>;

fn check_level(p: u32) -> Result<()> {
    match p {
        2 | 3 | 5 => Ok(()),
        _ => Err(AsymptoticError::UnsupportedLevel(p)),
    }
}

/// A number of the form `(a + b√5) / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadraticConstant {
    pub a: i64,
    pub b: i64,
    pub den: i64,
}

impl QuadraticConstant {
    pub const fn rational(a: i64) -> Self {
        QuadraticConstant { a, b: 0, den: 1 }
    }

    pub const fn new(a: i64, b: i64, den: i64) -> Self {
        QuadraticConstant { a, b, den }
    }

    pub fn value(&self) -> f64 {
        (self.a as f64 + self.b as f64 * 5f64.sqrt()) / self.den as f64
    }
}

impl fmt::Display for QuadraticConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = match self.b {
            0 => self.a.to_string(),
            b => {
                let sign = if b < 0 { '-' } else { '+' };
                let coeff = if b.abs() == 1 { String::new() } else { b.abs().to_string() };
                format!("{}{}{}√5", self.a, sign, coeff)
            }
        };
        match (self.den, self.b) {
            (1, _) => write!(f, "{body}"),
            (den, 0) => write!(f, "{body}/{den}"),
            (den, _) => write!(f, "({body})/{den}"),
        }
    }
}

/// The leading constant `C_p(n mod p)`.
pub fn growth_constant(p: u32, residue: u64) -> Result<QuadraticConstant> {
    check_level(p)?;
    use QuadraticConstant as Q;
    let r = (residue % p as u64) as usize;
    let table: &[Q] = match p {
        2 => &[Q::rational(-1), Q::rational(1)],
        3 => &[Q::rational(-1), Q::rational(2), Q::rational(-1)],
        _ => &[
            Q::rational(-1),
            Q::new(3, 1, 2),
            Q::new(-1, 1, 1),
            Q::new(-1, -1, 1),
            Q::new(3, -1, 2),
        ],
    };
    Ok(table[r])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticPrediction {
    pub p: u32,
    pub n: u64,
    pub predicted: f64,
    pub residue_class: u64,
    pub constant: QuadraticConstant,
}

/// `e^{4π√n/p} / (√(2p) n^{3/4})` without the residue constant.
pub fn envelope(p: u32, n: u64) -> f64 {
    let n = n as f64;
    let p = p as f64;
    (4.0 * PI * n.sqrt() / p).exp() / ((2.0 * p).sqrt() * n.powf(0.75))
}

pub fn predict(p: u32, n: u64) -> Result<AsymptoticPrediction> {
    check_level(p)?;
    if n == 0 {
        return Err(AsymptoticError::ZeroIndex);
    }
    let residue_class = n % p as u64;
    let constant = growth_constant(p, residue_class)?;
    Ok(AsymptoticPrediction {
        p,
        n,
        predicted: constant.value() * envelope(p, n),
        residue_class,
        constant,
    })
}

/// Contribution of the principal forms `[p, b, c]`, `b ∈ (-p, p]`, to
/// `t_m^(p*)(d)`: `Σ_b e^{πimb/p} e^{πm√d/p}`. The imaginary parts cancel
/// in `±b` pairs.
pub fn principal_trace_approx(p: u32, m: u32, d: i64) -> Result<f64> {
    check_level(p)?;
    let growth = (PI * m as f64 * (d as f64).sqrt() / p as f64).exp();
    let phase: f64 = forms::principal_forms(d, p)?
        .iter()
        .map(|f| (PI * m as f64 * f.b as f64 / p as f64).cos())
        .sum();
    Ok(phase * growth)
}

/// `S_n^(k) = p/(2√n) Σ_{r ≡ k (p), r² ≤ 4n} e^{(4π/p)√n √(1 - r²/4n)}`.
pub fn s_sum(p: u32, n: u64, k: u64) -> Result<f64> {
    check_level(p)?;
    if n == 0 {
        return Err(AsymptoticError::ZeroIndex);
    }
    let pp = p as i64;
    let nf = n as f64;
    let lambda = 4.0 * PI * nf.sqrt() / p as f64;
    let r_max = ((4 * n) as f64).sqrt().floor() as i64;
    let k = (k % p as u64) as i64;
    let sum: f64 = (-r_max..=r_max)
        .filter(|r| r.rem_euclid(pp) == k)
        .map(|r| lambda * (1.0 - (r * r) as f64 / (4.0 * nf)).max(0.0).sqrt())
        .map(f64::exp)
        .sum();
    Ok(p as f64 / (2.0 * nf.sqrt()) * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceIntegral {
    /// `∫_{-1}^{1} e^{λ√(1-t²)} dt` by quadrature.
    pub quadrature: f64,
    pub error_estimate: f64,
    /// `e^λ √(2π/λ)`.
    pub laplace: f64,
}

impl LaplaceIntegral {
    pub fn relative_gap(&self) -> f64 {
        (self.quadrature / self.laplace - 1.0).abs()
    }
}

/// Relative tolerance of the `J_n` quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// `J_n` with `λ = 4π√n/p`.
pub fn laplace_integral(p: u32, n: u64) -> Result<LaplaceIntegral> {
    check_level(p)?;
    if n == 0 {
        return Err(AsymptoticError::ZeroIndex);
    }
    let lambda = 4.0 * PI * (n as f64).sqrt() / p as f64;
    // t = sin θ removes the square-root endpoints; e^{-λ} is factored out
    // so the integrand stays in [0, 1].
    let scaled = quadrature::double_exponential::integrate(
        |theta: f64| (lambda * (theta.cos() - 1.0)).exp() * theta.cos(),
        -PI / 2.0,
        PI / 2.0,
        QUADRATURE_TOLERANCE * 1e-3,
    );
    let scale = lambda.exp();
    Ok(LaplaceIntegral {
        quadrature: scaled.integral * scale,
        error_estimate: scaled.error_estimate * scale,
        laplace: scale * (2.0 * PI / lambda).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub residue_class: u64,
    /// Exact `c_n^(p)` as a decimal string.
    pub exact: String,
    pub predicted: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidueTrend {
    pub residue_class: u64,
    /// `|ratio - 1|` along the class, in increasing `n`.
    pub errors: Vec<f64>,
    pub non_increasing: bool,
    pub signs_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub p: u32,
    pub rows: Vec<ConvergenceRow>,
    pub trends: Vec<ResidueTrend>,
}

impl ConvergenceReport {
    pub fn max_error_up_to(&self, n_max: u64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.n <= n_max)
            .map(|r| (r.ratio - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,residue,exact,predicted,ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{:e},{:.6}\n", r.n, r.residue_class, r.exact, r.predicted, r.ratio));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("p = {}\n{:>6} {:>3} {:>14} {:>10}\n", self.p, "n", "k", "predicted", "ratio");
        for r in &self.rows {
            out.push_str(&format!("{:>6} {:>3} {:>14.6e} {:>10.6}\n", r.n, r.residue_class, r.predicted, r.ratio));
        }
        for t in &self.trends {
            out.push_str(&format!(
                "class {}: non-increasing error {}, signs {}\n",
                t.residue_class,
                t.non_increasing,
                if t.signs_match { "ok" } else { "WRONG" }
            ));
        }
        out
    }
}

/// For each base `n0` and each class `k mod p`, the least `n ≥ n0` with
/// `n ≡ k (mod p)`.
pub fn residue_grid(p: u32, bases: &[u64]) -> Vec<u64> {
    let p = p as u64;
    let mut out: Vec<u64> = bases
        .iter()
        .flat_map(|&b| (0..p).map(move |k| b + (k + p - b % p) % p))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Compare exact `c_n^(p)` with `predict(p, n)` on `grid`.
pub fn convergence_report(p: u32, grid: &[u64]) -> Result<ConvergenceReport> {
    check_level(p)?;
    let mut grid: Vec<u64> = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let n_max = *grid.last().ok_or(AsymptoticError::EmptyGrid)?;
    if grid[0] == 0 {
        return Err(AsymptoticError::ZeroIndex);
    }
    let series = hauptmodul::hauptmodul_series(Level::plain(p)?, n_max as i64)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &n in &grid {
        let exact = series.coeff_integer(n as i64).map_err(HauptmodulError::from)?;
        let pred = predict(p, n)?;
        let ratio = exact.to_f64().unwrap_or(f64::NAN) / pred.predicted;
        rows.push(ConvergenceRow {
            n,
            residue_class: pred.residue_class,
            exact: exact.to_string(),
            predicted: pred.predicted,
            ratio,
        });
    }
    let trends = (0..p as u64)
        .filter_map(|k| {
            let class: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.residue_class == k).collect();
            if class.is_empty() {
                return None;
            }
            let errors: Vec<f64> = class.iter().map(|r| (r.ratio - 1.0).abs()).collect();
            Some(ResidueTrend {
                residue_class: k,
                non_increasing: errors.windows(2).all(|w| w[1] <= w[0]),
                signs_match: class.iter().all(|r| r.ratio > 0.0),
                errors,
            })
        })
        .collect();
    Ok(ConvergenceReport { p, rows, trends })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_table() {
        let shown: Vec<String> = (0..5).map(|k| growth_constant(5, k).unwrap().to_string()).collect();
        assert_eq!(shown, ["-1", "(3+√5)/2", "-1+√5", "-1-√5", "(3-√5)/2"]);
        assert_eq!(growth_constant(3, 1).unwrap().value(), 2.0);
        assert!(growth_constant(7, 0).is_err());
    }

    #[test]
    fn predictions() {
        let p2 = predict(2, 51).unwrap();
        let direct = (2.0 * PI * 51f64.sqrt()).exp() / (2.0 * 51f64.powf(0.75));
        assert!((p2.predicted / direct - 1.0).abs() < 1e-12);

        let p3 = predict(3, 40).unwrap();
        let direct = 2.0 * (4.0 * PI * 40f64.sqrt() / 3.0).exp() / (6f64.sqrt() * 40f64.powf(0.75));
        assert!((p3.predicted / direct - 1.0).abs() < 1e-12);

        let p5 = predict(5, 53).unwrap();
        let c = -1.0 - 5f64.sqrt();
        let direct = c * (4.0 * PI * 53f64.sqrt() / 5.0).exp() / (10f64.sqrt() * 53f64.powf(0.75));
        assert!((p5.predicted / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn principal_approximation_examples() {
        let d7 = principal_trace_approx(2, 2, 7).unwrap();
        assert!((d7 + 2.0 * (PI * 7f64.sqrt()).exp()).abs() < 1e-6);
        assert!((d7 / -8140.0 - 1.0).abs() < 1e-3);

        let e = |d: f64| (2.0 * PI * d.sqrt() / 3.0).exp();
        assert!((principal_trace_approx(3, 2, 24).unwrap() / e(24.0) - 1.0).abs() < 1e-12);
        assert!((principal_trace_approx(3, 2, 23).unwrap() / e(23.0) + 1.0).abs() < 1e-12);
        assert!(principal_trace_approx(3, 2, 22).is_err());
    }

    #[test]
    fn s_sums_partition_all_terms() {
        for p in [2u32, 3, 5] {
            let n = 37u64;
            let total: f64 = (0..p as u64).map(|k| s_sum(p, n, k).unwrap()).sum();
            let lambda = 4.0 * PI * (n as f64).sqrt() / p as f64;
            let direct: f64 = (-12i64..=12)
                .map(|r| (lambda * (1.0 - (r * r) as f64 / (4.0 * n as f64)).sqrt()).exp())
                .sum::<f64>()
                * p as f64
                / (2.0 * (n as f64).sqrt());
            assert!((total / direct - 1.0).abs() < 1e-12);
            assert!((0..p as u64).all(|k| s_sum(p, n, k).unwrap() > 0.0));
        }
    }

    #[test]
    fn laplace_integral_examples() {
        let j = laplace_integral(3, 400).unwrap();
        assert!(j.relative_gap() < 0.05, "gap {}", j.relative_gap());
        assert!(j.error_estimate / j.quadrature < QUADRATURE_TOLERANCE);

        let mut last = 0.0;
        for n in [10u64, 50, 100, 200, 400] {
            let q = laplace_integral(3, n).unwrap().quadrature;
            assert!(q > last);
            last = q;
        }

        // ∫ e^{λ(1 - t²)} ~ e^λ √(π/λ)
        let lambda = 200.0f64;
        let out = quadrature::double_exponential::integrate(|t: f64| (-lambda * t * t).exp(), -1.0, 1.0, 1e-12);
        assert!((out.integral / (PI / lambda).sqrt() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn riemann_sums_approach_integral() {
        let gap = |n: u64| {
            let j = laplace_integral(3, n).unwrap().quadrature;
            (s_sum(3, n, 0).unwrap() / j - 1.0).abs()
        };
        assert!(gap(400) < gap(25));
        assert!(gap(400) < 0.01);
    }

    #[test]
    fn residue_grid_hits_every_class() {
        assert_eq!(residue_grid(3, &[50, 100]), vec![50, 51, 52, 100, 101, 102]);
        assert_eq!(residue_grid(2, &[7]), vec![7, 8]);
    }

    #[test]
    fn small_report_has_matching_signs() {
        let report = convergence_report(3, &residue_grid(3, &[30, 60])).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert!(report.trends.iter().all(|t| t.signs_match));
        assert!(report.to_csv().starts_with("n,residue,exact,predicted,ratio\n"));
    }
}
