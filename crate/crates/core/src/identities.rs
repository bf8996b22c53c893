//! Fourier coefficients of `j_p` from traces, the star relation and the
//! weight-2 sector identities behind them.
//!
//! With `K_p = 24, 36, 18` for `p = 2, 3, 5`:
//!
//! ```text
//! 2n·c_n^(p) = -Σ_{r ≡ 0 (p)} t_2^(p*)(4n - r²) + K_p σ1^(p)(n)   (p | n)
//! 2n·c_n^(p) =  Σ_{r ∈ Z}     t_2^(p*)(4n - r²) + K_p σ1(n)       (p ∤ n)
//! ```

use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hauptmodul::{self, HauptmodulError, Level};
use crate::series::{self, sigma1, sigma1_p, QSeries, SeriesError};
use crate::traces::{special_value, TraceEngine, TraceError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentityError {
    #[error("2n = {two_n} does not divide the trace numerator {numerator} (p = {p}, n = {n})")]
    NonIntegral { p: u32, n: u64, numerator: BigInt, two_n: u64 },
    #[error("level {0} has no coefficient formula; expected 2, 3 or 5")]
    UnsupportedLevel(u32),
    #[error("n must be at least 1")]
    ZeroIndex,
    #[error("trace table covers d <= {have}, but d = {need} is required")]
    TableTooShort { need: i64, have: i64 },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Hauptmodul(#[from] HauptmodulError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type Result<T> = std::result::Result<T, IdentityError>;

/// `K_p`: the Eisenstein constant in the coefficient formula.
pub fn eisenstein_constant(p: u32) -> Result<i64> {
    match p {
        2 => Ok(24),
        3 => Ok(36),
        5 => Ok(18),
        _ => Err(IdentityError::UnsupportedLevel(p)),
    }
}

/// Multiplier `λ_p` in `H = j_p' - λ_p E_2^(p)`, with
/// `E_2^(p) = (pE_2(pτ) - E_2(τ))/(p-1) = 1 + (24/(p-1)) Σ σ1^(p)(n) q^n`.
/// It makes the `q^n` coefficient of `H` equal to `n c_n - (K_p/2) σ1^(p)(n)`.
pub fn eisenstein_multiplier(p: u32) -> Result<BigRational> {
    let k = eisenstein_constant(p)?;
    // λ_p · 24/(p-1) = K_p/2
    Ok(BigRational::new(BigInt::from(k * (p as i64 - 1)), BigInt::from(48)))
}

/// Starred traces `t_2^(p*)(d)` for `-4 ≤ d ≤ d_max`, built once and then read.
#[derive(Clone, Debug)]
pub struct StarTraces {
    pub p: u32,
    pub m: u32,
    values: Vec<BigInt>,
    /// Largest working precision used by any class sum.
    pub max_bits: usize,
    /// Largest pre-rounding residual over all class sums.
    pub max_residual: f64,
}

impl StarTraces {
    const LOW: i64 = -4;

    pub fn build(engine: &TraceEngine, m: u32, d_max: i64) -> Result<Self> {
        let p = engine.p();
        let mut values: Vec<BigInt> = (Self::LOW..=0.min(d_max)).map(|d| special_value(p, true, m, d)).collect();
        let mut max_bits = 0;
        let mut max_residual: f64 = 0.0;
        if d_max >= 1 {
            for t in engine.starred_range(m, 1, d_max)? {
                max_bits = max_bits.max(t.bits.unwrap_or(0));
                max_residual = max_residual.max(t.residual.unwrap_or(0.0));
                values.push(t.value);
            }
        }
        Ok(StarTraces {
            p,
            m,
            values,
            max_bits,
            max_residual,
        })
    }

    pub fn d_max(&self) -> i64 {
        Self::LOW + self.values.len() as i64 - 1
    }

    /// `t(d)`; zero below `-4`.
    pub fn get(&self, d: i64) -> Result<BigInt> {
        if d < Self::LOW {
            return Ok(BigInt::zero());
        }
        self.values
            .get((d - Self::LOW) as usize)
            .cloned()
            .ok_or(IdentityError::TableTooShort { need: d, have: self.d_max() })
    }

    /// `g_m^(p*)` through `q^n` from the stored values.
    pub fn g_series(&self, n: i64) -> Result<QSeries> {
        if n > self.d_max() {
            return Err(IdentityError::TableTooShort { need: n, have: self.d_max() });
        }
        let coeffs = self.values[..(n - Self::LOW + 1) as usize].to_vec();
        Ok(QSeries::from_integers(Self::LOW, coeffs, n + 1)?)
    }
}

/// `Σ_r t(4n - r²)` over all `r`, or over `r ≡ 0 (mod p)`.
fn r_sum(traces: &StarTraces, n: i64, modulus: i64) -> Result<BigInt> {
    let mut acc = BigInt::zero();
    let mut r = 0i64;
    while 4 * n - r * r >= -4 {
        if r % modulus == 0 {
            let t = traces.get(4 * n - r * r)?;
            if r == 0 {
                acc += t;
            } else {
                acc += t * 2;
            }
        }
        r += 1;
    }
    Ok(acc)
}

/// The numerator `2n·c_n^(p)` assembled from traces.
pub fn coefficient_numerator(traces: &StarTraces, n: u64) -> Result<BigInt> {
    let p = traces.p;
    let k = eisenstein_constant(p)?;
    if n == 0 {
        return Err(IdentityError::ZeroIndex);
    }
    let ni = n as i64;
    Ok(if n.is_multiple_of(p as u64) {
        -r_sum(traces, ni, p as i64)? + BigInt::from(k) * BigInt::from(sigma1_p(n, p as u64))
    } else {
        r_sum(traces, ni, 1)? + BigInt::from(k) * BigInt::from(sigma1(n))
    })
}

/// `c_n^(p)` from traces; the division by `2n` must be exact.
pub fn coefficient_via_traces(traces: &StarTraces, n: u64) -> Result<BigInt> {
    let num = coefficient_numerator(traces, n)?;
    let (q, r) = num.div_rem(&BigInt::from(2 * n));
    if !r.is_zero() {
        return Err(IdentityError::NonIntegral {
            p: traces.p,
            n,
            numerator: num,
            two_n: 2 * n,
        });
    }
    Ok(q)
}

/// `c_n^(p*) = c_n^(p) - p·c_{pn}^(p)`, read off the expansion of `j_p`.
pub fn star_coefficient(p: u32, n: u64) -> Result<BigInt> {
    let j = hauptmodul::hauptmodul_series(Level::plain(p)?, (p as u64 * n) as i64)?;
    Ok(j.coeff_integer(n as i64)? - BigInt::from(p) * j.coeff_integer((p as u64 * n) as i64)?)
}

/// One compared index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub n: i64,
    pub expected: String,
    pub computed: String,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub p: u32,
    pub n_from: i64,
    pub n_to: i64,
    pub comparisons: Vec<Comparison>,
    pub first_mismatch: Option<Comparison>,
    /// Wall time; left out of JSON so reports are reproducible byte for byte.
    #[serde(skip)]
    pub elapsed_ms: u128,
    pub max_bits: usize,
    pub max_residual: f64,
}

impl VerificationReport {
    fn new(check: &str, p: u32, n_from: i64, n_to: i64, comparisons: Vec<Comparison>, started: Instant) -> Self {
        let first_mismatch = comparisons.iter().find(|c| !c.matches).cloned();
        VerificationReport {
            check: check.to_string(),
            p,
            n_from,
            n_to,
            comparisons,
            first_mismatch,
            elapsed_ms: started.elapsed().as_millis(),
            max_bits: 0,
            max_residual: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.first_mismatch.is_none()
    }

    pub fn mismatches(&self) -> usize {
        self.comparisons.iter().filter(|c| !c.matches).count()
    }

    pub fn summary(&self) -> String {
        let status = match &self.first_mismatch {
            None => "ok".to_string(),
            Some(c) => format!("MISMATCH at n={} (expected {}, got {})", c.n, c.expected, c.computed),
        };
        format!(
            "{} p={} n={}..{} checked={} {} [{} ms, max {} bits, max residual {:.1e}]",
            self.check,
            self.p,
            self.n_from,
            self.n_to,
            self.comparisons.len(),
            status,
            self.elapsed_ms,
            self.max_bits,
            self.max_residual
        )
    }
}

fn compare(n: i64, expected: &BigInt, computed: std::result::Result<BigInt, String>) -> Comparison {
    match computed {
        Ok(c) => Comparison {
            n,
            expected: expected.to_string(),
            matches: &c == expected,
            computed: c.to_string(),
        },
        Err(e) => Comparison {
            n,
            expected: expected.to_string(),
            computed: e,
            matches: false,
        },
    }
}

/// Compare `coefficient_via_traces` with the eta-quotient coefficients of `j_p`
/// for `1 ≤ n ≤ n_max`.
pub fn verify_coefficient_formula(engine: &TraceEngine, n_max: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    let p = engine.p();
    eisenstein_constant(p)?;
    let traces = StarTraces::build(engine, 2, 4 * n_max as i64)?;
    verify_coefficient_formula_with(&traces, n_max, started)
}

/// As [`verify_coefficient_formula`], reusing prepared traces.
pub fn verify_coefficient_formula_with(traces: &StarTraces, n_max: u64, started: Instant) -> Result<VerificationReport> {
    let p = traces.p;
    let j = hauptmodul::hauptmodul_series(Level::plain(p)?, n_max as i64)?;
    let comparisons: Vec<Comparison> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let expected = j.coeff_integer(n as i64).expect("window covers n");
            compare(n as i64, &expected, coefficient_via_traces(traces, n).map_err(|e| e.to_string()))
        })
        .collect();
    let mut report = VerificationReport::new("coefficient_formula", p, 1, n_max as i64, comparisons, started);
    report.max_bits = traces.max_bits;
    report.max_residual = traces.max_residual;
    Ok(report)
}

/// `H = j_p' - λ_p E_2^(p)` through `q^n`.
pub fn build_h(p: u32, n: i64) -> Result<QSeries> {
    let lambda = eisenstein_multiplier(p)?;
    let j = hauptmodul::hauptmodul_series(Level::plain(p)?, n)?;
    let e2 = series::eisenstein_e2_level(p, n + 1)?;
    Ok(&j.q_derivative() - &e2.scale(&lambda))
}

/// `F = (g_2^(p*)·θ0(τ))|U_4` and `G = (g_2^(p*)·θ0(p²τ))|U_4` through `q^n`.
pub fn build_f_g(traces: &StarTraces, n: i64) -> Result<(QSeries, QSeries)> {
    // θ0 is carried 4 terms further so that the product is exact through q^{4n}
    let top = 4 * n;
    let g = traces.g_series(top)?;
    let theta = series::theta0(top + 5);
    let pp = traces.p * traces.p;
    let theta_p = theta.v_op(pp).truncate(top + 5);
    let f = g.mul(&theta)?.u_op(4).truncate(n + 1);
    let gg = g.mul(&theta_p)?.u_op(4).truncate(n + 1);
    Ok((f, gg))
}

/// Check `2H̃_0 = -G̃_0` and `2H̃_k = F̃_k` (`k ≢ 0 mod p`) for `-1 ≤ n ≤ N`.
pub fn verify_weight2_sectors(engine: &TraceEngine, n: i64) -> Result<VerificationReport> {
    let started = Instant::now();
    let traces = StarTraces::build(engine, 2, 4 * n)?;
    verify_weight2_sectors_with(&traces, n, started)
}

/// As [`verify_weight2_sectors`], reusing prepared traces.
pub fn verify_weight2_sectors_with(traces: &StarTraces, n: i64, started: Instant) -> Result<VerificationReport> {
    let p = traces.p;
    let h = build_h(p, n)?;
    let (f, g) = build_f_g(traces, n)?;
    let two_h = h.scale_int(2);
    let mut comparisons = Vec::new();
    for k in -1..=n {
        let lhs = two_h.coeff(k)?;
        let rhs = if k.rem_euclid(p as i64) == 0 { -g.coeff(k)? } else { f.coeff(k)? };
        comparisons.push(Comparison {
            n: k,
            expected: lhs.to_string(),
            computed: rhs.to_string(),
            matches: lhs == rhs,
        });
    }
    let mut report = VerificationReport::new("weight2_sectors", p, -1, n, comparisons, started);
    report.max_bits = traces.max_bits;
    report.max_residual = traces.max_residual;
    Ok(report)
}

/// Check `j_p* = j_p - p·(j_p | U_p)` through `q^n`.
pub fn verify_star_relation(p: u32, n: i64) -> Result<VerificationReport> {
    let started = Instant::now();
    let plain = hauptmodul::hauptmodul_series(Level::plain(p)?, p as i64 * n)?;
    let star = hauptmodul::hauptmodul_series(Level::star(p)?, n)?;
    let rhs = &plain.truncate(n + 1) - &plain.u_op(p).truncate(n + 1).scale_int(p as i64);
    let comparisons = (-1..=n)
        .map(|k| {
            let a = star.coeff_integer(k).expect("window");
            compare(k, &a, rhs.coeff_integer(k).map_err(|e| e.to_string()))
        })
        .collect();
    Ok(VerificationReport::new("star_relation", p, -1, n, comparisons, started))
}

/// Level 1: `c_n = (1/2n) Σ_r t_2(4n - r²)` for the coefficients of `j - 744`.
pub fn verify_level_one(engine: &TraceEngine, n_max: u64) -> Result<VerificationReport> {
    let started = Instant::now();
    if engine.p() != 1 {
        return Err(IdentityError::UnsupportedLevel(engine.p()));
    }
    let traces = StarTraces::build(engine, 2, 4 * n_max as i64)?;
    let j = hauptmodul::hauptmodul_series(Level::star(1)?, n_max as i64)?;
    let comparisons = (1..=n_max)
        .map(|n| {
            let expected = j.coeff_integer(n as i64).expect("window");
            let computed = r_sum(&traces, n as i64, 1).map_err(|e| e.to_string()).and_then(|s| {
                let (q, r) = s.div_rem(&BigInt::from(2 * n));
                if r.is_zero() {
                    Ok(q)
                } else {
                    Err(format!("{s} not divisible by {}", 2 * n))
                }
            });
            compare(n as i64, &expected, computed)
        })
        .collect();
    let mut report = VerificationReport::new("level_one", 1, 1, n_max as i64, comparisons, started);
    report.max_bits = traces.max_bits;
    report.max_residual = traces.max_residual;
    Ok(report)
}
