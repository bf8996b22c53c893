//! The Hauptmoduln `j_p`, `j_p*` for `p = 2, 3, 5` and `j - 744` at level 1:
//! exact expansions, Faber polynomials and evaluation at CM points.
//!
//! With `k = 24/(p-1)`,
//! `j_p = (η(τ)/η(pτ))^k + k` and `j_p* = j_p + p^{k/2} (η(pτ)/η(τ))^k`.
//! Level 1 uses `j - 744 = {(η(τ)/η(2τ))^8 + 2^8 (η(2τ)/η(τ))^16}^3 - 744`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::forms::{FormError, QuadForm};
use crate::numeric::{cm_exponential, euler_product, Ball, Ctx, NumericError};
use crate::series::{self, eta_product_unshifted, EtaProduct, EtaQuotientSpec, QSeries, SeriesError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HauptmodulError {
    #[error("unsupported level {0}: expected 1, 2, 3 or 5")]
    UnsupportedLevel(u32),
    #[error("Faber index must be positive")]
    ZeroIndex,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("{p} does not divide the leading coefficient of {form}")]
    NotLevelForm { form: QuadForm, p: u32 },
}

pub type Result<T> = std::result::Result<T, HauptmodulError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Level {
    pub p: u32,
    pub starred: bool,
}

impl Level {
    /// Level 1 is always starred.
    pub fn new(p: u32, starred: bool) -> Result<Level> {
        match p {
            1 => Ok(Level { p, starred: true }),
            2 | 3 | 5 => Ok(Level { p, starred }),
            _ => Err(HauptmodulError::UnsupportedLevel(p)),
        }
    }

    pub fn star(p: u32) -> Result<Level> {
        Level::new(p, true)
    }

    pub fn plain(p: u32) -> Result<Level> {
        Level::new(p, false)
    }

    /// The eta exponent `24/(p-1)` (`24` at level 1 is unused).
    pub fn eta_exponent(&self) -> u32 {
        if self.p == 1 {
            24
        } else {
            24 / (self.p - 1)
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.p, self.starred) {
            (1, _) => write!(f, "j-744"),
            (p, true) => write!(f, "j{p}*"),
            (p, false) => write!(f, "j{p}"),
        }
    }
}

/// Working precision and the largest error tolerated before rounding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrecisionBudget {
    pub working_bits: usize,
    pub error_bound: f64,
}

impl PrecisionBudget {
    pub const DEFAULT_CEILING: usize = 1 << 16;

    pub fn new(working_bits: usize) -> Self {
        PrecisionBudget {
            working_bits,
            error_bound: 0.25,
        }
    }

    /// `ceil(π·m·√d / (a_min·ln 2)) + 64`: enough bits to resolve
    /// `e^{π m √d / a_min}` to well below one unit.
    pub fn for_cm_sum(m: u32, d: i64, a_min: i64) -> Self {
        let bits = std::f64::consts::PI * m as f64 * (d.max(1) as f64).sqrt()
            / (a_min.max(1) as f64 * std::f64::consts::LN_2);
        PrecisionBudget::new(bits.ceil() as usize + 64)
    }

    pub fn doubled(&self) -> Self {
        PrecisionBudget {
            working_bits: self.working_bits * 2,
            ..*self
        }
    }
}

/// Eta quotient description of `j_p` or `j_p*` (`p > 1`).
pub fn eta_spec(level: Level) -> Result<EtaQuotientSpec> {
    if level.p == 1 {
        // the level-1 expression has fractional q-offsets; see `level_one_series`
        return Err(HauptmodulError::UnsupportedLevel(1));
    }
    let p = level.p;
    let k = level.eta_exponent() as i32;
    let int = |v: i64| BigRational::from_integer(BigInt::from(v));
    let mut terms = vec![EtaProduct::new(int(1), vec![(1, k), (p, -k)])];
    if level.starred {
        let mult = BigInt::from(p).pow((k / 2) as u32);
        terms.push(EtaProduct::new(BigRational::from_integer(mult), vec![(1, -k), (p, k)]));
    }
    Ok(EtaQuotientSpec::new(terms, int(k as i64))?)
}

fn level_one_series(n: i64) -> Result<QSeries> {
    // X = A + 256 q A^{-2} with A = Π(1-q^n)^8 / Π(1-q^{2n})^8, and j - 744 = q^{-1} X^3 - 744
    let len = (n + 2).max(1) as usize;
    let a = QSeries::from_integers(0, eta_product_unshifted(&[(1, 8), (2, -8)], len), len as i64)?;
    let a_inv2 = QSeries::from_integers(1, eta_product_unshifted(&[(1, -16), (2, 16)], len - 1), len as i64)?;
    let x = &a + &a_inv2.scale_int(256);
    let cube = x.pow(3)?.shift(-1);
    let c = QSeries::constant(BigRational::from_integer(BigInt::from(744)), cube.trunc());
    Ok(&cube - &c)
}

/// Exact expansion of the Hauptmodul through `q^n` (inclusive).
pub fn hauptmodul_series(level: Level, n: i64) -> Result<QSeries> {
    if level.p == 1 {
        return Ok(level_one_series(n)?.truncate(n + 1));
    }
    Ok(series::eta_quotient(&eta_spec(level)?, n + 1)?)
}

/// The monic polynomial `φ_m` with `φ_m(j_p*) = q^{-m} + O(q)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaberPoly {
    pub m: u32,
    /// Coefficients from the constant term upwards; the last one is `1`.
    #[serde(serialize_with = "series::serialize_bigints")]
    pub coeffs: Vec<BigInt>,
    /// Expansion of `φ_m(j_p*)`.
    pub expansion: QSeries,
}

impl FaberPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

impl fmt::Display for FaberPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mag = c.abs();
            match i {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if i == 1 {
                        write!(f, "J")?;
                    } else {
                        write!(f, "J^{i}")?;
                    }
                }
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Faber polynomials `φ_1 .. φ_M` for one starred level. Built once, then
/// read concurrently.
#[derive(Clone, Debug)]
pub struct FaberTable {
    pub level: Level,
    polys: Vec<FaberPoly>,
}

impl FaberTable {
    /// `window` is the last exponent kept in each expansion; it is raised to
    /// `m_max` if smaller.
    pub fn build(level: Level, m_max: u32, window: i64) -> Result<FaberTable> {
        let level = Level::star(level.p)?;
        let window = window.max(m_max as i64).max(1);
        let j = hauptmodul_series(level, window)?;
        let mut polys: Vec<FaberPoly> = Vec::with_capacity(m_max as usize);
        let mut power = QSeries::one(j.trunc());
        for m in 1..=m_max {
            power = power.mul(&j)?.truncate(window + 1);
            let mut coeffs = vec![BigInt::zero(); m as usize + 1];
            coeffs[m as usize] = BigInt::one();
            let mut expansion = power.clone();
            for k in (1..m).rev() {
                let c = expansion.coeff_integer(-(k as i64))?;
                if c.is_zero() {
                    continue;
                }
                let lower = &polys[k as usize - 1];
                expansion = &expansion - &lower.expansion.scale(&BigRational::from_integer(c.clone()));
                for (i, lc) in lower.coeffs.iter().enumerate() {
                    coeffs[i] -= &c * lc;
                }
            }
            let c0 = expansion.coeff_integer(0)?;
            if !c0.is_zero() {
                let constant = QSeries::constant(BigRational::from_integer(c0.clone()), expansion.trunc());
                expansion = &expansion - &constant;
                coeffs[0] -= &c0;
            }
            polys.push(FaberPoly { m, coeffs, expansion });
        }
        Ok(FaberTable { level, polys })
    }

    pub fn m_max(&self) -> u32 {
        self.polys.len() as u32
    }

    pub fn get(&self, m: u32) -> Option<&FaberPoly> {
        if m == 0 {
            None
        } else {
            self.polys.get(m as usize - 1)
        }
    }
}

/// `φ_m` for a single index.
pub fn faber(level: Level, m: u32) -> Result<FaberPoly> {
    if m == 0 {
        return Err(HauptmodulError::ZeroIndex);
    }
    let table = FaberTable::build(level, m, m as i64 + 8)?;
    Ok(table.get(m).cloned().expect("table holds every index up to m"))
}

/// Upper bound on `log2 |q|` at `α = (-b + i√d)/2a`.
fn log2_nome(d: i64, a: i64) -> f64 {
    let x = std::f64::consts::PI * (d as f64).sqrt() / a as f64;
    -(x / std::f64::consts::LN_2) * (1.0 - 1e-12) + 1e-12
}

/// `η(α_Q)` for `α_Q = (-b + i√d)/2a`.
pub fn eval_eta(form: &QuadForm, ctx: &mut Ctx) -> Result<Ball> {
    if !form.is_positive_definite() {
        return Err(FormError::NotPositiveDefinite(*form).into());
    }
    let (a, b, d) = (form.a, form.b, form.d());
    let q = cm_exponential(b, d, a, -1, ctx)?;
    let q24 = cm_exponential(b, d, 24 * a, -1, ctx)?;
    let e = euler_product(&q, log2_nome(d, a), ctx)?;
    Ok(q24.mul(&e, ctx)?)
}

/// Value of the Hauptmodul at `α = (-b + i√d)/2a` for any positive definite
/// `[a, b, c]`.
pub fn eval_at_point(level: Level, form: &QuadForm, ctx: &mut Ctx) -> Result<Ball> {
    if !form.is_positive_definite() {
        return Err(FormError::NotPositiveDefinite(*form).into());
    }
    let (a, b, d) = (form.a, form.b, form.d());
    let q = cm_exponential(b, d, a, -1, ctx)?;
    let u = cm_exponential(b, d, a, 1, ctx)?;
    let l2q = log2_nome(d, a);
    let e1 = euler_product(&q, l2q, ctx)?;
    if level.p == 1 {
        let q2 = q.mul(&q, ctx)?;
        let e2 = euler_product(&q2, 2.0 * l2q, ctx)?;
        let big_a = e1.div(&e2, ctx)?.powi(8, ctx)?;
        let corr = q.mul(&big_a.powi(2, ctx)?.inv(ctx)?, ctx)?.mul_i64(256, ctx)?;
        let x = big_a.add(&corr, ctx)?;
        let j = u.mul(&x.powi(3, ctx)?, ctx)?;
        return Ok(j.sub(&Ball::from_i64(744, ctx), ctx)?);
    }
    let p = level.p;
    let k = level.eta_exponent();
    let qp = q.powi(p, ctx)?;
    let ep = euler_product(&qp, p as f64 * l2q, ctx)?;
    let big_p = e1.div(&ep, ctx)?.powi(k, ctx)?;
    let mut j = u.mul(&big_p, ctx)?.add(&Ball::from_i64(k as i64, ctx), ctx)?;
    if level.starred {
        let scale = (p as i64).pow(k / 2);
        let extra = q.div(&big_p, ctx)?.mul_i64(scale, ctx)?;
        j = j.add(&extra, ctx)?;
    }
    Ok(j)
}

/// `j_p*(α_Q)`; requires `p | a` for `p > 1`.
pub fn eval_hauptmodul_star(p: u32, form: &QuadForm, ctx: &mut Ctx) -> Result<Ball> {
    let level = Level::star(p)?;
    if form.a % p as i64 != 0 {
        return Err(HauptmodulError::NotLevelForm { form: *form, p });
    }
    eval_at_point(level, form, ctx)
}

/// `φ_m(j_p*(α_Q))`.
pub fn eval_faber(poly: &FaberPoly, p: u32, form: &QuadForm, ctx: &mut Ctx) -> Result<Ball> {
    let j = eval_hauptmodul_star(p, form, ctx)?;
    Ok(j.eval_poly(&poly.coeffs, ctx)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn head(level: Level, n: i64) -> Vec<i64> {
        let s = hauptmodul_series(level, n).unwrap();
        (-1..=n).map(|e| s.coeff_integer(e).unwrap().to_i64().unwrap()).collect()
    }

    #[test]
    fn expansion_heads() {
        let l = |p, s| Level::new(p, s).unwrap();
        assert_eq!(head(l(2, true), 3), vec![1, 0, 4372, 96256, 1240002]);
        assert_eq!(head(l(2, false), 3), vec![1, 0, 276, -2048, 11202]);
        assert_eq!(head(l(3, true), 3), vec![1, 0, 783, 8672, 65367]);
        assert_eq!(head(l(3, false), 3), vec![1, 0, 54, -76, -243]);
        assert_eq!(head(l(5, true), 3), vec![1, 0, 134, 760, 3345]);
        assert_eq!(head(l(5, false), 3), vec![1, 0, 9, 10, -30]);
        assert_eq!(head(l(1, true), 3), vec![1, 0, 196884, 21493760, 864299970]);
    }

    #[test]
    fn level_one_is_starred() {
        assert!(Level::plain(1).unwrap().starred);
        assert!(matches!(Level::new(7, true), Err(HauptmodulError::UnsupportedLevel(7))));
    }

    #[test]
    fn all_coefficients_integral() {
        for p in [1, 2, 3, 5] {
            for starred in [true, false] {
                let s = hauptmodul_series(Level::new(p, starred).unwrap(), 300).unwrap();
                assert!(s.is_integral());
                assert_eq!(s.valuation(), -1);
                assert!(s.coeff(0).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn faber_examples() {
        let f = faber(Level::star(3).unwrap(), 2).unwrap();
        assert_eq!(f.coeffs, vec![BigInt::from(-1566), BigInt::zero(), BigInt::one()]);
        let f = faber(Level::star(2).unwrap(), 2).unwrap();
        assert_eq!(f.coeffs, vec![BigInt::from(-8744), BigInt::zero(), BigInt::one()]);
        let f = faber(Level::star(5).unwrap(), 1).unwrap();
        assert_eq!(f.coeffs, vec![BigInt::zero(), BigInt::one()]);
        assert_eq!(f.to_string(), "J");
        assert!(matches!(faber(Level::star(5).unwrap(), 0), Err(HauptmodulError::ZeroIndex)));
    }

    #[test]
    fn faber_expansions_are_normalized() {
        for p in [1, 2, 3, 5] {
            let table = FaberTable::build(Level::star(p).unwrap(), 10, 20).unwrap();
            for m in 1..=10 {
                let f = table.get(m).unwrap();
                let e = &f.expansion;
                assert_eq!(e.valuation(), -(m as i64));
                assert!(e.coeff(-(m as i64)).unwrap().is_one());
                for k in (-(m as i64) + 1)..=0 {
                    assert!(e.coeff(k).unwrap().is_zero(), "p={p} m={m} k={k}");
                }
                assert_eq!(f.degree(), m as usize);
            }
        }
    }

    #[test]
    fn eta_at_i_matches_closed_form() {
        let mut ctx = Ctx::new(128);
        let eta = eval_eta(&QuadForm::new(1, 0, 1), &mut ctx).unwrap();
        assert!((eta.re_f64() - 0.768_225_422_326_056_7).abs() < 1e-15);
        assert!(eta.im_f64().abs() < 1e-30);
    }

    #[test]
    fn eta_translation_changes_only_phase() {
        let mut ctx = Ctx::new(128);
        for (a, b, d) in [(3, 1, 11), (5, 3, 31), (2, 1, 23)] {
            let f = QuadForm::new(a, b, (b * b + d) / (4 * a));
            // τ + 1 corresponds to b - 2a
            let g = QuadForm::new(a, b - 2 * a, ((b - 2 * a) * (b - 2 * a) + d) / (4 * a));
            let x = eval_eta(&f, &mut ctx).unwrap();
            let y = eval_eta(&g, &mut ctx).unwrap();
            let m = |z: &Ball| (z.re_f64().powi(2) + z.im_f64().powi(2)).sqrt();
            assert!((m(&x) - m(&y)).abs() < 1e-14);
        }
    }

    #[test]
    fn cm_values() {
        let mut ctx = Ctx::new(192);
        let v = eval_hauptmodul_star(2, &QuadForm::new(2, 0, 1), &mut ctx).unwrap();
        assert!((v.re_f64() - 152.0).abs() < 1e-20 && v.im_f64().abs() < 1e-20);
        let v = eval_hauptmodul_star(3, &QuadForm::new(3, 3, 1), &mut ctx).unwrap();
        assert!((v.re_f64() + 42.0).abs() < 1e-20 && v.im_f64().abs() < 1e-20);
        // j(i) = 1728
        let v = eval_hauptmodul_star(1, &QuadForm::new(1, 0, 1), &mut ctx).unwrap();
        assert!((v.re_f64() - 984.0).abs() < 1e-20);
        // j(ρ) = 0
        let v = eval_hauptmodul_star(1, &QuadForm::new(1, 1, 1), &mut ctx).unwrap();
        assert!((v.re_f64() + 744.0).abs() < 1e-20);
        assert!(matches!(
            eval_hauptmodul_star(3, &QuadForm::new(1, 1, 1), &mut ctx),
            Err(HauptmodulError::NotLevelForm { .. })
        ));
    }

    #[test]
    fn growth_rate_at_large_d() {
        let mut ctx = Ctx::new(256);
        let d = 4 * 3 * 97 - 9;
        let f = QuadForm::new(3, 3, 97);
        assert_eq!(f.d(), d);
        let v = eval_hauptmodul_star(3, &f, &mut ctx).unwrap();
        let log_abs = (v.re_f64().powi(2) + v.im_f64().powi(2)).sqrt().ln();
        let expected = std::f64::consts::PI * (d as f64).sqrt() / 3.0;
        assert!((log_abs - expected).abs() < 1e-6);
    }

    /// Sum `Σ c_n q^n` of a truncated expansion at a ball `q`, for comparison
    /// with the eta evaluation.
    fn eval_series(s: &QSeries, q: &Ball, qinv: &Ball, ctx: &Ctx) -> Ball {
        let mut acc = Ball::zero(ctx);
        let mut pow = qinv.clone();
        for n in s.valuation()..s.trunc() {
            let c = s.coeff_integer(n).unwrap();
            acc = acc.add(&pow.mul(&Ball::from_bigint(&c, ctx), ctx).unwrap(), ctx).unwrap();
            pow = pow.mul(q, ctx).unwrap();
        }
        acc
    }

    #[test]
    fn series_agrees_with_eta_evaluation() {
        for p in [1, 2, 3, 5] {
            let level = Level::star(p).unwrap();
            let s = hauptmodul_series(level, 80).unwrap();
            for (d, a) in [(4, 1), (16, 1)] {
                let mut ctx = Ctx::new(256);
                let form = QuadForm::new(a, 0, d / (4 * a));
                let q = cm_exponential(0, d, a, -1, &mut ctx).unwrap();
                let qinv = cm_exponential(0, d, a, 1, &mut ctx).unwrap();
                let from_series = eval_series(&s, &q, &qinv, &ctx);
                let from_eta = eval_at_point(level, &form, &mut ctx).unwrap();
                let diff = from_series.sub(&from_eta, &ctx).unwrap();
                // truncation after q^80 at |q| <= e^{-2π} is far below the working precision
                assert!(diff.re_f64().abs() < 1e-60, "p={p} d={d}: {}", diff.re_f64());
                assert!(from_eta.radius() < 1e-60);
            }
        }
    }

    #[test]
    fn precision_policy() {
        let b = PrecisionBudget::for_cm_sum(2, 47, 2);
        let expected = (std::f64::consts::PI * 2.0 * 47f64.sqrt() / (2.0 * std::f64::consts::LN_2)).ceil() as usize + 64;
        assert_eq!(b.working_bits, expected);
        assert_eq!(b.doubled().working_bits, 2 * expected);
        assert!(b.error_bound < 0.25 + f64::EPSILON);
    }
}
