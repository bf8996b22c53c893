//! Truncated Laurent series in `q` with exact rational coefficients.
//!
//! A [`QSeries`] stores integer numerators over one shared positive
//! denominator, so the common case (integral expansions) runs on plain
//! `BigInt` convolutions. Every series carries an explicit truncation: the
//! coefficient of `q^n` is known exactly for `n < trunc` and reading past that
//! is an error rather than an implicit zero.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("coefficient of q^{exponent} requested, but the series is only known below q^{trunc}")]
    BeyondTruncation { exponent: i64, trunc: i64 },
    #[error("empty truncation window: nothing is known between q^{valuation} and q^{trunc}")]
    EmptyWindow { valuation: i64, trunc: i64 },
    #[error("eta product has q-offset {numer}/24, which is not an integer")]
    NonIntegralOffset { numer: i64 },
    #[error("coefficient of q^{0} is not an integer")]
    NotIntegral(i64),
    #[error("series has no nonzero coefficient in its window and cannot be inverted")]
    NotInvertible,
    #[error("coefficient vector has length {got}, window needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// `Σ_{valuation ≤ n < trunc} (numer[n - valuation] / denom) q^n + O(q^trunc)`.
#[derive(Clone, Debug)]
pub struct QSeries {
    valuation: i64,
    numer: Vec<BigInt>,
    denom: BigInt,
    trunc: i64,
}

impl QSeries {
    /// The zero series `O(q^trunc)`.
    pub fn zero(trunc: i64) -> Self {
        QSeries {
            valuation: trunc,
            numer: Vec::new(),
            denom: BigInt::one(),
            trunc,
        }
    }

    pub fn from_integers(valuation: i64, coeffs: Vec<BigInt>, trunc: i64) -> Result<Self> {
        let expected = window_len(valuation, trunc);
        if coeffs.len() != expected {
            return Err(SeriesError::LengthMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        let mut s = QSeries {
            valuation: valuation.min(trunc),
            numer: coeffs,
            denom: BigInt::one(),
            trunc,
        };
        s.normalize();
        Ok(s)
    }

    pub fn from_i64s(valuation: i64, coeffs: &[i64], trunc: i64) -> Result<Self> {
        Self::from_integers(valuation, coeffs.iter().map(|&c| BigInt::from(c)).collect(), trunc)
    }

    pub fn from_rationals(valuation: i64, coeffs: Vec<BigRational>, trunc: i64) -> Result<Self> {
        let expected = window_len(valuation, trunc);
        if coeffs.len() != expected {
            return Err(SeriesError::LengthMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        let denom = coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let numer = coeffs
            .iter()
            .map(|c| c.numer() * (&denom / c.denom()))
            .collect();
        let mut s = QSeries {
            valuation: valuation.min(trunc),
            numer,
            denom,
            trunc,
        };
        s.normalize();
        Ok(s)
    }

    /// `coeff · q^exponent + O(q^trunc)`.
    pub fn monomial(coeff: BigRational, exponent: i64, trunc: i64) -> Self {
        if exponent >= trunc {
            return Self::zero(trunc);
        }
        let mut numer = vec![BigInt::zero(); window_len(exponent, trunc)];
        numer[0] = coeff.numer().clone();
        let mut s = QSeries {
            valuation: exponent,
            numer,
            denom: coeff.denom().clone(),
            trunc,
        };
        s.normalize();
        s
    }

    pub fn constant(c: BigRational, trunc: i64) -> Self {
        Self::monomial(c, 0, trunc)
    }

    pub fn one(trunc: i64) -> Self {
        Self::constant(BigRational::one(), trunc)
    }

    pub fn valuation(&self) -> i64 {
        self.valuation
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn denominator(&self) -> &BigInt {
        &self.denom
    }

    pub fn is_integral(&self) -> bool {
        self.denom.is_one()
    }

    /// Exact coefficient of `q^n`.
    pub fn coeff(&self, n: i64) -> Result<BigRational> {
        let num = self.numer_at(n)?;
        Ok(BigRational::new(num, self.denom.clone()))
    }

    /// Coefficient of `q^n`, which must be an integer.
    pub fn coeff_integer(&self, n: i64) -> Result<BigInt> {
        let num = self.numer_at(n)?;
        if self.denom.is_one() {
            return Ok(num);
        }
        let (q, r) = num.div_rem(&self.denom);
        if r.is_zero() {
            Ok(q)
        } else {
            Err(SeriesError::NotIntegral(n))
        }
    }

    /// All coefficients on `[valuation, trunc)` as integers.
    pub fn integer_coeffs(&self) -> Result<Vec<BigInt>> {
        (self.valuation..self.trunc)
            .map(|n| self.coeff_integer(n))
            .collect()
    }

    fn numer_at(&self, n: i64) -> Result<BigInt> {
        if n >= self.trunc {
            return Err(SeriesError::BeyondTruncation {
                exponent: n,
                trunc: self.trunc,
            });
        }
        if n < self.valuation {
            return Ok(BigInt::zero());
        }
        Ok(self.numer[(n - self.valuation) as usize].clone())
    }

    fn numer_ref(&self, n: i64) -> Option<&BigInt> {
        if n < self.valuation || n >= self.trunc {
            None
        } else {
            Some(&self.numer[(n - self.valuation) as usize])
        }
    }

    /// Reduce the shared denominator and drop leading zero coefficients.
    fn normalize(&mut self) {
        if self.denom.is_negative() {
            self.denom = -&self.denom;
            for c in &mut self.numer {
                *c = -&*c;
            }
        }
        if !self.denom.is_one() {
            let mut g = self.denom.clone();
            for c in &self.numer {
                if g.is_one() {
                    break;
                }
                if !c.is_zero() {
                    g = g.gcd(c);
                }
            }
            if !g.is_one() {
                self.denom /= &g;
                for c in &mut self.numer {
                    *c /= &g;
                }
            }
        }
        let lead = self.numer.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.numer.drain(..lead);
            self.valuation += lead as i64;
        }
        if self.numer.is_empty() {
            self.valuation = self.trunc;
            self.denom = BigInt::one();
        }
    }

    /// Forget everything at or above `q^trunc`.
    pub fn truncate(&self, trunc: i64) -> Self {
        if trunc >= self.trunc {
            return self.clone();
        }
        if trunc <= self.valuation {
            return Self::zero(trunc);
        }
        let mut s = QSeries {
            valuation: self.valuation,
            numer: self.numer[..(trunc - self.valuation) as usize].to_vec(),
            denom: self.denom.clone(),
            trunc,
        };
        s.normalize();
        s
    }

    /// Multiply by `q^k`.
    pub fn shift(&self, k: i64) -> Self {
        QSeries {
            valuation: self.valuation + k,
            numer: self.numer.clone(),
            denom: self.denom.clone(),
            trunc: self.trunc + k,
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.trunc);
        }
        let mut s = QSeries {
            valuation: self.valuation,
            numer: self.numer.iter().map(|x| x * c.numer()).collect(),
            denom: &self.denom * c.denom(),
            trunc: self.trunc,
        };
        s.normalize();
        s
    }

    pub fn scale_int(&self, c: i64) -> Self {
        self.scale(&BigRational::from_integer(BigInt::from(c)))
    }

    /// Cauchy product. The result is known below
    /// `min(trunc_f + val_g, trunc_g + val_f)`.
    pub fn mul(&self, other: &QSeries) -> Result<QSeries> {
        // an identically zero factor has valuation +inf
        if self.numer.is_empty() {
            return Ok(Self::zero(self.trunc + other.valuation));
        }
        if other.numer.is_empty() {
            return Ok(Self::zero(other.trunc + self.valuation));
        }
        let valuation = self.valuation + other.valuation;
        let trunc = (self.trunc + other.valuation).min(other.trunc + self.valuation);
        if trunc <= valuation {
            return Err(SeriesError::EmptyWindow { valuation, trunc });
        }
        let len = (trunc - valuation) as usize;
        let mut acc = vec![BigInt::zero(); len];
        for (i, fi) in self.numer.iter().enumerate().take(len) {
            if fi.is_zero() {
                continue;
            }
            let room = len - i;
            for (j, gj) in other.numer.iter().enumerate().take(room) {
                if gj.is_zero() {
                    continue;
                }
                acc[i + j] += fi * gj;
            }
        }
        let mut s = QSeries {
            valuation,
            numer: acc,
            denom: &self.denom * &other.denom,
            trunc,
        };
        s.normalize();
        Ok(s)
    }

    pub fn pow(&self, e: u32) -> Result<QSeries> {
        if e == 0 {
            return Ok(Self::one(self.trunc - self.valuation));
        }
        let mut result: Option<QSeries> = None;
        let mut base = self.clone();
        let mut k = e;
        loop {
            if k & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.mul(&base)?,
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            base = base.mul(&base)?;
        }
        Ok(result.expect("e > 0"))
    }

    /// Multiplicative inverse; the window keeps its length.
    pub fn inverse(&self) -> Result<QSeries> {
        if self.numer.is_empty() || self.numer[0].is_zero() {
            return Err(SeriesError::NotInvertible);
        }
        let len = self.numer.len();
        // work with f = lead * q^v * (1 + h), h having rational coefficients
        let lead = BigRational::new(self.numer[0].clone(), self.denom.clone());
        let lead_inv = lead.recip();
        let h: Vec<BigRational> = self
            .numer
            .iter()
            .map(|c| BigRational::new(c.clone(), self.numer[0].clone()))
            .collect();
        let mut inv = vec![BigRational::zero(); len];
        inv[0] = BigRational::one();
        for k in 1..len {
            let mut s = BigRational::zero();
            for i in 1..=k {
                if !h[i].is_zero() {
                    s -= &h[i] * &inv[k - i];
                }
            }
            inv[k] = s;
        }
        let coeffs = inv.into_iter().map(|c| c * &lead_inv).collect();
        QSeries::from_rationals(-self.valuation, coeffs, -self.valuation + len as i64)
    }

    /// `U_t`: the coefficient of `q^n` becomes the coefficient of `q^(tn)`.
    pub fn u_op(&self, t: u32) -> QSeries {
        let t = t as i64;
        assert!(t >= 1, "U_t needs t >= 1");
        let valuation = Integer::div_ceil(&self.valuation, &t);
        let trunc = Integer::div_ceil(&self.trunc, &t);
        let numer = (valuation..trunc)
            .map(|n| self.numer_ref(n * t).cloned().unwrap_or_default())
            .collect();
        let mut s = QSeries {
            valuation: valuation.min(trunc),
            numer,
            denom: self.denom.clone(),
            trunc,
        };
        s.normalize();
        s
    }

    /// `V_t`: the substitution `q -> q^t`.
    pub fn v_op(&self, t: u32) -> QSeries {
        let t = t as i64;
        assert!(t >= 1, "V_t needs t >= 1");
        let valuation = self.valuation * t;
        let trunc = self.trunc * t;
        let mut numer = vec![BigInt::zero(); window_len(valuation, trunc)];
        for (i, c) in self.numer.iter().enumerate() {
            numer[i * t as usize] = c.clone();
        }
        QSeries {
            valuation,
            numer,
            denom: self.denom.clone(),
            trunc,
        }
    }

    /// Keep only exponents `n ≡ k (mod modulus)`.
    pub fn sector_filter(&self, k: i64, modulus: i64) -> QSeries {
        assert!(modulus >= 1 && (0..modulus).contains(&k), "need 0 <= k < modulus");
        let numer = self
            .numer
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if (self.valuation + i as i64).rem_euclid(modulus) == k {
                    c.clone()
                } else {
                    BigInt::zero()
                }
            })
            .collect();
        let mut s = QSeries {
            valuation: self.valuation,
            numer,
            denom: self.denom.clone(),
            trunc: self.trunc,
        };
        s.normalize();
        s
    }

    /// `q d/dq`, i.e. `(2πi)^{-1} d/dτ`.
    pub fn q_derivative(&self) -> QSeries {
        let numer = self
            .numer
            .iter()
            .enumerate()
            .map(|(i, c)| c * (self.valuation + i as i64))
            .collect();
        let mut s = QSeries {
            valuation: self.valuation,
            numer,
            denom: self.denom.clone(),
            trunc: self.trunc,
        };
        s.normalize();
        s
    }

    fn combine(&self, other: &QSeries, sign: i64) -> QSeries {
        let trunc = self.trunc.min(other.trunc);
        let valuation = self.valuation.min(other.valuation).min(trunc);
        let denom = self.denom.lcm(&other.denom);
        let fa = &denom / &self.denom;
        let fb = &denom / &other.denom;
        let numer = (valuation..trunc)
            .map(|n| {
                let a = self.numer_ref(n).map(|x| x * &fa).unwrap_or_default();
                let b = other.numer_ref(n).map(|x| x * &fb).unwrap_or_default();
                if sign > 0 {
                    a + b
                } else {
                    a - b
                }
            })
            .collect();
        let mut s = QSeries {
            valuation,
            numer,
            denom,
            trunc,
        };
        s.normalize();
        s
    }
}

fn window_len(valuation: i64, trunc: i64) -> usize {
    (trunc - valuation).max(0) as usize
}

impl PartialEq for QSeries {
    fn eq(&self, other: &Self) -> bool {
        if self.trunc != other.trunc || self.denom != other.denom {
            return false;
        }
        let lo = self.valuation.min(other.valuation);
        (lo..self.trunc).all(|n| {
            let z = BigInt::zero();
            self.numer_ref(n).unwrap_or(&z) == other.numer_ref(n).unwrap_or(&z)
        })
    }
}

impl Eq for QSeries {}

impl Add for &QSeries {
    type Output = QSeries;
    fn add(self, rhs: &QSeries) -> QSeries {
        self.combine(rhs, 1)
    }
}

impl Sub for &QSeries {
    type Output = QSeries;
    fn sub(self, rhs: &QSeries) -> QSeries {
        self.combine(rhs, -1)
    }
}

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        QSeries {
            valuation: self.valuation,
            numer: self.numer.iter().map(|c| -c).collect(),
            denom: self.denom.clone(),
            trunc: self.trunc,
        }
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.numer.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let n = self.valuation + i as i64;
            let r = BigRational::new(c.clone(), self.denom.clone());
            let (sign, mag) = if r.is_negative() { ("-", -r) } else { ("+", r) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match n {
                0 => write!(f, "{mag}")?,
                _ if mag.is_one() => write!(f, "q^{n}")?,
                _ => write!(f, "{mag}*q^{n}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(q^{})", self.trunc)
    }
}

#[derive(Serialize)]
struct QSeriesJson {
    valuation: i64,
    trunc: i64,
    coeffs: Vec<String>,
}

impl Serialize for QSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        QSeriesJson {
            valuation: self.valuation,
            trunc: self.trunc,
            coeffs: self
                .numer
                .iter()
                .map(|c| BigRational::new(c.clone(), self.denom.clone()).to_string())
                .collect(),
        }
        .serialize(serializer)
    }
}

/// One product `multiplier · Π η(tτ)^e` inside an eta quotient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaProduct {
    pub multiplier: BigRational,
    /// `(scale t, exponent e)` pairs.
    pub factors: Vec<(u32, i32)>,
}

impl EtaProduct {
    pub fn new(multiplier: BigRational, factors: Vec<(u32, i32)>) -> Self {
        EtaProduct { multiplier, factors }
    }

    /// `24 ×` the exponent of the leading power of `q`.
    pub fn offset_numer(&self) -> i64 {
        self.factors.iter().map(|&(t, e)| t as i64 * e as i64).sum()
    }
}

/// A sum of eta products plus an additive constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaQuotientSpec {
    terms: Vec<EtaProduct>,
    constant: BigRational,
}

impl EtaQuotientSpec {
    pub fn new(terms: Vec<EtaProduct>, constant: BigRational) -> Result<Self> {
        for term in &terms {
            let numer = term.offset_numer();
            if numer % 24 != 0 {
                return Err(SeriesError::NonIntegralOffset { numer });
            }
            if term.factors.iter().any(|&(t, _)| t == 0) {
                return Err(SeriesError::InvalidArgument("eta scale must be positive".into()));
            }
        }
        Ok(EtaQuotientSpec { terms, constant })
    }

    pub fn terms(&self) -> &[EtaProduct] {
        &self.terms
    }

    pub fn constant(&self) -> &BigRational {
        &self.constant
    }
}

/// `Π_{n≥1} (1 - q^n)` below `q^n_terms`, from Euler's pentagonal number theorem.
pub fn eta_series(n_terms: i64) -> QSeries {
    if n_terms <= 0 {
        return QSeries::zero(n_terms);
    }
    let len = n_terms as usize;
    let mut c = vec![BigInt::zero(); len];
    c[0] = BigInt::one();
    for k in 1i64.. {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let e1 = (k * (3 * k - 1) / 2) as usize;
        let e2 = (k * (3 * k + 1) / 2) as usize;
        if e1 >= len {
            break;
        }
        c[e1] += sign;
        if e2 < len {
            c[e2] += sign;
        }
    }
    QSeries::from_integers(0, c, n_terms).expect("window length matches")
}

/// Power-series part of `Π η(tτ)^e` with the `q^{Σte/24}` prefactor stripped:
/// the first `len` coefficients of `Π_t Π_n (1 - q^{tn})^e`.
///
/// Uses the logarithmic-derivative recurrence `k f_k = Σ_{i=1}^k s_i f_{k-i}`
/// with `s_i = -Σ_{(t,e), t | i} e·t·σ1(i/t)`, which only needs small-by-big
/// products.
pub fn eta_product_unshifted(factors: &[(u32, i32)], len: usize) -> Vec<BigInt> {
    let mut f = vec![BigInt::zero(); len];
    if len == 0 {
        return f;
    }
    f[0] = BigInt::one();
    let sig = sigma1_table(len);
    let s: Vec<i64> = (0..len)
        .map(|i| {
            if i == 0 {
                return 0;
            }
            -factors
                .iter()
                .filter(|&&(t, _)| i % t as usize == 0)
                .map(|&(t, e)| e as i64 * t as i64 * sig[i / t as usize] as i64)
                .sum::<i64>()
        })
        .collect();
    for k in 1..len {
        let mut acc = BigInt::zero();
        for i in 1..=k {
            if s[i] != 0 && !f[k - i].is_zero() {
                acc += &f[k - i] * s[i];
            }
        }
        let (q, r) = acc.div_rem(&BigInt::from(k));
        debug_assert!(r.is_zero(), "eta product coefficients are integral");
        f[k] = q;
    }
    f
}

/// Expansion of an eta quotient below `q^n`, including offsets and constant.
pub fn eta_quotient(spec: &EtaQuotientSpec, n: i64) -> Result<QSeries> {
    let mut total = QSeries::constant(spec.constant.clone(), n);
    for term in &spec.terms {
        let offset = term.offset_numer() / 24;
        let len = (n - offset).max(0) as usize;
        let body = eta_product_unshifted(&term.factors, len);
        let series = QSeries::from_integers(offset, body, n)?.scale(&term.multiplier);
        total = &total + &series;
    }
    Ok(total)
}

/// `θ0 = Σ_{n∈Z} q^{n²}` below `q^n`.
pub fn theta0(n: i64) -> QSeries {
    if n <= 0 {
        return QSeries::zero(n);
    }
    let mut c = vec![BigInt::zero(); n as usize];
    c[0] = BigInt::one();
    let mut k = 1i64;
    while k * k < n {
        c[(k * k) as usize] = BigInt::from(2);
        k += 1;
    }
    QSeries::from_integers(0, c, n).expect("window length matches")
}

/// `E2 = 1 - 24 Σ σ1(n) q^n` below `q^n`.
pub fn eisenstein_e2(n: i64) -> QSeries {
    if n <= 0 {
        return QSeries::zero(n);
    }
    let sig = sigma1_table(n as usize);
    let c = (0..n as usize)
        .map(|k| {
            if k == 0 {
                BigInt::one()
            } else {
                BigInt::from(-24i64 * sig[k] as i64)
            }
        })
        .collect();
    QSeries::from_integers(0, c, n).expect("window length matches")
}

/// `E2^(p) = (p E2(pτ) - E2(τ)) / (p - 1)`, the holomorphic weight-2
/// Eisenstein series on `Γ0(p)` normalized to constant term 1.
pub fn eisenstein_e2_level(p: u32, n: i64) -> Result<QSeries> {
    if p < 2 {
        return Err(SeriesError::InvalidArgument(
            "there is no holomorphic weight-2 Eisenstein series of level 1".into(),
        ));
    }
    let e2 = eisenstein_e2(n);
    let e2p = eisenstein_e2(Integer::div_ceil(&n, &(p as i64))).v_op(p).truncate(n);
    let diff = &e2p.scale_int(p as i64) - &e2;
    Ok(diff.scale(&BigRational::new(BigInt::one(), BigInt::from(p - 1))))
}

/// `σ1(n) = Σ_{d | n} d`.
pub fn sigma1(n: u64) -> u64 {
    divisors(n).into_iter().sum()
}

/// `σ1^(p)(n) = Σ_{d | n, p ∤ d} d`.
pub fn sigma1_p(n: u64, p: u64) -> u64 {
    divisors(n).into_iter().filter(|d| d % p != 0).sum()
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            if d * d != n {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out
}

/// `σ1(k)` for `0 ≤ k < len` by sieving (`σ1(0)` is set to 0).
pub fn sigma1_table(len: usize) -> Vec<u64> {
    let mut sig = vec![0u64; len];
    for d in 1..len {
        let mut k = d;
        while k < len {
            sig[k] += d as u64;
            k += d;
        }
    }
    sig
}

/// Serialize integers as decimal strings (they routinely exceed 2^53).
pub(crate) fn serialize_bigints<S: serde::Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|c| c.to_string()))
}
