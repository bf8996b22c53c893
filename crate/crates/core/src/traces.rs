//! Modular traces `t_m^(p*)(d)` and `t_m^(p)(d)`.
//!
//! For `d > 0` a trace is a sum of `φ_m(j_p*(α_Q)) / |stabilizer|` over class
//! representatives, evaluated in ball arithmetic and rounded once the ball is
//! narrow enough. For `d ≤ 0` the values come from the principal part of the
//! generating series `g_m^(p*)`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::forms::{self, FormClass, FormError};
use crate::hauptmodul::{self, FaberTable, HauptmodulError, Level, PrecisionBudget};
use crate::numeric::{certify_integer, Ball, CertifiedInteger, Ctx, NumericError};
use crate::series::{sigma1, QSeries, SeriesError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("precision ceiling of {ceiling} bits reached at d = {d} without a certified rounding")]
    PrecisionCeiling { d: i64, ceiling: usize },
    #[error("m = {m} is outside the prepared range 1..={m_max}")]
    IndexOutOfRange { m: u32, m_max: u32 },
    #[error("d must be positive for a class sum, got {0}")]
    NonPositive(i64),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Hauptmodul(#[from] HauptmodulError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

pub type Result<T> = std::result::Result<T, TraceError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SpecialValue,
    CmSum,
    ZeroNonsquare,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceValue {
    pub p: u32,
    pub starred: bool,
    pub m: u32,
    pub d: i64,
    #[serde(serialize_with = "serialize_bigint")]
    pub value: BigInt,
    pub provenance: Provenance,
    /// `|numeric sum - value|` before rounding (class sums only).
    pub residual: Option<f64>,
    /// Certified radius of the numeric sum (class sums only).
    pub radius: Option<f64>,
    /// Working precision that produced the rounding (class sums only).
    pub bits: Option<usize>,
}

fn serialize_bigint<S: serde::Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Trace values for `d ≤ 0`: `σ1(m) + p·σ1(m/p)` at `d = 0`, `-k` at
/// `d = -k²` with `k | m`, and `0` otherwise. Unstarred values are doubled when
/// `β` is unique modulo `2p`. At level 1 the same formula with `p = 1` gives
/// `2σ1(m)`.
pub fn special_value(p: u32, starred: bool, m: u32, d: i64) -> BigInt {
    assert!(d <= 0, "special values are defined for d <= 0");
    let m64 = m as u64;
    let star = if d == 0 {
        let extra = if m64.is_multiple_of(p as u64) { p as u64 * sigma1(m64 / p as u64) } else { 0 };
        BigInt::from(sigma1(m64) + extra)
    } else {
        let k = sqrt_exact(-d);
        match k {
            Some(k) if m as i64 % k == 0 => BigInt::from(-k),
            _ => BigInt::zero(),
        }
    };
    if starred || p == 1 || forms::betas(d, p).len() != 1 {
        star
    } else {
        star * 2
    }
}

fn sqrt_exact(n: i64) -> Option<i64> {
    if n < 0 {
        return None;
    }
    let r = num_integer::Roots::sqrt(&n);
    (r * r == n).then_some(r)
}

/// Evaluation data for one class: where to evaluate and the weight `12/|stab|`
/// (every stabilizer order divides 12).
struct Term {
    form: forms::QuadForm,
    weight: i64,
}

/// Shared trace machinery for one level: Faber polynomials, class lists and
/// the precision policy.
#[derive(Clone, Debug)]
pub struct TraceEngine {
    p: u32,
    faber: FaberTable,
    ceiling: usize,
}

impl TraceEngine {
    /// Prepare `φ_1 .. φ_{m_max}` for level `p ∈ {1, 2, 3, 5}`.
    pub fn new(p: u32, m_max: u32) -> Result<Self> {
        let level = Level::star(p)?;
        Ok(TraceEngine {
            p,
            faber: FaberTable::build(level, m_max.max(1), m_max as i64 + 4)?,
            ceiling: PrecisionBudget::DEFAULT_CEILING,
        })
    }

    pub fn with_ceiling(mut self, bits: usize) -> Self {
        self.ceiling = bits;
        self
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn m_max(&self) -> u32 {
        self.faber.m_max()
    }

    pub fn ceiling(&self) -> usize {
        self.ceiling
    }

    pub fn faber(&self) -> &FaberTable {
        &self.faber
    }

    fn check_m(&self, m: u32) -> Result<()> {
        if m == 0 || m > self.m_max() {
            Err(TraceError::IndexOutOfRange { m, m_max: self.m_max() })
        } else {
            Ok(())
        }
    }

    fn terms(&self, classes: &[FormClass]) -> Result<Vec<Term>> {
        classes
            .iter()
            .map(|c| {
                Ok(Term {
                    form: forms::min_rep_star(&c.representative, self.p)?,
                    weight: 12 / c.stabilizer_order as i64,
                })
            })
            .collect()
    }

    /// Classes whose weighted CM values sum to the starred trace.
    pub fn starred_classes(&self, d: i64) -> Result<Vec<FormClass>> {
        if self.p == 1 {
            Ok(forms::sl2_classes(d))
        } else {
            Ok(forms::gamma0star_classes(d, self.p)?)
        }
    }

    /// Classes of one `β`-sector (`Γ0(p)`-classes).
    pub fn sector_classes(&self, d: i64, beta: i64) -> Result<Vec<FormClass>> {
        if self.p == 1 {
            Ok(forms::sl2_classes(d))
        } else {
            Ok(forms::gamma0_classes(d, self.p, beta)?)
        }
    }

    /// Class sums for every `m` in `ms`, escalating precision until each one
    /// rounds with radius < 1/4 and residual < 0.1.
    fn cm_sums(&self, d: i64, terms: &[Term], ms: &[u32]) -> Result<Vec<CertifiedInteger>> {
        let a_min = if self.p == 1 { 1 } else { self.p as i64 };
        let m_top = ms.iter().copied().max().unwrap_or(1);
        let mut budget = PrecisionBudget::for_cm_sum(m_top, d, a_min);
        let level = Level::star(self.p)?;
        loop {
            if budget.working_bits > self.ceiling {
                return Err(TraceError::PrecisionCeiling { d, ceiling: self.ceiling });
            }
            let mut ctx = Ctx::new(budget.working_bits);
            let mut sums: Vec<Ball> = ms.iter().map(|_| Ball::zero(&ctx)).collect();
            for t in terms {
                let j = hauptmodul::eval_at_point(level, &t.form, &mut ctx)?;
                for (sum, &m) in sums.iter_mut().zip(ms) {
                    let poly = self.faber.get(m).expect("m checked");
                    let v = j.eval_poly(&poly.coeffs, &ctx)?.mul_i64(t.weight, &ctx)?;
                    *sum = sum.add(&v, &ctx)?;
                }
            }
            let three = Ball::from_i64(3, &ctx);
            let mut out = Vec::with_capacity(ms.len());
            for sum in &sums {
                let total = sum.mul_pow2(-2).div(&three, &ctx)?;
                match certify_integer(&total, &ctx)? {
                    Some(c) => out.push(c),
                    None => break,
                }
            }
            if out.len() == ms.len() {
                return Ok(out);
            }
            budget = budget.doubled();
        }
    }

    fn value(&self, starred: bool, m: u32, d: i64, c: Option<CertifiedInteger>, provenance: Provenance) -> TraceValue {
        let (value, residual, radius, bits) = match c {
            Some(c) => (c.value, Some(c.residual), Some(c.radius), Some(c.bits)),
            None => (BigInt::zero(), None, None, None),
        };
        TraceValue {
            p: self.p,
            starred,
            m,
            d,
            value,
            provenance,
            residual,
            radius,
            bits,
        }
    }

    fn special(&self, starred: bool, m: u32, d: i64) -> TraceValue {
        TraceValue {
            value: special_value(self.p, starred, m, d),
            provenance: Provenance::SpecialValue,
            ..self.value(starred, m, d, None, Provenance::SpecialValue)
        }
    }

    /// `t_m` for every `m` in `1..=m_max` at one `d`.
    pub fn traces(&self, starred: bool, d: i64) -> Result<Vec<TraceValue>> {
        let ms: Vec<u32> = (1..=self.m_max()).collect();
        self.traces_for(starred, &ms, d)
    }

    fn traces_for(&self, starred: bool, ms: &[u32], d: i64) -> Result<Vec<TraceValue>> {
        for &m in ms {
            self.check_m(m)?;
        }
        let starred = starred || self.p == 1;
        if d <= 0 {
            return Ok(ms.iter().map(|&m| self.special(starred, m, d)).collect());
        }
        if !forms::discriminant_ok(d, self.p) {
            return Ok(ms
                .iter()
                .map(|&m| self.value(starred, m, d, None, Provenance::ZeroNonsquare))
                .collect());
        }
        let classes = if starred {
            self.starred_classes(d)?
        } else {
            self.sector_classes(d, forms::betas(d, self.p)[0])?
        };
        let terms = self.terms(&classes)?;
        let sums = self.cm_sums(d, &terms, ms)?;
        Ok(ms
            .iter()
            .zip(sums)
            .map(|(&m, c)| self.value(starred, m, d, Some(c), Provenance::CmSum))
            .collect())
    }

    /// `t_m^(p*)(d)` (starred) or `t_m^(p)(d)` with the smallest valid `β`.
    pub fn trace(&self, starred: bool, m: u32, d: i64) -> Result<TraceValue> {
        Ok(self.traces_for(starred, &[m], d)?.remove(0))
    }

    /// Unstarred trace over the sector of a chosen `β`.
    pub fn trace_beta(&self, m: u32, d: i64, beta: i64) -> Result<TraceValue> {
        self.check_m(m)?;
        if d <= 0 {
            return Err(TraceError::NonPositive(d));
        }
        let terms = self.terms(&self.sector_classes(d, beta)?)?;
        let c = self.cm_sums(d, &terms, &[m])?.remove(0);
        Ok(self.value(self.p == 1, m, d, Some(c), Provenance::CmSum))
    }

    /// Starred `t_m` for all `d` in `d_lo..=d_hi`, computed in parallel and
    /// returned in order of `d`.
    pub fn starred_range(&self, m: u32, d_lo: i64, d_hi: i64) -> Result<Vec<TraceValue>> {
        self.check_m(m)?;
        (d_lo..=d_hi)
            .into_par_iter()
            .map(|d| self.trace(true, m, d))
            .collect()
    }

    /// Rows `-4 ≤ d ≤ d_max` with `-d` a square modulo `4p`.
    pub fn table(&self, d_max: i64) -> Result<TraceTable> {
        let ds: Vec<i64> = (-4..=d_max).filter(|&d| forms::discriminant_ok(d, self.p)).collect();
        let rows: Vec<TraceRow> = ds
            .par_iter()
            .map(|&d| {
                let starred = self.traces(true, d)?;
                let plain = if self.p == 1 { starred.clone() } else { self.traces(false, d)? };
                Ok(TraceRow {
                    d,
                    starred: starred.into_iter().map(|t| t.value).collect(),
                    plain: plain.into_iter().map(|t| t.value).collect(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(TraceTable {
            p: self.p,
            m_max: self.m_max(),
            d_max,
            rows,
        })
    }

    /// `g_m^(p*) = Σ_{d>0} t_m^(p*)(d) q^d + (σ1(m) + pσ1(m/p)) - Σ_{k|m} k q^{-k²}`
    /// through `q^n`.
    pub fn g_series(&self, m: u32, n: i64) -> Result<QSeries> {
        self.check_m(m)?;
        let lo = -((m as i64) * (m as i64));
        let mut coeffs: Vec<BigInt> = (lo..=0).map(|d| special_value(self.p, true, m, d)).collect();
        // principal part read off the divisors of m, independently of special_value
        for (i, d) in (lo..=0).enumerate() {
            let expected = if d == 0 {
                let pp = self.p as u64;
                let m64 = m as u64;
                BigInt::from(sigma1(m64) + if m64.is_multiple_of(pp) { pp * sigma1(m64 / pp) } else { 0 })
            } else {
                (1..=m as i64)
                    .filter(|k| m as i64 % k == 0 && -k * k == d)
                    .map(|k| BigInt::from(-k))
                    .next()
                    .unwrap_or_default()
            };
            assert_eq!(coeffs[i], expected, "principal part of g_{m} at q^{d}");
        }
        if n >= 1 {
            for t in self.starred_range(m, 1, n)? {
                coeffs.push(t.value);
            }
        }
        Ok(QSeries::from_integers(lo, coeffs, n.max(0) + 1)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub d: i64,
    #[serde(serialize_with = "crate::series::serialize_bigints")]
    pub starred: Vec<BigInt>,
    #[serde(serialize_with = "crate::series::serialize_bigints")]
    pub plain: Vec<BigInt>,
}

/// Trace values by `d`; at level 1 the unstarred columns repeat the starred ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceTable {
    pub p: u32,
    pub m_max: u32,
    pub d_max: i64,
    pub rows: Vec<TraceRow>,
}

impl TraceTable {
    pub fn row(&self, d: i64) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.d == d)
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("d");
        for m in 1..=self.m_max {
            write!(h, ",t{m}_star").unwrap();
        }
        for m in 1..=self.m_max {
            write!(h, ",t{m}").unwrap();
        }
        h
    }

    /// `d,t1_star,t2_star,t1,t2` for the default `m_max = 2`.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.rows {
            write!(out, "{}", r.d).unwrap();
            for v in r.starred.iter().chain(&r.plain) {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parse the CSV layout produced by [`TraceTable::to_csv`].
    pub fn from_csv(p: u32, text: &str) -> std::result::Result<TraceTable, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or("empty table")?;
        let cols = header.split(',').count();
        if cols < 3 || (cols - 1) % 2 != 0 {
            return Err(format!("bad header: {header}"));
        }
        let m_max = ((cols - 1) / 2) as u32;
        let mut rows = Vec::new();
        for line in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != cols {
                return Err(format!("bad row: {line}"));
            }
            let d: i64 = cells[0].parse().map_err(|e| format!("{line}: {e}"))?;
            let nums: Vec<BigInt> = cells[1..]
                .iter()
                .map(|c| c.parse::<BigInt>().map_err(|e| format!("{line}: {e}")))
                .collect::<std::result::Result<_, _>>()?;
            let (s, u) = nums.split_at(m_max as usize);
            rows.push(TraceRow {
                d,
                starred: s.to_vec(),
                plain: u.to_vec(),
            });
        }
        let d_max = rows.iter().map(|r| r.d).max().unwrap_or(0);
        Ok(TraceTable { p, m_max, d_max, rows })
    }

    /// Fixed-width layout with one row per `d`.
    pub fn to_text(&self) -> String {
        let header: Vec<String> = self.csv_header().split(',').map(str::to_string).collect();
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                std::iter::once(r.d.to_string())
                    .chain(r.starred.iter().chain(&r.plain).map(|v| v.to_string()))
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| body.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in std::iter::once(&header).chain(body.iter()) {
            let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}
