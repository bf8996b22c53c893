//! Complex ball arithmetic over `astro-float`.
//!
//! A [`Ball`] is a complex center with an upper bound on the distance to the
//! true value. The bound is kept as `log2(radius)` in an `f64`, so radii never
//! underflow regardless of the working precision. astro-float rounds to
//! nearest, so every operation adds an explicit rounding term of a few ulps of
//! the largest intermediate quantity.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

const RM: RoundingMode = RoundingMode::ToEven;
/// Relative slack applied to every f64 log computation.
const LOG_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("ball contains zero at {bits} bits; cannot invert")]
    NotInvertible { bits: usize },
    #[error("arithmetic failure: {0}")]
    Arithmetic(String),
    #[error("precision ceiling of {ceiling} bits exceeded (last radius 2^{radius_log2:.1})")]
    PrecisionCeiling { ceiling: usize, radius_log2: f64 },
}

pub type Result<T> = std::result::Result<T, NumericError>;

fn check(x: BigFloat) -> Result<BigFloat> {
    match x.err() {
        Some(e) => Err(NumericError::Arithmetic(format!("{e:?}"))),
        None if x.is_nan() || x.is_inf() => Err(NumericError::Arithmetic("non-finite value".into())),
        None => Ok(x),
    }
}

/// Upper bound on `log2 |x|`.
fn mag(x: &BigFloat) -> f64 {
    if x.is_zero() {
        f64::NEG_INFINITY
    } else {
        x.exponent().map(|e| e as f64).unwrap_or(f64::INFINITY)
    }
}

/// Upper bound on `log2(2^a + 2^b)`.
fn lse(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (1.0 + (lo - hi).exp2()).log2() + LOG_SLACK * (1.0 + hi.abs())
}

/// Nearest `f64` to a `BigFloat` (through the top mantissa word).
pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, e, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let top = *words.last().unwrap_or(&0) as f64;
    let v = top * ((e as f64) - 64.0).exp2();
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

/// Exact conversion of an integer; the precision is widened as needed.
pub fn bigint_to_float(n: &BigInt, p: usize) -> BigFloat {
    if n.is_zero() {
        return BigFloat::new(p);
    }
    let words = n.magnitude().to_u64_digits();
    let sign = if n.is_negative() { Sign::Neg } else { Sign::Pos };
    let x = BigFloat::from_words(&words, sign, (64 * words.len()) as i32);
    let mut y = x;
    let target = p.max(64 * words.len());
    if let Err(e) = y.set_precision(target, RM) {
        panic!("precision change failed: {e:?}");
    }
    y
}

/// Exact conversion of an integer-valued `BigFloat`.
pub fn float_to_bigint(x: &BigFloat) -> BigInt {
    if x.is_zero() {
        return BigInt::zero();
    }
    let (words, _, sign, e, _) = x.as_raw_parts().expect("finite value");
    let mut m = BigInt::from(num_bigint::BigUint::from_slice(
        &words
            .iter()
            .flat_map(|w| [*w as u32, (*w >> 32) as u32])
            .collect::<Vec<_>>(),
    ));
    let shift = e as i64 - 64 * words.len() as i64;
    if shift >= 0 {
        m <<= shift as usize;
    } else {
        m >>= (-shift) as usize;
    }
    if sign == Sign::Neg {
        -m
    } else {
        m
    }
}

/// Working context: precision in bits plus the constant cache.
pub struct Ctx {
    pub bits: usize,
    pub consts: Consts,
}

impl Ctx {
    pub fn new(bits: usize) -> Self {
        let bits = bits.max(64).div_ceil(64) * 64;
        Ctx {
            bits,
            consts: Consts::new().expect("constant cache"),
        }
    }

    fn ulp_log2(&self) -> f64 {
        -(self.bits as f64)
    }
}

#[derive(Debug, Clone)]
pub struct Ball {
    pub re: BigFloat,
    pub im: BigFloat,
    /// `log2` of the radius bound; `-inf` for an exact value.
    radius_log2: f64,
}

impl Ball {
    pub fn exact(re: BigFloat, im: BigFloat) -> Ball {
        Ball {
            re,
            im,
            radius_log2: f64::NEG_INFINITY,
        }
    }

    pub fn zero(ctx: &Ctx) -> Ball {
        Ball::exact(BigFloat::new(ctx.bits), BigFloat::new(ctx.bits))
    }

    pub fn from_i64(v: i64, ctx: &Ctx) -> Ball {
        Ball::exact(BigFloat::from_i64(v, ctx.bits), BigFloat::new(ctx.bits))
    }

    pub fn from_bigint(v: &BigInt, ctx: &Ctx) -> Ball {
        Ball::exact(bigint_to_float(v, ctx.bits), BigFloat::new(ctx.bits))
    }

    /// A ball with the given center and radius bound `2^radius_log2`.
    pub fn with_radius(re: BigFloat, im: BigFloat, radius_log2: f64) -> Ball {
        Ball { re, im, radius_log2 }
    }

    pub fn radius_log2(&self) -> f64 {
        self.radius_log2
    }

    pub fn radius(&self) -> f64 {
        self.radius_log2.exp2()
    }

    pub fn widen(&mut self, extra_log2: f64) {
        self.radius_log2 = lse(self.radius_log2, extra_log2);
    }

    /// Upper bound on `log2 |center|`.
    pub fn mag(&self) -> f64 {
        let m = mag(&self.re).max(mag(&self.im));
        if m == f64::NEG_INFINITY {
            m
        } else {
            m + 0.5
        }
    }

    /// Upper bound on `log2` of the largest modulus in the ball.
    pub fn mag_upper(&self) -> f64 {
        lse(self.mag(), self.radius_log2)
    }

    pub fn re_f64(&self) -> f64 {
        to_f64(&self.re)
    }

    pub fn im_f64(&self) -> f64 {
        to_f64(&self.im)
    }

    fn rounding(&self, ctx: &Ctx, extra: f64) -> f64 {
        let m = self.mag();
        if m == f64::NEG_INFINITY {
            m
        } else {
            m + extra + ctx.ulp_log2()
        }
    }

    pub fn neg(&self) -> Ball {
        Ball {
            re: self.re.neg(),
            im: self.im.neg(),
            radius_log2: self.radius_log2,
        }
    }

    pub fn add(&self, o: &Ball, ctx: &Ctx) -> Result<Ball> {
        let mut out = Ball {
            re: check(self.re.add(&o.re, ctx.bits, RM))?,
            im: check(self.im.add(&o.im, ctx.bits, RM))?,
            radius_log2: lse(self.radius_log2, o.radius_log2),
        };
        let r = out.rounding(ctx, 1.0);
        out.widen(r);
        Ok(out)
    }

    pub fn sub(&self, o: &Ball, ctx: &Ctx) -> Result<Ball> {
        self.add(&o.neg(), ctx)
    }

    pub fn mul(&self, o: &Ball, ctx: &Ctx) -> Result<Ball> {
        let p = ctx.bits;
        let ac = check(self.re.mul(&o.re, p, RM))?;
        let bd = check(self.im.mul(&o.im, p, RM))?;
        let ad = check(self.re.mul(&o.im, p, RM))?;
        let bc = check(self.im.mul(&o.re, p, RM))?;
        let re = check(ac.sub(&bd, p, RM))?;
        let im = check(ad.add(&bc, p, RM))?;
        let (mx, my) = (self.mag(), o.mag());
        let propagated = lse(
            lse(mx + o.radius_log2, my + self.radius_log2),
            self.radius_log2 + o.radius_log2,
        );
        let rounding = mx + my + 3.0 + ctx.ulp_log2();
        Ok(Ball {
            re,
            im,
            radius_log2: lse(propagated, rounding),
        })
    }

    pub fn mul_i64(&self, k: i64, ctx: &Ctx) -> Result<Ball> {
        self.mul(&Ball::from_i64(k, ctx), ctx)
    }

    /// Exact multiplication by `2^k`.
    pub fn mul_pow2(&self, k: i32) -> Ball {
        let shift = |x: &BigFloat| {
            let mut y = x.clone();
            if let Some(e) = y.exponent() {
                if !y.is_zero() {
                    y.set_exponent(e + k);
                }
            }
            y
        };
        Ball {
            re: shift(&self.re),
            im: shift(&self.im),
            radius_log2: self.radius_log2 + k as f64,
        }
    }

    pub fn inv(&self, ctx: &Ctx) -> Result<Ball> {
        let p = ctx.bits;
        // |center| >= 2^(emax - 1)
        let low = mag(&self.re).max(mag(&self.im)) - 1.0;
        if low == f64::NEG_INFINITY || self.radius_log2 >= low - 1.0 {
            return Err(NumericError::NotInvertible { bits: p });
        }
        let n = check(
            self.re
                .mul(&self.re, p, RM)
                .add(&self.im.mul(&self.im, p, RM), p, RM),
        )?;
        let re = check(self.re.div(&n, p, RM))?;
        let im = check(self.im.div(&n, p, RM).neg())?;
        // |1/z - 1/ẑ| <= r / (|ẑ| (|ẑ| - r))
        let gap = low + (1.0 - (self.radius_log2 - low).exp2()).log2() - LOG_SLACK;
        let propagated = self.radius_log2 - low - gap;
        let rounding = -low + 5.0 + ctx.ulp_log2();
        Ok(Ball {
            re,
            im,
            radius_log2: lse(propagated, rounding),
        })
    }

    pub fn div(&self, o: &Ball, ctx: &Ctx) -> Result<Ball> {
        self.mul(&o.inv(ctx)?, ctx)
    }

    pub fn powi(&self, mut n: u32, ctx: &Ctx) -> Result<Ball> {
        let mut base = self.clone();
        let mut acc = Ball::from_i64(1, ctx);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base, ctx)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base, ctx)?;
            }
        }
        Ok(acc)
    }

    /// Evaluate an integer polynomial (coefficients from the constant term
    /// upwards) at this ball by Horner's rule.
    pub fn eval_poly(&self, coeffs: &[BigInt], ctx: &Ctx) -> Result<Ball> {
        let mut acc = Ball::zero(ctx);
        for c in coeffs.iter().rev() {
            acc = acc.mul(self, ctx)?.add(&Ball::from_bigint(c, ctx), ctx)?;
        }
        Ok(acc)
    }

    /// Nearest integer to the real part together with `|Re - n|` as an `f64`.
    pub fn nearest_integer(&self, ctx: &Ctx) -> Result<(BigInt, f64)> {
        let half = BigFloat::from_f64(0.5, ctx.bits);
        let shifted = check(self.re.add(&half, ctx.bits, RM))?;
        let n = check(shifted.floor())?;
        let residual = check(self.re.sub(&n, ctx.bits, RM))?;
        Ok((float_to_bigint(&n), to_f64(&residual).abs()))
    }
}

/// `e^{x}·(cos θ + i sin θ)` with `x = s·π√d/a` and `θ = s·πb/a` for `s = ±1`,
/// plus a bound on its error. Used for the nome `q = e^{2πiα}` at
/// `α = (-b + i√d)/2a` (`s = -1`) and for `1/q` (`s = +1`).
pub fn cm_exponential(b: i64, d: i64, a: i64, sign: i64, ctx: &mut Ctx) -> Result<Ball> {
    let p = ctx.bits;
    // reduce the angle: e^{iπb/a} has period 2a in b
    let b = (b + a).rem_euclid(2 * a) - a;
    let pi = ctx.consts.pi(p, RM);
    let sqrt_d = check(BigFloat::from_i64(d, p).sqrt(p, RM))?;
    let af = BigFloat::from_i64(a, p);
    let mut x = check(pi.mul(&sqrt_d, p, RM).div(&af, p, RM))?;
    let mut theta = check(pi.mul(&BigFloat::from_i64(b, p), p, RM).div(&af, p, RM))?;
    if sign < 0 {
        x = x.neg();
        theta = theta.neg();
    }
    let ex = check(x.exp(p, RM, &mut ctx.consts))?;
    let c = check(theta.cos(p, RM, &mut ctx.consts))?;
    let s = check(theta.sin(p, RM, &mut ctx.consts))?;
    let re = check(ex.mul(&c, p, RM))?;
    let im = check(ex.mul(&s, p, RM))?;
    // relative error of x and θ is a few ulps; exp/cos/sin add a couple more
    let xf = to_f64(&x).abs();
    let tf = to_f64(&theta).abs();
    let rel = (8.0 * xf + 8.0 * tf + 32.0).log2() + ctx.ulp_log2();
    let radius_log2 = mag(&ex) + rel + 0.5;
    Ok(Ball::with_radius(re, im, radius_log2))
}

/// `Π_{n≥1} (1 - q^n)` by the pentagonal number theorem, with a geometric
/// tail bound. `log2_q` must be an upper bound on `log2 |q|` (negative).
pub fn euler_product(q: &Ball, log2_q: f64, ctx: &Ctx) -> Result<Ball> {
    assert!(log2_q < 0.0, "|q| must be below 1");
    let one = Ball::from_i64(1, ctx);
    let q2 = q.mul(q, ctx)?;
    let mut acc = one.clone();
    // a = q^{k(3k-1)/2}, qk = q^k, qodd = q^{2k+1}
    let mut a = q.clone();
    let mut qk = q.clone();
    let mut qodd = q.mul(&q2, ctx)?;
    let target = -(ctx.bits as f64) - 8.0;
    let mut k: i64 = 1;
    loop {
        let b = a.mul(&qk, ctx)?;
        let term = a.add(&b, ctx)?;
        acc = if k % 2 == 1 { acc.sub(&term, ctx)? } else { acc.add(&term, ctx)? };
        let next_g = (k + 1) * (3 * k + 2) / 2;
        // remaining exponents are all >= next_g, each value of n at most twice
        let tail = next_g as f64 * log2_q + 1.0 - (1.0 - log2_q.exp2()).log2();
        if tail < target {
            acc.widen(tail);
            return Ok(acc);
        }
        a = b.mul(&qodd, ctx)?;
        qk = qk.mul(q, ctx)?;
        qodd = qodd.mul(&q2, ctx)?;
        k += 1;
    }
}

/// A real value rounded to an integer, with the data that justified it.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedInteger {
    pub value: BigInt,
    pub residual: f64,
    pub radius: f64,
    pub bits: usize,
}

/// Round a ball known to contain an integer. Succeeds when the radius is
/// below `1/4` and the center is within `0.1` of an integer.
pub fn certify_integer(x: &Ball, ctx: &Ctx) -> Result<Option<CertifiedInteger>> {
    if x.radius_log2() >= -2.0 {
        return Ok(None);
    }
    let (value, residual) = x.nearest_integer(ctx)?;
    if residual >= 0.1 || to_f64(&x.im).abs() >= 0.1 {
        return Ok(None);
    }
    Ok(Some(CertifiedInteger {
        value,
        residual,
        radius: x.radius(),
        bits: ctx.bits,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_round_trip() {
        for v in ["0", "1", "-1", "123456789012345678901234567890", "-18446744073709551616"] {
            let n: BigInt = v.parse().unwrap();
            let x = bigint_to_float(&n, 128);
            assert_eq!(float_to_bigint(&x), n);
        }
    }

    #[test]
    fn f64_conversion() {
        let x = BigFloat::from_f64(-3.25, 128);
        assert_eq!(to_f64(&x), -3.25);
    }

    #[test]
    fn arithmetic_with_radii() {
        let ctx = Ctx::new(128);
        let a = Ball::from_i64(3, &ctx);
        let b = Ball::from_i64(-7, &ctx);
        let p = a.mul(&b, &ctx).unwrap();
        assert_eq!(p.re_f64(), -21.0);
        assert!(p.radius_log2() < -100.0);
        let r = b.inv(&ctx).unwrap().mul(&b, &ctx).unwrap();
        let (n, res) = r.nearest_integer(&ctx).unwrap();
        assert_eq!(n, BigInt::from(1));
        assert!(res < 1e-30);
        assert!(r.radius_log2() < -100.0);
    }

    #[test]
    fn zero_is_not_invertible() {
        let ctx = Ctx::new(64);
        assert!(Ball::zero(&ctx).inv(&ctx).is_err());
    }

    #[test]
    fn eta_at_i() {
        // η(i) = Γ(1/4) / (2 π^{3/4}) = 0.768225422326056659...
        let mut ctx = Ctx::new(192);
        let q = cm_exponential(0, 4, 1, -1, &mut ctx).unwrap(); // e^{-2π}
        let e = euler_product(&q, -2.0 * std::f64::consts::PI / std::f64::consts::LN_2 + 1e-6, &ctx).unwrap();
        // q^{1/24} = e^{-π/12}
        let eta = e.re_f64() * (-std::f64::consts::PI / 12.0).exp();
        assert!((eta - 0.768_225_422_326_056_7).abs() < 1e-15);
        assert!(e.radius_log2() < -150.0);
    }

    #[test]
    fn euler_product_matches_finite_product() {
        let mut ctx = Ctx::new(128);
        let q = cm_exponential(1, 7, 2, -1, &mut ctx).unwrap();
        let log2_q = -std::f64::consts::PI * 7f64.sqrt() / 2.0 / std::f64::consts::LN_2 + 1e-6;
        let e = euler_product(&q, log2_q, &ctx).unwrap();
        let mut prod = Ball::from_i64(1, &ctx);
        let mut qn = q.clone();
        for _ in 0..200 {
            prod = prod.mul(&Ball::from_i64(1, &ctx).sub(&qn, &ctx).unwrap(), &ctx).unwrap();
            qn = qn.mul(&q, &ctx).unwrap();
        }
        let diff = e.sub(&prod, &ctx).unwrap();
        assert!(diff.re_f64().abs() < 1e-30 && diff.im_f64().abs() < 1e-30);
    }

    #[test]
    fn nome_has_expected_modulus() {
        let mut ctx = Ctx::new(128);
        let q = cm_exponential(3, 3, 3, -1, &mut ctx).unwrap();
        let modulus = (q.re_f64().powi(2) + q.im_f64().powi(2)).sqrt();
        let expected = (-std::f64::consts::PI * 3f64.sqrt() / 3.0).exp();
        assert!((modulus - expected).abs() < 1e-15);
        // θ = -π: q is a negative real
        assert!(q.re_f64() < 0.0 && q.im_f64().abs() < 1e-30);
    }
}
