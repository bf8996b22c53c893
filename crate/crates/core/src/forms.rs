//! Positive definite binary quadratic forms `[a, b, c] = aX² + bXY + cY²`.
//!
//! Classes modulo `Γ0(p)` are enumerated through the coset space
//! `Γ0(p)\SL2(Z) ≅ P¹(F_p)`: a `Γ0(p)`-class of forms with `p | a` inside the
//! `SL2(Z)`-class of a reduced form `R` is an orbit of `Stab(R)` on the points
//! `(x:y)` of `P¹(F_p)` with `R(x, y) ≡ 0 (mod p)`. Stabilizer orders are
//! projective (images in `PSL2`).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_integer::{Integer, Roots};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error("form {0} is not positive definite")]
    NotPositiveDefinite(QuadForm),
    #[error("-{d} is not a square modulo {modulus}")]
    InvalidDiscriminant { d: i64, modulus: i64 },
    #[error("beta = {beta} does not satisfy beta^2 = -{d} (mod {modulus})")]
    InvalidBeta { d: i64, beta: i64, modulus: i64 },
    #[error("form {form} is not in Q_(d,{p}): {p} does not divide a")]
    NotLevelForm { form: QuadForm, p: u32 },
    #[error("unsupported level {0}: expected 1 or a prime")]
    UnsupportedLevel(u32),
}

pub type Result<T> = std::result::Result<T, FormError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.a, self.b, self.c)
    }
}

/// Integer 2×2 matrix `(a b; c d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1, b: 0, c: 0, d: 1 };
    pub const S: Mat2 = Mat2 { a: 0, b: -1, c: 1, d: 0 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn translation(k: i64) -> Self {
        Mat2::new(1, k, 0, 1)
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Inverse of a determinant-one matrix.
    pub fn inverse_sl2(&self) -> Mat2 {
        debug_assert_eq!(self.det(), 1);
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    fn apply(&self, (x, y): (i64, i64)) -> (i64, i64) {
        (self.a * x + self.b * y, self.c * x + self.d * y)
    }
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        QuadForm { a, b, c }
    }

    /// `b² - 4ac`.
    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    /// The positive integer `d` with discriminant `-d`.
    pub fn d(&self) -> i64 {
        -self.discriminant()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0 && self.discriminant() < 0
    }

    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    pub fn content(&self) -> i64 {
        self.a.gcd(&self.b).gcd(&self.c)
    }

    /// `Q∘M`, i.e. `(X, Y) ↦ Q(M·(X, Y))`. This is a right action:
    /// `(Q∘M)∘N = Q∘(MN)`.
    pub fn compose(&self, m: &Mat2) -> QuadForm {
        QuadForm {
            a: self.eval(m.a, m.c),
            b: 2 * self.a * m.a * m.b + self.b * (m.a * m.d + m.b * m.c) + 2 * self.c * m.c * m.d,
            c: self.eval(m.b, m.d),
        }
    }

    fn check_definite(&self) -> Result<()> {
        if self.is_positive_definite() {
            Ok(())
        } else {
            Err(FormError::NotPositiveDefinite(*self))
        }
    }

    /// Move `b` into `(-a, a]` by a translation.
    fn normalize_b(&self) -> (QuadForm, Mat2) {
        let k = Integer::div_floor(&(self.a - self.b), &(2 * self.a));
        let t = Mat2::translation(k);
        (self.compose(&t), t)
    }
}

fn check_level(p: u32) -> Result<()> {
    let prime = p >= 2 && (2..p).take_while(|k| k * k <= p).all(|k| !p.is_multiple_of(k));
    if p == 1 || prime {
        Ok(())
    } else {
        Err(FormError::UnsupportedLevel(p))
    }
}

/// All `β (mod 2p)` with `β² ≡ -d (mod 4p)`, in `[0, 2p)`.
pub fn betas(d: i64, p: u32) -> Vec<i64> {
    let p = p as i64;
    (0..2 * p)
        .filter(|b| (b * b + d).rem_euclid(4 * p) == 0)
        .collect()
}

/// Whether `-d` is a square modulo `4p`.
pub fn discriminant_ok(d: i64, p: u32) -> bool {
    !betas(d, p).is_empty()
}

/// Gauss reduction. Returns the reduced form `R` and `M ∈ SL2(Z)` with `Q∘M = R`.
pub fn sl2_reduce_with_transform(q: &QuadForm) -> Result<(QuadForm, Mat2)> {
    q.check_definite()?;
    let mut form = *q;
    let mut m = Mat2::IDENTITY;
    loop {
        if form.b > form.a || form.b <= -form.a {
            let (f, t) = form.normalize_b();
            form = f;
            m = m.mul(&t);
        }
        if form.a > form.c {
            form = form.compose(&Mat2::S);
            m = m.mul(&Mat2::S);
        } else {
            break;
        }
    }
    if form.a == form.c && form.b < 0 {
        form = form.compose(&Mat2::S);
        m = m.mul(&Mat2::S);
    }
    Ok((form, m))
}

pub fn sl2_reduce(q: &QuadForm) -> Result<QuadForm> {
    sl2_reduce_with_transform(q).map(|(r, _)| r)
}

/// Reduced forms of discriminant `-d`, imprimitive ones included.
pub fn enumerate_sl2_classes(d: i64) -> Vec<QuadForm> {
    let mut out = Vec::new();
    if d <= 0 {
        return out;
    }
    let mut a = 1;
    while 3 * a * a <= d {
        for b in (-a + 1)..=a {
            let num = b * b + d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (b < 0 && a == c) {
                continue;
            }
            out.push(QuadForm::new(a, b, c));
        }
        a += 1;
    }
    out
}

/// Integer matrices `M` with `Q∘M = λ·Q` and `det M = λ`: the matrices fixing
/// the CM point of `Q` with determinant `λ`. Both signs are included.
pub fn scaled_automorphs(q: &QuadForm, lambda: i64) -> Vec<Mat2> {
    let g = q.content();
    let (a0, b0, c0) = (q.a / g, q.b / g, q.c / g);
    let d0 = b0 * b0 - 4 * a0 * c0;
    let d0 = -d0;
    let mut out = Vec::new();
    let mut u = 0i64;
    while d0 * u * u <= 4 * lambda {
        let rest = 4 * lambda - d0 * u * u;
        let t = rest.sqrt();
        if t * t == rest {
            let us: &[i64] = if u == 0 { &[0] } else { &[u, -u] };
            let ts: &[i64] = if t == 0 { &[0] } else { &[t, -t] };
            for &uu in us {
                for &tt in ts {
                    if (tt - b0 * uu).rem_euclid(2) == 0 {
                        out.push(Mat2::new((tt - b0 * uu) / 2, -c0 * uu, a0 * uu, (tt + b0 * uu) / 2));
                    }
                }
            }
        }
        u += 1;
    }
    out
}

/// `SL2(Z)` automorphs of `Q` (including `±I`).
pub fn automorphs(q: &QuadForm) -> Vec<Mat2> {
    scaled_automorphs(q, 1)
}

/// Points of `P¹(F_p)`: `0..p` stand for `(x:1)`, `p` for `(1:0)`.
fn p1_normalize((x, y): (i64, i64), p: i64) -> i64 {
    let y = y.rem_euclid(p);
    if y == 0 {
        return p;
    }
    let inv = mod_inverse(y, p);
    (x * inv).rem_euclid(p)
}

fn p1_vector(pt: i64, p: i64) -> (i64, i64) {
    if pt == p {
        (1, 0)
    } else {
        (pt, 1)
    }
}

/// A matrix in `SL2(Z)` whose first column lies over the given point.
fn p1_coset_rep(pt: i64, p: i64) -> Mat2 {
    if pt == p {
        Mat2::IDENTITY
    } else {
        Mat2::new(pt, -1, 1, 0)
    }
}

fn mod_inverse(x: i64, p: i64) -> i64 {
    let e = x.extended_gcd(&p);
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Group {
    Sl2,
    Gamma0(u32),
    Gamma0Star(u32),
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Sl2 => write!(f, "SL2(Z)"),
            Group::Gamma0(p) => write!(f, "Gamma0({p})"),
            Group::Gamma0Star(p) => write!(f, "Gamma0*({p})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FormClass {
    pub representative: QuadForm,
    pub group: Group,
    pub stabilizer_order: u32,
    /// `b mod 2p`; present for `Γ0(p)` classes only.
    pub beta: Option<i64>,
}

/// Canonical label of a `Γ0(p)`-class: the reduced form of its `SL2(Z)`-class
/// and the smallest point of its `Stab(R)`-orbit in `P¹(F_p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassLabel {
    pub reduced: QuadForm,
    pub point: i64,
}

fn orbit_min(auts: &[Mat2], v: (i64, i64), p: i64) -> i64 {
    auts.iter()
        .map(|s| p1_normalize(s.apply(v), p))
        .min()
        .expect("automorphs contain the identity")
}

/// Label of the `Γ0(p)`-class of `q` (which must have `p | a`).
pub fn class_label(q: &QuadForm, p: u32) -> Result<ClassLabel> {
    check_level(p)?;
    if q.a % p as i64 != 0 {
        return Err(FormError::NotLevelForm { form: *q, p });
    }
    let (reduced, m) = sl2_reduce_with_transform(q)?;
    // q = reduced∘m⁻¹, and m⁻¹ has first column (m.d, -m.c)
    let auts = automorphs(&reduced);
    let point = orbit_min(&auts, (m.d, -m.c), p as i64);
    Ok(ClassLabel { reduced, point })
}

/// The Fricke involution `[a, b, c] ↦ [pc, -b, a/p]`.
pub fn fricke_action(q: &QuadForm, p: u32) -> Result<QuadForm> {
    let pp = p as i64;
    if q.a % pp != 0 {
        return Err(FormError::NotLevelForm { form: *q, p });
    }
    Ok(QuadForm::new(pp * q.c, -q.b, q.a / pp))
}

/// Smallest `a` reachable inside the `Γ0(p)`-orbit of `q`, with `b` moved into
/// `(-a, a]`. The new leading coefficient is `min q(x, y)` over coprime
/// `(x, y)` with `p | y`.
pub fn min_rep_gamma0(q: &QuadForm, p: u32) -> Result<QuadForm> {
    q.check_definite()?;
    let pp = p as i64;
    let d = q.d();
    let mut best = q.a;
    let mut arg = (1i64, 0i64);
    let mut y = pp;
    while d * y * y < 4 * q.a * best {
        let center = -(q.b as f64) * y as f64 / (2.0 * q.a as f64);
        let slack = ((best as f64 - d as f64 * (y * y) as f64 / (4.0 * q.a as f64)) / q.a as f64)
            .max(0.0)
            .sqrt();
        let lo = (center - slack).floor() as i64 - 1;
        let hi = (center + slack).ceil() as i64 + 1;
        for x in lo..=hi {
            if x.gcd(&y) != 1 {
                continue;
            }
            let v = q.eval(x, y);
            if v < best {
                best = v;
                arg = (x, y);
            }
        }
        y += pp;
    }
    let (x, y) = arg;
    let e = x.extended_gcd(&y);
    // x·w - z·y = 1 with w = e.x, z = -e.y
    let g = Mat2::new(x, -e.y, y, e.x);
    debug_assert_eq!(g.det(), 1);
    let moved = q.compose(&g);
    Ok(moved.normalize_b().0)
}

/// Smallest-`a` representative of the `Γ0*(p)`-orbit of `q`.
pub fn min_rep_star(q: &QuadForm, p: u32) -> Result<QuadForm> {
    let r = min_rep_gamma0(q, p)?;
    if p == 1 {
        return Ok(r);
    }
    let w = min_rep_gamma0(&fricke_action(&r, p)?, p)?;
    Ok(if (w.a, w.b.abs(), -w.b) < (r.a, r.b.abs(), -r.b) { w } else { r })
}

/// Projective stabilizer order of `q` in the given group.
pub fn stabilizer_order(q: &QuadForm, group: Group) -> Result<u32> {
    q.check_definite()?;
    let count = match group {
        Group::Sl2 => automorphs(q).len(),
        Group::Gamma0(p) => {
            check_level(p)?;
            let pp = p as i64;
            automorphs(q).iter().filter(|m| m.c % pp == 0).count()
        }
        Group::Gamma0Star(p) => {
            check_level(p)?;
            let pp = p as i64;
            let own = automorphs(q).iter().filter(|m| m.c % pp == 0).count();
            if p == 1 {
                own
            } else {
                let fricke = scaled_automorphs(q, pp)
                    .iter()
                    .filter(|m| m.a % pp == 0 && m.c % pp == 0 && m.d % pp == 0)
                    .count();
                own + fricke
            }
        }
    };
    Ok((count / 2) as u32)
}

/// One entry per `Γ0(p)`-class of `Q_(d,p)`, across every `β`-sector.
pub fn gamma0_classes_all(d: i64, p: u32) -> Result<Vec<FormClass>> {
    check_level(p)?;
    if d <= 0 || !discriminant_ok(d, p) {
        return Err(FormError::InvalidDiscriminant { d, modulus: 4 * p as i64 });
    }
    let pp = p as i64;
    let mut out = Vec::new();
    for reduced in enumerate_sl2_classes(d) {
        let auts = automorphs(&reduced);
        let mut seen = vec![false; (pp + 1) as usize];
        for pt in 0..=pp {
            let v = p1_vector(pt, pp);
            if seen[pt as usize] || reduced.eval(v.0, v.1) % pp != 0 {
                continue;
            }
            let mut fixing = 0usize;
            for s in &auts {
                let img = p1_normalize(s.apply(v), pp);
                seen[img as usize] = true;
                if img == pt {
                    fixing += 1;
                }
            }
            let form = reduced.compose(&p1_coset_rep(pt, pp));
            let representative = min_rep_gamma0(&form, p)?;
            out.push(FormClass {
                representative,
                group: Group::Gamma0(p),
                stabilizer_order: (fixing / 2) as u32,
                beta: Some(representative.b.rem_euclid(2 * pp)),
            });
        }
    }
    Ok(out)
}

/// Representatives of `Q_(d,p,β) / Γ0(p)`.
pub fn gamma0_classes(d: i64, p: u32, beta: i64) -> Result<Vec<FormClass>> {
    let valid = betas(d, p);
    let beta = beta.rem_euclid(2 * p as i64);
    if !valid.contains(&beta) {
        if valid.is_empty() {
            return Err(FormError::InvalidDiscriminant { d, modulus: 4 * p as i64 });
        }
        return Err(FormError::InvalidBeta { d, beta, modulus: 4 * p as i64 });
    }
    Ok(gamma0_classes_all(d, p)?
        .into_iter()
        .filter(|c| c.beta == Some(beta))
        .collect())
}

/// Representatives of `Q_d / SL2(Z)`.
pub fn sl2_classes(d: i64) -> Vec<FormClass> {
    enumerate_sl2_classes(d)
        .into_iter()
        .map(|r| FormClass {
            representative: r,
            group: Group::Sl2,
            stabilizer_order: (automorphs(&r).len() / 2) as u32,
            beta: None,
        })
        .collect()
}

/// Representatives of `Q_(d,p) / Γ0*(p)`: the `Γ0(p)`-classes of all sectors
/// glued along the Fricke involution. A class fixed by Fricke has its
/// stabilizer doubled; a fused pair keeps the common stabilizer.
pub fn gamma0star_classes(d: i64, p: u32) -> Result<Vec<FormClass>> {
    let classes = gamma0_classes_all(d, p)?;
    if p == 1 {
        return Ok(classes
            .into_iter()
            .map(|c| FormClass {
                group: Group::Sl2,
                beta: None,
                ..c
            })
            .collect());
    }
    let labels: Vec<ClassLabel> = classes
        .iter()
        .map(|c| class_label(&c.representative, p))
        .collect::<Result<_>>()?;
    let index: HashMap<ClassLabel, usize> =
        labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let mut taken = vec![false; classes.len()];
    let mut out = Vec::new();
    for (i, class) in classes.iter().enumerate() {
        if taken[i] {
            continue;
        }
        let partner_label = class_label(&fricke_action(&class.representative, p)?, p)?;
        let j = *index
            .get(&partner_label)
            .expect("Fricke maps Q_(d,p) to itself");
        taken[i] = true;
        taken[j] = true;
        let stabilizer_order = if i == j {
            2 * class.stabilizer_order
        } else {
            debug_assert_eq!(class.stabilizer_order, classes[j].stabilizer_order);
            class.stabilizer_order
        };
        out.push(FormClass {
            representative: min_rep_star(&class.representative, p)?,
            group: Group::Gamma0Star(p),
            stabilizer_order,
            beta: None,
        });
    }
    Ok(out)
}

/// Label of the `Γ0*(p)`-class of `q`: the smaller of the labels of `q` and
/// its Fricke image.
pub fn star_label(q: &QuadForm, p: u32) -> Result<ClassLabel> {
    let own = class_label(q, p)?;
    if p == 1 {
        return Ok(own);
    }
    let other = class_label(&fricke_action(q, p)?, p)?;
    Ok(own.min(other))
}

/// Forms `[p, b, (b² + d)/4p]` with `b ∈ (-p, p]` and `b² ≡ -d (mod 4p)`;
/// for `p = 3` these are exactly the principal forms of discriminant `-d`.
pub fn principal_forms(d: i64, p: u32) -> Result<Vec<QuadForm>> {
    check_level(p)?;
    let pp = p as i64;
    let mut out: Vec<QuadForm> = ((-pp + 1)..=pp)
        .filter(|b| (b * b + d).rem_euclid(4 * pp) == 0)
        .map(|b| QuadForm::new(pp, b, (b * b + d) / (4 * pp)))
        .collect();
    if out.is_empty() || d <= 0 {
        return Err(FormError::InvalidDiscriminant { d, modulus: 4 * pp });
    }
    out.sort_by_key(|f| (f.b.abs(), -f.b));
    Ok(out)
}

/// Solutions of `q(x, y) = n` with `y ≥ 0` and `step | y`.
fn solutions(q: &QuadForm, n: i64, step: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    if n <= 0 || !q.is_positive_definite() {
        return out;
    }
    let d = q.d();
    let mut y = 0i64;
    while d * y * y <= 4 * q.a * n {
        // q(x, y) = n  ⇔  (2ax + by)² = 4an - d y²
        let rest = 4 * q.a * n - d * y * y;
        let s = rest.sqrt();
        if s * s == rest {
            for root in [s, -s] {
                let num = root - q.b * y;
                if num.rem_euclid(2 * q.a) == 0 {
                    out.push((num / (2 * q.a), y));
                }
            }
        }
        y += step;
    }
    out
}

/// Whether `q(x, y) = n` has an integer solution.
pub fn represents(q: &QuadForm, n: i64) -> bool {
    if n == 0 {
        return true;
    }
    !solutions(q, n, 1).is_empty()
}

/// Whether `q(x, y) = n` for some coprime `(x, y)` with `p | y`, i.e. whether
/// `n` is the leading coefficient of some `q ∘ γ` with `γ ∈ Γ0(p)`.
pub fn represents_at_level(q: &QuadForm, n: i64, p: u32) -> bool {
    solutions(q, n, p as i64)
        .into_iter()
        .any(|(x, y)| num_integer::gcd(x, y) == 1)
}

/// Whether `q` is `Γ0*(p)`-equivalent to a principal form of its discriminant,
/// decided by representation: `q` or its Fricke image takes the value `p` on
/// the first column of a `Γ0(p)` matrix.
///
/// Plain representation of `p` is not enough. It is not Fricke-invariant
/// (`[6, -3, 1]` misses 3, its image `[3, 3, 2]` does not), and a solution
/// with `p ∤ y` only gives `SL2(Z)`-equivalence (`[6, 5, 2]` at `(1, -1)`).
pub fn is_equiv_principal(q: &QuadForm, p: u32) -> bool {
    let n = p as i64;
    represents_at_level(q, n, p) || fricke_action(q, p).is_ok_and(|w| represents_at_level(&w, n, p))
}

/// Whether the `Γ0*(p)`-orbit of `q` contains a form `[p, B, C]`.
pub fn orbit_has_leading_p(q: &QuadForm, p: u32) -> Result<bool> {
    Ok(min_rep_star(q, p)?.a == p as i64)
}

/// Whether `q` is `Γ0*(p)`-equivalent to one of the principal forms.
pub fn star_equivalent_to_principal(q: &QuadForm, p: u32) -> Result<bool> {
    let target = star_label(q, p)?;
    for f in principal_forms(q.d(), p)? {
        if star_label(&f, p)? == target {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The CM point `α_Q = (-b + i√d) / (2a)`, kept symbolically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CmPoint {
    pub neg_b: i64,
    pub d: i64,
    pub two_a: i64,
}

impl CmPoint {
    pub fn real_part(&self) -> f64 {
        self.neg_b as f64 / self.two_a as f64
    }

    pub fn imag_part(&self) -> f64 {
        (self.d as f64).sqrt() / self.two_a as f64
    }
}

impl fmt::Display for CmPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + i*sqrt({}))/{}", self.neg_b, self.d, self.two_a)
    }
}

pub fn cm_point(q: &QuadForm) -> Result<CmPoint> {
    q.check_definite()?;
    Ok(CmPoint {
        neg_b: -q.b,
        d: q.d(),
        two_a: 2 * q.a,
    })
}

/// Brute-force orbit partition of the forms in `Q_(d,p,β)` with
/// `a, |b|, c ≤ bound`, merged under `T^{±1}` and every `(α β; γ δ) ∈ Γ0(p)`
/// with `γ ∈ {±p, ±2p}` and entries bounded by `3p`. Independent of the coset
/// machinery above; used as a test oracle.
pub fn brute_force_classes(d: i64, p: u32, beta: i64, bound: i64) -> Vec<Vec<QuadForm>> {
    let pp = p as i64;
    let beta = beta.rem_euclid(2 * pp);
    let mut forms = Vec::new();
    let mut a = pp;
    while a <= bound {
        for b in -bound..=bound {
            if (b - beta).rem_euclid(2 * pp) != 0 {
                continue;
            }
            let num = b * b + d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c <= bound {
                forms.push(QuadForm::new(a, b, c));
            }
        }
        a += pp;
    }
    let index: HashMap<QuadForm, usize> = forms.iter().enumerate().map(|(i, f)| (*f, i)).collect();
    let gens = gamma0_generators(p);
    let mut parent: Vec<usize> = (0..forms.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, f) in forms.iter().enumerate() {
        for g in &gens {
            if let Some(&j) = index.get(&f.compose(g)) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<QuadForm>> = BTreeMap::new();
    for (i, f) in forms.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(*f);
    }
    let mut out: Vec<Vec<QuadForm>> = groups.into_values().collect();
    for g in &mut out {
        g.sort();
    }
    out.sort();
    out
}

fn gamma0_generators(p: u32) -> Vec<Mat2> {
    let pp = p as i64;
    let mut gens = vec![Mat2::translation(1), Mat2::translation(-1)];
    let e = 3 * pp;
    for c in [pp, -pp, 2 * pp, -2 * pp] {
        for a in -e..=e {
            for d in -e..=e {
                // a d - b c = 1
                let num = a * d - 1;
                if num % c == 0 {
                    let b = num / c;
                    if b.abs() <= e {
                        gens.push(Mat2::new(a, b, c, d));
                    }
                }
            }
        }
    }
    gens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(a: i64, b: i64, c: i64) -> QuadForm {
        QuadForm::new(a, b, c)
    }

    #[test]
    fn beta_residues() {
        assert_eq!(betas(7, 2), vec![1, 3]);
        assert!(!discriminant_ok(5, 3));
        for p in [2, 3, 5] {
            assert_eq!(betas(0, p), vec![0]);
        }
        // squares mod 12 are {0, 1, 4, 9}; -5 = 7
        let squares: Vec<i64> = (0..12).map(|x: i64| x * x % 12).collect();
        assert!(!squares.contains(&7));
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(sl2_reduce(&f(1, 1, 1)).unwrap(), f(1, 1, 1));
        assert_eq!(sl2_reduce(&f(3, 3, 1)).unwrap(), f(1, 1, 1));
        assert_eq!(sl2_reduce(&f(2, 2, 1)).unwrap(), f(1, 0, 1));
        assert!(matches!(
            sl2_reduce(&f(1, 3, 1)),
            Err(FormError::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn reduction_transform_is_consistent() {
        for q in [f(3, 3, 1), f(2, 2, 1), f(17, 31, 15), f(6, -5, 3), f(100, 97, 24)] {
            let (r, m) = sl2_reduce_with_transform(&q).unwrap();
            assert_eq!(m.det(), 1);
            assert_eq!(q.compose(&m), r);
        }
    }

    #[test]
    fn sl2_class_lists() {
        assert_eq!(enumerate_sl2_classes(3), vec![f(1, 1, 1)]);
        assert_eq!(enumerate_sl2_classes(4), vec![f(1, 0, 1)]);
        let mut c23 = enumerate_sl2_classes(23);
        c23.sort();
        assert_eq!(c23, vec![f(1, 1, 6), f(2, -1, 3), f(2, 1, 3)]);
        // imprimitive 2[1,1,1] appears at d = 12
        assert!(enumerate_sl2_classes(12).contains(&f(2, 2, 2)));
    }

    #[test]
    fn automorph_counts() {
        assert_eq!(automorphs(&f(1, 1, 1)).len(), 6);
        assert_eq!(automorphs(&f(1, 0, 1)).len(), 4);
        assert_eq!(automorphs(&f(2, 2, 2)).len(), 6);
        assert_eq!(automorphs(&f(1, 1, 6)).len(), 2);
        for q in [f(1, 1, 1), f(1, 0, 1), f(3, 3, 3)] {
            for m in automorphs(&q) {
                assert_eq!(m.det(), 1);
                assert_eq!(q.compose(&m), q);
            }
        }
    }

    #[test]
    fn gamma0_examples() {
        let c = gamma0_classes(3, 3, 3).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].representative, f(3, 3, 1));
        assert_eq!(c[0].stabilizer_order, 3);

        let c = gamma0_classes(8, 2, 0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].representative, f(2, 0, 1));
        assert_eq!(c[0].stabilizer_order, 1);

        let c = gamma0_classes(4, 2, 2).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].representative, f(2, 2, 1));

        assert!(matches!(gamma0_classes(5, 3, 1), Err(FormError::InvalidDiscriminant { .. })));
        assert!(matches!(gamma0_classes(7, 2, 0), Err(FormError::InvalidBeta { .. })));
    }

    #[test]
    fn fricke_examples() {
        assert_eq!(fricke_action(&f(2, 0, 1), 2).unwrap(), f(2, 0, 1));
        assert_eq!(fricke_action(&f(3, 1, 1), 3).unwrap(), f(3, -1, 1));
        for q in [f(6, 5, 3), f(10, 7, 2), f(4, 3, 5)] {
            let p = if q.a % 5 == 0 { 5 } else if q.a % 3 == 0 { 3 } else { 2 };
            assert_eq!(fricke_action(&q, p).unwrap().discriminant(), q.discriminant());
        }
        assert!(fricke_action(&f(1, 1, 1), 3).is_err());
    }

    #[test]
    fn star_examples() {
        let c = gamma0star_classes(8, 2).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].representative, f(2, 0, 1));
        assert_eq!(c[0].stabilizer_order, 2);

        let c = gamma0star_classes(7, 2).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].stabilizer_order, 1);

        let c = gamma0star_classes(3, 3).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].representative, f(3, 3, 1));
        assert_eq!(c[0].stabilizer_order, 6);
    }

    #[test]
    fn stabilizer_examples() {
        assert_eq!(stabilizer_order(&f(2, 1, 3), Group::Gamma0(2)).unwrap(), 1);
        assert_eq!(stabilizer_order(&f(2, 0, 1), Group::Gamma0Star(2)).unwrap(), 2);
        assert_eq!(stabilizer_order(&f(2, 0, 1), Group::Gamma0(2)).unwrap(), 1);
        assert_eq!(stabilizer_order(&f(3, 3, 1), Group::Gamma0(3)).unwrap(), 3);
        assert_eq!(stabilizer_order(&f(3, 3, 1), Group::Gamma0Star(3)).unwrap(), 6);
        assert_eq!(stabilizer_order(&f(1, 1, 1), Group::Sl2).unwrap(), 3);
    }

    /// Exhaustive search over bounded integer matrices, independent of the
    /// automorph parametrization.
    fn brute_stabilizer(q: &QuadForm, p: i64, star: bool, bound: i64) -> usize {
        let mut count = 0;
        for a in -bound..=bound {
            for b in -bound..=bound {
                for c in -bound..=bound {
                    for d in -bound..=bound {
                        let m = Mat2::new(a, b, c, d);
                        let det = m.det();
                        if det == 1 && c % p == 0 && q.compose(&m) == *q {
                            count += 1;
                        }
                        if star
                            && det == p
                            && a % p == 0
                            && c % p == 0
                            && d % p == 0
                            && q.compose(&m) == QuadForm::new(p * q.a, p * q.b, p * q.c)
                        {
                            count += 1;
                        }
                    }
                }
            }
        }
        count / 2
    }

    #[test]
    fn stabilizers_match_bounded_search() {
        for (q, p) in [
            (f(3, 3, 1), 3),
            (f(2, 0, 1), 2),
            (f(2, 2, 1), 2),
            (f(5, 4, 1), 5),
            (f(6, 6, 2), 3),
            (f(4, 4, 2), 2),
            (f(3, 1, 1), 3),
            (f(10, 10, 3), 5),
        ] {
            let bound = 2 * (q.a.max(q.b.abs()).max(q.c) + 2);
            for star in [false, true] {
                let group = if star { Group::Gamma0Star(p as u32) } else { Group::Gamma0(p as u32) };
                assert_eq!(
                    stabilizer_order(&q, group).unwrap() as usize,
                    brute_stabilizer(&q, p, star, bound),
                    "{q} in {group}"
                );
            }
        }
    }

    #[test]
    fn class_stabilizers_agree_with_direct_count() {
        for p in [2u32, 3, 5] {
            for d in 1..=120 {
                if !discriminant_ok(d, p) {
                    continue;
                }
                for c in gamma0_classes_all(d, p).unwrap() {
                    assert_eq!(
                        c.stabilizer_order,
                        stabilizer_order(&c.representative, Group::Gamma0(p)).unwrap(),
                        "d={d} p={p} {}",
                        c.representative
                    );
                }
                for c in gamma0star_classes(d, p).unwrap() {
                    assert_eq!(
                        c.stabilizer_order,
                        stabilizer_order(&c.representative, Group::Gamma0Star(p)).unwrap(),
                        "d={d} p={p} {}",
                        c.representative
                    );
                }
            }
        }
    }

    #[test]
    fn principal_form_table() {
        assert_eq!(principal_forms(12, 3).unwrap(), vec![f(3, 0, 1)]);
        assert_eq!(principal_forms(11, 3).unwrap(), vec![f(3, 1, 1), f(3, -1, 1)]);
        assert_eq!(principal_forms(8, 3).unwrap(), vec![f(3, 2, 1), f(3, -2, 1)]);
        assert_eq!(principal_forms(3, 3).unwrap(), vec![f(3, 3, 1)]);
        assert!(principal_forms(5, 3).is_err());
    }

    #[test]
    fn representation_examples() {
        assert!(is_equiv_principal(&f(3, 3, 1), 3));
        assert!(is_equiv_principal(&f(3, 1, 1), 3));
        // [6,6,3]·: d = 36, minimum 3 at (0,1)
        assert!(represents(&f(6, 6, 3), 3));
        // [6, 3, 6] has minimum 6 > 3
        assert!(!is_equiv_principal(&f(6, 3, 6), 3));
        // 3 is only represented after the Fricke involution: [6,-3,1] -> [3,3,2]
        assert!(!represents(&f(6, -3, 1), 3));
        assert!(is_equiv_principal(&f(6, -3, 1), 3));
        // [6,5,2](1,-1) = 3, but (1,-1) is not the first column of a Γ0(3) matrix
        assert!(represents(&f(6, 5, 2), 3));
        assert!(!represents_at_level(&f(6, 5, 2), 3, 3));
        assert!(!is_equiv_principal(&f(6, 5, 2), 3));
        assert!(!represents(&f(2, 1, 3), 1));
        assert!(represents(&f(2, 1, 3), 4));
    }

    #[test]
    fn cm_point_examples() {
        let c = cm_point(&f(3, 3, 1)).unwrap();
        assert_eq!(c, CmPoint { neg_b: -3, d: 3, two_a: 6 });
        let c = cm_point(&f(2, 0, 1)).unwrap();
        assert!((c.imag_part() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let c = cm_point(&f(1, 0, 1)).unwrap();
        assert_eq!((c.real_part(), c.imag_part()), (0.0, 1.0));
    }

    #[test]
    fn min_rep_stays_in_class() {
        for p in [2u32, 3, 5] {
            for d in 1..=80 {
                if !discriminant_ok(d, p) {
                    continue;
                }
                for c in gamma0_classes_all(d, p).unwrap() {
                    let far = c.representative.compose(&Mat2::new(1, 0, p as i64, 1)).compose(&Mat2::translation(3));
                    let back = min_rep_gamma0(&far, p).unwrap();
                    assert_eq!(class_label(&back, p).unwrap(), class_label(&c.representative, p).unwrap());
                    assert!(back.a <= c.representative.a);
                }
            }
        }
    }
}
