//! Scalar abstraction: `Real` covers `f32`, `f64` and the double-double `Dd`.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, Signed, ToPrimitive, Zero};
use twofloat::TwoFloat;

use crate::error::{NzError, Result};

/// Floating scalar used by every numeric routine.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + num_traits::NumAssign
    + fmt::Debug
    + fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Decimal digits this type can carry reliably.
    const DIGITS: u32;

    fn from_ratio(r: &BigRational) -> Self;
    fn to_ratio(self) -> Option<BigRational>;
    fn tables() -> &'static Tables<Self>;

    fn from_f(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }
    fn from_int(n: i64) -> Self {
        Self::from_i64(n).unwrap()
    }
    fn from_big(n: &BigInt) -> Self {
        Self::from_ratio(&BigRational::from_integer(n.clone()))
    }
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Series coefficients derived from Bernoulli numbers, cached per scalar type.
#[derive(Debug)]
pub struct Tables<T> {
    /// B_{2k}/(2k+1)! for k = 1.. (Li₂ in w = −log(1−z)).
    pub li2: Vec<T>,
    /// |B_{2k}|/(2k·(2k+1)!) for k = 1.. (Clausen function).
    pub clausen: Vec<T>,
}

const TABLE_LEN: usize = 44;

/// Even Bernoulli numbers B_0, B_2, ..., B_{2(n-1)} (Akiyama–Tanigawa).
pub fn bernoulli_even(n: usize) -> Vec<BigRational> {
    let m = 2 * n;
    let mut a: Vec<BigRational> = Vec::with_capacity(m + 1);
    let mut out = Vec::with_capacity(n);
    for k in 0..=m {
        a.push(BigRational::new(BigInt::one(), BigInt::from(k + 1)));
        for j in (1..=k).rev() {
            let d = &a[j - 1] - &a[j];
            a[j - 1] = d * BigRational::from_integer(BigInt::from(j));
        }
        if k % 2 == 0 && k / 2 < n {
            out.push(a[0].clone());
        }
    }
    out
}

impl<T: Real> Tables<T> {
    fn build() -> Self {
        let b = bernoulli_even(TABLE_LEN + 1);
        let mut li2 = Vec::with_capacity(TABLE_LEN);
        let mut clausen = Vec::with_capacity(TABLE_LEN);
        let mut fact = BigInt::one(); // (2k+1)!
        for k in 1..=TABLE_LEN {
            fact *= BigInt::from((2 * k) * (2 * k + 1));
            let f = BigRational::from_integer(fact.clone());
            li2.push(T::from_ratio(&(&b[k] / &f)));
            let c = b[k].abs() / (f * BigRational::from_integer(BigInt::from(2 * k)));
            clausen.push(T::from_ratio(&c));
        }
        Tables { li2, clausen }
    }
}

impl Real for f64 {
    const DIGITS: u32 = 15;
    fn from_ratio(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn to_ratio(self) -> Option<BigRational> {
        BigRational::from_float(self)
    }
    fn tables() -> &'static Tables<Self> {
        static T: OnceLock<Tables<f64>> = OnceLock::new();
        T.get_or_init(Tables::build)
    }
}

impl Real for f32 {
    const DIGITS: u32 = 6;
    fn from_ratio(r: &BigRational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }
    fn to_ratio(self) -> Option<BigRational> {
        BigRational::from_float(self)
    }
    fn tables() -> &'static Tables<Self> {
        static T: OnceLock<Tables<f32>> = OnceLock::new();
        T.get_or_init(Tables::build)
    }
}

// ---------------------------------------------------------------------------
// Double-double

/// Double-double scalar (~31 significant digits).
///
/// Arithmetic is twofloat's error-free arithmetic; the transcendental kernels
/// are our own because the upstream ones stop near 1e-17.
#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct Dd(pub TwoFloat);

fn tf(hi: f64, lo: f64) -> TwoFloat {
    TwoFloat::new_add(hi, lo)
}

fn ln2_tf() -> TwoFloat {
    tf(std::f64::consts::LN_2, 2.3190468138462996e-17)
}
fn ln10_tf() -> TwoFloat {
    tf(std::f64::consts::LN_10, -2.1707562233822494e-16)
}
fn pio2_tf() -> TwoFloat {
    tf(std::f64::consts::FRAC_PI_2, 6.123233995736766e-17)
}

const DD_EPS: f64 = 4.93038065763132e-32; // 2^-104

impl Dd {
    pub fn new(hi: f64, lo: f64) -> Self {
        Dd(tf(hi, lo))
    }
    pub fn hi(self) -> f64 {
        self.0.hi()
    }
    pub fn lo(self) -> f64 {
        self.0.lo()
    }
}

fn scale2(x: TwoFloat, k: i32) -> TwoFloat {
    // exact power-of-two scaling, split to avoid intermediate overflow
    let h = k / 2;
    let a = 2f64.powi(h);
    let b = 2f64.powi(k - h);
    tf(x.hi() * a * b, x.lo() * a * b)
}

/// expm1 for |r| ≲ ln2/2 by argument halving and Taylor.
fn expm1_small(r: TwoFloat) -> TwoFloat {
    const HALVINGS: i32 = 9;
    let s = r * (1.0 / 512.0);
    let mut t = TwoFloat::from_f64(1.0);
    for n in (2..=11).rev() {
        t = t * s / (n as f64) + 1.0;
    }
    let mut e = s * t;
    for _ in 0..HALVINGS {
        e = e * (e + 2.0);
    }
    e
}

fn dd_exp(x: TwoFloat) -> TwoFloat {
    let h = x.hi();
    if h.is_nan() {
        return TwoFloat::NAN;
    }
    if h > 709.7 {
        return TwoFloat::INFINITY;
    }
    if h < -745.0 {
        return TwoFloat::from_f64(0.0);
    }
    let k = (h / std::f64::consts::LN_2).round();
    let r = x - ln2_tf() * k;
    let e = expm1_small(r) + 1.0;
    scale2(e, k as i32)
}

fn dd_expm1(x: TwoFloat) -> TwoFloat {
    if x.hi().abs() < 0.34 {
        expm1_small(x)
    } else {
        dd_exp(x) - 1.0
    }
}

fn dd_ln(x: TwoFloat) -> TwoFloat {
    let h = x.hi();
    if h.is_nan() || h < 0.0 {
        return TwoFloat::NAN;
    }
    if h == 0.0 {
        return TwoFloat::NEG_INFINITY;
    }
    if h.is_infinite() {
        return TwoFloat::INFINITY;
    }
    let y = TwoFloat::from_f64(h.ln());
    y + x * dd_exp(-y) - 1.0
}

fn dd_ln1p(x: TwoFloat) -> TwoFloat {
    let h = x.hi();
    if h.abs() > 0.25 {
        return dd_ln(x + 1.0);
    }
    let y = TwoFloat::from_f64(h.ln_1p());
    let e = dd_expm1(y);
    y - dd_div(e - x, e + 1.0)
}

fn sin_taylor(r: TwoFloat) -> TwoFloat {
    let r2 = r * r;
    let mut term = r;
    let mut sum = r;
    let mut n = 1.0;
    loop {
        term = -term * r2 / ((n + 1.0) * (n + 2.0));
        n += 2.0;
        sum += term;
        if term.hi().abs() < 1e-34 {
            return sum;
        }
    }
}

fn cos_taylor(r: TwoFloat) -> TwoFloat {
    let r2 = r * r;
    let mut term = TwoFloat::from_f64(1.0);
    let mut sum = term;
    let mut n = 0.0;
    loop {
        term = -term * r2 / ((n + 1.0) * (n + 2.0));
        n += 2.0;
        sum += term;
        if term.hi().abs() < 1e-34 {
            return sum;
        }
    }
}

fn dd_sin_cos(x: TwoFloat) -> (TwoFloat, TwoFloat) {
    let h = x.hi();
    if !h.is_finite() {
        return (TwoFloat::NAN, TwoFloat::NAN);
    }
    let k = (h / std::f64::consts::FRAC_PI_2).round();
    let r = x - pio2_tf() * k;
    let (s, c) = (sin_taylor(r), cos_taylor(r));
    match (k as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

fn dd_atan2(y: TwoFloat, x: TwoFloat) -> TwoFloat {
    let (yh, xh) = (y.hi(), x.hi());
    if yh == 0.0 && xh >= 0.0 || !yh.is_finite() || !xh.is_finite() {
        return TwoFloat::from_f64(yh.atan2(xh));
    }
    let t = TwoFloat::from_f64(yh.atan2(xh));
    let (s, c) = dd_sin_cos(t);
    t + dd_div(y * c - x * s, x * c + y * s)
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e}, {:e})", self.hi(), self.lo())
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(30);
        f.write_str(&format_fixed(*self, p))
    }
}

impl FromStr for Dd {
    type Err = NzError;
    fn from_str(s: &str) -> Result<Self> {
        parse_decimal(s)
            .map(|r| Dd::from_ratio(&r))
            .ok_or_else(|| NzError::Parse(format!("not a decimal number: {s:?}")))
    }
}

macro_rules! dd_binop {
    ($tr:ident, $f:ident, $atr:ident, $af:ident) => {
        impl $tr for Dd {
            type Output = Dd;
            #[inline]
            fn $f(self, o: Dd) -> Dd {
                Dd($tr::$f(self.0, o.0))
            }
        }
        impl $atr for Dd {
            #[inline]
            fn $af(&mut self, o: Dd) {
                self.0 = $tr::$f(self.0, o.0);
            }
        }
    };
}
dd_binop!(Add, add, AddAssign, add_assign);
dd_binop!(Sub, sub, SubAssign, sub_assign);
dd_binop!(Mul, mul, MulAssign, mul_assign);

// twofloat's TwoFloat / TwoFloat forms 1 − hi·(1/hi) without an fma and loses
// about half the digits; plain long division keeps full double-double accuracy.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let bh = b.hi();
    let q1 = a.hi() / bh;
    if !q1.is_finite() || q1 == 0.0 {
        return TwoFloat::from_f64(q1);
    }
    let r = a - b * q1;
    let q2 = r.hi() / bh;
    let r = r - b * q2;
    let q3 = r.hi() / bh;
    TwoFloat::new_add(q1, q2) + q3
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, o: Dd) -> Dd {
        Dd(dd_div(self.0, o.0))
    }
}
impl DivAssign for Dd {
    #[inline]
    fn div_assign(&mut self, o: Dd) {
        self.0 = dd_div(self.0, o.0);
    }
}
impl Rem for Dd {
    type Output = Dd;
    fn rem(self, o: Dd) -> Dd {
        self - (self / o).trunc() * o
    }
}
impl RemAssign for Dd {
    fn rem_assign(&mut self, o: Dd) {
        *self = *self % o;
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}

impl std::iter::Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(it: I) -> Dd {
        it.fold(Dd::zero(), |a, b| a + b)
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd(TwoFloat::from_f64(0.0))
    }
    fn is_zero(&self) -> bool {
        self.0.hi() == 0.0
    }
}
impl One for Dd {
    fn one() -> Self {
        Dd(TwoFloat::from_f64(1.0))
    }
}
impl Num for Dd {
    type FromStrRadixErr = NzError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self> {
        if radix != 10 {
            return Err(NzError::Parse(format!("radix {radix} unsupported")));
        }
        s.parse()
    }
}
impl ToPrimitive for Dd {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.hi() + self.lo())
    }
}
impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Some(Dd::new(hi, lo))
    }
    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Some(Dd::new(hi, lo))
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(Dd(TwoFloat::from_f64(x)))
    }
}
impl NumCast for Dd {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(|x| Dd(TwoFloat::from_f64(x)))
    }
}

impl FloatConst for Dd {
    fn E() -> Self {
        Dd(twofloat::consts::E)
    }
    fn FRAC_1_PI() -> Self {
        Dd(twofloat::consts::FRAC_1_PI)
    }
    fn FRAC_1_SQRT_2() -> Self {
        Dd(twofloat::consts::FRAC_1_SQRT_2)
    }
    fn FRAC_2_PI() -> Self {
        Dd(twofloat::consts::FRAC_2_PI)
    }
    fn FRAC_2_SQRT_PI() -> Self {
        Dd(twofloat::consts::FRAC_2_SQRT_PI)
    }
    fn FRAC_PI_2() -> Self {
        Dd(pio2_tf())
    }
    fn FRAC_PI_3() -> Self {
        Dd(twofloat::consts::FRAC_PI_3)
    }
    fn FRAC_PI_4() -> Self {
        Dd(twofloat::consts::FRAC_PI_4)
    }
    fn FRAC_PI_6() -> Self {
        Dd(twofloat::consts::FRAC_PI_6)
    }
    fn FRAC_PI_8() -> Self {
        Dd(twofloat::consts::FRAC_PI_8)
    }
    fn LN_10() -> Self {
        Dd(ln10_tf())
    }
    fn LN_2() -> Self {
        Dd(ln2_tf())
    }
    fn LOG10_E() -> Self {
        Dd(TwoFloat::from_f64(1.0) / ln10_tf())
    }
    fn LOG2_E() -> Self {
        Dd(TwoFloat::from_f64(1.0) / ln2_tf())
    }
    fn PI() -> Self {
        Dd(tf(std::f64::consts::PI, 1.2246467991473532e-16))
    }
    fn SQRT_2() -> Self {
        Dd(twofloat::consts::SQRT_2)
    }
    fn TAU() -> Self {
        Dd(tf(std::f64::consts::TAU, 2.4492935982947064e-16))
    }
}

impl Float for Dd {
    fn nan() -> Self {
        Dd(TwoFloat::NAN)
    }
    fn infinity() -> Self {
        Dd(TwoFloat::INFINITY)
    }
    fn neg_infinity() -> Self {
        Dd(TwoFloat::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Dd(TwoFloat::from_f64(-0.0))
    }
    fn min_value() -> Self {
        Dd(TwoFloat::from_f64(f64::MIN))
    }
    fn min_positive_value() -> Self {
        Dd(TwoFloat::from_f64(f64::MIN_POSITIVE))
    }
    fn max_value() -> Self {
        Dd(TwoFloat::from_f64(f64::MAX))
    }
    fn epsilon() -> Self {
        Dd(TwoFloat::from_f64(DD_EPS))
    }
    fn is_nan(self) -> bool {
        self.hi().is_nan()
    }
    fn is_infinite(self) -> bool {
        self.hi().is_infinite()
    }
    fn is_finite(self) -> bool {
        self.hi().is_finite()
    }
    fn is_normal(self) -> bool {
        self.hi().is_normal()
    }
    fn classify(self) -> FpCategory {
        self.hi().classify()
    }
    fn floor(self) -> Self {
        Dd(self.0.floor())
    }
    fn ceil(self) -> Self {
        Dd(self.0.ceil())
    }
    fn round(self) -> Self {
        Dd(self.0.round())
    }
    fn trunc(self) -> Self {
        Dd(self.0.trunc())
    }
    fn fract(self) -> Self {
        Dd(self.0.fract())
    }
    fn abs(self) -> Self {
        Dd(self.0.abs())
    }
    fn signum(self) -> Self {
        Dd(self.0.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.hi().is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.hi().is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Dd(dd_div(TwoFloat::from_f64(1.0), self.0))
    }
    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Dd::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }
    fn powf(self, n: Self) -> Self {
        if self.is_zero() {
            return if n.hi() > 0.0 { Dd::zero() } else { Dd::infinity() };
        }
        if self.hi() < 0.0 {
            if n.fract().is_zero() {
                if let Some(k) = n.to_i64().and_then(|k| i32::try_from(k).ok()) {
                    return self.powi(k);
                }
            }
            return Dd::nan();
        }
        (n * self.ln()).exp()
    }
    fn sqrt(self) -> Self {
        Dd(self.0.sqrt())
    }
    fn exp(self) -> Self {
        Dd(dd_exp(self.0))
    }
    fn exp2(self) -> Self {
        Dd(dd_exp(self.0 * ln2_tf()))
    }
    fn ln(self) -> Self {
        Dd(dd_ln(self.0))
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        Dd(dd_ln(self.0) / ln2_tf())
    }
    fn log10(self) -> Self {
        Dd(dd_ln(self.0) / ln10_tf())
    }
    fn max(self, o: Self) -> Self {
        if self.is_nan() || o > self {
            o
        } else {
            self
        }
    }
    fn min(self, o: Self) -> Self {
        if self.is_nan() || o < self {
            o
        } else {
            self
        }
    }
    fn abs_sub(self, o: Self) -> Self {
        if self <= o {
            Dd::zero()
        } else {
            self - o
        }
    }
    fn cbrt(self) -> Self {
        if self.is_zero() || !self.is_finite() {
            return self;
        }
        let y = Dd::from_f(self.hi().cbrt());
        y - (y * y * y - self) / (Dd::from_f(3.0) * y * y)
    }
    fn hypot(self, o: Self) -> Self {
        let (a, b) = (self.abs(), o.abs());
        let m = a.max(b);
        if m.is_zero() || !m.is_finite() {
            return m;
        }
        // power-of-two scaling keeps the rescale exact
        let k = m.hi().log2().floor() as i32;
        let (x, y) = (Dd(scale2(a.0, -k)), Dd(scale2(b.0, -k)));
        Dd(scale2((x * x + y * y).sqrt().0, k))
    }
    fn sin(self) -> Self {
        Dd(dd_sin_cos(self.0).0)
    }
    fn cos(self) -> Self {
        Dd(dd_sin_cos(self.0).1)
    }
    fn tan(self) -> Self {
        let (s, c) = dd_sin_cos(self.0);
        Dd(s / c)
    }
    fn asin(self) -> Self {
        let one = Dd::one();
        self.atan2((one - self * self).sqrt())
    }
    fn acos(self) -> Self {
        let one = Dd::one();
        (one - self * self).sqrt().atan2(self)
    }
    fn atan(self) -> Self {
        self.atan2(Dd::one())
    }
    fn atan2(self, other: Self) -> Self {
        Dd(dd_atan2(self.0, other.0))
    }
    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = dd_sin_cos(self.0);
        (Dd(s), Dd(c))
    }
    fn exp_m1(self) -> Self {
        Dd(dd_expm1(self.0))
    }
    fn ln_1p(self) -> Self {
        Dd(dd_ln1p(self.0))
    }
    fn sinh(self) -> Self {
        let (p, m) = (self.exp_m1(), (-self).exp_m1());
        (p - m) / Dd::from_f(2.0)
    }
    fn cosh(self) -> Self {
        let e = self.exp();
        (e + e.recip()) / Dd::from_f(2.0)
    }
    fn tanh(self) -> Self {
        let e = (self * Dd::from_f(2.0)).exp_m1();
        e / (e + Dd::from_f(2.0))
    }
    fn asinh(self) -> Self {
        let a = self.abs();
        let r = if a.hi() > 1e8 {
            (a + a).ln()
        } else {
            let a2 = a * a;
            (a + a2 / (Dd::one() + (a2 + Dd::one()).sqrt())).ln_1p()
        };
        if self.is_sign_negative() {
            -r
        } else {
            r
        }
    }
    fn acosh(self) -> Self {
        (self + (self * self - Dd::one()).sqrt()).ln()
    }
    fn atanh(self) -> Self {
        let two = Dd::from_f(2.0);
        (two * self / (Dd::one() - self)).ln_1p() / two
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi().integer_decode()
    }
}

impl Real for Dd {
    const DIGITS: u32 = 30;
    fn from_ratio(r: &BigRational) -> Self {
        let hi = r.to_f64().unwrap_or(f64::NAN);
        if !hi.is_finite() {
            return Dd::from_f(hi);
        }
        let rest = r - BigRational::from_float(hi).unwrap();
        let lo = rest.to_f64().unwrap_or(0.0);
        Dd::new(hi, lo)
    }
    fn to_ratio(self) -> Option<BigRational> {
        Some(BigRational::from_float(self.hi())? + BigRational::from_float(self.lo())?)
    }
    fn tables() -> &'static Tables<Self> {
        static T: OnceLock<Tables<Dd>> = OnceLock::new();
        T.get_or_init(Tables::build)
    }
}

// ---------------------------------------------------------------------------
// Decimal conversions

/// Parse `[-]ddd[.ddd][e[-]dd]` or `p/q` exactly.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{ip}{fp}").parse().ok()?;
    let e = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if e >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, e as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-e) as usize))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

/// Fixed-point decimal rendering with round-half-away-from-zero.
pub fn ratio_fixed(r: &BigRational, decimals: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), decimals);
    let x = r * BigRational::from_integer(scale);
    let neg = x.is_negative();
    let a = x.abs();
    let (q, rem) = a.numer().div_rem(a.denom());
    let q = if (rem * 2u32).cmp(a.denom()) != Ordering::Less { q + 1u32 } else { q };
    let mut digits = q.to_string();
    if digits.len() <= decimals {
        digits = format!("{}{}", "0".repeat(decimals + 1 - digits.len()), digits);
    }
    let split = digits.len() - decimals;
    let body = if decimals == 0 {
        digits
    } else {
        format!("{}.{}", &digits[..split], &digits[split..])
    };
    let zero = q_is_zero(&body);
    if neg && !zero {
        format!("-{body}")
    } else {
        body
    }
}

fn q_is_zero(s: &str) -> bool {
    s.chars().all(|c| c == '0' || c == '.')
}

pub fn format_fixed<T: Real>(x: T, decimals: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > T::zero() { "inf".into() } else { "-inf".into() };
    }
    ratio_fixed(&x.to_ratio().unwrap(), decimals)
}

pub fn format_complex<T: Real>(z: Complex<T>, decimals: usize) -> String {
    let im = format_fixed(z.im.abs(), decimals);
    let sign = if z.im.is_sign_negative() && !q_is_zero(&im) { '-' } else { '+' };
    format!("{} {} {}i", format_fixed(z.re, decimals), sign, im)
}

// ---------------------------------------------------------------------------
// Precision

/// Requested working precision in decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionContext {
    pub digits: u32,
}

/// Which concrete scalar a precision request maps to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarKind {
    F64,
    DoubleDouble,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext { digits: 30 }
    }
}

impl PrecisionContext {
    pub const MAX_DIGITS: u32 = Dd::DIGITS;

    pub fn new(digits: u32) -> Result<Self> {
        if digits == 0 || digits > Self::MAX_DIGITS {
            return Err(NzError::Precision(digits));
        }
        Ok(PrecisionContext { digits })
    }

    pub fn kind(&self) -> ScalarKind {
        if self.digits <= f64::DIGITS {
            ScalarKind::F64
        } else {
            ScalarKind::DoubleDouble
        }
    }

    /// Advertised bound on results: 10^(2−digits).
    pub fn advertised_error(&self) -> f64 {
        10f64.powi(2 - self.digits as i32)
    }

    /// Newton and series stopping tolerance: 10^(4−digits).
    pub fn tolerance(&self) -> f64 {
        10f64.powi(4 - self.digits as i32)
    }
}

/// Newton tolerance for a scalar type used at its full precision.
pub fn default_tolerance<T: Real>() -> T {
    T::from_f(10f64.powi(4 - T::DIGITS as i32))
}

#[inline]
pub fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::from_f(re), T::from_f(im))
}

#[inline]
pub fn ipi<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::PI())
}
