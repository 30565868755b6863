//! Scalar fields: rationals, Gaussian rationals and double-precision complex numbers.
//!
//! All linear algebra in the crate is generic over [`Field`]. The two exact
//! fields decide equality syntactically; [`Cf64`] compares within a global
//! relative tolerance (see [`set_float_tolerance`]).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

const DEFAULT_TOLERANCE: f64 = 1e-9;
static FLOAT_TOL_BITS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9

/// Current relative tolerance used by float comparisons.
pub fn float_tolerance() -> f64 {
    f64::from_bits(FLOAT_TOL_BITS.load(Ordering::Relaxed))
}

/// Override the float comparison tolerance (default `1e-9`).
pub fn set_float_tolerance(tol: f64) {
    assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive");
    FLOAT_TOL_BITS.store(tol.to_bits(), Ordering::Relaxed);
}

/// Restore the default float tolerance.
pub fn reset_float_tolerance() {
    set_float_tolerance(DEFAULT_TOLERANCE);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldTag {
    Rational,
    GaussianRational,
    ComplexFloat,
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FieldTag::Rational => "rational",
            FieldTag::GaussianRational => "gaussian_rational",
            FieldTag::ComplexFloat => "complex_float",
        })
    }
}

pub trait Field:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const TAG: FieldTag;
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    /// Multiplicative inverse; `None` for zero.
    fn inv(&self) -> Option<Self>;
    fn from_rational(q: &Rational) -> Self;
    fn conj(&self) -> Self;
    /// Absolute value as a float, used for pivot selection.
    fn magnitude(&self) -> f64;
    fn to_c64(&self) -> Complex64;
    /// The value as a rational, when it is one.
    fn to_rational(&self) -> Option<Rational>;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }

    fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|inv| self.clone() * inv)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    /// Zero without tolerance; sparsity shortcuts use this.
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }

    fn is_one(&self) -> bool {
        self.approx_eq(&Self::one())
    }
}

/// Fields containing a square root of −1.
pub trait ComplexField: Field {
    fn i() -> Self;
    fn from_parts(re: &Rational, im: &Rational) -> Self;
    fn re_f64(&self) -> f64 {
        self.to_c64().re
    }
}

impl Field for Rational {
    const TAG: FieldTag = FieldTag::Rational;
    const EXACT: bool = true;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn conj(&self) -> Self {
        self.clone()
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
}

/// An element `re + im·i` of Q(i).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct GaussRat {
    pub re: Rational,
    pub im: Rational,
}

impl GaussRat {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussRat { re, im }
    }

    pub fn real(re: Rational) -> Self {
        GaussRat { re, im: Zero::zero() }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        GaussRat::new(rat(re, 1), rat(im, 1))
    }

    pub fn is_real(&self) -> bool {
        Zero::is_zero(&self.im)
    }

    pub fn norm_sq(&self) -> Rational {
        &self.re * &self.re + &self.im * &self.im
    }
}

impl fmt::Debug for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for GaussRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if Zero::is_zero(&self.im) {
            return write!(f, "{}", self.re);
        }
        if Zero::is_zero(&self.re) {
            return write!(f, "{}*i", self.im);
        }
        if self.im.is_negative() {
            write!(f, "{}-{}*i", self.re, -&self.im)
        } else {
            write!(f, "{}+{}*i", self.re, self.im)
        }
    }
}

impl Add for GaussRat {
    type Output = GaussRat;
    fn add(self, o: GaussRat) -> GaussRat {
        GaussRat::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for GaussRat {
    type Output = GaussRat;
    fn sub(self, o: GaussRat) -> GaussRat {
        GaussRat::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for GaussRat {
    type Output = GaussRat;
    fn mul(self, o: GaussRat) -> GaussRat {
        let re = &self.re * &o.re - &self.im * &o.im;
        let im = &self.re * &o.im + &self.im * &o.re;
        GaussRat::new(re, im)
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat::new(-self.re, -self.im)
    }
}

impl Field for GaussRat {
    const TAG: FieldTag = FieldTag::GaussianRational;
    const EXACT: bool = true;

    fn zero() -> Self {
        GaussRat::default()
    }
    fn one() -> Self {
        GaussRat::real(One::one())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(&self.re) && Zero::is_zero(&self.im)
    }
    fn inv(&self) -> Option<Self> {
        let n = self.norm_sq();
        if Zero::is_zero(&n) {
            return None;
        }
        Some(GaussRat::new(&self.re / &n, -&self.im / &n))
    }
    fn from_rational(q: &Rational) -> Self {
        GaussRat::real(q.clone())
    }
    fn conj(&self) -> Self {
        GaussRat::new(self.re.clone(), -&self.im)
    }
    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
    fn to_rational(&self) -> Option<Rational> {
        self.is_real().then(|| self.re.clone())
    }
}

impl ComplexField for GaussRat {
    fn i() -> Self {
        GaussRat::new(Zero::zero(), One::one())
    }
    fn from_parts(re: &Rational, im: &Rational) -> Self {
        GaussRat::new(re.clone(), im.clone())
    }
}

/// Double-precision complex scalar with tolerance-based comparisons.
#[derive(Clone, Copy, Debug, Default)]
pub struct Cf64(pub Complex64);

impl Cf64 {
    pub fn new(re: f64, im: f64) -> Self {
        Cf64(Complex64::new(re, im))
    }
}

impl PartialEq for Cf64 {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

impl fmt::Display for Cf64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.16e}, {:.16e}]", self.0.re, self.0.im)
    }
}

impl Add for Cf64 {
    type Output = Cf64;
    fn add(self, o: Cf64) -> Cf64 {
        Cf64(self.0 + o.0)
    }
}

impl Sub for Cf64 {
    type Output = Cf64;
    fn sub(self, o: Cf64) -> Cf64 {
        Cf64(self.0 - o.0)
    }
}

impl Mul for Cf64 {
    type Output = Cf64;
    fn mul(self, o: Cf64) -> Cf64 {
        Cf64(self.0 * o.0)
    }
}

impl Neg for Cf64 {
    type Output = Cf64;
    fn neg(self) -> Cf64 {
        Cf64(-self.0)
    }
}

impl Field for Cf64 {
    const TAG: FieldTag = FieldTag::ComplexFloat;
    const EXACT: bool = false;

    fn zero() -> Self {
        Cf64::default()
    }
    fn one() -> Self {
        Cf64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.0.norm() <= float_tolerance()
    }
    fn inv(&self) -> Option<Self> {
        if self.0.norm() == 0.0 {
            None
        } else {
            Some(Cf64(self.0.inv()))
        }
    }
    fn from_rational(q: &Rational) -> Self {
        Cf64::new(q.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn conj(&self) -> Self {
        Cf64(self.0.conj())
    }
    fn magnitude(&self) -> f64 {
        self.0.norm()
    }
    fn to_c64(&self) -> Complex64 {
        self.0
    }
    fn to_rational(&self) -> Option<Rational> {
        None
    }
    fn is_exact_zero(&self) -> bool {
        self.0.re == 0.0 && self.0.im == 0.0
    }
    fn approx_eq(&self, other: &Self) -> bool {
        let scale = self.0.norm().max(other.0.norm()).max(1.0);
        (self.0 - other.0).norm() <= float_tolerance() * scale
    }
}

impl ComplexField for Cf64 {
    fn i() -> Self {
        Cf64::new(0.0, 1.0)
    }
    fn from_parts(re: &Rational, im: &Rational) -> Self {
        Cf64::new(re.to_f64().unwrap_or(f64::NAN), im.to_f64().unwrap_or(f64::NAN))
    }
}

/// Shorthand for the rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for the Gaussian rational `re + im·i` with integer parts.
pub fn gi(re: i64, im: i64) -> GaussRat {
    GaussRat::from_ints(re, im)
}

/// Lossless promotion between fields: rational → Gaussian → complex float.
pub trait Promote<T: Field> {
    fn promote(&self) -> T;
}

impl<T: Field> Promote<T> for Rational {
    fn promote(&self) -> T {
        T::from_rational(self)
    }
}

impl Promote<GaussRat> for GaussRat {
    fn promote(&self) -> GaussRat {
        self.clone()
    }
}

impl Promote<Cf64> for GaussRat {
    fn promote(&self) -> Cf64 {
        Cf64(self.to_c64())
    }
}

impl Promote<Cf64> for Cf64 {
    fn promote(&self) -> Cf64 {
        *self
    }
}

/// A tagged scalar, the unit of the text encoding.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Rational(Rational),
    Gaussian(GaussRat),
    Complex(Cf64),
}

impl Scalar {
    pub fn tag(&self) -> FieldTag {
        match self {
            Scalar::Rational(_) => FieldTag::Rational,
            Scalar::Gaussian(_) => FieldTag::GaussianRational,
            Scalar::Complex(_) => FieldTag::ComplexFloat,
        }
    }

    /// Promote to the requested field; demotion is rejected.
    pub fn promote_to(&self, tag: FieldTag) -> Result<Scalar> {
        use FieldTag::*;
        Ok(match (self, tag) {
            (Scalar::Rational(q), Rational) => Scalar::Rational(q.clone()),
            (Scalar::Rational(q), GaussianRational) => Scalar::Gaussian(GaussRat::real(q.clone())),
            (Scalar::Rational(q), ComplexFloat) => Scalar::Complex(Cf64::from_rational(q)),
            (Scalar::Gaussian(g), GaussianRational) => Scalar::Gaussian(g.clone()),
            (Scalar::Gaussian(g), ComplexFloat) => Scalar::Complex(Cf64(g.to_c64())),
            (Scalar::Complex(c), ComplexFloat) => Scalar::Complex(*c),
            (s, t) => {
                return Err(Error::FieldMismatch {
                    expected: t,
                    found: s.tag(),
                })
            }
        })
    }

    /// Parse in the given field's text encoding.
    pub fn parse(text: &str, tag: FieldTag) -> Result<Scalar> {
        match tag {
            FieldTag::Rational => parse_rational(text).map(Scalar::Rational),
            FieldTag::GaussianRational => parse_gaussian(text).map(Scalar::Gaussian),
            FieldTag::ComplexFloat => parse_complex(text).map(Scalar::Complex),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(q) => write!(f, "{q}"),
            Scalar::Gaussian(g) => write!(f, "{g}"),
            Scalar::Complex(c) => write!(f, "{c}"),
        }
    }
}

fn parse_err(text: &str, why: &str) -> Error {
    Error::Parse(format!("cannot parse scalar {text:?}: {why}"))
}

pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    if t.is_empty() {
        return Err(parse_err(text, "empty"));
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num = BigInt::from_str(num.strip_prefix('+').unwrap_or(num)).map_err(|_| parse_err(text, "bad numerator"))?;
    let den = BigInt::from_str(den).map_err(|_| parse_err(text, "bad denominator"))?;
    if den.is_zero() {
        return Err(parse_err(text, "zero denominator"));
    }
    Ok(Rational::new(num, den))
}

pub fn parse_gaussian(text: &str) -> Result<GaussRat> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return parse_rational(&t).map(GaussRat::real);
    };
    let body = body.strip_suffix('*').unwrap_or(body);
    let split = body
        .char_indices()
        .filter(|&(k, c)| k > 0 && (c == '+' || c == '-'))
        .map(|(k, _)| k)
        .next_back();
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => rat(1, 1),
        "-" => rat(-1, 1),
        s => parse_rational(s)?,
    };
    Ok(GaussRat::new(parse_rational(re)?, im))
}

pub fn parse_complex(text: &str) -> Result<Cf64> {
    let t = text.trim().trim_start_matches('[').trim_end_matches(']');
    let (re, im) = t
        .split_once(',')
        .ok_or_else(|| parse_err(text, "expected a decimal pair"))?;
    let re: f64 = re.trim().parse().map_err(|_| parse_err(text, "bad real part"))?;
    let im: f64 = im.trim().parse().map_err(|_| parse_err(text, "bad imaginary part"))?;
    Ok(Cf64::new(re, im))
}

/// Floor of a rational.
pub fn floor_rat(q: &Rational) -> BigInt {
    q.floor().to_integer()
}

/// Ceiling of a rational.
pub fn ceil_rat(q: &Rational) -> BigInt {
    q.ceil().to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_text_roundtrip() {
        for s in ["0", "3", "-7/2", "5/12"] {
            assert_eq!(parse_rational(s).unwrap().to_string(), s);
        }
        assert_eq!(parse_rational("4/8").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("3/-6").unwrap().to_string(), "-1/2");
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn gaussian_text_forms() {
        assert_eq!(
            parse_gaussian("1/2+3/4*i").unwrap(),
            GaussRat::new(rat(1, 2), rat(3, 4))
        );
        assert_eq!(parse_gaussian("-i").unwrap(), gi(0, -1));
        assert_eq!(parse_gaussian("i").unwrap(), gi(0, 1));
        assert_eq!(parse_gaussian("2-i").unwrap(), gi(2, -1));
        assert_eq!(parse_gaussian("5").unwrap(), gi(5, 0));
        assert_eq!(parse_gaussian("-3/2*i").unwrap(), GaussRat::new(rat(0, 1), rat(-3, 2)));
        for g in [gi(1, 1), gi(-2, -3), gi(0, 4), gi(7, 0)] {
            assert_eq!(parse_gaussian(&g.to_string()).unwrap(), g);
        }
    }

    #[test]
    fn conjugation_is_involution_fixing_rationals() {
        let g = GaussRat::new(rat(2, 3), rat(-5, 7));
        assert_eq!(g.conj().conj(), g);
        assert_ne!(g.conj(), g);
        let r = gi(4, 0);
        assert_eq!(r.conj(), r);
    }

    #[test]
    fn gaussian_field_axioms() {
        let a = gi(3, -2);
        let inv = a.inv().unwrap();
        assert_eq!(a.clone() * inv, GaussRat::one());
        assert_eq!(GaussRat::i() * GaussRat::i(), gi(-1, 0));
        assert!(GaussRat::zero().inv().is_none());
    }

    #[test]
    fn promotion_is_one_way() {
        let q = Scalar::Rational(rat(1, 3));
        assert_eq!(
            q.promote_to(FieldTag::GaussianRational).unwrap().tag(),
            FieldTag::GaussianRational
        );
        let c = q.promote_to(FieldTag::ComplexFloat).unwrap();
        assert!(c.promote_to(FieldTag::Rational).is_err());
        let g = Scalar::Gaussian(gi(1, 1));
        assert!(g.promote_to(FieldTag::Rational).is_err());
    }

    #[test]
    fn complex_pair_parse() {
        let c = parse_complex("[1.5, -2.0e-3]").unwrap();
        assert_eq!(c, Cf64::new(1.5, -0.002));
    }
}
