//! Exact numbers of the form `a + b·π` with rational `a`, `b`.
//!
//! Every quantity the certifier compares (plateau values, areas `πr²`,
//! monotonicity multiples `nλ`) lives in this field extension of ℚ. Since π is
//! irrational, `a + bπ = 0` iff `a = b = 0`, so signs are decidable: we bracket
//! π between rational bounds from Machin's formula and refine until the sign of
//! the enclosure is constant.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("cannot parse {0:?} as an exact rational")]
    Parse(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {0} does not fit in a 64-bit integer")]
    Overflow(String),
}

/// Parses `"p/q"`, integers, and decimal literals with optional exponent
/// (`"-0.35"`, `"1e-6"`, `"2.5E+3"`) into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, ExactError> {
    let s = text.trim();
    let err = || ExactError::Parse(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        return Ok(BigRational::new(num, den));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all_digits.parse::<BigInt>().map_err(|_| err())?);
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 100_000 {
        return Err(err());
    }
    let ten_pow = BigRational::from_integer(num_traits::pow(BigInt::from(10), scale.unsigned_abs() as usize));
    if scale >= 0 {
        value *= ten_pow;
    } else {
        value /= ten_pow;
    }
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Always `"p/q"`, including integers (`"3/1"`).
pub fn format_rational(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact conversion of a finite float to a rational.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn rational_from_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Rational enclosure `lo < π < hi` with roughly `digits` correct decimals.
pub fn pi_bounds(digits: u32) -> (BigRational, BigRational) {
    static CACHE: OnceLock<Mutex<Vec<(u32, BigRational, BigRational)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((_, lo, hi)) = guard.iter().find(|(d, _, _)| *d >= digits) {
        return (lo.clone(), hi.clone());
    }
    let (lo, hi) = machin_enclosure(digits);
    guard.push((digits, lo.clone(), hi.clone()));
    (lo, hi)
}

/// Fixed-point evaluation of `scale · arctan(1/x)` by its alternating series.
/// Returns the truncated sum and the number of terms; each term carries an
/// absolute truncation error below 3 units.
fn arctan_inv_scaled(x: u64, scale: &BigInt) -> (BigInt, u64) {
    let x = BigInt::from(x);
    let x_sq = &x * &x;
    let mut power = scale / &x;
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k.is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x_sq;
        k += 1;
    }
    (sum, k)
}

fn machin_enclosure(digits: u32) -> (BigRational, BigRational) {
    let scale = num_traits::pow(BigInt::from(10), digits as usize + 10);
    let (a5, t5) = arctan_inv_scaled(5, &scale);
    let (a239, t239) = arctan_inv_scaled(239, &scale);
    let approx = BigInt::from(16) * a5 - BigInt::from(4) * a239;
    let err = BigInt::from(16 * (3 * t5 + 3) + 4 * (3 * t239 + 3));
    let denom = scale;
    (
        BigRational::new(&approx - &err, denom.clone()),
        BigRational::new(approx + err, denom),
    )
}

/// An exact real `rat + pi·π`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiRational {
    rat: BigRational,
    pi: BigRational,
}

impl PiRational {
    pub fn new(rat: BigRational, pi: BigRational) -> Self {
        Self { rat, pi }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn from_rational(rat: BigRational) -> Self {
        Self::new(rat, BigRational::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rational_from_int(n))
    }

    /// `coeff · π`
    pub fn pi_multiple(coeff: BigRational) -> Self {
        Self::new(BigRational::zero(), coeff)
    }

    pub fn pi() -> Self {
        Self::pi_multiple(BigRational::one())
    }

    /// Parses a plain rational literal (no π part).
    pub fn parse(text: &str) -> Result<Self, ExactError> {
        parse_rational(text).map(Self::from_rational)
    }

    pub fn rat(&self) -> &BigRational {
        &self.rat
    }

    pub fn pi_coeff(&self) -> &BigRational {
        &self.pi
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.pi.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.pi.is_zero()
    }

    /// Exact sign relative to zero.
    pub fn signum(&self) -> Ordering {
        let a = &self.rat;
        let b = &self.pi;
        if b.is_zero() {
            return a.cmp(&BigRational::zero());
        }
        if a.is_zero() {
            return b.cmp(&BigRational::zero());
        }
        for (lo, hi) in PI_CONVERGENTS {
            let lo = BigRational::new(lo.0.into(), lo.1.into());
            let hi = BigRational::new(hi.0.into(), hi.1.into());
            if let Some(sign) = sign_on_enclosure(a, b, &lo, &hi) {
                return sign;
            }
        }
        let mut digits = 64;
        loop {
            let (lo, hi) = pi_bounds(digits);
            let e1 = a + b * &lo;
            let e2 = a + b * &hi;
            let (min, max) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            if min.is_positive() {
                return Ordering::Greater;
            }
            if max.is_negative() {
                return Ordering::Less;
            }
            digits *= 2;
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.rat) + rational_to_f64(&self.pi) * std::f64::consts::PI
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        Self::new(&self.rat * factor, &self.pi * factor)
    }

    pub fn scale_int(&self, factor: i64) -> Self {
        self.scale(&rational_from_int(factor))
    }

    pub fn div_rational(&self, divisor: &BigRational) -> Result<Self, ExactError> {
        if divisor.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        Ok(Self::new(&self.rat / divisor, &self.pi / divisor))
    }

    /// `floor(self / divisor)` computed exactly.
    pub fn floor_div(&self, divisor: &Self) -> Result<BigInt, ExactError> {
        if divisor.is_zero() {
            return Err(ExactError::DivisionByZero);
        }
        let (num, den) = if divisor.is_negative() {
            (-self.clone(), -divisor.clone())
        } else {
            (self.clone(), divisor.clone())
        };
        // Initial guess from a high-precision rational stand-in for π.
        let (lo, hi) = pi_bounds(64);
        let mid = (lo + hi) / rational_from_int(2);
        let approx_num = num.rat() + num.pi_coeff() * &mid;
        let approx_den = den.rat() + den.pi_coeff() * &mid;
        let mut k = if approx_den.is_positive() {
            (approx_num / approx_den).floor().to_integer()
        } else {
            BigInt::zero()
        };
        // den > 0: we need k·den ≤ num < (k+1)·den.
        loop {
            let lower = den.scale(&BigRational::from_integer(k.clone()));
            if lower > num {
                k -= 1;
                continue;
            }
            let upper = den.scale(&BigRational::from_integer(&k + 1));
            if upper <= num {
                k += 1;
                continue;
            }
            return Ok(k);
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

/// Convergent pairs `lo < π < hi`, tried before the Machin enclosure.
const PI_CONVERGENTS: [((i64, i64), (i64, i64)); 3] = [
    ((333, 106), (355, 113)),
    ((103_993, 33_102), (104_348, 33_215)),
    ((245_850_922, 78_256_779), (833_719, 265_381)),
];

fn sign_on_enclosure(a: &BigRational, b: &BigRational, lo: &BigRational, hi: &BigRational) -> Option<Ordering> {
    let e1 = a + b * lo;
    let e2 = a + b * hi;
    if e1.is_positive() && e2.is_positive() {
        Some(Ordering::Greater)
    } else if e1.is_negative() && e2.is_negative() {
        Some(Ordering::Less)
    } else {
        None
    }
}

impl Ord for PiRational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum()
    }
}

impl PartialOrd for PiRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PiRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rat.is_zero(), self.pi.is_zero()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "{}", self.rat),
            (true, false) => write!(f, "{}π", self.pi),
            (false, false) => {
                if self.pi.is_negative() {
                    write!(f, "{} - {}π", self.rat, -self.pi.clone())
                } else {
                    write!(f, "{} + {}π", self.rat, self.pi)
                }
            }
        }
    }
}

impl From<BigRational> for PiRational {
    fn from(q: BigRational) -> Self {
        Self::from_rational(q)
    }
}

macro_rules! forward_binop {
    ($imp:ident, $method:ident, $op:tt) => {
        impl $imp<&PiRational> for &PiRational {
            type Output = PiRational;
            fn $method(self, rhs: &PiRational) -> PiRational {
                PiRational::new(&self.rat $op &rhs.rat, &self.pi $op &rhs.pi)
            }
        }
        impl $imp<PiRational> for PiRational {
            type Output = PiRational;
            fn $method(self, rhs: PiRational) -> PiRational {
                &self $op &rhs
            }
        }
        impl $imp<&PiRational> for PiRational {
            type Output = PiRational;
            fn $method(self, rhs: &PiRational) -> PiRational {
                &self $op rhs
            }
        }
        impl $imp<PiRational> for &PiRational {
            type Output = PiRational;
            fn $method(self, rhs: PiRational) -> PiRational {
                self $op &rhs
            }
        }
    };
}

forward_binop!(Add, add, +);
forward_binop!(Sub, sub, -);

impl AddAssign<&PiRational> for PiRational {
    fn add_assign(&mut self, rhs: &PiRational) {
        self.rat += &rhs.rat;
        self.pi += &rhs.pi;
    }
}

impl SubAssign<&PiRational> for PiRational {
    fn sub_assign(&mut self, rhs: &PiRational) {
        self.rat -= &rhs.rat;
        self.pi -= &rhs.pi;
    }
}

impl Neg for PiRational {
    type Output = PiRational;
    fn neg(self) -> PiRational {
        PiRational::new(-self.rat, -self.pi)
    }
}

impl Neg for &PiRational {
    type Output = PiRational;
    fn neg(self) -> PiRational {
        -self.clone()
    }
}

impl Mul<&BigRational> for &PiRational {
    type Output = PiRational;
    fn mul(self, rhs: &BigRational) -> PiRational {
        self.scale(rhs)
    }
}

#[derive(Serialize, Deserialize)]
struct PiRationalRepr {
    rat: String,
    pi: String,
}

impl Serialize for PiRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PiRationalRepr {
            rat: format_rational(&self.rat),
            pi: format_rational(&self.pi),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PiRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PiRationalRepr::deserialize(deserializer)?;
        let rat = parse_rational(&repr.rat).map_err(serde::de::Error::custom)?;
        let pi = parse_rational(&repr.pi).map_err(serde::de::Error::custom)?;
        Ok(PiRational::new(rat, pi))
    }
}

/// Serde adapter storing a `BigRational` as a `"p/q"` string.
pub mod rational_string {
    use super::*;

    pub fn serialize<S: Serializer>(q: &BigRational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Converts an exact integer to `i64`, failing loudly on overflow.
pub fn bigint_to_i64(n: &BigInt) -> Result<i64, ExactError> {
    n.to_i64().ok_or_else(|| ExactError::Overflow(n.to_string()))
}

/// Smallest integer `k` with `k·step > threshold`, for `step > 0`.
pub fn first_multiple_above(threshold: &PiRational, step: &PiRational) -> Result<BigInt, ExactError> {
    Ok(threshold.floor_div(step)? + BigInt::one())
}

/// Ceiling of an exact quotient.
pub fn ceil_div(num: &PiRational, den: &PiRational) -> Result<BigInt, ExactError> {
    Ok(-(-num).floor_div(den)?)
}

/// `true` when `n` is divisible by `modulus` (modulus > 0).
pub fn divisible(n: i64, modulus: i64) -> bool {
    n.mod_floor(&modulus) == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_decimal_and_fraction_forms() {
        assert_eq!(q("0.35"), BigRational::new(7.into(), 20.into()));
        assert_eq!(q("-1e-6"), BigRational::new((-1).into(), 1_000_000.into()));
        assert_eq!(q("2.5E+3"), rational_from_int(2500));
        assert_eq!(q("3/4"), BigRational::new(3.into(), 4.into()));
        assert_eq!(q(".5"), BigRational::new(1.into(), 2.into()));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn pi_enclosure_is_tight_and_correct() {
        let (lo, hi) = pi_bounds(64);
        assert!(rational_to_f64(&lo) <= std::f64::consts::PI);
        assert!(rational_to_f64(&hi) >= std::f64::consts::PI);
        let width = &hi - &lo;
        assert!(width < q("1e-60"));
        // 355/113 overestimates π.
        assert!(q("355/113") > hi);
        assert!(q("333/106") < lo);
    }

    #[test]
    fn sign_of_near_cancellation() {
        // 355 - 113π ≈ 3.0e-5 > 0
        let x = PiRational::new(rational_from_int(355), rational_from_int(-113));
        assert_eq!(x.signum(), Ordering::Greater);
        // 103993/33102 < π < 104348/33215
        let y = PiRational::new(rational_from_int(104348), rational_from_int(-33215));
        assert!(y.is_positive());
        let w = PiRational::new(rational_from_int(103993), rational_from_int(-33102));
        assert!(w.is_negative());
        assert!((-y).is_negative());
        assert_eq!(PiRational::zero().signum(), Ordering::Equal);
    }

    #[test]
    fn floor_div_matches_float_division() {
        let pi = PiRational::pi();
        assert_eq!(PiRational::from_int(7).floor_div(&pi).unwrap(), BigInt::from(2));
        assert_eq!(PiRational::from_int(-7).floor_div(&pi).unwrap(), BigInt::from(-3));
        let two_pi = pi.scale_int(2);
        assert_eq!(two_pi.floor_div(&pi).unwrap(), BigInt::from(2));
        assert_eq!(ceil_div(&two_pi, &pi).unwrap(), BigInt::from(2));
        assert!(pi.floor_div(&PiRational::zero()).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let x = PiRational::new(q("-1/3"), q("7/20"));
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, r#"{"rat":"-1/3","pi":"7/20"}"#);
        let back: PiRational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn first_multiple_is_strict() {
        let step = PiRational::pi();
        let k = first_multiple_above(&PiRational::pi().scale_int(3), &step).unwrap();
        assert_eq!(k, BigInt::from(4));
    }
}
