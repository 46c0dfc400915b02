//! Exact rationals on the circle `(-1, 1]`, big-integer frequencies, exact
//! phase reduction and extended-precision unit exponentials.

pub(crate) mod fixed;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub use fixed::{Precision, DEFAULT_GUARD_BITS, GUARD_BITS_ENV, MAX_GUARD_BITS, MIN_GUARD_BITS};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.25"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("not a rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            BigInt::from_str(whole).map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac = BigInt::from_str(frac).map_err(|_| bad())?;
        let mag = whole.abs() * &scale + frac;
        let num = if negative { -mag } else { mag };
        return Ok(Rational::new(num, scale));
    }
    BigInt::from_str(s).map(Rational::from_integer).map_err(|_| bad())
}

/// Reduces `x` into the canonical window `(-1, 1]`.
pub fn wrap(x: &Rational) -> Rational {
    if x > &-Rational::one() && x <= &Rational::one() {
        return x.clone();
    }
    let turns = ((x - Rational::one()) / int(2)).ceil();
    x - turns * int(2)
}

/// `x mod 2` in `[0, 2)`.
pub fn mod_two(x: &Rational) -> Rational {
    let q = x.denom();
    let two_q = q * 2;
    Rational::new(x.numer().mod_floor(&two_q), q.clone())
}

/// A point of the circle, stored as its representative in `(-1, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CirclePoint(Rational);

impl CirclePoint {
    pub fn new(x: Rational) -> Self {
        Self(wrap(&x))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::new(rat(num, den))
    }

    pub fn zero() -> Self {
        Self(Rational::zero())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_inner(self) -> Rational {
        self.0
    }

    pub fn neg(&self) -> Self {
        Self::new(-&self.0)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl From<Rational> for CirclePoint {
    fn from(x: Rational) -> Self {
        Self::new(x)
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for CirclePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::serde_ext::rational::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for CirclePoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let x = crate::serde_ext::rational::deserialize(d)?;
        let one = Rational::one();
        if x <= -one.clone() || x > one {
            return Err(serde::de::Error::custom("circle point outside (-1, 1]"));
        }
        Ok(Self(x))
    }
}

/// An integer frequency of arbitrary size.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Frequency(pub BigInt);

impl Frequency {
    pub fn new(n: impl Into<BigInt>) -> Self {
        Self(n.into())
    }

    pub fn zero() -> Self {
        Self(BigInt::zero())
    }

    pub fn value(&self) -> &BigInt {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl<T: Into<BigInt>> From<T> for Frequency {
    fn from(n: T) -> Self {
        Self(n.into())
    }
}

impl std::ops::Neg for &Frequency {
    type Output = Frequency;
    fn neg(self) -> Frequency {
        Frequency(-&self.0)
    }
}

impl std::ops::Add for &Frequency {
    type Output = Frequency;
    fn add(self, rhs: &Frequency) -> Frequency {
        Frequency(&self.0 + &rhs.0)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Frequency {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BigInt::from_str(s.trim())
            .map(Frequency)
            .map_err(|_| Error::InvalidArgument(format!("not an integer: {s:?}")))
    }
}

impl Serialize for Frequency {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Frequency {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        crate::serde_ext::bigint::deserialize(d).map(Frequency)
    }
}

/// `n·x mod 2`, kept exact. `e^{iπnx} = e^{iπ·reduced}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Phase {
    reduced: Rational,
}

impl Phase {
    /// Phase of an arbitrary rational multiple of π.
    pub fn of(r: &Rational) -> Self {
        Self { reduced: mod_two(r) }
    }

    pub fn reduced(&self) -> &Rational {
        &self.reduced
    }

    /// `π·reduced` rounded to double precision.
    pub fn as_angle(&self) -> f64 {
        std::f64::consts::PI * self.reduced.to_f64().unwrap_or(0.0)
    }
}

pub fn reduce_phase(n: &Frequency, x: &CirclePoint) -> Phase {
    let p = x.value().numer();
    let q = x.value().denom();
    let two_q = q * 2;
    let m = (&n.0 * p).mod_floor(&two_q);
    Phase {
        reduced: Rational::new(m, q.clone()),
    }
}

/// Octant reduction of `num/den mod 2` to `u = un/ud ∈ [0, 1/4]`, returning
/// `(un, ud, swap, cos_sign, sin_sign)` with
/// `(cos πr, sin πr) = (cos_sign·c, sin_sign·s)` where `(c, s)` is
/// `(cos πu, sin πu)` or its swap. The fraction is never normalized.
fn octant(num: &BigInt, den: &BigInt) -> (BigInt, BigInt, bool, i32, i32) {
    let mut r = num.mod_floor(&(den * 2));
    let (mut cs, mut ss) = (1, 1);
    if &r >= den {
        r -= den;
        cs = -cs;
        ss = -ss;
    }
    if &r * 2 > *den {
        r = den - r;
        cs = -cs;
    }
    if &r * 4 > *den {
        // u = 1/2 − r/den over 2·den.
        (den - &r * 2, den * 2, true, cs, ss)
    } else {
        (r, den.clone(), false, cs, ss)
    }
}

/// `round(un/ud · 2^frac_bits)` for `0 ≤ un/ud ≤ 1`.
fn to_fixed(un: &BigInt, ud: &BigInt, prec: Precision) -> i128 {
    let frac = prec.frac_bits();
    if let (Some(n), Some(d)) = (un.to_u128(), ud.to_u128()) {
        if d < (1u128 << 63) && n <= d {
            // Long division in two chunks keeps every shift inside u128.
            let mut rem = n;
            let mut q: u128 = 0;
            let mut left = frac;
            while left > 0 {
                let k = left.min(64);
                rem <<= k;
                q = (q << k) | (rem / d);
                rem %= d;
                left -= k;
            }
            if rem * 2 >= d {
                q += 1;
            }
            return q as i128;
        }
    }
    let shifted: BigInt = (un << frac) + (ud >> 1usize);
    (shifted / ud).to_i128().expect("fixed-point overflow")
}

/// `(cos πr, sin πr)` in fixed point for `r = num/den`, `den > 0`.
pub(crate) fn cos_sin_pi_ratio(num: &BigInt, den: &BigInt, prec: Precision) -> (i128, i128) {
    let (un, ud, swap, cs, ss) = octant(num, den);
    let theta = fixed::mul(to_fixed(&un, &ud, prec), prec.pi(), prec.frac_bits());
    let (c, s) = fixed::cos_sin(theta, prec);
    let (c, s) = if swap { (s, c) } else { (c, s) };
    (c * cs as i128, s * ss as i128)
}

/// `(cos πr, sin πr)` in fixed point, `r` any rational.
pub(crate) fn cos_sin_pi_fixed(r: &Rational, prec: Precision) -> (i128, i128) {
    cos_sin_pi_ratio(r.numer(), r.denom(), prec)
}

pub fn unit_exponential(p: &Phase) -> Complex64 {
    unit_exponential_with(p, Precision::global())
}

pub fn unit_exponential_with(p: &Phase, prec: Precision) -> Complex64 {
    let (c, s) = cos_sin_pi_fixed(&p.reduced, prec);
    Complex64::new(prec.to_f64(c), prec.to_f64(s))
}

/// `sin(πr)/(πr)` with `sinc(0) = 1`, for any exact rational `r`.
pub fn sinc_pi(r: &Rational) -> f64 {
    sinc_pi_with(r, Precision::global())
}

pub fn sinc_pi_with(r: &Rational, prec: Precision) -> f64 {
    sinc_pi_ratio(r.numer(), r.denom(), prec)
}

/// `num/den` as a double; exact ratios of huge integers go through the
/// rational conversion.
pub(crate) fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.bits() < 1000 && den.bits() < 1000 {
        num.to_f64().unwrap_or(f64::NAN) / den.to_f64().unwrap_or(f64::NAN)
    } else {
        Rational::new(num.clone(), den.clone()).to_f64().unwrap_or(f64::NAN)
    }
}

/// [`sinc_pi`] of `num/den`, `den > 0`, without normalizing the fraction.
pub(crate) fn sinc_pi_ratio(num: &BigInt, den: &BigInt, prec: Precision) -> f64 {
    if num.is_zero() {
        return 1.0;
    }
    let mag = num.abs();
    if &mag * 4 <= *den {
        let theta = fixed::mul(to_fixed(&mag, den, prec), prec.pi(), prec.frac_bits());
        return prec.to_f64(fixed::sinc(theta, prec));
    }
    let (_, s) = cos_sin_pi_ratio(&mag, den, prec);
    prec.to_f64(s) / (std::f64::consts::PI * ratio_to_f64(&mag, den))
}

/// Distance from `x` to the grid `2Z/N` on the circle of circumference 2.
pub fn circle_distance(x: &CirclePoint, grid_modulus: &BigInt) -> Rational {
    line_grid_distance(x.value(), grid_modulus)
}

/// Distance from any rational `x` to `2Z/N`; the grid is 2-periodic, so
/// this equals the circular distance.
pub(crate) fn line_grid_distance(x: &Rational, n: &BigInt) -> Rational {
    // y = x·N/2 in grid units; distance is |y - round(y)|·2/N.
    let y = x * Rational::from_integer(n.clone()) / int(2);
    let frac = &y - y.floor();
    let off = if frac > rat(1, 2) { Rational::one() - frac } else { frac };
    off * int(2) / Rational::from_integer(n.clone())
}

/// Largest distance to `2Z/N` over the closed line segment `[a, b]`.
pub(crate) fn max_grid_distance(a: &Rational, b: &Rational, n: &BigInt) -> Rational {
    let nr = Rational::from_integer(n.clone());
    let peak = Rational::one() / &nr;
    // Peaks sit at y = k + 1/2 in grid units.
    let ya = a * &nr / int(2) - rat(1, 2);
    let yb = b * &nr / int(2) - rat(1, 2);
    if ya.ceil() <= yb {
        return peak;
    }
    let da = line_grid_distance(a, n);
    let db = line_grid_distance(b, n);
    if da > db {
        da
    } else {
        db
    }
}

/// Least integer `L` with `L^q ≥ N^{q+p}`, i.e. `⌈N^{1+p/q}⌉`.
pub fn ceil_power(n: &BigInt, delta: &Rational) -> BigInt {
    let p = delta.numer().to_u32().expect("exponent numerator too large");
    let q = delta.denom().to_u32().expect("exponent denominator too large");
    let target = num_traits::pow(n.clone(), (p + q) as usize);
    ceil_root(&target, q)
}

/// Least integer `r ≥ 0` with `r^q ≥ x`, `x ≥ 0`.
pub fn ceil_root(x: &BigInt, q: u32) -> BigInt {
    let r = x.nth_root(q);
    if num_traits::pow(r.clone(), q as usize) < *x {
        r + 1
    } else {
        r
    }
}

/// `n^δ` as a real, for reporting and conservative comparisons.
pub fn ln_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_rational(x: &Rational) -> f64 {
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(s: &str) -> BigInt {
        BigInt::from_str(s).unwrap()
    }

    #[test]
    fn reduce_phase_trivial() {
        assert!(reduce_phase(&Frequency::new(0), &CirclePoint::from_ratio(7, 9)).reduced().is_zero());
        assert_eq!(reduce_phase(&Frequency::new(2), &CirclePoint::from_ratio(1, 2)).reduced(), &int(1));
    }

    #[test]
    fn reduce_phase_huge_frequency() {
        // Oracle: long division of 2(10^15+1) by 3, then the integer part
        // is taken mod 2.
        let n = Frequency::new(big("1000000000000001"));
        let x = CirclePoint::from_ratio(2, 3);
        let num = big("2000000000000002");
        let (quot, rem) = num.div_rem(&BigInt::from(3));
        assert_eq!(rem, BigInt::from(1));
        let expected = Rational::new((quot % 2) * 3 + rem, BigInt::from(3));
        assert_eq!(reduce_phase(&n, &x).reduced(), &expected);
        // quot = 666666666666667 is odd, so the phase is 1 + 1/3.
        assert_eq!(expected, rat(4, 3));
    }

    #[test]
    fn unit_exponential_quarter_turns() {
        let e0 = unit_exponential(&Phase::of(&int(0)));
        assert_eq!((e0.re, e0.im), (1.0, 0.0));
        let e1 = unit_exponential(&Phase::of(&int(1)));
        assert_eq!((e1.re, e1.im), (-1.0, 0.0));
        let e2 = unit_exponential(&Phase::of(&rat(1, 2)));
        assert_eq!((e2.re, e2.im), (0.0, 1.0));
        let e3 = unit_exponential(&Phase::of(&rat(3, 2)));
        assert_eq!((e3.re, e3.im), (0.0, -1.0));
    }

    #[test]
    fn circle_distance_examples() {
        let five = BigInt::from(5);
        assert!(circle_distance(&CirclePoint::zero(), &five).is_zero());
        assert_eq!(circle_distance(&CirclePoint::from_ratio(1, 5), &five), rat(1, 5));

        // Brute force over every grid point and its neighbours across the wrap.
        let x = CirclePoint::new(rat(-1, 1) + rat(1, 1000));
        let four = BigInt::from(4);
        let brute = (-6..=6)
            .map(|m| {
                let g = rat(2 * m, 4);
                (x.value() - g).abs()
            })
            .min()
            .unwrap();
        assert_eq!(brute, rat(1, 1000));
        assert_eq!(circle_distance(&x, &four), brute);
    }

    #[test]
    fn ceil_power_examples() {
        assert_eq!(ceil_power(&BigInt::from(16), &rat(1, 2)), BigInt::from(64));
        // 4097^{3/2} = 262240.19..., so the ceiling is 262241.
        assert_eq!(ceil_power(&BigInt::from(4097), &rat(1, 2)), BigInt::from(262241));
        assert_eq!(ceil_power(&BigInt::from(4), &int(1)), BigInt::from(16));
    }

    #[test]
    fn max_grid_distance_tent() {
        let n = BigInt::from(4);
        // Grid 2Z/4 = {.., 0, 1/2, ..}; peak at 1/4.
        assert_eq!(max_grid_distance(&rat(1, 8), &rat(3, 8), &n), rat(1, 4));
        assert_eq!(max_grid_distance(&rat(-1, 16), &rat(1, 32), &n), rat(1, 16));
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), rat(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-10_000i64..10_000, 1i64..997).prop_map(|(p, q)| rat(p, q))
    }

    fn arb_frequency() -> impl Strategy<Value = Frequency> {
        prop_oneof![
            (-1_000_000i64..1_000_000).prop_map(Frequency::new),
            "[1-9][0-9]{10,60}".prop_map(|s| Frequency::new(big(&s))),
        ]
    }

    proptest! {
        #[test]
        fn wrap_lands_in_window(x in arb_rational()) {
            let w = wrap(&x);
            prop_assert!(w > int(-1) && w <= int(1));
            prop_assert!(((&x - &w) / int(2)).is_integer());
        }

        #[test]
        fn phase_differs_by_even_integer(n in arb_frequency(), x in arb_rational()) {
            let x = CirclePoint::new(x);
            let p = reduce_phase(&n, &x);
            prop_assert!(p.reduced() >= &int(0) && p.reduced() < &int(2));
            let diff = Rational::from_integer(n.0.clone()) * x.value() - p.reduced();
            prop_assert!((diff / int(2)).is_integer());
        }

        #[test]
        fn opposite_phases_sum_to_zero_or_two(n in arb_frequency(), x in arb_rational()) {
            let x = CirclePoint::new(x);
            let s = reduce_phase(&n, &x).reduced() + reduce_phase(&-&n, &x).reduced();
            prop_assert!(s == int(0) || s == int(2));
        }

        #[test]
        fn distance_symmetric_and_periodic(x in arb_rational(), n in 1i64..500, m in -50i64..50) {
            let nb = BigInt::from(n);
            let p = CirclePoint::new(x.clone());
            let d = circle_distance(&p, &nb);
            prop_assert!(d >= int(0) && d <= rat(1, n));
            prop_assert_eq!(&d, &circle_distance(&p.neg(), &nb));
            let shifted = CirclePoint::new(x + rat(2 * m, n));
            prop_assert_eq!(&d, &circle_distance(&shifted, &nb));
        }

        #[test]
        fn matches_naive_exponential_below_2_pow_40(n in -(1i64 << 30)..(1i64 << 30), p in -997i64..997, q in 1i64..997) {
            let x = CirclePoint::new(rat(p, q));
            let e = unit_exponential(&reduce_phase(&Frequency::new(n), &x));
            let t = (n as f64) * x.to_f64();
            prop_assume!(t.abs() < (1u64 << 40) as f64);
            let theta = std::f64::consts::PI * t;
            // The naive argument itself carries a rounding error of order ε·π|nx|.
            let tol = 1e-12f64.max(8.0 * f64::EPSILON * theta.abs());
            prop_assert!((e.re - theta.cos()).abs() <= tol);
            prop_assert!((e.im - theta.sin()).abs() <= tol);
            prop_assert!((e.norm() - 1.0).abs() <= 2.0 * f64::EPSILON);
        }

        #[test]
        fn matches_naive_exponential_small_arguments(n in -300i64..300, p in -97i64..97, q in 1i64..97) {
            let x = CirclePoint::new(rat(p, q));
            let e = unit_exponential(&reduce_phase(&Frequency::new(n), &x));
            let theta = std::f64::consts::PI * (n as f64) * x.to_f64();
            prop_assert!((e.re - theta.cos()).abs() < 1e-12);
            prop_assert!((e.im - theta.sin()).abs() < 1e-12);
        }

        #[test]
        fn sinc_matches_naive(p in -4000i64..4000, q in 1i64..300) {
            let r = rat(p, q);
            let t = std::f64::consts::PI * (p as f64) / (q as f64);
            let naive = if p == 0 { 1.0 } else { t.sin() / t };
            prop_assert!((sinc_pi(&r) - naive).abs() < 1e-13);
        }
    }
}
